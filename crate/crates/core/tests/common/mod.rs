#![allow(dead_code)]

use qhlab::domain::{Domain, Shape};
use qhlab::norm::{NormSpec, Point};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn e2() -> NormSpec {
    NormSpec::euclidean(2)
}

/// Named domains spanning every shape family and a few norms.
pub fn gallery() -> Vec<(&'static str, Domain)> {
    let n = e2();
    vec![
        ("ball", Domain::unit_ball(n)),
        ("half_plane", Domain::upper_half_space(n)),
        ("slit_disc", Domain::slit_disc(n, vec![[0.0, 1.0]]).unwrap()),
        ("comb2", Domain::heinonen_comb(n, 2).unwrap()),
        (
            "l_shape",
            Domain::new(
                n,
                Shape::Polygon {
                    vertices: vec![[-1.0, -1.0], [1.0, -1.0], [1.0, 0.0], [0.0, 0.0], [0.0, 1.0], [-1.0, 1.0]],
                },
            )
            .unwrap(),
        ),
        (
            "punctured_ball",
            Domain::new(
                n,
                Shape::PuncturedBall { center: vec![0.0, 0.0], radius: 1.0, punctures: vec![vec![0.3, 0.2]] },
            )
            .unwrap(),
        ),
        (
            "half_disc",
            Domain::new(
                n,
                Shape::Intersection {
                    parts: vec![
                        Shape::Ball { center: vec![0.0, 0.0], radius: 1.0 },
                        Shape::HalfSpace { normal: vec![0.0, 1.0], offset: 0.0 },
                    ],
                },
            )
            .unwrap(),
        ),
        ("l1_ball", Domain::unit_ball(NormSpec::new(1.0, 2).unwrap())),
        ("linf_ball", Domain::unit_ball(NormSpec::new(f64::INFINITY, 2).unwrap())),
        ("ball3", Domain::unit_ball(NormSpec::euclidean(3))),
    ]
}

/// Seeded pairs: even entries are independent samples, odd entries put `y`
/// within the clearance ball of `x` so that short-range bounds apply.
pub fn mixed_pairs(dom: &Domain, count: usize, seed: u64) -> Vec<(Point, Point)> {
    let pts = dom.sample_interior(2 * count, 0.02, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
    let norm = dom.norm();
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let x = pts[2 * i].clone();
        let y = if i % 2 == 0 {
            pts[2 * i + 1].clone()
        } else {
            let d = dom.boundary_distance(x.coords());
            loop {
                let dir: Vec<f64> = (0..dom.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let len = norm.eval(&dir);
                if len < 1e-3 {
                    continue;
                }
                let r = rng.gen_range(0.05..0.9) * d / len;
                let y = x.add_scaled(&dir, r);
                if dom.contains(y.coords()) {
                    break y;
                }
            }
        };
        out.push((x, y));
    }
    out
}
