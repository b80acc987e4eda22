//! Concrete domains D ⊂ ℝⁿ with exact membership tests and boundary-distance
//! oracles d_D, measured in the domain's ℓp norm.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{QhError, Result};
use crate::norm::{NormSpec, Point};

/// Shape of a domain. Slits of [`Shape::SlitDisc`] lie on the horizontal
/// diameter: `[a, b]` removes the points `center + t·e₁`, `a ≤ t ≤ b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Shape {
    /// `{x : ⟨normal, x⟩ > offset}`.
    HalfSpace { normal: Vec<f64>, offset: f64 },
    Ball { center: Vec<f64>, radius: f64 },
    PuncturedBall { center: Vec<f64>, radius: f64, punctures: Vec<Vec<f64>> },
    SlitDisc { center: [f64; 2], radius: f64, slits: Vec<[f64; 2]> },
    /// Preset of the slit disc family: unit disc minus `[0, e₁]` with
    /// `depth` geometrically shrinking gaps cut out of the slit.
    HeinonenComb { depth: u32 },
    /// Simple polygon given by its vertex loop (either orientation).
    Polygon { vertices: Vec<[f64; 2]> },
    Intersection { parts: Vec<Shape> },
}

/// A domain: an ℓp space plus a shape.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    norm: NormSpec,
    shape: Shape,
}

/// Domain file: `{"schema": 1, "norm": {...}, "shape": {...}}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DomainFile {
    pub schema: u32,
    pub norm: NormSpec,
    pub shape: Shape,
}

pub const DOMAIN_SCHEMA: u32 = 1;

impl Serialize for Domain {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        DomainFile { schema: DOMAIN_SCHEMA, norm: self.norm, shape: self.shape.clone() }
            .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Domain {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let f = DomainFile::deserialize(d)?;
        if f.schema != DOMAIN_SCHEMA {
            return Err(serde::de::Error::custom(format!(
                "unsupported domain schema {}",
                f.schema
            )));
        }
        let norm = f.norm.validated().map_err(serde::de::Error::custom)?;
        Domain::new(norm, f.shape).map_err(serde::de::Error::custom)
    }
}

/// Gap layout of the comb preset at the given depth: `(center, width)`.
pub fn comb_gaps(depth: u32) -> Vec<(f64, f64)> {
    (1..=depth)
        .map(|j| {
            let j = j as i32;
            let center = 0.5 + 0.25 * (1.0 - 2f64.powi(1 - j));
            let width = 0.02 * 4f64.powi(1 - j);
            (center, width)
        })
        .collect()
}

/// Slit intervals of the comb preset: `[0, 1]` minus the open gaps.
pub fn comb_slits(depth: u32) -> Vec<[f64; 2]> {
    let mut gaps = comb_gaps(depth);
    gaps.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut slits = Vec::new();
    let mut start = 0.0;
    for (c, w) in gaps {
        slits.push([start, c - w / 2.0]);
        start = c + w / 2.0;
    }
    slits.push([start, 1.0]);
    slits
}

impl Domain {
    pub fn new(norm: NormSpec, shape: Shape) -> Result<Self> {
        let shape = expand_presets(shape);
        validate_shape(&norm, &shape)?;
        Ok(Domain { norm, shape })
    }

    pub fn ball(norm: NormSpec, center: &[f64], radius: f64) -> Result<Self> {
        Domain::new(norm, Shape::Ball { center: center.to_vec(), radius })
    }

    pub fn unit_ball(norm: NormSpec) -> Self {
        let c = vec![0.0; norm.dim()];
        Domain::new(norm, Shape::Ball { center: c, radius: 1.0 }).expect("unit ball is valid")
    }

    /// Upper half-space `{x_n > 0}` (for n = 2 the upper half-plane).
    pub fn upper_half_space(norm: NormSpec) -> Self {
        let mut normal = vec![0.0; norm.dim()];
        normal[norm.dim() - 1] = 1.0;
        Domain::new(norm, Shape::HalfSpace { normal, offset: 0.0 }).expect("valid half-space")
    }

    pub fn slit_disc(norm: NormSpec, slits: Vec<[f64; 2]>) -> Result<Self> {
        Domain::new(norm, Shape::SlitDisc { center: [0.0, 0.0], radius: 1.0, slits })
    }

    pub fn heinonen_comb(norm: NormSpec, depth: u32) -> Result<Self> {
        Domain::new(norm, Shape::HeinonenComb { depth })
    }

    pub fn norm(&self) -> NormSpec {
        self.norm
    }

    pub fn dim(&self) -> usize {
        self.norm.dim()
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    /// Distance from `x` to ∂D in the domain norm; zero outside D.
    pub fn boundary_distance(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim());
        shape_distance(&self.norm, &self.shape, x).max(0.0)
    }

    pub fn boundary_distance_at(&self, x: &Point) -> f64 {
        self.boundary_distance(x.coords())
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().all(|c| c.is_finite()) && self.boundary_distance(x) > 0.0
    }

    /// Lower bound on the distance from an exterior point to D (zero inside).
    pub(crate) fn exterior_distance(&self, x: &[f64]) -> f64 {
        shape_exterior(&self.norm, &self.shape, x).max(0.0)
    }

    /// True iff every point of `[a, b]` lies in D with `d_D ≥ margin`.
    pub fn segment_in_domain(&self, a: &[f64], b: &[f64], margin: f64) -> bool {
        if !self.contains(a) || !self.contains(b) {
            return false;
        }
        shape_segment_ok(&self.norm, &self.shape, a, b, margin)
    }

    /// Axis-aligned bounding box, when the domain is bounded.
    pub fn bounding_box(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        shape_bbox(&self.shape, self.dim())
    }

    /// Whether λ_D coincides with the norm distance (convex domains, and balls
    /// with finitely many punctures since n ≥ 2).
    pub fn inner_metric_is_norm(&self) -> bool {
        fn convexish(s: &Shape) -> bool {
            match s {
                Shape::HalfSpace { .. } | Shape::Ball { .. } | Shape::PuncturedBall { .. } => true,
                Shape::SlitDisc { slits, .. } => slits.iter().all(|s| s[0] == s[1]),
                Shape::Intersection { parts } => parts.iter().all(|p| {
                    matches!(p, Shape::HalfSpace { .. } | Shape::Ball { .. })
                }),
                _ => false,
            }
        }
        convexish(&self.shape)
    }

    /// Special boundary points that deserve extra graph resolution: slit
    /// endpoints, gap centers, punctures and polygon vertices.
    pub fn feature_points(&self) -> Vec<Point> {
        let mut out = Vec::new();
        collect_features(&self.shape, &mut out);
        out
    }

    /// Smallest length scale of the boundary geometry (gap widths, short edges).
    pub fn feature_scale(&self) -> Option<f64> {
        feature_scale(&self.shape)
    }

    /// Seeded rejection sampling of points with `d_D ≥ min_clearance`.
    pub fn sample_interior(&self, budget: usize, min_clearance: f64, seed: u64) -> Vec<Point> {
        let (lo, hi) = self.sampling_box();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(budget);
        let max_attempts = budget.saturating_mul(2000).max(20_000);
        let mut attempts = 0;
        while out.len() < budget && attempts < max_attempts {
            attempts += 1;
            if out.is_empty() && attempts > 20_000 {
                break;
            }
            let p: Vec<f64> = lo.iter().zip(&hi).map(|(l, h)| rng.gen_range(*l..*h)).collect();
            let d = self.boundary_distance(&p);
            if d > 0.0 && d >= min_clearance {
                out.push(Point::from(p));
            }
        }
        out
    }

    fn sampling_box(&self) -> (Vec<f64>, Vec<f64>) {
        self.bounding_box().unwrap_or_else(|| (vec![-10.0; self.dim()], vec![10.0; self.dim()]))
    }
}

fn expand_presets(shape: Shape) -> Shape {
    match shape {
        Shape::HeinonenComb { depth } => {
            Shape::SlitDisc { center: [0.0, 0.0], radius: 1.0, slits: comb_slits(depth) }
        }
        Shape::Intersection { parts } => {
            Shape::Intersection { parts: parts.into_iter().map(expand_presets).collect() }
        }
        other => other,
    }
}

fn validate_shape(norm: &NormSpec, shape: &Shape) -> Result<()> {
    let n = norm.dim();
    let dim_ok = |v: &[f64], what: &str| -> Result<()> {
        if v.len() != n || v.iter().any(|c| !c.is_finite()) {
            return Err(QhError::input(format!("{what} must have {n} finite coordinates")));
        }
        Ok(())
    };
    match shape {
        Shape::HalfSpace { normal, offset } => {
            dim_ok(normal, "half-space normal")?;
            if norm.eval(normal) == 0.0 || !offset.is_finite() {
                return Err(QhError::input("half-space normal must be nonzero"));
            }
        }
        Shape::Ball { center, radius } => {
            dim_ok(center, "ball center")?;
            if !(*radius > 0.0 && radius.is_finite()) {
                return Err(QhError::input("ball radius must be positive"));
            }
        }
        Shape::PuncturedBall { center, radius, punctures } => {
            dim_ok(center, "ball center")?;
            if !(*radius > 0.0 && radius.is_finite()) {
                return Err(QhError::input("ball radius must be positive"));
            }
            for p in punctures {
                dim_ok(p, "puncture")?;
            }
        }
        Shape::SlitDisc { radius, slits, .. } => {
            if n != 2 {
                return Err(QhError::input("slit discs live in the plane"));
            }
            if !(*radius > 0.0 && radius.is_finite()) {
                return Err(QhError::input("disc radius must be positive"));
            }
            for s in slits {
                if !(s[0] <= s[1]) || !s[0].is_finite() || !s[1].is_finite() {
                    return Err(QhError::input(format!("slit {s:?} must satisfy a ≤ b")));
                }
            }
        }
        Shape::HeinonenComb { .. } => unreachable!("presets are expanded before validation"),
        Shape::Polygon { vertices } => {
            if n != 2 {
                return Err(QhError::input("polygons live in the plane"));
            }
            if vertices.len() < 3 {
                return Err(QhError::input("a polygon needs at least three vertices"));
            }
        }
        Shape::Intersection { parts } => {
            if parts.is_empty() {
                return Err(QhError::input("intersection needs at least one part"));
            }
            for p in parts {
                validate_shape(norm, p)?;
            }
        }
    }
    Ok(())
}

fn shape_distance(norm: &NormSpec, shape: &Shape, x: &[f64]) -> f64 {
    match shape {
        Shape::HalfSpace { normal, offset } => {
            let h: f64 = normal.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() - offset;
            h / norm.dual_eval(normal)
        }
        Shape::Ball { center, radius } => radius - norm.dist(x, center),
        Shape::PuncturedBall { center, radius, punctures } => {
            let mut d = radius - norm.dist(x, center);
            for p in punctures {
                d = d.min(norm.dist(x, p));
            }
            d
        }
        Shape::SlitDisc { center, radius, slits } => {
            let mut d = radius - norm.dist(x, center);
            if d <= 0.0 {
                return d;
            }
            let rel = [x[0] - center[0], x[1] - center[1]];
            for s in slits {
                d = d.min(horizontal_segment_distance(norm, rel, s[0], s[1]));
            }
            d
        }
        Shape::HeinonenComb { .. } => unreachable!("presets are expanded at construction"),
        Shape::Polygon { vertices } => {
            let p = [x[0], x[1]];
            let edge = edge_distance(norm, vertices, p);
            if point_in_polygon(vertices, p) {
                edge
            } else {
                -edge
            }
        }
        Shape::Intersection { parts } => {
            parts.iter().map(|s| shape_distance(norm, s, x)).fold(f64::INFINITY, f64::min)
        }
    }
}

fn shape_exterior(norm: &NormSpec, shape: &Shape, x: &[f64]) -> f64 {
    match shape {
        Shape::HalfSpace { .. } | Shape::Ball { .. } | Shape::Polygon { .. } => {
            -shape_distance(norm, shape, x)
        }
        Shape::PuncturedBall { center, radius, .. } => norm.dist(x, center) - radius,
        Shape::SlitDisc { center, radius, .. } => norm.dist(x, center) - radius,
        Shape::HeinonenComb { .. } => unreachable!(),
        Shape::Intersection { parts } => {
            parts.iter().map(|s| shape_exterior(norm, s, x)).fold(f64::NEG_INFINITY, f64::max)
        }
    }
}

fn shape_segment_ok(norm: &NormSpec, shape: &Shape, a: &[f64], b: &[f64], margin: f64) -> bool {
    match shape {
        // d is concave along segments for convex shapes, so endpoints decide
        Shape::HalfSpace { .. } | Shape::Ball { .. } => {
            let da = shape_distance(norm, shape, a);
            let db = shape_distance(norm, shape, b);
            da > 0.0 && db > 0.0 && da >= margin && db >= margin
        }
        Shape::PuncturedBall { center, radius, punctures } => {
            let ball = Shape::Ball { center: center.clone(), radius: *radius };
            if !shape_segment_ok(norm, &ball, a, b, margin) {
                return false;
            }
            punctures.iter().all(|p| {
                let d = point_segment_distance_nd(norm, p, a, b);
                d > 0.0 && d >= margin
            })
        }
        Shape::SlitDisc { center, radius, slits } => {
            let disc = Shape::Ball { center: center.to_vec(), radius: *radius };
            if !shape_segment_ok(norm, &disc, a, b, margin) {
                return false;
            }
            let pa = [a[0] - center[0], a[1] - center[1]];
            let pb = [b[0] - center[0], b[1] - center[1]];
            slits.iter().all(|s| {
                let d = segment_segment_distance(norm, pa, pb, [s[0], 0.0], [s[1], 0.0]);
                d > 0.0 && d >= margin
            })
        }
        Shape::HeinonenComb { .. } => unreachable!(),
        Shape::Polygon { vertices } => {
            let pa = [a[0], a[1]];
            let pb = [b[0], b[1]];
            if !point_in_polygon(vertices, pa) {
                return false;
            }
            let n = vertices.len();
            (0..n).all(|i| {
                let d = segment_segment_distance(norm, pa, pb, vertices[i], vertices[(i + 1) % n]);
                d > 0.0 && d >= margin
            })
        }
        Shape::Intersection { parts } => {
            parts.iter().all(|s| shape_segment_ok(norm, s, a, b, margin))
        }
    }
}

fn shape_bbox(shape: &Shape, n: usize) -> Option<(Vec<f64>, Vec<f64>)> {
    match shape {
        Shape::HalfSpace { .. } => None,
        // every ℓp ball of radius r lies in the ℓ∞ ball of radius r
        Shape::Ball { center, radius } | Shape::PuncturedBall { center, radius, .. } => Some((
            center.iter().map(|c| c - radius).collect(),
            center.iter().map(|c| c + radius).collect(),
        )),
        Shape::SlitDisc { center, radius, .. } => Some((
            center.iter().map(|c| c - radius).collect(),
            center.iter().map(|c| c + radius).collect(),
        )),
        Shape::HeinonenComb { .. } => unreachable!(),
        Shape::Polygon { vertices } => {
            let mut lo = vec![f64::INFINITY; 2];
            let mut hi = vec![f64::NEG_INFINITY; 2];
            for v in vertices {
                for k in 0..2 {
                    lo[k] = lo[k].min(v[k]);
                    hi[k] = hi[k].max(v[k]);
                }
            }
            Some((lo, hi))
        }
        Shape::Intersection { parts } => {
            let mut acc: Option<(Vec<f64>, Vec<f64>)> = None;
            for p in parts {
                if let Some((lo, hi)) = shape_bbox(p, n) {
                    acc = Some(match acc {
                        None => (lo, hi),
                        Some((alo, ahi)) => (
                            alo.iter().zip(&lo).map(|(a, b)| a.max(*b)).collect(),
                            ahi.iter().zip(&hi).map(|(a, b)| a.min(*b)).collect(),
                        ),
                    });
                }
            }
            acc
        }
    }
}

fn collect_features(shape: &Shape, out: &mut Vec<Point>) {
    match shape {
        Shape::PuncturedBall { punctures, .. } => {
            out.extend(punctures.iter().map(|p| Point::new(p)));
        }
        Shape::SlitDisc { center, radius, slits } => {
            let mut sorted = slits.clone();
            sorted.sort_by(|a, b| a[0].total_cmp(&b[0]));
            for s in &sorted {
                for t in [s[0], s[1]] {
                    if t.abs() < *radius {
                        out.push(Point::new(&[center[0] + t, center[1]]));
                    }
                }
            }
            for w in sorted.windows(2) {
                let mid = 0.5 * (w[0][1] + w[1][0]);
                if w[1][0] > w[0][1] {
                    out.push(Point::new(&[center[0] + mid, center[1]]));
                }
            }
        }
        Shape::Polygon { vertices } => out.extend(vertices.iter().map(|v| Point::new(v))),
        Shape::Intersection { parts } => parts.iter().for_each(|p| collect_features(p, out)),
        _ => {}
    }
}

fn feature_scale(shape: &Shape) -> Option<f64> {
    match shape {
        Shape::SlitDisc { slits, .. } => {
            let mut sorted = slits.clone();
            sorted.sort_by(|a, b| a[0].total_cmp(&b[0]));
            sorted
                .windows(2)
                .map(|w| w[1][0] - w[0][1])
                .filter(|g| *g > 0.0)
                .min_by(f64::total_cmp)
        }
        Shape::PuncturedBall { punctures, .. } => {
            let mut best: Option<f64> = None;
            for (i, p) in punctures.iter().enumerate() {
                for q in &punctures[i + 1..] {
                    let d = crate::norm::lp_dist(2.0, p, q);
                    if d > 0.0 {
                        best = Some(best.map_or(d, |b: f64| b.min(d)));
                    }
                }
            }
            best
        }
        Shape::Polygon { vertices } => {
            let n = vertices.len();
            (0..n)
                .map(|i| {
                    let a = vertices[i];
                    let b = vertices[(i + 1) % n];
                    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
                })
                .filter(|l| *l > 0.0)
                .min_by(f64::total_cmp)
        }
        Shape::Intersection { parts } => {
            parts.iter().filter_map(feature_scale).min_by(f64::total_cmp)
        }
        _ => None,
    }
}

/// ℓp distance from `p` to the horizontal segment `{(t, 0) : a ≤ t ≤ b}`.
/// The nearest point is the clamped projection for every p.
fn horizontal_segment_distance(norm: &NormSpec, p: [f64; 2], a: f64, b: f64) -> f64 {
    let t = p[0].clamp(a, b);
    norm.eval(&[p[0] - t, p[1]])
}

/// ℓp distance from a point to a segment in ℝⁿ. Closed form for p = 2,
/// golden-section search on the convex parameter function otherwise.
pub(crate) fn point_segment_distance_nd(norm: &NormSpec, p: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let n = p.len();
    let at = |t: f64| -> f64 {
        let mut buf = [0.0; 8];
        let v = &mut buf[..n];
        for k in 0..n {
            v[k] = p[k] - (a[k] + t * (b[k] - a[k]));
        }
        norm.eval(v)
    };
    if norm.is_euclidean() {
        let mut num = 0.0;
        let mut den = 0.0;
        for k in 0..n {
            let ab = b[k] - a[k];
            num += (p[k] - a[k]) * ab;
            den += ab * ab;
        }
        let t = if den > 0.0 { (num / den).clamp(0.0, 1.0) } else { 0.0 };
        return at(t);
    }
    // axis-parallel segments: clamped projection is exact for every p
    let varying: Vec<usize> = (0..n).filter(|&k| a[k] != b[k]).collect();
    if varying.len() <= 1 {
        let t = match varying.first() {
            Some(&k) => ((p[k] - a[k]) / (b[k] - a[k])).clamp(0.0, 1.0),
            None => 0.0,
        };
        return at(t);
    }
    golden_min(at, 0.0, 1.0, 1e-12).1
}

/// Golden-section minimization of a unimodal function on `[lo, hi]`.
/// Returns `(argmin, min)`; endpoints are included in the comparison.
pub(crate) fn golden_min(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let mid = 0.5 * (a + b);
    let mut best = (mid, f(mid));
    for t in [lo, hi] {
        let v = f(t);
        if v < best.1 {
            best = (t, v);
        }
    }
    best
}

fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn on_segment(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> bool {
    p[0] >= a[0].min(b[0])
        && p[0] <= a[0].max(b[0])
        && p[1] >= a[1].min(b[1])
        && p[1] <= a[1].max(b[1])
}

/// Closed-segment intersection test, touching included.
pub(crate) fn segments_intersect(p1: [f64; 2], p2: [f64; 2], q1: [f64; 2], q2: [f64; 2]) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(q1, q2, p1))
        || (d2 == 0.0 && on_segment(q1, q2, p2))
        || (d3 == 0.0 && on_segment(p1, p2, q1))
        || (d4 == 0.0 && on_segment(p1, p2, q2))
}

/// Intersection of the relative interiors crossing transversally.
pub(crate) fn segments_cross_properly(
    p1: [f64; 2],
    p2: [f64; 2],
    q1: [f64; 2],
    q2: [f64; 2],
) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

/// Distance between two planar segments: zero when they meet, otherwise the
/// minimum of the four endpoint-to-segment distances (the nearest pair of a
/// convex parallelogram image lies on its boundary).
fn segment_segment_distance(
    norm: &NormSpec,
    p1: [f64; 2],
    p2: [f64; 2],
    q1: [f64; 2],
    q2: [f64; 2],
) -> f64 {
    if segments_intersect(p1, p2, q1, q2) {
        return 0.0;
    }
    let a = point_segment_distance_nd(norm, &p1, &q1, &q2);
    let b = point_segment_distance_nd(norm, &p2, &q1, &q2);
    let c = point_segment_distance_nd(norm, &q1, &p1, &p2);
    let d = point_segment_distance_nd(norm, &q2, &p1, &p2);
    a.min(b).min(c).min(d)
}

fn edge_distance(norm: &NormSpec, vertices: &[[f64; 2]], p: [f64; 2]) -> f64 {
    let n = vertices.len();
    (0..n)
        .map(|i| point_segment_distance_nd(norm, &p, &vertices[i], &vertices[(i + 1) % n]))
        .fold(f64::INFINITY, f64::min)
}

/// Even-odd rule; boundary points count as outside.
pub(crate) fn point_in_polygon(vertices: &[[f64; 2]], p: [f64; 2]) -> bool {
    let n = vertices.len();
    let mut inside = false;
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        if orient(a, b, p) == 0.0 && on_segment(a, b, p) {
            return false;
        }
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
            if p[0] < x {
                inside = !inside;
            }
        }
    }
    inside
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn e2() -> NormSpec {
        NormSpec::euclidean(2)
    }

    fn slit_unit() -> Domain {
        Domain::slit_disc(e2(), vec![[0.0, 1.0]]).unwrap()
    }

    #[test]
    fn ball_distance_examples() {
        let b = Domain::unit_ball(e2());
        assert_relative_eq!(b.boundary_distance(&[0.3, 0.0]), 0.7, max_relative = 1e-15);
        assert!(b.contains(&[0.0, 0.0]));
        assert!(!b.contains(&[1.0, 0.0]));
        assert_eq!(b.boundary_distance(&[2.0, 0.0]), 0.0);
    }

    #[test]
    fn half_plane_distance() {
        let h = Domain::upper_half_space(e2());
        assert_eq!(h.boundary_distance(&[5.0, 2.0]), 2.0);
        // tilted normal in l1: dual norm is l-infinity
        let l1 = NormSpec::new(1.0, 2).unwrap();
        let t = Domain::new(l1, Shape::HalfSpace { normal: vec![1.0, 2.0], offset: 0.0 }).unwrap();
        // nearest boundary point in l1 moves along the axis of the largest normal entry
        assert_relative_eq!(t.boundary_distance(&[0.0, 1.0]), 1.0);
    }

    #[test]
    fn slit_disc_distance_matches_dense_sampling() {
        let d = slit_unit();
        let x = [0.5, 0.3];
        assert_relative_eq!(d.boundary_distance(&x), 0.3, max_relative = 1e-15);
        // brute force over dense boundary samples
        let mut best = f64::INFINITY;
        let n = 200_000;
        for i in 0..n {
            let th = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
            let q = [th.cos(), th.sin()];
            best = best.min(((x[0] - q[0]).powi(2) + (x[1] - q[1]).powi(2)).sqrt());
            let t = i as f64 / (n - 1) as f64;
            best = best.min(((x[0] - t).powi(2) + x[1].powi(2)).sqrt());
        }
        assert!((best - 0.3).abs() < 1e-6);
        assert!(!d.contains(&[0.5, 0.0]));
    }

    #[test]
    fn segment_examples() {
        let b = Domain::unit_ball(e2());
        assert!(b.segment_in_domain(&[-0.5, 0.0], &[0.5, 0.0], 0.4));
        assert!(!b.segment_in_domain(&[-0.5, 0.0], &[0.5, 0.0], 0.6));
        let s = slit_unit();
        assert!(!s.segment_in_domain(&[0.5, 0.1], &[0.5, -0.1], 0.0));
        assert!(s.segment_in_domain(&[-0.5, 0.1], &[-0.5, -0.1], 0.0));
        let h = Domain::upper_half_space(e2());
        assert!(h.segment_in_domain(&[0.0, 1.0], &[4.0, 1.0], 1.0));
    }

    #[test]
    fn empty_slit_list_is_a_ball() {
        let s = Domain::slit_disc(e2(), vec![]).unwrap();
        let b = Domain::unit_ball(e2());
        for x in [[0.1, 0.2], [-0.7, 0.3], [0.0, 0.99]] {
            assert_eq!(s.boundary_distance(&x), b.boundary_distance(&x));
        }
    }

    #[test]
    fn sampling_is_seeded_and_respects_clearance() {
        let b = Domain::unit_ball(e2());
        let pts = b.sample_interior(100, 0.5, 7);
        assert_eq!(pts.len(), 100);
        assert!(pts.iter().all(|p| NormSpec::euclidean(2).eval(p.coords()) <= 0.5));
        assert_eq!(pts, b.sample_interior(100, 0.5, 7));
        assert!(slit_unit().sample_interior(50, 0.9, 1).is_empty());
    }

    #[test]
    fn slit_disc_max_clearance_below_point_nine() {
        // dense grid brute force: max d over the slit disc stays well below 0.9
        let s = slit_unit();
        let mut best: f64 = 0.0;
        let n = 400;
        for i in 0..=n {
            for j in 0..=n {
                let x = [-1.0 + 2.0 * i as f64 / n as f64, -1.0 + 2.0 * j as f64 / n as f64];
                best = best.max(s.boundary_distance(&x));
            }
        }
        assert!(best < 0.9, "max clearance {best}");
    }

    #[test]
    fn polygon_square() {
        let sq = Domain::new(
            e2(),
            Shape::Polygon { vertices: vec![[0.0, 0.0], [2.0, 0.0], [2.0, 2.0], [0.0, 2.0]] },
        )
        .unwrap();
        assert_relative_eq!(sq.boundary_distance(&[0.5, 1.0]), 0.5);
        assert!(!sq.contains(&[3.0, 1.0]));
        assert!(!sq.contains(&[2.0, 1.0]));
        assert!(sq.segment_in_domain(&[0.5, 0.5], &[1.5, 1.5], 0.4));
        // L-shaped polygon: segment cutting the reflex corner leaves the domain
        let l = Domain::new(
            e2(),
            Shape::Polygon {
                vertices: vec![[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [1.0, 1.0], [1.0, 2.0], [0.0, 2.0]],
            },
        )
        .unwrap();
        assert!(!l.segment_in_domain(&[1.5, 0.5], &[0.5, 1.5], 0.0));
        assert!(!l.segment_in_domain(&[1.8, 0.9], &[0.9, 1.8], 0.0));
    }

    #[test]
    fn lp_point_segment_distance_against_dense_search() {
        let n3 = NormSpec::new(3.0, 2).unwrap();
        let p = [0.3, 0.9];
        let (a, b) = ([-1.0, -0.5], [1.0, 0.7]);
        let got = point_segment_distance_nd(&n3, &p, &a, &b);
        let brute = (0..=100_000)
            .map(|i| {
                let t = i as f64 / 100_000.0;
                n3.eval(&[p[0] - (a[0] + t * (b[0] - a[0])), p[1] - (a[1] + t * (b[1] - a[1]))])
            })
            .fold(f64::INFINITY, f64::min);
        assert!(got <= brute + 1e-12 && brute - got < 1e-9);
    }

    #[test]
    fn comb_layout() {
        let slits = comb_slits(2);
        assert_eq!(slits.len(), 3);
        assert_eq!(slits[0][0], 0.0);
        assert_eq!(slits[2][1], 1.0);
        let g = comb_gaps(3);
        assert!(g[0].1 > g[1].1 && g[1].1 > g[2].1);
        let d = Domain::heinonen_comb(e2(), 2).unwrap();
        assert!(d.contains(&[g[0].0, 0.0]));
        assert!(!d.contains(&[0.1, 0.0]));
        assert_relative_eq!(d.feature_scale().unwrap(), g[1].1, max_relative = 1e-12);
    }

    #[test]
    fn domain_file_round_trip() {
        let json = r#"{"schema": 1, "norm": {"p": 2, "dim": 2},
                       "shape": {"type": "heinonen_comb", "depth": 1}}"#;
        let d: Domain = serde_json::from_str(json).unwrap();
        assert!(matches!(d.shape(), Shape::SlitDisc { .. }));
        let back: Domain = serde_json::from_str(&serde_json::to_string(&d).unwrap()).unwrap();
        assert_eq!(back, d);
        let bad = r#"{"schema": 2, "norm": {"p": 2, "dim": 2},
                      "shape": {"type": "ball", "center": [0, 0], "radius": 1}}"#;
        assert!(serde_json::from_str::<Domain>(bad).is_err());
    }
}
