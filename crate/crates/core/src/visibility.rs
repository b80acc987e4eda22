//! Exact Euclidean inner distance in planar domains bounded by segments
//! (slit discs and simple polygons), via shortest paths on the visibility
//! graph of obstacle endpoints.

use crate::domain::{segments_cross_properly, Domain, Shape};

type P2 = [f64; 2];

struct Scene {
    obstacles: Vec<(P2, P2)>,
    vertices: Vec<P2>,
    polygon: Option<Vec<P2>>,
}

fn scene(dom: &Domain) -> Option<Scene> {
    if !dom.norm().is_euclidean() || dom.dim() != 2 {
        return None;
    }
    match dom.shape() {
        Shape::SlitDisc { center, radius, slits } => {
            let mut iv: Vec<[f64; 2]> = slits.iter().map(|s| [s[0].min(s[1]), s[0].max(s[1])]).collect();
            iv.sort_by(|a, b| a[0].total_cmp(&b[0]));
            // merge touching or overlapping slits so that shared endpoints block
            let mut merged: Vec<[f64; 2]> = Vec::new();
            for s in iv {
                match merged.last_mut() {
                    Some(last) if s[0] <= last[1] => last[1] = last[1].max(s[1]),
                    _ => merged.push(s),
                }
            }
            let mut obstacles = Vec::new();
            let mut vertices = Vec::new();
            for s in merged {
                let a = [center[0] + s[0], center[1]];
                let b = [center[0] + s[1], center[1]];
                obstacles.push((a, b));
                for v in [a, b] {
                    if (v[0] - center[0]).abs() < *radius {
                        vertices.push(v);
                    }
                }
            }
            Some(Scene { obstacles, vertices, polygon: None })
        }
        Shape::Polygon { vertices } => {
            let n = vertices.len();
            let obstacles = (0..n).map(|i| (vertices[i], vertices[(i + 1) % n])).collect();
            Some(Scene { obstacles, vertices: vertices.clone(), polygon: Some(vertices.clone()) })
        }
        _ => None,
    }
}

fn in_closed_polygon(poly: &[P2], p: P2) -> bool {
    let n = poly.len();
    let mut inside = false;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
        let scale = (b[0] - a[0]).abs() + (b[1] - a[1]).abs();
        if cross.abs() <= 1e-12 * scale
            && p[0] >= a[0].min(b[0]) - 1e-12
            && p[0] <= a[0].max(b[0]) + 1e-12
            && p[1] >= a[1].min(b[1]) - 1e-12
            && p[1] <= a[1].max(b[1]) + 1e-12
        {
            return true;
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

impl Scene {
    /// Whether the segment can be approximated by arcs in D: it may touch
    /// obstacles and run along them but never cross one transversally.
    fn visible(&self, a: P2, b: P2) -> bool {
        if self.obstacles.iter().any(|&(p, q)| segments_cross_properly(a, b, p, q)) {
            return false;
        }
        if let Some(poly) = &self.polygon {
            // split at polygon vertices on the segment and test each piece
            let mut ts = vec![0.0, 1.0];
            for &v in poly {
                if let Some(t) = param_on_segment(a, b, v) {
                    ts.push(t);
                }
            }
            ts.sort_by(f64::total_cmp);
            for w in ts.windows(2) {
                if w[1] - w[0] < 1e-14 {
                    continue;
                }
                let t = 0.5 * (w[0] + w[1]);
                let m = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
                if !in_closed_polygon(poly, m) {
                    return false;
                }
            }
        }
        true
    }
}

fn param_on_segment(a: P2, b: P2, v: P2) -> Option<f64> {
    let d = [b[0] - a[0], b[1] - a[1]];
    let l2 = d[0] * d[0] + d[1] * d[1];
    if l2 == 0.0 {
        return None;
    }
    let cross = d[0] * (v[1] - a[1]) - d[1] * (v[0] - a[0]);
    if cross.abs() > 1e-12 * l2.sqrt() {
        return None;
    }
    let t = (d[0] * (v[0] - a[0]) + d[1] * (v[1] - a[1])) / l2;
    (t > 0.0 && t < 1.0).then_some(t)
}

/// Exact λ_D between two points of D when the domain admits a visibility
/// computation; `None` otherwise.
pub fn visibility_distance(dom: &Domain, x: &[f64], y: &[f64]) -> Option<f64> {
    let sc = scene(dom)?;
    let x = [x[0], x[1]];
    let y = [y[0], y[1]];
    if x == y {
        return Some(0.0);
    }
    let mut pts = vec![x, y];
    pts.extend(sc.vertices.iter().copied());
    let n = pts.len();
    let dist = |a: P2, b: P2| (a[0] - b[0]).hypot(a[1] - b[1]);
    let mut best = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    best[0] = 0.0;
    for _ in 0..n {
        let Some(u) = (0..n).filter(|&i| !done[i]).min_by(|&i, &j| best[i].total_cmp(&best[j]))
        else {
            break;
        };
        if !best[u].is_finite() {
            break;
        }
        done[u] = true;
        if u == 1 {
            return Some(best[1]);
        }
        for v in 0..n {
            if done[v] || pts[u] == pts[v] {
                continue;
            }
            let nd = best[u] + dist(pts[u], pts[v]);
            if nd < best[v] && sc.visible(pts[u], pts[v]) {
                best[v] = nd;
            }
        }
    }
    best[1].is_finite().then_some(best[1])
}
