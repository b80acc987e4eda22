//! Measured domain and arc conditions: cone constants, John and inner
//! uniformity estimates, coarse quasihyperbolicity fits, and the cone-arc
//! quasihyperbolic length bounds.
//!
//! Every quantity states its direction. Cone constants of a fixed arc are
//! sampled sups. John estimates are upper bounds from constructed arcs.
//! The c′ estimates come in an upper and a lower flavour built from the
//! matching one-sided metric bounds.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{golden_min, Domain};
use crate::error::{QhError, Result};
use crate::mapping::Mapping;
use crate::metrics::{inner_length_distance, inner_length_lower, qh_length, Estimator, DEFAULT_LEVEL};
use crate::norm::{Arc, Point};
use crate::quad::DEFAULT_TOL;
use crate::report::{Margin, Report};
use crate::sampling::halton2;

pub const DEFAULT_CONE_BUDGET: usize = 512;

fn check_arc(dom: &Domain, arc: &Arc) -> Result<()> {
    for (a, b) in arc.segments() {
        if !dom.segment_in_domain(a.coords(), b.coords(), 0.0) {
            let bad = if dom.contains(a.coords()) { b } else { a };
            return Err(QhError::ArcNotInDomain { point: bad.0.to_vec() });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeReport {
    pub arc: Arc,
    #[serde(with = "crate::serde_ext")]
    pub cone_constant: f64,
    pub witness: Point,
    #[serde(with = "crate::serde_ext")]
    pub witness_param: f64,
    pub sample_budget: usize,
}

/// `min(ℓ(α[z₁, z]), ℓ(α[z, z₂])) / d_D(z)` at arclength `t`.
pub fn cone_ratio(dom: &Domain, arc: &Arc, t: f64) -> f64 {
    let len = arc.length();
    let t = t.clamp(0.0, len);
    let z = arc.point_at_unchecked(t);
    t.min(len - t) / dom.boundary_distance(z.coords())
}

fn cone_sup(dom: &Domain, arc: &Arc, budget: usize) -> (f64, f64) {
    let len = arc.length();
    let n = budget.max(1);
    let mut ts: Vec<f64> = (0..n).map(|i| len * (i as f64 + 0.5) / n as f64).collect();
    ts.extend_from_slice(arc.cumulative());
    ts.push(0.5 * len);
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    let vals: Vec<f64> = ts.iter().map(|&t| cone_ratio(dom, arc, t)).collect();
    let j = (0..ts.len()).max_by(|&a, &b| vals[a].total_cmp(&vals[b]).then(b.cmp(&a))).unwrap_or(0);
    let lo = ts[j.saturating_sub(1)];
    let hi = ts[(j + 1).min(ts.len() - 1)];
    let (t, neg) = golden_min(|t| -cone_ratio(dom, arc, t), lo, hi, 1e-13 * len.max(1.0));
    if -neg > vals[j] {
        (t, -neg)
    } else {
        (ts[j], vals[j])
    }
}

/// Sup of the cone ratio over a stratified grid, all vertices and the
/// midpoint, refined by golden-section search around the best sample.
pub fn cone_constant(dom: &Domain, arc: &Arc, budget: usize) -> Result<ConeReport> {
    check_arc(dom, arc)?;
    let (t, value) = cone_sup(dom, arc, budget);
    Ok(ConeReport {
        arc: arc.clone(),
        cone_constant: value,
        witness: arc.point_at_unchecked(t),
        witness_param: t,
        sample_budget: budget,
    })
}

/// Options for the John estimate's local search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JohnOptions {
    /// Number of local-search iterations per pair.
    pub search_budget: usize,
    pub cone_budget: usize,
}

impl Default for JohnOptions {
    fn default() -> Self {
        JohnOptions { search_budget: 48, cone_budget: 256 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JohnEstimate {
    /// Max over pairs of the cone constant of the best arc found: an upper
    /// bound for the John constant restricted to these pairs.
    #[serde(with = "crate::serde_ext")]
    pub upper: f64,
    /// `λ_low / (2·d_max)` with `d_max` a sound bound on sup d_D (0 for
    /// unbounded domains): no arc can do better than this.
    #[serde(with = "crate::serde_ext")]
    pub lower: f64,
    pub per_pair: Vec<f64>,
    pub search_budget: usize,
    pub level: u32,
}

/// Upper bound on sup d_D: half the smallest width of the bounding box.
fn max_clearance_bound(dom: &Domain) -> Option<f64> {
    let (lo, hi) = dom.bounding_box()?;
    lo.iter().zip(&hi).map(|(a, b)| 0.5 * (b - a)).min_by(f64::total_cmp)
}

fn subdivide(arc: &Arc, pieces: usize) -> Result<Arc> {
    let len = arc.length();
    let mut ts: Vec<f64> = (0..=pieces).map(|i| len * i as f64 / pieces as f64).collect();
    ts.extend_from_slice(arc.cumulative());
    ts.sort_by(f64::total_cmp);
    ts.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * len);
    let mut pts: Vec<Point> = ts.iter().map(|&t| arc.point_at_unchecked(t)).collect();
    *pts.last_mut().unwrap() = arc.end().clone();
    pts[0] = arc.start().clone();
    Arc::new(arc.norm(), pts)
}

fn ascent_direction(dom: &Domain, p: &Point, h: f64) -> Vec<f64> {
    let n = p.dim();
    let mut g = vec![0.0; n];
    for (i, gi) in g.iter_mut().enumerate() {
        let mut e = vec![0.0; n];
        e[i] = h;
        let up = dom.boundary_distance(p.add_scaled(&e, 1.0).coords());
        let dn = dom.boundary_distance(p.add_scaled(&e, -1.0).coords());
        *gi = up - dn;
    }
    let s = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    if s > 0.0 {
        g.iter_mut().for_each(|v| *v /= s);
    }
    g
}

/// Deterministic cone-decreasing local search. Each iteration tries moves
/// of one vertex near the current witness; only strict improvements are
/// kept, so more budget never gives a worse arc.
pub fn cone_local_search(
    dom: &Domain,
    arc: &Arc,
    budget: usize,
    cone_budget: usize,
) -> Result<(Arc, f64)> {
    let mut cur = subdivide(arc, 16)?;
    let mut value = cone_sup(dom, &cur, cone_budget);
    let offsets: [isize; 5] = [0, -1, 1, -2, 2];
    let mut stall = 0usize;
    for _ in 0..budget {
        let verts = cur.vertices();
        let n = verts.len();
        if n < 3 || stall >= offsets.len() {
            break;
        }
        let cum = cur.cumulative();
        let near = (1..n - 1)
            .min_by(|&a, &b| (cum[a] - value.0).abs().total_cmp(&(cum[b] - value.0).abs()))
            .unwrap_or(1) as isize;
        let i = (near + offsets[stall]).clamp(1, n as isize - 2) as usize;
        let reach = (cum[i] - cum[i - 1]).min(cum[i + 1] - cum[i]);
        let p = &verts[i];
        let d = dom.boundary_distance(p.coords());
        let mut dirs = vec![ascent_direction(dom, p, 1e-3 * d)];
        for k in 0..p.dim() {
            for s in [1.0, -1.0] {
                let mut e = vec![0.0; p.dim()];
                e[k] = s;
                dirs.push(e);
            }
        }
        let mut best: Option<(Arc, (f64, f64))> = None;
        for (di, dir) in dirs.iter().enumerate() {
            let steps: &[f64] = if di == 0 { &[0.5, 0.25, 0.125] } else { &[0.25] };
            for &h in steps {
                let q = p.add_scaled(dir, h * reach);
                if !dom.segment_in_domain(verts[i - 1].coords(), q.coords(), 0.0)
                    || !dom.segment_in_domain(q.coords(), verts[i + 1].coords(), 0.0)
                {
                    continue;
                }
                let mut vs = verts.to_vec();
                vs[i] = q;
                let Ok(trial) = Arc::new(cur.norm(), vs) else { continue };
                let v = cone_sup(dom, &trial, cone_budget);
                let target = best.as_ref().map_or(value.1, |b| b.1 .1);
                if v.1 < target - 1e-12 {
                    best = Some((trial, v));
                }
            }
        }
        match best {
            Some((a, v)) => {
                cur = a;
                value = v;
                stall = 0;
            }
            None => stall += 1,
        }
    }
    Ok((cur, value.1))
}

fn concat(a: &Arc, b: &Arc) -> Result<Arc> {
    let mut v = a.vertices().to_vec();
    v.extend(b.vertices().iter().skip(1).cloned());
    Arc::new(a.norm(), v)
}

/// Best John arc found for one pair: the quasihyperbolic graph geodesic or
/// the route through the deepest graph node, improved by local search.
pub fn john_arc(est: &Estimator, x: &Point, y: &Point, opts: &JohnOptions) -> Result<(Arc, f64)> {
    let dom = est.domain();
    let geo = est
        .qh_distance(x, y)?
        .path
        .ok_or_else(|| QhError::DegenerateArc("no path for distinct endpoints".into()))?;
    let mut cands = vec![geo];
    if let Some(hub) = est.graph().deepest_node() {
        if &hub != x && &hub != y {
            let leg1 = est.qh_distance(x, &hub)?.path;
            let leg2 = est.qh_distance(&hub, y)?.path;
            if let (Some(a), Some(b)) = (leg1, leg2) {
                if let Ok(c) = concat(&a, &b) {
                    cands.push(c);
                }
            }
        }
    }
    let mut best: Option<(Arc, f64)> = None;
    for c in cands {
        let v = cone_sup(dom, &c, opts.cone_budget).1;
        if best.as_ref().is_none_or(|b| v < b.1) {
            best = Some((c, v));
        }
    }
    let (arc, _) = best.expect("at least one candidate");
    cone_local_search(dom, &arc, opts.search_budget, opts.cone_budget)
}

pub fn john_constant_estimate(
    dom: &Domain,
    pairs: &[(Point, Point)],
    level: u32,
) -> Result<JohnEstimate> {
    let focus: Vec<Point> = pairs.iter().flat_map(|(a, b)| [a.clone(), b.clone()]).collect();
    if focus.is_empty() {
        return Ok(JohnEstimate {
            upper: 0.0,
            lower: 0.0,
            per_pair: vec![],
            search_budget: JohnOptions::default().search_budget,
            level,
        });
    }
    let est = Estimator::new(dom, &focus, level)?;
    john_constant_estimate_with(&est, pairs, &JohnOptions::default())
}

pub fn john_constant_estimate_with(
    est: &Estimator,
    pairs: &[(Point, Point)],
    opts: &JohnOptions,
) -> Result<JohnEstimate> {
    let dom = est.domain();
    let per_pair: Vec<f64> = pairs
        .par_iter()
        .map(|(x, y)| if x == y { Ok(0.0) } else { john_arc(est, x, y, opts).map(|r| r.1) })
        .collect::<Result<_>>()?;
    let upper = per_pair.iter().copied().fold(0.0, f64::max);
    let lower = match max_clearance_bound(dom) {
        Some(dmax) => pairs
            .iter()
            .map(|(x, y)| inner_length_lower(dom, x.coords(), y.coords()) / (2.0 * dmax))
            .fold(0.0, f64::max),
        None => 0.0,
    };
    Ok(JohnEstimate { upper, lower, per_pair, search_budget: opts.search_budget, level: est.level() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CPrimePair {
    #[serde(with = "crate::serde_ext")]
    pub k_upper: f64,
    #[serde(with = "crate::serde_ext")]
    pub k_lower: f64,
    #[serde(with = "crate::serde_ext")]
    pub lambda_upper: f64,
    #[serde(with = "crate::serde_ext")]
    pub lambda_lower: f64,
    #[serde(with = "crate::serde_ext")]
    pub ratio_upper: f64,
    #[serde(with = "crate::serde_ext")]
    pub ratio_lower: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CPrimeEstimate {
    /// Sup of `k̂ / log(1 + λ_low / min d)`.
    #[serde(with = "crate::serde_ext")]
    pub upper: f64,
    /// Sup of `k_low / log(1 + λ̂ / min d)`.
    #[serde(with = "crate::serde_ext")]
    pub lower: f64,
    /// Pairs with coincident points, left out (the ratio is 0/0).
    pub skipped: usize,
    pub pairs: Vec<CPrimePair>,
    pub level: u32,
}

pub fn inner_uniform_cprime(
    dom: &Domain,
    pairs: &[(Point, Point)],
    level: u32,
) -> Result<CPrimeEstimate> {
    let focus: Vec<Point> = pairs.iter().flat_map(|(a, b)| [a.clone(), b.clone()]).collect();
    if focus.is_empty() {
        return Ok(CPrimeEstimate { upper: 0.0, lower: 0.0, skipped: 0, pairs: vec![], level });
    }
    let est = Estimator::new(dom, &focus, level)?;
    inner_uniform_cprime_with(&est, pairs)
}

pub fn inner_uniform_cprime_with(est: &Estimator, pairs: &[(Point, Point)]) -> Result<CPrimeEstimate> {
    let dom = est.domain();
    let rows: Vec<Option<CPrimePair>> = pairs
        .par_iter()
        .map(|(x, y)| {
            if x == y {
                return Ok(None);
            }
            let k = est.qh_distance(x, y)?;
            let lam = est.inner_length(x, y)?;
            let dmin = dom.boundary_distance(x.coords()).min(dom.boundary_distance(y.coords()));
            let lam_low = inner_length_lower(dom, x.coords(), y.coords()).max(lam.lower_bound);
            Ok(Some(CPrimePair {
                k_upper: k.value,
                k_lower: k.lower_bound,
                lambda_upper: lam.value,
                lambda_lower: lam_low,
                ratio_upper: k.value / (lam_low / dmin).ln_1p(),
                ratio_lower: k.lower_bound / (lam.value / dmin).ln_1p(),
            }))
        })
        .collect::<Result<_>>()?;
    let skipped = rows.iter().filter(|r| r.is_none()).count();
    let rows: Vec<CPrimePair> = rows.into_iter().flatten().collect();
    let upper = rows.iter().map(|r| r.ratio_upper).fold(0.0, f64::max);
    let lower = rows.iter().map(|r| r.ratio_lower).fold(0.0, f64::max);
    Ok(CPrimeEstimate { upper, lower, skipped, pairs: rows, level: est.level() })
}

/// Both inner uniformity requirements for one arc: the cone condition with
/// constant `c` and `ℓ(arc) ≤ c·λ̂`, where λ̂ is an upper estimate.
pub fn inner_uniform_arc_check(
    dom: &Domain,
    arc: &Arc,
    x: &Point,
    y: &Point,
    c: f64,
) -> Result<Report> {
    check_arc(dom, arc)?;
    let norm = dom.norm();
    let joins = |p: &Point, q: &Point| norm.dist(p.coords(), q.coords()) <= 1e-12;
    if !(joins(arc.start(), x) && joins(arc.end(), y)) && !(joins(arc.start(), y) && joins(arc.end(), x)) {
        return Err(QhError::input("arc does not join the given points"));
    }
    let cone = cone_constant(dom, arc, DEFAULT_CONE_BUDGET)?;
    let lam = inner_length_distance(dom, x, y, DEFAULT_LEVEL)?;
    let slack = 1e-9;
    let mut r = Report::new("inner_uniform_arc")
        .param("c", c)
        .param("cone_witness", cone.witness_param)
        .param("lambda_upper", lam.value);
    r.push(Margin::le("cone_constant <= c", cone.cone_constant, c, slack));
    r.push(Margin::le("length <= c*lambda", arc.length(), c * lam.value, slack * arc.length()));
    Ok(r)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CqhPair {
    pub x: Point,
    pub y: Point,
    #[serde(with = "crate::serde_ext")]
    pub k: f64,
    #[serde(with = "crate::serde_ext")]
    pub k_image: f64,
    /// Smallest M this pair alone needs.
    #[serde(with = "crate::serde_ext")]
    pub m_pair: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CqhFit {
    pub map_id: String,
    pub pairs: Vec<CqhPair>,
    #[serde(rename = "C_given", with = "crate::serde_ext")]
    pub c_given: f64,
    #[serde(rename = "M_fit", with = "crate::serde_ext")]
    pub m_fit: f64,
    /// Pairs for which one of the two inequalities fails at `(M_fit, C)`.
    pub violations: Vec<usize>,
    pub level: u32,
}

/// Per-pair minimal M for `(k − C)/M ≤ k′ ≤ M k + C`, at least 1.
pub fn cqh_pair_m(k: f64, k_image: f64, c: f64) -> f64 {
    let mut m: f64 = 1.0;
    if k - c > 0.0 {
        m = m.max(if k_image > 0.0 { (k - c) / k_image } else { f64::INFINITY });
    }
    if k_image - c > 0.0 {
        m = m.max(if k > 0.0 { (k_image - c) / k } else { f64::INFINITY });
    }
    m
}

pub fn cqh_fit(
    dom: &Domain,
    dom2: &Domain,
    map: &Mapping,
    pairs: &[(Point, Point)],
    c_given: f64,
    level: u32,
) -> Result<CqhFit> {
    if !(c_given >= 0.0 && c_given.is_finite()) {
        return Err(QhError::input(format!("C = {c_given} must be a nonnegative number")));
    }
    let mut images = Vec::with_capacity(pairs.len());
    for (x, y) in pairs {
        images.push((map.map_into(x, dom2)?, map.map_into(y, dom2)?));
    }
    let flat = |ps: &[(Point, Point)]| -> Vec<Point> {
        ps.iter().flat_map(|(a, b)| [a.clone(), b.clone()]).collect()
    };
    let mut rows = Vec::with_capacity(pairs.len());
    if !pairs.is_empty() {
        let e1 = Estimator::new(dom, &flat(pairs), level)?;
        let e2 = Estimator::new(dom2, &flat(&images), level)?;
        rows = pairs
            .par_iter()
            .zip(&images)
            .map(|((x, y), (fx, fy))| {
                let k = e1.qh_distance(x, y)?.value;
                let k_image = e2.qh_distance(fx, fy)?.value;
                Ok(CqhPair {
                    x: x.clone(),
                    y: y.clone(),
                    k,
                    k_image,
                    m_pair: cqh_pair_m(k, k_image, c_given),
                })
            })
            .collect::<Result<Vec<_>>>()?;
    }
    let m_fit = rows.iter().map(|r| r.m_pair).fold(1.0, f64::max);
    let violations = rows
        .iter()
        .enumerate()
        .filter(|(_, r)| {
            let tol = 1e-12 * (1.0 + r.k.max(r.k_image));
            (r.k - c_given) / m_fit > r.k_image + tol || r.k_image > m_fit * r.k + c_given + tol
        })
        .map(|(i, _)| i)
        .collect();
    Ok(CqhFit { map_id: map.id(), pairs: rows, c_given, m_fit, violations, level })
}

/// The two quasihyperbolic length bounds for subarcs of a cone arc that
/// stay within one half of it. The cone property with constant `a` is
/// checked first; the second bound uses the graph upper estimate of k_D.
pub fn check_cone_qh_bounds(dom: &Domain, arc: &Arc, a: f64, c0: f64, budget: usize) -> Result<Report> {
    check_arc(dom, arc)?;
    let cone = cone_constant(dom, arc, DEFAULT_CONE_BUDGET)?;
    let mut r = Report::new("cone_arc_qh_bounds")
        .param("a", a)
        .param("c0", c0)
        .param("cone_constant", cone.cone_constant);
    r.push(Margin::le("cone_constant <= a", cone.cone_constant, a, 1e-9 * a));
    if !r.pass {
        return Ok(r);
    }
    let len = arc.length();
    let s0 = 0.5 * len;
    let mut pairs = Vec::with_capacity(budget);
    for i in 1..=budget as u64 {
        let (h2, h3) = halton2(i);
        let (near, far) = (h2.min(h3) * s0, h2.max(h3) * s0);
        // s₂ lies between s₁ and the midpoint on the same half
        if i % 2 == 1 {
            pairs.push((near, far));
        } else {
            pairs.push((len - near, len - far));
        }
    }
    let focus: Vec<Point> = pairs
        .iter()
        .flat_map(|&(a, b)| [arc.point_at_unchecked(a), arc.point_at_unchecked(b)])
        .collect();
    let est = Estimator::new(dom, &focus, DEFAULT_LEVEL)?;
    let coef = 4.0 * a * a * c0;
    let margins: Vec<Vec<Margin>> = pairs
        .par_iter()
        .map(|&(s1, s2)| -> Result<Vec<Margin>> {
            let (lo, hi) = (s1.min(s2), s1.max(s2));
            let p1 = arc.point_at_unchecked(s1);
            let p2 = arc.point_at_unchecked(s2);
            let tag = format!("@({s1},{s2})");
            if hi - lo <= 1e-12 * len || p1 == p2 {
                return Ok(vec![
                    Margin::le(format!("length_bound{tag}"), 0.0, 0.0, 0.0),
                    Margin::le(format!("distance_bound{tag}"), 0.0, coef, 0.0),
                ]);
            }
            let sub = arc.subarc(lo, hi)?;
            let lk = qh_length(dom, &sub, DEFAULT_TOL)?;
            let d1 = dom.boundary_distance(p1.coords());
            let rhs1 = 2.0 * a * (2.0 * sub.length() / d1).ln_1p();
            let k_hat = est.qh_distance(&p1, &p2)?.value;
            let rhs2 = coef * k_hat + coef;
            let slack = 1e-9 * lk.max(1.0);
            Ok(vec![
                Margin::le(format!("length_bound{tag}"), lk, rhs1, slack),
                Margin::le(format!("distance_bound{tag}"), lk, rhs2, slack),
            ])
        })
        .collect::<Result<_>>()?;
    for m in margins.into_iter().flatten() {
        r.push(m);
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Shape;
    use crate::norm::NormSpec;
    use approx::assert_abs_diff_eq;

    fn e2() -> NormSpec {
        NormSpec::euclidean(2)
    }

    fn seg(a: &[f64], b: &[f64]) -> Arc {
        Arc::segment(e2(), Point::new(a), Point::new(b)).unwrap()
    }

    #[test]
    fn cone_constant_of_centered_segment() {
        let d = Domain::unit_ball(e2());
        let r = cone_constant(&d, &seg(&[-0.5, 0.0], &[0.5, 0.0]), 64).unwrap();
        assert_abs_diff_eq!(r.cone_constant, 0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(r.witness.coords()[0], 0.0, epsilon = 1e-6);
        let again = cone_ratio(&d, &r.arc, r.witness_param);
        assert_abs_diff_eq!(again, r.cone_constant, epsilon = 1e-12);
    }

    #[test]
    fn cone_constant_of_radius() {
        let d = Domain::unit_ball(e2());
        let r = cone_constant(&d, &seg(&[0.0, 0.0], &[0.9, 0.0]), 64).unwrap();
        assert_abs_diff_eq!(r.cone_constant, 9.0 / 11.0, epsilon = 1e-9);
    }

    #[test]
    fn deep_arc_has_small_cone_constant() {
        let d = Domain::ball(e2(), &[0.0, 0.0], 10.0).unwrap();
        let r = cone_constant(&d, &seg(&[-1.0, 0.0], &[1.0, 1.0]), 64).unwrap();
        assert!(r.cone_constant <= 1.0);
    }

    #[test]
    fn leaving_arc_is_rejected() {
        let d = Domain::unit_ball(e2());
        assert!(matches!(
            cone_constant(&d, &seg(&[0.0, 0.0], &[1.5, 0.0]), 8),
            Err(QhError::ArcNotInDomain { .. })
        ));
    }

    #[test]
    fn john_estimate_for_ball_diameters() {
        let d = Domain::unit_ball(e2());
        let pairs = vec![
            (Point::new(&[-0.9, 0.0]), Point::new(&[0.9, 0.0])),
            (Point::new(&[0.0, -0.8]), Point::new(&[0.0, 0.8])),
        ];
        let j = john_constant_estimate(&d, &pairs, 0).unwrap();
        assert!(j.upper <= 1.05, "{}", j.upper);
        assert!(j.lower <= j.upper);
        let same = john_constant_estimate(&d, &[(Point::origin(2), Point::origin(2))], 0).unwrap();
        assert_eq!(same.upper, 0.0);
    }

    #[test]
    fn local_search_is_monotone_in_budget() {
        let d = Domain::unit_ball(e2());
        let arc = Arc::new(
            e2(),
            vec![Point::new(&[-0.6, 0.0]), Point::new(&[0.0, 0.7]), Point::new(&[0.6, 0.0])],
        )
        .unwrap();
        let mut last = f64::INFINITY;
        for b in [0, 2, 6, 12] {
            let v = cone_local_search(&d, &arc, b, 128).unwrap().1;
            assert!(v <= last);
            last = v;
        }
    }

    #[test]
    fn cprime_on_a_radius_pinches() {
        let d = Domain::unit_ball(e2());
        let c = inner_uniform_cprime(&d, &[(Point::origin(2), Point::new(&[0.9, 0.0]))], 1).unwrap();
        assert_abs_diff_eq!(c.upper, 1.0, epsilon = 1e-2);
        assert!(c.lower >= 1.0 - 1e-6);
        let skip =
            inner_uniform_cprime(&d, &[(Point::origin(2), Point::origin(2))], 0).unwrap();
        assert_eq!(skip.skipped, 1);
    }

    #[test]
    fn arc_check_length_clause() {
        let d = Domain::unit_ball(e2());
        let x = Point::origin(2);
        let y = Point::new(&[0.9, 0.0]);
        let r = inner_uniform_arc_check(&d, &seg(&[0.0, 0.0], &[0.9, 0.0]), &x, &y, 1.0).unwrap();
        assert!(r.pass);
        let two_leg = Arc::new(e2(), vec![x.clone(), Point::new(&[0.0, 0.9]), y.clone()]).unwrap();
        let legs2 = Arc::new(e2(), vec![Point::new(&[0.0, 0.9]), x.clone(), y.clone()]).unwrap();
        let r = inner_uniform_arc_check(
            &d,
            &legs2,
            &Point::new(&[0.0, 0.9]),
            &y,
            1.01,
        )
        .unwrap();
        assert!(!r.pass);
        assert!(r.failures().any(|m| m.name.starts_with("length")));
        assert!(inner_uniform_arc_check(&d, &two_leg, &x, &Point::new(&[0.0, 0.5]), 2.0).is_err());
    }

    #[test]
    fn identity_and_scaling_fit_one() {
        let b1 = Domain::unit_ball(e2());
        let b2 = Domain::ball(e2(), &[0.0, 0.0], 2.0).unwrap();
        let pts = b1.sample_interior(12, 0.05, 3);
        let pairs: Vec<_> = pts.chunks(2).map(|c| (c[0].clone(), c[1].clone())).collect();
        let f = cqh_fit(&b1, &b1, &Mapping::Identity, &pairs, 0.0, 0).unwrap();
        assert_eq!(f.m_fit, 1.0);
        assert!(f.violations.is_empty());
        let g = cqh_fit(&b1, &b2, &Mapping::Scale { factor: 2.0 }, &pairs, 0.0, 0).unwrap();
        assert_abs_diff_eq!(g.m_fit, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn pair_m_closed_form() {
        assert_eq!(cqh_pair_m(2.0, 1.0, 0.0), 2.0);
        assert_eq!(cqh_pair_m(1.0, 3.0, 1.0), 2.0);
        assert_eq!(cqh_pair_m(0.5, 0.2, 1.0), 1.0);
        assert_eq!(cqh_pair_m(2.0, 0.0, 0.0), f64::INFINITY);
    }

    #[test]
    fn mapping_error_names_the_point() {
        let b1 = Domain::unit_ball(e2());
        let half = Domain::new(e2(), Shape::HalfSpace { normal: vec![0.0, 1.0], offset: 0.0 }).unwrap();
        let pairs = vec![(Point::new(&[0.1, -0.5]), Point::new(&[0.1, 0.5]))];
        let err = cqh_fit(&b1, &half, &Mapping::Identity, &pairs, 0.0, 0).unwrap_err();
        assert_eq!(err, QhError::Mapping { point: vec![0.1, -0.5] });
    }

    #[test]
    fn radial_cone_bounds_pass() {
        let d = Domain::unit_ball(e2());
        let r = check_cone_qh_bounds(&d, &seg(&[0.0, 0.0], &[0.9, 0.0]), 1.0, 1.0, 40).unwrap();
        assert!(r.pass, "{:?}", r.failures().next());
        assert_eq!(r.margin_list.len(), 81);
    }

    #[test]
    fn vertical_half_plane_bounds_pass() {
        let d = Domain::upper_half_space(e2());
        let r = check_cone_qh_bounds(&d, &seg(&[0.0, 1.0], &[0.0, 3.0]), 1.0, 1.0, 40).unwrap();
        assert!(r.pass, "{:?}", r.failures().next());
    }

    #[test]
    fn cone_gate_blocks_the_check() {
        let d = Domain::unit_ball(e2());
        let r = check_cone_qh_bounds(&d, &seg(&[0.0, 0.0], &[0.9, 0.0]), 0.5, 1.0, 10).unwrap();
        assert!(!r.pass);
        assert_eq!(r.margin_list.len(), 1);
    }
}
