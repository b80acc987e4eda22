//! Neargeodesics: construction from graph geodesics, certification of the
//! neargeodesic constant, and the dyadic special-point decomposition of an
//! arc together with the block inequalities it is expected to satisfy.

use serde::{Deserialize, Serialize};

use crate::constants::ConstantSet;
use crate::domain::{golden_min, Domain};
use crate::error::{QhError, Result};
use crate::graph::GraphConfig;
use crate::metrics::{inner_length_exact, inner_length_lower, qh_length, qh_lower_bound, Estimator};
use crate::norm::{Arc, Point};
use crate::quad::{qh_segment_length, DEFAULT_TOL};
use crate::report::{Margin, Report};
use crate::sampling::arclength_pairs;
use crate::tower::TowerValue;

pub const DEFAULT_PAIR_BUDGET: usize = 64;

/// Ratios for one tested pair of arclength parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRatio {
    #[serde(with = "crate::serde_ext")]
    pub u: f64,
    #[serde(with = "crate::serde_ext")]
    pub v: f64,
    /// ℓ_k of the subarc between `u` and `v`.
    #[serde(with = "crate::serde_ext")]
    pub qh_length: f64,
    #[serde(with = "crate::serde_ext")]
    pub k_lower: f64,
    /// Best known upper estimate of k_D, or NaN when not computed.
    #[serde(with = "crate::serde_ext")]
    pub k_upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeargeodesicCertificate {
    pub arc: Arc,
    #[serde(default, with = "crate::serde_ext::option")]
    pub c0_target: Option<f64>,
    /// Sup of `ℓ_k / k_lower` over the tested pairs: a sound upper bound for
    /// the neargeodesic constant restricted to those pairs.
    #[serde(with = "crate::serde_ext")]
    pub c_certified: f64,
    /// Same sup against graph estimates of k_D; NaN when not computed.
    #[serde(with = "crate::serde_ext")]
    pub c_empirical: f64,
    pub pair_budget: usize,
    pub level: u32,
    pub pairs: Vec<PairRatio>,
}

/// Knobs for [`construct_neargeodesic_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeargeodesicOptions {
    pub pair_budget: usize,
    /// How many finer levels may be tried when the target is missed.
    pub extra_levels: u32,
    pub shortening_sweeps: usize,
    /// Also compute `c_empirical` (one graph query per pair).
    pub empirical: bool,
}

impl Default for NeargeodesicOptions {
    fn default() -> Self {
        NeargeodesicOptions {
            pair_budget: DEFAULT_PAIR_BUDGET,
            extra_levels: 1,
            shortening_sweeps: 8,
            empirical: true,
        }
    }
}

fn segment_cost(dom: &Domain, a: &Point, b: &Point) -> f64 {
    if dom.segment_in_domain(a.coords(), b.coords(), 0.0) {
        qh_segment_length(dom, a.coords(), b.coords(), DEFAULT_TOL)
    } else {
        f64::INFINITY
    }
}

fn unit_directions(dim: usize) -> Vec<Vec<f64>> {
    let mut dirs = Vec::new();
    for i in 0..dim {
        for s in [1.0, -1.0] {
            let mut v = vec![0.0; dim];
            v[i] = s;
            dirs.push(v);
        }
    }
    if dim == 2 {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for (a, b) in [(h, h), (h, -h), (-h, h), (-h, -h)] {
            dirs.push(vec![a, b]);
        }
    }
    dirs
}

/// Local shortening of ℓ_k: vertex removal and vertex moves, each accepted
/// only when it lowers the quasihyperbolic length by more than 1e-12.
pub fn shorten_arc(dom: &Domain, arc: &Arc, sweeps: usize) -> Result<Arc> {
    let norm = dom.norm();
    let mut v: Vec<Point> = arc.vertices().to_vec();
    let dirs = unit_directions(dom.dim());
    for _ in 0..sweeps {
        let mut improved = false;
        let mut i = 1;
        while i + 1 < v.len() {
            let cur = segment_cost(dom, &v[i - 1], &v[i]) + segment_cost(dom, &v[i], &v[i + 1]);
            let direct = segment_cost(dom, &v[i - 1], &v[i + 1]);
            if direct < cur - 1e-12 && v[i - 1] != v[i + 1] {
                v.remove(i);
                improved = true;
                continue;
            }
            let reach = norm
                .dist(v[i].coords(), v[i - 1].coords())
                .min(norm.dist(v[i].coords(), v[i + 1].coords()));
            let mid = v[i - 1].lerp(&v[i + 1], 0.5);
            let mut best = (cur, None);
            for scale in [0.25, 0.0625] {
                let h = scale * reach;
                let mut cands: Vec<Point> = dirs.iter().map(|d| v[i].add_scaled(d, h)).collect();
                cands.push(v[i].lerp(&mid, scale * 2.0));
                for c in cands {
                    if !dom.contains(c.coords()) || c == v[i - 1] || c == v[i + 1] {
                        continue;
                    }
                    let cost = segment_cost(dom, &v[i - 1], &c) + segment_cost(dom, &c, &v[i + 1]);
                    if cost < best.0 - 1e-12 {
                        best = (cost, Some(c));
                    }
                }
                if best.1.is_some() {
                    break;
                }
            }
            if let (cost, Some(c)) = best {
                debug_assert!(cost < cur);
                v[i] = c;
                improved = true;
            }
            i += 1;
        }
        if !improved {
            break;
        }
    }
    Arc::new(norm, v)
}

/// Certificate for a given arc over `pair_budget` parameter pairs. With an
/// estimator, `c_empirical` is filled in from graph upper estimates.
pub fn certify_arc(
    dom: &Domain,
    arc: &Arc,
    pair_budget: usize,
    level: u32,
    estimator: Option<&Estimator>,
) -> Result<NeargeodesicCertificate> {
    if pair_budget == 0 {
        return Err(QhError::input("pair budget must be at least 1"));
    }
    qh_length(dom, arc, DEFAULT_TOL)?;
    let mut pairs = Vec::with_capacity(pair_budget);
    let (mut c_cert, mut c_emp) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for (u, v) in arclength_pairs(arc.length(), pair_budget) {
        let sub = match arc.subarc(u, v) {
            Ok(s) => s,
            Err(QhError::DegenerateArc(_)) => continue,
            Err(e) => return Err(e),
        };
        let lk = qh_length(dom, &sub, DEFAULT_TOL)?;
        let (p, q) = (sub.start(), sub.end());
        let lam = inner_length_lower(dom, p.coords(), q.coords());
        let k_lower = qh_lower_bound(dom, p.coords(), q.coords(), lam);
        let k_upper = match estimator {
            Some(est) => est.qh_distance(p, q).map_or(lk, |e| e.value.min(lk)),
            None => f64::NAN,
        };
        let ratio = if k_lower > 0.0 { lk / k_lower } else { f64::INFINITY };
        c_cert = c_cert.max(ratio);
        if estimator.is_some() {
            c_emp = c_emp.max(if k_upper > 0.0 { lk / k_upper } else { 1.0 });
        }
        pairs.push(PairRatio { u, v, qh_length: lk, k_lower, k_upper });
    }
    if pairs.is_empty() {
        return Err(QhError::DegenerateArc("no nondegenerate subarc pairs".into()));
    }
    Ok(NeargeodesicCertificate {
        arc: arc.clone(),
        c0_target: None,
        c_certified: c_cert,
        c_empirical: if estimator.is_some() { c_emp } else { f64::NAN },
        pair_budget,
        level,
        pairs,
    })
}

/// Neargeodesic constant of an arc, sampled over `pair_budget` pairs.
pub fn neargeodesic_constant(
    dom: &Domain,
    arc: &Arc,
    pair_budget: usize,
    level: u32,
) -> Result<NeargeodesicCertificate> {
    qh_length(dom, arc, DEFAULT_TOL)?;
    let focus = vec![arc.start().clone(), arc.end().clone()];
    let est = Estimator::new(dom, &focus, level)?;
    certify_arc(dom, arc, pair_budget, level, Some(&est))
}

pub fn construct_neargeodesic(
    dom: &Domain,
    x: &Point,
    y: &Point,
    c0: f64,
    level: u32,
) -> Result<NeargeodesicCertificate> {
    let est = Estimator::new(dom, &[x.clone(), y.clone()], level)?;
    construct_neargeodesic_with(&est, x, y, c0, &NeargeodesicOptions::default())
}

/// Construction on an existing graph (shared between many pairs). Retries
/// on pair-focused graphs at finer levels use fresh graphs.
pub fn construct_neargeodesic_with(
    est: &Estimator,
    x: &Point,
    y: &Point,
    c0: f64,
    opts: &NeargeodesicOptions,
) -> Result<NeargeodesicCertificate> {
    if !(c0 > 1.0) {
        return Err(QhError::input(format!("c0 = {c0} must exceed 1")));
    }
    if x == y {
        return Err(QhError::DegenerateArc("endpoints coincide".into()));
    }
    let dom = est.domain().clone();
    let mut cert = attempt(est, x, y, c0, opts)?;
    let mut level = est.level();
    for _ in 0..opts.extra_levels {
        if cert.c_certified <= c0 {
            break;
        }
        level += 1;
        let finer = Estimator::with_config(
            &dom,
            &[x.clone(), y.clone()],
            GraphConfig::for_dim(dom.dim(), level),
        )?;
        let next = attempt(&finer, x, y, c0, opts)?;
        if next.c_certified < cert.c_certified {
            cert = next;
        }
    }
    Ok(cert)
}

fn attempt(
    est: &Estimator,
    x: &Point,
    y: &Point,
    c0: f64,
    opts: &NeargeodesicOptions,
) -> Result<NeargeodesicCertificate> {
    let dom = est.domain();
    let path = est
        .qh_distance(x, y)?
        .path
        .ok_or_else(|| QhError::DegenerateArc("no path for distinct endpoints".into()))?;
    let arc = shorten_arc(dom, &path, opts.shortening_sweeps)?;
    let mut cert =
        certify_arc(dom, &arc, opts.pair_budget, est.level(), opts.empirical.then_some(est))?;
    cert.c0_target = Some(c0);
    Ok(cert)
}

/// A special point of the decomposition, located by arclength from the
/// start of the arc.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecialPoint {
    pub label: String,
    #[serde(with = "crate::serde_ext")]
    pub param: f64,
    pub point: Point,
    #[serde(with = "crate::serde_ext")]
    pub d: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DyadicDecomposition {
    pub arc: Arc,
    pub w0: SpecialPoint,
    pub m: u32,
    pub s: u32,
    /// `x'_1, …, x'_{m+1}` and `w0` when it differs from `x'_{m+1}`.
    pub forward_points: Vec<SpecialPoint>,
    /// `x'_{1,1}, …, x'_{1,s+1}` and `w0` when it differs from `x'_{1,s+1}`.
    pub backward_points: Vec<SpecialPoint>,
    #[serde(with = "crate::serde_ext")]
    pub tol: f64,
}

/// Default root-finding tolerance for an arc.
pub fn default_tolerance(arc: &Arc) -> f64 {
    1e-6 * arc.length()
}

/// First parameter `u ∈ [start, end]` with `f(u) ≥ tau`, for a 1-Lipschitz
/// `f` with `f(end) ≥ tau`. Steps of `tau − f(u)` cannot skip a crossing;
/// only steps of size `tol` need bisection.
fn first_crossing(f: &dyn Fn(f64) -> f64, start: f64, end: f64, tau: f64, tol: f64) -> f64 {
    let mut u = start;
    let mut fu = f(u);
    if fu >= tau {
        return u;
    }
    loop {
        let gap = tau - fu;
        let step = gap.max(tol);
        let next = (u + step).min(end);
        let fnext = f(next);
        if fnext >= tau || next >= end {
            if gap >= tol && next < end {
                return next;
            }
            // crossing lies in (u, next]; shrink far below tol
            let (mut lo, mut hi) = (u, next);
            while hi - lo > 1e-3 * tol && hi > lo {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if f(mid) >= tau {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return hi;
        }
        u = next;
        fu = fnext;
    }
}

/// Special points along one side: start point, the doubling crossings and
/// the end point `w0`. `f(u)` is d_D at distance `u` from this side's start.
fn dyadic_side(
    f: &dyn Fn(f64) -> f64,
    span: f64,
    d_w0: f64,
    tol: f64,
) -> (u32, Vec<(f64, f64)>, bool) {
    let d1 = f(0.0);
    let mut m: i32 = if d_w0 > d1 { (d_w0 / d1).log2().floor() as i32 } else { 0 };
    while m > 0 && d1 * 2f64.powi(m) > d_w0 {
        m -= 1;
    }
    while d1 * 2f64.powi(m + 1) <= d_w0 {
        m += 1;
    }
    let m = m.max(0) as u32;
    let mut pts = vec![(0.0, d1)];
    if m == 0 {
        // x'_0 = x'_1, so the next point is w0
        pts.push((span, d_w0));
        return (0, pts, true);
    }
    let mut u = 0.0;
    for i in 2..=m + 1 {
        let tau = d1 * 2f64.powi(i as i32 - 1);
        u = first_crossing(f, u, span, tau, tol);
        pts.push((u, f(u)));
    }
    let x0_is_w0 = (span - u).abs() <= tol;
    if !x0_is_w0 {
        pts.push((span, d_w0));
    }
    (m, pts, !x0_is_w0)
}

/// First maximizer of d_D along the arc: dense grid plus vertices, then
/// golden-section refinement around the first grid maximizer.
fn locate_w0(dom: &Domain, arc: &Arc) -> (f64, f64) {
    let len = arc.length();
    let f = |t: f64| dom.boundary_distance(arc.point_at_unchecked(t).coords());
    let n = 4096.max(8 * arc.vertices().len());
    let mut ts: Vec<f64> = (0..=n).map(|i| len * i as f64 / n as f64).collect();
    ts.extend_from_slice(arc.cumulative());
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    let vals: Vec<f64> = ts.iter().map(|&t| f(t)).collect();
    let fmax = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let j = vals.iter().position(|&v| v >= fmax * (1.0 - 1e-12)).unwrap_or(0);
    let lo = ts[j.saturating_sub(1)];
    let hi = ts[(j + 1).min(ts.len() - 1)];
    let (tr, neg) = golden_min(|t| -f(t), lo, hi, 1e-12 * len.max(1.0));
    if -neg > vals[j] * (1.0 + 1e-12) {
        (tr, -neg)
    } else {
        (ts[j], vals[j])
    }
}

pub fn dyadic_decompose(dom: &Domain, arc: &Arc, tol: f64) -> Result<DyadicDecomposition> {
    if !(tol > 0.0) {
        return Err(QhError::input("root-finding tolerance must be positive"));
    }
    for v in arc.vertices() {
        if !dom.contains(v.coords()) {
            return Err(QhError::ArcNotInDomain { point: v.0.to_vec() });
        }
    }
    let len = arc.length();
    let (tw, dw) = locate_w0(dom, arc);
    let at = |t: f64| dom.boundary_distance(arc.point_at_unchecked(t).coords());
    let special = |label: String, t: f64| {
        let point = arc.point_at_unchecked(t);
        let d = dom.boundary_distance(point.coords());
        SpecialPoint { label, param: t, point, d }
    };

    let fwd = |u: f64| at(u.min(tw));
    let (m, fpts, fw_tail) = dyadic_side(&fwd, tw, dw, tol);
    let bwd = |u: f64| at((len - u).max(tw));
    let (s, bpts, bw_tail) = dyadic_side(&bwd, len - tw, dw, tol);

    let w0 = special("w'_0".into(), tw);
    let mut forward = Vec::with_capacity(fpts.len());
    for (i, &(u, _)) in fpts.iter().enumerate() {
        if fw_tail && i + 1 == fpts.len() {
            forward.push(SpecialPoint { label: format!("x'_{}", i + 1), ..w0.clone() });
        } else {
            forward.push(special(format!("x'_{}", i + 1), u));
        }
    }
    let mut backward = Vec::with_capacity(bpts.len());
    for (j, &(u, _)) in bpts.iter().enumerate() {
        let label = format!("x'_{{1,{}}}", j + 1);
        if bw_tail && j + 1 == bpts.len() {
            backward.push(SpecialPoint { label, ..w0.clone() });
        } else {
            backward.push(special(label, len - u));
        }
    }
    Ok(DyadicDecomposition {
        arc: arc.clone(),
        w0,
        m,
        s,
        forward_points: forward,
        backward_points: backward,
        tol,
    })
}

/// Upper estimates of λ_D for points of a decomposition: the exact value
/// where known, otherwise the smaller of a graph estimate and the length of
/// the arc between the two points.
struct LambdaUpper<'a> {
    dom: &'a Domain,
    graph: Option<Estimator>,
}

impl<'a> LambdaUpper<'a> {
    fn new(dom: &'a Domain, arc: &'a Arc, focus: &[Point]) -> Self {
        let needs_graph = inner_length_exact(dom, arc.start().coords(), arc.end().coords()).is_none();
        let graph = needs_graph
            .then(|| {
                let mut cfg = GraphConfig::for_dim(dom.dim(), crate::metrics::DEFAULT_LEVEL);
                cfg.resolve_features = true;
                Estimator::with_config(dom, focus, cfg).ok()
            })
            .flatten();
        LambdaUpper { dom, graph }
    }

    fn get(&self, p: &SpecialPoint, q: &SpecialPoint) -> f64 {
        if p.point == q.point {
            return 0.0;
        }
        if let Some(v) = inner_length_exact(self.dom, p.point.coords(), q.point.coords()) {
            return v;
        }
        let along = (p.param - q.param).abs();
        let graph = self
            .graph
            .as_ref()
            .and_then(|g| g.inner_length(&p.point, &q.point).ok())
            .map_or(f64::INFINITY, |e| e.value);
        along.min(graph)
    }
}

fn tower_le(name: String, lhs: f64, factor: &TowerValue, dz: f64) -> Margin {
    let rhs = TowerValue::from_f64(dz).and_then(|d| factor.mul(&d));
    match (TowerValue::from_f64(lhs), rhs) {
        (Ok(l), Ok(r)) => {
            let margin = if lhs == 0.0 { f64::INFINITY } else { r.ln_ratio(&l) };
            Margin::custom(name, lhs, r.to_f64().unwrap_or(f64::INFINITY), margin, l <= r)
        }
        _ => Margin::custom(name, lhs, f64::NAN, f64::NAN, false),
    }
}

fn block_samples(dec: &DyadicDecomposition, a: f64, b: f64, n: usize) -> Vec<SpecialPoint> {
    let (lo, hi) = (a.min(b), a.max(b));
    let n = if hi - lo <= 0.0 { 1 } else { n.max(2) };
    (0..n)
        .map(|j| {
            let t = if n == 1 { lo } else { lo + (hi - lo) * j as f64 / (n - 1) as f64 };
            let point = dec.arc.point_at_unchecked(t);
            SpecialPoint { label: "z'".into(), param: t, d: 0.0, point }
        })
        .collect()
}

/// Block inequalities of the decomposition against the constant chain.
/// Margins are `ln(rhs / lhs)`; right-hand sides are compared as towers.
pub fn check_decomposition_lemmas(
    dom: &Domain,
    dec: &DyadicDecomposition,
    constants: &ConstantSet,
    sample_budget: usize,
) -> Report {
    let (a2, a3) = (&constants.a2, &constants.a3);
    let (m, s) = (dec.m as usize, dec.s as usize);
    let fw = &dec.forward_points;
    let bw = &dec.backward_points;
    let blocks = m + s + 3;
    let per = (sample_budget / blocks).max(2);

    let mut report = Report::new("decomposition_blocks")
        .param("m", dec.m)
        .param("s", dec.s)
        .param("a2", a2)
        .param("a3", a3)
        .param("samples_per_block", per);

    let mut focus: Vec<Point> = fw.iter().chain(bw).map(|p| p.point.clone()).collect();
    let mut groups: Vec<(String, SpecialPoint, SpecialPoint, f64, Vec<SpecialPoint>)> = Vec::new();
    for k in 1..=m.min(fw.len().saturating_sub(1)) {
        let (p, q) = (&fw[k - 1], &fw[k]);
        let zs = block_samples(dec, p.param, q.param, per);
        groups.push((format!("forward{k}"), p.clone(), q.clone(), q.d, zs));
    }
    for k in 1..=s.min(bw.len().saturating_sub(1)) {
        let (p, q) = (&bw[k - 1], &bw[k]);
        let zs = block_samples(dec, p.param, q.param, per);
        groups.push((format!("backward{k}"), p.clone(), q.clone(), q.d, zs));
    }
    if let (Some(p), Some(q)) = (fw.get(m), bw.get(s)) {
        let zs = block_samples(dec, p.param, q.param, per);
        groups.push(("middle".into(), p.clone(), q.clone(), dec.w0.d, zs));
    }
    for g in &groups {
        focus.extend(g.4.iter().map(|z| z.point.clone()));
    }
    let lam = LambdaUpper::new(dom, &dec.arc, &focus);
    let with_d = |mut z: SpecialPoint| {
        z.d = dom.boundary_distance(z.point.coords());
        z
    };

    for (name, p, q, d_far, zs) in groups {
        let chord = lam.get(&p, &q);
        for z in zs.into_iter().map(with_d) {
            let at = format!("@{}", z.param);
            report.push(tower_le(format!("{name}.distance{at}"), d_far, a2, z.d));
            report.push(tower_le(format!("{name}.chord{at}"), chord, a2, z.d));
            let split = lam.get(&p, &z).max(lam.get(&q, &z));
            report.push(tower_le(format!("{name}.split{at}"), split, a2, z.d));
        }
    }

    // cumulative inequality on each half, with constant a3
    let halves = [("from_start", &fw[0], dec.w0.param), ("from_end", &bw[0], dec.w0.param)];
    for (name, origin, tw) in halves {
        for z in block_samples(dec, origin.param, tw, per * (m.max(s) + 1)).into_iter().map(with_d) {
            let l = lam.get(origin, &z);
            report.push(tower_le(format!("{name}.cumulative@{}", z.param), l, a3, z.d));
        }
    }
    report
}
