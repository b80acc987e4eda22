//! Scenario files and the two experiments: the cone-constant bound for
//! neargeodesics on a domain pair, and the slit comb sweep.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::checkers::{
    cone_constant, cqh_pair_m, inner_uniform_cprime_with, john_constant_estimate_with, JohnOptions,
    DEFAULT_CONE_BUDGET,
};
use crate::constants::{compare_to_measurement, compute_constants, ConstantInputs, ConstantSet};
use crate::domain::{comb_gaps, Domain};
use crate::error::{QhError, Result};
use crate::geodesic::{construct_neargeodesic_with, NeargeodesicOptions};
use crate::mapping::Mapping;
use crate::metrics::{Estimator, DEFAULT_LEVEL};
use crate::norm::{NormSpec, Point};
use crate::report::{csv_field, fmt_num};
use crate::tower::TowerValue;

pub const SCENARIO_SCHEMA: u32 = 1;

/// How to obtain the point pairs of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairSpec {
    /// Number of seeded random pairs.
    #[serde(default)]
    pub budget: usize,
    /// Minimal boundary distance of sampled points.
    #[serde(default = "default_clearance")]
    pub min_clearance: f64,
    #[serde(default)]
    pub seed: u64,
    /// Explicit pairs, used before any sampled ones.
    #[serde(default)]
    pub points: Vec<[Vec<f64>; 2]>,
}

fn default_clearance() -> f64 {
    0.05
}

/// Constant-pipeline inputs a scenario may pin instead of measuring.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantOverrides {
    pub a: Option<f64>,
    pub c_prime: Option<f64>,
    #[serde(rename = "M")]
    pub m: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema: u32,
    /// The domain in which neargeodesics are built.
    pub domain: Domain,
    /// Image domain; the source domain when absent.
    #[serde(default)]
    pub target: Option<Domain>,
    /// Map from `domain` to `target`; when absent every pair fails with a
    /// mapping error.
    #[serde(default)]
    pub mapping: Option<Mapping>,
    pub pairs: PairSpec,
    #[serde(default = "default_level")]
    pub level: u32,
    pub c0: f64,
    /// Additive constant C of the coarse quasihyperbolic condition.
    #[serde(default, rename = "C")]
    pub c: f64,
    #[serde(default)]
    pub constants: ConstantOverrides,
}

fn default_level() -> u32 {
    DEFAULT_LEVEL
}

impl Scenario {
    pub fn from_json(s: &str) -> Result<Self> {
        let sc: Scenario = serde_json::from_str(s)?;
        if sc.schema != SCENARIO_SCHEMA {
            return Err(QhError::Format(format!("unsupported scenario schema {}", sc.schema)));
        }
        Ok(sc)
    }

    pub fn target_domain(&self) -> &Domain {
        self.target.as_ref().unwrap_or(&self.domain)
    }

    /// Explicit pairs followed by `budget` seeded pairs.
    pub fn point_pairs(&self) -> Result<Vec<(Point, Point)>> {
        make_pairs(&self.domain, &self.pairs)
    }
}

pub fn make_pairs(dom: &Domain, spec: &PairSpec) -> Result<Vec<(Point, Point)>> {
    let mut out = Vec::new();
    for [a, b] in &spec.points {
        let (a, b) = (Point::new(a), Point::new(b));
        for p in [&a, &b] {
            dom.norm().check_dim(p.coords())?;
            if !dom.contains(p.coords()) {
                return Err(QhError::input(format!("point {:?} is not in the domain", p.0.to_vec())));
            }
        }
        out.push((a, b));
    }
    if spec.budget > 0 {
        let pts = dom.sample_interior(2 * spec.budget, spec.min_clearance, spec.seed);
        if pts.len() < 2 * spec.budget {
            return Err(QhError::input(format!(
                "could only sample {} points with clearance {}",
                pts.len(),
                spec.min_clearance
            )));
        }
        out.extend(pts.chunks(2).map(|c| (c[0].clone(), c[1].clone())));
    }
    Ok(out)
}

/// Measurements for one pair at one level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairMeasurement {
    #[serde(with = "crate::serde_ext")]
    pub k_hat: f64,
    #[serde(with = "crate::serde_ext")]
    pub k_lower: f64,
    /// Upper estimate of λ between the images.
    #[serde(with = "crate::serde_ext")]
    pub lambda_hat: f64,
    #[serde(with = "crate::serde_ext")]
    pub cone_constant: f64,
    #[serde(with = "crate::serde_ext")]
    pub c_certified: f64,
    #[serde(with = "crate::serde_ext")]
    pub c_prime_upper: f64,
    #[serde(with = "crate::serde_ext")]
    pub m_pair: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Row {
    pub pair_id: usize,
    pub x: Point,
    pub y: Point,
    pub coarse: Option<PairMeasurement>,
    pub fine: Option<PairMeasurement>,
    /// `|cone(L+1) − cone(L)| / cone(L)`.
    #[serde(with = "crate::serde_ext::option")]
    pub stability_delta: Option<f64>,
    /// Measured cone constants ≤ b at both levels.
    pub within_b: Option<bool>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Summary {
    pub level: u32,
    pub pairs: usize,
    pub completed: usize,
    pub failed: usize,
    #[serde(with = "crate::serde_ext")]
    pub max_cone_constant: f64,
    #[serde(with = "crate::serde_ext")]
    pub max_cone_constant_fine: f64,
    /// Relative change of the max cone constant from level L to L+1.
    #[serde(with = "crate::serde_ext")]
    pub stability: f64,
    pub stable: bool,
    pub all_within_b: bool,
    pub inputs: Option<ConstantInputs>,
    pub b: Option<TowerValue>,
    #[serde(with = "crate::serde_ext")]
    pub absorbed_ln: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Result {
    pub summary: Theorem1Summary,
    pub rows: Vec<Theorem1Row>,
    pub constants: Option<ConstantSet>,
}

/// Largest accepted relative change of the max cone constant under refinement.
pub const STABILITY_TOLERANCE: f64 = 0.05;

struct Shared {
    dom: Estimator,
    target: Estimator,
}

fn measure_pair(
    sc: &Scenario,
    g: &Shared,
    x: &Point,
    y: &Point,
    opts: &NeargeodesicOptions,
) -> Result<PairMeasurement> {
    let map = sc
        .mapping
        .as_ref()
        .ok_or_else(|| QhError::Unsupported("no mapping between the domains".into()))?;
    let tgt = sc.target_domain();
    let (fx, fy) = (map.map_into(x, tgt)?, map.map_into(y, tgt)?);
    let cert = construct_neargeodesic_with(&g.dom, x, y, sc.c0, opts)?;
    let cone = cone_constant(&sc.domain, &cert.arc, DEFAULT_CONE_BUDGET)?;
    let k = g.dom.qh_distance(x, y)?;
    let cp = inner_uniform_cprime_with(&g.target, &[(fx.clone(), fy.clone())])?;
    let row = cp.pairs.first();
    let k_image = row.map_or(0.0, |r| r.k_upper);
    Ok(PairMeasurement {
        k_hat: k.value,
        k_lower: k.lower_bound,
        lambda_hat: row.map_or(0.0, |r| r.lambda_upper),
        cone_constant: cone.cone_constant,
        c_certified: cert.c_certified,
        c_prime_upper: cp.upper,
        m_pair: cqh_pair_m(k.value, k_image, sc.c),
    })
}

fn run_level(
    sc: &Scenario,
    pairs: &[(Point, Point)],
    level: u32,
) -> Result<Vec<Result<PairMeasurement>>> {
    let focus: Vec<Point> = pairs.iter().flat_map(|(a, b)| [a.clone(), b.clone()]).collect();
    let tgt = sc.target_domain();
    let images: Vec<Point> = match &sc.mapping {
        Some(m) => focus.iter().filter_map(|p| m.map_into(p, tgt).ok()).collect(),
        None => vec![],
    };
    let dom = Estimator::new(&sc.domain, &focus, level)?;
    let target = if images.is_empty() {
        Estimator::new(tgt, &focus, level).or_else(|_| Estimator::new(tgt, &[], level))?
    } else {
        Estimator::new(tgt, &images, level)?
    };
    let g = Shared { dom, target };
    // constants absorb the certified c0, so no per-pair refinement retries
    let opts = NeargeodesicOptions { extra_levels: 0, empirical: false, ..Default::default() };
    Ok(pairs.par_iter().map(|(x, y)| measure_pair(sc, &g, x, y, &opts)).collect())
}

/// Inputs of the constant chain from the coarse measurements, unless pinned.
pub fn measured_inputs(sc: &Scenario, ms: &[&PairMeasurement]) -> ConstantInputs {
    let max = |f: fn(&PairMeasurement) -> f64| ms.iter().map(|m| f(m)).fold(1.0, f64::max);
    ConstantInputs {
        a: sc.constants.a.unwrap_or_else(|| max(|m| m.cone_constant)),
        c_prime: sc.constants.c_prime.unwrap_or_else(|| max(|m| m.c_prime_upper)),
        c0: sc.c0.max(max(|m| m.c_certified)),
        m: sc.constants.m.unwrap_or_else(|| max(|m| m.m_pair)),
        c: sc.c,
    }
}

pub fn run_theorem1(sc: &Scenario) -> Result<Theorem1Result> {
    if !(sc.c0 > 1.0) {
        return Err(QhError::input(format!("c0 = {} must exceed 1", sc.c0)));
    }
    let pairs = sc.point_pairs()?;
    let coarse = run_level(sc, &pairs, sc.level)?;
    let fine = run_level(sc, &pairs, sc.level + 1)?;

    let mut rows: Vec<Theorem1Row> = pairs
        .iter()
        .zip(coarse.into_iter().zip(fine))
        .enumerate()
        .map(|(i, ((x, y), (c, f)))| {
            let error = match (&c, &f) {
                (Err(e), _) | (_, Err(e)) => Some(e.to_string()),
                _ => None,
            };
            let (coarse, fine) = (c.ok(), f.ok());
            let stability_delta = match (&coarse, &fine) {
                (Some(a), Some(b)) => {
                    Some((b.cone_constant - a.cone_constant).abs() / a.cone_constant)
                }
                _ => None,
            };
            Theorem1Row {
                pair_id: i,
                x: x.clone(),
                y: y.clone(),
                coarse,
                fine,
                stability_delta,
                within_b: None,
                error,
            }
        })
        .collect();

    let done: Vec<&PairMeasurement> =
        rows.iter().filter(|r| r.error.is_none()).filter_map(|r| r.coarse.as_ref()).collect();
    let completed = done.len();
    let mut constants = None;
    let mut inputs = None;
    if completed > 0 {
        let i = measured_inputs(sc, &done);
        inputs = Some(i);
        constants = Some(compute_constants(i)?);
    }
    let mut all_within_b = completed > 0;
    if let Some(cs) = &constants {
        for r in rows.iter_mut().filter(|r| r.error.is_none()) {
            let ok = [&r.coarse, &r.fine]
                .iter()
                .filter_map(|m| m.as_ref())
                .all(|m| compare_to_measurement(cs, m.cone_constant).pass);
            r.within_b = Some(ok);
            all_within_b &= ok;
        }
    }
    let max_of = |pick: fn(&Theorem1Row) -> Option<&PairMeasurement>| {
        rows.iter()
            .filter(|r| r.error.is_none())
            .filter_map(pick)
            .map(|m| m.cone_constant)
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let max_coarse = max_of(|r| r.coarse.as_ref());
    let max_fine = max_of(|r| r.fine.as_ref());
    let stability = if completed > 0 { (max_fine - max_coarse).abs() / max_coarse } else { f64::NAN };
    let summary = Theorem1Summary {
        level: sc.level,
        pairs: pairs.len(),
        completed,
        failed: pairs.len() - completed,
        max_cone_constant: max_coarse,
        max_cone_constant_fine: max_fine,
        stability,
        stable: stability <= STABILITY_TOLERANCE,
        all_within_b,
        inputs,
        b: constants.as_ref().map(|c| c.b),
        absorbed_ln: constants.as_ref().map_or(f64::NAN, |c| c.absorbed_ln),
    };
    Ok(Theorem1Result { summary, rows, constants })
}

pub const THEOREM1_CSV_HEADER: &str = "pair_id,x,y,k_hat,k_lower,lambda_hat,cone_constant,\
cone_constant_fine,c_certified,c_prime_upper,M_pair,b_level,b_residual,stability_delta,within_b,error";

fn fmt_point(p: &Point) -> String {
    p.coords().iter().map(|v| fmt_num(*v)).collect::<Vec<_>>().join(" ")
}

impl Theorem1Result {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(THEOREM1_CSV_HEADER);
        out.push('\n');
        let (bl, br) = match &self.constants {
            Some(c) => (c.b.level().to_string(), fmt_num(c.b.residual())),
            None => (String::new(), String::new()),
        };
        for r in &self.rows {
            let num = |m: &Option<PairMeasurement>, f: fn(&PairMeasurement) -> f64| {
                m.as_ref().map_or(String::new(), |m| fmt_num(f(m)))
            };
            let c = &r.coarse;
            let cols = [
                r.pair_id.to_string(),
                fmt_point(&r.x),
                fmt_point(&r.y),
                num(c, |m| m.k_hat),
                num(c, |m| m.k_lower),
                num(c, |m| m.lambda_hat),
                num(c, |m| m.cone_constant),
                num(&r.fine, |m| m.cone_constant),
                num(c, |m| m.c_certified),
                num(c, |m| m.c_prime_upper),
                num(c, |m| m.m_pair),
                bl.clone(),
                br.clone(),
                r.stability_delta.map_or(String::new(), fmt_num),
                r.within_b.map_or(String::new(), |b| b.to_string()),
                csv_field(r.error.as_deref().unwrap_or("")),
            ];
            out.push_str(&cols.join(","));
            out.push('\n');
        }
        out
    }
}

/// Straddling pairs of the comb: for each gap up to `depth` and each
/// `q < per_gap`, the points `(g, ±h·2^q)` above and below the gap centre.
/// Pair sets grow with depth.
pub fn comb_straddle_pairs(depth: u32, per_gap: usize) -> Vec<(Point, Point)> {
    let mut out = Vec::new();
    for (i, (g, _)) in comb_gaps(depth).into_iter().enumerate() {
        let h = 0.03125 * 2f64.powi(-(i as i32));
        for q in 0..per_gap {
            let hq = h * 2f64.powi(q as i32);
            out.push((Point::new(&[g, hq]), Point::new(&[g, -hq])));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeinonenRow {
    pub depth: u32,
    pub pairs: usize,
    #[serde(with = "crate::serde_ext")]
    pub john_upper: f64,
    #[serde(with = "crate::serde_ext")]
    pub cprime_upper: f64,
    #[serde(with = "crate::serde_ext")]
    pub cprime_lower: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeinonenResult {
    pub level: u32,
    pub rows: Vec<HeinonenRow>,
    pub cprime_nondecreasing: bool,
    /// `max / min` of the John estimates over depths.
    #[serde(with = "crate::serde_ext")]
    pub john_band: f64,
    pub john_within_band: bool,
}

pub const HEINONEN_CSV_HEADER: &str = "depth,pairs,john_upper,cprime_upper,cprime_lower";

/// Factor within which John estimates are expected to stay across depths.
pub const JOHN_BAND: f64 = 2.0;

pub fn heinonen_row(dom: &Domain, depth: u32, pairs: &[(Point, Point)], level: u32) -> Result<HeinonenRow> {
    let focus: Vec<Point> = pairs.iter().flat_map(|(a, b)| [a.clone(), b.clone()]).collect();
    let est = Estimator::new(dom, &focus, level)?;
    let john = john_constant_estimate_with(&est, pairs, &JohnOptions::default())?;
    let cp = inner_uniform_cprime_with(&est, pairs)?;
    Ok(HeinonenRow {
        depth,
        pairs: pairs.len(),
        john_upper: john.upper,
        cprime_upper: cp.upper,
        cprime_lower: cp.lower,
    })
}

pub fn run_heinonen(depths: &[u32], per_gap: usize, level: u32) -> Result<HeinonenResult> {
    let mut rows = Vec::new();
    if per_gap > 0 {
        for &depth in depths {
            if depth == 0 {
                return Err(QhError::input("comb depths start at 1"));
            }
            let dom = Domain::heinonen_comb(NormSpec::euclidean(2), depth)?;
            let pairs = comb_straddle_pairs(depth, per_gap);
            rows.push(heinonen_row(&dom, depth, &pairs, level)?);
        }
    }
    let cprime_nondecreasing = rows.windows(2).all(|w| w[1].cprime_upper >= w[0].cprime_upper);
    let jmax = rows.iter().map(|r| r.john_upper).fold(f64::NEG_INFINITY, f64::max);
    let jmin = rows.iter().map(|r| r.john_upper).fold(f64::INFINITY, f64::min);
    let john_band = if rows.is_empty() { 1.0 } else { jmax / jmin };
    Ok(HeinonenResult {
        level,
        rows,
        cprime_nondecreasing,
        john_band,
        john_within_band: john_band <= JOHN_BAND,
    })
}

impl HeinonenResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(HEINONEN_CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.depth,
                r.pairs,
                fmt_num(r.john_upper),
                fmt_num(r.cprime_upper),
                fmt_num(r.cprime_lower)
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Shape;

    #[test]
    fn straddle_pairs_nest() {
        let a = comb_straddle_pairs(2, 2);
        let b = comb_straddle_pairs(3, 2);
        assert_eq!(a.len(), 4);
        assert!(a.iter().all(|p| b.contains(p)));
        let dom = Domain::heinonen_comb(NormSpec::euclidean(2), 3).unwrap();
        assert!(b.iter().all(|(x, y)| dom.contains(x.coords()) && dom.contains(y.coords())));
    }

    #[test]
    fn zero_pairs_give_header_only() {
        let r = run_heinonen(&[2], 0, 0).unwrap();
        assert_eq!(r.to_csv(), format!("{HEINONEN_CSV_HEADER}\n"));
    }

    #[test]
    fn empty_comb_matches_the_ball() {
        let e2 = NormSpec::euclidean(2);
        let empty = Domain::new(
            e2,
            Shape::SlitDisc { center: [0.0, 0.0], radius: 1.0, slits: vec![] },
        )
        .unwrap();
        let ball = Domain::unit_ball(e2);
        let pairs = comb_straddle_pairs(2, 2);
        let a = heinonen_row(&empty, 0, &pairs, 0).unwrap();
        let b = heinonen_row(&ball, 0, &pairs, 0).unwrap();
        assert!((a.cprime_upper - b.cprime_upper).abs() <= 0.1 * b.cprime_upper);
    }

    #[test]
    fn scenario_parsing() {
        let s = r#"{
            "schema": 1,
            "domain": {"schema": 1, "norm": {"p": 2, "dim": 2},
                       "shape": {"type": "ball", "center": [0, 0], "radius": 1}},
            "mapping": {"type": "identity"},
            "pairs": {"budget": 3, "seed": 5},
            "c0": 1.2
        }"#;
        let sc = Scenario::from_json(s).unwrap();
        assert_eq!(sc.level, DEFAULT_LEVEL);
        assert_eq!(sc.point_pairs().unwrap().len(), 3);
        assert_eq!(sc.point_pairs().unwrap(), sc.point_pairs().unwrap());
        assert!(Scenario::from_json(&s.replace("\"schema\": 1,\n            \"domain\"", "\"schema\": 9,\"domain\"")).is_err());
    }

    #[test]
    fn missing_map_fails_every_pair() {
        let e2 = NormSpec::euclidean(2);
        let sc = Scenario {
            schema: 1,
            domain: Domain::heinonen_comb(e2, 2).unwrap(),
            target: Some(Domain::unit_ball(e2)),
            mapping: None,
            pairs: PairSpec { budget: 2, min_clearance: 0.05, seed: 1, points: vec![] },
            level: 0,
            c0: 1.2,
            c: 0.0,
            constants: ConstantOverrides::default(),
        };
        let r = run_theorem1(&sc).unwrap();
        assert_eq!(r.summary.completed, 0);
        assert!(r.rows.iter().all(|row| row.error.as_deref().is_some_and(|e| e.contains("mapping"))));
        assert!(!r.summary.all_within_b);
    }
}
