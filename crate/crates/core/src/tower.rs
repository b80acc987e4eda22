//! Extended-range positive reals as iterated exponentials.
//!
//! A [`TowerValue`] `(level, residual)` denotes `exp^level(residual)`. Values
//! are normalized against a threshold `T = 2^500`: at level 0 the residual
//! lies in `[0, T)`, at higher levels in `[ln T, T)`. Every level-`n+1` value
//! then exceeds every level-`n` value, so lexicographic order on
//! `(level, residual)` is the real order, and residuals stay well inside the
//! range of `f64` where they can be handled exactly.
//!
//! Arithmetic goes through natural logarithms. When an addend is too small
//! to move the result at `f64` precision it is absorbed; the operations that
//! can absorb report an upper bound on the natural log of the dropped
//! relative magnitude.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{QhError, Result};

/// `log2` of the normalization threshold.
const T_LOG2: i32 = 500;

fn threshold() -> f64 {
    2f64.powi(T_LOG2)
}

fn ln_threshold() -> f64 {
    T_LOG2 as f64 * std::f64::consts::LN_2
}

/// Upper bound on `ln(dropped / kept)` used when the true ratio is far below
/// the `f64` range (the kept value exceeds `e^T`).
const FAR_BELOW: f64 = -1e150;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TowerValue {
    level: u32,
    residual: f64,
}

/// A real number that may be negative and small, or positive and beyond
/// the normalization threshold. It carries natural logarithms of towers.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Real {
    Small(f64),
    Big(TowerValue),
}

/// Result of an operation that may absorb a negligible term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tracked {
    pub value: TowerValue,
    /// Upper bound on `ln(dropped / result)`; `-∞` when nothing was dropped.
    pub absorbed_ln: f64,
}

impl TowerValue {
    /// Normalize an arbitrary `(level, residual)` pair.
    pub fn new(level: u32, residual: f64) -> Result<Self> {
        if !(residual.is_finite() && residual >= 0.0) {
            return Err(QhError::TowerDomain(format!("residual {residual} is not a finite nonnegative real")));
        }
        if level > 0 && residual == 0.0 {
            // exp(0) = 1
            return TowerValue::new(level - 1, 1.0);
        }
        Ok(normalize(level, residual))
    }

    pub fn from_f64(v: f64) -> Result<Self> {
        TowerValue::new(0, v)
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn one() -> Self {
        TowerValue { level: 0, residual: 1.0 }
    }

    /// Machine value when representable.
    pub fn to_f64(&self) -> Option<f64> {
        let mut v = self.residual;
        for _ in 0..self.level {
            v = v.exp();
            if !v.is_finite() {
                return None;
            }
        }
        Some(v)
    }

    fn ln_real(&self) -> Result<Real> {
        match self.level {
            0 => {
                if self.residual == 0.0 {
                    Err(QhError::TowerDomain("logarithm of zero".into()))
                } else {
                    Ok(Real::Small(self.residual.ln()))
                }
            }
            1 => Ok(Real::Small(self.residual)),
            l => Ok(Real::Big(TowerValue { level: l - 1, residual: self.residual })),
        }
    }

    /// Natural logarithm; defined for values above 1.
    pub fn ln(&self) -> Result<TowerValue> {
        match self.ln_real()? {
            Real::Small(s) if s > 0.0 => Ok(normalize(0, s)),
            Real::Small(_) => Err(QhError::TowerDomain(format!(
                "logarithm of {} is not positive",
                self.residual
            ))),
            Real::Big(t) => Ok(t),
        }
    }

    pub fn exp(&self) -> Result<TowerValue> {
        exp_real(self.to_real())
    }

    fn to_real(self) -> Real {
        if self.level == 0 {
            Real::Small(self.residual)
        } else {
            Real::Big(self)
        }
    }

    pub fn add(&self, other: &TowerValue) -> Result<TowerValue> {
        Ok(self.add_tracked(other)?.value)
    }

    /// Sum with absorption accounting.
    pub fn add_tracked(&self, other: &TowerValue) -> Result<Tracked> {
        let (hi, lo) = if self >= other { (*self, *other) } else { (*other, *self) };
        if lo.level == 0 && lo.residual == 0.0 {
            return Ok(Tracked { value: hi, absorbed_ln: f64::NEG_INFINITY });
        }
        if hi.level == 0 {
            let s = hi.residual + lo.residual;
            return Ok(Tracked { value: normalize(0, s), absorbed_ln: f64::NEG_INFINITY });
        }
        // ln(hi + lo) = ln hi + log1p(lo / hi)
        let ln_hi = hi.ln_real()?;
        let ln_lo = lo.ln_real()?;
        let delta_ln = match (ln_hi, ln_lo) {
            (Real::Small(a), Real::Small(b)) => b - a,
            (Real::Big(_), Real::Small(_)) => FAR_BELOW,
            (Real::Big(a), Real::Big(b)) => {
                if a == b {
                    0.0
                } else {
                    FAR_BELOW
                }
            }
            (Real::Small(_), Real::Big(_)) => unreachable!("hi ≥ lo"),
        };
        let ratio = delta_ln.exp();
        let shifted = add_small(ln_hi, ratio.ln_1p())?;
        let value = exp_real(shifted)?;
        let absorbed_ln = if value == hi { delta_ln } else { f64::NEG_INFINITY };
        Ok(Tracked { value, absorbed_ln })
    }

    pub fn mul(&self, other: &TowerValue) -> Result<TowerValue> {
        if self.level == 0 && other.level == 0 {
            let p = self.residual * other.residual;
            if p.is_finite() && p < threshold() {
                return Ok(normalize(0, p));
            }
        }
        if self.is_zero() || other.is_zero() {
            return Ok(TowerValue { level: 0, residual: 0.0 });
        }
        let s = add_real(self.ln_real()?, other.ln_real()?)?;
        exp_real(s)
    }

    /// `self^e` for a real exponent.
    pub fn powf(&self, e: f64) -> Result<TowerValue> {
        if self.level == 0 {
            let p = self.residual.powf(e);
            if p.is_finite() && p < threshold() {
                return TowerValue::new(0, p);
            }
        }
        self.pow(&TowerValue::from_f64(e)?)
    }

    /// `self^e` with a tower exponent.
    pub fn pow(&self, e: &TowerValue) -> Result<TowerValue> {
        if e.is_zero() {
            return Ok(TowerValue::one());
        }
        if self.is_zero() {
            return Ok(*self);
        }
        let ln_x = self.ln_real()?;
        let prod = mul_real(ln_x, e.to_real())?;
        exp_real(prod)
    }

    pub fn is_zero(&self) -> bool {
        self.level == 0 && self.residual == 0.0
    }

    /// `ln(self / other)` as an `f64`, saturating to `±∞` when the gap is
    /// beyond machine range.
    pub fn ln_ratio(&self, other: &TowerValue) -> f64 {
        if self == other {
            return 0.0;
        }
        let (Ok(a), Ok(b)) = (self.ln_real(), other.ln_real()) else {
            return match (self.is_zero(), other.is_zero()) {
                (true, true) => 0.0,
                (true, false) => f64::NEG_INFINITY,
                _ => f64::INFINITY,
            };
        };
        match (a, b) {
            (Real::Small(x), Real::Small(y)) => x - y,
            (Real::Big(x), Real::Small(_)) => x.to_f64().map_or(f64::INFINITY, |v| v),
            (Real::Small(_), Real::Big(y)) => -y.to_f64().map_or(f64::INFINITY, |v| v),
            (Real::Big(x), Real::Big(y)) => match (x.to_f64(), y.to_f64()) {
                (Some(p), Some(q)) => p - q,
                _ => {
                    if x > y {
                        f64::INFINITY
                    } else {
                        f64::NEG_INFINITY
                    }
                }
            },
        }
    }
}

fn normalize(mut level: u32, mut r: f64) -> TowerValue {
    let t = threshold();
    let lt = ln_threshold();
    while r >= t {
        r = r.ln();
        level += 1;
    }
    while level > 0 && r < lt {
        r = r.exp();
        level -= 1;
    }
    TowerValue { level, residual: r }
}

fn exp_real(x: Real) -> Result<TowerValue> {
    match x {
        Real::Small(s) => {
            if s >= ln_threshold() {
                Ok(normalize(1, s))
            } else {
                let v = s.exp();
                if v == 0.0 {
                    return Err(QhError::TowerDomain(format!("exp({s}) underflows")));
                }
                Ok(normalize(0, v))
            }
        }
        Real::Big(t) => Ok(TowerValue { level: t.level + 1, residual: t.residual }),
    }
}

/// `x + s` for a small nonnegative `s`.
fn add_small(x: Real, s: f64) -> Result<Real> {
    match x {
        Real::Small(v) => Ok(small_or_big(v + s)),
        Real::Big(t) => Ok(Real::Big(add_small_tower(t, s))),
    }
}

fn small_or_big(v: f64) -> Real {
    if v >= threshold() {
        Real::Big(normalize(0, v))
    } else {
        Real::Small(v)
    }
}

/// `t + s` for a tower `t ≥ T` and `0 ≤ s < T`.
fn add_small_tower(t: TowerValue, s: f64) -> TowerValue {
    if s == 0.0 {
        return t;
    }
    match t.level {
        0 => normalize(0, t.residual + s),
        1 => {
            // ln(t + s) = r + log1p(s e^{-r})
            let q = s * (-t.residual).exp();
            normalize(1, t.residual + q.ln_1p())
        }
        _ => t,
    }
}

fn add_real(a: Real, b: Real) -> Result<Real> {
    match (a, b) {
        (Real::Small(x), Real::Small(y)) => Ok(small_or_big(x + y)),
        (Real::Big(t), Real::Small(s)) | (Real::Small(s), Real::Big(t)) => {
            if s >= 0.0 {
                Ok(Real::Big(add_small_tower(t, s)))
            } else {
                sub_small_tower(t, -s)
            }
        }
        (Real::Big(x), Real::Big(y)) => Ok(Real::Big(x.add(&y)?)),
    }
}

/// `t − s` for a tower `t ≥ T` and `0 < s < T`.
fn sub_small_tower(t: TowerValue, s: f64) -> Result<Real> {
    match t.level {
        0 => Ok(Real::Small(t.residual - s)),
        1 => {
            let q = s * (-t.residual).exp();
            let r = t.residual + (-q).ln_1p();
            let v = normalize(1, r);
            Ok(if v.level == 0 { Real::Small(v.residual) } else { Real::Big(v) })
        }
        _ => Ok(Real::Big(t)),
    }
}

fn mul_real(a: Real, b: Real) -> Result<Real> {
    match (a, b) {
        (Real::Small(x), Real::Small(y)) => {
            let p = x * y;
            if p.abs() < threshold() {
                return Ok(Real::Small(p));
            }
            if p < 0.0 {
                return Err(QhError::TowerDomain("product is a negative huge number".into()));
            }
            Ok(Real::Big(normalize(0, p)))
        }
        (Real::Big(t), Real::Small(s)) | (Real::Small(s), Real::Big(t)) => {
            if s == 0.0 {
                return Ok(Real::Small(0.0));
            }
            if s < 0.0 {
                return Err(QhError::TowerDomain("product is a negative huge number".into()));
            }
            let v = t.mul(&TowerValue::from_f64(s)?)?;
            Ok(if v.level == 0 && v.residual < threshold() { Real::Small(v.residual) } else { Real::Big(v) })
        }
        (Real::Big(x), Real::Big(y)) => Ok(Real::Big(x.mul(&y)?)),
    }
}

impl Eq for TowerValue {}

impl Ord for TowerValue {
    fn cmp(&self, other: &Self) -> Ordering {
        self.level.cmp(&other.level).then(self.residual.total_cmp(&other.residual))
    }
}

impl PartialOrd for TowerValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for TowerValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.level {
            0 => write!(f, "{}", self.residual),
            l => write!(f, "exp^{l}({})", self.residual),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn t0(v: f64) -> TowerValue {
        TowerValue::from_f64(v).unwrap()
    }

    #[test]
    fn level_zero_arithmetic_is_exact() {
        assert_eq!(t0(2.0).add(&t0(3.0)).unwrap(), t0(5.0));
        assert_eq!(t0(2.0).mul(&t0(3.5)).unwrap(), t0(7.0));
        assert_eq!(t0(2.0).powf(10.0).unwrap(), t0(1024.0));
        assert_relative_eq!(t0(10.0).ln().unwrap().residual(), 10f64.ln(), max_relative = 1e-15);
        assert_relative_eq!(t0(1.5).exp().unwrap().residual(), 1.5f64.exp(), max_relative = 1e-15);
    }

    #[test]
    fn exp_raises_the_level() {
        let r = 1000.0;
        let x = TowerValue::new(1, r).unwrap();
        let y = x.exp().unwrap();
        assert_eq!((y.level(), y.residual()), (2, r));
        assert_eq!(y.ln().unwrap(), x);
    }

    #[test]
    fn absorption_keeps_the_big_term() {
        let big = TowerValue::new(2, 600.0).unwrap();
        let sum = big.add_tracked(&t0(1e6)).unwrap();
        assert_eq!(sum.value, big);
        assert!(sum.absorbed_ln <= -1e100);
        let none = t0(4.0).add_tracked(&t0(5.0)).unwrap();
        assert_eq!(none.absorbed_ln, f64::NEG_INFINITY);
    }

    #[test]
    fn normalization_boundaries() {
        let t = threshold();
        let below = t0(t * 0.999);
        let above = t0(t * 1.001);
        assert_eq!(below.level(), 0);
        assert_eq!(above.level(), 1);
        assert!(above > below);
        assert_eq!(TowerValue::new(3, 0.0).unwrap(), TowerValue::new(2, 1.0).unwrap());
        assert_eq!(TowerValue::new(2, 1.0).unwrap(), t0(1f64.exp().exp()));
    }

    #[test]
    fn level_one_sums_match_logsumexp() {
        let x = TowerValue::new(1, 5000.0).unwrap();
        let y = TowerValue::new(1, 4999.0).unwrap();
        let s = x.add(&y).unwrap();
        assert_eq!(s.level(), 1);
        assert_relative_eq!(s.residual(), 5000.0 + (-1f64).exp().ln_1p(), max_relative = 1e-15);
    }

    #[test]
    fn ln_ratio_saturates() {
        let x = TowerValue::new(3, 400.0).unwrap();
        assert_eq!(x.ln_ratio(&t0(2.0)), f64::INFINITY);
        assert_relative_eq!(t0(8.0).ln_ratio(&t0(2.0)), 4f64.ln(), max_relative = 1e-15);
        let a = TowerValue::new(1, 1000.0).unwrap();
        assert_relative_eq!(a.ln_ratio(&t0(1.0)), 1000.0);
    }

    #[test]
    fn log_of_small_values_is_rejected() {
        assert!(t0(0.5).ln().is_err());
        assert!(t0(0.0).exp().is_ok());
    }
}
