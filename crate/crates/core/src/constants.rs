//! The explicit constant chain a₀ → a₁ → a₂ → a₃ → a₆ → a₅ → a₄ → b,
//! evaluated literally in exact integers (a₀) and log-tower arithmetic.

use num_bigint::BigUint;
use num_traits::{FromPrimitive, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::error::{QhError, Result};
use crate::report::{Margin, Report};
use crate::tower::TowerValue;

/// Inputs: John constant `a`, inner uniformity constant `c_prime`,
/// neargeodesic constant `c0`, and the CQH pair `(m, c)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantInputs {
    pub a: f64,
    pub c_prime: f64,
    pub c0: f64,
    #[serde(rename = "M")]
    pub m: f64,
    #[serde(rename = "C")]
    pub c: f64,
}

impl ConstantInputs {
    pub fn new(a: f64, c_prime: f64, c0: f64, m: f64, c: f64) -> Self {
        ConstantInputs { a, c_prime, c0, m, c }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite();
        if !(ok(self.a) && self.a >= 1.0) {
            return Err(QhError::input(format!("a = {} must be ≥ 1", self.a)));
        }
        if !(ok(self.c_prime) && self.c_prime >= 1.0) {
            return Err(QhError::input(format!("c' = {} must be ≥ 1", self.c_prime)));
        }
        // c0 = 1 is admitted: the chain is continuous there and geodesics reach it
        if !(ok(self.c0) && self.c0 >= 1.0) {
            return Err(QhError::input(format!("c0 = {} must be ≥ 1", self.c0)));
        }
        if !(ok(self.m) && self.m >= 1.0) {
            return Err(QhError::input(format!("M = {} must be ≥ 1", self.m)));
        }
        if !(ok(self.c) && self.c >= 0.0) {
            return Err(QhError::input(format!("C = {} must be ≥ 0", self.c)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantSet {
    pub inputs: ConstantInputs,
    #[serde(with = "biguint_decimal")]
    pub a0: BigUint,
    pub a1: TowerValue,
    pub a2: TowerValue,
    pub a3: TowerValue,
    pub a4: TowerValue,
    pub a5: TowerValue,
    pub a6: TowerValue,
    pub b: TowerValue,
    /// Largest upper bound on `ln(dropped / kept)` over all absorbed sums.
    #[serde(with = "crate::serde_ext")]
    pub absorbed_ln: f64,
}

mod biguint_decimal {
    use num_bigint::BigUint;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_str_radix(10))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
        let s = String::deserialize(d)?;
        BigUint::parse_bytes(s.as_bytes(), 10)
            .ok_or_else(|| serde::de::Error::custom(format!("bad integer {s:?}")))
    }
}

fn tv(v: f64) -> Result<TowerValue> {
    TowerValue::from_f64(v)
}

/// `16·⌊c′ + 4a²c₀c′M + C + 4a²c₀⌋⁴` in exact integers.
pub fn a0_exact(i: &ConstantInputs) -> Result<BigUint> {
    let q = 4.0 * i.a * i.a * i.c0;
    let bracket = (i.c_prime + q * i.c_prime * i.m + i.c + q).floor();
    let b = BigUint::from_f64(bracket)
        .ok_or_else(|| QhError::input(format!("bracket {bracket} is not representable")))?;
    Ok(BigUint::from(16u32) * b.pow(4))
}

pub fn compute_constants(inputs: ConstantInputs) -> Result<ConstantSet> {
    compute_with_a2(inputs, None)
}

/// Same chain with a₂ replaced, for probing the later stages on small values.
pub fn override_a2(inputs: ConstantInputs, a2: TowerValue) -> Result<ConstantSet> {
    compute_with_a2(inputs, Some(a2))
}

fn compute_with_a2(i: ConstantInputs, a2_override: Option<TowerValue>) -> Result<ConstantSet> {
    i.validate()?;
    let (a, cp, c0, m, c) = (i.a, i.c_prime, i.c0, i.m, i.c);
    let q = 4.0 * a * a * c0;
    let mut absorbed = f64::NEG_INFINITY;
    let mut add = |x: &TowerValue, y: &TowerValue| -> Result<TowerValue> {
        let t = x.add_tracked(y)?;
        absorbed = absorbed.max(t.absorbed_ln);
        Ok(t.value)
    };

    let a0 = a0_exact(&i)?;
    let a0f = a0
        .to_f64()
        .filter(|v| v.is_finite())
        .ok_or_else(|| QhError::input("a0 exceeds floating range"))?;

    // a1 = e^{3(C+1)(a0+M)}
    let a1 = tv(3.0 * (c + 1.0) * (a0f + m))?.exp()?;

    // a2 = (1+2a1)^{4a²c0c′M²+1} · e^{C+4a²c0M+4a²c0CM}
    let a2 = match a2_override {
        Some(v) => v,
        None => {
            let base = add(&TowerValue::one(), &tv(2.0)?.mul(&a1)?)?;
            let power = base.powf(q * cp * m * m + 1.0)?;
            power.mul(&tv(c + q * m + q * c * m)?.exp()?)?
        }
    };

    // a3 = a2 + a2²
    let a3 = add(&a2, &a2.mul(&a2)?)?;

    // a6 = (8a3)^{4c′c0M} · a² · e^{2C}
    let a6 = tv(8.0)?.mul(&a3)?.powf(4.0 * cp * c0 * m)?.mul(&tv(a * a)?)?.mul(&tv(2.0 * c)?.exp()?)?;

    // a5 = a6^{4a²c0M+C}
    let a5 = a6.powf(q * m + c)?;

    // a4 = a5^{2c′M}
    let a4 = a5.powf(2.0 * cp * m)?;

    // b = 4a4c0 · e^{a4c0}
    let a4c0 = a4.mul(&tv(c0)?)?;
    let b = tv(4.0)?.mul(&a4c0)?.mul(&a4c0.exp()?)?;

    Ok(ConstantSet { inputs: i, a0, a1, a2, a3, a4, a5, a6, b, absorbed_ln: absorbed })
}

/// Check `measured ≤ b` in tower order. The margin is the level gap when
/// the levels differ and the residual gap otherwise.
pub fn compare_to_measurement(cs: &ConstantSet, measured: f64) -> Report {
    let mut r = Report::new("cone_constant_vs_b")
        .param("measured", measured)
        .param("b", cs.b);
    let Ok(m) = TowerValue::from_f64(measured) else {
        r.push(Margin::custom("measured <= b", measured, f64::NAN, f64::NAN, false));
        return r;
    };
    let level_gap = cs.b.level() as i64 - m.level() as i64;
    let residual_gap = cs.b.residual() - m.residual();
    r.set_param("level_gap", level_gap);
    r.set_param("residual_gap", residual_gap);
    let margin = if level_gap != 0 { level_gap as f64 } else { residual_gap };
    r.push(Margin::custom("measured <= b", measured, cs.b.residual(), margin, m <= cs.b));
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> ConstantInputs {
        ConstantInputs::new(1.0, 1.0, 1.0, 1.0, 0.0)
    }

    #[test]
    fn first_constants_for_unit_inputs() {
        let cs = compute_constants(unit()).unwrap();
        assert_eq!(cs.a0, BigUint::from(104976u32));
        assert_eq!(cs.a1.level(), 1);
        assert_eq!(cs.a1.residual(), 314931.0);
    }

    #[test]
    fn chain_levels_for_unit_inputs() {
        let cs = compute_constants(unit()).unwrap();
        for v in [cs.a2, cs.a3, cs.a4, cs.a5, cs.a6] {
            assert_eq!(v.level(), 1);
        }
        assert_eq!(cs.b.level(), 2);
        // ln ln b = ln(a4 c0) + negligible
        let ln_a4 = cs.a4.residual();
        assert!((cs.b.residual() - ln_a4).abs() <= 1e-9 * ln_a4);
        // ln a2 = 5 ln(1 + 2a1) + 4
        let expect = 5.0 * (314931.0 + 2f64.ln()) + 4.0;
        assert!((cs.a2.residual() - expect).abs() <= 1e-12 * expect);
    }

    #[test]
    fn overriding_a2_with_one() {
        let cs = override_a2(unit(), TowerValue::one()).unwrap();
        assert_eq!(cs.a3, TowerValue::from_f64(2.0).unwrap());
    }

    #[test]
    fn floor_applies_before_the_power() {
        let i = ConstantInputs::new(1.0, 1.5, 1.0, 1.0, 0.2);
        // bracket = 1.5 + 6 + 0.2 + 4 = 11.7 → 11
        assert_eq!(a0_exact(&i).unwrap(), BigUint::from(16u32 * 11u32.pow(4)));
    }

    #[test]
    fn compare_reports_level_slack() {
        let cs = compute_constants(unit()).unwrap();
        let r = compare_to_measurement(&cs, 0.82);
        assert!(r.pass);
        assert_eq!(r.params["level_gap"], 2);
        let mut synthetic = cs.clone();
        synthetic.b = TowerValue::from_f64(3.5).unwrap();
        let r = compare_to_measurement(&synthetic, 3.5);
        assert!(r.pass);
        assert_eq!(r.margin_list[0].margin, 0.0);
    }

    #[test]
    fn inputs_are_validated() {
        assert!(compute_constants(ConstantInputs::new(0.5, 1.0, 1.0, 1.0, 0.0)).is_err());
        assert!(compute_constants(ConstantInputs::new(1.0, 1.0, 1.0, 1.0, -1.0)).is_err());
    }
}
