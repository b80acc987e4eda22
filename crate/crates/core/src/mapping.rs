//! Closed-form maps between domains, evaluated forward only.

use serde::{Deserialize, Serialize};

use crate::domain::Domain;
use crate::error::{QhError, Result};
use crate::norm::Point;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Mapping {
    Identity,
    /// `x ↦ factor·x`.
    Scale { factor: f64 },
    /// `x ↦ A x + b`, with `A` given row by row.
    Affine { matrix: Vec<Vec<f64>>, offset: Vec<f64> },
    /// `z ↦ z^exponent` on ℝ² read as ℂ, principal branch for non-integers.
    ComplexPower { exponent: f64 },
    /// `x ↦ x / |x|²` (Euclidean).
    Inversion,
}

impl Mapping {
    /// The squaring map `(x, y) ↦ (x² − y², 2xy)`.
    pub fn squaring() -> Self {
        Mapping::ComplexPower { exponent: 2.0 }
    }

    pub fn id(&self) -> String {
        match self {
            Mapping::Identity => "identity".into(),
            Mapping::Scale { factor } => format!("scale({factor})"),
            Mapping::Affine { .. } => "affine".into(),
            Mapping::ComplexPower { exponent } => format!("complex_power({exponent})"),
            Mapping::Inversion => "inversion".into(),
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            Mapping::Identity => Ok(()),
            Mapping::Scale { factor } if factor.is_finite() && *factor != 0.0 => Ok(()),
            Mapping::Scale { factor } => Err(QhError::input(format!("bad scale factor {factor}"))),
            Mapping::Affine { matrix, offset } => {
                let square = matrix.len() == dim && matrix.iter().all(|r| r.len() == dim);
                if !square || offset.len() != dim {
                    return Err(QhError::input(format!("affine map must be {dim}×{dim} plus offset")));
                }
                Ok(())
            }
            Mapping::ComplexPower { exponent } => {
                if dim != 2 {
                    return Err(QhError::input("complex power maps act on the plane"));
                }
                if !(exponent.is_finite() && *exponent > 0.0) {
                    return Err(QhError::input(format!("bad exponent {exponent}")));
                }
                Ok(())
            }
            Mapping::Inversion => Ok(()),
        }
    }

    pub fn apply(&self, x: &Point) -> Result<Point> {
        self.validate(x.dim())?;
        let c = x.coords();
        Ok(match self {
            Mapping::Identity => x.clone(),
            Mapping::Scale { factor } => x.scaled(*factor),
            Mapping::Affine { matrix, offset } => Point::from(
                matrix
                    .iter()
                    .zip(offset)
                    .map(|(row, b)| row.iter().zip(c).map(|(a, v)| a * v).sum::<f64>() + b)
                    .collect::<Vec<f64>>(),
            ),
            Mapping::ComplexPower { exponent } => {
                let (re, im) = complex_power(c[0], c[1], *exponent);
                Point::new(&[re, im])
            }
            Mapping::Inversion => {
                let r2: f64 = c.iter().map(|v| v * v).sum();
                if r2 == 0.0 {
                    return Err(QhError::input("inversion is undefined at the origin"));
                }
                x.scaled(1.0 / r2)
            }
        })
    }

    /// Image of `x`, required to lie in `target`.
    pub fn map_into(&self, x: &Point, target: &Domain) -> Result<Point> {
        let y = self.apply(x)?;
        if y.dim() != target.dim() || !target.contains(y.coords()) {
            return Err(QhError::Mapping { point: x.0.to_vec() });
        }
        Ok(y)
    }
}

/// Integer exponents use repeated multiplication so that small powers are
/// exact where the arithmetic allows.
fn complex_power(x: f64, y: f64, e: f64) -> (f64, f64) {
    if e.fract() == 0.0 && e <= 64.0 {
        let (mut re, mut im) = (1.0, 0.0);
        for _ in 0..e as u32 {
            (re, im) = (re * x - im * y, re * y + im * x);
        }
        return (re, im);
    }
    let r = x.hypot(y).powf(e);
    let t = y.atan2(x) * e;
    (r * t.cos(), r * t.sin())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Shape;
    use crate::norm::NormSpec;

    #[test]
    fn squaring_in_real_coordinates() {
        let p = Mapping::squaring().apply(&Point::new(&[0.3, 0.4])).unwrap();
        assert!((p.coords()[0] - (0.09 - 0.16)).abs() < 1e-15);
        assert!((p.coords()[1] - 0.24).abs() < 1e-15);
    }

    #[test]
    fn half_disc_lands_in_slit_disc() {
        let n = NormSpec::euclidean(2);
        let half = Domain::new(
            n,
            Shape::Intersection {
                parts: vec![
                    Shape::Ball { center: vec![0.0, 0.0], radius: 1.0 },
                    Shape::HalfSpace { normal: vec![0.0, 1.0], offset: 0.0 },
                ],
            },
        )
        .unwrap();
        let slit = Domain::slit_disc(n, vec![[0.0, 1.0]]).unwrap();
        for p in half.sample_interior(200, 1e-3, 7) {
            Mapping::squaring().map_into(&p, &slit).unwrap();
        }
    }

    #[test]
    fn outside_image_names_the_point() {
        let n = NormSpec::euclidean(2);
        let small = Domain::ball(n, &[0.0, 0.0], 0.5).unwrap();
        let err = Mapping::Scale { factor: 2.0 }.map_into(&Point::new(&[0.3, 0.0]), &small);
        assert_eq!(err, Err(QhError::Mapping { point: vec![0.3, 0.0] }));
    }

    #[test]
    fn inversion_and_json() {
        let p = Mapping::Inversion.apply(&Point::new(&[2.0, 0.0])).unwrap();
        assert_eq!(p.coords(), &[0.5, 0.0]);
        let m: Mapping = serde_json::from_str(r#"{"type":"scale","factor":2}"#).unwrap();
        assert_eq!(m, Mapping::Scale { factor: 2.0 });
        assert!(Mapping::Inversion.apply(&Point::origin(3)).is_err());
    }
}
