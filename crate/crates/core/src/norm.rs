//! Points in ℝⁿ with an ℓp norm, and polyline arcs parametrized by arclength.

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{QhError, Result};

/// Coordinate storage; inline up to three dimensions.
pub type Coords = SmallVec<[f64; 3]>;

/// The ℓp norm on ℝⁿ, `1 ≤ p ≤ ∞`, `n ≥ 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormSpec {
    #[serde(with = "crate::serde_ext")]
    p: f64,
    dim: usize,
}

impl NormSpec {
    pub fn new(p: f64, dim: usize) -> Result<Self> {
        if p.is_nan() || p < 1.0 {
            return Err(QhError::input(format!("ℓp exponent must satisfy p ≥ 1, got {p}")));
        }
        if dim < 2 {
            return Err(QhError::input(format!("dimension must be at least 2, got {dim}")));
        }
        Ok(NormSpec { p, dim })
    }

    pub fn euclidean(dim: usize) -> Self {
        NormSpec { p: 2.0, dim: dim.max(2) }
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_euclidean(&self) -> bool {
        self.p == 2.0
    }

    /// Re-validate after deserialization.
    pub fn validated(self) -> Result<Self> {
        NormSpec::new(self.p, self.dim)
    }

    /// Hölder conjugate exponent q with 1/p + 1/q = 1.
    pub fn dual_exponent(&self) -> f64 {
        if self.p == 1.0 {
            f64::INFINITY
        } else if self.p.is_infinite() {
            1.0
        } else {
            self.p / (self.p - 1.0)
        }
    }

    /// Checked norm of a coordinate tuple.
    pub fn norm(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(lp_norm(self.p, x))
    }

    /// Norm with dimensions assumed to match.
    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        lp_norm(self.p, x)
    }

    /// Distance between two points of this space.
    #[inline]
    pub fn dist(&self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        lp_dist(self.p, a, b)
    }

    /// Norm of the dual space, used for distances to hyperplanes.
    pub fn dual_eval(&self, x: &[f64]) -> f64 {
        lp_norm(self.dual_exponent(), x)
    }

    pub fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(QhError::input(format!(
                "expected {} coordinates, got {}",
                self.dim,
                x.len()
            )));
        }
        if x.iter().any(|c| !c.is_finite()) {
            return Err(QhError::input(format!("non-finite coordinate in {x:?}")));
        }
        Ok(())
    }
}

#[inline]
pub(crate) fn lp_norm(p: f64, x: &[f64]) -> f64 {
    if p == 2.0 {
        x.iter().map(|c| c * c).sum::<f64>().sqrt()
    } else if p == 1.0 {
        x.iter().map(|c| c.abs()).sum()
    } else if p.is_infinite() {
        x.iter().fold(0.0, |m, c| m.max(c.abs()))
    } else {
        // scale by the max coordinate to avoid overflow in |c|^p
        let m = x.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
        if m == 0.0 {
            return 0.0;
        }
        m * x.iter().map(|c| (c.abs() / m).powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

#[inline]
pub(crate) fn lp_dist(p: f64, a: &[f64], b: &[f64]) -> f64 {
    if p == 2.0 {
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
    } else {
        let d: Coords = a.iter().zip(b).map(|(x, y)| x - y).collect();
        lp_norm(p, &d)
    }
}

/// A point of ℝⁿ. The ambient norm lives with the domain or arc that owns it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(pub Coords);

impl Point {
    pub fn new(coords: &[f64]) -> Self {
        Point(Coords::from_slice(coords))
    }

    pub fn origin(dim: usize) -> Self {
        Point(smallvec::smallvec![0.0; dim])
    }

    /// `s · e_axis` in dimension `dim`.
    pub fn on_axis(dim: usize, axis: usize, s: f64) -> Self {
        let mut p = Point::origin(dim);
        p.0[axis] = s;
        p
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn lerp(&self, other: &Point, t: f64) -> Point {
        Point(self.0.iter().zip(&other.0).map(|(a, b)| a + t * (b - a)).collect())
    }

    pub fn sub(&self, other: &Point) -> Coords {
        self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect()
    }

    pub fn add_scaled(&self, dir: &[f64], s: f64) -> Point {
        Point(self.0.iter().zip(dir).map(|(a, d)| a + s * d).collect())
    }

    pub fn scaled(&self, s: f64) -> Point {
        Point(self.0.iter().map(|a| a * s).collect())
    }
}

impl From<Vec<f64>> for Point {
    fn from(v: Vec<f64>) -> Self {
        Point(Coords::from_vec(v))
    }
}

impl From<&[f64]> for Point {
    fn from(v: &[f64]) -> Self {
        Point::new(v)
    }
}

/// A polyline arc with strictly positive segment lengths.
#[derive(Debug, Clone, PartialEq)]
pub struct Arc {
    norm: NormSpec,
    vertices: Vec<Point>,
    cumulative: Vec<f64>,
}

impl Arc {
    pub fn new(norm: NormSpec, vertices: Vec<Point>) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(QhError::DegenerateArc(format!(
                "an arc needs at least two vertices, got {}",
                vertices.len()
            )));
        }
        let mut cumulative = Vec::with_capacity(vertices.len());
        cumulative.push(0.0);
        for (i, v) in vertices.iter().enumerate() {
            norm.check_dim(v.coords())?;
            if i > 0 {
                let len = norm.dist(vertices[i - 1].coords(), v.coords());
                if len <= 0.0 {
                    return Err(QhError::DegenerateArc(format!(
                        "consecutive duplicate vertices at index {i}"
                    )));
                }
                cumulative.push(cumulative[i - 1] + len);
            }
        }
        Ok(Arc { norm, vertices, cumulative })
    }

    pub fn segment(norm: NormSpec, a: Point, b: Point) -> Result<Self> {
        Arc::new(norm, vec![a, b])
    }

    pub fn norm(&self) -> NormSpec {
        self.norm
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    /// Arclength parameter of each vertex.
    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn length(&self) -> f64 {
        *self.cumulative.last().expect("arc has vertices")
    }

    pub fn start(&self) -> &Point {
        &self.vertices[0]
    }

    pub fn end(&self) -> &Point {
        self.vertices.last().expect("arc has vertices")
    }

    pub fn segments(&self) -> impl Iterator<Item = (&Point, &Point)> {
        self.vertices.windows(2).map(|w| (&w[0], &w[1]))
    }

    pub fn reversed(&self) -> Arc {
        let mut v = self.vertices.clone();
        v.reverse();
        Arc::new(self.norm, v).expect("reversal preserves validity")
    }

    fn check_param(&self, s: f64) -> Result<f64> {
        let len = self.length();
        let slack = 1e-12 * len.max(1.0);
        if !(s >= -slack && s <= len + slack) {
            return Err(QhError::input(format!(
                "arclength parameter {s} outside [0, {len}]"
            )));
        }
        Ok(s.clamp(0.0, len))
    }

    /// Segment index and local fraction for an in-range parameter.
    fn locate(&self, s: f64) -> (usize, f64) {
        let n = self.cumulative.len();
        let idx = match self.cumulative.binary_search_by(|c| c.total_cmp(&s)) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        };
        let a = self.cumulative[idx];
        let b = self.cumulative[idx + 1];
        (idx, ((s - a) / (b - a)).clamp(0.0, 1.0))
    }

    pub fn point_at(&self, s: f64) -> Result<Point> {
        let s = self.check_param(s)?;
        Ok(self.point_at_unchecked(s))
    }

    pub(crate) fn point_at_unchecked(&self, s: f64) -> Point {
        let (i, t) = self.locate(s.clamp(0.0, self.length()));
        if t == 0.0 {
            return self.vertices[i].clone();
        }
        if t == 1.0 {
            return self.vertices[i + 1].clone();
        }
        self.vertices[i].lerp(&self.vertices[i + 1], t)
    }

    /// Restriction to the parameter interval `[s1, s2]`.
    pub fn subarc(&self, s1: f64, s2: f64) -> Result<Arc> {
        let s1 = self.check_param(s1)?;
        let s2 = self.check_param(s2)?;
        if s1 > s2 {
            return Err(QhError::input(format!("subarc bounds reversed: {s1} > {s2}")));
        }
        if s2 - s1 <= 0.0 {
            return Err(QhError::DegenerateArc(format!("empty subarc at parameter {s1}")));
        }
        let first = self.point_at_unchecked(s1);
        let last = self.point_at_unchecked(s2);
        let mut verts = vec![first];
        for (v, &c) in self.vertices.iter().zip(&self.cumulative) {
            if c > s1 && c < s2 && v != verts.last().unwrap() {
                verts.push(v.clone());
            }
        }
        if &last != verts.last().unwrap() {
            verts.push(last);
        } else if verts.len() == 1 {
            return Err(QhError::DegenerateArc(format!(
                "subarc [{s1}, {s2}] collapses to a point"
            )));
        }
        // drop interior vertices that collapsed onto the new endpoints
        let mut cleaned: Vec<Point> = Vec::with_capacity(verts.len());
        for v in verts {
            let dup = cleaned
                .last()
                .is_some_and(|p| self.norm.dist(p.coords(), v.coords()) <= 0.0);
            if !dup {
                cleaned.push(v);
            }
        }
        if cleaned.len() < 2 {
            return Err(QhError::DegenerateArc(format!(
                "subarc [{s1}, {s2}] collapses to a point"
            )));
        }
        Arc::new(self.norm, cleaned)
    }

    /// Arclength parameter of the point on the arc closest to `p` (vertex-wise).
    pub fn nearest_vertex_param(&self, p: &Point) -> f64 {
        let mut best = (f64::INFINITY, 0.0);
        for (v, &c) in self.vertices.iter().zip(&self.cumulative) {
            let d = self.norm.dist(v.coords(), p.coords());
            if d < best.0 {
                best = (d, c);
            }
        }
        best.1
    }
}

/// On-disk arc format: `{"norm": {"p": 2, "dim": 2}, "points": [[x, y], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArcFile {
    pub norm: NormSpec,
    pub points: Vec<Vec<f64>>,
}

impl From<&Arc> for ArcFile {
    fn from(arc: &Arc) -> Self {
        ArcFile {
            norm: arc.norm,
            points: arc.vertices.iter().map(|p| p.coords().to_vec()).collect(),
        }
    }
}

impl TryFrom<ArcFile> for Arc {
    type Error = QhError;

    fn try_from(f: ArcFile) -> Result<Arc> {
        let norm = f.norm.validated()?;
        Arc::new(norm, f.points.into_iter().map(Point::from).collect())
    }
}

impl Serialize for Arc {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ArcFile::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Arc {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let f = ArcFile::deserialize(d)?;
        Arc::try_from(f).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn e2() -> NormSpec {
        NormSpec::euclidean(2)
    }

    #[test]
    fn norm_examples() {
        assert_eq!(NormSpec::new(2.0, 2).unwrap().norm(&[3.0, 4.0]).unwrap(), 5.0);
        assert_eq!(NormSpec::new(f64::INFINITY, 2).unwrap().norm(&[3.0, -4.0]).unwrap(), 4.0);
        assert_eq!(NormSpec::new(1.0, 2).unwrap().norm(&[3.0, -4.0]).unwrap(), 7.0);
        assert_relative_eq!(
            NormSpec::new(3.0, 2).unwrap().norm(&[1.0, 1.0]).unwrap(),
            2f64.powf(1.0 / 3.0),
            max_relative = 1e-15
        );
    }

    #[test]
    fn norm_rejects_bad_input() {
        assert!(NormSpec::new(0.5, 2).is_err());
        assert!(NormSpec::new(2.0, 1).is_err());
        assert!(e2().norm(&[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn dual_exponents() {
        assert_eq!(NormSpec::new(1.0, 2).unwrap().dual_exponent(), f64::INFINITY);
        assert_eq!(NormSpec::new(f64::INFINITY, 2).unwrap().dual_exponent(), 1.0);
        assert_relative_eq!(NormSpec::new(3.0, 2).unwrap().dual_exponent(), 1.5);
    }

    #[test]
    fn point_at_examples() {
        let a = Arc::segment(e2(), Point::new(&[0.0, 0.0]), Point::new(&[2.0, 0.0])).unwrap();
        assert_eq!(a.point_at(1.0).unwrap(), Point::new(&[1.0, 0.0]));
        assert_eq!(a.point_at(0.0).unwrap(), *a.start());

        let l = Arc::new(
            e2(),
            vec![Point::new(&[0.0, 0.0]), Point::new(&[1.0, 0.0]), Point::new(&[1.0, 1.0])],
        )
        .unwrap();
        assert_eq!(l.point_at(1.5).unwrap(), Point::new(&[1.0, 0.5]));
        assert!(l.point_at(2.5).is_err());
        assert!(l.point_at(-0.1).is_err());
    }

    #[test]
    fn subarc_examples() {
        let a = Arc::segment(e2(), Point::new(&[0.0, 0.0]), Point::new(&[4.0, 0.0])).unwrap();
        let s = a.subarc(1.0, 3.0).unwrap();
        assert_eq!(s.vertices(), &[Point::new(&[1.0, 0.0]), Point::new(&[3.0, 0.0])]);
        assert_eq!(s.length(), 2.0);
        assert_eq!(a.subarc(0.0, 4.0).unwrap(), a);

        let l = Arc::new(
            e2(),
            vec![Point::new(&[0.0, 0.0]), Point::new(&[1.0, 0.0]), Point::new(&[1.0, 1.0])],
        )
        .unwrap();
        let s = l.subarc(0.5, 1.5).unwrap();
        assert_eq!(
            s.vertices(),
            &[Point::new(&[0.5, 0.0]), Point::new(&[1.0, 0.0]), Point::new(&[1.0, 0.5])]
        );
        assert!(matches!(l.subarc(1.0, 1.0), Err(QhError::DegenerateArc(_))));
        assert!(l.subarc(1.5, 0.5).is_err());
        assert!(l.subarc(0.0, 3.0).is_err());
    }

    #[test]
    fn duplicates_rejected() {
        let p = Point::new(&[0.0, 0.0]);
        assert!(matches!(
            Arc::new(e2(), vec![p.clone(), p.clone(), Point::new(&[1.0, 0.0])]),
            Err(QhError::DegenerateArc(_))
        ));
        assert!(Arc::new(e2(), vec![p]).is_err());
    }

    #[test]
    fn arc_file_round_trip() {
        let json = r#"{"norm": {"p": "inf", "dim": 2}, "points": [[0, 0], [1, 2]]}"#;
        let arc: Arc = serde_json::from_str(json).unwrap();
        assert_eq!(arc.norm().p(), f64::INFINITY);
        assert_eq!(arc.length(), 2.0);
        let back = serde_json::to_string(&arc).unwrap();
        assert!(back.contains("\"inf\""));
        let again: Arc = serde_json::from_str(&back).unwrap();
        assert_eq!(again, arc);
    }
}
