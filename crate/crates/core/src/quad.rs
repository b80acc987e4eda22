//! Adaptive Simpson quadrature of the quasihyperbolic density 1/d_D along
//! straight segments.

use crate::domain::Domain;

const MAX_DEPTH: u32 = 60;

/// Default relative tolerance for quasihyperbolic lengths.
pub const DEFAULT_TOL: f64 = 1e-8;

struct SegmentIntegrand<'a> {
    dom: &'a Domain,
    a: &'a [f64],
    b: &'a [f64],
    len: f64,
}

impl SegmentIntegrand<'_> {
    #[inline]
    fn dist(&self, t: f64) -> f64 {
        let n = self.a.len();
        let mut buf = [0.0; 8];
        let x = &mut buf[..n];
        for k in 0..n {
            x[k] = self.a[k] + t * (self.b[k] - self.a[k]);
        }
        self.dom.boundary_distance(x)
    }
}

/// Quasihyperbolic length of the segment `[a, b]`, or `+∞` when the segment
/// touches the boundary at quadrature resolution.
pub fn qh_segment_length(dom: &Domain, a: &[f64], b: &[f64], tol: f64) -> f64 {
    assert!(a.len() <= 8, "quadrature buffers support up to 8 dimensions");
    let len = dom.norm().dist(a, b);
    if len == 0.0 {
        return 0.0;
    }
    let f = SegmentIntegrand { dom, a, b, len };
    let (d0, dm, d1) = (f.dist(0.0), f.dist(0.5), f.dist(1.0));
    if d0 <= 0.0 || dm <= 0.0 || d1 <= 0.0 {
        return f64::INFINITY;
    }
    let whole = simpson(1.0, len / d0, len / dm, len / d1);
    adapt(&f, 0.0, 1.0, d0, dm, d1, whole, tol, MAX_DEPTH)
}

#[inline]
fn simpson(h: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    h / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adapt(
    f: &SegmentIntegrand,
    lo: f64,
    hi: f64,
    d_lo: f64,
    d_mid: f64,
    d_hi: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let mid = 0.5 * (lo + hi);
    let h = hi - lo;
    let (dl, dr) = (f.dist(0.5 * (lo + mid)), f.dist(0.5 * (mid + hi)));
    if dl <= 0.0 || dr <= 0.0 {
        return f64::INFINITY;
    }
    let len = f.len;
    let left = simpson(0.5 * h, len / d_lo, len / dl, len / d_mid);
    let right = simpson(0.5 * h, len / d_mid, len / dr, len / d_hi);
    let refined = left + right;
    // panels longer than a quarter of the local clearance are always split
    let forced = len * h > 0.25 * d_mid;
    if depth == 0 || (!forced && (refined - whole).abs() <= 15.0 * tol * refined) {
        return refined + (refined - whole) / 15.0;
    }
    adapt(f, lo, mid, d_lo, dl, d_mid, left, tol, depth - 1)
        + adapt(f, mid, hi, d_mid, dr, d_hi, right, tol, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norm::NormSpec;
    use approx::assert_relative_eq;

    #[test]
    fn radial_segment_in_ball() {
        let b = Domain::unit_ball(NormSpec::euclidean(2));
        let v = qh_segment_length(&b, &[0.0, 0.0], &[0.9, 0.0], 1e-10);
        assert_relative_eq!(v, 10f64.ln(), max_relative = 1e-9);
    }

    #[test]
    fn vertical_segment_in_half_plane() {
        let h = Domain::upper_half_space(NormSpec::euclidean(2));
        let v = qh_segment_length(&h, &[0.0, 1.0], &[0.0, std::f64::consts::E], 1e-10);
        assert_relative_eq!(v, 1.0, max_relative = 1e-9);
    }

    #[test]
    fn chord_against_brute_force() {
        let b = Domain::unit_ball(NormSpec::euclidean(2));
        let v = qh_segment_length(&b, &[-0.5, 0.3], &[0.5, 0.3], DEFAULT_TOL);
        // 10^6-panel composite midpoint rule
        let n = 1_000_000;
        let brute: f64 = (0..n)
            .map(|i| {
                let x = -0.5 + (i as f64 + 0.5) / n as f64;
                1.0 / (1.0 - (x * x + 0.09f64).sqrt())
            })
            .sum::<f64>()
            / n as f64;
        assert!((v - brute).abs() < 1e-6, "{v} vs {brute}");
        // the sup of d on the chord is 0.7, so v ≥ 1 / 0.7
        assert!(v >= 1.0 / 0.7);
    }

    #[test]
    fn touching_the_boundary_is_infinite() {
        let s = Domain::slit_disc(NormSpec::euclidean(2), vec![[0.0, 1.0]]).unwrap();
        assert!(qh_segment_length(&s, &[0.5, 0.1], &[0.5, -0.1], DEFAULT_TOL).is_infinite());
    }
}
