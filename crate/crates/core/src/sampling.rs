//! Deterministic low-discrepancy sampling of arclength pairs.

/// Van der Corput radical inverse of `i` in base `b`.
pub fn radical_inverse(mut i: u64, b: u64) -> f64 {
    let inv = 1.0 / b as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % b) as f64;
        i /= b;
        f *= inv;
    }
    r
}

/// The `i`-th point of the (2, 3) Halton sequence, starting from `i = 1`.
pub fn halton2(i: u64) -> (f64, f64) {
    (radical_inverse(i, 2), radical_inverse(i, 3))
}

/// `budget` ordered parameter pairs `(u, v)` with `0 ≤ u < v ≤ len`.
///
/// The first pair is always `(0, len)`. The rest alternate between pairs
/// spread over the whole square and short pairs whose separation is
/// log-uniform down to `1e-3·len`.
pub fn arclength_pairs(len: f64, budget: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(budget);
    if budget == 0 || !(len > 0.0) {
        return out;
    }
    out.push((0.0, len));
    let mut i = 1u64;
    while out.len() < budget {
        let (h2, h3) = halton2(i);
        let pair = if i % 2 == 1 {
            (h2.min(h3) * len, h2.max(h3) * len)
        } else {
            let gap = len * 10f64.powf(-3.0 * h3);
            let start = h2 * (len - gap);
            (start, start + gap)
        };
        i += 1;
        if pair.1 - pair.0 > 1e-12 * len {
            out.push(pair);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radical_inverse_digits() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(3, 2), 0.75);
        assert!((radical_inverse(5, 3) - (2.0 / 3.0 + 1.0 / 9.0)).abs() < 1e-15);
    }

    #[test]
    fn pairs_are_ordered_and_inside() {
        let ps = arclength_pairs(2.0, 200);
        assert_eq!(ps.len(), 200);
        assert_eq!(ps[0], (0.0, 2.0));
        for &(u, v) in &ps {
            assert!(0.0 <= u && u < v && v <= 2.0);
        }
        let short = ps.iter().filter(|(u, v)| v - u < 0.02).count();
        assert!(short >= 20);
    }
}
