//! Bounded scalar minimization.

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Result of a bracketed 1-D minimization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarMinimum {
    pub x: f64,
    pub value: f64,
    pub evaluations: usize,
}

/// Golden-section search for the minimum of `f` on `[lo, hi]`, stopping once
/// the bracket is narrower than `tol`.
pub fn golden_section(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> ScalarMinimum {
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut evaluations = 2;

    while b - a > tol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
        evaluations += 1;
    }

    if f1 <= f2 {
        ScalarMinimum {
            x: x1,
            value: f1,
            evaluations,
        }
    } else {
        ScalarMinimum {
            x: x2,
            value: f2,
            evaluations,
        }
    }
}

/// Evaluates `f` on `n ≥ 2` evenly spaced points of `[lo, hi]` (inclusive)
/// and returns `(index, x, value)` of the smallest, first one on ties.
pub fn coarse_grid(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> (usize, f64, f64) {
    assert!(n >= 2, "grid needs at least two points");
    let step = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|i| {
            let x = lo + step * i as f64;
            (i, x, f(x))
        })
        .fold((0, lo, f64::INFINITY), |best, cur| {
            if cur.2 < best.2 {
                cur
            } else {
                best
            }
        })
}
