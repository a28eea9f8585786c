//! Scalar solvers shared by the Young-function and norm code.

const MAX_BRACKET_STEPS: usize = 2200;
const MAX_BISECT_STEPS: usize = 2200;

/// Brackets the crossing `g(x) = target` of a nondecreasing `g` on `(0, ∞)`
/// by doubling/halving from `x = 1`, then bisects until the bracket is
/// narrower than `rel_tol` relative to its upper end.
///
/// Returns `(lo, hi)` with `g(lo) < target <= g(hi)`. A `lo` of zero means the
/// crossing is below the smallest positive double the search reached.
pub(crate) fn bracket_crossing<F>(g: F, target: f64, rel_tol: f64) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    let (mut lo, mut hi);
    if g(1.0) >= target {
        hi = 1.0;
        lo = 0.5;
        let mut steps = 0;
        while g(lo) >= target {
            hi = lo;
            lo *= 0.5;
            steps += 1;
            if lo == 0.0 || steps > MAX_BRACKET_STEPS {
                return (0.0, hi);
            }
        }
    } else {
        lo = 1.0;
        hi = 2.0;
        let mut steps = 0;
        while g(hi) < target {
            lo = hi;
            hi *= 2.0;
            steps += 1;
            if !hi.is_finite() || steps > MAX_BRACKET_STEPS {
                return (lo, f64::INFINITY);
            }
        }
    }

    for _ in 0..MAX_BISECT_STEPS {
        if hi - lo <= rel_tol * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (lo, hi)
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Maximum of a concave `g` on `[0, ∞)` that is eventually decreasing.
///
/// The right end of the search interval is doubled until `g` stops
/// increasing, then golden-section search narrows the maximizer.
pub(crate) fn maximize_concave<F>(g: F, rel_tol: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    let mut hi = 1.0_f64;
    let mut steps = 0;
    while g(2.0 * hi) > g(hi) && steps < MAX_BRACKET_STEPS {
        hi *= 2.0;
        steps += 1;
    }
    let (mut a, mut b) = (0.0_f64, 2.0 * hi);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let (mut g1, mut g2) = (g(x1), g(x2));
    let mut best = g(0.0).max(g(b));
    for _ in 0..400 {
        if b - a <= rel_tol * b {
            break;
        }
        if g1 < g2 {
            a = x1;
            x1 = x2;
            g1 = g2;
            x2 = a + INV_PHI * (b - a);
            g2 = g(x2);
        } else {
            b = x2;
            x2 = x1;
            g2 = g1;
            x1 = b - INV_PHI * (b - a);
            g1 = g(x1);
        }
        best = best.max(g1).max(g2);
    }
    best.max(g1).max(g2)
}
