//! Bracketing root finders for monotone scalar functions.

/// Bisection on `[lo, hi]` for a function with `g(lo)` and `g(hi)` of
/// opposite (or zero) sign. Iterates until the bracket can no longer be split
/// in floating point or its width drops to `x_tol`, and returns the endpoint
/// with the smaller residual.
pub fn bisect<F>(mut g: F, mut lo: f64, mut hi: f64, x_tol: f64) -> f64
where
    F: FnMut(f64) -> f64,
{
    let mut g_lo = g(lo);
    let mut g_hi = g(hi);
    if g_lo == 0.0 {
        return lo;
    }
    if g_hi == 0.0 {
        return hi;
    }
    debug_assert!(
        g_lo.signum() != g_hi.signum(),
        "bisect: no sign change on [{lo}, {hi}]"
    );
    for _ in 0..2200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= x_tol {
            break;
        }
        let g_mid = g(mid);
        if g_mid == 0.0 {
            return mid;
        }
        if g_mid.signum() == g_lo.signum() {
            lo = mid;
            g_lo = g_mid;
        } else {
            hi = mid;
            g_hi = g_mid;
        }
    }
    if g_lo.abs() <= g_hi.abs() {
        lo
    } else {
        hi
    }
}

/// Solves `g(x) = target` for nondecreasing `g` on `[lo, hi]`; the caller
/// guarantees `g(lo) <= target <= g(hi)`.
pub fn invert_increasing<F>(mut g: F, target: f64, lo: f64, hi: f64, x_tol: f64) -> f64
where
    F: FnMut(f64) -> f64,
{
    bisect(|x| g(x) - target, lo, hi, x_tol)
}
