//! Bracketing root finders for monotone scalar functions.

/// Bisection on an increasing or decreasing `f` with `f(lo)` and `f(hi)` of
/// opposite sign. Stops when the bracket is narrower than `x_tol` or after
/// `max_iter` halvings.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, x_tol: f64, max_iter: usize) -> Option<f64> {
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Some(lo);
    }
    if f_hi == 0.0 {
        return Some(hi);
    }
    if f_lo.signum() == f_hi.signum() || f_lo.is_nan() || f_hi.is_nan() {
        return None;
    }
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() <= x_tol || mid == lo || mid == hi {
            return Some(mid);
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Some(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Solves `f(x) = 0` for increasing `f` by expanding `[lo, hi]` geometrically
/// (by `step`, doubling each time) until it brackets a sign change.
pub fn solve_increasing<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, x_tol: f64) -> Option<f64> {
    let mut step = (hi - lo).abs().max(1.0);
    let mut expansions = 0;
    while f(lo) > 0.0 {
        lo -= step;
        step *= 2.0;
        expansions += 1;
        if expansions > 60 {
            return None;
        }
    }
    step = (hi - lo).abs().max(1.0);
    expansions = 0;
    while f(hi) < 0.0 {
        hi += step;
        step *= 2.0;
        expansions += 1;
        if expansions > 60 {
            return None;
        }
    }
    bisect(f, lo, hi, x_tol, 400)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_sqrt_two() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14, 200).unwrap();
        assert!((r - std::f64::consts::SQRT_2).abs() < 1e-13);
    }

    #[test]
    fn no_sign_change() {
        assert!(bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-12, 100).is_none());
    }

    #[test]
    fn expands_bracket() {
        let r = solve_increasing(|x| x - 1234.5, -1.0, 1.0, 1e-10).unwrap();
        assert!((r - 1234.5).abs() < 1e-8);
        let r = solve_increasing(|x| x + 77.0, 0.0, 1.0, 1e-10).unwrap();
        assert!((r + 77.0).abs() < 1e-8);
    }
}
