//! Bisection on a bracketed monotone function.

use crate::error::{Error, Result};

/// Root of `f` on `[lo, hi]`, requiring a sign change over the bracket.
///
/// Iterates until the residual magnitude drops below `f_tol` or the bracket
/// collapses to floating-point resolution.
pub fn bisect<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, f_tol: f64, max_iter: usize) -> Result<f64> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::domain("bisection needs finite bounds with lo < hi"));
    }
    if !(f_tol > 0.0) {
        return Err(Error::domain("bisection tolerance must be positive"));
    }
    let mut a = lo;
    let mut b = hi;
    let fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Infeasible(format!(
            "no sign change over the bracket: f({a:e}) = {fa:e}, f({b:e}) = {fb:e}"
        )));
    }
    let mut fa = fa;
    for _ in 0..max_iter {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            return Ok(mid); // bracket at floating-point resolution
        }
        let fm = f(mid);
        if fm.abs() <= f_tol {
            return Ok(mid);
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    Err(Error::Numerical {
        message: format!("bisection did not converge within {max_iter} iterations"),
        achieved: Some(0.5 * (a + b)),
        error_bound: Some(0.5 * (b - a)),
    })
}
