//! Pull-in estimate from the loop's Lyapunov analysis: the asymmetry
//! coefficient of the detector output around a cycle, the global stability
//! condition it must satisfy, and the resulting lower bound on the pull-in
//! range.

use crate::error::{Error, Result};
use crate::model::{pd_value, LoopParameters, FrequencyError};
use serde::Serialize;
use std::f64::consts::{FRAC_PI_2, PI};

/// Outcome of the pull-in estimate for one parameter set.
///
/// `beta0` is the critical asymmetry coefficient at the bound (the largest
/// value the stability condition admits), `pull_in_lower_bound` the frequency
/// below which every trajectory acquires lock. `bound_is_trivial` marks the
/// lag-filter case `tau2 = 0` where the analysis yields no information.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityReport {
    pub beta0: f64,
    pub condition_holds: bool,
    pub pull_in_lower_bound: f64,
    pub bound_is_trivial: bool,
}

fn check_open_range(omega: f64, kvco: f64) -> Result<()> {
    if omega <= 0.0 || omega >= kvco {
        return Err(Error::OutOfRange {
            omega,
            low: 0.0,
            high: kvco,
        });
    }
    Ok(())
}

/// Asymmetry coefficient of the detector output along a frequency-error
/// cycle, in closed form: `2*omega*kvco / (omega^2 + kvco^2)`.
///
/// Strictly increasing in `omega` on `(0, kvco)` with supremum 1 at the
/// hold-in boundary.
pub fn beta0(omega: FrequencyError, kvco: f64) -> Result<f64> {
    let om = omega.omega;
    check_open_range(om, kvco)?;
    Ok(2.0 * om * kvco / (om * om + kvco * kvco))
}

/// Same coefficient evaluated from its defining ratio of integrals over one
/// detector period, by adaptive quadrature. Serves as an independent check of
/// the closed form.
pub fn beta0_from_integrals(omega: FrequencyError, kvco: f64) -> Result<f64> {
    let om = omega.omega;
    check_open_range(om, kvco)?;
    let a = om / kvco;
    // Split at the detector breakpoints and at the two points where the
    // integrand v_e - a changes sign, so each piece is smooth (linear).
    let nodes = [
        0.0,
        FRAC_PI_2 * a,
        FRAC_PI_2,
        PI - FRAC_PI_2 * a,
        1.5 * PI,
        2.0 * PI,
    ];
    let tol = 1e-10 / (nodes.len() - 1) as f64;
    let mut numerator = 0.0;
    let mut denominator = 0.0;
    for pair in nodes.windows(2) {
        numerator += adaptive_simpson(&|s| -(pd_value(s) - a), pair[0], pair[1], tol);
        denominator += adaptive_simpson(&|s| (pd_value(s) - a).abs(), pair[0], pair[1], tol);
    }
    Ok(numerator / denominator)
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
        h / 6.0 * (fa + 4.0 * fm + fb)
    }
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, m - a);
        let right = simpson(fm, frm, fb, b - m);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    if a == b {
        return 0.0;
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = simpson(fa, fm, fb, b - a);
    recurse(f, a, b, fa, fm, fb, whole, tol, 48)
}

/// Right-hand side of the stability condition: the largest asymmetry
/// coefficient compatible with global convergence for these filter constants.
fn condition_threshold(params: &LoopParameters) -> f64 {
    let (t1, t2) = (params.tau1(), params.tau2());
    2.0 * ((t2 * (t1 + t2)).sqrt() - t2) / t1
}

/// True when the asymmetry coefficient at `omega` stays below the filter's
/// admissible threshold, i.e. the Lyapunov argument guarantees acquisition.
pub fn global_stability_condition(params: &LoopParameters, omega: FrequencyError) -> Result<bool> {
    if params.tau2() == 0.0 {
        return Err(Error::ConditionInapplicable);
    }
    let b = beta0(omega, params.kvco())?;
    Ok(b < condition_threshold(params))
}

/// Lower bound on the pull-in range: the frequency where the asymmetry
/// coefficient reaches the admissible threshold.
///
/// For `tau2 = 0` the condition is vacuous and the bound degenerates to 0,
/// flagged trivial.
pub fn pull_in_lower_bound(params: &LoopParameters) -> StabilityReport {
    if params.tau2() == 0.0 {
        return StabilityReport {
            beta0: 0.0,
            condition_holds: false,
            pull_in_lower_bound: 0.0,
            bound_is_trivial: true,
        };
    }
    let threshold = condition_threshold(params);
    let c = 1.0 / threshold;
    let radicand = c * c - 1.0;
    // c >= 1 holds for every tau1 > 0 (c < 1 would need
    // 4*tau2*(tau1+tau2) > (tau1 + 2*tau2)^2, i.e. tau1^2 < 0), so this
    // clamp guards rounding only: threshold >= 1 would make the whole
    // hold-in range pull-in.
    let bound = if radicand < 0.0 {
        params.kvco()
    } else {
        (c - radicand.sqrt()) * params.kvco()
    };
    StabilityReport {
        beta0: threshold,
        condition_holds: true,
        pull_in_lower_bound: bound,
        bound_is_trivial: false,
    }
}
