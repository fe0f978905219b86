//! Exact conservative lock-in frequency. The saddle separatrix is pushed
//! across one falling and one rising detector segment by closed-form first
//! integrals, and the frequency where it meets the displaced equilibrium is
//! the root of a transcendental system in two unknowns: the separatrix
//! height where the segments meet, and the frequency itself.

use crate::error::{Error, Result};
use crate::model::{LoopParameters, FrequencyError};
use crate::reduced::{reduced_parameters, scales, separatrix_initial_value, ReducedParameters};
use crate::roots::brent;
use serde::Serialize;
use std::f64::consts::{FRAC_PI_2, PI};

/// Which damping regime the rising-segment dynamics fall into, and hence
/// which closed form of the rising-segment first integral applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum XiCase {
    XiGreater,
    XiEqualOne,
    XiLess,
}

/// Half-width of the band around `xi = 1` treated as the degenerate case.
/// The generic formulas divide by `rho = sqrt(|xi^2 - 1|)` and lose all
/// precision as it vanishes; continuity across the band is tested separately.
pub const XI_CASE_BAND: f64 = 1e-9;

/// Case selection for a computed `xi`.
pub fn xi_case(rp: &ReducedParameters) -> XiCase {
    if (rp.xi - 1.0).abs() < XI_CASE_BAND {
        XiCase::XiEqualOne
    } else if rp.xi > 1.0 {
        XiCase::XiGreater
    } else {
        XiCase::XiLess
    }
}

/// Solution of the two-variable lock-in system: the frequency, the
/// separatrix height `y_ab` where it crosses from the falling into the
/// rising segment, the case the rising-segment integral ran under, the final
/// residuals of the two equations, and the outer solver's iteration count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LockInSolution {
    pub omega_lc: f64,
    pub y_ab: f64,
    pub case_tag: XiCase,
    pub residual_a: f64,
    pub residual_b: f64,
    pub iterations: u32,
}

/// Everything fixed for one `(params, omega)` evaluation.
struct Setting {
    k: f64,
    shift: f64,
    rp: ReducedParameters,
    case: XiCase,
}

impl Setting {
    fn new(params: &LoopParameters, omega: f64, forced: Option<XiCase>) -> Self {
        let rp = reduced_parameters(params);
        Setting {
            k: params.kvco(),
            shift: PI * omega / (2.0 * params.kvco()),
            rp,
            case: forced.unwrap_or_else(|| xi_case(&rp)),
        }
    }

    /// Rising-segment first integral N(y, theta_e), constant along
    /// trajectories of the rising-segment linear system.
    fn n_value(&self, y: f64, theta_e: f64) -> Result<f64> {
        let (xi, rho) = (self.rp.xi, self.rp.rho);
        let w = theta_e - self.shift;
        match self.case {
            XiCase::XiGreater => {
                let f1 = y + (xi - rho) * w;
                let f2 = y + (xi + rho) * w;
                if f1 == 0.0 || f2 == 0.0 {
                    return Err(Error::SingularPoint { y, theta_e });
                }
                Ok(0.5
                    * ((rho - xi) / rho * f1.abs().ln() + (rho + xi) / rho * f2.abs().ln()))
            }
            XiCase::XiEqualOne => {
                let u = y + w;
                if u == 0.0 {
                    return Err(Error::SingularPoint { y, theta_e });
                }
                Ok(w / u + (2.0 * u.abs()).ln())
            }
            XiCase::XiLess => {
                let q = y * y + 2.0 * xi * y * w + w * w;
                if q == 0.0 {
                    return Err(Error::SingularPoint { y, theta_e });
                }
                Ok(0.5 * q.ln() - xi / rho * ((y + xi * w) / (rho * w)).atan())
            }
        }
    }

    /// Falling-segment first integral M(y, theta_e) together with its two
    /// linear factors, whose signs the solvers watch.
    fn m_parts(&self, y: f64, theta_e: f64) -> Result<(f64, f64, f64)> {
        let (eta, kappa) = (self.rp.eta, self.rp.kappa);
        let p = theta_e + PI + self.shift;
        let f1 = y + (kappa - eta) * p;
        let f2 = y - (kappa + eta) * p;
        if f1 == 0.0 || f2 == 0.0 {
            return Err(Error::SingularPoint { y, theta_e });
        }
        let m = 0.5
            * ((kappa - eta) / kappa * f1.abs().ln() + (kappa + eta) / kappa * f2.abs().ln());
        Ok((m, f1, f2))
    }

    /// Value the rising-segment integral must take at the segment's left
    /// edge, i.e. at `theta_e = -pi/2`. For the focus case the arctangent
    /// branch jumps by `pi*xi/rho` where the separatrix crosses
    /// `theta_e = shift`, which the level constant has to absorb.
    fn n_target(&self, params: &LoopParameters, omega: f64) -> Result<f64> {
        let s_half = separatrix_initial_value(params, FrequencyError::new(omega))?;
        let at_peak = self.n_value(s_half, FRAC_PI_2)?;
        Ok(match self.case {
            XiCase::XiLess => at_peak + PI * self.rp.xi / self.rp.rho,
            _ => at_peak,
        })
    }

    /// Lower edge of the admissible height interval at `theta_e = -pi/2`:
    /// just above the integral's logarithmic asymptote for the node cases,
    /// just above zero for the focus case.
    fn bracket_low(&self) -> f64 {
        let w_minus = -FRAC_PI_2 - self.shift;
        let asymptote = match self.case {
            XiCase::XiGreater => -(self.rp.xi + self.rp.rho) * w_minus,
            XiCase::XiEqualOne => -w_minus,
            XiCase::XiLess => 0.0,
        };
        asymptote + 1e-12
    }

    fn bracket_high_start(&self, omega: f64) -> f64 {
        (self.rp.kappa - self.rp.eta + self.rp.xi + self.rp.rho) * PI * (1.0 + omega / self.k)
    }
}

/// Rising-segment first integral, dispatching on the natural case of `xi`.
pub fn first_integral_b(
    y: f64,
    theta_e: f64,
    params: &LoopParameters,
    omega: FrequencyError,
) -> Result<f64> {
    Setting::new(params, omega.omega, None).n_value(y, theta_e)
}

/// Falling-segment first integral.
pub fn first_integral_a(
    y: f64,
    theta_e: f64,
    params: &LoopParameters,
    omega: FrequencyError,
) -> Result<f64> {
    Setting::new(params, omega.omega, None)
        .m_parts(y, theta_e)
        .map(|(m, _, _)| m)
}

fn solve_y_ab_in(setting: &Setting, params: &LoopParameters, omega: f64) -> Result<f64> {
    let target = setting.n_target(params, omega)?;
    let lo = setting.bracket_low();
    // The integral is strictly increasing in y on (lo, inf): dN/dy = y/Q
    // with Q > 0 there, so one sign change is all there can be.
    let f = |y: f64| -> Result<f64> {
        if matches!(setting.case, XiCase::XiGreater | XiCase::XiEqualOne) && y <= lo - 1e-12 {
            return Err(Error::SignFlip {
                context: "separatrix height solve stepped across the asymptote",
            });
        }
        Ok(setting.n_value(y, -FRAC_PI_2)? - target)
    };
    let f_lo = f(lo)?;
    let mut hi = setting.bracket_high_start(omega).max(2.0 * lo + 1.0);
    let mut bracketed = false;
    for _ in 0..60 {
        if f_lo.signum() != f(hi)?.signum() {
            bracketed = true;
            break;
        }
        hi *= 2.0;
    }
    if !bracketed {
        return Err(Error::NoBracket {
            context: "separatrix height solve: level line not reached above the asymptote",
        });
    }
    let root = brent(f, lo, hi, 1e-10, 200, "separatrix height solve")?;
    Ok(root.root)
}

/// Height of the separatrix at `theta_e = -pi/2`, where it leaves the rising
/// segment: the unique solution of the rising-segment level equation.
pub fn solve_y_ab(params: &LoopParameters, omega: FrequencyError) -> Result<f64> {
    let setting = Setting::new(params, omega.omega, None);
    solve_y_ab_in(&setting, params, omega.omega)
}

/// Same height computed from the exponentiated (product/power) form of the
/// level equation instead of the logarithmic form. Only the node cases have
/// a pure product form; used to check the two are the same equation.
pub fn solve_y_ab_exponentiated(params: &LoopParameters, omega: FrequencyError) -> Result<f64> {
    let om = omega.omega;
    let setting = Setting::new(params, om, None);
    let (xi, rho) = (setting.rp.xi, setting.rp.rho);
    let s_half = separatrix_initial_value(params, omega)?;
    let w_plus = FRAC_PI_2 - setting.shift;
    let w_minus = -FRAC_PI_2 - setting.shift;
    let product = |y: f64, w: f64| -> Result<f64> {
        match setting.case {
            XiCase::XiGreater => {
                let f1 = y + (xi - rho) * w;
                let f2 = y + (xi + rho) * w;
                if f1 <= 0.0 || f2 <= 0.0 {
                    return Err(Error::SignFlip {
                        context: "product-form height solve left the positive-factor region",
                    });
                }
                Ok(f1.powf((rho - xi) / rho) * f2.powf((rho + xi) / rho))
            }
            XiCase::XiEqualOne => {
                let u = y + w;
                if u <= 0.0 {
                    return Err(Error::SignFlip {
                        context: "product-form height solve left the positive-factor region",
                    });
                }
                Ok(u * (w / u).exp())
            }
            XiCase::XiLess => Err(Error::InvalidInput(
                "the focus case has no pure product form; use solve_y_ab".into(),
            )),
        }
    };
    let target = product(s_half, w_plus)?;
    let lo = setting.bracket_low();
    let f = |y: f64| Ok(product(y, w_minus)? - target);
    let f_lo = f(lo)?;
    let mut hi = setting.bracket_high_start(om).max(2.0 * lo + 1.0);
    let mut bracketed = false;
    for _ in 0..60 {
        if f_lo.signum() != f(hi)?.signum() {
            bracketed = true;
            break;
        }
        hi *= 2.0;
    }
    if !bracketed {
        return Err(Error::NoBracket {
            context: "product-form height solve: level not reached above the asymptote",
        });
    }
    Ok(brent(f, lo, hi, 1e-10, 200, "product-form height solve")?.root)
}

/// Signature of the factor signs entering the outer residual; the residual
/// only compares level values meaningfully while these stay fixed.
type FactorSigns = [bool; 4];

fn outer_residual(
    params: &LoopParameters,
    omega: f64,
    forced: Option<XiCase>,
) -> Result<(f64, FactorSigns)> {
    let setting = Setting::new(params, omega, forced);
    let y_ab = solve_y_ab_in(&setting, params, omega)?;
    let y_t = 2.0 * scales(params).a * omega;
    let theta_t = setting.shift - PI;
    let (m_t, t1, t2) = setting.m_parts(y_t, theta_t)?;
    let (m_ab, a1, a2) = setting.m_parts(y_ab, -FRAC_PI_2)?;
    Ok((
        m_t - m_ab,
        [t1 > 0.0, t2 > 0.0, a1 > 0.0, a2 > 0.0],
    ))
}

fn conservative_lock_in_with(
    params: &LoopParameters,
    forced: Option<XiCase>,
) -> Result<LockInSolution> {
    let k = params.kvco();
    let case = forced.unwrap_or_else(|| xi_case(&reduced_parameters(params)));

    // Scan the admissible frequency interval, skipping frequencies where the
    // separatrix construction degenerates, and bracket the residual's sign
    // change between two evaluations with the same factor-sign signature.
    const SCAN_POINTS: usize = 64;
    let grid = |i: usize| k * (1e-3 + (1.0 - 2e-3) * i as f64 / (SCAN_POINTS - 1) as f64);
    let mut previous: Option<(f64, f64, FactorSigns)> = None;
    let mut bracket = None;
    for i in 0..SCAN_POINTS {
        let om = grid(i);
        let Ok((r, signs)) = outer_residual(params, om, forced) else {
            continue;
        };
        if let Some((prev_om, prev_r, prev_signs)) = previous {
            if prev_r.signum() != r.signum() && prev_signs == signs {
                bracket = Some((prev_om, om, signs));
                break;
            }
        }
        previous = Some((om, r, signs));
    }
    let Some((lo, hi, signs)) = bracket else {
        return Err(Error::NoBracket {
            context: "lock-in solve: outer residual has no sign change on the frequency scan",
        });
    };

    let mut iterations = 0u32;
    let f = |om: f64| -> Result<f64> {
        let (r, s) = outer_residual(params, om, forced)?;
        if s != signs {
            return Err(Error::SignFlip {
                context: "lock-in solve: factor signs changed inside the frequency bracket",
            });
        }
        Ok(r)
    };
    let root = brent(f, lo, hi, 1e-8 * k, 200, "lock-in frequency solve")?;
    iterations += root.iterations;

    let omega_lc = root.root;
    let setting = Setting::new(params, omega_lc, forced);
    let y_ab = solve_y_ab_in(&setting, params, omega_lc)?;
    let residual_b = setting.n_value(y_ab, -FRAC_PI_2)? - setting.n_target(params, omega_lc)?;
    Ok(LockInSolution {
        omega_lc,
        y_ab,
        case_tag: case,
        residual_a: root.f_root,
        residual_b,
        iterations,
    })
}

/// Conservative lock-in frequency: the unique frequency in `(0, kvco)` where
/// the saddle separatrix, continued analytically across one falling and one
/// rising segment, passes exactly through the equilibrium displaced by a
/// sign flip of the frequency error.
pub fn conservative_lock_in(params: &LoopParameters) -> Result<LockInSolution> {
    conservative_lock_in_with(params, None)
}

/// Lock-in solve with the rising-segment case pinned rather than dispatched
/// from `xi`. Exists to test continuity of the case split: near `xi = 1` the
/// pinned degenerate-case result must agree with the natural one.
pub fn conservative_lock_in_forced_case(
    params: &LoopParameters,
    case: XiCase,
) -> Result<LockInSolution> {
    conservative_lock_in_with(params, Some(case))
}
