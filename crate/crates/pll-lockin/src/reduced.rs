//! Dimensionless form of the model used by the lock-in analysis: a scaled
//! vertical coordinate turns the second-order loop into a first-order system
//! for `y(theta_e)` on each linear detector segment, governed by four
//! dimensionless constants.

use crate::error::{Error, Result};
use crate::model::{
    pd_slope, pd_value, pd_value_on_segment, segment_sign, LoopParameters, FrequencyError,
    PhaseState,
};
use serde::Serialize;
use std::f64::consts::{FRAC_PI_2, PI};

/// The four dimensionless constants of the reduced system.
///
/// `xi` is the damping ratio on rising segments and decides the shape of the
/// stable equilibria (`xi < 1` focus, `xi = 1` degenerate node, `xi > 1`
/// node); `eta` plays the same role with opposite sign convention on falling
/// segments; `rho = sqrt(|xi^2 - 1|)` and `kappa = sqrt(eta^2 + 1)` are the
/// corresponding oscillation/saddle rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReducedParameters {
    pub xi: f64,
    pub eta: f64,
    pub rho: f64,
    pub kappa: f64,
}

/// State in reduced coordinates, with the reduced time it was sampled at.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReducedState {
    pub y: f64,
    pub theta_e: f64,
    pub tau: f64,
}

/// Coefficients of the coordinate change: `y = a*omega - b*(x + tau2*v_e)`,
/// and original time runs `a` seconds per reduced time unit.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Scales {
    pub a: f64,
    pub b: f64,
}

pub(crate) fn scales(params: &LoopParameters) -> Scales {
    let ts = params.tau_sum();
    let k = params.kvco();
    Scales {
        a: (PI * ts / (2.0 * k)).sqrt(),
        b: (PI * k / (2.0 * ts)).sqrt(),
    }
}

/// Compute the dimensionless constants for a parameter set.
pub fn reduced_parameters(params: &LoopParameters) -> ReducedParameters {
    let g = (2.0 / PI) * params.kvco();
    let s = (g * params.tau_sum()).sqrt();
    let xi = (g * params.tau2() + 1.0) / (2.0 * s);
    let eta = (g * params.tau2() - 1.0) / (2.0 * s);
    ReducedParameters {
        xi,
        eta,
        rho: (xi * xi - 1.0).abs().sqrt(),
        kappa: (eta * eta + 1.0).sqrt(),
    }
}

/// Map a model state into reduced coordinates (at reduced time zero).
pub fn to_reduced(
    state: PhaseState,
    params: &LoopParameters,
    omega: FrequencyError,
) -> ReducedState {
    let sc = scales(params);
    let filtered = state.x + params.tau2() * pd_value(state.theta_e);
    ReducedState {
        y: sc.a * omega.omega - sc.b * filtered,
        theta_e: state.theta_e,
        tau: 0.0,
    }
}

/// Invert the coordinate change back to the model state.
pub fn from_reduced(
    state: ReducedState,
    params: &LoopParameters,
    omega: FrequencyError,
) -> PhaseState {
    let sc = scales(params);
    let x = (sc.a * omega.omega - state.y) / sc.b - params.tau2() * pd_value(state.theta_e);
    PhaseState::new(x, state.theta_e)
}

/// Derivative `(dy/dtau, d theta_e/dtau)` of the reduced system. On a rising
/// segment this collapses to `dy/dtau = -(theta_e - shift) - 2*xi*y`, on a
/// falling one to `dy/dtau = (theta_e - saddle) + 2*eta*y`, both with the
/// frequency shift `pi*omega/(2*kvco)` folded in.
pub fn reduced_vector_field(
    state: ReducedState,
    params: &LoopParameters,
    omega: FrequencyError,
) -> (f64, f64) {
    let k = params.kvco();
    let damping = (PI / (2.0 * k * params.tau_sum())).sqrt();
    let dy = -FRAC_PI_2 * pd_value(state.theta_e)
        - damping * (1.0 + k * params.tau2() * pd_slope(state.theta_e)) * state.y
        + PI * omega.omega / (2.0 * k);
    (dy, state.y)
}

/// Reduced field with the detector segment pinned, for the segment-splitting
/// integrator. Linear in `(y, theta_e)` for a fixed segment.
pub(crate) fn reduced_field_on_segment(
    y: f64,
    theta_e: f64,
    segment: f64,
    params: &LoopParameters,
    omega: FrequencyError,
) -> [f64; 2] {
    let k = params.kvco();
    let damping = (PI / (2.0 * k * params.tau_sum())).sqrt();
    let slope = segment_sign(segment) * (2.0 / PI);
    let dy = -FRAC_PI_2 * pd_value_on_segment(theta_e, segment)
        - damping * (1.0 + k * params.tau2() * slope) * y
        + PI * omega.omega / (2.0 * k);
    [dy, y]
}

/// Value of the saddle separatrix at the detector peak `theta_e = pi/2`,
/// where it leaves the saddle's linear neighborhood: the stable eigenline
/// evaluated one half-segment to the left of the saddle.
pub fn separatrix_initial_value(params: &LoopParameters, omega: FrequencyError) -> Result<f64> {
    let om = omega.omega;
    let k = params.kvco();
    if om <= 0.0 || om >= k {
        return Err(Error::OutOfRange { omega: om, low: 0.0, high: k });
    }
    let rp = reduced_parameters(params);
    Ok((rp.kappa - rp.eta) * (FRAC_PI_2 - PI * om / (2.0 * k)))
}
