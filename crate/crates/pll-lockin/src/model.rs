//! Baseband model of the loop: triangular phase-detector characteristic,
//! state equations, equilibria and their classification, and the hold-in
//! and dissipativity facts that follow directly from the model.

use crate::error::{Error, Result};
use serde::Serialize;
use std::f64::consts::{FRAC_PI_2, PI};
use std::ops::RangeInclusive;

/// Physical constants of the loop: lead-lag filter time constants and VCO gain.
///
/// `tau1 > 0`, `tau2 >= 0`, `kvco > 0`. `tau2 = 0` degenerates to a lag
/// filter; every constructor enforces the domain so downstream math can rely
/// on it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LoopParameters {
    tau1: f64,
    tau2: f64,
    kvco: f64,
}

impl LoopParameters {
    pub fn new(tau1: f64, tau2: f64, kvco: f64) -> Result<Self> {
        if !tau1.is_finite() || !tau2.is_finite() || !kvco.is_finite() {
            return Err(Error::InvalidParameters(format!(
                "non-finite value: tau1 = {tau1}, tau2 = {tau2}, kvco = {kvco}"
            )));
        }
        if tau1 <= 0.0 {
            return Err(Error::InvalidParameters(format!("tau1 = {tau1} must be > 0")));
        }
        if tau2 < 0.0 {
            return Err(Error::InvalidParameters(format!("tau2 = {tau2} must be >= 0")));
        }
        if kvco <= 0.0 {
            return Err(Error::InvalidParameters(format!("kvco = {kvco} must be > 0")));
        }
        Ok(Self { tau1, tau2, kvco })
    }

    pub fn tau1(&self) -> f64 {
        self.tau1
    }

    pub fn tau2(&self) -> f64 {
        self.tau2
    }

    pub fn kvco(&self) -> f64 {
        self.kvco
    }

    /// Sum of the filter time constants, the common denominator of the model.
    pub fn tau_sum(&self) -> f64 {
        self.tau1 + self.tau2
    }
}

/// Free-running frequency error between reference and VCO, rad/s, signed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrequencyError {
    pub omega: f64,
}

impl FrequencyError {
    pub fn new(omega: f64) -> Self {
        Self { omega }
    }
}

impl From<f64> for FrequencyError {
    fn from(omega: f64) -> Self {
        Self { omega }
    }
}

/// State of the baseband model: loop-filter state `x` and phase error
/// `theta_e` (a cylinder coordinate, unrestricted).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseState {
    pub x: f64,
    pub theta_e: f64,
}

impl PhaseState {
    pub fn new(x: f64, theta_e: f64) -> Self {
        Self { x, theta_e }
    }
}

/// Index of the linear segment of the detector characteristic containing
/// `theta_e`. Segment `s` covers `[s*pi - pi/2, s*pi + pi/2)`; even segments
/// rise, odd segments fall. Breakpoints belong to the segment on their right.
pub(crate) fn segment_index(theta_e: f64) -> f64 {
    ((theta_e + FRAC_PI_2) / PI).floor()
}

pub(crate) fn segment_sign(segment: f64) -> f64 {
    1.0 - 2.0 * segment.rem_euclid(2.0)
}

/// Detector output on a given linear segment, extended linearly beyond the
/// segment ends. Used by the integrator to keep a whole step on one segment.
pub(crate) fn pd_value_on_segment(theta_e: f64, segment: f64) -> f64 {
    segment_sign(segment) * (2.0 / PI) * (theta_e - segment * PI)
}

/// Triangular phase-detector characteristic: continuous, piecewise linear,
/// 2*pi-periodic, with peaks +1 at `pi/2` and -1 at `-pi/2`.
pub fn pd_value(theta_e: f64) -> f64 {
    pd_value_on_segment(theta_e, segment_index(theta_e))
}

/// Slope of the detector characteristic: `+2/pi` on rising segments, `-2/pi`
/// on falling ones. Breakpoints take the right-hand slope.
pub fn pd_slope(theta_e: f64) -> f64 {
    segment_sign(segment_index(theta_e)) * (2.0 / PI)
}

/// Time derivative `(dx/dt, d theta_e/dt)` of the baseband model at `state`.
pub fn vector_field(
    state: PhaseState,
    params: &LoopParameters,
    omega: FrequencyError,
) -> (f64, f64) {
    let ve = pd_value(state.theta_e);
    let ts = params.tau_sum();
    (
        (-state.x + params.tau1() * ve) / ts,
        omega.omega - params.kvco() * (state.x + params.tau2() * ve) / ts,
    )
}

/// Stability kind of an equilibrium, decided by the characteristic polynomial
/// of the linearization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EquilibriumKind {
    Saddle,
    StableNode,
    StableDegenerateNode,
    StableFocus,
}

/// One equilibrium of the model together with its index and stability kind.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquilibriumPoint {
    pub x_eq: f64,
    pub theta_eq: f64,
    pub index_m: i32,
    pub kind: EquilibriumKind,
}

/// Equilibria for indices in `m_range`. Even `m` gives the stable family,
/// odd `m` the saddles. Fails when `|omega| >= kvco`: past the hold-in
/// boundary the field has no zeros at all.
pub fn equilibria(
    params: &LoopParameters,
    omega: FrequencyError,
    m_range: RangeInclusive<i32>,
) -> Result<Vec<EquilibriumPoint>> {
    let om = omega.omega;
    let k = params.kvco();
    if om.abs() >= k {
        return Err(Error::NoEquilibria { omega: om, kvco: k });
    }
    let x_eq = params.tau1() * om / k;
    let mut points = Vec::new();
    for m in m_range {
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        let theta_eq = sign * FRAC_PI_2 * om / k + PI * m as f64;
        let mut point = EquilibriumPoint {
            x_eq,
            theta_eq,
            index_m: m,
            kind: EquilibriumKind::Saddle,
        };
        point.kind = classify_equilibrium(params, &point);
        points.push(point);
    }
    Ok(points)
}

/// Relative width of the band around a zero discriminant inside which a
/// stable equilibrium counts as a degenerate node.
pub const DEGENERACY_BAND: f64 = 1e-9;

/// Classify an equilibrium from the characteristic polynomial
/// `lambda^2 + (1 + kvco*tau2*v')/(tau1+tau2) * lambda + kvco*v'/(tau1+tau2)`
/// of the linearized model, where `v'` is the detector slope at the point.
///
/// Negative slope makes the constant term negative, hence a saddle. For
/// positive slope both coefficients are positive and the discriminant decides
/// between node, degenerate node and focus.
pub fn classify_equilibrium(params: &LoopParameters, eq: &EquilibriumPoint) -> EquilibriumKind {
    let vp = pd_slope(eq.theta_eq);
    let ts = params.tau_sum();
    let damping = (1.0 + params.kvco() * params.tau2() * vp) / ts;
    let restoring = params.kvco() * vp / ts;
    if restoring < 0.0 {
        return EquilibriumKind::Saddle;
    }
    let disc = damping * damping - 4.0 * restoring;
    let scale = damping * damping + 4.0 * restoring;
    if disc.abs() <= DEGENERACY_BAND * scale {
        EquilibriumKind::StableDegenerateNode
    } else if disc > 0.0 {
        EquilibriumKind::StableNode
    } else {
        EquilibriumKind::StableFocus
    }
}

/// Upper end of the hold-in range `[0, kvco)`: the largest frequency error
/// below which a stable equilibrium exists.
pub fn hold_in_frequency(params: &LoopParameters) -> f64 {
    params.kvco()
}

/// Radius of the absorbing strip for the filter state: every trajectory
/// eventually satisfies `|x| < tau1` and never leaves again.
pub fn dissipativity_bound(params: &LoopParameters) -> f64 {
    params.tau1()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn reference_params() -> LoopParameters {
        LoopParameters::new(0.0633, 0.0225, 250.0).unwrap()
    }

    #[test]
    fn parameter_validation_rejects_bad_domains() {
        assert!(LoopParameters::new(0.0, 0.1, 1.0).is_err());
        assert!(LoopParameters::new(-0.1, 0.1, 1.0).is_err());
        assert!(LoopParameters::new(0.1, -0.1, 1.0).is_err());
        assert!(LoopParameters::new(0.1, 0.1, 0.0).is_err());
        assert!(LoopParameters::new(f64::NAN, 0.1, 1.0).is_err());
        assert!(LoopParameters::new(0.1, 0.0, 1.0).is_ok());
    }

    #[test]
    fn pd_value_segment_endpoints() {
        assert_eq!(pd_value(0.0), 0.0);
        assert_eq!(pd_value(FRAC_PI_2), 1.0);
        assert_abs_diff_eq!(pd_value(PI), 0.0, epsilon = 1e-15);
        assert_eq!(pd_value(-FRAC_PI_2), -1.0);
        assert_abs_diff_eq!(pd_value(2.5 * PI), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn pd_slope_segments_and_breakpoints() {
        assert_eq!(pd_slope(0.0), 2.0 / PI);
        assert_eq!(pd_slope(PI), -2.0 / PI);
        // right-hand convention at the peak
        assert_eq!(pd_slope(FRAC_PI_2), -2.0 / PI);
        assert_eq!(pd_slope(-FRAC_PI_2), 2.0 / PI);
        assert_eq!(pd_slope(3.0 * FRAC_PI_2), 2.0 / PI);
    }

    #[test]
    fn pd_value_odd_symmetry() {
        for &theta in &[0.1, 0.7, 1.3, 2.0, 2.9, 4.4, 6.1] {
            assert_eq!(pd_value(-theta), -pd_value(theta));
        }
    }

    #[test]
    fn vector_field_reference_point() {
        let p = reference_params();
        let (dx, dth) = vector_field(
            PhaseState::new(0.0, FRAC_PI_2),
            &p,
            FrequencyError::new(0.0),
        );
        assert_relative_eq!(dx, 0.737_762_237_762_237_8, max_relative = 1e-12);
        assert_relative_eq!(dth, -65.559_440_559_440_56, max_relative = 1e-12);
    }

    #[test]
    fn vector_field_zero_detector_output() {
        let p = reference_params();
        let (dx, dth) = vector_field(PhaseState::new(0.0, 0.0), &p, FrequencyError::new(10.0));
        assert_eq!(dx, 0.0);
        assert_eq!(dth, 10.0);
    }

    #[test]
    fn vector_field_vanishes_at_equilibria() {
        let p = reference_params();
        let omega = FrequencyError::new(73.732);
        for eq in equilibria(&p, omega, -2..=2).unwrap() {
            let (dx, dth) = vector_field(PhaseState::new(eq.x_eq, eq.theta_eq), &p, omega);
            assert!(dx.abs() < 1e-12, "dx = {dx:e} at m = {}", eq.index_m);
            assert!(dth.abs() < 1e-12, "dth = {dth:e} at m = {}", eq.index_m);
            assert_abs_diff_eq!(pd_value(eq.theta_eq), omega.omega / p.kvco(), epsilon = 1e-12);
        }
    }

    #[test]
    fn equilibria_at_zero_frequency_error() {
        let p = reference_params();
        let eqs = equilibria(&p, FrequencyError::new(0.0), 0..=1).unwrap();
        assert_eq!(eqs.len(), 2);
        assert_eq!(eqs[0].x_eq, 0.0);
        assert_eq!(eqs[0].theta_eq, 0.0);
        assert_eq!(eqs[0].kind, EquilibriumKind::StableFocus);
        assert_eq!(eqs[1].theta_eq, PI);
        assert_eq!(eqs[1].kind, EquilibriumKind::Saddle);
    }

    #[test]
    fn equilibria_reference_location() {
        let p = reference_params();
        let eqs = equilibria(&p, FrequencyError::new(73.732), 0..=0).unwrap();
        assert_relative_eq!(eqs[0].x_eq, 0.018_668_942_4, max_relative = 1e-9);
        assert_relative_eq!(eqs[0].theta_eq, 0.463_271_819_068_965_25, max_relative = 1e-12);
        assert_eq!(eqs[0].kind, EquilibriumKind::StableFocus);
    }

    #[test]
    fn no_equilibria_on_or_past_the_hold_in_boundary() {
        let p = reference_params();
        assert!(matches!(
            equilibria(&p, FrequencyError::new(250.0), 0..=0),
            Err(Error::NoEquilibria { .. })
        ));
        assert!(matches!(
            equilibria(&p, FrequencyError::new(-251.0), 0..=0),
            Err(Error::NoEquilibria { .. })
        ));
        assert!(equilibria(&p, FrequencyError::new(249.999), 0..=0).is_ok());
    }

    #[test]
    fn node_classification_for_heavy_lead() {
        let p = LoopParameters::new(0.5, 2.0, 250.0).unwrap();
        let eqs = equilibria(&p, FrequencyError::new(10.0), 0..=1).unwrap();
        assert_eq!(eqs[0].kind, EquilibriumKind::StableNode);
        assert_eq!(eqs[1].kind, EquilibriumKind::Saddle);
    }

    #[test]
    fn hold_in_and_dissipativity_are_direct_reads() {
        let p = reference_params();
        assert_eq!(hold_in_frequency(&p), 250.0);
        assert_eq!(dissipativity_bound(&p), 0.0633);
        let q = LoopParameters::new(0.5, 0.1, 1000.0).unwrap();
        assert_eq!(hold_in_frequency(&q), 1000.0);
        assert_eq!(dissipativity_bound(&q), 0.5);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            // Adding one period changes the argument by a rounded constant, so
            // equality holds to slope times representation error rather than
            // bit-exactly.
            #[test]
            fn periodicity(theta in -100.0f64..100.0) {
                let diff = (pd_value(theta + 2.0 * PI) - pd_value(theta)).abs();
                prop_assert!(diff <= 1e-12);
            }

            #[test]
            fn bounded_by_one(theta in -1e6f64..1e6) {
                prop_assert!(pd_value(theta).abs() <= 1.0 + 1e-9);
            }

            #[test]
            fn continuity_at_breakpoints(m in -50i32..50, eps in 1e-12f64..1e-6) {
                let b = FRAC_PI_2 + PI * m as f64;
                let jump = (pd_value(b - eps) - pd_value(b + eps)).abs();
                prop_assert!(jump <= (2.0 / PI) * 2.0 * eps + 1e-13);
            }

            #[test]
            fn odd_about_zero(theta in -50.0f64..50.0) {
                prop_assert_eq!(pd_value(-theta), -pd_value(theta));
            }

            #[test]
            fn odd_about_pi(delta in -1.5f64..1.5) {
                let sum = pd_value(PI + delta) + pd_value(PI - delta);
                prop_assert!(sum.abs() <= 1e-14);
            }

            #[test]
            fn classification_matches_quadratic_eigenvalues(
                log_tau1 in -3.0f64..1.0,
                log_tau2 in -4.0f64..1.0,
                log_k in 0.0f64..3.0,
            ) {
                let p = LoopParameters::new(
                    10f64.powf(log_tau1),
                    10f64.powf(log_tau2),
                    10f64.powf(log_k),
                ).unwrap();
                for eq in equilibria(&p, FrequencyError::new(0.0), 0..=1).unwrap() {
                    let vp = pd_slope(eq.theta_eq);
                    let b = (1.0 + p.kvco() * p.tau2() * vp) / p.tau_sum();
                    let c = p.kvco() * vp / p.tau_sum();
                    let disc = b * b - 4.0 * c;
                    let expected = if c < 0.0 {
                        EquilibriumKind::Saddle
                    } else if disc.abs() <= DEGENERACY_BAND * (b * b + 4.0 * c) {
                        EquilibriumKind::StableDegenerateNode
                    } else if disc > 0.0 {
                        // two distinct negative real roots
                        let r1 = (-b + disc.sqrt()) / 2.0;
                        let r2 = (-b - disc.sqrt()) / 2.0;
                        prop_assert!(r1 < 0.0 && r2 < 0.0);
                        EquilibriumKind::StableNode
                    } else {
                        // complex pair with negative real part
                        prop_assert!(-b / 2.0 < 0.0);
                        EquilibriumKind::StableFocus
                    };
                    prop_assert_eq!(eq.kind, expected);
                }
            }
        }
    }
}
