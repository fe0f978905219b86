//! Numerical cross-checks for the closed-form lock-in analysis: direct
//! integration of the loop equations with detector-segment splitting, saddle
//! separatrix tracing in reduced coordinates, and bisection searches that
//! recover the lock-in frequencies from trajectories alone. Everything here
//! is independent of the first-integral machinery, so agreement between the
//! two routes is a meaningful check.

use crate::error::{Error, Result};
use crate::model::{
    pd_value_on_segment, segment_index, FrequencyError, LoopParameters, PhaseState,
};
use crate::ode::{
    first_segment_exit, integrate, DriverOptions, IntegrationEnd, State2, StepControl,
};
use crate::reduced::{
    reduced_field_on_segment, reduced_parameters, scales, from_reduced, ReducedState,
};
use std::cell::Cell;
use std::f64::consts::{FRAC_PI_2, PI};

/// Tolerance window accepted by the integrating operations.
const TOL_WINDOW: (f64, f64) = (1e-13, 1e-3);
/// Offset window accepted for separatrix seeding.
const EPSILON_WINDOW: (f64, f64) = (1e-10, 1e-4);
/// Reduced-time budget for any single trace or classification run.
const TIME_BUDGET: f64 = 1e3;
/// Capture/slip balls use this radius, in state units.
const BALL_RADIUS: f64 = 1e-3;

fn check_integration_tol(tol: f64) -> Result<()> {
    if !(tol.is_finite() && (TOL_WINDOW.0..=TOL_WINDOW.1).contains(&tol)) {
        return Err(Error::InvalidInput(format!(
            "integration tolerance {tol:e} outside [{:e}, {:e}]",
            TOL_WINDOW.0, TOL_WINDOW.1
        )));
    }
    Ok(())
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon.is_finite() && (EPSILON_WINDOW.0..=EPSILON_WINDOW.1).contains(&epsilon)) {
        return Err(Error::InvalidInput(format!(
            "separatrix seed offset {epsilon:e} outside [{:e}, {:e}]",
            EPSILON_WINDOW.0, EPSILON_WINDOW.1
        )));
    }
    Ok(())
}

fn check_frequency_tol(tol: f64) -> Result<()> {
    if !(tol.is_finite() && tol > 0.0 && tol <= 0.1) {
        return Err(Error::InvalidInput(format!(
            "frequency tolerance {tol:e} outside (0, 0.1]"
        )));
    }
    Ok(())
}

fn check_lock_range(params: &LoopParameters, omega: f64) -> Result<()> {
    if !(omega > 0.0 && omega < params.kvco()) {
        return Err(Error::OutOfRange {
            omega,
            low: 0.0,
            high: params.kvco(),
        });
    }
    Ok(())
}

/// A detector breakpoint crossing recorded during integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryEvent {
    pub t: f64,
    pub theta_e: f64,
}

/// An integrated orbit: state samples in time order (decreasing for backward
/// runs) and the detector breakpoints crossed between them. Every crossing is
/// itself a sample with the phase snapped exactly onto the breakpoint, so no
/// two consecutive samples straddle a segment boundary.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<(f64, PhaseState)>,
    pub events: Vec<BoundaryEvent>,
}

/// Saddle position and stable-direction data used to seed separatrix traces.
/// The vectors are `(d theta_e, d y)` components in reduced coordinates; both
/// span the stable eigenline of the saddle (eigenvalue `eta - kappa`), with
/// `v_minus` oriented into `y > 0` and `v_plus` the opposite half.
#[derive(Debug, Clone, Copy)]
pub struct SaddleLocalFrame {
    pub saddle: ReducedState,
    pub v_plus: (f64, f64),
    pub v_minus: (f64, f64),
    pub epsilon: f64,
}

/// Build the local frame of the saddle between the zeroth and first stable
/// equilibria, in reduced coordinates.
pub fn saddle_local_frame(
    params: &LoopParameters,
    omega: FrequencyError,
    epsilon: f64,
) -> Result<SaddleLocalFrame> {
    check_lock_range(params, omega.omega)?;
    check_epsilon(epsilon)?;
    let rp = reduced_parameters(params);
    let shift = PI * omega.omega / (2.0 * params.kvco());
    Ok(SaddleLocalFrame {
        saddle: ReducedState {
            y: 0.0,
            theta_e: PI - shift,
            tau: 0.0,
        },
        v_plus: (1.0, rp.eta - rp.kappa),
        v_minus: (-(rp.eta + rp.kappa), 1.0),
        epsilon,
    })
}

/// Integrate the loop equations from `initial` for `t_end` seconds (either
/// sign) at the given local error tolerance. Steps are cut at detector
/// breakpoints so the integrator never smooths over a slope change; each cut
/// is recorded as a boundary event. Returns early only if the 5-million-step
/// budget runs out.
pub fn integrate_trajectory(
    initial: PhaseState,
    params: &LoopParameters,
    omega: FrequencyError,
    t_end: f64,
    tol: f64,
) -> Result<Trajectory> {
    check_integration_tol(tol)?;
    if !(initial.x.is_finite() && initial.theta_e.is_finite() && omega.omega.is_finite()) {
        return Err(Error::InvalidInput("non-finite initial state".into()));
    }
    if !t_end.is_finite() {
        return Err(Error::InvalidInput("non-finite end time".into()));
    }
    let seg = Cell::new(segment_index(initial.theta_e));
    let field = |_t: f64, s: State2| locked_field(s, seg.get(), params, omega);
    let mut samples = vec![(0.0, initial)];
    let mut events = Vec::new();
    integrate(
        field,
        0.0,
        t_end,
        [initial.x, initial.theta_e],
        &DriverOptions::adaptive(tol),
        |rec| {
            if let Some(exit) = first_segment_exit(rec.dense, seg.get()) {
                let t_cross = rec.t0 + exit.frac * rec.h;
                events.push(BoundaryEvent {
                    t: t_cross,
                    theta_e: exit.state[1],
                });
                samples.push((t_cross, PhaseState::new(exit.state[0], exit.state[1])));
                seg.set(exit.new_seg);
                return StepControl::Truncate {
                    t: t_cross,
                    y: exit.state,
                    stop: false,
                };
            }
            samples.push((rec.t0 + rec.h, PhaseState::new(rec.y1[0], rec.y1[1])));
            StepControl::Accept
        },
    )?;
    Ok(Trajectory { samples, events })
}

fn locked_field(s: State2, segment: f64, params: &LoopParameters, omega: FrequencyError) -> State2 {
    let v = pd_value_on_segment(s[1], segment);
    let ts = params.tau_sum();
    [
        (-s[0] + params.tau1() * v) / ts,
        omega.omega - params.kvco() * (s[0] + params.tau2() * v) / ts,
    ]
}

/// How a reduced backward trace of the stable manifold ended.
enum TraceEnd {
    /// Reached the phase floor one detector period below the saddle; carries
    /// the manifold height there.
    ReachedFloor { y: f64 },
    /// The manifold turned around at the `y = 0` axis before the floor.
    TouchedAxis,
    /// Budget ran out first.
    OutOfTime,
}

struct ReducedTrace {
    /// `(tau, [y, theta_e])` in trace order (tau decreasing from zero).
    samples: Vec<(f64, State2)>,
    events: Vec<BoundaryEvent>,
    end: TraceEnd,
}

/// Trace the ascending half of the saddle's stable manifold backward in
/// reduced time: from a seed `epsilon` along `v_minus`, down in phase through
/// the two breakpoints below the saddle, until the phase floor
/// `pi*omega/(2*kvco) - pi` (the image of the saddle one detector period
/// down), the `y = 0` axis, or the time budget.
fn trace_reduced(
    params: &LoopParameters,
    omega: FrequencyError,
    epsilon: f64,
    tol: f64,
) -> Result<ReducedTrace> {
    check_integration_tol(tol)?;
    let frame = saddle_local_frame(params, omega, epsilon)?;
    let shift = PI * omega.omega / (2.0 * params.kvco());
    let theta_floor = shift - PI;
    let norm = (frame.v_minus.0.powi(2) + frame.v_minus.1.powi(2)).sqrt();
    let y0 = [
        frame.saddle.y + epsilon * frame.v_minus.1 / norm,
        frame.saddle.theta_e + epsilon * frame.v_minus.0 / norm,
    ];

    let seg = Cell::new(segment_index(y0[1]));
    let field = |_t: f64, s: State2| {
        let d = reduced_field_on_segment(s[0], s[1], seg.get(), params, omega);
        [d[0], d[1]]
    };
    let mut samples = vec![(0.0, y0)];
    let mut events = Vec::new();
    let mut end = TraceEnd::OutOfTime;
    let outcome = integrate(
        field,
        0.0,
        -TIME_BUDGET,
        y0,
        &DriverOptions::adaptive(tol),
        |rec| {
            let exit = first_segment_exit(rec.dense, seg.get());
            let cap = exit.as_ref().map_or(1.0, |e| e.frac);

            // earliest y-axis touch within the kept part of the step
            let mut touch_frac = None;
            for i in 1..=16 {
                let fr = cap * i as f64 / 16.0;
                if rec.dense.eval(fr)[0] <= 0.0 {
                    touch_frac = Some(fr);
                    break;
                }
            }

            // crossing of the phase floor, which lies inside segment -1
            let mut floor_frac = None;
            if seg.get() == -1.0 && rec.dense.eval(cap)[1] <= theta_floor {
                let (mut a, mut b) = (0.0, cap);
                for _ in 0..48 {
                    let mid = 0.5 * (a + b);
                    if rec.dense.eval(mid)[1] <= theta_floor {
                        b = mid;
                    } else {
                        a = mid;
                    }
                }
                floor_frac = Some(b);
            }

            let first_stop = match (floor_frac, touch_frac) {
                (Some(f), Some(t)) if t < f => Some((t, false)),
                (Some(f), _) => Some((f, true)),
                (None, Some(t)) => Some((t, false)),
                (None, None) => None,
            };
            if let Some((fr, is_floor)) = first_stop {
                let mut state = rec.dense.eval(fr);
                if is_floor {
                    state[1] = theta_floor;
                    end = TraceEnd::ReachedFloor { y: state[0] };
                } else {
                    end = TraceEnd::TouchedAxis;
                }
                let t_stop = rec.t0 + fr * rec.h;
                samples.push((t_stop, state));
                return StepControl::Truncate {
                    t: t_stop,
                    y: state,
                    stop: true,
                };
            }
            if let Some(exit) = exit {
                let t_cross = rec.t0 + exit.frac * rec.h;
                events.push(BoundaryEvent {
                    t: t_cross,
                    theta_e: exit.state[1],
                });
                samples.push((t_cross, exit.state));
                seg.set(exit.new_seg);
                return StepControl::Truncate {
                    t: t_cross,
                    y: exit.state,
                    stop: false,
                };
            }
            samples.push((rec.t0 + rec.h, rec.y1));
            StepControl::Accept
        },
    )?;
    if outcome != IntegrationEnd::Stopped {
        end = TraceEnd::OutOfTime;
    }
    Ok(ReducedTrace {
        samples,
        events,
        end,
    })
}

/// Trace the saddle separatrix backward and return it in model coordinates,
/// sample times in seconds (negative, decreasing). The trace ends at the
/// phase floor one detector period below the saddle, at the `y = 0` axis if
/// the manifold turns around first, or at the time budget.
pub fn trace_separatrix(
    params: &LoopParameters,
    omega: FrequencyError,
    epsilon: f64,
    tol: f64,
) -> Result<Trajectory> {
    let trace = trace_reduced(params, omega, epsilon, tol)?;
    let sc = scales(params);
    let samples = trace
        .samples
        .into_iter()
        .map(|(tau, s)| {
            let state = from_reduced(
                ReducedState {
                    y: s[0],
                    theta_e: s[1],
                    tau,
                },
                params,
                omega,
            );
            (sc.a * tau, state)
        })
        .collect();
    let events = trace
        .events
        .into_iter()
        .map(|e| BoundaryEvent {
            t: sc.a * e.t,
            theta_e: e.theta_e,
        })
        .collect();
    Ok(Trajectory { samples, events })
}

/// Recover the conservative lock-in frequency from separatrix traces alone:
/// bisect on whether the traced manifold passes above or below the reduced
/// image of the worst-case post-step state at the phase floor. `tol` is
/// relative to the hold-in width `kvco`.
pub fn numeric_conservative_lock_in(
    params: &LoopParameters,
    epsilon: f64,
    tol: f64,
) -> Result<f64> {
    check_epsilon(epsilon)?;
    check_frequency_tol(tol)?;
    let k = params.kvco();
    let sc = scales(params);
    // negative while the manifold clears the target state, positive once it
    // falls below it or turns around before reaching the floor
    let margin = |om: f64| -> Result<f64> {
        let trace = trace_reduced(params, FrequencyError::new(om), epsilon, 1e-9)?;
        match trace.end {
            TraceEnd::ReachedFloor { y } => Ok(2.0 * sc.a * om - y),
            TraceEnd::TouchedAxis => Ok(1.0),
            TraceEnd::OutOfTime => Err(Error::Undecided { omega: om }),
        }
    };

    let (mut lo, mut hi) = (0.01 * k, 0.99 * k);
    let (mut g_lo, g_hi) = (margin(lo)?, margin(hi)?);
    if !(g_lo < 0.0 && g_hi > 0.0) {
        let mut bracket = None;
        let mut prev = (lo, g_lo);
        for i in 1..=64 {
            let om = lo + (hi - lo) * i as f64 / 64.0;
            let g = margin(om)?;
            if prev.1 < 0.0 && g >= 0.0 {
                bracket = Some((prev.0, om, prev.1));
                break;
            }
            prev = (om, g);
        }
        let Some((a, b, ga)) = bracket else {
            return Err(Error::NoBracket {
                context: "numeric lock-in frequency",
            });
        };
        lo = a;
        hi = b;
        g_lo = ga;
        debug_assert!(g_lo < 0.0);
    }
    while hi - lo > tol * k {
        let mid = 0.5 * (lo + hi);
        if margin(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Outcome of one worst-case frequency-step experiment.
#[derive(Debug, Clone, Copy)]
pub struct SlipOutcome {
    pub slipped: bool,
    /// Largest phase advance `theta_e(t) - theta_e(0)` seen along the run.
    pub sup_deviation: f64,
}

/// Integrate the loop from the state it held just before a frequency step of
/// `2*omega` (locked at `-omega`, one period up the cylinder) and report
/// whether it settles into the nearest equilibrium or slips at least one
/// detector period past it. The capture test is entry into a small ball
/// around the target equilibrium; the slip test is phase advancing one full
/// period beyond it.
pub fn cycle_slip_verdict(
    params: &LoopParameters,
    omega: FrequencyError,
    tol: f64,
) -> Result<SlipOutcome> {
    check_lock_range(params, omega.omega)?;
    check_integration_tol(tol)?;
    let om = omega.omega;
    let k = params.kvco();
    let x_eq = params.tau1() * om / k;
    let theta0 = 2.0 * PI - FRAC_PI_2 * om / k;
    let theta_lock = 2.0 * PI + FRAC_PI_2 * om / k;
    let slip_line = theta_lock + 2.0 * PI - BALL_RADIUS;
    let t_end = TIME_BUDGET * scales(params).a;

    let seg = Cell::new(segment_index(theta0));
    let field = |_t: f64, s: State2| locked_field(s, seg.get(), params, omega);
    let mut sup_deviation = 0.0f64;
    let mut verdict = None;
    let outcome = integrate(
        field,
        0.0,
        t_end,
        [-x_eq, theta0],
        &DriverOptions::adaptive(tol),
        |rec| {
            let exit = first_segment_exit(rec.dense, seg.get());
            let cap = exit.as_ref().map_or(1.0, |e| e.frac);
            for i in 1..=16 {
                let fr = cap * i as f64 / 16.0;
                let s = rec.dense.eval(fr);
                sup_deviation = sup_deviation.max(s[1] - theta0);
                let dist = ((s[0] - x_eq).powi(2) + (s[1] - theta_lock).powi(2)).sqrt();
                if dist < BALL_RADIUS {
                    verdict = Some(false);
                } else if s[1] >= slip_line {
                    verdict = Some(true);
                }
                if let Some(slipped) = verdict {
                    if slipped {
                        sup_deviation = sup_deviation.max(s[1] - theta0);
                    }
                    return StepControl::Truncate {
                        t: rec.t0 + fr * rec.h,
                        y: s,
                        stop: true,
                    };
                }
            }
            if let Some(exit) = exit {
                let t_cross = rec.t0 + exit.frac * rec.h;
                seg.set(exit.new_seg);
                return StepControl::Truncate {
                    t: t_cross,
                    y: exit.state,
                    stop: false,
                };
            }
            StepControl::Accept
        },
    )?;
    match (outcome, verdict) {
        (IntegrationEnd::Stopped, Some(slipped)) => Ok(SlipOutcome {
            slipped,
            sup_deviation,
        }),
        _ => Err(Error::Undecided { omega: om }),
    }
}

/// Recover the lock-in frequency from slip experiments alone: bisect on the
/// cycle-slip verdict over the hold-in range. `tol` is relative to `kvco`.
pub fn numeric_lock_in(params: &LoopParameters, tol: f64) -> Result<f64> {
    check_frequency_tol(tol)?;
    let k = params.kvco();
    let slips = |om: f64| -> Result<bool> {
        Ok(cycle_slip_verdict(params, FrequencyError::new(om), 1e-9)?.slipped)
    };
    let (mut lo, mut hi) = (0.01 * k, 0.99 * k);
    if slips(lo)? || !slips(hi)? {
        let mut bracket = None;
        let mut prev = lo;
        let mut prev_slips = slips(lo)?;
        for i in 1..=32 {
            let om = lo + (hi - lo) * i as f64 / 32.0;
            let s = slips(om)?;
            if !prev_slips && s {
                bracket = Some((prev, om));
                break;
            }
            prev = om;
            prev_slips = s;
        }
        let Some((a, b)) = bracket else {
            return Err(Error::NoBracket {
                context: "cycle-slip frequency",
            });
        };
        lo = a;
        hi = b;
    }
    while hi - lo > tol * k {
        let mid = 0.5 * (lo + hi);
        if slips(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
