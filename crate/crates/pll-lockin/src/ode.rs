//! Embedded adaptive Runge-Kutta integration (Dormand-Prince 5(4)) for
//! two-dimensional systems, with dense output on every accepted step and a
//! step-control callback that lets callers truncate steps at detector
//! segment boundaries so each accepted step sees a single linear field.

use crate::error::{Error, Result};
use std::f64::consts::{FRAC_PI_2, PI};

pub(crate) type State2 = [f64; 2];

/// Fifth-order interpolant over one accepted step, valid for fractions in
/// `[0, 1]` of the step.
#[derive(Debug, Clone, Copy)]
pub(crate) struct DenseSeg {
    r: [State2; 5],
}

impl DenseSeg {
    pub fn eval(&self, frac: f64) -> State2 {
        let t1 = 1.0 - frac;
        let mut out = [0.0; 2];
        for i in 0..2 {
            out[i] = self.r[0][i]
                + frac
                    * (self.r[1][i]
                        + t1 * (self.r[2][i] + frac * (self.r[3][i] + t1 * self.r[4][i])));
        }
        out
    }
}

/// How the step-control callback disposes of an accepted step.
pub(crate) enum StepControl {
    /// Keep the whole step.
    Accept,
    /// Cut the step short at `(t, y)` (located on the dense output); when
    /// `stop` is set the integration ends there.
    Truncate { t: f64, y: State2, stop: bool },
}

/// Why the driver returned.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum IntegrationEnd {
    ReachedEnd,
    Stopped,
    MaxSteps,
}

pub(crate) struct StepRecord<'a> {
    pub t0: f64,
    pub h: f64,
    pub y1: State2,
    pub dense: &'a DenseSeg,
}

pub(crate) struct DriverOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: Option<f64>,
    pub max_steps: usize,
    /// Disables error control and uses this step size throughout; for
    /// convergence-order measurements.
    pub fixed_step: Option<f64>,
}

impl DriverOptions {
    pub fn adaptive(tol: f64) -> Self {
        DriverOptions {
            rtol: tol,
            atol: tol,
            h_init: None,
            max_steps: 5_000_000,
            fixed_step: None,
        }
    }
}

struct StagedStep {
    y1: State2,
    err: State2,
    ks: [State2; 7],
}

/// One Dormand-Prince 5(4) step of size `h` from `(t, y)` with `k1` already
/// evaluated (first-same-as-last is exploited by the driver).
fn rk_step<F: Fn(f64, State2) -> State2>(f: &F, t: f64, y: State2, k1: State2, h: f64) -> StagedStep {
    let stage = |coeffs: &[(f64, State2)]| {
        let mut s = y;
        for &(a, k) in coeffs {
            s[0] += h * a * k[0];
            s[1] += h * a * k[1];
        }
        s
    };
    let k2 = f(t + h / 5.0, stage(&[(1.0 / 5.0, k1)]));
    let k3 = f(t + 3.0 * h / 10.0, stage(&[(3.0 / 40.0, k1), (9.0 / 40.0, k2)]));
    let k4 = f(
        t + 4.0 * h / 5.0,
        stage(&[(44.0 / 45.0, k1), (-56.0 / 15.0, k2), (32.0 / 9.0, k3)]),
    );
    let k5 = f(
        t + 8.0 * h / 9.0,
        stage(&[
            (19372.0 / 6561.0, k1),
            (-25360.0 / 2187.0, k2),
            (64448.0 / 6561.0, k3),
            (-212.0 / 729.0, k4),
        ]),
    );
    let k6 = f(
        t + h,
        stage(&[
            (9017.0 / 3168.0, k1),
            (-355.0 / 33.0, k2),
            (46732.0 / 5247.0, k3),
            (49.0 / 176.0, k4),
            (-5103.0 / 18656.0, k5),
        ]),
    );
    let y1 = stage(&[
        (35.0 / 384.0, k1),
        (500.0 / 1113.0, k3),
        (125.0 / 192.0, k4),
        (-2187.0 / 6784.0, k5),
        (11.0 / 84.0, k6),
    ]);
    let k7 = f(t + h, y1);
    let mut err = [0.0; 2];
    for i in 0..2 {
        err[i] = h
            * (71.0 / 57600.0 * k1[i] - 71.0 / 16695.0 * k3[i] + 71.0 / 1920.0 * k4[i]
                - 17253.0 / 339200.0 * k5[i]
                + 22.0 / 525.0 * k6[i]
                - 1.0 / 40.0 * k7[i]);
    }
    StagedStep {
        y1,
        err,
        ks: [k1, k2, k3, k4, k5, k6, k7],
    }
}

fn dense_coefficients(y0: State2, staged: &StagedStep, h: f64) -> DenseSeg {
    const D1: f64 = -12715105075.0 / 11282082432.0;
    const D3: f64 = 87487479700.0 / 32700410799.0;
    const D4: f64 = -10690763975.0 / 1880347072.0;
    const D5: f64 = 701980252875.0 / 199316789632.0;
    const D6: f64 = -1453857185.0 / 822651844.0;
    const D7: f64 = 69997945.0 / 29380423.0;
    let [k1, _, k3, k4, k5, k6, k7] = staged.ks;
    let mut r = [[0.0; 2]; 5];
    for i in 0..2 {
        let ydiff = staged.y1[i] - y0[i];
        let bspl = h * k1[i] - ydiff;
        r[0][i] = y0[i];
        r[1][i] = ydiff;
        r[2][i] = bspl;
        r[3][i] = ydiff - h * k7[i] - bspl;
        r[4][i] = h
            * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
    }
    DenseSeg { r }
}

/// Drive the integration from `t0` to `t_end` (either direction). The
/// callback sees every accepted step with its dense output and may truncate
/// it, typically at a segment boundary; the continuation derivative is
/// evaluated after the callback returns, so the callback may switch the
/// field's pinned segment first.
pub(crate) fn integrate<F, C>(
    f: F,
    t0: f64,
    t_end: f64,
    y0: State2,
    opts: &DriverOptions,
    mut on_step: C,
) -> Result<IntegrationEnd>
where
    F: Fn(f64, State2) -> State2,
    C: FnMut(&StepRecord) -> StepControl,
{
    let span = t_end - t0;
    if span == 0.0 {
        return Ok(IntegrationEnd::ReachedEnd);
    }
    let dir = span.signum();
    let h_floor = 1e-15 * span.abs();
    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, y);
    let mut h = match (opts.fixed_step, opts.h_init) {
        (Some(s), _) => s.abs() * dir,
        (None, Some(s)) => s.abs() * dir,
        (None, None) => span * 1e-3,
    };
    let mut growth_cap = 5.0;

    for _ in 0..opts.max_steps {
        if (t - t_end) * dir >= 0.0 {
            return Ok(IntegrationEnd::ReachedEnd);
        }
        if opts.fixed_step.is_none() && h.abs() < h_floor {
            return Err(Error::StepUnderflow { t });
        }
        let mut final_step = false;
        let mut h_try = h;
        if (t + h_try - t_end) * dir >= 0.0 {
            h_try = t_end - t;
            final_step = true;
        }

        let staged = rk_step(&f, t, y, k1, h_try);
        let err = if opts.fixed_step.is_some() {
            0.0
        } else {
            let mut sum = 0.0;
            for i in 0..2 {
                let scale = opts.atol + opts.rtol * y[i].abs().max(staged.y1[i].abs());
                sum += (staged.err[i] / scale).powi(2);
            }
            (sum / 2.0).sqrt()
        };

        if err.is_finite() && err <= 1.0 {
            let dense = dense_coefficients(y, &staged, h_try);
            let record = StepRecord {
                t0: t,
                h: h_try,
                y1: staged.y1,
                dense: &dense,
            };
            let mut truncated = false;
            match on_step(&record) {
                StepControl::Accept => {
                    t = if final_step { t_end } else { t + h_try };
                    y = staged.y1;
                    k1 = staged.ks[6];
                }
                StepControl::Truncate { t: tt, y: yy, stop } => {
                    if stop {
                        return Ok(IntegrationEnd::Stopped);
                    }
                    t = tt;
                    y = yy;
                    k1 = f(t, y);
                    truncated = true;
                }
            }
            if opts.fixed_step.is_none() {
                let factor = (0.9 * err.powf(-0.2)).clamp(0.2, growth_cap);
                h = (h_try * factor).abs().min(span.abs()) * dir;
            }
            growth_cap = 5.0;
            if final_step && !truncated {
                return Ok(IntegrationEnd::ReachedEnd);
            }
        } else {
            let factor = if err.is_finite() {
                (0.9 * err.powf(-0.2)).clamp(0.2, 1.0)
            } else {
                0.2
            };
            h = h_try * factor;
            growth_cap = 1.0;
        }
    }
    Ok(IntegrationEnd::MaxSteps)
}

/// Exit of the phase coordinate (component 1) from its current detector
/// segment, located on the dense output of one step.
pub(crate) struct SegmentExit {
    pub frac: f64,
    pub state: State2,
    pub new_seg: f64,
}

/// Find the earliest point of a step where the phase coordinate leaves the
/// segment `[seg*pi - pi/2, seg*pi + pi/2)`, if it does. The returned state
/// has its phase snapped exactly onto the breakpoint.
pub(crate) fn first_segment_exit(dense: &DenseSeg, seg: f64) -> Option<SegmentExit> {
    const SAMPLES: usize = 16;
    let lower = seg * PI - FRAC_PI_2;
    let upper = seg * PI + FRAC_PI_2;
    let mut prev = 0.0f64;
    for i in 1..=SAMPLES {
        let frac = i as f64 / SAMPLES as f64;
        let theta = dense.eval(frac)[1];
        let up = theta >= upper;
        let down = theta < lower;
        if up || down {
            let bound = if up { upper } else { lower };
            let (mut a, mut b) = (prev, frac);
            for _ in 0..48 {
                let mid = 0.5 * (a + b);
                let tm = dense.eval(mid)[1];
                let crossed = if up { tm >= bound } else { tm < bound };
                if crossed {
                    b = mid;
                } else {
                    a = mid;
                }
            }
            let mut state = dense.eval(b);
            state[1] = bound;
            return Some(SegmentExit {
                frac: b,
                state,
                new_seg: if up { seg + 1.0 } else { seg - 1.0 },
            });
        }
        prev = frac;
    }
    None
}
