//! Lock-in frequency across a range of loop gains, evaluated in parallel by
//! default (rayon) with a sequential fallback that compiles without the
//! `parallel` feature. Rows come back in input order either way.

use crate::error::Result;
use crate::lockin::{conservative_lock_in, XiCase};
use crate::model::LoopParameters;
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::Serialize;

/// Gain range and resolution of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    kvco_min: f64,
    kvco_max: f64,
    points: usize,
}

impl SweepSpec {
    pub fn new(kvco_min: f64, kvco_max: f64, points: usize) -> Result<Self> {
        use crate::error::Error;
        if !(kvco_min.is_finite() && kvco_max.is_finite() && kvco_min > 0.0) {
            return Err(Error::InvalidInput(format!(
                "gain range must be finite and positive, got {kvco_min}..{kvco_max}"
            )));
        }
        if kvco_max < kvco_min {
            return Err(Error::InvalidInput(format!(
                "gain range is reversed: {kvco_min}..{kvco_max}"
            )));
        }
        if !(2..=100_000).contains(&points) {
            return Err(Error::InvalidInput(format!(
                "sweep needs between 2 and 100000 points, got {points}"
            )));
        }
        Ok(SweepSpec {
            kvco_min,
            kvco_max,
            points,
        })
    }

    pub fn gains(&self) -> Vec<f64> {
        let n = self.points;
        (0..n)
            .map(|i| {
                self.kvco_min + (self.kvco_max - self.kvco_min) * i as f64 / (n - 1) as f64
            })
            .collect()
    }
}

/// One solved point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub kvco: f64,
    pub omega_lc: f64,
    pub y_ab: f64,
    pub case_tag: XiCase,
}

fn solve_row(tau1: f64, tau2: f64, kvco: f64) -> Result<SweepRow> {
    let params = LoopParameters::new(tau1, tau2, kvco)?;
    let sol = conservative_lock_in(&params)?;
    Ok(SweepRow {
        kvco,
        omega_lc: sol.omega_lc,
        y_ab: sol.y_ab,
        case_tag: sol.case_tag,
    })
}

/// Solve the sweep on the rayon thread pool. The first failing gain aborts
/// the whole sweep with its error.
#[cfg(feature = "parallel")]
pub fn lock_in_sweep(tau1: f64, tau2: f64, spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.gains()
        .into_par_iter()
        .map(|k| solve_row(tau1, tau2, k))
        .collect()
}

/// Sequential stand-in with the same signature, used when the `parallel`
/// feature is off.
#[cfg(not(feature = "parallel"))]
pub fn lock_in_sweep(tau1: f64, tau2: f64, spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    lock_in_sweep_serial(tau1, tau2, spec)
}

/// Single-threaded sweep, always available; the benchmark suite compares it
/// against the parallel path.
pub fn lock_in_sweep_serial(tau1: f64, tau2: f64, spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.gains()
        .into_iter()
        .map(|k| solve_row(tau1, tau2, k))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    #[test]
    fn sweep_spec_rejects_bad_ranges_and_resolutions() {
        assert!(matches!(
            SweepSpec::new(-1.0, 10.0, 5),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            SweepSpec::new(10.0, 5.0, 5),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            SweepSpec::new(1.0, 10.0, 1),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            SweepSpec::new(1.0, 10.0, 200_000),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn gains_span_the_range_uniformly() {
        let spec = SweepSpec::new(50.0, 500.0, 10).unwrap();
        let gains = spec.gains();
        assert_eq!(gains.len(), 10);
        assert_eq!(gains[0], 50.0);
        assert_eq!(gains[9], 500.0);
        let step = gains[1] - gains[0];
        for pair in gains.windows(2) {
            assert!((pair[1] - pair[0] - step).abs() < 1e-9);
        }
    }

    #[test]
    fn parallel_and_serial_sweeps_agree_row_for_row() {
        let spec = SweepSpec::new(100.0, 400.0, 7).unwrap();
        let a = lock_in_sweep(0.0633, 0.0225, &spec).unwrap();
        let b = lock_in_sweep_serial(0.0633, 0.0225, &spec).unwrap();
        assert_eq!(a.len(), 7);
        for (ra, rb) in a.iter().zip(&b) {
            assert_eq!(ra.kvco, rb.kvco);
            assert_eq!(ra.omega_lc, rb.omega_lc);
            assert_eq!(ra.y_ab, rb.y_ab);
            assert_eq!(ra.case_tag, rb.case_tag);
        }
        // rows come back in input order
        for pair in a.windows(2) {
            assert!(pair[0].kvco < pair[1].kvco);
        }
    }

    #[test]
    fn a_row_that_cannot_be_solved_aborts_the_sweep() {
        let spec = SweepSpec::new(50.0, 100.0, 3).unwrap();
        assert!(matches!(
            lock_in_sweep(-1.0, 0.03, &spec),
            Err(Error::InvalidParameters(_))
        ));
    }
}
