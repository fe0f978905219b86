//! Lock-in analysis for a second-order phase-locked loop with a triangular
//! phase-detector characteristic and a lead-lag loop filter.
//!
//! The baseband model is a planar system on the phase cylinder: a loop-filter
//! state driven by the detector output, and a phase error driven by the
//! frequency error minus the filtered correction. Because the detector
//! characteristic is piecewise linear, the system is linear on each detector
//! segment, and the three classical acquisition ranges can be pinned down
//! far more precisely than for a sinusoidal detector:
//!
//! * the **hold-in range** `[0, kvco)` where equilibria exist ([`model`]),
//! * a guaranteed **pull-in range** from a global stability condition built
//!   on an asymmetry functional of the detector ([`stability`]),
//! * the exact **conservative lock-in frequency**: the largest frequency
//!   step a locked loop is guaranteed to re-acquire without slipping a
//!   detector period, obtained by pushing the saddle separatrix across two
//!   detector segments in closed form and solving a transcendental
//!   two-variable system ([`lockin`]).
//!
//! The closed-form route is cross-checked by an independent numerical one
//! ([`oracle`]): direct integration with detector-segment splitting, saddle
//! separatrix tracing, and bisection searches that recover the same
//! frequencies from trajectories alone. [`sweep`] evaluates the lock-in
//! frequency across a gain range, in parallel by default (disable the
//! `parallel` feature for a single-threaded build).
//!
//! ```
//! use pll_lockin::{conservative_lock_in, hold_in_frequency, LoopParameters};
//!
//! let params = LoopParameters::new(0.0633, 0.0225, 250.0)?;
//! let lock_in = conservative_lock_in(&params)?;
//! assert!(lock_in.omega_lc > 0.0);
//! assert!(lock_in.omega_lc < hold_in_frequency(&params));
//! # Ok::<(), pll_lockin::Error>(())
//! ```

pub mod cli;
pub mod error;
pub mod export;
pub mod lockin;
pub mod model;
mod ode;
pub mod oracle;
pub mod reduced;
mod roots;
pub mod stability;
pub mod sweep;

pub use error::{Error, Result};
pub use export::OutputFormat;
pub use lockin::{
    conservative_lock_in, conservative_lock_in_forced_case, first_integral_a, first_integral_b,
    solve_y_ab, solve_y_ab_exponentiated, xi_case, LockInSolution, XiCase,
};
pub use model::{
    classify_equilibrium, dissipativity_bound, equilibria, hold_in_frequency, pd_slope, pd_value,
    vector_field, EquilibriumKind, EquilibriumPoint, FrequencyError, LoopParameters, PhaseState,
};
pub use oracle::{
    cycle_slip_verdict, integrate_trajectory, numeric_conservative_lock_in, numeric_lock_in,
    saddle_local_frame, trace_separatrix, BoundaryEvent, SaddleLocalFrame, SlipOutcome,
    Trajectory,
};
pub use reduced::{
    from_reduced, reduced_parameters, reduced_vector_field, separatrix_initial_value, to_reduced,
    ReducedParameters, ReducedState,
};
pub use stability::{
    beta0, beta0_from_integrals, global_stability_condition, pull_in_lower_bound, StabilityReport,
};
pub use sweep::{lock_in_sweep, lock_in_sweep_serial, SweepRow, SweepSpec};
