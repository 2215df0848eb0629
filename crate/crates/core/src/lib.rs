//! Transition amplitudes for a relativistic Gaussian wave packet evolving in
//! an inner (proper-time-like) parameter over Minkowski space.
//!
//! The crate is organised in layers:
//!
//! * [`minkowski`]: the metric signature and four-vector arithmetic.
//! * [`experiment`]: validated input data (packet, mass, hbar, displacement).
//! * [`amplitude`]: the closed-form amplitude, its continuous phase (the
//!   quantum action), the classical action and the quadratic correction.
//! * [`oracle`]: independent numerical machinery - momentum-space quadrature
//!   of the defining integral, exact complex-Gaussian packet evolution, norm
//!   bookkeeping and a plane-wave phase identity. Everything here is built so
//!   the closed forms in [`amplitude`] can be cross-checked rather than
//!   trusted.
//! * [`stationarity`]: life-time selection - the classical value, the two
//!   quasi-classical roots, branch selection and an exact derivative-root
//!   solver.
//! * [`detection`]: a spherical detector screen - per-detector rows, full
//!   scans, the normalization integral and asymptotic diagnostics.
//!
//! With the default `parallel` feature the screen scan and the normalization
//! grid are evaluated with rayon; results are assembled in a fixed order so
//! output bytes do not depend on thread scheduling. Without the feature the
//! same code paths run sequentially.

// Style lints the numerics deliberately trip: per-axis kernels index several
// parallel arrays by one `mu`, validation guards spell `!(x > 0.0)` so NaN is
// rejected along with the out-of-range values, and the small fn-pointer flag
// table reads better without a type alias.
#![allow(
    clippy::needless_range_loop,
    clippy::neg_cmp_op_on_partial_ord,
    clippy::manual_is_multiple_of,
    clippy::type_complexity
)]

pub mod amplitude;
pub mod detection;
pub mod experiment;
mod gauss;
pub mod minkowski;
mod numeric;
pub mod oracle;
pub mod stationarity;

pub use amplitude::{
    action_correction, action_correction_derivative, action_derivative, classical_action,
    closed_form_amplitude, envelope, prefactor_modulus, quantum_action, AmplitudeError,
    AmplitudeResult,
};
pub use experiment::{
    validate_experiment, ConfigError, Experiment, ExperimentTemplate, FinalPacket, GaussianPacket,
    LifeTime,
};
pub use minkowski::{minkowski_square, FourVector, MetricSignature};
pub use oracle::{
    evolve_packet, norm_conservation_check, plane_wave_action_check, quadrature_amplitude,
    EvolvedPacket, NormConservation, OracleError, QuadratureSpec,
};
pub use stationarity::{
    classical_lifetime, classical_momentum, far_field_ratio, mass_shell_residual,
    quasiclassical_lifetimes, select_branch, stationary_lifetime_exact, Branch, DerivativeSample,
    FarField, QuasiClassicalRoots, SolverConfig, StationarityError, StationarySolution,
};
pub use detection::{
    amplitude_at_detector, nonrel_limit_report, normalization_constant, prefactor_decay_slope,
    screen_density_integral, screen_scan, DetectionError, DetectionRow, DetectionTable, NonrelRow,
    Normalization, RowFlags, Screen, ScreenPoint,
};
