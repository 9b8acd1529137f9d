//! Overpredictive (envelope) bandlimited Fourier approximation of client
//! time-series, federated aggregation of the resulting coefficients, and
//! numerical checks of the associated error and CDF-gap bounds.
//!
//! The crate is organised bottom-up:
//!
//! * [`signal`]: real Fourier series, projection from uniform samples and
//!   synthetic power-law generators.
//! * [`solver`]: dense LP (two-phase simplex) and projection QP (dual
//!   active set) for constraints of the form `A x >= g`.
//! * [`envelope`]: the L1/L2 optimal envelopes, the naive shifted
//!   projection and the unconstrained MSE baseline.
//! * [`analytics`]: server-side sum, empirical CDF, quantiles, Wasserstein
//!   distance and violation statistics.
//! * [`bounds`]: closed-form error bounds and their empirical verification.
//! * [`fedsim`]: client/server orchestration and the experiment sweeps.
//! * [`ingest`]: CSV loading and synchronisation of smart-meter readings.
//!
//! Data-parallel loops (per-client solves, verification trials, sweep
//! cells) go through [`exec`], which uses rayon when the `parallel`
//! feature is enabled and falls back to plain iteration otherwise.

pub mod analytics;
pub mod bounds;
pub mod envelope;
pub mod exec;
pub mod fedsim;
pub mod ingest;
pub mod signal;
pub mod solver;

pub use analytics::{EmpiricalCdf, ViolationStats};
pub use envelope::{ConstraintGrid, EnvelopeError, EnvelopeSolution, Scheme};
pub use exec::Execution;
pub use signal::{FourierSeries, SampledSignal, SmoothnessParams, TailMode};
pub use solver::{LinearConstraints, SolveStatus, SolverReport, Tolerances};
