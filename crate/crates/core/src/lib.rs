//! Time-nonhomogeneous birth–death(–immigration) infection model.
//!
//! The crate is organised bottom-up:
//!
//! * [`rates`]: piecewise λ(t), μ(t), ν(t) with exact integrals,
//! * [`calculus`]: gridded s(t), Σ(t), N(t), L(t), M(t),
//! * [`deterministic`]: expected trajectories and daily counts,
//! * [`pmf`]: closed-form transient distribution of the birth–death process,
//! * [`oracle`]: forward-equation solver used as independent ground truth,
//! * [`simulator`]: exact thinning sampler and seeded ensembles,
//! * [`output`]: CSV writers,
//! * [`validation`]: the acceptance checks, shared by tests and the CLI.

pub mod calculus;
pub mod deterministic;
pub mod error;
pub mod oracle;
pub mod output;
pub mod pmf;
pub mod rates;
pub mod scenario;
pub mod simulator;
pub mod validation;

pub use calculus::{build_table, Field, IntegralTable};
pub use error::{Error, Result};
pub use rates::{RateFunction, Segment, Shape};
pub use scenario::{Format, Overrides, Scenario};
