//! Stochastic exponentials and logarithms of sampled càdlàg paths.
//!
//! The crate is organised in layers:
//!
//! * [`path_model`]: the [`CadlagPath`] type, zero-hit detection and
//!   announcing sequences;
//! * [`calculus`]: quadratic variation, jump integrals and stochastic
//!   integrals on a grid;
//! * [`exp_log`]: the exponential, the logarithm, the reciprocal companion
//!   and tail classification;
//! * [`generators`]: seeded example processes and randomized test families;
//! * [`harness`]: ensemble suites producing [`SuiteReport`]s.

pub mod calculus;
pub mod csv_io;
pub mod error;
pub mod exp_log;
pub mod generators;
pub mod harness;
pub mod path_model;
#[cfg(test)]
mod properties;
pub mod seed;
pub mod stats;

pub use calculus::{
    jump_integral, quadratic_variation, sign_change_count, stochastic_integral, Integrand, JumpFunctional,
    QuadraticVariation, SampledIntegrand,
};
pub use error::{CalculusError, CsvError, ExpLogError, GeneratorError, HarnessError, PathError};
pub use exp_log::{
    check_membership, classify_tail, jump_measure_pushforward, phi, reciprocal_companion, stoch_exp_formula,
    stoch_exp_recursive, stoch_log, ClassMembership, MembershipClass, TailClassification, TailThresholds,
    TailVerdict,
};
pub use generators::{generate, GeneratorKind, GeneratorSpec, JumpLaw, QvChannel};
pub use harness::{run_suite, Check, SuiteConfig, SuiteKind, SuiteReport, Tier, Verdict};
pub use path_model::{CadlagPath, HitKind, HittingReport, IntervalEnd, Mode};
