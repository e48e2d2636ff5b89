//! Secure state estimation for discrete-time LTI systems whose sensors are
//! partially corrupted by an adversary.
//!
//! The plant `x(k+1) = A x(k)`, `y(k) = C x(k) + a(k)` is observed over a
//! window of `tau` steps. Stacking the window gives `y = O x + a` where `O`
//! is the observability-style matrix `(C; CA; ...; CA^(tau-1))`. The state is
//! decoded by a partial Lasso that penalizes only the attack block:
//!
//! ```text
//! minimize  1/2 ||y - O x - a||^2 + lambda ||a||_1
//! ```
//!
//! Modules:
//!
//! - [`model`]: plant, stacked model, simulation, random instances, observability tests.
//! - [`solvers`]: soft thresholding, ISTA/FISTA for the partial Lasso, state refinement,
//!   and the block-hard-thresholding batch baseline.
//! - [`analysis`]: irrepresentable-condition certificate and restricted eigenvalue diagnostics.
//! - [`observer`]: the sparse soft observer and block-hard Luenberger-style baselines.
//! - [`oracle`]: exhaustive minimal-support decoder for small instances.
//! - [`harness`]: Monte-Carlo experiments, metrics, CSV persistence.
//! - [`cli`]: the `lasso-sse` command line.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
mod error;
pub mod harness;
pub mod linalg;
pub mod model;
pub mod observer;
pub mod oracle;
pub mod solvers;

pub use error::{Result, SseError};

pub use analysis::{
    etpg_eigen_diagnostics, irrepresentable_report, predict_lasso_success, split_rows, EigenDiagnostics, IrrepReport,
};
pub use model::{
    build_stacked_model, generate_random_instance, is_observable, is_sparse_observable, simulate, AttackScenario, Instance,
    InstanceConfig, LtiSystem, StackedModel, Trajectory,
};
pub use observer::{run_observer, Observer, ObserverConfig, ObserverRecord, ObserverState, ObserverVariant, WindowShift};
pub use oracle::{exact_decode, OracleResult};
pub use solvers::{
    default_lambda, ista_step, lasso_objective, refine_state, soft_threshold, solve_block_hard, solve_block_hard_with,
    solve_lasso, BlockUpdate, SolverConfig, SseEstimate,
};
