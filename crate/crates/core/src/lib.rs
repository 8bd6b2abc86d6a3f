//! Learning-rate and batch-size scheduling for stochastic heavy-ball momentum.
//!
//! The crate covers the full loop from schedule construction to empirical
//! verification of the associated convergence bounds:
//!
//! * [`schedules`] materializes per-step learning rates and batch sizes;
//! * [`optim`] runs the SHB and NSHB recursions against a [`problems::Problem`];
//! * [`problems`] provides synthetic finite-sum objectives with known constants;
//! * [`theory`] evaluates the Lyapunov coefficient and closed-form bounds;
//! * [`harness`] runs multi-seed experiments and checks them against theory;
//! * [`cli`] is the command-line front end.

pub mod cli;
pub mod fmt;
pub mod harness;
pub mod optim;
pub mod problems;
pub mod rng;
pub mod schedules;
pub mod theory;

pub use optim::{Algorithm, OptimizerState};
pub use problems::{LogCoshProblem, Problem, QuadraticMeanProblem};
pub use schedules::{LrSchedule, PhasePlan, ScheduleSpec, ScheduleTable};
