//! Observability analysis for discretized PDE models.
//!
//! Given a model (dynamics + sensors + norms), this crate measures how well
//! the sensor records pin down uncertain initial data living in a chosen
//! low-dimensional subspace. The headline quantity is the unobservability
//! index `rho / epsilon`: the radius of the initial-data uncertainty sphere
//! divided by the smallest output deviation reachable from it. A large index
//! means some initial-data direction is nearly invisible to the sensors; an
//! infinite one means a direction is practically unobservable.
//!
//! Two estimators are provided and cross-checkable:
//!
//! * [`gramian::gramian_index`] builds an empirical observability Gramian
//!   from `2s + 1` simulations (central differences along each basis
//!   direction) and takes the smallest generalized eigenvalue against the
//!   basis Gram matrix.
//! * [`optim::direct_epsilon`] minimizes the output deviation over the
//!   perturbation sphere directly with a projected simplex search, seeded by
//!   the Gramian's worst eigenvector plus random restarts.
//!
//! [`consistency`] adds resolution sweeps with plateau detection, a wave
//! energy study showing how grid-scale data hides from boundary sensors,
//! and sensor-placement comparisons on cached trajectories. Five ready
//! models live in [`models`]; independent simulations fan out over a thread
//! pool by default (disable the `parallel` feature for strictly sequential
//! execution — results are identical).

pub mod consistency;
pub mod error;
pub mod exec;
pub mod gramian;
pub mod integrate;
pub mod linalg;
pub mod model;
pub mod models;
pub mod optim;
pub mod output;

pub use error::{Error, Result};
pub use exec::ExecMode;
pub use gramian::{
    assemble_gramian, default_rho, gramian_index, index_from_gramian, run_perturbations,
    EmpiricalGramian, ObservabilityReport, PerturbationRunSet, Source,
};
pub use model::{EstimationSpace, ModelSpec, Propagator};
pub use optim::{direct_epsilon, DirectOptions, DirectOutcome};
pub use output::{OutputSeries, Weighting};
