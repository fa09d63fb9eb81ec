//! Oracle-based mixed-integer convex optimization.
//!
//! The crate covers exact and approximate first-order oracles over `Z^n × R^d`,
//! a centerpoint cutting-plane solver, adversaries realising lower-bound
//! constructions, finite-family halving, and a layer that runs exact-oracle
//! methods against inexact oracles.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adversary;
pub mod centerpoint;
pub mod experiments;
pub mod halving;
pub mod inexact;
pub mod instance;
pub mod linalg;
pub mod lp;
pub mod oracle;
pub mod recovery;
pub mod solver;
pub mod suite;

pub use instance::{
    ClassParams, FirstOrderInfo, Halfspace, Instance, InstanceError, MaxAffineFunction, MixedPoint,
    Optimum, Polytope,
};
pub use experiments::{run_sweep, write_outputs, ExperimentConfig, SweepResult};
pub use halving::{halving_solve, HalvingReport, WrappedAlgorithm};
pub use inexact::{robustify, Noise, RobustAlgo, RobustReport};
pub use oracle::{Oracle, Query, Response, Session, Target, Transcript};
pub use solver::{solve, solve_recorded, OracleMode, SolverConfig, SolverReport, StopRule};
