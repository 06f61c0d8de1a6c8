//! Fitting the CPTs of a Bayesian network to a set of marginal probability constraints.
//!
//! Three solvers are provided:
//!
//! * [`run_ipfp`]: iterative proportional fitting on the dense joint table.
//! * [`run_e_ipfp`]: the same, with a structural projection each cycle so the result factors
//!   over the original DAG.
//! * [`run_d_ipfp`]: updates only the CPTs each constraint touches, never building the joint.

pub mod constraint;
pub mod elimination;
pub mod error;
pub mod generate;
pub mod io;
pub mod measure;
pub mod network;
#[cfg(any(test, feature = "oracle"))]
pub mod oracle;
pub mod solver;
pub mod table;

/// Tolerance for "sums to one" checks on inputs.
pub const TAU_NORM: f64 = 1e-9;
/// Largest network the dense solvers accept.
pub const DENSE_VARIABLE_CEILING: usize = 25;
pub const DENSE_CELL_CEILING: usize = 1 << 25;

pub use constraint::{
    classify_constraint, classify_scope, external_parents, Constraint, LocalityClass,
};
pub use elimination::{factored_divergence, marginal};
pub use error::{FormatError, ModelError, SolveError};
pub use generate::{generate, GenConfig, Instance};
pub use io::{
    parse_constraints, parse_joint, parse_network, serialize_constraints, serialize_joint,
    serialize_network, serialize_report, ReportDocument,
};
pub use measure::{
    constraint_residual, extract_cpt, extract_network_cpts, i_divergence,
    is_structurally_consistent, joint_from_network, structural_projection, structural_residual,
};
pub use network::{Cpt, NetworkBuilder, NetworkSpec, VarId, VariableDecl};
pub use solver::decomposed::{
    build_local_subnet, extract_subnet_cpts, local_update, nonlocal_update, run_d_ipfp,
    run_d_ipfp_with, subnet_size, update_plan, DecomposedOptions, LocalSubnet, UpdatePlan,
};
pub use solver::dense::{ipfp_step, run_e_ipfp, run_ipfp};
pub use solver::{Algorithm, RunReport, Schedule, StopPolicy, Termination};
pub use table::JointTable;
