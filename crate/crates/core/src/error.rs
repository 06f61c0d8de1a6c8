use thiserror::Error;

use crate::network::VarId;

/// Violations of the structural and numeric invariants of networks, tables and constraints.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("duplicate variable name '{0}'")]
    DuplicateVariable(String),
    #[error("variable '{name}' has cardinality {cardinality}; at least 2 states are required")]
    BadCardinality { name: String, cardinality: usize },
    #[error("variable '{name}' declares {labels} state labels but has cardinality {cardinality}")]
    StateLabels {
        name: String,
        labels: usize,
        cardinality: usize,
    },
    #[error("unknown variable '{0}'")]
    UnknownVariable(String),
    #[error("variable '{child}' names unknown parent '{parent}'")]
    UnknownParent { child: String, parent: String },
    #[error("variable '{child}' lists parent '{parent}' more than once")]
    DuplicateParent { child: String, parent: String },
    #[error("cycle detected: {}", .0.join(" -> "))]
    Cycle(Vec<String>),
    #[error("network has {variables} variables but {cpts} CPTs")]
    CptCount { variables: usize, cpts: usize },
    #[error("CPT for '{variable}' does not match the declared parents and cardinalities")]
    CptAxes { variable: String },
    #[error("CPT for '{variable}' has {found} entries, expected {expected}")]
    CptLength {
        variable: String,
        expected: usize,
        found: usize,
    },
    #[error("CPT for '{variable}' has entry {value} at index {index} outside [0, 1]")]
    CptEntry {
        variable: String,
        index: usize,
        value: f64,
    },
    #[error("CPT for '{variable}': row {row} sums to {sum}, expected 1")]
    CptRowNotNormalized {
        variable: String,
        row: usize,
        sum: f64,
    },
    #[error("table has {found} entries, expected {expected}")]
    TableLength { expected: usize, found: usize },
    #[error("table entry {index} is {value}; entries must be finite and nonnegative")]
    TableEntry { index: usize, value: f64 },
    #[error("table sums to {0}, expected 1")]
    TableNotNormalized(f64),
    #[error("scope lists variable {0} more than once")]
    DuplicateScope(VarId),
    #[error("scope is empty")]
    EmptyScope,
    #[error("variable {0} is not in the table scope")]
    NotInScope(VarId),
    #[error("scope mismatch: {0}")]
    ScopeMismatch(String),
    #[error("variable '{name}' has cardinality {expected}, table axis has {found}")]
    CardinalityMismatch {
        name: String,
        expected: usize,
        found: usize,
    },
}

/// Failures of a solver run that prevent it from producing a result.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error(
        "constraint {} requires probability {required} on cell {cell:?} whose current marginal is zero",
        .constraint.map(|c| c.to_string()).unwrap_or_else(|| "?".into())
    )]
    Dominance {
        constraint: Option<usize>,
        cell: Vec<usize>,
        required: f64,
    },
    #[error("constraint {constraint} needs a subnet of {size} variables, budget is {budget}")]
    SubnetTooLarge {
        constraint: usize,
        size: usize,
        budget: usize,
    },
    #[error("dense joint over {variables} variables ({cells} cells) exceeds the ceiling of {ceiling} variables")]
    DenseTooLarge {
        variables: usize,
        cells: usize,
        ceiling: usize,
    },
    #[error("invalid schedule: {0}")]
    Schedule(String),
    #[error("invalid stop policy: {0}")]
    StopPolicy(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl SolveError {
    pub(crate) fn at_constraint(self, index: usize) -> Self {
        match self {
            SolveError::Dominance {
                constraint: None,
                cell,
                required,
            } => SolveError::Dominance {
                constraint: Some(index),
                cell,
                required,
            },
            other => other,
        }
    }
}

/// Errors raised while reading or writing document files.
#[derive(Debug, Error)]
pub enum FormatError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported formatVersion {0} (expected 1)")]
    Version(u64),
    #[error("constraint {index}: {source}")]
    Constraint {
        index: usize,
        #[source]
        source: ModelError,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl From<serde_json::Error> for FormatError {
    fn from(err: serde_json::Error) -> Self {
        FormatError::Syntax {
            line: err.line(),
            column: err.column(),
            message: err.to_string(),
        }
    }
}
