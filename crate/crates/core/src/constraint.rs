//! Marginal probability constraints and their locality with respect to a network.

use crate::error::ModelError;
use crate::network::{NetworkSpec, VarId};
use crate::table::JointTable;

/// A target distribution `R(y)` over a subset `Y` of a network's variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    dist: JointTable,
}

impl Constraint {
    /// Validates `probs` (mixed-radix order of `scope`) against `net`.
    pub fn new(net: &NetworkSpec, scope: Vec<VarId>, probs: Vec<f64>) -> Result<Self, ModelError> {
        if scope.is_empty() {
            return Err(ModelError::EmptyScope);
        }
        if let Some(v) = scope.iter().find(|v| v.0 >= net.len()) {
            return Err(ModelError::UnknownVariable(v.to_string()));
        }
        let cards = scope.iter().map(|&v| net.cardinality(v)).collect();
        Ok(Constraint {
            dist: JointTable::new(scope, cards, probs)?,
        })
    }

    /// Wraps an existing distribution, checking its axes against `net`.
    pub fn from_table(net: &NetworkSpec, dist: JointTable) -> Result<Self, ModelError> {
        for (&v, &card) in dist.scope().iter().zip(dist.cards()) {
            if v.0 >= net.len() {
                return Err(ModelError::UnknownVariable(v.to_string()));
            }
            if net.cardinality(v) != card {
                return Err(ModelError::CardinalityMismatch {
                    name: net.name(v).to_string(),
                    expected: net.cardinality(v),
                    found: card,
                });
            }
        }
        Constraint::new(net, dist.scope().to_vec(), dist.into_probs())
    }

    pub fn scope(&self) -> &[VarId] {
        self.dist.scope()
    }

    pub fn dist(&self) -> &JointTable {
        &self.dist
    }
}

/// How a constraint relates to the network's CPTs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LocalityClass {
    /// The scope is one variable plus some of its parents; only that CPT needs editing.
    Local {
        target: VarId,
        constrained_parents: Vec<VarId>,
    },
    /// Anything else: `s` holds the parents of `y` members that lie outside `y`.
    NonLocal { y: Vec<VarId>, s: Vec<VarId> },
}

impl LocalityClass {
    pub fn is_local(&self) -> bool {
        matches!(self, LocalityClass::Local { .. })
    }
}

/// Classifies `r` against `net`. When several scope members qualify as the local target, the
/// one latest in topological order is chosen.
pub fn classify_constraint(net: &NetworkSpec, r: &Constraint) -> LocalityClass {
    classify_scope(net, r.scope())
}

/// [`classify_constraint`] for a bare scope.
pub fn classify_scope(net: &NetworkSpec, scope: &[VarId]) -> LocalityClass {
    let rank = net.topological_rank();
    let target = scope
        .iter()
        .copied()
        .filter(|&t| scope.iter().all(|&v| v == t || net.parents(t).contains(&v)))
        .max_by_key(|t| rank[t.0]);
    match target {
        Some(target) => LocalityClass::Local {
            target,
            constrained_parents: net
                .parents(target)
                .iter()
                .copied()
                .filter(|p| scope.contains(p))
                .collect(),
        },
        None => {
            let mut y = scope.to_vec();
            y.sort();
            LocalityClass::NonLocal {
                s: external_parents(net, &y),
                y,
            }
        }
    }
}

/// Parents of members of `y` that are not themselves in `y`, in order of first appearance when
/// scanning each member's parent list.
pub fn external_parents(net: &NetworkSpec, y: &[VarId]) -> Vec<VarId> {
    let mut s = Vec::new();
    for &v in y {
        for &p in net.parents(v) {
            if !y.contains(&p) && !s.contains(&p) {
                s.push(p);
            }
        }
    }
    s
}
