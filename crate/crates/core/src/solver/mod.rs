//! Iterative fitting drivers and the types they share.
//!
//! A *cycle* is one pass over the schedule. Runs stop when the cycle-to-cycle change and every
//! residual are at most `epsilon`, when the cycle budget is exhausted, or when the oscillation
//! detector fires (see [`StopPolicy`]).

use std::time::Duration;

use log::warn;
use serde::Serialize;

use crate::constraint::Constraint;
use crate::error::{ModelError, SolveError};
use crate::network::NetworkSpec;

pub mod decomposed;
pub mod dense;

/// Termination rule for a run.
///
/// Oscillation: once more than `oscillation_window` cycles have run and the worst residual is
/// still above `epsilon`, the run ends as [`Termination::Oscillating`] if the residual has
/// shrunk by less than 1% relative to its value `oscillation_window` cycles earlier and the
/// cycle-to-cycle change has either also shrunk by less than 1% or fallen to `epsilon` or
/// below. This catches both cycling between incompatible targets and settling at a point that
/// misses the constraints, while letting slow but steady convergence run on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopPolicy {
    epsilon: f64,
    max_cycles: usize,
    oscillation_window: usize,
}

impl StopPolicy {
    pub const DEFAULT_EPSILON: f64 = 1e-9;
    pub const DEFAULT_MAX_CYCLES: usize = 10_000;
    pub const DEFAULT_OSCILLATION_WINDOW: usize = 50;
    /// Ratio to the value one window earlier at or above which a quantity counts as stalled.
    pub const STALL_RATIO: f64 = 0.99;

    pub fn new(
        epsilon: f64,
        max_cycles: usize,
        oscillation_window: usize,
    ) -> Result<Self, SolveError> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(SolveError::StopPolicy(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        if max_cycles < 1 {
            return Err(SolveError::StopPolicy(
                "maxCycles must be at least 1".into(),
            ));
        }
        if oscillation_window < 2 {
            return Err(SolveError::StopPolicy(
                "oscillation window must be at least 2".into(),
            ));
        }
        Ok(StopPolicy {
            epsilon,
            max_cycles,
            oscillation_window,
        })
    }

    pub fn with_epsilon(epsilon: f64) -> Result<Self, SolveError> {
        Self::new(
            epsilon,
            Self::DEFAULT_MAX_CYCLES,
            Self::DEFAULT_OSCILLATION_WINDOW,
        )
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn max_cycles(&self) -> usize {
        self.max_cycles
    }

    pub fn oscillation_window(&self) -> usize {
        self.oscillation_window
    }
}

impl Default for StopPolicy {
    fn default() -> Self {
        StopPolicy {
            epsilon: Self::DEFAULT_EPSILON,
            max_cycles: Self::DEFAULT_MAX_CYCLES,
            oscillation_window: Self::DEFAULT_OSCILLATION_WINDOW,
        }
    }
}

/// Order in which constraints are applied within a cycle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    order: Vec<usize>,
    include_structural: bool,
}

impl Schedule {
    /// Constraints in the order given.
    pub fn document_order(count: usize) -> Self {
        Schedule {
            order: (0..count).collect(),
            include_structural: false,
        }
    }

    /// Constraints sorted (stably) by the topological position of their deepest scope
    /// member, so constraints on ancestors are applied before those on descendants.
    pub fn ancestors_first(net: &NetworkSpec, rs: &[Constraint]) -> Self {
        let rank = net.topological_rank();
        let mut order: Vec<usize> = (0..rs.len()).collect();
        order.sort_by_key(|&i| rs[i].scope().iter().map(|v| rank[v.0]).max());
        Schedule {
            order,
            include_structural: false,
        }
    }

    pub fn from_order(order: Vec<usize>) -> Result<Self, SolveError> {
        let mut seen = vec![false; order.len()];
        for &i in &order {
            if i >= order.len() || std::mem::replace(&mut seen[i], true) {
                return Err(SolveError::Schedule(format!(
                    "{order:?} is not a permutation"
                )));
            }
        }
        Ok(Schedule {
            order,
            include_structural: false,
        })
    }

    /// Appends the structural projection as the last step of every cycle.
    pub fn with_structural(mut self, include: bool) -> Self {
        self.include_structural = include;
        self
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn include_structural(&self) -> bool {
        self.include_structural
    }

    pub(crate) fn check(&self, constraints: usize) -> Result<(), SolveError> {
        if self.order.len() != constraints {
            return Err(SolveError::Schedule(format!(
                "schedule covers {} constraints, {} given",
                self.order.len(),
                constraints
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Algorithm {
    #[serde(rename = "IPFP")]
    Ipfp,
    #[serde(rename = "E-IPFP")]
    EIpfp,
    #[serde(rename = "D-IPFP")]
    DIpfp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Termination {
    Converged,
    MaxCycles,
    Oscillating,
}

/// Outcome of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub algorithm: Algorithm,
    pub cycles: usize,
    pub wall_time: Duration,
    /// `I(result || original)` in nats; `None` when it was not computed.
    pub final_divergence: Option<f64>,
    pub per_constraint_residuals: Vec<f64>,
    /// IPFP: distance of the result from its structural projection. E-IPFP: change made by the
    /// final projection step. D-IPFP: zero, the result is a product of CPTs.
    pub structural_residual: f64,
    pub termination: Termination,
    /// Cycle-to-cycle change, one entry per cycle.
    pub delta_trace: Vec<f64>,
}

impl RunReport {
    /// Logarithm base of `final_divergence`.
    pub const LOG_BASE: &'static str = "e";

    pub fn max_residual(&self) -> f64 {
        self.per_constraint_residuals
            .iter()
            .copied()
            .fold(0.0, f64::max)
    }

    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }
}

pub(crate) struct Monitor {
    policy: StopPolicy,
    deltas: Vec<f64>,
    residuals: Vec<f64>,
}

impl Monitor {
    pub(crate) fn new(policy: StopPolicy) -> Self {
        Monitor {
            policy,
            deltas: Vec::new(),
            residuals: Vec::new(),
        }
    }

    /// Records one cycle; returns a termination cause if the run should stop.
    pub(crate) fn observe(&mut self, delta: f64, residual: f64) -> Option<Termination> {
        self.deltas.push(delta);
        self.residuals.push(residual);
        let eps = self.policy.epsilon;
        if delta <= eps && residual <= eps {
            return Some(Termination::Converged);
        }
        let n = self.deltas.len();
        let window = self.policy.oscillation_window;
        if residual > eps && n > window {
            let then = n - 1 - window;
            let ratio = StopPolicy::STALL_RATIO;
            let stalled_delta = delta >= ratio * self.deltas[then] || delta <= eps;
            let stalled_residual = residual >= ratio * self.residuals[then];
            if stalled_delta && stalled_residual {
                warn!(
                    "no progress over {window} cycles (change {delta:.3e}, residual {residual:.3e}); \
                     the constraints cannot all be met from here"
                );
                return Some(Termination::Oscillating);
            }
        }
        if n >= self.policy.max_cycles {
            return Some(Termination::MaxCycles);
        }
        None
    }

    pub(crate) fn into_trace(self) -> Vec<f64> {
        self.deltas
    }
}

/// Every constraint must range over variables of `net` with matching cardinalities.
pub(crate) fn check_constraints(net: &NetworkSpec, rs: &[Constraint]) -> Result<(), SolveError> {
    for r in rs {
        for (&v, &card) in r.scope().iter().zip(r.dist().cards()) {
            if v.0 >= net.len() {
                return Err(ModelError::UnknownVariable(v.to_string()).into());
            }
            if net.cardinality(v) != card {
                return Err(ModelError::CardinalityMismatch {
                    name: net.name(v).to_string(),
                    expected: net.cardinality(v),
                    found: card,
                }
                .into());
            }
        }
    }
    Ok(())
}
