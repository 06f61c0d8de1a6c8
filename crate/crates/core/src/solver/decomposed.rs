//! D-IPFP: fit constraints by editing only the CPTs they touch.
//!
//! A local constraint (one variable plus some of its parents) rescales that variable's CPT and
//! renormalizes each row. A non-local constraint over `Y` works on the subnet table
//! `Q'(y | s) = prod_{j in Y} P(x_j | pi_j)`, where `S` are the parents of `Y` outside `Y`.
//!
//! The rest of the network enters the subnet only through the *context* factor
//! `c(y, s) = sum_{x outside Y and S} prod_{l not in Y} P(x_l | pi_l)`, so that the network
//! marginal over `Y` and `S` factors as `Q(y, s) = Q'(y | s) c(y, s)`. The context does not
//! depend on the CPTs of `Y`, which lets the inner loop run on tables of `|Y| + |S|` variables
//! without touching the rest of the network. When no member of `S` descends from `Y`,
//! `c(y, s)` reduces to the marginal `Q(s)`.

use std::time::Instant;

use log::debug;

use super::dense::fitting_ratios;
use super::{check_constraints, Algorithm, Monitor, RunReport, Schedule, StopPolicy, Termination};
use crate::constraint::{classify_constraint, external_parents, Constraint, LocalityClass};
use crate::elimination::{factored_divergence, marginal, sum_product};
use crate::error::{ModelError, SolveError};
use crate::measure::extract_cpt;
use crate::network::{Cpt, NetworkSpec, VarId};
use crate::table::{max_abs_diff, strides_into, walk, JointTable};

/// Tuning for [`run_d_ipfp_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecomposedOptions {
    /// Largest admissible `|Y| + |S|` (for local constraints, the target's family size).
    pub max_subnet_vars: usize,
    /// Inner-loop tolerance on the subnet table; `None` uses the run's epsilon.
    pub inner_epsilon: Option<f64>,
    pub inner_max_iterations: usize,
}

impl DecomposedOptions {
    pub const DEFAULT_MAX_SUBNET_VARS: usize = 20;
}

impl Default for DecomposedOptions {
    fn default() -> Self {
        DecomposedOptions {
            max_subnet_vars: Self::DEFAULT_MAX_SUBNET_VARS,
            inner_epsilon: None,
            inner_max_iterations: 1_000,
        }
    }
}

/// The conditional table `Q'(y | s)` of a variable group together with its context factor.
///
/// Both tables are laid out over `s ++ y`, so each `s` configuration owns a contiguous block
/// of `y` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalSubnet {
    y: Vec<VarId>,
    s: Vec<VarId>,
    cond: JointTable,
    context: JointTable,
}

impl LocalSubnet {
    pub fn y(&self) -> &[VarId] {
        &self.y
    }

    pub fn s(&self) -> &[VarId] {
        &self.s
    }

    /// `Q'(y | s)` over scope `s ++ y`.
    pub fn cond_table(&self) -> &JointTable {
        &self.cond
    }

    /// Context factor over scope `s ++ y`.
    pub fn context(&self) -> &JointTable {
        &self.context
    }

    /// `Q'(y | s)` for explicit states.
    pub fn cond(&self, s_states: &[usize], y_states: &[usize]) -> f64 {
        let states: Vec<usize> = s_states.iter().chain(y_states).copied().collect();
        self.cond.get(&states)
    }

    /// Number of cells in the subnet table.
    pub fn cells(&self) -> usize {
        self.cond.len()
    }

    fn block(&self) -> usize {
        self.cond.cards()[self.s.len()..].iter().product()
    }

    /// The network marginal over `s ++ y`: `Q'(y | s) c(y, s)`.
    pub fn joint(&self) -> JointTable {
        let probs = self
            .cond
            .probs()
            .iter()
            .zip(self.context.probs())
            .map(|(a, b)| a * b)
            .collect();
        JointTable::from_raw(
            self.cond.scope().to_vec(),
            self.cond.cards().to_vec(),
            probs,
        )
    }

    /// Current marginal `Q(y)` implied by the subnet.
    pub fn y_marginal(&self) -> JointTable {
        self.joint().sum_onto(&self.y)
    }

    /// Recomputes `Q'(y | s)` from `net`'s CPTs, keeping the context.
    fn refreshed(&self, net: &NetworkSpec) -> LocalSubnet {
        LocalSubnet {
            cond: cond_product(net, &self.y, self.cond.scope()),
            ..self.clone()
        }
    }
}

fn cond_product(net: &NetworkSpec, y: &[VarId], scope: &[VarId]) -> JointTable {
    let cards = scope.iter().map(|&v| net.cardinality(v)).collect();
    y.iter()
        .fold(JointTable::ones(scope.to_vec(), cards), |acc, &v| {
            acc.product(&net.cpt(v).as_factor())
        })
        .sum_onto(scope)
}

fn check_group(net: &NetworkSpec, y: &[VarId]) -> Result<(), ModelError> {
    if y.is_empty() {
        return Err(ModelError::EmptyScope);
    }
    for (i, v) in y.iter().enumerate() {
        if v.0 >= net.len() {
            return Err(ModelError::UnknownVariable(v.to_string()));
        }
        if y[..i].contains(v) {
            return Err(ModelError::DuplicateScope(*v));
        }
    }
    Ok(())
}

/// Multiplies the CPTs of `y` into `Q'(y | s)` and computes the context factor by eliminating
/// the rest of the network.
pub fn build_local_subnet(net: &NetworkSpec, y: &[VarId]) -> Result<LocalSubnet, ModelError> {
    check_group(net, y)?;
    let s = external_parents(net, y);
    let scope: Vec<VarId> = s.iter().chain(y).copied().collect();
    let cond = cond_product(net, y, &scope);
    let context = sum_product(net, |v| !y.contains(&v), &scope);
    Ok(LocalSubnet {
        y: y.to_vec(),
        s,
        cond,
        context,
    })
}

/// One scaling of the subnet table: `Q'(y | s) r(y) / Q(y)`, renormalized per `s`.
pub fn nonlocal_update(sub: &LocalSubnet, r: &Constraint) -> Result<LocalSubnet, SolveError> {
    if r.scope().len() != sub.y.len() || !r.scope().iter().all(|v| sub.y.contains(v)) {
        return Err(ModelError::ScopeMismatch(
            "constraint scope differs from the subnet's variable group".into(),
        )
        .into());
    }
    let current = sub.joint().sum_onto(r.scope());
    let ratio = fitting_ratios(&current, r.dist())?;
    let map = strides_into(sub.cond.scope(), r.scope(), r.dist().cards());
    let mut cond = sub.cond.clone();
    let probs = cond.probs_mut();
    walk(sub.cond.cards(), [&map], |flat, [y]| {
        probs[flat] *= ratio[y]
    });

    let block = sub.block();
    for row in probs.chunks_mut(block) {
        let total: f64 = row.iter().sum();
        if total > 0.0 {
            row.iter_mut().for_each(|p| *p /= total);
        } else {
            debug!("subnet row with zero mass after scaling; filled uniform");
            row.iter_mut().for_each(|p| *p = 1.0 / block as f64);
        }
    }
    Ok(LocalSubnet {
        cond,
        ..sub.clone()
    })
}

/// CPTs `P(x_j | pi_j)` for every `j` in the subnet group, conditioned from the subnet joint
/// `Q'(y | s) c(y, s)`. Returned in the order of [`LocalSubnet::y`].
pub fn extract_subnet_cpts(sub: &LocalSubnet, net: &NetworkSpec) -> Result<Vec<Cpt>, ModelError> {
    let joint = sub.joint();
    sub.y
        .iter()
        .map(|&v| extract_cpt(&joint, v, net.parents(v)))
        .collect()
}

/// Rescales a single CPT by `r(y) / Q(y)` and renormalizes each row. `r` must be local to the
/// CPT's child; `net` supplies the current marginal `Q(y)`.
pub fn local_update(cpt: &Cpt, r: &Constraint, net: &NetworkSpec) -> Result<Cpt, SolveError> {
    match classify_constraint(net, r) {
        LocalityClass::Local { target, .. } if target == cpt.child() => {}
        _ => {
            return Err(ModelError::ScopeMismatch(format!(
                "constraint is not local to variable '{}'",
                net.name(cpt.child())
            ))
            .into())
        }
    }
    let current = marginal(net, r.scope())?;
    let ratio = fitting_ratios(&current, r.dist())?;
    let factor = cpt.as_factor();
    let map = strides_into(factor.scope(), r.scope(), r.dist().cards());
    let mut weights = factor.probs().to_vec();
    walk(factor.cards(), [&map], |flat, [y]| {
        weights[flat] *= ratio[y]
    });
    Ok(Cpt::from_weights(
        cpt.child(),
        cpt.child_card(),
        cpt.parents().to_vec(),
        cpt.parent_cards().to_vec(),
        weights,
    ))
}

/// D-IPFP with default [`DecomposedOptions`].
pub fn run_d_ipfp(
    net: &NetworkSpec,
    rs: &[Constraint],
    stop: &StopPolicy,
    sched: &Schedule,
) -> Result<(NetworkSpec, RunReport), SolveError> {
    run_d_ipfp_with(net, rs, stop, sched, &DecomposedOptions::default())
}

/// How the driver applies a constraint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UpdatePlan {
    /// Rescale this one CPT.
    Cpt(VarId),
    /// Fit through the subnet of this variable group.
    Subnet(Vec<VarId>),
}

/// A local constraint on its target alone edits that CPT. One that also constrains some of the
/// target's parents cannot be met by the target's CPT alone, since that CPT leaves the parents'
/// marginal unchanged, so it goes through the subnet of its whole scope like a non-local one.
pub fn update_plan(class: &LocalityClass) -> UpdatePlan {
    match class {
        LocalityClass::Local {
            target,
            constrained_parents,
        } if constrained_parents.is_empty() => UpdatePlan::Cpt(*target),
        LocalityClass::Local {
            target,
            constrained_parents,
        } => {
            let mut y = constrained_parents.clone();
            y.push(*target);
            y.sort();
            UpdatePlan::Subnet(y)
        }
        LocalityClass::NonLocal { y, .. } => UpdatePlan::Subnet(y.clone()),
    }
}

/// Number of variables the update of a constraint works on: the target's family for a CPT
/// update, `|Y| + |S|` for a subnet.
pub fn subnet_size(net: &NetworkSpec, class: &LocalityClass) -> usize {
    match update_plan(class) {
        UpdatePlan::Cpt(target) => net.parents(target).len() + 1,
        UpdatePlan::Subnet(y) => y.len() + external_parents(net, &y).len(),
    }
}

pub fn run_d_ipfp_with(
    net: &NetworkSpec,
    rs: &[Constraint],
    stop: &StopPolicy,
    sched: &Schedule,
    options: &DecomposedOptions,
) -> Result<(NetworkSpec, RunReport), SolveError> {
    check_constraints(net, rs)?;
    sched.check(rs.len())?;
    let classes: Vec<LocalityClass> = rs.iter().map(|r| classify_constraint(net, r)).collect();
    let plans: Vec<UpdatePlan> = classes.iter().map(update_plan).collect();
    for (i, class) in classes.iter().enumerate() {
        let size = subnet_size(net, class);
        if size > options.max_subnet_vars {
            return Err(SolveError::SubnetTooLarge {
                constraint: i,
                size,
                budget: options.max_subnet_vars,
            });
        }
    }
    let inner_epsilon = options.inner_epsilon.unwrap_or(stop.epsilon());
    let started = Instant::now();

    let mut current = net.clone();
    let mut monitor = Monitor::new(*stop);
    let mut cycles = 0;
    let mut termination = Termination::Converged;

    if !rs.is_empty() {
        let mut previous: Vec<Vec<f64>> =
            current.cpts().iter().map(|c| c.table().to_vec()).collect();
        loop {
            cycles += 1;
            for &i in sched.order() {
                apply_constraint(&mut current, &rs[i], &plans[i], inner_epsilon, options)
                    .map_err(|e| e.at_constraint(i))?;
            }
            let delta = current
                .cpts()
                .iter()
                .zip(&previous)
                .map(|(c, old)| max_abs_diff(c.table(), old))
                .fold(0.0, f64::max);
            let worst = residuals(&current, rs)?.into_iter().fold(0.0, f64::max);
            if let Some(t) = monitor.observe(delta, worst) {
                termination = t;
                break;
            }
            for (old, c) in previous.iter_mut().zip(current.cpts()) {
                old.copy_from_slice(c.table());
            }
        }
    }

    let report = RunReport {
        algorithm: Algorithm::DIpfp,
        cycles,
        wall_time: started.elapsed(),
        final_divergence: Some(factored_divergence(&current, net)?),
        per_constraint_residuals: residuals(&current, rs)?,
        structural_residual: 0.0,
        termination,
        delta_trace: monitor.into_trace(),
    };
    debug!(
        "D-IPFP: {termination:?} after {cycles} cycles, max residual {:.3e}",
        report.max_residual()
    );
    Ok((current, report))
}

fn apply_constraint(
    net: &mut NetworkSpec,
    r: &Constraint,
    plan: &UpdatePlan,
    inner_epsilon: f64,
    options: &DecomposedOptions,
) -> Result<(), SolveError> {
    match plan {
        UpdatePlan::Cpt(target) => {
            let updated = local_update(net.cpt(*target), r, net)?;
            net.set_cpt(updated);
        }
        UpdatePlan::Subnet(y) => {
            let mut sub = build_local_subnet(net, y)?;
            let mut converged = false;
            for _ in 0..options.inner_max_iterations {
                let updated = nonlocal_update(&sub, r)?;
                for cpt in extract_subnet_cpts(&updated, net)? {
                    net.set_cpt(cpt);
                }
                let rebuilt = sub.refreshed(net);
                let change = rebuilt.cond.max_abs_diff(&sub.cond)?;
                sub = rebuilt;
                if change <= inner_epsilon {
                    converged = true;
                    break;
                }
            }
            if !converged {
                debug!(
                    "inner loop for group {y:?} stopped at {} iterations",
                    options.inner_max_iterations
                );
            }
        }
    }
    Ok(())
}

fn residuals(net: &NetworkSpec, rs: &[Constraint]) -> Result<Vec<f64>, SolveError> {
    rs.iter()
        .map(|r| Ok(marginal(net, r.scope())?.max_abs_diff(r.dist())?))
        .collect()
}
