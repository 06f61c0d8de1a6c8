//! Standard IPFP and E-IPFP over the full dense joint table.

use std::time::Instant;

use log::debug;

use super::{check_constraints, Algorithm, Monitor, RunReport, Schedule, StopPolicy, Termination};
use crate::constraint::Constraint;
use crate::error::SolveError;
use crate::measure::{
    constraint_residual, extract_network_cpts, i_divergence, joint_from_network,
    structural_residual,
};
use crate::network::NetworkSpec;
use crate::table::{strides_into, unflatten, walk, JointTable};
use crate::{DENSE_CELL_CEILING, DENSE_VARIABLE_CEILING};

pub use crate::measure::structural_projection;

/// One proportional-fitting step: `q'(x) = q(x) r(y) / q(y)`, with `q'(x) = 0` where `q(y) = 0`.
///
/// Fails when `r(y) > 0` on a cell where `q(y) = 0`, since no rescaling of `q` can satisfy `r`.
pub fn ipfp_step(q: &JointTable, r: &Constraint) -> Result<JointTable, SolveError> {
    let current = q.marginalize(r.scope())?;
    let ratio = fitting_ratios(&current, r.dist())?;
    let map = strides_into(q.scope(), r.scope(), r.dist().cards());
    let mut out = q.clone();
    let probs = out.probs_mut();
    walk(q.cards(), [&map], |flat, [y]| probs[flat] *= ratio[y]);
    Ok(out)
}

/// `r(y) / q(y)` per cell of the constraint scope, zero where both vanish.
pub(crate) fn fitting_ratios(
    current: &JointTable,
    target: &JointTable,
) -> Result<Vec<f64>, SolveError> {
    current
        .probs()
        .iter()
        .zip(target.probs())
        .enumerate()
        .map(|(cell, (&q, &r))| {
            if q > 0.0 {
                Ok(r / q)
            } else if r > 0.0 {
                Err(SolveError::Dominance {
                    constraint: None,
                    cell: unflatten(cell, target.cards()),
                    required: r,
                })
            } else {
                Ok(0.0)
            }
        })
        .collect()
}

pub(crate) fn check_dense(net: &NetworkSpec) -> Result<(), SolveError> {
    let cells = net.joint_cells();
    if net.len() > DENSE_VARIABLE_CEILING || cells > DENSE_CELL_CEILING {
        return Err(SolveError::DenseTooLarge {
            variables: net.len(),
            cells,
            ceiling: DENSE_VARIABLE_CEILING,
        });
    }
    Ok(())
}

/// Standard IPFP on the joint of `net`. Honors `sched.include_structural()`.
pub fn run_ipfp(
    net: &NetworkSpec,
    rs: &[Constraint],
    stop: &StopPolicy,
    sched: &Schedule,
) -> Result<(JointTable, RunReport), SolveError> {
    let algorithm = if sched.include_structural() {
        Algorithm::EIpfp
    } else {
        Algorithm::Ipfp
    };
    let run = run_dense(net, rs, stop, sched, algorithm)?;
    let divergence = i_divergence(&run.joint, &run.initial)?;
    let mut report = run.report;
    report.final_divergence = Some(divergence);
    Ok((run.joint, report))
}

/// E-IPFP: IPFP with the structural projection appended to every cycle. Returns a network with
/// the original DAG and the CPTs of the fitted joint.
pub fn run_e_ipfp(
    net: &NetworkSpec,
    rs: &[Constraint],
    stop: &StopPolicy,
    sched: &Schedule,
) -> Result<(NetworkSpec, RunReport), SolveError> {
    let sched = sched.clone().with_structural(true);
    let run = run_dense(net, rs, stop, &sched, Algorithm::EIpfp)?;
    let fitted = if rs.is_empty() {
        net.clone()
    } else {
        net.with_cpts(extract_network_cpts(&run.joint, net)?)?
    };
    let mut report = run.report;
    report.final_divergence = Some(i_divergence(&joint_from_network(&fitted), &run.initial)?);
    Ok((fitted, report))
}

struct DenseRun {
    initial: JointTable,
    joint: JointTable,
    report: RunReport,
}

fn run_dense(
    net: &NetworkSpec,
    rs: &[Constraint],
    stop: &StopPolicy,
    sched: &Schedule,
    algorithm: Algorithm,
) -> Result<DenseRun, SolveError> {
    check_dense(net)?;
    check_constraints(net, rs)?;
    sched.check(rs.len())?;
    let started = Instant::now();
    let initial = joint_from_network(net);
    let mut q = initial.clone();
    let structural = sched.include_structural();

    let mut monitor = Monitor::new(*stop);
    let mut cycles = 0;
    let mut termination = Termination::Converged;
    let mut projection_change = 0.0;

    if !rs.is_empty() {
        let mut previous = q.clone();
        loop {
            cycles += 1;
            for &i in sched.order() {
                q = ipfp_step(&q, &rs[i]).map_err(|e| e.at_constraint(i))?;
            }
            if structural {
                let projected = structural_projection(&q, net)?;
                projection_change = projected.max_abs_diff(&q)?;
                q = projected;
            }
            let adjustment = q.renormalize();
            if adjustment > 1e-12 {
                debug!("cycle {cycles}: joint renormalized by {adjustment:.3e}");
            }
            let delta = q.max_abs_diff(&previous)?;
            let worst = residuals(&q, rs)?
                .into_iter()
                .fold(projection_change, f64::max);
            if let Some(t) = monitor.observe(delta, worst) {
                termination = t;
                break;
            }
            std::mem::swap(&mut previous, &mut q);
            q.clone_from(&previous);
        }
    }

    let structural_residual = if structural {
        projection_change
    } else {
        structural_residual(&q, net)?
    };
    let report = RunReport {
        algorithm,
        cycles,
        wall_time: started.elapsed(),
        final_divergence: None,
        per_constraint_residuals: residuals(&q, rs)?,
        structural_residual,
        termination,
        delta_trace: monitor.into_trace(),
    };
    debug!(
        "{algorithm:?}: {termination:?} after {cycles} cycles, max residual {:.3e}",
        report.max_residual()
    );
    Ok(DenseRun {
        initial,
        joint: q,
        report,
    })
}

fn residuals(q: &JointTable, rs: &[Constraint]) -> Result<Vec<f64>, SolveError> {
    rs.iter()
        .map(|r| constraint_residual(q, r).map_err(SolveError::from))
        .collect()
}
