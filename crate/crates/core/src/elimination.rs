//! Marginals of a factored network by variable elimination, without building the full joint.

use crate::error::ModelError;
use crate::network::{NetworkSpec, VarId};
use crate::table::JointTable;

/// Sum-product of the CPTs of the variables accepted by `include`, summed onto `keep` and laid
/// out in `keep` order.
///
/// CPTs whose child is outside `keep` and not referenced by any other selected CPT sum to one
/// and are dropped up front.
pub(crate) fn sum_product(
    net: &NetworkSpec,
    include: impl Fn(VarId) -> bool,
    keep: &[VarId],
) -> JointTable {
    let mut selected: Vec<VarId> = net.ids().filter(|&v| include(v)).collect();
    loop {
        let barren = selected.iter().position(|&v| {
            !keep.contains(&v)
                && !selected
                    .iter()
                    .any(|&other| net.parents(other).contains(&v))
        });
        match barren {
            Some(pos) => {
                selected.remove(pos);
            }
            None => break,
        }
    }

    let mut factors: Vec<JointTable> = selected.iter().map(|&v| net.cpt(v).as_factor()).collect();
    loop {
        let mut best: Option<(usize, VarId)> = None;
        for factor in &factors {
            for &v in factor.scope() {
                if keep.contains(&v) {
                    continue;
                }
                let cost = merged_size(&factors, v);
                if best.is_none_or(|(c, b)| cost < c || (cost == c && v < b)) {
                    best = Some((cost, v));
                }
            }
        }
        let Some((_, var)) = best else { break };
        let (touching, rest): (Vec<_>, Vec<_>) =
            factors.into_iter().partition(|f| f.scope().contains(&var));
        let merged = touching
            .iter()
            .skip(1)
            .fold(touching[0].clone(), |acc, f| acc.product(f));
        let remaining: Vec<VarId> = merged
            .scope()
            .iter()
            .copied()
            .filter(|&v| v != var)
            .collect();
        factors = rest;
        factors.push(merged.sum_onto(&remaining));
    }

    let cards: Vec<usize> = keep.iter().map(|&v| net.cardinality(v)).collect();
    factors
        .iter()
        .fold(JointTable::ones(keep.to_vec(), cards), |acc, f| {
            acc.product(f)
        })
        .sum_onto(keep)
}

fn merged_size(factors: &[JointTable], var: VarId) -> usize {
    let mut scope: Vec<(VarId, usize)> = Vec::new();
    for f in factors.iter().filter(|f| f.scope().contains(&var)) {
        for (&v, &c) in f.scope().iter().zip(f.cards()) {
            if !scope.iter().any(|(s, _)| *s == v) {
                scope.push((v, c));
            }
        }
    }
    scope.iter().map(|(_, c)| c).product()
}

/// Marginal distribution of `net` over `query` (in `query` order).
pub fn marginal(net: &NetworkSpec, query: &[VarId]) -> Result<JointTable, ModelError> {
    for (i, v) in query.iter().enumerate() {
        if v.0 >= net.len() {
            return Err(ModelError::UnknownVariable(v.to_string()));
        }
        if query[..i].contains(v) {
            return Err(ModelError::DuplicateScope(*v));
        }
    }
    Ok(sum_product(net, |_| true, query))
}

/// `I(P || Q)` between two networks over the same DAG, computed family by family:
/// `sum_i sum_{x_i, pi_i} P(x_i, pi_i) ln(p_i(x_i | pi_i) / q_i(x_i | pi_i))`.
pub fn factored_divergence(p: &NetworkSpec, q: &NetworkSpec) -> Result<f64, ModelError> {
    if !p.same_structure(q) {
        return Err(ModelError::ScopeMismatch(
            "networks must share variables and parent lists".into(),
        ));
    }
    let mut total = 0.0;
    for v in p.ids() {
        let pc = p.cpt(v);
        let qc = q.cpt(v);
        let mut family = pc.parents().to_vec();
        family.push(v);
        let weights = sum_product(p, |_| true, &family);
        for ((&w, &pv), &qv) in weights.probs().iter().zip(pc.table()).zip(qc.table()) {
            if w > 0.0 && pv > 0.0 {
                if qv <= 0.0 {
                    return Ok(f64::INFINITY);
                }
                total += w * (pv / qv).ln();
            }
        }
    }
    Ok(total.max(0.0))
}
