//! Operations shared by every solver: building joints from CPTs, extracting CPTs from joints,
//! I-divergence, residuals, and structural consistency.

use crate::constraint::Constraint;
use crate::error::ModelError;
use crate::network::{Cpt, NetworkSpec, VarId};
use crate::table::{strides_into, walk_many, JointTable};

/// Dense joint `P(x) = prod_i P(x_i | pi_i)` over all variables in declared order.
pub fn joint_from_network(net: &NetworkSpec) -> JointTable {
    let scope: Vec<VarId> = net.ids().collect();
    let cards = net.cards();
    joint_from_cpts(&scope, &cards, net.cpts())
}

fn joint_from_cpts(scope: &[VarId], cards: &[usize], cpts: &[Cpt]) -> JointTable {
    let maps: Vec<Vec<usize>> = cpts
        .iter()
        .map(|cpt| {
            let mut family = cpt.parents().to_vec();
            family.push(cpt.child());
            let mut family_cards = cpt.parent_cards().to_vec();
            family_cards.push(cpt.child_card());
            strides_into(scope, &family, &family_cards)
        })
        .collect();
    let mut probs = vec![0.0; cards.iter().product()];
    walk_many(cards, &maps, |flat, idx| {
        probs[flat] = cpts
            .iter()
            .zip(idx)
            .map(|(cpt, &i)| cpt.table()[i])
            .product();
    });
    JointTable::from_raw(scope.to_vec(), cards.to_vec(), probs)
}

/// `q(child | parents)` with zero-probability parent rows filled uniform.
pub fn extract_cpt(q: &JointTable, child: VarId, parents: &[VarId]) -> Result<Cpt, ModelError> {
    let mut family = parents.to_vec();
    family.push(child);
    let weights = q.marginalize(&family)?;
    let cards = weights.cards().to_vec();
    let (child_card, parent_cards) = cards.split_last().expect("family is nonempty");
    Ok(Cpt::from_weights(
        child,
        *child_card,
        parents.to_vec(),
        parent_cards.to_vec(),
        weights.into_probs(),
    ))
}

/// Extracts every CPT of `net`'s DAG from `q`, which must range over all of `net`'s variables.
pub fn extract_network_cpts(q: &JointTable, net: &NetworkSpec) -> Result<Vec<Cpt>, ModelError> {
    check_full_scope(q, net)?;
    net.ids()
        .map(|v| extract_cpt(q, v, net.parents(v)))
        .collect()
}

/// Replaces `q` by the product of the CPTs extracted from it according to `net`'s DAG.
pub fn structural_projection(q: &JointTable, net: &NetworkSpec) -> Result<JointTable, ModelError> {
    let cpts = extract_network_cpts(q, net)?;
    Ok(joint_from_cpts(q.scope(), q.cards(), &cpts))
}

/// Largest entrywise change made by [`structural_projection`].
pub fn structural_residual(q: &JointTable, net: &NetworkSpec) -> Result<f64, ModelError> {
    structural_projection(q, net)?.max_abs_diff(q)
}

pub fn is_structurally_consistent(
    q: &JointTable,
    net: &NetworkSpec,
    tol: f64,
) -> Result<bool, ModelError> {
    Ok(structural_residual(q, net)? <= tol)
}

/// `I(p || q)` in nats; `+inf` when `q` does not dominate `p`.
pub fn i_divergence(p: &JointTable, q: &JointTable) -> Result<f64, ModelError> {
    if p.scope() != q.scope() || p.cards() != q.cards() {
        return Err(ModelError::ScopeMismatch(
            "divergence requires identical scopes".into(),
        ));
    }
    Ok(divergence_terms(
        p.probs().iter().copied().zip(q.probs().iter().copied()),
    ))
}

pub(crate) fn divergence_terms(pairs: impl Iterator<Item = (f64, f64)>) -> f64 {
    let mut total = 0.0;
    for (p, q) in pairs {
        if p > 0.0 {
            if q <= 0.0 {
                return f64::INFINITY;
            }
            total += p * (p / q).ln();
        }
    }
    // Rounding can push an exact zero slightly negative.
    total.max(0.0)
}

/// Max absolute difference between `q`'s marginal on `r`'s scope and `r`.
pub fn constraint_residual(q: &JointTable, r: &Constraint) -> Result<f64, ModelError> {
    q.marginalize(r.scope())?.max_abs_diff(r.dist())
}

fn check_full_scope(q: &JointTable, net: &NetworkSpec) -> Result<(), ModelError> {
    let full: Vec<VarId> = net.ids().collect();
    if q.scope() != full.as_slice() || q.cards() != net.cards().as_slice() {
        return Err(ModelError::ScopeMismatch(
            "table must range over all network variables in declared order".into(),
        ));
    }
    Ok(())
}
