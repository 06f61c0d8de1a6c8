//! Brute-force reference computations for tests.
//!
//! Everything here enumerates instantiations one by one and looks CPT entries up with its own
//! index arithmetic. None of the table, elimination or solver code is reused, so agreement
//! with those modules is evidence rather than tautology.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::constraint::Constraint;
use crate::network::NetworkSpec;

/// Largest joint the oracle will enumerate (16 binary variables).
pub const ORACLE_CELL_CEILING: usize = 1 << 16;
/// Largest table [`oracle_feasible_sample`] accepts, in variables.
pub const SAMPLE_VARIABLE_CEILING: usize = 4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("joint has {cells} cells, oracle ceiling is {ceiling}")]
    TooLarge { cells: usize, ceiling: usize },
    #[error("sampling needs at most {SAMPLE_VARIABLE_CEILING} variables, got {0}")]
    SampleTooLarge(usize),
    #[error("constraint variable {0} is not in the joint")]
    NotInJoint(usize),
}

/// An explicit list of `(instantiation, probability)` pairs over variables `0..cards.len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnumJoint {
    pub cards: Vec<usize>,
    pub assignments: Vec<(Vec<usize>, f64)>,
}

fn instantiations(cards: &[usize]) -> Vec<Vec<usize>> {
    let total: usize = cards.iter().product();
    let mut out = Vec::with_capacity(total);
    let mut current = vec![0; cards.len()];
    for _ in 0..total {
        out.push(current.clone());
        for axis in (0..cards.len()).rev() {
            current[axis] += 1;
            if current[axis] < cards[axis] {
                break;
            }
            current[axis] = 0;
        }
    }
    out
}

fn cpt_entry(net: &NetworkSpec, var: usize, x: &[usize]) -> f64 {
    let cpt = net.cpt(crate::network::VarId(var));
    let mut row = 0;
    for p in cpt.parents() {
        row = row * net.cardinality(*p) + x[p.0];
    }
    cpt.table()[row * cpt.child_card() + x[var]]
}

/// `P(x) = prod_i P(x_i | pi_i)` evaluated separately for every instantiation.
pub fn oracle_joint(net: &NetworkSpec) -> Result<EnumJoint, OracleError> {
    let cards: Vec<usize> = net.ids().map(|v| net.cardinality(v)).collect();
    let cells = cards
        .iter()
        .try_fold(1usize, |acc, &c| acc.checked_mul(c))
        .unwrap_or(usize::MAX);
    if cells > ORACLE_CELL_CEILING {
        return Err(OracleError::TooLarge {
            cells,
            ceiling: ORACLE_CELL_CEILING,
        });
    }
    let assignments = instantiations(&cards)
        .into_iter()
        .map(|x| {
            let mut p = 1.0;
            for var in 0..cards.len() {
                p *= cpt_entry(net, var, &x);
            }
            (x, p)
        })
        .collect();
    Ok(EnumJoint { cards, assignments })
}

impl EnumJoint {
    pub fn total(&self) -> f64 {
        self.assignments.iter().map(|(_, p)| p).sum()
    }

    pub fn prob(&self, x: &[usize]) -> f64 {
        // Assignments are normally in odometer order; fall back to a scan otherwise.
        let mut idx = 0;
        for (state, card) in x.iter().zip(&self.cards) {
            idx = idx * card + state;
        }
        if let Some((y, p)) = self.assignments.get(idx) {
            if y == x {
                return *p;
            }
        }
        self.assignments
            .iter()
            .find(|(y, _)| y == x)
            .map_or(0.0, |(_, p)| *p)
    }

    /// Sums over every variable not in `vars`; keys are states of `vars` in the given order.
    pub fn marginal(&self, vars: &[usize]) -> BTreeMap<Vec<usize>, f64> {
        let mut out = BTreeMap::new();
        for key in instantiations(&vars.iter().map(|&v| self.cards[v]).collect::<Vec<_>>()) {
            out.insert(key, 0.0);
        }
        for (x, p) in &self.assignments {
            let key: Vec<usize> = vars.iter().map(|&v| x[v]).collect();
            *out.get_mut(&key).expect("all keys present") += p;
        }
        out
    }

    /// `P(child | parents)` as a map from parent states to the child's distribution; rows with
    /// zero parent mass are uniform.
    pub fn conditional(&self, child: usize, parents: &[usize]) -> BTreeMap<Vec<usize>, Vec<f64>> {
        let mut family = parents.to_vec();
        family.push(child);
        let joint = self.marginal(&family);
        let mut out: BTreeMap<Vec<usize>, Vec<f64>> = BTreeMap::new();
        for (key, p) in joint {
            let (c, pa) = key.split_last().expect("family is nonempty");
            out.entry(pa.to_vec())
                .or_insert_with(|| vec![0.0; self.cards[child]])[*c] = p;
        }
        for row in out.values_mut() {
            let total: f64 = row.iter().sum();
            let n = row.len() as f64;
            for p in row.iter_mut() {
                *p = if total > 0.0 { *p / total } else { 1.0 / n };
            }
        }
        out
    }

    /// The product of the conditionals this joint induces on `net`'s DAG.
    pub fn projected(&self, net: &NetworkSpec) -> EnumJoint {
        let tables: Vec<BTreeMap<Vec<usize>, Vec<f64>>> = net
            .ids()
            .map(|v| {
                let parents: Vec<usize> = net.parents(v).iter().map(|p| p.0).collect();
                self.conditional(v.0, &parents)
            })
            .collect();
        let assignments = self
            .assignments
            .iter()
            .map(|(x, _)| {
                let mut p = 1.0;
                for v in net.ids() {
                    let pa: Vec<usize> = net.parents(v).iter().map(|q| x[q.0]).collect();
                    p *= tables[v.0][&pa][x[v.0]];
                }
                (x.clone(), p)
            })
            .collect();
        EnumJoint {
            cards: self.cards.clone(),
            assignments,
        }
    }

    pub fn max_abs_diff(&self, other: &EnumJoint) -> f64 {
        self.assignments
            .iter()
            .map(|(x, p)| (p - other.prob(x)).abs())
            .fold(0.0, f64::max)
    }
}

fn target(r: &Constraint) -> BTreeMap<Vec<usize>, f64> {
    let cards = r.dist().cards();
    instantiations(cards)
        .into_iter()
        .zip(r.dist().probs())
        .map(|(k, &p)| (k, p))
        .collect()
}

fn scope_of(r: &Constraint) -> Vec<usize> {
    r.scope().iter().map(|v| v.0).collect()
}

/// `sum_x p(x) ln(p(x) / q(x))`, `+inf` if `q` misses mass of `p`.
pub fn oracle_kl(p: &EnumJoint, q: &EnumJoint) -> f64 {
    let mut total = 0.0;
    for (x, px) in &p.assignments {
        if *px > 0.0 {
            let qx = q.prob(x);
            if qx <= 0.0 {
                return f64::INFINITY;
            }
            total += px * (px / qx).ln();
        }
    }
    total
}

/// Largest `|q(y) - r(y)|`.
pub fn oracle_residual(q: &EnumJoint, r: &Constraint) -> f64 {
    let m = q.marginal(&scope_of(r));
    target(r)
        .iter()
        .map(|(k, rv)| (m[k] - rv).abs())
        .fold(0.0, f64::max)
}

/// `q(x) r(y) / q(y)`, or `None` when some `r(y) > 0` has `q(y) = 0`.
pub fn oracle_fit(q: &EnumJoint, r: &Constraint) -> Option<EnumJoint> {
    let vars = scope_of(r);
    let m = q.marginal(&vars);
    let t = target(r);
    let mut assignments = Vec::with_capacity(q.assignments.len());
    for (x, p) in &q.assignments {
        let key: Vec<usize> = vars.iter().map(|&v| x[v]).collect();
        let (qy, ry) = (m[&key], t[&key]);
        let value = if qy > 0.0 {
            p * ry / qy
        } else if ry > 0.0 {
            return None;
        } else {
            0.0
        };
        assignments.push((x.clone(), value));
    }
    Some(EnumJoint {
        cards: q.cards.clone(),
        assignments,
    })
}

/// `count` tables over `q0`'s variables that satisfy `r` exactly, deterministic per `seed`.
///
/// Each starts as either a uniform-Dirichlet table or `q0` with every entry multiplied by
/// `exp(u)` for `u` drawn at a random scale, and is then fitted to `r` with one scaling step.
/// Candidates that cannot be fitted are redrawn.
pub fn oracle_feasible_sample(
    q0: &EnumJoint,
    r: &Constraint,
    count: usize,
    seed: u64,
) -> Result<Vec<EnumJoint>, OracleError> {
    if q0.cards.len() > SAMPLE_VARIABLE_CEILING {
        return Err(OracleError::SampleTooLarge(q0.cards.len()));
    }
    if let Some(v) = scope_of(r).into_iter().find(|&v| v >= q0.cards.len()) {
        return Err(OracleError::NotInJoint(v));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let near = rng.gen_bool(0.5);
        let scale = 10f64.powf(rng.gen_range(-3.0..0.3));
        let mut raw: Vec<(Vec<usize>, f64)> = q0
            .assignments
            .iter()
            .map(|(x, p)| {
                let w = if near {
                    p * rng.gen_range(-scale..scale).exp()
                } else {
                    -(1.0 - rng.gen::<f64>()).ln()
                };
                (x.clone(), w)
            })
            .collect();
        let total: f64 = raw.iter().map(|(_, w)| w).sum();
        if total <= 0.0 {
            continue;
        }
        raw.iter_mut().for_each(|(_, w)| *w /= total);
        let candidate = EnumJoint {
            cards: q0.cards.clone(),
            assignments: raw,
        };
        if let Some(fitted) = oracle_fit(&candidate, r) {
            out.push(fitted);
        }
    }
    Ok(out)
}
