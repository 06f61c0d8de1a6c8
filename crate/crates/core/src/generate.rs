//! Seeded random instances: a DAG with CPTs, plus constraints that are jointly satisfiable.
//!
//! Constraint values are marginals of a second network, the *witness*, over the same DAG. Its
//! CPT rows are the originals multiplied entrywise by `exp(u)`, `u ~ U(-perturbation,
//! perturbation)`, and renormalized. Every constraint set therefore has an exact solution.
//!
//! By default only the CPTs that D-IPFP edits for some constraint are perturbed, so a solution
//! also exists among networks that differ from the original in those CPTs alone. With
//! [`GenConfig::perturb_all_cpts`] every CPT is perturbed; constraints then stay consistent, but
//! meeting one of them may require editing CPTs outside its scope, which D-IPFP never does.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::constraint::{classify_scope, Constraint};
use crate::elimination::marginal;
use crate::network::{NetworkSpec, VarId};
use crate::solver::decomposed::{subnet_size, update_plan, UpdatePlan};

#[derive(Debug, Clone, PartialEq)]
pub struct GenConfig {
    pub nodes: usize,
    pub cardinality: usize,
    pub max_in_degree: usize,
    pub num_constraints: usize,
    /// Largest constraint scope.
    pub max_scope: usize,
    /// Largest `|Y| + |S|` admitted for a non-local constraint.
    pub max_subnet: usize,
    /// CPT entries of binary variables are drawn from `[lo, hi]`; other cardinalities draw
    /// weights from the same range and normalize.
    pub cpt_range: (f64, f64),
    pub perturbation: f64,
    pub perturb_all_cpts: bool,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            nodes: 15,
            cardinality: 2,
            max_in_degree: 3,
            num_constraints: 8,
            max_scope: 3,
            max_subnet: 8,
            cpt_range: (0.1, 0.9),
            perturbation: 1.0,
            perturb_all_cpts: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub network: NetworkSpec,
    pub constraints: Vec<Constraint>,
    /// The network whose marginals the constraints were read from.
    pub witness: NetworkSpec,
}

/// Deterministic per `(config, seed)`.
pub fn generate(config: &GenConfig, seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let network = random_network(config, &mut rng);
    let scopes = random_scopes(&network, config, &mut rng);
    let edited: Vec<VarId> = if config.perturb_all_cpts {
        network.ids().collect()
    } else {
        scopes
            .iter()
            .flat_map(
                |scope| match update_plan(&classify_scope(&network, scope)) {
                    UpdatePlan::Cpt(target) => vec![target],
                    UpdatePlan::Subnet(y) => y,
                },
            )
            .collect()
    };
    let witness = perturb(&network, &edited, config.perturbation, &mut rng);
    let constraints = scopes
        .into_iter()
        .map(|scope| {
            let dist = marginal(&witness, &scope).expect("scope is valid");
            Constraint::from_table(&network, dist).expect("witness marginals are distributions")
        })
        .collect();
    Instance {
        network,
        constraints,
        witness,
    }
}

/// Variables `X0..X{n-1}` in topological order; each picks up to `max_in_degree` parents
/// among its predecessors.
pub fn random_network(config: &GenConfig, rng: &mut impl Rng) -> NetworkSpec {
    let card = config.cardinality.max(2);
    let mut builder = NetworkSpec::builder();
    for i in 0..config.nodes {
        let k = rng.gen_range(0..=config.max_in_degree.min(i));
        let mut parents: Vec<usize> = rand::seq::index::sample(rng, i.max(1), k).into_vec();
        parents.sort_unstable();
        let names: Vec<String> = parents.iter().map(|p| format!("X{p}")).collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let rows = card.pow(k as u32);
        let mut table = Vec::with_capacity(rows * card);
        for _ in 0..rows {
            table.extend(random_row(card, config.cpt_range, rng));
        }
        builder = builder.node(&format!("X{i}"), card, &refs, table);
    }
    builder.build().expect("generated networks are valid")
}

fn random_row(card: usize, (lo, hi): (f64, f64), rng: &mut impl Rng) -> Vec<f64> {
    if card == 2 {
        let p = rng.gen_range(lo..=hi);
        return vec![1.0 - p, p];
    }
    let weights: Vec<f64> = (0..card).map(|_| rng.gen_range(lo..=hi)).collect();
    let total: f64 = weights.iter().sum();
    weights.iter().map(|w| w / total).collect()
}

fn perturb(net: &NetworkSpec, edited: &[VarId], amount: f64, rng: &mut impl Rng) -> NetworkSpec {
    let cpts = net
        .cpts()
        .iter()
        .map(|cpt| {
            if !edited.contains(&cpt.child()) {
                return cpt.clone();
            }
            let mut table = Vec::with_capacity(cpt.table().len());
            for row in cpt.rows() {
                let scaled: Vec<f64> = row
                    .iter()
                    .map(|p| p * rng.gen_range(-amount..=amount).exp())
                    .collect();
                let total: f64 = scaled.iter().sum();
                table.extend(scaled.iter().map(|p| p / total));
            }
            crate::network::Cpt::from_weights(
                cpt.child(),
                cpt.child_card(),
                cpt.parents().to_vec(),
                cpt.parent_cards().to_vec(),
                table,
            )
        })
        .collect();
    net.with_cpts(cpts)
        .expect("perturbed CPTs keep the network's shape")
}

/// Alternates local and non-local scopes, falling back to local when no admissible non-local
/// scope turns up. Scopes are distinct as sets.
fn random_scopes(net: &NetworkSpec, config: &GenConfig, rng: &mut impl Rng) -> Vec<Vec<VarId>> {
    let mut scopes: Vec<Vec<VarId>> = Vec::new();
    let max_scope = config.max_scope.clamp(1, net.len().max(1));
    let mut attempts = 0;
    while scopes.len() < config.num_constraints && attempts < 10_000 {
        attempts += 1;
        let want_local = scopes.len().is_multiple_of(2);
        let scope = if want_local {
            local_scope(net, max_scope, rng)
        } else {
            nonlocal_scope(net, config, max_scope, rng)
                .unwrap_or_else(|| local_scope(net, max_scope, rng))
        };
        if subnet_size(net, &classify_scope(net, &scope)) > config.max_subnet {
            continue;
        }
        let mut key = scope.clone();
        key.sort_unstable();
        if scopes.iter().any(|s| {
            let mut other = s.clone();
            other.sort_unstable();
            other == key
        }) {
            continue;
        }
        scopes.push(scope);
    }
    scopes
}

fn local_scope(net: &NetworkSpec, max_scope: usize, rng: &mut impl Rng) -> Vec<VarId> {
    let child = VarId(rng.gen_range(0..net.len()));
    let parents = net.parents(child);
    let extra = rng.gen_range(0..=parents.len().min(max_scope - 1));
    let mut scope: Vec<VarId> = parents.choose_multiple(rng, extra).copied().collect();
    scope.push(child);
    scope.shuffle(rng);
    scope
}

fn nonlocal_scope(
    net: &NetworkSpec,
    config: &GenConfig,
    max_scope: usize,
    rng: &mut impl Rng,
) -> Option<Vec<VarId>> {
    if max_scope < 2 {
        return None;
    }
    let ids: Vec<VarId> = net.ids().collect();
    for _ in 0..200 {
        let size = rng.gen_range(2..=max_scope);
        let scope: Vec<VarId> = ids.choose_multiple(rng, size).copied().collect();
        let class = classify_scope(net, &scope);
        if !class.is_local() && subnet_size(net, &class) <= config.max_subnet {
            return Some(scope);
        }
    }
    None
}
