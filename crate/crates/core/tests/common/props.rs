//! Seeded property checks. Each returns `Err` with a description of the first violation.

use cptfit_core::generate::{generate, GenConfig};
use cptfit_core::oracle::{
    oracle_feasible_sample, oracle_fit, oracle_joint, oracle_kl, oracle_residual, EnumJoint,
};
use cptfit_core::solver::decomposed::{update_plan, UpdatePlan};
use cptfit_core::{
    build_local_subnet, classify_constraint, extract_cpt, extract_subnet_cpts, i_divergence,
    ipfp_step, is_structurally_consistent, joint_from_network, local_update, marginal,
    nonlocal_update, parse_network, run_d_ipfp, run_d_ipfp_with, run_e_ipfp, run_ipfp,
    serialize_network, Constraint, DecomposedOptions, FormatError, JointTable, NetworkSpec,
    Schedule, StopPolicy, VarId,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::random_net;

pub type Check = fn(u64) -> Result<(), String>;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_cafe)
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn small_net(seed: u64, max_nodes: usize) -> NetworkSpec {
    let mut r = rng(seed);
    let nodes = r.gen_range(1..=max_nodes);
    let card = if r.gen_bool(0.2) { 3 } else { 2 };
    let nodes = if card == 3 { nodes.min(8) } else { nodes };
    random_net(nodes, card, seed)
}

fn random_scope(net: &NetworkSpec, max: usize, r: &mut impl Rng) -> Vec<VarId> {
    let ids: Vec<VarId> = net.ids().collect();
    let size = r.gen_range(1..=max.min(ids.len()));
    ids.choose_multiple(r, size).copied().collect()
}

/// A constraint over `scope` read from a perturbed copy of `net`, so it is satisfiable.
fn feasible_constraint(net: &NetworkSpec, scope: &[VarId], seed: u64) -> Constraint {
    let witness = net
        .with_cpts(perturbed_cpts(net, seed))
        .expect("same shape");
    Constraint::from_table(net, marginal(&witness, scope).unwrap()).unwrap()
}

fn perturbed_cpts(net: &NetworkSpec, seed: u64) -> Vec<cptfit_core::Cpt> {
    let mut r = rng(seed.wrapping_add(17));
    net.cpts()
        .iter()
        .map(|c| {
            let card = c.child_card();
            let mut table = Vec::new();
            for row in c.rows() {
                let w: Vec<f64> = row
                    .iter()
                    .map(|p| p * r.gen_range(-1.0f64..1.0).exp())
                    .collect();
                let t: f64 = w.iter().sum();
                table.extend(w.iter().map(|x| x / t));
            }
            cptfit_core::Cpt::new(
                c.child(),
                card,
                c.parents().to_vec(),
                c.parent_cards().to_vec(),
                table,
            )
            .unwrap()
        })
        .collect()
}

// ---- bn-core ----

pub fn joint_sums_to_one(seed: u64) -> Result<(), String> {
    let net = small_net(seed, 12);
    let total = joint_from_network(&net).total();
    ensure((total - 1.0).abs() <= 1e-9, || format!("total {total}"))
}

pub fn extraction_recovers_cpts(seed: u64) -> Result<(), String> {
    let net = small_net(seed, 10);
    let q = joint_from_network(&net);
    for v in net.ids() {
        let got = extract_cpt(&q, v, net.parents(v)).map_err(|e| e.to_string())?;
        let want = net.cpt(v);
        for (row, (a, b)) in got.rows().zip(want.rows()).enumerate() {
            for (x, y) in a.iter().zip(b) {
                ensure((x - y).abs() <= 1e-12, || {
                    format!("{} row {row}: {x} vs {y}", net.name(v))
                })?;
            }
        }
    }
    Ok(())
}

pub fn marginalization_commutes(seed: u64) -> Result<(), String> {
    let net = small_net(seed, 10);
    let mut r = rng(seed);
    let q = joint_from_network(&net);
    let y = random_scope(&net, 5, &mut r);
    let size = r.gen_range(1..=y.len());
    let z: Vec<VarId> = y.choose_multiple(&mut r, size).copied().collect();
    let two = q.marginalize(&y).unwrap().marginalize(&z).unwrap();
    let one = q.marginalize(&z).unwrap();
    let diff = two.max_abs_diff(&one).unwrap();
    ensure(diff <= 1e-12, || format!("diff {diff}"))
}

pub fn divergence_is_gibbs(seed: u64) -> Result<(), String> {
    let net = small_net(seed, 8);
    let other = net.with_cpts(perturbed_cpts(&net, seed)).unwrap();
    let (p, q) = (joint_from_network(&net), joint_from_network(&other));
    let d = i_divergence(&p, &q).unwrap();
    let self_d = i_divergence(&p, &p).unwrap();
    ensure(d >= 0.0, || format!("negative divergence {d}"))?;
    ensure(self_d == 0.0, || format!("I(p||p) = {self_d}"))?;
    let differ = p.max_abs_diff(&q).unwrap() > 1e-12;
    ensure(!differ || d > 0.0, || {
        "distinct tables with zero divergence".into()
    })
}

pub fn product_is_structurally_consistent(seed: u64) -> Result<(), String> {
    let net = small_net(seed, 10);
    let ok = is_structurally_consistent(&joint_from_network(&net), &net, 1e-9).unwrap();
    ensure(ok, || "joint of a network fails its own structure".into())
}

pub fn single_variable_is_local(seed: u64) -> Result<(), String> {
    let net = small_net(seed, 12);
    for v in net.ids() {
        let r = Constraint::from_table(&net, marginal(&net, &[v]).unwrap()).unwrap();
        ensure(classify_constraint(&net, &r).is_local(), || {
            format!("{} not local", net.name(v))
        })?;
    }
    Ok(())
}

// ---- dense solver ----

fn step_case(seed: u64) -> (JointTable, Constraint) {
    let net = small_net(seed, 8);
    let mut r = rng(seed);
    let scope = random_scope(&net, 3, &mut r);
    (
        joint_from_network(&net),
        feasible_constraint(&net, &scope, seed),
    )
}

pub fn step_fits_its_constraint(seed: u64) -> Result<(), String> {
    let (q, r) = step_case(seed);
    let out = ipfp_step(&q, &r).map_err(|e| e.to_string())?;
    let res = cptfit_core::constraint_residual(&out, &r).unwrap();
    ensure(res <= 1e-12, || format!("residual {res}"))
}

pub fn step_preserves_normalization(seed: u64) -> Result<(), String> {
    let (q, r) = step_case(seed);
    let total = ipfp_step(&q, &r).map_err(|e| e.to_string())?.total();
    ensure((total - 1.0).abs() <= 1e-12, || format!("total {total}"))
}

pub fn step_is_idempotent(seed: u64) -> Result<(), String> {
    let (q, r) = step_case(seed);
    let once = ipfp_step(&q, &r).map_err(|e| e.to_string())?;
    let twice = ipfp_step(&once, &r).map_err(|e| e.to_string())?;
    let diff = once.max_abs_diff(&twice).unwrap();
    ensure(diff <= 1e-12, || format!("diff {diff}"))
}

fn small_instance(seed: u64, nodes: usize, constraints: usize) -> cptfit_core::Instance {
    let config = GenConfig {
        nodes,
        num_constraints: constraints,
        ..GenConfig::default()
    };
    generate(&config, seed)
}

pub fn e_ipfp_output_shape(seed: u64) -> Result<(), String> {
    let inst = small_instance(seed, 6, 3);
    let sched = Schedule::document_order(inst.constraints.len());
    let (out, _) = run_e_ipfp(
        &inst.network,
        &inst.constraints,
        &StopPolicy::default(),
        &sched,
    )
    .map_err(|e| e.to_string())?;
    ensure(out.same_structure(&inst.network), || "DAG changed".into())?;
    for cpt in out.cpts() {
        for row in cpt.rows() {
            let s: f64 = row.iter().sum();
            ensure((s - 1.0).abs() <= 1e-12, || format!("row sums to {s}"))?;
        }
    }
    Ok(())
}

pub fn residuals_at_fit_and_convergence(seed: u64) -> Result<(), String> {
    let inst = small_instance(seed, 7, 4);
    let mut q = joint_from_network(&inst.network);
    for r in &inst.constraints {
        q = ipfp_step(&q, r).map_err(|e| e.to_string())?;
        let res = cptfit_core::constraint_residual(&q, r).unwrap();
        ensure(res <= 1e-12, || {
            format!("residual right after its step: {res}")
        })?;
    }
    let stop = StopPolicy::default();
    let sched = Schedule::document_order(inst.constraints.len());
    let (_, report) =
        run_ipfp(&inst.network, &inst.constraints, &stop, &sched).map_err(|e| e.to_string())?;
    ensure(report.converged(), || format!("{:?}", report.termination))?;
    ensure(report.max_residual() <= stop.epsilon(), || {
        format!("max residual {}", report.max_residual())
    })
}

/// `run_ipfp`'s divergence is no larger than that of any of `samples` feasible tables.
pub fn i_projection_bound(
    net: &NetworkSpec,
    r: &Constraint,
    samples: usize,
    seed: u64,
) -> Result<(f64, f64), String> {
    let sched = Schedule::document_order(1);
    let (fitted, report) = run_ipfp(net, std::slice::from_ref(r), &StopPolicy::default(), &sched)
        .map_err(|e| e.to_string())?;
    let ipfp = report
        .final_divergence
        .expect("dense runs report divergence");
    let q0 = oracle_joint(net).map_err(|e| e.to_string())?;
    let oracle_projection = oracle_fit(&q0, r).ok_or("oracle fit failed")?;
    let oracle_value = oracle_kl(&oracle_projection, &q0);
    ensure((oracle_value - ipfp).abs() <= 1e-12, || {
        format!("solver {ipfp} vs oracle {oracle_value}")
    })?;
    let _ = fitted;
    let best = oracle_feasible_sample(&q0, r, samples, seed)
        .map_err(|e| e.to_string())?
        .iter()
        .map(|s| oracle_kl(s, &q0))
        .fold(f64::INFINITY, f64::min);
    ensure(ipfp <= best + 1e-9, || {
        format!("ipfp {ipfp} > sampled {best}")
    })?;
    Ok((ipfp, best))
}

pub fn i_projection_desk(seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    let nodes = r.gen_range(2..=4);
    let net = random_net(nodes, 2, seed);
    let scope = random_scope(&net, 3, &mut r);
    let c = feasible_constraint(&net, &scope, seed);
    i_projection_bound(&net, &c, 10_000, seed).map(|_| ())
}

// ---- decomposed solver ----

/// Local constraints on a single variable, read from a perturbed copy of the net.
fn local_case(seed: u64, max_nodes: usize) -> (NetworkSpec, Constraint, VarId) {
    let net = small_net(seed, max_nodes);
    let mut r = rng(seed);
    let target = VarId(r.gen_range(0..net.len()));
    let parents = net.parents(target);
    let extra = r.gen_range(0..=parents.len().min(2));
    let mut scope: Vec<VarId> = parents.choose_multiple(&mut r, extra).copied().collect();
    scope.push(target);
    scope.shuffle(&mut r);
    (net.clone(), feasible_constraint(&net, &scope, seed), target)
}

fn scaled_product_oracle(q: &EnumJoint, net: &NetworkSpec, r: &Constraint, target: VarId) -> EnumJoint {
    let scaled = oracle_fit(q, r).expect("positive joint");
    // Per parent row of the target, alpha is the mass of the scaled CPT row.
    let parents: Vec<usize> = net.parents(target).iter().map(|p| p.0).collect();
    let mut family = parents.clone();
    family.push(target.0);
    let t = target.0;
    let cpt_of = |x: &[usize]| {
        let mut row = 0;
        for &p in &parents {
            row = row * q.cards[p] + x[p];
        }
        net.cpt(target).table()[row * q.cards[t] + x[t]]
    };
    let ratio = |x: &[usize]| scaled.prob(x) / q.prob(x);
    let assignments = q
        .assignments
        .iter()
        .map(|(x, p)| {
            let mut mass = 0.0;
            for s in 0..q.cards[t] {
                let mut y = x.clone();
                y[t] = s;
                mass += cpt_of(&y) * ratio(&y);
            }
            (x.clone(), p * ratio(x) / mass)
        })
        .collect();
    EnumJoint {
        cards: q.cards.clone(),
        assignments,
    }
}

pub fn local_update_commutation(seed: u64) -> Result<(), String> {
    let (net, r, target) = local_case(seed, 12);
    let updated = local_update(net.cpt(target), &r, &net).map_err(|e| e.to_string())?;
    let mut cpts = net.cpts().to_vec();
    cpts[target.0] = updated;
    let factored = joint_from_network(&net.with_cpts(cpts).unwrap());
    let dense = scaled_product_oracle(&oracle_joint(&net).unwrap(), &net, &r, target);
    for (x, p) in &dense.assignments {
        let got = factored.get(x);
        ensure((got - p).abs() <= 1e-12, || format!("{x:?}: {got} vs {p}"))?;
    }
    Ok(())
}

fn d_ipfp_instance(
    seed: u64,
) -> Result<(cptfit_core::Instance, NetworkSpec, cptfit_core::RunReport), String> {
    let inst = small_instance(seed, 8, 4);
    let sched = Schedule::document_order(inst.constraints.len());
    let (out, report) = run_d_ipfp(
        &inst.network,
        &inst.constraints,
        &StopPolicy::default(),
        &sched,
    )
    .map_err(|e| e.to_string())?;
    Ok((inst, out, report))
}

/// Whenever D-IPFP reports convergence, an independent dense check confirms every constraint.
/// Runs that stall short of the constraints are skipped; the next derived seed is tried instead.
pub fn d_ipfp_satisfies_constraints(seed: u64) -> Result<(), String> {
    for attempt in 0..8 {
        let (inst, out, report) = d_ipfp_instance(seed + 1000 * attempt)?;
        if !report.converged() {
            continue;
        }
        let q = oracle_joint(&out).map_err(|e| e.to_string())?;
        for r in &inst.constraints {
            let res = oracle_residual(&q, r);
            ensure(res <= 1e-9, || format!("residual {res}"))?;
        }
        return Ok(());
    }
    Err("no converged run in 8 instances".into())
}

pub fn d_ipfp_structurally_consistent(seed: u64) -> Result<(), String> {
    let (_, out, _) = d_ipfp_instance(seed)?;
    let q = oracle_joint(&out).map_err(|e| e.to_string())?;
    let diff = q.projected(&out).max_abs_diff(&q);
    ensure(diff <= 1e-9, || {
        format!("projection moves the joint by {diff}")
    })
}

pub fn d_ipfp_exceeds_ipfp_on_diamond(_seed: u64) -> Result<(), String> {
    let net = super::diamond();
    let r = vec![super::diamond_ad(&net)];
    let sched = Schedule::document_order(1);
    let stop = StopPolicy::default();
    let (_, ipfp) = run_ipfp(&net, &r, &stop, &sched).map_err(|e| e.to_string())?;
    let (_, d) = run_d_ipfp(&net, &r, &stop, &sched).map_err(|e| e.to_string())?;
    let (a, b) = (ipfp.final_divergence.unwrap(), d.final_divergence.unwrap());
    ensure(b - a > 1e-6, || format!("IPFP {a} vs D-IPFP {b}"))
}

fn changed_cpts(before: &NetworkSpec, after: &NetworkSpec) -> Vec<VarId> {
    before
        .ids()
        .filter(|&v| before.cpt(v).table() != after.cpt(v).table())
        .collect()
}

pub fn edits_are_local(seed: u64) -> Result<(), String> {
    let inst = small_instance(seed, 9, 6);
    let one_cycle = StopPolicy::new(1e-9, 1, 2).unwrap();
    for r in &inst.constraints {
        let class = classify_constraint(&inst.network, r);
        let allowed = match update_plan(&class) {
            UpdatePlan::Cpt(t) => vec![t],
            UpdatePlan::Subnet(y) => y,
        };
        let (out, _) = run_d_ipfp(
            &inst.network,
            std::slice::from_ref(r),
            &one_cycle,
            &Schedule::document_order(1),
        )
        .map_err(|e| e.to_string())?;
        let changed = changed_cpts(&inst.network, &out);
        ensure(changed.iter().all(|v| allowed.contains(v)), || {
            format!("{class:?} changed {changed:?}")
        })?;
        if let UpdatePlan::Cpt(t) = update_plan(&class) {
            let updated =
                local_update(inst.network.cpt(t), r, &inst.network).map_err(|e| e.to_string())?;
            ensure(updated.child() == t, || {
                "local update returned a foreign CPT".into()
            })?;
        }
    }
    Ok(())
}

pub fn renormalized_rows_sum_to_one(seed: u64) -> Result<(), String> {
    let (net, r, target) = local_case(seed, 10);
    let updated = local_update(net.cpt(target), &r, &net).map_err(|e| e.to_string())?;
    for row in updated.rows() {
        let s: f64 = row.iter().sum();
        ensure((s - 1.0).abs() <= 1e-12, || format!("CPT row sums to {s}"))?;
    }
    let mut rr = rng(seed);
    let y = random_scope(&net, 3, &mut rr);
    let mut y_sorted = y.clone();
    y_sorted.sort();
    let c = feasible_constraint(&net, &y_sorted, seed);
    let sub = build_local_subnet(&net, &y_sorted).map_err(|e| e.to_string())?;
    let next = nonlocal_update(&sub, &c).map_err(|e| e.to_string())?;
    let block: usize = y.iter().map(|&v| net.cardinality(v)).product();
    for row in next.cond_table().probs().chunks(block) {
        let s: f64 = row.iter().sum();
        ensure((s - 1.0).abs() <= 1e-12, || {
            format!("subnet row sums to {s}")
        })?;
    }
    for cpt in extract_subnet_cpts(&next, &net).map_err(|e| e.to_string())? {
        for row in cpt.rows() {
            let s: f64 = row.iter().sum();
            ensure((s - 1.0).abs() <= 1e-12, || {
                format!("extracted row sums to {s}")
            })?;
        }
    }
    Ok(())
}

pub fn subnet_tables_are_small(seed: u64) -> Result<(), String> {
    let inst = small_instance(seed, 12, 8);
    for r in &inst.constraints {
        if let UpdatePlan::Subnet(y) = update_plan(&classify_constraint(&inst.network, r)) {
            let sub = build_local_subnet(&inst.network, &y).map_err(|e| e.to_string())?;
            let bound = 1usize << (sub.y().len() + sub.s().len());
            ensure(
                sub.cells() <= bound && sub.context().len() == sub.cells(),
                || format!("subnet of {} cells, bound {bound}", sub.cells()),
            )?;
        }
    }
    Ok(())
}

pub fn subnet_round_trip(seed: u64) -> Result<(), String> {
    let net = small_net(seed, 6);
    let mut r = rng(seed);
    let mut y = random_scope(&net, 2, &mut r);
    y.sort();
    let sub = build_local_subnet(&net, &y).map_err(|e| e.to_string())?;
    let cpts = extract_subnet_cpts(&sub, &net).map_err(|e| e.to_string())?;
    for (cpt, &v) in cpts.iter().zip(&y) {
        for (a, b) in cpt.table().iter().zip(net.cpt(v).table()) {
            ensure((a - b).abs() <= 1e-12, || {
                format!("{}: {a} vs {b}", net.name(v))
            })?;
        }
    }
    Ok(())
}

// ---- dense and decomposed agree on single-variable constraints ----

pub fn e_and_d_agree_on_root_constraints(seed: u64) -> Result<(), String> {
    let net = small_net(seed, 7);
    let roots: Vec<VarId> = net.ids().filter(|&v| net.parents(v).is_empty()).collect();
    let rs: Vec<Constraint> = roots
        .iter()
        .map(|&v| feasible_constraint(&net, &[v], seed))
        .collect();
    let stop = StopPolicy::default();
    let sched = Schedule::document_order(rs.len());
    let (e, _) = run_e_ipfp(&net, &rs, &stop, &sched).map_err(|e| e.to_string())?;
    let (d, _) = run_d_ipfp(&net, &rs, &stop, &sched).map_err(|e| e.to_string())?;
    let diff = joint_from_network(&e)
        .max_abs_diff(&joint_from_network(&d))
        .unwrap();
    ensure(diff <= 10.0 * stop.epsilon(), || {
        format!("joints differ by {diff}")
    })
}

// ---- io ----

fn mutate(text: &str, r: &mut impl Rng) -> String {
    match r.gen_range(0..4) {
        0 => {
            let mut cut = r.gen_range(0..text.len());
            while !text.is_char_boundary(cut) {
                cut -= 1;
            }
            text[..cut].to_string()
        }
        1 => {
            let fields = [
                "\"name\"",
                "\"cardinality\"",
                "\"cpt\"",
                "\"parents\"",
                "\"formatVersion\"",
            ];
            let field = fields.choose(r).unwrap();
            let hits: Vec<usize> = text.match_indices(field).map(|(i, _)| i).collect();
            match hits.choose(r) {
                Some(&at) => {
                    let end = text[at..].find(['\n']).map_or(text.len(), |e| at + e);
                    format!("{}{}", &text[..at], &text[end..])
                }
                None => text.to_string(),
            }
        }
        2 => {
            let digits: Vec<usize> = text
                .match_indices(|c: char| c.is_ascii_digit())
                .map(|(i, _)| i)
                .collect();
            let at = *digits.choose(r).unwrap();
            format!("{}-{}", &text[..at], &text[at..])
        }
        _ => {
            let at = r.gen_range(0..text.len());
            let mut bytes = text.as_bytes().to_vec();
            bytes[at] = *b"{}[],:\"0-e ".choose(r).unwrap();
            String::from_utf8_lossy(&bytes).into_owned()
        }
    }
}

pub fn fuzzed_documents_are_rejected_cleanly(seed: u64) -> Result<(), String> {
    let net = small_net(seed, 6);
    let text = serialize_network(&net);
    let mut r = rng(seed);
    for _ in 0..20 {
        let bad = mutate(&text, &mut r);
        let outcome = std::panic::catch_unwind(|| parse_network(&bad))
            .map_err(|_| format!("parser panicked on:\n{bad}"))?;
        if let Err(err) = outcome {
            let located = match &err {
                FormatError::Syntax { line, .. } => *line >= 1,
                FormatError::Version(_) => true,
                FormatError::Model(m) => !m.to_string().is_empty(),
                FormatError::Constraint { .. } => true,
            };
            ensure(located, || format!("unlocated error: {err}"))?;
        }
    }
    Ok(())
}

pub fn network_round_trip(seed: u64) -> Result<(), String> {
    let net = small_net(seed, 10);
    let text = serialize_network(&net);
    let back = parse_network(&text).map_err(|e| e.to_string())?;
    ensure(back == net, || "parsed network differs".into())?;
    ensure(serialize_network(&back) == text, || "bytes differ".into())
}

// ---- oracle ----

pub fn oracle_matches_production(seed: u64) -> Result<(), String> {
    let net = small_net(seed, 12);
    let oracle = oracle_joint(&net).map_err(|e| e.to_string())?;
    let dense = joint_from_network(&net);
    for (x, p) in &oracle.assignments {
        let got = dense.get(x);
        ensure((got - p).abs() <= 1e-12, || format!("{x:?}: {got} vs {p}"))?;
    }
    let mut r = rng(seed);
    let scope = random_scope(&net, 3, &mut r);
    let ve = marginal(&net, &scope).unwrap();
    let brute = oracle.marginal(&scope.iter().map(|v| v.0).collect::<Vec<_>>());
    for (k, p) in brute {
        ensure((ve.get(&k) - p).abs() <= 1e-12, || {
            format!("marginal {k:?}")
        })?;
    }
    Ok(())
}

pub fn oracle_samples_are_feasible(seed: u64) -> Result<(), String> {
    let net = random_net(rng(seed).gen_range(1..=4), 2, seed);
    let mut r = rng(seed);
    let scope = random_scope(&net, 2, &mut r);
    let c = feasible_constraint(&net, &scope, seed);
    let q0 = oracle_joint(&net).unwrap();
    for s in oracle_feasible_sample(&q0, &c, 200, seed).map_err(|e| e.to_string())? {
        let res = oracle_residual(&s, &c);
        ensure(res <= 1e-12, || format!("sample residual {res}"))?;
    }
    Ok(())
}

pub fn subnet_budget_is_enforced(seed: u64) -> Result<(), String> {
    let inst = small_instance(seed, 10, 6);
    let options = DecomposedOptions {
        max_subnet_vars: 1,
        ..DecomposedOptions::default()
    };
    let sched = Schedule::document_order(inst.constraints.len());
    let out = run_d_ipfp_with(
        &inst.network,
        &inst.constraints,
        &StopPolicy::default(),
        &sched,
        &options,
    );
    ensure(
        matches!(out, Err(cptfit_core::SolveError::SubnetTooLarge { .. })),
        || "budget of one variable accepted".into(),
    )
}

/// Every named check, with the number of seeds the acceptance sweep runs it on.
pub const ALL: &[(&str, Check, u64)] = &[
    ("joint sums to one", joint_sums_to_one, 50),
    ("extract recovers CPTs", extraction_recovers_cpts, 50),
    ("marginalization commutes", marginalization_commutes, 50),
    (
        "divergence is nonnegative, zero only on equal tables",
        divergence_is_gibbs,
        50,
    ),
    (
        "network joints are structurally consistent",
        product_is_structurally_consistent,
        50,
    ),
    (
        "single-variable constraints are local",
        single_variable_is_local,
        50,
    ),
    (
        "ipfp_step fits its constraint",
        step_fits_its_constraint,
        50,
    ),
    (
        "ipfp_step preserves normalization",
        step_preserves_normalization,
        50,
    ),
    ("ipfp_step is idempotent", step_is_idempotent, 50),
    (
        "E-IPFP output keeps the DAG and row sums",
        e_ipfp_output_shape,
        10,
    ),
    (
        "residual zero after each step, within epsilon at convergence",
        residuals_at_fit_and_convergence,
        10,
    ),
    (
        "IPFP result beats 10000 sampled feasible tables",
        i_projection_desk,
        5,
    ),
    (
        "local update commutes with the dense scaled product",
        local_update_commutation,
        50,
    ),
    (
        "converged D-IPFP satisfies every constraint",
        d_ipfp_satisfies_constraints,
        10,
    ),
    (
        "D-IPFP output is structurally consistent",
        d_ipfp_structurally_consistent,
        10,
    ),
    (
        "D-IPFP divergence exceeds IPFP on the diamond",
        d_ipfp_exceeds_ipfp_on_diamond,
        1,
    ),
    ("constraints edit only their own CPTs", edits_are_local, 10),
    (
        "renormalized rows sum to one",
        renormalized_rows_sum_to_one,
        50,
    ),
    (
        "subnet tables stay within 2^(|s|+|y|) cells",
        subnet_tables_are_small,
        20,
    ),
    ("subnet extraction round trip", subnet_round_trip, 50),
    ("subnet budget is enforced", subnet_budget_is_enforced, 10),
    (
        "E-IPFP and D-IPFP agree on root constraints",
        e_and_d_agree_on_root_constraints,
        10,
    ),
    (
        "fuzzed documents never crash the parser",
        fuzzed_documents_are_rejected_cleanly,
        25,
    ),
    ("network documents round-trip", network_round_trip, 50),
    (
        "oracle and production joints agree",
        oracle_matches_production,
        100,
    ),
    (
        "oracle samples satisfy their constraint",
        oracle_samples_are_feasible,
        20,
    ),
];
