//! Fits generated 15-node instances with 4, 8 and 16 constraints using E-IPFP and D-IPFP and
//! prints cycles, wall time and divergence side by side.
//!
//! Usage: experiments [SEED] [MAX_CYCLES]

use std::time::Instant;

use cptfit_core::generate::{generate, GenConfig};
use cptfit_core::{run_d_ipfp, run_e_ipfp, RunReport, Schedule, StopPolicy};

fn row(count: usize, name: &str, report: &RunReport, seconds: f64) {
    println!(
        "{count:>11}  {name:<6}  {:<11}  {:>6}  {:>10.4}  {:>10.6}  {:>9.2e}",
        format!("{:?}", report.termination),
        report.cycles,
        seconds,
        report.final_divergence.unwrap_or(f64::NAN),
        report.max_residual(),
    );
}

fn main() {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args
        .next()
        .map_or(2024, |s| s.parse().expect("SEED must be an integer"));
    let max_cycles: usize = args
        .next()
        .map_or(2000, |s| s.parse().expect("MAX_CYCLES must be an integer"));
    let stop = StopPolicy::new(
        StopPolicy::DEFAULT_EPSILON,
        max_cycles,
        StopPolicy::DEFAULT_OSCILLATION_WINDOW,
    )
    .expect("valid stop policy");

    println!("seed {seed}, 15 binary nodes, subnets <= 8 variables, at most {max_cycles} cycles");
    println!(
        "{:>11}  {:<6}  {:<11}  {:>6}  {:>10}  {:>10}  {:>9}",
        "constraints", "method", "termination", "cycles", "seconds", "divergence", "residual"
    );
    for count in [4, 8, 16] {
        let config = GenConfig {
            num_constraints: count,
            ..GenConfig::default()
        };
        let instance = generate(&config, seed);
        let (net, rs) = (&instance.network, &instance.constraints);
        let sched = Schedule::document_order(rs.len());

        let started = Instant::now();
        let (_, e) = run_e_ipfp(net, rs, &stop, &sched).expect("E-IPFP run");
        let e_time = started.elapsed().as_secs_f64();
        let started = Instant::now();
        let (_, d) = run_d_ipfp(net, rs, &stop, &sched).expect("D-IPFP run");
        let d_time = started.elapsed().as_secs_f64();

        row(rs.len(), "E-IPFP", &e, e_time);
        row(rs.len(), "D-IPFP", &d, d_time);
        println!("{:>11}  speedup {:.1}x", "", e_time / d_time);
    }
}
