//! Runs a named check suite and prints its JSON report.
//!
//! cargo run --example check_suite -- oracles 6

use arw_core::experiments::{run_suite, ExperimentConfig, SuiteName};

fn main() {
    let mut args = std::env::args().skip(1);
    let name: SuiteName = args.next().as_deref().unwrap_or("identities").parse().unwrap();
    let n = args.next().and_then(|a| a.parse().ok()).unwrap_or(50);
    let cfg = ExperimentConfig { n_sites: n, ..Default::default() };
    let rep = run_suite(&cfg, name).unwrap();
    println!("{}", rep.to_json());
    std::process::exit(if rep.passed { 0 } else { 1 });
}
