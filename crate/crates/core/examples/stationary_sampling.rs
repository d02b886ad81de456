//! Stationary count samples from full stabilizations of (N, N).

use arw_core::experiments::{run_stationary_sampling, ExperimentConfig, Mode};

fn main() {
    let n: u32 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(1000);
    for mode in [Mode::Exact, Mode::Hitting, Mode::Driven] {
        if mode == Mode::Exact && n > 300 {
            continue;
        }
        let trials = if mode == Mode::Driven { 8 } else { 100 };
        let cfg = ExperimentConfig { n_sites: n, trials, samples: 2000, mode, threads: 2, ..Default::default() };
        let (rep, rows) = run_stationary_sampling(&cfg).unwrap();
        println!(
            "{mode:?}: {} rows, mean {:.1}, shift {:.3} +- {:.3}, in window {:.2}, within 6 scales {:.2}",
            rows.len(),
            rep.mean_count,
            rep.shift_estimate,
            rep.shift_se,
            rep.in_window_fraction,
            rep.within_deviation_fraction
        );
    }
}
