//! Count chain from (N, N) until no active particle remains.

use arw_core::count_chain::{CountChain, CountState, Record, RunOptions};
use arw_core::moments::{deviation_scan, DeviationFrame};
use arw_core::params::ModelParams;
use arw_core::rng::trial_rng;

fn main() {
    let n: u32 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(2000);
    let params = ModelParams::new(n, 1.0).unwrap();
    let chain = CountChain::new(params);
    let opts = RunOptions {
        max_steps: 100 * 2 * (n as u64).pow(2),
        record: Record::Every(n as u64),
        rho_levels: vec![0.9, 0.75, 0.6],
    };
    let tr = chain.run_until_absorbed(CountState::new(n, n), &mut trial_rng(7, 0), &opts).unwrap();

    let scale = params.window_scale();
    let shift = (tr.final_state.x as f64 - params.rho_c() * params.n()) / scale;
    println!("N={n}: absorbed after {} steps (T/N^2 = {:.3})", tr.steps, tr.steps as f64 / (n as f64).powi(2));
    println!("final X = {}  shift = {shift:.3} (a = {:.3})", tr.final_state.x, params.a());
    for (rho, t) in &tr.first_passage {
        println!("X <= {rho} N first at {t:?}");
    }
    let e = deviation_scan(&tr.path, &DeviationFrame::new(params)).unwrap();
    println!("S range on recorded points: [{:.1}, {:.1}]", e.min_s, e.max_s);
}
