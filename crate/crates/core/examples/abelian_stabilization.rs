//! Final particle count does not depend on which active site moves next.
//!
//! Starts from N particles on N sites and stabilizes with two selection rules.

use arw_core::micro::{MicroConfig, SelectionRule, SiteState, Stabilizer};
use arw_core::params::ModelParams;
use arw_core::rng::trial_rng;

fn histogram(params: ModelParams, rule: SelectionRule, trials: u64) -> Vec<f64> {
    let n = params.n_sites as usize;
    let mut h = vec![0.0; n + 1];
    for t in 0..trials {
        let mut rng = trial_rng(3, t);
        let mut c = MicroConfig { sites: vec![SiteState::Active(1); n] };
        Stabilizer::new(params, rule).stabilize(&mut c, &mut rng).unwrap();
        h[c.particle_count() as usize] += 1.0 / trials as f64;
    }
    h
}

fn main() {
    let params = ModelParams::new(8, 1.0).unwrap();
    let trials = 100_000;
    let u = histogram(params, SelectionRule::Uniform, trials);
    let l = histogram(params, SelectionRule::LowestSite, trials);
    println!("{:>3} {:>9} {:>9}", "k", "uniform", "lowest");
    for k in 0..u.len() {
        println!("{k:>3} {:>9.4} {:>9.4}", u[k], l[k]);
    }
    let tv: f64 = u.iter().zip(&l).map(|(a, b)| (a - b).abs()).sum::<f64>() / 2.0;
    println!("TV = {tv:.4}");
}
