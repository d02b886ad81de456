//! The site-level single-occupancy step against the count-chain law.

use arw_core::count_chain::CountState;
use arw_core::experiments::suite::{eta_law_comparison, small_states};
use arw_core::params::ModelParams;

fn main() {
    let samples = 200_000;
    println!("{:>3} {:>3} {:>3} {:>8} {:>10}", "N", "x", "y", "max z", "TV");
    for (i, (n, s)) in small_states(4).into_iter().enumerate() {
        let p = ModelParams::new(n, 1.0).unwrap();
        let (z, tv, _) = eta_law_comparison(&p, s, samples, 11, i as u64).unwrap();
        let CountState { x, y } = s;
        println!("{n:>3} {x:>3} {y:>3} {z:>8.2} {tv:>10.2e}");
    }
}
