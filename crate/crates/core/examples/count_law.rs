//! One-step law of the (X, Y) count chain at a single state.
//!
//! cargo run --example count_law -- 10 6 3

use arw_core::count_chain::{CountChain, CountState};
use arw_core::params::ModelParams;

fn main() {
    let args: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let (n, x, y) = match args[..] {
        [n, x, y] => (n, x, y),
        _ => (10, 6, 3),
    };
    let params = ModelParams::new(n, 1.0).expect("valid parameters");
    let chain = CountChain::new(params);
    let law = chain.increment_law(CountState::new(x, y)).expect("live state");

    println!("N={n} lambda=1 state=({x},{y})");
    println!("{:<12} {:>6} {:>6} {:>12}", "outcome", "dX", "dY", "prob");
    for (o, p) in law.entries() {
        println!("{:<12} {:>6} {:>6} {:>12.6e}", format!("{o:?}"), o.delta_x(), o.delta_y(), p);
    }
    println!("total = {:.15}", law.total());
    let drift = law.expect(|o| o.delta_s(params.lambda));
    println!("E[dS] = {drift:.6e}");
}
