//! Bands, exponential tilts, exit probabilities and the birth-and-death chain.

use arw_core::coarse::build_band_chain;
use arw_core::params::ModelParams;

fn main() {
    let n: u32 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(10_000);
    let p = ModelParams::new(n, 1.0).unwrap();
    let x_hat = 1.5 * p.a();
    let rep = build_band_chain(&p, x_hat, false).unwrap();
    println!("N={n} x_hat={x_hat}: K+ = {} (valid up to {})", rep.k_plus, rep.k_plus_used);
    println!("{:>4} {:>10} {:>10} {:>8} {:>8} {:>10}", "k", "delta_k", "theta*", "ratio", "f_k", "r_k");
    let quarter = p.n().powf(0.25);
    for r in &rep.rows {
        let pred = 2.0 * r.delta_k;
        let res = (1.0 - r.f_k) / r.f_k / ((r.k as f64 + 1.5) / quarter).exp();
        println!(
            "{:>4} {:>10.3e} {:>10.3e} {:>8.4} {:>8.4} {:>10.3e}   (1-f)/f / pred = {res:.4}",
            r.k,
            r.delta_k,
            r.theta_star,
            r.theta_star / pred,
            r.f_k,
            r.r_k
        );
    }
    let c = &rep.chain;
    let mid = (c.k_min + c.k_max()) / 2;
    println!(
        "P[top before bottom | start {mid}] = {:.6e} (resistances) {:.6e} (linear)",
        c.hitting_probability(mid).unwrap(),
        c.hitting_probability_linear(mid).unwrap()
    );
}
