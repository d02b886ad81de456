//! Driven chain occupation against the exact stationary law.

use arw_core::exact::stationary_exact;
use arw_core::experiments::stationary::driven_histogram;
use arw_core::params::ModelParams;

fn main() {
    let params = ModelParams::new(20, 1.0).unwrap();
    let mu = stationary_exact(&params).unwrap();
    let hist = driven_histogram(&params, 5, 200, 1_000_000).unwrap();
    for (k, (m, h)) in mu.mass.iter().zip(&hist).enumerate() {
        if *m > 1e-4 || *h > 0.0 {
            println!("{k:>3} exact {m:.5} driven {h:.5}");
        }
    }
    println!("TV = {:.5}", mu.total_variation(&hist));
}
