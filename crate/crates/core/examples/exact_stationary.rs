//! Exact stationary law of the particle count from the slice solver.

use arw_core::exact::{stationary_exact_with, SliceSolver, DEFAULT_CAP};
use arw_core::params::ModelParams;

fn main() {
    for n in [10u32, 50, 100, 200, 300] {
        let p = ModelParams::new(n, 1.0).unwrap();
        let mu = stationary_exact_with(&p, SliceSolver::Hessenberg, DEFAULT_CAP).unwrap();
        let shift = (mu.mean() - p.rho_c() * p.n()) / p.window_scale();
        println!(
            "N={n:>3}  mass-1={:+.1e}  mean={:.3}  sd={:.3}  argmax={}  shift={shift:.3}",
            mu.total() - 1.0,
            mu.mean(),
            mu.variance().sqrt(),
            mu.argmax()
        );
    }
    let p = ModelParams::new(60, 1.0).unwrap();
    let a = stationary_exact_with(&p, SliceSolver::Dense, DEFAULT_CAP).unwrap();
    let b = stationary_exact_with(&p, SliceSolver::Hessenberg, DEFAULT_CAP).unwrap();
    println!("dense vs hessenberg at N=60: TV = {:.2e}", a.total_variation(&b.mass));
}
