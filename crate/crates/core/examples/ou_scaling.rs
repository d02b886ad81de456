//! Rescaled deviation R = S / sqrt(lambda N) against dR = -R dt + sqrt(2) dB.

use arw_core::experiments::suite::ou_stationary_variance;
use arw_core::params::ModelParams;
use arw_core::scaling::{critical_constants, window_regression};

fn main() {
    let n: u32 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(100_000);
    let p = ModelParams::new(n, 1.0).unwrap();
    let k = critical_constants(1.0).unwrap();
    println!("rho_c = {} a = {}", k.rho_c, k.a);
    let reg = window_regression(&p, p.a(), 32, 100 * n as u64, 1).unwrap();
    println!(
        "N={n}: drift coefficient {:.3} (OU -1), variance coefficient {:.3} (OU 2), {} steps",
        reg.drift_coefficient, reg.variance_coefficient, reg.steps
    );
    let v = ou_stationary_variance(1, 100, 1000.0, 0.01).unwrap();
    println!("Euler-Maruyama stationary variance {v:.4} (exact 1)");
}
