//! Drift, conditional variance and MGF of S near the critical line.

use arw_core::count_chain::CountState;
use arw_core::moments::{drift_exact, mgf_exact, mgf_expansion, second_moment_exact, DeviationFrame};
use arw_core::params::ModelParams;

fn main() {
    let n = 10_000u32;
    let p = ModelParams::new(n, 1.0).unwrap();
    let frame = DeviationFrame::new(p);
    let base = (p.rho_c() * p.n()) as u32;
    println!("{:>6} {:>6} {:>8} {:>12} {:>8}", "x", "y", "S", "N*drift", "var");
    for dx in [0u32, 100, 200, 300, 400] {
        let x = base + dx;
        let line = frame.ell_at(x as f64);
        for dy in [-20i64, 0, 20] {
            let y = line as i64 + dy;
            if y < 1 || y > x as i64 {
                continue;
            }
            let s = CountState::new(x, y as u32);
            let d = drift_exact(&p, s).unwrap();
            let v = second_moment_exact(&p, s).unwrap() - d * d;
            println!("{x:>6} {y:>6} {:>8.1} {:>12.4} {:>8.4}", frame.s_of(s), d * p.n(), v);
        }
    }
    let x = base + p.window_scale() as u32;
    let s = CountState::new(x, frame.ell_at(x as f64) as u32);
    for theta in [0.1, 0.01, -0.01] {
        let e = mgf_exact(&p, s, theta).unwrap();
        let a = mgf_expansion(&p, s, theta).unwrap();
        println!("theta={theta:+}: exact {e:.10} expansion {a:.10}");
    }
}
