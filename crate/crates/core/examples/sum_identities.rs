use arw_core::exact::{sum_identity_exp, sum_identity_first, sum_identity_second};
use arw_core::experiments::suite::sum_identity_error;

fn main() {
    for (n, m) in [(5u64, 9u64), (30, 100), (200, 1000)] {
        let (l1, r1) = sum_identity_first(n, m).unwrap();
        let (l2, r2) = sum_identity_second(n, m).unwrap();
        println!("n={n} m={m}: first {l1:.12} vs {r1:.12}; second {l2:.12} vs {r2:.12}");
    }
    let (e1, e2) = sum_identity_error(200, 1000).unwrap();
    println!("worst relative error over n<=200, m<=1000: {e1:.1e} {e2:.1e}");
    // residual of the first-order expansion shrinks like theta^2
    for theta in [1e-1, 1e-2, 1e-3] {
        let (_, _, r) = sum_identity_exp(50, 200, theta).unwrap();
        println!("theta={theta:e} residual={r:.3e}");
    }
}
