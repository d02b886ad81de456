//! Time for S to fall to -M sqrt(lambda N), started just above or just below
//! the scaling window, compared with the OU limit.

use arw_core::params::ModelParams;
use arw_core::scaling::{first_passage_compare, PassageSettings};

fn main() {
    let p = ModelParams::new(100_000, 1.0).unwrap();
    let set = PassageSettings { epsilon: 0.3, level_multiplier: 1.0, samples: 200, horizon: 20.0, dt: 0.01, seed: 9 };
    let c = first_passage_compare(&p, &set).unwrap();
    println!("levels: slow {:.3} fast {:.3}", c.level_slow, c.level_fast);
    println!("chain medians: slow {:?} fast {:?}", c.median_slow, c.median_fast);
    let bound = if c.ratio_is_lower_bound { " (lower bound)" } else { "" };
    println!("median ratio {:.2}{bound}", c.median_ratio);
    println!("KS chain vs OU: slow {:.3} fast {:.3}", c.ks_slow, c.ks_fast);
}
