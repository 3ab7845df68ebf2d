//! Strong error of particle 0 against the coupled exact solution, averaged
//! over independent replications, for growing particle counts. The log-log
//! slope should be close to −1.
//!
//! cargo run --release --example convergence_in_particles -- [replications]

use meanreflect::harness::{convergence_sweep, SweepSpec};
use meanreflect::model::make_case_i;

fn main() {
    let replications = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(200);
    let (model, constraint) = make_case_i(2.0, 1.0, 1.0, 5.0, 1.0, 0.5).unwrap();
    let spec = SweepSpec {
        horizon: 1.0,
        steps: vec![100],
        particles: vec![100, 400, 700, 1000, 1300, 1600, 1900, 2200],
        replications,
        seed: 2,
    };
    let table = convergence_sweep(&model, &constraint, &spec).unwrap();
    println!("{:>6} {:>12} {:>10}", "N", "E_hat", "seconds");
    for row in &table.rows {
        println!("{:6} {:12.4e} {:10.2}", row.particles, row.e_hat, row.runtime_sec);
    }
    let fit = table.fit_in_particles.unwrap();
    println!("slope {:.3}, r2 {:.4}", fit.slope, fit.r_squared);
}
