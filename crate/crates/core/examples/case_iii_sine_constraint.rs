//! Ornstein–Uhlenbeck dynamics under the nonlinear constraint
//! `E[X + α sin X] ≥ p`, against the semi-analytic reflection, which is
//! itself only accurate for small mean reversion.
//!
//! cargo run --release --example case_iii_sine_constraint -- [particles]

use std::f64::consts::FRAC_PI_2;

use meanreflect::model::{sine_constraint_root, CaseIIIParams};
use meanreflect::oracle::exact_case_iii_k;
use meanreflect::{simulate, GridSpec, RecordOptions};

fn main() {
    let particles = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20_000);
    let params = CaseIIIParams {
        beta: 0.01,
        a: 0.01,
        sigma: 1.0,
        eta: 1.0,
        lambda: 1.0,
        x0: sine_constraint_root(0.9, FRAC_PI_2) + 0.1,
        p: FRAC_PI_2,
        alpha: 0.9,
    };
    let (model, constraint) = params.build().unwrap();
    let grid = GridSpec::new(15.0, 1000).unwrap();
    let run = simulate(&model, &constraint, grid, particles, 5, &RecordOptions::default()).unwrap();
    let reference = exact_case_iii_k(&params, &grid).unwrap();

    println!("x0 = {:.6}, N = {particles}", params.x0);
    println!("{:>6} {:>10} {:>12} {:>12}", "t", "K_hat", "K (approx)", "mean h(X)");
    for k in (0..=grid.steps).step_by(100) {
        println!(
            "{:6.2} {:10.5} {:12.5} {:12.2e}",
            run.times[k], run.k_hat[k], reference.k[k], run.mean_h[k]
        );
    }
}
