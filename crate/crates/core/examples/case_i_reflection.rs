//! Drifted Brownian motion with lognormal jumps, reflected so that its mean
//! stays above `p`. The particle estimate of `K` is compared with
//! `(p + βt − x0)⁺`.
//!
//! cargo run --release --example case_i_reflection -- [particles]

use meanreflect::model::CaseIParams;
use meanreflect::oracle::case_i_k;
use meanreflect::{simulate, GridSpec, RecordOptions};

fn main() {
    let particles = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20_000);
    let params = CaseIParams {
        beta: 2.0,
        sigma: 1.0,
        eta: 1.0,
        lambda: 5.0,
        x0: 1.0,
        p: 0.5,
    };
    let (model, constraint) = params.build().expect("valid parameters");
    let grid = GridSpec::new(1.0, 500).unwrap();
    let run = simulate(&model, &constraint, grid, particles, 7, &RecordOptions::default()).unwrap();

    println!("N = {particles}, n = {}", grid.steps);
    println!("{:>6} {:>10} {:>10} {:>12}", "t", "K_hat", "K", "mean X");
    for k in (0..=grid.steps).step_by(50) {
        let t = run.times[k];
        println!(
            "{t:6.2} {:10.5} {:10.5} {:12.5}",
            run.k_hat[k],
            case_i_k(t, &params),
            run.mean_x[k]
        );
    }
}
