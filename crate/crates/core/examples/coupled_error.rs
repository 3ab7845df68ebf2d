//! Tracks a few particles and rebuilds their exact paths from the very same
//! Brownian increments and jumps. The gap is `K̂ − K`, shared by all particles.
//!
//! cargo run --release --example coupled_error

use meanreflect::model::CaseIParams;
use meanreflect::oracle::exact_case_i;
use meanreflect::{simulate, GridSpec, RecordOptions};

fn main() {
    let params = CaseIParams {
        beta: 2.0,
        sigma: 1.0,
        eta: 1.0,
        lambda: 5.0,
        x0: 1.0,
        p: 0.5,
    };
    let (model, constraint) = params.build().unwrap();
    let grid = GridSpec::new(1.0, 200).unwrap();
    let track = vec![0, 1, 2];
    let options = RecordOptions {
        track: track.clone(),
        ..RecordOptions::default()
    };
    for particles in [100, 1_000, 10_000] {
        let run = simulate(&model, &constraint, grid, particles, 42, &options).unwrap();
        let exact = exact_case_i(&run.noise, &params, &grid, &track).unwrap();
        let sup: Vec<f64> = run
            .tracked
            .iter()
            .zip(&exact.x)
            .map(|(sim, ex)| sim.x.iter().zip(ex).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .collect();
        println!("N = {particles:6}: sup |X_hat - X| for particles 0, 1, 2 = {sup:.5?}");
    }
}
