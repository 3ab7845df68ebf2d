//! Every Gaussian, jump count and mark is a pure function of
//! (seed, particle, step, channel). Runs are therefore identical for any
//! thread count, and a particle's noise does not depend on how many other
//! particles exist.
//!
//! cargo run --release --example reproducible_noise

use meanreflect::model::make_case_ii;
use meanreflect::parallel::build_pool;
use meanreflect::{simulate, GridSpec, JumpLaw, NoiseRecord, RecordOptions};

fn main() {
    let noise = NoiseRecord::new(2024, 3, 4, 0.8, JumpLaw::LogNormal { location: 0.0, scale: 1.0 });
    noise.write_csv(std::io::stdout().lock()).unwrap();

    let (model, constraint) = make_case_ii(3.0, 1.0, 1.0, 2.0, 4.0, 1.0).unwrap();
    let grid = GridSpec::new(1.0, 100).unwrap();
    let run = |threads| {
        build_pool(Some(threads))
            .install(|| simulate(&model, &constraint, grid, 50_000, 9, &RecordOptions::default()).unwrap())
    };
    let (one, four) = (run(1), run(4));
    println!("K_hat(T) with 1 thread:  {:.17e}", one.k_hat[100]);
    println!("K_hat(T) with 4 threads: {:.17e}", four.k_hat[100]);
    assert_eq!(one.k_hat, four.k_hat);
    assert_eq!(one.mean_x, four.mean_x);
}
