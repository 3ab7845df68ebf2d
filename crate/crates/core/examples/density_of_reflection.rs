//! Density of the reflection measured from the particle cloud. Once the
//! mean sits on the boundary it equals `β` for the drifted Brownian model.
//!
//! cargo run --release --example density_of_reflection

use meanreflect::harness::density_series;
use meanreflect::model::make_case_i;
use meanreflect::GridSpec;

fn main() {
    let (model, constraint) = make_case_i(2.0, 1.0, 1.0, 5.0, 1.0, 0.5).unwrap();
    let grid = GridSpec::new(1.0, 200).unwrap();
    let series = density_series(&model, &constraint, grid, 20_000, 11, None).unwrap();
    println!("{:>6} {:>8} {:>8}", "t", "k_hat", "k");
    for k in (0..grid.steps).step_by(20) {
        println!("{:6.3} {:8.4} {:8.4}", series.times[k], series.k_hat[k], series.k_exact[k]);
    }
    println!(
        "sum k_hat dt = {:.4}, K_hat(T) = {:.4}",
        series.integral(&grid),
        series.k_path[grid.steps]
    );
}
