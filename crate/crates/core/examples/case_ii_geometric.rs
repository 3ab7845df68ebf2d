//! Geometric Brownian motion with proportional jumps. The reflection starts
//! at `t* = ln(x0/p)/a` and then grows like `a p (t − t*)`.
//!
//! cargo run --release --example case_ii_geometric

use meanreflect::model::CaseIIParams;
use meanreflect::oracle::case_ii_k;
use meanreflect::{simulate, GridSpec, RecordOptions};

fn main() {
    let params = CaseIIParams {
        a: 3.0,
        gamma: 1.0,
        theta: 1.0,
        lambda: 2.0,
        x0: 4.0,
        p: 1.0,
    };
    let (model, constraint) = params.build().unwrap();
    let grid = GridSpec::new(1.0, 500).unwrap();
    let run = simulate(&model, &constraint, grid, 10_000, 3, &RecordOptions::default()).unwrap();

    println!("t* = {:.4}", params.t_star());
    println!("{:>6} {:>10} {:>10} {:>10}", "t", "K_hat", "K", "mean X");
    for k in (0..=grid.steps).step_by(50) {
        let t = run.times[k];
        println!(
            "{t:6.2} {:10.5} {:10.5} {:10.5}",
            run.k_hat[k],
            case_ii_k(t, &params),
            run.mean_x[k]
        );
    }
}
