//! A user-defined model: mean-reverting drift, state-dependent volatility,
//! exponential jump marks and a custom increasing constraint given by
//! closures. Validation runs before the simulation.
//!
//! cargo run --release --example custom_model

use std::sync::Arc;

use meanreflect::model::{validate, CustomConstraint, InitialConfig, SlopeBounds};
use meanreflect::stochastics::Sampler;
use meanreflect::{simulate, Constraint, GridSpec, JumpLaw, ModelSpec, RecordOptions};
use rand::Rng;

fn main() {
    let marks = JumpLaw::Custom(Sampler::new(|rng| -(1.0 - rng.random::<f64>()).ln()));
    let initial = InitialConfig::Normal { mean: 2.0, std: 0.5 }.law().unwrap();
    let model = ModelSpec::custom(
        Arc::new(|x| -1.5 * (x - 0.5)),
        Arc::new(|x| 0.3 + 0.1 * (x * x + 1.0).sqrt()),
        Arc::new(|_, z| -0.4 * z),
        3.0,
        marks,
        initial,
    )
    .unwrap()
    // λ E[F] = 3 · (−0.4) · E[z] with unit-mean exponential marks
    .with_compensator(Arc::new(|_| -1.2));

    // h(x) = x + 0.3 tanh(x) − 1 has slopes in [1, 1.3]
    let constraint = Constraint::custom(CustomConstraint {
        h: Arc::new(|x| x + 0.3 * x.tanh() - 1.0),
        h_prime: Some(Arc::new(|x| 1.0 + 0.3 / x.cosh().powi(2))),
        h_second: Some(Arc::new(|x| -0.6 * x.tanh() / x.cosh().powi(2))),
        bounds: Some(SlopeBounds { lower: 1.0, upper: 1.3 }),
    })
    .unwrap();

    let report = validate(&model, &constraint);
    println!("valid: {}, warnings: {:?}", report.is_valid(), report.warnings);

    let grid = GridSpec::new(3.0, 300).unwrap();
    let run = simulate(&model, &constraint, grid, 20_000, 1, &RecordOptions::default()).unwrap();
    println!("{:>6} {:>10} {:>12} {:>10}", "t", "K_hat", "mean h(X)", "mean X");
    for k in (0..=grid.steps).step_by(30) {
        println!(
            "{:6.2} {:10.5} {:12.2e} {:10.5}",
            run.times[k], run.k_hat[k], run.mean_h[k], run.mean_x[k]
        );
    }
}
