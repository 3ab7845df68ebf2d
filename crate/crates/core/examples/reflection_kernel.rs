//! The reflection kernel on its own: the smallest shift that restores the
//! mean constraint for an empirical measure, and the running supremum that
//! turns a sequence of such shifts into a nondecreasing process.
//!
//! cargo run --release --example reflection_kernel

use meanreflect::reflection::{bar_g0, g0, h_mean, wasserstein1};
use meanreflect::{Constraint, EmpiricalMeasure, ReflectionTracker};

fn main() {
    let constraint = Constraint::sine_perturbed(0.5, 1.0).unwrap();
    let atoms = [-0.4, 0.1, 0.3, 0.9];
    let mu = EmpiricalMeasure::new(&atoms).unwrap();
    let shift = bar_g0(&mu, &constraint).unwrap();
    println!("root of H(., mu) = {shift:.12}, H at the root = {:.2e}", h_mean(shift, &mu, &constraint));

    let moved: Vec<f64> = atoms.iter().map(|x| x + 0.25).collect();
    let nu = EmpiricalMeasure::new(&moved).unwrap();
    println!(
        "G0(mu) = {:.6}, G0(nu) = {:.6}, W1(mu, nu) = {:.6}",
        g0(&mu, &constraint).unwrap(),
        g0(&nu, &constraint).unwrap(),
        wasserstein1(&mu, &nu).unwrap()
    );

    let mut tracker = ReflectionTracker::new();
    for v in [0.0, 0.3, 0.1, 0.5, 0.5, 0.2] {
        let delta = tracker.advance(v);
        println!("G0 = {v:.2} -> increment {delta:.2}, K = {:.2}", tracker.running_sup());
    }
}
