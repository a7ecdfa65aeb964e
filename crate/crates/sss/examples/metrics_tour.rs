//! The norm-ratio sparsity measure and its log-surrogate.
//!
//! Shows why s(x) = ||x||_1^2 / ||x||_2^2 is a noise-stable stand-in for
//! the l0 count, and checks the surrogate's derivatives at a point.
//!
//! ```bash
//! cargo run --release -p sss --example metrics_tour
//! ```

use ndarray::prelude::*;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use sss::metrics::{
    quadratic_form, sparsity_ratio, surrogate_cost, surrogate_gradient, surrogate_hessian,
};

fn l0(x: &Array1<f64>, threshold: f64) -> usize {
    x.iter().filter(|v| v.abs() > threshold).count()
}

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n = 500;

    // A 60-sparse signal with unit-bounded amplitudes.
    let mut clean = Array1::zeros(n);
    for _ in 0..60 {
        let i = rng.random_range(0..n);
        clean[i] = rng.random_range(0.4..1.0) * if rng.random::<bool>() { 1.0 } else { -1.0 };
    }
    // The same signal plus wideband noise 20 dB down.
    let noisy = &clean + &Array1::from_shape_fn(n, |_| rng.random_range(-0.03..0.03));

    println!("            l0 (>1e-12)   s(x)");
    println!(
        "clean       {:>10}   {:>7.1}",
        l0(&clean, 1e-12),
        sparsity_ratio(clean.view()).unwrap()
    );
    println!(
        "noisy       {:>10}   {:>7.1}",
        l0(&noisy, 1e-12),
        sparsity_ratio(noisy.view()).unwrap()
    );
    println!("the l0 count blows up to n; the norm ratio barely moves\n");

    // Surrogate cost and derivatives at a strictly positive point.
    let x = Array1::from_shape_fn(6, |_| rng.random_range(0.2..1.0));
    println!("x = {x:.4}");
    println!("f(x) = {:.6}", surrogate_cost(x.view()).unwrap());
    println!("grad f = {:.4}", surrogate_gradient(x.view()).unwrap());

    let h = surrogate_hessian(x.view()).unwrap();
    let mut smallest = f64::INFINITY;
    for _ in 0..2000 {
        let mut y: Array1<f64> = Array1::from_shape_fn(6, |_| rng.random_range(-1.0..1.0));
        let norm = y.dot(&y).sqrt();
        y.mapv_inplace(|v| v / norm);
        smallest = smallest.min(quadratic_form(&h, y.view()).unwrap());
    }
    println!("smallest sampled y'Hy over unit directions: {smallest:.6} (positive definite)");
}
