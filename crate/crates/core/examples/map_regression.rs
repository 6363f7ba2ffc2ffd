//! Recovering a map into R^L: one kernel, one regularization parameter per output.

use tensorsplit::index::SupportSet;
use tensorsplit::regress::{fit_map, rmse, KernelSpec, SampleSet, UnivariateKernel};

fn main() {
    // map x -> (x1 + x2, x1 x2, sin(3 x1)) sampled on a grid
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 0..8 {
        for k in 0..8 {
            let x = [(i as f64 + 0.5) / 8.0, (k as f64 + 0.5) / 8.0];
            ys.push(vec![x[0] + x[1], x[0] * x[1], (3.0 * x[0]).sin()]);
            xs.push(x.to_vec());
        }
    }
    let samples = SampleSet::new(xs, ys).unwrap();
    // kernel with first-order and pairwise terms only
    let set = |c: &[u32]| SupportSet::new(c.iter().copied()).unwrap();
    let kernel = KernelSpec::TensorProduct {
        factor: UnivariateKernel::Brownian,
        weights: vec![(set(&[]), 1.0), (set(&[1]), 1.0), (set(&[2]), 1.0), (set(&[1, 2]), 0.5)],
    };
    let lambdas = [1e-6, 1e-5, 1e-4];
    let model = fit_map(&samples, &kernel, &lambdas).unwrap();
    println!("coefficients: {} x {}", model.coefficients.nrows(), model.coefficients.ncols());
    println!("training rmse per output: {:?}", rmse(&model, &samples));
    let x = [0.33, 0.71];
    let p = model.predict(&x);
    println!("at {x:?}: predicted {p:.4?}, exact [{:.4}, {:.4}, {:.4}]", x[0] + x[1], x[0] * x[1], (3.0 * x[0]).sin());
}
