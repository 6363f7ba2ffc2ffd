//! Regularized least squares with the anchored H^1 product kernel.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tensorsplit::decomp::Anchor;
use tensorsplit::regress::{fit, rmse, KernelSpec, SampleSet};
use tensorsplit::series::Sequence;

fn target(x: &[f64]) -> f64 {
    (2.0 * x[0]).sin() + 0.5 * x[1] * x[1] + 0.1 * x[0] * x[2]
}

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut draw = |n: usize| -> SampleSet {
        let xs: Vec<Vec<f64>> = (0..n).map(|_| (0..3).map(|_| rng.gen()).collect()).collect();
        let ys = xs.iter().map(|x| target(x) + 0.01 * rng.gen_range(-1.0..1.0)).collect();
        SampleSet::scalar(xs, ys).unwrap()
    };
    let train = draw(60);
    let test = draw(200);
    let kernel = KernelSpec::AnchoredH1 {
        anchor: Anchor::new(0.5).unwrap(),
        gamma: Sequence::finite(vec![4.0, 2.0, 0.5]).unwrap(),
    };
    println!("{:>10} {:>12} {:>12}", "lambda", "train rmse", "test rmse");
    for lambda in [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6] {
        let model = fit(&train, &kernel, lambda).unwrap();
        println!("{lambda:>10.0e} {:>12.6} {:>12.6}", rmse(&model, &train)[0], rmse(&model, &test)[0]);
    }
    let model = fit(&train, &kernel, 1e-4).unwrap();
    let x = [0.2, 0.7, 0.4];
    println!("f({x:?}) = {:.6}, prediction {:.6}", target(&x), model.predict_scalar(&x));
}
