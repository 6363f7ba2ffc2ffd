//! Redundant (V) versus orthogonal (W) weights: the transform `a -> â` and the VaWa constant.

use tensorsplit::index::{idx, IndexSet, IndexVector};
use tensorsplit::series::Sequence;
use tensorsplit::weights::{hat_transform, va_wa_condition, GammaModel, PerCoord, WeightError, WeightModel};

fn main() {
    // one coordinate, a_j = rho^-j: the transform is a constant factor 1 - rho
    let rho = 0.25;
    let a = WeightModel::spline_rho(
        GammaModel::Product(Sequence::finite(vec![1.0]).unwrap()),
        Sequence::constant(rho).unwrap(),
        &PerCoord::Constant(1.0),
    )
    .unwrap();
    for l in 0..4 {
        let j = if l == 0 { IndexVector::zero() } else { IndexVector::unit(1, l) };
        let hat = hat_transform(&a, &j, &a).unwrap();
        println!("j = {j}: a = {:>6}, â = {hat:.6}, â/a = {:.6}", a.weight(&j), hat / a.weight(&j));
    }

    // spline weights with second-order interactions in 3 coordinates
    let gamma = GammaModel::FiniteOrder {
        order: 2,
        gamma: Sequence::geometric(1.0, 0.5).unwrap(),
    };
    let a = WeightModel::spline(gamma, &PerCoord::Constant(1.0), &PerCoord::Constant(1.0)).unwrap();
    let search = IndexSet::full_box(4, 4);
    match va_wa_condition(&a, &search, &a).unwrap() {
        Some(v) => println!("sup a/â = {:.6} ({:?})", v.c_sq, v.kind),
        None => println!("sup a/â is infinite"),
    }
    for j in [idx([(1, 1)]), idx([(1, 1), (2, 1)]), idx([(2, 3)])] {
        let hat = hat_transform(&a, &j, &a).unwrap();
        println!("j = {j}: a = {:.3}, â = {hat:.3}", a.weight(&j));
    }

    // a = 1 on infinitely many indices: the V-norm collapses
    let unit = WeightModel::unit();
    match hat_transform(&unit, &IndexVector::zero(), &unit) {
        Err(WeightError::NormDegenerate(w)) => {
            println!("a = 1 rejected; partial values of |1|^2 over growing boxes:");
            for (size, v) in &w.partial {
                println!("  {size:>6} indices: {v:.3e}");
            }
        }
        other => println!("unexpected: {other:?}"),
    }
}
