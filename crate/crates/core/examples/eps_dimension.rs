//! Epsilon-dimensions of spline-smoothness weights, their restriction to `d` coordinates
//! and the closed-form count per support set.

use tensorsplit::epsdim::{
    eps_dimension, eps_dimension_restricted, spline_eps_dimension, DecayCertificate, DimensionModel, EnumOptions,
};
use tensorsplit::series::Sequence;
use tensorsplit::weights::{GammaModel, PerCoord, WeightModel};

fn main() {
    let s = 1.0;
    let gamma = GammaModel::Product(Sequence::power(1.0, 2.0).unwrap());
    let a = WeightModel::spline(gamma.clone(), &PerCoord::Constant(s), &PerCoord::Constant(1.0)).unwrap();
    let b = WeightModel::unit();
    let opts = EnumOptions::default();
    let dims = DimensionModel::Spline;

    println!("{:>8} {:>8} {:>6} {:>4} {:>12}", "eps", "n", "|J|", "d0", "bound");
    for eps in [0.5, 0.2, 0.1, 0.05, 0.02, 0.01] {
        let r = eps_dimension(&a, &b, eps, &dims, DecayCertificate::Auto, &opts).unwrap();
        let closed = spline_eps_dimension(&gamma, s, 1.0, eps, None, &opts).unwrap();
        assert_eq!(closed.n, r.n);
        println!(
            "{eps:>8} {:>8} {:>6} {:>4} {:>12.1}",
            r.n,
            r.count(),
            r.max_coord(),
            closed.upper_bound
        );
    }

    let eps = 0.02;
    println!("\nrestriction to the first d coordinates, eps = {eps}:");
    for d in 1..=8 {
        let r = eps_dimension_restricted(&a, &b, eps, &dims, d, DecayCertificate::Auto, &opts).unwrap();
        println!("  d = {d}: n = {}", r.n);
    }

    let closed = spline_eps_dimension(&gamma, s, 1.0, eps, None, &opts).unwrap();
    println!("\nper support set at eps = {eps}:");
    for t in &closed.terms {
        println!("  omega = {:<10} m = {:>2} count = {}", t.omega.to_string(), t.m, t.count);
    }
}
