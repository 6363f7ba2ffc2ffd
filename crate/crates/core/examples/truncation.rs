//! m-variate truncation: actual L2 errors against the a-priori bounds.

use tensorsplit::decomp::{weighted_norm, Anchor, Mode, ProductTerm, SeparableFunction, UnivariateFactor as U};
use tensorsplit::quad::gauss_legendre;
use tensorsplit::sensitivity::{truncation_bound, truncation_error};
use tensorsplit::series::Sequence;
use tensorsplit::weights::GammaModel;

fn main() {
    let d = 4;
    // f(x) = prod_k (1 + x_k^2 / k^2)
    let mut terms = vec![ProductTerm::new(1.0, [])];
    for mask in 1u32..(1 << d) {
        let factors: Vec<(u32, U)> = (0..d).filter(|k| mask & (1 << k) != 0).map(|k| (k + 1, U::monomial(2))).collect();
        let coef: f64 = factors.iter().map(|(k, _)| 1.0 / (*k as f64).powi(2)).product();
        terms.push(ProductTerm::new(coef, factors));
    }
    let f = SeparableFunction::new(d, terms).unwrap();
    let rule = gauss_legendre(32).unwrap();
    let gamma = GammaModel::Product(Sequence::power(1.0, 3.0).unwrap());
    let anchor = Anchor::new(0.5).unwrap();

    for mode in [Mode::Anova, Mode::Anchored] {
        let norm = weighted_norm(&f, &gamma, mode, anchor, &rule).unwrap();
        println!("{mode}: ||f|| = {norm:.6}");
        for m in 0..=d as usize {
            let err = truncation_error(&f, m, mode, anchor, &rule);
            let eps_m = truncation_bound(&gamma, m, mode, anchor).unwrap();
            println!("  m = {m}: error {err:.3e} <= eps_m ||f|| = {:.3e}", eps_m * norm);
        }
    }

    let geo = GammaModel::Product(Sequence::geometric(0.01, 0.25).unwrap());
    println!("\nbound ratio anchored / ANOVA at x* = 1/2:");
    for m in 0..5 {
        let r = truncation_bound(&geo, m, Mode::Anchored, anchor).unwrap() / truncation_bound(&geo, m, Mode::Anova, anchor).unwrap();
        println!("  m = {m}: {r:.6}  (3/4)^((m+1)/2) = {:.6}", 0.75f64.powf((m as f64 + 1.0) / 2.0));
    }
}
