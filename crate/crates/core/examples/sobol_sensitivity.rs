//! Weighted total Sobol indices from the ANOVA and the anchored decomposition.

use tensorsplit::decomp::{Anchor, Mode, ProductTerm, SeparableFunction, UnivariateFactor as U};
use tensorsplit::quad::gauss_legendre;
use tensorsplit::sensitivity::{sobol_indices, total_index};
use tensorsplit::series::Sequence;
use tensorsplit::weights::GammaModel;

fn main() {
    let f = SeparableFunction::new(
        3,
        vec![
            ProductTerm::new(1.0, [(1, U::monomial(1))]),
            ProductTerm::new(0.5, [(2, U::sin(2.0, 0.0))]),
            ProductTerm::new(0.8, [(1, U::monomial(1)), (3, U::monomial(2))]),
        ],
    )
    .unwrap();
    let rule = gauss_legendre(32).unwrap();
    let gamma = GammaModel::Product(Sequence::power(1.0, 2.0).unwrap());
    let anchor = Anchor::new(0.5).unwrap();

    for include_empty in [false, true] {
        let a = sobol_indices(&f, &gamma, Mode::Anova, anchor, include_empty, &rule).unwrap();
        let an = sobol_indices(&f, &gamma, Mode::Anchored, anchor, include_empty, &rule).unwrap();
        println!("empty set in the denominator: {include_empty}");
        println!("  {:<9} {:>10} {:>10} {:>10} {:>8}", "omega", "S_A", "S_tot,A", "S_tot,an", "ratio");
        for omega in a.per_omega.keys() {
            let (ta, tan) = (total_index(&a, omega), total_index(&an, omega));
            if tan == 0.0 {
                continue;
            }
            println!(
                "  {:<9} {:>10.6} {:>10.6} {:>10.6} {:>8.4}",
                omega.to_string(),
                a.per_omega[omega],
                ta,
                tan,
                ta / tan
            );
        }
    }
}
