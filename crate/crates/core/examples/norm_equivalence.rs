//! Certificates for the equivalence of the weighted ANOVA and anchored norms.

use tensorsplit::decomp::{q_const, Anchor};
use tensorsplit::equivalence::{check_conditions, check_hs_condition, default_alpha, product_weight_equivalence, Outcome};
use tensorsplit::index::SupportSet;
use tensorsplit::series::Sequence;
use tensorsplit::weights::GammaModel;

fn show(label: &str, out: &Outcome) {
    match out {
        Outcome::Certified(c) => println!("{label}: certified, C' = {:.6}, C'' = {:.6}, C = {:.6}", c.c_prime, c.c_dprime, c.c),
        Outcome::NotCertified(n) => println!("{label}: not certified, failing {:?}", n.failing),
    }
}

fn main() {
    let q = q_const(Anchor::new(0.5).unwrap());
    for p in [4.0, 3.0, 2.0] {
        let g = Sequence::power(1.0, p).unwrap();
        let gamma = GammaModel::Product(g.clone());
        let out = check_conditions(&gamma, &default_alpha(&gamma, 1.0).unwrap(), q).unwrap();
        show(&format!("gamma_k = k^-{p}"), &out);
        println!("  sum sqrt(gamma_k) finite: {}", product_weight_equivalence(&g));
    }

    let gamma = GammaModel::Product(Sequence::power(1.0, 4.0).unwrap());
    show("k^-4 with the anchor-free condition", &check_hs_condition(&gamma).unwrap());
    for qt in [1.0, 1.25, 1.5] {
        let out = check_conditions(&gamma, &default_alpha(&gamma, qt).unwrap(), q).unwrap();
        show(&format!("k^-4, q_tilde = {qt}"), &out);
    }

    // a finite table of interaction weights is always certified
    let set = |c: &[u32]| SupportSet::new(c.iter().copied()).unwrap();
    let table = GammaModel::table([(set(&[1]), 1.0), (set(&[2]), 0.5), (set(&[1, 2]), 0.1), (set(&[3]), 0.01)]).unwrap();
    let out = check_conditions(&table, &default_alpha(&table, 1.0).unwrap(), q).unwrap();
    show("finite table", &out);
}
