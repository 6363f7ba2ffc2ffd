//! ANOVA and anchored decompositions of a separable function with weighted norms.

use tensorsplit::decomp::{decompose, reconstruct, weighted_contributions, Anchor, Mode, SeparableFunction};
use tensorsplit::quad::gauss_legendre;
use tensorsplit::series::Sequence;
use tensorsplit::weights::GammaModel;

fn main() {
    let f: SeparableFunction = serde_json::from_str(
        r#"{"dim": 3, "terms": [
            {"coef": 1.0, "factors": {"1": {"kind": "monomial", "power": 2}}},
            {"coef": 0.5, "factors": {"1": {"kind": "sin", "freq": 3.0}, "2": {"kind": "monomial", "power": 1}}},
            {"coef": 0.2, "factors": {"2": {"kind": "exp", "rate": 1.0}, "3": {"kind": "cos", "freq": 2.0}}}
        ]}"#,
    )
    .unwrap();
    let rule = gauss_legendre(32).unwrap();
    let gamma = GammaModel::Product(Sequence::power(1.0, 4.0).unwrap());
    let anchor = Anchor::new(0.5).unwrap();
    let x = [0.3, 0.8, 0.1];

    for mode in [Mode::Anova, Mode::Anchored] {
        let terms = decompose(&f, mode, anchor, &rule);
        let rows = weighted_contributions(&terms, &gamma).unwrap();
        println!("{mode} decomposition:");
        println!("  {:<9} {:>14} {:>14}", "omega", "||f_w^(w)||", "weighted");
        for r in &rows {
            println!("  {:<9} {:>14.8} {:>14.6}", r.omega.to_string(), r.term_norm, r.weighted);
        }
        let norm = rows.iter().map(|r| r.weighted).sum::<f64>().sqrt();
        println!("  weighted norm {norm:.6}");
        println!("  f(x) = {:.15}, sum of terms = {:.15}\n", f.eval(&x), reconstruct(&terms, &x));
    }
}
