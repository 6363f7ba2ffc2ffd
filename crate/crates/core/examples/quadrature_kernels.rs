//! Gauss-Legendre rules and the kernel constants of the ANOVA and anchored decompositions.

use tensorsplit::decomp::{k_an, kappa_a, q_const, q_hat, Anchor};
use tensorsplit::quad::{gauss_legendre, integrate_tensor};

fn main() {
    let rule = gauss_legendre(5).unwrap();
    println!("5-point rule on [0, 1]:");
    for (x, w) in rule.nodes.iter().zip(&rule.weights) {
        println!("  x = {x:.15}  w = {w:.15}");
    }
    println!("int x^9 = {:.16} (exact 0.1)", rule.integrate(|x| x.powi(9)));

    let rule = gauss_legendre(16).unwrap();
    let box3 = integrate_tensor(|x| x[0] * x[1].exp() * (2.0 * x[2]).cos(), &rule, 3);
    let exact = 0.5 * (1f64.exp() - 1.0) * (2f64.sin() / 2.0);
    println!("3-d tensor integral {box3:.15} vs {exact:.15}");

    let k2 = rule.integrate_2d_split(&[], |x| vec![x], |x, t| kappa_a(x, t).powi(2));
    println!("int int kappa_A^2 = {k2:.15} (1/6 = {:.15})", 1.0 / 6.0);

    println!("\n{:>6} {:>12} {:>12} {:>12}", "x*", "q", "||K_an||^2", "qhat");
    for xs in [0.0, 0.1, 0.25, 0.5, 0.75, 1.0] {
        let a = Anchor::new(xs).unwrap();
        let norm = rule.integrate_split(&[xs], |t| k_an(t, a).powi(2));
        println!("{xs:>6} {:>12.8} {norm:>12.8} {:>12.8}", q_const(a), q_hat(a));
    }
}
