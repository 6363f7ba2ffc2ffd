#![allow(dead_code)]

use tensorsplit::decomp::{ProductTerm, SeparableFunction, UnivariateFactor as U};

fn f(dim: u32, terms: Vec<ProductTerm>) -> SeparableFunction {
    SeparableFunction::new(dim, terms).unwrap()
}

fn t<const N: usize>(coef: f64, factors: [(u32, U); N]) -> ProductTerm {
    ProductTerm::new(coef, factors)
}

/// Ten separable test functions with `d <= 4`, mixing polynomial and trigonometric factors.
pub fn corpus() -> Vec<SeparableFunction> {
    vec![
        f(1, vec![t(1.0, [(1, U::monomial(3))]), t(-0.5, [(1, U::monomial(1))])]),
        f(2, vec![t(1.0, [(1, U::monomial(1)), (2, U::monomial(2))])]),
        f(2, vec![t(1.0, [(1, U::sin(3.0, 0.0))]), t(0.7, [(1, U::cos(2.0, 0.3)), (2, U::sin(1.0, 0.0))])]),
        f(3, vec![t(2.0, []), t(1.0, [(1, U::polynomial(vec![1.0, -3.0, 2.0])), (3, U::monomial(1))])]),
        f(
            3,
            vec![
                t(1.0, [(1, U::monomial(1)), (2, U::monomial(1)), (3, U::monomial(1))]),
                t(0.3, [(2, U::cos(4.0, 0.0))]),
            ],
        ),
        f(
            4,
            vec![
                t(1.0, [(1, U::monomial(2))]),
                t(0.5, [(2, U::sin(2.0, 0.5)), (4, U::monomial(1))]),
                t(0.25, [(3, U::monomial(4))]),
            ],
        ),
        f(
            4,
            vec![t(
                1.0,
                [(1, U::cos(1.0, 0.0)), (2, U::cos(1.0, 0.0)), (3, U::cos(1.0, 0.0)), (4, U::cos(1.0, 0.0))],
            )],
        ),
        f(
            2,
            vec![
                t(1.0, [(1, U::monomial(5))]),
                t(-1.0, [(2, U::monomial(5))]),
                t(0.1, [(1, U::monomial(2)), (2, U::monomial(3))]),
            ],
        ),
        f(
            3,
            vec![
                t(1.0, [(1, U::sin(5.0, 0.0)), (2, U::monomial(2))]),
                t(0.4, [(2, U::polynomial(vec![0.0, 1.0, -1.0])), (3, U::cos(3.0, 1.0))]),
            ],
        ),
        f(
            4,
            vec![
                t(0.8, [(1, U::monomial(1)), (4, U::monomial(2))]),
                t(0.6, [(2, U::sin(2.0, 0.0)), (3, U::monomial(1))]),
                t(0.2, [(1, U::monomial(1)), (2, U::monomial(1)), (3, U::cos(1.0, 0.0)), (4, U::monomial(1))]),
            ],
        ),
    ]
}
