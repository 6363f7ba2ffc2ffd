//! ANOVA and anchored decompositions of separable functions on `[0, 1]^d`, the
//! univariate kernels behind the norm comparison, and the weighted decomposition norms.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::index::{all_subsets, SupportSet};
use crate::quad::QuadratureRule;
use crate::weights::GammaModel;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecompError {
    #[error("weighted norm is infinite: gamma_{0} = 0 but the term is nonzero")]
    NormInfinite(SupportSet),
    #[error("invalid function: {0}")]
    InvalidFunction(String),
    #[error("anchor {0} outside [0, 1]")]
    AnchorOutOfRange(f64),
}

pub type Result<T> = std::result::Result<T, DecompError>;

/// Squared norms at or below this are treated as exact zeros.
const ZERO_NORM_SQ: f64 = 1e-28;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Anchor(f64);

impl Anchor {
    pub fn new(x_star: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&x_star) {
            Ok(Anchor(x_star))
        } else {
            Err(DecompError::AnchorOutOfRange(x_star))
        }
    }

    pub fn x_star(self) -> f64 {
        self.0
    }
}

impl Default for Anchor {
    fn default() -> Self {
        Anchor(0.5)
    }
}

impl TryFrom<f64> for Anchor {
    type Error = DecompError;
    fn try_from(v: f64) -> Result<Self> {
        Anchor::new(v)
    }
}

impl From<Anchor> for f64 {
    fn from(a: Anchor) -> f64 {
        a.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Anova,
    Anchored,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Anova => "anova",
            Mode::Anchored => "anchored",
        })
    }
}

/// `1_[0,x](t) - 1_[0,x*](t)`.
pub fn kappa_an(x: f64, t: f64, anchor: Anchor) -> f64 {
    let ind = |b: f64| if t <= b { 1.0 } else { 0.0 };
    ind(x) - ind(anchor.0)
}

/// `t` for `t < x`, else `-(1 - t)`.
pub fn kappa_a(x: f64, t: f64) -> f64 {
    if t < x {
        t
    } else {
        t - 1.0
    }
}

/// `int_0^1 kappa_an(x, t) dx`: `-t` for `t < x*`, else `1 - t`.
pub fn k_an(t: f64, anchor: Anchor) -> f64 {
    if t < anchor.0 {
        -t
    } else {
        1.0 - t
    }
}

/// `q = 1/3 - x*(1 - x*) = ||K_an||^2`.
pub fn q_const(anchor: Anchor) -> f64 {
    let x = anchor.0;
    1.0 / 3.0 - x * (1.0 - x)
}

/// `q_hat = max(x*^2, (1 - x*)^2) / 2`.
pub fn q_hat(anchor: Anchor) -> f64 {
    let x = anchor.0;
    0.5 * (x * x).max((1.0 - x) * (1.0 - x))
}

/// A univariate building block; presets evaluate in closed form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum UnivariateKind {
    /// `x^power`.
    Monomial { power: u32 },
    /// `sum_i coeffs[i] x^i`.
    Polynomial { coeffs: Vec<f64> },
    /// `sin(freq x + phase)`.
    Sin {
        freq: f64,
        #[serde(default)]
        phase: f64,
    },
    /// `cos(freq x + phase)`.
    Cos {
        freq: f64,
        #[serde(default)]
        phase: f64,
    },
    /// `exp(rate x)`.
    Exp { rate: f64 },
}

/// `g(x) = kind(x) - shift`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnivariateFactor {
    #[serde(flatten)]
    pub kind: UnivariateKind,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub shift: f64,
}

fn is_zero(v: &f64) -> bool {
    *v == 0.0
}

/// A mean with its estimated absolute error (zero for polynomials).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Mean {
    pub value: f64,
    pub err: f64,
}

impl UnivariateFactor {
    pub fn new(kind: UnivariateKind) -> Self {
        UnivariateFactor { kind, shift: 0.0 }
    }

    pub fn monomial(power: u32) -> Self {
        Self::new(UnivariateKind::Monomial { power })
    }

    pub fn polynomial(coeffs: Vec<f64>) -> Self {
        Self::new(UnivariateKind::Polynomial { coeffs })
    }

    pub fn sin(freq: f64, phase: f64) -> Self {
        Self::new(UnivariateKind::Sin { freq, phase })
    }

    pub fn cos(freq: f64, phase: f64) -> Self {
        Self::new(UnivariateKind::Cos { freq, phase })
    }

    pub fn exp(rate: f64) -> Self {
        Self::new(UnivariateKind::Exp { rate })
    }

    /// `g - c`.
    pub fn shifted(&self, c: f64) -> Self {
        UnivariateFactor {
            kind: self.kind.clone(),
            shift: self.shift + c,
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        let v = match &self.kind {
            UnivariateKind::Monomial { power } => x.powi(*power as i32),
            UnivariateKind::Polynomial { coeffs } => coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c),
            UnivariateKind::Sin { freq, phase } => (freq * x + phase).sin(),
            UnivariateKind::Cos { freq, phase } => (freq * x + phase).cos(),
            UnivariateKind::Exp { rate } => (rate * x).exp(),
        };
        v - self.shift
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match &self.kind {
            UnivariateKind::Monomial { power: 0 } => 0.0,
            UnivariateKind::Monomial { power } => *power as f64 * x.powi(*power as i32 - 1),
            UnivariateKind::Polynomial { coeffs } => coeffs
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (i, c)| acc * x + i as f64 * c),
            UnivariateKind::Sin { freq, phase } => freq * (freq * x + phase).cos(),
            UnivariateKind::Cos { freq, phase } => -freq * (freq * x + phase).sin(),
            UnivariateKind::Exp { rate } => rate * (rate * x).exp(),
        }
    }

    /// Polynomial degree, `None` for the transcendental presets.
    pub fn degree(&self) -> Option<u32> {
        match &self.kind {
            UnivariateKind::Monomial { power } => Some(*power),
            UnivariateKind::Polynomial { coeffs } => {
                Some(coeffs.iter().rposition(|c| *c != 0.0).unwrap_or(0) as u32)
            }
            _ => None,
        }
    }

    /// True if the derivative vanishes identically.
    pub fn is_constant(&self) -> bool {
        match &self.kind {
            UnivariateKind::Sin { freq, .. } | UnivariateKind::Cos { freq, .. } => *freq == 0.0,
            UnivariateKind::Exp { rate } => *rate == 0.0,
            _ => self.degree() == Some(0),
        }
    }

    /// `int_0^1 g`: exact for polynomials, the rule otherwise (error from the half-order rule).
    pub fn mean(&self, rule: &QuadratureRule) -> Mean {
        match &self.kind {
            UnivariateKind::Monomial { power } => Mean {
                value: 1.0 / (*power as f64 + 1.0) - self.shift,
                err: 0.0,
            },
            UnivariateKind::Polynomial { coeffs } => Mean {
                value: coeffs.iter().enumerate().map(|(i, c)| c / (i as f64 + 1.0)).sum::<f64>() - self.shift,
                err: 0.0,
            },
            _ => {
                let full = rule.integrate(|x| self.value(x));
                let half = crate::quad::gauss_legendre((rule.order() / 2).max(1)).expect("order in range");
                let coarse = half.integrate(|x| self.value(x));
                Mean {
                    value: full,
                    err: (full - coarse).abs(),
                }
            }
        }
    }
}

/// `coef * prod_k g_k(x_k)` over the listed coordinates (others are the constant 1).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTerm", into = "RawTerm")]
pub struct ProductTerm {
    pub coef: f64,
    pub factors: BTreeMap<u32, UnivariateFactor>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTerm {
    coef: f64,
    #[serde(default)]
    factors: BTreeMap<String, UnivariateFactor>,
}

impl TryFrom<RawTerm> for ProductTerm {
    type Error = DecompError;
    fn try_from(raw: RawTerm) -> Result<Self> {
        let mut factors = BTreeMap::new();
        for (k, f) in raw.factors {
            let kk: u32 = k
                .trim()
                .parse()
                .ok()
                .filter(|v| *v >= 1)
                .ok_or_else(|| DecompError::InvalidFunction(format!("bad coordinate key {k:?}")))?;
            factors.insert(kk, f);
        }
        Ok(ProductTerm { coef: raw.coef, factors })
    }
}

impl From<ProductTerm> for RawTerm {
    fn from(t: ProductTerm) -> Self {
        RawTerm {
            coef: t.coef,
            factors: t.factors.into_iter().map(|(k, f)| (k.to_string(), f)).collect(),
        }
    }
}

impl ProductTerm {
    pub fn new<I: IntoIterator<Item = (u32, UnivariateFactor)>>(coef: f64, factors: I) -> Self {
        ProductTerm {
            coef,
            factors: factors.into_iter().collect(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.factors
            .iter()
            .fold(self.coef, |acc, (&k, g)| acc * g.value(x[k as usize - 1]))
    }
}

/// `f(x) = sum_r c_r prod_k g_{r,k}(x_k)` on `[0, 1]^dim`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFunction", into = "RawFunction")]
pub struct SeparableFunction {
    dim: u32,
    terms: Vec<ProductTerm>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFunction {
    dim: u32,
    terms: Vec<ProductTerm>,
}

impl TryFrom<RawFunction> for SeparableFunction {
    type Error = DecompError;
    fn try_from(raw: RawFunction) -> Result<Self> {
        SeparableFunction::new(raw.dim, raw.terms)
    }
}

impl From<SeparableFunction> for RawFunction {
    fn from(f: SeparableFunction) -> Self {
        RawFunction {
            dim: f.dim,
            terms: f.terms,
        }
    }
}

impl SeparableFunction {
    pub fn new(dim: u32, terms: Vec<ProductTerm>) -> Result<Self> {
        if dim == 0 {
            return Err(DecompError::InvalidFunction("active dimension must be positive".into()));
        }
        for t in &terms {
            if !t.coef.is_finite() {
                return Err(DecompError::InvalidFunction("coefficients must be finite".into()));
            }
            if let Some((&k, _)) = t.factors.iter().next_back() {
                if k > dim {
                    return Err(DecompError::InvalidFunction(format!("factor on coordinate {k} > dim {dim}")));
                }
            }
        }
        Ok(SeparableFunction { dim, terms })
    }

    /// The constant `c` in dimension `dim`.
    pub fn constant(dim: u32, c: f64) -> Self {
        SeparableFunction {
            dim,
            terms: vec![ProductTerm::new(c, [])],
        }
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn terms(&self) -> &[ProductTerm] {
        &self.terms
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        assert!(x.len() >= self.dim as usize, "point has {} coordinates, need {}", x.len(), self.dim);
        self.terms.iter().map(|t| t.eval(x)).sum()
    }

    /// `partial^omega f (x)`.
    pub fn mixed_derivative(&self, omega: &SupportSet, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                if omega.iter().any(|k| !t.factors.contains_key(&k)) {
                    return 0.0;
                }
                t.factors.iter().fold(t.coef, |acc, (&k, g)| {
                    let xk = x[k as usize - 1];
                    acc * if omega.contains(k) { g.derivative(xk) } else { g.value(xk) }
                })
            })
            .sum()
    }

    /// `f - g` as a separable function.
    pub fn sub(&self, other: &SeparableFunction) -> SeparableFunction {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().map(|t| ProductTerm {
            coef: -t.coef,
            factors: t.factors.clone(),
        }));
        SeparableFunction {
            dim: self.dim.max(other.dim),
            terms,
        }
    }

    /// Sum of several functions of the same dimension.
    pub fn sum<'a, I: IntoIterator<Item = &'a SeparableFunction>>(dim: u32, parts: I) -> SeparableFunction {
        SeparableFunction {
            dim,
            terms: parts.into_iter().flat_map(|p| p.terms.iter().cloned()).collect(),
        }
    }

    /// `||f||^2_{L2([0,1]^d)}` from the Gram matrix of the product terms.
    pub fn l2_norm_sq(&self, rule: &QuadratureRule) -> f64 {
        gram_norm_sq(&self.terms, rule, |g, x| g.value(x), |_| false)
    }

    /// `||partial^omega f||^2_{L2}`.
    pub fn mixed_norm_sq(&self, omega: &SupportSet, rule: &QuadratureRule) -> f64 {
        let terms: Vec<ProductTerm> = self
            .terms
            .iter()
            .filter(|t| omega.iter().all(|k| t.factors.contains_key(&k) && !t.factors[&k].is_constant()))
            .cloned()
            .collect();
        gram_norm_sq(&terms, rule, |g, x| g.value(x), |k| omega.contains(k))
    }

    /// `int f` over the cube.
    pub fn mean(&self, rule: &QuadratureRule) -> f64 {
        self.terms
            .iter()
            .map(|t| t.factors.values().fold(t.coef, |acc, g| acc * g.mean(rule).value))
            .sum()
    }
}

/// `|| sum_r c_r prod_k h_{r,k} ||^2`, with `h = g'` on coordinates flagged by `deriv`.
fn gram_norm_sq(
    terms: &[ProductTerm],
    rule: &QuadratureRule,
    value: impl Fn(&UnivariateFactor, f64) -> f64,
    deriv: impl Fn(u32) -> bool,
) -> f64 {
    let eval = |g: Option<&UnivariateFactor>, k: u32, x: f64| match g {
        None => {
            if deriv(k) {
                0.0
            } else {
                1.0
            }
        }
        Some(g) if deriv(k) => g.derivative(x),
        Some(g) => value(g, x),
    };
    let mut acc = 0.0;
    for (r, tr) in terms.iter().enumerate() {
        for (s, ts) in terms.iter().enumerate().skip(r) {
            let mut prod = tr.coef * ts.coef;
            let coords: std::collections::BTreeSet<u32> = tr.factors.keys().chain(ts.factors.keys()).copied().collect();
            for k in coords {
                let (a, b) = (tr.factors.get(&k), ts.factors.get(&k));
                prod *= rule.integrate(|x| eval(a, k, x) * eval(b, k, x));
                if prod == 0.0 {
                    break;
                }
            }
            acc += if r == s { prod } else { 2.0 * prod };
        }
    }
    acc.max(0.0)
}

/// One term `f_omega` (or `f'_omega`) of a decomposition.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecompositionTerm {
    pub omega: SupportSet,
    /// Depends only on the coordinates in `omega`.
    pub func: SeparableFunction,
    /// `||partial^omega f_omega||^2_{L2}`.
    pub mixed_norm_sq: f64,
    /// Estimated error inherited from quadrature means of non-polynomial factors.
    pub mean_err: f64,
}

impl DecompositionTerm {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.func.eval(x)
    }
}

fn project(
    f: &SeparableFunction,
    omega: &SupportSet,
    rule: &QuadratureRule,
    outside: impl Fn(&UnivariateFactor) -> Mean,
) -> DecompositionTerm {
    let mut terms = Vec::new();
    let mut mean_err = 0.0;
    'terms: for t in f.terms() {
        let mut coef = t.coef;
        let mut errs = Vec::new();
        let mut factors = BTreeMap::new();
        for k in omega.iter() {
            match t.factors.get(&k) {
                // g = 1 is removed by Id - P
                None => continue 'terms,
                Some(g) if g.is_constant() => continue 'terms,
                Some(g) => {
                    let m = outside(g);
                    factors.insert(k, g.shifted(m.value));
                }
            }
        }
        for (&k, g) in &t.factors {
            if !omega.contains(k) {
                let m = outside(g);
                coef *= m.value;
                errs.push((m.value, m.err));
            }
        }
        if errs.iter().any(|e| e.1 > 0.0) {
            let scale: f64 = errs.iter().map(|e| e.0.abs()).product();
            mean_err += t.coef.abs()
                * errs
                    .iter()
                    .map(|&(v, e)| if v != 0.0 { e * scale / v.abs() } else { e })
                    .sum::<f64>();
        }
        if coef != 0.0 {
            terms.push(ProductTerm { coef, factors });
        }
    }
    let func = SeparableFunction { dim: f.dim(), terms };
    let mixed_norm_sq = if omega.is_empty() {
        let c: f64 = func.terms.iter().map(|t| t.coef).sum();
        c * c
    } else {
        func.mixed_norm_sq(omega, rule)
    };
    DecompositionTerm {
        omega: omega.clone(),
        func,
        mixed_norm_sq,
        mean_err,
    }
}

/// `f_omega = (Id - P)_omega P_{omega^c} f` with `P g = int g`.
pub fn anova_term(f: &SeparableFunction, omega: &SupportSet, rule: &QuadratureRule) -> DecompositionTerm {
    project(f, omega, rule, |g| g.mean(rule))
}

/// `f'_omega = (Id - P')_omega P'_{omega^c} f` with `P' g = g(x*)`.
pub fn anchored_term(f: &SeparableFunction, omega: &SupportSet, anchor: Anchor, rule: &QuadratureRule) -> DecompositionTerm {
    project(f, omega, rule, |g| Mean {
        value: g.value(anchor.0),
        err: 0.0,
    })
}

/// All `2^d` terms in canonical order of `omega`.
pub fn decompose(f: &SeparableFunction, mode: Mode, anchor: Anchor, rule: &QuadratureRule) -> Vec<DecompositionTerm> {
    all_subsets(f.dim())
        .par_iter()
        .map(|omega| match mode {
            Mode::Anova => anova_term(f, omega, rule),
            Mode::Anchored => anchored_term(f, omega, anchor, rule),
        })
        .collect()
}

/// `sum_omega f_omega(x)`.
pub fn reconstruct(terms: &[DecompositionTerm], x: &[f64]) -> f64 {
    terms.iter().map(|t| t.eval(x)).sum()
}

/// One row of a weighted-norm table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormContribution {
    pub omega: SupportSet,
    pub term_norm: f64,
    /// `gamma_omega^{-1} ||f_omega^{(omega)}||^2`.
    pub weighted: f64,
}

/// Per-`omega` contributions to the weighted norm; errors on a nonzero term with `gamma_omega = 0`.
pub fn weighted_contributions(terms: &[DecompositionTerm], gamma: &GammaModel) -> Result<Vec<NormContribution>> {
    terms
        .iter()
        .map(|t| {
            let g = gamma.value(&t.omega);
            let sq = if t.mixed_norm_sq <= ZERO_NORM_SQ { 0.0 } else { t.mixed_norm_sq };
            let weighted = if sq == 0.0 {
                0.0
            } else if g > 0.0 {
                sq / g
            } else {
                return Err(DecompError::NormInfinite(t.omega.clone()));
            };
            Ok(NormContribution {
                omega: t.omega.clone(),
                term_norm: sq.sqrt(),
                weighted,
            })
        })
        .collect()
}

/// `||f||_{gamma,mode} = (sum_omega gamma_omega^{-1} ||f_omega^{(omega)}||^2)^{1/2}`.
pub fn weighted_norm(
    f: &SeparableFunction,
    gamma: &GammaModel,
    mode: Mode,
    anchor: Anchor,
    rule: &QuadratureRule,
) -> Result<f64> {
    let terms = decompose(f, mode, anchor, rule);
    let rows = weighted_contributions(&terms, gamma)?;
    Ok(rows.iter().map(|r| r.weighted).sum::<f64>().sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::gauss_legendre;
    use crate::series::Sequence;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn rule() -> QuadratureRule {
        gauss_legendre(32).unwrap()
    }

    fn set(c: &[u32]) -> SupportSet {
        SupportSet::new(c.iter().copied()).unwrap()
    }

    fn x1(dim: u32) -> SeparableFunction {
        SeparableFunction::new(dim, vec![ProductTerm::new(1.0, [(1, UnivariateFactor::monomial(1))])]).unwrap()
    }

    fn a(x: f64) -> Anchor {
        Anchor::new(x).unwrap()
    }

    #[test]
    fn kernel_examples() {
        assert_eq!(kappa_an(1.0, 0.5, a(0.0)), 1.0);
        for t in [0.0, 0.2, 0.7, 1.0] {
            assert_eq!(kappa_an(0.3, t, a(0.3)), 0.0);
        }
        assert_eq!(kappa_an(0.25, 0.4, a(0.5)), -1.0);
        assert_eq!(kappa_a(1.0, 0.3), 0.3);
        assert_abs_diff_eq!(kappa_a(0.0, 0.3), -0.7, epsilon = 1e-15);
        let r = rule();
        assert_abs_diff_eq!(r.integrate_split(&[0.5], |t| kappa_a(0.5, t)), 0.0, epsilon = 1e-15);
        assert_eq!(k_an(0.25, a(0.0)), 0.75);
        assert_eq!(k_an(0.25, a(1.0)), -0.25);
        let norm = r.integrate_split(&[0.5], |t| k_an(t, a(0.5)).powi(2));
        assert_abs_diff_eq!(norm, 1.0 / 12.0, epsilon = 1e-15);
    }

    #[test]
    fn constants() {
        assert_abs_diff_eq!(q_const(a(0.0)), 1.0 / 3.0, epsilon = 1e-16);
        assert_abs_diff_eq!(q_hat(a(0.0)), 0.5, epsilon = 1e-16);
        assert_abs_diff_eq!(q_const(a(0.5)), 1.0 / 12.0, epsilon = 1e-16);
        assert_abs_diff_eq!(q_hat(a(0.5)), 0.125, epsilon = 1e-16);
        let r = rule();
        for x in [0.0, 0.25, 0.3, 0.5, 0.9, 1.0] {
            let q = r.integrate_split(&[x], |t| k_an(t, a(x)).powi(2));
            assert_abs_diff_eq!(q, q_const(a(x)), epsilon = 1e-12);
        }
        assert!(Anchor::new(1.5).is_err());
    }

    #[test]
    fn anova_examples() {
        let r = rule();
        let f = x1(2);
        let t1 = anova_term(&f, &set(&[1]), &r);
        for x in [0.0, 0.3, 1.0] {
            assert_abs_diff_eq!(t1.eval(&[x, 0.9]), x - 0.5, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(anova_term(&f, &set(&[]), &r).eval(&[0.2, 0.2]), 0.5, epsilon = 1e-15);
        assert!(anova_term(&f, &set(&[2]), &r).func.terms().is_empty());
        assert!(anova_term(&f, &set(&[1, 2]), &r).func.terms().is_empty());

        let c = SeparableFunction::constant(3, 2.5);
        for t in decompose(&c, Mode::Anova, Anchor::default(), &r) {
            let v = t.eval(&[0.1, 0.2, 0.3]);
            assert_eq!(v, if t.omega.is_empty() { 2.5 } else { 0.0 });
        }

        // product function: factorization oracle
        let g = [UnivariateFactor::polynomial(vec![1.0, 2.0, -1.0]), UnivariateFactor::sin(3.0, 0.2)];
        let f = SeparableFunction::new(2, vec![ProductTerm::new(1.5, [(1, g[0].clone()), (2, g[1].clone())])]).unwrap();
        let means = [g[0].mean(&r).value, g[1].mean(&r).value];
        for omega in all_subsets(2) {
            let term = anova_term(&f, &omega, &r);
            let x = [0.37, 0.81];
            let want = 1.5
                * (1..=2u32)
                    .map(|k| {
                        let i = k as usize - 1;
                        if omega.contains(k) {
                            g[i].value(x[i]) - means[i]
                        } else {
                            means[i]
                        }
                    })
                    .product::<f64>();
            assert_abs_diff_eq!(term.eval(&x), want, epsilon = 1e-14);
        }
    }

    #[test]
    fn anchored_examples() {
        let r = rule();
        let f = x1(2);
        let terms = decompose(&f, Mode::Anchored, a(0.0), &r);
        assert_eq!(terms[0].eval(&[0.4, 0.4]), 0.0);
        assert_abs_diff_eq!(terms[1].eval(&[0.4, 0.9]), 0.4, epsilon = 1e-15);
        assert!(terms[2..].iter().all(|t| t.func.terms().is_empty()));

        let sq = SeparableFunction::new(1, vec![ProductTerm::new(1.0, [(1, UnivariateFactor::monomial(2))])]).unwrap();
        let t0 = anchored_term(&sq, &set(&[]), a(0.5), &r);
        let t1 = anchored_term(&sq, &set(&[1]), a(0.5), &r);
        assert_abs_diff_eq!(t0.eval(&[0.9]), 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(t1.eval(&[0.9]), 0.81 - 0.25, epsilon = 1e-15);

        let c = SeparableFunction::constant(2, -3.0);
        let terms = decompose(&c, Mode::Anchored, a(0.2), &r);
        assert_eq!(terms[0].eval(&[0.0, 0.0]), -3.0);
        assert!(terms[1..].iter().all(|t| t.func.terms().is_empty()));
    }

    #[test]
    fn norm_examples() {
        let r = rule();
        let any = GammaModel::Product(Sequence::constant(0.3).unwrap());
        let c = SeparableFunction::constant(2, -2.0);
        assert_abs_diff_eq!(weighted_norm(&c, &any, Mode::Anova, a(0.5), &r).unwrap(), 2.0, epsilon = 1e-15);
        let gamma = GammaModel::Product(Sequence::ones());
        let f = x1(1);
        let n = weighted_norm(&f, &gamma, Mode::Anova, a(0.5), &r).unwrap();
        assert_abs_diff_eq!(n * n, 1.25, epsilon = 1e-14);
        let n = weighted_norm(&f, &gamma, Mode::Anchored, a(0.0), &r).unwrap();
        assert_abs_diff_eq!(n * n, 1.0, epsilon = 1e-14);
        let none = GammaModel::table([]).unwrap();
        assert_eq!(
            weighted_norm(&f, &none, Mode::Anova, a(0.5), &r),
            Err(DecompError::NormInfinite(set(&[1])))
        );
    }

    #[test]
    fn reconstruct_examples() {
        let r = rule();
        let f = SeparableFunction::new(
            2,
            vec![ProductTerm::new(1.0, [(1, UnivariateFactor::monomial(1)), (2, UnivariateFactor::monomial(1))])],
        )
        .unwrap();
        let terms = decompose(&f, Mode::Anova, a(0.5), &r);
        assert_abs_diff_eq!(reconstruct(&terms, &[0.3, 0.7]), 0.21, epsilon = 1e-12);
        let single = vec![anova_term(&SeparableFunction::constant(1, 4.0), &set(&[]), &r)];
        assert_eq!(reconstruct(&single, &[0.6]), 4.0);
        let terms = decompose(&f, Mode::Anchored, a(0.3), &r);
        assert_abs_diff_eq!(terms[0].eval(&[0.9, 0.1]), f.eval(&[0.3, 0.3]), epsilon = 1e-15);
        assert_abs_diff_eq!(reconstruct(&terms, &[0.3, 0.3]), f.eval(&[0.3, 0.3]), epsilon = 1e-15);
    }

    #[test]
    fn representation_identities() {
        let r = rule();
        for deg in 0..=5u32 {
            let g = UnivariateFactor::monomial(deg);
            for xs in [0.0, 0.5] {
                for x in [0.0, 0.13, 0.5, 0.77, 1.0] {
                    let an = g.value(xs) + r.integrate_split(&[x, xs], |t| g.derivative(t) * kappa_an(x, t, a(xs)));
                    assert_abs_diff_eq!(an, g.value(x), epsilon = 1e-12);
                }
            }
            for x in [0.0, 0.13, 0.5, 0.77, 1.0] {
                let av = g.mean(&r).value + r.integrate_split(&[x], |t| g.derivative(t) * kappa_a(x, t));
                assert_abs_diff_eq!(av, g.value(x), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn json_shape() {
        let text = r#"{"dim": 2, "terms": [
            {"coef": 2.0, "factors": {"1": {"kind": "monomial", "power": 2}, "2": {"kind": "sin", "freq": 3.0}}},
            {"coef": -1.0}
        ]}"#;
        let f: SeparableFunction = serde_json::from_str(text).unwrap();
        assert_abs_diff_eq!(f.eval(&[0.5, 0.1]), 2.0 * 0.25 * 0.3f64.sin() - 1.0, epsilon = 1e-15);
        let back: SeparableFunction = serde_json::from_str(&serde_json::to_string(&f).unwrap()).unwrap();
        assert_eq!(back, f);
        assert!(serde_json::from_str::<SeparableFunction>(r#"{"dim": 1, "terms": [], "extra": 1}"#).is_err());
        assert!(serde_json::from_str::<SeparableFunction>(r#"{"dim": 1, "terms": [{"coef": 1, "factors": {"2": {"kind": "exp", "rate": 1}}}]}"#).is_err());
        assert!(serde_json::from_str::<SeparableFunction>(r#"{"dim": 1, "terms": [{"coef": 1, "factors": {"1": {"kind": "exp", "rate": 1, "bogus": 2}}}]}"#).is_err());
    }

    #[test]
    fn nonpolynomial_means_are_tagged() {
        let r = rule();
        let m = UnivariateFactor::exp(1.0).mean(&r);
        assert_abs_diff_eq!(m.value, std::f64::consts::E - 1.0, epsilon = 1e-14);
        assert!(m.err < 1e-12);
        assert_eq!(UnivariateFactor::polynomial(vec![1.0, 1.0]).mean(&r).err, 0.0);
    }

    fn arb_factor() -> impl Strategy<Value = UnivariateFactor> {
        prop_oneof![
            (0u32..5).prop_map(UnivariateFactor::monomial),
            proptest::collection::vec(-2.0f64..2.0, 1..5).prop_map(UnivariateFactor::polynomial),
            (-4.0f64..4.0, -1.0f64..1.0).prop_map(|(f, p)| UnivariateFactor::sin(f, p)),
            (-4.0f64..4.0, -1.0f64..1.0).prop_map(|(f, p)| UnivariateFactor::cos(f, p)),
            (-2.0f64..2.0).prop_map(UnivariateFactor::exp),
        ]
    }

    fn arb_function() -> impl Strategy<Value = SeparableFunction> {
        (1u32..=3).prop_flat_map(|d| {
            proptest::collection::vec(
                (-2.0f64..2.0, proptest::collection::btree_map(1..=d, arb_factor(), 0..=d as usize)),
                1..4,
            )
            .prop_map(move |terms| {
                SeparableFunction::new(d, terms.into_iter().map(|(c, f)| ProductTerm { coef: c, factors: f }).collect()).unwrap()
            })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn reconstruction_and_structure(f in arb_function(), xs in 0.0f64..1.0, pts in proptest::collection::vec(0.0f64..1.0, 3)) {
            let r = rule();
            let anchor = a(xs);
            let anova = decompose(&f, Mode::Anova, anchor, &r);
            let anch = decompose(&f, Mode::Anchored, anchor, &r);
            let x = &pts[..f.dim() as usize];
            prop_assert!((reconstruct(&anova, x) - f.eval(x)).abs() <= 1e-10);
            prop_assert!((reconstruct(&anch, x) - f.eval(x)).abs() <= 1e-10);
            for t in &anch {
                for k in t.omega.iter() {
                    let mut y = x.to_vec();
                    y[k as usize - 1] = xs;
                    prop_assert_eq!(t.eval(&y), 0.0);
                }
            }
            // zero means in each active coordinate
            for t in anova.iter().filter(|t| !t.omega.is_empty()) {
                for k in t.omega.iter() {
                    let m = r.integrate(|s| {
                        let mut y = x.to_vec();
                        y[k as usize - 1] = s;
                        t.eval(&y)
                    });
                    prop_assert!(m.abs() <= 1e-10, "omega={} k={} mean={}", t.omega, k, m);
                }
            }
            // orthogonality of distinct ANOVA terms
            for (i, s) in anova.iter().enumerate() {
                for t in &anova[i + 1..] {
                    let ip = (SeparableFunction::sum(f.dim(), [&s.func, &t.func]).l2_norm_sq(&r)
                        - s.func.l2_norm_sq(&r)
                        - t.func.l2_norm_sq(&r))
                        / 2.0;
                    prop_assert!(ip.abs() <= 1e-10, "<f_{}, f_{}> = {}", s.omega, t.omega, ip);
                }
            }
        }
    }
}
