//! Regularized least squares in a reproducing kernel Hilbert space: scalar targets and
//! finitely many outputs of a map, solved through the representer theorem.

use std::fmt;
use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decomp::Anchor;
use crate::index::SupportSet;
use crate::series::Sequence;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegressError {
    #[error("kernel is not symmetric: |G - G^T| = {0:e}")]
    KernelAsymmetric(f64),
    #[error("Cholesky factorization failed even with jitter {0:e}")]
    SolveFailed(f64),
    #[error("invalid samples: {0}")]
    InvalidSamples(String),
    #[error("regularization parameter must be positive and finite, got {0}")]
    InvalidLambda(f64),
}

pub type Result<T> = std::result::Result<T, RegressError>;

const SYMMETRY_TOL: f64 = 1e-10;

/// One-dimensional kernel used as a tensor factor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum UnivariateKernel {
    /// `min(|x - a|, |y - a|)` on the same side of the anchor `a`, else 0.
    AnchoredH1 { anchor: Anchor },
    /// `min(x, y)`.
    Brownian,
    /// `exp(-(x - y)^2 / (2 l^2))`.
    Gaussian { length: f64 },
}

impl UnivariateKernel {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            UnivariateKernel::AnchoredH1 { anchor } => anchored_eta(x, y, anchor.x_star()),
            UnivariateKernel::Brownian => x.min(y),
            UnivariateKernel::Gaussian { length } => (-(x - y).powi(2) / (2.0 * length * length)).exp(),
        }
    }
}

fn anchored_eta(x: f64, y: f64, a: f64) -> f64 {
    let (u, v) = (x - a, y - a);
    if u * v > 0.0 {
        u.abs().min(v.abs())
    } else {
        0.0
    }
}

pub type KernelFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum KernelSpec {
    /// `prod_k (1 + gamma_k eta_a(x_k, y_k))`: the reproducing kernel of the tensor product of
    /// `H^1` with norm `g(a)^2 + gamma_k^{-1} ||g'||^2`.
    AnchoredH1 { anchor: Anchor, gamma: Sequence },
    /// `sum_omega b_omega prod_{k in omega} k_1(x_k, y_k)` over a finite list of support sets.
    TensorProduct {
        factor: UnivariateKernel,
        weights: Vec<(SupportSet, f64)>,
    },
    Custom { name: String, eval: KernelFn },
}

impl fmt::Debug for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelSpec::AnchoredH1 { anchor, gamma } => {
                f.debug_struct("AnchoredH1").field("anchor", anchor).field("gamma", gamma).finish()
            }
            KernelSpec::TensorProduct { factor, weights } => f
                .debug_struct("TensorProduct")
                .field("factor", factor)
                .field("weights", weights)
                .finish(),
            KernelSpec::Custom { name, .. } => f.debug_struct("Custom").field("name", name).finish(),
        }
    }
}

impl Default for KernelSpec {
    fn default() -> Self {
        KernelSpec::AnchoredH1 {
            anchor: Anchor::default(),
            gamma: Sequence::ones(),
        }
    }
}

impl KernelSpec {
    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            KernelSpec::AnchoredH1 { anchor, gamma } => x
                .iter()
                .zip(y)
                .enumerate()
                .map(|(i, (&a, &b))| 1.0 + gamma.get(i as u32 + 1) * anchored_eta(a, b, anchor.x_star()))
                .product(),
            KernelSpec::TensorProduct { factor, weights } => weights
                .iter()
                .map(|(omega, w)| w * omega.iter().map(|k| factor.eval(x[k as usize - 1], y[k as usize - 1])).product::<f64>())
                .sum(),
            KernelSpec::Custom { eval, .. } => eval(x, y),
        }
    }

    /// The constant kernel `1`.
    pub fn constant() -> Self {
        KernelSpec::TensorProduct {
            factor: UnivariateKernel::Brownian,
            weights: vec![(SupportSet::empty(), 1.0)],
        }
    }
}

/// Serializable kernel configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelConfig {
    AnchoredH1 {
        #[serde(default)]
        anchor: Option<Anchor>,
        #[serde(default = "Sequence::ones")]
        gamma: Sequence,
    },
    TensorProduct {
        factor: UnivariateKernel,
        weights: Vec<KernelWeight>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelWeight {
    pub omega: SupportSet,
    pub weight: f64,
}

impl KernelConfig {
    /// Builds the kernel, taking the anchor from `default_anchor` when not given.
    pub fn build(&self, default_anchor: Anchor) -> KernelSpec {
        match self {
            KernelConfig::AnchoredH1 { anchor, gamma } => KernelSpec::AnchoredH1 {
                anchor: anchor.unwrap_or(default_anchor),
                gamma: gamma.clone(),
            },
            KernelConfig::TensorProduct { factor, weights } => KernelSpec::TensorProduct {
                factor: factor.clone(),
                weights: weights.iter().map(|w| (w.omega.clone(), w.weight)).collect(),
            },
        }
    }
}

/// Inputs in `[0, 1]^d` with `L >= 1` outputs per sample.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleSet {
    inputs: Vec<Vec<f64>>,
    outputs: DMatrix<f64>,
}

impl SampleSet {
    pub fn new(inputs: Vec<Vec<f64>>, outputs: Vec<Vec<f64>>) -> Result<Self> {
        let n = inputs.len();
        if n == 0 {
            return Err(RegressError::InvalidSamples("need at least one sample".into()));
        }
        if outputs.len() != n {
            return Err(RegressError::InvalidSamples(format!("{n} inputs but {} outputs", outputs.len())));
        }
        let d = inputs[0].len();
        let l = outputs[0].len();
        if l == 0 {
            return Err(RegressError::InvalidSamples("need at least one output".into()));
        }
        for (i, x) in inputs.iter().enumerate() {
            if x.len() != d {
                return Err(RegressError::InvalidSamples(format!("sample {i} has {} coordinates, expected {d}", x.len())));
            }
            if x.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(RegressError::InvalidSamples(format!("sample {i} lies outside [0,1]^{d}")));
            }
        }
        for (i, y) in outputs.iter().enumerate() {
            if y.len() != l || y.iter().any(|v| !v.is_finite()) {
                return Err(RegressError::InvalidSamples(format!("sample {i} has invalid outputs")));
            }
        }
        let outputs = DMatrix::from_fn(n, l, |i, j| outputs[i][j]);
        Ok(SampleSet { inputs, outputs })
    }

    /// Scalar targets.
    pub fn scalar(inputs: Vec<Vec<f64>>, y: Vec<f64>) -> Result<Self> {
        Self::new(inputs, y.into_iter().map(|v| vec![v]).collect())
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.inputs[0].len()
    }

    pub fn outputs_len(&self) -> usize {
        self.outputs.ncols()
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn outputs(&self) -> &DMatrix<f64> {
        &self.outputs
    }
}

#[derive(Clone, Debug)]
pub struct FittedModel {
    /// `n x L`, one column per output.
    pub coefficients: DMatrix<f64>,
    pub kernel: KernelSpec,
    pub lambdas: Vec<f64>,
    pub inputs: Vec<Vec<f64>>,
    /// Diagonal jitter that was needed, zero if none.
    pub jitter: f64,
}

impl FittedModel {
    /// `f_l(x) = sum_i c_{il} kappa(x, x^i)` for every output `l`.
    pub fn predict(&self, x: &[f64]) -> Vec<f64> {
        let k: Vec<f64> = self.inputs.iter().map(|xi| self.kernel.eval(x, xi)).collect();
        (0..self.coefficients.ncols())
            .map(|l| self.coefficients.column(l).iter().zip(&k).map(|(c, k)| c * k).sum())
            .collect()
    }

    pub fn predict_scalar(&self, x: &[f64]) -> f64 {
        self.predict(x)[0]
    }
}

/// `G_ij = kappa(x^i, x^j)`; rejects kernels that are not symmetric on the sample.
pub fn gram_matrix(kernel: &KernelSpec, xs: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = xs.len();
    let rows: Vec<Vec<f64>> = xs.par_iter().map(|xi| xs.iter().map(|xj| kernel.eval(xi, xj)).collect()).collect();
    let g = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    let asym = (0..n)
        .flat_map(|i| (0..i).map(move |j| (i, j)))
        .map(|(i, j)| (g[(i, j)] - g[(j, i)]).abs())
        .fold(0.0, f64::max);
    if asym > SYMMETRY_TOL {
        return Err(RegressError::KernelAsymmetric(asym));
    }
    Ok(g)
}

/// Cholesky of `G + n lambda I`, escalating diagonal jitter from `1e-12 tr(G)/n` to `1e-6 tr(G)/n`.
fn factor(g: &DMatrix<f64>, lambda: f64) -> Result<(Cholesky<f64, Dyn>, f64)> {
    let n = g.nrows();
    let mut a = g.clone();
    for i in 0..n {
        a[(i, i)] += n as f64 * lambda;
    }
    if let Some(ch) = Cholesky::new(a.clone()) {
        return Ok((ch, 0.0));
    }
    let scale = (g.trace() / n as f64).abs().max(f64::MIN_POSITIVE);
    let mut jitter = 1e-12;
    while jitter <= 1e-6 * (1.0 + 1e-9) {
        let mut b = a.clone();
        for i in 0..n {
            b[(i, i)] += jitter * scale;
        }
        if let Some(ch) = Cholesky::new(b) {
            return Ok((ch, jitter * scale));
        }
        jitter *= 10.0;
    }
    Err(RegressError::SolveFailed(jitter / 10.0 * scale))
}

/// Solves `(G + n lambda I) c = y` with one step of iterative refinement.
fn solve_refined(g: &DMatrix<f64>, lambda: f64, ch: &Cholesky<f64, Dyn>, y: &DVector<f64>) -> DVector<f64> {
    let n = g.nrows() as f64;
    let mut c = ch.solve(y);
    for _ in 0..2 {
        let r = y - (g * &c + &c * (n * lambda));
        if r.norm() <= 1e-14 * y.norm() {
            break;
        }
        c += ch.solve(&r);
    }
    c
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda.is_finite() && lambda > 0.0 {
        Ok(())
    } else {
        Err(RegressError::InvalidLambda(lambda))
    }
}

/// Minimizer of `(1/n) sum_i (f(x^i) - y^i)^2 + lambda ||f||^2` for a scalar target (the first output).
pub fn fit(samples: &SampleSet, kernel: &KernelSpec, lambda: f64) -> Result<FittedModel> {
    let first = SampleSet {
        inputs: samples.inputs.clone(),
        outputs: samples.outputs.columns(0, 1).into_owned(),
    };
    fit_map(&first, kernel, &[lambda])
}

/// Independent fits for each output `l` with its own `lambda_l`; one shared factorization
/// when all `lambda_l` are equal.
pub fn fit_map(samples: &SampleSet, kernel: &KernelSpec, lambdas: &[f64]) -> Result<FittedModel> {
    let l = samples.outputs_len();
    if lambdas.len() != l {
        return Err(RegressError::InvalidSamples(format!("{l} outputs but {} lambdas", lambdas.len())));
    }
    for &lam in lambdas {
        check_lambda(lam)?;
    }
    let g = gram_matrix(kernel, &samples.inputs)?;
    let n = samples.len();
    let mut coefficients = DMatrix::zeros(n, l);
    let mut jitter: f64 = 0.0;
    if lambdas.iter().all(|&v| v == lambdas[0]) {
        let (ch, j) = factor(&g, lambdas[0])?;
        jitter = j;
        for col in 0..l {
            let y = samples.outputs.column(col).into_owned();
            coefficients.set_column(col, &solve_refined(&g, lambdas[0], &ch, &y));
        }
    } else {
        let cols: Vec<(DVector<f64>, f64)> = (0..l)
            .into_par_iter()
            .map(|col| {
                let (ch, j) = factor(&g, lambdas[col])?;
                let y = samples.outputs.column(col).into_owned();
                Ok((solve_refined(&g, lambdas[col], &ch, &y), j))
            })
            .collect::<Result<_>>()?;
        for (col, (c, j)) in cols.into_iter().enumerate() {
            coefficients.set_column(col, &c);
            jitter = jitter.max(j);
        }
    }
    Ok(FittedModel {
        coefficients,
        kernel: kernel.clone(),
        lambdas: lambdas.to_vec(),
        inputs: samples.inputs.clone(),
        jitter,
    })
}

/// `(1/n) ||G c - y||^2 + lambda c^T G c` for output column `col`.
pub fn objective(g: &DMatrix<f64>, c: &DVector<f64>, y: &DVector<f64>, lambda: f64) -> f64 {
    let gc = g * c;
    let n = y.len() as f64;
    (&gc - y).norm_squared() / n + lambda * c.dot(&gc)
}

/// `||(G + n lambda I) c - y|| / ||y||` (or the absolute residual when `y = 0`).
pub fn normal_residual(g: &DMatrix<f64>, c: &DVector<f64>, y: &DVector<f64>, lambda: f64) -> f64 {
    let n = y.len() as f64;
    let r = (g * c + c * (n * lambda) - y).norm();
    let ny = y.norm();
    if ny > 0.0 {
        r / ny
    } else {
        r
    }
}

/// Root mean squared error per output over a sample set.
pub fn rmse(model: &FittedModel, samples: &SampleSet) -> Vec<f64> {
    let l = samples.outputs_len();
    let mut acc = vec![0.0; l];
    for (i, x) in samples.inputs.iter().enumerate() {
        let p = model.predict(x);
        for (col, a) in acc.iter_mut().enumerate() {
            *a += (p[col] - samples.outputs[(i, col)]).powi(2);
        }
    }
    acc.into_iter().map(|a| (a / samples.len() as f64).sqrt()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_instance(seed: u64, n: usize, d: usize) -> SampleSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xs: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.gen::<f64>()).collect()).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x.iter().map(|v| (3.0 * v).sin()).sum::<f64>() + 0.1 * rng.gen::<f64>()).collect();
        SampleSet::scalar(xs, ys).unwrap()
    }

    #[test]
    fn gram_examples() {
        let k = KernelSpec::default();
        let g = gram_matrix(&k, &[vec![0.3, 0.8]]).unwrap();
        assert_eq!(g.shape(), (1, 1));
        assert_eq!(g[(0, 0)], k.eval(&[0.3, 0.8], &[0.3, 0.8]));
        let xs = vec![vec![0.1], vec![0.5], vec![0.9]];
        let ones = gram_matrix(&KernelSpec::constant(), &xs).unwrap();
        assert!(ones.iter().all(|&v| v == 1.0));
        // coincident points: PSD but singular
        let same = vec![vec![0.7, 0.2]; 4];
        let g = gram_matrix(&k, &same).unwrap();
        assert!(Cholesky::new(g.clone() + DMatrix::identity(4, 4) * 1e-12).is_some());
        let bad = KernelSpec::Custom {
            name: "skew".into(),
            eval: Arc::new(|x, y| x[0] - 2.0 * y[0]),
        };
        assert!(matches!(gram_matrix(&bad, &xs), Err(RegressError::KernelAsymmetric(_))));
    }

    #[test]
    fn anchored_kernel_values() {
        let k = UnivariateKernel::AnchoredH1 { anchor: Anchor::new(0.3).unwrap() };
        assert_eq!(k.eval(0.1, 0.9), 0.0);
        assert_abs_diff_eq!(k.eval(0.8, 0.6), 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(k.eval(0.0, 0.2), 0.1, epsilon = 1e-15);
        // tensor form with gamma = 1 in one dimension
        let spec = KernelSpec::AnchoredH1 { anchor: Anchor::new(0.3).unwrap(), gamma: Sequence::ones() };
        assert_abs_diff_eq!(spec.eval(&[0.8], &[0.6]), 1.3, epsilon = 1e-15);
        // <1 + eta(., y), g> = g(a) + int eta_x(x, y) g'(x) dx = g(y)
        let rule = crate::quad::gauss_legendre(8).unwrap();
        let a = 0.3;
        for y in [0.05, 0.3, 0.55, 1.0] {
            let slope = |x: f64| {
                let h = 1e-7;
                (anchored_eta(x + h, y, a) - anchored_eta(x - h, y, a)) / (2.0 * h)
            };
            let ip = a * a + rule.integrate_split(&[a, y], |x| slope(x) * 2.0 * x);
            assert_abs_diff_eq!(ip, y * y, epsilon = 1e-8);
        }
    }

    #[test]
    fn fit_examples() {
        let s = SampleSet::scalar(vec![vec![0.5]], vec![1.0]).unwrap();
        let m = fit(&s, &KernelSpec::constant(), 1.0).unwrap();
        assert_abs_diff_eq!(m.coefficients[(0, 0)], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(m.predict_scalar(&[0.5]), 0.5, epsilon = 1e-15);

        let s = random_instance(1, 12, 2);
        let norms: Vec<f64> = [1.0, 10.0, 100.0]
            .iter()
            .map(|&lam| fit(&s, &KernelSpec::default(), lam).unwrap().coefficients.norm())
            .collect();
        assert!(norms[0] > norms[1] && norms[1] > norms[2]);

        let zero = SampleSet::scalar(vec![vec![0.2], vec![0.6]], vec![0.0, 0.0]).unwrap();
        let m = fit(&zero, &KernelSpec::default(), 0.1).unwrap();
        assert!(m.coefficients.iter().all(|&c| c == 0.0));
        assert_eq!(m.predict_scalar(&[0.9]), 0.0);
        assert_eq!(fit(&zero, &KernelSpec::default(), 0.0).unwrap_err(), RegressError::InvalidLambda(0.0));
    }

    #[test]
    fn interpolation_limit() {
        let xs = vec![vec![0.1], vec![0.45], vec![0.8]];
        let ys = vec![1.0, -2.0, 0.5];
        let s = SampleSet::scalar(xs.clone(), ys.clone()).unwrap();
        let mut prev = f64::INFINITY;
        for lam in [1e-2, 1e-4, 1e-6, 1e-8] {
            let m = fit(&s, &KernelSpec::default(), lam).unwrap();
            let err: f64 = xs.iter().zip(&ys).map(|(x, y)| (m.predict_scalar(x) - y).abs()).fold(0.0, f64::max);
            assert!(err < prev);
            prev = err;
        }
        assert!(prev < 1e-6);
    }

    #[test]
    fn map_examples() {
        let s = random_instance(7, 15, 3);
        let single = fit(&s, &KernelSpec::default(), 0.05).unwrap();
        let as_map = fit_map(&s, &KernelSpec::default(), &[0.05]).unwrap();
        assert_eq!(single.coefficients, as_map.coefficients);

        let scales = [1.0, -2.0, 0.25];
        let y0 = s.outputs().column(0).into_owned();
        let outs: Vec<Vec<f64>> = (0..s.len()).map(|i| scales.iter().map(|a| a * y0[i]).collect()).collect();
        let multi = SampleSet::new(s.inputs().to_vec(), outs).unwrap();
        let m = fit_map(&multi, &KernelSpec::default(), &[0.05; 3]).unwrap();
        for (l, a) in scales.iter().enumerate() {
            for i in 0..s.len() {
                assert_abs_diff_eq!(m.coefficients[(i, l)], a * single.coefficients[(i, 0)], epsilon = 1e-12);
            }
        }
        // separate factorizations agree with the shared one
        for l in 0..3 {
            let col = SampleSet::new(s.inputs().to_vec(), (0..s.len()).map(|i| vec![multi.outputs()[(i, l)]]).collect()).unwrap();
            let one = fit(&col, &KernelSpec::default(), 0.05).unwrap();
            assert!((one.coefficients.column(0) - m.coefficients.column(l)).amax() <= 1e-12);
        }

        let zeros = SampleSet::new(s.inputs().to_vec(), vec![vec![0.0; 2]; s.len()]).unwrap();
        let z = fit_map(&zeros, &KernelSpec::default(), &[0.1, 0.2]).unwrap();
        assert!(z.coefficients.iter().all(|&c| c == 0.0));
    }

    #[test]
    fn rejects_bad_samples() {
        assert!(SampleSet::scalar(vec![], vec![]).is_err());
        assert!(SampleSet::scalar(vec![vec![1.5]], vec![0.0]).is_err());
        assert!(SampleSet::scalar(vec![vec![0.5]], vec![f64::NAN]).is_err());
        assert!(SampleSet::new(vec![vec![0.5], vec![0.1, 0.2]], vec![vec![1.0], vec![1.0]]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(20))]

        #[test]
        fn optimality_and_residual(seed in any::<u64>(), n in 1usize..40, d in 1usize..5, lam in 1e-4f64..1.0) {
            let s = random_instance(seed, n, d);
            let k = KernelSpec::default();
            let m = fit(&s, &k, lam).unwrap();
            let g = gram_matrix(&k, s.inputs()).unwrap();
            let c = m.coefficients.column(0).into_owned();
            let y = s.outputs().column(0).into_owned();
            prop_assert!(normal_residual(&g, &c, &y, lam) <= 1e-10);
            let base = objective(&g, &c, &y, lam);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
            for _ in 0..5 {
                let mut delta = DVector::from_fn(n, |_, _| rng.gen::<f64>() - 0.5);
                delta *= 1e-3 / delta.norm();
                prop_assert!(objective(&g, &(&c + &delta), &y, lam) >= base - 1e-15 * base.abs());
            }
        }
    }
}
