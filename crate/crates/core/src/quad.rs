//! Gauss-Legendre rules on `[0, 1]` and piecewise / tensorized integration.

use serde::Serialize;
use thiserror::Error;

pub const MAX_ORDER: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadError {
    #[error("quadrature order {0} outside 1..=64")]
    OrderOutOfRange(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// `sum_i w_i g(x_i)` on `[0, 1]`.
    pub fn integrate(&self, g: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * g(x)).sum()
    }

    /// Integral over `[lo, hi]` by the affine map of the rule.
    pub fn integrate_on(&self, lo: f64, hi: f64, g: impl Fn(f64) -> f64) -> f64 {
        let h = hi - lo;
        if h == 0.0 {
            return 0.0;
        }
        h * self.integrate(|t| g(lo + h * t))
    }

    /// Integral over `[0, 1]` split at the given breakpoints, one rule per piece.
    pub fn integrate_split(&self, breaks: &[f64], g: impl Fn(f64) -> f64) -> f64 {
        let mut pts: Vec<f64> = breaks.iter().copied().filter(|b| *b > 0.0 && *b < 1.0).collect();
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        let mut lo = 0.0;
        let mut acc = 0.0;
        for b in pts.into_iter().chain(std::iter::once(1.0)) {
            acc += self.integrate_on(lo, b, &g);
            lo = b;
        }
        acc
    }

    /// Integral over `[0, 1]^2` of `g(x, t)`, split at `breaks(x)` in `t` and at `outer` in `x`.
    pub fn integrate_2d_split(
        &self,
        outer: &[f64],
        inner_breaks: impl Fn(f64) -> Vec<f64>,
        g: impl Fn(f64, f64) -> f64,
    ) -> f64 {
        self.integrate_split(outer, |x| self.integrate_split(&inner_breaks(x), |t| g(x, t)))
    }
}

/// `n`-point Gauss-Legendre rule mapped to `[0, 1]`.
pub fn gauss_legendre(n: usize) -> Result<QuadratureRule, QuadError> {
    if !(1..=MAX_ORDER).contains(&n) {
        return Err(QuadError::OrderOutOfRange(n));
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-15 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // x is the i-th largest root; store ascending on [0, 1]
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        nodes[i] = 0.5 * (1.0 - x);
        weights[n - 1 - i] = 0.5 * w;
        weights[i] = 0.5 * w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.5;
    }
    Ok(QuadratureRule { nodes, weights })
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// `sum_i w_i g(x_i)`.
pub fn integrate_1d(g: impl Fn(f64) -> f64, rule: &QuadratureRule) -> f64 {
    rule.integrate(g)
}

/// Tensor rule on `[0, 1]^d`: integral of `g` over the cube (`n^d` evaluations).
pub fn integrate_tensor(g: impl Fn(&[f64]) -> f64, rule: &QuadratureRule, d: usize) -> f64 {
    let n = rule.order();
    let mut idx = vec![0usize; d];
    let mut x = vec![0.0; d];
    let mut acc = 0.0;
    loop {
        let mut w = 1.0;
        for k in 0..d {
            x[k] = rule.nodes[idx[k]];
            w *= rule.weights[idx[k]];
        }
        acc += w * g(&x);
        let mut pos = 0;
        loop {
            if pos == d {
                return acc;
            }
            idx[pos] += 1;
            if idx[pos] < n {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn small_rules() {
        let r1 = gauss_legendre(1).unwrap();
        assert_eq!(r1.nodes, vec![0.5]);
        assert_abs_diff_eq!(r1.weights[0], 1.0, epsilon = 1e-15);
        let r2 = gauss_legendre(2).unwrap();
        let h = 0.5 / 3f64.sqrt();
        assert_abs_diff_eq!(r2.nodes[0], 0.5 - h, epsilon = 1e-15);
        assert_abs_diff_eq!(r2.nodes[1], 0.5 + h, epsilon = 1e-15);
        assert_abs_diff_eq!(r2.weights[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(integrate_1d(|x| x.powi(3), &r2), 0.25, epsilon = 1e-15);
        assert_eq!(gauss_legendre(0), Err(QuadError::OrderOutOfRange(0)));
        assert_eq!(gauss_legendre(65), Err(QuadError::OrderOutOfRange(65)));
    }

    #[test]
    fn integrate_examples() {
        let r = gauss_legendre(8).unwrap();
        assert_abs_diff_eq!(integrate_1d(|_| 1.0, &r), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(integrate_1d(|x| x, &r), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn exact_to_degree_2n_minus_1() {
        for n in 1..=MAX_ORDER {
            let r = gauss_legendre(n).unwrap();
            let total: f64 = r.weights.iter().sum();
            assert!((total - 1.0).abs() <= 1e-14, "n={n} sum={total}");
            assert!(r.weights.iter().all(|&w| w > 0.0));
            assert!(r.nodes.windows(2).all(|p| p[0] < p[1]));
            assert!(r.nodes[0] > 0.0 && r.nodes[n - 1] < 1.0);
            for deg in 0..2 * n {
                let got = r.integrate(|x| x.powi(deg as i32));
                let want = 1.0 / (deg as f64 + 1.0);
                assert!((got - want).abs() <= 1e-12, "n={n} deg={deg} got={got}");
            }
        }
    }

    #[test]
    fn piecewise_and_tensor() {
        let r = gauss_legendre(4).unwrap();
        // |x - 0.3| is exact once split at 0.3
        let got = r.integrate_split(&[0.3], |x| (x - 0.3).abs());
        assert_abs_diff_eq!(got, 0.5 * (0.09 + 0.49), epsilon = 1e-15);
        let got = integrate_tensor(|x| x[0] * x[1] * x[1], &r, 2);
        assert_abs_diff_eq!(got, 1.0 / 6.0, epsilon = 1e-15);
        // kappa_A(x,t) = t (t < x) or t - 1; its square integrates to 1/6
        let k2 = r.integrate_2d_split(&[], |x| vec![x], |x, t| {
            let k = if t < x { t } else { t - 1.0 };
            k * k
        });
        assert_abs_diff_eq!(k2, 1.0 / 6.0, epsilon = 1e-12);
    }
}
