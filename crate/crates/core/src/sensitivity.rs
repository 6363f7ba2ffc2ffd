//! Weighted Sobol indices of ANOVA and anchored decompositions, m-variate truncation
//! and its a-priori L2 error bounds.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::decomp::{decompose, q_hat, weighted_contributions, Anchor, DecompError, DecompositionTerm, Mode, SeparableFunction};
use crate::index::SupportSet;
use crate::quad::QuadratureRule;
use crate::series::{esf, esf_tail};
use crate::weights::GammaModel;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SensitivityError {
    #[error("weighted norm of the non-constant part is zero; Sobol indices are undefined")]
    DegenerateDenominator,
    #[error("sum_omega qhat^|omega| gamma_omega diverges for qhat = {qhat}")]
    GammaL1Violated { qhat: f64 },
    #[error(transparent)]
    Decomp(#[from] DecompError),
}

pub type Result<T> = std::result::Result<T, SensitivityError>;

/// The per-coordinate constant of the truncation bound: `qhat(x*)` for anchored, `1/6` for ANOVA.
pub fn truncation_constant(mode: Mode, anchor: Anchor) -> f64 {
    match mode {
        Mode::Anchored => q_hat(anchor),
        Mode::Anova => 1.0 / 6.0,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SobolTable {
    pub mode: Mode,
    /// Whether `omega = {}` enters numerator and denominator.
    pub include_empty: bool,
    pub per_omega: BTreeMap<SupportSet, f64>,
    /// `S_{omega0,tot} = sum_{omega >= omega0} S_omega` for every `omega0` over the active coordinates.
    pub total: BTreeMap<SupportSet, f64>,
    pub denominator: f64,
}

impl SobolTable {
    fn from_terms(terms: &[DecompositionTerm], gamma: &GammaModel, mode: Mode, include_empty: bool) -> Result<Self> {
        let rows = weighted_contributions(terms, gamma)?;
        let used: Vec<_> = rows.iter().filter(|r| include_empty || !r.omega.is_empty()).collect();
        let denominator: f64 = used.iter().map(|r| r.weighted).sum();
        if denominator <= 0.0 {
            return Err(SensitivityError::DegenerateDenominator);
        }
        let per_omega: BTreeMap<SupportSet, f64> = used.iter().map(|r| (r.omega.clone(), r.weighted / denominator)).collect();
        let total = terms
            .iter()
            .map(|t| {
                let s = per_omega.iter().filter(|(w, _)| t.omega.is_subset(w)).map(|(_, v)| v).sum();
                (t.omega.clone(), s)
            })
            .collect();
        Ok(SobolTable {
            mode,
            include_empty,
            per_omega,
            total,
            denominator,
        })
    }
}

/// `S_omega = gamma_omega^{-1} ||f_omega^{(omega)}||^2 / sum_w gamma_w^{-1} ||f_w^{(w)}||^2`.
///
/// The empty set is left out of both sums unless `include_empty` is set.
pub fn sobol_indices(
    f: &SeparableFunction,
    gamma: &GammaModel,
    mode: Mode,
    anchor: Anchor,
    include_empty: bool,
    rule: &QuadratureRule,
) -> Result<SobolTable> {
    let terms = decompose(f, mode, anchor, rule);
    SobolTable::from_terms(&terms, gamma, mode, include_empty)
}

/// `sum_{omega >= omega0} S_omega`.
pub fn total_index(table: &SobolTable, omega0: &SupportSet) -> f64 {
    table
        .per_omega
        .iter()
        .filter(|(w, _)| omega0.is_subset(w))
        .map(|(_, v)| v)
        .sum()
}

/// `s_m = sum_{|omega| <= m} f_omega` (or `f'_omega`).
pub fn truncate_m(f: &SeparableFunction, m: usize, mode: Mode, anchor: Anchor, rule: &QuadratureRule) -> SeparableFunction {
    let terms = decompose(f, mode, anchor, rule);
    SeparableFunction::sum(f.dim(), terms.iter().filter(|t| t.omega.len() <= m).map(|t| &t.func))
}

/// `||f - s_m||_{L2}` from the dropped terms, free of cancellation against `f`.
pub fn truncation_error(f: &SeparableFunction, m: usize, mode: Mode, anchor: Anchor, rule: &QuadratureRule) -> f64 {
    let terms = decompose(f, mode, anchor, rule);
    SeparableFunction::sum(f.dim(), terms.iter().filter(|t| t.omega.len() > m).map(|t| &t.func))
        .l2_norm_sq(rule)
        .sqrt()
}

/// `eps_m = (sum_{|omega| > m} qhat^|omega| gamma_omega)^{1/2}` with `qhat` from [`truncation_constant`].
pub fn truncation_bound(gamma: &GammaModel, m: usize, mode: Mode, anchor: Anchor) -> Result<f64> {
    let qhat = truncation_constant(mode, anchor);
    let tail = match gamma {
        GammaModel::Product(g) => esf_tail(&g.scale(qhat), m).ok_or(SensitivityError::GammaL1Violated { qhat })?,
        GammaModel::FiniteOrder { order, gamma } => {
            let e = esf(&gamma.scale(qhat), &[], *order).ok_or(SensitivityError::GammaL1Violated { qhat })?;
            e.iter().skip(m + 1).sum()
        }
        GammaModel::Table(map) => map
            .iter()
            .filter(|(w, _)| w.len() > m)
            .map(|(w, v)| qhat.powi(w.len() as i32) * v)
            .sum(),
    };
    Ok(tail.max(0.0).sqrt())
}

/// `||f - g||_{L2([0,1]^d)}`.
pub fn l2_error(f: &SeparableFunction, g: &SeparableFunction, rule: &QuadratureRule) -> f64 {
    f.sub(g).l2_norm_sq(rule).sqrt()
}
