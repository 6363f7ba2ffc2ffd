//! Weight sequences `a_j` on multi-indices, the inverse-weight tail sums behind
//! the redundant-splitting transform `a -> â`, and embedding checks.
//!
//! A weight of zero drops the subspace `W_j`; every sum and supremum below runs
//! over the support `{j : a_j > 0}` only.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::index::{IndexSet, IndexVector, SupportSet};
use crate::series::{self, geometric_partial, ScaledGeometric, SeriesError, Sequence, TermSource};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WeightError {
    #[error("embedding fails: a_j > 0 but b_j = 0 at j = {0}")]
    InclusionViolated(IndexVector),
    #[error("no tail-sum oracle available for {0}")]
    OracleUnavailable(String),
    #[error("sum of inverse weights diverges, so the V-norm degenerates (|1| = 0)")]
    NormDegenerate(Box<DegenerateWitness>),
    #[error("no index of the weight support lies above j = {0}")]
    NotInSupport(IndexVector),
    #[error("invalid weight model: {0}")]
    InvalidModel(String),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

pub type Result<T> = std::result::Result<T, WeightError>;

/// Evidence that `|1|_{V,a} = 0`: `(sum_{j in J'} a_j^{-1})^{-1}` over growing finite
/// subsets `J'` of the support. By the optimal-split identity this is `|1|^2` restricted
/// to `J'`, and it tends to zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegenerateWitness {
    /// `(|J'|, (sum_{J'} a^{-1})^{-1})` for nested boxes `J'`.
    pub partial: Vec<(usize, f64)>,
    /// The limit value of `|1|^2_{V,a}`.
    pub unit_norm_sq: f64,
}

/// Per-coordinate parameter: explicit values for the first coordinates, then a constant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerCoord {
    Constant(f64),
    Explicit { head: Vec<f64>, tail: f64 },
}

impl PerCoord {
    pub fn get(&self, k: u32) -> f64 {
        match self {
            PerCoord::Constant(v) => *v,
            PerCoord::Explicit { head, tail } => head.get(k as usize - 1).copied().unwrap_or(*tail),
        }
    }

    fn values(&self) -> (Vec<f64>, f64) {
        match self {
            PerCoord::Constant(v) => (Vec::new(), *v),
            PerCoord::Explicit { head, tail } => (head.clone(), *tail),
        }
    }

    fn all_positive(&self) -> bool {
        let (head, tail) = self.values();
        let ok = head.iter().chain(std::iter::once(&tail)).all(|v| v.is_finite() && *v > 0.0);
        ok
    }

    /// The sequence `f(v_k)`.
    pub fn map_to_sequence(&self, f: impl Fn(f64) -> f64) -> Result<Sequence> {
        let (head, tail) = self.values();
        Ok(Sequence::new(
            head.into_iter().map(&f).collect(),
            series::Decay::new(f(tail), 0.0, 1.0)?,
        )?)
    }
}

/// Order-dependent weights `gamma_omega` with `gamma_{} = 1`.
#[derive(Clone, Debug, PartialEq)]
pub enum GammaModel {
    /// `gamma_omega = prod_{k in omega} gamma_k`.
    Product(Sequence),
    /// Product weights for `|omega| <= order`, zero above.
    FiniteOrder { order: usize, gamma: Sequence },
    /// Explicit finite table; unlisted sets have weight zero.
    Table(BTreeMap<SupportSet, f64>),
}

impl GammaModel {
    pub fn product(gamma: Sequence) -> Self {
        GammaModel::Product(gamma)
    }

    /// Table model; `gamma_{}` defaults to 1 and must equal 1 if given.
    pub fn table<I: IntoIterator<Item = (SupportSet, f64)>>(entries: I) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (omega, v) in entries {
            if !(v.is_finite() && v >= 0.0) {
                return Err(WeightError::InvalidModel(format!("gamma_{omega} = {v} must be finite and nonnegative")));
            }
            map.insert(omega, v);
        }
        match map.get(&SupportSet::empty()) {
            Some(&v) if v != 1.0 => {
                return Err(WeightError::InvalidModel(format!("gamma_{{}} must be 1, got {v}")));
            }
            _ => {
                map.insert(SupportSet::empty(), 1.0);
            }
        }
        Ok(GammaModel::Table(map))
    }

    pub fn value(&self, omega: &SupportSet) -> f64 {
        match self {
            GammaModel::Product(g) => omega.iter().map(|k| g.get(k)).product(),
            GammaModel::FiniteOrder { order, gamma } => {
                if omega.len() > *order {
                    0.0
                } else {
                    omega.iter().map(|k| gamma.get(k)).product()
                }
            }
            GammaModel::Table(map) => map.get(omega).copied().unwrap_or(0.0),
        }
    }

    /// Per-coordinate factors for product-type models.
    pub fn coordinate_weights(&self) -> Option<&Sequence> {
        match self {
            GammaModel::Product(g) | GammaModel::FiniteOrder { gamma: g, .. } => Some(g),
            GammaModel::Table(_) => None,
        }
    }

    pub fn order_cap(&self) -> Option<usize> {
        match self {
            GammaModel::FiniteOrder { order, .. } => Some(*order),
            GammaModel::Table(map) => map.iter().filter(|(_, v)| **v > 0.0).map(|(w, _)| w.len()).max(),
            GammaModel::Product(g) => g.support_end(),
        }
    }

    /// Listed sets with positive weight, for table models.
    pub fn listed(&self) -> Option<Vec<(SupportSet, f64)>> {
        match self {
            GammaModel::Table(map) => Some(map.iter().filter(|(_, v)| **v > 0.0).map(|(w, v)| (w.clone(), *v)).collect()),
            _ => None,
        }
    }

    /// Largest coordinate carrying positive weight, `None` if unbounded.
    pub fn max_active_coord(&self) -> Option<u32> {
        match self {
            GammaModel::Product(g) | GammaModel::FiniteOrder { gamma: g, .. } => g.support_end().map(|n| n as u32),
            GammaModel::Table(map) => Some(map.iter().filter(|(_, v)| **v > 0.0).map(|(w, _)| w.max_coord()).max().unwrap_or(0)),
        }
    }

    /// `gamma_omega` raised to `alpha` and multiplied by `base^|omega|`.
    pub fn scaled_power(&self, alpha: f64, base: f64) -> GammaModel {
        match self {
            GammaModel::Product(g) => GammaModel::Product(g.powf(alpha).scale(base)),
            GammaModel::FiniteOrder { order, gamma } => GammaModel::FiniteOrder {
                order: *order,
                gamma: gamma.powf(alpha).scale(base),
            },
            GammaModel::Table(map) => GammaModel::Table(
                map.iter()
                    .map(|(w, v)| {
                        let val = if *v == 0.0 { 0.0 } else { v.powf(alpha) * base.powi(w.len() as i32) };
                        (w.clone(), val)
                    })
                    .collect(),
            ),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum StructuredGamma {
    Product { gamma: Sequence },
    FiniteOrder { order: usize, gamma: Sequence },
    Table { entries: Vec<GammaEntry> },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GammaEntry {
    omega: SupportSet,
    value: f64,
}

impl Serialize for GammaModel {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let s = match self {
            GammaModel::Product(g) => StructuredGamma::Product { gamma: g.clone() },
            GammaModel::FiniteOrder { order, gamma } => StructuredGamma::FiniteOrder {
                order: *order,
                gamma: gamma.clone(),
            },
            GammaModel::Table(map) => StructuredGamma::Table {
                entries: map
                    .iter()
                    .map(|(w, v)| GammaEntry {
                        omega: w.clone(),
                        value: *v,
                    })
                    .collect(),
            },
        };
        s.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for GammaModel {
    /// Accepts `{"kind":"finite_order",..}`, `{"kind":"table",..}`, `{"kind":"product","gamma":..}`
    /// or a bare sequence (power, geometric, ...) meaning product weights.
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        let value = serde_json::Value::deserialize(deserializer)?;
        let kind = value.get("kind").and_then(|k| k.as_str()).unwrap_or("");
        let structured = matches!(kind, "finite_order" | "table") || (kind == "product" && value.get("gamma").is_some());
        if !structured {
            let seq: Sequence = serde_json::from_value(value).map_err(D::Error::custom)?;
            return Ok(GammaModel::Product(seq));
        }
        let s: StructuredGamma = serde_json::from_value(value).map_err(D::Error::custom)?;
        match s {
            StructuredGamma::Product { gamma } => Ok(GammaModel::Product(gamma)),
            StructuredGamma::FiniteOrder { order, gamma } => Ok(GammaModel::FiniteOrder { order, gamma }),
            StructuredGamma::Table { entries } => {
                GammaModel::table(entries.into_iter().map(|e| (e.omega, e.value))).map_err(D::Error::custom)
            }
        }
    }
}

/// Weights of the form `a_j = gamma_{omega_j}^{-1} prod_{k in omega_j} lambda_k rho_k^{-j_k}`,
/// with levels optionally capped at `levels` (weight zero above the cap).
///
/// Spline smoothness weights use `rho_k = 2^{-2 s_k}`; product weights use
/// `lambda = rho = 1` with a level cap.
#[derive(Clone)]
pub struct FactorWeights {
    pub gamma: GammaModel,
    pub lambda: Sequence,
    pub rho: Sequence,
    pub levels: Option<u32>,
    log_prod: OnceLock<Option<f64>>,
}

impl fmt::Debug for FactorWeights {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FactorWeights")
            .field("gamma", &self.gamma)
            .field("lambda", &self.lambda)
            .field("rho", &self.rho)
            .field("levels", &self.levels)
            .finish()
    }
}

impl PartialEq for FactorWeights {
    fn eq(&self, other: &Self) -> bool {
        self.gamma == other.gamma && self.lambda == other.lambda && self.rho == other.rho && self.levels == other.levels
    }
}

impl FactorWeights {
    pub fn new(gamma: GammaModel, lambda: Sequence, rho: Sequence, levels: Option<u32>) -> Self {
        FactorWeights {
            gamma,
            lambda,
            rho,
            levels,
            log_prod: OnceLock::new(),
        }
    }

    pub fn weight(&self, j: &IndexVector) -> f64 {
        if j.is_zero() {
            return 1.0;
        }
        if let Some(cap) = self.levels {
            if j.max_level() > cap {
                return 0.0;
            }
        }
        let g = self.gamma.value(&j.support());
        if g == 0.0 {
            return 0.0;
        }
        let mut w = 1.0 / g;
        for (k, l) in j.iter() {
            w *= self.lambda.get(k) * self.rho.get(k).powi(-(l as i32));
        }
        w
    }

    /// `sum_{i >= l, within the cap} lambda_k^{-1} rho_k^i`, the inverse-weight mass of coordinate `k` from level `l`.
    pub fn level_mass(&self, k: u32, l: u32) -> f64 {
        geometric_partial(self.rho.get(k), l, self.levels) / self.lambda.get(k)
    }

    /// `sup_l` of `a_k(l) * level_mass(k, l)`, attained at `l = 1`.
    fn level_ratio(&self, k: u32) -> f64 {
        geometric_partial(self.rho.get(k), 0, self.levels.map(|l| l - 1))
    }

    fn source(&self, g: &Sequence) -> ScaledGeometric {
        ScaledGeometric {
            g: g.ratio(&self.lambda),
            rho: self.rho.clone(),
            levels: self.levels,
        }
    }

    fn full_log_prod(&self, g: &Sequence) -> Option<f64> {
        *self.log_prod.get_or_init(|| series::log_prod_one_plus(&self.source(g), &[]).filter(|v| v.is_finite()))
    }

    /// `sum_{i >= j, a_i > 0} a_i^{-1}`; `None` if divergent.
    pub fn inverse_tail(&self, j: &IndexVector) -> Option<f64> {
        let omega = j.support();
        if let Some(cap) = self.levels {
            if j.max_level() > cap {
                return Some(0.0);
            }
        }
        match &self.gamma {
            GammaModel::Product(g) | GammaModel::FiniteOrder { gamma: g, .. } => {
                let rest = match self.gamma.order_cap_strict() {
                    Some(order) if omega.len() > order => return Some(0.0),
                    Some(order) => Some(order - omega.len()),
                    None => None,
                };
                let mut lead = 1.0;
                for (k, l) in j.iter() {
                    lead *= g.get(k) * self.level_mass(k, l);
                }
                if lead == 0.0 {
                    return Some(0.0);
                }
                if !lead.is_finite() {
                    return None;
                }
                let src = self.source(g);
                let factor = match rest {
                    None => {
                        let mut log = self.full_log_prod(g)?;
                        for k in omega.iter() {
                            log -= src.term(k as usize).ln_1p();
                        }
                        log.exp()
                    }
                    Some(r) => {
                        let skip: Vec<u32> = omega.iter().collect();
                        series::esf(&src, &skip, r)?.iter().sum()
                    }
                };
                let v = lead * factor;
                v.is_finite().then_some(v)
            }
            GammaModel::Table(map) => {
                let mut total = 0.0;
                for (w, &gv) in map {
                    if gv == 0.0 || !omega.is_subset(w) {
                        continue;
                    }
                    let mut term = gv;
                    for k in w.iter() {
                        let l = j.level(k).max(1);
                        term *= self.level_mass(k, l);
                    }
                    total += term;
                }
                total.is_finite().then_some(total)
            }
        }
    }

    /// Analytic value of `sup_j a_j / â_j` over the support.
    fn vawa_bound(&self) -> Option<AnalyticBound> {
        match &self.gamma {
            GammaModel::Product(g) => self.vawa_product(g),
            GammaModel::FiniteOrder { order, gamma } => {
                let src = self.source(gamma);
                let e = match series::esf(&src, &[], *order) {
                    Some(e) => e,
                    None => return Some(AnalyticBound::upper(f64::INFINITY)),
                };
                // largest level ratios among active coordinates; nonincreasing past the head
                let reach = src.regular_from() + order;
                let mut ratios: Vec<f64> = (1..=reach as u32)
                    .filter(|&k| gamma.get(k) > 0.0)
                    .map(|k| self.level_ratio(k))
                    .collect();
                ratios.sort_by(|a, b| b.partial_cmp(a).expect("finite ratios"));
                let mut best: f64 = 0.0;
                let mut prefix = 1.0;
                for s in 0..=*order {
                    if s > 0 {
                        match ratios.get(s - 1) {
                            Some(r) => prefix *= r,
                            None => break,
                        }
                    }
                    let sum: f64 = e[..=order - s].iter().sum();
                    best = best.max(prefix * sum);
                }
                Some(AnalyticBound::upper(best))
            }
            GammaModel::Table(map) => {
                let mut best: f64 = 0.0;
                for (w, &gw) in map {
                    if gw == 0.0 {
                        continue;
                    }
                    let mut sum = 0.0;
                    for (w2, &g2) in map {
                        if g2 == 0.0 || !w.is_subset(w2) {
                            continue;
                        }
                        let mut t = g2 / gw;
                        for k in w2.iter().filter(|k| !w.contains(*k)) {
                            t *= self.level_mass(k, 1);
                        }
                        sum += t;
                    }
                    let lead: f64 = w.iter().map(|k| self.level_ratio(k)).product();
                    best = best.max(lead * sum);
                }
                Some(AnalyticBound::exact(best))
            }
        }
    }

    fn vawa_product(&self, g: &Sequence) -> Option<AnalyticBound> {
        let src = self.source(g);
        // per-coordinate factor max(level_ratio, 1 + x_k) = 1 + max(level_ratio - 1, x_k)
        let y = |k: u32| (self.level_ratio(k) - 1.0).max(src.term(k as usize));
        if let Some(n) = g.support_end() {
            let log: f64 = (1..=n as u32).filter(|&k| g.get(k) > 0.0).map(|k| y(k).ln_1p()).sum();
            return Some(AnalyticBound::exact(log.exp()));
        }
        let rt = self.rho.tail();
        let rho_constant = rt.is_zero() || (rt.p == 0.0 && rt.r == 1.0);
        if rho_constant {
            let h = self.rho.head_len().max(g.head_len()) + 1;
            if self.level_ratio(h as u32) > 1.0 {
                return Some(AnalyticBound::exact(f64::INFINITY));
            }
            let head: Vec<f64> = (1..=src.regular_from() as u32).map(|k| if g.get(k) > 0.0 { y(k) } else { 0.0 }).collect();
            let spliced = Spliced { head, tail: &src };
            let log = series::log_prod_one_plus(&spliced, &[]).unwrap_or(f64::INFINITY);
            return Some(AnalyticBound::exact(log.exp()));
        }
        if self.levels.is_some() {
            return None;
        }
        // rho decays: past the point where g_k / lambda_k <= 1 the factor is 1 / (1 - rho_k)
        let ratio = g.ratio(&self.lambda);
        if !(ratio.tail().is_nonincreasing() && ratio.limit() < 1.0) {
            return None;
        }
        let mut cut = src.regular_from();
        while ratio.get(cut as u32 + 1) > 1.0 {
            cut += 1;
        }
        let head: Vec<f64> = (1..=cut as u32).map(|k| if g.get(k) > 0.0 { y(k) } else { 0.0 }).collect();
        let unit_src = ScaledGeometric {
            g: Sequence::ones(),
            rho: self.rho.clone(),
            levels: None,
        };
        let spliced = Spliced { head, tail: &unit_src };
        let log = series::log_prod_one_plus(&spliced, &[]).unwrap_or(f64::INFINITY);
        Some(AnalyticBound::exact(log.exp()))
    }
}

impl GammaModel {
    fn order_cap_strict(&self) -> Option<usize> {
        match self {
            GammaModel::FiniteOrder { order, .. } => Some(*order),
            _ => None,
        }
    }
}

/// Explicit head values in front of another source's tail.
struct Spliced<'a, S: TermSource> {
    head: Vec<f64>,
    tail: &'a S,
}

impl<S: TermSource> TermSource for Spliced<'_, S> {
    fn term(&self, k: usize) -> f64 {
        if k <= self.head.len() {
            self.head[k - 1]
        } else {
            self.tail.term(k)
        }
    }

    fn regular_from(&self) -> usize {
        self.head.len().max(self.tail.regular_from())
    }

    fn tail_monotone(&self) -> bool {
        self.tail.tail_monotone()
    }

    fn power_sum_after(&self, m: u32, from: usize) -> Option<f64> {
        self.tail.power_sum_after(m, from)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct AnalyticBound {
    value: f64,
    exact: bool,
}

impl AnalyticBound {
    fn exact(value: f64) -> Self {
        AnalyticBound { value, exact: true }
    }

    fn upper(value: f64) -> Self {
        AnalyticBound { value, exact: false }
    }
}

/// `a_j = gamma_{omega_j}^{-1} sum_{k in omega_j} 2^{2 s_k j_k}`.
#[derive(Clone, Debug, PartialEq)]
pub struct AnisotropicWeights {
    pub gamma: GammaModel,
    pub s: PerCoord,
}

impl AnisotropicWeights {
    pub fn weight(&self, j: &IndexVector) -> f64 {
        if j.is_zero() {
            return 1.0;
        }
        let g = self.gamma.value(&j.support());
        if g == 0.0 {
            return 0.0;
        }
        j.iter().map(|(k, l)| 4f64.powf(self.s.get(k) * l as f64)).sum::<f64>() / g
    }
}

/// Explicit finite table of weights; unlisted indices have weight zero except
/// the zero index, which defaults to 1.
#[derive(Clone, Debug, PartialEq)]
pub struct TableWeights {
    entries: BTreeMap<IndexVector, f64>,
}

impl TableWeights {
    /// Builds a table; with `monotone` set, the support must be downward closed.
    pub fn new<I: IntoIterator<Item = (IndexVector, f64)>>(entries: I, monotone: bool) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (j, v) in entries {
            if !(v.is_finite() && v >= 0.0) {
                return Err(WeightError::InvalidModel(format!("a_{j} = {v} must be finite and nonnegative")));
            }
            map.insert(j, v);
        }
        map.entry(IndexVector::zero()).or_insert(1.0);
        let t = TableWeights { entries: map };
        if monotone && !t.support().is_monotone() {
            return Err(WeightError::InvalidModel("table support is not monotone".into()));
        }
        Ok(t)
    }

    pub fn weight(&self, j: &IndexVector) -> f64 {
        self.entries.get(j).copied().unwrap_or(0.0)
    }

    pub fn support(&self) -> IndexSet {
        self.entries.iter().filter(|(_, v)| **v > 0.0).map(|(j, _)| j.clone()).collect()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&IndexVector, f64)> {
        self.entries.iter().map(|(j, v)| (j, *v))
    }

    pub fn inverse_tail(&self, j: &IndexVector) -> f64 {
        self.entries
            .iter()
            .filter(|(i, v)| **v > 0.0 && j.leq(i))
            .map(|(_, v)| 1.0 / v)
            .sum()
    }
}

pub type WeightFn = Arc<dyn Fn(&IndexVector) -> f64 + Send + Sync>;

/// User-supplied weights with an optional tail-sum oracle.
#[derive(Clone)]
pub struct CustomWeights {
    pub name: String,
    pub eval: WeightFn,
    pub tail: Option<Arc<dyn TailSum>>,
}

impl fmt::Debug for CustomWeights {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomWeights")
            .field("name", &self.name)
            .field("tail", &self.tail.is_some())
            .finish()
    }
}

/// A weight sequence `a_j`.
#[derive(Clone, Debug)]
pub enum WeightModel {
    /// `a_j = gamma_{omega_j}^{-1}` for levels up to a cap, zero above.
    Product(FactorWeights),
    /// Spline smoothness weights.
    Spline(FactorWeights),
    Anisotropic(AnisotropicWeights),
    Table(TableWeights),
    Custom(CustomWeights),
}

impl WeightModel {
    /// Product weights `a_j = prod_{k in omega_j} gamma_k^{-1}` for every level in `1..=max_level`.
    pub fn product(gamma: Sequence, max_level: u32) -> Result<Self> {
        if max_level == 0 {
            return Err(WeightError::InvalidModel("max_level must be at least 1".into()));
        }
        Ok(WeightModel::Product(FactorWeights::new(
            GammaModel::Product(gamma),
            Sequence::ones(),
            Sequence::ones(),
            Some(max_level),
        )))
    }

    /// `a_j = gamma_{omega_j}^{-1} prod_{k in omega_j} lambda_k 2^{2 s_k j_k}` with `s_k > 0`, `lambda_k > 0`.
    pub fn spline(gamma: GammaModel, s: &PerCoord, lambda: &PerCoord) -> Result<Self> {
        if !s.all_positive() {
            return Err(WeightError::InvalidModel("smoothness s_k must be positive".into()));
        }
        let rho = s.map_to_sequence(|s| 4f64.powf(-s))?;
        Self::spline_rho(gamma, rho, lambda)
    }

    /// Spline weights parameterized directly by `rho_k = 2^{-2 s_k}`, which allows `s_k -> inf`
    /// (for example `rho_k = k^{-2}` is `s_k = log2 k`).
    pub fn spline_rho(gamma: GammaModel, rho: Sequence, lambda: &PerCoord) -> Result<Self> {
        if !lambda.all_positive() {
            return Err(WeightError::InvalidModel("lambda_k must be positive".into()));
        }
        let over = rho.head().iter().any(|&r| r >= 1.0 || r <= 0.0) || rho.tail().limit() >= 1.0 || rho.tail().is_zero();
        if over || !rho.tail().is_nonincreasing() {
            return Err(WeightError::InvalidModel("rho_k = 2^(-2 s_k) must lie in (0, 1) and be eventually nonincreasing".into()));
        }
        let lambda = lambda.map_to_sequence(|v| v)?;
        Ok(WeightModel::Spline(FactorWeights::new(gamma, lambda, rho, None)))
    }

    /// `b_j = 1` for every `j`: the plain L2 norm of the orthogonal splitting.
    pub fn unit() -> Self {
        WeightModel::Spline(FactorWeights::new(
            GammaModel::Product(Sequence::ones()),
            Sequence::ones(),
            Sequence::ones(),
            None,
        ))
    }

    pub fn anisotropic(gamma: GammaModel, s: PerCoord) -> Result<Self> {
        if !s.all_positive() {
            return Err(WeightError::InvalidModel("smoothness s_k must be positive".into()));
        }
        Ok(WeightModel::Anisotropic(AnisotropicWeights { gamma, s }))
    }

    pub fn table<I: IntoIterator<Item = (IndexVector, f64)>>(entries: I, monotone: bool) -> Result<Self> {
        Ok(WeightModel::Table(TableWeights::new(entries, monotone)?))
    }

    pub fn custom(name: impl Into<String>, eval: WeightFn, tail: Option<Arc<dyn TailSum>>) -> Self {
        WeightModel::Custom(CustomWeights {
            name: name.into(),
            eval,
            tail,
        })
    }

    /// `a_j`.
    pub fn weight(&self, j: &IndexVector) -> f64 {
        match self {
            WeightModel::Product(f) | WeightModel::Spline(f) => f.weight(j),
            WeightModel::Anisotropic(w) => w.weight(j),
            WeightModel::Table(t) => t.weight(j),
            WeightModel::Custom(c) => (c.eval)(j),
        }
    }

    /// Product-form parameters, when the model has them.
    pub fn factor_form(&self) -> Option<&FactorWeights> {
        match self {
            WeightModel::Product(f) | WeightModel::Spline(f) => Some(f),
            _ => None,
        }
    }

    pub fn name(&self) -> String {
        match self {
            WeightModel::Product(_) => "product".into(),
            WeightModel::Spline(_) => "spline".into(),
            WeightModel::Anisotropic(_) => "anisotropic".into(),
            WeightModel::Table(_) => "table".into(),
            WeightModel::Custom(c) => format!("custom({})", c.name),
        }
    }

    fn analytic_vawa(&self) -> Option<AnalyticBound> {
        match self {
            WeightModel::Product(f) | WeightModel::Spline(f) => f.vawa_bound(),
            WeightModel::Table(t) => {
                let best = t
                    .entries()
                    .filter(|(_, v)| *v > 0.0)
                    .map(|(j, v)| v * t.inverse_tail(j))
                    .fold(0.0, f64::max);
                Some(AnalyticBound::exact(best))
            }
            _ => None,
        }
    }
}

/// Oracle for `sum_{i in support(a), i >= j} a_i^{-1}`.
pub trait TailSum: Send + Sync {
    /// `Ok(None)` when the sum diverges.
    fn inverse_tail(&self, j: &IndexVector) -> Result<Option<f64>>;
}

impl TailSum for WeightModel {
    fn inverse_tail(&self, j: &IndexVector) -> Result<Option<f64>> {
        match self {
            WeightModel::Product(f) | WeightModel::Spline(f) => Ok(f.inverse_tail(j)),
            WeightModel::Table(t) => Ok(Some(t.inverse_tail(j))),
            WeightModel::Anisotropic(_) => Err(WeightError::OracleUnavailable("anisotropic weights".into())),
            WeightModel::Custom(c) => match &c.tail {
                Some(t) => t.inverse_tail(j),
                None => Err(WeightError::OracleUnavailable(format!("custom weights '{}'", c.name))),
            },
        }
    }
}

/// Adapts a closure into a [`TailSum`].
pub struct FnTail<F>(pub F);

impl<F> TailSum for FnTail<F>
where
    F: Fn(&IndexVector) -> Option<f64> + Send + Sync,
{
    fn inverse_tail(&self, j: &IndexVector) -> Result<Option<f64>> {
        Ok((self.0)(j))
    }
}

/// Whether `sum_{i in support(a)} a_i^{-1}` is finite.
#[derive(Debug, Clone, PartialEq)]
pub enum VNormStatus {
    Defined { inverse_sum: f64 },
    Degenerate(DegenerateWitness),
}

impl VNormStatus {
    pub fn is_defined(&self) -> bool {
        matches!(self, VNormStatus::Defined { .. })
    }
}

fn degenerate_witness(a: &WeightModel) -> DegenerateWitness {
    let mut partial = Vec::new();
    for d in 1..=5u32 {
        let mut sum = 0.0;
        let mut count = 0usize;
        for j in IndexSet::full_box(d, d).iter() {
            let w = a.weight(j);
            if w > 0.0 {
                sum += 1.0 / w;
                count += 1;
            }
        }
        partial.push((count, 1.0 / sum));
    }
    DegenerateWitness {
        partial,
        unit_norm_sq: 0.0,
    }
}

/// Checks that the V-norm built from `a` is a norm (inverse weights summable).
pub fn v_norm_defined(a: &WeightModel, oracle: &dyn TailSum) -> Result<VNormStatus> {
    match oracle.inverse_tail(&IndexVector::zero())? {
        Some(total) => Ok(VNormStatus::Defined { inverse_sum: total }),
        None => Ok(VNormStatus::Degenerate(degenerate_witness(a))),
    }
}

/// `â_j = (sum_{i in support(a), i >= j} a_i^{-1})^{-1}`.
pub fn hat_transform(a: &WeightModel, j: &IndexVector, oracle: &dyn TailSum) -> Result<f64> {
    if let VNormStatus::Degenerate(w) = v_norm_defined(a, oracle)? {
        return Err(WeightError::NormDegenerate(Box::new(w)));
    }
    let tail = oracle
        .inverse_tail(j)?
        .ok_or_else(|| WeightError::NormDegenerate(Box::new(degenerate_witness(a))))?;
    if tail <= 0.0 {
        return Err(WeightError::NotInSupport(j.clone()));
    }
    Ok(1.0 / tail)
}

/// How a supremum over infinitely many indices was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    /// Closed-form value of the supremum over the whole support.
    Exact,
    /// Certified upper bound on the supremum.
    UpperBound,
    /// Maximum over the supplied finite search set only.
    FiniteSearchLowerBound,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VaWa {
    /// `C^2 = sup_j a_j / â_j`.
    pub c_sq: f64,
    pub kind: BoundKind,
    /// Maximum over the finite search set.
    pub search_max: f64,
}

/// Smallest `C^2` with `sum_{i >= j} a_i^{-1} <= C^2 a_j^{-1}` for all `j` in the support.
///
/// Returns `Ok(None)` when the supremum is certified infinite.
pub fn va_wa_condition(a: &WeightModel, search: &IndexSet, oracle: &dyn TailSum) -> Result<Option<VaWa>> {
    if let VNormStatus::Degenerate(w) = v_norm_defined(a, oracle)? {
        return Err(WeightError::NormDegenerate(Box::new(w)));
    }
    let mut search_max: f64 = 0.0;
    for j in search {
        let w = a.weight(j);
        if w > 0.0 {
            let tail = oracle
                .inverse_tail(j)?
                .ok_or_else(|| WeightError::NormDegenerate(Box::new(degenerate_witness(a))))?;
            search_max = search_max.max(w * tail);
        }
    }
    let analytic = match a {
        WeightModel::Custom(_) => None,
        _ => a.analytic_vawa(),
    };
    Ok(match analytic {
        Some(b) if !b.value.is_finite() => None,
        Some(b) => Some(VaWa {
            c_sq: b.value.max(search_max),
            kind: if b.exact { BoundKind::Exact } else { BoundKind::UpperBound },
            search_max,
        }),
        None => Some(VaWa {
            c_sq: search_max,
            kind: BoundKind::FiniteSearchLowerBound,
            search_max,
        }),
    })
}

/// Norm bound of the embedding `H_a -> H_b` over a finite search set:
/// `C = sup_{a_j > 0} sqrt(b_j / a_j)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Embedding {
    pub c: f64,
    pub argmax: Option<IndexVector>,
    pub kind: BoundKind,
}

/// Checks `H_a ⊂ H_b` on `search`: every `j` with `a_j > 0` needs `b_j > 0`.
pub fn check_embedding(a: &WeightModel, b: &WeightModel, search: &IndexSet) -> Result<Option<Embedding>> {
    let mut best: Option<(f64, IndexVector)> = None;
    for j in search {
        let aj = a.weight(j);
        if aj <= 0.0 {
            continue;
        }
        let bj = b.weight(j);
        if bj <= 0.0 {
            return Err(WeightError::InclusionViolated(j.clone()));
        }
        let c = (bj / aj).sqrt();
        if !c.is_finite() {
            return Ok(None);
        }
        if best.as_ref().is_none_or(|(v, _)| c > *v) {
            best = Some((c, j.clone()));
        }
    }
    Ok(Some(match best {
        Some((c, j)) => Embedding {
            c,
            argmax: Some(j),
            kind: BoundKind::FiniteSearchLowerBound,
        },
        None => Embedding {
            c: 0.0,
            argmax: None,
            kind: BoundKind::FiniteSearchLowerBound,
        },
    }))
}

/// `(sum_i a_i^{-1})^{-1} * |u|^2`, the least value of `sum_i a_i |u_i|^2` over splittings
/// `u = sum_i u_i`. With `divergent_family` set (an infinite family whose inverse weights are
/// not summable) the infimum is zero.
pub fn optimal_split_value(a: &[f64], u_norm_sq: f64, divergent_family: bool) -> f64 {
    assert!(!a.is_empty(), "need at least one weight");
    assert!(a.iter().all(|&v| v > 0.0), "weights must be positive");
    if divergent_family {
        return 0.0;
    }
    let inv: f64 = a.iter().map(|v| 1.0 / v).sum();
    u_norm_sq / inv
}

/// JSON form of a [`WeightModel`] (custom models have no JSON form).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightSpec {
    Product {
        gamma: Sequence,
        #[serde(default = "one")]
        max_level: u32,
    },
    Spline {
        gamma: GammaModel,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        s: Option<PerCoord>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rho: Option<Sequence>,
        #[serde(default = "unit_lambda")]
        lambda: PerCoord,
    },
    Anisotropic {
        gamma: GammaModel,
        s: PerCoord,
    },
    Table {
        entries: Vec<TableEntry>,
        #[serde(default)]
        monotone: bool,
    },
    Unit {},
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableEntry {
    pub index: IndexVector,
    pub value: f64,
}

fn one() -> u32 {
    1
}

fn unit_lambda() -> PerCoord {
    PerCoord::Constant(1.0)
}

impl TryFrom<WeightSpec> for WeightModel {
    type Error = WeightError;

    fn try_from(spec: WeightSpec) -> Result<Self> {
        match spec {
            WeightSpec::Product { gamma, max_level } => WeightModel::product(gamma, max_level),
            WeightSpec::Spline { gamma, s, rho, lambda } => match (s, rho) {
                (Some(s), None) => WeightModel::spline(gamma, &s, &lambda),
                (None, Some(rho)) => WeightModel::spline_rho(gamma, rho, &lambda),
                _ => Err(WeightError::InvalidModel("spline weights need exactly one of 's' or 'rho'".into())),
            },
            WeightSpec::Anisotropic { gamma, s } => WeightModel::anisotropic(gamma, s),
            WeightSpec::Table { entries, monotone } => {
                WeightModel::table(entries.into_iter().map(|e| (e.index, e.value)), monotone)
            }
            WeightSpec::Unit {} => Ok(WeightModel::unit()),
        }
    }
}

impl<'de> Deserialize<'de> for WeightModel {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let spec = WeightSpec::deserialize(deserializer)?;
        WeightModel::try_from(spec).map_err(serde::de::Error::custom)
    }
}
