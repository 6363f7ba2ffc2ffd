//! Exact epsilon-dimensions: enumeration of `J_{c,eps} = {j : c_j >= eps^2}` with
//! `c_j = b_j / a_j` (zero where `a_j = 0`), the dimension count over it, restriction
//! to the first `d` coordinates, and the closed-form spline count.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::index::{IndexSet, IndexVector, SupportSet};
use crate::series::Sequence;
use crate::weights::{FactorWeights, GammaModel, PerCoord, WeightError, WeightModel};

/// Default limit on the number of enumerated indices.
pub const DEFAULT_CAP: usize = 10_000_000;

/// Relative slack used when pruning, so floating-point products never drop a member.
const SLACK: f64 = 1e-12;

/// Largest coordinate bound the automatic certificate will materialize.
const MAX_HORIZON: usize = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EpsDimError {
    #[error("eps must be positive and finite, got {0}")]
    InvalidEps(f64),
    #[error("embedding is not compact: {0}")]
    NotCompact(String),
    #[error("enumeration exceeded the cap of {cap} indices")]
    EnumerationCap { cap: usize },
    #[error("no decay certificate for this weight pair: {0}")]
    CertificateRequired(String),
    #[error(transparent)]
    Weight(#[from] WeightError),
}

pub type Result<T> = std::result::Result<T, EpsDimError>;

/// `dim W_j = prod_k d(j_k, k)`.
#[derive(Clone, Default)]
pub enum DimensionModel {
    /// Every `W_j` is one-dimensional.
    #[default]
    AllOne,
    /// Hierarchical spline increments: `d(0) = 1`, `d(l) = 2^(l-1)`.
    Spline,
    /// `d(level, k)`; must return 1 for level 0.
    Custom(Arc<dyn Fn(u32, u32) -> u64 + Send + Sync>),
}

impl fmt::Debug for DimensionModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DimensionModel::AllOne => f.write_str("AllOne"),
            DimensionModel::Spline => f.write_str("Spline"),
            DimensionModel::Custom(_) => f.write_str("Custom"),
        }
    }
}

impl DimensionModel {
    pub fn dim(&self, j: &IndexVector) -> u128 {
        match self {
            DimensionModel::AllOne => 1,
            DimensionModel::Spline => 1u128 << (j.l1() - j.l0() as u64),
            DimensionModel::Custom(f) => j.iter().map(|(k, l)| f(l, k) as u128).product(),
        }
    }
}

/// How the set `{c_j >= eps^2}` is known to be finite.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DecayCertificate {
    /// Derived from the weight models (product-form pairs and finite tables).
    #[default]
    Auto,
    /// `c_j < eps^2` for every `j` outside the box `{max_coord(j) <= max_coord, levels <= max_level}`.
    /// With `monotone` set, `{c_j >= eps^2}` is downward closed, so the search stops at non-members.
    Box {
        max_coord: u32,
        max_level: u32,
        monotone: bool,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EnumOptions {
    pub cap: usize,
    /// Return the first `cap` indices (in search order) instead of failing.
    pub allow_truncation: bool,
    /// Only indices with support in `{1..=d}`.
    pub restrict: Option<u32>,
}

impl Default for EnumOptions {
    fn default() -> Self {
        EnumOptions {
            cap: DEFAULT_CAP,
            allow_truncation: false,
            restrict: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpsDimResult {
    pub eps: f64,
    pub n: u128,
    #[serde(skip)]
    pub index_set: IndexSet,
    pub truncated: bool,
}

impl EpsDimResult {
    /// `|J_{c,eps}|`.
    pub fn count(&self) -> usize {
        self.index_set.len()
    }

    /// Largest coordinate used by the index set.
    pub fn max_coord(&self) -> u32 {
        self.index_set.max_coord()
    }
}

/// `c_j = b_j / a_j`, zero where `a_j = 0`.
pub fn ratio(a: &WeightModel, b: &WeightModel, j: &IndexVector) -> f64 {
    let aj = a.weight(j);
    if aj <= 0.0 {
        return 0.0;
    }
    b.weight(j) / aj
}

/// Exact `{j : c_j >= eps^2}` (boundary included), with a truncation flag.
pub fn enumerate_jc_eps(
    a: &WeightModel,
    b: &WeightModel,
    eps: f64,
    decay: DecayCertificate,
    opts: &EnumOptions,
) -> Result<(IndexSet, bool)> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(EpsDimError::InvalidEps(eps));
    }
    let thr = eps * eps;
    let (candidates, truncated) = match decay {
        DecayCertificate::Box {
            max_coord,
            max_level,
            monotone,
        } => box_candidates(a, b, thr, max_coord, max_level, monotone, opts)?,
        DecayCertificate::Auto => auto_candidates(a, b, thr, opts)?,
    };
    let set: IndexSet = candidates
        .into_iter()
        .filter(|j| opts.restrict.is_none_or(|d| j.max_coord() <= d))
        .filter(|j| ratio(a, b, j) >= thr)
        .take(if truncated { opts.cap } else { usize::MAX })
        .collect();
    Ok((set, truncated))
}

/// `n_eps = sum_{j in J_{c,eps}} dim W_j`.
pub fn eps_dimension(
    a: &WeightModel,
    b: &WeightModel,
    eps: f64,
    dims: &DimensionModel,
    decay: DecayCertificate,
    opts: &EnumOptions,
) -> Result<EpsDimResult> {
    let (index_set, truncated) = enumerate_jc_eps(a, b, eps, decay, opts)?;
    let n = index_set.iter().map(|j| dims.dim(j)).sum();
    Ok(EpsDimResult {
        eps,
        n,
        index_set,
        truncated,
    })
}

/// The epsilon-dimension for the restriction to the first `d` coordinates.
pub fn eps_dimension_restricted(
    a: &WeightModel,
    b: &WeightModel,
    eps: f64,
    dims: &DimensionModel,
    d: u32,
    decay: DecayCertificate,
    opts: &EnumOptions,
) -> Result<EpsDimResult> {
    let opts = EnumOptions {
        restrict: Some(d),
        ..*opts
    };
    eps_dimension(a, b, eps, dims, decay, &opts)
}

/// Smallest `d0` whose restriction already gives the full `J_{c,eps}`: its largest coordinate.
pub fn stabilization_dim(
    a: &WeightModel,
    b: &WeightModel,
    eps: f64,
    decay: DecayCertificate,
    opts: &EnumOptions,
) -> Result<u32> {
    let opts = EnumOptions { restrict: None, ..*opts };
    let (set, _) = enumerate_jc_eps(a, b, eps, decay, &opts)?;
    Ok(set.max_coord())
}

struct Counter<'a> {
    seen: AtomicUsize,
    stop: AtomicBool,
    opts: &'a EnumOptions,
}

impl Counter<'_> {
    /// Registers one candidate; `Ok(false)` means stop (truncation).
    fn bump(&self) -> Result<bool> {
        let n = self.seen.fetch_add(1, Ordering::Relaxed) + 1;
        if n > self.opts.cap {
            if self.opts.allow_truncation {
                self.stop.store(true, Ordering::Relaxed);
                return Ok(false);
            }
            return Err(EpsDimError::EnumerationCap { cap: self.opts.cap });
        }
        Ok(!self.stop.load(Ordering::Relaxed))
    }
}

fn box_candidates(
    a: &WeightModel,
    b: &WeightModel,
    thr: f64,
    max_coord: u32,
    max_level: u32,
    monotone: bool,
    opts: &EnumOptions,
) -> Result<(Vec<IndexVector>, bool)> {
    let coords = opts.restrict.map_or(max_coord, |d| d.min(max_coord));
    let counter = Counter {
        seen: AtomicUsize::new(0),
        stop: AtomicBool::new(false),
        opts,
    };
    if monotone {
        // breadth-first from zero; members' successors inside the box
        let mut out = Vec::new();
        let mut seen: BTreeSet<IndexVector> = BTreeSet::new();
        let mut frontier = vec![IndexVector::zero()];
        seen.insert(IndexVector::zero());
        while let Some(j) = frontier.pop() {
            if ratio(a, b, &j) < thr {
                continue;
            }
            out.push(j.clone());
            if !counter.bump()? {
                return Ok((out, true));
            }
            for k in 1..=coords {
                let l = j.level(k);
                if l < max_level {
                    let next = j.with(k, l + 1);
                    if seen.insert(next.clone()) {
                        frontier.push(next);
                    }
                }
            }
        }
        return Ok((out, false));
    }
    let size = (max_level as f64 + 1.0).powi(coords as i32);
    if size > opts.cap as f64 && !opts.allow_truncation {
        return Err(EpsDimError::EnumerationCap { cap: opts.cap });
    }
    let mut out = Vec::new();
    let mut truncated = false;
    let mut current = vec![0u32; coords as usize];
    loop {
        let j = IndexVector::new(current.iter().enumerate().map(|(i, &l)| (i as u32 + 1, l))).expect("1-based");
        if ratio(a, b, &j) >= thr {
            out.push(j);
            if !counter.bump()? {
                truncated = true;
                break;
            }
        }
        // odometer increment
        let mut pos = 0;
        loop {
            if pos == current.len() {
                return Ok((out, truncated));
            }
            if current[pos] < max_level {
                current[pos] += 1;
                break;
            }
            current[pos] = 0;
            pos += 1;
        }
    }
    Ok((out, truncated))
}

fn auto_candidates(a: &WeightModel, b: &WeightModel, thr: f64, opts: &EnumOptions) -> Result<(Vec<IndexVector>, bool)> {
    if let WeightModel::Table(t) = a {
        return Ok((t.support().iter().cloned().collect(), false));
    }
    if let WeightModel::Table(t) = b {
        let mut out: Vec<IndexVector> = t.support().iter().cloned().collect();
        if !out.contains(&IndexVector::zero()) {
            out.push(IndexVector::zero());
        }
        return Ok((out, false));
    }
    let (fa, fb) = match (a.factor_form(), b.factor_form()) {
        (Some(fa), Some(fb)) => (fa, fb),
        _ => {
            return Err(EpsDimError::CertificateRequired(format!(
                "{} / {} weights need an explicit box certificate",
                b.name(),
                a.name()
            )))
        }
    };
    let pair = PairFactors::new(fa, fb);
    match (&fa.gamma, &fb.gamma) {
        (GammaModel::Table(_), _) | (_, GammaModel::Table(_)) => pair.list_candidates(fa, fb, thr, opts),
        _ => {
            let plan = ProductPlan::new(&pair, fa, fb)?;
            plan.candidates(thr, opts)
        }
    }
}

/// Per-coordinate parts of `c_j` for two product-form weight models:
/// `c_j = G(omega_j) prod_k L_k R_k^{j_k}` with `L = lambda_b / lambda_a`, `R = rho_a / rho_b`.
struct PairFactors {
    l: Sequence,
    r: Sequence,
    cap: Option<u32>,
}

impl PairFactors {
    fn new(fa: &FactorWeights, fb: &FactorWeights) -> Self {
        let cap = match (fa.levels, fb.levels) {
            (Some(x), Some(y)) => Some(x.min(y)),
            (x, y) => x.or(y),
        };
        PairFactors {
            l: fb.lambda.ratio(&fa.lambda),
            r: fa.rho.ratio(&fb.rho),
            cap,
        }
    }

    /// `L_k R_k^l`.
    fn level_factor(&self, k: u32, l: u32) -> f64 {
        self.l.get(k) * self.r.get(k).powi(l as i32)
    }

    /// `(sup_l L_k R_k^l, decreasing in l)`; errors if levels are unbounded without decay.
    fn level_sup(&self, k: u32) -> Result<(f64, bool)> {
        let r = self.r.get(k);
        if r < 1.0 {
            return Ok((self.level_factor(k, 1), true));
        }
        match self.cap {
            Some(c) => Ok((self.level_factor(k, c).max(self.level_factor(k, 1)), false)),
            None => Err(EpsDimError::NotCompact(format!(
                "c_j does not decay in the level of coordinate {k}"
            ))),
        }
    }

    fn list_candidates(
        &self,
        fa: &FactorWeights,
        fb: &FactorWeights,
        thr: f64,
        opts: &EnumOptions,
    ) -> Result<(Vec<IndexVector>, bool)> {
        let mut omegas: BTreeSet<SupportSet> = BTreeSet::new();
        for g in [&fa.gamma, &fb.gamma] {
            if let Some(list) = g.listed() {
                omegas.extend(list.into_iter().map(|(w, _)| w));
            }
        }
        let counter = Counter {
            seen: AtomicUsize::new(0),
            stop: AtomicBool::new(false),
            opts,
        };
        let mut out = Vec::new();
        for omega in omegas {
            if opts.restrict.is_some_and(|d| omega.max_coord() > d) {
                continue;
            }
            let (ga, gb) = (fa.gamma.value(&omega), fb.gamma.value(&omega));
            if ga == 0.0 || gb == 0.0 {
                continue;
            }
            let coords: Vec<u32> = omega.iter().collect();
            let mut sups = Vec::with_capacity(coords.len());
            let mut decreasing = Vec::with_capacity(coords.len());
            for &k in &coords {
                let (s, dec) = self.level_sup(k)?;
                sups.push(s);
                decreasing.push(dec);
            }
            // suffix[i] = prod_{i' >= i} sup
            let mut suffix = vec![1.0; coords.len() + 1];
            for i in (0..coords.len()).rev() {
                suffix[i] = suffix[i + 1] * sups[i];
            }
            let mut levels = Vec::with_capacity(coords.len());
            let done = self.list_dfs(&coords, &suffix, &decreasing, ga / gb, 0, &mut levels, thr * (1.0 - SLACK), &mut out, &counter)?;
            if !done {
                return Ok((out, true));
            }
        }
        Ok((out, false))
    }

    #[allow(clippy::too_many_arguments)]
    fn list_dfs(
        &self,
        coords: &[u32],
        suffix: &[f64],
        decreasing: &[bool],
        p: f64,
        pos: usize,
        levels: &mut Vec<u32>,
        thr: f64,
        out: &mut Vec<IndexVector>,
        counter: &Counter,
    ) -> Result<bool> {
        if pos == coords.len() {
            if p >= thr {
                out.push(IndexVector::new(coords.iter().copied().zip(levels.iter().copied())).expect("1-based"));
                return counter.bump();
            }
            return Ok(true);
        }
        let k = coords[pos];
        let mut l = 1;
        loop {
            if self.cap.is_some_and(|c| l > c) {
                break;
            }
            let v = p * self.level_factor(k, l);
            if v * suffix[pos + 1] >= thr {
                levels.push(l);
                let go = self.list_dfs(coords, suffix, decreasing, v, pos + 1, levels, thr, out, counter)?;
                levels.pop();
                if !go {
                    return Ok(false);
                }
            } else if decreasing[pos] {
                break;
            }
            l += 1;
        }
        Ok(true)
    }
}

/// Depth-first search over supports in increasing coordinate order, for product-type
/// `gamma` on both sides. `psi_k(l) = G_k L_k R_k^l`; beyond `horizon` the per-coordinate
/// suprema are at most 1 and nonincreasing, which bounds the search.
struct ProductPlan<'a> {
    pair: &'a PairFactors,
    g: Sequence,
    order: Option<usize>,
    sup: Vec<f64>,
    decreasing: Vec<bool>,
    suffix: Vec<f64>,
    horizon: usize,
}

impl<'a> ProductPlan<'a> {
    fn new(pair: &'a PairFactors, fa: &FactorWeights, fb: &FactorWeights) -> Result<Self> {
        let ga = fa.gamma.coordinate_weights().expect("product-type gamma");
        let gb = fb.gamma.coordinate_weights().expect("product-type gamma");
        let g = ga.ratio(gb);
        let order = match (finite_order(&fa.gamma), finite_order(&fb.gamma)) {
            (Some(x), Some(y)) => Some(x.min(y)),
            (x, y) => x.or(y),
        };
        let mut head = [g.head_len(), pair.l.head_len(), pair.r.head_len()].into_iter().max().unwrap_or(0);
        let mut horizon = head;
        if !g.tail().is_zero() {
            let rt = pair.r.tail();
            let tail_sup = if rt.is_nonincreasing() && rt.limit() < 1.0 {
                // levels beyond the first only shrink c once R_k < 1
                let mut k = head + 1;
                while rt.value(k) >= 1.0 {
                    k += 1;
                    if k > MAX_HORIZON {
                        return Err(EpsDimError::CertificateRequired("level ratio stays above 1 too long".into()));
                    }
                }
                head = k - 1;
                g.mul(&pair.l).mul(&pair.r)
            } else {
                let nondecreasing = rt.r >= 1.0 && rt.p <= 0.0;
                match pair.cap {
                    None => {
                        return Err(EpsDimError::NotCompact(
                            "c_j does not decay in the levels of infinitely many coordinates".into(),
                        ))
                    }
                    Some(c) if nondecreasing && rt.value(head + 1) >= 1.0 => g.mul(&pair.l).mul(&pair.r.powf(c as f64)),
                    Some(_) => {
                        return Err(EpsDimError::CertificateRequired(
                            "level ratios are not eventually monotone".into(),
                        ))
                    }
                }
            };
            let t = tail_sup.tail();
            if t.limit() > 0.0 {
                return Err(EpsDimError::NotCompact(format!(
                    "sup_l c_(l e_k) tends to {} > 0 as k grows",
                    t.limit()
                )));
            }
            if !t.is_nonincreasing() {
                return Err(EpsDimError::CertificateRequired(
                    "coordinate factors are not eventually nonincreasing".into(),
                ));
            }
            // past this point every per-coordinate supremum is at most 1
            let mut k = head + 1;
            let mut step = 1;
            while t.value(k) > 1.0 {
                k += step;
                step *= 2;
                if k > MAX_HORIZON {
                    return Err(EpsDimError::CertificateRequired("coordinate factors decay too slowly".into()));
                }
            }
            horizon = head.max(k - 1);
        }
        let mut sup = Vec::with_capacity(horizon);
        let mut decreasing = Vec::with_capacity(horizon);
        for k in 1..=horizon as u32 {
            let gk = g.get(k);
            if gk == 0.0 {
                sup.push(0.0);
                decreasing.push(true);
                continue;
            }
            let (s, dec) = pair.level_sup(k)?;
            sup.push(gk * s);
            decreasing.push(dec);
        }
        let mut suffix = vec![1.0; horizon + 2];
        for k in (1..=horizon).rev() {
            suffix[k] = suffix[k + 1] * sup[k - 1].max(1.0);
        }
        Ok(ProductPlan {
            pair,
            g,
            order,
            sup,
            decreasing,
            suffix,
            horizon,
        })
    }

    fn sup(&self, k: u32) -> Result<(f64, bool)> {
        if (k as usize) <= self.horizon {
            return Ok((self.sup[k as usize - 1], self.decreasing[k as usize - 1]));
        }
        let gk = self.g.get(k);
        if gk == 0.0 {
            return Ok((0.0, true));
        }
        let (s, dec) = self.pair.level_sup(k)?;
        Ok((gk * s, dec))
    }

    /// `prod_{k' >= k} max(1, sup_k')`.
    fn suffix(&self, k: u32) -> f64 {
        self.suffix.get(k as usize).copied().unwrap_or(1.0)
    }

    fn candidates(&self, thr: f64, opts: &EnumOptions) -> Result<(Vec<IndexVector>, bool)> {
        let thr = thr * (1.0 - SLACK);
        let counter = Counter {
            seen: AtomicUsize::new(0),
            stop: AtomicBool::new(false),
            opts,
        };
        let firsts = self.children(1.0, 0, thr, opts.restrict)?;
        let mut out = vec![IndexVector::zero()];
        counter.bump()?;
        let run = |k: u32, out: &mut Vec<IndexVector>| -> Result<bool> {
            let mut j = Vec::new();
            self.branch(&mut j, 1.0, k, thr, opts.restrict, out, &counter)
        };
        if opts.allow_truncation {
            for k in firsts {
                if !run(k, &mut out)? {
                    return Ok((out, true));
                }
            }
            return Ok((out, false));
        }
        let parts: Vec<Vec<IndexVector>> = firsts
            .into_par_iter()
            .map(|k| {
                let mut part = Vec::new();
                run(k, &mut part)?;
                Ok(part)
            })
            .collect::<Result<_>>()?;
        out.extend(parts.into_iter().flatten());
        Ok((out, false))
    }

    /// Coordinates `k > k0` worth trying after a partial product `p`.
    fn children(&self, p: f64, k0: u32, thr: f64, restrict: Option<u32>) -> Result<Vec<u32>> {
        let mut ks = Vec::new();
        let mut k = k0 + 1;
        loop {
            if restrict.is_some_and(|d| k > d) {
                break;
            }
            let (s, _) = self.sup(k)?;
            if p * s * self.suffix(k + 1) >= thr {
                ks.push(k);
            } else if k as usize > self.horizon {
                break;
            }
            k += 1;
        }
        Ok(ks)
    }

    #[allow(clippy::too_many_arguments)]
    fn branch(
        &self,
        j: &mut Vec<(u32, u32)>,
        p: f64,
        k: u32,
        thr: f64,
        restrict: Option<u32>,
        out: &mut Vec<IndexVector>,
        counter: &Counter,
    ) -> Result<bool> {
        let gk = self.g.get(k);
        let (_, decreasing) = self.sup(k)?;
        let after = self.suffix(k + 1);
        let mut l = 1;
        loop {
            if self.pair.cap.is_some_and(|c| l > c) {
                break;
            }
            let v = p * gk * self.pair.level_factor(k, l);
            if v * after >= thr {
                j.push((k, l));
                if v >= thr {
                    out.push(IndexVector::new(j.iter().copied()).expect("1-based"));
                    if !counter.bump()? {
                        j.pop();
                        return Ok(false);
                    }
                }
                if self.order.is_none_or(|m| j.len() < m) {
                    for next in self.children(v, k, thr, restrict)? {
                        if !self.branch(j, v, next, thr, restrict, out, counter)? {
                            j.pop();
                            return Ok(false);
                        }
                    }
                }
                j.pop();
            } else if decreasing {
                break;
            }
            l += 1;
        }
        Ok(true)
    }
}

fn finite_order(g: &GammaModel) -> Option<usize> {
    match g {
        GammaModel::FiniteOrder { order, .. } => Some(*order),
        _ => None,
    }
}

/// One support set's contribution to the spline epsilon-dimension.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SplineTerm {
    pub omega: SupportSet,
    /// Largest `m = |j|_1 - |omega|` with `c_j >= eps^2`.
    pub m: u32,
    /// `sum_{m' <= m} 2^{m'} C(m' + |omega| - 1, |omega| - 1)`.
    pub count: u128,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SplineEpsDim {
    pub eps: f64,
    /// Exact epsilon-dimension.
    pub n: u128,
    /// `1 + 2 sum_omega (2|omega|)^{m(omega)}`.
    pub upper_bound: f64,
    pub terms: Vec<SplineTerm>,
}

fn binomial(n: u64, k: u64) -> u128 {
    let k = k.min(n - k.min(n));
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Closed-form epsilon-dimension of spline-smoothness weights (constant `s`, `lambda`)
/// against `b = 1` with spline dimensions, counted per support set.
///
/// For each `omega` with `gamma_omega > 0`, the members with support `omega` are the
/// `j >= 1_omega` with `|j|_1 - |omega| <= m(omega)`, and there are
/// `C(m + |omega| - 1, |omega| - 1)` of them at each `m`, each of dimension `2^m`.
pub fn spline_eps_dimension(
    gamma: &GammaModel,
    s: f64,
    lambda: f64,
    eps: f64,
    omega_cap: Option<usize>,
    opts: &EnumOptions,
) -> Result<SplineEpsDim> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(EpsDimError::InvalidEps(eps));
    }
    let gamma = match (gamma, omega_cap) {
        (GammaModel::Product(g), Some(m)) => GammaModel::FiniteOrder { order: m, gamma: g.clone() },
        (GammaModel::FiniteOrder { order, gamma }, Some(m)) => GammaModel::FiniteOrder {
            order: (*order).min(m),
            gamma: gamma.clone(),
        },
        (GammaModel::Table(map), Some(m)) => GammaModel::Table(map.iter().filter(|(w, _)| w.len() <= m).map(|(w, v)| (w.clone(), *v)).collect()),
        (g, None) => g.clone(),
    };
    let a = WeightModel::spline(gamma.clone(), &PerCoord::Constant(s), &PerCoord::Constant(lambda))?;
    // level-one indices 1_omega with c >= eps^2 are exactly the omega with m(omega) >= 0
    let level_one = match &a {
        WeightModel::Spline(f) => {
            let mut capped = f.clone();
            capped.levels = Some(1);
            WeightModel::Spline(FactorWeights::new(capped.gamma, capped.lambda, capped.rho, Some(1)))
        }
        _ => unreachable!("spline constructor"),
    };
    let b = WeightModel::unit();
    let (ones, truncated) = enumerate_jc_eps(&level_one, &b, eps, DecayCertificate::Auto, opts)?;
    if truncated {
        return Err(EpsDimError::EnumerationCap { cap: opts.cap });
    }
    let thr = eps * eps;
    let mut n: u128 = 1;
    let mut bound = 1.0;
    let mut terms = Vec::new();
    let four_s = 4f64.powf(s);
    for j in ones.iter().filter(|j| !j.is_zero()) {
        let omega = j.support();
        let w = omega.len() as i32;
        let g = gamma.value(&omega);
        let c = |m: u32| g * (lambda * four_s).powi(-w) * 4f64.powf(-s * m as f64);
        let x = (g * (four_s * lambda).powi(-w)).powf(1.0 / (2.0 * s)) * eps.powf(-1.0 / s);
        let mut m = x.log2().floor().max(0.0) as u32;
        // settle floating-point ties against the defining inequality
        while c(m + 1) >= thr {
            m += 1;
        }
        while m > 0 && c(m) < thr {
            m -= 1;
        }
        let wl = omega.len() as u64;
        let mut count: u128 = 0;
        for mm in 0..=m as u64 {
            count += (1u128 << mm) * binomial(mm + wl - 1, wl - 1);
        }
        n += count;
        bound += 2.0 * (2.0 * omega.len() as f64).powi(m as i32);
        terms.push(SplineTerm { omega, m, count });
    }
    Ok(SplineEpsDim {
        eps,
        n,
        upper_bound: bound,
        terms,
    })
}
