//! Per-coordinate sequences `x_1, x_2, ...` with an explicit head and an analytic
//! tail, plus certified infinite sums, products `prod (1 + x_k)` and elementary
//! symmetric functions over them.
//!
//! Tails have the form `x_k = c * k^(-p) * r^k`. That family is closed under
//! products, quotients and real powers, which covers every weight family the
//! crate ships (power decay, geometric decay, constants, finite support).

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeriesError {
    #[error("sequence parameter {name} = {value} is invalid: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
}

/// Analytic tail `x_k = c * k^(-p) * r^k`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decay {
    pub c: f64,
    pub p: f64,
    pub r: f64,
}

impl Decay {
    pub const ZERO: Decay = Decay {
        c: 0.0,
        p: 0.0,
        r: 1.0,
    };

    pub fn new(c: f64, p: f64, r: f64) -> Result<Self, SeriesError> {
        if !(c.is_finite() && c >= 0.0) {
            return Err(SeriesError::InvalidParameter {
                name: "c",
                value: c,
                reason: "must be finite and nonnegative",
            });
        }
        if !p.is_finite() {
            return Err(SeriesError::InvalidParameter {
                name: "p",
                value: p,
                reason: "must be finite",
            });
        }
        if !(r.is_finite() && r >= 0.0) {
            return Err(SeriesError::InvalidParameter {
                name: "r",
                value: r,
                reason: "must be finite and nonnegative",
            });
        }
        if c == 0.0 || r == 0.0 {
            return Ok(Self::ZERO);
        }
        Ok(Decay { c, p, r })
    }

    pub fn is_zero(&self) -> bool {
        self.c == 0.0
    }

    pub fn value(&self, k: usize) -> f64 {
        if self.c == 0.0 {
            return 0.0;
        }
        let kf = k as f64;
        // log form avoids overflow of k^p * r^k for large k
        let log = self.c.ln() - self.p * kf.ln() + kf * self.r.ln();
        log.exp()
    }

    /// True if `x_k` is nonincreasing in `k` for every `k >= 1`.
    pub fn is_nonincreasing(&self) -> bool {
        self.c == 0.0 || (self.p >= 0.0 && self.r <= 1.0)
    }

    /// `lim_{k -> inf} x_k`, possibly infinite.
    pub fn limit(&self) -> f64 {
        if self.c == 0.0 || self.r < 1.0 {
            0.0
        } else if self.r > 1.0 {
            f64::INFINITY
        } else if self.p > 0.0 {
            0.0
        } else if self.p == 0.0 {
            self.c
        } else {
            f64::INFINITY
        }
    }

    pub fn powf(&self, alpha: f64) -> Decay {
        if self.c == 0.0 {
            return Self::ZERO;
        }
        if alpha == 0.0 {
            return Decay {
                c: 1.0,
                p: 0.0,
                r: 1.0,
            };
        }
        Decay {
            c: self.c.powf(alpha),
            p: self.p * alpha,
            r: self.r.powf(alpha),
        }
    }

    pub fn mul(&self, other: &Decay) -> Decay {
        if self.c == 0.0 || other.c == 0.0 {
            return Self::ZERO;
        }
        Decay {
            c: self.c * other.c,
            p: self.p + other.p,
            r: self.r * other.r,
        }
    }

    /// `x_k / y_k`, zero wherever either tail is zero.
    pub fn ratio(&self, other: &Decay) -> Decay {
        if self.c == 0.0 || other.c == 0.0 {
            return Self::ZERO;
        }
        Decay {
            c: self.c / other.c,
            p: self.p - other.p,
            r: self.r / other.r,
        }
    }

    /// `sum_{k > from} x_k`, or `None` if the series diverges.
    pub fn sum_after(&self, from: usize) -> Option<f64> {
        if self.c == 0.0 {
            return Some(0.0);
        }
        if self.r > 1.0 || (self.r == 1.0 && self.p <= 1.0) {
            return None;
        }
        if self.r == 1.0 {
            return Some(self.c * hurwitz_zeta(self.p, (from + 1) as f64));
        }
        if self.p == 0.0 {
            return Some(self.c * self.r.powf((from + 1) as f64) / (1.0 - self.r));
        }
        let mut sum = 0.0;
        let mut k = from + 1;
        loop {
            let term = self.value(k);
            sum += term;
            let step = self.r * (k as f64 / (k + 1) as f64).powf(self.p);
            // For p >= 0 later ratios stay below r; for p < 0 they shrink toward r.
            let bound = if self.p >= 0.0 { self.r } else { step };
            if bound < 1.0 {
                let rem = term * bound / (1.0 - bound);
                if term == 0.0 || rem <= 1e-17 * sum {
                    return Some(sum);
                }
            }
            k += 1;
        }
    }
}

/// Hurwitz zeta `sum_{n >= 0} (a + n)^(-s)` for `s > 1`, `a > 0`, by Euler-Maclaurin.
pub fn hurwitz_zeta(s: f64, a: f64) -> f64 {
    assert!(s > 1.0 && a > 0.0, "hurwitz_zeta needs s > 1 and a > 0");
    // B_{2j} / (2j)!
    const B: [f64; 8] = [
        1.0 / 12.0,
        -1.0 / 720.0,
        1.0 / 30240.0,
        -1.0 / 1209600.0,
        1.0 / 47900160.0,
        -691.0 / 1307674368000.0,
        1.0 / 74724249600.0,
        -3617.0 / 10670622842880000.0,
    ];
    // shift far enough that the asymptotic corrections shrink for large s too
    let n = 12usize.max(s.ceil() as usize + 8);
    let mut sum = 0.0;
    for i in 0..n {
        sum += (a + i as f64).powf(-s);
    }
    let x = a + n as f64;
    sum += x.powf(1.0 - s) / (s - 1.0) + 0.5 * x.powf(-s);
    let mut rising = s; // s (s+1) ... (s + 2j - 2)
    let mut xp = x.powf(-s - 1.0);
    for (j, b) in B.iter().enumerate() {
        let term = b * rising * xp;
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
        let jj = (2 * j + 1) as f64;
        rising *= (s + jj) * (s + jj + 1.0);
        xp /= x * x;
    }
    sum
}

/// A nonnegative sequence `x_1, x_2, ...`: explicit head values followed by a [`Decay`] tail.
#[derive(Clone, Debug, PartialEq)]
pub struct Sequence {
    head: Vec<f64>,
    tail: Decay,
}

impl Sequence {
    pub fn new(head: Vec<f64>, tail: Decay) -> Result<Self, SeriesError> {
        for &v in &head {
            if !(v.is_finite() && v >= 0.0) {
                return Err(SeriesError::InvalidParameter {
                    name: "head",
                    value: v,
                    reason: "entries must be finite and nonnegative",
                });
            }
        }
        Ok(Sequence { head, tail })
    }

    /// `x_k = c * k^(-p)`.
    pub fn power(c: f64, p: f64) -> Result<Self, SeriesError> {
        Self::new(Vec::new(), Decay::new(c, p, 1.0)?)
    }

    /// `x_k = c * r^k`.
    pub fn geometric(c: f64, r: f64) -> Result<Self, SeriesError> {
        Self::new(Vec::new(), Decay::new(c, 0.0, r)?)
    }

    pub fn constant(c: f64) -> Result<Self, SeriesError> {
        Self::new(Vec::new(), Decay::new(c, 0.0, 1.0)?)
    }

    /// `x_k = values[k-1]` and zero beyond.
    pub fn finite(values: Vec<f64>) -> Result<Self, SeriesError> {
        Self::new(values, Decay::ZERO)
    }

    pub fn ones() -> Self {
        Sequence {
            head: Vec::new(),
            tail: Decay {
                c: 1.0,
                p: 0.0,
                r: 1.0,
            },
        }
    }

    pub fn head(&self) -> &[f64] {
        &self.head
    }

    pub fn tail(&self) -> Decay {
        self.tail
    }

    /// Index of the last head entry; the tail formula applies to every `k > head_len`.
    pub fn head_len(&self) -> usize {
        self.head.len()
    }

    /// `x_k` for `k >= 1`.
    pub fn get(&self, k: u32) -> f64 {
        debug_assert!(k >= 1);
        let k = k as usize;
        if k <= self.head.len() {
            self.head[k - 1]
        } else {
            self.tail.value(k)
        }
    }

    /// Replaces the head with one of length `len`, filled from the current values.
    pub fn materialize(&self, len: usize) -> Sequence {
        let len = len.max(self.head.len());
        Sequence {
            head: (1..=len as u32).map(|k| self.get(k)).collect(),
            tail: self.tail,
        }
    }

    /// Last index with a nonzero value, if the support is finite.
    pub fn support_end(&self) -> Option<usize> {
        if !self.tail.is_zero() {
            return None;
        }
        Some(
            self.head
                .iter()
                .rposition(|&v| v != 0.0)
                .map(|i| i + 1)
                .unwrap_or(0),
        )
    }

    pub fn limit(&self) -> f64 {
        self.tail.limit()
    }

    pub fn scale(&self, s: f64) -> Sequence {
        self.map_zip(&Sequence::constant(s).expect("scale must be nonnegative"), |a, b| a * b, Decay::mul)
    }

    pub fn powf(&self, alpha: f64) -> Sequence {
        Sequence {
            head: self.head.iter().map(|v| if *v == 0.0 { 0.0 } else { v.powf(alpha) }).collect(),
            tail: self.tail.powf(alpha),
        }
    }

    pub fn mul(&self, other: &Sequence) -> Sequence {
        self.map_zip(other, |a, b| a * b, Decay::mul)
    }

    /// `x_k / y_k`, zero wherever either side is zero.
    pub fn ratio(&self, other: &Sequence) -> Sequence {
        self.map_zip(
            other,
            |a, b| if a == 0.0 || b == 0.0 { 0.0 } else { a / b },
            Decay::ratio,
        )
    }

    fn map_zip(&self, other: &Sequence, f: impl Fn(f64, f64) -> f64, t: impl Fn(&Decay, &Decay) -> Decay) -> Sequence {
        let len = self.head.len().max(other.head.len());
        Sequence {
            head: (1..=len as u32).map(|k| f(self.get(k), other.get(k))).collect(),
            tail: t(&self.tail, &other.tail),
        }
    }

    /// `sum_k x_k`, `None` if divergent.
    pub fn sum(&self) -> Option<f64> {
        self.sum_after(0)
    }

    /// `sum_{k > from} x_k`, `None` if divergent.
    pub fn sum_after(&self, from: usize) -> Option<f64> {
        let head: f64 = self.head.iter().skip(from).sum();
        let tail = self.tail.sum_after(from.max(self.head.len()))?;
        Some(head + tail)
    }

    /// Largest value, `None` if unbounded.
    pub fn sup(&self) -> Option<f64> {
        self.top_values(1).map(|v| v.first().copied().unwrap_or(0.0))
    }

    /// The `m` largest values in decreasing order (padded with zeros), `None` if unbounded.
    pub fn top_values(&self, m: usize) -> Option<Vec<f64>> {
        let mut cand: Vec<f64> = self.head.clone();
        let start = self.head.len() + 1;
        if !self.tail.is_zero() {
            if self.tail.is_nonincreasing() {
                cand.extend((start..start + m).map(|k| self.tail.value(k)));
            } else if self.tail.r < 1.0 {
                // p < 0 with r < 1: log-concave in k, so one peak
                let mut k = start;
                let mut prev = self.tail.value(k);
                cand.push(prev);
                let mut after_peak = 0;
                while after_peak < m {
                    k += 1;
                    let v = self.tail.value(k);
                    cand.push(v);
                    if v <= prev {
                        after_peak += 1;
                    }
                    prev = v;
                }
            } else {
                return None;
            }
        }
        cand.sort_by(|a, b| b.partial_cmp(a).expect("finite values"));
        cand.resize(m, 0.0);
        Some(cand)
    }
}

impl Default for Sequence {
    fn default() -> Self {
        Sequence {
            head: Vec::new(),
            tail: Decay::ZERO,
        }
    }
}

/// JSON form of a [`Sequence`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SequenceSpec {
    Power {
        c: f64,
        p: f64,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        head: Vec<f64>,
    },
    Geometric {
        c: f64,
        r: f64,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        head: Vec<f64>,
    },
    Constant {
        c: f64,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        head: Vec<f64>,
    },
    Decay {
        c: f64,
        p: f64,
        r: f64,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        head: Vec<f64>,
    },
    Finite {
        values: Vec<f64>,
    },
}

impl TryFrom<SequenceSpec> for Sequence {
    type Error = SeriesError;

    fn try_from(spec: SequenceSpec) -> Result<Self, Self::Error> {
        match spec {
            SequenceSpec::Power { c, p, head } => Sequence::new(head, Decay::new(c, p, 1.0)?),
            SequenceSpec::Geometric { c, r, head } => Sequence::new(head, Decay::new(c, 0.0, r)?),
            SequenceSpec::Constant { c, head } => Sequence::new(head, Decay::new(c, 0.0, 1.0)?),
            SequenceSpec::Decay { c, p, r, head } => Sequence::new(head, Decay::new(c, p, r)?),
            SequenceSpec::Finite { values } => Sequence::finite(values),
        }
    }
}

impl From<&Sequence> for SequenceSpec {
    fn from(s: &Sequence) -> Self {
        let t = s.tail;
        let head = s.head.clone();
        if t.is_zero() {
            SequenceSpec::Finite { values: head }
        } else if t.r == 1.0 && t.p == 0.0 {
            SequenceSpec::Constant { c: t.c, head }
        } else if t.r == 1.0 {
            SequenceSpec::Power { c: t.c, p: t.p, head }
        } else if t.p == 0.0 {
            SequenceSpec::Geometric { c: t.c, r: t.r, head }
        } else {
            SequenceSpec::Decay {
                c: t.c,
                p: t.p,
                r: t.r,
                head,
            }
        }
    }
}

impl Serialize for Sequence {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        SequenceSpec::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Sequence {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let spec = SequenceSpec::deserialize(deserializer)?;
        Sequence::try_from(spec).map_err(serde::de::Error::custom)
    }
}

/// Terms `x_k >= 0` whose power sums over a tail are available in closed form.
pub trait TermSource {
    /// `x_k` for `k >= 1`.
    fn term(&self, k: usize) -> f64;

    /// Beyond this index the terms are nonincreasing in `k` (if [`TermSource::tail_monotone`]).
    fn regular_from(&self) -> usize;

    fn tail_monotone(&self) -> bool;

    /// `sum_{k > from} x_k^m` for `from >= regular_from()`, `None` if divergent.
    fn power_sum_after(&self, m: u32, from: usize) -> Option<f64>;
}

impl TermSource for Sequence {
    fn term(&self, k: usize) -> f64 {
        self.get(k as u32)
    }

    fn regular_from(&self) -> usize {
        self.head.len()
    }

    fn tail_monotone(&self) -> bool {
        self.tail.is_nonincreasing()
    }

    fn power_sum_after(&self, m: u32, from: usize) -> Option<f64> {
        debug_assert!(from >= self.head.len());
        self.tail.powf(m as f64).sum_after(from)
    }
}

/// `x_k = g_k * h(rho_k)` where `h(rho) = sum_{n=1}^{L} rho^n` (`L` may be infinite,
/// giving `rho / (1 - rho)`).
///
/// This is the per-coordinate tail mass of the spline weight family.
#[derive(Clone, Debug)]
pub struct ScaledGeometric {
    pub g: Sequence,
    pub rho: Sequence,
    pub levels: Option<u32>,
}

impl ScaledGeometric {
    pub fn h(&self, rho: f64) -> f64 {
        geometric_partial(rho, 1, self.levels)
    }

    /// Coefficients of `h(z)^m` up to degree `deg`.
    fn h_power_coeffs(&self, m: u32, deg: usize) -> Vec<f64> {
        let mut base = vec![0.0; deg + 1];
        let top = self.levels.map(|l| l as usize).unwrap_or(deg).min(deg);
        for c in base.iter_mut().take(top + 1).skip(1) {
            *c = 1.0;
        }
        let mut out = vec![0.0; deg + 1];
        out[0] = 1.0;
        for _ in 0..m {
            let mut next = vec![0.0; deg + 1];
            for (i, &a) in out.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (j, &b) in base.iter().enumerate().take(deg + 1 - i) {
                    next[i + j] += a * b;
                }
            }
            out = next;
        }
        out
    }
}

/// `sum_{n=from}^{levels} rho^n` (`levels = None` for an infinite ladder).
pub fn geometric_partial(rho: f64, from: u32, levels: Option<u32>) -> f64 {
    match levels {
        Some(l) if from > l => 0.0,
        Some(l) => {
            if rho == 1.0 {
                (l - from + 1) as f64
            } else {
                (rho.powi(from as i32) - rho.powi(l as i32 + 1)) / (1.0 - rho)
            }
        }
        None => {
            if rho >= 1.0 {
                f64::INFINITY
            } else {
                rho.powi(from as i32) / (1.0 - rho)
            }
        }
    }
}

impl TermSource for ScaledGeometric {
    fn term(&self, k: usize) -> f64 {
        let g = self.g.get(k as u32);
        if g == 0.0 {
            return 0.0;
        }
        g * self.h(self.rho.get(k as u32))
    }

    fn regular_from(&self) -> usize {
        self.g.head_len().max(self.rho.head_len())
    }

    fn tail_monotone(&self) -> bool {
        self.g.tail().is_nonincreasing() && self.rho.tail().is_nonincreasing()
    }

    fn power_sum_after(&self, m: u32, from: usize) -> Option<f64> {
        let gt = self.g.tail();
        if gt.is_zero() {
            return Some(0.0);
        }
        let rt = self.rho.tail();
        if rt.r == 1.0 && rt.p == 0.0 {
            let h = self.h(rt.c);
            if !h.is_finite() {
                return None;
            }
            return gt.powf(m as f64).sum_after(from).map(|s| s * h.powi(m as i32));
        }
        // rho_k decays: expand h(rho)^m = sum_n c_n rho^n and sum each power tail
        let rho_max = rt.value(from + 1);
        if rho_max >= 1.0 || !rt.is_nonincreasing() {
            return None;
        }
        let gm = gt.powf(m as f64);
        let mut deg = 64usize;
        loop {
            let coeffs = self.h_power_coeffs(m, deg);
            let mut total = 0.0;
            let mut last = 0.0;
            for (n, &c) in coeffs.iter().enumerate().skip(m as usize) {
                if c == 0.0 {
                    continue;
                }
                let s = gm.mul(&rt.powf(n as f64)).sum_after(from)?;
                last = c * s;
                total += last;
            }
            let capped = self.levels.is_some_and(|l| (l as usize) * (m as usize) <= deg);
            if capped || last <= 1e-17 * total || deg >= 4096 {
                return Some(total);
            }
            deg *= 2;
        }
    }
}

/// Bound on the tail terms below which the log and Newton series are summed.
const SMALL: f64 = 0.25;
const LOG_TERMS: u32 = 30;

/// First index `K >= min_from` with `x_k <= SMALL` for all `k > K`, if the tail gets there.
fn small_cutoff<S: TermSource + ?Sized>(src: &S, min_from: usize) -> Option<usize> {
    if !src.tail_monotone() {
        return None;
    }
    let mut k = src.regular_from().max(min_from);
    let mut step = 1usize;
    // x is nonincreasing past regular_from: gallop then bisect
    if src.term(k + 1) <= SMALL {
        return Some(k);
    }
    loop {
        let probe = k + step;
        if src.term(probe + 1) <= SMALL {
            let (mut lo, mut hi) = (k, probe);
            while hi - lo > 1 {
                let mid = lo + (hi - lo) / 2;
                if src.term(mid + 1) <= SMALL {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Some(hi);
        }
        k = probe;
        step *= 2;
        if step > 1 << 40 {
            return None;
        }
    }
}

/// `sum_k log(1 + x_k)` over `k` not in `skip`; `None` if the product diverges.
pub fn log_prod_one_plus<S: TermSource + ?Sized>(src: &S, skip: &[u32]) -> Option<f64> {
    src.power_sum_after(1, src.regular_from())?;
    let skip_max = skip.iter().copied().max().unwrap_or(0) as usize;
    let cut = small_cutoff(src, skip_max)?;
    let mut total = 0.0;
    for k in 1..=cut {
        if !skip.contains(&(k as u32)) {
            total += src.term(k).ln_1p();
        }
    }
    for n in 1..=LOG_TERMS {
        let p = src.power_sum_after(n, cut)?;
        let t = p / n as f64;
        if n % 2 == 1 {
            total += t;
        } else {
            total -= t;
        }
        if t <= 1e-18 * total.abs() {
            break;
        }
    }
    Some(total)
}

/// Elementary symmetric functions `e_0..=e_rmax` of the terms not in `skip`.
pub fn esf<S: TermSource + ?Sized>(src: &S, skip: &[u32], rmax: usize) -> Option<Vec<f64>> {
    let skip_max = skip.iter().copied().max().unwrap_or(0) as usize;
    let cut = small_cutoff(src, skip_max)?;
    let mut head = vec![0.0; rmax + 1];
    head[0] = 1.0;
    for k in 1..=cut {
        if skip.contains(&(k as u32)) {
            continue;
        }
        let x = src.term(k);
        if x == 0.0 {
            continue;
        }
        for r in (1..=rmax).rev() {
            head[r] += x * head[r - 1];
        }
    }
    // tail via Newton's identities r e_r = sum_i (-1)^(i-1) e_{r-i} P_i
    let mut powers = Vec::with_capacity(rmax);
    for i in 1..=rmax {
        powers.push(src.power_sum_after(i as u32, cut)?);
    }
    let mut tail = vec![0.0; rmax + 1];
    tail[0] = 1.0;
    for r in 1..=rmax {
        let mut acc = 0.0;
        for i in 1..=r {
            let t = tail[r - i] * powers[i - 1];
            if i % 2 == 1 {
                acc += t;
            } else {
                acc -= t;
            }
        }
        tail[r] = (acc / r as f64).max(0.0);
    }
    let mut out = vec![0.0; rmax + 1];
    for (i, &a) in head.iter().enumerate() {
        for (j, &b) in tail.iter().enumerate().take(rmax + 1 - i) {
            out[i + j] += a * b;
        }
    }
    Some(out)
}

/// `sum_{r > m} e_r` over all terms, `None` if the full product diverges.
pub fn esf_tail<S: TermSource + ?Sized>(src: &S, m: usize) -> Option<f64> {
    let log_total = log_prod_one_plus(src, &[])?;
    let total = log_total.exp();
    let low = esf(src, &[], m)?;
    let below: f64 = low.iter().sum();
    if below <= 0.5 * total {
        return Some((total - below).max(0.0));
    }
    // e_r <= P_1^r / r!, so the tail beyond R is at most P_1^(R+1)/(R+1)! * exp(P_1)
    let reg = src.regular_from();
    let p1 = (1..=reg).map(|k| src.term(k)).sum::<f64>() + src.power_sum_after(1, reg)?;
    let mut rmax = (m + 8).max(16);
    loop {
        let e = esf(src, &[], rmax)?;
        let sum: f64 = e[m + 1..].iter().sum();
        let mut bound = p1.exp();
        for i in 1..=rmax + 1 {
            bound *= p1 / i as f64;
        }
        if bound <= 1e-17 * sum || sum == 0.0 && bound < 1e-300 || rmax >= 1024 {
            return Some(sum);
        }
        rmax *= 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zeta_values() {
        let pi = std::f64::consts::PI;
        assert_relative_eq!(hurwitz_zeta(2.0, 1.0), pi * pi / 6.0, max_relative = 1e-15);
        assert_relative_eq!(hurwitz_zeta(4.0, 1.0), pi.powi(4) / 90.0, max_relative = 1e-15);
        // zeta(2, 3) = pi^2/6 - 1 - 1/4
        assert_relative_eq!(hurwitz_zeta(2.0, 3.0), pi * pi / 6.0 - 1.25, max_relative = 1e-14);
        // large exponent is dominated by the first term
        assert_relative_eq!(hurwitz_zeta(80.0, 1.0), 1.0 + 2f64.powi(-80), max_relative = 1e-15);
    }

    #[test]
    fn decay_sums() {
        let g = Decay::new(1.0, 0.0, 0.5).unwrap();
        assert_relative_eq!(g.sum_after(0).unwrap(), 1.0, max_relative = 1e-15);
        assert_relative_eq!(g.sum_after(3).unwrap(), 0.125, max_relative = 1e-15);
        let mixed = Decay::new(2.0, 2.0, 0.5).unwrap();
        // 2 * Li_2(1/2) = 2 * (pi^2/12 - ln(2)^2/2)
        let li2 = std::f64::consts::PI.powi(2) / 12.0 - std::f64::consts::LN_2.powi(2) / 2.0;
        assert_relative_eq!(mixed.sum_after(0).unwrap(), 2.0 * li2, max_relative = 1e-14);
        let growing = Decay::new(1.0, -3.0, 0.5).unwrap();
        // sum k^3 / 2^k = 26
        assert_relative_eq!(growing.sum_after(0).unwrap(), 26.0, max_relative = 1e-13);
        assert!(Decay::new(1.0, 1.0, 1.0).unwrap().sum_after(0).is_none());
        assert!(Decay::new(1.0, 4.0, 1.5).unwrap().sum_after(0).is_none());
    }

    #[test]
    fn sequence_algebra() {
        let a = Sequence::power(1.0, 4.0).unwrap();
        let b = a.powf(0.5);
        assert_relative_eq!(b.get(3), 1.0 / 9.0, max_relative = 1e-15);
        let f = Sequence::finite(vec![1.0, 0.0, 3.0]).unwrap();
        assert_eq!(f.support_end(), Some(3));
        assert_eq!(f.ratio(&a).get(2), 0.0);
        assert_relative_eq!(f.ratio(&a).get(3), 243.0, max_relative = 1e-14);
        assert_eq!(f.mul(&a).get(4), 0.0);
        let mut top = Sequence::new(vec![0.1, 5.0], Decay::new(1.0, 0.0, 0.5).unwrap()).unwrap().top_values(3).unwrap();
        top.iter_mut().for_each(|v| *v = (*v * 1e12).round() / 1e12);
        assert_eq!(top, vec![5.0, 0.125, 0.1]);
        assert!(Sequence::power(1.0, -1.0).unwrap().sup().is_none());
    }

    #[test]
    fn json_round_trip() {
        let s: Sequence = serde_json::from_str(r#"{"kind":"power","c":1.0,"p":4.0}"#).unwrap();
        assert_eq!(s, Sequence::power(1.0, 4.0).unwrap());
        let back: Sequence = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
        assert!(serde_json::from_str::<Sequence>(r#"{"kind":"power","c":1.0,"p":4.0,"q":1}"#).is_err());
        assert!(serde_json::from_str::<Sequence>(r#"{"kind":"constant","c":-1.0}"#).is_err());
    }

    /// Explicit oracle over the first `n` terms.
    fn brute_log_prod(f: impl Fn(usize) -> f64, n: usize) -> f64 {
        (1..=n).map(|k| f(k).ln_1p()).sum()
    }

    #[test]
    fn log_prod_matches_explicit_sums() {
        // geometric tail converges fast enough to sum directly
        let s = Sequence::new(vec![3.0, 0.0], Decay::new(2.0, 0.0, 0.5).unwrap()).unwrap();
        let oracle = brute_log_prod(|k| s.get(k as u32), 200);
        assert_relative_eq!(log_prod_one_plus(&s, &[]).unwrap(), oracle, max_relative = 1e-14);
        let skipped = oracle - s.get(1).ln_1p() - s.get(5).ln_1p();
        assert_relative_eq!(log_prod_one_plus(&s, &[1, 5]).unwrap(), skipped, max_relative = 1e-14);

        // prod (1 + 1/k^2) = sinh(pi)/pi
        let p = Sequence::power(1.0, 2.0).unwrap();
        let pi = std::f64::consts::PI;
        assert_relative_eq!(log_prod_one_plus(&p, &[]).unwrap(), (pi.sinh() / pi).ln(), max_relative = 1e-14);

        assert!(log_prod_one_plus(&Sequence::power(1.0, 1.0).unwrap(), &[]).is_none());
        assert_eq!(log_prod_one_plus(&Sequence::default(), &[]), Some(0.0));
    }

    #[test]
    fn esf_matches_polynomial_expansion() {
        let v = vec![0.5, 2.0, 0.25, 1.0];
        let s = Sequence::finite(v.clone()).unwrap();
        let e = esf(&s, &[], 5).unwrap();
        // (1+.5z)(1+2z)(1+.25z)(1+z)
        let expected = [1.0, 3.75, 4.375, 1.875, 0.25, 0.0];
        for (a, b) in e.iter().zip(expected) {
            assert_relative_eq!(*a, b, max_relative = 1e-14);
        }
        let skip = esf(&s, &[2], 3).unwrap();
        // (1+.5z)(1+.25z)(1+z)
        for (a, b) in skip.iter().zip([1.0, 1.75, 0.875, 0.125]) {
            assert_relative_eq!(*a, b, max_relative = 1e-14);
        }
        // e_2 of 2^-k: (P1^2 - P2)/2 = (1 - 1/3)/2
        let g = Sequence::geometric(1.0, 0.5).unwrap();
        let e = esf(&g, &[], 2).unwrap();
        assert_relative_eq!(e[1], 1.0, max_relative = 1e-14);
        assert_relative_eq!(e[2], 1.0 / 3.0, max_relative = 1e-14);
    }

    #[test]
    fn esf_tail_small_weights() {
        // six equal terms x: sum_{r>m} C(6,r) x^r
        let x = 1.25e-5;
        let s = Sequence::finite(vec![x; 6]).unwrap();
        let binom = [1.0, 6.0, 15.0, 20.0, 15.0, 6.0, 1.0];
        for m in 0..6 {
            let expected: f64 = (m + 1..=6).map(|r| binom[r] * x.powi(r as i32)).sum();
            assert_relative_eq!(esf_tail(&s, m).unwrap(), expected, max_relative = 1e-13);
        }
        assert_eq!(esf_tail(&s, 6).unwrap(), 0.0);
    }

    #[test]
    fn scaled_geometric_power_sums() {
        // rho_k = 4^-k and g_k = 1: x_k = rho/(1-rho)
        let src = ScaledGeometric {
            g: Sequence::constant(1.0).unwrap(),
            rho: Sequence::geometric(1.0, 0.25).unwrap(),
            levels: None,
        };
        for m in 1..4u32 {
            let brute: f64 = (4..200).map(|k| src.term(k).powi(m as i32)).sum();
            assert_relative_eq!(src.power_sum_after(m, 3).unwrap(), brute, max_relative = 1e-13);
        }
        let constant_rho = ScaledGeometric {
            g: Sequence::geometric(1.0, 0.5).unwrap(),
            rho: Sequence::constant(0.25).unwrap(),
            levels: Some(2),
        };
        assert_relative_eq!(constant_rho.term(1), 0.5 * (0.25 + 0.0625), max_relative = 1e-15);
        assert_relative_eq!(constant_rho.power_sum_after(1, 0).unwrap(), 0.3125, max_relative = 1e-15);
    }
}
