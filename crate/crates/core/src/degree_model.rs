//! Joint in/out-degree distributions and degree sequences.
//!
//! A [`JointDegreePmf`] is a probability mass function `f(k, l)` over
//! (in-degree, out-degree) classes with bounded support that never contains
//! the isolated class `(0, 0)`. Degree sequences are drawn i.i.d. from such a
//! pmf and then repaired with [`balance_stubs`] so that the total number of
//! in-stubs equals the total number of out-stubs, a prerequisite for stub
//! matching.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, rng_from_seed};
use crate::scalar::Scalar;

/// A degree class: in-degree `k`, out-degree `l`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DegreeClass {
    pub k: u32,
    pub l: u32,
}

impl DegreeClass {
    pub const fn new(k: u32, l: u32) -> Self {
        Self { k, l }
    }

    pub fn is_isolated(self) -> bool {
        self.k == 0 && self.l == 0
    }
}

impl fmt::Display for DegreeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.k, self.l)
    }
}

impl From<(u32, u32)> for DegreeClass {
    fn from((k, l): (u32, u32)) -> Self {
        Self { k, l }
    }
}

/// Joint pmf `f(k, l)` with support sorted by `(k, l)`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDegreePmf<T> {
    classes: Vec<DegreeClass>,
    probs: Vec<T>,
    k_max: u32,
    l_max: u32,
}

impl<T: Scalar> JointDegreePmf<T> {
    /// Builds a pmf from `(class, mass)` pairs.
    ///
    /// Rejects non-positive or non-finite masses, duplicate classes, the
    /// `(0, 0)` class, and masses that do not sum to one.
    pub fn new(points: impl IntoIterator<Item = (DegreeClass, T)>) -> Result<Self> {
        let mut points: Vec<(DegreeClass, T)> = points.into_iter().collect();
        if points.is_empty() {
            return Err(Error::InvalidDistribution("empty support".into()));
        }
        points.sort_by_key(|&(c, _)| c);
        for w in points.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::InvalidDistribution(format!("duplicate class {}", w[0].0)));
            }
        }
        let mut total = T::zero();
        for &(c, p) in &points {
            if c.is_isolated() {
                return Err(Error::InvalidDistribution("class (0,0) is not allowed".into()));
            }
            if !(p > T::zero()) || !p.is_finite() {
                return Err(Error::InvalidDistribution(format!("mass {p} at {c} must be positive")));
            }
            total += p;
        }
        if (total - T::one()).abs() > T::normalization_slack() {
            return Err(Error::InvalidDistribution(format!("masses sum to {total}, not 1")));
        }
        let k_max = points.iter().map(|(c, _)| c.k).max().unwrap_or(0);
        let l_max = points.iter().map(|(c, _)| c.l).max().unwrap_or(0);
        let (classes, probs) = points.into_iter().unzip();
        Ok(Self { classes, probs, k_max, l_max })
    }

    /// Empirical pmf from class counts over `n` nodes.
    pub fn from_counts(counts: &BTreeMap<DegreeClass, usize>) -> Result<Self> {
        let n: usize = counts.values().sum();
        if n == 0 {
            return Err(Error::InvalidDistribution("no nodes to count".into()));
        }
        let n = T::from_count(n);
        Self::new(
            counts
                .iter()
                .filter(|(_, &c)| c > 0)
                .map(|(&class, &c)| (class, T::from_count(c) / n)),
        )
    }

    pub fn classes(&self) -> &[DegreeClass] {
        &self.classes
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn k_max(&self) -> u32 {
        self.k_max
    }

    pub fn l_max(&self) -> u32 {
        self.l_max
    }

    pub fn iter(&self) -> impl Iterator<Item = (DegreeClass, T)> + '_ {
        self.classes.iter().copied().zip(self.probs.iter().copied())
    }

    pub fn index_of(&self, class: DegreeClass) -> Option<usize> {
        self.classes.binary_search(&class).ok()
    }

    pub fn mass(&self, class: DegreeClass) -> T {
        self.index_of(class).map_or(T::zero(), |i| self.probs[i])
    }

    /// `E L = sum_{k,l} l f(k,l)`.
    pub fn mean_out(&self) -> T {
        self.iter().map(|(c, p)| T::lit(c.l as f64) * p).sum()
    }

    pub fn mean_in(&self) -> T {
        self.iter().map(|(c, p)| T::lit(c.k as f64) * p).sum()
    }

    /// In-degree `d` when every support point has `k = d`.
    pub fn deterministic_in_degree(&self) -> Option<u32> {
        let d = self.classes.first()?.k;
        self.classes.iter().all(|c| c.k == d).then_some(d)
    }
}

/// One-dimensional degree law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MarginalSpec {
    Deterministic { value: u32 },
    Uniform { lo: u32, hi: u32 },
    /// `p(k) ∝ k^-exponent` on `lo..=hi`.
    Zipf { lo: u32, hi: u32, exponent: f64 },
}

impl MarginalSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            MarginalSpec::Deterministic { .. } => Ok(()),
            MarginalSpec::Uniform { lo, hi } => check_range(lo, hi),
            MarginalSpec::Zipf { lo, hi, exponent } => {
                check_range(lo, hi)?;
                if lo == 0 {
                    return Err(Error::InvalidDistribution("zipf support must start at 1 or above".into()));
                }
                if !(exponent > 0.0) || !exponent.is_finite() {
                    return Err(Error::InvalidDistribution(format!(
                        "zipf exponent must be positive, got {exponent}"
                    )));
                }
                Ok(())
            }
        }
    }
}

fn check_range(lo: u32, hi: u32) -> Result<()> {
    if hi < lo {
        return Err(Error::InvalidDistribution(format!("empty range [{lo}, {hi}]")));
    }
    Ok(())
}

/// Probability vector over consecutive degrees `lo, lo+1, ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalPmf<T> {
    pub lo: u32,
    pub probs: Vec<T>,
}

impl<T: Scalar> MarginalPmf<T> {
    pub fn prob(&self, degree: u32) -> T {
        degree
            .checked_sub(self.lo)
            .and_then(|i| self.probs.get(i as usize).copied())
            .unwrap_or_else(T::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, T)> + '_ {
        self.probs.iter().enumerate().map(move |(i, &p)| (self.lo + i as u32, p))
    }
}

pub fn make_marginal_pmf<T: Scalar>(spec: &MarginalSpec) -> Result<MarginalPmf<T>> {
    spec.validate()?;
    match *spec {
        MarginalSpec::Deterministic { value } => Ok(MarginalPmf { lo: value, probs: vec![T::one()] }),
        MarginalSpec::Uniform { lo, hi } => {
            let n = (hi - lo + 1) as usize;
            let p = T::one() / T::from_count(n);
            Ok(MarginalPmf { lo, probs: vec![p; n] })
        }
        MarginalSpec::Zipf { lo, hi, exponent } => {
            let s = T::lit(exponent);
            let weights: Vec<T> = (lo..=hi).map(|k| T::lit(k as f64).powf(-s)).collect();
            let z: T = weights.iter().copied().sum();
            Ok(MarginalPmf { lo, probs: weights.into_iter().map(|w| w / z).collect() })
        }
    }
}

/// Independent joint law `f(k, l) = p_in(k) p_out(l)` with the `(0, 0)`
/// mass dropped and the rest renormalized.
pub fn product_joint<T: Scalar>(in_pmf: &MarginalPmf<T>, out_pmf: &MarginalPmf<T>) -> Result<JointDegreePmf<T>> {
    let mut points = Vec::with_capacity(in_pmf.probs.len() * out_pmf.probs.len());
    for (k, pk) in in_pmf.iter() {
        for (l, pl) in out_pmf.iter() {
            let p = pk * pl;
            if (k, l) != (0, 0) && p > T::zero() {
                points.push((DegreeClass::new(k, l), p));
            }
        }
    }
    let total: T = points.iter().map(|&(_, p)| p).sum();
    if points.is_empty() || !(total > T::zero()) {
        return Err(Error::InvalidDistribution("all joint mass lies on (0,0)".into()));
    }
    JointDegreePmf::new(points.into_iter().map(|(c, p)| (c, p / total)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments<T> {
    pub mean_in: T,
    pub mean_out: T,
    pub var_in: T,
    pub var_out: T,
}

pub fn moments<T: Scalar>(pmf: &JointDegreePmf<T>) -> Moments<T> {
    let mean_in = pmf.mean_in();
    let mean_out = pmf.mean_out();
    let mut var_in = T::zero();
    let mut var_out = T::zero();
    for (c, p) in pmf.iter() {
        let dk = T::lit(c.k as f64) - mean_in;
        let dl = T::lit(c.l as f64) - mean_out;
        var_in += p * dk * dk;
        var_out += p * dl * dl;
    }
    Moments { mean_in, mean_out, var_in, var_out }
}

/// Per-node in- and out-degrees.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeSequence {
    in_deg: Vec<u32>,
    out_deg: Vec<u32>,
}

impl DegreeSequence {
    pub fn new(in_deg: Vec<u32>, out_deg: Vec<u32>) -> Result<Self> {
        if in_deg.len() != out_deg.len() {
            return Err(Error::InvalidSequence(format!(
                "in-degree list has {} entries, out-degree list has {}",
                in_deg.len(),
                out_deg.len()
            )));
        }
        Ok(Self { in_deg, out_deg })
    }

    pub fn len(&self) -> usize {
        self.in_deg.len()
    }

    pub fn is_empty(&self) -> bool {
        self.in_deg.is_empty()
    }

    pub fn in_deg(&self) -> &[u32] {
        &self.in_deg
    }

    pub fn out_deg(&self) -> &[u32] {
        &self.out_deg
    }

    pub fn class_of(&self, node: usize) -> DegreeClass {
        DegreeClass::new(self.in_deg[node], self.out_deg[node])
    }

    pub fn in_stubs(&self) -> u64 {
        self.in_deg.iter().map(|&d| d as u64).sum()
    }

    pub fn out_stubs(&self) -> u64 {
        self.out_deg.iter().map(|&d| d as u64).sum()
    }

    pub fn is_balanced(&self) -> bool {
        self.in_stubs() == self.out_stubs()
    }

    pub fn census(&self) -> BTreeMap<DegreeClass, usize> {
        let mut counts = BTreeMap::new();
        for node in 0..self.len() {
            *counts.entry(self.class_of(node)).or_insert(0) += 1;
        }
        counts
    }
}

/// Draws `n` node classes i.i.d. from `pmf` by inverse-CDF lookup.
///
/// The pmf never carries `(0, 0)`, so this is equivalent to sampling the
/// marginals and rejecting isolated nodes.
pub fn sample_degree_sequence<T: Scalar>(pmf: &JointDegreePmf<T>, n: usize, seed: u64) -> Result<DegreeSequence> {
    if n == 0 {
        return Err(Error::InvalidSequence("node count must be at least 1".into()));
    }
    let mut cdf = Vec::with_capacity(pmf.len());
    let mut acc = 0.0f64;
    for &p in pmf.probs() {
        acc += p.as_f64();
        cdf.push(acc);
    }
    let last = cdf.len() - 1;
    let mut rng = rng_from_seed(seed);
    let mut in_deg = Vec::with_capacity(n);
    let mut out_deg = Vec::with_capacity(n);
    for _ in 0..n {
        let u: f64 = rng.random::<f64>() * acc;
        let idx = cdf.partition_point(|&c| c <= u).min(last);
        let c = pmf.classes()[idx];
        in_deg.push(c.k);
        out_deg.push(c.l);
    }
    DegreeSequence::new(in_deg, out_deg)
}

/// Equalizes stub totals by adding the shortfall to the smaller side, one
/// stub at a time, each to a node drawn uniformly with replacement.
pub fn balance_stubs(mut seq: DegreeSequence, seed: u64) -> DegreeSequence {
    let (ins, outs) = (seq.in_stubs(), seq.out_stubs());
    if ins == outs || seq.is_empty() {
        return seq;
    }
    let (side, deficit) = if ins < outs {
        (&mut seq.in_deg, outs - ins)
    } else {
        (&mut seq.out_deg, ins - outs)
    };
    let mut rng = rng_from_seed(seed);
    let n = side.len();
    for _ in 0..deficit {
        side[rng::index(&mut rng, n)] += 1;
    }
    seq
}

/// Fraction of nodes in each class.
pub fn empirical_pmf<T: Scalar>(seq: &DegreeSequence) -> Result<JointDegreePmf<T>> {
    let counts = seq.census();
    if counts.contains_key(&DegreeClass::new(0, 0)) {
        return Err(Error::InvalidSequence("sequence contains an isolated (0,0) node".into()));
    }
    JointDegreePmf::from_counts(&counts)
}
