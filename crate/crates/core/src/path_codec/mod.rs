//! Łukasiewicz bridges and excursions: sampling, conditioning and the cyclic
//! shift turning one into the other.

mod conditioned;
mod step_law;

pub use step_law::{
    explicit_kappa, explicit_stable_log_weights, explicit_stable_weights, k_n_for_theta, nu_from_log_weights,
    nu_from_weights, stable_scale, StepLaw,
    VertexTarget,
};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use conditioned::{sample_conditioned_sum, Infeasible};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PathKind {
    Bridge,
    Excursion,
}

/// Increments `x_1, ..., x_{n+1} ≥ −1` summing to `−1`. For an excursion
/// the partial sums `W_k` stay nonnegative for `k ≤ n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LukasiewiczPath {
    increments: Vec<i32>,
    kind: PathKind,
}

impl LukasiewiczPath {
    pub fn new(increments: Vec<i32>, kind: PathKind) -> Result<Self> {
        if increments.is_empty() {
            return Err(Error::InvalidPath("a path has at least one increment".into()));
        }
        let mut w: i64 = 0;
        for (i, &x) in increments.iter().enumerate() {
            if x < -1 {
                return Err(Error::InvalidPath(format!("increment {x} at position {} is below -1", i + 1)));
            }
            w += x as i64;
            if kind == PathKind::Excursion && i + 1 < increments.len() && w < 0 {
                return Err(Error::InvalidPath(format!("excursion goes negative at step {}", i + 1)));
            }
        }
        if w != -1 {
            return Err(Error::InvalidPath(format!("increments sum to {w}, expected -1")));
        }
        Ok(Self { increments, kind })
    }

    pub fn increments(&self) -> &[i32] {
        &self.increments
    }

    pub fn kind(&self) -> PathKind {
        self.kind
    }

    /// Number of edges of the coded looptree.
    pub fn n(&self) -> usize {
        self.increments.len() - 1
    }

    /// Number of vertices, the count of `−1` steps.
    pub fn vertex_count(&self) -> usize {
        self.increments.iter().filter(|&&x| x == -1).count()
    }

    /// `W_0, ..., W_{n+1}`.
    pub fn partial_sums(&self) -> Vec<i64> {
        let mut out = Vec::with_capacity(self.increments.len() + 1);
        let mut w = 0i64;
        out.push(0);
        for &x in &self.increments {
            w += x as i64;
            out.push(w);
        }
        out
    }

    pub fn is_excursion(&self) -> bool {
        let sums = self.partial_sums();
        sums[1..sums.len() - 1].iter().all(|&w| w >= 0)
    }

    pub fn into_increments(self) -> Vec<i32> {
        self.increments
    }
}

/// Cyclic shift at the first time the partial sums reach their minimum.
pub fn vervaat(path: &LukasiewiczPath) -> LukasiewiczPath {
    let sums = path.partial_sums();
    let mut best = 1;
    for k in 2..sums.len() {
        if sums[k] < sums[best] {
            best = k;
        }
    }
    let x = path.increments();
    let mut rotated = Vec::with_capacity(x.len());
    rotated.extend_from_slice(&x[best..]);
    rotated.extend_from_slice(&x[..best]);
    LukasiewiczPath { increments: rotated, kind: PathKind::Excursion }
}

/// `n + 1` i.i.d. steps of `law` conditioned on summing to `−1`, drawn
/// exactly through the shifted steps `x + 1 ≥ 0` summing to `n`.
pub fn sample_bridge<R: Rng + ?Sized>(law: &StepLaw, n: usize, rng: &mut R) -> Result<LukasiewiczPath> {
    let steps = sample_conditioned_sum(law.masses(), n + 1, n, rng).map_err(|e| match e {
        Infeasible::Lattice { gcd } => Error::ParityInfeasible(format!(
            "{} steps cannot sum to -1: step support lives on a lattice of span {gcd}",
            n + 1
        )),
        Infeasible::Range => Error::ParityInfeasible(format!("{} steps cannot sum to -1 with this support", n + 1)),
        Infeasible::Unreachable => Error::InfeasibleConditioning(format!("sum -1 unreachable with {} steps", n + 1)),
    })?;
    let increments = steps.into_iter().map(|y| y as i32 - 1).collect();
    Ok(LukasiewiczPath { increments, kind: PathKind::Bridge })
}

/// Plain rejection sampler: draws whole sequences until one sums to `−1`.
/// Used as an independent check of [`sample_bridge`].
pub fn sample_bridge_rejection<R: Rng + ?Sized>(
    law: &StepLaw,
    n: usize,
    max_trials: u64,
    rng: &mut R,
) -> Result<LukasiewiczPath> {
    let dist = WeightedIndex::new(law.masses()).map_err(|e| Error::InvalidStepLaw(e.to_string()))?;
    let mut buf = vec![0i32; n + 1];
    for _ in 0..max_trials {
        let mut sum = 0i64;
        for x in buf.iter_mut() {
            *x = dist.sample(rng) as i32 - 1;
            sum += *x as i64;
        }
        if sum == -1 {
            return Ok(LukasiewiczPath { increments: buf, kind: PathKind::Bridge });
        }
    }
    Err(Error::RejectionBudget { trials: max_trials, acceptance_rate: 0.5 / max_trials as f64 })
}

/// Bridge with exactly `k` steps equal to `−1`: their positions are a
/// uniform `k`-subset and the remaining steps are i.i.d. from `law`
/// restricted to `{0, 1, ...}`, conditioned on summing to `k − 1`.
pub fn sample_bridge_biconditioned<R: Rng + ?Sized>(
    law: &StepLaw,
    n: usize,
    k: usize,
    rng: &mut R,
) -> Result<LukasiewiczPath> {
    if k < 1 || k > n + 1 {
        return Err(Error::InfeasibleConditioning(format!("K = {k} outside [1, {}]", n + 1)));
    }
    let nonneg = &law.masses()[1..];
    if nonneg.iter().all(|&p| p == 0.0) && k != n + 1 {
        return Err(Error::InfeasibleConditioning("the law has no nonnegative steps".into()));
    }
    let m = n + 1 - k;
    let steps = sample_conditioned_sum(nonneg, m, k - 1, rng).map_err(|e| {
        Error::InfeasibleConditioning(format!("{m} nonnegative steps cannot sum to {}: {e:?}", k - 1))
    })?;
    let mut increments = vec![0i32; n + 1];
    let mut negative = vec![false; n + 1];
    for i in rand::seq::index::sample(rng, n + 1, k) {
        negative[i] = true;
    }
    let mut next = steps.into_iter();
    for (x, neg) in increments.iter_mut().zip(&negative) {
        *x = if *neg { -1 } else { next.next().unwrap() as i32 };
    }
    Ok(LukasiewiczPath { increments, kind: PathKind::Bridge })
}

/// Fraction of odd increments among the first `n`.
pub fn parity_statistic(path: &LukasiewiczPath) -> f64 {
    let n = path.n();
    if n == 0 {
        return 0.0;
    }
    let odd = path.increments()[..n].iter().filter(|&&x| x.rem_euclid(2) == 1).count();
    odd as f64 / n as f64
}
