//! Step distributions on `{−1, 0, 1, ...}`.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma, ln_gamma};

use crate::error::{Error, Result};

/// Probability mass function on `k ≥ −1`; `pmf[i]` is the mass of `k = i − 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawStepLaw")]
pub struct StepLaw {
    pmf: Vec<f64>,
    mean: f64,
    tail_index: Option<f64>,
}

#[derive(Deserialize)]
struct RawStepLaw {
    pmf: Vec<f64>,
    tail_index: Option<f64>,
}

impl TryFrom<RawStepLaw> for StepLaw {
    type Error = Error;
    fn try_from(raw: RawStepLaw) -> Result<Self> {
        StepLaw::new(raw.pmf, raw.tail_index)
    }
}

const MASS_TOL: f64 = 1e-12;

impl StepLaw {
    /// `pmf[i]` is the probability of the step `i − 1`.
    pub fn new(pmf: Vec<f64>, tail_index: Option<f64>) -> Result<Self> {
        if pmf.is_empty() || !(pmf[0] > 0.0) {
            return Err(Error::InvalidStepLaw("mass of the step -1 must be positive".into()));
        }
        if let Some(bad) = pmf.iter().position(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::InvalidStepLaw(format!("mass {} at step {} is not a probability", pmf[bad], bad as i64 - 1)));
        }
        let total: f64 = pmf.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidStepLaw(format!("masses sum to {total}, not 1")));
        }
        let mean = pmf.iter().enumerate().map(|(i, p)| (i as f64 - 1.0) * p).sum();
        Ok(Self { pmf, mean, tail_index })
    }

    /// Normalizes nonnegative masses, then folds the mass past the first
    /// index where the remaining tail drops below 1e−12 into that atom.
    pub fn from_masses(masses: Vec<f64>, tail_index: Option<f64>) -> Result<Self> {
        let total: f64 = masses.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::InvalidStepLaw("masses must have a positive finite total".into()));
        }
        let mut pmf: Vec<f64> = masses.into_iter().map(|m| m / total).collect();
        let mut tail = 0.0;
        let mut cut = pmf.len();
        while cut > 1 && tail + pmf[cut - 1] < MASS_TOL {
            tail += pmf[cut - 1];
            cut -= 1;
        }
        pmf.truncate(cut);
        *pmf.last_mut().unwrap() += tail;
        let total: f64 = pmf.iter().sum();
        pmf.iter_mut().for_each(|p| *p /= total);
        Self::new(pmf, tail_index)
    }

    /// `{−1: 1/2, +1: 1/2}`; codes uniform quadrangulations.
    pub fn plus_minus_one() -> Self {
        Self::new(vec![0.5, 0.0, 0.5], None).unwrap()
    }

    /// Centered law in the domain of attraction of the spectrally positive
    /// `α`-stable law: `ν(0) = p₀`, `ν(k) = C k^{−1−α}` for `k ≥ 1` and
    /// `ν(−1) = C ζ(α)`, with `C = (1 − p₀)/(ζ(α) + ζ(1+α))`.
    ///
    /// A positive `p₀` lets the number of `−1` steps be conditioned well
    /// below `n/2`. Steps above `k_max` are folded into the atom `k_max`;
    /// conditioning on a total below `k_max` makes the fold invisible.
    pub fn stable_domain(alpha: f64, zero_mass: f64, k_max: usize) -> Result<Self> {
        if !(alpha > 1.0 && alpha < 2.0) {
            return Err(Error::InvalidStepLaw(format!("stable index {alpha} outside (1, 2)")));
        }
        if !(0.0..1.0).contains(&zero_mass) {
            return Err(Error::InvalidStepLaw(format!("zero-step mass {zero_mass} outside [0, 1)")));
        }
        if k_max < 1 {
            return Err(Error::InvalidStepLaw("k_max must be at least 1".into()));
        }
        let c = (1.0 - zero_mass) / (zeta(alpha) + zeta(1.0 + alpha));
        let mut pmf = vec![0.0; k_max + 2];
        pmf[0] = c * zeta(alpha);
        pmf[1] = zero_mass;
        let mut head = pmf[0] + pmf[1];
        for k in 1..=k_max {
            pmf[k + 1] = c * (k as f64).powf(-1.0 - alpha);
            head += pmf[k + 1];
        }
        pmf[k_max + 1] += (1.0 - head).max(0.0);
        let total: f64 = pmf.iter().sum();
        pmf.iter_mut().for_each(|p| *p /= total);
        Self::new(pmf, Some(alpha))
    }

    /// Mass of the step `k`.
    pub fn prob(&self, k: i64) -> f64 {
        if k < -1 {
            return 0.0;
        }
        self.pmf.get((k + 1) as usize).copied().unwrap_or(0.0)
    }

    pub fn masses(&self) -> &[f64] {
        &self.pmf
    }

    pub fn max_step(&self) -> i64 {
        self.pmf.len() as i64 - 2
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn tail_index(&self) -> Option<f64> {
        self.tail_index
    }

    /// `1/Z_q` for Boltzmann laws; the asymptotic vertex-per-edge ratio.
    pub fn vertex_rate(&self) -> f64 {
        self.pmf[0]
    }
}

/// Weights `q_k = c κ^{k−1} Γ(k − 1/2 − α)/Γ(k + 1/2)` for `2 ≤ k ≤ k_max`,
/// `q_1 = 0`, with `κ = 1/(4α+2)` and `c = −√π / (2Γ(1/2 − α))`.
/// The returned vector holds `q_1, ..., q_{k_max}`. The weights decay like
/// `κ^k` and underflow to zero past `k ≈ 350`; use
/// [`explicit_stable_log_weights`] to build the step law.
pub fn explicit_stable_weights(alpha: f64, k_max: usize) -> Result<Vec<f64>> {
    Ok(explicit_stable_log_weights(alpha, k_max)?.into_iter().map(f64::exp).collect())
}

/// Natural logarithms of [`explicit_stable_weights`], with `−∞` for `q_1`.
pub fn explicit_stable_log_weights(alpha: f64, k_max: usize) -> Result<Vec<f64>> {
    if !(alpha > 1.0 && alpha < 2.0) {
        return Err(Error::InvalidStepLaw(format!("alpha = {alpha} outside (1, 2)")));
    }
    if (alpha - 1.5).abs() < 1e-12 {
        return Err(Error::GammaPole);
    }
    let kappa = explicit_kappa(alpha);
    let c = -std::f64::consts::PI.sqrt() / (2.0 * gamma(0.5 - alpha));
    let mut log_q = vec![f64::NEG_INFINITY; k_max];
    for k in 2..=k_max {
        let x = k as f64 - 0.5 - alpha;
        // For α > 3/2 the k = 2 argument of Γ is negative and the higher
        // weights come out negative.
        let sign = c.signum() * if x > 0.0 { 1.0 } else { gamma(x).signum() };
        if sign < 0.0 {
            return Err(Error::NonAdmissibleWeights(format!("q_{k} is negative for alpha = {alpha}")));
        }
        let log_gamma_x = if x > 0.0 { ln_gamma(x) } else { gamma(x).abs().ln() };
        log_q[k - 1] = c.abs().ln() + (k as f64 - 1.0) * kappa.ln() + log_gamma_x - ln_gamma(k as f64 + 0.5);
    }
    Ok(log_q)
}

/// Riemann zeta for real `s > 1` by Euler–Maclaurin summation.
fn zeta(s: f64) -> f64 {
    const N: usize = 32;
    let head: f64 = (1..N).map(|k| (k as f64).powf(-s)).sum();
    let n = N as f64;
    // Bernoulli corrections B₂/2!, B₄/4!, B₆/6!, B₈/8!.
    let mut tail = n.powf(1.0 - s) / (s - 1.0) + 0.5 * n.powf(-s);
    let coeffs = [1.0 / 12.0, -1.0 / 720.0, 1.0 / 30240.0, -1.0 / 1209600.0];
    let mut rising = s;
    let mut power = n.powf(-s - 1.0);
    for (j, c) in coeffs.iter().enumerate() {
        tail += c * rising * power;
        let m = 2.0 * j as f64;
        rising *= (s + m + 1.0) * (s + m + 2.0);
        power /= n * n;
    }
    head + tail
}

pub fn explicit_kappa(alpha: f64) -> f64 {
    1.0 / (4.0 * alpha + 2.0)
}

fn ln_binom(n: u64, k: u64) -> f64 {
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// Boltzmann step law `ν(k) = Z^k binom(2k+1, k+1) q_{k+1}`, `ν(−1) = 1/Z`,
/// where `Z > 1` is the smallest root of the normalization identity.
/// `q[i]` is the weight `q_{i+1}`.
pub fn nu_from_weights(q: &[f64]) -> Result<StepLaw> {
    if q.iter().any(|x| *x < 0.0 || !x.is_finite()) {
        return Err(Error::NonAdmissibleWeights("weights must be nonnegative and finite".into()));
    }
    nu_from_log_weights(&q.iter().map(|x| x.ln()).collect::<Vec<_>>())
}

/// [`nu_from_weights`] on `ln q_k`, for weights too small to represent.
pub fn nu_from_log_weights(log_q: &[f64]) -> Result<StepLaw> {
    if log_q.iter().any(|x| x.is_nan() || *x == f64::INFINITY) {
        return Err(Error::NonAdmissibleWeights("log-weights must be finite or -inf".into()));
    }
    let q_len = log_q.len();
    // ln of binom(2k+1, k+1) q_{k+1} for k = 0..q.len()−1.
    let log_terms: Vec<(usize, f64)> = log_q
        .iter()
        .enumerate()
        .filter(|(_, w)| w.is_finite())
        .map(|(k, w)| (k, ln_binom(2 * k as u64 + 1, k as u64 + 1) + w))
        .collect();
    if log_terms.is_empty() {
        return Err(Error::NonAdmissibleWeights("all weights vanish, only -1 steps are possible".into()));
    }
    // F(Z) = 1/Z + Σ Z^k binom(2k+1,k+1) q_{k+1} − 1 is convex on (0, ∞).
    let f = |z: f64| {
        let s: f64 = log_terms.iter().map(|&(k, l)| (l + k as f64 * z.ln()).exp()).sum();
        1.0 / z + s - 1.0
    };
    // F is convex, so its minimum on [1, 10⁶] is where F' changes sign.
    // Overflowing terms only occur to the right of the minimum.
    let f_prime = |z: f64| {
        let s: f64 = log_terms
            .iter()
            .filter(|(k, _)| *k > 0)
            .map(|&(k, l)| (l + (k as f64).ln() + (k as f64 - 1.0) * z.ln()).exp())
            .sum();
        s - 1.0 / (z * z)
    };
    let (mut a, mut b) = (1.0f64, 1e6f64);
    if f_prime(a) >= 0.0 {
        b = a;
    } else {
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if f_prime(mid) < 0.0 {
                a = mid;
            } else {
                b = mid;
            }
            if b - a < 1e-15 * b {
                break;
            }
        }
    }
    let z_min = 0.5 * (a + b);
    let f_min = f(z_min);
    // Critical weights touch zero at the minimum; truncating the sequence
    // leaves a small positive residue there, tolerated up to 1e−6.
    const CRITICAL_SLACK: f64 = 1e-6;
    if f_min > CRITICAL_SLACK {
        return Err(Error::NonAdmissibleWeights(format!("normalization has no root Z > 1 (min F = {f_min:e} at Z = {z_min})")));
    }
    let z = if f_min >= 0.0 {
        z_min
    } else {
        let (mut lo, mut hi) = (1.0, z_min);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-14 * hi {
                break;
            }
        }
        0.5 * (lo + hi)
    };
    let mut masses = vec![0.0; q_len + 1];
    masses[0] = 1.0 / z;
    for &(k, l) in &log_terms {
        masses[k + 1] = (l + k as f64 * z.ln()).exp();
    }
    StepLaw::from_masses(masses, None)
}

/// Target number of `−1` steps for the biconditioned regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VertexTarget {
    pub k: usize,
    pub r_n: f64,
    /// Unclamped value before rounding into `[1, n+1]`.
    pub raw: f64,
    pub clamped: bool,
}

/// `r_n = (α Γ(−α) n)^{1/α}`.
pub fn stable_scale(alpha: f64, n: usize) -> f64 {
    (alpha * gamma(-alpha) * n as f64).powf(1.0 / alpha)
}

/// `K_n = round(ν(−1) n + ϑ r_n (1 − ν(−1)))`, clamped to `[1, n+1]`.
pub fn k_n_for_theta(law: &StepLaw, alpha: f64, theta: f64, n: usize) -> Result<VertexTarget> {
    let p = law.vertex_rate();
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidStepLaw(format!("mass of -1 is {p}, must lie in (0, 1)")));
    }
    let r_n = stable_scale(alpha, n);
    let raw = p * n as f64 + theta * r_n * (1.0 - p);
    let rounded = raw.round();
    let k = rounded.clamp(1.0, n as f64 + 1.0);
    Ok(VertexTarget { k: k as usize, r_n, raw, clamped: k != rounded })
}
