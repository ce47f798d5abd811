//! Marked Poisson measure along the spine and the four subordinators read
//! off it.
//!
//! Marks `(t, x, u)` have intensity `dt ⊗ x π(dx) ⊗ du`. With the Gaussian
//! coefficient `β`,
//!
//! * `X'_t = βt + Σ x`
//! * `X^R_t = βt + Σ u x`
//! * `X̃_t = βt + Σ min(u, 1 − u) x`
//! * `σ_t = βt + Σ u (1 − u) x`
//!
//! with Laplace exponents `ψ' − βλ`, `ψ̃(λ)`, `ψ̃(λ/2) + βλ/2` and
//! `φ(λ) + βλ` when the drift vanishes.

use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy::{bridge_weight_integral, phi, psi_prime, psi_tilde, size_biased_integral_below, JumpFamily, LevyTriplet};

/// Upper bound on the expected number of marks in one draw.
pub const MAX_EXPECTED_MARKS: f64 = 1e7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mark {
    pub t: f64,
    pub x: f64,
    pub u: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpineMarks {
    pub marks: Vec<Mark>,
    pub horizon: f64,
    pub beta: f64,
}

/// `∫_{x ≥ x_min} x π(dx)`.
pub fn truncated_intensity(triplet: &LevyTriplet, x_min: f64) -> f64 {
    match &triplet.jumps {
        JumpFamily::None => 0.0,
        JumpFamily::Stable { alpha, scale } => {
            let c = LevyTriplet::stable_density_constant(*alpha, *scale);
            c * x_min.powf(1.0 - alpha) / (alpha - 1.0)
        }
        JumpFamily::Tabulated { atoms } => atoms.iter().filter(|a| a.0 >= x_min).map(|&(s, rate)| s * rate).sum(),
    }
}

pub fn sample_spine_marks<R: Rng + ?Sized>(
    triplet: &LevyTriplet,
    horizon: f64,
    x_min: f64,
    rng: &mut R,
) -> Result<SpineMarks> {
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(Error::Validation(format!("horizon {horizon} must be finite and nonnegative")));
    }
    if !(x_min > 0.0) {
        return Err(Error::Validation(format!("truncation x_min = {x_min} must be positive")));
    }
    let beta = triplet.gaussian;
    let mean = horizon * truncated_intensity(triplet, x_min);
    if mean > MAX_EXPECTED_MARKS {
        return Err(Error::Budget(format!(
            "x_min = {x_min} gives {mean:.3e} expected marks, above {MAX_EXPECTED_MARKS:.0e}"
        )));
    }
    let count = if mean > 0.0 { Poisson::new(mean).expect("positive mean").sample(rng) as usize } else { 0 };
    let mut marks = Vec::with_capacity(count);
    for _ in 0..count {
        let x = match &triplet.jumps {
            JumpFamily::Stable { alpha, .. } => {
                // Size-biased tail x^{−α} on [x_min, ∞) is Pareto of index α − 1.
                let v: f64 = 1.0 - rng.random::<f64>();
                x_min * v.powf(-1.0 / (alpha - 1.0))
            }
            JumpFamily::Tabulated { atoms } => {
                let eligible: Vec<(f64, f64)> = atoms.iter().filter(|a| a.0 >= x_min).copied().collect();
                let total: f64 = eligible.iter().map(|&(s, r)| s * r).sum();
                let mut target = rng.random::<f64>() * total;
                let mut pick = eligible.last().unwrap().0;
                for &(s, r) in &eligible {
                    if target < s * r {
                        pick = s;
                        break;
                    }
                    target -= s * r;
                }
                pick
            }
            JumpFamily::None => unreachable!("no marks without jumps"),
        };
        marks.push(Mark { t: rng.random::<f64>() * horizon, x, u: rng.random::<f64>() });
    }
    marks.sort_by(|a, b| a.t.partial_cmp(&b.t).unwrap());
    Ok(SpineMarks { marks, horizon, beta })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpineValues {
    pub xp: f64,
    pub xr: f64,
    pub xtilde: f64,
    pub sigma: f64,
}

pub fn spine_subordinators(sm: &SpineMarks, t: f64) -> Result<SpineValues> {
    if !(t >= 0.0 && t <= sm.horizon) {
        return Err(Error::OutOfRange { time: t, duration: sm.horizon });
    }
    let base = sm.beta * t;
    let mut v = SpineValues { xp: base, xr: base, xtilde: base, sigma: base };
    for m in sm.marks.iter().take_while(|m| m.t <= t) {
        v.xp += m.x;
        v.xr += m.u * m.x;
        v.xtilde += m.u.min(1.0 - m.u) * m.x;
        v.sigma += m.u * (1.0 - m.u) * m.x;
    }
    Ok(v)
}

impl SpineMarks {
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,x,u")?;
        for m in &self.marks {
            writeln!(out, "{},{},{}", m.t, m.x, m.u)?;
        }
        Ok(())
    }
}

/// Laplace exponents of the four subordinators at `λ`.
pub fn spine_exponent_targets(triplet: &LevyTriplet, lambda: f64) -> Result<SpineValues> {
    let beta = triplet.gaussian;
    Ok(SpineValues {
        xp: psi_prime(triplet, lambda)? - beta * lambda,
        xr: psi_tilde(triplet, lambda)?,
        xtilde: psi_tilde(triplet, lambda / 2.0)? + beta * lambda / 2.0,
        sigma: phi(triplet, lambda)? + beta * lambda,
    })
}

/// Contribution of the marks below `x_min` to each exponent.
pub fn truncation_correction(triplet: &LevyTriplet, x_min: f64, lambda: f64) -> SpineValues {
    // (1 − e^{−y})/y, stable for small y.
    let ratio = |y: f64| if y < 1e-8 { 1.0 - y / 2.0 } else { -(-y).exp_m1() / y };
    SpineValues {
        xp: size_biased_integral_below(triplet, x_min, |x| -(-lambda * x).exp_m1()),
        xr: size_biased_integral_below(triplet, x_min, |x| 1.0 - ratio(lambda * x)),
        xtilde: size_biased_integral_below(triplet, x_min, |x| 1.0 - ratio(lambda * x / 2.0)),
        sigma: size_biased_integral_below(triplet, x_min, |x| bridge_weight_integral(lambda * x)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaplaceCheck {
    pub lambda: f64,
    pub target: SpineValues,
    /// `−log E[e^{−λ X_T}] / T` plus the truncation correction.
    pub empirical: SpineValues,
    pub relative_error: SpineValues,
}

impl LaplaceCheck {
    pub fn worst_relative_error(&self) -> f64 {
        let e = self.relative_error;
        e.xp.max(e.xr).max(e.xtilde).max(e.sigma)
    }
}

/// Monte Carlo estimate of the four exponents at every `λ`, from
/// `replicas` independent marksets on `[0, horizon]`.
pub fn laplace_check<R: Rng + ?Sized>(
    triplet: &LevyTriplet,
    horizon: f64,
    x_min: f64,
    lambdas: &[f64],
    replicas: usize,
    rng: &mut R,
) -> Result<Vec<LaplaceCheck>> {
    let mut sums = vec![[0.0f64; 4]; lambdas.len()];
    for _ in 0..replicas {
        let sm = sample_spine_marks(triplet, horizon, x_min, rng)?;
        let v = spine_subordinators(&sm, horizon)?;
        for (acc, &lambda) in sums.iter_mut().zip(lambdas) {
            acc[0] += (-lambda * v.xp).exp();
            acc[1] += (-lambda * v.xr).exp();
            acc[2] += (-lambda * v.xtilde).exp();
            acc[3] += (-lambda * v.sigma).exp();
        }
    }
    let mut out = Vec::with_capacity(lambdas.len());
    for (acc, &lambda) in sums.iter().zip(lambdas) {
        let exponent = |s: f64| -(s / replicas as f64).ln() / horizon;
        let corr = truncation_correction(triplet, x_min, lambda);
        let empirical = SpineValues {
            xp: exponent(acc[0]) + corr.xp,
            xr: exponent(acc[1]) + corr.xr,
            xtilde: exponent(acc[2]) + corr.xtilde,
            sigma: exponent(acc[3]) + corr.sigma,
        };
        let target = spine_exponent_targets(triplet, lambda)?;
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
        let relative_error = SpineValues {
            xp: rel(empirical.xp, target.xp),
            xr: rel(empirical.xr, target.xr),
            xtilde: rel(empirical.xtilde, target.xtilde),
            sigma: rel(empirical.sigma, target.sigma),
        };
        out.push(LaplaceCheck { lambda, target, empirical, relative_error });
    }
    Ok(out)
}

/// Kolmogorov–Smirnov distance of a sample to the uniform law on `[0, 1]`.
pub fn ks_uniform(sample: &[f64]) -> f64 {
    let mut s = sample.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| ((i + 1) as f64 / n - x).max(x - i as f64 / n))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use proptest::prelude::*;

    #[test]
    fn empty_horizon_and_no_marks() {
        let tr = LevyTriplet::stable(1.5, 1.0).unwrap();
        let mut rng = stream_rng(1, 0);
        assert!(sample_spine_marks(&tr, 0.0, 0.01, &mut rng).unwrap().marks.is_empty());
        let sm = SpineMarks { marks: vec![], horizon: 1.0, beta: 0.0 };
        assert_eq!(spine_subordinators(&sm, 1.0).unwrap(), SpineValues { xp: 0.0, xr: 0.0, xtilde: 0.0, sigma: 0.0 });
        assert!(sample_spine_marks(&tr, 1.0, 1e-30, &mut rng).is_err());
    }

    #[test]
    fn mark_count_and_uniform_marks() {
        let tr = LevyTriplet::stable(1.5, 1.0).unwrap();
        let mut rng = stream_rng(2, 0);
        let expected = truncated_intensity(&tr, 0.05) * 2.0;
        let draws = 10_000;
        let mut total = 0usize;
        let mut us = Vec::new();
        for _ in 0..draws {
            let sm = sample_spine_marks(&tr, 2.0, 0.05, &mut rng).unwrap();
            total += sm.marks.len();
            us.extend(sm.marks.iter().map(|m| m.u));
            assert!(sm.marks.windows(2).all(|w| w[0].t <= w[1].t));
            assert!(sm.marks.iter().all(|m| m.t <= 2.0 && m.x >= 0.05));
        }
        let mean = total as f64 / draws as f64;
        let se = (expected / draws as f64).sqrt();
        assert!((mean - expected).abs() < 3.0 * se, "{mean} vs {expected}");
        assert!(ks_uniform(&us) < 1.628 / (us.len() as f64).sqrt());
    }

    #[test]
    fn exponents_match_with_gaussian_part() {
        let tr = LevyTriplet::new(0.0, 0.3, JumpFamily::Stable { alpha: 1.5, scale: 1.0 }).unwrap();
        let mut rng = stream_rng(3, 0);
        let rows = laplace_check(&tr, 1.0, 0.01, &[0.5, 1.0, 2.0], 20_000, &mut rng).unwrap();
        for row in &rows {
            assert!(row.worst_relative_error() < 0.05, "{row:?}");
        }
    }

    proptest! {
        #[test]
        fn pointwise_orderings(seed in any::<u64>(), beta in 0.0f64..1.0) {
            let tr = LevyTriplet::new(0.0, beta, JumpFamily::Stable { alpha: 1.3, scale: 1.0 }).unwrap();
            let mut rng = stream_rng(seed, 0);
            let sm = sample_spine_marks(&tr, 3.0, 0.02, &mut rng).unwrap();
            let mut prev: Option<SpineValues> = None;
            for i in 0..=30 {
                let v = spine_subordinators(&sm, i as f64 * 0.1).unwrap();
                prop_assert!(v.xr <= v.xp + 1e-12);
                prop_assert!(v.xtilde <= v.xr + 1e-12);
                prop_assert!(v.xtilde <= 2.0 * v.sigma + 1e-12);
                if let Some(p) = prev {
                    prop_assert!(p.xp <= v.xp && p.xr <= v.xr && p.xtilde <= v.xtilde && p.sigma <= v.sigma);
                }
                prev = Some(v);
            }
        }
    }
}
