//! Laplace exponents of spectrally positive Lévy processes and the
//! exponents derived from them.
//!
//! A [`LevyTriplet`] holds the drift `d`, the Gaussian coefficient `β` and a
//! jump-measure family; [`psi`] evaluates
//! `ψ(λ) = −dλ + βλ² + ∫ (e^{−λr} − 1 + λr) π(dr)`.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::quadrature::integrate;

/// Jump measure `π` of the process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum JumpFamily {
    None,
    /// `π(dr) = scale·α(α−1)/Γ(2−α) r^{−1−α} dr`, so the jump part of `ψ` is `scale·λ^α`.
    Stable { alpha: f64, scale: f64 },
    /// Finitely many atoms `(size, rate)`.
    Tabulated { atoms: Vec<(f64, f64)> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTriplet")]
pub struct LevyTriplet {
    pub drift: f64,
    pub gaussian: f64,
    pub jumps: JumpFamily,
}

#[derive(Deserialize)]
struct RawTriplet {
    drift: f64,
    gaussian: f64,
    jumps: JumpFamily,
}

impl TryFrom<RawTriplet> for LevyTriplet {
    type Error = Error;
    fn try_from(raw: RawTriplet) -> Result<Self> {
        LevyTriplet::new(raw.drift, raw.gaussian, raw.jumps)
    }
}

impl LevyTriplet {
    pub fn new(drift: f64, gaussian: f64, jumps: JumpFamily) -> Result<Self> {
        if !drift.is_finite() {
            return Err(Error::InvalidTriplet(format!("drift {drift} is not finite")));
        }
        if !(gaussian >= 0.0 && gaussian.is_finite()) {
            return Err(Error::InvalidTriplet(format!("gaussian coefficient {gaussian} must be >= 0")));
        }
        match &jumps {
            JumpFamily::None => {}
            JumpFamily::Stable { alpha, scale } => {
                if !(*alpha > 1.0 && *alpha < 2.0) {
                    return Err(Error::InvalidTriplet(format!("stable index {alpha} outside (1, 2)")));
                }
                if !(*scale > 0.0 && scale.is_finite()) {
                    return Err(Error::InvalidTriplet(format!("stable scale {scale} must be > 0")));
                }
            }
            JumpFamily::Tabulated { atoms } => {
                for &(size, rate) in atoms {
                    if !(size > 0.0 && rate > 0.0 && size.is_finite() && rate.is_finite()) {
                        return Err(Error::InvalidTriplet(format!(
                            "tabulated atom ({size}, {rate}) must have positive size and rate"
                        )));
                    }
                }
            }
        }
        Ok(Self { drift, gaussian, jumps })
    }

    /// `ψ(λ) = scale·λ^α` with no drift and no Gaussian part.
    pub fn stable(alpha: f64, scale: f64) -> Result<Self> {
        Self::new(0.0, 0.0, JumpFamily::Stable { alpha, scale })
    }

    pub fn brownian(gaussian: f64) -> Result<Self> {
        Self::new(0.0, gaussian, JumpFamily::None)
    }

    /// Paths have infinite variation iff there is a Gaussian part or the jump
    /// family is stable (tabulated measures are finite).
    pub fn has_infinite_variation(&self) -> bool {
        self.gaussian > 0.0 || matches!(self.jumps, JumpFamily::Stable { .. })
    }

    pub fn require_infinite_variation(&self) -> Result<()> {
        if self.has_infinite_variation() {
            Ok(())
        } else {
            Err(Error::FiniteVariation)
        }
    }

    /// Density constant `C` of a stable Lévy measure `π(dr) = C r^{−1−α} dr`.
    pub fn stable_density_constant(alpha: f64, scale: f64) -> f64 {
        scale * alpha * (alpha - 1.0) / gamma(2.0 - alpha)
    }
}

fn jump_psi(jumps: &JumpFamily, lambda: f64) -> f64 {
    match jumps {
        JumpFamily::None => 0.0,
        JumpFamily::Stable { alpha, scale } => scale * lambda.powf(*alpha),
        JumpFamily::Tabulated { atoms } => atoms
            .iter()
            .map(|&(s, rate)| rate * ((-lambda * s).exp_m1() + lambda * s))
            .sum(),
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidExponent(format!("lambda = {lambda} must be positive and finite")))
    }
}

fn finite(value: f64, lambda: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::ExponentOverflow { lambda })
    }
}

/// Laplace exponent `ψ(λ) = log E[e^{−λX₁}]`.
pub fn psi(triplet: &LevyTriplet, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    let value = -triplet.drift * lambda
        + triplet.gaussian * lambda * lambda
        + jump_psi(&triplet.jumps, lambda);
    finite(value, lambda)
}

/// Derivative `ψ'(λ)`; every supported family has a closed form.
pub fn psi_prime(triplet: &LevyTriplet, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    let jumps = match &triplet.jumps {
        JumpFamily::None => 0.0,
        JumpFamily::Stable { alpha, scale } => scale * alpha * lambda.powf(alpha - 1.0),
        JumpFamily::Tabulated { atoms } => atoms
            .iter()
            .map(|&(s, rate)| rate * s * -(-lambda * s).exp_m1())
            .sum(),
    };
    finite(-triplet.drift + 2.0 * triplet.gaussian * lambda + jumps, lambda)
}

/// Estimation route for the Blumenthal–Getoor exponents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExponentMethod {
    Analytic,
    NumericFit,
}

/// Lower and upper growth exponents of `ψ` at infinity, `1 ≤ γ ≤ η ≤ 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentPair {
    pub gamma_lower: f64,
    pub eta_upper: f64,
    pub method: ExponentMethod,
}

/// Exponents from the closed form of `ψ`: the heaviest component at infinity
/// wins, so a Gaussian part gives `(2, 2)` and a pure stable family `(α, α)`.
pub fn bg_exponents(triplet: &LevyTriplet) -> Result<ExponentPair> {
    triplet.require_infinite_variation()?;
    let exponent = if triplet.gaussian > 0.0 {
        2.0
    } else {
        match triplet.jumps {
            JumpFamily::Stable { alpha, .. } => alpha,
            _ => unreachable!("infinite variation without Gaussian part implies a stable family"),
        }
    };
    Ok(ExponentPair { gamma_lower: exponent, eta_upper: exponent, method: ExponentMethod::Analytic })
}

/// Grid estimator: min and max of the local slopes of `log ψ` against `log λ`
/// over `λ ∈ [10², 10⁸]`. These are estimators of the liminf/limsup, not the
/// limits themselves.
pub fn bg_exponents_numeric(triplet: &LevyTriplet) -> Result<ExponentPair> {
    triplet.require_infinite_variation()?;
    const POINTS: usize = 61;
    let mut logs = Vec::with_capacity(POINTS);
    let mut prev = f64::NEG_INFINITY;
    for i in 0..POINTS {
        let log_lambda = (2.0 + 6.0 * i as f64 / (POINTS - 1) as f64) * std::f64::consts::LN_10;
        let value = psi(triplet, log_lambda.exp())?;
        if !(value > 0.0) || value <= prev {
            return Err(Error::InvalidExponent(format!(
                "psi is not positive and increasing on the fitting grid (psi = {value} at lambda = {})",
                log_lambda.exp()
            )));
        }
        prev = value;
        logs.push((log_lambda, value.ln()));
    }
    let slopes = logs.windows(2).map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0));
    let (lo, hi) = slopes.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s), hi.max(s)));
    Ok(ExponentPair { gamma_lower: lo, eta_upper: hi, method: ExponentMethod::NumericFit })
}

/// Quantities derived from `ψ` that govern the spinal subordinators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedExponents {
    pub psi_prime: f64,
    pub psi_tilde: f64,
    pub phi: f64,
    pub phi_inverse_of_psi: f64,
}

pub fn derived_exponents(triplet: &LevyTriplet, lambda: f64) -> Result<DerivedExponents> {
    Ok(DerivedExponents {
        psi_prime: psi_prime(triplet, lambda)?,
        psi_tilde: psi_tilde(triplet, lambda)?,
        phi: phi(triplet, lambda)?,
        phi_inverse_of_psi: psi_inverse(triplet, lambda)?,
    })
}

pub fn psi_tilde(triplet: &LevyTriplet, lambda: f64) -> Result<f64> {
    Ok(psi(triplet, lambda)? / lambda)
}

const QUAD_REL_TOL: f64 = 1e-8;
const TAIL_TOL: f64 = 1e-12;

/// `g(y) = ∫₀¹ (1 − e^{−y u(1−u)}) du`.
pub(crate) fn bridge_weight_integral(y: f64) -> f64 {
    if y == 0.0 {
        return 0.0;
    }
    // For large y the integrand rises to 1 within u ≈ 1/y; breakpoints at
    // multiples of 1/y keep that layer resolved.
    let f = |u: f64| -(-y * u * (1.0 - u)).exp_m1();
    let mut total = 0.0;
    let mut left = 0.0;
    for scale in [1.0, 8.0, 64.0, 512.0, f64::INFINITY] {
        let right = (scale / y).min(0.5);
        if right > left {
            total += integrate(f, left, right, 1e-12, 0.0);
            left = right;
        }
    }
    2.0 * total
}

/// `φ(λ) = ∫ x π(dx) ∫₀¹ (1 − e^{−λu(1−u)x}) du`, the jump part of the
/// Laplace exponent of `σ`.
pub fn phi(triplet: &LevyTriplet, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    let value = match &triplet.jumps {
        JumpFamily::None => 0.0,
        JumpFamily::Tabulated { atoms } => atoms
            .iter()
            .map(|&(s, rate)| rate * s * bridge_weight_integral(lambda * s))
            .sum(),
        JumpFamily::Stable { alpha, scale } => {
            let c = LevyTriplet::stable_density_constant(*alpha, *scale);
            c * lambda.powf(alpha - 1.0) * stable_phi_kernel(*alpha)
        }
    };
    finite(value, lambda)
}

/// `∫_ℝ e^{(1−α)v} g(e^v) dv`; substituting `x = e^v/λ` turns the stable
/// `φ` integral into `C λ^{α−1}` times this λ-free kernel. The range is cut
/// where either tail falls below `TAIL_TOL`.
fn stable_phi_kernel(alpha: f64) -> f64 {
    let lower = (TAIL_TOL * 6.0 * (2.0 - alpha)).ln() / (2.0 - alpha);
    let upper = -(TAIL_TOL * (alpha - 1.0)).ln() / (alpha - 1.0);
    let f = |v: f64| ((1.0 - alpha) * v).exp() * bridge_weight_integral(v.exp());
    // Split at 0 where the integrand peaks so each half is smooth.
    integrate(f, lower, 0.0, QUAD_REL_TOL, 0.0) + integrate(f, 0.0, upper, QUAD_REL_TOL, 0.0)
}

/// Integrates `x·h(x)` against the Lévy measure restricted to `(0, x_max)`,
/// used for truncation corrections of the spinal exponents.
pub(crate) fn size_biased_integral_below<F: Fn(f64) -> f64>(
    triplet: &LevyTriplet,
    x_max: f64,
    h: F,
) -> f64 {
    match &triplet.jumps {
        JumpFamily::None => 0.0,
        JumpFamily::Tabulated { atoms } => atoms
            .iter()
            .filter(|(s, _)| *s < x_max)
            .map(|&(s, rate)| rate * s * h(s))
            .sum(),
        JumpFamily::Stable { alpha, scale } => {
            let c = LevyTriplet::stable_density_constant(*alpha, *scale);
            // x = x_max·e^v, v ∈ (−∞, 0]; integrand decays like e^{(2−α)v} when h(x) = O(x).
            let lower = (TAIL_TOL).ln() / (2.0 - alpha) - 10.0;
            let f = |v: f64| {
                let x = x_max * v.exp();
                c * x.powf(1.0 - alpha) * h(x)
            };
            integrate(f, lower, 0.0, 1e-10, 0.0)
        }
    }
}

/// `Φ(λ) = ψ^{−1}(λ)`: the unique `μ > 0` with `ψ(μ) = λ`, by bisection to
/// relative tolerance 1e−10 (`ψ` is convex with `ψ(0) = 0`).
pub fn psi_inverse(triplet: &LevyTriplet, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut expansions = 0;
    while psi(triplet, hi)? < lambda {
        lo = hi;
        hi *= 2.0;
        expansions += 1;
        if expansions > 1100 {
            return Err(Error::Bracket { lo, hi });
        }
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if psi(triplet, mid)? < lambda {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi {
            break;
        }
    }
    if hi - lo > 1e-10 * hi {
        return Err(Error::Bracket { lo, hi });
    }
    Ok(0.5 * (lo + hi))
}
