//! Exact sampling of `m` i.i.d. nonnegative integer steps conditioned on
//! their sum.
//!
//! The law is first exponentially tilted so that its mean is `s/m`; this
//! leaves the conditional law unchanged and keeps every convolution power
//! concentrated around the values that are actually visited. The sequence
//! is then split recursively in two halves: the sum of the left half is
//! drawn from `P_{m₁}(s₁)·P_{m₂}(s − s₁)`, where `P_a` is the `a`-fold
//! convolution power. Sizes at a given depth only take two values, so only
//! `O(log m)` powers are needed.

use rand::Rng;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Infeasible {
    /// The target is outside `[m·min, m·max]` or the support is empty.
    Range,
    /// The target is not congruent to `m·min` modulo the support's gcd.
    Lattice { gcd: usize },
    /// No admissible configuration survived the numerical recursion.
    Unreachable,
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a
}

/// Draws `m` steps with unnormalized law `weights[k]` (k = 0, 1, ...)
/// conditioned on summing to `s`.
pub(crate) fn sample_conditioned_sum<R: Rng + ?Sized>(
    weights: &[f64],
    m: usize,
    s: usize,
    rng: &mut R,
) -> Result<Vec<usize>, Infeasible> {
    if m == 0 {
        return if s == 0 { Ok(Vec::new()) } else { Err(Infeasible::Range) };
    }
    let usable = &weights[..weights.len().min(s + 1)];
    let lo = usable.iter().position(|&w| w > 0.0).ok_or(Infeasible::Range)?;
    let hi = usable.iter().rposition(|&w| w > 0.0).unwrap();
    if s < m * lo {
        return Err(Infeasible::Range);
    }
    if s > m * hi {
        return Err(Infeasible::Range);
    }
    let target = s - m * lo;
    let g = (lo..=hi).filter(|&k| usable[k] > 0.0).fold(0, |g, k| gcd(g, k - lo));
    if g == 0 {
        return if target == 0 { Ok(vec![lo; m]) } else { Err(Infeasible::Range) };
    }
    if target % g != 0 {
        return Err(Infeasible::Lattice { gcd: g });
    }
    let t = target / g;
    let reduced: Vec<f64> = (0..=((hi - lo) / g).min(t)).map(|j| usable[lo + j * g]).collect();
    let jmax = reduced.len() - 1;
    let expand = |steps: Vec<usize>| steps.into_iter().map(|j| lo + j * g).collect::<Vec<_>>();

    if t == 0 {
        return Ok(vec![lo; m]);
    }
    if t == m * jmax {
        return Ok(vec![lo + jmax * g; m]);
    }
    if m == 1 {
        return if t <= jmax && reduced[t] > 0.0 {
            Ok(vec![lo + t * g])
        } else {
            Err(Infeasible::Unreachable)
        };
    }

    let base = tilted(&reduced, t as f64 / m as f64);
    let powers = convolution_powers(&base, m, t);
    let mut out = vec![0usize; m];
    let mut stack = vec![(0usize, m, t)];
    while let Some((offset, size, sum)) = stack.pop() {
        if size == 1 {
            if sum >= base.len() || base[sum] <= 0.0 {
                return Err(Infeasible::Unreachable);
            }
            out[offset] = sum;
            continue;
        }
        let (m1, m2) = (size / 2, size - size / 2);
        let (p1, p2) = (&powers[&m1], &powers[&m2]);
        let start = sum.saturating_sub(p2.len() - 1);
        let end = sum.min(p1.len() - 1);
        if start > end {
            return Err(Infeasible::Unreachable);
        }
        let w: Vec<f64> = (start..=end).map(|s1| p1[s1] * p2[sum - s1]).collect();
        let s1 = start + sample_index(&w, rng).ok_or(Infeasible::Unreachable)?;
        stack.push((offset + m1, m2, sum - s1));
        stack.push((offset, m1, s1));
    }
    Ok(expand(out))
}

fn sample_index<R: Rng + ?Sized>(w: &[f64], rng: &mut R) -> Option<usize> {
    let total: f64 = w.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return None;
    }
    let mut u = rng.random::<f64>() * total;
    for (i, &x) in w.iter().enumerate() {
        if u < x {
            return Some(i);
        }
        u -= x;
    }
    w.iter().rposition(|&x| x > 0.0)
}

/// Tilted and normalized copy of `p` whose mean is `target`, computed in log
/// space so large tilts do not overflow.
fn tilted(p: &[f64], target: f64) -> Vec<f64> {
    let logs: Vec<f64> = p.iter().map(|&x| if x > 0.0 { x.ln() } else { f64::NEG_INFINITY }).collect();
    let weights_at = |theta: f64| {
        let shifted: Vec<f64> = logs.iter().enumerate().map(|(k, &l)| l + theta * k as f64).collect();
        let top = shifted.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        shifted.into_iter().map(|l| (l - top).exp()).collect::<Vec<f64>>()
    };
    let mean_at = |theta: f64| {
        let w = weights_at(theta);
        let total: f64 = w.iter().sum();
        w.iter().enumerate().map(|(k, &x)| k as f64 * x).sum::<f64>() / total
    };
    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    while mean_at(lo) > target && lo > -1e6 {
        lo *= 2.0;
    }
    while mean_at(hi) < target && hi < 1e6 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mean_at(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let w = weights_at(0.5 * (lo + hi));
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

/// `P_a` for every size `a` met when halving `m` recursively, truncated to
/// `[0, cap]` and scaled to unit maximum.
fn convolution_powers(base: &[f64], m: usize, cap: usize) -> BTreeMap<usize, Vec<f64>> {
    let mut sizes = std::collections::BTreeSet::new();
    let mut frontier = vec![m];
    while let Some(a) = frontier.pop() {
        if sizes.insert(a) && a > 1 {
            frontier.push(a / 2);
            frontier.push(a - a / 2);
        }
    }
    let mut powers: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    let mut planner = FftPlanner::new();
    for &a in &sizes {
        let mut p = if a == 1 {
            base[..base.len().min(cap + 1)].to_vec()
        } else {
            convolve(&powers[&(a / 2)], &powers[&(a - a / 2)], cap, &mut planner)
        };
        let top = p.iter().cloned().fold(0.0, f64::max);
        if top > 0.0 {
            p.iter_mut().for_each(|x| *x /= top);
        }
        powers.insert(a, p);
    }
    powers
}

const DIRECT_LIMIT: usize = 48;

fn convolve(a: &[f64], b: &[f64], cap: usize, planner: &mut FftPlanner<f64>) -> Vec<f64> {
    let len = (a.len() + b.len() - 1).min(cap + 1);
    if a.len().min(b.len()) <= DIRECT_LIMIT {
        let mut out = vec![0.0; len];
        for (i, &x) in a.iter().enumerate() {
            if x == 0.0 || i >= len {
                continue;
            }
            for (j, &y) in b.iter().enumerate().take(len - i) {
                out[i + j] += x * y;
            }
        }
        return out;
    }
    let size = (a.len() + b.len() - 1).next_power_of_two();
    let fft = planner.plan_fft_forward(size);
    let ifft = planner.plan_fft_inverse(size);
    let mut fa: Vec<Complex<f64>> = a.iter().map(|&x| Complex::new(x, 0.0)).collect();
    fa.resize(size, Complex::new(0.0, 0.0));
    let mut fb: Vec<Complex<f64>> = b.iter().map(|&x| Complex::new(x, 0.0)).collect();
    fb.resize(size, Complex::new(0.0, 0.0));
    fft.process(&mut fa);
    fft.process(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    ifft.process(&mut fa);
    let scale = 1.0 / size as f64;
    let out: Vec<f64> = fa[..len].iter().map(|z| z.re * scale).collect();
    // Round-off of the transform is of order ε·‖a‖₁‖b‖₁; anything below a
    // generous multiple of it is indistinguishable from an exact zero.
    let sa: f64 = a.iter().sum();
    let sb: f64 = b.iter().sum();
    let floor = 1e-13 * sa * sb;
    out.into_iter().map(|x| if x > floor { x } else { 0.0 }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    #[test]
    fn forced_and_infeasible_cases() {
        let mut rng = stream_rng(1, 0);
        assert_eq!(sample_conditioned_sum(&[1.0, 1.0], 3, 0, &mut rng), Ok(vec![0, 0, 0]));
        assert_eq!(sample_conditioned_sum(&[1.0, 1.0], 3, 3, &mut rng), Ok(vec![1, 1, 1]));
        assert_eq!(sample_conditioned_sum(&[1.0, 1.0], 3, 4, &mut rng), Err(Infeasible::Range));
        assert_eq!(
            sample_conditioned_sum(&[1.0, 0.0, 1.0], 4, 3, &mut rng),
            Err(Infeasible::Lattice { gcd: 2 })
        );
        assert_eq!(sample_conditioned_sum(&[0.0, 0.0, 1.0], 2, 4, &mut rng), Ok(vec![2, 2]));
    }

    #[test]
    fn sums_are_exact_for_large_heavy_tailed_targets() {
        let mut rng = stream_rng(2, 0);
        let law: Vec<f64> = (0..5000).map(|k| if k == 0 { 0.6 } else { (k as f64).powf(-2.5) }).collect();
        for &(m, s) in &[(5000usize, 4999usize), (20001, 9000), (777, 2500)] {
            let steps = sample_conditioned_sum(&law, m, s, &mut rng).unwrap();
            assert_eq!(steps.len(), m);
            assert_eq!(steps.iter().sum::<usize>(), s);
        }
    }

    #[test]
    fn convolution_paths_agree() {
        let a: Vec<f64> = (0..300).map(|k| 1.0 / (1.0 + k as f64)).collect();
        let b: Vec<f64> = (0..200).map(|k| (-(k as f64) / 50.0).exp()).collect();
        let mut planner = FftPlanner::new();
        let fast = convolve(&a, &b, 10_000, &mut planner);
        let mut slow = vec![0.0; a.len() + b.len() - 1];
        for i in 0..a.len() {
            for j in 0..b.len() {
                slow[i + j] += a[i] * b[j];
            }
        }
        for (x, y) in fast.iter().zip(&slow) {
            assert!((x - y).abs() < 1e-10 * y.max(1e-3));
        }
    }
}
