//! Good labellings of looptrees, the contour label process, and Gaussian
//! labels on the drift-interpolated coding path.

use std::io::Write;

use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::looptree::{Ancestor, InterpolatedPath, Looptree};

/// Integer labels per looptree vertex, root labelled 0.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoodLabelling {
    pub labels: Vec<i64>,
}

impl GoodLabelling {
    pub fn zero(lt: &Looptree) -> Self {
        Self { labels: vec![0; lt.vertex_count()] }
    }

    /// Checks the root label and every contour edge, oriented with the
    /// outer face on its left.
    pub fn validate(&self, lt: &Looptree) -> Result<()> {
        if self.labels.len() != lt.vertex_count() {
            return Err(Error::Validation(format!(
                "{} labels for {} vertices",
                self.labels.len(),
                lt.vertex_count()
            )));
        }
        if self.labels[lt.root() as usize] != 0 {
            return Err(Error::Validation("root label is not 0".into()));
        }
        for t in 0..lt.n() {
            let (u, v) = lt.edge(t);
            let step = self.labels[v as usize] - self.labels[u as usize];
            if step < -1 {
                return Err(Error::Validation(format!("edge e_{t} ({u} -> {v}) decreases the label by {}", -step)));
            }
        }
        Ok(())
    }
}

/// Uniform bridge of length `len` with increments `≥ −1`: a uniform weak
/// composition of `len` into `len` parts, shifted by −1.
pub fn sample_cycle_bridge<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<i64> {
    if len <= 1 {
        return vec![0; len];
    }
    // Stars and bars: `len − 1` bars among `2 len − 1` slots.
    let mut bars: Vec<usize> = index::sample(rng, 2 * len - 1, len - 1).into_vec();
    bars.sort_unstable();
    let mut out = Vec::with_capacity(len);
    let mut prev = 0usize;
    for &b in &bars {
        out.push((b - prev) as i64 - 1);
        prev = b + 1;
    }
    out.push((2 * len - 1 - prev) as i64 - 1);
    out
}

/// Independent uniform bridges on every cycle, read along the contour.
pub fn sample_good_labelling<R: Rng + ?Sized>(lt: &Looptree, rng: &mut R) -> GoodLabelling {
    let bridges: Vec<Vec<i64>> = lt.cycles().iter().map(|c| sample_cycle_bridge(c.length as usize, rng)).collect();
    let mut position = vec![0usize; bridges.len()];
    let step: Vec<i64> = lt
        .edge_cycle()
        .iter()
        .map(|&c| {
            let c = c as usize;
            let s = bridges[c][position[c]];
            position[c] += 1;
            s
        })
        .collect();
    labels_from_steps(lt, &step)
}

fn labels_from_steps(lt: &Looptree, step: &[i64]) -> GoodLabelling {
    let mut labels = vec![0i64; lt.vertex_count()];
    for (t, &s) in step.iter().enumerate() {
        let (u, v) = lt.edge(t);
        labels[v as usize] = labels[u as usize] + s;
    }
    GoodLabelling { labels }
}

/// Values on a time grid. Discrete processes live on `0, 1, ..., n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelProcess {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl LabelProcess {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "time,value")?;
        for (t, v) in self.times.iter().zip(&self.values) {
            writeln!(out, "{t},{v}")?;
        }
        Ok(())
    }

    /// Integer values, for the binary container. Fails on non-integers.
    pub fn integer_values(&self) -> Result<Vec<i32>> {
        self.values
            .iter()
            .map(|&v| {
                if v.fract() == 0.0 && v.abs() < i32::MAX as f64 {
                    Ok(v as i32)
                } else {
                    Err(Error::Format(format!("label value {v} is not a 32-bit integer")))
                }
            })
            .collect()
    }
}

/// `Z^n_k`: label of the vertex seen at contour time `k`.
pub fn label_process(lt: &Looptree, gl: &GoodLabelling) -> Result<LabelProcess> {
    gl.validate(lt)?;
    let values: Vec<f64> = lt.contour().iter().map(|&v| gl.labels[v as usize] as f64).collect();
    let times = (0..values.len()).map(|k| k as f64).collect();
    Ok(LabelProcess { times, values })
}

/// Time scaled by `1/n`, values by `(2 r_n)^{-1/2}`.
pub fn rescaled_label_process(z: &LabelProcess, r_n: f64) -> Result<LabelProcess> {
    if !(r_n > 0.0) {
        return Err(Error::Validation(format!("scale r_n must be positive, got {r_n}")));
    }
    let n = z.times.last().copied().unwrap_or(0.0);
    let factor = (2.0 * r_n).powf(-0.5);
    let times = z.times.iter().map(|&t| if n > 0.0 { t / n } else { 0.0 }).collect();
    let values = z.values.iter().map(|&v| v * factor).collect();
    Ok(LabelProcess { times, values })
}

/// Brownian snake driven by `heights` on a sorted grid: a centred Gaussian
/// vector with `Cov(Z_i, Z_j) = min(heights[i..=j])`.
///
/// Built along the grid with a stack holding the current ancestral line as
/// (height, value) pairs; branch points are filled in by Brownian bridge
/// interpolation between the stack entries around them.
pub fn snake_on_grid<R: Rng + ?Sized>(heights: &[f64], rng: &mut R) -> Vec<f64> {
    let mut out = Vec::with_capacity(heights.len());
    let mut line: Vec<(f64, f64)> = vec![(0.0, 0.0)];
    let mut prev_height: Option<f64> = None;
    for &h in heights {
        let h = h.max(0.0);
        let branch = prev_height.map_or(0.0, |p: f64| p.min(h));
        let mut above: Option<(f64, f64)> = None;
        while line.len() > 1 && line.last().unwrap().0 > branch {
            above = line.pop();
        }
        let (h0, v0) = *line.last().unwrap();
        let base = match above {
            Some((h1, v1)) if branch > h0 => {
                let w = (branch - h0) / (h1 - h0);
                let sd = ((branch - h0) * (h1 - branch) / (h1 - h0)).sqrt();
                let v = v0 + w * (v1 - v0) + sd * rng.sample::<f64, _>(StandardNormal);
                line.push((branch, v));
                v
            }
            _ => v0,
        };
        let v = if h > branch { base + (h - branch).sqrt() * rng.sample::<f64, _>(StandardNormal) } else { base };
        if h > line.last().unwrap().0 {
            line.push((h, v));
        }
        out.push(v);
        prev_height = Some(h);
    }
    out
}

/// Precomputed ancestral structure of a fixed grid, reusable across
/// replicas of the Gaussian labels.
#[derive(Debug, Clone)]
pub struct GaussianLabelSampler {
    times: Vec<f64>,
    a: f64,
    heights: Vec<f64>,
    /// Per jump: sorted distinct bridge arguments `R/Δ` and the scale `√Δ`.
    jumps: Vec<(Vec<f64>, f64)>,
    /// Per grid time: (jump slot, argument slot) pairs to sum.
    terms: Vec<Vec<(u32, u32)>>,
}

impl GaussianLabelSampler {
    pub fn new(path: &InterpolatedPath, a: f64, times: &[f64]) -> Result<Self> {
        if !(a >= 0.0) {
            return Err(Error::Validation(format!("a must be nonnegative, got {a}")));
        }
        let mut lines: Vec<Vec<Ancestor>> = Vec::with_capacity(times.len());
        let mut heights = Vec::with_capacity(times.len());
        for &t in times {
            lines.push(path.ancestors(t)?);
            heights.push(path.continuous_part(t)?.max(0.0));
        }
        let mut slot_of_jump = std::collections::HashMap::new();
        let mut raw: Vec<(usize, Vec<f64>)> = Vec::new();
        for line in &lines {
            for anc in line {
                let slot = *slot_of_jump.entry(anc.time).or_insert_with(|| {
                    raw.push((anc.time, Vec::new()));
                    raw.len() - 1
                });
                raw[slot].1.push(anc.r / path.jump(anc.time) as f64);
            }
        }
        let jumps: Vec<(Vec<f64>, f64)> = raw
            .into_iter()
            .map(|(k, mut args)| {
                args.sort_by(|x, y| x.partial_cmp(y).unwrap());
                args.dedup();
                (args, (path.jump(k) as f64).sqrt())
            })
            .collect();
        let terms = lines
            .iter()
            .map(|line| {
                line.iter()
                    .map(|anc| {
                        let slot = slot_of_jump[&anc.time];
                        let u = anc.r / path.jump(anc.time) as f64;
                        let pos = jumps[slot].0.binary_search_by(|x| x.partial_cmp(&u).unwrap()).unwrap();
                        (slot as u32, pos as u32)
                    })
                    .collect()
            })
            .collect();
        Ok(Self { times: times.to_vec(), a, heights, jumps, terms })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> LabelProcess {
        let bridges: Vec<Vec<f64>> = self.jumps.iter().map(|(args, _)| brownian_bridge_at(args, rng)).collect();
        let mut values: Vec<f64> = if self.a > 0.0 && self.heights.iter().any(|&h| h > 0.0) {
            snake_on_grid(&self.heights, rng).into_iter().map(|z| self.a.sqrt() * z).collect()
        } else {
            vec![0.0; self.times.len()]
        };
        for (value, terms) in values.iter_mut().zip(&self.terms) {
            for &(slot, pos) in terms {
                let (_, scale) = self.jumps[slot as usize];
                *value += scale * bridges[slot as usize][pos as usize];
            }
        }
        LabelProcess { times: self.times.clone(), values }
    }
}

/// Standard Brownian bridge on `[0, 1]` at sorted arguments, drawn
/// left to right by Gaussian conditioning.
fn brownian_bridge_at<R: Rng + ?Sized>(args: &[f64], rng: &mut R) -> Vec<f64> {
    let mut out = Vec::with_capacity(args.len());
    let (mut u0, mut b0) = (0.0f64, 0.0f64);
    for &u in args {
        let b = if u >= 1.0 || u <= u0 {
            if u >= 1.0 {
                0.0
            } else {
                b0
            }
        } else {
            let mean = b0 * (1.0 - u) / (1.0 - u0);
            let var = (u - u0) * (1.0 - u) / (1.0 - u0);
            mean + var.sqrt() * rng.sample::<f64, _>(StandardNormal)
        };
        out.push(b);
        u0 = u;
        b0 = b;
    }
    out
}

/// One joint draw of `Z^a` on `times`.
pub fn gaussian_labels<R: Rng + ?Sized>(
    path: &InterpolatedPath,
    a: f64,
    times: &[f64],
    rng: &mut R,
) -> Result<LabelProcess> {
    Ok(GaussianLabelSampler::new(path, a, times)?.sample(rng))
}

/// `Cov(Z^a_s, Z^a_t | Y)`: `a` times the infimum of `C` between the two
/// times, plus `Δ (min(u, v) − u v)` for every jump shared by both
/// ancestral lines, with `u = R^s/Δ` and `v = R^t/Δ`.
pub fn label_covariance(path: &InterpolatedPath, a: f64, s: f64, t: f64) -> Result<f64> {
    let ls = path.ancestors(s)?;
    let lt = path.ancestors(t)?;
    let mut total = 0.0;
    let (mut i, mut j) = (0, 0);
    while i < ls.len() && j < lt.len() {
        match ls[i].time.cmp(&lt[j].time) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                let d = path.jump(ls[i].time) as f64;
                let (u, v) = (ls[i].r / d, lt[j].r / d);
                total += d * (u.min(v) - u * v);
                i += 1;
                j += 1;
            }
        }
    }
    let c = path.continuous_part(s)?.min(path.continuous_part(t)?).max(0.0);
    Ok(total + a * c)
}

/// `Var(Z^a_t | Y) = a C_t + Σ R (Δ − R) / Δ` over the ancestors of `t`.
pub fn label_variance(path: &InterpolatedPath, a: f64, t: f64) -> Result<f64> {
    let line = path.ancestors(t)?;
    let sum: f64 = line.iter().map(|anc| {
        let d = path.jump(anc.time) as f64;
        anc.r * (d - anc.r) / d
    }).sum();
    Ok(sum + a * path.continuous_part(t)?.max(0.0))
}
