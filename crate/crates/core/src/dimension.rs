//! Estimators of Minkowski dimensions, ball-volume growth and Hölder
//! regularity on finite metric samples and graphs.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Distances among a finite set of sampled points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSample {
    pub points: Vec<u64>,
    /// Row-major `m × m` matrix.
    pub dist: Vec<f64>,
    pub diameter: f64,
}

impl MetricSample {
    pub fn new(points: Vec<u64>, dist: Vec<f64>) -> Result<Self> {
        let m = points.len();
        if dist.len() != m * m {
            return Err(Error::Validation(format!("{} distances for {m} points", dist.len())));
        }
        for i in 0..m {
            if dist[i * m + i] != 0.0 {
                return Err(Error::Validation(format!("nonzero diagonal at {i}")));
            }
            for j in 0..i {
                let (a, b) = (dist[i * m + j], dist[j * m + i]);
                if a != b || !(a >= 0.0) {
                    return Err(Error::Validation(format!("entries ({i},{j}) not symmetric and nonnegative")));
                }
            }
        }
        let diameter = dist.iter().cloned().fold(0.0, f64::max);
        Ok(Self { points, dist, diameter })
    }

    /// Sample from a point set and a distance function.
    pub fn from_fn(points: Vec<u64>, d: impl Fn(u64, u64) -> f64) -> Result<Self> {
        let m = points.len();
        let mut dist = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..i {
                let x = d(points[i], points[j]);
                dist[i * m + j] = x;
                dist[j * m + i] = x;
            }
        }
        Self::new(points, dist)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.points.len() + j]
    }

    /// Largest violation of the triangle inequality over all triples.
    pub fn triangle_defect(&self) -> f64 {
        let m = self.len();
        let mut worst: f64 = 0.0;
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    worst = worst.max(self.get(i, j) - self.get(i, k) - self.get(k, j));
                }
            }
        }
        worst
    }

    /// Insertion radii of the farthest-point ordering started at point 0:
    /// entry `k` is the distance from the `k`-th chosen point to the
    /// earlier ones (`+∞` for the first).
    pub fn insertion_radii(&self) -> Vec<f64> {
        let m = self.len();
        if m == 0 {
            return Vec::new();
        }
        let mut to_centers: Vec<f64> = (0..m).map(|j| self.get(0, j)).collect();
        let mut radii = vec![f64::INFINITY];
        for _ in 1..m {
            let (far, &r) = to_centers
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap();
            if r == 0.0 {
                break;
            }
            radii.push(r);
            for j in 0..m {
                to_centers[j] = to_centers[j].min(self.get(far, j));
            }
        }
        radii
    }
}

/// Greedy farthest-point cover: the number of closed `eps`-balls the
/// farthest-point ordering needs before every sample point is covered.
/// Within a factor two of the optimal cover of the sample.
pub fn covering_number(ms: &MetricSample, eps: f64) -> usize {
    covering_from_radii(&ms.insertion_radii(), eps)
}

fn covering_from_radii(radii: &[f64], eps: f64) -> usize {
    radii.iter().filter(|&&r| r > eps).count().max(1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateMethod {
    Covering,
    BallVolume,
    Holder,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionEstimate {
    pub slope: f64,
    pub stderr: f64,
    pub eps_range: (f64, f64),
    pub method: EstimateMethod,
    /// Points in the regression.
    pub points: usize,
}

/// Full-range fit plus the smallest and largest slopes over sub-windows,
/// as stand-ins for the lower and upper dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinkowskiEstimate {
    pub fit: DimensionEstimate,
    pub lower: DimensionEstimate,
    pub upper: DimensionEstimate,
    /// `(log 1/eps, log N)` pairs used in the fit.
    pub curve: Vec<(f64, f64)>,
}

/// Least-squares slope of `y` on `x` and its standard error.
pub fn linear_fit(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let m = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / m;
    let my = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = points.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let stderr = if points.len() > 2 { (rss / (m - 2.0) / sxx).sqrt() } else { 0.0 };
    (slope, stderr, intercept)
}

/// `count` log-spaced values between `lo` and `hi`.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    (0..count).map(|i| lo * (hi / lo).powf(i as f64 / (count - 1) as f64)).collect()
}

/// Default grid: 24 log-spaced radii in `[diameter/256, diameter/4]`.
pub fn default_eps_grid(diameter: f64) -> Vec<f64> {
    log_grid(diameter / 256.0, diameter / 4.0, 24)
}

/// Fraction of the sample above which covering counts are treated as
/// saturated by the finite sample and dropped from the fit.
pub const SATURATION: f64 = 0.25;

/// Slope of `log N(eps)` against `log 1/eps` on a metric sample.
pub fn minkowski_estimate(ms: &MetricSample, eps_grid: &[f64]) -> Result<MinkowskiEstimate> {
    check_grid(eps_grid, ms.diameter)?;
    let radii = ms.insertion_radii();
    let cap = SATURATION * ms.len() as f64;
    let counts: Vec<(f64, f64)> = eps_grid
        .iter()
        .map(|&e| (e, covering_from_radii(&radii, e) as f64))
        .filter(|&(_, c)| c <= cap)
        .collect();
    fit_counts(&counts, EstimateMethod::Covering)
}

fn check_grid(eps_grid: &[f64], diameter: f64) -> Result<()> {
    if eps_grid.len() < 3 || eps_grid.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::DegenerateGrid("need at least three positive radii".into()));
    }
    let lo = eps_grid.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = eps_grid.iter().cloned().fold(0.0, f64::max);
    let tol = 1e-9 * diameter;
    if lo < diameter / 256.0 - tol || hi > diameter / 4.0 + tol {
        return Err(Error::DegenerateGrid(format!(
            "radii [{lo}, {hi}] leave [diameter/256, diameter/4] = [{}, {}]",
            diameter / 256.0,
            diameter / 4.0
        )));
    }
    if (hi / lo).log10() < 1.5 - 1e-9 {
        return Err(Error::DegenerateGrid(format!("radii span {:.2} decades, need 1.5", (hi / lo).log10())));
    }
    Ok(())
}

/// Fits `log N` against `log 1/eps` over the whole grid and over every
/// window holding at least half of the grid points.
fn fit_counts(counts: &[(f64, f64)], method: EstimateMethod) -> Result<MinkowskiEstimate> {
    let mut curve: Vec<(f64, f64)> = counts.iter().map(|&(e, c)| ((1.0 / e).ln(), c.ln())).collect();
    curve.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    curve.dedup_by(|a, b| a.0 == b.0);
    if curve.len() < 3 {
        return Err(Error::DegenerateGrid(format!("only {} usable radii", curve.len())));
    }
    let estimate = |pts: &[(f64, f64)]| {
        let (slope, stderr, _) = linear_fit(pts);
        let eps_lo = (-pts.last().unwrap().0).exp();
        let eps_hi = (-pts[0].0).exp();
        DimensionEstimate { slope, stderr, eps_range: (eps_lo, eps_hi), method, points: pts.len() }
    };
    let fit = estimate(&curve);
    let width = (curve.len() / 2).max(3);
    let windows: Vec<DimensionEstimate> = (0..=curve.len() - width).map(|i| estimate(&curve[i..i + width])).collect();
    let lower = windows.iter().min_by(|a, b| a.slope.partial_cmp(&b.slope).unwrap()).unwrap().clone();
    let upper = windows.iter().max_by(|a, b| a.slope.partial_cmp(&b.slope).unwrap()).unwrap().clone();
    Ok(MinkowskiEstimate { fit, lower, upper, curve })
}

/// Greedy cover of a whole graph by closed balls of integer radius:
/// vertices are scanned in order and every still uncovered one becomes a
/// centre. Centres are pairwise more than `radius` apart, so the count lies
/// between the optimal covers at radii `radius` and `radius / 2`.
pub fn graph_covering_number(offsets: &[u32], adj: &[u32], radius: u32) -> usize {
    let vertices = offsets.len() - 1;
    let mut covered = vec![false; vertices];
    let mut depth = vec![u32::MAX; vertices];
    let mut touched: Vec<u32> = Vec::new();
    let mut queue = VecDeque::new();
    let mut centres = 0;
    for c in 0..vertices {
        if covered[c] {
            continue;
        }
        centres += 1;
        depth[c] = 0;
        touched.push(c as u32);
        queue.push_back(c as u32);
        while let Some(u) = queue.pop_front() {
            covered[u as usize] = true;
            let d = depth[u as usize];
            if d == radius {
                continue;
            }
            for &v in &adj[offsets[u as usize] as usize..offsets[u as usize + 1] as usize] {
                if depth[v as usize] == u32::MAX {
                    depth[v as usize] = d + 1;
                    touched.push(v);
                    queue.push_back(v);
                }
            }
        }
        for &v in &touched {
            depth[v as usize] = u32::MAX;
        }
        touched.clear();
    }
    centres
}

/// Minkowski estimate on a whole graph: the radii of the default grid are
/// floored to integers, and radius 0 is discarded.
pub fn graph_minkowski_estimate(offsets: &[u32], adj: &[u32], diameter: u32) -> Result<MinkowskiEstimate> {
    let mut radii: Vec<u32> = default_eps_grid(diameter as f64).into_iter().map(|e| e.floor() as u32).filter(|&r| r > 0).collect();
    radii.dedup();
    let counts: Vec<(f64, f64)> = radii.iter().map(|&r| (r as f64, graph_covering_number(offsets, adj, r) as f64)).collect();
    fit_counts(&counts, EstimateMethod::Covering)
}

/// Eccentricity lower bound by repeated farthest-vertex sweeps.
pub fn graph_diameter_estimate(offsets: &[u32], adj: &[u32], sweeps: usize) -> u32 {
    let mut source = 0u32;
    let mut best = 0;
    for _ in 0..sweeps.max(1) {
        let d = crate::looptree::bfs_csr(offsets, adj, source);
        let (far, &ecc) = d.iter().enumerate().filter(|(_, &x)| x != u32::MAX).max_by_key(|(_, &x)| x).unwrap();
        if ecc <= best && far as u32 == source {
            break;
        }
        best = best.max(ecc);
        source = far as u32;
    }
    best
}

/// Fraction of the weights within distance `r` of the centre, for every
/// radius. `distances[i]` is the distance from the centre to atom `i`
/// (typically one atom per contour time).
pub fn ball_volume_profile(distances: &[f64], radii: &[f64]) -> Vec<(f64, f64)> {
    let mut sorted = distances.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let total = sorted.len() as f64;
    radii
        .iter()
        .map(|&r| (r, sorted.partition_point(|&d| d <= r) as f64 / total))
        .collect()
}

/// Slope of `log volume` against `log r` over the radii in `[lo, hi]`.
pub fn volume_exponent(profile: &[(f64, f64)], lo: f64, hi: f64) -> Result<DimensionEstimate> {
    let pts: Vec<(f64, f64)> = profile
        .iter()
        .filter(|&&(r, v)| r >= lo && r <= hi && r > 0.0 && v > 0.0)
        .map(|&(r, v)| (r.ln(), v.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::DegenerateGrid(format!("{} radii with positive volume in [{lo}, {hi}]", pts.len())));
    }
    let (slope, stderr, _) = linear_fit(&pts);
    Ok(DimensionEstimate { slope, stderr, eps_range: (lo, hi), method: EstimateMethod::BallVolume, points: pts.len() })
}

/// Critical Hölder exponent of a function sampled on a regular grid.
///
/// At dyadic level `j` the grid is cut into `2^j` blocks; the largest
/// oscillation over a block is regressed in log scale against the block
/// length. Levels run over `[4, log2 n − 2]`.
pub fn holder_estimate(values: &[f64]) -> Result<DimensionEstimate> {
    let n = values.len().saturating_sub(1);
    if n < 64 {
        return Err(Error::DegenerateGrid(format!("{n} increments are too few for dyadic levels 4 and up")));
    }
    let top = (n as f64).log2().floor() as u32 - 2;
    let mut pts = Vec::new();
    for j in 4..=top {
        let blocks = 1usize << j;
        let mut worst: f64 = 0.0;
        for b in 0..blocks {
            let lo = b * n / blocks;
            let hi = (b + 1) * n / blocks;
            let (mn, mx) = values[lo..=hi].iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, c), &x| (a.min(x), c.max(x)));
            worst = worst.max(mx - mn);
        }
        if worst > 0.0 {
            pts.push(((1.0 / blocks as f64).ln(), worst.ln()));
        }
    }
    if pts.len() < 3 {
        return Err(Error::DegenerateGrid("flat function".into()));
    }
    let (slope, stderr, _) = linear_fit(&pts);
    let range = ((-(pts.first().unwrap().0)).exp().recip(), (-(pts.last().unwrap().0)).exp().recip());
    Ok(DimensionEstimate { slope, stderr, eps_range: (range.1, range.0), method: EstimateMethod::Holder, points: pts.len() })
}
