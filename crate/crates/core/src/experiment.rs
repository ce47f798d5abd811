//! End-to-end replicas: sample an excursion, build the looptree and the
//! map, and run every estimator on both metrics.

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dimension::{
    ball_volume_profile, default_eps_grid, graph_diameter_estimate, graph_minkowski_estimate, holder_estimate,
    minkowski_estimate, volume_exponent, MetricSample,
};
use crate::error::Result;
use crate::labels::{label_process, sample_good_labelling};
use crate::looptree::{bfs_csr, build_looptree, Looptree};
use crate::maps::{looptree_to_map, map_distance_matrix, BijectionAudit, PointedMap};
use crate::path_codec::{sample_bridge, sample_bridge_biconditioned, vervaat, LukasiewiczPath, StepLaw};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "regime")]
pub enum Regime {
    /// Conditioned on the number of edges only.
    Edges,
    /// Conditioned on the number of edges and of vertices.
    Vertices { k: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplicaSpec {
    pub n: usize,
    pub regime: Regime,
    /// Points of the sampled metric used by the sample cover estimate.
    pub sample_points: usize,
    /// Uniform centres of the ball-volume profile.
    pub centers: usize,
}

/// Conditioned bridge followed by the cyclic shift.
pub fn sample_excursion<R: Rng + ?Sized>(law: &StepLaw, n: usize, regime: Regime, rng: &mut R) -> Result<LukasiewiczPath> {
    let bridge = match regime {
        Regime::Edges => sample_bridge(law, n, rng)?,
        Regime::Vertices { k } => sample_bridge_biconditioned(law, n, k, rng)?,
    };
    Ok(vervaat(&bridge))
}

/// Estimates for one metric (looptree or map).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub diameter: u32,
    /// Cover of the whole graph.
    pub dim: Option<f64>,
    pub dim_stderr: Option<f64>,
    pub dim_lower: Option<f64>,
    pub dim_upper: Option<f64>,
    /// Farthest-point cover of the sampled points.
    pub dim_sample: Option<f64>,
    /// Mean ball-volume slope over the centres that produced one.
    pub volume: Option<f64>,
    /// Hölder exponent of the distance to the root along the contour.
    pub holder: Option<f64>,
    /// `(log 1/eps, log N)` points of the graph cover fit.
    #[serde(default)]
    pub curve: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicaReport {
    pub n: usize,
    pub vertices: usize,
    pub looptree: MetricReport,
    pub map: MetricReport,
    /// Hölder exponent of the contour label process.
    pub holder_labels: Option<f64>,
    pub audit: BijectionAudit,
}

pub fn run_replica<R: Rng + ?Sized>(law: &StepLaw, spec: &ReplicaSpec, rng: &mut R) -> Result<ReplicaReport> {
    let path = sample_excursion(law, spec.n, spec.regime, rng)?;
    let lt = build_looptree(&path)?;
    let gl = sample_good_labelling(&lt, rng);
    let map = looptree_to_map(&lt, &gl)?;
    let audit = map.audit(&lt);
    let z = label_process(&lt, &gl)?;
    let (mo, ma) = map.csr();
    let (looptree, map_report, holder_labels) = measure_built(&lt, mo, ma, &z.values, spec.sample_points, spec.centers, u64::MAX, rng)?;
    Ok(ReplicaReport { n: lt.n(), vertices: lt.vertex_count(), looptree, map: map_report, holder_labels, audit })
}

/// Estimators on a built looptree and its map. Map vertex `v + 1` must be
/// looptree vertex `v`, with `v_0 = 0`, as produced by the successor
/// construction; `labels` is the contour label process. `budget` caps the
/// BFS work of each sampled distance matrix.
#[allow(clippy::too_many_arguments)]
pub fn measure_built<R: Rng + ?Sized>(
    lt: &Looptree,
    map_offsets: &[u32],
    map_adj: &[u32],
    labels: &[f64],
    sample_points: usize,
    centers: usize,
    budget: u64,
    rng: &mut R,
) -> Result<(MetricReport, MetricReport, Option<f64>)> {
    let n = lt.n();
    let sample_times: Vec<usize> = index::sample(rng, n, sample_points.min(n)).into_vec();
    let centers: Vec<usize> = (0..centers).map(|_| rng.random_range(0..n)).collect();
    let (lo, la) = lt.csr();
    let lt_vertex = |t: usize| lt.contour()[t];
    let looptree = measure(lo, la, &lt_vertex, lt.root(), n, &sample_times, &centers, budget)?;
    let map_vertex = |t: usize| lt.contour()[t] + 1;
    let map = measure(map_offsets, map_adj, &map_vertex, 0, n, &sample_times, &centers, budget)?;
    let holder_labels = holder_estimate(labels).ok().map(|e| e.slope);
    Ok((looptree, map, holder_labels))
}

#[allow(clippy::too_many_arguments)]
fn measure(
    offsets: &[u32],
    adj: &[u32],
    vertex_at: &(dyn Fn(usize) -> u32 + Sync),
    root: u32,
    n: usize,
    sample_times: &[usize],
    centers: &[usize],
    budget: u64,
) -> Result<MetricReport> {
    let diameter = graph_diameter_estimate(offsets, adj, 4);
    let cover = graph_minkowski_estimate(offsets, adj, diameter).ok();

    let sample: Vec<u32> = sample_times.iter().map(|&t| vertex_at(t)).collect();
    let matrix = map_distance_matrix(offsets, adj, &sample, budget)?;
    let dist: Vec<f64> = matrix.rows.iter().flatten().map(|&d| d as f64).collect();
    let ms = MetricSample::new(sample_times.iter().map(|&t| t as u64).collect(), dist)?;
    let dim_sample = if ms.diameter > 0.0 {
        minkowski_estimate(&ms, &default_eps_grid(ms.diameter)).ok().map(|e| e.fit.slope)
    } else {
        None
    };

    let slopes: Vec<f64> = centers
        .par_iter()
        .filter_map(|&c| {
            let d = bfs_csr(offsets, adj, vertex_at(c));
            let by_time: Vec<f64> = (0..n).map(|t| d[vertex_at(t) as usize] as f64).collect();
            let radii = integer_radii(diameter);
            let profile = ball_volume_profile(&by_time, &radii);
            let (lo, hi) = (radii[0], *radii.last().unwrap());
            volume_exponent(&profile, lo, hi).ok().map(|e| e.slope)
        })
        .collect();
    let volume = if slopes.is_empty() { None } else { Some(slopes.iter().sum::<f64>() / slopes.len() as f64) };

    let from_root = bfs_csr(offsets, adj, root);
    let profile: Vec<f64> = (0..=n).map(|t| from_root[vertex_at(t) as usize] as f64).collect();
    let holder = holder_estimate(&profile).ok().map(|e| e.slope);

    Ok(MetricReport {
        diameter,
        dim: cover.as_ref().map(|c| c.fit.slope),
        dim_stderr: cover.as_ref().map(|c| c.fit.stderr),
        dim_lower: cover.as_ref().map(|c| c.lower.slope),
        dim_upper: cover.as_ref().map(|c| c.upper.slope),
        dim_sample,
        volume,
        holder,
        curve: cover.map(|c| c.curve).unwrap_or_default(),
    })
}

/// Default radius grid floored to integers, without duplicates or zero.
fn integer_radii(diameter: u32) -> Vec<f64> {
    let mut r: Vec<f64> = default_eps_grid(diameter as f64).into_iter().map(f64::floor).filter(|&r| r >= 1.0).collect();
    r.dedup();
    if r.is_empty() {
        r.push(1.0);
    }
    r
}

/// Mean, standard error and count of the finite values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub stderr: f64,
    pub count: usize,
}

pub fn summarize(values: impl IntoIterator<Item = Option<f64>>) -> Summary {
    let v: Vec<f64> = values.into_iter().flatten().filter(|x| x.is_finite()).collect();
    let count = v.len();
    if count == 0 {
        return Summary { mean: f64::NAN, stderr: f64::NAN, count };
    }
    let mean = v.iter().sum::<f64>() / count as f64;
    let stderr = if count > 1 {
        (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (count - 1) as f64 / count as f64).sqrt()
    } else {
        f64::NAN
    };
    Summary { mean, stderr, count }
}

/// Per-field aggregates over replicas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatterySummary {
    pub replicas: usize,
    pub looptree_dim: Summary,
    pub map_dim: Summary,
    pub looptree_dim_sample: Summary,
    pub map_dim_sample: Summary,
    pub looptree_volume: Summary,
    pub map_volume: Summary,
    pub holder_looptree: Summary,
    pub holder_map: Summary,
    pub holder_labels: Summary,
    pub audits_passed: usize,
}

pub fn summarize_battery(reports: &[ReplicaReport]) -> BatterySummary {
    let field = |f: &dyn Fn(&ReplicaReport) -> Option<f64>| summarize(reports.iter().map(f));
    BatterySummary {
        replicas: reports.len(),
        looptree_dim: field(&|r| r.looptree.dim),
        map_dim: field(&|r| r.map.dim),
        looptree_dim_sample: field(&|r| r.looptree.dim_sample),
        map_dim_sample: field(&|r| r.map.dim_sample),
        looptree_volume: field(&|r| r.looptree.volume),
        map_volume: field(&|r| r.map.volume),
        holder_looptree: field(&|r| r.looptree.holder),
        holder_map: field(&|r| r.map.holder),
        holder_labels: field(&|r| r.holder_labels),
        audits_passed: reports.iter().filter(|r| r.audit.passed()).count(),
    }
}

/// Builds looptree and map from an excursion with a fresh labelling.
pub fn build_all<R: Rng + ?Sized>(path: &LukasiewiczPath, rng: &mut R) -> Result<(Looptree, PointedMap)> {
    let lt = build_looptree(path)?;
    let gl = sample_good_labelling(&lt, rng);
    let map = looptree_to_map(&lt, &gl)?;
    Ok((lt, map))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    #[test]
    fn small_replica_runs() {
        let law = StepLaw::plus_minus_one();
        let spec = ReplicaSpec { n: 4096, regime: Regime::Edges, sample_points: 128, centers: 4 };
        let mut rng = stream_rng(1, 0);
        let r = run_replica(&law, &spec, &mut rng).unwrap();
        assert!(r.audit.passed() && r.audit.quadrangulation);
        assert_eq!(r.n, 4096);
        assert!(r.looptree.dim.is_some() && r.map.dim.is_some());
    }

    #[test]
    fn summaries() {
        let s = summarize([Some(1.0), None, Some(3.0)]);
        assert_eq!((s.mean, s.count), (2.0, 2));
        assert!((s.stderr - 1.0).abs() < 1e-12);
    }
}
