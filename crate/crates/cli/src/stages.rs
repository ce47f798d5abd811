//! Pipeline stages. Each stage reads the artifacts of the previous one from
//! disk and writes its own, so any stage can be rerun or resumed alone.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use levymaps::container::{write_ndjson, Container, PathRecord};
use levymaps::dimension::{default_eps_grid, graph_minkowski_estimate, minkowski_estimate, MetricSample, MinkowskiEstimate};
use levymaps::experiment::{measure_built, sample_excursion, summarize_battery, BatterySummary, Regime, ReplicaReport};
use levymaps::labels::{label_process, sample_good_labelling};
use levymaps::looptree::{build_looptree, Looptree};
use levymaps::maps::{looptree_to_map, BijectionAudit};
use levymaps::rng::stream_rng;
use levymaps::spine::{laplace_check, sample_spine_marks, LaplaceCheck};

use crate::config::{stream_id, ExperimentConfig, Stage, ESTIMATOR_STREAM, LABEL_STREAM, PATH_STREAM, SPINE_STREAM};
use crate::output::{read_container, record_stage, replica_dir, write_atomic, write_container, write_json, CONFIG};
use crate::plot::{curve_csv, loglog_svg};
use crate::CliError;

const STAGE_VERSION: u32 = 1;

fn load_run_config(out: &Path) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::load(&out.join(CONFIG))?;
    cfg.outputs = out.to_path_buf();
    Ok(cfg)
}

fn load_excursion(dir: &Path) -> Result<Looptree, CliError> {
    let path = read_container(&dir.join("path.luka"))?.to_path()?;
    if !path.is_excursion() {
        return Err(CliError::Core(levymaps::Error::Validation(format!("{}: not an excursion", dir.display()))));
    }
    Ok(build_looptree(&path)?)
}

/// Samples `replicas` excursions into `replica_*/path.luka`.
pub fn sample(cfg: &ExperimentConfig, ndjson: bool) -> Result<(), CliError> {
    cfg.validate()?;
    let out = &cfg.outputs;
    let law = cfg.step_law()?;
    let regime = cfg.regime(&law)?;
    let mut stored = cfg.clone();
    stored.outputs = PathBuf::from(".");
    write_json(&out.join(CONFIG), &stored)?;

    let paths = (0..cfg.replicas)
        .into_par_iter()
        .map(|i| {
            let stream = stream_id(PATH_STREAM, cfg.stream_block, i);
            let mut rng = stream_rng(cfg.seed, stream);
            let path = sample_excursion(&law, cfg.n, regime, &mut rng)?;
            if !path.is_excursion() || path.n() != cfg.n {
                return Err(CliError::Core(levymaps::Error::Validation(format!("replica {i}: sampled path is not an excursion"))));
            }
            write_container(&replica_dir(out, i).join("path.luka"), &Container::from_path(&path))?;
            Ok((i, stream, path))
        })
        .collect::<Result<Vec<_>, CliError>>()?;

    if ndjson {
        let records: Vec<PathRecord> = paths
            .iter()
            .map(|(i, stream, p)| PathRecord { replica: *i as u64, stream: *stream, kind: p.kind(), increments: p.increments().to_vec() })
            .collect();
        let mut buf = Vec::new();
        write_ndjson(&mut buf, &records)?;
        write_atomic(&out.join("paths.ndjson"), |w| w.write_all(&buf))?;
    }

    let replicas: Vec<_> = paths
        .iter()
        .map(|(i, stream, p)| {
            json!({ "replica": i, "stream": stream, "file": format!("replica_{i:04}/path.luka"), "vertices": p.vertex_count() })
        })
        .collect();
    record_stage(
        out,
        "sample",
        json!({
            "stage_version": STAGE_VERSION,
            "seed": cfg.seed,
            "stream_block": cfg.stream_block,
            "n": cfg.n,
            "model": cfg.model,
            "vertex_rate": law.vertex_rate(),
            "regime": regime,
            "replicas": replicas,
        }),
    )
}

/// Looptree, labels and map of every sampled excursion, with the audit.
pub fn build(out: &Path) -> Result<(), CliError> {
    let cfg = load_run_config(out)?;
    let rows = (0..cfg.replicas)
        .into_par_iter()
        .map(|i| {
            let dir = replica_dir(out, i);
            let lt = load_excursion(&dir)?;
            let stream = stream_id(LABEL_STREAM, cfg.stream_block, i);
            let mut rng = stream_rng(cfg.seed, stream);
            let gl = sample_good_labelling(&lt, &mut rng);
            gl.validate(&lt)?;
            let map = looptree_to_map(&lt, &gl)?;
            let audit = map.audit(&lt);
            write_json(&dir.join("audit.json"), &audit)?;
            if let Some(check) = audit.first_failure() {
                return Err(CliError::Audit { replica: i, check });
            }

            write_atomic(&dir.join("looptree.csv"), |w| lt.write_edge_csv(w))?;
            write_json(&dir.join("looptree.json"), &lt.metadata())?;
            let z = label_process(&lt, &gl)?;
            write_container(&dir.join("labels.labl"), &Container::from_labels(z.integer_values()?))?;
            let (offsets, adj) = map.csr();
            write_container(&dir.join("map.pmap"), &Container::from_adjacency(offsets, adj))?;
            write_atomic(&dir.join("map.csv"), |w| map.write_edge_csv(w))?;
            write_json(&dir.join("map.json"), &map.metadata())?;
            Ok(json!({
                "replica": i,
                "stream": stream,
                "vertices": map.vertex_count(),
                "faces": map.face_count(),
                "quadrangulation": audit.quadrangulation,
            }))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    record_stage(out, "build", json!({ "stage_version": STAGE_VERSION, "replicas": rows }))
}

#[derive(Debug, Clone, Default)]
pub struct DimensionOverrides {
    pub sample_points: Option<usize>,
    pub centers: Option<usize>,
    pub budget: Option<u64>,
}

/// Estimators on the built artifacts; per-replica reports plus a summary.
pub fn dimension(out: &Path, over: &DimensionOverrides) -> Result<BatterySummary, CliError> {
    let mut cfg = load_run_config(out)?;
    cfg.sample_points = over.sample_points.unwrap_or(cfg.sample_points);
    cfg.centers = over.centers.unwrap_or(cfg.centers);
    cfg.budget = over.budget.or(cfg.budget);
    if !cfg.stages.contains(&Stage::Dimension) {
        cfg.stages.push(Stage::Dimension);
    }
    cfg.validate()?;

    let reports = (0..cfg.replicas)
        .into_par_iter()
        .map(|i| {
            let dir = replica_dir(out, i);
            let lt = load_excursion(&dir)?;
            let (offsets, adj) = read_container(&dir.join("map.pmap"))?.to_adjacency()?;
            if offsets.len() != lt.vertex_count() + 2 {
                return Err(CliError::Core(levymaps::Error::Validation(format!(
                    "replica {i}: map has {} vertices, looptree {}",
                    offsets.len() - 1,
                    lt.vertex_count()
                ))));
            }
            let labels: Vec<f64> = read_container(&dir.join("labels.labl"))?.data.iter().map(|&x| x as f64).collect();
            let audit_path = dir.join("audit.json");
            let audit_text = std::fs::read_to_string(&audit_path).map_err(|e| CliError::io(&audit_path, e))?;
            let audit: BijectionAudit =
                serde_json::from_str(&audit_text).map_err(|e| CliError::Config(format!("{}: {e}", audit_path.display())))?;

            let mut rng = stream_rng(cfg.seed, stream_id(ESTIMATOR_STREAM, cfg.stream_block, i));
            let budget = cfg.budget.unwrap_or(u64::MAX);
            let (looptree, map, holder_labels) =
                measure_built(&lt, &offsets, &adj, &labels, cfg.sample_points, cfg.centers, budget, &mut rng)?;
            let report = ReplicaReport { n: lt.n(), vertices: lt.vertex_count(), looptree, map, holder_labels, audit };
            write_json(&dir.join("estimates.json"), &report)?;
            for (name, m) in [("looptree", &report.looptree), ("map", &report.map)] {
                let svg = loglog_svg(&format!("replica {i}: {name} cover"), &m.curve, m.dim);
                write_atomic(&dir.join(format!("cover_{name}.svg")), |w| w.write_all(svg.as_bytes()))?;
                let csv = curve_csv(&m.curve);
                write_atomic(&dir.join(format!("cover_{name}.csv")), |w| w.write_all(csv.as_bytes()))?;
            }
            Ok(report)
        })
        .collect::<Result<Vec<_>, CliError>>()?;

    let summary = summarize_battery(&reports);
    write_json(&out.join("estimates.json"), &summary)?;
    let streams: Vec<u64> = (0..cfg.replicas).map(|i| stream_id(ESTIMATOR_STREAM, cfg.stream_block, i)).collect();
    record_stage(
        out,
        "dimension",
        json!({
            "stage_version": STAGE_VERSION,
            "sample_points": cfg.sample_points,
            "centers": cfg.centers,
            "budget": cfg.budget,
            "streams": streams,
        }),
    )?;
    Ok(summary)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SegmentFixture {
    pub fixture: String,
    /// Greedy net cover of a path graph, the estimator used on looptrees
    /// and maps.
    pub vertices: usize,
    pub graph_cover: MinkowskiEstimate,
    /// Farthest-point cover of equispaced sample points.
    pub sample_points: usize,
    pub sample_cover: MinkowskiEstimate,
}

/// Both cover estimators on the unit segment.
pub fn segment_fixture(out: &Path, vertices: usize, sample_points: usize) -> Result<SegmentFixture, CliError> {
    if vertices < 512 || sample_points < 16 {
        return Err(CliError::Config("the segment fixture needs n >= 512 and at least 16 sample points".into()));
    }
    let offsets: Vec<u32> = (0..=vertices).map(|v| (2 * v).saturating_sub(1).min(2 * vertices - 2) as u32).collect();
    let adj: Vec<u32> = (0..vertices as u32)
        .flat_map(|v| {
            let mut nb = Vec::with_capacity(2);
            if v > 0 {
                nb.push(v - 1);
            }
            if (v as usize) + 1 < vertices {
                nb.push(v + 1);
            }
            nb
        })
        .collect();
    let graph_cover = graph_minkowski_estimate(&offsets, &adj, vertices as u32 - 1)?;
    let m = sample_points as u64;
    let ms = MetricSample::from_fn((0..m).collect(), |a, b| (a as f64 - b as f64).abs() / (m - 1) as f64)?;
    let sample_cover = minkowski_estimate(&ms, &default_eps_grid(ms.diameter))?;
    let fx = SegmentFixture { fixture: "segment".into(), vertices, graph_cover, sample_points, sample_cover };
    write_json(&out.join("estimates.json"), &fx)?;
    for (name, e) in [("segment", &fx.graph_cover), ("segment_sample", &fx.sample_cover)] {
        let svg = loglog_svg(&format!("{name} cover"), &e.curve, Some(e.fit.slope));
        write_atomic(&out.join(format!("cover_{name}.svg")), |w| w.write_all(svg.as_bytes()))?;
    }
    Ok(fx)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpineReport {
    pub alpha: f64,
    pub beta: f64,
    pub horizon: f64,
    pub x_min: f64,
    pub marksets: usize,
    pub tolerance: f64,
    pub worst_relative_error: f64,
    pub passed: bool,
    pub checks: Vec<LaplaceCheck>,
}

/// Empirical spine exponents against their targets, plus one exported
/// markset.
pub fn spine_check(cfg: &ExperimentConfig) -> Result<SpineReport, CliError> {
    let out = &cfg.outputs;
    let s = &cfg.spine;
    let triplet = cfg.triplet()?;
    let check_stream = stream_id(SPINE_STREAM, cfg.stream_block, 0);
    let marks_stream = stream_id(SPINE_STREAM, cfg.stream_block, 1);
    let mut rng = stream_rng(cfg.seed, check_stream);
    let checks = laplace_check(&triplet, s.horizon, s.x_min, &s.lambdas, s.marksets, &mut rng)?;
    let worst = checks.iter().map(LaplaceCheck::worst_relative_error).fold(0.0, f64::max);
    let report = SpineReport {
        alpha: cfg.model.alpha,
        beta: s.beta,
        horizon: s.horizon,
        x_min: s.x_min,
        marksets: s.marksets,
        tolerance: s.tolerance,
        worst_relative_error: worst,
        passed: worst <= s.tolerance,
        checks,
    };
    write_json(&out.join("spine_check.json"), &report)?;
    let sm = sample_spine_marks(&triplet, s.horizon, s.x_min, &mut stream_rng(cfg.seed, marks_stream))?;
    write_atomic(&out.join("marks.csv"), |w| sm.write_csv(w))?;
    record_stage(
        out,
        "spine",
        json!({ "stage_version": STAGE_VERSION, "seed": cfg.seed, "spine": s, "streams": [check_stream, marks_stream] }),
    )?;
    if !report.passed {
        return Err(CliError::Tolerance { worst, tolerance: s.tolerance });
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThetaRun {
    pub theta: Option<f64>,
    pub dir: String,
    pub vertex_target: Option<usize>,
    pub summary: BatterySummary,
}

/// Largest `|m_i − m_j| / sqrt(se_i² + se_j²)` over pairs of runs that
/// produced an estimate.
pub fn max_pairwise_z(runs: &[(f64, f64)]) -> f64 {
    let runs: Vec<(f64, f64)> = runs.iter().copied().filter(|r| r.0.is_finite() && r.1.is_finite()).collect();
    let mut z: f64 = 0.0;
    for (i, a) in runs.iter().enumerate() {
        for b in &runs[i + 1..] {
            z = z.max((a.0 - b.0).abs() / (a.1 * a.1 + b.1 * b.1).sqrt());
        }
    }
    z
}

fn theta_dir(theta: Option<f64>) -> String {
    match theta {
        None => "edges".into(),
        Some(t) => format!("theta_{t}"),
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// One full pipeline per drift value, each in its own directory and rng
/// block, then a table over all replicas.
pub fn experiment(cfg: &ExperimentConfig) -> Result<(), CliError> {
    cfg.validate()?;
    let thetas: Vec<Option<f64>> =
        if cfg.thetas.is_empty() { vec![cfg.model.theta] } else { cfg.thetas.iter().map(|&t| Some(t)).collect() };
    let out = &cfg.outputs;
    let build_stage = cfg.stages.iter().any(|s| matches!(s, Stage::Looptree | Stage::Labels | Stage::Map));
    let mut csv = String::from(
        "theta,replica,vertices,diameter_looptree,diameter_map,looptree_dim,looptree_dim_stderr,map_dim,map_dim_stderr,\
         looptree_dim_sample,map_dim_sample,looptree_volume,map_volume,holder_looptree,holder_map,holder_labels,audit_passed\n",
    );
    let mut runs = Vec::new();
    for (j, &theta) in thetas.iter().enumerate() {
        let dir = theta_dir(theta);
        let mut sub = cfg.clone();
        sub.model.theta = theta;
        sub.thetas.clear();
        sub.stream_block = cfg.stream_block + j as u64;
        sub.stages.retain(|s| *s != Stage::Spine);
        sub.outputs = out.join(&dir);
        sub.validate()?;
        if cfg.stages.contains(&Stage::Path) {
            sample(&sub, false)?;
        }
        if build_stage {
            build(&sub.outputs)?;
        }
        if !cfg.stages.contains(&Stage::Dimension) {
            continue;
        }
        dimension(&sub.outputs, &DimensionOverrides::default())?;
        let mut reports = Vec::with_capacity(cfg.replicas);
        for i in 0..cfg.replicas {
            let p = replica_dir(&sub.outputs, i).join("estimates.json");
            let text = std::fs::read_to_string(&p).map_err(|e| CliError::io(&p, e))?;
            let r: ReplicaReport = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            csv.push_str(&format!(
                "{},{i},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                theta.map(|t| t.to_string()).unwrap_or_else(|| "none".into()),
                r.vertices,
                r.looptree.diameter,
                r.map.diameter,
                opt(r.looptree.dim),
                opt(r.looptree.dim_stderr),
                opt(r.map.dim),
                opt(r.map.dim_stderr),
                opt(r.looptree.dim_sample),
                opt(r.map.dim_sample),
                opt(r.looptree.volume),
                opt(r.map.volume),
                opt(r.looptree.holder),
                opt(r.map.holder),
                opt(r.holder_labels),
                r.audit.passed(),
            ));
            reports.push(r);
        }
        let vertex_target = match sub.regime(&sub.step_law()?)? {
            Regime::Vertices { k } => Some(k),
            Regime::Edges => None,
        };
        runs.push(ThetaRun { theta, dir, vertex_target, summary: summarize_battery(&reports) });
    }
    if cfg.stages.contains(&Stage::Spine) {
        let mut sp = cfg.clone();
        sp.outputs = out.join("spine");
        spine_check(&sp)?;
    }
    if runs.is_empty() {
        return Ok(());
    }
    write_atomic(&out.join("summary.csv"), |w| w.write_all(csv.as_bytes()))?;
    let pairs = |f: &dyn Fn(&BatterySummary) -> (f64, f64)| max_pairwise_z(&runs.iter().map(|r| f(&r.summary)).collect::<Vec<_>>());
    write_json(
        &out.join("summary.json"),
        &json!({
            "n": cfg.n,
            "replicas": cfg.replicas,
            "model": cfg.model,
            "runs": runs,
            "max_pairwise_z": {
                "looptree_dim": pairs(&|s| (s.looptree_dim.mean, s.looptree_dim.stderr)),
                "map_dim": pairs(&|s| (s.map_dim.mean, s.map_dim.stderr)),
            },
        }),
    )
}
