//! Pointed bipartite maps built from labelled looptrees by the successor
//! construction, with graph distances and the label bound `D°`.
//!
//! Map vertex `0` is the distinguished vertex `v_0`; looptree vertex `v`
//! becomes map vertex `v + 1`. Edge `i` is the arc drawn from outer-face
//! corner `i` (contour time `i`) to its successor; its half-edges are `2i`
//! at the corner and `2i + 1` at the successor.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labels::{GoodLabelling, LabelProcess};
use crate::looptree::{bfs_csr, Looptree};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointedMap {
    vertex_count: usize,
    /// Tail and head of every edge.
    ends: Vec<(u32, u32)>,
    /// Next half-edge counterclockwise around its vertex.
    rot: Vec<u32>,
    face_of: Vec<u32>,
    face_degrees: Vec<u32>,
    adj_offsets: Vec<u32>,
    adj: Vec<u32>,
    /// Shifted labels, `0` at `v_0` and minimum `1` elsewhere.
    labels: Vec<u32>,
    /// Map vertex seen at every contour time `0..=n`.
    corner_vertex: Vec<u32>,
    root_half_edge: u32,
}

/// Successor construction. Every outer-face corner is joined to the next
/// corner, cyclically, carrying a strictly smaller label; corners carrying
/// the minimal label are joined to `v_0`.
pub fn looptree_to_map(lt: &Looptree, gl: &GoodLabelling) -> Result<PointedMap> {
    gl.validate(lt)?;
    let n = lt.n();
    let contour = lt.contour();
    let min = gl.labels.iter().copied().min().unwrap_or(0);
    let mut labels = vec![0u32; lt.vertex_count() + 1];
    for (v, &l) in gl.labels.iter().enumerate() {
        labels[v + 1] = (l - min + 1) as u32;
    }
    let corner_label = |i: usize| labels[contour[i % n] as usize + 1];

    // Next strictly smaller label on the doubled corner sequence.
    const TO_ROOT: u32 = u32::MAX;
    let mut succ = vec![TO_ROOT; n];
    let mut stack: Vec<usize> = Vec::new();
    for i in (0..2 * n).rev() {
        while let Some(&j) = stack.last() {
            if corner_label(j) >= corner_label(i) {
                stack.pop();
            } else {
                break;
            }
        }
        if i < n {
            if let Some(&j) = stack.last() {
                succ[i] = (j % n) as u32;
            }
        }
        stack.push(i);
    }

    let mut ends = Vec::with_capacity(n);
    for i in 0..n {
        let tail = contour[i] + 1;
        let head = if succ[i] == TO_ROOT { 0 } else { contour[succ[i] as usize] + 1 };
        ends.push((tail, head));
    }

    // Arcs arriving at each corner, ordered from the one drawn from the
    // nearest corner behind to the farthest.
    let mut incoming: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut at_root: Vec<u32> = Vec::new();
    for i in 0..n {
        if succ[i] == TO_ROOT {
            at_root.push(i as u32);
        } else {
            incoming[succ[i] as usize].push(i as u32);
        }
    }
    for (c, list) in incoming.iter_mut().enumerate() {
        list.sort_by_key(|&j| std::cmp::Reverse((j as usize + n - c) % n));
    }

    // Rotation around looptree vertices: corners follow the looptree
    // rotation, and inside corner t the arcs are the incoming ones followed
    // by the outgoing one.
    let lt_rot = lt.rotation();
    let mut rot = vec![u32::MAX; 2 * n];
    let mut seen_corner = vec![false; n];
    for start in 0..n {
        if seen_corner[start] {
            continue;
        }
        let mut around: Vec<u32> = Vec::new();
        let mut t = start;
        loop {
            seen_corner[t] = true;
            around.extend(incoming[t].iter().map(|&j| 2 * j + 1));
            around.push(2 * t as u32);
            let s = (lt_rot[2 * t] / 2) as usize;
            t = (s + 1) % n;
            if t == start {
                break;
            }
        }
        for k in 0..around.len() {
            rot[around[k] as usize] = around[(k + 1) % around.len()];
        }
    }
    // Around v_0, the arcs come in reverse corner order.
    for k in 0..at_root.len() {
        let h = 2 * at_root[k] + 1;
        let next = 2 * at_root[(k + at_root.len() - 1) % at_root.len()] + 1;
        rot[h as usize] = next;
    }

    let mut face_of = vec![u32::MAX; 2 * n];
    let mut face_degrees = Vec::new();
    for h0 in 0..2 * n {
        if face_of[h0] != u32::MAX {
            continue;
        }
        let id = face_degrees.len() as u32;
        let mut degree = 0;
        let mut h = h0 as u32;
        loop {
            face_of[h as usize] = id;
            degree += 1;
            h = rot[(h ^ 1) as usize];
            if h as usize == h0 {
                break;
            }
        }
        face_degrees.push(degree);
    }

    let vertex_count = lt.vertex_count() + 1;
    let (adj_offsets, adj) = csr(&ends, vertex_count);
    let corner_vertex = contour.iter().map(|&v| v + 1).collect();
    let map = PointedMap {
        vertex_count,
        ends,
        rot,
        face_of,
        face_degrees,
        adj_offsets,
        adj,
        labels,
        corner_vertex,
        root_half_edge: 0,
    };
    Ok(map)
}

fn csr(ends: &[(u32, u32)], vertices: usize) -> (Vec<u32>, Vec<u32>) {
    let mut offsets = vec![0u32; vertices + 1];
    for &(u, v) in ends {
        offsets[u as usize + 1] += 1;
        offsets[v as usize + 1] += 1;
    }
    for v in 0..vertices {
        offsets[v + 1] += offsets[v];
    }
    let mut fill = offsets.clone();
    let mut adj = vec![0u32; 2 * ends.len()];
    for &(u, v) in ends {
        adj[fill[u as usize] as usize] = v;
        fill[u as usize] += 1;
        adj[fill[v as usize] as usize] = u;
        fill[v as usize] += 1;
    }
    (offsets, adj)
}

/// Outcome of the structural checks run on every constructed map.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BijectionAudit {
    pub edge_count_preserved: bool,
    pub vertex_count_is_n_plus_one: bool,
    pub faces_are_twice_cycles: bool,
    pub labels_are_distances: bool,
    pub euler_formula: bool,
    pub bipartite_faces: bool,
    pub successor_steps_are_unit: bool,
    pub quadrangulation: bool,
}

impl BijectionAudit {
    pub fn passed(&self) -> bool {
        self.first_failure().is_none()
    }

    /// Name of the first failing invariant. `quadrangulation` is a
    /// descriptive flag, not a requirement.
    pub fn first_failure(&self) -> Option<&'static str> {
        let checks = [
            (self.edge_count_preserved, "edge count preserved"),
            (self.vertex_count_is_n_plus_one, "vertex count equals N + 1"),
            (self.faces_are_twice_cycles, "face degrees equal twice the cycle lengths"),
            (self.labels_are_distances, "shifted labels equal distances to v_0"),
            (self.euler_formula, "Euler formula"),
            (self.bipartite_faces, "all face degrees even"),
            (self.successor_steps_are_unit, "successor steps decrease labels by one"),
        ];
        checks.iter().find(|(ok, _)| !ok).map(|&(_, name)| name)
    }
}

impl PointedMap {
    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edge_count(&self) -> usize {
        self.ends.len()
    }

    pub fn face_count(&self) -> usize {
        self.face_degrees.len()
    }

    pub fn face_degrees(&self) -> &[u32] {
        &self.face_degrees
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.ends
    }

    pub fn rotation(&self) -> &[u32] {
        &self.rot
    }

    /// Shifted labels per map vertex.
    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn distinguished(&self) -> u32 {
        0
    }

    /// Root half-edge, leaving `v_N` towards its successor.
    pub fn root_half_edge(&self) -> u32 {
        self.root_half_edge
    }

    /// Map vertex at contour time `t`.
    pub fn corner_vertex(&self, t: usize) -> u32 {
        self.corner_vertex[t]
    }

    pub fn neighbors(&self, v: u32) -> &[u32] {
        &self.adj[self.adj_offsets[v as usize] as usize..self.adj_offsets[v as usize + 1] as usize]
    }

    pub fn csr(&self) -> (&[u32], &[u32]) {
        (&self.adj_offsets, &self.adj)
    }

    pub fn audit(&self, lt: &Looptree) -> BijectionAudit {
        let mut faces: Vec<u32> = self.face_degrees.clone();
        let mut cycles: Vec<u32> = lt.cycles().iter().map(|c| 2 * c.length).collect();
        faces.sort_unstable();
        cycles.sort_unstable();
        let dist = bfs_distances(self, 0);
        let unit_steps = self.ends.iter().all(|&(u, v)| self.labels[v as usize] + 1 == self.labels[u as usize]);
        let v = self.vertex_count as i64;
        let e = self.ends.len() as i64;
        let f = self.face_degrees.len() as i64;
        BijectionAudit {
            edge_count_preserved: self.ends.len() == lt.n(),
            vertex_count_is_n_plus_one: self.vertex_count == lt.vertex_count() + 1,
            faces_are_twice_cycles: faces == cycles,
            labels_are_distances: dist == self.labels,
            euler_formula: v - e + f == 2,
            bipartite_faces: self.face_degrees.iter().all(|d| d % 2 == 0),
            successor_steps_are_unit: unit_steps,
            quadrangulation: self.face_degrees.iter().all(|&d| d == 4),
        }
    }

    pub fn metadata(&self) -> MapMetadata {
        let mut face_degree_histogram = BTreeMap::new();
        for &d in &self.face_degrees {
            *face_degree_histogram.entry(d).or_insert(0u64) += 1;
        }
        let mut vertex_degree_histogram = BTreeMap::new();
        for v in 0..self.vertex_count {
            let d = self.adj_offsets[v + 1] - self.adj_offsets[v];
            *vertex_degree_histogram.entry(d).or_insert(0u64) += 1;
        }
        let (u, v) = self.ends[0];
        MapMetadata {
            vertices: self.vertex_count,
            edges: self.ends.len(),
            faces: self.face_degrees.len(),
            face_degree_histogram,
            vertex_degree_histogram,
            distinguished_vertex: 0,
            root_edge: (u, v),
        }
    }

    /// `u,v,face_left,face_right` per edge, `u → v` being the arc from the
    /// corner to its successor.
    pub fn write_edge_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "u,v,face_left,face_right")?;
        for (i, &(u, v)) in self.ends.iter().enumerate() {
            writeln!(out, "{u},{v},{},{}", self.face_of[2 * i], self.face_of[2 * i + 1])?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapMetadata {
    pub vertices: usize,
    pub edges: usize,
    pub faces: usize,
    pub face_degree_histogram: BTreeMap<u32, u64>,
    pub vertex_degree_histogram: BTreeMap<u32, u64>,
    pub distinguished_vertex: u32,
    pub root_edge: (u32, u32),
}

pub fn bfs_distances(m: &PointedMap, source: u32) -> Vec<u32> {
    bfs_csr(&m.adj_offsets, &m.adj, source)
}

/// Sparse table for range minima of a label sequence.
#[derive(Debug, Clone)]
pub struct RangeMin {
    levels: Vec<Vec<f64>>,
}

impl RangeMin {
    pub fn new(values: &[f64]) -> Self {
        let mut levels = vec![values.to_vec()];
        let mut width = 1;
        while 2 * width <= values.len() {
            let prev = levels.last().unwrap();
            let next: Vec<f64> = (0..=values.len() - 2 * width).map(|i| prev[i].min(prev[i + width])).collect();
            levels.push(next);
            width *= 2;
        }
        Self { levels }
    }

    /// Minimum over indices `i..=j`, or `+∞` if the range is empty.
    pub fn min(&self, i: usize, j: usize) -> f64 {
        if i > j {
            return f64::INFINITY;
        }
        let k = (usize::BITS - 1 - (j - i + 1).leading_zeros()) as usize;
        self.levels[k][i].min(self.levels[k][j + 1 - (1 << k)])
    }
}

/// `D°` on a label process sampled on a sorted grid, with linear
/// interpolation between grid times.
#[derive(Debug, Clone)]
pub struct DCirc {
    times: Vec<f64>,
    values: Vec<f64>,
    table: RangeMin,
}

impl DCirc {
    pub fn new(z: &LabelProcess) -> Self {
        Self { times: z.times.clone(), values: z.values.clone(), table: RangeMin::new(&z.values) }
    }

    fn value_at(&self, t: f64) -> f64 {
        let i = self.times.partition_point(|&x| x <= t);
        if i == 0 {
            return self.values[0];
        }
        if i == self.times.len() {
            return *self.values.last().unwrap();
        }
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        let w = (t - t0) / (t1 - t0);
        self.values[i - 1] * (1.0 - w) + self.values[i] * w
    }

    /// `Z_s + Z_t − 2 max(inf_{[s,t]} Z, inf_{[0,s] ∪ [t,1]} Z)`.
    pub fn eval(&self, s: f64, t: f64) -> f64 {
        let (s, t) = if s <= t { (s, t) } else { (t, s) };
        let (zs, zt) = (self.value_at(s), self.value_at(t));
        let last = self.times.len() - 1;
        let below_s = self.times.partition_point(|&x| x < s);
        let upto_s = self.times.partition_point(|&x| x <= s);
        let below_t = self.times.partition_point(|&x| x < t);
        let upto_t = self.times.partition_point(|&x| x <= t);
        let ends = zs.min(zt);
        let inside = if below_t > upto_s { self.table.min(upto_s, below_t - 1) } else { f64::INFINITY };
        let before = if below_s > 0 { self.table.min(0, below_s - 1) } else { f64::INFINITY };
        let after = if upto_t <= last { self.table.min(upto_t, last) } else { f64::INFINITY };
        let inside = inside.min(ends);
        let outside = before.min(after).min(ends);
        (zs + zt - 2.0 * inside.max(outside)).max(0.0)
    }

    /// `D°` between grid indices.
    pub fn eval_index(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        let last = self.values.len() - 1;
        let inside = self.table.min(i, j);
        let outside = self.table.min(0, i).min(self.table.min(j, last));
        self.values[i] + self.values[j] - 2.0 * inside.max(outside)
    }
}

pub fn d_circ(z: &LabelProcess, s: f64, t: f64) -> f64 {
    DCirc::new(z).eval(s, t)
}

/// Pairwise distances among sampled vertices, one BFS per row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistanceMatrix {
    pub vertices: Vec<u32>,
    pub rows: Vec<Vec<u32>>,
}

impl DistanceMatrix {
    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.rows[i][j]
    }
}

/// Budget exhaustion with the rows that were completed.
#[derive(Debug, Clone)]
pub struct PartialMatrix {
    pub completed: DistanceMatrix,
    pub requested: usize,
    pub cost_per_row: u64,
    pub budget: u64,
}

impl From<PartialMatrix> for Error {
    fn from(p: PartialMatrix) -> Self {
        Error::Budget(format!(
            "{} of {} BFS rows fit in a budget of {} (each costs {})",
            p.completed.rows.len(),
            p.requested,
            p.budget,
            p.cost_per_row
        ))
    }
}

/// Distances among `sample` computed by BFS from every sampled vertex in
/// parallel. Each BFS costs `V + E` units of `budget`.
pub fn map_distance_matrix(
    offsets: &[u32],
    adj: &[u32],
    sample: &[u32],
    budget: u64,
) -> std::result::Result<DistanceMatrix, PartialMatrix> {
    let cost = (offsets.len() - 1 + adj.len() / 2) as u64;
    let affordable = if cost == 0 { sample.len() } else { (budget / cost).min(sample.len() as u64) as usize };
    let rows: Vec<Vec<u32>> = sample[..affordable]
        .par_iter()
        .map(|&s| {
            let d = bfs_csr(offsets, adj, s);
            sample.iter().map(|&t| d[t as usize]).collect()
        })
        .collect();
    let matrix = DistanceMatrix { vertices: sample.to_vec(), rows };
    if affordable < sample.len() {
        return Err(PartialMatrix { completed: matrix, requested: sample.len(), cost_per_row: cost, budget });
    }
    Ok(matrix)
}
