//! Discrete looptrees coded by Łukasiewicz excursions, and two ways of
//! measuring distances in them: breadth-first search on the graph and the
//! ancestral formula evaluated on the drift-interpolated coding path.
//!
//! The excursion `x_0, ..., x_n` is the depth-first coding of a plane tree in
//! which the vertex visited at time `k` has `x_k + 1` children. The looptree
//! replaces every internal vertex by a cycle through its children and merges
//! it with its last child, so looptree vertices are the leaves of the tree
//! (the `−1` steps). The contour edge `e_t` joins the vertices seen at times
//! `t` and `t + 1`.

use std::collections::{BTreeMap, VecDeque};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::path_codec::{LukasiewiczPath, PathKind};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cycle {
    pub length: u32,
    /// Depth-first time of the tree vertex the cycle replaces.
    pub owner_time: u32,
    /// Vertex through which the cycle hangs from its parent cycle.
    pub base: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Looptree {
    n: usize,
    vertex_count: usize,
    /// Looptree vertex visited at contour times `0..=n`.
    contour: Vec<u32>,
    /// Cycle containing each contour edge.
    edge_cycle: Vec<u32>,
    cycles: Vec<Cycle>,
    /// Rotation system on half-edges: `2t` leaves `contour[t]` along `e_t`,
    /// `2t + 1` is its twin. `rot` gives the next half-edge around a vertex.
    rot: Vec<u32>,
    adj_offsets: Vec<u32>,
    adj: Vec<u32>,
    last_time: Vec<u32>,
}

fn parents(w: &[i64], n: usize) -> Vec<u32> {
    // parent(k) = max{j < k : W_j ≤ W_k}
    let mut parent = vec![u32::MAX; n + 1];
    let mut stack: Vec<usize> = Vec::new();
    for k in 0..=n {
        while let Some(&top) = stack.last() {
            if w[top] > w[k] {
                stack.pop();
            } else {
                break;
            }
        }
        if let Some(&top) = stack.last() {
            parent[k] = top as u32;
        }
        stack.push(k);
    }
    parent
}

/// Builds the looptree coded by an excursion.
pub fn build_looptree(path: &LukasiewiczPath) -> Result<Looptree> {
    if !path.is_excursion() {
        return Err(Error::Validation("looptrees are coded by excursions; apply the cyclic shift first".into()));
    }
    let x = path.increments();
    let n = path.n();
    let w = path.partial_sums();
    let parent = parents(&w, n);

    let mut last_child = vec![u32::MAX; n + 1];
    for k in 1..=n {
        last_child[parent[k] as usize] = k as u32;
    }
    let mut leaf_id = vec![u32::MAX; n + 1];
    let mut vertex_count = 0u32;
    for k in 0..=n {
        if x[k] == -1 {
            leaf_id[k] = vertex_count;
            vertex_count += 1;
        }
    }
    let mut rep = vec![0u32; n + 1];
    for k in (0..=n).rev() {
        rep[k] = if x[k] == -1 { leaf_id[k] } else { rep[last_child[k] as usize] };
    }

    let mut cycle_of_owner = vec![u32::MAX; n + 1];
    let mut cycles = Vec::new();
    for k in 0..=n {
        if x[k] >= 0 {
            cycle_of_owner[k] = cycles.len() as u32;
            cycles.push(Cycle { length: (x[k] + 1) as u32, owner_time: k as u32, base: rep[k] });
        }
    }
    let edge_cycle: Vec<u32> = (0..n).map(|t| cycle_of_owner[parent[t + 1] as usize]).collect();

    // Previous edge within the same cycle, cyclically.
    let mut last_edge_of_cycle = vec![u32::MAX; cycles.len()];
    for (t, &c) in edge_cycle.iter().enumerate() {
        last_edge_of_cycle[c as usize] = t as u32;
    }
    let mut prev_in_cycle = vec![0u32; n];
    let mut latest = vec![u32::MAX; cycles.len()];
    for (t, &c) in edge_cycle.iter().enumerate() {
        let c = c as usize;
        prev_in_cycle[t] = if latest[c] == u32::MAX { last_edge_of_cycle[c] } else { latest[c] };
        latest[c] = t as u32;
    }
    let mut rot = vec![0u32; 2 * n];
    for t in 0..n {
        rot[2 * t + 1] = (2 * ((t + 1) % n)) as u32;
        rot[2 * t] = 2 * prev_in_cycle[t] + 1;
    }

    let contour: Vec<u32> = rep.clone();
    let (adj_offsets, adj) = adjacency(&contour, vertex_count as usize);
    let mut last_time = vec![0u32; vertex_count as usize];
    for (t, &v) in contour.iter().enumerate() {
        last_time[v as usize] = t as u32;
    }
    Ok(Looptree { n, vertex_count: vertex_count as usize, contour, edge_cycle, cycles, rot, adj_offsets, adj, last_time })
}

fn adjacency(contour: &[u32], vertices: usize) -> (Vec<u32>, Vec<u32>) {
    let mut degree = vec![0u32; vertices + 1];
    for pair in contour.windows(2) {
        degree[pair[0] as usize] += 1;
        degree[pair[1] as usize] += 1;
    }
    let mut offsets = vec![0u32; vertices + 1];
    for v in 0..vertices {
        offsets[v + 1] = offsets[v] + degree[v];
    }
    let mut fill = offsets.clone();
    let mut adj = vec![0u32; offsets[vertices] as usize];
    for pair in contour.windows(2) {
        let (u, v) = (pair[0] as usize, pair[1] as usize);
        adj[fill[u] as usize] = v as u32;
        fill[u] += 1;
        adj[fill[v] as usize] = u as u32;
        fill[v] += 1;
    }
    (offsets, adj)
}

/// Reads the coding excursion back off the rotation system: walking the
/// outer face from the root half-edge, an edge opening a cycle not seen
/// before contributes `length − 1`, any other edge `−1`.
pub fn encode_looptree(lt: &Looptree) -> LukasiewiczPath {
    let n = lt.n;
    let mut face_of_odd = vec![u32::MAX; n];
    let mut face_len = Vec::new();
    for e in 0..n {
        if face_of_odd[e] != u32::MAX {
            continue;
        }
        let id = face_len.len() as u32;
        let mut len = 0;
        let mut h = 2 * e as u32 + 1;
        loop {
            face_of_odd[(h / 2) as usize] = id;
            len += 1;
            h = lt.rot[(h ^ 1) as usize];
            if h == 2 * e as u32 + 1 {
                break;
            }
        }
        face_len.push(len);
    }
    let mut seen = vec![false; face_len.len()];
    let mut increments = Vec::with_capacity(n + 1);
    let mut h = 0u32;
    for _ in 0..n {
        let f = face_of_odd[(h / 2) as usize] as usize;
        if seen[f] {
            increments.push(-1);
        } else {
            seen[f] = true;
            increments.push(face_len[f] as i32 - 1);
        }
        h = lt.rot[(h ^ 1) as usize];
    }
    increments.push(-1);
    LukasiewiczPath::new(increments, PathKind::Excursion).expect("a looptree encodes to an excursion")
}

impl Looptree {
    /// Number of edges.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn root(&self) -> u32 {
        self.contour[0]
    }

    pub fn cycles(&self) -> &[Cycle] {
        &self.cycles
    }

    pub fn contour(&self) -> &[u32] {
        &self.contour
    }

    pub fn edge_cycle(&self) -> &[u32] {
        &self.edge_cycle
    }

    pub fn rotation(&self) -> &[u32] {
        &self.rot
    }

    pub fn neighbors(&self, v: u32) -> &[u32] {
        &self.adj[self.adj_offsets[v as usize] as usize..self.adj_offsets[v as usize + 1] as usize]
    }

    /// Adjacency in compressed rows: neighbours of `v` are
    /// `adj[offsets[v]..offsets[v + 1]]`, with multiplicity.
    pub fn csr(&self) -> (&[u32], &[u32]) {
        (&self.adj_offsets, &self.adj)
    }

    /// Last contour time at which `v` is visited; vertex ids are sorted by it.
    pub fn last_time(&self, v: u32) -> u32 {
        self.last_time[v as usize]
    }

    /// Endpoints of edge `e_t`.
    pub fn edge(&self, t: usize) -> (u32, u32) {
        (self.contour[t], self.contour[t + 1])
    }

    /// Distances from `source` to every vertex.
    pub fn bfs(&self, source: u32) -> Vec<u32> {
        bfs_csr(&self.adj_offsets, &self.adj, source)
    }

    pub fn graph_distance(&self, u: u32, v: u32) -> u32 {
        if u == v {
            return 0;
        }
        self.bfs(u)[v as usize]
    }

    pub fn cycle_histogram(&self) -> BTreeMap<u32, u64> {
        let mut h = BTreeMap::new();
        for c in &self.cycles {
            *h.entry(c.length).or_insert(0) += 1;
        }
        h
    }

    pub fn metadata(&self) -> LooptreeMetadata {
        LooptreeMetadata { n: self.n, vertices: self.vertex_count, root: self.root(), cycle_histogram: self.cycle_histogram() }
    }

    /// `vertex_u,vertex_v,cycle_id` per contour edge.
    pub fn write_edge_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "vertex_u,vertex_v,cycle_id")?;
        for t in 0..self.n {
            let (u, v) = self.edge(t);
            writeln!(out, "{u},{v},{}", self.edge_cycle[t])?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LooptreeMetadata {
    pub n: usize,
    pub vertices: usize,
    pub root: u32,
    pub cycle_histogram: BTreeMap<u32, u64>,
}

pub(crate) fn bfs_csr(offsets: &[u32], adj: &[u32], source: u32) -> Vec<u32> {
    let vertices = offsets.len() - 1;
    let mut dist = vec![u32::MAX; vertices];
    let mut queue = VecDeque::new();
    dist[source as usize] = 0;
    queue.push_back(source);
    while let Some(u) = queue.pop_front() {
        let d = dist[u as usize] + 1;
        for &v in &adj[offsets[u as usize] as usize..offsets[u as usize + 1] as usize] {
            if dist[v as usize] == u32::MAX {
                dist[v as usize] = d;
                queue.push_back(v);
            }
        }
    }
    dist
}

/// The coding path extended to real times: at integer `k` it jumps by
/// `Δ_k = x_k + 1` and then drifts at speed `−1`, so `Y(k−) = W_k` and
/// `Y(k) = W_k + Δ_k`. Times range over `[0, n]`.
#[derive(Debug, Clone)]
pub struct InterpolatedPath {
    n: usize,
    w: Vec<i64>,
    jump: Vec<i64>,
    parent: Vec<u32>,
    depth: Vec<u32>,
}

/// Element of an ancestral line: jump time and `R` value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ancestor {
    pub time: usize,
    pub r: f64,
}

impl InterpolatedPath {
    pub fn new(path: &LukasiewiczPath) -> Result<Self> {
        if !path.is_excursion() {
            return Err(Error::Validation("interpolation expects an excursion".into()));
        }
        let n = path.n();
        let w = path.partial_sums();
        let jump: Vec<i64> = path.increments().iter().map(|&x| x as i64 + 1).collect();
        let parent = parents(&w, n);
        let mut depth = vec![0u32; n + 1];
        for k in 1..=n {
            depth[k] = depth[parent[k] as usize] + 1;
        }
        Ok(Self { n, w, jump, parent, depth })
    }

    pub fn duration(&self) -> f64 {
        self.n as f64
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Jump size `Δ_k` at integer time `k`.
    pub fn jump(&self, k: usize) -> i64 {
        self.jump[k]
    }

    fn check(&self, t: f64) -> Result<()> {
        if t >= 0.0 && t <= self.n as f64 {
            Ok(())
        } else {
            Err(Error::OutOfRange { time: t, duration: self.n as f64 })
        }
    }

    fn split(t: f64) -> (usize, f64) {
        let k = t.floor();
        (k as usize, t - k)
    }

    pub fn value(&self, t: f64) -> Result<f64> {
        self.check(t)?;
        let (k, frac) = Self::split(t);
        Ok((self.w[k] + self.jump[k]) as f64 - frac)
    }

    pub fn left_limit(&self, t: f64) -> Result<f64> {
        self.check(t)?;
        let (k, frac) = Self::split(t);
        Ok(if frac == 0.0 { self.w[k] as f64 } else { (self.w[k] + self.jump[k]) as f64 - frac })
    }

    /// `inf_{[s,t]} Y` for `s ≤ t`, including left limits inside `(s, t]`.
    pub fn infimum(&self, s: f64, t: f64) -> Result<f64> {
        self.check(s)?;
        self.check(t)?;
        let (a, b) = if s <= t { (s, t) } else { (t, s) };
        let mut best = self.value(a)?.min(self.left_limit(b)?).min(self.value(b)?);
        let first = a.floor() as usize + 1;
        let last = b.ceil() as usize;
        for k in first..last.min(self.n + 1) {
            if (k as f64) <= b {
                best = best.min(self.w[k] as f64);
            }
        }
        Ok(best)
    }

    /// `d_Y(s,t) = Y_s + Y_{t−} − 2 inf_{[s,t]} Y` for `s ≤ t`.
    pub fn path_distance(&self, s: f64, t: f64) -> Result<f64> {
        let (a, b) = if s <= t { (s, t) } else { (t, s) };
        if a == b {
            return Ok(0.0);
        }
        Ok(self.value(a)? + self.left_limit(b)? - 2.0 * self.infimum(a, b)?)
    }

    /// Nearest strict ancestor of `t`, or `None` at time 0.
    fn first_ancestor(&self, t: f64) -> Option<Ancestor> {
        let (k, frac) = Self::split(t);
        if frac == 0.0 {
            if k == 0 {
                return None;
            }
            let p = self.parent[k] as usize;
            return Some(Ancestor { time: p, r: (self.w[k] - self.w[p]) as f64 });
        }
        if self.jump[k] >= 1 {
            return Some(Ancestor { time: k, r: self.jump[k] as f64 - frac });
        }
        // On a drift segment after a zero jump the path sits strictly below
        // W_k, so the first ancestor is the last time strictly below it.
        let p = self.parent[k + 1] as usize;
        Some(Ancestor { time: p, r: (self.w[k] - self.w[p]) as f64 - frac })
    }

    fn step_up(&self, a: Ancestor) -> Option<Ancestor> {
        if a.time == 0 {
            return None;
        }
        let p = self.parent[a.time] as usize;
        Some(Ancestor { time: p, r: (self.w[a.time] - self.w[p]) as f64 })
    }

    /// Full ancestral line of `t`, nearest first, including `R = 0` entries.
    fn line(&self, t: f64) -> Vec<Ancestor> {
        let mut out = Vec::new();
        let mut cur = self.first_ancestor(t);
        while let Some(a) = cur {
            out.push(a);
            cur = self.step_up(a);
        }
        out
    }

    /// Jump times `r ≺ t` with `R^t_r > 0`, in increasing time order.
    pub fn ancestors(&self, t: f64) -> Result<Vec<Ancestor>> {
        self.check(t)?;
        let mut line: Vec<Ancestor> = self.line(t).into_iter().filter(|a| a.r > 0.0).collect();
        line.reverse();
        Ok(line)
    }

    /// `C_t = Y_{t−} − Σ_{r≺t} R^t_r`. The sum telescopes to `Y_{t−}` on
    /// these paths, so `C` vanishes identically up to rounding.
    pub fn continuous_part(&self, t: f64) -> Result<f64> {
        let y = self.left_limit(t)?;
        let total: f64 = self.line(t).iter().map(|a| a.r).sum();
        Ok(y - total)
    }

    fn cycle_gap(&self, r: usize, a: f64, b: f64) -> f64 {
        let gap = (a - b).abs();
        gap.min(self.jump[r] as f64 - gap)
    }

    /// Looptree distance `d^a(s, t)`: cycle distances along the two
    /// ancestral lines below their last common ancestor, plus the cycle
    /// distance at that ancestor, plus `a` times the tree distance coded by
    /// the continuous part.
    pub fn formula_distance(&self, a: f64, s: f64, t: f64) -> Result<f64> {
        self.check(s)?;
        self.check(t)?;
        let (s, t) = if s <= t { (s, t) } else { (t, s) };
        if s == t {
            return Ok(0.0);
        }
        let (ks, fs) = Self::split(s);
        // An integer time can itself be an ancestor of t; it enters its own
        // line with R^s_s = Δ_s.
        let mut left = if fs == 0.0 {
            Some(Ancestor { time: ks, r: self.jump[ks] as f64 })
        } else {
            self.first_ancestor(s)
        };
        let mut right = self.first_ancestor(t);
        let mut total = 0.0;
        loop {
            let (l, r) = match (left, right) {
                (Some(l), Some(r)) => (l, r),
                _ => break,
            };
            if l.time == r.time {
                total += self.cycle_gap(l.time, l.r, r.r);
                break;
            }
            if self.depth[l.time] >= self.depth[r.time] {
                total += self.cycle_gap(l.time, 0.0, l.r);
                left = self.step_up(l);
            } else {
                total += self.cycle_gap(r.time, 0.0, r.r);
                right = self.step_up(r);
            }
        }
        // C vanishes on drift-interpolated paths, so its infimum over [s, t]
        // is 0 and d_C reduces to C_s + C_t.
        let tree_part = if a > 0.0 {
            (self.continuous_part(s)? + self.continuous_part(t)?).max(0.0)
        } else {
            0.0
        };
        Ok(total + a * tree_part)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path_codec::{sample_bridge, vervaat, StepLaw};
    use crate::rng::stream_rng;
    use proptest::prelude::*;

    fn exc(x: &[i32]) -> LukasiewiczPath {
        LukasiewiczPath::new(x.to_vec(), PathKind::Excursion).unwrap()
    }

    fn random_excursion(seed: u64, n: usize) -> LukasiewiczPath {
        let law = StepLaw::new(vec![0.5, 0.15, 0.15, 0.1, 0.05, 0.05], None).unwrap();
        let mut rng = stream_rng(seed, 0);
        vervaat(&sample_bridge(&law, n, &mut rng).unwrap())
    }

    /// Faces of the rotation system: orbits of `h ↦ rot(opp(h))`.
    fn face_degrees(lt: &Looptree) -> Vec<usize> {
        let mut seen = vec![false; 2 * lt.n()];
        let mut out = Vec::new();
        for h0 in 0..2 * lt.n() {
            if seen[h0] {
                continue;
            }
            let mut len = 0;
            let mut h = h0;
            while !seen[h] {
                seen[h] = true;
                len += 1;
                h = lt.rotation()[h ^ 1] as usize;
            }
            out.push(len);
        }
        out
    }

    fn vertex_orbits(lt: &Looptree) -> usize {
        let mut seen = vec![false; 2 * lt.n()];
        let mut count = 0;
        for h0 in 0..2 * lt.n() {
            if !seen[h0] {
                count += 1;
                let mut h = h0;
                while !seen[h] {
                    seen[h] = true;
                    h = lt.rotation()[h] as usize;
                }
            }
        }
        count
    }

    #[test]
    fn single_loop() {
        let lt = build_looptree(&exc(&[0, -1])).unwrap();
        assert_eq!((lt.n(), lt.vertex_count(), lt.cycles().len()), (1, 1, 1));
        assert_eq!(lt.cycles()[0].length, 1);
        assert_eq!(lt.edge(0), (0, 0));
        assert_eq!(encode_looptree(&lt).increments(), &[0, -1]);
    }

    #[test]
    fn triangle() {
        let lt = build_looptree(&exc(&[2, -1, -1, -1])).unwrap();
        assert_eq!((lt.vertex_count(), lt.cycles().len(), lt.cycles()[0].length), (3, 1, 3));
        assert_eq!(lt.root(), 2);
        assert_eq!(encode_looptree(&lt).increments(), &[2, -1, -1, -1]);
    }

    #[test]
    fn nested_two_cycles() {
        // Hand construction: outer 2-cycle {root, v1}, inner 2-cycle {v1, v0}.
        let lt = build_looptree(&exc(&[1, 1, -1, -1, -1])).unwrap();
        assert_eq!(lt.vertex_count(), 3);
        let lengths: Vec<u32> = lt.cycles().iter().map(|c| c.length).collect();
        assert_eq!(lengths, vec![2, 2]);
        assert_eq!(lt.contour(), &[2, 1, 0, 1, 2]);
        assert_eq!(lt.cycles()[1].base, 1);
        assert_eq!(lt.graph_distance(0, 2), 2);
        assert_eq!(lt.graph_distance(1, 1), 0);
    }

    #[test]
    fn five_cycle_distance() {
        let lt = build_looptree(&exc(&[4, -1, -1, -1, -1, -1])).unwrap();
        assert_eq!(lt.graph_distance(0, 2), 2);
        let y = InterpolatedPath::new(&exc(&[4, -1, -1, -1, -1, -1])).unwrap();
        assert_eq!(y.formula_distance(1.0, 2.0, 0.0).unwrap(), 2.0);
        assert_eq!(y.formula_distance(1.0, 2.0, 5.0).unwrap(), 2.0);
        assert_eq!(y.formula_distance(1.0, 3.0, 3.0).unwrap(), 0.0);
    }

    #[test]
    fn ancestor_examples() {
        let y = InterpolatedPath::new(&exc(&[2, -1, -1, -1])).unwrap();
        assert_eq!(y.ancestors(2.5).unwrap(), vec![Ancestor { time: 0, r: 0.5 }]);
        let y = InterpolatedPath::new(&exc(&[1, 1, -1, -1, -1])).unwrap();
        let line = y.ancestors(2.0).unwrap();
        assert_eq!(line, vec![Ancestor { time: 0, r: 1.0 }, Ancestor { time: 1, r: 1.0 }]);
        // Before the first jump has any effect: the root time has no ancestors.
        assert!(y.ancestors(0.0).unwrap().is_empty());
        assert!(matches!(y.ancestors(4.5), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn ancestors_match_definition_of_r() {
        // R^t_r = inf_{[r,t]} Y − Y_{r−} for every listed ancestor.
        let path = random_excursion(11, 60);
        let y = InterpolatedPath::new(&path).unwrap();
        for i in 0..=240 {
            let t = i as f64 * 0.25;
            for a in y.ancestors(t).unwrap() {
                let expected = y.infimum(a.time as f64, t).unwrap() - y.left_limit(a.time as f64).unwrap();
                assert!((a.r - expected).abs() < 1e-12, "t={t} r={}", a.time);
            }
        }
    }

    #[test]
    fn continuous_part_vanishes() {
        let path = random_excursion(12, 200);
        let y = InterpolatedPath::new(&path).unwrap();
        for i in 0..=800 {
            assert!(y.continuous_part(i as f64 * 0.25).unwrap().abs() < 1e-9);
        }
    }

    #[test]
    fn quadrangulation_paths_give_two_cycles() {
        let mut rng = stream_rng(13, 0);
        let b = sample_bridge(&StepLaw::plus_minus_one(), 500, &mut rng).unwrap();
        let lt = build_looptree(&vervaat(&b)).unwrap();
        assert!(lt.cycles().iter().all(|c| c.length == 2));
    }

    #[test]
    fn formula_equals_bfs_exhaustively_on_small_paths() {
        // All excursions with steps in {−1, 0, 1, 2} and n ≤ 8, all time pairs.
        let mut checked = 0;
        for n in 1..=8usize {
            let len = n + 1;
            for code in 0..4usize.pow(len as u32) {
                let mut c = code;
                let x: Vec<i32> = (0..len).map(|_| { let d = (c % 4) as i32 - 1; c /= 4; d }).collect();
                let Ok(path) = LukasiewiczPath::new(x, PathKind::Excursion) else { continue };
                let lt = build_looptree(&path).unwrap();
                let y = InterpolatedPath::new(&path).unwrap();
                for s in 0..=n {
                    let dist = lt.bfs(lt.contour()[s]);
                    for t in 0..=n {
                        let f = y.formula_distance(1.0, s as f64, t as f64).unwrap();
                        assert_eq!(f, dist[lt.contour()[t] as usize] as f64, "{:?} s={s} t={t}", path.increments());
                    }
                }
                checked += 1;
            }
        }
        assert!(checked > 1000);
    }

    #[test]
    fn exports() {
        let lt = build_looptree(&exc(&[1, 1, -1, -1, -1])).unwrap();
        let mut buf = Vec::new();
        lt.write_edge_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 5);
        assert!(text.starts_with("vertex_u,vertex_v,cycle_id\n2,1,0\n1,0,1\n"));
        let meta = serde_json::to_value(lt.metadata()).unwrap();
        assert_eq!(meta["cycle_histogram"]["2"], 2);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]
        #[test]
        fn round_trip_and_structure(seed in any::<u64>(), n in 1usize..1000) {
            let path = random_excursion(seed, n);
            let lt = build_looptree(&path).unwrap();
            let back = encode_looptree(&lt);
            prop_assert_eq!(back.increments(), path.increments());
            prop_assert_eq!(build_looptree(&encode_looptree(&lt)).unwrap(), lt.clone());
            prop_assert_eq!(lt.vertex_count(), path.vertex_count());
            let mut lengths: Vec<u32> = lt.cycles().iter().map(|c| c.length).collect();
            let mut jumps: Vec<u32> = path.increments().iter().filter(|&&x| x >= 0).map(|&x| (x + 1) as u32).collect();
            lengths.sort();
            jumps.sort();
            prop_assert_eq!(lengths, jumps);
            // Planar embedding: one rotation orbit per vertex, one face per
            // cycle plus the outer face, whose degree is n.
            prop_assert_eq!(vertex_orbits(&lt), lt.vertex_count());
            let faces = face_degrees(&lt);
            prop_assert_eq!(faces.len(), lt.cycles().len() + 1);
            prop_assert!(faces.contains(&lt.n()));
            // Canonical order: ids sorted by last visit.
            for v in 1..lt.vertex_count() as u32 {
                prop_assert!(lt.last_time(v - 1) < lt.last_time(v));
            }
        }

        #[test]
        fn formula_is_a_pseudo_distance_below_path_distance(seed in any::<u64>(), n in 2usize..120) {
            let path = random_excursion(seed, n);
            let y = InterpolatedPath::new(&path).unwrap();
            let mut rng = stream_rng(seed, 7);
            use rand::Rng;
            let times: Vec<f64> = (0..12).map(|_| (rng.random::<f64>() * n as f64 * 4.0).floor() / 4.0).collect();
            for &s in &times {
                for &t in &times {
                    let d = y.formula_distance(1.0, s, t).unwrap();
                    prop_assert!((d - y.formula_distance(1.0, t, s).unwrap()).abs() == 0.0);
                    prop_assert!(d <= y.path_distance(s, t).unwrap() + 1e-12);
                    for &u in &times {
                        let via = y.formula_distance(1.0, s, u).unwrap() + y.formula_distance(1.0, u, t).unwrap();
                        prop_assert!(d <= via + 1e-9);
                    }
                }
            }
        }
    }
}
