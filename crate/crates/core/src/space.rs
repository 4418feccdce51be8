//! Finite discrete metric measure spaces.
//!
//! A [`Space`] is a connected weighted multigraph: vertices carry a measure
//! (used for balls and function averages), edges carry a positive length and a
//! measure (used for line integrals and densities). The metric is the
//! shortest-path distance induced by edge lengths.
//!
//! Balls use the open convention `{z : d(x,z) < r}`, so `μ(B(x, d(x,z))) > 0`
//! whenever `z ≠ x`; this removes the 0/0 in the Riesz kernel.

use std::collections::BTreeMap;
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};

use crate::error::{MmsError, Result};

/// Beyond this many vertices, point distance queries still cache rows, but
/// callers doing full sweeps should use [`Space::dist_row_uncached`].
const SMALL_SPACE: usize = 4096;

#[derive(Clone, Debug)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub length: f64,
    pub measure: f64,
}

impl Edge {
    pub fn other(&self, w: usize) -> usize {
        if w == self.u {
            self.v
        } else {
            self.u
        }
    }
}

/// Finite metric measure space. Immutable after construction; all queries are
/// read-only and safe to issue from concurrent workers.
pub struct Space {
    ids: Vec<String>,
    index: BTreeMap<String, usize>,
    vmeasure: Vec<f64>,
    pos: Vec<Option<[f64; 2]>>,
    edges: Vec<Edge>,
    /// Per vertex: (edge index, other endpoint), sorted for deterministic
    /// traversal order.
    adj: Vec<Vec<(usize, usize)>>,
    dist_cache: RwLock<BTreeMap<usize, Arc<Vec<f64>>>>,
}

impl std::fmt::Debug for Space {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Space")
            .field("vertices", &self.ids.len())
            .field("edges", &self.edges.len())
            .finish()
    }
}

impl Clone for Space {
    fn clone(&self) -> Self {
        Space {
            ids: self.ids.clone(),
            index: self.index.clone(),
            vmeasure: self.vmeasure.clone(),
            pos: self.pos.clone(),
            edges: self.edges.clone(),
            adj: self.adj.clone(),
            dist_cache: RwLock::new(BTreeMap::new()),
        }
    }
}

/// Incremental construction with validation at `build`.
#[derive(Default)]
pub struct SpaceBuilder {
    ids: Vec<String>,
    index: BTreeMap<String, usize>,
    vmeasure: Vec<f64>,
    pos: Vec<Option<[f64; 2]>>,
    edges: Vec<Edge>,
}

impl SpaceBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn vertex(&mut self, id: &str, measure: f64) -> usize {
        self.vertex_at(id, measure, None)
    }

    pub fn vertex_at(&mut self, id: &str, measure: f64, pos: Option<[f64; 2]>) -> usize {
        if let Some(&i) = self.index.get(id) {
            return i;
        }
        let i = self.ids.len();
        self.ids.push(id.to_string());
        self.index.insert(id.to_string(), i);
        self.vmeasure.push(measure);
        self.pos.push(pos);
        i
    }

    pub fn set_vertex_measure(&mut self, v: usize, measure: f64) {
        self.vmeasure[v] = measure;
    }

    pub fn edge(&mut self, u: usize, v: usize, length: f64, measure: f64) -> usize {
        self.edges.push(Edge {
            u,
            v,
            length,
            measure,
        });
        self.edges.len() - 1
    }

    pub fn set_edge_measure(&mut self, e: usize, measure: f64) {
        self.edges[e].measure = measure;
    }

    pub fn build(self) -> Result<Space> {
        if self.ids.is_empty() {
            return Err(MmsError::InvalidSpace("no vertices".into()));
        }
        let mut total = 0.0;
        for (i, &m) in self.vmeasure.iter().enumerate() {
            if !m.is_finite() || m < 0.0 {
                return Err(MmsError::InvalidSpace(format!(
                    "vertex `{}` has invalid measure {m}",
                    self.ids[i]
                )));
            }
            total += m;
        }
        if total <= 0.0 {
            return Err(MmsError::InvalidSpace("total vertex measure is zero".into()));
        }
        for e in &self.edges {
            if e.u == e.v {
                return Err(MmsError::InvalidSpace(format!(
                    "self-loop at `{}`",
                    self.ids[e.u]
                )));
            }
            if !e.length.is_finite() || e.length <= 0.0 {
                return Err(MmsError::InvalidSpace(format!(
                    "edge {}-{} has invalid length {}",
                    self.ids[e.u], self.ids[e.v], e.length
                )));
            }
            if !e.measure.is_finite() || e.measure < 0.0 {
                return Err(MmsError::InvalidSpace(format!(
                    "edge {}-{} has invalid measure {}",
                    self.ids[e.u], self.ids[e.v], e.measure
                )));
            }
        }
        let n = self.ids.len();
        let mut adj = vec![Vec::new(); n];
        for (k, e) in self.edges.iter().enumerate() {
            adj[e.u].push((k, e.v));
            adj[e.v].push((k, e.u));
        }
        for a in adj.iter_mut() {
            a.sort_by_key(|&(e, w)| (w, e));
        }
        // connectivity
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &(_, w) in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        if count != n {
            return Err(MmsError::InvalidSpace("space is not connected".into()));
        }
        Ok(Space {
            ids: self.ids,
            index: self.index,
            vmeasure: self.vmeasure,
            pos: self.pos,
            edges: self.edges,
            adj,
            dist_cache: RwLock::new(BTreeMap::new()),
        })
    }
}

impl Space {
    pub fn vertex_count(&self) -> usize {
        self.ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> &Edge {
        &self.edges[e]
    }

    pub fn adjacency(&self, v: usize) -> &[(usize, usize)] {
        &self.adj[v]
    }

    pub fn id(&self, v: usize) -> &str {
        &self.ids[v]
    }

    pub fn vertex_index(&self, id: &str) -> Result<usize> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| MmsError::UnknownVertex(id.to_string()))
    }

    pub fn vertex_measure(&self, v: usize) -> f64 {
        self.vmeasure[v]
    }

    pub fn total_vertex_measure(&self) -> f64 {
        self.vmeasure.iter().sum()
    }

    pub fn total_edge_measure(&self) -> f64 {
        self.edges.iter().map(|e| e.measure).sum()
    }

    pub fn position(&self, v: usize) -> Option<[f64; 2]> {
        self.pos[v]
    }

    pub fn max_edge_length(&self) -> f64 {
        self.edges.iter().map(|e| e.length).fold(0.0, f64::max)
    }

    pub fn min_edge_length(&self) -> f64 {
        self.edges
            .iter()
            .map(|e| e.length)
            .fold(f64::INFINITY, f64::min)
    }

    /// Dijkstra from `source`. Ties between equal-length routes resolve to the
    /// lexicographically smallest (predecessor, edge) pair so that geodesics
    /// are reproducible.
    pub fn dist_row_uncached(&self, source: usize) -> Vec<f64> {
        self.dijkstra(source).0
    }

    fn dijkstra(&self, source: usize) -> (Vec<f64>, Vec<Option<(usize, usize)>>) {
        let n = self.ids.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; n];
        let mut done = vec![false; n];
        let mut heap = std::collections::BinaryHeap::new();
        dist[source] = 0.0;
        heap.push(HeapItem {
            dist: 0.0,
            vertex: source,
        });
        while let Some(HeapItem { dist: d, vertex: v }) = heap.pop() {
            if done[v] {
                continue;
            }
            done[v] = true;
            for &(e, w) in &self.adj[v] {
                let nd = d + self.edges[e].length;
                if nd < dist[w] {
                    dist[w] = nd;
                    parent[w] = Some((v, e));
                    heap.push(HeapItem { dist: nd, vertex: w });
                } else if nd == dist[w] && !done[w] {
                    // deterministic tie handling
                    if let Some((pv, pe)) = parent[w] {
                        if (v, e) < (pv, pe) {
                            parent[w] = Some((v, e));
                        }
                    }
                }
            }
        }
        (dist, parent)
    }

    /// Dijkstra truncated at `radius`: all (vertex, dist) with dist < radius,
    /// in increasing (dist, vertex) order.
    pub fn dist_bounded(&self, source: usize, radius: f64) -> Vec<(usize, f64)> {
        let mut dist: std::collections::BTreeMap<usize, f64> = Default::default();
        let mut done: std::collections::BTreeSet<usize> = Default::default();
        let mut heap = std::collections::BinaryHeap::new();
        dist.insert(source, 0.0);
        heap.push(HeapItem {
            dist: 0.0,
            vertex: source,
        });
        let mut out = Vec::new();
        while let Some(HeapItem { dist: d, vertex: v }) = heap.pop() {
            if d >= radius {
                break;
            }
            if !done.insert(v) {
                continue;
            }
            out.push((v, d));
            for &(e, w) in &self.adj[v] {
                let nd = d + self.edges[e].length;
                if nd < radius && dist.get(&w).is_none_or(|&old| nd < old) {
                    dist.insert(w, nd);
                    heap.push(HeapItem { dist: nd, vertex: w });
                }
            }
        }
        out
    }

    /// Cached distance row. Rows accumulate; full sweeps over large spaces
    /// should prefer [`Space::dist_row_uncached`].
    pub fn dist_row(&self, source: usize) -> Arc<Vec<f64>> {
        if let Some(row) = self.dist_cache.read().unwrap().get(&source) {
            return row.clone();
        }
        let row = Arc::new(self.dist_row_uncached(source));
        self.dist_cache
            .write()
            .unwrap()
            .insert(source, row.clone());
        row
    }

    pub fn distance(&self, u: usize, v: usize) -> f64 {
        if u == v {
            return 0.0;
        }
        self.dist_row(u)[v]
    }

    pub fn is_small(&self) -> bool {
        self.ids.len() <= SMALL_SPACE
    }

    pub fn diameter(&self) -> f64 {
        let mut d = 0.0f64;
        for v in 0..self.ids.len() {
            let row = self.dist_row_uncached(v);
            for &x in row.iter() {
                if x.is_finite() {
                    d = d.max(x);
                }
            }
        }
        d
    }

    /// Deterministic shortest path from `x` to `y` (vertex and edge sequence).
    pub fn geodesic(&self, x: usize, y: usize) -> Result<(Vec<usize>, Vec<usize>)> {
        if x == y {
            return Ok((vec![x], vec![]));
        }
        let (dist, parent) = self.dijkstra(x);
        if !dist[y].is_finite() {
            return Err(MmsError::Disconnected(
                self.ids[x].clone(),
                self.ids[y].clone(),
            ));
        }
        let mut verts = vec![y];
        let mut edges = Vec::new();
        let mut cur = y;
        while cur != x {
            let (p, e) = parent[cur].expect("parent chain broken");
            edges.push(e);
            verts.push(p);
            cur = p;
        }
        verts.reverse();
        edges.reverse();
        Ok((verts, edges))
    }

    /// Open metric ball. Radius 0 yields an empty ball (flagged by the empty
    /// member list, not an error).
    pub fn ball(&self, center: usize, radius: f64) -> Ball {
        let row = self.dist_row(center);
        self.ball_from_row(center, radius, &row)
    }

    /// Same as [`Space::ball`] but against a caller-supplied distance row
    /// (for sweeps that manage their own rows).
    pub fn ball_from_row(&self, center: usize, radius: f64, row: &[f64]) -> Ball {
        let mut members = Vec::new();
        let mut measure = 0.0;
        for (v, &d) in row.iter().enumerate() {
            if d < radius {
                members.push(v);
                measure += self.vmeasure[v];
            }
        }
        Ball {
            center,
            radius,
            members,
            measure,
        }
    }

    /// Edges with both endpoints inside the vertex set (membership given as a
    /// sorted slice).
    pub fn interior_edges(&self, members: &[usize]) -> Vec<usize> {
        let mut mask = vec![false; self.ids.len()];
        for &v in members {
            mask[v] = true;
        }
        (0..self.edges.len())
            .filter(|&e| mask[self.edges[e].u] && mask[self.edges[e].v])
            .collect()
    }

    /// Copy of the space with every edge length multiplied by `s`.
    pub fn scaled_lengths(&self, s: f64) -> Space {
        let mut edges = self.edges.clone();
        for e in edges.iter_mut() {
            e.length *= s;
        }
        Space {
            ids: self.ids.clone(),
            index: self.index.clone(),
            vmeasure: self.vmeasure.clone(),
            pos: self.pos.clone(),
            edges,
            adj: self.adj.clone(),
            dist_cache: RwLock::new(BTreeMap::new()),
        }
    }

    /// Copy with all vertex measures multiplied by `s`.
    pub fn scaled_vertex_measures(&self, s: f64) -> Space {
        let mut out = self.clone();
        for m in out.vmeasure.iter_mut() {
            *m *= s;
        }
        out
    }
}

#[derive(Copy, Clone, PartialEq)]
struct HeapItem {
    dist: f64,
    vertex: usize,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // min-heap on (dist, vertex)
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Open metric ball with its member vertices and total vertex measure.
#[derive(Clone, Debug)]
pub struct Ball {
    pub center: usize,
    pub radius: f64,
    /// Sorted vertex indices with d(center, ·) < radius.
    pub members: Vec<usize>,
    pub measure: f64,
}

impl Ball {
    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Riesz kernel field for a vertex pair: value at z is
/// `d(x,z)/μ(B(x,d(x,z))) + d(y,z)/μ(B(y,d(y,z)))`, where a summand with
/// d = 0 contributes 0 (the r/μ(B(x,r)) → 0 limit on a finite space).
/// The window is `B(x, C d(x,y)) ∪ B(y, C d(x,y))`.
#[derive(Clone, Debug)]
pub struct RieszKernelField {
    pub x: usize,
    pub y: usize,
    pub c: f64,
    pub values: Vec<f64>,
    /// Sorted vertex indices of the window.
    pub window: Vec<usize>,
    window_mask: Vec<bool>,
}

impl RieszKernelField {
    pub fn in_window(&self, v: usize) -> bool {
        self.window_mask[v]
    }

    /// Kernel averaged over the edge's endpoints.
    pub fn on_edge(&self, space: &Space, e: usize) -> f64 {
        let ed = space.edge(e);
        0.5 * (self.values[ed.u] + self.values[ed.v])
    }

    /// An edge counts as inside the window when both endpoints are.
    pub fn edge_in_window(&self, space: &Space, e: usize) -> bool {
        let ed = space.edge(e);
        self.window_mask[ed.u] && self.window_mask[ed.v]
    }
}

/// Riesz kernel of Semmes-pencil normalization for the pair (x, y).
pub fn riesz_kernel(space: &Space, x: usize, y: usize, c: f64) -> Result<RieszKernelField> {
    if x == y {
        return Err(MmsError::InvalidParams(
            "riesz kernel needs two distinct vertices".into(),
        ));
    }
    if c < 1.0 {
        return Err(MmsError::InvalidParams(format!(
            "riesz kernel window constant must be >= 1, got {c}"
        )));
    }
    let row_x = space.dist_row(x);
    let row_y = space.dist_row(y);
    let dxy = row_x[y];
    if !dxy.is_finite() {
        return Err(MmsError::Disconnected(
            space.id(x).to_string(),
            space.id(y).to_string(),
        ));
    }
    let n = space.vertex_count();
    let mut values = vec![0.0; n];
    // Ball measures for all realized radii in one sorted sweep per endpoint.
    let mass_at = |row: &[f64], d: f64| -> f64 {
        // μ({z : dist < d})
        let mut m = 0.0;
        for (v, &dd) in row.iter().enumerate() {
            if dd < d {
                m += space.vertex_measure(v);
            }
        }
        m
    };
    // O(n log n) variant: sort distances once per endpoint and prefix-sum.
    let kernel_part = |row: &[f64]| -> Vec<f64> {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| row[a].total_cmp(&row[b]).then(a.cmp(&b)));
        let mut part = vec![0.0; n];
        let mut prefix = 0.0; // measure of {dist < current d}
        let mut i = 0;
        while i < n {
            let d = row[order[i]];
            let mut j = i;
            let mut shell = 0.0;
            while j < n && row[order[j]] == d {
                shell += space.vertex_measure(order[j]);
                j += 1;
            }
            for &v in &order[i..j] {
                if d > 0.0 && d.is_finite() {
                    part[v] = d / prefix;
                }
            }
            prefix += shell;
            i = j;
        }
        part
    };
    let px = kernel_part(&row_x);
    let py = kernel_part(&row_y);
    for v in 0..n {
        values[v] = px[v] + py[v];
    }
    debug_assert!({
        let z = (0..n).find(|&v| v != x && row_x[v].is_finite());
        z.is_none_or(|v| {
            (px[v] - row_x[v] / mass_at(&row_x, row_x[v])).abs() < 1e-12 * (1.0 + px[v].abs())
        })
    });
    let r = c * dxy;
    let mut window_mask = vec![false; n];
    let mut window = Vec::new();
    for v in 0..n {
        if row_x[v] < r || row_y[v] < r {
            window_mask[v] = true;
            window.push(v);
        }
    }
    Ok(RieszKernelField {
        x,
        y,
        c,
        values,
        window,
        window_mask,
    })
}

/// Lower estimate of the doubling constant: max over centers and sampled radii
/// of μ(B(x,2r))/μ(B(x,r)), with empty-ball ratios skipped.
#[derive(Clone, Debug, Serialize)]
pub struct DoublingEstimate {
    pub value: f64,
    pub skipped: usize,
    pub witness_center: Option<String>,
    pub witness_radius: f64,
}

pub fn doubling_constant(space: &Space, radius_samples: &[f64]) -> Result<DoublingEstimate> {
    if radius_samples.is_empty() || radius_samples.iter().any(|&r| !(r > 0.0)) {
        return Err(MmsError::InvalidParams(
            "radius samples must be nonempty and positive".into(),
        ));
    }
    let mut best = 1.0f64;
    let mut witness = None;
    let mut witness_radius = 0.0;
    let mut skipped = 0usize;
    for v in 0..space.vertex_count() {
        let row = space.dist_row_uncached(v);
        for &r in radius_samples {
            let small: f64 = row
                .iter()
                .enumerate()
                .filter(|&(_, &d)| d < r)
                .map(|(w, _)| space.vertex_measure(w))
                .sum();
            if small <= 0.0 {
                skipped += 1;
                continue;
            }
            let big: f64 = row
                .iter()
                .enumerate()
                .filter(|&(_, &d)| d < 2.0 * r)
                .map(|(w, _)| space.vertex_measure(w))
                .sum();
            let ratio = big / small;
            if ratio > best {
                best = ratio;
                witness = Some(space.id(v).to_string());
                witness_radius = r;
            }
        }
    }
    Ok(DoublingEstimate {
        value: best,
        skipped,
        witness_center: witness,
        witness_radius,
    })
}

// ---------------------------------------------------------------------------
// File format
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct SpaceFileVertex {
    id: String,
    measure: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pos: Option<[f64; 2]>,
}

#[derive(Serialize, Deserialize)]
struct SpaceFileEdge {
    u: String,
    v: String,
    length: f64,
    measure: f64,
}

#[derive(Serialize, Deserialize)]
struct SpaceFile {
    vertices: Vec<SpaceFileVertex>,
    edges: Vec<SpaceFileEdge>,
}

pub fn space_from_json(text: &str) -> Result<Space> {
    let file: SpaceFile = serde_json::from_str(text)?;
    let mut b = SpaceBuilder::new();
    for v in &file.vertices {
        if b.index.contains_key(&v.id) {
            return Err(MmsError::InvalidSpace(format!(
                "duplicate vertex id `{}`",
                v.id
            )));
        }
        if let Some(p) = v.pos {
            if !p[0].is_finite() || !p[1].is_finite() {
                return Err(MmsError::InvalidSpace(format!(
                    "vertex `{}` has non-finite position",
                    v.id
                )));
            }
        }
        b.vertex_at(&v.id, v.measure, v.pos);
    }
    for e in &file.edges {
        let u = b
            .index
            .get(&e.u)
            .copied()
            .ok_or_else(|| MmsError::UnknownVertex(e.u.clone()))?;
        let v = b
            .index
            .get(&e.v)
            .copied()
            .ok_or_else(|| MmsError::UnknownVertex(e.v.clone()))?;
        b.edge(u, v, e.length, e.measure);
    }
    b.build()
}

pub fn space_to_json(space: &Space) -> String {
    let file = SpaceFile {
        vertices: (0..space.vertex_count())
            .map(|v| SpaceFileVertex {
                id: space.id(v).to_string(),
                measure: space.vertex_measure(v),
                pos: space.position(v),
            })
            .collect(),
        edges: space
            .edges()
            .iter()
            .map(|e| SpaceFileEdge {
                u: space.id(e.u).to_string(),
                v: space.id(e.v).to_string(),
                length: e.length,
                measure: e.measure,
            })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("space serialization")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen;

    fn path3() -> Space {
        gen::path(3).unwrap()
    }

    #[test]
    fn path_fixture_balls() {
        let s = path3();
        let x = s.vertex_index("v0").unwrap();
        let m = s.vertex_index("v1").unwrap();
        let b = s.ball(x, 1.0);
        assert_eq!(b.members, vec![x]);
        assert_eq!(b.measure, 1.0);
        let b = s.ball(x, 1.5);
        assert_eq!(b.members, vec![x, m]);
        assert_eq!(b.measure, 2.0);
        let b = s.ball(x, 0.0);
        assert!(b.is_empty());
        assert_eq!(b.measure, 0.0);
    }

    #[test]
    fn ball_monotone_in_radius() {
        let s = gen::grid(3).unwrap();
        for v in 0..s.vertex_count() {
            let radii = [0.0, 0.3, 0.4, 0.7, 1.0, 2.0, 3.0];
            for w in radii.windows(2) {
                let small = s.ball(v, w[0]);
                let big = s.ball(v, w[1]);
                assert!(small.members.iter().all(|m| big.members.contains(m)));
            }
        }
    }

    #[test]
    fn riesz_on_path_fixture() {
        let s = path3();
        let x = s.vertex_index("v0").unwrap();
        let m = s.vertex_index("v1").unwrap();
        let y = s.vertex_index("v2").unwrap();
        let k = riesz_kernel(&s, x, y, 1.0).unwrap();
        // value at m: 1/μ({x}) + 1/μ({y}) = 2
        assert!((k.values[m] - 2.0).abs() < 1e-12);
        // value at y: d(x,y)/μ(B(x,2)) + 0 = 2/2 = 1
        assert!((k.values[y] - 1.0).abs() < 1e-12);
        assert!((k.values[x] - 1.0).abs() < 1e-12);
        // window with C=1: B(x,2) ∪ B(y,2) = everything
        assert_eq!(k.window, vec![x, m, y]);
    }

    #[test]
    fn riesz_symmetry_and_scaling() {
        let s = gen::grid(4).unwrap();
        let x = 0;
        let y = s.vertex_count() - 1;
        let k1 = riesz_kernel(&s, x, y, 2.0).unwrap();
        let k2 = riesz_kernel(&s, y, x, 2.0).unwrap();
        for v in 0..s.vertex_count() {
            assert_eq!(k1.values[v], k2.values[v]);
        }
        // doubling vertex measures halves the kernel exactly
        let s2 = s.scaled_vertex_measures(2.0);
        let k3 = riesz_kernel(&s2, x, y, 2.0).unwrap();
        for v in 0..s.vertex_count() {
            assert_eq!(k3.values[v], k1.values[v] / 2.0);
        }
    }

    #[test]
    fn riesz_rejects_equal_endpoints() {
        let s = path3();
        assert!(riesz_kernel(&s, 0, 0, 1.0).is_err());
    }

    #[test]
    fn riesz_finite_positive_on_grid_corners() {
        // brute-force evaluation of the formula at every vertex
        let s = gen::grid(4).unwrap();
        let x = s.vertex_index("v0_0").unwrap();
        let y = s.vertex_index("v4_4").unwrap();
        let k = riesz_kernel(&s, x, y, 1.0).unwrap();
        let rx = s.dist_row_uncached(x);
        let ry = s.dist_row_uncached(y);
        for v in 0..s.vertex_count() {
            let mut expect = 0.0;
            for (row, &d) in [(&rx, &rx[v]), (&ry, &ry[v])] {
                if d > 0.0 {
                    let ball: f64 = row
                        .iter()
                        .enumerate()
                        .filter(|&(_, &dd)| dd < d)
                        .map(|(w, _)| s.vertex_measure(w))
                        .sum();
                    expect += d / ball;
                }
            }
            assert!(
                (k.values[v] - expect).abs() <= 1e-12 * (1.0 + expect),
                "kernel mismatch at {v}"
            );
            assert!(k.values[v].is_finite());
            if v != x && v != y {
                assert!(k.values[v] > 0.0);
            }
        }
    }

    #[test]
    fn doubling_on_fixtures() {
        let s = path3();
        let est = doubling_constant(&s, &[1.5]).unwrap();
        assert!((est.value - 1.5).abs() < 1e-12);

        let mut b = SpaceBuilder::new();
        b.vertex("only", 1.0);
        let single = b.build().unwrap();
        let est = doubling_constant(&single, &[1.0, 2.0]).unwrap();
        assert_eq!(est.value, 1.0);
    }

    #[test]
    fn loader_round_trip_and_rejections() {
        let s = path3();
        let text = space_to_json(&s);
        let s2 = space_from_json(&text).unwrap();
        assert_eq!(s2.vertex_count(), 3);
        assert_eq!(s2.edge_count(), 2);
        assert_eq!(s2.distance(0, 2), 2.0);

        let bad = r#"{"vertices":[{"id":"a","measure":1.0}],
                      "edges":[{"u":"a","v":"a","length":1.0,"measure":1.0}]}"#;
        assert!(space_from_json(bad).is_err());
        let bad = r#"{"vertices":[{"id":"a","measure":-1.0}],"edges":[]}"#;
        assert!(space_from_json(bad).is_err());
        let bad = r#"{"vertices":[{"id":"a","measure":1.0},{"id":"b","measure":1.0}],
                      "edges":[]}"#;
        assert!(space_from_json(bad).is_err(), "disconnected must fail");
        let bad = r#"{"vertices":[{"id":"a","measure":1.0},{"id":"b","measure":1.0}],
                      "edges":[{"u":"a","v":"b","length":0.0,"measure":1.0}]}"#;
        assert!(space_from_json(bad).is_err(), "zero length must fail");
    }

    #[test]
    fn metric_axioms_on_small_spaces() {
        for s in [path3(), gen::grid(2).unwrap(), gen::theta(&[1, 2, 3]).unwrap()] {
            let n = s.vertex_count();
            let rows: Vec<_> = (0..n).map(|v| s.dist_row_uncached(v)).collect();
            for u in 0..n {
                assert_eq!(rows[u][u], 0.0);
                for v in 0..n {
                    assert_eq!(rows[u][v], rows[v][u]);
                    if u != v {
                        assert!(rows[u][v] > 0.0);
                    }
                    for w in 0..n {
                        assert!(rows[u][w] <= rows[u][v] + rows[v][w] + 1e-12);
                    }
                }
            }
        }
    }
}
