//! Deterministic space generators and seeded test-function libraries.
//!
//! Grid convention: `grid(n)` covers the unit square with spacing h = 1/n,
//! vertex measure h², edge length h, and edge measure `1/(n(n+1))`. Each
//! orientation then carries total edge measure exactly equal to the covered
//! area, which is the normalization that makes slab moduli match their
//! continuum values exactly (a horizontal row family has Mod_1 = 1, a strip
//! density n·χ_strip has mass 1).

use crate::curve::Curve;
use crate::error::{MmsError, Result};
use crate::field::ScalarField;
use crate::rng::Rng;
use crate::space::{Space, SpaceBuilder};

/// Geometry bookkeeping for grid-based generators.
#[derive(Clone, Copy, Debug)]
pub struct GridMeta {
    pub n: usize,
    pub h: f64,
    pub side: f64,
    pub origin: [f64; 2],
}

impl GridMeta {
    pub fn vertex(&self, i: usize, j: usize) -> usize {
        j * (self.n + 1) + i
    }

    /// Edge (i,j)-(i+1,j); valid for i < n.
    pub fn h_edge(&self, i: usize, j: usize) -> usize {
        j * self.n + i
    }

    /// Edge (i,j)-(i,j+1); valid for j < n.
    pub fn v_edge(&self, i: usize, j: usize) -> usize {
        self.n * (self.n + 1) + j * (self.n + 1) + i
    }

    pub fn position(&self, i: usize, j: usize) -> [f64; 2] {
        [
            self.origin[0] + i as f64 * self.h,
            self.origin[1] + j as f64 * self.h,
        ]
    }
}

pub fn path(n: usize) -> Result<Space> {
    if n < 1 {
        return Err(MmsError::InvalidParams("path needs n >= 1".into()));
    }
    let mut b = SpaceBuilder::new();
    let verts: Vec<usize> = (0..n)
        .map(|i| b.vertex_at(&format!("v{i}"), 1.0, Some([i as f64, 0.0])))
        .collect();
    for w in verts.windows(2) {
        b.edge(w[0], w[1], 1.0, 1.0);
    }
    b.build()
}

pub fn grid(n: usize) -> Result<Space> {
    Ok(grid_with_meta(n)?.0)
}

pub fn grid_with_meta(n: usize) -> Result<(Space, GridMeta)> {
    grid_scaled(n, 1.0, [0.0, 0.0])
}

pub fn grid_scaled(n: usize, side: f64, origin: [f64; 2]) -> Result<(Space, GridMeta)> {
    if n < 1 {
        return Err(MmsError::InvalidParams("grid needs n >= 1".into()));
    }
    let meta = GridMeta {
        n,
        h: side / n as f64,
        side,
        origin,
    };
    let mut b = SpaceBuilder::new();
    let vmeasure = meta.h * meta.h;
    let emeasure = side * side / (n as f64 * (n as f64 + 1.0));
    for j in 0..=n {
        for i in 0..=n {
            b.vertex_at(&format!("v{i}_{j}"), vmeasure, Some(meta.position(i, j)));
        }
    }
    for j in 0..=n {
        for i in 0..n {
            b.edge(meta.vertex(i, j), meta.vertex(i + 1, j), meta.h, emeasure);
        }
    }
    for j in 0..n {
        for i in 0..=n {
            b.edge(meta.vertex(i, j), meta.vertex(i, j + 1), meta.h, emeasure);
        }
    }
    Ok((b.build()?, meta))
}

/// Two vertices joined by `count` parallel unit edges.
pub fn parallel_edges(count: usize) -> Result<Space> {
    if count < 1 {
        return Err(MmsError::InvalidParams("need at least one edge".into()));
    }
    let mut b = SpaceBuilder::new();
    let x = b.vertex_at("x", 1.0, Some([0.0, 0.0]));
    let y = b.vertex_at("y", 1.0, Some([1.0, 0.0]));
    for _ in 0..count {
        b.edge(x, y, 1.0, 1.0);
    }
    b.build()
}

/// Two hub vertices joined by one arm per entry; arm k consists of
/// `arms[k]` unit edges through fresh interior vertices.
pub fn theta(arms: &[usize]) -> Result<Space> {
    if arms.is_empty() || arms.contains(&0) {
        return Err(MmsError::InvalidParams("arms must be nonempty, each >= 1".into()));
    }
    let mut b = SpaceBuilder::new();
    let x = b.vertex("x", 1.0);
    let y = b.vertex("y", 1.0);
    for (k, &len) in arms.iter().enumerate() {
        let mut prev = x;
        for step in 1..len {
            let v = b.vertex(&format!("a{k}_{step}"), 1.0);
            b.edge(prev, v, 1.0, 1.0);
            prev = v;
        }
        b.edge(prev, y, 1.0, 1.0);
    }
    b.build()
}

/// Two unit grids glued at a single corner vertex (lobe a's (n,n) corner is
/// lobe b's (0,0) corner).
pub fn bowtie(n: usize) -> Result<Space> {
    if n < 1 {
        return Err(MmsError::InvalidParams("bowtie needs n >= 1".into()));
    }
    let h = 1.0 / n as f64;
    let vmeasure = h * h;
    let emeasure = 1.0 / (n as f64 * (n as f64 + 1.0));
    let mut b = SpaceBuilder::new();
    let mut a_idx = vec![vec![0usize; n + 1]; n + 1];
    for j in 0..=n {
        for i in 0..=n {
            a_idx[i][j] = b.vertex_at(
                &format!("a{i}_{j}"),
                vmeasure,
                Some([i as f64 * h, j as f64 * h]),
            );
        }
    }
    let mut b_idx = vec![vec![0usize; n + 1]; n + 1];
    for j in 0..=n {
        for i in 0..=n {
            b_idx[i][j] = if i == 0 && j == 0 {
                a_idx[n][n]
            } else {
                b.vertex_at(
                    &format!("b{i}_{j}"),
                    vmeasure,
                    Some([1.0 + i as f64 * h, 1.0 + j as f64 * h]),
                )
            };
        }
    }
    for idx in [&a_idx, &b_idx] {
        for j in 0..=n {
            for i in 0..n {
                b.edge(idx[i][j], idx[i + 1][j], h, emeasure);
            }
        }
        for j in 0..n {
            for i in 0..=n {
                b.edge(idx[i][j], idx[i][j + 1], h, emeasure);
            }
        }
    }
    b.build()
}

/// Unit grid with a vertical slit: the horizontal edges crossing the segment
/// x = 1/2 − h/2, 0 ≤ y ≤ 1/2 are removed. Needs even n ≥ 2.
pub fn slit_grid(n: usize) -> Result<Space> {
    if n < 2 || !n.is_multiple_of(2) {
        return Err(MmsError::InvalidParams("slit grid needs even n >= 2".into()));
    }
    let meta = GridMeta {
        n,
        h: 1.0 / n as f64,
        side: 1.0,
        origin: [0.0, 0.0],
    };
    let vmeasure = meta.h * meta.h;
    let emeasure = 1.0 / (n as f64 * (n as f64 + 1.0));
    let mut b = SpaceBuilder::new();
    for j in 0..=n {
        for i in 0..=n {
            b.vertex_at(&format!("v{i}_{j}"), vmeasure, Some(meta.position(i, j)));
        }
    }
    let slit_col = n / 2 - 1; // horizontal edges slit_col → slit_col+1
    for j in 0..=n {
        for i in 0..n {
            if i == slit_col && (j as f64) * meta.h <= 0.5 {
                continue;
            }
            b.edge(meta.vertex(i, j), meta.vertex(i + 1, j), meta.h, emeasure);
        }
    }
    for j in 0..n {
        for i in 0..=n {
            b.edge(meta.vertex(i, j), meta.vertex(i, j + 1), meta.h, emeasure);
        }
    }
    b.build()
}

/// The weighted-circle fixture: a grid over [−2,2]² whose measure mimics
/// Lebesgue area plus a one-dimensional arc measure on the unit circle.
///
/// Edges straddling the circle carry measure h·arc (arc = 2π/#crossing
/// edges) in place of their area share, and their endpoints get the matching
/// h·arc/2 extra vertex measure. The indicator of the open unit disk is
/// returned alongside.
pub struct CircleWeightedGrid {
    pub space: Space,
    pub meta: GridMeta,
    pub u: ScalarField,
    /// Edges straddling the unit circle.
    pub crossing_edges: Vec<usize>,
    /// Columns (grid x-indices) whose vertical line crosses the disk.
    pub crossing_columns: Vec<usize>,
    pub arc_per_edge: f64,
}

pub fn circle_weighted_grid(n: usize) -> Result<CircleWeightedGrid> {
    if n < 16 {
        return Err(MmsError::InvalidParams(
            "circle weighted grid needs n >= 16".into(),
        ));
    }
    let side = 4.0;
    let origin = [-2.0, -2.0];
    let meta = GridMeta {
        n,
        h: side / n as f64,
        side,
        origin,
    };
    let vmeasure = meta.h * meta.h;
    let emeasure = side * side / (n as f64 * (n as f64 + 1.0));
    let inside = |p: [f64; 2]| p[0] * p[0] + p[1] * p[1] < 1.0 - 1e-12;

    let mut b = SpaceBuilder::new();
    let mut u = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            let p = meta.position(i, j);
            b.vertex_at(&format!("v{i}_{j}"), vmeasure, Some(p));
            u.push(if inside(p) { 1.0 } else { 0.0 });
        }
    }
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for j in 0..=n {
        for i in 0..n {
            edges.push((meta.vertex(i, j), meta.vertex(i + 1, j)));
        }
    }
    for j in 0..n {
        for i in 0..=n {
            edges.push((meta.vertex(i, j), meta.vertex(i, j + 1)));
        }
    }
    let crossing: Vec<usize> = edges
        .iter()
        .enumerate()
        .filter(|&(_, &(a, bv))| (u[a] > 0.5) != (u[bv] > 0.5))
        .map(|(e, _)| e)
        .collect();
    if crossing.is_empty() {
        return Err(MmsError::InvalidParams(
            "no circle-crossing edges; grid too coarse".into(),
        ));
    }
    let arc = std::f64::consts::TAU / crossing.len() as f64;
    let crossing_set: std::collections::BTreeSet<usize> = crossing.iter().copied().collect();
    let mut edge_ids = Vec::with_capacity(edges.len());
    for (e, &(a, v)) in edges.iter().enumerate() {
        let m = if crossing_set.contains(&e) {
            meta.h * arc
        } else {
            emeasure
        };
        edge_ids.push(b.edge(a, v, meta.h, m));
    }
    // matching vertex weight near the circle
    let mut extra = vec![0.0; (n + 1) * (n + 1)];
    for &e in &crossing {
        let (a, v) = edges[e];
        extra[a] += meta.h * arc / 2.0;
        extra[v] += meta.h * arc / 2.0;
    }
    for (v, &m) in extra.iter().enumerate() {
        if m > 0.0 {
            b.set_vertex_measure(v, vmeasure + m);
        }
    }
    let _ = edge_ids;
    let mut crossing_columns = Vec::new();
    for i in 0..=n {
        let x = origin[0] + i as f64 * meta.h;
        if x.abs() < 1.0 - 1e-12 {
            crossing_columns.push(i);
        }
    }
    Ok(CircleWeightedGrid {
        space: b.build()?,
        meta,
        u: ScalarField(u),
        crossing_edges: crossing,
        crossing_columns,
        arc_per_edge: arc,
    })
}

/// Named generator dispatch for the CLI.
pub fn generate(name: &str, n: usize) -> Result<Space> {
    match name {
        "path" => path(n),
        "grid" => grid(n),
        "parallel_edges" => parallel_edges(n),
        "theta" => theta(&[1, 2, 3]),
        "bowtie" => bowtie(n),
        "slit_grid" => slit_grid(n),
        "circle_weighted_grid" => Ok(circle_weighted_grid(n)?.space),
        _ => Err(MmsError::UnknownGenerator(name.to_string())),
    }
}

// ---------------------------------------------------------------------------
// Seeded libraries for sweeps and suites
// ---------------------------------------------------------------------------

/// Deterministic function library: distance fields to spread anchors,
/// once-smoothed indicators, and smoothed random fields. Anchors are chosen
/// in continuum position when the space carries positions, so the library is
/// comparable across refinement levels of the same geometry.
pub fn default_functions(space: &Space, seed: u64, count: usize) -> Vec<ScalarField> {
    let mut rng = Rng::new(seed ^ 0xf00d);
    let n = space.vertex_count();
    let mut out = Vec::new();
    let has_pos = (0..n).all(|v| space.position(v).is_some());
    let nearest = |p: [f64; 2]| -> usize {
        let mut best = 0;
        let mut bd = f64::INFINITY;
        for v in 0..n {
            let q = space.position(v).unwrap();
            let d = (q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2);
            if d < bd {
                bd = d;
                best = v;
            }
        }
        best
    };
    let bbox = || {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for v in 0..n {
            let p = space.position(v).unwrap();
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        (lo, hi)
    };
    while out.len() < count {
        match out.len() % 4 {
            0 => {
                if out.is_empty() {
                    // deterministic half-ball around the point farthest from
                    // vertex 0: on bottleneck geometries this is the
                    // component indicator that witnesses the failure of the
                    // inequality
                    let row0 = space.dist_row_uncached(0);
                    let far = (0..n)
                        .filter(|&v| row0[v].is_finite())
                        .max_by(|&a, &b| row0[a].total_cmp(&row0[b]).then(b.cmp(&a)))
                        .unwrap_or(0);
                    let row = space.dist_row_uncached(far);
                    let ecc = row.iter().cloned().filter(|d| d.is_finite()).fold(0.0, f64::max);
                    let raw = ScalarField(
                        (0..n)
                            .map(|v| if row[v] < ecc / 2.0 { 1.0 } else { 0.0 })
                            .collect(),
                    );
                    out.push(raw.smoothed_once(space));
                    continue;
                }
                // distance field to an anchor
                let anchor = if has_pos {
                    let (lo, hi) = bbox();
                    nearest([rng.range_f64(lo[0], hi[0]), rng.range_f64(lo[1], hi[1])])
                } else {
                    rng.below(n)
                };
                let row = space.dist_row_uncached(anchor);
                out.push(ScalarField(row));
            }
            1 => {
                // once-smoothed half-space (or metric-ball) indicator
                let raw = if has_pos {
                    let (lo, hi) = bbox();
                    let axis = rng.below(2);
                    let cut = rng.range_f64(
                        lo[axis] + 0.25 * (hi[axis] - lo[axis]),
                        hi[axis] - 0.25 * (hi[axis] - lo[axis]),
                    );
                    ScalarField(
                        (0..n)
                            .map(|v| {
                                if space.position(v).unwrap()[axis] < cut {
                                    1.0
                                } else {
                                    0.0
                                }
                            })
                            .collect(),
                    )
                } else {
                    let c = rng.below(n);
                    let row = space.dist_row_uncached(c);
                    let r = row.iter().cloned().filter(|d| d.is_finite()).fold(0.0, f64::max) / 2.0;
                    ScalarField((0..n).map(|v| if row[v] < r { 1.0 } else { 0.0 }).collect())
                };
                out.push(raw.smoothed_once(space));
            }
            _ => {
                // smoothed random field
                let raw = ScalarField((0..n).map(|_| rng.f64()).collect());
                out.push(raw.smoothed_once(space).smoothed_once(space));
            }
        }
    }
    out
}

/// Seeded connected multigraph: a random attachment tree plus extra edges,
/// with lengths and measures away from zero.
pub fn random_space(rng: &mut Rng, max_vertices: usize, max_edges: usize) -> Space {
    let n = 2 + rng.below(max_vertices.saturating_sub(1).max(1));
    let mut b = SpaceBuilder::new();
    for v in 0..n {
        b.vertex(&format!("v{v}"), rng.range_f64(0.5, 2.0));
    }
    for v in 1..n {
        let u = rng.below(v);
        b.edge(u, v, rng.range_f64(0.2, 2.0), rng.range_f64(0.1, 2.0));
    }
    let extra = if max_edges > n - 1 {
        rng.below(max_edges - (n - 1) + 1)
    } else {
        0
    };
    for _ in 0..extra {
        let u = rng.below(n);
        let v = rng.below(n);
        if u != v {
            b.edge(u, v, rng.range_f64(0.2, 2.0), rng.range_f64(0.1, 2.0));
        }
    }
    b.build().expect("random space construction")
}

/// Seeded random edge sets for pencil audits: mixed sizes from singletons up
/// to an eighth of the edge count.
pub fn random_edge_sets(space: &Space, seed: u64, count: usize) -> Vec<Vec<usize>> {
    let mut rng = Rng::new(seed ^ 0xed6e);
    let m = space.edge_count();
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        let size = if k % 4 == 0 {
            1
        } else {
            1 + rng.below((m / 8).max(2))
        };
        out.push(rng.sample_indices(m, size));
    }
    out
}

/// Up to `count` distinct random simple paths (randomized DFS walks between
/// random endpoint pairs).
pub fn random_simple_paths(space: &Space, rng: &mut Rng, count: usize) -> Vec<Curve> {
    let n = space.vertex_count();
    let mut out: Vec<Curve> = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    let mut attempts = 0;
    while out.len() < count && attempts < count * 20 {
        attempts += 1;
        let x = rng.below(n);
        let y = rng.below(n);
        if x == y {
            continue;
        }
        // randomized greedy walk
        let mut verts = vec![x];
        let mut edges = Vec::new();
        let mut on_path = vec![false; n];
        on_path[x] = true;
        let mut cur = x;
        let mut ok = false;
        for _ in 0..4 * n {
            if cur == y {
                ok = true;
                break;
            }
            let choices: Vec<(usize, usize)> = space
                .adjacency(cur)
                .iter()
                .filter(|&&(_, w)| !on_path[w])
                .copied()
                .collect();
            if choices.is_empty() {
                break;
            }
            let (e, w) = choices[rng.below(choices.len())];
            verts.push(w);
            edges.push(e);
            on_path[w] = true;
            cur = w;
        }
        if ok && !edges.is_empty() {
            let c = Curve::new(space, verts, edges).expect("walk is a valid curve");
            if seen.insert(c.clone()) {
                out.push(c);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid2_counts() {
        let s = grid(2).unwrap();
        assert_eq!(s.vertex_count(), 9);
        assert_eq!(s.edge_count(), 12);
        // per-orientation totals equal the covered area exactly
        let total: f64 = s.total_edge_measure();
        assert!((total - 2.0).abs() < 1e-12);
        assert!((s.total_vertex_measure() - 2.25).abs() < 1e-12);
    }

    #[test]
    fn grid_meta_indexing() {
        let (s, m) = grid_with_meta(4).unwrap();
        for j in 0..=4 {
            for i in 0..4 {
                let e = s.edge(m.h_edge(i, j));
                assert_eq!(
                    (e.u, e.v),
                    (m.vertex(i, j), m.vertex(i + 1, j)),
                    "h_edge({i},{j})"
                );
            }
        }
        for j in 0..4 {
            for i in 0..=4 {
                let e = s.edge(m.v_edge(i, j));
                assert_eq!((e.u, e.v), (m.vertex(i, j), m.vertex(i, j + 1)));
            }
        }
    }

    #[test]
    fn path3_is_the_xmy_fixture() {
        let s = path(3).unwrap();
        assert_eq!(s.vertex_count(), 3);
        assert_eq!(s.edge_count(), 2);
        assert_eq!(s.distance(0, 2), 2.0);
    }

    #[test]
    fn bowtie_shares_exactly_one_vertex() {
        let n = 2;
        let s = bowtie(n).unwrap();
        assert_eq!(s.vertex_count(), 2 * (n + 1) * (n + 1) - 1);
        assert_eq!(s.edge_count(), 2 * 2 * n * (n + 1));
        // glue vertex is a's far corner
        let glue = s.vertex_index(&format!("a{n}_{n}")).unwrap();
        assert!(s.vertex_index("b0_0").is_err());
        assert_eq!(s.adjacency(glue).len(), 4);
    }

    #[test]
    fn slit_grid_still_connected_with_fewer_edges() {
        let full = grid(4).unwrap();
        let slit = slit_grid(4).unwrap();
        assert!(slit.edge_count() < full.edge_count());
        assert_eq!(slit.vertex_count(), full.vertex_count());
        // distance across the slit grows
        let a = slit.vertex_index("v1_0").unwrap();
        let b = slit.vertex_index("v3_0").unwrap();
        assert!(slit.distance(a, b) > full.distance(a, b));
    }

    #[test]
    fn circle_grid_crossing_structure() {
        let cw = circle_weighted_grid(32).unwrap();
        assert!(!cw.crossing_edges.is_empty());
        // total arc measure over crossing edges is exactly 2π·h
        let total: f64 = cw
            .crossing_edges
            .iter()
            .map(|&e| cw.space.edge(e).measure)
            .sum();
        assert!((total - std::f64::consts::TAU * cw.meta.h).abs() < 1e-9);
        // u is the disk indicator
        for v in 0..cw.space.vertex_count() {
            let p = cw.space.position(v).unwrap();
            let inside = p[0] * p[0] + p[1] * p[1] < 1.0 - 1e-12;
            assert_eq!(cw.u.0[v] > 0.5, inside);
        }
    }

    #[test]
    fn unknown_generator_rejected() {
        assert!(generate("moebius", 4).is_err());
    }

    #[test]
    fn function_library_deterministic() {
        let s = grid(4).unwrap();
        let a = default_functions(&s, 9, 6);
        let b = default_functions(&s, 9, 6);
        assert_eq!(a.len(), 6);
        for (f, g) in a.iter().zip(&b) {
            assert_eq!(f.0, g.0);
        }
    }

    #[test]
    fn random_spaces_are_valid() {
        let mut rng = Rng::new(11);
        for _ in 0..20 {
            let s = random_space(&mut rng, 12, 30);
            assert!(s.vertex_count() >= 2);
            let paths = random_simple_paths(&s, &mut rng, 5);
            for p in &paths {
                assert!(p.length(&s) > 0.0);
            }
        }
    }
}
