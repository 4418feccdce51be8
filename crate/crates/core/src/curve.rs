//! Rectifiable curves as edge walks, and curve families.
//!
//! Curves are arclength-parametrized edge walks (vertex sequence plus edge
//! sequence, adjacent pairs joined by the named edge). Generators produce
//! simple paths; explicit families may contain non-simple walks.

use crate::error::{MmsError, Result};
use crate::field::Density;
use crate::space::Space;

/// Non-constant edge walk. Length is exactly the sum of traversed edge
/// lengths.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Curve {
    verts: Vec<usize>,
    edges: Vec<usize>,
}

impl Curve {
    pub fn new(space: &Space, verts: Vec<usize>, edges: Vec<usize>) -> Result<Curve> {
        if edges.is_empty() || verts.len() != edges.len() + 1 {
            return Err(MmsError::InvalidCurve(
                "need at least one edge and verts = edges + 1".into(),
            ));
        }
        for (i, &e) in edges.iter().enumerate() {
            if e >= space.edge_count() {
                return Err(MmsError::InvalidCurve(format!("edge {e} out of range")));
            }
            let ed = space.edge(e);
            let (a, b) = (verts[i], verts[i + 1]);
            if !((ed.u == a && ed.v == b) || (ed.u == b && ed.v == a)) {
                return Err(MmsError::InvalidCurve(format!(
                    "edge {e} does not join step {i}"
                )));
            }
        }
        Ok(Curve { verts, edges })
    }

    /// Build from a vertex sequence, picking the lowest-index edge joining
    /// each consecutive pair.
    pub fn from_vertices(space: &Space, verts: Vec<usize>) -> Result<Curve> {
        if verts.len() < 2 {
            return Err(MmsError::InvalidCurve("constant curve".into()));
        }
        let mut edges = Vec::with_capacity(verts.len() - 1);
        for w in verts.windows(2) {
            let e = space
                .adjacency(w[0])
                .iter()
                .filter(|&&(_, other)| other == w[1])
                .map(|&(e, _)| e)
                .min()
                .ok_or_else(|| {
                    MmsError::InvalidCurve(format!(
                        "no edge joins `{}` and `{}`",
                        space.id(w[0]),
                        space.id(w[1])
                    ))
                })?;
            edges.push(e);
        }
        Ok(Curve { verts, edges })
    }

    pub fn vertices(&self) -> &[usize] {
        &self.verts
    }

    pub fn edges(&self) -> &[usize] {
        &self.edges
    }

    pub fn start(&self) -> usize {
        self.verts[0]
    }

    pub fn end(&self) -> usize {
        *self.verts.last().unwrap()
    }

    pub fn length(&self, space: &Space) -> f64 {
        self.edges.iter().map(|&e| space.edge(e).length).sum()
    }

    pub fn reversed(&self) -> Curve {
        let mut verts = self.verts.clone();
        let mut edges = self.edges.clone();
        verts.reverse();
        edges.reverse();
        Curve { verts, edges }
    }

    /// ∫_γ ρ ds = Σ over the edge sequence (with multiplicity) of ρ(e)·len(e).
    pub fn line_integral(&self, space: &Space, density: &Density) -> Result<f64> {
        let mut total = 0.0;
        for &e in &self.edges {
            if e >= density.len() {
                return Err(MmsError::MissingEdgeValue(e));
            }
            total += density.value(e) * space.edge(e).length;
        }
        Ok(total)
    }

    /// ℓ(γ ∩ A) for an edge set A, counted with traversal multiplicity.
    pub fn intersection_length(&self, space: &Space, edge_set: &[bool]) -> f64 {
        self.edges
            .iter()
            .filter(|&&e| edge_set[e])
            .map(|&e| space.edge(e).length)
            .sum()
    }

    /// Number of traversals of edge `e`.
    pub fn multiplicity(&self, e: usize) -> usize {
        self.edges.iter().filter(|&&x| x == e).count()
    }
}

/// A family of curves: an explicit duplicate-free list, or an implicit
/// endpoint-pair spec (all paths x→y with length ≤ cap, handled through the
/// separation oracle).
#[derive(Clone, Debug)]
pub enum CurveFamily {
    Explicit(Vec<Curve>),
    Pairs {
        x: usize,
        y: usize,
        /// Absolute length cap (already multiplied out, e.g. C·d(x,y)).
        length_cap: f64,
    },
}

impl CurveFamily {
    pub fn explicit(curves: Vec<Curve>) -> CurveFamily {
        CurveFamily::Explicit(curves)
    }

    pub fn is_empty(&self) -> bool {
        match self {
            CurveFamily::Explicit(cs) => cs.is_empty(),
            CurveFamily::Pairs { .. } => false,
        }
    }

    pub fn len_hint(&self) -> Option<usize> {
        match self {
            CurveFamily::Explicit(cs) => Some(cs.len()),
            CurveFamily::Pairs { .. } => None,
        }
    }
}

/// Result of quasiconvex enumeration.
#[derive(Clone, Debug)]
pub struct EnumeratedFamily {
    pub curves: Vec<Curve>,
    pub truncated: bool,
    pub length_cap: f64,
}

/// Enumerate simple paths x→y with length ≤ C·d(x,y), in (length,
/// lexicographic vertex sequence) order, truncated at `max_count`.
///
/// Best-first search on (lower-bounded total length, partial path), so the
/// emitted prefix is correct even when truncation stops the enumeration.
pub fn enumerate_quasiconvex(
    space: &Space,
    x: usize,
    y: usize,
    c: f64,
    max_count: usize,
) -> Result<EnumeratedFamily> {
    if x == y {
        return Err(MmsError::InvalidParams(
            "quasiconvex enumeration needs distinct endpoints".into(),
        ));
    }
    if c < 1.0 {
        return Err(MmsError::InvalidParams(format!(
            "quasiconvexity constant must be >= 1, got {c}"
        )));
    }
    let to_y = space.dist_row(y);
    let d = to_y[x];
    if !d.is_finite() {
        return Err(MmsError::Disconnected(
            space.id(x).to_string(),
            space.id(y).to_string(),
        ));
    }
    let cap = c * d;
    // Path lengths are prefix sums and distances come from a different
    // summation order, so exact comparison against the cap loses legitimate
    // curves by an ulp on non-dyadic lengths. On exactly-summable spaces the
    // slack is inert and the cap is exact.
    let cap_slack = cap * (1.0 + 1e-12);

    #[derive(PartialEq)]
    struct Item {
        bound: f64,
        verts: Vec<usize>,
        edges: Vec<usize>,
        length: f64,
    }
    impl Eq for Item {}
    impl Ord for Item {
        fn cmp(&self, other: &Self) -> std::cmp::Ordering {
            // min-heap: smaller bound first, then lexicographically smaller path
            other
                .bound
                .total_cmp(&self.bound)
                .then_with(|| other.verts.cmp(&self.verts))
        }
    }
    impl PartialOrd for Item {
        fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
            Some(self.cmp(other))
        }
    }

    let mut heap = std::collections::BinaryHeap::new();
    heap.push(Item {
        bound: d,
        verts: vec![x],
        edges: vec![],
        length: 0.0,
    });
    let mut out = Vec::new();
    let mut truncated = false;
    // Safety valve: an adversarial cap can make the frontier explode long
    // before max_count completions.
    let expansion_cap = max_count.saturating_mul(64).max(1 << 20);
    let mut expansions = 0usize;
    while let Some(item) = heap.pop() {
        let v = *item.verts.last().unwrap();
        if v == y {
            out.push(Curve {
                verts: item.verts,
                edges: item.edges,
            });
            if out.len() >= max_count {
                truncated = !heap.is_empty();
                break;
            }
            continue;
        }
        expansions += 1;
        if expansions > expansion_cap {
            truncated = true;
            break;
        }
        for &(e, w) in space.adjacency(v) {
            if item.verts.contains(&w) {
                continue; // simple paths only
            }
            let len = item.length + space.edge(e).length;
            let bound = len + to_y[w];
            if bound > cap_slack {
                continue;
            }
            let mut verts = item.verts.clone();
            verts.push(w);
            let mut edges = item.edges.clone();
            edges.push(e);
            heap.push(Item {
                bound,
                verts,
                edges,
                length: len,
            });
        }
    }
    Ok(EnumeratedFamily {
        curves: out,
        truncated,
        length_cap: cap,
    })
}

/// All simple paths between x and y with length ≤ cap, by exhaustive DFS.
/// Test-friendly independent route; prefer [`enumerate_quasiconvex`] in
/// production paths.
pub fn all_simple_paths(space: &Space, x: usize, y: usize, cap: f64) -> Vec<Curve> {
    let mut out = Vec::new();
    let mut verts = vec![x];
    let mut edges = Vec::new();
    let mut on_path = vec![false; space.vertex_count()];
    on_path[x] = true;
    let cap = cap * (1.0 + 1e-12); // same slack rule as the best-first enumerator
    dfs(space, y, cap, 0.0, &mut verts, &mut edges, &mut on_path, &mut out);
    out.sort_by(|a, b| {
        a.length(space)
            .total_cmp(&b.length(space))
            .then_with(|| a.verts.cmp(&b.verts))
    });
    out
}

#[allow(clippy::too_many_arguments)]
fn dfs(
    space: &Space,
    y: usize,
    cap: f64,
    len: f64,
    verts: &mut Vec<usize>,
    edges: &mut Vec<usize>,
    on_path: &mut Vec<bool>,
    out: &mut Vec<Curve>,
) {
    let v = *verts.last().unwrap();
    if v == y && !edges.is_empty() {
        out.push(Curve {
            verts: verts.clone(),
            edges: edges.clone(),
        });
        return;
    }
    for &(e, w) in space.adjacency(v) {
        if on_path[w] {
            continue;
        }
        let nl = len + space.edge(e).length;
        if nl > cap {
            continue;
        }
        verts.push(w);
        edges.push(e);
        on_path[w] = true;
        dfs(space, y, cap, nl, verts, edges, on_path, out);
        on_path[w] = false;
        edges.pop();
        verts.pop();
    }
}

/// Family file: either a JSON list of vertex-id sequences, or a generator
/// spec `{"x":…, "y":…, "C":…, "maxCount":…}`.
pub fn family_from_json(space: &Space, text: &str) -> Result<CurveFamily> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    match &value {
        serde_json::Value::Array(rows) => {
            let mut curves = Vec::new();
            for row in rows {
                let ids: Vec<String> = serde_json::from_value(row.clone())?;
                let verts = ids
                    .iter()
                    .map(|id| space.vertex_index(id))
                    .collect::<Result<Vec<_>>>()?;
                curves.push(Curve::from_vertices(space, verts)?);
            }
            let mut seen = std::collections::BTreeSet::new();
            curves.retain(|c| seen.insert(c.clone()));
            Ok(CurveFamily::Explicit(curves))
        }
        serde_json::Value::Object(obj) => {
            let x = obj
                .get("x")
                .and_then(|x| x.as_str())
                .ok_or_else(|| MmsError::InvalidParams("family spec needs `x`".into()))?;
            let y = obj
                .get("y")
                .and_then(|x| x.as_str())
                .ok_or_else(|| MmsError::InvalidParams("family spec needs `y`".into()))?;
            let c = obj.get("C").and_then(|x| x.as_f64()).unwrap_or(1.0);
            let x = space.vertex_index(x)?;
            let y = space.vertex_index(y)?;
            let d = space.distance(x, y);
            if !d.is_finite() {
                return Err(MmsError::Disconnected(
                    space.id(x).to_string(),
                    space.id(y).to_string(),
                ));
            }
            Ok(CurveFamily::Pairs {
                x,
                y,
                length_cap: c * d,
            })
        }
        _ => Err(MmsError::InvalidParams(
            "family file must be a list or a generator spec".into(),
        )),
    }
}
