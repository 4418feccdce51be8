//! Semmes pencils of curves.
//!
//! For a vertex pair (x, y), the pencil is a probability measure σ on
//! C-quasiconvex curves x→y satisfying, for every edge set A,
//!
//!   Σ_γ σ_γ · ℓ(γ ∩ A)  ≤  constant · μ̄(A),
//!
//! where μ̄ is the Riesz-kernel-weighted edge measure restricted to the
//! window around the pair. The construction is exact finite-dimensional
//! duality: solve the μ̄-weighted 1-modulus of the quasiconvex family by
//! constraint generation, normalize the optimal dual weights λ to σ = λ/Σλ,
//! and set constant = 1/Σλ. The per-edge occupation bound of the LP dual,
//! divided by Σλ, is then precisely the pencil inequality on singletons, and
//! additivity extends it to every edge set. A weak*-limit argument is not
//! needed at finite scale; the LP dual plays that role.

use serde::Serialize;

use crate::curve::{Curve, CurveFamily};
use crate::error::{MmsError, Result};
use crate::field::Density;
use crate::modulus::{self, Tolerances};
use crate::simplex::{self, Lp, Rel, RowSpec};
use crate::space::{riesz_kernel, RieszKernelField, Space};

#[derive(Clone, Debug)]
pub struct Pencil {
    pub x: usize,
    pub y: usize,
    /// Quasiconvexity constant: every curve has length ≤ c_quasi·d(x,y).
    pub c_quasi: f64,
    /// Support of σ.
    pub curves: Vec<Curve>,
    /// Probability weights, same order as `curves`.
    pub sigma: Vec<f64>,
    pub kernel: RieszKernelField,
    /// μ̄ edge weight: kernel averaged over endpoints inside the window,
    /// zero outside.
    pub weight: Vec<f64>,
    /// Riesz-weighted Mod_1 of the quasiconvex family.
    pub modulus_value: f64,
    /// Pencil constant 1/Σλ.
    pub constant: f64,
    pub truncated: bool,
    pub degenerate: bool,
}

impl Pencil {
    /// μ̄(A) for an edge set.
    pub fn weighted_measure(&self, space: &Space, edges: &[usize]) -> f64 {
        edges
            .iter()
            .map(|&e| self.weight[e] * space.edge(e).measure)
            .sum()
    }

    /// Expected intersection length Σ_γ σ_γ ℓ(γ ∩ A).
    pub fn expected_intersection(&self, space: &Space, edge_set: &[bool]) -> f64 {
        self.curves
            .iter()
            .zip(&self.sigma)
            .map(|(c, s)| s * c.intersection_length(space, edge_set))
            .sum()
    }

    /// Expected length Σ_γ σ_γ·len(γ).
    pub fn expected_length(&self, space: &Space) -> f64 {
        self.curves
            .iter()
            .zip(&self.sigma)
            .map(|(c, s)| s * c.length(space))
            .sum()
    }
}

/// Build the pencil for (x, y). When `c` is None, starts at C = 1 and
/// doubles until the weighted modulus clears a small floor.
pub fn build_pencil(
    space: &Space,
    x: usize,
    y: usize,
    c: Option<f64>,
    tols: &Tolerances,
) -> Result<Pencil> {
    if x == y {
        return Err(MmsError::InvalidParams(
            "pencil needs two distinct vertices".into(),
        ));
    }
    let d = space.distance(x, y);
    if !d.is_finite() {
        return Err(MmsError::Disconnected(
            space.id(x).to_string(),
            space.id(y).to_string(),
        ));
    }
    match c {
        Some(c) => build_pencil_fixed(space, x, y, c, tols),
        None => {
            let mut c = 1.0;
            for _ in 0..7 {
                let p = build_pencil_fixed(space, x, y, c, tols)?;
                if p.modulus_value > 1e-6 {
                    return Ok(p);
                }
                c *= 2.0;
            }
            build_pencil_fixed(space, x, y, c, tols)
        }
    }
}

fn build_pencil_fixed(
    space: &Space,
    x: usize,
    y: usize,
    c: f64,
    tols: &Tolerances,
) -> Result<Pencil> {
    if c < 1.0 {
        return Err(MmsError::InvalidParams(format!(
            "quasiconvexity constant must be >= 1, got {c}"
        )));
    }
    let d = space.distance(x, y);
    let kernel = riesz_kernel(space, x, y, c)?;
    let weight: Vec<f64> = (0..space.edge_count())
        .map(|e| {
            if kernel.edge_in_window(space, e) {
                kernel.on_edge(space, e)
            } else {
                0.0
            }
        })
        .collect();
    let family = CurveFamily::Pairs {
        x,
        y,
        length_cap: c * d,
    };
    let res = modulus::mod_p(space, &family, 1.0, Some(&weight), tols)?;
    let total: f64 = res.dual_value();
    if total <= 0.0 {
        return Err(MmsError::Pencil(format!(
            "weighted modulus dual vanished for pair ({}, {}) at C = {c}; \
             every admissibility constraint needs positive measure support",
            space.id(x),
            space.id(y)
        )));
    }
    let mut curves = Vec::new();
    let mut sigma = Vec::new();
    for (curve, lambda) in &res.dual {
        if *lambda > 0.0 {
            curves.push(curve.clone());
            sigma.push(lambda / total);
        }
    }
    Ok(Pencil {
        x,
        y,
        c_quasi: c,
        curves,
        sigma,
        kernel,
        weight,
        modulus_value: res.value,
        constant: 1.0 / total,
        truncated: res.truncated,
        degenerate: res.degenerate,
    })
}

/// Pencil inequality audit over explicit edge sets: for each A reports
/// lhs = Σ_γ σ_γ ℓ(γ∩A) against rhs = μ̄(A); passes when the worst ratio
/// stays within the pencil constant.
#[derive(Clone, Debug, Serialize)]
pub struct PencilVerifyReport {
    pub sets_checked: usize,
    pub skipped: usize,
    pub max_ratio: f64,
    pub worst_set: Option<usize>,
    pub constant: f64,
    pub passes: bool,
}

pub fn verify_pencil(space: &Space, pencil: &Pencil, edge_sets: &[Vec<usize>]) -> Result<PencilVerifyReport> {
    if edge_sets.is_empty() {
        return Err(MmsError::InvalidParams("no edge sets supplied".into()));
    }
    for set in edge_sets {
        if let Some(&e) = set.iter().find(|&&e| e >= space.edge_count()) {
            return Err(MmsError::InvalidParams(format!("edge {e} out of range")));
        }
    }
    let mut max_ratio = 0.0f64;
    let mut worst = None;
    let mut skipped = 0usize;
    let mut mask = vec![false; space.edge_count()];
    for (i, set) in edge_sets.iter().enumerate() {
        for &e in set {
            mask[e] = true;
        }
        let lhs = pencil.expected_intersection(space, &mask);
        let rhs = pencil.weighted_measure(space, set);
        for &e in set {
            mask[e] = false;
        }
        if rhs <= 0.0 {
            if lhs <= 1e-12 {
                skipped += 1;
                continue;
            }
            // curve mass on a μ̄-null set: unbounded ratio
            return Ok(PencilVerifyReport {
                sets_checked: edge_sets.len(),
                skipped,
                max_ratio: f64::INFINITY,
                worst_set: Some(i),
                constant: pencil.constant,
                passes: false,
            });
        }
        let ratio = lhs / rhs;
        if ratio > max_ratio {
            max_ratio = ratio;
            worst = Some(i);
        }
    }
    let passes = max_ratio <= pencil.constant * (1.0 + 1e-6) + 1e-12;
    Ok(PencilVerifyReport {
        sets_checked: edge_sets.len(),
        skipped,
        max_ratio,
        worst_set: worst,
        constant: pencil.constant,
        passes,
    })
}

/// Simple-function extension of the pencil inequality for a density g:
/// Σ_γ σ_γ ∫_γ g ds  ≤  constant · Σ_{window} g R̄ μ.
#[derive(Clone, Debug, Serialize)]
pub struct PencilBoundReport {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

pub fn pencil_line_integral_bound(
    space: &Space,
    pencil: &Pencil,
    g: &Density,
) -> Result<PencilBoundReport> {
    let mut lhs = 0.0;
    for (curve, s) in pencil.curves.iter().zip(&pencil.sigma) {
        lhs += s * curve.line_integral(space, g)?;
    }
    let rhs_raw: f64 = (0..space.edge_count())
        .map(|e| g.value(e) * pencil.weight[e] * space.edge(e).measure)
        .sum();
    let rhs = pencil.constant * rhs_raw;
    Ok(PencilBoundReport {
        lhs,
        rhs,
        holds: lhs <= rhs + 1e-9 * (1.0 + rhs.abs()),
    })
}

/// min over an f grid of F(f, σ) = constant·Σ_e f(e) μ̄(e) − Σ_γ σ_γ ∫_γ f:
/// the game functional evaluated at the built pencil, nonnegative by the
/// per-edge occupation bound. Cheap (no game LP), so it scales to curve
/// families far beyond what the full min-max solve can enumerate.
pub fn game_audit(space: &Space, pencil: &Pencil, f_grid: &[Vec<f64>]) -> Result<f64> {
    if f_grid.is_empty() {
        return Err(MmsError::InvalidParams("empty f grid".into()));
    }
    let mut min = f64::INFINITY;
    for f in f_grid {
        if f.len() != space.edge_count() || f.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
            return Err(MmsError::InvalidParams(
                "f grid entries must be [0,1]-valued edge functions".into(),
            ));
        }
        let weighted: f64 = (0..space.edge_count())
            .map(|e| f[e] * pencil.weight[e] * space.edge(e).measure)
            .sum();
        let mut along = 0.0;
        for (curve, s) in pencil.curves.iter().zip(&pencil.sigma) {
            let int: f64 = curve
                .edges()
                .iter()
                .map(|&e| f[e] * space.edge(e).length)
                .sum();
            along += s * int;
        }
        min = min.min(pencil.constant * weighted - along);
    }
    Ok(min)
}

/// Finite bilinear game around the pencil: payoff
/// F(f, γ) = constant·Σ_e f(e) μ̄(e) − ∫_γ f ds over f in the given grid and
/// the enumerated quasiconvex curves. Solves the zero-sum matrix game in
/// both orders by independent LPs and reports the gap (zero for finite
/// games, up to solver tolerance), plus the audit min_f F(f, σ).
#[derive(Clone, Debug, Serialize)]
pub struct MinmaxReport {
    pub curves: usize,
    pub f_count: usize,
    pub maximin: f64,
    pub minimax: f64,
    pub gap: f64,
    /// min over the f grid of F(f, σ) for the built pencil's σ.
    pub pencil_audit_min: f64,
    pub truncated: bool,
}

pub fn minmax_gap(
    space: &Space,
    x: usize,
    y: usize,
    c: f64,
    f_grid: &[Vec<f64>],
    max_curves: usize,
    tols: &Tolerances,
) -> Result<MinmaxReport> {
    if f_grid.is_empty() {
        return Err(MmsError::InvalidParams("empty f grid".into()));
    }
    for f in f_grid {
        if f.len() != space.edge_count() || f.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
            return Err(MmsError::InvalidParams(
                "f grid entries must be [0,1]-valued edge functions".into(),
            ));
        }
    }
    let pencil = build_pencil(space, x, y, Some(c), tols)?;
    let enumerated = crate::curve::enumerate_quasiconvex(space, x, y, c, max_curves)?;
    let curves = &enumerated.curves;
    if curves.is_empty() {
        return Err(MmsError::EmptyFamily);
    }
    let nf = f_grid.len();
    let nc = curves.len();
    // payoff matrix
    let mut m = vec![vec![0.0f64; nc]; nf];
    for (fi, f) in f_grid.iter().enumerate() {
        let weighted: f64 = (0..space.edge_count())
            .map(|e| f[e] * pencil.weight[e] * space.edge(e).measure)
            .sum();
        let base = pencil.constant * weighted;
        for (ci, curve) in curves.iter().enumerate() {
            let along: f64 = curve
                .edges()
                .iter()
                .map(|&e| f[e] * space.edge(e).length)
                .sum();
            m[fi][ci] = base - along;
        }
    }

    // column player (curves) maximizes: max v s.t. Σ_γ α_γ M[f][γ] ≥ v ∀f
    let maximin = {
        let mut rows: Vec<RowSpec> = (0..nf)
            .map(|fi| {
                let mut coeffs: Vec<(usize, f64)> =
                    (0..nc).map(|ci| (ci, m[fi][ci])).collect();
                coeffs.push((nc, -1.0)); // v+
                coeffs.push((nc + 1, 1.0)); // v-
                RowSpec {
                    coeffs,
                    rel: Rel::Ge,
                    rhs: 0.0,
                }
            })
            .collect();
        rows.push(RowSpec {
            coeffs: (0..nc).map(|ci| (ci, 1.0)).collect(),
            rel: Rel::Eq,
            rhs: 1.0,
        });
        let mut objective = vec![0.0; nc + 2];
        objective[nc] = -1.0;
        objective[nc + 1] = 1.0;
        let lp = Lp {
            num_vars: nc + 2,
            objective,
            rows,
        };
        let sol = simplex::solve(&lp).map_err(|e| MmsError::Solver(e.to_string()))?;
        -sol.value
    };

    // row player (f grid) minimizes: min u s.t. Σ_f x_f M[f][γ] ≤ u ∀γ
    let minimax = {
        let mut rows: Vec<RowSpec> = (0..nc)
            .map(|ci| {
                let mut coeffs: Vec<(usize, f64)> =
                    (0..nf).map(|fi| (fi, m[fi][ci])).collect();
                coeffs.push((nf, -1.0)); // u+
                coeffs.push((nf + 1, 1.0)); // u-
                RowSpec {
                    coeffs,
                    rel: Rel::Le,
                    rhs: 0.0,
                }
            })
            .collect();
        rows.push(RowSpec {
            coeffs: (0..nf).map(|fi| (fi, 1.0)).collect(),
            rel: Rel::Eq,
            rhs: 1.0,
        });
        let mut objective = vec![0.0; nf + 2];
        objective[nf] = 1.0;
        objective[nf + 1] = -1.0;
        let lp = Lp {
            num_vars: nf + 2,
            objective,
            rows,
        };
        let sol = simplex::solve(&lp).map_err(|e| MmsError::Solver(e.to_string()))?;
        sol.value
    };

    let audit_min = game_audit(space, &pencil, f_grid)?;

    Ok(MinmaxReport {
        curves: nc,
        f_count: nf,
        maximin,
        minimax,
        gap: (maximin - minimax).abs(),
        pencil_audit_min: audit_min,
        truncated: enumerated.truncated,
    })
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

pub fn pencil_to_json(space: &Space, p: &Pencil) -> String {
    use serde_json::json;
    let curves: Vec<serde_json::Value> = p
        .curves
        .iter()
        .zip(&p.sigma)
        .map(|(c, s)| {
            json!({
                "path": c.vertices().iter().map(|&v| space.id(v)).collect::<Vec<_>>(),
                // vertex paths are ambiguous on multigraphs; keep the edge
                // indices too
                "edges": c.edges(),
                "weight": s,
            })
        })
        .collect();
    serde_json::to_string_pretty(&json!({
        "x": space.id(p.x),
        "y": space.id(p.y),
        "C": p.c_quasi,
        "constant": p.constant,
        "modulus": p.modulus_value,
        "truncated": p.truncated,
        "curves": curves,
    }))
    .expect("pencil serialization")
}

/// Rebuild a pencil from its file form (kernel and window are recomputed).
pub fn pencil_from_json(space: &Space, text: &str) -> Result<Pencil> {
    let v: serde_json::Value = serde_json::from_str(text)?;
    let x = space.vertex_index(
        v["x"]
            .as_str()
            .ok_or_else(|| MmsError::InvalidParams("pencil file needs `x`".into()))?,
    )?;
    let y = space.vertex_index(
        v["y"]
            .as_str()
            .ok_or_else(|| MmsError::InvalidParams("pencil file needs `y`".into()))?,
    )?;
    let c = v["C"]
        .as_f64()
        .ok_or_else(|| MmsError::InvalidParams("pencil file needs `C`".into()))?;
    let constant = v["constant"]
        .as_f64()
        .ok_or_else(|| MmsError::InvalidParams("pencil file needs `constant`".into()))?;
    let modulus_value = v["modulus"].as_f64().unwrap_or(1.0 / constant);
    let kernel = riesz_kernel(space, x, y, c)?;
    let weight: Vec<f64> = (0..space.edge_count())
        .map(|e| {
            if kernel.edge_in_window(space, e) {
                kernel.on_edge(space, e)
            } else {
                0.0
            }
        })
        .collect();
    let mut curves = Vec::new();
    let mut sigma = Vec::new();
    for entry in v["curves"]
        .as_array()
        .ok_or_else(|| MmsError::InvalidParams("pencil file needs `curves`".into()))?
    {
        let ids: Vec<String> = serde_json::from_value(entry["path"].clone())?;
        let verts = ids
            .iter()
            .map(|id| space.vertex_index(id))
            .collect::<Result<Vec<_>>>()?;
        let curve = if entry.get("edges").is_some_and(|e| e.is_array()) {
            let edges: Vec<usize> = serde_json::from_value(entry["edges"].clone())?;
            Curve::new(space, verts, edges)?
        } else {
            Curve::from_vertices(space, verts)?
        };
        curves.push(curve);
        sigma.push(entry["weight"].as_f64().unwrap_or(0.0));
    }
    Ok(Pencil {
        x,
        y,
        c_quasi: c,
        curves,
        sigma,
        kernel,
        weight,
        modulus_value,
        constant,
        truncated: v["truncated"].as_bool().unwrap_or(false),
        degenerate: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen;

    fn tols() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn parallel_edges_pencil_is_symmetric() {
        let s = gen::parallel_edges(2).unwrap();
        let p = build_pencil(&s, 0, 1, Some(1.0), &tols()).unwrap();
        assert_eq!(p.curves.len(), 2);
        for w in &p.sigma {
            assert!((w - 0.5).abs() < 1e-12, "sigma {w}");
        }
        assert!((p.modulus_value - 2.0).abs() < 1e-9);
        assert!((p.constant - 0.5).abs() < 1e-9);
        // singleton audit: lhs = 1/2, rhs = μ̄(e) = 1, ratio = C_pencil
        let rep = verify_pencil(&s, &p, &[vec![0], vec![1], vec![0, 1]]).unwrap();
        assert!(rep.passes, "max ratio {} vs {}", rep.max_ratio, rep.constant);
        assert!((rep.max_ratio - 0.5).abs() < 1e-9);
    }

    #[test]
    fn path_pencil_single_geodesic() {
        let s = gen::path(3).unwrap();
        let p = build_pencil(&s, 0, 2, Some(1.0), &tols()).unwrap();
        assert_eq!(p.curves.len(), 1);
        assert!((p.sigma[0] - 1.0).abs() < 1e-12);
        // μ̄ edge weights: (R(x)+R(m))/2 = 3/2 on both edges; modulus = 3/2·1…
        // minimal admissible ρ puts total integral 1 along the geodesic
        assert!((p.modulus_value - 1.5).abs() < 1e-9);
        assert!((p.constant - 2.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn sigma_is_probability_and_quasiconvex() {
        let s = gen::grid(4).unwrap();
        let x = s.vertex_index("v0_0").unwrap();
        let y = s.vertex_index("v4_4").unwrap();
        let p = build_pencil(&s, x, y, Some(1.0), &tols()).unwrap();
        let total: f64 = p.sigma.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        let cap = p.c_quasi * s.distance(x, y);
        for c in &p.curves {
            assert!(c.length(&s) <= cap, "curve length {}", c.length(&s));
        }
        // structural singleton bound on every edge
        let mut mask = vec![false; s.edge_count()];
        for e in 0..s.edge_count() {
            mask[e] = true;
            let lhs = p.expected_intersection(&s, &mask);
            mask[e] = false;
            let rhs = p.constant * p.weight[e] * s.edge(e).measure;
            assert!(lhs <= rhs + 1e-9, "edge {e}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn swap_symmetry_on_symmetric_fixtures() {
        let mut cases: Vec<(crate::space::Space, usize, usize)> = Vec::new();
        let s = gen::parallel_edges(2).unwrap();
        cases.push((s, 0, 1));
        for n in [2usize, 4] {
            let s = gen::grid(n).unwrap();
            let x = s.vertex_index("v0_0").unwrap();
            let y = s.vertex_index(&format!("v{n}_{n}")).unwrap();
            cases.push((s, x, y));
        }
        for (s, x, y) in cases {
            let p = build_pencil(&s, x, y, Some(1.0), &tols()).unwrap();
            let q = build_pencil(&s, y, x, Some(1.0), &tols()).unwrap();
            assert!((p.constant - q.constant).abs() < 1e-12);
            let mut qs: Vec<(Curve, f64)> = q
                .curves
                .iter()
                .map(|c| c.reversed())
                .zip(q.sigma.iter().copied())
                .collect();
            qs.sort_by(|a, b| a.0.cmp(&b.0));
            let mut ps: Vec<(Curve, f64)> =
                p.curves.iter().cloned().zip(p.sigma.iter().copied()).collect();
            ps.sort_by(|a, b| a.0.cmp(&b.0));
            assert_eq!(ps.len(), qs.len());
            for ((ca, wa), (cb, wb)) in ps.iter().zip(&qs) {
                assert_eq!(ca, cb);
                assert!((wa - wb).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn minmax_gap_on_fixtures() {
        // single-curve family: the game value is forced, gap 0
        let s = gen::path(3).unwrap();
        let f_grid: Vec<Vec<f64>> = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]];
        let rep = minmax_gap(&s, 0, 2, 1.0, &f_grid, 100, &tols()).unwrap();
        assert!(rep.gap <= 1e-10, "gap {}", rep.gap);
        assert!(rep.pencil_audit_min >= -1e-9);

        // two parallel edges with both indicators: the hand-solved 2×2 game
        // has value 0 at the symmetric strategies
        let s = gen::parallel_edges(2).unwrap();
        let f_grid: Vec<Vec<f64>> = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let rep = minmax_gap(&s, 0, 1, 1.0, &f_grid, 100, &tols()).unwrap();
        assert!(rep.gap <= 1e-10, "gap {}", rep.gap);
        assert!(rep.maximin.abs() <= 1e-10, "value {}", rep.maximin);
        assert!(rep.pencil_audit_min >= -1e-9);
    }

    #[test]
    fn line_integral_bound_examples() {
        let s = gen::grid(3).unwrap();
        let x = s.vertex_index("v0_0").unwrap();
        let y = s.vertex_index("v3_3").unwrap();
        let p = build_pencil(&s, x, y, Some(1.0), &tols()).unwrap();
        // zero density: 0 ≤ 0
        let rep = pencil_line_integral_bound(&s, &p, &Density::zeros(&s)).unwrap();
        assert_eq!(rep.lhs, 0.0);
        assert!(rep.holds);
        // random-ish density
        let mut rng = crate::rng::Rng::new(5);
        let g = Density((0..s.edge_count()).map(|_| rng.f64()).collect());
        let rep = pencil_line_integral_bound(&s, &p, &g).unwrap();
        assert!(rep.holds, "lhs {} rhs {}", rep.lhs, rep.rhs);
    }

    #[test]
    fn game_audit_nonnegative_on_grid8() {
        // the evaluation-only form scales past what the game LPs enumerate
        let s = gen::grid(8).unwrap();
        let x = s.vertex_index("v0_0").unwrap();
        let y = s.vertex_index("v8_8").unwrap();
        let p = build_pencil(&s, x, y, Some(1.0), &tols()).unwrap();
        let mut rng = crate::rng::Rng::new(31);
        let f_grid: Vec<Vec<f64>> = (0..50)
            .map(|_| (0..s.edge_count()).map(|_| rng.f64()).collect())
            .collect();
        let min = game_audit(&s, &p, &f_grid).unwrap();
        assert!(min >= -1e-7, "audit min {min}");
    }

    #[test]
    fn verify_rejects_out_of_range_edges() {
        let s = gen::parallel_edges(2).unwrap();
        let p = build_pencil(&s, 0, 1, Some(1.0), &tols()).unwrap();
        assert!(verify_pencil(&s, &p, &[vec![99]]).is_err());
    }

    #[test]
    fn pencil_json_round_trip() {
        let s = gen::parallel_edges(2).unwrap();
        let p = build_pencil(&s, 0, 1, Some(1.0), &tols()).unwrap();
        let text = pencil_to_json(&s, &p);
        let q = pencil_from_json(&s, &text).unwrap();
        assert_eq!(p.curves.len(), q.curves.len());
        assert!((p.constant - q.constant).abs() < 1e-15);
        let rep = verify_pencil(&s, &q, &[vec![0], vec![1]]).unwrap();
        assert!(rep.passes);
    }
}
