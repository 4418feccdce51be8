//! Poincaré-type inequalities on discrete spaces.
//!
//! The measured constant is the worst ratio of ⨍_B|u−u_B| dμ against
//! rad(B)·⨍_{λB} g dμ over a library of functions and balls; function
//! averages use the vertex measure, gradient averages use the edge measure
//! over edges with both endpoints inside the dilated ball. The module also
//! hosts the Riesz potential, the Hajłasz gradient of a mass field, and the
//! pencil-to-Poincaré chain as an instrumented numerical pipeline.

use serde::Serialize;

use crate::am::DensitySequence;
use crate::error::{MmsError, Result};
use crate::field::{Density, ScalarField};
use crate::modulus::Tolerances;
use crate::pencil::{self, Pencil};
use crate::space::Space;

/// g_u(e) = |u(a) − u(b)| / length(e): the smallest edge field whose line
/// integral dominates |Δu| along every walk (telescoping).
pub fn minimal_upper_gradient(space: &Space, u: &ScalarField) -> Density {
    Density(
        space
            .edges()
            .iter()
            .map(|e| (u.0[e.u] - u.0[e.v]).abs() / e.length)
            .collect(),
    )
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct BallSpec {
    pub center: usize,
    pub radius: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PiMode {
    Direct,
    AmSequence,
    PencilDerived,
}

#[derive(Clone, Debug, Serialize)]
pub struct PiWitness {
    pub center: usize,
    pub radius: f64,
    pub function: usize,
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PiReport {
    /// Worst ratio over functions × balls (infinite when a nonzero mean
    /// oscillation meets a vanishing gradient average).
    pub constant: f64,
    pub lambda: f64,
    pub witnesses: Vec<PiWitness>,
    pub failures: usize,
    pub evaluated: usize,
    pub skipped: usize,
    pub mode: PiMode,
}

/// Deterministic ball library: strided centers, dyadic radii up to the
/// diameter scale.
pub fn default_balls(space: &Space, max_centers: usize, radii_per_center: usize) -> Vec<BallSpec> {
    let n = space.vertex_count();
    let stride = n.div_ceil(max_centers.max(1)).max(1);
    let ecc0 = {
        let row = space.dist_row_uncached(0);
        row.iter().cloned().filter(|d| d.is_finite()).fold(0.0, f64::max)
    };
    let reach = (2.0 * ecc0).max(space.max_edge_length());
    let r0 = space.min_edge_length().max(reach * 1e-6);
    let mut radii = Vec::new();
    let mut r = r0 * 1.0001;
    while r < reach && radii.len() + 1 < radii_per_center {
        radii.push(r);
        r *= 2.0;
    }
    radii.push(reach * 1.0001);
    let mut out = Vec::new();
    for center in (0..n).step_by(stride) {
        for &radius in &radii {
            out.push(BallSpec { center, radius });
        }
    }
    out
}

struct RatioAccumulator {
    constant: f64,
    witnesses: Vec<PiWitness>,
    failures: usize,
    evaluated: usize,
    skipped: usize,
}

impl RatioAccumulator {
    fn new() -> Self {
        RatioAccumulator {
            constant: 0.0,
            witnesses: Vec::new(),
            failures: 0,
            evaluated: 0,
            skipped: 0,
        }
    }

    fn push(&mut self, num: f64, den: f64, w: PiWitness) {
        if den > 0.0 {
            self.evaluated += 1;
            let ratio = num / den;
            if ratio > self.constant {
                self.constant = ratio;
            }
            self.witnesses.push(PiWitness { ratio, ..w });
            self.witnesses
                .sort_by(|a, b| b.ratio.total_cmp(&a.ratio));
            self.witnesses.truncate(3);
        } else if num <= 1e-12 {
            self.skipped += 1;
        } else {
            self.failures += 1;
            self.constant = f64::INFINITY;
            self.witnesses.push(PiWitness {
                ratio: f64::INFINITY,
                ..w
            });
            self.witnesses.truncate(3);
        }
    }

    fn into_report(self, lambda: f64, mode: PiMode) -> PiReport {
        PiReport {
            constant: self.constant,
            lambda,
            witnesses: self.witnesses,
            failures: self.failures,
            evaluated: self.evaluated,
            skipped: self.skipped,
            mode,
        }
    }
}

/// Mean oscillation ⨍_B|u−u_B| dμ over the ball members; None for empty
/// balls.
fn mean_oscillation(space: &Space, u: &ScalarField, members: &[usize]) -> Option<f64> {
    let mut mass = 0.0;
    let mut mean = 0.0;
    for &v in members {
        mass += space.vertex_measure(v);
        mean += u.0[v] * space.vertex_measure(v);
    }
    if mass <= 0.0 {
        return None;
    }
    mean /= mass;
    let mut osc = 0.0;
    for &v in members {
        osc += (u.0[v] - mean).abs() * space.vertex_measure(v);
    }
    Some(osc / mass)
}

/// Edge average ⨍ g dμ over edges with both endpoints in the given set.
fn edge_average(space: &Space, g: &Density, in_set: &[bool]) -> Option<f64> {
    let mut mass = 0.0;
    let mut total = 0.0;
    for (e, ed) in space.edges().iter().enumerate() {
        if in_set[ed.u] && in_set[ed.v] {
            mass += ed.measure;
            total += g.value(e) * ed.measure;
        }
    }
    if mass > 0.0 {
        Some(total / mass)
    } else {
        None
    }
}

/// Direct 1-Poincaré measurement with the minimal upper gradient of each
/// function.
pub fn pi_constant(
    space: &Space,
    functions: &[ScalarField],
    balls: &[BallSpec],
    lambda: f64,
    _tols: &Tolerances,
) -> Result<PiReport> {
    if functions.is_empty() || balls.is_empty() {
        return Err(MmsError::InvalidParams(
            "need at least one function and one ball".into(),
        ));
    }
    if lambda < 1.0 {
        return Err(MmsError::InvalidParams("dilation must be >= 1".into()));
    }
    let gradients: Vec<Density> = functions
        .iter()
        .map(|u| minimal_upper_gradient(space, u))
        .collect();
    let mut acc = RatioAccumulator::new();
    // group by center so each distance row is computed once
    let mut by_center: std::collections::BTreeMap<usize, Vec<f64>> = Default::default();
    for b in balls {
        by_center.entry(b.center).or_default().push(b.radius);
    }
    for (&center, radii) in &by_center {
        let row = space.dist_row_uncached(center);
        for &radius in radii {
            let members: Vec<usize> = (0..space.vertex_count())
                .filter(|&v| row[v] < radius)
                .collect();
            if members.is_empty() {
                acc.skipped += 1;
                continue;
            }
            let dilated: Vec<bool> = (0..space.vertex_count())
                .map(|v| row[v] < lambda * radius)
                .collect();
            for (fi, (u, g)) in functions.iter().zip(&gradients).enumerate() {
                let Some(num) = mean_oscillation(space, u, &members) else {
                    acc.skipped += 1;
                    continue;
                };
                let den = edge_average(space, g, &dilated)
                    .map(|avg| radius * avg)
                    .unwrap_or(0.0);
                acc.push(
                    num,
                    den,
                    PiWitness {
                        center,
                        radius,
                        function: fi,
                        ratio: 0.0,
                    },
                );
            }
        }
    }
    Ok(acc.into_report(lambda, PiMode::Direct))
}

/// Poincaré measurement with liminf of sequence gradient averages on the
/// right-hand side. The sequence must pass the upper-bound audit for u on
/// the default path set first; the audited notion is the sub-curve
/// inequality of the BV audit module (the sequence-relaxed and plain
/// upper-bound formulations are treated as the same notion here).
pub fn am_pi_check(
    space: &Space,
    u: &ScalarField,
    seq: &DensitySequence,
    balls: &[BallSpec],
    lambda: f64,
    horizon: usize,
    _tols: &Tolerances,
) -> Result<PiReport> {
    let audit = crate::bv::audit_bvam(space, u, seq, &crate::bv::default_audit_family(space, 64), horizon)?;
    if !audit.is_valid() {
        return Err(MmsError::Audit(format!(
            "{} exceptional curve(s) without divergence certificates",
            audit.exceptional.len()
        )));
    }
    if balls.is_empty() {
        return Err(MmsError::InvalidParams("need at least one ball".into()));
    }
    // evaluated terms for the liminf window (analytic tail when declared)
    let tail = seq.constant_tail_index();
    let eval_range: Vec<usize> = match tail {
        Some(k) => vec![k.min(horizon.saturating_sub(1))],
        None => (horizon / 2..horizon).collect(),
    };
    let terms: Vec<Density> = eval_range.iter().map(|&i| seq.term(space, i)).collect();

    let mut acc = RatioAccumulator::new();
    let mut by_center: std::collections::BTreeMap<usize, Vec<f64>> = Default::default();
    for b in balls {
        by_center.entry(b.center).or_default().push(b.radius);
    }
    for (&center, radii) in &by_center {
        let row = space.dist_row_uncached(center);
        for &radius in radii {
            let members: Vec<usize> = (0..space.vertex_count())
                .filter(|&v| row[v] < radius)
                .collect();
            if members.is_empty() {
                acc.skipped += 1;
                continue;
            }
            let dilated: Vec<bool> = (0..space.vertex_count())
                .map(|v| row[v] < lambda * radius)
                .collect();
            let Some(num) = mean_oscillation(space, u, &members) else {
                acc.skipped += 1;
                continue;
            };
            let liminf_avg = terms
                .iter()
                .map(|g| edge_average(space, g, &dilated).unwrap_or(0.0))
                .fold(f64::INFINITY, f64::min);
            let den = if liminf_avg.is_finite() {
                radius * liminf_avg
            } else {
                0.0
            };
            acc.push(
                num,
                den,
                PiWitness {
                    center,
                    radius,
                    function: 0,
                    ratio: 0.0,
                },
            );
        }
    }
    Ok(acc.into_report(lambda, PiMode::AmSequence))
}

/// Riesz potential Σ_{z∈A} mass(z)·d(x,z)/μ(B(x,d(x,z)))·μ(z); the z = x
/// summand vanishes by the kernel convention.
pub fn riesz_potential(space: &Space, mass: &ScalarField, a_set: &[usize], x: usize) -> f64 {
    let row = space.dist_row(x);
    let n = space.vertex_count();
    // ball measure below each realized distance, by one sorted sweep
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| row[a].total_cmp(&row[b]).then(a.cmp(&b)));
    let mut kernel = vec![0.0; n];
    let mut prefix = 0.0;
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
                kernel[v] = d / prefix;
            }
        }
        prefix += shell;
        i = j;
    }
    a_set
        .iter()
        .map(|&z| mass.0[z] * kernel[z] * space.vertex_measure(z))
        .sum()
}

/// Hajłasz gradient of a vertex mass field ν: h(x) = sup over realized ball
/// radii r ∈ (0, CR] of ν(B(x,r))/μ(B(x,r)).
pub fn hajlasz_gradient(space: &Space, nu: &ScalarField, cr: f64) -> ScalarField {
    let n = space.vertex_count();
    let mut h = vec![0.0; n];
    for x in 0..n {
        let row = space.dist_row_uncached(x);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| row[a].total_cmp(&row[b]).then(a.cmp(&b)));
        let mut mu = 0.0;
        let mut nv = 0.0;
        let mut best = 0.0f64;
        let mut i = 0;
        while i < n {
            let d = row[order[i]];
            if !d.is_finite() || d >= cr {
                break;
            }
            let mut j = i;
            while j < n && row[order[j]] == d {
                mu += space.vertex_measure(order[j]);
                nv += nu.0[order[j]];
                j += 1;
            }
            // closed set {dist ≤ d} is the open ball of any radius in (d, next)
            if mu > 0.0 {
                best = best.max(nv / mu);
            }
            i = j;
        }
        h[x] = best;
    }
    ScalarField(h)
}

/// Weak-type audit for a vertex field h against a mass ν:
/// sup_t t·μ({h > t}) / ν(X) over a log-spaced t grid.
pub fn weak_type_constant(space: &Space, h: &ScalarField, nu_total: f64, t_grid: &[f64]) -> f64 {
    let mut worst = 0.0f64;
    for &t in t_grid {
        if t <= 0.0 {
            continue;
        }
        let mass: f64 = (0..space.vertex_count())
            .filter(|&v| h.0[v] > t)
            .map(|v| space.vertex_measure(v))
            .sum();
        if nu_total > 0.0 {
            worst = worst.max(t * mass / nu_total);
        }
    }
    worst
}

// ---------------------------------------------------------------------------
// The pencil → Poincaré pipeline
// ---------------------------------------------------------------------------

/// Stage-by-stage audit of the pencil-to-Poincaré chain for one function.
///
/// Per sampled pair (x, y):
///   a1 = |u(x) − u(y)|                        (target oscillation)
///   a2 = Σ_γ σ_γ ∫_γ g ds                     (pencil average of the bound)
///   a3 = constant · Σ_window g R̄ μ           (pencil inequality)
///   a4 = I_window ν(x) + I_window ν(y)        (Riesz potentials of ν)
/// with ν the vertex mass of the late-horizon average of the sequence.
/// Stage constants c2 = max a2/a3 and c3 = max (a3/constant)/a4 are
/// structural (≤ 1); c1 = max a1/a2 is measured. The ball stage
/// c4 = max ⨍_B|u−u_B| / (rad·ν(B)/μ(B)) numericizes the embedding step,
/// and the derived Poincaré constant is c4·κ with
/// κ = max_B (ν(B)/μ(B)) / ⨍_{λB} g_u dμ — the product dominates the
/// directly measured constant on the same balls by construction.
#[derive(Clone, Debug, Serialize)]
pub struct PencilToPiReport {
    pub pairs_evaluated: usize,
    pub pairs_skipped: usize,
    pub c1_oscillation_vs_pencil: f64,
    pub c2_pencil_inequality: f64,
    pub c3_kernel_vs_potential: f64,
    pub potential_constant: f64,
    pub c4_ball_stage: f64,
    pub kappa: f64,
    pub derived_constant: f64,
    pub max_pencil_constant: f64,
    pub failures: usize,
}

#[allow(clippy::too_many_arguments)]
pub fn pencil_to_pi(
    space: &Space,
    u: &ScalarField,
    seq: &DensitySequence,
    pairs: &[(usize, usize)],
    balls: &[BallSpec],
    lambda: f64,
    horizon: usize,
    tols: &Tolerances,
) -> Result<PencilToPiReport> {
    let pencils = build_pencils(space, pairs, tols)?;
    pencil_to_pi_with(space, u, seq, &pencils, balls, lambda, horizon)
}

/// One pencil per distinct pair, with the default doubling rule for C.
pub fn build_pencils(
    space: &Space,
    pairs: &[(usize, usize)],
    tols: &Tolerances,
) -> Result<Vec<Pencil>> {
    pairs
        .iter()
        .filter(|(x, y)| x != y)
        .map(|&(x, y)| pencil::build_pencil(space, x, y, None, tols))
        .collect()
}

/// Chain evaluation against prebuilt pencils (suites share pencils across
/// test functions).
pub fn pencil_to_pi_with(
    space: &Space,
    u: &ScalarField,
    seq: &DensitySequence,
    pencils: &[Pencil],
    balls: &[BallSpec],
    lambda: f64,
    horizon: usize,
) -> Result<PencilToPiReport> {
    if pencils.is_empty() || balls.is_empty() {
        return Err(MmsError::InvalidParams(
            "need at least one pencil and one ball".into(),
        ));
    }
    // late-horizon average of the sequence stands in for the limit mass
    let lo = (3 * horizon) / 4;
    let window: Vec<usize> = (lo..horizon.max(lo + 1)).collect();
    let mut g_late = vec![0.0; space.edge_count()];
    for &i in &window {
        let t = seq.term(space, i);
        for e in 0..space.edge_count() {
            g_late[e] += t.value(e);
        }
    }
    for v in g_late.iter_mut() {
        *v /= window.len() as f64;
    }
    let g_late = Density(g_late);
    let mut nu = vec![0.0; space.vertex_count()];
    for (e, ed) in space.edges().iter().enumerate() {
        let half = 0.5 * g_late.value(e) * ed.measure;
        nu[ed.u] += half;
        nu[ed.v] += half;
    }
    let nu = ScalarField(nu);

    let mut c1 = 0.0f64;
    let mut c2 = 0.0f64;
    let mut c3 = 0.0f64;
    let mut cpot = 0.0f64;
    let mut cmax_pencil = 0.0f64;
    let mut failures = 0usize;
    let mut evaluated = 0usize;
    let skipped = 0usize;
    for p in pencils {
        let (x, y) = (p.x, p.y);
        cmax_pencil = cmax_pencil.max(p.constant);
        let a1 = (u.0[x] - u.0[y]).abs();
        let mut a2 = 0.0;
        for (curve, s) in p.curves.iter().zip(&p.sigma) {
            a2 += s * curve.line_integral(space, &g_late)?;
        }
        let a3_raw: f64 = (0..space.edge_count())
            .map(|e| g_late.value(e) * p.weight[e] * space.edge(e).measure)
            .sum();
        let a3 = p.constant * a3_raw;
        // ν is a vertex mass, so the two Riesz potentials contract it
        // against the pencil's kernel field directly: Σ_win (K_x + K_y)·ν
        let a4: f64 = p.kernel.window.iter().map(|&z| p.kernel.values[z] * nu.0[z]).sum();
        evaluated += 1;
        if a2 > 0.0 {
            c1 = c1.max(a1 / a2);
        } else if a1 > 1e-12 {
            failures += 1;
            c1 = f64::INFINITY;
        }
        if a3 > 0.0 {
            c2 = c2.max(a2 / a3);
        }
        if a4 > 0.0 {
            c3 = c3.max(a3_raw / a4);
            cpot = cpot.max(a1 / a4);
        } else if a1 > 1e-12 {
            failures += 1;
            cpot = f64::INFINITY;
        }
    }

    // ball stage and the κ bridge back to the direct denominator
    let g_u = minimal_upper_gradient(space, u);
    let mut c4 = 0.0f64;
    let mut kappa = 0.0f64;
    let mut by_center: std::collections::BTreeMap<usize, Vec<f64>> = Default::default();
    for b in balls {
        by_center.entry(b.center).or_default().push(b.radius);
    }
    for (&center, radii) in &by_center {
        let row = space.dist_row_uncached(center);
        for &radius in radii {
            let members: Vec<usize> = (0..space.vertex_count())
                .filter(|&v| row[v] < radius)
                .collect();
            if members.is_empty() {
                continue;
            }
            let mu_b: f64 = members.iter().map(|&v| space.vertex_measure(v)).sum();
            let nu_b: f64 = members.iter().map(|&v| nu.0[v]).sum();
            let Some(num) = mean_oscillation(space, u, &members) else {
                continue;
            };
            let den = radius * nu_b / mu_b;
            if den > 0.0 {
                c4 = c4.max(num / den);
            } else if num > 1e-12 {
                failures += 1;
                c4 = f64::INFINITY;
            }
            let dilated: Vec<bool> = (0..space.vertex_count())
                .map(|v| row[v] < lambda * radius)
                .collect();
            let g_avg = edge_average(space, &g_u, &dilated).unwrap_or(0.0);
            if g_avg > 0.0 {
                kappa = kappa.max((nu_b / mu_b) / g_avg);
            }
        }
    }

    Ok(PencilToPiReport {
        pairs_evaluated: evaluated,
        pairs_skipped: skipped,
        c1_oscillation_vs_pencil: c1,
        c2_pencil_inequality: c2,
        c3_kernel_vs_potential: c3,
        potential_constant: cpot,
        c4_ball_stage: c4,
        kappa,
        derived_constant: c4 * kappa,
        max_pencil_constant: cmax_pencil,
        failures,
    })
}
