//! Approximate-modulus certificates.
//!
//! The sequence-relaxed 1-modulus (admissibility only asks
//! liminf_i ∫_γ ρ_i ds ≥ 1) lives in an infinite-dimensional sequence space,
//! so this module deals only in certificates: upper bounds from explicit
//! admissible sequences whose liminf is audited per curve, and lower bounds
//! from a discrete Fubini estimate on product-structured slab families.

use serde::Serialize;

use crate::curve::{Curve, CurveFamily};
use crate::error::{MmsError, Result};
use crate::field::Density;
use crate::gen::{self, GridMeta};
use crate::modulus::{self, Tolerances};
use crate::space::Space;

/// A density sequence with enough structure to describe its own tail, so
/// that liminf audits can be exact instead of horizon-limited.
#[derive(Clone, Debug)]
pub enum DensitySequence {
    /// ρ_i ≡ ρ.
    Constant(Density),
    /// Shrinking strips on an axis grid: term i is m·χ(strip of height ~1/m)
    /// with m = min(2^i, n); constant once m reaches n.
    DyadicStrip {
        n: usize,
        /// `edge_rows[j]`: vertical edges whose lower endpoint sits at row j.
        edge_rows: Vec<Vec<usize>>,
    },
    /// Finite table, optionally constant from some index on.
    Table {
        terms: Vec<Density>,
        constant_from: Option<usize>,
    },
    /// ρ_i = base + eps·i·χ(spikes): spiked curves pass by divergence.
    SpikeAugmented {
        base: Density,
        spikes: Vec<usize>,
        eps: f64,
    },
}

impl DensitySequence {
    pub fn constant(rho: Density) -> Self {
        DensitySequence::Constant(rho)
    }

    /// The strip sequence for a unit grid (needs the grid's edge layout).
    pub fn dyadic_strip(meta: &GridMeta) -> Self {
        let n = meta.n;
        let edge_rows = (0..n)
            .map(|j| (0..=n).map(|i| meta.v_edge(i, j)).collect())
            .collect();
        DensitySequence::DyadicStrip { n, edge_rows }
    }

    /// Index the tail is constant from, when the sequence declares one.
    pub fn constant_tail_index(&self) -> Option<usize> {
        match self {
            DensitySequence::Constant(_) => Some(0),
            DensitySequence::DyadicStrip { n, .. } => {
                let mut i = 0usize;
                while (1usize << i) < *n {
                    i += 1;
                }
                Some(i)
            }
            DensitySequence::Table {
                constant_from,
                terms,
            } => constant_from.filter(|&k| k < terms.len()),
            DensitySequence::SpikeAugmented { .. } => None,
        }
    }

    pub fn term(&self, space: &Space, i: usize) -> Density {
        match self {
            DensitySequence::Constant(rho) => rho.clone(),
            DensitySequence::DyadicStrip { n, edge_rows } => {
                let m = (1usize << i.min(63)).min(*n);
                let rows = n.div_ceil(m);
                let mut rho = vec![0.0; space.edge_count()];
                for row in edge_rows.iter().take(rows) {
                    for &e in row {
                        rho[e] = m as f64;
                    }
                }
                Density(rho)
            }
            DensitySequence::Table { terms, .. } => {
                let k = i.min(terms.len() - 1);
                terms[k].clone()
            }
            DensitySequence::SpikeAugmented { base, spikes, eps } => {
                let mut rho = base.0.clone();
                for &e in spikes {
                    rho[e] += eps * i as f64;
                }
                Density(rho)
            }
        }
    }

    /// liminf_i ∫_γ ρ_i ds with a flag for whether the value is analytic
    /// (true) or a horizon-window estimate (false).
    pub fn liminf_integral(
        &self,
        space: &Space,
        curve: &Curve,
        horizon: usize,
    ) -> Result<(f64, bool)> {
        match self {
            DensitySequence::SpikeAugmented { base, spikes, .. } => {
                let spiked = curve.edges().iter().any(|e| spikes.contains(e));
                if spiked {
                    Ok((f64::INFINITY, true))
                } else {
                    Ok((curve.line_integral(space, base)?, true))
                }
            }
            _ => {
                if let Some(k) = self.constant_tail_index() {
                    let rho = self.term(space, k);
                    Ok((curve.line_integral(space, &rho)?, true))
                } else {
                    let lo = horizon / 2;
                    let mut min = f64::INFINITY;
                    for i in lo..horizon {
                        min = min.min(curve.line_integral(space, &self.term(space, i))?);
                    }
                    Ok((min, false))
                }
            }
        }
    }

    /// liminf_i ∫ ρ_i dμ with the same analytic flag.
    pub fn liminf_mass(&self, space: &Space, horizon: usize) -> (f64, bool) {
        match self {
            DensitySequence::SpikeAugmented { base, spikes, eps } => {
                let spike_mass: f64 = spikes.iter().map(|&e| space.edge(e).measure).sum();
                if spike_mass > 0.0 && *eps > 0.0 {
                    (f64::INFINITY, true)
                } else {
                    (base.mass(space, None), true)
                }
            }
            _ => {
                if let Some(k) = self.constant_tail_index() {
                    (self.term(space, k).mass(space, None), true)
                } else {
                    let lo = horizon / 2;
                    let min = (lo..horizon)
                        .map(|i| self.term(space, i).mass(space, None))
                        .fold(f64::INFINITY, f64::min);
                    (min, false)
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CertKind {
    Upper,
    Lower,
}

/// An upper or lower bound for the approximate modulus, with its audit data.
#[derive(Clone, Debug)]
pub struct AmCertificate {
    pub kind: CertKind,
    pub bound: f64,
    /// Evaluated per-term masses (upper) or per-fiber weights (lower).
    pub masses: Vec<f64>,
    /// True when some liminf had to be estimated from the horizon window
    /// alone (no declared tail).
    pub horizon_limited: bool,
    pub audited_curves: usize,
    /// Curve with the smallest audited liminf, for reports.
    pub worst: Option<(Curve, f64)>,
}

/// Upper certificate: audits liminf ∫_γ ρ_i ≥ 1 − tol for every family curve
/// and returns the liminf of the total masses. Errors when a curve provably
/// never reaches admissibility.
pub fn am_upper(
    space: &Space,
    family: &CurveFamily,
    seq: &DensitySequence,
    horizon: usize,
    tols: &Tolerances,
) -> Result<AmCertificate> {
    if horizon < 2 {
        return Err(MmsError::InvalidParams("horizon must be at least 2".into()));
    }
    let curves = match family {
        CurveFamily::Explicit(cs) => cs,
        CurveFamily::Pairs { .. } => {
            return Err(MmsError::InvalidParams(
                "approximate-modulus audits need an explicit family".into(),
            ))
        }
    };
    let mut horizon_limited = false;
    let mut worst: Option<(Curve, f64)> = None;
    for c in curves {
        let (liminf, analytic) = seq.liminf_integral(space, c, horizon)?;
        if !analytic {
            horizon_limited = true;
        }
        if liminf < 1.0 - tols.admissibility {
            if analytic {
                return Err(MmsError::InadmissibleSequence(format!(
                    "curve from `{}` to `{}` has liminf integral {liminf} < 1",
                    space.id(c.start()),
                    space.id(c.end())
                )));
            }
            return Err(MmsError::InadmissibleSequence(format!(
                "curve from `{}` to `{}` stays below admissibility through the horizon \
                 ({liminf} < 1) and the sequence declares no tail",
                space.id(c.start()),
                space.id(c.end())
            )));
        }
        if worst.as_ref().is_none_or(|(_, w)| liminf < *w) {
            worst = Some((c.clone(), liminf));
        }
    }
    let masses: Vec<f64> = (0..horizon)
        .map(|i| seq.term(space, i).mass(space, None))
        .collect();
    let (bound, mass_analytic) = seq.liminf_mass(space, horizon);
    Ok(AmCertificate {
        kind: CertKind::Upper,
        bound,
        masses,
        horizon_limited: horizon_limited || !mass_analytic,
        audited_curves: curves.len(),
        worst,
    })
}

/// Product-structured family: pairwise edge-disjoint parallel fibers of equal
/// length, with a transverse weight per fiber.
#[derive(Clone, Debug)]
pub struct SlabFamily {
    pub fibers: Vec<Curve>,
    /// Per-fiber transverse weight; defaults to min_e μ(e)/ℓ(e) over the
    /// fiber, the largest weight the Fubini estimate supports.
    pub transverse: Option<Vec<f64>>,
}

/// Lower certificate by the discrete Fubini estimate: for every density,
/// Σ_e ρ(e)μ(e) ≥ Σ_fibers t_f ∫_fiber ρ ds whenever t_f ≤ μ(e)/ℓ(e) on the
/// fiber's edges (fibers are edge-disjoint). Applied termwise to an
/// admissible sequence, liminf of both sides gives
/// liminf mass ≥ Σ_f t_f·(liminf ∫_fiber) ≥ Σ_f t_f, independent of the
/// particular sequence.
pub fn am_lower_fubini(space: &Space, slab: &SlabFamily) -> Result<AmCertificate> {
    if slab.fibers.is_empty() {
        return Err(MmsError::NotProductStructured("no fibers".into()));
    }
    let mut seen = vec![false; space.edge_count()];
    for f in &slab.fibers {
        for &e in f.edges() {
            if seen[e] {
                return Err(MmsError::NotProductStructured(format!(
                    "fibers share edge {e}"
                )));
            }
            seen[e] = true;
        }
    }
    let len0 = slab.fibers[0].length(space);
    for f in &slab.fibers {
        let l = f.length(space);
        if (l - len0).abs() > 1e-9 * (1.0 + len0) {
            return Err(MmsError::NotProductStructured(format!(
                "fiber lengths differ: {l} vs {len0}"
            )));
        }
    }
    let caps: Vec<f64> = slab
        .fibers
        .iter()
        .map(|f| {
            f.edges()
                .iter()
                .map(|&e| space.edge(e).measure / space.edge(e).length)
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let weights: Vec<f64> = match &slab.transverse {
        None => caps.clone(),
        Some(t) => {
            if t.len() != slab.fibers.len() {
                return Err(MmsError::NotProductStructured(
                    "transverse weight count does not match fibers".into(),
                ));
            }
            for (i, (&w, &cap)) in t.iter().zip(&caps).enumerate() {
                if !(0.0..=cap * (1.0 + 1e-12)).contains(&w) {
                    return Err(MmsError::NotProductStructured(format!(
                        "transverse weight {w} at fiber {i} exceeds the Fubini cap {cap}"
                    )));
                }
            }
            t.clone()
        }
    };
    let bound = weights.iter().sum();
    Ok(AmCertificate {
        kind: CertKind::Lower,
        bound,
        masses: weights,
        horizon_limited: false,
        audited_curves: slab.fibers.len(),
        worst: None,
    })
}

/// The sup-density check behind the AM_∞ = Mod_∞ identity: the pointwise sup
/// ρ = sup_{i ≤ horizon} ρ_i is admissible once the horizon covers every
/// curve's admissibility index, and its sup norm can never undercut Mod_∞.
#[derive(Clone, Debug, Serialize)]
pub struct AmInfReport {
    pub min_integral: f64,
    pub sup_norm: f64,
    pub mod_inf_value: Option<f64>,
    pub admissible: bool,
    pub dominates_mod_inf: bool,
}

pub fn am_inf_check(
    space: &Space,
    family: &CurveFamily,
    seq: &DensitySequence,
    horizon: usize,
    tols: &Tolerances,
) -> Result<AmInfReport> {
    let curves = match family {
        CurveFamily::Explicit(cs) => cs,
        CurveFamily::Pairs { .. } => {
            return Err(MmsError::InvalidParams(
                "approximate-modulus audits need an explicit family".into(),
            ))
        }
    };
    let mut sup = Density::zeros(space);
    for i in 0..horizon {
        sup = sup.sup_with(&seq.term(space, i));
    }
    if curves.is_empty() {
        return Ok(AmInfReport {
            min_integral: f64::INFINITY,
            sup_norm: sup.sup_norm(),
            mod_inf_value: None,
            admissible: true,
            dominates_mod_inf: true,
        });
    }
    let mut min_integral = f64::INFINITY;
    for c in curves {
        min_integral = min_integral.min(c.line_integral(space, &sup)?);
    }
    let mi = modulus::mod_inf(space, family)?;
    let admissible = min_integral >= 1.0 - tols.admissibility;
    let dominates = sup.sup_norm() >= mi.value - tols.admissibility;
    Ok(AmInfReport {
        min_integral,
        sup_norm: sup.sup_norm(),
        mod_inf_value: Some(mi.value),
        admissible,
        dominates_mod_inf: dominates,
    })
}

// ---------------------------------------------------------------------------
// The vertical-segment example suite
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct Ex31Row {
    pub delta: f64,
    /// Edges in the shortest admissible run per column.
    pub min_run: usize,
    pub mod1: f64,
    pub sup_norm: f64,
    pub gap: f64,
    /// min ∫ ρ* over a sample of the longer (dominated) runs.
    pub full_family_min_integral: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Ex31Report {
    pub n: usize,
    pub horizon: usize,
    pub rows: Vec<Ex31Row>,
    pub am_upper: f64,
    pub am_upper_masses: Vec<f64>,
    pub am_upper_horizon_limited: bool,
    pub fubini_lower: f64,
    pub elapsed_ms: u128,
}

/// Vertical run from the bottom of column `i`, `k` edges tall.
fn vertical_run(space: &Space, meta: &GridMeta, i: usize, k: usize) -> Curve {
    let verts: Vec<usize> = (0..=k).map(|j| meta.vertex(i, j)).collect();
    let edges: Vec<usize> = (0..k).map(|j| meta.v_edge(i, j)).collect();
    Curve::new(space, verts, edges).expect("grid run is a valid curve")
}

/// Γ_δ: all vertical runs from the bottom edge with length ≥ δ. The run of
/// minimal height per column is the binding constraint (longer runs contain
/// it as a prefix), so the solve uses the minimal subfamily and the optimal
/// density is afterwards audited on sampled longer runs.
pub fn gamma_delta_minimal(space: &Space, meta: &GridMeta, delta: f64) -> Result<Vec<Curve>> {
    let n = meta.n;
    let k0 = ((delta * n as f64) - 1e-9).ceil().max(1.0) as usize;
    if k0 > n {
        return Err(MmsError::InvalidParams(format!(
            "delta {delta} exceeds the grid height"
        )));
    }
    Ok((0..=n).map(|i| vertical_run(space, meta, i, k0)).collect())
}

/// Full suite around the vertical-segment family: per-δ moduli with the 1/δ
/// divergence witness in the optimal densities, the shrinking-strip upper
/// certificate, and the Fubini lower certificate on the half-height slab.
pub fn ex31_suite(
    n: usize,
    deltas: &[f64],
    horizon: usize,
    tols: &Tolerances,
) -> Result<Ex31Report> {
    let start = std::time::Instant::now();
    if deltas.iter().any(|&d| !(0.0 < d && d <= 1.0)) {
        return Err(MmsError::InvalidParams("deltas must lie in (0, 1]".into()));
    }
    let (space, meta) = gen::grid_with_meta(n)?;
    let mut rows = Vec::new();
    // requested deltas plus the full family (length ≥ one grid step)
    let mut all_deltas: Vec<f64> = deltas.to_vec();
    all_deltas.push(1.0 / n as f64);
    for &delta in &all_deltas {
        let minimal = gamma_delta_minimal(&space, &meta, delta)?;
        let k0 = minimal[0].edges().len();
        let fam = CurveFamily::Explicit(minimal);
        let r = modulus::mod_p(&space, &fam, 1.0, None, tols)?;
        // audit the optimal density over sampled longer runs of the full Γ_δ
        let mut full_min = f64::INFINITY;
        for i in (0..=n).step_by((n / 16).max(1)) {
            for k in [k0, (k0 + n) / 2, n] {
                let c = vertical_run(&space, &meta, i, k);
                full_min = full_min.min(c.line_integral(&space, &r.density)?);
            }
        }
        rows.push(Ex31Row {
            delta,
            min_run: k0,
            mod1: r.value,
            sup_norm: r.density.sup_norm(),
            gap: r.gap,
            full_family_min_integral: full_min,
        });
    }

    // upper certificate: by horizontal symmetry the strip integral of a run
    // depends only on its height, so one column of representatives audits
    // every column
    let seq = DensitySequence::dyadic_strip(&meta);
    let representatives: Vec<Curve> = (1..=n).map(|k| vertical_run(&space, &meta, 0, k)).collect();
    let upper = am_upper(
        &space,
        &CurveFamily::Explicit(representatives),
        &seq,
        horizon,
        tols,
    )?;

    // lower certificate on the half-height slab
    let k_half = n.div_ceil(2);
    let fibers: Vec<Curve> = (0..=n)
        .map(|i| vertical_run(&space, &meta, i, k_half))
        .collect();
    let lower = am_lower_fubini(
        &space,
        &SlabFamily {
            fibers,
            transverse: None,
        },
    )?;

    Ok(Ex31Report {
        n,
        horizon,
        rows,
        am_upper: upper.bound,
        am_upper_masses: upper.masses,
        am_upper_horizon_limited: upper.horizon_limited,
        fubini_lower: lower.bound,
        elapsed_ms: start.elapsed().as_millis(),
    })
}
