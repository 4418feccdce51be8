//! Independent oracles for the integration suites.
//!
//! These deliberately avoid the production solve paths: the p = 1 oracle
//! enumerates basic feasible points of the full dense LP, and the p > 1
//! oracle maximizes the Lagrange dual by cyclic coordinate bisection.

use mms_core::curve::Curve;
use mms_core::space::Space;

/// Exact Mod_1 by vertex enumeration on the full edge set. Dominated
/// constraint rows (their integrand majorizes another row) are dropped
/// first; that is an exact reduction for ≥ 1 constraints. Panics if the
/// reduced system is still too large to enumerate, so callers keep the
/// fixtures small.
pub fn brute_force_mod1(space: &Space, curves: &[Curve], weight: Option<&[f64]>) -> f64 {
    let n = space.edge_count();
    assert!(n <= 9, "brute-force oracle is for tiny graphs");
    let costs: Vec<f64> = (0..n)
        .map(|e| weight.map_or(1.0, |w| w[e]) * space.edge(e).measure)
        .collect();
    // constraint rows: per-curve arclength coefficients
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for c in curves {
        let mut row = vec![0.0; n];
        for &e in c.edges() {
            row[e] += space.edge(e).length;
        }
        if !rows.contains(&row) {
            rows.push(row);
        }
    }
    // drop rows implied by another (componentwise a ≤ b ⇒ a's constraint
    // implies b's)
    let mut keep = vec![true; rows.len()];
    for i in 0..rows.len() {
        for j in 0..rows.len() {
            if i != j
                && keep[i]
                && keep[j]
                && rows[i].iter().zip(&rows[j]).all(|(a, b)| a <= b)
                && rows[i] != rows[j]
            {
                keep[j] = false;
            }
        }
    }
    let rows: Vec<Vec<f64>> = rows
        .into_iter()
        .zip(keep)
        .filter_map(|(r, k)| if k { Some(r) } else { None })
        .collect();
    let m = rows.len();
    assert!(m <= 16, "too many independent constraints for enumeration");

    // zero-cost edges satisfy their curves for free: any curve over such an
    // edge can be handled by unbounded density there, so its row is
    // satisfiable at zero cost and can be removed
    let rows: Vec<Vec<f64>> = rows
        .into_iter()
        .filter(|r| (0..n).all(|e| !(r[e] > 0.0 && costs[e] <= 0.0)))
        .collect();
    if rows.is_empty() {
        return 0.0;
    }
    let m = rows.len();

    let total = m + n;
    let mut best = f64::INFINITY;
    let mut combo: Vec<usize> = (0..n).collect();
    loop {
        // solve the active-set system: picked rows tight, picked bounds zero
        let mut a = vec![vec![0.0; n]; n];
        let mut b = vec![0.0; n];
        for (k, &pick) in combo.iter().enumerate() {
            if pick < m {
                a[k].copy_from_slice(&rows[pick]);
                b[k] = 1.0;
            } else {
                a[k][pick - m] = 1.0;
                b[k] = 0.0;
            }
        }
        if let Some(x) = solve_dense(&mut a, &mut b) {
            let feasible = x.iter().all(|&v| v >= -1e-9)
                && rows
                    .iter()
                    .all(|r| r.iter().zip(&x).map(|(a, x)| a * x).sum::<f64>() >= 1.0 - 1e-9);
            if feasible {
                let val: f64 = costs.iter().zip(&x).map(|(c, x)| c * x).sum();
                best = best.min(val);
            }
        }
        if !next_combination(&mut combo, total) {
            break;
        }
    }
    best
}

fn next_combination(combo: &mut [usize], n: usize) -> bool {
    let k = combo.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if combo[i] < n - (k - i) {
            combo[i] += 1;
            for j in i + 1..k {
                combo[j] = combo[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn solve_dense(a: &mut [Vec<f64>], b: &mut [f64]) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-11 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for i in 0..n {
            if i != col {
                let f = a[i][col] / a[col][col];
                if f != 0.0 {
                    for j in col..n {
                        a[i][j] -= f * a[col][j];
                    }
                    b[i] -= f * b[col];
                }
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

/// Mod_p for p > 1 by cyclic coordinate ascent on the Lagrange dual with
/// bisection line searches; independent of the production gradient path.
/// Returns the certified bracket (feasible primal value, dual lower bound).
pub fn coordinate_ascent_modp(space: &Space, curves: &[Curve], p: f64) -> (f64, f64) {
    assert!(p > 1.0);
    let n = space.edge_count();
    let costs: Vec<f64> = (0..n).map(|e| space.edge(e).measure).collect();
    assert!(costs.iter().all(|&c| c > 0.0), "oracle needs positive costs");
    let rows: Vec<Vec<f64>> = curves
        .iter()
        .map(|c| {
            let mut row = vec![0.0; n];
            for &e in c.edges() {
                row[e] += space.edge(e).length;
            }
            row
        })
        .collect();
    let m = rows.len();
    let q = 1.0 / (p - 1.0);
    let rho_of = |lambda: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|e| {
                let s: f64 = (0..m).map(|i| lambda[i] * rows[i][e]).sum();
                (s / (p * costs[e])).max(0.0).powf(q)
            })
            .collect()
    };
    let integral = |rho: &[f64], i: usize| -> f64 {
        (0..n).map(|e| rows[i][e] * rho[e]).sum()
    };
    let mut lambda: Vec<f64> = vec![1.0; m];
    for _ in 0..12000 {
        let mut moved = 0.0f64;
        for i in 0..m {
            // the partial derivative 1 − ∫_γi ρ(λ) is decreasing in λ_i;
            // bisect for its root
            let mut lo = 0.0f64;
            let mut hi = lambda[i].max(1.0);
            let deriv = |v: f64, lambda: &mut Vec<f64>| -> f64 {
                let old = lambda[i];
                lambda[i] = v;
                let rho = rho_of(lambda);
                lambda[i] = old;
                1.0 - integral(&rho, i)
            };
            while deriv(hi, &mut lambda) > 0.0 {
                hi *= 2.0;
                if hi > 1e12 {
                    break;
                }
            }
            if deriv(lo, &mut lambda) <= 0.0 {
                hi = 0.0;
            }
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if deriv(mid, &mut lambda) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let next = 0.5 * (lo + hi);
            moved = moved.max((next - lambda[i]).abs());
            lambda[i] = next;
        }
        if moved < 1e-15 {
            break;
        }
    }
    // certified bracket: rescaled feasible primal above, dual value below
    let rho = rho_of(&lambda);
    let min_int = (0..m)
        .map(|i| integral(&rho, i))
        .fold(f64::INFINITY, f64::min);
    assert!(min_int > 0.0, "degenerate oracle instance");
    let primal = (0..n)
        .map(|e| costs[e] * (rho[e] / min_int).powf(p))
        .sum();
    let mass: f64 = (0..n).map(|e| costs[e] * rho[e].powf(p)).sum();
    let dual = (1.0 - p) * mass + lambda.iter().sum::<f64>();
    (primal, dual)
}
