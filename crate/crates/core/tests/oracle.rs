//! Oracle equivalence: the production solvers against independent
//! brute-force routes on small instances.

mod common;

use mms_core::curve::{all_simple_paths, Curve, CurveFamily};
use mms_core::field::Density;
use mms_core::modulus::{self, Tolerances};
use mms_core::rng::Rng;
use mms_core::simplex::{self, Lp, Rel, RowSpec};
use mms_core::{gen, space::SpaceBuilder};

fn tols() -> Tolerances {
    Tolerances::default()
}

/// Seeded small connected graphs (≤ 8 edges) with ≤ 4-path families:
/// production Mod_1 must match the dense vertex-enumeration LP to 1e-7.
#[test]
fn mod1_matches_vertex_enumeration() {
    let mut rng = Rng::new(0xACE5);
    let mut checked = 0;
    for _ in 0..60 {
        let s = gen::random_space(&mut rng, 6, 8);
        if s.edge_count() > 8 {
            continue;
        }
        for fam_try in 0..3 {
            let count = 2 + fam_try;
            let curves = gen::random_simple_paths(&s, &mut rng, count.min(4));
            if curves.is_empty() {
                continue;
            }
            let brute = common::brute_force_mod1(&s, &curves, None);
            let r = modulus::mod_p(&s, &CurveFamily::Explicit(curves), 1.0, None, &tols())
                .expect("solve");
            assert!(
                (r.value - brute).abs() <= 1e-7 * (1.0 + brute),
                "impl {} vs brute {}",
                r.value,
                brute
            );
            assert!(r.gap <= (1e-8f64).max(1e-6 * r.value));
            checked += 1;
        }
    }
    assert!(checked >= 60, "only {checked} oracle comparisons ran");
}

/// Weighted instances against the same oracle.
#[test]
fn weighted_mod1_matches_vertex_enumeration() {
    let mut rng = Rng::new(0xBEE);
    let mut checked = 0;
    for _ in 0..30 {
        let s = gen::random_space(&mut rng, 5, 7);
        if s.edge_count() > 8 {
            continue;
        }
        let w: Vec<f64> = (0..s.edge_count()).map(|_| rng.range_f64(0.1, 3.0)).collect();
        let curves = gen::random_simple_paths(&s, &mut rng, 3);
        if curves.is_empty() {
            continue;
        }
        let brute = common::brute_force_mod1(&s, &curves, Some(&w));
        let r = modulus::mod_p(&s, &CurveFamily::Explicit(curves), 1.0, Some(&w), &tols())
            .expect("solve");
        assert!(
            (r.value - brute).abs() <= 1e-7 * (1.0 + brute),
            "impl {} vs brute {}",
            r.value,
            brute
        );
        checked += 1;
    }
    assert!(checked >= 20);
}

/// p > 1 against the coordinate-ascent dual oracle.
#[test]
fn modp_matches_coordinate_ascent() {
    let mut rng = Rng::new(0xC0DE);
    let mut checked = 0;
    let mut tight = tols();
    tight.relative_gap = 1e-9;
    for _ in 0..24 {
        let s = gen::random_space(&mut rng, 5, 8);
        if s.edge_count() > 8 {
            continue;
        }
        let curves = gen::random_simple_paths(&s, &mut rng, 3);
        if curves.is_empty() {
            continue;
        }
        for p in [1.5, 2.0, 4.0] {
            let (oracle_primal, oracle_dual) = common::coordinate_ascent_modp(&s, &curves, p);
            let r = modulus::mod_p(&s, &CurveFamily::Explicit(curves.clone()), p, None, &tight)
                .expect("solve");
            // the oracle certifies opt ∈ [dual, primal]; the production value
            // must land in that bracket (to 1e-7) with a tight gap of its own
            let scale = 1.0 + oracle_primal.abs();
            assert!(
                r.value <= oracle_primal + 1e-7 * scale
                    && r.value >= oracle_dual - 1e-7 * scale,
                "p {p}: impl {} outside oracle bracket [{}, {}]",
                r.value,
                oracle_dual,
                oracle_primal
            );
            assert!(
                oracle_primal - oracle_dual <= 1e-5 * scale,
                "oracle bracket too loose: [{oracle_dual}, {oracle_primal}]"
            );
            assert!(r.gap <= 1e-6 * r.value.max(1e-12) + 1e-12);
            checked += 1;
        }
    }
    assert!(checked >= 30);
}

/// The label-setting oracle against exhaustive path enumeration.
#[test]
fn separation_oracle_matches_enumeration() {
    let mut rng = Rng::new(0x5E9);
    let s = gen::grid(4).unwrap();
    let x = s.vertex_index("v0_0").unwrap();
    let y = s.vertex_index("v4_4").unwrap();
    let cap = 1.5 * s.distance(x, y);
    let paths = all_simple_paths(&s, x, y, cap);
    assert!(!paths.is_empty());
    for _ in 0..20 {
        let rho = Density(
            (0..s.edge_count())
                .map(|_| if rng.flip(0.3) { 0.0 } else { rng.f64() })
                .collect(),
        );
        let brute_min = paths
            .iter()
            .map(|c| c.line_integral(&s, &rho).unwrap())
            .fold(f64::INFINITY, f64::min);
        let hit = modulus::separation_oracle(&s, &rho, x, y, cap, 1e-7).unwrap();
        match hit {
            Some(curve) => {
                let v = curve.line_integral(&s, &rho).unwrap();
                assert!(v < 1.0 - 1e-7);
                assert!(
                    (v - brute_min).abs() <= 1e-9 * (1.0 + brute_min),
                    "oracle found {v}, true min {brute_min}"
                );
                assert!(curve.length(&s) <= cap * (1.0 + 1e-12));
            }
            None => {
                assert!(
                    brute_min >= 1.0 - 1e-7,
                    "oracle missed a violation: min {brute_min}"
                );
            }
        }
    }
    // admissible output of a solve never violates
    let fam = CurveFamily::Pairs {
        x,
        y,
        length_cap: s.distance(x, y),
    };
    let r = modulus::mod_p(&s, &fam, 1.0, None, &tols()).unwrap();
    assert!(modulus::separation_oracle(&s, &r.density, x, y, s.distance(x, y), 1e-7)
        .unwrap()
        .is_none());
}

/// Mod_∞ closed form against an explicit LP with the single bound variable.
#[test]
fn mod_inf_matches_lp() {
    let mut b = SpaceBuilder::new();
    let v0 = b.vertex("a", 1.0);
    let v1 = b.vertex("b", 1.0);
    let v2 = b.vertex("c", 1.0);
    let v3 = b.vertex("d", 1.0);
    let e0 = b.edge(v0, v1, 1.0, 1.0);
    let e1 = b.edge(v1, v2, 4.0, 1.0);
    let e2 = b.edge(v2, v3, 0.5, 1.0);
    let s = b.build().unwrap();
    let curves = vec![
        Curve::new(&s, vec![v0, v1], vec![e0]).unwrap(),
        Curve::new(&s, vec![v1, v2, v3], vec![e1, e2]).unwrap(),
        Curve::new(&s, vec![v0, v1, v2], vec![e0, e1]).unwrap(),
    ];
    let closed = modulus::mod_inf(&s, &CurveFamily::Explicit(curves.clone())).unwrap();

    // LP: minimize t subject to admissibility and ρ_e ≤ t
    let n = s.edge_count();
    let mut rows: Vec<RowSpec> = curves
        .iter()
        .map(|c| {
            let mut acc = vec![0.0; n];
            for &e in c.edges() {
                acc[e] += s.edge(e).length;
            }
            RowSpec {
                coeffs: acc
                    .iter()
                    .enumerate()
                    .filter(|(_, &a)| a != 0.0)
                    .map(|(j, &a)| (j, a))
                    .collect(),
                rel: Rel::Ge,
                rhs: 1.0,
            }
        })
        .collect();
    for e in 0..n {
        rows.push(RowSpec {
            coeffs: vec![(e, 1.0), (n, -1.0)],
            rel: Rel::Le,
            rhs: 0.0,
        });
    }
    let mut objective = vec![0.0; n + 1];
    objective[n] = 1.0;
    let lp = Lp {
        num_vars: n + 1,
        objective,
        rows,
    };
    let sol = simplex::solve(&lp).unwrap();
    assert!(
        (closed.value - sol.value).abs() <= 1e-9 * (1.0 + sol.value),
        "closed form {} vs LP {}",
        closed.value,
        sol.value
    );
}

/// Implicit pair families agree with their explicit enumerations.
#[test]
fn implicit_families_match_explicit() {
    for (sp, a, b, c) in [
        (gen::grid(3).unwrap(), "v0_0", "v3_3", 1.0),
        (gen::grid(2).unwrap(), "v0_0", "v2_1", 4.0 / 3.0),
        (gen::theta(&[2, 2, 2]).unwrap(), "x", "y", 1.0),
    ] {
        let x = sp.vertex_index(a).unwrap();
        let y = sp.vertex_index(b).unwrap();
        let cap = c * sp.distance(x, y);
        let fam = all_simple_paths(&sp, x, y, cap);
        let explicit = modulus::mod_p(&sp, &CurveFamily::Explicit(fam), 1.0, None, &tols()).unwrap();
        let implicit = modulus::mod_p(
            &sp,
            &CurveFamily::Pairs {
                x,
                y,
                length_cap: cap,
            },
            1.0,
            None,
            &tols(),
        )
        .unwrap();
        assert!(
            (explicit.value - implicit.value).abs() <= 1e-7 * (1.0 + explicit.value),
            "{a}->{b}: explicit {} vs implicit {}",
            explicit.value,
            implicit.value
        );
    }
}

/// Exhaustive slice of the oracle contract: every labeled connected simple
/// graph on 3 vertices (with seeded lengths and measures), every family of
/// at most 4 simple paths, checked against the dense enumeration oracle.
#[test]
fn mod1_exhaustive_three_vertex_graphs() {
    let mut checked = 0;
    // subsets of the 3 possible edges: 01, 02, 12
    for mask in 1u32..8 {
        let edges: Vec<(usize, usize)> = [(0, 1), (0, 2), (1, 2)]
            .iter()
            .enumerate()
            .filter(|(k, _)| mask & (1 << k) != 0)
            .map(|(_, &e)| e)
            .collect();
        let mut b = SpaceBuilder::new();
        for v in 0..3 {
            b.vertex(&format!("v{v}"), 1.0 + v as f64 * 0.5);
        }
        let mut rng = Rng::new(900 + mask as u64);
        for &(u, v) in &edges {
            b.edge(u, v, rng.range_f64(0.3, 2.0), rng.range_f64(0.2, 2.0));
        }
        let Ok(s) = b.build() else {
            continue; // disconnected mask
        };
        // all simple paths between all pairs
        let mut paths = Vec::new();
        for x in 0..3 {
            for y in (x + 1)..3 {
                paths.extend(all_simple_paths(&s, x, y, f64::INFINITY));
            }
        }
        // all families of size 1..=4
        let n = paths.len();
        for mask2 in 1u32..(1 << n) {
            if mask2.count_ones() > 4 {
                continue;
            }
            let family: Vec<_> = (0..n)
                .filter(|k| mask2 & (1 << k) != 0)
                .map(|k| paths[k].clone())
                .collect();
            let brute = common::brute_force_mod1(&s, &family, None);
            let r = modulus::mod_p(&s, &CurveFamily::Explicit(family), 1.0, None, &tols())
                .expect("solve");
            assert!(
                (r.value - brute).abs() <= 1e-7 * (1.0 + brute),
                "mask {mask} family {mask2}: impl {} vs brute {brute}",
                r.value
            );
            checked += 1;
        }
    }
    assert!(checked >= 70, "{checked} exhaustive cases");
}

/// The 4-vertex layer of the same sweep, capped to pair families to keep
/// runtimes sane.
#[test]
fn mod1_exhaustive_four_vertex_graphs() {
    let all_edges = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
    let mut checked = 0;
    for mask in 1u32..64 {
        let edges: Vec<(usize, usize)> = all_edges
            .iter()
            .enumerate()
            .filter(|(k, _)| mask & (1 << k) != 0)
            .map(|(_, &e)| e)
            .collect();
        if edges.len() < 3 {
            continue; // cannot connect 4 vertices
        }
        let mut b = SpaceBuilder::new();
        for v in 0..4 {
            b.vertex(&format!("v{v}"), 1.0);
        }
        let mut rng = Rng::new(4000 + mask as u64);
        for &(u, v) in &edges {
            b.edge(u, v, rng.range_f64(0.3, 2.0), rng.range_f64(0.2, 2.0));
        }
        let Ok(s) = b.build() else {
            continue;
        };
        let mut paths = Vec::new();
        for x in 0..4 {
            for y in (x + 1)..4 {
                paths.extend(all_simple_paths(&s, x, y, f64::INFINITY));
            }
        }
        // singletons and a seeded half of the pairs
        let n = paths.len();
        for i in 0..n {
            let fam = vec![paths[i].clone()];
            let brute = common::brute_force_mod1(&s, &fam, None);
            let r = modulus::mod_p(&s, &CurveFamily::Explicit(fam), 1.0, None, &tols()).unwrap();
            assert!((r.value - brute).abs() <= 1e-7 * (1.0 + brute));
            checked += 1;
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if (i + j + mask as usize) % 2 == 0 {
                    continue;
                }
                let fam = vec![paths[i].clone(), paths[j].clone()];
                let brute = common::brute_force_mod1(&s, &fam, None);
                let r =
                    modulus::mod_p(&s, &CurveFamily::Explicit(fam), 1.0, None, &tols()).unwrap();
                assert!(
                    (r.value - brute).abs() <= 1e-7 * (1.0 + brute),
                    "mask {mask} pair ({i},{j}): impl {} vs brute {brute}",
                    r.value
                );
                checked += 1;
            }
        }
    }
    assert!(checked >= 1500, "{checked} exhaustive cases");
}
