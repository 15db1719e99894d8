//! The named verification suites behind `fkf verify`. Each suite replays one
//! family of identities at the requested size and returns one row per check.

use std::sync::Arc;

use fkf_core::config::FkConfig;
use fkf_core::engines::{run_chain, EnumOpts};
use fkf_core::holomorphy::{
    build_midedge_field_unchecked, cauchy_sum, f_plus_minus, pfaffian_identity_check,
    r_function_max, sholo_residual, two_point_diagonal,
};
use fkf_core::lattice::{CornerId, LatticeDomain};
use fkf_core::measures::{es_weight, fk_weight, ising_weight, ModelParams, SpinConfig};
use fkf_core::observables::{
    check_equivalence, config_contribution, exploration_tree_winding, fermion_exact, InsertionSet,
};
use fkf_core::winding::{path_winding, winding_phase};
use fkf_core::Result;

use crate::report::ResultRow;

pub const SUITES: [&str; 8] = [
    "lemma-loop",
    "winding",
    "equivalence",
    "sholo",
    "residue",
    "pfaffian",
    "exploration",
    "coupling",
];

pub struct SuiteCtx {
    pub domain: Arc<LatticeDomain>,
    pub params: ModelParams,
    pub opts: EnumOpts,
    pub sweeps: u64,
    pub seed: u64,
}

pub fn run_suite(name: &str, ctx: &SuiteCtx) -> Result<Vec<ResultRow>> {
    match name {
        "lemma-loop" => lemma_loop(ctx),
        "winding" => winding(ctx),
        "equivalence" => equivalence(ctx),
        "sholo" => sholo(ctx),
        "residue" => residue(ctx),
        "pfaffian" => pfaffian_suite(ctx),
        "exploration" => exploration(ctx),
        "coupling" => coupling(ctx),
        _ => unreachable!("unknown suite"),
    }
}

fn each_config(d: &Arc<LatticeDomain>, mut f: impl FnMut(&FkConfig)) {
    for bits in 0..1u64 << d.edge_count() {
        f(&FkConfig::new(Arc::clone(d), bits).unwrap());
    }
}

/// Loop-events lemma and the Euler loop count, exhaustively.
fn lemma_loop(ctx: &SuiteCtx) -> Result<Vec<ResultRow>> {
    let d = &ctx.domain;
    let mut lemma_violations = 0u64;
    let mut euler_violations = 0u64;
    each_config(d, |cfg| {
        let labels = cfg.clusters();
        let loops = cfg.extract_loops();
        if loops.len() != labels.primal_count + labels.dual_count - 1 {
            euler_violations += 1;
        }
        for c1 in 0..d.corner_count() {
            let k1 = d.corner(c1).unwrap();
            for c2 in c1 + 1..d.corner_count() {
                let k2 = d.corner(c2).unwrap();
                let lhs = loops.corners_connected(c1, c2).unwrap();
                let rhs = labels.primal_connected(k1.u, k2.u) && labels.dual_connected(k1.w, k2.w);
                if lhs != rhs {
                    lemma_violations += 1;
                }
            }
        }
    });
    Ok(vec![
        ResultRow::check("loop_events_lemma_violations", lemma_violations as f64, 0.0),
        ResultRow::check("euler_relation_violations", euler_violations as f64, 0.0),
    ])
}

/// Winding phase well-definedness, antisymmetry and composition across all
/// configurations of the domain.
fn winding(ctx: &SuiteCtx) -> Result<Vec<ResultRow>> {
    let d = &ctx.domain;
    let mut antisym_violations = 0u64;
    let mut composition_violations = 0u64;
    let mut full_turn_violations = 0u64;
    each_config(d, |cfg| {
        let loops = cfg.extract_loops();
        for (li, l) in loops.loops().iter().enumerate() {
            if loops.loop_turn(li).abs() != 4 {
                full_turn_violations += 1;
            }
            let n = l.len();
            for i in 0..n {
                let c1 = l[i];
                let c2 = l[(i + n / 3 + 1) % n];
                if c1 == c2 {
                    continue;
                }
                // well-definedness asserted inside winding_phase
                let p12 = winding_phase(&loops, c1, c2).unwrap();
                let p21 = winding_phase(&loops, c2, c1).unwrap();
                if i32::from(p12) * i32::from(p21) != -1 {
                    antisym_violations += 1;
                }
                let c3 = l[(i + 2 * n / 3 + 1) % n];
                if c3 == c1 || c3 == c2 {
                    continue;
                }
                let q12 = path_winding(&loops, c1, c2).unwrap().0;
                let q23 = path_winding(&loops, c2, c3).unwrap().0;
                let q13 = path_winding(&loops, c1, c3).unwrap().0;
                let p23 = winding_phase(&loops, c2, c3).unwrap();
                let p13 = winding_phase(&loops, c1, c3).unwrap();
                if q12 + q23 != q13 || i32::from(p12) * i32::from(p23) != i32::from(p13) {
                    composition_violations += 1;
                }
            }
        }
    });
    Ok(vec![
        ResultRow::check(
            "winding_antisymmetry_violations",
            antisym_violations as f64,
            0.0,
        ),
        ResultRow::check(
            "winding_composition_violations",
            composition_violations as f64,
            0.0,
        ),
        ResultRow::check(
            "loop_full_turn_violations",
            full_turn_violations as f64,
            0.0,
        ),
    ])
}

/// Deterministic spread of corner pairs across the domain.
fn sample_pairs(d: &LatticeDomain, max: usize) -> Vec<(CornerId, CornerId)> {
    let n = d.corner_count();
    let mut pairs = Vec::new();
    let mut stride = 1;
    while n * n / (2 * stride) > max && stride < n {
        stride += 1;
    }
    let mut k = 0usize;
    for c1 in 0..n {
        for c2 in c1 + 1..n {
            if k % stride == 0 {
                pairs.push((c1, c2));
            }
            k += 1;
        }
    }
    pairs.truncate(max);
    pairs
}

/// FK vs Ising observables: every sampled 2-point pair and, when the domain
/// allows well separated corners, one 4-point set.
fn equivalence(ctx: &SuiteCtx) -> Result<Vec<ResultRow>> {
    let d = &ctx.domain;
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    let mut worst_book = 0i64;
    for (c1, c2) in sample_pairs(d, 40) {
        let ins = InsertionSet::new(d, vec![c1, c2])?;
        let rep = check_equivalence(d, &ctx.params, &ins, &ctx.opts)?;
        worst = worst.max(rep.abs_diff);
        worst_book = worst_book.max(rep.bookkeeping_max_err);
    }
    rows.push(ResultRow::check("two_point_max_abs_diff", worst, 1e-10));
    rows.push(ResultRow::check(
        "low_temp_bookkeeping_max_err",
        worst_book as f64,
        0.0,
    ));
    if d.width() >= 3 && d.height() >= 3 {
        let corners = vec![
            d.corner_by_spec(0, 0, fkf_core::Quadrant::NE)?,
            d.corner_by_spec(d.width() as i64 - 1, 0, fkf_core::Quadrant::NW)?,
            d.corner_by_spec(
                d.width() as i64 - 1,
                d.height() as i64 - 1,
                fkf_core::Quadrant::SW,
            )?,
            d.corner_by_spec(0, d.height() as i64 - 1, fkf_core::Quadrant::SE)?,
        ];
        let ins = InsertionSet::new(d, corners)?;
        let rep = check_equivalence(d, &ctx.params, &ins, &ctx.opts)?;
        rows.push(ResultRow::check("four_point_abs_diff", rep.abs_diff, 1e-10));
    }
    Ok(rows)
}

fn central_insertion(d: &Arc<LatticeDomain>) -> Result<CornerId> {
    d.corner_by_spec(
        (d.width() as i64 - 1) / 2,
        (d.height() as i64 - 1) / 2,
        fkf_core::Quadrant::NE,
    )
}

/// s-holomorphicity of the mid-edge field around one insertion. Off
/// criticality this suite fails by design; that is the negative control.
fn sholo(ctx: &SuiteCtx) -> Result<Vec<ResultRow>> {
    let d = &ctx.domain;
    let xi = central_insertion(d)?;
    let ins = InsertionSet::new(d, vec![xi])?;
    let field = build_midedge_field_unchecked(d, &ctx.params, &ins, &ctx.opts)?;
    let mut worst_res = 0.0f64;
    let mut tested = 0u64;
    for c in 0..d.corner_count() {
        match sholo_residual(&field, c) {
            Ok(r) => {
                worst_res = worst_res.max(r);
                tested += 1;
            }
            Err(_) => continue,
        }
    }
    let mut worst_cauchy = 0.0f64;
    for m in d.mid_edges() {
        if let Ok(v) = cauchy_sum(&field, m.id) {
            worst_cauchy = worst_cauchy.max(v.norm());
        }
    }
    let mut rows = vec![
        ResultRow::check("pairing_max_gap", field.pairing_max_gap(), 1e-12),
        ResultRow::check("sholo_max_residual", worst_res, 1e-12),
        ResultRow::check("cauchy_max_contour_sum", worst_cauchy, 1e-12),
    ];
    rows.push(ResultRow {
        name: "corners_tested".into(),
        value_re: Some(tested as f64),
        ..Default::default()
    });
    Ok(rows)
}

/// Discrete residues: the two-point diagonal and, on domains with room, the
/// 4-point residue factorisation.
fn residue(ctx: &SuiteCtx) -> Result<Vec<ResultRow>> {
    let d = &ctx.domain;
    let mut worst_diag = 0.0f64;
    let mut tested = 0u64;
    for c in 0..d.corner_count() {
        if d.corner_mid_edges(c)?.is_none() {
            continue;
        }
        let (fp, fm) = two_point_diagonal(d, &ctx.params, c, &ctx.opts)?;
        worst_diag = worst_diag.max(((fp - fm).norm() - 2.0).abs());
        tested += 1;
    }
    let mut rows = vec![ResultRow::check(
        "two_point_diagonal_max_err",
        worst_diag,
        1e-12,
    )];
    if d.width() >= 3 && d.height() >= 3 {
        let corners = vec![
            d.corner_by_spec(1, 1, fkf_core::Quadrant::NE)?,
            d.corner_by_spec(d.width() as i64 - 1, 0, fkf_core::Quadrant::NW)?,
            d.corner_by_spec(0, d.height() as i64 - 1, fkf_core::Quadrant::SE)?,
        ];
        let ins = InsertionSet::new(d, corners.clone())?;
        let field = build_midedge_field_unchecked(d, &ctx.params, &ins, &ctx.opts)?;
        let mut worst_fact = 0.0f64;
        for j in 0..corners.len() {
            let (fp, fm) = match f_plus_minus(&field, j) {
                Ok(v) => v,
                Err(_) => continue,
            };
            let rest: Vec<CornerId> = corners
                .iter()
                .copied()
                .filter(|&x| x != corners[j])
                .collect();
            let rest_ins = InsertionSet::new(d, rest)?;
            let f_rest = fermion_exact(d, &ctx.params, &rest_ins, &ctx.opts)?
                .value
                .re;
            let (dp, dm) = two_point_diagonal(d, &ctx.params, corners[j], &ctx.opts)?;
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            worst_fact = worst_fact.max((fp - sign * f_rest * dp).norm());
            worst_fact = worst_fact.max((fm - sign * f_rest * dm).norm());
        }
        rows.push(ResultRow::check(
            "residue_factorisation_max_err",
            worst_fact,
            1e-10,
        ));
        let worst_r = r_function_max(d, &ctx.params, &ins, &ctx.opts)?;
        rows.push(ResultRow::check("r_function_max", worst_r, 1e-10));
    }
    rows.push(ResultRow {
        name: "corners_tested".into(),
        value_re: Some(tested as f64),
        ..Default::default()
    });
    Ok(rows)
}

/// Deterministic catalogue of well-separated corner quadruples.
fn quadruples(d: &LatticeDomain, max: usize) -> Vec<Vec<CornerId>> {
    let mut sets = Vec::new();
    let corners: Vec<CornerId> = (0..d.corner_count()).collect();
    'outer: for &a in &corners {
        for &b in &corners {
            if b <= a {
                continue;
            }
            for &c in &corners {
                if c <= b {
                    continue;
                }
                for &e in &corners {
                    if e <= c {
                        continue;
                    }
                    let set = vec![a, b, c, e];
                    if let Ok(ins) = InsertionSet::new(d, set.clone()) {
                        if ins.well_separated(d) {
                            sets.push(set);
                            if sets.len() >= max {
                                break 'outer;
                            }
                        }
                    }
                }
            }
        }
    }
    sets
}

/// Pfaffian identity for 2n = 4 over a catalogue of corner quadruples.
fn pfaffian_suite(ctx: &SuiteCtx) -> Result<Vec<ResultRow>> {
    let d = &ctx.domain;
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    let mut nonzero = 0u64;
    let sets = quadruples(d, 6);
    let tested = sets.len();
    for set in sets {
        let ins = InsertionSet::new(d, set)?;
        let rep = pfaffian_identity_check(d, &ctx.params, &ins, &ctx.opts)?;
        worst = worst.max(rep.diff);
        if rep.lhs.abs() > 1e-8 {
            nonzero += 1;
        }
    }
    rows.push(ResultRow::check("pfaffian_identity_max_diff", worst, 1e-10));
    rows.push(ResultRow {
        name: "quadruples_tested".into(),
        value_re: Some(tested as f64),
        ..Default::default()
    });
    rows.push(ResultRow {
        name: "nonzero_values".into(),
        value_re: Some(nonzero as f64),
        ..Default::default()
    });
    Ok(rows)
}

/// Exploration-tree identity E[W(T)] = f and root invariance, exhaustively.
fn exploration(ctx: &SuiteCtx) -> Result<Vec<ResultRow>> {
    let d = &ctx.domain;
    let boundary: Vec<CornerId> = (0..d.corner_count())
        .filter(|&c| d.is_boundary_corner(c).unwrap())
        .collect();
    let corners = vec![
        d.corner_by_spec(0, 0, fkf_core::Quadrant::NE)?,
        d.corner_by_spec(
            d.width() as i64 - 1,
            d.height() as i64 - 1,
            fkf_core::Quadrant::SW,
        )?,
    ];
    let ins = InsertionSet::new(d, corners)?;
    let exact = fermion_exact(d, &ctx.params, &ins, &ctx.opts)?.value.re;
    let mut z = 0.0;
    let mut sum = 0.0;
    let mut root_violations = 0u64;
    let mut contribution_mismatch = 0u64;
    each_config(d, |cfg| {
        let loops = cfg.extract_loops();
        let w = fk_weight(cfg, &ctx.params);
        let w_tree = exploration_tree_winding(&loops, &ins, boundary[0]).unwrap();
        for &root in &boundary[1..] {
            if exploration_tree_winding(&loops, &ins, root).unwrap() != w_tree {
                root_violations += 1;
            }
        }
        if w_tree != config_contribution(&loops, &ins) {
            contribution_mismatch += 1;
        }
        z += w;
        sum += w * w_tree;
    });
    Ok(vec![
        ResultRow::check("expectation_abs_diff", (sum / z - exact).abs(), 1e-12),
        ResultRow::check("root_invariance_violations", root_violations as f64, 0.0),
        ResultRow::check("contribution_mismatches", contribution_mismatch as f64, 0.0),
    ])
}

/// Edwards-Sokal marginals (exhaustive) and chain stationarity in total
/// variation against the exact distribution.
fn coupling(ctx: &SuiteCtx) -> Result<Vec<ResultRow>> {
    let d = &ctx.domain;
    let params = &ctx.params;
    let ne = d.edge_count();
    let nv = d.vertex_count();
    // marginal over spins reproduces rho_p, marginal over configs pi_beta
    let mut worst_rho = 0.0f64;
    let mut ratio: Option<f64> = None;
    for bits in 0..1u64 << ne {
        let cfg = FkConfig::new(Arc::clone(d), bits).unwrap();
        let mut total = 0.0;
        for sbits in 0..1u64 << nv {
            total += es_weight(&cfg, &SpinConfig::from_bits(d, sbits), params, &[]);
        }
        let r = total / fk_weight(&cfg, params);
        match ratio {
            None => ratio = Some(r),
            Some(r0) => worst_rho = worst_rho.max(((r - r0) / r0).abs()),
        }
    }
    let mut worst_pi = 0.0f64;
    let mut ratio2: Option<f64> = None;
    for sbits in 0..1u64 << nv {
        let spins = SpinConfig::from_bits(d, sbits);
        let mut total = 0.0;
        for bits in 0..1u64 << ne {
            total += es_weight(
                &FkConfig::new(Arc::clone(d), bits).unwrap(),
                &spins,
                params,
                &[],
            );
        }
        let r = total / ising_weight(&spins, d, params);
        match ratio2 {
            None => ratio2 = Some(r),
            Some(r0) => worst_pi = worst_pi.max(((r - r0) / r0).abs()),
        }
    }
    // chain stationarity
    let mut weights = vec![0.0f64; 1 << ne];
    let mut z = 0.0;
    for bits in 0..1u64 << ne {
        let w = fk_weight(&FkConfig::new(Arc::clone(d), bits).unwrap(), params);
        weights[bits as usize] = w;
        z += w;
    }
    let mut counts = vec![0u64; 1 << ne];
    let burn = ctx.sweeps / 100;
    run_chain(d, params, ctx.sweeps, burn, ctx.seed, |cfg| {
        counts[cfg.bits() as usize] += 1
    })?;
    let n = (ctx.sweeps - burn) as f64;
    let tv: f64 = (0..1usize << ne)
        .map(|i| (counts[i] as f64 / n - weights[i] / z).abs())
        .sum::<f64>()
        / 2.0;
    // irreducible sampling noise of the empirical distribution: even a
    // perfectly stationary chain shows E[TV] ~ sum_i sqrt(p_i(1-p_i)/n)
    // half-normal terms, which dominates 0.01 once the state space is large
    let noise_floor: f64 = (0..1usize << ne)
        .map(|i| {
            let p = weights[i] / z;
            (2.0 * p * (1.0 - p) / (std::f64::consts::PI * n)).sqrt()
        })
        .sum::<f64>()
        / 2.0;
    Ok(vec![
        ResultRow::check("fk_marginal_max_rel_err", worst_rho, 1e-12),
        ResultRow::check("ising_marginal_max_rel_err", worst_pi, 1e-12),
        ResultRow::check("chain_total_variation", tv, 0.01 + 2.0 * noise_floor),
    ])
}
