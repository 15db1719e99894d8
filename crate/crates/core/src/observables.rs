//! The FK-Ising fermionic observables (2-point and 2n-point), the Ising
//! observables via disorder lines, sequential matchings, the exploration
//! tree, Monte Carlo estimation and the FK/Ising equivalence check.

use std::sync::Arc;

use num_complex::Complex64;

use crate::config::LoopSet;
use crate::engines::{enumerate_reduce, run_chain, EnumOpts};
use crate::error::{FkError, Result};
use crate::lattice::{CornerId, LatticeDomain};
use crate::measures::{
    disorder_energy, ising_weight, route_defect_lines, DefectLine, ModelParams, SpinConfig,
};
use crate::winding::{phase_sign, PhaseSixteenth};

pub const SPIN_ENUM_CAP: usize = 26;

/// An ordered list of distinct insertion corners.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InsertionSet {
    corners: Vec<CornerId>,
}

impl InsertionSet {
    pub fn new(domain: &LatticeDomain, corners: Vec<CornerId>) -> Result<Self> {
        for &c in &corners {
            domain.corner(c)?;
        }
        let mut sorted = corners.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != corners.len() {
            return Err(FkError::DuplicateInsertions);
        }
        Ok(InsertionSet { corners })
    }

    pub fn corners(&self) -> &[CornerId] {
        &self.corners
    }

    pub fn len(&self) -> usize {
        self.corners.len()
    }

    pub fn is_empty(&self) -> bool {
        self.corners.is_empty()
    }

    /// No two corners share a primal or a dual vertex. Required by the
    /// mid-edge extension of the observable.
    pub fn well_separated(&self, domain: &LatticeDomain) -> bool {
        for (i, &a) in self.corners.iter().enumerate() {
            let ca = domain.corner(a).unwrap();
            for &b in &self.corners[i + 1..] {
                let cb = domain.corner(b).unwrap();
                if ca.u == cb.u || ca.w == cb.w {
                    return false;
                }
            }
        }
        true
    }
}

/// A perfect matching of insertion indices with its permutation sign.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matching {
    /// Pairs `(i, tau)` with `i < tau`, sorted by `i`.
    pub pairs: Vec<(usize, usize)>,
    pub sign: i8,
}

/// Sign of the pair partition: parity of the permutation
/// `(i_1, tau_1, i_2, tau_2, ...)` with pairs sorted by first element.
pub fn matching_sign(pairs: &[(usize, usize)]) -> i8 {
    let mut sorted: Vec<(usize, usize)> = pairs.to_vec();
    sorted.sort_unstable();
    let perm: Vec<usize> = sorted.iter().flat_map(|&(a, b)| [a, b]).collect();
    let mut inversions = 0usize;
    for i in 0..perm.len() {
        for j in i + 1..perm.len() {
            if perm[i] > perm[j] {
                inversions += 1;
            }
        }
    }
    if inversions % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Per-loop visit sequences of the insertion corners: for each loop carrying
/// insertions, the walk starts at the insertion with the lowest entry index
/// on that loop and lists `(entry index, loop position)` in visit order.
/// `None` when some loop carries an odd number of insertions.
fn visit_sequences(loops: &LoopSet, ins: &InsertionSet) -> Option<Vec<Vec<(usize, usize)>>> {
    let mut per_loop: Vec<Vec<(usize, usize)>> = Vec::new();
    let mut loop_index: Vec<(usize, usize)> = Vec::new(); // (loop, slot in per_loop)
    for (entry, &c) in ins.corners().iter().enumerate() {
        let (li, pos) = loops.position_of(c).expect("valid corner");
        match loop_index.iter().find(|&&(l, _)| l == li) {
            Some(&(_, slot)) => per_loop[slot].push((entry, pos)),
            None => {
                loop_index.push((li, per_loop.len()));
                per_loop.push(vec![(entry, pos)]);
            }
        }
    }
    for (visits, &(li, _)) in per_loop.iter_mut().zip(&loop_index) {
        if visits.len() % 2 == 1 {
            return None;
        }
        // lowest entry index comes first in `visits` by construction
        let start = visits[0].1;
        let len = loops.loops()[li].len();
        visits.sort_by_key(|&(_, pos)| (pos + len - start) % len);
    }
    Some(per_loop)
}

/// The deterministic sequential perfect matching of an admissible
/// configuration, or `None` when some loop holds an odd number of
/// insertion points.
pub fn sequential_matching(loops: &LoopSet, ins: &InsertionSet) -> Option<Matching> {
    let per_loop = visit_sequences(loops, ins)?;
    let mut pairs = Vec::with_capacity(ins.len() / 2);
    for visits in per_loop {
        for pair in visits.chunks(2) {
            let (a, b) = (pair[0].0, pair[1].0);
            pairs.push((a.min(b), a.max(b)));
        }
    }
    pairs.sort_unstable();
    let sign = matching_sign(&pairs);
    Some(Matching { pairs, sign })
}

/// Winding phase of the canonical arc between two loop positions.
fn arc_phase(loops: &LoopSet, li: usize, from_pos: usize, to_pos: usize) -> i8 {
    let cycle = &loops.loops()[li];
    let domain = loops.domain();
    let a1 = domain.corner(cycle[from_pos]).unwrap().orientation_eighth as i64;
    let a2 = domain.corner(cycle[to_pos]).unwrap().orientation_eighth as i64;
    phase_sign(a1, a2, loops.arc_turns(li, from_pos, to_pos))
}

/// Per-configuration contribution to the 2n-point observable:
/// `(-1)^{sigma} prod_k phi(gamma_k, z_{i_k}, z_{tau_k})`, which is 0 when
/// the configuration is not admissible and otherwise +-1.
pub fn config_contribution(loops: &LoopSet, ins: &InsertionSet) -> f64 {
    if ins.is_empty() {
        return 1.0;
    }
    if ins.len() % 2 == 1 {
        return 0.0;
    }
    match contribution_from_cuts(loops, ins, &visit_sequences(loops, ins)) {
        Some(v) => v,
        None => 0.0,
    }
}

/// Shared evaluator: given per-loop visit sequences (from any cut corner),
/// pair consecutive visits, weight each pair with the phase of the walked
/// arc, flip the sign for pairs met in descending entry order, and close
/// with the sign of the induced global pair partition.
fn contribution_from_cuts(
    loops: &LoopSet,
    ins: &InsertionSet,
    per_loop: &Option<Vec<Vec<(usize, usize)>>>,
) -> Option<f64> {
    let per_loop = per_loop.as_ref()?;
    let mut sign = 1i8;
    let mut pairs: Vec<(usize, usize)> = Vec::with_capacity(ins.len() / 2);
    for visits in per_loop {
        let li = loops.position_of(ins.corners()[visits[0].0]).unwrap().0;
        for pair in visits.chunks(2) {
            let ((e1, p1), (e2, p2)) = (pair[0], pair[1]);
            sign *= arc_phase(loops, li, p1, p2);
            if e1 > e2 {
                sign = -sign;
            }
            pairs.push((e1.min(e2), e1.max(e2)));
        }
    }
    pairs.sort_unstable();
    Some((sign * matching_sign(&pairs)) as f64)
}

/// How an observable value was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueMode {
    Exact,
    MonteCarlo,
}

impl ValueMode {
    pub fn name(self) -> &'static str {
        match self {
            ValueMode::Exact => "exact",
            ValueMode::MonteCarlo => "monte-carlo",
        }
    }
}

/// A complex observable value with provenance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservableValue {
    pub value: Complex64,
    pub mode: ValueMode,
    pub stderr: f64,
    pub n_samples: u64,
    /// Set when the value is zero by the odd-insertion parity rule.
    pub null_by_parity: bool,
}

impl ObservableValue {
    fn exact(value: Complex64, n_samples: u64) -> Self {
        ObservableValue {
            value,
            mode: ValueMode::Exact,
            stderr: 0.0,
            n_samples,
            null_by_parity: false,
        }
    }
}

/// Exact 2n-point fermionic observable by exhaustive enumeration.
///
/// An odd number of insertion points yields exactly zero, flagged by
/// `null_by_parity`.
pub fn fermion_exact(
    domain: &Arc<LatticeDomain>,
    params: &ModelParams,
    ins: &InsertionSet,
    opts: &EnumOpts,
) -> Result<ObservableValue> {
    if ins.len() % 2 == 1 {
        let mut v = ObservableValue::exact(Complex64::new(0.0, 0.0), 0);
        v.null_by_parity = true;
        return Ok(v);
    }
    let (z, sum) = enumerate_reduce(domain, params, opts, |_cfg, loops| {
        Complex64::new(config_contribution(loops, ins), 0.0)
    })?;
    Ok(ObservableValue::exact(sum / z, 1 << domain.edge_count()))
}

/// Smirnov's complexification `F(z1, z2) = sqrt(i / o(z2)) f(z1, z2)`.
pub fn smirnov_complexified(
    domain: &Arc<LatticeDomain>,
    params: &ModelParams,
    z1: CornerId,
    z2: CornerId,
    opts: &EnumOpts,
) -> Result<Complex64> {
    let ins = InsertionSet::new(domain, vec![z1, z2])?;
    let f = fermion_exact(domain, params, &ins, opts)?;
    let a2 = domain.corner(z2)?.orientation_eighth as i64;
    // sqrt(i / o(z2)) with the even-exponent branch
    let prefactor = PhaseSixteenth::new((2 - a2).rem_euclid(8));
    Ok(prefactor.to_complex() * f.value)
}

/// The constant complex prefactor of one real fermion pair,
/// `i sqrt(o(z2)/o(z1)) e^{-i W(lambda)/2}`; always +-1 by the choice of
/// initial tangent `o(z1)` for the corner defect line.
pub fn pair_prefactor(domain: &LatticeDomain, line: &DefectLine) -> Result<f64> {
    let (z1, z2) = line.corner_ends;
    let a1 = domain.corner(z1)?.orientation_eighth as i64;
    let a2 = domain.corner(z2)?.orientation_eighth as i64;
    // i = e^{i 4 pi/8}, sqrt(o2/o1) = e^{i (a2-a1) pi/8} with the signed
    // exponent, e^{-i W/2} = e^{-i n pi/8} for W = n pi/4.
    let k = 4 + (a2 - a1) - line.turning_eighths;
    let phase = PhaseSixteenth::new(k);
    let sign = phase
        .real_sign()
        .expect("pair prefactor is real for corner defect lines");
    Ok(sign as f64)
}

/// Exact Ising 2n-point fermionic observable by exhaustive spin enumeration,
/// with one corner defect line per consecutive insertion pair.
pub fn ising_fermion_exact(
    domain: &Arc<LatticeDomain>,
    params: &ModelParams,
    ins: &InsertionSet,
    lines: &[DefectLine],
) -> Result<ObservableValue> {
    if ins.len() % 2 == 1 {
        let mut v = ObservableValue::exact(Complex64::new(0.0, 0.0), 0);
        v.null_by_parity = true;
        return Ok(v);
    }
    if lines.len() != ins.len() / 2 {
        return Err(FkError::LineCountMismatch {
            lines: lines.len(),
            pairs: ins.len() / 2,
        });
    }
    for (j, line) in lines.iter().enumerate() {
        if line.corner_ends != (ins.corners()[2 * j], ins.corners()[2 * j + 1]) {
            return Err(FkError::LineCountMismatch {
                lines: lines.len(),
                pairs: ins.len() / 2,
            });
        }
        for other in &lines[j + 1..] {
            if line
                .dual_vertices
                .iter()
                .any(|f| other.dual_vertices.contains(f))
            {
                return Err(FkError::OverlappingLines);
            }
        }
    }
    let nv = domain.vertex_count();
    if nv > SPIN_ENUM_CAP {
        return Err(FkError::SpinCap {
            vertices: nv,
            cap: SPIN_ENUM_CAP,
        });
    }
    let prefactors: Vec<f64> = lines
        .iter()
        .map(|l| pair_prefactor(domain, l))
        .collect::<Result<_>>()?;
    let mut z = 0.0;
    let mut sum = 0.0;
    for sbits in 0..1u64 << nv {
        let spins = SpinConfig::from_bits(domain, sbits);
        let w = ising_weight(&spins, domain, params);
        z += w;
        let mut val = 1.0;
        for (line, pre) in lines.iter().zip(&prefactors) {
            let (u1, u2) = line.spin_ends(domain);
            let e_disorder = disorder_energy(&spins, domain, line) as f64;
            val *= pre
                * (-2.0 * params.beta * e_disorder).exp()
                * (spins.spins[u1] * spins.spins[u2]) as f64;
        }
        sum += w * val;
    }
    Ok(ObservableValue::exact(
        Complex64::new(sum / z, 0.0),
        1 << nv,
    ))
}

/// Result of comparing the FK and Ising observables on one insertion set.
#[derive(Debug, Clone)]
pub struct EquivalenceReport {
    pub f_fk: Complex64,
    pub f_ising: Complex64,
    pub abs_diff: f64,
    /// Max violation of `-2 E_lambda[sigma] + E[sigma] = |E| - 2 |lambda xor eta|`.
    pub bookkeeping_max_err: i64,
}

/// Compute both observables exactly with auto-routed defect lines and check
/// the low-temperature bookkeeping identity on all spin configurations
/// (or a deterministic sample when the spin space is large).
pub fn check_equivalence(
    domain: &Arc<LatticeDomain>,
    params: &ModelParams,
    ins: &InsertionSet,
    opts: &EnumOpts,
) -> Result<EquivalenceReport> {
    let pairs: Vec<(CornerId, CornerId)> = ins.corners().chunks(2).map(|p| (p[0], p[1])).collect();
    let lines = route_defect_lines(domain, &pairs)?;
    let f_fk = fermion_exact(domain, params, ins, opts)?.value;
    let f_ising = ising_fermion_exact(domain, params, ins, &lines)?.value;

    let mut bookkeeping_max_err = 0i64;
    let nv = domain.vertex_count();
    let samples: Vec<u64> = if nv <= 12 {
        (0..1u64 << nv).collect()
    } else {
        (0..4096u64)
            .map(|i| i.wrapping_mul(0x9e37_79b9_7f4a_7c15))
            .map(|x| x & ((1 << nv) - 1))
            .collect()
    };
    for sbits in samples {
        let spins = SpinConfig::from_bits(domain, sbits);
        for line in &lines {
            let lambda = &line.crossed_edges;
            // eta: edges where the spins disagree
            let mut sym_diff = 0i64;
            for (e, &(a, b, _)) in domain.edges().iter().enumerate() {
                let in_eta = spins.spins[a] != spins.spins[b];
                let in_lambda = lambda.contains(&e);
                if in_eta != in_lambda {
                    sym_diff += 1;
                }
            }
            let lhs = -2 * disorder_energy(&spins, domain, line) + spins.interaction_sum(domain);
            let rhs = domain.edge_count() as i64 - 2 * sym_diff;
            bookkeeping_max_err = bookkeeping_max_err.max((lhs - rhs).abs());
        }
    }

    Ok(EquivalenceReport {
        f_fk,
        f_ising,
        abs_diff: (f_fk - f_ising).norm(),
        bookkeeping_max_err,
    })
}

/// Monte Carlo estimate of the observable along the ES chain, with batch
/// means standard error.
pub fn fermion_mc(
    domain: &Arc<LatticeDomain>,
    params: &ModelParams,
    ins: &InsertionSet,
    n_sweeps: u64,
    seed: u64,
) -> Result<ObservableValue> {
    const BATCHES: u64 = 32;
    if ins.len() % 2 == 1 {
        let mut v = ObservableValue::exact(Complex64::new(0.0, 0.0), 0);
        v.null_by_parity = true;
        v.mode = ValueMode::MonteCarlo;
        return Ok(v);
    }
    let burn_in = n_sweeps / 10;
    let kept = n_sweeps.saturating_sub(burn_in);
    if kept < 100 * BATCHES {
        return Err(FkError::TooFewSweeps {
            min: 100 * BATCHES + burn_in,
            got: n_sweeps,
        });
    }
    let batch_len = kept / BATCHES;
    let used = batch_len * BATCHES;
    let mut batch_sums = vec![0.0f64; BATCHES as usize];
    let mut i = 0u64;
    run_chain(domain, params, burn_in + used, burn_in, seed, |cfg| {
        let x = config_contribution(&cfg.extract_loops(), ins);
        batch_sums[(i / batch_len) as usize] += x;
        i += 1;
    })?;
    let means: Vec<f64> = batch_sums.iter().map(|s| s / batch_len as f64).collect();
    let mean = means.iter().sum::<f64>() / BATCHES as f64;
    let var = means.iter().map(|m| (m - mean) * (m - mean)).sum::<f64>() / (BATCHES - 1) as f64;
    let stderr = (var / BATCHES as f64).sqrt();
    Ok(ObservableValue {
        value: Complex64::new(mean, 0.0),
        mode: ValueMode::MonteCarlo,
        stderr,
        n_samples: used,
        null_by_parity: false,
    })
}

/// Total winding functional of the deterministic exploration of all loops
/// from a boundary root corner.
///
/// Loops are walked in discovery order: the root's loop is cut open at the
/// root corner; every mid-edge passed spawns the not-yet-explored loop on
/// its other strand, cut at the corner that strand exits through. Branch
/// windings pair the insertion points in visit order per walk; the global
/// pair-partition sign closes the product. The value is independent of the
/// root (asserted by tests), and its expectation is the observable.
pub fn exploration_tree_winding(
    loops: &LoopSet,
    ins: &InsertionSet,
    root: CornerId,
) -> Result<f64> {
    let domain = loops.domain();
    if !domain.is_boundary_corner(root)? {
        return Err(FkError::RootNotBoundary(root));
    }
    if ins.is_empty() {
        return Ok(1.0);
    }
    if ins.len() % 2 == 1 {
        return Ok(0.0);
    }

    // Discovery order of loops with their cut corners.
    let n_loops = loops.len();
    let mut cut_of = vec![usize::MAX; n_loops];
    let (root_loop, _) = loops.position_of(root)?;
    let mut queue = std::collections::VecDeque::from([(root_loop, root)]);
    cut_of[root_loop] = root;
    while let Some((li, cut)) = queue.pop_front() {
        let cycle = &loops.loops()[li];
        let start = loops.position_of(cut)?.1;
        for i in 0..cycle.len() {
            let c = cycle[(start + i) % cycle.len()];
            // the other strand through the mid-edge this corner exits by
            let slot = domain.corner(c)?.out_slot;
            for role in domain.slot(slot).role.iter().flatten() {
                let (lj, _) = loops.position_of(*role)?;
                if cut_of[lj] == usize::MAX {
                    cut_of[lj] = *role;
                    queue.push_back((lj, *role));
                }
            }
        }
    }

    // Visit sequences relative to the discovery cuts.
    let mut per_loop: Vec<Vec<(usize, usize)>> = Vec::new();
    let mut loop_slot: Vec<(usize, usize)> = Vec::new();
    for (entry, &c) in ins.corners().iter().enumerate() {
        let (li, pos) = loops.position_of(c)?;
        match loop_slot.iter().find(|&&(l, _)| l == li) {
            Some(&(_, s)) => per_loop[s].push((entry, pos)),
            None => {
                loop_slot.push((li, per_loop.len()));
                per_loop.push(vec![(entry, pos)]);
            }
        }
    }
    for (visits, &(li, _)) in per_loop.iter_mut().zip(&loop_slot) {
        if visits.len() % 2 == 1 {
            return Ok(0.0);
        }
        let len = loops.loops()[li].len();
        let cut = loops.position_of(cut_of[li])?.1;
        visits.sort_by_key(|&(_, pos)| (pos + len - cut) % len);
    }
    Ok(contribution_from_cuts(loops, ins, &Some(per_loop)).unwrap_or(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::FkConfig;
    use crate::lattice::{build_domain, Quadrant};
    use crate::winding::winding_phase;

    fn domain(w: usize, h: usize) -> Arc<LatticeDomain> {
        Arc::new(build_domain(w, h).unwrap())
    }

    fn all_corner_sets(domain: &Arc<LatticeDomain>, n: usize) -> Vec<Vec<CornerId>> {
        // small helper: all sorted n-subsets of corners
        fn rec(
            start: usize,
            n: usize,
            total: usize,
            cur: &mut Vec<usize>,
            out: &mut Vec<Vec<usize>>,
        ) {
            if cur.len() == n {
                out.push(cur.clone());
                return;
            }
            for c in start..total {
                cur.push(c);
                rec(c + 1, n, total, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        rec(0, n, domain.corner_count(), &mut Vec::new(), &mut out);
        out
    }

    #[test]
    fn matching_signs() {
        assert_eq!(matching_sign(&[(0, 1), (2, 3)]), 1);
        assert_eq!(matching_sign(&[(0, 2), (1, 3)]), -1);
        assert_eq!(matching_sign(&[(0, 3), (1, 2)]), 1);
    }

    #[test]
    fn insertion_set_validation() {
        let d = domain(2, 2);
        assert!(InsertionSet::new(&d, vec![0, 0]).is_err());
        assert!(InsertionSet::new(&d, vec![0, 999]).is_err());
        let ins = InsertionSet::new(&d, vec![0, 1]).unwrap();
        // corners 0 and 1 share their primal vertex
        assert!(!ins.well_separated(&d));
    }

    #[test]
    fn sequential_matching_two_points() {
        let d = domain(2, 2);
        let open = FkConfig::new(Arc::clone(&d), 0xf).unwrap().extract_loops();
        let ne00 = d.corner_by_spec(0, 0, Quadrant::NE).unwrap();
        let nw10 = d.corner_by_spec(1, 0, Quadrant::NW).unwrap();
        let ins = InsertionSet::new(&d, vec![ne00, nw10]).unwrap();
        let m = sequential_matching(&open, &ins).unwrap();
        assert_eq!(m.pairs, vec![(0, 1)]);
        assert_eq!(m.sign, 1);
        // an insertion pair split across two loops is not admissible
        let closed = FkConfig::new(Arc::clone(&d), 0).unwrap().extract_loops();
        assert!(sequential_matching(&closed, &ins).is_none());
    }

    #[test]
    fn sequential_matching_two_loops() {
        // two insertions on each of two loops: the matching pairs within
        // loops and its sign follows the entry order
        let d = domain(2, 2);
        let closed = FkConfig::new(Arc::clone(&d), 0).unwrap().extract_loops();
        let ne0 = d.corner_by_spec(0, 0, Quadrant::NE).unwrap();
        let nw0 = d.corner_by_spec(0, 0, Quadrant::NW).unwrap();
        let sw2 = d.corner_by_spec(0, 1, Quadrant::SW).unwrap();
        let se2 = d.corner_by_spec(0, 1, Quadrant::SE).unwrap();
        // entries 0, 2 on the vertex-(0,0) loop; entries 1, 3 on vertex (0,1)
        let ins = InsertionSet::new(&d, vec![ne0, sw2, nw0, se2]).unwrap();
        let m = sequential_matching(&closed, &ins).unwrap();
        assert_eq!(m.pairs, vec![(0, 2), (1, 3)]);
        assert_eq!(m.sign, -1);
    }

    #[test]
    fn mc_small_support_limit() {
        // at p = 0 the chain absorbs at all-closed and the estimator matches
        // the exact observable supported on that single configuration
        let d = domain(2, 2);
        let params = ModelParams::from_p(0.0).unwrap();
        let ne0 = d.corner_by_spec(0, 0, Quadrant::NE).unwrap();
        let nw0 = d.corner_by_spec(0, 0, Quadrant::NW).unwrap();
        let ins = InsertionSet::new(&d, vec![ne0, nw0]).unwrap();
        let exact = fermion_exact(&d, &params, &ins, &EnumOpts::default())
            .unwrap()
            .value
            .re;
        let mc = fermion_mc(&d, &params, &ins, 10_000, 3).unwrap();
        assert_eq!(mc.value.re, exact);
        assert_eq!(mc.stderr, 0.0);
    }

    #[test]
    fn mc_two_seeds_agree() {
        let d = domain(2, 2);
        let params = ModelParams::critical();
        let ins = InsertionSet::new(
            &d,
            vec![
                d.corner_by_spec(0, 0, Quadrant::NE).unwrap(),
                d.corner_by_spec(1, 1, Quadrant::SW).unwrap(),
            ],
        )
        .unwrap();
        let a = fermion_mc(&d, &params, &ins, 40_000, 1).unwrap();
        let b = fermion_mc(&d, &params, &ins, 40_000, 2).unwrap();
        assert!((a.value.re - b.value.re).abs() < 4.0 * (a.stderr + b.stderr));
    }

    #[test]
    fn matched_pairs_are_co_looped_exhaustive_2x2() {
        let d = domain(2, 2);
        let corners: Vec<CornerId> = vec![0, 5, 10, 15];
        let ins = InsertionSet::new(&d, corners).unwrap();
        for bits in 0..16u64 {
            let loops = FkConfig::new(Arc::clone(&d), bits).unwrap().extract_loops();
            if let Some(m) = sequential_matching(&loops, &ins) {
                for &(i, t) in &m.pairs {
                    assert!(loops
                        .corners_connected(ins.corners()[i], ins.corners()[t])
                        .unwrap());
                }
            }
        }
    }

    #[test]
    fn two_point_contribution_is_arc_phase() {
        let d = domain(2, 2);
        let open = FkConfig::new(Arc::clone(&d), 0xf).unwrap().extract_loops();
        let ne00 = d.corner_by_spec(0, 0, Quadrant::NE).unwrap();
        let sw11 = d.corner_by_spec(1, 1, Quadrant::SW).unwrap();
        let ins = InsertionSet::new(&d, vec![ne00, sw11]).unwrap();
        let x = config_contribution(&open, &ins);
        assert_eq!(x, winding_phase(&open, ne00, sw11).unwrap() as f64);
        let rev = InsertionSet::new(&d, vec![sw11, ne00]).unwrap();
        assert_eq!(config_contribution(&open, &rev), -x);
    }

    /// Pairing independence: for four insertions on one loop the unsigned
    /// product of the canonical-arc phases is the same for all three pair
    /// matchings, and the sequential matching reproduces the configuration
    /// contribution with its sign.
    #[test]
    fn adding_winding_pairing_independence() {
        let d = domain(3, 3);
        let corners = [
            d.corner_by_spec(0, 0, Quadrant::NE).unwrap(),
            d.corner_by_spec(2, 0, Quadrant::NW).unwrap(),
            d.corner_by_spec(2, 2, Quadrant::SW).unwrap(),
            d.corner_by_spec(0, 2, Quadrant::SE).unwrap(),
        ];
        let ins = InsertionSet::new(&d, corners.to_vec()).unwrap();
        let mut checked = 0;
        for bits in 0..1u64 << d.edge_count() {
            let loops = FkConfig::new(Arc::clone(&d), bits).unwrap().extract_loops();
            let (l0, _) = loops.position_of(corners[0]).unwrap();
            if !corners[1..]
                .iter()
                .all(|&c| loops.position_of(c).unwrap().0 == l0)
            {
                continue;
            }
            checked += 1;
            let base = config_contribution(&loops, &ins);
            // cyclic positions of the four corners along the loop
            let len = loops.loops()[l0].len();
            let pos: Vec<usize> = corners
                .iter()
                .map(|&c| loops.position_of(c).unwrap().1)
                .collect();
            let crossings = |pairing: &[(usize, usize)]| -> u32 {
                // chords cross iff exactly one endpoint of one pair lies on
                // the arc between the endpoints of the other
                let (x, y) = pairing[0];
                let (u, v) = pairing[1];
                let between = |a: usize, b: usize, c: usize| -> bool {
                    (pos[c] + len - pos[a]) % len < (pos[b] + len - pos[a]) % len
                };
                u32::from(between(x, y, u) != between(x, y, v))
            };
            // each pair matching, weighted by its sign and by the parity of
            // its chord crossings in loop order, reproduces the contribution
            for pairing in [
                [(0usize, 1usize), (2, 3)],
                [(0, 2), (1, 3)],
                [(0, 3), (1, 2)],
            ] {
                let mut v = matching_sign(&pairing) as f64;
                for &(i, t) in &pairing {
                    v *= winding_phase(&loops, corners[i], corners[t]).unwrap() as f64;
                }
                if crossings(&pairing) % 2 == 1 {
                    v = -v;
                }
                assert_eq!(v, base, "bits={bits:#x} pairing={pairing:?}");
            }
            // the sequential matching carries the contribution with its sign
            let m = sequential_matching(&loops, &ins).unwrap();
            let mut v = m.sign as f64;
            for &(i, t) in &m.pairs {
                v *= winding_phase(&loops, corners[i], corners[t]).unwrap() as f64;
            }
            if crossings(&m.pairs) % 2 == 1 {
                v = -v;
            }
            assert_eq!(v, base, "bits={bits:#x}");
        }
        assert!(checked > 0);
    }

    /// Full antisymmetry of the exact observable under all 24 permutations
    /// of a 4-corner set.
    #[test]
    fn fermion_antisymmetry_small() {
        let d = domain(2, 2);
        let params = ModelParams::critical();
        let corners = vec![
            d.corner_by_spec(0, 0, Quadrant::NE).unwrap(),
            d.corner_by_spec(1, 0, Quadrant::NW).unwrap(),
            d.corner_by_spec(1, 1, Quadrant::SW).unwrap(),
            d.corner_by_spec(0, 1, Quadrant::SE).unwrap(),
        ];
        let ins = InsertionSet::new(&d, corners.clone()).unwrap();
        let base = fermion_exact(&d, &params, &ins, &EnumOpts::default())
            .unwrap()
            .value;
        assert!(base.norm() > 1e-6, "base value should not vanish");
        let mut perm = [0usize, 1, 2, 3];
        let mut count = 0;
        permutohedron_heap(&mut perm, &mut |p: &[usize; 4], sign: i8| {
            let corners_p: Vec<CornerId> = p.iter().map(|&i| corners[i]).collect();
            let ins_p = InsertionSet::new(&d, corners_p).unwrap();
            let v = fermion_exact(&d, &params, &ins_p, &EnumOpts::default())
                .unwrap()
                .value;
            assert!((v - base * sign as f64).norm() < 1e-12);
            count += 1;
        });
        assert_eq!(count, 24);
    }

    /// Heap's algorithm with parity tracking.
    pub(crate) fn permutohedron_heap<const N: usize>(
        items: &mut [usize; N],
        visit: &mut impl FnMut(&[usize; N], i8),
    ) {
        fn rec<const N: usize>(
            k: usize,
            items: &mut [usize; N],
            sign: &mut i8,
            visit: &mut impl FnMut(&[usize; N], i8),
        ) {
            if k == 1 {
                visit(items, *sign);
                return;
            }
            for i in 0..k {
                rec(k - 1, items, sign, visit);
                if i < k - 1 {
                    if k % 2 == 0 {
                        items.swap(i, k - 1);
                    } else {
                        items.swap(0, k - 1);
                    }
                    *sign = -*sign;
                }
            }
        }
        let mut sign = 1i8;
        rec(N, items, &mut sign, visit);
    }

    #[test]
    fn odd_insertions_are_null() {
        let d = domain(2, 2);
        let params = ModelParams::critical();
        let ins = InsertionSet::new(&d, vec![0, 5, 10]).unwrap();
        let v = fermion_exact(&d, &params, &ins, &EnumOpts::default()).unwrap();
        assert!(v.null_by_parity);
        assert_eq!(v.value, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn smirnov_prefactor_is_unit() {
        let d = domain(2, 2);
        let params = ModelParams::critical();
        let z1 = d.corner_by_spec(0, 0, Quadrant::NE).unwrap();
        let z2 = d.corner_by_spec(1, 1, Quadrant::SW).unwrap();
        let ins = InsertionSet::new(&d, vec![z1, z2]).unwrap();
        let f = fermion_exact(&d, &params, &ins, &EnumOpts::default())
            .unwrap()
            .value;
        let cf = smirnov_complexified(&d, &params, z1, z2, &EnumOpts::default()).unwrap();
        assert!((cf.norm() - f.norm()).abs() < 1e-14);
    }

    /// FK and Ising two-point observables coincide on the 2x2 box for a
    /// sample of corner pairs and temperatures.
    #[test]
    fn two_point_equivalence_samples() {
        let d = domain(2, 2);
        for beta in [0.3, ModelParams::critical().beta, 0.7] {
            let params = ModelParams::from_beta(beta).unwrap();
            for (c1, c2) in [(0usize, 10usize), (1, 6), (3, 13), (2, 9)] {
                let ins = InsertionSet::new(&d, vec![c1, c2]).unwrap();
                let rep = check_equivalence(&d, &params, &ins, &EnumOpts::default()).unwrap();
                assert!(
                    rep.abs_diff < 1e-12,
                    "beta={beta} corners=({c1},{c2}) fk={} ising={}",
                    rep.f_fk,
                    rep.f_ising
                );
                assert_eq!(rep.bookkeeping_max_err, 0);
            }
        }
    }

    /// Defect-line independence: an alternative routing gives the same
    /// Ising observable.
    #[test]
    fn defect_line_routing_independence() {
        let d = domain(3, 3);
        let params = ModelParams::critical();
        let z1 = d.corner_by_spec(0, 0, Quadrant::NE).unwrap();
        let z2 = d.corner_by_spec(2, 2, Quadrant::SW).unwrap();
        let ins = InsertionSet::new(&d, vec![z1, z2]).unwrap();
        let w1 = d.corner(z1).unwrap().w;
        let w2 = d.corner(z2).unwrap().w;
        let (i1, j1) = d.face_ij(w1);
        let (i2, j2) = d.face_ij(w2);
        // horizontal-then-vertical vs vertical-then-horizontal
        let mut path_a = vec![w1];
        let (mut i, mut j) = (i1, j1);
        while i != i2 {
            i += (i2 - i).signum();
            path_a.push(d.face_at(i, j).unwrap());
        }
        while j != j2 {
            j += (j2 - j).signum();
            path_a.push(d.face_at(i, j).unwrap());
        }
        let mut path_b = vec![w1];
        let (mut i, mut j) = (i1, j1);
        while j != j2 {
            j += (j2 - j).signum();
            path_b.push(d.face_at(i, j).unwrap());
        }
        while i != i2 {
            i += (i2 - i).signum();
            path_b.push(d.face_at(i, j).unwrap());
        }
        let la = DefectLine::from_dual_path(&d, z1, z2, path_a).unwrap();
        let lb = DefectLine::from_dual_path(&d, z1, z2, path_b).unwrap();
        let va = ising_fermion_exact(&d, &params, &ins, std::slice::from_ref(&la))
            .unwrap()
            .value;
        let vb = ising_fermion_exact(&d, &params, &ins, std::slice::from_ref(&lb))
            .unwrap()
            .value;
        assert!((va - vb).norm() < 1e-12, "{va} vs {vb}");
    }

    /// Four-point FK and Ising observables coincide on the 3x3 box at the
    /// critical temperature.
    #[test]
    fn four_point_equivalence_3x3() {
        let d = domain(3, 3);
        let params = ModelParams::critical();
        let ins = InsertionSet::new(
            &d,
            vec![
                d.parse_corner("0,0,NE").unwrap(),
                d.parse_corner("2,0,NW").unwrap(),
                d.parse_corner("2,2,SW").unwrap(),
                d.parse_corner("0,2,SE").unwrap(),
            ],
        )
        .unwrap();
        let rep = check_equivalence(&d, &params, &ins, &EnumOpts::default()).unwrap();
        assert!(rep.f_fk.norm() > 1e-6, "observable should not vanish");
        assert!(
            rep.abs_diff < 1e-10,
            "fk={} ising={}",
            rep.f_fk,
            rep.f_ising
        );
        assert_eq!(rep.bookkeeping_max_err, 0);
    }

    /// Winding phases of defect lines sharing corner-ends agree up to a
    /// fermionic sign (the rotation number of their symmetric difference is
    /// what flips it), and the Ising pair expectation is fully independent
    /// of the routing, crossing routings included.
    #[test]
    fn symmetric_difference_winding_sign() {
        let d = domain(4, 4);
        let params = ModelParams::critical();
        let z1 = d.parse_corner("0,0,NE").unwrap();
        let z2 = d.parse_corner("2,1,NE").unwrap();
        let ins = InsertionSet::new(&d, vec![z1, z2]).unwrap();
        let path = |steps: &[(i64, i64)]| -> Vec<usize> {
            steps
                .iter()
                .map(|&(i, j)| d.face_at(i, j).unwrap())
                .collect()
        };
        let routings = [
            // two L-routings: symmetric difference is a simple loop
            path(&[(0, 0), (1, 0), (2, 0), (2, 1)]),
            path(&[(0, 0), (0, 1), (1, 1), (2, 1)]),
            // crosses the second routing transversally at face (1,1)
            path(&[(0, 0), (1, 0), (1, 1), (1, 2), (2, 2), (2, 1)]),
        ];
        let lines: Vec<DefectLine> = routings
            .iter()
            .map(|p| DefectLine::from_dual_path(&d, z1, z2, p.clone()).unwrap())
            .collect();
        // phases e^{-iW/2} agree up to sign across all routings
        for l in &lines[1..] {
            let delta = (lines[0].turning_eighths - l.turning_eighths).rem_euclid(16);
            assert!(delta == 0 || delta == 8, "delta={delta}");
        }
        // the observable itself is routing-independent
        let base = ising_fermion_exact(&d, &params, &ins, std::slice::from_ref(&lines[0]))
            .unwrap()
            .value;
        for l in &lines[1..] {
            let v = ising_fermion_exact(&d, &params, &ins, std::slice::from_ref(l))
                .unwrap()
                .value;
            assert!((v - base).norm() < 1e-12, "{v} vs {base}");
        }
        assert!(base.norm() > 1e-9);
    }

    /// Anticommutation of the real fermion pair for each fixed sigma:
    /// reversing the corner-ends flips the pair value.
    #[test]
    fn pair_anticommutation() {
        let d = domain(3, 3);
        for (s1, s2) in [
            ("0,0,NE", "2,2,SW"),
            ("1,0,NW", "0,2,SE"),
            ("2,1,NE", "0,0,SE"),
        ] {
            let z1 = d.parse_corner(s1).unwrap();
            let z2 = d.parse_corner(s2).unwrap();
            let fwd = crate::measures::route_defect_line(&d, z1, z2).unwrap();
            // the reversed pair uses the reversed path
            let mut rev_path = fwd.dual_vertices.clone();
            rev_path.reverse();
            let rev = DefectLine::from_dual_path(&d, z2, z1, rev_path).unwrap();
            let pf = pair_prefactor(&d, &fwd).unwrap();
            let pr = pair_prefactor(&d, &rev).unwrap();
            // e^{-2 beta E} sigma sigma is symmetric, so the prefactors carry
            // the whole anticommutation
            assert_eq!(pf, -pr, "{s1} {s2}");
        }
    }

    /// E[W(T)] over all configurations equals the exact observable, and
    /// W(T) is invariant under the choice of boundary root.
    #[test]
    fn exploration_tree_identity_2x2() {
        let d = domain(2, 2);
        let params = ModelParams::critical();
        let boundary: Vec<CornerId> = (0..d.corner_count())
            .filter(|&c| d.is_boundary_corner(c).unwrap())
            .collect();
        assert_eq!(boundary.len(), 12);
        for corners in [
            vec![
                d.corner_by_spec(0, 0, Quadrant::NE).unwrap(),
                d.corner_by_spec(1, 1, Quadrant::SW).unwrap(),
            ],
            vec![0, 5, 10, 15],
        ] {
            let ins = InsertionSet::new(&d, corners).unwrap();
            let exact = fermion_exact(&d, &params, &ins, &EnumOpts::default())
                .unwrap()
                .value;
            let mut z = 0.0;
            let mut sum = 0.0;
            for bits in 0..16u64 {
                let cfg = FkConfig::new(Arc::clone(&d), bits).unwrap();
                let loops = cfg.extract_loops();
                let w = crate::measures::fk_weight(&cfg, &params);
                let w_tree = exploration_tree_winding(&loops, &ins, boundary[0]).unwrap();
                // root invariance
                for &root in &boundary[1..] {
                    assert_eq!(
                        exploration_tree_winding(&loops, &ins, root).unwrap(),
                        w_tree,
                        "bits={bits:#x} root={root}"
                    );
                }
                assert_eq!(w_tree, config_contribution(&loops, &ins), "bits={bits:#x}");
                z += w;
                sum += w * w_tree;
            }
            assert!((sum / z - exact.re).abs() < 1e-12);
            assert!(exact.im.abs() < 1e-15);
        }
    }

    #[test]
    fn exploration_tree_empty_insertions() {
        let d = domain(2, 2);
        let loops = FkConfig::new(Arc::clone(&d), 0).unwrap().extract_loops();
        let ins = InsertionSet::new(&d, vec![]).unwrap();
        let root = (0..d.corner_count())
            .find(|&c| d.is_boundary_corner(c).unwrap())
            .unwrap();
        assert_eq!(exploration_tree_winding(&loops, &ins, root).unwrap(), 1.0);
        // interior corner rejected as root
        let interior = (0..d.corner_count())
            .find(|&c| !d.is_boundary_corner(c).unwrap())
            .unwrap();
        assert!(exploration_tree_winding(&loops, &ins, interior).is_err());
    }

    #[test]
    fn mc_matches_exact_two_point() {
        let d = domain(2, 2);
        let params = ModelParams::critical();
        let ins = InsertionSet::new(
            &d,
            vec![
                d.corner_by_spec(0, 0, Quadrant::NE).unwrap(),
                d.corner_by_spec(1, 1, Quadrant::SW).unwrap(),
            ],
        )
        .unwrap();
        let exact = fermion_exact(&d, &params, &ins, &EnumOpts::default())
            .unwrap()
            .value
            .re;
        let mc = fermion_mc(&d, &params, &ins, 40_000, 7).unwrap();
        assert!(
            (mc.value.re - exact).abs() < 4.0 * mc.stderr.max(1e-3),
            "mc={} exact={exact} stderr={}",
            mc.value.re,
            mc.stderr
        );
        // seeded determinism
        let mc2 = fermion_mc(&d, &params, &ins, 40_000, 7).unwrap();
        assert_eq!(mc.value, mc2.value);
        assert_eq!(mc.stderr, mc2.stderr);
        assert!(fermion_mc(&d, &params, &ins, 100, 7).is_err());
    }

    #[test]
    fn all_two_point_values_share_loop_parity() {
        // sanity sweep: on 2x2 at p_c every co-looped pair produces a real
        // value in [-1, 1]
        let d = domain(2, 2);
        let params = ModelParams::critical();
        for set in all_corner_sets(&d, 2).into_iter().take(40) {
            let ins = InsertionSet::new(&d, set).unwrap();
            let v = fermion_exact(&d, &params, &ins, &EnumOpts::default())
                .unwrap()
                .value;
            assert!(v.im.abs() < 1e-15);
            assert!(v.re.abs() <= 1.0 + 1e-12);
        }
    }
}
