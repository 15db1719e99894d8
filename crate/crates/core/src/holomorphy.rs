//! Mid-edge extension of the observable, s-holomorphicity verification at
//! criticality, discrete residues at insertion diagonals, and the Pfaffian
//! structure of the 2n-point observable.
//!
//! Corner values are carried as complex numbers `h(c) = sqrt(-i/o(c)) f(c)`
//! with the square root taken as the exact sixteenth phase of exponent
//! `-(2 + a)`. In this gauge the two point-symmetric corner pairs of every
//! mid-edge agree at criticality,
//! `h(NW) + h(SE) = h(NE) + h(SW)`, which defines the mid-edge field and
//! makes all the projection identities exact integer-phase statements.

use std::sync::Arc;

use num_complex::Complex64;

use crate::engines::{enumerate_reduce_vec, EnumOpts};
use crate::error::{FkError, Result};
use crate::lattice::{CornerId, EdgeId, LatticeDomain, MidEdge};
use crate::measures::ModelParams;
use crate::observables::{config_contribution, fermion_exact, InsertionSet};
use crate::winding::PhaseSixteenth;

/// Projection direction of a corner: `sqrt(-i / o(c))` as an exact phase.
pub fn corner_direction(orientation_eighth: u8) -> PhaseSixteenth {
    PhaseSixteenth::new(-(2 + orientation_eighth as i64))
}

/// The observable `f(z_1, ..., z_{2n-1}, .)` extended from corners to
/// mid-edges at criticality.
#[derive(Debug, Clone)]
pub struct MidEdgeField {
    domain: Arc<LatticeDomain>,
    params: ModelParams,
    insertions: InsertionSet,
    /// `h(c)` for every corner not among the fixed insertions.
    corner_h: Vec<Option<Complex64>>,
    /// `H(z)`: mean of the two pairing sums, per real mid-edge; `None` at
    /// mid-edges adjacent to an insertion.
    midedge_h: Vec<Option<Complex64>>,
    /// `|(h_NW + h_SE) - (h_NE + h_SW)|` per eligible mid-edge.
    pairing_gap: Vec<Option<f64>>,
}

impl MidEdgeField {
    pub fn domain(&self) -> &Arc<LatticeDomain> {
        &self.domain
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn insertions(&self) -> &InsertionSet {
        &self.insertions
    }

    /// Real observable value `f(..., c)`, when defined.
    pub fn corner_value(&self, c: CornerId) -> Option<f64> {
        let h = self.corner_h.get(c).copied().flatten()?;
        let dir = corner_direction(self.domain.corner(c).ok()?.orientation_eighth);
        Some((h * dir.to_complex().conj()).re)
    }

    /// Rotated corner value `h(c) = sqrt(-i/o(c)) f(..., c)`.
    pub fn corner_h(&self, c: CornerId) -> Option<Complex64> {
        self.corner_h.get(c).copied().flatten()
    }

    /// Mid-edge value `H(z)`.
    pub fn midedge_value(&self, e: EdgeId) -> Option<Complex64> {
        self.midedge_h.get(e).copied().flatten()
    }

    /// Disagreement of the two corner pairings at a mid-edge.
    pub fn pairing_gap(&self, e: EdgeId) -> Option<f64> {
        self.pairing_gap.get(e).copied().flatten()
    }

    pub fn pairing_max_gap(&self) -> f64 {
        self.pairing_gap
            .iter()
            .flatten()
            .fold(0.0f64, |a, &b| a.max(b))
    }

    fn eligible_midedge(&self, m: &MidEdge) -> bool {
        !m.corners()
            .iter()
            .any(|c| self.insertions.corners().contains(c))
    }
}

fn validate_field_insertions(domain: &LatticeDomain, ins: &InsertionSet) -> Result<()> {
    if ins.len() % 2 == 0 {
        // the moving corner must complete an even set
        return Err(FkError::DuplicateInsertions);
    }
    if !ins.well_separated(domain) {
        return Err(FkError::InsertionsTooClose);
    }
    Ok(())
}

/// Build the mid-edge field at criticality. The two pairings agree at every
/// eligible mid-edge; their maximal gap is exposed for the test-suites.
pub fn build_midedge_field(
    domain: &Arc<LatticeDomain>,
    params: &ModelParams,
    ins: &InsertionSet,
    opts: &EnumOpts,
) -> Result<MidEdgeField> {
    if !params.is_critical() {
        return Err(FkError::NotCritical(params.t));
    }
    build_midedge_field_unchecked(domain, params, ins, opts)
}

/// Same construction without the criticality guard, for negative controls:
/// off criticality the pairing gap is strictly positive.
pub fn build_midedge_field_unchecked(
    domain: &Arc<LatticeDomain>,
    params: &ModelParams,
    ins: &InsertionSet,
    opts: &EnumOpts,
) -> Result<MidEdgeField> {
    validate_field_insertions(domain, ins)?;
    let n = domain.corner_count();
    let fixed = ins.corners();
    let (z, sums) = enumerate_reduce_vec(domain, params, opts, n, |_cfg, loops, out| {
        for c in 0..n {
            if fixed.contains(&c) {
                continue;
            }
            let mut corners = fixed.to_vec();
            corners.push(c);
            let full = InsertionSet::new(domain, corners).expect("distinct corners");
            out[c] = Complex64::new(config_contribution(loops, &full), 0.0);
        }
    })?;
    let corner_h: Vec<Option<Complex64>> = (0..n)
        .map(|c| {
            if fixed.contains(&c) {
                None
            } else {
                let dir = corner_direction(domain.corner(c).unwrap().orientation_eighth);
                Some(dir.to_complex() * (sums[c] / z))
            }
        })
        .collect();

    let mut midedge_h = vec![None; domain.edge_count()];
    let mut pairing_gap = vec![None; domain.edge_count()];
    for m in domain.mid_edges() {
        if m.corners().iter().any(|c| fixed.contains(c)) {
            continue;
        }
        let v = |c: CornerId| corner_h[c].unwrap();
        let diag = v(m.corner_nw) + v(m.corner_se);
        let anti = v(m.corner_ne) + v(m.corner_sw);
        midedge_h[m.id] = Some((diag + anti) * 0.5);
        pairing_gap[m.id] = Some((diag - anti).norm());
    }

    Ok(MidEdgeField {
        domain: Arc::clone(domain),
        params: *params,
        insertions: ins.clone(),
        corner_h,
        midedge_h,
        pairing_gap,
    })
}

/// s-holomorphicity residual at a corner: the difference of the projections
/// of the mid-edge field on the corner's line, across its two mid-edges.
pub fn sholo_residual(field: &MidEdgeField, c: CornerId) -> Result<f64> {
    let domain = field.domain();
    let corner = domain.corner(c)?;
    if field.insertions.corners().contains(&c) {
        return Err(FkError::AdjacentToInsertion(c));
    }
    let Some((e1, e2)) = domain.corner_mid_edges(c)? else {
        return Err(FkError::BoundaryCorner(c));
    };
    let (h1, h2) = match (field.midedge_value(e1), field.midedge_value(e2)) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(FkError::AdjacentToInsertion(c)),
    };
    let dir = corner_direction(corner.orientation_eighth).to_complex();
    let p1 = (h1 * dir.conj()).re;
    let p2 = (h2 * dir.conj()).re;
    Ok((p1 - p2).abs())
}

/// Discrete contour integral of the field around a mid-edge: the corner
/// values integrated counterclockwise with central steps. Zero at
/// criticality away from the insertions.
pub fn cauchy_sum(field: &MidEdgeField, e: EdgeId) -> Result<Complex64> {
    let domain = field.domain();
    let m = domain.mid_edge(e)?;
    if !field.eligible_midedge(m) {
        return Err(FkError::AdjacentToInsertion(e));
    }
    // counterclockwise around z
    let cyc = [m.corner_nw, m.corner_sw, m.corner_se, m.corner_ne];
    let pos = |c: CornerId| {
        let p = domain.corner(c).unwrap().pos;
        Complex64::new(p.0 as f64 / 4.0, p.1 as f64 / 4.0)
    };
    let mut sum = Complex64::new(0.0, 0.0);
    for j in 0..4 {
        let prev = pos(cyc[(j + 3) % 4]);
        let next = pos(cyc[(j + 1) % 4]);
        sum += field.corner_h(cyc[j]).unwrap() * (next - prev) * 0.5;
    }
    Ok(sum)
}

/// The two diagonal extensions `f^+`, `f^-` of the field at insertion `j`,
/// one per adjacent mid-edge (in-slot first, out-slot second), each via
/// `h(z_j) := h(l) + h(r) - h(o)` with `o` the corner point-symmetric to
/// `z_j` through the mid-edge. Values are reported in the real gauge,
/// `f = h / sqrt(-i/o(z_j))`.
pub fn f_plus_minus(field: &MidEdgeField, j: usize) -> Result<(Complex64, Complex64)> {
    let domain = field.domain();
    let &c = field
        .insertions
        .corners()
        .get(j)
        .ok_or(FkError::InvalidCorner(j))?;
    let corner = domain.corner(c)?;
    let Some((e_in, e_out)) = domain.corner_mid_edges(c)? else {
        return Err(FkError::BoundaryCorner(c));
    };
    let dir = corner_direction(corner.orientation_eighth).to_complex();
    let extend = |e: EdgeId| -> Result<Complex64> {
        let m = domain.mid_edge(e)?;
        let roles = [m.corner_nw, m.corner_ne, m.corner_se, m.corner_sw];
        let ri = roles
            .iter()
            .position(|&x| x == c)
            .expect("corner adjacent to its mid-edge");
        let opposite = roles[(ri + 2) % 4];
        let side_a = roles[(ri + 1) % 4];
        let side_b = roles[(ri + 3) % 4];
        for other in [opposite, side_a, side_b] {
            if field.corner_h(other).is_none() {
                return Err(FkError::AdjacentToInsertion(other));
            }
        }
        let h = field.corner_h(side_a).unwrap() + field.corner_h(side_b).unwrap()
            - field.corner_h(opposite).unwrap();
        Ok(h * dir.conj())
    };
    Ok((extend(e_in)?, extend(e_out)?))
}

/// The two diagonal values `f^{+-}(z, z)` of the two-point observable.
pub fn two_point_diagonal(
    domain: &Arc<LatticeDomain>,
    params: &ModelParams,
    c: CornerId,
    opts: &EnumOpts,
) -> Result<(Complex64, Complex64)> {
    let ins = InsertionSet::new(domain, vec![c])?;
    let field = build_midedge_field(domain, params, &ins, opts)?;
    f_plus_minus(&field, 0)
}

/// A real antisymmetric matrix of even order.
#[derive(Debug, Clone)]
pub struct SkewMatrix {
    order: usize,
    entries: Vec<f64>,
}

impl SkewMatrix {
    pub fn new(order: usize, entries: Vec<f64>) -> Result<Self> {
        if order % 2 != 0 {
            return Err(FkError::OddOrder(order));
        }
        assert_eq!(entries.len(), order * order);
        let mut worst = 0.0f64;
        for i in 0..order {
            for j in 0..order {
                worst = worst.max((entries[i * order + j] + entries[j * order + i]).abs());
            }
        }
        if worst > 1e-14 {
            return Err(FkError::NotAntisymmetric(worst));
        }
        Ok(SkewMatrix { order, entries })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.order + j]
    }
}

/// Pfaffian by recursive expansion along the last column:
/// `pf(A) = sum_j (-1)^{j+1} A[j][2n] pf(A without rows/cols j, 2n)`.
pub fn pfaffian(matrix: &SkewMatrix) -> f64 {
    fn rec(m: &SkewMatrix, active: &[usize]) -> f64 {
        let n = active.len();
        if n == 0 {
            return 1.0;
        }
        let last = active[n - 1];
        let mut total = 0.0;
        for (j, &row) in active[..n - 1].iter().enumerate() {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            let rest: Vec<usize> = active[..n - 1]
                .iter()
                .copied()
                .filter(|&r| r != row)
                .collect();
            total += sign * m.get(row, last) * rec(m, &rest);
        }
        total
    }
    let active: Vec<usize> = (0..matrix.order).collect();
    rec(matrix, &active)
}

/// Comparison of the 2n-point observable with the Pfaffian of its two-point
/// matrix.
#[derive(Debug, Clone)]
pub struct PfaffianReport {
    pub lhs: f64,
    pub rhs: f64,
    pub diff: f64,
    pub two_point: SkewMatrix,
}

/// Evaluate `f(z_1, ..., z_{2n})` against `pf(F)` with
/// `F[j][k] = f(z_j, z_k)`, all by exhaustive enumeration.
pub fn pfaffian_identity_check(
    domain: &Arc<LatticeDomain>,
    params: &ModelParams,
    ins: &InsertionSet,
    opts: &EnumOpts,
) -> Result<PfaffianReport> {
    let corners = ins.corners();
    let n = corners.len();
    if n % 2 != 0 {
        return Err(FkError::OddOrder(n));
    }
    let mut entries = vec![0.0; n * n];
    for j in 0..n {
        for k in j + 1..n {
            let pair = InsertionSet::new(domain, vec![corners[j], corners[k]])?;
            let v = fermion_exact(domain, params, &pair, opts)?.value.re;
            entries[j * n + k] = v;
            entries[k * n + j] = -v;
        }
    }
    let two_point = SkewMatrix::new(n, entries)?;
    let rhs = pfaffian(&two_point);
    let lhs = fermion_exact(domain, params, ins, opts)?.value.re;
    Ok(PfaffianReport {
        lhs,
        rhs,
        diff: (lhs - rhs).abs(),
        two_point,
    })
}

/// Max over eligible mid-edges of
/// `|F(z_1,...,z_{2n-1}, z) - sum_j (-1)^{j+1} f(..without j..) F(z_j, z)|`.
/// The function in the bars is s-holomorphic with no poles at criticality,
/// so it vanishes identically.
pub fn r_function_max(
    domain: &Arc<LatticeDomain>,
    params: &ModelParams,
    ins: &InsertionSet,
    opts: &EnumOpts,
) -> Result<f64> {
    let corners = ins.corners();
    let field_all = build_midedge_field(domain, params, ins, opts)?;
    let mut coeff = Vec::with_capacity(corners.len());
    let mut fields_j = Vec::with_capacity(corners.len());
    for (j, &cj) in corners.iter().enumerate() {
        let rest: Vec<CornerId> = corners.iter().copied().filter(|&x| x != cj).collect();
        let rest_ins = InsertionSet::new(domain, rest)?;
        let f_rest = fermion_exact(domain, params, &rest_ins, opts)?.value.re;
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        coeff.push(sign * f_rest);
        let single = InsertionSet::new(domain, vec![cj])?;
        fields_j.push(build_midedge_field(domain, params, &single, opts)?);
    }
    let mut worst = 0.0f64;
    for m in domain.mid_edges() {
        let Some(h_all) = field_all.midedge_value(m.id) else {
            continue;
        };
        let mut r = h_all;
        let mut defined = true;
        for (c, fj) in coeff.iter().zip(&fields_j) {
            match fj.midedge_value(m.id) {
                Some(hj) => r -= c * hj,
                None => {
                    defined = false;
                    break;
                }
            }
        }
        if defined {
            worst = worst.max(r.norm());
        }
    }
    Ok(worst)
}
