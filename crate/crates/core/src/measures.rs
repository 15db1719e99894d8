//! Probability weights for the FK and Ising models, the parameter
//! dictionary, disorder lines, and the Edwards-Sokal coupling samplers.

use std::sync::Arc;

use rand::Rng;

use crate::config::{FkConfig, UnionFind};
use crate::error::{FkError, Result};
use crate::lattice::{CornerId, EdgeId, FaceId, LatticeDomain, VertexId};

/// Coupled parameters of the FK-Ising dictionary:
/// `p = 1 - e^{-2 beta}` and `t = p / ((1-p) sqrt(2))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub p: f64,
    pub beta: f64,
    pub t: f64,
}

impl ModelParams {
    pub fn from_p(p: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&p) {
            return Err(FkError::InvalidP(p));
        }
        Ok(ModelParams {
            p,
            beta: -0.5 * (1.0 - p).ln(),
            t: p / ((1.0 - p) * 2f64.sqrt()),
        })
    }

    pub fn from_beta(beta: f64) -> Result<Self> {
        if !(beta >= 0.0) {
            return Err(FkError::InvalidBeta(beta));
        }
        Self::from_p(1.0 - (-2.0 * beta).exp())
    }

    pub fn from_t(t: f64) -> Result<Self> {
        if !(t > 0.0) {
            return Err(FkError::InvalidT(t));
        }
        let s = t * 2f64.sqrt();
        Self::from_p(s / (1.0 + s))
    }

    /// Critical point: t = 1, p = 2 - sqrt(2), beta = ln(1 + sqrt(2)) / 2.
    pub fn critical() -> Self {
        ModelParams {
            p: 2.0 - 2f64.sqrt(),
            beta: 0.5 * (2f64.sqrt() + 1.0).ln(),
            t: 1.0,
        }
    }

    pub fn is_critical(&self) -> bool {
        (self.t - 1.0).abs() < 1e-12
    }
}

/// Unnormalised FK weight `(p/(1-p))^{|omega|} 2^{k(omega)}`, evaluated in
/// log space with the exact integer exponents.
pub fn fk_weight(config: &FkConfig, params: &ModelParams) -> f64 {
    let k = config.clusters().primal_count;
    fk_weight_from_stats(config.open_count(), k, params)
}

pub(crate) fn fk_weight_from_stats(open: u32, k: usize, params: &ModelParams) -> f64 {
    let x = params.p / (1.0 - params.p);
    if x == 0.0 {
        return if open == 0 {
            (k as f64 * 2f64.ln()).exp()
        } else {
            0.0
        };
    }
    (open as f64 * x.ln() + k as f64 * 2f64.ln()).exp()
}

/// Unnormalised loop weight `t^{|omega|} sqrt(2)^{l(omega)}`.
pub fn loop_weight(config: &FkConfig, params: &ModelParams) -> f64 {
    let l = config.extract_loops().len();
    if params.t == 0.0 {
        return if config.open_count() == 0 {
            (l as f64 * 0.5 * 2f64.ln()).exp()
        } else {
            0.0
        };
    }
    (config.open_count() as f64 * params.t.ln() + l as f64 * 0.5 * 2f64.ln()).exp()
}

/// A spin assignment on the primal vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpinConfig {
    pub spins: Vec<i8>,
}

impl SpinConfig {
    pub fn all_plus(domain: &LatticeDomain) -> Self {
        SpinConfig {
            spins: vec![1; domain.vertex_count()],
        }
    }

    /// Pack the spins of an enumeration index: bit v set means spin -1.
    pub fn from_bits(domain: &LatticeDomain, bits: u64) -> Self {
        SpinConfig {
            spins: (0..domain.vertex_count())
                .map(|v| if bits >> v & 1 == 1 { -1 } else { 1 })
                .collect(),
        }
    }

    /// Total interaction energy `sum_{x~y} sigma_x sigma_y` over real edges.
    pub fn interaction_sum(&self, domain: &LatticeDomain) -> i64 {
        domain
            .edges()
            .iter()
            .map(|&(a, b, _)| (self.spins[a] * self.spins[b]) as i64)
            .sum()
    }
}

/// Unnormalised Ising weight `e^{beta sum sigma sigma}`.
pub fn ising_weight(spins: &SpinConfig, domain: &LatticeDomain, params: &ModelParams) -> f64 {
    (params.beta * spins.interaction_sum(domain) as f64).exp()
}

/// A corner defect line: a simple dual path between the disorder-ends of two
/// corners, together with the two corner segments.
#[derive(Debug, Clone)]
pub struct DefectLine {
    pub corner_ends: (CornerId, CornerId),
    /// The dual vertices visited from w(corner 1) to w(corner 2).
    pub dual_vertices: Vec<FaceId>,
    /// Real primal edges orthogonal to the dual path.
    pub crossed_edges: Vec<EdgeId>,
    /// Total turning of corner segment + dual path + corner segment,
    /// in units of pi/4, counterclockwise positive.
    pub turning_eighths: i64,
}

impl DefectLine {
    /// Build a line from an explicit simple dual path `w(z1) -> w(z2)`.
    pub fn from_dual_path(
        domain: &LatticeDomain,
        z1: CornerId,
        z2: CornerId,
        dual_vertices: Vec<FaceId>,
    ) -> Result<Self> {
        if z1 == z2 {
            return Err(FkError::IdenticalCorners);
        }
        let c1 = domain.corner(z1)?;
        let c2 = domain.corner(z2)?;
        assert_eq!(dual_vertices.first(), Some(&c1.w), "path must start at w1");
        assert_eq!(dual_vertices.last(), Some(&c2.w), "path must end at w2");
        // simplicity
        let mut seen = dual_vertices.clone();
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen.len(), dual_vertices.len(), "dual path must be simple");

        let mut crossed = Vec::new();
        for pair in dual_vertices.windows(2) {
            if let Some(e) = crossed_real_edge(domain, pair[0], pair[1]) {
                crossed.push(e);
            }
        }

        // Polyline: corner 1 -> w1 -> ... -> w2 -> corner 2, with the first
        // tangent fixed along o(z1) and the last along -o(z2).
        let mut pts: Vec<(i64, i64)> = Vec::with_capacity(dual_vertices.len() + 2);
        pts.push(c1.pos);
        for &f in &dual_vertices {
            pts.push(domain.face(f).pos);
        }
        pts.push(c2.pos);
        let turning_eighths = polyline_turning_eighths(&pts);

        Ok(DefectLine {
            corner_ends: (z1, z2),
            dual_vertices,
            crossed_edges: crossed,
            turning_eighths,
        })
    }

    pub fn spin_ends(&self, domain: &LatticeDomain) -> (VertexId, VertexId) {
        (
            domain.corner(self.corner_ends.0).unwrap().u,
            domain.corner(self.corner_ends.1).unwrap().u,
        )
    }
}

/// The real primal edge crossed by the dual edge between two adjacent faces,
/// `None` when the crossing edge is a virtual boundary slot.
fn crossed_real_edge(domain: &LatticeDomain, f1: FaceId, f2: FaceId) -> Option<EdgeId> {
    for s in 0..domain.slot_count() {
        let slot = domain.slot(s);
        if slot.faces == (f1, f2) || slot.faces == (f2, f1) {
            return slot.real;
        }
    }
    panic!("faces {f1} and {f2} are not adjacent");
}

/// Sum of signed turning angles of a polyline in units of pi/4,
/// right turns positive. Panics on reversals.
fn polyline_turning_eighths(pts: &[(i64, i64)]) -> i64 {
    let mut total = 0i64;
    for w in pts.windows(3) {
        let d1 = (w[1].0 - w[0].0, w[1].1 - w[0].1);
        let d2 = (w[2].0 - w[1].0, w[2].1 - w[1].1);
        total += turn_eighths(d1, d2);
    }
    total
}

/// Signed turn from direction d1 to d2 in units of pi/4, counterclockwise
/// positive.
fn turn_eighths(d1: (i64, i64), d2: (i64, i64)) -> i64 {
    let cross = d1.0 * d2.1 - d1.1 * d2.0;
    let dot = d1.0 * d2.0 + d1.1 * d2.1;
    // counterclockwise angle in (-pi, pi]
    let ccw = (cross as f64).atan2(dot as f64);
    assert!(
        !(cross == 0 && dot < 0),
        "defect line reverses direction, turning undefined"
    );
    let eighths = (ccw / (std::f64::consts::PI / 4.0)).round() as i64;
    debug_assert!((ccw - eighths as f64 * std::f64::consts::PI / 4.0).abs() < 1e-9);
    eighths
}

/// Disorder energy `E_lambda[sigma] = sum over crossed edges of sigma sigma`.
pub fn disorder_energy(spins: &SpinConfig, domain: &LatticeDomain, line: &DefectLine) -> i64 {
    line.crossed_edges
        .iter()
        .map(|&e| {
            let (a, b, _) = domain.edge(e).unwrap();
            (spins.spins[a] * spins.spins[b]) as i64
        })
        .sum()
}

/// Deterministic L-shaped routing of the dual path from w(z1) to w(z2):
/// horizontal leg first, then vertical.
pub fn route_defect_line(domain: &LatticeDomain, z1: CornerId, z2: CornerId) -> Result<DefectLine> {
    let path = l_path(domain, z1, z2, true);
    DefectLine::from_dual_path(domain, z1, z2, path)
}

fn l_path(
    domain: &LatticeDomain,
    z1: CornerId,
    z2: CornerId,
    horizontal_first: bool,
) -> Vec<FaceId> {
    let w1 = domain.corner(z1).unwrap().w;
    let w2 = domain.corner(z2).unwrap().w;
    let (i1, j1) = domain.face_ij(w1);
    let (i2, j2) = domain.face_ij(w2);
    let mut path = vec![w1];
    let (mut i, mut j) = (i1, j1);
    let push = |path: &mut Vec<FaceId>, i: i64, j: i64| {
        path.push(domain.face_at(i, j).expect("face in range"));
    };
    if horizontal_first {
        while i != i2 {
            i += (i2 - i).signum();
            push(&mut path, i, j);
        }
        while j != j2 {
            j += (j2 - j).signum();
            push(&mut path, i, j);
        }
    } else {
        while j != j2 {
            j += (j2 - j).signum();
            push(&mut path, i, j);
        }
        while i != i2 {
            i += (i2 - i).signum();
            push(&mut path, i, j);
        }
    }
    path
}

/// Route one line per consecutive corner pair, trying a few deterministic
/// variants per line until the dual paths are pairwise vertex-disjoint.
pub fn route_defect_lines(
    domain: &LatticeDomain,
    pairs: &[(CornerId, CornerId)],
) -> Result<Vec<DefectLine>> {
    fn disjoint(a: &[FaceId], b: &[FaceId]) -> bool {
        a.iter().all(|x| !b.contains(x))
    }
    fn search(
        domain: &LatticeDomain,
        pairs: &[(CornerId, CornerId)],
        chosen: &mut Vec<Vec<FaceId>>,
    ) -> bool {
        if chosen.len() == pairs.len() {
            return true;
        }
        let (z1, z2) = pairs[chosen.len()];
        for variant in [true, false] {
            let cand = l_path(domain, z1, z2, variant);
            let mut simple = cand.clone();
            simple.sort_unstable();
            simple.dedup();
            if simple.len() != cand.len() {
                continue;
            }
            if chosen.iter().all(|p| disjoint(p, &cand)) {
                chosen.push(cand);
                if search(domain, pairs, chosen) {
                    return true;
                }
                chosen.pop();
            }
        }
        false
    }
    let mut chosen = Vec::new();
    if !search(domain, pairs, &mut chosen) {
        return Err(FkError::RoutingFailed);
    }
    pairs
        .iter()
        .zip(chosen)
        .map(|(&(z1, z2), path)| DefectLine::from_dual_path(domain, z1, z2, path))
        .collect()
}

/// Sample spins given an FK configuration: one fair sign per primal cluster.
pub fn es_sample_spins_given_fk<R: Rng>(config: &FkConfig, rng: &mut R) -> SpinConfig {
    let labels = config.clusters();
    sample_spins_from_labels(&labels.primal_label, rng)
}

fn sample_spins_from_labels<R: Rng>(primal_label: &[VertexId], rng: &mut R) -> SpinConfig {
    let n = primal_label.len();
    let mut cluster_sign = vec![0i8; n];
    let mut spins = vec![0i8; n];
    for v in 0..n {
        let root = primal_label[v];
        if cluster_sign[root] == 0 {
            cluster_sign[root] = if rng.gen_bool(0.5) { 1 } else { -1 };
        }
        spins[v] = cluster_sign[root];
    }
    SpinConfig { spins }
}

/// Sample edges given spins: unequal-spin edges closed, equal-spin edges
/// open independently with probability p.
pub fn es_sample_fk_given_spins<R: Rng>(
    domain: &Arc<LatticeDomain>,
    spins: &SpinConfig,
    params: &ModelParams,
    rng: &mut R,
) -> FkConfig {
    let mut bits = 0u64;
    for (e, &(a, b, _)) in domain.edges().iter().enumerate() {
        if spins.spins[a] == spins.spins[b] && rng.gen_bool(params.p) {
            bits |= 1 << e;
        }
    }
    FkConfig::new(Arc::clone(domain), bits).expect("mask in range")
}

/// Result of the defect-coupled spin sampler.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DefectSample {
    Spins(SpinConfig),
    /// The configuration is frustrated: `mu_lambda(sigma, omega) = 0` for
    /// every sigma.
    Incompatible,
}

/// Sample spins given an FK configuration in the presence of disorder lines:
/// spins are constant on the regions a cluster is cut into and flip across
/// every crossed open edge. Returns `Incompatible` when the flip constraints
/// are frustrated.
pub fn es_sample_spins_given_fk_with_defect<R: Rng>(
    config: &FkConfig,
    lines: &[DefectLine],
    rng: &mut R,
) -> DefectSample {
    let domain = config.domain();
    let n = domain.vertex_count();
    let mut crossed = vec![false; domain.edge_count()];
    for line in lines {
        for &e in &line.crossed_edges {
            crossed[e] = true;
        }
    }
    // Two-color each cluster: vertex v gets (region root, parity vs root).
    // Union-find over 2n nodes: v and its "flipped shadow" v + n.
    let mut uf = UnionFind::new(2 * n);
    for (e, &(a, b, _)) in domain.edges().iter().enumerate() {
        if !config.is_open(e) {
            continue;
        }
        if crossed[e] {
            uf.union(a, b + n);
            uf.union(a + n, b);
        } else {
            uf.union(a, b);
            uf.union(a + n, b + n);
        }
    }
    for v in 0..n {
        if uf.find(v) == uf.find(v + n) {
            return DefectSample::Incompatible;
        }
    }
    let mut sign_of_root: Vec<i8> = vec![0; 2 * n];
    let mut spins = vec![0i8; n];
    for v in 0..n {
        let r = uf.find(v);
        let rbar = uf.find(v + n);
        if sign_of_root[r] == 0 {
            let s = if rng.gen_bool(0.5) { 1 } else { -1 };
            sign_of_root[r] = s;
            sign_of_root[rbar] = -s;
        }
        spins[v] = sign_of_root[r];
    }
    DefectSample::Spins(SpinConfig { spins })
}

/// Unnormalised Edwards-Sokal weight `mu(sigma, omega)`, with disorder lines
/// flipping the agreement constraint on their crossed edges.
pub fn es_weight(
    config: &FkConfig,
    spins: &SpinConfig,
    params: &ModelParams,
    lines: &[DefectLine],
) -> f64 {
    let domain = config.domain();
    let mut crossed = vec![false; domain.edge_count()];
    for line in lines {
        for &e in &line.crossed_edges {
            crossed[e] = true;
        }
    }
    let mut weight = 1.0;
    for (e, &(a, b, _)) in domain.edges().iter().enumerate() {
        let agree = spins.spins[a] == spins.spins[b];
        let want = if crossed[e] { !agree } else { agree };
        weight *= if config.is_open(e) {
            if want {
                params.p
            } else {
                0.0
            }
        } else {
            1.0 - params.p
        };
        if weight == 0.0 {
            return 0.0;
        }
    }
    weight
}
