//! FK configurations, primal/dual cluster decomposition, and extraction of
//! the oriented corner loops separating primal from dual clusters.

use std::sync::Arc;

use crate::error::{FkError, Result};
use crate::lattice::{CornerId, EdgeId, FaceId, LatticeDomain, VertexId};

/// An FK configuration: a bit per real primal edge, 1 = open.
///
/// The dual configuration is implicit: the dual edge of `e` is open iff
/// `e` is closed, and the permanently closed virtual boundary slots give
/// the permanently open dual ring.
#[derive(Debug, Clone)]
pub struct FkConfig {
    domain: Arc<LatticeDomain>,
    bits: u64,
}

impl FkConfig {
    pub fn new(domain: Arc<LatticeDomain>, bits: u64) -> Result<Self> {
        let edges = domain.edge_count();
        if edges < 64 && bits >> edges != 0 {
            return Err(FkError::ConfigOutOfRange { bits, edges });
        }
        Ok(FkConfig { domain, bits })
    }

    pub fn from_hex(domain: Arc<LatticeDomain>, hex: &str) -> Result<Self> {
        let digits = hex.trim().trim_start_matches("0x");
        let bits = u64::from_str_radix(digits, 16).map_err(|_| FkError::ConfigOutOfRange {
            bits: u64::MAX,
            edges: domain.edge_count(),
        })?;
        FkConfig::new(domain, bits)
    }

    pub fn to_hex(&self) -> String {
        format!("{:#x}", self.bits)
    }

    pub fn domain(&self) -> &Arc<LatticeDomain> {
        &self.domain
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn is_open(&self, e: EdgeId) -> bool {
        self.bits >> e & 1 == 1
    }

    /// Number of open edges |omega|.
    pub fn open_count(&self) -> u32 {
        self.bits.count_ones()
    }

    /// Primal and dual cluster decomposition.
    pub fn clusters(&self) -> ClusterLabels {
        let d = &*self.domain;
        let mut primal = UnionFind::new(d.vertex_count());
        for (e, &(a, b, _)) in d.edges().iter().enumerate() {
            if self.is_open(e) {
                primal.union(a, b);
            }
        }
        let mut dual = UnionFind::new(d.face_count());
        for s in 0..d.slot_count() {
            let slot = d.slot(s);
            let open = matches!(slot.real, Some(e) if self.is_open(e));
            if !open {
                dual.union(slot.faces.0, slot.faces.1);
            }
        }
        ClusterLabels {
            primal_count: primal.component_count(),
            dual_count: dual.component_count(),
            primal_label: primal.canonical_labels(),
            dual_label: dual.canonical_labels(),
        }
    }

    /// Extract the oriented corner loops. Every corner appears in exactly
    /// one loop; orientation keeps primal clusters on the left.
    pub fn extract_loops(&self) -> LoopSet {
        let d = &*self.domain;
        let n = d.corner_count();
        let mut corner_loop = vec![(usize::MAX, 0usize); n];
        let mut turn_after = vec![0i8; n];
        let mut loops = Vec::new();
        let mut loop_turn = Vec::new();
        for start in 0..n {
            if corner_loop[start].0 != usize::MAX {
                continue;
            }
            let li = loops.len();
            let mut cycle = Vec::new();
            let mut total = 0i64;
            let mut c = start;
            loop {
                corner_loop[c] = (li, cycle.len());
                cycle.push(c);
                let (next, turn) = d.step(c, |e| self.is_open(e));
                turn_after[c] = turn;
                total += turn as i64;
                c = next;
                if c == start {
                    break;
                }
            }
            debug_assert_eq!(
                total.abs(),
                4,
                "loop total turning must be +-4 quarter turns"
            );
            loops.push(cycle);
            loop_turn.push(total);
        }
        LoopSet {
            domain: Arc::clone(&self.domain),
            loops,
            corner_loop,
            turn_after,
            loop_turn,
        }
    }
}

/// Canonical cluster labels: each vertex (or dual vertex) is labelled by the
/// smallest member id of its cluster.
#[derive(Debug, Clone)]
pub struct ClusterLabels {
    pub primal_label: Vec<VertexId>,
    pub primal_count: usize,
    pub dual_label: Vec<FaceId>,
    pub dual_count: usize,
}

impl ClusterLabels {
    pub fn primal_connected(&self, a: VertexId, b: VertexId) -> bool {
        self.primal_label[a] == self.primal_label[b]
    }

    pub fn dual_connected(&self, a: FaceId, b: FaceId) -> bool {
        self.dual_label[a] == self.dual_label[b]
    }
}

/// The oriented corner loops of a configuration.
#[derive(Debug, Clone)]
pub struct LoopSet {
    domain: Arc<LatticeDomain>,
    loops: Vec<Vec<CornerId>>,
    /// corner id -> (loop index, position within the loop)
    corner_loop: Vec<(usize, usize)>,
    /// signed quarter turn taken when leaving each corner
    turn_after: Vec<i8>,
    /// total turning of each loop, always +-4
    loop_turn: Vec<i64>,
}

impl LoopSet {
    pub fn domain(&self) -> &Arc<LatticeDomain> {
        &self.domain
    }

    pub fn len(&self) -> usize {
        self.loops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.loops.is_empty()
    }

    pub fn loops(&self) -> &[Vec<CornerId>] {
        &self.loops
    }

    pub fn loop_turn(&self, li: usize) -> i64 {
        self.loop_turn[li]
    }

    pub fn position_of(&self, c: CornerId) -> Result<(usize, usize)> {
        self.corner_loop
            .get(c)
            .copied()
            .ok_or(FkError::InvalidCorner(c))
    }

    pub fn turn_after(&self, c: CornerId) -> i8 {
        self.turn_after[c]
    }

    /// Signed quarter turns accumulated walking loop `li` from position
    /// `from` to position `to` along the canonical orientation.
    pub fn arc_turns(&self, li: usize, from: usize, to: usize) -> i64 {
        let cycle = &self.loops[li];
        let len = cycle.len();
        let mut q = 0i64;
        let mut p = from;
        while p != to {
            q += self.turn_after[cycle[p]] as i64;
            p = (p + 1) % len;
        }
        q
    }

    /// True iff the two corners lie on the same loop.
    pub fn corners_connected(&self, a: CornerId, b: CornerId) -> Result<bool> {
        if a == b {
            return Err(FkError::IdenticalCorners);
        }
        Ok(self.position_of(a)?.0 == self.position_of(b)?.0)
    }
}

/// Union-find with path halving and union by size.
#[derive(Debug)]
pub(crate) struct UnionFind {
    parent: Vec<usize>,
    size: Vec<u32>,
    components: usize,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            size: vec![1; n],
            components: n,
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        self.components -= 1;
    }

    pub fn component_count(&self) -> usize {
        self.components
    }

    /// Labels mapping each element to the smallest id in its component.
    pub fn canonical_labels(&mut self) -> Vec<usize> {
        let n = self.parent.len();
        let roots: Vec<usize> = (0..n).map(|x| self.find(x)).collect();
        let mut min_of_root = vec![usize::MAX; n];
        for x in 0..n {
            if x < min_of_root[roots[x]] {
                min_of_root[roots[x]] = x;
            }
        }
        (0..n).map(|x| min_of_root[roots[x]]).collect()
    }
}
