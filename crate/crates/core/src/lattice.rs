//! Geometry and indexing of a finite rectangle of Z^2: primal vertices and
//! edges, the dual lattice with its wired outer ring, corners and mid-edges.
//!
//! All coordinates are integers scaled by 4, so primal vertices sit at
//! `(4x, 4y)`, dual vertices at odd multiples of 2, corners at odd offsets
//! `(+-1, +-1)` from their primal vertex and mid-edges halfway along primal
//! edges. No floating point enters the lattice layer.
//!
//! Free boundary conditions are realised by one ring of outer dual vertices
//! surrounding the rectangle. Internally every boundary vertex also carries
//! "virtual" edge slots pointing out of the domain; they are permanently
//! closed, their dual edges (the ring edges) are permanently open, and they
//! give every corner exactly two mid-edge slots so that the corner graph is
//! 2-regular and every configuration decomposes into loops.

use crate::error::{FkError, Result};
use crate::winding::PhaseEighth;

pub type VertexId = usize;
/// Real primal edge index. Mid-edges share this index.
pub type EdgeId = usize;
/// Edge-slot index: real edges first, then virtual boundary slots.
pub type SlotId = usize;
pub type CornerId = usize;
/// Dual vertex (face) index over the extended grid, outer ring included.
pub type FaceId = usize;

/// The four corners of a primal vertex, named after the dual vertex they
/// pair with. Orientation o(corner) = e^{i a pi/4} with a = 1, 3, 5, 7.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quadrant {
    NE,
    NW,
    SW,
    SE,
}

pub const QUADRANTS: [Quadrant; 4] = [Quadrant::NE, Quadrant::NW, Quadrant::SW, Quadrant::SE];

impl Quadrant {
    pub fn index(self) -> usize {
        match self {
            Quadrant::NE => 0,
            Quadrant::NW => 1,
            Quadrant::SW => 2,
            Quadrant::SE => 3,
        }
    }

    pub fn from_index(i: usize) -> Quadrant {
        QUADRANTS[i % 4]
    }

    pub fn orientation_eighth(self) -> u8 {
        2 * self.index() as u8 + 1
    }

    /// Offset of the corner from its vertex, in quarter units.
    pub fn offset(self) -> (i64, i64) {
        match self {
            Quadrant::NE => (1, 1),
            Quadrant::NW => (-1, 1),
            Quadrant::SW => (-1, -1),
            Quadrant::SE => (1, -1),
        }
    }

    pub fn parse(s: &str) -> Option<Quadrant> {
        match s {
            "NE" => Some(Quadrant::NE),
            "NW" => Some(Quadrant::NW),
            "SW" => Some(Quadrant::SW),
            "SE" => Some(Quadrant::SE),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Quadrant::NE => "NE",
            Quadrant::NW => "NW",
            Quadrant::SW => "SW",
            Quadrant::SE => "SE",
        }
    }
}

impl std::fmt::Display for Quadrant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Direction slots around a vertex, ordered so that the out-slot of
/// quadrant q is direction (q+1) mod 4 and its in-slot is direction q.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dir {
    East,
    North,
    West,
    South,
}

pub const DIRS: [Dir; 4] = [Dir::East, Dir::North, Dir::West, Dir::South];

impl Dir {
    fn delta(self) -> (i64, i64) {
        match self {
            Dir::East => (1, 0),
            Dir::North => (0, 1),
            Dir::West => (-1, 0),
            Dir::South => (0, -1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Horizontal,
    Vertical,
}

/// A corner point: the midpoint between an adjacent primal vertex `u`
/// and dual vertex `w`.
#[derive(Debug, Clone)]
pub struct Corner {
    pub id: CornerId,
    pub u: VertexId,
    pub w: FaceId,
    pub quadrant: Quadrant,
    pub orientation_eighth: u8,
    /// Slot the loop walk enters this corner through.
    pub in_slot: SlotId,
    /// Slot the loop walk leaves this corner through.
    pub out_slot: SlotId,
    /// Position in quarter units.
    pub pos: (i64, i64),
}

/// Midpoint of a real primal edge with its four adjacent corners labelled
/// by compass role relative to the mid-edge.
#[derive(Debug, Clone)]
pub struct MidEdge {
    pub id: EdgeId,
    pub edge: EdgeId,
    pub axis: Axis,
    pub corner_nw: CornerId,
    pub corner_ne: CornerId,
    pub corner_se: CornerId,
    pub corner_sw: CornerId,
    pub pos: (i64, i64),
}

impl MidEdge {
    pub fn corners(&self) -> [CornerId; 4] {
        [
            self.corner_nw,
            self.corner_ne,
            self.corner_se,
            self.corner_sw,
        ]
    }
}

#[derive(Debug, Clone)]
pub(crate) struct EdgeSlot {
    /// Present for real edges, `None` for virtual boundary slots.
    pub real: Option<EdgeId>,
    pub axis: Axis,
    /// Corners by compass role `[nw, ne, se, sw]`; virtual slots have two.
    pub role: [Option<CornerId>; 4],
    /// The two dual vertices separated by this (possibly virtual) edge.
    pub faces: (FaceId, FaceId),
    pub pos: (i64, i64),
}

/// Dual vertex of the extended face grid.
#[derive(Debug, Clone)]
pub struct Face {
    pub id: FaceId,
    pub ring: bool,
    /// Position in quarter units.
    pub pos: (i64, i64),
}

/// The finite rectangle with all of its derived index spaces. Immutable
/// after construction; queries are pure reads, safe to share across threads.
#[derive(Debug)]
pub struct LatticeDomain {
    width: usize,
    height: usize,
    edges: Vec<(VertexId, VertexId, Axis)>,
    slots: Vec<EdgeSlot>,
    corners: Vec<Corner>,
    mid_edges: Vec<MidEdge>,
    faces: Vec<Face>,
}

/// Build the domain for `width x height` primal vertices.
pub fn build_domain(width: usize, height: usize) -> Result<LatticeDomain> {
    LatticeDomain::new(width, height)
}

impl LatticeDomain {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        if width < 2 || height < 2 {
            return Err(FkError::DomainTooSmall { width, height });
        }
        let w = width;
        let h = height;
        let n_vertices = w * h;

        // Real edges: horizontal row-major, then vertical row-major.
        let mut edges = Vec::with_capacity(h * (w - 1) + w * (h - 1));
        for y in 0..h {
            for x in 0..w - 1 {
                edges.push((y * w + x, y * w + x + 1, Axis::Horizontal));
            }
        }
        for y in 0..h - 1 {
            for x in 0..w {
                edges.push((y * w + x, (y + 1) * w + x, Axis::Vertical));
            }
        }

        // Faces of the extended grid, row-major over centers
        // (i + 1/2, j + 1/2) with i in -1..w-1, j in -1..h-1.
        let fw = w + 1;
        let fh = h + 1;
        let mut faces = Vec::with_capacity(fw * fh);
        for j in -1..h as i64 {
            for i in -1..w as i64 {
                let id = faces.len();
                let ring = i < 0 || j < 0 || i >= w as i64 - 1 || j >= h as i64 - 1;
                faces.push(Face {
                    id,
                    ring,
                    pos: (4 * i + 2, 4 * j + 2),
                });
            }
        }
        let face_at = |i: i64, j: i64| -> FaceId { ((j + 1) * fw as i64 + (i + 1)) as usize };

        // Edge slots: the real edges first, then virtual boundary slots in
        // vertex-major, direction-major [E, N, W, S] order.
        let mut slots: Vec<EdgeSlot> = Vec::new();
        let mut vertex_slots = vec![[usize::MAX; 4]; n_vertices];
        for (eid, &(a, b, axis)) in edges.iter().enumerate() {
            let (ax, ay) = (a % w, a / w);
            let faces_pair = match axis {
                // above, below
                Axis::Horizontal => (
                    face_at(ax as i64, ay as i64),
                    face_at(ax as i64, ay as i64 - 1),
                ),
                // left, right
                Axis::Vertical => (
                    face_at(ax as i64 - 1, ay as i64),
                    face_at(ax as i64, ay as i64),
                ),
            };
            let pos = match axis {
                Axis::Horizontal => (4 * ax as i64 + 2, 4 * ay as i64),
                Axis::Vertical => (4 * ax as i64, 4 * ay as i64 + 2),
            };
            match axis {
                Axis::Horizontal => {
                    vertex_slots[a][0] = eid; // East of a
                    vertex_slots[b][2] = eid; // West of b
                }
                Axis::Vertical => {
                    vertex_slots[a][1] = eid; // North of a
                    vertex_slots[b][3] = eid; // South of b
                }
            }
            slots.push(EdgeSlot {
                real: Some(eid),
                axis,
                role: [None; 4],
                faces: faces_pair,
                pos,
            });
        }
        for v in 0..n_vertices {
            let (x, y) = ((v % w) as i64, (v / w) as i64);
            for (d, dir) in DIRS.iter().enumerate() {
                if vertex_slots[v][d] != usize::MAX {
                    continue;
                }
                let (dx, dy) = dir.delta();
                debug_assert!(
                    !(0..w as i64).contains(&(x + dx)) || !(0..h as i64).contains(&(y + dy))
                );
                let sid = slots.len();
                vertex_slots[v][d] = sid;
                let axis = match dir {
                    Dir::East | Dir::West => Axis::Horizontal,
                    Dir::North | Dir::South => Axis::Vertical,
                };
                // Dual faces on either side of the virtual edge sticking out
                // of the domain: both are ring faces.
                let faces_pair = match dir {
                    Dir::East => (face_at(x, y), face_at(x, y - 1)),
                    Dir::West => (face_at(x - 1, y), face_at(x - 1, y - 1)),
                    Dir::North => (face_at(x - 1, y), face_at(x, y)),
                    Dir::South => (face_at(x - 1, y - 1), face_at(x, y - 1)),
                };
                let pos = (4 * x + 2 * dx, 4 * y + 2 * dy);
                slots.push(EdgeSlot {
                    real: None,
                    axis,
                    role: [None; 4],
                    faces: faces_pair,
                    pos,
                });
            }
        }

        // Corners: 4 per vertex, ordered NE, NW, SW, SE (a = 1, 3, 5, 7).
        let mut corners = Vec::with_capacity(4 * n_vertices);
        for v in 0..n_vertices {
            let (x, y) = ((v % w) as i64, (v / w) as i64);
            for q in QUADRANTS {
                let id = corners.len();
                let (ox, oy) = q.offset();
                let w_face = face_at(x + (ox - 1) / 2, y + (oy - 1) / 2);
                let in_slot = vertex_slots[v][q.index()];
                let out_slot = vertex_slots[v][(q.index() + 1) % 4];
                corners.push(Corner {
                    id,
                    u: v,
                    w: w_face,
                    quadrant: q,
                    orientation_eighth: q.orientation_eighth(),
                    in_slot,
                    out_slot,
                    pos: (4 * x + ox, 4 * y + oy),
                });
            }
        }

        // Fill compass roles on the slots and build the mid-edge views.
        let corner_of = |v: VertexId, q: Quadrant| -> CornerId { 4 * v + q.index() };
        let mut mid_edges = Vec::with_capacity(edges.len());
        for sid in 0..slots.len() {
            let (real, axis) = (slots[sid].real, slots[sid].axis);
            let role: [Option<CornerId>; 4] = if let Some(eid) = real {
                let (a, b, _) = edges[eid];
                match axis {
                    Axis::Horizontal => [
                        Some(corner_of(a, Quadrant::NE)),
                        Some(corner_of(b, Quadrant::NW)),
                        Some(corner_of(b, Quadrant::SW)),
                        Some(corner_of(a, Quadrant::SE)),
                    ],
                    Axis::Vertical => [
                        Some(corner_of(b, Quadrant::SW)),
                        Some(corner_of(b, Quadrant::SE)),
                        Some(corner_of(a, Quadrant::NE)),
                        Some(corner_of(a, Quadrant::NW)),
                    ],
                }
            } else {
                // Virtual slot: the two corners of the inner vertex that
                // flank the missing edge.
                let mut r = [None; 4];
                for c in &corners {
                    if c.in_slot == sid || c.out_slot == sid {
                        let (cx, cy) = c.pos;
                        let (sx, sy) = slots[sid].pos;
                        let idx = match (cx - sx, cy - sy) {
                            (-1, 1) => 0,  // nw
                            (1, 1) => 1,   // ne
                            (1, -1) => 2,  // se
                            (-1, -1) => 3, // sw
                            _ => unreachable!("corner not adjacent to its slot"),
                        };
                        r[idx] = Some(c.id);
                    }
                }
                r
            };
            slots[sid].role = role;
            if let Some(eid) = real {
                mid_edges.push(MidEdge {
                    id: eid,
                    edge: eid,
                    axis,
                    corner_nw: role[0].unwrap(),
                    corner_ne: role[1].unwrap(),
                    corner_se: role[2].unwrap(),
                    corner_sw: role[3].unwrap(),
                    pos: slots[sid].pos,
                });
            }
        }

        Ok(LatticeDomain {
            width,
            height,
            edges,
            slots,
            corners,
            mid_edges,
            faces,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn vertex_count(&self) -> usize {
        self.width * self.height
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn corner_count(&self) -> usize {
        self.corners.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub(crate) fn slot_count(&self) -> usize {
        self.slots.len()
    }

    pub fn interior_face_count(&self) -> usize {
        self.faces.iter().filter(|f| !f.ring).count()
    }

    pub fn ring_face_count(&self) -> usize {
        self.faces.iter().filter(|f| f.ring).count()
    }

    pub fn vertex_xy(&self, v: VertexId) -> (i64, i64) {
        ((v % self.width) as i64, (v / self.width) as i64)
    }

    pub fn vertex_at(&self, x: i64, y: i64) -> Result<VertexId> {
        if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 {
            return Err(FkError::VertexOutOfRange { x, y });
        }
        Ok(y as usize * self.width + x as usize)
    }

    pub fn edge(&self, e: EdgeId) -> Result<(VertexId, VertexId, Axis)> {
        self.edges.get(e).copied().ok_or(FkError::InvalidEdge(e))
    }

    pub fn edges(&self) -> &[(VertexId, VertexId, Axis)] {
        &self.edges
    }

    pub fn corner(&self, c: CornerId) -> Result<&Corner> {
        self.corners.get(c).ok_or(FkError::InvalidCorner(c))
    }

    pub fn corners(&self) -> &[Corner] {
        &self.corners
    }

    pub fn mid_edge(&self, e: EdgeId) -> Result<&MidEdge> {
        self.mid_edges.get(e).ok_or(FkError::InvalidEdge(e))
    }

    pub fn mid_edges(&self) -> &[MidEdge] {
        &self.mid_edges
    }

    pub fn face(&self, f: FaceId) -> &Face {
        &self.faces[f]
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub(crate) fn slot(&self, s: SlotId) -> &EdgeSlot {
        &self.slots[s]
    }

    /// Face id at extended grid coordinates, `i in -1..width-1`,
    /// `j in -1..height-1`.
    pub fn face_at(&self, i: i64, j: i64) -> Option<FaceId> {
        if i < -1 || j < -1 || i >= self.width as i64 || j >= self.height as i64 {
            return None;
        }
        Some(((j + 1) * (self.width as i64 + 1) + (i + 1)) as usize)
    }

    /// Extended grid coordinates of a face.
    pub fn face_ij(&self, f: FaceId) -> (i64, i64) {
        let fw = self.width as i64 + 1;
        (f as i64 % fw - 1, f as i64 / fw - 1)
    }

    pub fn corner_orientation(&self, c: CornerId) -> Result<PhaseEighth> {
        Ok(PhaseEighth::new(self.corner(c)?.orientation_eighth as i64))
    }

    pub fn corner_by_spec(&self, x: i64, y: i64, quadrant: Quadrant) -> Result<CornerId> {
        let v = self.vertex_at(x, y)?;
        Ok(4 * v + quadrant.index())
    }

    /// Parse a CLI corner spec "x,y,Q".
    pub fn parse_corner(&self, spec: &str) -> Result<CornerId> {
        let err = || FkError::BadCornerSpec(spec.to_string());
        let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(err());
        }
        let x: i64 = parts[0].parse().map_err(|_| err())?;
        let y: i64 = parts[1].parse().map_err(|_| err())?;
        let q = Quadrant::parse(parts[2]).ok_or_else(err)?;
        self.corner_by_spec(x, y, q)
    }

    pub fn corner_spec(&self, c: CornerId) -> Result<String> {
        let corner = self.corner(c)?;
        let (x, y) = self.vertex_xy(corner.u);
        Ok(format!("{},{},{}", x, y, corner.quadrant))
    }

    /// A corner is a boundary corner when its dual vertex lies on the ring.
    pub fn is_boundary_corner(&self, c: CornerId) -> Result<bool> {
        Ok(self.faces[self.corner(c)?.w].ring)
    }

    /// The two real mid-edges adjacent to a corner, when both exist.
    pub fn corner_mid_edges(&self, c: CornerId) -> Result<Option<(EdgeId, EdgeId)>> {
        let corner = self.corner(c)?;
        match (
            self.slots[corner.in_slot].real,
            self.slots[corner.out_slot].real,
        ) {
            (Some(a), Some(b)) => Ok(Some((a, b))),
            _ => Ok(None),
        }
    }

    /// Walk transition leaving `c` through its out-slot: the next corner and
    /// the signed quarter turn taken at the shared mid-edge (+1 right turn
    /// across an open edge, -1 left turn around the primal vertex).
    pub(crate) fn step(&self, c: CornerId, open: impl Fn(EdgeId) -> bool) -> (CornerId, i8) {
        let corner = &self.corners[c];
        let slot = &self.slots[corner.out_slot];
        let crossing = matches!(slot.real, Some(eid) if open(eid));
        if crossing {
            let eid = slot.real.unwrap();
            let (a, b, _) = self.edges[eid];
            let other = if a == corner.u { b } else { a };
            let q = (corner.quadrant.index() + 3) % 4;
            (4 * other + q, 1)
        } else {
            let q = (corner.quadrant.index() + 1) % 4;
            (4 * corner.u + q, -1)
        }
    }
}
