//! Index-based half-edge (doubly connected edge list) mesh.
//!
//! A mesh holds strictly convex counter-clockwise interior faces plus one
//! clockwise outer ring representing the unbounded exterior. Meshes are
//! immutable after construction: [`build_mesh`] wires twins and the outer
//! ring from interior face cycles and rejects input it cannot validate, so
//! every reachable `Mesh` satisfies the invariants that the walk algorithms
//! rely on.

use std::collections::HashMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::Dyadic;
use crate::geom::{obtuse_sign, orient_sign, Point};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexId(usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HalfEdgeId(usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FaceId(usize);

impl VertexId {
    pub fn new(index: usize) -> VertexId {
        VertexId(index)
    }
    pub fn index(self) -> usize {
        self.0
    }
}

impl HalfEdgeId {
    pub fn new(index: usize) -> HalfEdgeId {
        HalfEdgeId(index)
    }
    pub fn index(self) -> usize {
        self.0
    }
}

impl FaceId {
    pub fn new(index: usize) -> FaceId {
        FaceId(index)
    }
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

impl fmt::Display for HalfEdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "h{}", self.0)
    }
}

impl fmt::Display for FaceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "f{}", self.0)
    }
}

#[derive(Clone, Copy, Debug)]
struct HalfEdgeRec {
    origin: VertexId,
    twin: HalfEdgeId,
    next: HalfEdgeId,
    face: FaceId,
}

#[derive(Clone, Copy, Debug)]
struct FaceRec {
    edge: HalfEdgeId,
    is_outer: bool,
}

/// Navigation moves available to walks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NavMove {
    Next,
    Twin,
}

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("non-finite vertex coordinate")]
    NonFinite,
    #[error("face cycle {cycle} has fewer than three vertices")]
    ShortCycle { cycle: usize },
    #[error("face cycle {cycle} references vertex {index} out of range")]
    BadVertexIndex { cycle: usize, index: usize },
    #[error("face cycle {cycle} repeats vertex {index}")]
    RepeatedVertex { cycle: usize, index: usize },
    #[error("face cycle {cycle} is not strictly convex counter-clockwise")]
    NonConvexCycle { cycle: usize },
    #[error("directed edge {u}->{v} appears in more than one face cycle")]
    DuplicateDirectedEdge { u: usize, v: usize },
    #[error("boundary does not form a single closed hull cycle")]
    BadBoundary,
    #[error("constructed mesh failed validation: {0}")]
    InvalidMesh(String),
    #[error("invalid id: {0}")]
    InvalidId(String),
    #[error("operation is not supported on the outer face")]
    OuterFaceUnsupported,
    #[error("non-finite query point")]
    NonFinitePoint,
    #[error("mesh file: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A single validation failure, as a human-readable description.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

fn violation(message: String) -> Violation {
    Violation { message }
}

/// Immutable half-edge mesh. See the module docs for the invariants.
#[derive(Clone, Debug)]
pub struct Mesh {
    vertices: Vec<Point>,
    halfedges: Vec<HalfEdgeRec>,
    faces: Vec<FaceRec>,
    outer: FaceId,
}

impl Mesh {
    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn halfedge_count(&self) -> usize {
        self.halfedges.len()
    }

    /// Number of faces including the outer face.
    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn interior_face_count(&self) -> usize {
        self.faces.len() - 1
    }

    /// Coordinates of a vertex. Panics on an out-of-range id.
    pub fn point(&self, v: VertexId) -> Point {
        self.vertices[v.0]
    }

    /// Start vertex of a half-edge. Panics on an out-of-range id.
    pub fn origin(&self, e: HalfEdgeId) -> VertexId {
        self.halfedges[e.0].origin
    }

    /// End vertex of a half-edge, derived as origin(twin(e)).
    pub fn target(&self, e: HalfEdgeId) -> VertexId {
        self.origin(self.twin(e))
    }

    pub fn twin(&self, e: HalfEdgeId) -> HalfEdgeId {
        self.halfedges[e.0].twin
    }

    /// Successor half-edge in the winding order of the face perimeter.
    pub fn next(&self, e: HalfEdgeId) -> HalfEdgeId {
        self.halfedges[e.0].next
    }

    pub fn face(&self, e: HalfEdgeId) -> FaceId {
        self.halfedges[e.0].face
    }

    /// Some half-edge on the perimeter of a face. Panics on out-of-range id.
    pub fn face_edge(&self, f: FaceId) -> HalfEdgeId {
        self.faces[f.0].edge
    }

    pub fn is_outer(&self, f: FaceId) -> bool {
        self.faces[f.0].is_outer
    }

    pub fn outer_face(&self) -> FaceId {
        self.outer
    }

    /// Endpoint coordinates (origin, target) of a half-edge.
    pub fn edge_points(&self, e: HalfEdgeId) -> (Point, Point) {
        (self.point(self.origin(e)), self.point(self.target(e)))
    }

    pub fn contains_halfedge(&self, e: HalfEdgeId) -> bool {
        e.0 < self.halfedges.len()
    }

    /// Checked single navigation step.
    pub fn navigate(&self, e: HalfEdgeId, mv: NavMove) -> Result<HalfEdgeId, MeshError> {
        if !self.contains_halfedge(e) {
            return Err(MeshError::InvalidId(format!("{e}")));
        }
        Ok(match mv {
            NavMove::Next => self.next(e),
            NavMove::Twin => self.twin(e),
        })
    }

    /// Perimeter half-edges of a face in winding order, starting at the
    /// face's designated edge (counter-clockwise for interior faces,
    /// clockwise for the outer face).
    pub fn face_perimeter(&self, f: FaceId) -> Result<Vec<HalfEdgeId>, MeshError> {
        if f.0 >= self.faces.len() {
            return Err(MeshError::InvalidId(format!("{f}")));
        }
        let start = self.faces[f.0].edge;
        let mut out = Vec::new();
        let mut e = start;
        loop {
            out.push(e);
            e = self.next(e);
            if e == start || out.len() > self.halfedges.len() {
                break;
            }
        }
        Ok(out)
    }

    /// Closed containment in an interior face: true iff p is not strictly
    /// right of any perimeter half-edge, so perimeter points count as inside.
    pub fn point_in_face(&self, f: FaceId, p: Point) -> Result<bool, MeshError> {
        if f.0 >= self.faces.len() {
            return Err(MeshError::InvalidId(format!("{f}")));
        }
        if self.is_outer(f) {
            return Err(MeshError::OuterFaceUnsupported);
        }
        if !p.is_finite() {
            return Err(MeshError::NonFinitePoint);
        }
        for e in self.face_perimeter(f)? {
            let (a, b) = self.edge_points(e);
            if orient_sign(a, b, p) < 0 {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Checks every structural and geometric invariant; an empty list means
    /// the mesh is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let nv = self.vertices.len();
        let nh = self.halfedges.len();
        let nf = self.faces.len();

        for (i, p) in self.vertices.iter().enumerate() {
            if !p.is_finite() {
                out.push(violation(format!("vertex v{i} has non-finite coordinates")));
            }
        }

        let mut ids_ok = true;
        for (i, he) in self.halfedges.iter().enumerate() {
            if he.origin.0 >= nv || he.twin.0 >= nh || he.next.0 >= nh || he.face.0 >= nf {
                out.push(violation(format!("half-edge h{i} has an out-of-range id")));
                ids_ok = false;
            }
        }
        for (i, fr) in self.faces.iter().enumerate() {
            if fr.edge.0 >= nh {
                out.push(violation(format!("face f{i} has an out-of-range edge id")));
                ids_ok = false;
            }
        }
        if !ids_ok {
            return out; // structural traversals below would index out of range
        }

        if !nh.is_multiple_of(2) {
            out.push(violation("odd number of half-edges".to_string()));
        }

        for i in 0..nh {
            let e = HalfEdgeId(i);
            if self.twin(e) == e {
                out.push(violation(format!("twin involution broken at h{i}: twin is self")));
            } else if self.twin(self.twin(e)) != e {
                out.push(violation(format!("twin involution broken at h{i}")));
            }
            if self.face(self.next(e)) != self.face(e) {
                out.push(violation(format!(
                    "face changes along next at h{i}: {} vs {}",
                    self.face(e),
                    self.face(self.next(e))
                )));
            }
            if self.origin(self.next(e)) != self.target(e) {
                out.push(violation(format!(
                    "perimeter chain broken at h{i}: next does not start at target"
                )));
            }
            let (a, b) = self.edge_points(e);
            if a == b {
                out.push(violation(format!("degenerate half-edge h{i}: endpoints coincide")));
            }
        }

        // next must be a permutation: every half-edge the next of exactly one.
        let mut seen_as_next = vec![false; nh];
        for i in 0..nh {
            let t = self.next(HalfEdgeId(i)).0;
            if seen_as_next[t] {
                out.push(violation(format!("h{t} is the next of more than one half-edge")));
            }
            seen_as_next[t] = true;
        }

        let outer_count = self.faces.iter().filter(|f| f.is_outer).count();
        if outer_count != 1 {
            out.push(violation(format!("expected exactly one outer face, found {outer_count}")));
        }
        if self.outer.0 >= nf || !self.faces[self.outer.0].is_outer {
            out.push(violation("designated outer face is not marked outer".to_string()));
        }

        // Face orbits: closed, owned by the face, length >= 3, covering all
        // half-edges exactly once.
        let mut perimeter_total = 0usize;
        for fi in 0..nf {
            let f = FaceId(fi);
            let start = self.faces[fi].edge;
            if self.face(start) != f {
                out.push(violation(format!("face {f} designates an edge of another face")));
                continue;
            }
            let mut orbit = Vec::new();
            let mut e = start;
            loop {
                orbit.push(e);
                e = self.next(e);
                if e == start || orbit.len() > nh {
                    break;
                }
            }
            if *orbit.last().unwrap() != start && self.next(*orbit.last().unwrap()) != start {
                out.push(violation(format!("perimeter of {f} does not close")));
            }
            if orbit.len() < 3 {
                out.push(violation(format!("perimeter of {f} has fewer than three edges")));
            }
            if orbit.iter().any(|&e| self.face(e) != f) {
                out.push(violation(format!("perimeter of {f} leaves the face")));
            }
            perimeter_total += orbit.len();

            // Interior faces must turn strictly left at every corner (strict
            // convexity, counter-clockwise). The outer ring is only required
            // to wind clockwise overall: region boundaries need not be convex
            // (a multi-cell hexagonal grid has reflex boundary corners) and
            // may pass through collinear subdivision points, so its corners
            // carry no turn constraint. Clockwise winding is checked with an
            // exact signed area so near-degenerate rings cannot slip through.
            if self.faces[fi].is_outer {
                let mut doubled_area = Dyadic::zero();
                for &e in &orbit {
                    let (a, b) = self.edge_points(e);
                    let term = Dyadic::from_f64(a.x) * Dyadic::from_f64(b.y)
                        - Dyadic::from_f64(b.x) * Dyadic::from_f64(a.y);
                    doubled_area = doubled_area + term;
                }
                if doubled_area.signum() >= 0 {
                    out.push(violation(
                        "outer ring does not wind clockwise around the region".to_string(),
                    ));
                }
            } else {
                for &e in &orbit {
                    let (a, b) = self.edge_points(e);
                    let c = self.point(self.target(self.next(e)));
                    if orient_sign(a, b, c) <= 0 {
                        out.push(violation(format!(
                            "face {f} not strictly convex at {}",
                            self.target(e)
                        )));
                    }
                }
            }
        }
        if perimeter_total != nh {
            out.push(violation(format!(
                "face perimeters cover {perimeter_total} half-edges, expected {nh}"
            )));
        }

        // Euler characteristic for a planar subdivision of a disk plus the
        // outer face: V - E + F = 2.
        let v = nv as i64;
        let e = (nh / 2) as i64;
        let f = nf as i64;
        if v - e + f != 2 {
            out.push(violation(format!(
                "Euler characteristic V-E+F = {} (expected 2)",
                v - e + f
            )));
        }

        out
    }

    /// Stable digest of the mesh tables, used to pair memo tables with the
    /// mesh they were computed from.
    pub(crate) fn fingerprint(&self) -> u64 {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        for p in &self.vertices {
            p.x.to_bits().hash(&mut h);
            p.y.to_bits().hash(&mut h);
        }
        for he in &self.halfedges {
            he.origin.0.hash(&mut h);
            he.twin.0.hash(&mut h);
            he.next.0.hash(&mut h);
            he.face.0.hash(&mut h);
        }
        h.finish()
    }

    /// Canonical text serialization: compact JSON with vertices in id order
    /// and interior face cycles in face order. Reading it back and writing
    /// again reproduces the bytes exactly.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_file(None, None)).expect("mesh serialization")
    }

    pub fn from_json(text: &str) -> Result<Mesh, MeshError> {
        let file: MeshFile =
            serde_json::from_str(text).map_err(|e| MeshError::Parse(e.to_string()))?;
        file.build()
    }

    pub fn write_file(&self, path: &Path) -> Result<(), MeshError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn read_file(path: &Path) -> Result<Mesh, MeshError> {
        Mesh::from_json(&std::fs::read_to_string(path)?)
    }

    /// Replaces the diagonal `e` of the quadrilateral formed by its two
    /// adjacent triangles with the opposite diagonal, in place. The caller
    /// must ensure both faces are interior triangles and the quadrilateral
    /// is strictly convex; the mesh stays valid exactly under that contract.
    pub(crate) fn flip_edge(&mut self, e: HalfEdgeId) {
        let t = self.twin(e);
        let f1 = self.face(e);
        let f2 = self.face(t);
        debug_assert!(!self.is_outer(f1) && !self.is_outer(f2));
        let e1 = self.next(e);
        let e2 = self.next(e1);
        debug_assert_eq!(self.next(e2), e);
        let t1 = self.next(t);
        let t2 = self.next(t1);
        debug_assert_eq!(self.next(t2), t);
        let c = self.origin(e2);
        let d = self.origin(t2);

        // New triangles: (a, d, c) keeps e as d→c, (d, b, c) keeps t as c→d.
        self.halfedges[e.0].origin = d;
        self.halfedges[t.0].origin = c;
        self.halfedges[t1.0].next = e;
        self.halfedges[e.0].next = e2;
        self.halfedges[e2.0].next = t1;
        self.halfedges[t2.0].next = e1;
        self.halfedges[e1.0].next = t;
        self.halfedges[t.0].next = t2;
        self.halfedges[t1.0].face = f1;
        self.halfedges[e1.0].face = f2;
        self.faces[f1.0].edge = e;
        self.faces[f2.0].edge = t;
    }

    pub(crate) fn to_file(&self, start: Option<usize>, query: Option<(f64, f64)>) -> MeshFile {
        let vertices = self.vertices.iter().map(|p| (p.x, p.y)).collect();
        let mut faces = Vec::with_capacity(self.faces.len() - 1);
        for fi in 0..self.faces.len() {
            if self.faces[fi].is_outer {
                continue;
            }
            let cycle = self
                .face_perimeter(FaceId(fi))
                .expect("valid face id")
                .iter()
                .map(|&e| self.origin(e).0)
                .collect();
            faces.push(cycle);
        }
        MeshFile { vertices, faces, start, query }
    }
}

/// On-disk mesh form: vertices, interior face cycles, and (for walk
/// fixtures) an optional start half-edge and query point.
#[derive(Debug, Serialize, Deserialize)]
pub(crate) struct MeshFile {
    pub(crate) vertices: Vec<(f64, f64)>,
    pub(crate) faces: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub(crate) start: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub(crate) query: Option<(f64, f64)>,
}

impl MeshFile {
    pub(crate) fn build(&self) -> Result<Mesh, MeshError> {
        let points: Vec<Point> = self.vertices.iter().map(|&(x, y)| Point::new(x, y)).collect();
        build_mesh(&points, &self.faces)
    }
}

/// Builds a mesh from vertex coordinates and counter-clockwise interior
/// face cycles (vertex indices). Twins are wired by matching each directed
/// edge (u,v) with (v,u); directed edges left unmatched must form a single
/// closed hull cycle, which becomes the clockwise outer ring.
pub fn build_mesh(points: &[Point], face_cycles: &[Vec<usize>]) -> Result<Mesh, MeshError> {
    if points.iter().any(|p| !p.is_finite()) {
        return Err(MeshError::NonFinite);
    }

    let mut halfedges: Vec<HalfEdgeRec> = Vec::new();
    let mut faces: Vec<FaceRec> = Vec::new();
    let mut directed: HashMap<(usize, usize), HalfEdgeId> = HashMap::new();
    let invalid = HalfEdgeId(usize::MAX);

    for (ci, cycle) in face_cycles.iter().enumerate() {
        let n = cycle.len();
        if n < 3 {
            return Err(MeshError::ShortCycle { cycle: ci });
        }
        let mut seen = std::collections::HashSet::new();
        for &v in cycle {
            if v >= points.len() {
                return Err(MeshError::BadVertexIndex { cycle: ci, index: v });
            }
            if !seen.insert(v) {
                return Err(MeshError::RepeatedVertex { cycle: ci, index: v });
            }
        }
        for i in 0..n {
            let a = points[cycle[i]];
            let b = points[cycle[(i + 1) % n]];
            let c = points[cycle[(i + 2) % n]];
            if orient_sign(a, b, c) <= 0 {
                return Err(MeshError::NonConvexCycle { cycle: ci });
            }
        }

        let base = halfedges.len();
        for i in 0..n {
            let u = cycle[i];
            let v = cycle[(i + 1) % n];
            let he = HalfEdgeId(base + i);
            if directed.insert((u, v), he).is_some() {
                return Err(MeshError::DuplicateDirectedEdge { u, v });
            }
            halfedges.push(HalfEdgeRec {
                origin: VertexId(u),
                twin: invalid,
                next: HalfEdgeId(base + (i + 1) % n),
                face: FaceId(ci),
            });
        }
        faces.push(FaceRec { edge: HalfEdgeId(base), is_outer: false });
    }

    // Pair interior twins; collect hull edges still unmatched.
    let mut unmatched: Vec<(usize, usize, HalfEdgeId)> = Vec::new();
    for (&(u, v), &he) in &directed {
        match directed.get(&(v, u)) {
            Some(&other) => halfedges[he.0].twin = other,
            None => unmatched.push((u, v, he)),
        }
    }
    if unmatched.is_empty() {
        return Err(MeshError::BadBoundary);
    }
    unmatched.sort_by_key(|&(_, _, he)| he.0); // deterministic outer ids

    // Each unmatched interior edge u->v gets an outer twin v->u. The outer
    // ring is chained by origin: the successor of v->u starts at u.
    let outer_face = FaceId(faces.len());
    let mut outer_by_origin: HashMap<usize, HalfEdgeId> = HashMap::new();
    let outer_base = halfedges.len();
    for (i, &(_, v, he)) in unmatched.iter().enumerate() {
        let o = HalfEdgeId(outer_base + i);
        if outer_by_origin.insert(v, o).is_some() {
            return Err(MeshError::BadBoundary); // pinched hull vertex
        }
        halfedges[he.0].twin = o;
        halfedges.push(HalfEdgeRec {
            origin: VertexId(v),
            twin: he,
            next: invalid,
            face: outer_face,
        });
    }
    for &(u, _, he) in &unmatched {
        let o = halfedges[he.0].twin;
        let succ = *outer_by_origin.get(&u).ok_or(MeshError::BadBoundary)?;
        halfedges[o.0].next = succ;
    }
    faces.push(FaceRec { edge: HalfEdgeId(outer_base), is_outer: true });

    // The ring must close into a single cycle covering all outer edges.
    let ring_len = unmatched.len();
    let mut e = HalfEdgeId(outer_base);
    for _ in 0..ring_len {
        e = halfedges[e.0].next;
    }
    if e.0 != outer_base {
        return Err(MeshError::BadBoundary);
    }
    let mut seen = 0usize;
    let mut e = HalfEdgeId(outer_base);
    loop {
        seen += 1;
        e = halfedges[e.0].next;
        if e.0 == outer_base {
            break;
        }
        if seen > ring_len {
            return Err(MeshError::BadBoundary);
        }
    }
    if seen != ring_len {
        return Err(MeshError::BadBoundary);
    }

    let mesh = Mesh { vertices: points.to_vec(), halfedges, faces, outer: outer_face };
    let violations = mesh.validate();
    if !violations.is_empty() {
        return Err(MeshError::InvalidMesh(
            violations
                .iter()
                .map(|v| v.message.clone())
                .collect::<Vec<_>>()
                .join("; "),
        ));
    }
    Ok(mesh)
}

/// One bit per half-edge: whether the interior corner at the edge's target
/// (between the edge and its successor) is strictly obtuse. Outer-ring
/// entries stay false. Lets walks skip recomputing the corner test.
#[derive(Clone, Debug)]
pub struct ObtuseBits {
    bits: Vec<bool>,
    fingerprint: u64,
}

impl ObtuseBits {
    pub fn get(&self, e: HalfEdgeId) -> bool {
        self.bits[e.0]
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// True iff this table was computed from the given mesh.
    pub fn matches(&self, mesh: &Mesh) -> bool {
        self.bits.len() == mesh.halfedge_count() && self.fingerprint == mesh.fingerprint()
    }
}

/// Precomputes the per-half-edge obtuse-corner table for a mesh.
pub fn precompute_obtuse_bits(mesh: &Mesh) -> ObtuseBits {
    let mut bits = vec![false; mesh.halfedge_count()];
    for (i, bit) in bits.iter_mut().enumerate() {
        let e = HalfEdgeId(i);
        if mesh.is_outer(mesh.face(e)) {
            continue;
        }
        let (a, b) = mesh.edge_points(e);
        let c = mesh.point(mesh.target(mesh.next(e)));
        *bit = obtuse_sign(a, b, c) > 0;
    }
    ObtuseBits { bits, fingerprint: mesh.fingerprint() }
}
