//! Walk strategies for point location: given a mesh, a start half-edge, and
//! a query point, each walk traverses face adjacencies until it finds the
//! face containing the point (or crosses the hull, or gives up).
//!
//! Every walk produces a [`WalkTrace`]: the move-by-move step list (each
//! step reachable from its predecessor by a single `next` or `twin`
//! navigation), the face entry order, and counters for the predicate calls
//! the strategy actually paid for.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::Dyadic;
use crate::geom::{
    bisector_sign, celestial_distance, obtuse_sign, orient_sign, CelestialDistance, Point,
};
use crate::mesh::{FaceId, HalfEdgeId, Mesh, ObtuseBits};
use crate::rng::SplitMix64;

/// Single navigation move recorded in a trace. `CrossTwin` enters the
/// adjacent face, `AdvanceNext` moves the perimeter scan, and `ShiftPair`
/// is the celestial walk's corner-rounding move (also a `next` step).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WalkAction {
    CrossTwin,
    AdvanceNext,
    ShiftPair,
}

/// One recorded move; `edge` is the half-edge the walk is on after the move.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkStep {
    pub edge: HalfEdgeId,
    pub action: WalkAction,
}

/// Predicate-call counters. Orientation tests include both the
/// strictly-right perimeter tests and the bisector side tests; obtuse
/// corner checks are counted as table lookups when a memo table serves them.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub orientation_tests: u64,
    pub obtuse_tests: u64,
    pub memo_lookups: u64,
    pub distance_comparisons: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkTrace {
    pub steps: Vec<WalkStep>,
    /// Faces in entry order: the start face, then one entry per crossing.
    pub visited_faces: Vec<FaceId>,
    pub counters: Counters,
}

impl WalkTrace {
    pub fn count_action(&self, action: WalkAction) -> usize {
        self.steps.iter().filter(|s| s.action == action).count()
    }

    /// Number of face crossings (including a bootstrap twin-fix).
    pub fn crossings(&self) -> usize {
        self.count_action(WalkAction::CrossTwin)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbortReason {
    BudgetExhausted,
    CycleDetected,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WalkResult {
    /// Interior face whose closure contains the query point.
    Located(FaceId),
    /// The walk crossed hull edge `exit`: the query is strictly right of it
    /// and its twin borders the outer face. When the region boundary is
    /// convex this means the query lies outside the subdivision; on zig-zag
    /// boundaries it is only this local exit claim, since a hull edge's
    /// outer half-plane can overlap interior pockets elsewhere.
    Outside(HalfEdgeId),
    Aborted(AbortReason),
}

/// How the abstract walk picks among candidate successor edges.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SelectorStrategy {
    /// First candidate in perimeter scan order.
    FirstCandidate,
    /// Uniformly random candidate from a seeded generator.
    SeededRandom(u64),
    /// Candidate with the smallest distance (scan order breaks exact ties).
    GreedyMinDistance,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VisibilityVariant {
    /// Cross the first perimeter edge with the query strictly right.
    DeterministicFirst,
    /// Cross a uniformly random such edge.
    Stochastic(u64),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WalkError {
    #[error("start half-edge is out of range")]
    InvalidStart,
    #[error("start half-edge lies on the outer face")]
    OuterStart,
    #[error("query point has non-finite coordinates")]
    NonFinitePoint,
    #[error("walk budget must be positive")]
    ZeroBudget,
    #[error("obtuse-bit memo does not match this mesh")]
    MemoMismatch,
    #[error("trace file: {0}")]
    Parse(String),
}

/// Default step budget: generous enough that hitting it indicates a bug or
/// a genuine non-terminating strategy, never a long correct walk.
pub fn default_budget(mesh: &Mesh) -> usize {
    10 * mesh.halfedge_count()
}

fn validate_walk_input(
    mesh: &Mesh,
    start: HalfEdgeId,
    p: Point,
    budget: usize,
) -> Result<(), WalkError> {
    if !mesh.contains_halfedge(start) {
        return Err(WalkError::InvalidStart);
    }
    if mesh.is_outer(mesh.face(start)) {
        return Err(WalkError::OuterStart);
    }
    if !p.is_finite() {
        return Err(WalkError::NonFinitePoint);
    }
    if budget == 0 {
        return Err(WalkError::ZeroBudget);
    }
    Ok(())
}

/// Shared trace bookkeeping. Crossing moves append the entered face.
struct Tracer {
    trace: WalkTrace,
    crossings: usize,
    budget: usize,
}

impl Tracer {
    fn new(mesh: &Mesh, start: HalfEdgeId, budget: usize) -> Tracer {
        Tracer {
            trace: WalkTrace {
                steps: Vec::new(),
                visited_faces: vec![mesh.face(start)],
                counters: Counters::default(),
            },
            crossings: 0,
            budget,
        }
    }

    fn advance(&mut self, e: HalfEdgeId) {
        self.trace.steps.push(WalkStep { edge: e, action: WalkAction::AdvanceNext });
    }

    fn shift(&mut self, e: HalfEdgeId) {
        self.trace.steps.push(WalkStep { edge: e, action: WalkAction::ShiftPair });
    }

    fn can_cross(&self) -> bool {
        self.crossings < self.budget
    }

    fn cross(&mut self, mesh: &Mesh, entered: HalfEdgeId) {
        debug_assert!(self.can_cross());
        self.crossings += 1;
        self.trace.steps.push(WalkStep { edge: entered, action: WalkAction::CrossTwin });
        self.trace.visited_faces.push(mesh.face(entered));
    }

    /// Record the perimeter moves from `from` to the chosen edge `to`
    /// (exclusive of `from`, inclusive of `to`), so traces stay navigable
    /// even for strategies that conceptually jump to their pick.
    fn advance_chain(&mut self, mesh: &Mesh, from: HalfEdgeId, to: HalfEdgeId) {
        let mut cur = from;
        while cur != to {
            cur = mesh.next(cur);
            self.advance(cur);
        }
    }
}

/// Perimeter edges of the crossing sequence: for each `CrossTwin` step the
/// edge of the face being left (the twin of the entered edge).
pub fn crossed_edges(mesh: &Mesh, trace: &WalkTrace) -> Vec<HalfEdgeId> {
    trace
        .steps
        .iter()
        .filter(|s| s.action == WalkAction::CrossTwin)
        .map(|s| mesh.twin(s.edge))
        .collect()
}

fn strictly_right_of_edge(mesh: &Mesh, e: HalfEdgeId, p: Point) -> bool {
    let (a, b) = mesh.edge_points(e);
    orient_sign(a, b, p) < 0
}

fn edge_distance(mesh: &Mesh, e: HalfEdgeId, p: Point) -> CelestialDistance {
    let (a, b) = mesh.edge_points(e);
    celestial_distance(a, b, p).expect("validated mesh edge and finite point")
}

/// Bootstraps the invariant that the query is not strictly right of the
/// current edge, crossing to the twin if needed. Returns the fixed edge, or
/// an early walk result (hull exit or exhausted budget on the first move).
fn bootstrap(
    mesh: &Mesh,
    start: HalfEdgeId,
    p: Point,
    tr: &mut Tracer,
) -> Result<HalfEdgeId, WalkResult> {
    tr.trace.counters.orientation_tests += 1;
    if !strictly_right_of_edge(mesh, start, p) {
        return Ok(start);
    }
    if !tr.can_cross() {
        return Err(WalkResult::Aborted(AbortReason::BudgetExhausted));
    }
    let t = mesh.twin(start);
    tr.cross(mesh, t);
    if mesh.is_outer(mesh.face(t)) {
        return Err(WalkResult::Outside(start));
    }
    Ok(t)
}

/// Candidate successor edges for the distance-descent walk from `e`: twins
/// of the perimeter edges of face(e) that have p strictly on their right and
/// strictly smaller distance to p than e itself.
pub fn candidate_set(
    mesh: &Mesh,
    e: HalfEdgeId,
    p: Point,
) -> Result<Vec<HalfEdgeId>, WalkError> {
    validate_walk_input(mesh, e, p, 1)?;
    let dist_e = edge_distance(mesh, e, p);
    let mut counters = Counters::default();
    Ok(materialize_candidates(mesh, e, p, &dist_e, &mut counters)
        .into_iter()
        .map(|(edge, _)| mesh.twin(edge))
        .collect())
}

/// Scans face(e)'s perimeter and returns `(e', Dist(e'))` for each edge
/// satisfying the candidate condition, in scan order from next(e).
fn materialize_candidates(
    mesh: &Mesh,
    e: HalfEdgeId,
    p: Point,
    dist_e: &CelestialDistance,
    counters: &mut Counters,
) -> Vec<(HalfEdgeId, CelestialDistance)> {
    let mut out = Vec::new();
    let mut cur = mesh.next(e);
    while cur != e {
        counters.orientation_tests += 1;
        if strictly_right_of_edge(mesh, cur, p) {
            let d = edge_distance(mesh, cur, p);
            counters.distance_comparisons += 1;
            if crate::geom::cd_less(&d, dist_e) {
                out.push((cur, d));
            }
        }
        cur = mesh.next(cur);
    }
    out
}

/// Distance-descent walk: repeatedly materializes the candidate set over
/// the current face and crosses the selector's pick; locates the face when
/// no candidate improves the distance.
pub fn abstract_walk(
    mesh: &Mesh,
    start: HalfEdgeId,
    p: Point,
    sel: SelectorStrategy,
    budget: usize,
) -> Result<(WalkResult, WalkTrace), WalkError> {
    validate_walk_input(mesh, start, p, budget)?;
    let mut rng = match sel {
        SelectorStrategy::SeededRandom(seed) => Some(SplitMix64::new(seed)),
        _ => None,
    };
    let mut tr = Tracer::new(mesh, start, budget);

    let mut e = match bootstrap(mesh, start, p, &mut tr) {
        Ok(e) => e,
        Err(result) => return Ok((result, tr.trace)),
    };
    let mut dist_e = edge_distance(mesh, e, p);

    loop {
        let cands = materialize_candidates(mesh, e, p, &dist_e, &mut tr.trace.counters);
        if cands.is_empty() {
            return Ok((WalkResult::Located(mesh.face(e)), tr.trace));
        }
        let pick = match sel {
            SelectorStrategy::FirstCandidate => 0,
            SelectorStrategy::SeededRandom(_) => {
                rng.as_mut().expect("rng for seeded selector").next_below(cands.len() as u64)
                    as usize
            }
            SelectorStrategy::GreedyMinDistance => {
                let mut best = 0;
                for i in 1..cands.len() {
                    tr.trace.counters.distance_comparisons += 1;
                    if crate::geom::cd_less(&cands[i].1, &cands[best].1) {
                        best = i;
                    }
                }
                best
            }
        };
        let (chosen, chosen_dist) = {
            let (c, d) = &cands[pick];
            (*c, d.clone())
        };
        if !tr.can_cross() {
            return Ok((WalkResult::Aborted(AbortReason::BudgetExhausted), tr.trace));
        }
        tr.advance_chain(mesh, e, chosen);
        let t = mesh.twin(chosen);
        tr.cross(mesh, t);
        if mesh.is_outer(mesh.face(t)) {
            return Ok((WalkResult::Outside(chosen), tr.trace));
        }
        e = t;
        // Dist is direction-independent, so the selected edge's distance is
        // the new reference.
        dist_e = chosen_dist;
    }
}

/// Orientation-only walk over strictly convex faces. Scans the perimeter;
/// on finding the query strictly right of an edge, rounds the corner past
/// consecutive obtuse corners whose approximate bisector keeps the query on
/// the far side, then crosses. Terminates on arbitrary convex subdivisions.
pub fn celestial_walk(
    mesh: &Mesh,
    start: HalfEdgeId,
    p: Point,
    budget: usize,
    memo: Option<&ObtuseBits>,
) -> Result<(WalkResult, WalkTrace), WalkError> {
    validate_walk_input(mesh, start, p, budget)?;
    if let Some(bits) = memo {
        if !bits.matches(mesh) {
            return Err(WalkError::MemoMismatch);
        }
    }
    let mut tr = Tracer::new(mesh, start, budget);

    let mut e = match bootstrap(mesh, start, p, &mut tr) {
        Ok(e) => e,
        Err(result) => return Ok((result, tr.trace)),
    };
    let mut scan = mesh.next(e);
    tr.advance(scan);

    while scan != e {
        tr.trace.counters.orientation_tests += 1;
        if strictly_right_of_edge(mesh, scan, p) {
            // Round the corner: shift the (scan, next) pair while the corner
            // is obtuse and p stays left of its approximate bisector.
            let mut shifts = 0usize;
            loop {
                let second = mesh.next(scan);
                let is_obtuse = match memo {
                    Some(bits) => {
                        tr.trace.counters.memo_lookups += 1;
                        bits.get(scan)
                    }
                    None => {
                        tr.trace.counters.obtuse_tests += 1;
                        let (a, b) = mesh.edge_points(scan);
                        let c = mesh.point(mesh.target(second));
                        obtuse_sign(a, b, c) > 0
                    }
                };
                if !is_obtuse {
                    break;
                }
                let (a, b) = mesh.edge_points(scan);
                let c = mesh.point(mesh.target(second));
                tr.trace.counters.orientation_tests += 1;
                if bisector_sign(a, b, c, p) <= 0 {
                    break;
                }
                scan = second;
                tr.shift(scan);
                shifts += 1;
                if shifts > mesh.halfedge_count() {
                    // Unreachable on a valid mesh; bug detector.
                    return Ok((WalkResult::Aborted(AbortReason::BudgetExhausted), tr.trace));
                }
            }
            if !tr.can_cross() {
                return Ok((WalkResult::Aborted(AbortReason::BudgetExhausted), tr.trace));
            }
            let t = mesh.twin(scan);
            tr.cross(mesh, t);
            if mesh.is_outer(mesh.face(t)) {
                return Ok((WalkResult::Outside(scan), tr.trace));
            }
            e = t;
            scan = mesh.next(e);
            tr.advance(scan);
        } else {
            scan = mesh.next(scan);
            tr.advance(scan);
        }
    }
    Ok((WalkResult::Located(mesh.face(e)), tr.trace))
}

/// Classic visibility walk: cross any perimeter edge with the query
/// strictly on its far side. Terminates on Delaunay triangulations but can
/// loop on general subdivisions, so entry states are tracked and a repeat
/// aborts with `CycleDetected`.
pub fn visibility_walk(
    mesh: &Mesh,
    start: HalfEdgeId,
    p: Point,
    variant: VisibilityVariant,
    budget: usize,
) -> Result<(WalkResult, WalkTrace), WalkError> {
    validate_walk_input(mesh, start, p, budget)?;
    let mut rng = match variant {
        VisibilityVariant::Stochastic(seed) => Some(SplitMix64::new(seed)),
        VisibilityVariant::DeterministicFirst => None,
    };
    let mut tr = Tracer::new(mesh, start, budget);

    let mut e = match bootstrap(mesh, start, p, &mut tr) {
        Ok(e) => e,
        Err(result) => return Ok((result, tr.trace)),
    };
    let mut visited: HashSet<HalfEdgeId> = HashSet::new();
    visited.insert(e);

    loop {
        // The entry edge itself never qualifies (p is not strictly right of
        // it), so scan the rest of the perimeter.
        let mut chosen: Option<HalfEdgeId> = None;
        let mut candidates: Vec<HalfEdgeId> = Vec::new();
        let mut cur = mesh.next(e);
        while cur != e {
            tr.trace.counters.orientation_tests += 1;
            if strictly_right_of_edge(mesh, cur, p) {
                match variant {
                    VisibilityVariant::DeterministicFirst => {
                        chosen = Some(cur);
                        break;
                    }
                    VisibilityVariant::Stochastic(_) => candidates.push(cur),
                }
            }
            cur = mesh.next(cur);
        }
        if chosen.is_none() && !candidates.is_empty() {
            let i = rng
                .as_mut()
                .expect("rng for stochastic variant")
                .next_below(candidates.len() as u64) as usize;
            chosen = Some(candidates[i]);
        }
        let Some(exit) = chosen else {
            return Ok((WalkResult::Located(mesh.face(e)), tr.trace));
        };
        if !tr.can_cross() {
            return Ok((WalkResult::Aborted(AbortReason::BudgetExhausted), tr.trace));
        }
        tr.advance_chain(mesh, e, exit);
        let t = mesh.twin(exit);
        tr.cross(mesh, t);
        if mesh.is_outer(mesh.face(t)) {
            return Ok((WalkResult::Outside(exit), tr.trace));
        }
        e = t;
        if !visited.insert(e) {
            return Ok((WalkResult::Aborted(AbortReason::CycleDetected), tr.trace));
        }
    }
}

/// Exact side of a perimeter vertex relative to the directed anchor→query
/// line, with on-line vertices perturbed to the left. The anchor is carried
/// as an exact vertex-sum centroid (sum, count), so the test never rounds.
struct SegmentSides {
    /// count·p − sum, the query direction scaled by the vertex count.
    px: Dyadic,
    py: Dyadic,
    sx: Dyadic,
    sy: Dyadic,
    count: Dyadic,
}

impl SegmentSides {
    fn new(mesh: &Mesh, anchor_face: FaceId, p: Point) -> SegmentSides {
        let per = mesh.face_perimeter(anchor_face).expect("interior face");
        let mut sx = Dyadic::zero();
        let mut sy = Dyadic::zero();
        for &e in &per {
            let v = mesh.point(mesh.origin(e));
            sx = sx + Dyadic::from_f64(v.x);
            sy = sy + Dyadic::from_f64(v.y);
        }
        let count = Dyadic::from_f64(per.len() as f64);
        let px = count.clone() * Dyadic::from_f64(p.x) - sx.clone();
        let py = count.clone() * Dyadic::from_f64(p.y) - sy.clone();
        SegmentSides { px, py, sx, sy, count }
    }

    /// True iff v is (perturbed-)left of the anchor→query line.
    fn left_of_line(&self, v: Point) -> bool {
        let vx = self.count.clone() * Dyadic::from_f64(v.x) - self.sx.clone();
        let vy = self.count.clone() * Dyadic::from_f64(v.y) - self.sy.clone();
        let cross = self.px.clone() * vy - self.py.clone() * vx;
        cross.signum() >= 0
    }
}

/// Walks the straight segment from the start face's centroid to the query,
/// visiting exactly the faces the (symbolically perturbed) segment crosses.
/// Not oblivious: the anchor is carried for the whole walk.
pub fn straight_walk(
    mesh: &Mesh,
    start: HalfEdgeId,
    p: Point,
    budget: usize,
) -> Result<(WalkResult, WalkTrace), WalkError> {
    validate_walk_input(mesh, start, p, budget)?;
    let mut tr = Tracer::new(mesh, start, budget);
    let sides = SegmentSides::new(mesh, mesh.face(start), p);

    let mut entry = start;
    loop {
        let f = mesh.face(entry);
        let per = mesh.face_perimeter(f).expect("interior face");

        let mut inside = true;
        for &e in &per {
            tr.trace.counters.orientation_tests += 1;
            if strictly_right_of_edge(mesh, e, p) {
                inside = false;
                break;
            }
        }
        if inside {
            return Ok((WalkResult::Located(f), tr.trace));
        }

        // Exit edge: origin strictly right of the segment line, target
        // (perturbed-)left. Exactly one perimeter edge matches.
        let mut exit: Option<HalfEdgeId> = None;
        let mut left: Vec<bool> = Vec::with_capacity(per.len());
        for &e in &per {
            tr.trace.counters.orientation_tests += 1;
            left.push(sides.left_of_line(mesh.point(mesh.origin(e))));
        }
        for (i, &e) in per.iter().enumerate() {
            let origin_left = left[i];
            let target_left = left[(i + 1) % per.len()];
            if !origin_left && target_left {
                exit = Some(e);
                break;
            }
        }
        let exit = exit.expect("segment leaves a face it does not contain");

        if !tr.can_cross() {
            return Ok((WalkResult::Aborted(AbortReason::BudgetExhausted), tr.trace));
        }
        tr.advance_chain(mesh, entry, exit);
        let t = mesh.twin(exit);
        tr.cross(mesh, t);
        if mesh.is_outer(mesh.face(t)) {
            return Ok((WalkResult::Outside(exit), tr.trace));
        }
        entry = t;
    }
}

/// On-disk trace form with a stable field order, for golden-file tests and
/// the SVG renderer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceFile {
    pub start: usize,
    pub query: (f64, f64),
    pub steps: Vec<WalkStep>,
    pub visited_faces: Vec<FaceId>,
    pub counters: Counters,
    pub result: WalkResult,
}

impl TraceFile {
    pub fn new(start: HalfEdgeId, query: Point, trace: &WalkTrace, result: WalkResult) -> TraceFile {
        TraceFile {
            start: start.index(),
            query: (query.x, query.y),
            steps: trace.steps.clone(),
            visited_faces: trace.visited_faces.clone(),
            counters: trace.counters,
            result,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("trace serialization")
    }

    pub fn from_json(text: &str) -> Result<TraceFile, WalkError> {
        serde_json::from_str(text).map_err(|e| WalkError::Parse(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::cd_less;
    use crate::mesh::{build_mesh, precompute_obtuse_bits};

    fn pt(x: f64, y: f64) -> Point {
        Point::new(x, y)
    }

    /// Unit square split by the diagonal (0,0)-(1,1):
    /// h0..h2 = face 0 cycle [0,1,2], h3..h5 = face 1 cycle [0,2,3],
    /// h2/h3 are the diagonal twins.
    fn two_triangle_square() -> Mesh {
        let points = [pt(0.0, 0.0), pt(1.0, 0.0), pt(1.0, 1.0), pt(0.0, 1.0)];
        build_mesh(&points, &[vec![0, 1, 2], vec![0, 2, 3]]).unwrap()
    }

    fn he(i: usize) -> HalfEdgeId {
        HalfEdgeId::new(i)
    }

    fn fid(i: usize) -> FaceId {
        FaceId::new(i)
    }

    #[test]
    fn abstract_walk_crosses_diagonal_once() {
        let m = two_triangle_square();
        let p = pt(0.2, 0.8);
        for sel in [
            SelectorStrategy::FirstCandidate,
            SelectorStrategy::SeededRandom(7),
            SelectorStrategy::GreedyMinDistance,
        ] {
            let (result, trace) = abstract_walk(&m, he(0), p, sel, 100).unwrap();
            assert_eq!(result, WalkResult::Located(fid(1)), "{sel:?}");
            assert_eq!(trace.crossings(), 1);
            assert_eq!(trace.visited_faces, vec![fid(0), fid(1)]);
            assert_eq!(crossed_edges(&m, &trace), vec![he(2)]);
            assert!(m.point_in_face(fid(1), p).unwrap());
        }
    }

    #[test]
    fn abstract_walk_point_in_start_face() {
        let m = two_triangle_square();
        let (result, trace) =
            abstract_walk(&m, he(0), pt(0.7, 0.2), SelectorStrategy::FirstCandidate, 100).unwrap();
        assert_eq!(result, WalkResult::Located(fid(0)));
        assert_eq!(trace.crossings(), 0);
    }

    #[test]
    fn candidate_set_on_square() {
        let m = two_triangle_square();
        // Only the diagonal improves: its twin is the sole candidate.
        assert_eq!(candidate_set(&m, he(0), pt(0.2, 0.8)).unwrap(), vec![he(3)]);
        // Query inside the face: empty set.
        assert_eq!(candidate_set(&m, he(0), pt(0.7, 0.2)).unwrap(), Vec::<HalfEdgeId>::new());
    }

    #[test]
    fn celestial_walk_hand_trace() {
        let m = two_triangle_square();
        let p = pt(0.2, 0.8);
        let (result, trace) = celestial_walk(&m, he(0), p, 100, None).unwrap();
        assert_eq!(result, WalkResult::Located(fid(1)));
        let expected_steps = vec![
            WalkStep { edge: he(1), action: WalkAction::AdvanceNext },
            WalkStep { edge: he(2), action: WalkAction::AdvanceNext },
            WalkStep { edge: he(3), action: WalkAction::CrossTwin },
            WalkStep { edge: he(4), action: WalkAction::AdvanceNext },
            WalkStep { edge: he(5), action: WalkAction::AdvanceNext },
            WalkStep { edge: he(3), action: WalkAction::AdvanceNext },
        ];
        assert_eq!(trace.steps, expected_steps);
        assert_eq!(trace.counters.orientation_tests, 5);
        assert_eq!(trace.counters.obtuse_tests, 1);
        assert_eq!(trace.counters.memo_lookups, 0);
        assert_eq!(trace.visited_faces, vec![fid(0), fid(1)]);

        // Memoized run: identical moves, obtuse test served by the table.
        let bits = precompute_obtuse_bits(&m);
        let (result2, trace2) = celestial_walk(&m, he(0), p, 100, Some(&bits)).unwrap();
        assert_eq!(result2, result);
        assert_eq!(trace2.steps, trace.steps);
        assert_eq!(trace2.counters.orientation_tests, 5);
        assert_eq!(trace2.counters.obtuse_tests, 0);
        assert_eq!(trace2.counters.memo_lookups, 1);
    }

    #[test]
    fn celestial_walk_point_in_start_face_scans_once() {
        let m = two_triangle_square();
        let (result, trace) = celestial_walk(&m, he(0), pt(0.7, 0.2), 100, None).unwrap();
        assert_eq!(result, WalkResult::Located(fid(0)));
        assert_eq!(trace.crossings(), 0);
        // Bootstrap + two perimeter edges tested.
        assert_eq!(trace.counters.orientation_tests, 3);
    }

    #[test]
    fn bootstrap_twin_fix_crosses_to_containing_side() {
        let m = two_triangle_square();
        let p = pt(0.7, 0.2); // in face 0, start on face 1's diagonal edge
        let (result, trace) = celestial_walk(&m, he(3), p, 100, None).unwrap();
        assert_eq!(result, WalkResult::Located(fid(0)));
        assert_eq!(trace.crossings(), 1);
        assert_eq!(trace.visited_faces, vec![fid(1), fid(0)]);
    }

    #[test]
    fn walks_report_outside_through_hull() {
        let m = two_triangle_square();
        let p = pt(0.5, -1.0);
        let budget = default_budget(&m);
        let expected = WalkResult::Outside(he(0));
        let (r1, _) = celestial_walk(&m, he(0), p, budget, None).unwrap();
        let (r2, _) =
            abstract_walk(&m, he(0), p, SelectorStrategy::FirstCandidate, budget).unwrap();
        let (r3, _) =
            visibility_walk(&m, he(0), p, VisibilityVariant::DeterministicFirst, budget).unwrap();
        let (r4, _) = straight_walk(&m, he(0), p, budget).unwrap();
        for (i, r) in [r1, r2, r3, r4].into_iter().enumerate() {
            assert_eq!(r, expected, "walk {i}");
        }
    }

    #[test]
    fn exterior_query_exits_far_side() {
        let m = two_triangle_square();
        let p = pt(-1.0, 2.0);
        let (result, trace) = celestial_walk(&m, he(0), p, 100, None).unwrap();
        assert_eq!(result, WalkResult::Outside(he(4)));
        assert_eq!(trace.crossings(), 2); // diagonal, then hull
    }

    #[test]
    fn budget_exhaustion_aborts() {
        let m = two_triangle_square();
        let p = pt(-1.0, 2.0); // needs two crossings
        let (result, _) = celestial_walk(&m, he(0), p, 1, None).unwrap();
        assert_eq!(result, WalkResult::Aborted(AbortReason::BudgetExhausted));
    }

    #[test]
    fn visibility_walk_locates_and_bootstraps() {
        let m = two_triangle_square();
        for variant in [VisibilityVariant::DeterministicFirst, VisibilityVariant::Stochastic(3)] {
            let (result, trace) = visibility_walk(&m, he(0), pt(0.2, 0.8), variant, 100).unwrap();
            assert_eq!(result, WalkResult::Located(fid(1)), "{variant:?}");
            assert_eq!(trace.crossings(), 1);
            let (result, _) = visibility_walk(&m, he(3), pt(0.7, 0.2), variant, 100).unwrap();
            assert_eq!(result, WalkResult::Located(fid(0)), "{variant:?}");
        }
    }

    #[test]
    fn straight_walk_visits_segment_faces() {
        let m = two_triangle_square();
        let (result, trace) = straight_walk(&m, he(0), pt(0.2, 0.8), 100).unwrap();
        assert_eq!(result, WalkResult::Located(fid(1)));
        assert_eq!(trace.visited_faces, vec![fid(0), fid(1)]);
        assert_eq!(crossed_edges(&m, &trace), vec![he(2)]);

        let (result, trace) = straight_walk(&m, he(0), pt(0.7, 0.2), 100).unwrap();
        assert_eq!(result, WalkResult::Located(fid(0)));
        assert_eq!(trace.visited_faces, vec![fid(0)]);
    }

    #[test]
    fn straight_walk_hits_shared_vertex_consistently() {
        // Query placed so the segment from face 0's centroid passes exactly
        // through the shared diagonal vertex (0,0): centroid = (2/3, 1/3),
        // target chosen collinear with (0,0) beyond it. The perturbation
        // must route the walk without getting stuck.
        let m = two_triangle_square();
        let q = pt(2.0 / 3.0, 1.0 / 3.0);
        // p on the ray through (0,0): p = q + 2·((0,0) − q) — but inside the
        // plane beyond the square, so the walk exits the hull.
        let p = pt(q.x - 2.0 * q.x, q.y - 2.0 * q.y);
        let (result, _) = straight_walk(&m, he(0), p, 100).unwrap();
        match result {
            WalkResult::Outside(e) => {
                assert!(m.is_outer(m.face(m.twin(e))));
            }
            other => panic!("expected hull exit, got {other:?}"),
        }
    }

    #[test]
    fn monotone_distance_along_crossings() {
        let m = two_triangle_square();
        let p = pt(-1.0, 2.0);
        let (_, trace) = celestial_walk(&m, he(1), p, 100, None).unwrap();
        let crossed = crossed_edges(&m, &trace);
        assert!(!crossed.is_empty());
        for w in crossed.windows(2) {
            let (a0, b0) = m.edge_points(w[0]);
            let (a1, b1) = m.edge_points(w[1]);
            let d0 = celestial_distance(a0, b0, p).unwrap();
            let d1 = celestial_distance(a1, b1, p).unwrap();
            assert!(cd_less(&d1, &d0));
        }
    }

    #[test]
    fn walk_input_validation() {
        let m = two_triangle_square();
        let p = pt(0.5, 0.5);
        assert_eq!(
            celestial_walk(&m, he(99), p, 10, None).unwrap_err(),
            WalkError::InvalidStart
        );
        assert_eq!(
            celestial_walk(&m, he(7), p, 10, None).unwrap_err(),
            WalkError::OuterStart
        );
        assert_eq!(
            celestial_walk(&m, he(0), pt(f64::NAN, 0.0), 10, None).unwrap_err(),
            WalkError::NonFinitePoint
        );
        assert_eq!(
            celestial_walk(&m, he(0), p, 0, None).unwrap_err(),
            WalkError::ZeroBudget
        );
        let other = build_mesh(
            &[pt(0.0, 0.0), pt(2.0, 0.0), pt(0.0, 2.0)],
            &[vec![0, 1, 2]],
        )
        .unwrap();
        let bits = precompute_obtuse_bits(&other);
        assert_eq!(
            celestial_walk(&m, he(0), p, 10, Some(&bits)).unwrap_err(),
            WalkError::MemoMismatch
        );
    }

    #[test]
    fn steps_obey_navigation_reachability() {
        let m = two_triangle_square();
        for p in [pt(0.2, 0.8), pt(0.7, 0.2), pt(-1.0, 2.0), pt(0.5, -1.0)] {
            for start in 0..6 {
                let runs: Vec<WalkTrace> = vec![
                    celestial_walk(&m, he(start), p, 100, None).unwrap().1,
                    abstract_walk(&m, he(start), p, SelectorStrategy::GreedyMinDistance, 100)
                        .unwrap()
                        .1,
                    visibility_walk(&m, he(start), p, VisibilityVariant::Stochastic(5), 100)
                        .unwrap()
                        .1,
                    straight_walk(&m, he(start), p, 100).unwrap().1,
                ];
                for trace in runs {
                    let mut prev = he(start);
                    for step in &trace.steps {
                        let ok = step.edge == m.next(prev) || step.edge == m.twin(prev);
                        assert!(ok, "step {step:?} unreachable from {prev:?}");
                        prev = step.edge;
                    }
                }
            }
        }
    }

    #[test]
    fn trace_file_round_trip_and_field_order() {
        let m = two_triangle_square();
        let p = pt(0.2, 0.8);
        let (result, trace) = celestial_walk(&m, he(0), p, 100, None).unwrap();
        let file = TraceFile::new(he(0), p, &trace, result);
        let json = file.to_json();
        let expected = concat!(
            r#"{"start":0,"query":[0.2,0.8],"steps":["#,
            r#"{"edge":1,"action":"advance_next"},"#,
            r#"{"edge":2,"action":"advance_next"},"#,
            r#"{"edge":3,"action":"cross_twin"},"#,
            r#"{"edge":4,"action":"advance_next"},"#,
            r#"{"edge":5,"action":"advance_next"},"#,
            r#"{"edge":3,"action":"advance_next"}],"#,
            r#""visited_faces":[0,1],"#,
            r#""counters":{"orientation_tests":5,"obtuse_tests":1,"memo_lookups":0,"distance_comparisons":0},"#,
            r#""result":{"located":1}}"#
        );
        assert_eq!(json, expected);
        assert_eq!(TraceFile::from_json(&json).unwrap(), file);
    }
}
