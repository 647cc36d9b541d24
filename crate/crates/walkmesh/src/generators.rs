//! Deterministic, seedable constructors of test subdivisions: hexagonal
//! grids, Delaunay triangulations, flip-perturbed (non-Delaunay)
//! triangulations, chord-split convex subdivisions, and a searcher for
//! inputs that make the plain visibility walk loop.
//!
//! Determinism contract: identical parameters and seed produce
//! byte-identical serialized meshes. All randomness flows through
//! [`SplitMix64`], and no construction step iterates a hash map in
//! arbitrary order.

use std::collections::{BTreeMap, HashMap};

use robust::{incircle, Coord};
use thiserror::Error;

use crate::geom::{orient_sign, Point};
use crate::mesh::{build_mesh, FaceId, HalfEdgeId, Mesh, MeshError};
use crate::rng::SplitMix64;
use crate::walks::{
    celestial_walk, default_budget, visibility_walk, AbortReason, VisibilityVariant, WalkResult,
};

#[derive(Debug, Error)]
pub enum GenError {
    #[error("rows and cols must both be at least 1")]
    EmptyGrid,
    #[error("edge length must be positive and finite")]
    BadEdgeLength,
    #[error("need at least 3 points")]
    TooFewPoints,
    #[error("all input points are collinear")]
    Collinear,
    #[error("non-finite point at index {0}")]
    NonFinitePoint(usize),
    #[error("duplicate point at index {0}")]
    DuplicatePoint(usize),
    #[error("input mesh is not a triangulation")]
    NotATriangulation,
    #[error("could not find {missing} more legal flips within the attempt budget")]
    FlipSearchExhausted { missing: usize },
    #[error("bounding rectangle is degenerate or non-finite")]
    BadRect,
    #[error("internal construction error: {0}")]
    Internal(&'static str),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

/// Axis-aligned rectangle (xmin < xmax, ymin < ymax).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub xmin: f64,
    pub ymin: f64,
    pub xmax: f64,
    pub ymax: f64,
}

impl Rect {
    pub fn new(xmin: f64, ymin: f64, xmax: f64, ymax: f64) -> Rect {
        Rect { xmin, ymin, xmax, ymax }
    }

    fn is_valid(&self) -> bool {
        self.xmin.is_finite()
            && self.ymin.is_finite()
            && self.xmax.is_finite()
            && self.ymax.is_finite()
            && self.xmin < self.xmax
            && self.ymin < self.ymax
    }
}

/// Regular hexagonal grid in an offset packing: `rows × cols` cells with
/// side length `edge_len`, every interior corner angle 2π/3.
///
/// Corners live on a half-unit lattice (x in multiples of √3/2·len, y in
/// multiples of len/2), so cells share corner coordinates bit-exactly.
pub fn hex_grid(rows: usize, cols: usize, edge_len: f64) -> Result<Mesh, GenError> {
    if rows == 0 || cols == 0 {
        return Err(GenError::EmptyGrid);
    }
    if !(edge_len.is_finite() && edge_len > 0.0) {
        return Err(GenError::BadEdgeLength);
    }
    let ux = 3.0f64.sqrt() / 2.0 * edge_len;
    let uy = 0.5 * edge_len;
    let mut points: Vec<Point> = Vec::new();
    let mut index: HashMap<(i64, i64), usize> = HashMap::new();
    let mut cycles: Vec<Vec<usize>> = Vec::with_capacity(rows * cols);
    // Counter-clockwise corner offsets from a cell center, in lattice units.
    const CORNERS: [(i64, i64); 6] = [(0, -2), (1, -1), (1, 1), (0, 2), (-1, 1), (-1, -1)];
    for r in 0..rows {
        for c in 0..cols {
            let cx = 2 * c as i64 + (r as i64 & 1);
            let cy = 3 * r as i64;
            let mut cycle = Vec::with_capacity(6);
            for (dx, dy) in CORNERS {
                let key = (cx + dx, cy + dy);
                let id = *index.entry(key).or_insert_with(|| {
                    points.push(Point::new(key.0 as f64 * ux, key.1 as f64 * uy));
                    points.len() - 1
                });
                cycle.push(id);
            }
            cycles.push(cycle);
        }
    }
    Ok(build_mesh(&points, &cycles)?)
}

const NONE: usize = usize::MAX;

#[derive(Clone, Copy)]
struct HullEdge {
    to: usize,
    tri: usize,
    side: usize,
}

/// Editable triangle soup used only while building a Delaunay
/// triangulation; exported to a [`Mesh`] once at the end.
struct Soup<'a> {
    pts: &'a [Point],
    tri: Vec<[usize; 3]>,
    /// Neighbor triangle across side i = (v[i], v[(i+1)%3]); NONE on hull.
    nbr: Vec<[usize; 3]>,
    /// Hull edges keyed by origin vertex (the hull is a single cycle).
    hull: BTreeMap<usize, HullEdge>,
    /// Seed triangle for point location.
    last: usize,
    /// Edges awaiting a Delaunay check, as (triangle, side).
    pending: Vec<(usize, usize)>,
}

enum Loc {
    Inside(usize),
    OnEdge(usize, usize),
    Outside,
}

fn on_open_segment(a: Point, b: Point, p: Point) -> bool {
    // Caller guarantees exact collinearity; compare along the wider axis.
    if (b.x - a.x).abs() >= (b.y - a.y).abs() {
        p.x > a.x.min(b.x) && p.x < a.x.max(b.x)
    } else {
        p.y > a.y.min(b.y) && p.y < a.y.max(b.y)
    }
}

impl<'a> Soup<'a> {
    fn orient(&self, a: usize, b: usize, c: usize) -> i32 {
        orient_sign(self.pts[a], self.pts[b], self.pts[c])
    }

    fn coord(&self, v: usize) -> Coord<f64> {
        Coord { x: self.pts[v].x, y: self.pts[v].y }
    }

    fn side_in(&self, t: usize, a: usize, b: usize) -> usize {
        (0..3)
            .find(|&i| self.tri[t][i] == a && self.tri[t][(i + 1) % 3] == b)
            .expect("directed edge present in triangle")
    }

    /// Redirects the neighbor that currently points at `old` to `new`.
    fn set_backref(&mut self, nbr_tri: usize, old: usize, new: usize) {
        if nbr_tri == NONE {
            return;
        }
        for i in 0..3 {
            if self.nbr[nbr_tri][i] == old {
                self.nbr[nbr_tri][i] = new;
                return;
            }
        }
        debug_assert!(false, "missing neighbor backreference");
    }

    /// Re-registers hull entries for every NONE side of triangle `t`.
    fn refresh_hull(&mut self, t: usize) {
        for i in 0..3 {
            if self.nbr[t][i] == NONE {
                let from = self.tri[t][i];
                let to = self.tri[t][(i + 1) % 3];
                self.hull.insert(from, HullEdge { to, tri: t, side: i });
            }
        }
    }

    fn alloc(&mut self) -> usize {
        self.tri.push([NONE; 3]);
        self.nbr.push([NONE; 3]);
        self.tri.len() - 1
    }

    fn write(&mut self, slot: usize, v: [usize; 3], n: [usize; 3]) {
        self.tri[slot] = v;
        self.nbr[slot] = n;
    }

    fn locate(&self, p: usize) -> Result<Loc, GenError> {
        let mut t = self.last;
        let cap = 3 * self.tri.len() + 16;
        for _ in 0..cap {
            let mut zero_side = None;
            let mut moved = false;
            for i in 0..3 {
                let a = self.tri[t][i];
                let b = self.tri[t][(i + 1) % 3];
                match self.orient(a, b, p) {
                    s if s < 0 => {
                        let n = self.nbr[t][i];
                        if n == NONE {
                            return Ok(Loc::Outside);
                        }
                        t = n;
                        moved = true;
                        break;
                    }
                    0 => zero_side = Some(i),
                    _ => {}
                }
            }
            if moved {
                continue;
            }
            match zero_side {
                None => return Ok(Loc::Inside(t)),
                Some(i) => {
                    let a = self.tri[t][i];
                    let b = self.tri[t][(i + 1) % 3];
                    if on_open_segment(self.pts[a], self.pts[b], self.pts[p]) {
                        return Ok(Loc::OnEdge(t, i));
                    }
                    // Collinear but beyond the segment: pass through.
                    let n = self.nbr[t][i];
                    if n == NONE {
                        return Ok(Loc::Outside);
                    }
                    t = n;
                }
            }
        }
        Err(GenError::Internal("point location walk exceeded its step cap"))
    }

    /// Splits triangle t into three around an interior point p.
    fn three_split(&mut self, t: usize, p: usize) {
        let [a, b, c] = self.tri[t];
        let [nab, nbc, nca] = self.nbr[t];
        let t2 = self.alloc();
        let t3 = self.alloc();
        self.write(t, [a, b, p], [nab, t2, t3]);
        self.write(t2, [b, c, p], [nbc, t3, t]);
        self.write(t3, [c, a, p], [nca, t, t2]);
        self.set_backref(nbc, t, t2);
        self.set_backref(nca, t, t3);
        self.refresh_hull(t);
        self.refresh_hull(t2);
        self.refresh_hull(t3);
        self.last = t3;
        self.pending.push((t, 0));
        self.pending.push((t2, 0));
        self.pending.push((t3, 0));
    }

    /// Splits the two triangles sharing interior edge (t, side) around a
    /// point p lying exactly on that open edge.
    fn four_split(&mut self, t: usize, side: usize, p: usize) {
        let a = self.tri[t][side];
        let b = self.tri[t][(side + 1) % 3];
        let c = self.tri[t][(side + 2) % 3];
        let u = self.nbr[t][side];
        let j = self.side_in(u, b, a);
        let d = self.tri[u][(j + 2) % 3];
        let nbc = self.nbr[t][(side + 1) % 3];
        let nca = self.nbr[t][(side + 2) % 3];
        let nad = self.nbr[u][(j + 1) % 3];
        let ndb = self.nbr[u][(j + 2) % 3];
        let t2 = self.alloc();
        let u2 = self.alloc();
        self.write(t, [a, p, c], [u2, t2, nca]);
        self.write(t2, [p, b, c], [u, nbc, t]);
        self.write(u, [b, p, d], [t2, u2, ndb]);
        self.write(u2, [p, a, d], [t, nad, u]);
        self.set_backref(nbc, t, t2);
        self.set_backref(nad, u, u2);
        self.refresh_hull(t);
        self.refresh_hull(t2);
        self.refresh_hull(u);
        self.refresh_hull(u2);
        self.last = t;
        self.pending.push((t, 2));
        self.pending.push((t2, 1));
        self.pending.push((u, 2));
        self.pending.push((u2, 1));
    }

    /// Splits triangle t around a point p on its hull edge (t, side).
    fn hull_edge_split(&mut self, t: usize, side: usize, p: usize) {
        let a = self.tri[t][side];
        let b = self.tri[t][(side + 1) % 3];
        let c = self.tri[t][(side + 2) % 3];
        let nbc = self.nbr[t][(side + 1) % 3];
        let nca = self.nbr[t][(side + 2) % 3];
        let t2 = self.alloc();
        self.write(t, [a, p, c], [NONE, t2, nca]);
        self.write(t2, [p, b, c], [NONE, nbc, t]);
        self.set_backref(nbc, t, t2);
        self.refresh_hull(t);
        self.refresh_hull(t2);
        self.last = t;
        self.pending.push((t, 2));
        self.pending.push((t2, 1));
    }

    /// Connects an outside point p to every hull edge it strictly sees.
    fn fan_insert(&mut self, p: usize) -> Result<(), GenError> {
        let entries: Vec<(usize, HullEdge)> = self.hull.iter().map(|(&k, &v)| (k, v)).collect();
        let mut incoming: HashMap<usize, usize> = HashMap::new();
        for (from, e) in &entries {
            incoming.insert(e.to, *from);
        }
        let visible = |from: usize, to: usize| self.orient(from, to, p) < 0;
        // Chain start: a visible edge whose predecessor along the hull is
        // not visible. Unique because the visible edges form one arc.
        let mut start = None;
        for (from, e) in &entries {
            if visible(*from, e.to) {
                let pred_from = incoming[from];
                if !visible(pred_from, *from) {
                    start = Some(*from);
                    break;
                }
            }
        }
        let Some(mut cur) = start else {
            return Err(GenError::Internal("outside point sees no hull edge"));
        };
        let mut chain: Vec<(usize, HullEdge)> = Vec::new();
        loop {
            let e = self.hull[&cur];
            if !visible(cur, e.to) {
                break;
            }
            chain.push((cur, e));
            cur = e.to;
        }
        debug_assert!(!chain.is_empty());

        let mut slots: Vec<usize> = Vec::with_capacity(chain.len());
        for _ in 0..chain.len() {
            slots.push(self.alloc());
        }
        for (i, (from, e)) in chain.iter().enumerate() {
            let slot = slots[i];
            let prev = if i == 0 { NONE } else { slots[i - 1] };
            let next = if i + 1 == chain.len() { NONE } else { slots[i + 1] };
            // Triangle over hull edge (from → to), apex p, counter-clockwise.
            self.write(slot, [e.to, *from, p], [e.tri, prev, next]);
            self.nbr[e.tri][e.side] = slot;
            self.pending.push((slot, 0));
        }
        for (from, _) in &chain {
            self.hull.remove(from);
        }
        for &slot in &slots {
            self.refresh_hull(slot);
        }
        self.last = slots[chain.len() - 1];
        Ok(())
    }

    /// Restores the local empty-circumcircle property around the newly
    /// inserted vertex p by flipping, with a deterministic rule for exact
    /// cocircular ties: flip only onto a lexicographically smaller
    /// endpoint-id pair.
    fn legalize(&mut self, p: usize) {
        while let Some((t, i)) = self.pending.pop() {
            if self.tri[t][(i + 2) % 3] != p {
                debug_assert!(false, "stale legalization entry");
                continue;
            }
            let u = self.nbr[t][i];
            if u == NONE {
                continue;
            }
            let a = self.tri[t][i];
            let b = self.tri[t][(i + 1) % 3];
            let j = self.side_in(u, b, a);
            let d = self.tri[u][(j + 2) % 3];
            let det = incircle(self.coord(a), self.coord(b), self.coord(p), self.coord(d));
            let tie_flip = det == 0.0 && {
                let new_pair = (p.min(d), p.max(d));
                let old_pair = (a.min(b), a.max(b));
                new_pair < old_pair
            };
            if !(det > 0.0 || tie_flip) {
                continue;
            }
            // Replace diagonal (a,b) of quad a→d→b→p with (p,d).
            let nbp = self.nbr[t][(i + 1) % 3];
            let npa = self.nbr[t][(i + 2) % 3];
            let nad = self.nbr[u][(j + 1) % 3];
            let ndb = self.nbr[u][(j + 2) % 3];
            self.write(t, [a, d, p], [nad, u, npa]);
            self.write(u, [d, b, p], [ndb, nbp, t]);
            self.set_backref(nad, u, t);
            self.set_backref(nbp, t, u);
            self.refresh_hull(t);
            self.refresh_hull(u);
            self.last = t;
            self.pending.push((t, 0));
            self.pending.push((u, 0));
        }
    }
}

/// Delaunay triangulation by incremental insertion in input order with
/// flip-based legalization. Exact cocircular ties are broken toward the
/// diagonal with the lexicographically smaller endpoint-id pair, so the
/// output is deterministic. Desk-scale: quadratic worst case, fine to
/// ~10⁴ points.
pub fn delaunay_triangulate(points: &[Point]) -> Result<Mesh, GenError> {
    if points.len() < 3 {
        return Err(GenError::TooFewPoints);
    }
    let mut seen: HashMap<(u64, u64), usize> = HashMap::new();
    for (i, p) in points.iter().enumerate() {
        if !p.is_finite() {
            return Err(GenError::NonFinitePoint(i));
        }
        if seen.insert((p.x.to_bits(), p.y.to_bits()), i).is_some() {
            return Err(GenError::DuplicatePoint(i));
        }
    }
    // Skip past a collinear prefix: the first point that breaks the line
    // becomes the apex of an initial fan over the sorted prefix.
    let apex = (2..points.len())
        .find(|&k| orient_sign(points[0], points[1], points[k]) != 0)
        .ok_or(GenError::Collinear)?;
    let mut prefix: Vec<usize> = (0..apex).collect();
    prefix.sort_by(|&i, &j| {
        points[i]
            .x
            .partial_cmp(&points[j].x)
            .unwrap()
            .then(points[i].y.partial_cmp(&points[j].y).unwrap())
    });

    let mut soup = Soup {
        pts: points,
        tri: Vec::new(),
        nbr: Vec::new(),
        hull: BTreeMap::new(),
        last: 0,
        pending: Vec::new(),
    };
    for w in prefix.windows(2) {
        let (s0, s1) = (w[0], w[1]);
        let v = if soup.orient(s0, s1, apex) > 0 { [s0, s1, apex] } else { [s1, s0, apex] };
        let slot = soup.alloc();
        soup.write(slot, v, [NONE; 3]);
    }
    // The initial fan is the unique triangulation of its points; derive all
    // adjacencies generically.
    let mut by_edge: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
    for t in 0..soup.tri.len() {
        for i in 0..3 {
            by_edge.insert((soup.tri[t][i], soup.tri[t][(i + 1) % 3]), (t, i));
        }
    }
    for t in 0..soup.tri.len() {
        for i in 0..3 {
            let a = soup.tri[t][i];
            let b = soup.tri[t][(i + 1) % 3];
            soup.nbr[t][i] = by_edge.get(&(b, a)).map_or(NONE, |&(u, _)| u);
        }
    }
    for t in 0..soup.tri.len() {
        soup.refresh_hull(t);
    }

    for p in apex + 1..points.len() {
        match soup.locate(p)? {
            Loc::Inside(t) => soup.three_split(t, p),
            Loc::OnEdge(t, side) => {
                if soup.nbr[t][side] == NONE {
                    soup.hull_edge_split(t, side, p);
                } else {
                    soup.four_split(t, side, p);
                }
            }
            Loc::Outside => soup.fan_insert(p)?,
        }
        soup.legalize(p);
    }

    let cycles: Vec<Vec<usize>> = soup.tri.iter().map(|t| t.to_vec()).collect();
    Ok(build_mesh(points, &cycles)?)
}

fn is_triangulation(m: &Mesh) -> bool {
    (0..m.face_count()).all(|i| {
        let f = FaceId::new(i);
        m.is_outer(f) || m.face_perimeter(f).map(|p| p.len() == 3).unwrap_or(false)
    })
}

/// Applies `k` random legal diagonal flips to a triangulation. A flip is
/// legal iff both adjacent faces are interior and the surrounding
/// quadrilateral is strictly convex. The output is a valid mesh but is
/// generally no longer Delaunay.
pub fn random_flip_perturb(m: &Mesh, k: usize, seed: u64) -> Result<Mesh, GenError> {
    if !is_triangulation(m) {
        return Err(GenError::NotATriangulation);
    }
    let mut out = m.clone();
    let mut rng = SplitMix64::new(seed);
    let mut done = 0usize;
    let mut attempts = 0usize;
    let cap = 200 * k + 1000;
    while done < k {
        attempts += 1;
        if attempts > cap {
            return Err(GenError::FlipSearchExhausted { missing: k - done });
        }
        let h = HalfEdgeId::new(rng.next_below(out.halfedge_count() as u64) as usize);
        let t = out.twin(h);
        if out.is_outer(out.face(h)) || out.is_outer(out.face(t)) {
            continue;
        }
        let a = out.point(out.origin(h));
        let b = out.point(out.origin(t));
        let c = out.point(out.origin(out.next(out.next(h))));
        let d = out.point(out.origin(out.next(out.next(t))));
        // Quad a→d→b→c must be strictly convex for the flip to be legal.
        let legal = orient_sign(c, a, d) > 0
            && orient_sign(a, d, b) > 0
            && orient_sign(d, b, c) > 0
            && orient_sign(b, c, a) > 0;
        if legal {
            out.flip_edge(h);
            done += 1;
        }
    }
    let violations = out.validate();
    if !violations.is_empty() {
        return Err(GenError::Internal("flip sequence produced an invalid mesh"));
    }
    Ok(out)
}

/// Convex subdivision built by repeatedly splitting a random face with a
/// random chord. Chord endpoints are inserted strictly inside two distinct
/// hull-bordering edges (parameter range [0.1, 0.9], avoiding slivers), so
/// the collinear corners they create land on the outer ring and every
/// interior face stays strictly convex. Produces exactly n_splits + 1
/// interior faces.
pub fn chord_split_subdivision(n_splits: usize, seed: u64, rect: Rect) -> Result<Mesh, GenError> {
    if !rect.is_valid() {
        return Err(GenError::BadRect);
    }
    let mut pts = vec![
        Point::new(rect.xmin, rect.ymin),
        Point::new(rect.xmax, rect.ymin),
        Point::new(rect.xmax, rect.ymax),
        Point::new(rect.xmin, rect.ymax),
    ];
    // Each face is a CCW cycle of (vertex, edge-to-next-borders-hull).
    let mut faces: Vec<Vec<(usize, bool)>> =
        vec![vec![(0, true), (1, true), (2, true), (3, true)]];
    let mut rng = SplitMix64::new(seed);

    for _ in 0..n_splits {
        let mut attempts = 0;
        loop {
            attempts += 1;
            if attempts > 10_000 {
                return Err(GenError::Internal("chord sampling failed to find a legal split"));
            }
            let fidx = rng.next_below(faces.len() as u64) as usize;
            let cycle = faces[fidx].clone();
            let k = cycle.len();
            let outs: Vec<usize> =
                (0..k).filter(|&i| cycle[i].1).collect();
            debug_assert!(outs.len() >= 2);
            let a_idx = rng.next_below(outs.len() as u64) as usize;
            let mut b_idx = rng.next_below(outs.len() as u64 - 1) as usize;
            if b_idx >= a_idx {
                b_idx += 1;
            }
            let (i, j) = (outs[a_idx].min(outs[b_idx]), outs[a_idx].max(outs[b_idx]));
            let ua = rng.next_range_f64(0.1, 0.9);
            let ub = rng.next_range_f64(0.1, 0.9);
            let (q1, host_i) = point_on_edge(&pts, &cycle, i, ua);
            let (q2, host_j) = point_on_edge(&pts, &cycle, j, ub);
            // Each endpoint must be strictly left of the other's host edge;
            // this rejects chords along a shared supporting line, which
            // would create a degenerate face.
            if orient_sign(host_i.0, host_i.1, q2) <= 0
                || orient_sign(host_j.0, host_j.1, q1) <= 0
            {
                continue;
            }
            let n1 = pts.len();
            pts.push(q1);
            let n2 = pts.len();
            pts.push(q2);
            // A: n1 → v_{i+1} … v_j → n2 → (chord back to n1). Each vertex
            // tuple carries the hull flag of the edge it starts.
            let mut a: Vec<(usize, bool)> = vec![(n1, cycle[i].1)];
            for item in cycle.iter().take(j + 1).skip(i + 1) {
                a.push(*item);
            }
            a.push((n2, false));
            // B: n2 → v_{j+1} … v_i → n1 → (chord back to n2).
            let mut b: Vec<(usize, bool)> = vec![(n2, cycle[j].1)];
            let mut t = (j + 1) % k;
            loop {
                b.push(cycle[t]);
                if t == i {
                    break;
                }
                t = (t + 1) % k;
            }
            b.push((n1, false));
            faces[fidx] = a;
            faces.push(b);
            break;
        }
    }

    let cycles: Vec<Vec<usize>> = faces
        .iter()
        .map(|f| f.iter().map(|&(v, _)| v).collect())
        .collect();
    Ok(build_mesh(&pts, &cycles)?)
}

/// Point at parameter u inside the face edge starting at slot `i`, plus the
/// edge's endpoints. Axis-aligned edges keep the constant coordinate
/// bit-exact so the inserted vertex is exactly collinear with its hosts.
fn point_on_edge(
    pts: &[Point],
    cycle: &[(usize, bool)],
    i: usize,
    u: f64,
) -> (Point, (Point, Point)) {
    let a = pts[cycle[i].0];
    let b = pts[cycle[(i + 1) % cycle.len()].0];
    let q = if a.x == b.x {
        Point::new(a.x, a.y + u * (b.y - a.y))
    } else if a.y == b.y {
        Point::new(a.x + u * (b.x - a.x), a.y)
    } else {
        Point::new(a.x + u * (b.x - a.x), a.y + u * (b.y - a.y))
    };
    (q, (a, b))
}

/// A mesh/start/query triple on which the deterministic visibility walk
/// cycles while the celestial walk locates the query correctly.
#[derive(Clone, Debug)]
pub struct LoopInstance {
    pub mesh: Mesh,
    pub start: HalfEdgeId,
    pub query: Point,
}

impl LoopInstance {
    pub fn to_json(&self) -> String {
        let file = self
            .mesh
            .to_file(Some(self.start.index()), Some((self.query.x, self.query.y)));
        serde_json::to_string(&file).expect("loop instance serialization")
    }

    pub fn from_json(text: &str) -> Result<LoopInstance, MeshError> {
        let file: crate::mesh::MeshFile =
            serde_json::from_str(text).map_err(|e| MeshError::Parse(e.to_string()))?;
        let start = file
            .start
            .ok_or_else(|| MeshError::Parse("missing start half-edge".into()))?;
        let (qx, qy) = file
            .query
            .ok_or_else(|| MeshError::Parse("missing query point".into()))?;
        let mesh = file.build()?;
        if start >= mesh.halfedge_count() {
            return Err(MeshError::InvalidId(format!("start half-edge {start} out of range")));
        }
        let start = HalfEdgeId::new(start);
        if mesh.is_outer(mesh.face(start)) {
            return Err(MeshError::Parse("start half-edge lies on the outer face".into()));
        }
        let query = Point::new(qx, qy);
        if !query.is_finite() {
            return Err(MeshError::NonFinitePoint);
        }
        Ok(LoopInstance { mesh, start, query })
    }
}

/// Searches seeded flip-perturbed Delaunay triangulations for an instance
/// where the deterministic visibility walk revisits a state (aborting with
/// a cycle) while the celestial walk locates the query correctly. Returns
/// the first hit, or None if the mesh budget runs out.
pub fn find_visibility_loop_instance(max_meshes: usize, seed: u64) -> Option<LoopInstance> {
    let mut rng = SplitMix64::new(seed);
    for _ in 0..max_meshes {
        let n = 25 + rng.next_below(36) as usize;
        let pts: Vec<Point> = (0..n)
            .map(|_| Point::new(rng.next_range_f64(0.0, 100.0), rng.next_range_f64(0.0, 100.0)))
            .collect();
        let flip_seed = rng.next_u64();
        let Ok(dt) = delaunay_triangulate(&pts) else { continue };
        let k = dt.interior_face_count();
        let Ok(m) = random_flip_perturb(&dt, k, flip_seed) else { continue };
        let budget = default_budget(&m);
        for _ in 0..20 {
            let mut start = None;
            for _ in 0..1000 {
                let h = HalfEdgeId::new(rng.next_below(m.halfedge_count() as u64) as usize);
                if !m.is_outer(m.face(h)) {
                    start = Some(h);
                    break;
                }
            }
            let Some(start) = start else { break };
            let p = Point::new(rng.next_range_f64(5.0, 95.0), rng.next_range_f64(5.0, 95.0));
            let Ok((vres, _)) =
                visibility_walk(&m, start, p, VisibilityVariant::DeterministicFirst, budget)
            else {
                continue;
            };
            if vres != WalkResult::Aborted(AbortReason::CycleDetected) {
                continue;
            }
            let Ok((cres, _)) = celestial_walk(&m, start, p, budget, None) else { continue };
            if let WalkResult::Located(f) = cres {
                if matches!(m.point_in_face(f, p), Ok(true)) {
                    return Some(LoopInstance { mesh: m, start, query: p });
                }
            }
        }
    }
    None
}
