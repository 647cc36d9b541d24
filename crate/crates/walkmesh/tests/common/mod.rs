//! Shared helpers for the integration suites: independent arbitrary-precision
//! re-implementations of the geometric predicates on top of `num-rational`
//! (a different representation and code path from the library's dyadic
//! kernels), plus workload builders used by several suites.
#![allow(dead_code)]

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use walkmesh::rng::SplitMix64;
use walkmesh::*;

pub fn rat(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite input")
}

fn sign(r: &BigRational) -> i32 {
    if r.is_zero() {
        0
    } else if r.is_positive() {
        1
    } else {
        -1
    }
}

/// Sign of the turn a→b→c: +1 left, 0 collinear, −1 right.
pub fn orient_oracle(a: Point, b: Point, c: Point) -> i32 {
    let det = (rat(b.x) - rat(a.x)) * (rat(c.y) - rat(a.y))
        - (rat(b.y) - rat(a.y)) * (rat(c.x) - rat(a.x));
    sign(&det)
}

/// Strictly obtuse interior corner at b of the path a→b→c, i.e. the rays
/// b→a and b→c meet at an angle greater than a right angle.
pub fn obtuse_oracle(a: Point, b: Point, c: Point) -> bool {
    let dot = (rat(b.x) - rat(a.x)) * (rat(c.x) - rat(b.x))
        + (rat(b.y) - rat(a.y)) * (rat(c.y) - rat(b.y));
    dot.is_positive()
}

/// Strictly left of the line through b perpendicular to the chord a→c
/// (direction = chord rotated −90°), which reduces to (c−a)·(p−b) > 0.
pub fn bisector_left_oracle(a: Point, b: Point, c: Point, p: Point) -> bool {
    let dot = (rat(c.x) - rat(a.x)) * (rat(p.x) - rat(b.x))
        + (rat(c.y) - rat(a.y)) * (rat(p.y) - rat(b.y));
    dot.is_positive()
}

/// Sign of the in-circle determinant: +1 when d lies strictly inside the
/// circle through the counter-clockwise triangle a, b, c.
pub fn incircle_oracle(a: Point, b: Point, c: Point, d: Point) -> i32 {
    let adx = rat(a.x) - rat(d.x);
    let ady = rat(a.y) - rat(d.y);
    let bdx = rat(b.x) - rat(d.x);
    let bdy = rat(b.y) - rat(d.y);
    let cdx = rat(c.x) - rat(d.x);
    let cdy = rat(c.y) - rat(d.y);
    let al = &adx * &adx + &ady * &ady;
    let bl = &bdx * &bdx + &bdy * &bdy;
    let cl = &cdx * &cdx + &cdy * &cdy;
    let det = &adx * (&bdy * &cl - &bl * &cdy) - &ady * (&bdx * &cl - &bl * &cdx)
        + &al * (&bdx * &cdy - &bdy * &cdx);
    sign(&det)
}

/// Exact comparison key for the edge distance order: squared distance to the
/// closed segment, then the squared cosine of the angle between the
/// supporting line and the segment to the closest endpoint (0 for an
/// orthogonal foot or an on-segment point). Lexicographic tuple order
/// matches the library's comparator.
pub fn cd_oracle(a: Point, b: Point, p: Point) -> (BigRational, BigRational) {
    let zero = BigRational::zero;
    let vx = rat(b.x) - rat(a.x);
    let vy = rat(b.y) - rat(a.y);
    let td = &vx * &vx + &vy * &vy;
    let endpoint = |wx: BigRational, wy: BigRational| {
        let w2 = &wx * &wx + &wy * &wy;
        if w2.is_zero() {
            return (zero(), zero());
        }
        let dot = &vx * &wx + &vy * &wy;
        let cos2 = &dot * &dot / (&td * &w2);
        (w2, cos2)
    };
    let wax = rat(p.x) - rat(a.x);
    let way = rat(p.y) - rat(a.y);
    let tn = &wax * &vx + &way * &vy;
    if !tn.is_positive() {
        endpoint(wax, way)
    } else if tn >= td {
        endpoint(rat(p.x) - rat(b.x), rat(p.y) - rat(b.y))
    } else {
        let w2 = &wax * &wax + &way * &way;
        (w2 - &tn * &tn / &td, zero())
    }
}

/// Closed containment of p in an interior face, by rational half-plane tests.
pub fn point_in_face_oracle(m: &Mesh, f: FaceId, p: Point) -> bool {
    m.face_perimeter(f)
        .expect("face id in range")
        .into_iter()
        .all(|e| {
            let (a, b) = m.edge_points(e);
            orient_oracle(a, b, p) >= 0
        })
}

/// Every interior face whose closure contains p, by brute-force scan.
pub fn containing_faces(m: &Mesh, p: Point) -> Vec<FaceId> {
    (0..m.face_count())
        .map(FaceId::new)
        .filter(|&f| !m.is_outer(f) && point_in_face_oracle(m, f, p))
        .collect()
}

/// True iff p is strictly inside f (every perimeter test strictly positive).
pub fn strictly_inside_oracle(m: &Mesh, f: FaceId, p: Point) -> bool {
    m.face_perimeter(f)
        .expect("face id in range")
        .into_iter()
        .all(|e| {
            let (a, b) = m.edge_points(e);
            orient_oracle(a, b, p) > 0
        })
}

pub fn uniform_points(n: usize, seed: u64, lo: f64, hi: f64) -> Vec<Point> {
    let mut rng = SplitMix64::new(seed);
    (0..n)
        .map(|_| Point::new(rng.next_range_f64(lo, hi), rng.next_range_f64(lo, hi)))
        .collect()
}

pub fn delaunay_of(n: usize, seed: u64) -> Mesh {
    delaunay_triangulate(&uniform_points(n, seed, 0.0, 100.0)).expect("random points triangulate")
}

pub fn interior_halfedge_ids(m: &Mesh) -> Vec<HalfEdgeId> {
    (0..m.halfedge_count())
        .map(HalfEdgeId::new)
        .filter(|&e| !m.is_outer(m.face(e)))
        .collect()
}

pub fn load_loop_fixture() -> LoopInstance {
    LoopInstance::from_json(include_str!("../fixtures/visibility_loop.json"))
        .expect("checked-in loop fixture parses")
}

/// Shift a float by `k` representable steps (ulps), preserving finiteness.
pub fn nudge_ulps(x: f64, k: i64) -> f64 {
    let mut v = x;
    for _ in 0..k.abs() {
        let next = if k > 0 {
            f64::from_bits(step_bits_up(v))
        } else {
            f64::from_bits(step_bits_down(v))
        };
        if !next.is_finite() {
            return v;
        }
        v = next;
    }
    v
}

fn step_bits_up(x: f64) -> u64 {
    let b = x.to_bits();
    if x == 0.0 {
        1 // +min subnormal
    } else if x > 0.0 {
        b + 1
    } else {
        b - 1
    }
}

fn step_bits_down(x: f64) -> u64 {
    let b = x.to_bits();
    if x == 0.0 {
        1 | (1u64 << 63) // −min subnormal
    } else if x > 0.0 {
        b - 1
    } else {
        b + 1
    }
}

/// Deterministic mixed stream of predicate inputs (a, b, c, p), used as
/// orient(a,b,c), corner test at b of a→b→c, and bisector side of p. Blends
/// uniform random coordinates, float-rounded near-collinear triples, exact
/// lattice degeneracies (collinear runs, right-angle corners, points exactly
/// on the bisector line), ulp-level perturbations of those, and exact
/// power-of-two rescalings far into overflow/underflow territory for the
/// product filter. Constructed so a≠b, b≠c, a≠c always hold.
pub fn predicate_inputs(count: usize, seed: u64) -> Vec<[Point; 4]> {
    let mut rng = SplitMix64::new(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let mode = out.len() % 5;
        let item = match mode {
            0 => {
                let mut c = [0.0; 8];
                for v in &mut c {
                    *v = rng.next_range_f64(-1e3, 1e3);
                }
                [
                    Point::new(c[0], c[1]),
                    Point::new(c[2], c[3]),
                    Point::new(c[4], c[5]),
                    Point::new(c[6], c[7]),
                ]
            }
            1 => {
                // Rounded point on the segment: collinear up to one rounding.
                let a = Point::new(rng.next_range_f64(-50.0, 50.0), rng.next_range_f64(-50.0, 50.0));
                let b = Point::new(rng.next_range_f64(-50.0, 50.0), rng.next_range_f64(-50.0, 50.0));
                let t = rng.next_f64() * 2.0 - 0.5;
                let c = Point::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y));
                let p = Point::new(rng.next_range_f64(-50.0, 50.0), rng.next_range_f64(-50.0, 50.0));
                [a, b, c, p]
            }
            _ => {
                // Exact integer-lattice degeneracies: a, b, c collinear along
                // d; p exactly on the corner's bisector line (⊥ chord a→c).
                let int = |rng: &mut SplitMix64, lo: i64, hi: i64| {
                    lo + rng.next_below((hi - lo + 1) as u64) as i64
                };
                let ax = int(&mut rng, -8, 8);
                let ay = int(&mut rng, -8, 8);
                let (mut dx, mut dy) = (0, 0);
                while dx == 0 && dy == 0 {
                    dx = int(&mut rng, -4, 4);
                    dy = int(&mut rng, -4, 4);
                }
                let s = if rng.next_below(2) == 0 { 1 } else { -1 } * int(&mut rng, 1, 3);
                let mut t = 0;
                while t == 0 || t == s {
                    t = if rng.next_below(2) == 0 { 1 } else { -1 } * int(&mut rng, 1, 6);
                }
                let (bx, by) = (ax + s * dx, ay + s * dy);
                let (cx, cy) = (ax + t * dx, ay + t * dy);
                let u = int(&mut rng, -5, 5);
                // chord a→c is along d; p = b + u·(−dy, dx) sits exactly on
                // the perpendicular through b.
                let (px, py) = (bx - u * dy, by + u * dx);
                let scale = match mode {
                    3 => 2f64.powi([510, -1060, 500, -538][rng.next_below(4) as usize]),
                    _ => 2f64.powi(int(&mut rng, -3, 3) as i32),
                };
                let mut pts = [
                    Point::new(ax as f64 * scale, ay as f64 * scale),
                    Point::new(bx as f64 * scale, by as f64 * scale),
                    Point::new(cx as f64 * scale, cy as f64 * scale),
                    Point::new(px as f64 * scale, py as f64 * scale),
                ];
                if mode == 4 {
                    // Right-angle corner at b instead: c = b + rot90(b−a).
                    pts[2] = Point::new(
                        (bx - (by - ay)) as f64 * scale,
                        (by + (bx - ax)) as f64 * scale,
                    );
                }
                // ulp-level perturbation of one coordinate half the time.
                if rng.next_below(2) == 0 {
                    let which = rng.next_below(8) as usize;
                    let k = 1 + rng.next_below(3) as i64;
                    let k = if rng.next_below(2) == 0 { k } else { -k };
                    let pt = &mut pts[which / 2];
                    if which.is_multiple_of(2) {
                        pt.x = nudge_ulps(pt.x, k);
                    } else {
                        pt.y = nudge_ulps(pt.y, k);
                    }
                }
                pts
            }
        };
        let [a, b, c, _] = item;
        if a != b && b != c && a != c {
            out.push(item);
        }
    }
    out
}

/// Deterministic (edge a→b, query p) triples for distance-order checks:
/// generic float cases plus exact lattice ties (equal squared distance to
/// two configurations, broken only by the angle term), on-segment queries,
/// and endpoint-region queries.
pub fn distance_cases(count: usize, seed: u64) -> Vec<(Point, Point, Point)> {
    let mut rng = SplitMix64::new(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let mode = out.len() % 3;
        let (a, b, p) = match mode {
            0 => {
                let a = Point::new(rng.next_range_f64(-20.0, 20.0), rng.next_range_f64(-20.0, 20.0));
                let b = Point::new(rng.next_range_f64(-20.0, 20.0), rng.next_range_f64(-20.0, 20.0));
                let p = Point::new(rng.next_range_f64(-30.0, 30.0), rng.next_range_f64(-30.0, 30.0));
                (a, b, p)
            }
            1 => {
                // Integer lattice: frequent exact squared-distance ties
                // across consecutive stream entries.
                let int = |rng: &mut SplitMix64| -6 + rng.next_below(13) as i64;
                let a = Point::new(int(&mut rng) as f64, int(&mut rng) as f64);
                let mut b = a;
                while b == a {
                    b = Point::new(int(&mut rng) as f64, int(&mut rng) as f64);
                }
                (a, b, Point::new(int(&mut rng) as f64, int(&mut rng) as f64))
            }
            _ => {
                // Exactly on the segment (dyadic parameter keeps it exact).
                let a = Point::new(rng.next_below(16) as f64, rng.next_below(16) as f64);
                let mut b = a;
                while b == a {
                    b = Point::new(rng.next_below(16) as f64, rng.next_below(16) as f64);
                }
                let t = rng.next_below(5) as f64 / 4.0;
                (a, b, Point::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)))
            }
        };
        if a != b {
            out.push((a, b, p));
        }
    }
    out
}

/// Exact rational centroid of a face perimeter (mean of its vertices).
pub fn centroid_rat(m: &Mesh, f: FaceId) -> (BigRational, BigRational) {
    let per = m.face_perimeter(f).expect("face id in range");
    let mut sx = BigRational::zero();
    let mut sy = BigRational::zero();
    for &e in &per {
        let p = m.point(m.origin(e));
        sx += rat(p.x);
        sy += rat(p.y);
    }
    let n = BigRational::from_integer(per.len().into());
    (sx / &n, sy / n)
}

/// Independent model of the segment walk: clips the segment from the exact
/// centroid q of `start_face` to p against every interior face and returns,
/// in traversal order, the faces met with positive parameter length.
///
/// Returns `None` for configurations outside the generic-position contract
/// of this oracle: q = p, a mesh vertex exactly on the supporting line, or
/// p not strictly inside any interior face.
pub fn straight_clip_faces(m: &Mesh, start_face: FaceId, p: Point) -> Option<Vec<FaceId>> {
    let (qx, qy) = centroid_rat(m, start_face);
    let (px, py) = (rat(p.x), rat(p.y));
    if px == qx && py == qy {
        return None;
    }
    for v in 0..m.vertex_count() {
        let pt = m.point(VertexId::new(v));
        let det = (&px - &qx) * (rat(pt.y) - &qy) - (&py - &qy) * (rat(pt.x) - &qx);
        if det.is_zero() {
            return None;
        }
    }
    if !(0..m.face_count())
        .map(FaceId::new)
        .any(|f| !m.is_outer(f) && strictly_inside_oracle(m, f, p))
    {
        return None;
    }

    let mut met: Vec<(BigRational, FaceId)> = Vec::new();
    for fi in 0..m.face_count() {
        let f = FaceId::new(fi);
        if m.is_outer(f) {
            continue;
        }
        let mut lo = BigRational::zero();
        let mut hi = BigRational::from_integer(1.into());
        let mut empty = false;
        for e in m.face_perimeter(f).expect("face id in range") {
            let (a, b) = m.edge_points(e);
            // Signed side of the moving point q + t(p−q) against edge (a,b),
            // affine in t: (1−t)·oq + t·op.
            let oq = (rat(b.x) - rat(a.x)) * (&qy - rat(a.y))
                - (rat(b.y) - rat(a.y)) * (&qx - rat(a.x));
            let op = (rat(b.x) - rat(a.x)) * (&py - rat(a.y))
                - (rat(b.y) - rat(a.y)) * (&px - rat(a.x));
            let slope = &op - &oq;
            if slope.is_zero() {
                if oq.is_negative() {
                    empty = true;
                    break;
                }
                continue;
            }
            let bound = -&oq / &slope;
            if slope.is_positive() {
                if bound > lo {
                    lo = bound;
                }
            } else if bound < hi {
                hi = bound;
            }
            if lo >= hi {
                empty = true;
                break;
            }
        }
        if !empty && hi.is_positive() && lo < hi {
            met.push((lo, f));
        }
    }
    met.sort_by(|x, y| x.0.cmp(&y.0));
    Some(met.into_iter().map(|(_, f)| f).collect())
}
