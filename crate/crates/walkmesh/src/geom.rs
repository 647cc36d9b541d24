//! Planar geometric primitives: orientation, segment projection, the
//! distance-plus-angle order on edges, and the corner tests used by walks.
//!
//! Every predicate returns the exact sign for all finite inputs (see
//! [`crate::exact`]); approximate values appear only in explicitly
//! approximate accessors such as [`CelestialDistance::alpha`].

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::f64::consts::PI;

use thiserror::Error;

use crate::exact::{cmp_ratio, ratio_to_f64, sum2_sign, Dyadic};

/// A location in the plane. All operations require finite coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Point {
        Point { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Side of directed line a→b on which a query point lies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Orientation {
    Left,
    Right,
    Collinear,
}

/// Which order to use when ranking a face's edges by distance to a point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DistanceMetric {
    /// Squared distance to the closed edge segment only.
    Euclidean,
    /// Squared distance, ties broken by the wide angle ([`CelestialDistance`]).
    Celestial,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GeomError {
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("degenerate edge: endpoints coincide")]
    DegenerateEdge,
    #[error("approximate bisector undefined: outer corner points coincide")]
    UndefinedBisector,
    #[error("invalid polygon: {0}")]
    InvalidPolygon(&'static str),
}

fn ensure_finite(points: &[Point]) -> Result<(), GeomError> {
    if points.iter().all(Point::is_finite) {
        Ok(())
    } else {
        Err(GeomError::NonFinite)
    }
}

/// Exact sign of the cross product (b−a)×(c−a): >0 left, <0 right.
/// Callers must have validated finiteness.
pub(crate) fn orient_sign(a: Point, b: Point, c: Point) -> i32 {
    sum2_sign(b.x, a.x, c.y, a.y, a.y, b.y, c.x, a.x)
}

/// Exact sign of (b−a)·(c−b), positive iff the corner at b is strictly obtuse.
pub(crate) fn obtuse_sign(a: Point, b: Point, c: Point) -> i32 {
    sum2_sign(b.x, a.x, c.x, b.x, b.y, a.y, c.y, b.y)
}

/// Exact sign of cross(u, p−b) with u = (c−a) rotated −90°; positive iff p is
/// strictly left of the directed line through b along u.
pub(crate) fn bisector_sign(a: Point, b: Point, c: Point, p: Point) -> i32 {
    sum2_sign(c.y, a.y, p.y, b.y, c.x, a.x, p.x, b.x)
}

/// Orientation of c relative to the directed line a→b, exact for all finite
/// inputs.
pub fn orient(a: Point, b: Point, c: Point) -> Result<Orientation, GeomError> {
    ensure_finite(&[a, b, c])?;
    Ok(match orient_sign(a, b, c) {
        s if s > 0 => Orientation::Left,
        s if s < 0 => Orientation::Right,
        _ => Orientation::Collinear,
    })
}

/// True iff p lies strictly on the right of the directed edge a→b.
/// Points on the supporting line are not strictly right.
pub fn strictly_right(a: Point, b: Point, p: Point) -> Result<bool, GeomError> {
    ensure_finite(&[a, b, p])?;
    if a == b {
        return Err(GeomError::DegenerateEdge);
    }
    Ok(orient_sign(a, b, p) < 0)
}

/// Closest point of the closed segment [a,b] to p, with its squared
/// distance. The projection parameter is clamped to the segment, so an
/// endpoint is returned whenever the orthogonal foot falls outside.
pub fn closest_point_on_segment(a: Point, b: Point, p: Point) -> Result<(Point, f64), GeomError> {
    ensure_finite(&[a, b, p])?;
    if a == b {
        return Err(GeomError::DegenerateEdge);
    }
    let vx = b.x - a.x;
    let vy = b.y - a.y;
    let t = ((p.x - a.x) * vx + (p.y - a.y) * vy) / (vx * vx + vy * vy);
    let t = t.clamp(0.0, 1.0);
    let q = Point::new(a.x + t * vx, a.y + t * vy);
    let d2 = (p.x - q.x) * (p.x - q.x) + (p.y - q.y) * (p.y - q.y);
    Ok((q, d2))
}

/// Distance of a point to an edge segment, ordered lexicographically by
/// squared distance and then by the wide angle α between the edge's
/// supporting line and the line to the closest segment point.
///
/// α is π/2 when the closest point is an orthogonal foot in the segment
/// interior, grows toward π as the direction to the closest endpoint swings
/// into the supporting line, and is 0 exactly when the point lies on the
/// segment. Stored as exact dyadic fractions (squared distance and the
/// squared cosine of π − α), so comparisons never round; [`Self::d2`] and
/// [`Self::alpha`] expose nearest-f64 readings.
#[derive(Clone, Debug)]
pub struct CelestialDistance {
    d2_num: Dyadic,
    d2_den: Dyadic,
    cos2_num: Dyadic,
    cos2_den: Dyadic,
}

impl CelestialDistance {
    /// Squared Euclidean distance to the closed segment (nearest f64).
    pub fn d2(&self) -> f64 {
        ratio_to_f64(&self.d2_num, &self.d2_den)
    }

    /// Wide angle in radians: 0 when on the segment, otherwise in [π/2, π]
    /// (nearest f64).
    pub fn alpha(&self) -> f64 {
        if self.d2_num.is_zero() {
            return 0.0;
        }
        let cos2 = ratio_to_f64(&self.cos2_num, &self.cos2_den).clamp(0.0, 1.0);
        PI - cos2.sqrt().acos()
    }
}

impl PartialEq for CelestialDistance {
    fn eq(&self, other: &CelestialDistance) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for CelestialDistance {}

impl PartialOrd for CelestialDistance {
    fn partial_cmp(&self, other: &CelestialDistance) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for CelestialDistance {
    fn cmp(&self, other: &CelestialDistance) -> Ordering {
        cmp_ratio(&self.d2_num, &self.d2_den, &other.d2_num, &other.d2_den).then_with(|| {
            cmp_ratio(
                &self.cos2_num,
                &self.cos2_den,
                &other.cos2_num,
                &other.cos2_den,
            )
        })
    }
}

/// Strict lexicographic order: smaller squared distance wins, then smaller
/// wide angle. Exact; never produces a false tie or a false split.
pub fn cd_less(a: &CelestialDistance, b: &CelestialDistance) -> bool {
    a.cmp(b) == Ordering::Less
}

/// Distance of p to the edge a→b under the order above. Symmetric in a and b.
pub fn celestial_distance(a: Point, b: Point, p: Point) -> Result<CelestialDistance, GeomError> {
    ensure_finite(&[a, b, p])?;
    if a == b {
        return Err(GeomError::DegenerateEdge);
    }
    let d = Dyadic::from_f64;
    let one = || Dyadic::from_f64(1.0);
    let vx = d(b.x) - d(a.x);
    let vy = d(b.y) - d(a.y);
    let wax = d(p.x) - d(a.x);
    let way = d(p.y) - d(a.y);
    // Projection parameter of p onto the supporting line is t_num/t_den.
    let t_num = wax.clone() * vx.clone() + way.clone() * vy.clone();
    let t_den = vx.clone() * vx.clone() + vy.clone() * vy.clone();

    let endpoint = |wx: Dyadic, wy: Dyadic, v2: Dyadic, vx: Dyadic, vy: Dyadic| {
        let w2 = wx.clone() * wx.clone() + wy.clone() * wy.clone();
        if w2.is_zero() {
            // On the segment: distance 0 carries angle 0 by convention.
            return CelestialDistance {
                d2_num: Dyadic::zero(),
                d2_den: one(),
                cos2_num: Dyadic::zero(),
                cos2_den: one(),
            };
        }
        // cos²θ with θ = π − α, the acute angle between the supporting line
        // and the direction to the closest endpoint.
        let dot = vx * wx + vy * wy;
        CelestialDistance {
            d2_num: w2.clone(),
            d2_den: one(),
            cos2_num: dot.clone() * dot,
            cos2_den: v2 * w2,
        }
    };

    let cd = if t_num.signum() <= 0 {
        endpoint(wax, way, t_den, vx, vy)
    } else if t_num.cmp(&t_den) != Ordering::Less {
        let wbx = d(p.x) - d(b.x);
        let wby = d(p.y) - d(b.y);
        endpoint(wbx, wby, t_den, vx, vy)
    } else {
        // Orthogonal foot inside the segment: d² = |w|² − t_num²/t_den and
        // the drop is exactly perpendicular, so cos²θ = 0 (α = π/2), or the
        // point is on the segment (d² = 0, α = 0) — both store cos² = 0.
        let w2 = wax.clone() * wax + way.clone() * way;
        CelestialDistance {
            d2_num: w2 * t_den.clone() - t_num.clone() * t_num,
            d2_den: t_den,
            cos2_num: Dyadic::zero(),
            cos2_den: one(),
        }
    };
    Ok(cd)
}

/// True iff the interior corner at b of the perimeter path a→b→c is strictly
/// obtuse; a right angle is not.
pub fn obtuse(a: Point, b: Point, c: Point) -> Result<bool, GeomError> {
    ensure_finite(&[a, b, c])?;
    if a == b || b == c {
        return Err(GeomError::DegenerateEdge);
    }
    Ok(obtuse_sign(a, b, c) > 0)
}

/// Side test against the approximate bisector of the obtuse corner a→b→c:
/// the line through b perpendicular to the chord a→c (direction = chord
/// rotated −90°). Returns true iff p is strictly left; on the line is false.
pub fn left_of_approx_bisector(
    a: Point,
    b: Point,
    c: Point,
    p: Point,
) -> Result<bool, GeomError> {
    ensure_finite(&[a, b, c, p])?;
    if a == c {
        return Err(GeomError::UndefinedBisector);
    }
    Ok(bisector_sign(a, b, c, p) > 0)
}

fn validate_convex_perimeter(perimeter: &[(Point, Point)]) -> Result<(), GeomError> {
    if perimeter.len() < 3 {
        return Err(GeomError::InvalidPolygon("fewer than three edges"));
    }
    for (a, b) in perimeter {
        ensure_finite(&[*a, *b])?;
        if a == b {
            return Err(GeomError::InvalidPolygon("degenerate edge"));
        }
    }
    let n = perimeter.len();
    for i in 0..n {
        let (a, b) = perimeter[i];
        let (b2, c) = perimeter[(i + 1) % n];
        if b != b2 {
            return Err(GeomError::InvalidPolygon("edges do not form a closed chain"));
        }
        if orient_sign(a, b, c) <= 0 {
            return Err(GeomError::InvalidPolygon(
                "perimeter is not strictly convex counter-clockwise",
            ));
        }
    }
    Ok(())
}

/// Indices of all perimeter edges at minimum distance from p under the
/// chosen metric. The perimeter must be a closed, strictly convex,
/// counter-clockwise chain of edges.
pub fn closest_edge_of_face(
    perimeter: &[(Point, Point)],
    p: Point,
    metric: DistanceMetric,
) -> Result<BTreeSet<usize>, GeomError> {
    ensure_finite(&[p])?;
    validate_convex_perimeter(perimeter)?;
    let mut best: Option<CelestialDistance> = None;
    let mut argmin = BTreeSet::new();
    for (i, (a, b)) in perimeter.iter().enumerate() {
        let cd = celestial_distance(*a, *b, p)?;
        let ord = match &best {
            None => Ordering::Less,
            Some(m) => match metric {
                DistanceMetric::Euclidean => {
                    cmp_ratio(&cd.d2_num, &cd.d2_den, &m.d2_num, &m.d2_den)
                }
                DistanceMetric::Celestial => cd.cmp(m),
            },
        };
        match ord {
            Ordering::Less => {
                argmin.clear();
                argmin.insert(i);
                best = Some(cd);
            }
            Ordering::Equal => {
                argmin.insert(i);
            }
            Ordering::Greater => {}
        }
    }
    Ok(argmin)
}
