//! Deterministic SVG rendering of a recorded walk trace over its mesh.
//!
//! Styling is fixed so outputs are stable for golden-file comparison:
//! mesh edges gray at 0.5px, the walk path a red polyline through the
//! centroids of the visited faces and the midpoints of the crossed edges,
//! orange dots on vertices that host an obtuse interior corner, and a black
//! disk on the query point. Elements are emitted in index order, so the same
//! mesh and trace always produce byte-identical files.

use std::collections::BTreeSet;
use std::fmt::Write;

use walkmesh::{
    precompute_obtuse_bits, FaceId, HalfEdgeId, Mesh, Point, TraceFile, VertexId, WalkAction,
};

const WIDTH: f64 = 800.0;
const MARGIN: f64 = 20.0;

/// Affine map from mesh coordinates to the SVG canvas (y axis flipped so
/// mesh "up" renders upward).
struct Frame {
    xmin: f64,
    ymin: f64,
    scale: f64,
    height: f64,
}

impl Frame {
    fn fit(mesh: &Mesh, query: Point) -> Frame {
        let mut xmin = query.x;
        let mut xmax = query.x;
        let mut ymin = query.y;
        let mut ymax = query.y;
        for i in 0..mesh.vertex_count() {
            let p = mesh.point(VertexId::new(i));
            xmin = xmin.min(p.x);
            xmax = xmax.max(p.x);
            ymin = ymin.min(p.y);
            ymax = ymax.max(p.y);
        }
        let span_x = (xmax - xmin).max(1e-9);
        let span_y = (ymax - ymin).max(1e-9);
        let scale = (WIDTH - 2.0 * MARGIN) / span_x;
        Frame { xmin, ymin, scale, height: span_y * scale + 2.0 * MARGIN }
    }

    fn map(&self, p: Point) -> (f64, f64) {
        (
            MARGIN + (p.x - self.xmin) * self.scale,
            self.height - MARGIN - (p.y - self.ymin) * self.scale,
        )
    }
}

fn face_centroid(mesh: &Mesh, f: FaceId) -> Option<Point> {
    if mesh.is_outer(f) {
        return None;
    }
    let perimeter = mesh.face_perimeter(f).ok()?;
    let mut x = 0.0;
    let mut y = 0.0;
    for &e in &perimeter {
        let p = mesh.point(mesh.origin(e));
        x += p.x;
        y += p.y;
    }
    let k = perimeter.len() as f64;
    Some(Point::new(x / k, y / k))
}

fn edge_midpoint(mesh: &Mesh, e: HalfEdgeId) -> Point {
    let (a, b) = mesh.edge_points(e);
    Point::new((a.x + b.x) / 2.0, (a.y + b.y) / 2.0)
}

/// The red walk path: start-face centroid, then for every crossing the
/// crossed edge's midpoint followed by the entered face's centroid (outer
/// faces contribute no centroid, ending exterior exits on the hull edge).
fn walk_path(mesh: &Mesh, trace: &TraceFile) -> Vec<Point> {
    let mut pts = Vec::new();
    if let Some(&first) = trace.visited_faces.first() {
        pts.extend(face_centroid(mesh, first));
    }
    let mut entered = 1usize;
    for step in &trace.steps {
        if step.action == WalkAction::CrossTwin {
            pts.push(edge_midpoint(mesh, step.edge));
            if let Some(&f) = trace.visited_faces.get(entered) {
                pts.extend(face_centroid(mesh, f));
            }
            entered += 1;
        }
    }
    pts
}

/// Vertices hosting at least one obtuse interior corner, in index order.
fn obtuse_corner_vertices(mesh: &Mesh) -> BTreeSet<usize> {
    let bits = precompute_obtuse_bits(mesh);
    (0..mesh.halfedge_count())
        .filter(|&i| bits.get(HalfEdgeId::new(i)))
        .map(|i| mesh.target(HalfEdgeId::new(i)).index())
        .collect()
}

fn c(v: f64) -> String {
    format!("{v:.3}")
}

/// Renders the trace over the mesh; ids must already be validated against
/// the mesh and the query must be finite.
pub fn render(mesh: &Mesh, trace: &TraceFile) -> String {
    let query = Point::new(trace.query.0, trace.query.1);
    let frame = Frame::fit(mesh, query);
    let mut out = String::new();
    writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">",
        c(WIDTH),
        c(frame.height),
        c(WIDTH),
        c(frame.height)
    )
    .unwrap();

    writeln!(out, "<g stroke=\"gray\" stroke-width=\"0.5\">").unwrap();
    for i in 0..mesh.halfedge_count() {
        let e = HalfEdgeId::new(i);
        if i < mesh.twin(e).index() {
            let (a, b) = mesh.edge_points(e);
            let (x1, y1) = frame.map(a);
            let (x2, y2) = frame.map(b);
            writeln!(
                out,
                "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\"/>",
                c(x1),
                c(y1),
                c(x2),
                c(y2)
            )
            .unwrap();
        }
    }
    writeln!(out, "</g>").unwrap();

    let dots = obtuse_corner_vertices(mesh);
    if !dots.is_empty() {
        writeln!(out, "<g fill=\"orange\">").unwrap();
        for v in dots {
            let (cx, cy) = frame.map(mesh.point(VertexId::new(v)));
            writeln!(out, "<circle cx=\"{}\" cy=\"{}\" r=\"2\"/>", c(cx), c(cy)).unwrap();
        }
        writeln!(out, "</g>").unwrap();
    }

    let path = walk_path(mesh, trace);
    if path.len() >= 2 {
        let points: Vec<String> = path
            .iter()
            .map(|&p| {
                let (x, y) = frame.map(p);
                format!("{},{}", c(x), c(y))
            })
            .collect();
        writeln!(
            out,
            "<polyline fill=\"none\" stroke=\"red\" stroke-width=\"1.5\" points=\"{}\"/>",
            points.join(" ")
        )
        .unwrap();
    }

    let (qx, qy) = frame.map(query);
    writeln!(out, "<circle cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"black\"/>", c(qx), c(qy)).unwrap();
    writeln!(out, "</svg>").unwrap();
    out
}
