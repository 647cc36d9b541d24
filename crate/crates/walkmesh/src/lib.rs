//! Point location in convex planar subdivisions by walking.
//!
//! The crate provides half-edge meshes over strictly convex faces, exact
//! geometric predicates, several walk strategies for locating a query point,
//! mesh generators, and a benchmark harness that counts predicate calls.

pub mod bench;
mod exact;
pub mod generators;
pub mod geom;
pub mod mesh;
pub mod rng;
pub mod walks;

pub use bench::{
    obtuse_fraction, reports_to_csv, run_batch, run_batch_opts, scaling_experiment, BatchCase,
    BatchOptions, BatchReport, BenchError, RawRecord, ScalingFamily, ScalingRow, ScalingTable,
    StartMode, Strategy, StrategyStats,
};
pub use generators::{
    chord_split_subdivision, delaunay_triangulate, find_visibility_loop_instance, hex_grid,
    random_flip_perturb, GenError, LoopInstance, Rect,
};
pub use geom::{
    cd_less, celestial_distance, closest_edge_of_face, closest_point_on_segment,
    left_of_approx_bisector, obtuse, orient, strictly_right, CelestialDistance, DistanceMetric,
    GeomError, Orientation, Point,
};
pub use mesh::{
    build_mesh, precompute_obtuse_bits, FaceId, HalfEdgeId, Mesh, MeshError, NavMove, ObtuseBits,
    VertexId, Violation,
};
pub use walks::{
    abstract_walk, candidate_set, celestial_walk, crossed_edges, default_budget, straight_walk,
    visibility_walk, AbortReason, Counters, SelectorStrategy, TraceFile, VisibilityVariant,
    WalkAction, WalkError, WalkResult, WalkStep, WalkTrace,
};
