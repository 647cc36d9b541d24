//! Batch experiment harness: runs the walk strategies over seeded query
//! workloads on a shared mesh and aggregates their predicate counters and
//! visited-face counts, plus mesh-level angle statistics and a visited-face
//! scaling fit against mesh size.
//!
//! Determinism contract: identical inputs (mesh, strategy list, query count,
//! seed, options) produce byte-identical serialized reports. Query points and
//! start edges are sampled once per batch and shared by every strategy, so
//! per-strategy aggregates are comparable head to head.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::generators::{delaunay_triangulate, GenError};
use crate::geom::{obtuse, Point};
use crate::mesh::{precompute_obtuse_bits, FaceId, HalfEdgeId, Mesh, ObtuseBits, VertexId};
use crate::rng::SplitMix64;
use crate::walks::{
    abstract_walk, celestial_walk, default_budget, straight_walk, visibility_walk,
    SelectorStrategy, VisibilityVariant, WalkError, WalkResult, WalkTrace,
};

/// A walk configuration a batch can run. Seeds carried inside a variant are
/// fixed for the whole batch; variation across queries comes from the shared
/// query workload, so batches stay reproducible from a single seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    /// Corner-rounding distance-descent walk; `memo` pre-computes the
    /// per-half-edge obtuse bits instead of testing corners on the fly.
    Celestial { memo: bool },
    /// Candidate-set walk with the given selector.
    Abstract(SelectorStrategy),
    Visibility(VisibilityVariant),
    Straight,
}

impl Strategy {
    /// Stable name used in CSV rows and raw records.
    pub fn label(&self) -> &'static str {
        match self {
            Strategy::Celestial { memo: false } => "celestial",
            Strategy::Celestial { memo: true } => "celestial-memo",
            Strategy::Abstract(SelectorStrategy::FirstCandidate) => "abstract-first",
            Strategy::Abstract(SelectorStrategy::SeededRandom(_)) => "abstract-random",
            Strategy::Abstract(SelectorStrategy::GreedyMinDistance) => "abstract-greedy",
            Strategy::Visibility(VisibilityVariant::DeterministicFirst) => "visibility",
            Strategy::Visibility(VisibilityVariant::Stochastic(_)) => "visibility-stochastic",
            Strategy::Straight => "straight",
        }
    }

    /// Inverse of [`Strategy::label`]; `seed` feeds the seeded variants.
    /// `"abstract"` is accepted as shorthand for `"abstract-first"`.
    pub fn from_name(name: &str, seed: u64) -> Option<Strategy> {
        Some(match name {
            "celestial" => Strategy::Celestial { memo: false },
            "celestial-memo" => Strategy::Celestial { memo: true },
            "abstract" | "abstract-first" => Strategy::Abstract(SelectorStrategy::FirstCandidate),
            "abstract-random" => Strategy::Abstract(SelectorStrategy::SeededRandom(seed)),
            "abstract-greedy" => Strategy::Abstract(SelectorStrategy::GreedyMinDistance),
            "visibility" => Strategy::Visibility(VisibilityVariant::DeterministicFirst),
            "visibility-stochastic" => Strategy::Visibility(VisibilityVariant::Stochastic(seed)),
            "straight" => Strategy::Straight,
            _ => return None,
        })
    }

    fn run(
        &self,
        mesh: &Mesh,
        memo: &ObtuseBits,
        start: HalfEdgeId,
        p: Point,
        budget: usize,
    ) -> Result<(WalkResult, WalkTrace), WalkError> {
        match self {
            Strategy::Celestial { memo: use_memo } => {
                celestial_walk(mesh, start, p, budget, use_memo.then_some(memo))
            }
            Strategy::Abstract(sel) => abstract_walk(mesh, start, p, *sel, budget),
            Strategy::Visibility(variant) => visibility_walk(mesh, start, p, *variant, budget),
            Strategy::Straight => straight_walk(mesh, start, p, budget),
        }
    }
}

/// How batch start edges are chosen for each query.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartMode {
    /// Uniformly random interior half-edge (independent of the query).
    #[default]
    UniformHalfEdge,
    /// The interior half-edge whose midpoint is farthest from the query,
    /// forcing long traversals for per-half-edge cost measurements.
    FarthestFromQuery,
}

/// Optional batch knobs; [`Default`] matches [`run_batch`].
#[derive(Clone, Debug)]
pub struct BatchOptions {
    /// Retain every per-query result and trace in [`BatchReport::raw`].
    pub keep_traces: bool,
    /// Worker threads for query execution; 0 and 1 both mean sequential.
    /// Aggregation is keyed by query index, so results do not depend on this.
    pub threads: usize,
    /// Step budget per walk; defaults to [`default_budget`].
    pub budget: Option<usize>,
    /// Mesh-family label copied into the report and CSV rows.
    pub family: String,
    /// Mesh-size metadata; defaults to the interior face count.
    pub n: Option<usize>,
    pub start_mode: StartMode,
}

impl Default for BatchOptions {
    fn default() -> BatchOptions {
        BatchOptions {
            keep_traces: false,
            threads: 1,
            budget: None,
            family: "custom".to_string(),
            n: None,
            start_mode: StartMode::UniformHalfEdge,
        }
    }
}

/// One sampled (start half-edge, query point) pair; every strategy in the
/// batch runs the identical pair list.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchCase {
    pub start: HalfEdgeId,
    pub query: (f64, f64),
}

/// Result and trace of one strategy on one case, retained under
/// `keep_traces` so aggregates can be recomputed and audited.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawRecord {
    pub strategy: String,
    /// Index into [`BatchReport::cases`].
    pub case: usize,
    pub start: HalfEdgeId,
    pub query: (f64, f64),
    pub result: WalkResult,
    pub trace: WalkTrace,
}

/// Per-strategy aggregates over one batch. Face statistics and counter means
/// cover completed walks (Located or Outside); aborted walks only increment
/// `failures`, since their truncated traces would skew the averages.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategyStats {
    pub strategy: String,
    pub queries: usize,
    pub completed: usize,
    pub located: usize,
    pub outside: usize,
    /// Aborted walks (budget exhausted or cycle detected).
    pub failures: usize,
    pub mean_faces: f64,
    pub median_faces: f64,
    pub max_faces: usize,
    /// Population standard deviation of visited-face counts.
    pub std_faces: f64,
    /// Pooled orientation tests per half-edge traversed by the walk path:
    /// each face crossing passes through a half-edge and its twin, so this
    /// is total orientation tests / (2 × total crossings). On hexagonal
    /// grids it sits near 2, on triangulations well under 4/3.
    pub mean_orient_per_he: f64,
    /// Mean on-the-fly obtuse corner tests per completed walk.
    pub mean_obtuse: f64,
    /// Mean memo-table lookups per completed walk.
    pub mean_memo_lookups: f64,
    /// Mean exact distance comparisons per completed walk.
    pub mean_distance_comparisons: f64,
}

/// Outcome of [`run_batch`]: the shared workload, per-strategy aggregates,
/// metadata for CSV rows, and (optionally) the raw per-query records.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub family: String,
    /// Mesh size metadata (interior faces unless overridden).
    pub n: usize,
    pub seed: u64,
    pub queries: usize,
    pub cases: Vec<BatchCase>,
    pub strategies: Vec<StrategyStats>,
    /// Present iff the batch ran with `keep_traces`; records are grouped by
    /// strategy in run order, `queries` records per strategy.
    pub raw: Option<Vec<RawRecord>>,
}

impl BatchReport {
    /// Rebuilds every [`StrategyStats`] from the retained raw records, or
    /// `None` when traces were not kept. Equality with [`Self::strategies`]
    /// is the audit that aggregation lost no information.
    pub fn recomputed_stats(&self) -> Option<Vec<StrategyStats>> {
        let raw = self.raw.as_ref()?;
        Some(
            raw.chunks(self.queries)
                .map(|chunk| {
                    let outcomes: Vec<(WalkResult, WalkTrace)> = chunk
                        .iter()
                        .map(|r| (r.result, r.trace.clone()))
                        .collect();
                    aggregate(&chunk[0].strategy, &outcomes)
                })
                .collect(),
        )
    }
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("degenerate scaling fit: {0}")]
    DegenerateFit(String),
    #[error(transparent)]
    Gen(#[from] GenError),
}

/// Fraction of interior-face perimeter corners that are strictly obtuse.
/// Always in [0, 1]; 1.0 on hexagonal grids (every corner is 120°) and 0.0
/// on equilateral triangulations.
pub fn obtuse_fraction(mesh: &Mesh) -> f64 {
    let mut total = 0usize;
    let mut obtuse_corners = 0usize;
    for fi in 0..mesh.face_count() {
        let f = FaceId::new(fi);
        if mesh.is_outer(f) {
            continue;
        }
        for e in mesh.face_perimeter(f).expect("face id in range") {
            let (a, b) = mesh.edge_points(e);
            let c = mesh.point(mesh.target(mesh.next(e)));
            total += 1;
            if obtuse(a, b, c).expect("validated mesh has finite, distinct corners") {
                obtuse_corners += 1;
            }
        }
    }
    if total == 0 {
        0.0
    } else {
        obtuse_corners as f64 / total as f64
    }
}

/// Axis-aligned query window: the mesh bounding box shrunk by 10% per side,
/// keeping batch queries away from boundary effects.
fn inner_bbox(mesh: &Mesh) -> (f64, f64, f64, f64) {
    let (mut xmin, mut ymin) = (f64::INFINITY, f64::INFINITY);
    let (mut xmax, mut ymax) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for i in 0..mesh.vertex_count() {
        let p = mesh.point(VertexId::new(i));
        xmin = xmin.min(p.x);
        xmax = xmax.max(p.x);
        ymin = ymin.min(p.y);
        ymax = ymax.max(p.y);
    }
    let (w, h) = (xmax - xmin, ymax - ymin);
    (xmin + 0.1 * w, ymin + 0.1 * h, xmax - 0.1 * w, ymax - 0.1 * h)
}

fn interior_halfedges(mesh: &Mesh) -> Vec<HalfEdgeId> {
    (0..mesh.halfedge_count())
        .map(HalfEdgeId::new)
        .filter(|&e| !mesh.is_outer(mesh.face(e)))
        .collect()
}

fn farthest_halfedge(mesh: &Mesh, interior: &[HalfEdgeId], p: Point) -> HalfEdgeId {
    let mut best = interior[0];
    let mut best_d = f64::NEG_INFINITY;
    for &e in interior {
        let (a, b) = mesh.edge_points(e);
        let dx = (a.x + b.x) / 2.0 - p.x;
        let dy = (a.y + b.y) / 2.0 - p.y;
        let d = dx * dx + dy * dy;
        if d > best_d {
            best_d = d;
            best = e;
        }
    }
    best
}

/// Draw order per case is pinned (x, y, then start) so workloads are stable
/// under both start modes.
fn sample_cases(mesh: &Mesh, queries: usize, seed: u64, start_mode: StartMode) -> Vec<BatchCase> {
    let interior = interior_halfedges(mesh);
    let (xlo, ylo, xhi, yhi) = inner_bbox(mesh);
    let mut rng = SplitMix64::new(seed);
    (0..queries)
        .map(|_| {
            let x = rng.next_range_f64(xlo, xhi);
            let y = rng.next_range_f64(ylo, yhi);
            let start = match start_mode {
                StartMode::UniformHalfEdge => {
                    interior[rng.next_below(interior.len() as u64) as usize]
                }
                StartMode::FarthestFromQuery => {
                    farthest_halfedge(mesh, &interior, Point::new(x, y))
                }
            };
            BatchCase { start, query: (x, y) }
        })
        .collect()
}

fn run_strategy_cases(
    mesh: &Mesh,
    memo: &ObtuseBits,
    strat: Strategy,
    cases: &[BatchCase],
    budget: usize,
    threads: usize,
) -> Vec<(WalkResult, WalkTrace)> {
    let run_one = |c: &BatchCase| {
        strat
            .run(mesh, memo, c.start, Point::new(c.query.0, c.query.1), budget)
            .expect("batch cases are sampled from validated interior state")
    };
    if threads <= 1 || cases.len() < 2 {
        return cases.iter().map(run_one).collect();
    }
    let chunk = cases.len().div_ceil(threads);
    let mut out: Vec<Option<(WalkResult, WalkTrace)>> = vec![None; cases.len()];
    std::thread::scope(|scope| {
        for (case_chunk, out_chunk) in cases.chunks(chunk).zip(out.chunks_mut(chunk)) {
            scope.spawn(move || {
                for (c, slot) in case_chunk.iter().zip(out_chunk.iter_mut()) {
                    *slot = Some(run_one(c));
                }
            });
        }
    });
    out.into_iter()
        .map(|r| r.expect("every case slot filled by its worker"))
        .collect()
}

fn aggregate(label: &str, outcomes: &[(WalkResult, WalkTrace)]) -> StrategyStats {
    let mut faces: Vec<usize> = Vec::new();
    let mut failures = 0usize;
    let (mut located, mut outside) = (0usize, 0usize);
    let (mut orient, mut crossings) = (0u64, 0u64);
    let (mut obtuse_tests, mut memo_lookups, mut dist_cmps) = (0u64, 0u64, 0u64);
    for (result, trace) in outcomes {
        match result {
            WalkResult::Aborted(_) => {
                failures += 1;
                continue;
            }
            WalkResult::Located(_) => located += 1,
            WalkResult::Outside(_) => outside += 1,
        }
        faces.push(trace.visited_faces.len());
        orient += trace.counters.orientation_tests;
        crossings += trace.crossings() as u64;
        obtuse_tests += trace.counters.obtuse_tests;
        memo_lookups += trace.counters.memo_lookups;
        dist_cmps += trace.counters.distance_comparisons;
    }
    let completed = faces.len();
    let per_walk = |sum: u64| {
        if completed == 0 {
            0.0
        } else {
            sum as f64 / completed as f64
        }
    };
    let mean_faces = per_walk(faces.iter().sum::<usize>() as u64);
    let variance = if completed == 0 {
        0.0
    } else {
        faces
            .iter()
            .map(|&v| {
                let d = v as f64 - mean_faces;
                d * d
            })
            .sum::<f64>()
            / completed as f64
    };
    let mut sorted = faces;
    sorted.sort_unstable();
    let median_faces = match sorted.len() {
        0 => 0.0,
        odd if odd % 2 == 1 => sorted[odd / 2] as f64,
        even => (sorted[even / 2 - 1] + sorted[even / 2]) as f64 / 2.0,
    };
    StrategyStats {
        strategy: label.to_string(),
        queries: outcomes.len(),
        completed,
        located,
        outside,
        failures,
        mean_faces,
        median_faces,
        max_faces: sorted.last().copied().unwrap_or(0),
        std_faces: variance.sqrt(),
        mean_orient_per_he: if crossings == 0 {
            0.0
        } else {
            orient as f64 / (2 * crossings) as f64
        },
        mean_obtuse: per_walk(obtuse_tests),
        mean_memo_lookups: per_walk(memo_lookups),
        mean_distance_comparisons: per_walk(dist_cmps),
    }
}

/// Runs every strategy on an identical seeded workload of `queries`
/// (start, point) cases and aggregates the results. Query points are uniform
/// in the inner-80% bounding box; start edges are uniform interior
/// half-edges. Panics if `queries` is zero.
pub fn run_batch(mesh: &Mesh, strategies: &[Strategy], queries: usize, seed: u64) -> BatchReport {
    run_batch_opts(mesh, strategies, queries, seed, &BatchOptions::default())
}

/// [`run_batch`] with explicit options (trace retention, threading, budget,
/// metadata labels, start mode).
pub fn run_batch_opts(
    mesh: &Mesh,
    strategies: &[Strategy],
    queries: usize,
    seed: u64,
    opts: &BatchOptions,
) -> BatchReport {
    assert!(queries > 0, "a batch needs at least one query");
    let cases = sample_cases(mesh, queries, seed, opts.start_mode);
    let budget = opts.budget.unwrap_or_else(|| default_budget(mesh));
    let memo = precompute_obtuse_bits(mesh);
    let mut stats = Vec::new();
    let mut raw: Vec<RawRecord> = Vec::new();
    for &strat in strategies {
        let outcomes = run_strategy_cases(mesh, &memo, strat, &cases, budget, opts.threads);
        stats.push(aggregate(strat.label(), &outcomes));
        if opts.keep_traces {
            raw.extend(outcomes.into_iter().enumerate().map(|(i, (result, trace))| {
                RawRecord {
                    strategy: strat.label().to_string(),
                    case: i,
                    start: cases[i].start,
                    query: cases[i].query,
                    result,
                    trace,
                }
            }));
        }
    }
    BatchReport {
        family: opts.family.clone(),
        n: opts.n.unwrap_or_else(|| mesh.interior_face_count()),
        seed,
        queries,
        cases,
        strategies: stats,
        raw: opts.keep_traces.then_some(raw),
    }
}

/// Renders batch reports as CSV, one row per (report, strategy), with a
/// pinned header and six-decimal fixed-point floats for golden-file tests.
pub fn reports_to_csv(reports: &[BatchReport]) -> String {
    let mut out = String::from(
        "family,n,strategy,queries,mean_faces,std_faces,mean_orient_per_he,mean_obtuse,failures,seed\n",
    );
    for r in reports {
        for s in &r.strategies {
            out.push_str(&format!(
                "{},{},{},{},{:.6},{:.6},{:.6},{:.6},{},{}\n",
                r.family,
                r.n,
                s.strategy,
                s.queries,
                s.mean_faces,
                s.std_faces,
                s.mean_orient_per_he,
                s.mean_obtuse,
                s.failures,
                r.seed,
            ));
        }
    }
    out
}

/// Mesh families the scaling experiment can generate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScalingFamily {
    /// Delaunay triangulations of uniform random points in a square.
    DelaunayUniform,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingRow {
    /// Point count of the generated mesh.
    pub n: usize,
    pub mean_faces: f64,
    pub std_faces: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingTable {
    pub rows: Vec<ScalingRow>,
    /// Least-squares slope of log(mean visited faces) against log(n).
    pub exponent: f64,
    pub queries_per_n: usize,
    pub seed: u64,
}

/// Measures how many faces the corner-rounding walk visits as mesh size
/// grows: for each `n` it builds a fresh mesh, runs `queries_per_n` queries
/// from the farthest interior half-edge to a random interior point, and fits
/// the log-log slope of the mean visited-face count.
///
/// `sizes` must hold at least three strictly ascending values spanning at
/// least two decades, otherwise the fit is rejected as degenerate.
pub fn scaling_experiment(
    family: ScalingFamily,
    sizes: &[usize],
    queries_per_n: usize,
    seed: u64,
) -> Result<ScalingTable, BenchError> {
    assert!(queries_per_n > 0, "scaling needs at least one query per size");
    if sizes.len() < 3 {
        return Err(BenchError::DegenerateFit(format!(
            "need at least 3 sizes, got {}",
            sizes.len()
        )));
    }
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(BenchError::DegenerateFit(
            "sizes must be strictly ascending".to_string(),
        ));
    }
    if sizes[sizes.len() - 1] < 100 * sizes[0] {
        return Err(BenchError::DegenerateFit(
            "sizes must span at least two decades".to_string(),
        ));
    }

    let ScalingFamily::DelaunayUniform = family;
    let mut rng = SplitMix64::new(seed);
    let mut rows = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let points: Vec<Point> = (0..n)
            .map(|_| {
                let x = rng.next_range_f64(0.0, 1000.0);
                let y = rng.next_range_f64(0.0, 1000.0);
                Point::new(x, y)
            })
            .collect();
        let mesh = delaunay_triangulate(&points)?;
        let memo = precompute_obtuse_bits(&mesh);
        let interior = interior_halfedges(&mesh);
        let (xlo, ylo, xhi, yhi) = inner_bbox(&mesh);
        let budget = default_budget(&mesh);
        let mut counts = Vec::with_capacity(queries_per_n);
        for _ in 0..queries_per_n {
            let p = Point::new(rng.next_range_f64(xlo, xhi), rng.next_range_f64(ylo, yhi));
            let start = farthest_halfedge(&mesh, &interior, p);
            let (_, trace) = celestial_walk(&mesh, start, p, budget, Some(&memo))
                .expect("scaling workload is pre-validated");
            counts.push(trace.visited_faces.len());
        }
        let mean = counts.iter().sum::<usize>() as f64 / counts.len() as f64;
        let variance = counts
            .iter()
            .map(|&v| {
                let d = v as f64 - mean;
                d * d
            })
            .sum::<f64>()
            / counts.len() as f64;
        rows.push(ScalingRow {
            n,
            mean_faces: mean,
            std_faces: variance.sqrt(),
        });
    }

    let xs: Vec<f64> = rows.iter().map(|r| (r.n as f64).ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.mean_faces.ln()).collect();
    let xbar = xs.iter().sum::<f64>() / xs.len() as f64;
    let ybar = ys.iter().sum::<f64>() / ys.len() as f64;
    let sxx: f64 = xs.iter().map(|x| (x - xbar) * (x - xbar)).sum();
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - xbar) * (y - ybar))
        .sum();
    Ok(ScalingTable {
        rows,
        exponent: sxy / sxx,
        queries_per_n,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{hex_grid, random_flip_perturb};
    use crate::mesh::build_mesh;

    fn equilateral_patch() -> Mesh {
        let h = 3.0_f64.sqrt() / 2.0;
        let pts = [
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(2.0, 0.0),
            Point::new(0.5, h),
            Point::new(1.5, h),
            Point::new(1.0, 2.0 * h),
        ];
        let faces = vec![vec![0, 1, 3], vec![1, 4, 3], vec![1, 2, 4], vec![3, 4, 5]];
        build_mesh(&pts, &faces).expect("equilateral patch")
    }

    fn uniform_points(n: usize, seed: u64) -> Vec<Point> {
        let mut rng = SplitMix64::new(seed);
        (0..n)
            .map(|_| {
                Point::new(
                    rng.next_range_f64(0.0, 100.0),
                    rng.next_range_f64(0.0, 100.0),
                )
            })
            .collect()
    }

    #[test]
    fn obtuse_fraction_extremes() {
        let hex = hex_grid(3, 3, 1.0).unwrap();
        assert_eq!(obtuse_fraction(&hex), 1.0);
        assert_eq!(obtuse_fraction(&equilateral_patch()), 0.0);
    }

    #[test]
    fn obtuse_fraction_of_triangulations_at_most_one_third() {
        for seed in 0..5u64 {
            let mesh = delaunay_triangulate(&uniform_points(60, 900 + seed)).unwrap();
            let frac = obtuse_fraction(&mesh);
            assert!(frac <= 1.0 / 3.0, "seed {seed}: {frac}");
            let flipped = random_flip_perturb(&mesh, 10, seed).unwrap();
            let frac = obtuse_fraction(&flipped);
            assert!(frac <= 1.0 / 3.0, "flipped seed {seed}: {frac}");
        }
    }

    #[test]
    fn batch_shares_cases_and_is_deterministic() {
        let mesh = delaunay_triangulate(&uniform_points(50, 11)).unwrap();
        let strategies = [
            Strategy::Celestial { memo: false },
            Strategy::Celestial { memo: true },
            Strategy::Abstract(SelectorStrategy::GreedyMinDistance),
            Strategy::Visibility(VisibilityVariant::DeterministicFirst),
            Strategy::Straight,
        ];
        let opts = BatchOptions {
            keep_traces: true,
            ..BatchOptions::default()
        };
        let a = run_batch_opts(&mesh, &strategies, 40, 7, &opts);
        let b = run_batch_opts(&mesh, &strategies, 40, 7, &opts);
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );

        assert_eq!(a.cases.len(), 40);
        assert_eq!(a.strategies.len(), strategies.len());
        for s in &a.strategies {
            assert_eq!(s.failures, 0, "{}", s.strategy);
            assert_eq!(s.completed, 40);
        }

        // Identical workload: every raw record for case i shares its pair.
        let raw = a.raw.as_ref().unwrap();
        assert_eq!(raw.len(), strategies.len() * 40);
        for rec in raw {
            assert_eq!(rec.start, a.cases[rec.case].start);
            assert_eq!(rec.query, a.cases[rec.case].query);
            if let WalkResult::Located(f) = rec.result {
                let p = Point::new(rec.query.0, rec.query.1);
                assert!(matches!(mesh.point_in_face(f, p), Ok(true)));
            }
        }

        // Memoization changes which counter is charged, nothing else.
        let plain = &a.strategies[0];
        let memo = &a.strategies[1];
        assert_eq!(plain.mean_faces, memo.mean_faces);
        assert_eq!(plain.mean_orient_per_he, memo.mean_orient_per_he);
        assert_eq!(memo.mean_obtuse, 0.0);
        assert_eq!(plain.mean_memo_lookups, 0.0);
        assert_eq!(plain.mean_obtuse, memo.mean_memo_lookups);
    }

    #[test]
    fn threaded_batch_matches_sequential() {
        let mesh = delaunay_triangulate(&uniform_points(60, 21)).unwrap();
        let strategies = [
            Strategy::Celestial { memo: true },
            Strategy::Abstract(SelectorStrategy::FirstCandidate),
        ];
        let mut opts = BatchOptions {
            keep_traces: true,
            ..BatchOptions::default()
        };
        let seq = run_batch_opts(&mesh, &strategies, 33, 5, &opts);
        opts.threads = 3;
        let par = run_batch_opts(&mesh, &strategies, 33, 5, &opts);
        assert_eq!(seq, par);
    }

    #[test]
    fn aggregates_recomputable_from_raw_traces() {
        let mesh = hex_grid(5, 5, 1.0).unwrap();
        let strategies = [
            Strategy::Celestial { memo: true },
            Strategy::Abstract(SelectorStrategy::SeededRandom(99)),
        ];
        let opts = BatchOptions {
            keep_traces: true,
            ..BatchOptions::default()
        };
        let report = run_batch_opts(&mesh, &strategies, 25, 3, &opts);
        assert_eq!(report.recomputed_stats().unwrap(), report.strategies);

        let without = run_batch(&mesh, &strategies, 25, 3);
        assert!(without.raw.is_none());
        assert!(without.recomputed_stats().is_none());
    }

    #[test]
    fn csv_layout_is_pinned() {
        let mesh = hex_grid(4, 4, 1.0).unwrap();
        let opts = BatchOptions {
            family: "hex".to_string(),
            ..BatchOptions::default()
        };
        let report = run_batch_opts(
            &mesh,
            &[Strategy::Celestial { memo: true }, Strategy::Straight],
            10,
            42,
            &opts,
        );
        let csv = reports_to_csv(&[report]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(
            lines[0],
            "family,n,strategy,queries,mean_faces,std_faces,mean_orient_per_he,mean_obtuse,failures,seed"
        );
        assert_eq!(lines.len(), 3);
        for row in &lines[1..] {
            assert_eq!(row.split(',').count(), 10);
            assert!(row.starts_with("hex,16,"));
            assert!(row.ends_with(",0,42"));
        }
        assert!(lines[1].contains(",celestial-memo,10,"));
        assert!(lines[2].contains(",straight,10,"));
    }

    #[test]
    fn hex_far_start_orientation_ratio_near_two() {
        let mesh = hex_grid(14, 14, 1.0).unwrap();
        let opts = BatchOptions {
            start_mode: StartMode::FarthestFromQuery,
            ..BatchOptions::default()
        };
        let report = run_batch_opts(&mesh, &[Strategy::Celestial { memo: true }], 150, 2, &opts);
        let s = &report.strategies[0];
        assert_eq!(s.failures, 0);
        assert_eq!(s.located, 150);
        assert!(
            s.mean_orient_per_he > 1.5 && s.mean_orient_per_he < 2.5,
            "ratio {}",
            s.mean_orient_per_he
        );
    }

    #[test]
    fn strategy_names_round_trip() {
        let all = [
            Strategy::Celestial { memo: false },
            Strategy::Celestial { memo: true },
            Strategy::Abstract(SelectorStrategy::FirstCandidate),
            Strategy::Abstract(SelectorStrategy::SeededRandom(5)),
            Strategy::Abstract(SelectorStrategy::GreedyMinDistance),
            Strategy::Visibility(VisibilityVariant::DeterministicFirst),
            Strategy::Visibility(VisibilityVariant::Stochastic(5)),
            Strategy::Straight,
        ];
        for s in all {
            assert_eq!(Strategy::from_name(s.label(), 5), Some(s));
        }
        assert_eq!(
            Strategy::from_name("abstract", 0),
            Some(Strategy::Abstract(SelectorStrategy::FirstCandidate))
        );
        assert_eq!(Strategy::from_name("warp", 0), None);
    }

    #[test]
    fn scaling_rejects_degenerate_size_lists() {
        let err = |sizes: &[usize]| {
            scaling_experiment(ScalingFamily::DelaunayUniform, sizes, 5, 1).unwrap_err()
        };
        assert!(matches!(err(&[100]), BenchError::DegenerateFit(_)));
        assert!(matches!(err(&[100, 1000]), BenchError::DegenerateFit(_)));
        assert!(matches!(
            err(&[100, 1000, 999]),
            BenchError::DegenerateFit(_)
        ));
        assert!(matches!(
            err(&[100, 200, 400]),
            BenchError::DegenerateFit(_)
        ));
    }

    #[test]
    fn scaling_fit_tracks_square_root_growth() {
        let table =
            scaling_experiment(ScalingFamily::DelaunayUniform, &[40, 400, 4000], 25, 17).unwrap();
        assert_eq!(table.rows.len(), 3);
        assert!(table.rows[0].mean_faces < table.rows[1].mean_faces);
        assert!(table.rows[1].mean_faces < table.rows[2].mean_faces);
        assert!(
            table.exponent > 0.15 && table.exponent < 0.9,
            "exponent {}",
            table.exponent
        );
        let again =
            scaling_experiment(ScalingFamily::DelaunayUniform, &[40, 400, 4000], 25, 17).unwrap();
        assert_eq!(table, again);
    }
}
