//! Command-line front end for the `walkmesh` library: generate meshes,
//! locate points with the different walk strategies, compare strategies on a
//! single query, run batch benchmarks, and render walk traces as SVG.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on geometric or validation
//! failures (unreadable files, invalid meshes, bad start edges), 3 when a
//! walk aborts (budget exhausted or cycle detected).

mod svg;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use walkmesh::rng::SplitMix64;
use walkmesh::{
    abstract_walk, celestial_walk, chord_split_subdivision, default_budget, delaunay_triangulate,
    hex_grid, precompute_obtuse_bits, random_flip_perturb, reports_to_csv, run_batch_opts,
    straight_walk, visibility_walk, AbortReason, BatchOptions, BatchReport, BenchError, GenError,
    HalfEdgeId, Mesh, MeshError, ObtuseBits, Point, Rect, SelectorStrategy, Strategy, TraceFile,
    VisibilityVariant, WalkError, WalkResult, WalkTrace,
};

#[derive(Parser)]
#[command(
    name = "walkmesh",
    version,
    about = "Point location in convex planar subdivisions by walking",
    subcommand_required = true,
    arg_required_else_help = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a mesh file.
    Gen(GenArgs),
    /// Check a mesh file's structural and convexity invariants.
    Validate {
        /// Mesh file to check.
        path: PathBuf,
    },
    /// Locate a query point with one walk strategy.
    Locate(LocateArgs),
    /// Run several strategies on one query and report each outcome.
    Compare(CompareArgs),
    /// Benchmark every strategy across mesh sizes and emit CSV.
    Bench(BenchArgs),
    /// Render a recorded walk trace over its mesh as an SVG drawing.
    TraceSvg(TraceSvgArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    /// Hexagonal grid (uses --rows, --cols, --edge-len).
    Hex,
    /// Delaunay triangulation of uniform random points (uses --n).
    Delaunay,
    /// Delaunay triangulation perturbed by random diagonal flips
    /// (uses --n, --flips).
    Flipped,
    /// Rectangle recursively split by random chords (uses --splits).
    Chords,
}

impl Family {
    fn label(self) -> &'static str {
        match self {
            Family::Hex => "hex",
            Family::Delaunay => "delaunay",
            Family::Flipped => "flipped",
            Family::Chords => "chords",
        }
    }
}

#[derive(Args)]
struct GenArgs {
    /// Mesh family to generate.
    #[arg(long, value_enum)]
    family: Family,
    /// Hex-grid rows.
    #[arg(long, default_value_t = 8)]
    rows: usize,
    /// Hex-grid columns.
    #[arg(long, default_value_t = 8)]
    cols: usize,
    /// Hex-grid edge length.
    #[arg(long, default_value_t = 1.0)]
    edge_len: f64,
    /// Point count for delaunay/flipped.
    #[arg(long, default_value_t = 100)]
    n: usize,
    /// Diagonal flips for flipped.
    #[arg(long, default_value_t = 10)]
    flips: usize,
    /// Chord count for chords.
    #[arg(long, default_value_t = 10)]
    splits: usize,
    /// Seed for the random families.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output mesh file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum WalkKind {
    /// Corner-rounding distance-descent walk (always terminates).
    Celestial,
    /// Remembering-stochastic visibility walk, deterministic first-candidate
    /// variant (may cycle on non-Delaunay meshes).
    Visibility,
    /// Candidate-set walk; pick the selector with --selector.
    Abstract,
    /// Segment-following straight walk.
    Straight,
}

#[derive(Clone, Copy, ValueEnum)]
enum Selector {
    /// First candidate in scan order.
    First,
    /// Seeded uniform choice among candidates.
    Random,
    /// Candidate whose edge is nearest to the query.
    Greedy,
}

#[derive(Args)]
struct LocateArgs {
    /// Mesh file.
    #[arg(long)]
    mesh: PathBuf,
    /// Query point as `x,y`.
    #[arg(long, value_parser = parse_point)]
    point: Point,
    /// Start half-edge id; defaults to the file's embedded start marker,
    /// else half-edge 0.
    #[arg(long)]
    start: Option<usize>,
    /// Walk strategy.
    #[arg(long, value_enum, default_value_t = WalkKind::Celestial)]
    walk: WalkKind,
    /// Candidate selector for the abstract walk.
    #[arg(long, value_enum, default_value_t = Selector::First)]
    selector: Selector,
    /// Seed for the random selector.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Step budget; defaults to 10x the half-edge count.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    budget: Option<u64>,
    /// Write the walk trace as JSON to this file.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Precompute the obtuse-corner table for the celestial walk.
    #[arg(long)]
    memo_obtuse: bool,
}

#[derive(Args)]
struct CompareArgs {
    /// Mesh file.
    #[arg(long)]
    mesh: PathBuf,
    /// Query point as `x,y`.
    #[arg(long, value_parser = parse_point)]
    point: Point,
    /// Comma-separated strategy names: celestial, celestial-memo,
    /// abstract-first, abstract-random, abstract-greedy, visibility,
    /// visibility-stochastic, straight.
    #[arg(long, default_value = "celestial,abstract-first,visibility,straight")]
    walks: String,
    /// Start half-edge id; defaults to the file's embedded start marker,
    /// else half-edge 0.
    #[arg(long)]
    start: Option<usize>,
    /// Seed for the seeded strategy variants.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Step budget; defaults to 10x the half-edge count.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    budget: Option<u64>,
    /// Write one CSV row per strategy to this file.
    #[arg(long)]
    out_csv: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Mesh family to benchmark.
    #[arg(long, value_enum)]
    family: Family,
    /// Comma-separated mesh sizes: cells per side for hex, point count for
    /// delaunay/flipped, chord count for chords.
    #[arg(long)]
    sizes: String,
    /// Queries per mesh.
    #[arg(long, default_value_t = 100)]
    queries: usize,
    /// Seed for mesh generation and query sampling.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Write the CSV table here instead of stdout.
    #[arg(long)]
    out_csv: Option<PathBuf>,
    /// Retain per-query raw records (slower, more memory).
    #[arg(long)]
    keep_traces: bool,
    /// Worker threads for query execution (0 or 1 = sequential).
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Args)]
struct TraceSvgArgs {
    /// Mesh file the trace was recorded on.
    #[arg(long)]
    mesh: PathBuf,
    /// Trace file written by `locate --trace`.
    #[arg(long)]
    trace: PathBuf,
    /// Output SVG file.
    #[arg(long)]
    out: PathBuf,
}

/// Errors that end the run before a walk outcome is produced. `Usage` maps
/// to exit code 1, `Failure` (I/O, parsing, invalid geometry) to exit 2.
#[derive(Debug)]
enum CliError {
    Usage(String),
    Failure(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Failure(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) | CliError::Failure(msg) => f.write_str(msg),
        }
    }
}

impl From<MeshError> for CliError {
    fn from(e: MeshError) -> CliError {
        CliError::Failure(e.to_string())
    }
}

impl From<GenError> for CliError {
    fn from(e: GenError) -> CliError {
        CliError::Failure(e.to_string())
    }
}

impl From<WalkError> for CliError {
    fn from(e: WalkError) -> CliError {
        CliError::Failure(e.to_string())
    }
}

impl From<BenchError> for CliError {
    fn from(e: BenchError) -> CliError {
        CliError::Failure(e.to_string())
    }
}

/// Prints a line to stdout, ignoring broken pipes so that piping into
/// `head` and friends does not turn a successful run into a panic.
fn out_line(text: &str) {
    use std::io::Write;
    let _ = writeln!(std::io::stdout(), "{text}");
}

fn out_text(text: &str) {
    use std::io::Write;
    let _ = write!(std::io::stdout(), "{text}");
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(command: Command) -> Result<ExitCode, CliError> {
    match command {
        Command::Gen(args) => cmd_gen(args),
        Command::Validate { path } => cmd_validate(&path),
        Command::Locate(args) => cmd_locate(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Bench(args) => cmd_bench(args),
        Command::TraceSvg(args) => cmd_trace_svg(args),
    }
}

// ---------------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------------

/// Parses `x,y` with locale-independent decimal syntax.
fn parse_point(s: &str) -> Result<Point, String> {
    let (x, y) = s
        .split_once(',')
        .ok_or_else(|| format!("expected `x,y`, got `{s}`"))?;
    let x: f64 = x.trim().parse().map_err(|e| format!("bad x coordinate: {e}"))?;
    let y: f64 = y.trim().parse().map_err(|e| format!("bad y coordinate: {e}"))?;
    let p = Point::new(x, y);
    if !p.is_finite() {
        return Err("coordinates must be finite".to_string());
    }
    Ok(p)
}

/// A mesh file plus the optional start/query markers some files embed
/// (e.g. the checked-in visibility-loop fixture).
struct MeshDocument {
    mesh: Mesh,
    start: Option<usize>,
}

fn read_mesh_document(path: &Path) -> Result<MeshDocument, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Failure(format!("cannot read {}: {e}", path.display())))?;
    let mesh = Mesh::from_json(&text)
        .map_err(|e| CliError::Failure(format!("{}: {e}", path.display())))?;
    // The mesh parsed, so the text is valid JSON; pick up the optional marker.
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Failure(format!("{}: {e}", path.display())))?;
    let start = value.get("start").and_then(|v| v.as_u64()).map(|v| v as usize);
    Ok(MeshDocument { mesh, start })
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text)
        .map_err(|e| CliError::Failure(format!("cannot write {}: {e}", path.display())))
}

fn uniform_points(n: usize, rng: &mut SplitMix64) -> Vec<Point> {
    (0..n)
        .map(|_| Point::new(rng.next_range_f64(0.0, 100.0), rng.next_range_f64(0.0, 100.0)))
        .collect()
}

fn chord_rect() -> Rect {
    Rect::new(0.0, 0.0, 100.0, 80.0)
}

fn resolve_start(mesh: &Mesh, flag: Option<usize>, embedded: Option<usize>) -> Result<HalfEdgeId, CliError> {
    let index = flag.or(embedded).unwrap_or(0);
    if index >= mesh.halfedge_count() {
        return Err(CliError::Failure(format!(
            "start half-edge {index} out of range (mesh has {} half-edges)",
            mesh.halfedge_count()
        )));
    }
    Ok(HalfEdgeId::new(index))
}

fn format_result(result: &WalkResult) -> String {
    match result {
        WalkResult::Located(f) => format!("Located(face {})", f.index()),
        WalkResult::Outside(e) => format!("Outside(half-edge {})", e.index()),
        WalkResult::Aborted(AbortReason::BudgetExhausted) => "Aborted(BudgetExhausted)".to_string(),
        WalkResult::Aborted(AbortReason::CycleDetected) => "Aborted(CycleDetected)".to_string(),
    }
}

fn result_csv_cell(result: &WalkResult) -> String {
    match result {
        WalkResult::Located(f) => format!("located({})", f.index()),
        WalkResult::Outside(e) => format!("outside({})", e.index()),
        WalkResult::Aborted(AbortReason::BudgetExhausted) => "aborted(budget_exhausted)".to_string(),
        WalkResult::Aborted(AbortReason::CycleDetected) => "aborted(cycle_detected)".to_string(),
    }
}

/// Runs one named strategy; the memo table is shared across strategies.
fn run_strategy(
    mesh: &Mesh,
    memo: &ObtuseBits,
    strategy: Strategy,
    start: HalfEdgeId,
    p: Point,
    budget: usize,
) -> Result<(WalkResult, WalkTrace), WalkError> {
    match strategy {
        Strategy::Celestial { memo: use_memo } => {
            celestial_walk(mesh, start, p, budget, use_memo.then_some(memo))
        }
        Strategy::Abstract(sel) => abstract_walk(mesh, start, p, sel, budget),
        Strategy::Visibility(variant) => visibility_walk(mesh, start, p, variant, budget),
        Strategy::Straight => straight_walk(mesh, start, p, budget),
    }
}

// ---------------------------------------------------------------------------
// gen / validate
// ---------------------------------------------------------------------------

fn cmd_gen(args: GenArgs) -> Result<ExitCode, CliError> {
    let mesh = match args.family {
        Family::Hex => hex_grid(args.rows, args.cols, args.edge_len)?,
        Family::Delaunay => {
            let mut rng = SplitMix64::new(args.seed);
            delaunay_triangulate(&uniform_points(args.n, &mut rng))?
        }
        Family::Flipped => {
            let mut rng = SplitMix64::new(args.seed);
            let base = delaunay_triangulate(&uniform_points(args.n, &mut rng))?;
            random_flip_perturb(&base, args.flips, rng.next_u64())?
        }
        Family::Chords => chord_split_subdivision(args.splits, args.seed, chord_rect())?,
    };
    mesh.write_file(&args.out)?;
    out_line(&format!(
        "wrote {}: {} vertices, {} half-edges, {} interior faces",
        args.out.display(),
        mesh.vertex_count(),
        mesh.halfedge_count(),
        mesh.interior_face_count()
    ));
    Ok(ExitCode::SUCCESS)
}

fn cmd_validate(path: &Path) -> Result<ExitCode, CliError> {
    let doc = read_mesh_document(path)?;
    let violations = doc.mesh.validate();
    if !violations.is_empty() {
        for v in &violations {
            eprintln!("violation: {}", v.message);
        }
        return Err(CliError::Failure(format!(
            "{}: {} invariant violation(s)",
            path.display(),
            violations.len()
        )));
    }
    out_line(&format!(
        "ok: {} vertices, {} half-edges, {} interior faces",
        doc.mesh.vertex_count(),
        doc.mesh.halfedge_count(),
        doc.mesh.interior_face_count()
    ));
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// locate / compare
// ---------------------------------------------------------------------------

fn cmd_locate(args: LocateArgs) -> Result<ExitCode, CliError> {
    let doc = read_mesh_document(&args.mesh)?;
    let mesh = &doc.mesh;
    let start = resolve_start(mesh, args.start, doc.start)?;
    let budget = args.budget.map(|b| b as usize).unwrap_or_else(|| default_budget(mesh));
    let (result, trace) = match args.walk {
        WalkKind::Celestial => {
            let memo = args.memo_obtuse.then(|| precompute_obtuse_bits(mesh));
            celestial_walk(mesh, start, args.point, budget, memo.as_ref())?
        }
        WalkKind::Visibility => visibility_walk(
            mesh,
            start,
            args.point,
            VisibilityVariant::DeterministicFirst,
            budget,
        )?,
        WalkKind::Abstract => {
            let sel = match args.selector {
                Selector::First => SelectorStrategy::FirstCandidate,
                Selector::Random => SelectorStrategy::SeededRandom(args.seed),
                Selector::Greedy => SelectorStrategy::GreedyMinDistance,
            };
            abstract_walk(mesh, start, args.point, sel, budget)?
        }
        WalkKind::Straight => straight_walk(mesh, start, args.point, budget)?,
    };
    out_line(&format_result(&result));
    let c = trace.counters;
    out_line(&format!(
        "steps={} crossings={} orientation_tests={} obtuse_tests={} memo_lookups={} distance_comparisons={}",
        trace.steps.len(),
        trace.crossings(),
        c.orientation_tests,
        c.obtuse_tests,
        c.memo_lookups,
        c.distance_comparisons
    ));
    if let Some(path) = &args.trace {
        let file = TraceFile::new(start, args.point, &trace, result);
        write_text(path, &file.to_json())?;
    }
    Ok(if matches!(result, WalkResult::Aborted(_)) {
        ExitCode::from(3)
    } else {
        ExitCode::SUCCESS
    })
}

fn cmd_compare(args: CompareArgs) -> Result<ExitCode, CliError> {
    let strategies: Vec<Strategy> = args
        .walks
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|name| {
            Strategy::from_name(name, args.seed).ok_or_else(|| {
                CliError::Usage(format!(
                    "unknown strategy `{name}`; valid names: celestial, celestial-memo, \
                     abstract-first, abstract-random, abstract-greedy, visibility, \
                     visibility-stochastic, straight"
                ))
            })
        })
        .collect::<Result<_, _>>()?;
    if strategies.is_empty() {
        return Err(CliError::Usage("--walks needs at least one strategy".to_string()));
    }

    let doc = read_mesh_document(&args.mesh)?;
    let mesh = &doc.mesh;
    let start = resolve_start(mesh, args.start, doc.start)?;
    let budget = args.budget.map(|b| b as usize).unwrap_or_else(|| default_budget(mesh));
    let memo = precompute_obtuse_bits(mesh);

    let mut any_aborted = false;
    let mut csv = String::from(
        "strategy,result,crossings,orientation_tests,obtuse_tests,memo_lookups,distance_comparisons\n",
    );
    for strategy in &strategies {
        let (result, trace) = run_strategy(mesh, &memo, *strategy, start, args.point, budget)?;
        any_aborted |= matches!(result, WalkResult::Aborted(_));
        let c = trace.counters;
        out_line(&format!(
            "{}: {} [crossings={} orientation_tests={}]",
            strategy.label(),
            format_result(&result),
            trace.crossings(),
            c.orientation_tests
        ));
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            strategy.label(),
            result_csv_cell(&result),
            trace.crossings(),
            c.orientation_tests,
            c.obtuse_tests,
            c.memo_lookups,
            c.distance_comparisons
        ));
    }
    if let Some(path) = &args.out_csv {
        write_text(path, &csv)?;
    }
    Ok(if any_aborted { ExitCode::from(3) } else { ExitCode::SUCCESS })
}

// ---------------------------------------------------------------------------
// bench
// ---------------------------------------------------------------------------

fn parse_sizes(text: &str) -> Result<Vec<usize>, CliError> {
    let sizes: Result<Vec<usize>, _> = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::parse::<usize>)
        .collect();
    let sizes = sizes.map_err(|e| CliError::Usage(format!("bad --sizes: {e}")))?;
    if sizes.is_empty() {
        return Err(CliError::Usage("--sizes needs at least one entry".to_string()));
    }
    if sizes.contains(&0) {
        return Err(CliError::Usage("--sizes entries must be positive".to_string()));
    }
    Ok(sizes)
}

/// Builds one benchmark mesh. `size` means cells per side for hex, point
/// count for delaunay/flipped, and chord count for chords.
fn build_bench_mesh(family: Family, size: usize, seed: u64) -> Result<Mesh, CliError> {
    Ok(match family {
        Family::Hex => hex_grid(size, size, 1.0)?,
        Family::Delaunay => {
            let mut rng = SplitMix64::new(seed);
            delaunay_triangulate(&uniform_points(size, &mut rng))?
        }
        Family::Flipped => {
            let mut rng = SplitMix64::new(seed);
            let base = delaunay_triangulate(&uniform_points(size, &mut rng))?;
            random_flip_perturb(&base, (size / 10).max(1), rng.next_u64())?
        }
        Family::Chords => chord_split_subdivision(size, seed, chord_rect())?,
    })
}

fn cmd_bench(args: BenchArgs) -> Result<ExitCode, CliError> {
    let sizes = parse_sizes(&args.sizes)?;
    let strategies = [
        Strategy::Celestial { memo: false },
        Strategy::Celestial { memo: true },
        Strategy::Abstract(SelectorStrategy::FirstCandidate),
        Strategy::Abstract(SelectorStrategy::SeededRandom(args.seed)),
        Strategy::Abstract(SelectorStrategy::GreedyMinDistance),
        Strategy::Visibility(VisibilityVariant::DeterministicFirst),
        Strategy::Visibility(VisibilityVariant::Stochastic(args.seed)),
        Strategy::Straight,
    ];
    let mut reports: Vec<BatchReport> = Vec::new();
    for (i, &size) in sizes.iter().enumerate() {
        let mesh_seed = args.seed.wrapping_add(i as u64);
        let mesh = build_bench_mesh(args.family, size, mesh_seed)?;
        let opts = BatchOptions {
            keep_traces: args.keep_traces,
            threads: args.threads,
            budget: None,
            family: args.family.label().to_string(),
            n: Some(size),
            start_mode: Default::default(),
        };
        reports.push(run_batch_opts(&mesh, &strategies, args.queries, args.seed, &opts));
        eprintln!(
            "benchmarked {} size {size}: {} interior faces, {} queries x {} strategies",
            args.family.label(),
            mesh.interior_face_count(),
            args.queries,
            strategies.len()
        );
    }
    let csv = reports_to_csv(&reports);
    match &args.out_csv {
        Some(path) => {
            write_text(path, &csv)?;
            out_line(&format!("wrote {}", path.display()));
        }
        None => out_text(&csv),
    }
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// trace-svg
// ---------------------------------------------------------------------------

fn cmd_trace_svg(args: TraceSvgArgs) -> Result<ExitCode, CliError> {
    let doc = read_mesh_document(&args.mesh)?;
    let mesh = &doc.mesh;
    let text = std::fs::read_to_string(&args.trace)
        .map_err(|e| CliError::Failure(format!("cannot read {}: {e}", args.trace.display())))?;
    let trace = TraceFile::from_json(&text)
        .map_err(|e| CliError::Failure(format!("{}: {e}", args.trace.display())))?;

    if trace.start >= mesh.halfedge_count()
        || trace.steps.iter().any(|s| s.edge.index() >= mesh.halfedge_count())
        || trace.visited_faces.iter().any(|f| f.index() >= mesh.face_count())
    {
        return Err(CliError::Failure(format!(
            "trace {} does not fit mesh {}: edge or face id out of range",
            args.trace.display(),
            args.mesh.display()
        )));
    }
    if !trace.query.0.is_finite() || !trace.query.1.is_finite() {
        return Err(CliError::Failure("trace query point is not finite".to_string()));
    }

    write_text(&args.out, &svg::render(mesh, &trace))?;
    out_line(&format!("wrote {}", args.out.display()));
    Ok(ExitCode::SUCCESS)
}
