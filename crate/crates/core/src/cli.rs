//! The `camgraph` command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 validation failure.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::PoseSet;
use crate::graph::{
    CameraGraph, EdgeWeightParams, GraphParams, NodeWeighting, DEFAULT_MIN_PROBABILITY,
};
use crate::io::colmap::write_colmap_images;
use crate::io::matches::{emit_match_list, parse_match_list};
use crate::io::ply::{ply_encoding, read_ply, write_ply, Encoding};
use crate::io::poses::write_pose_json;
use crate::io::raster::{load_depth, load_image};
use crate::io::trajectory::{generate_trajectory, TrajectoryKind};
use crate::io::weights::{ParamsEcho, WeightsExport};
use crate::io::{load_poses, read_bytes, read_to_string, write_atomic};
use crate::octree::{Octree, OctreeParams};
use crate::pairing::{select_pairs, PairSet, PairingParams};
use crate::photometric::{
    consistency_loss, ConsistencyInputs, ConsistencyResult, Intrinsics, DEFAULT_LAMBDA,
};
use crate::quadrant_filter::{filter_pairs, FilterMode, FilterReport, StateTable};
use crate::validation::{run_validation, ValidationParams};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "camgraph",
    version,
    about = "Camera-graph preprocessing for large-scene reconstruction"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic camera set.
    Gen(GenArgs),
    /// Select image pairs from camera positions.
    Pairs(PairsArgs),
    /// Drop pairs whose relative pose is not admissible.
    Filter(FilterArgs),
    /// Build the weighted camera graph and export weights.
    Graph(GraphArgs),
    /// Prune a PLY point cloud with an octree.
    Octree(OctreeArgs),
    /// Evaluate the photometric consistency loss of one camera pair.
    Consistency(ConsistencyArgs),
    /// Run the built-in self-checks.
    Validate(ValidateArgs),
    /// pairs, filter and graph (and optionally octree) in one go.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PoseFormat {
    Json,
    Colmap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PlyEncoding {
    Ascii,
    Binary,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub kind: TrajectoryKind,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = PoseFormat::Json)]
    pub format: PoseFormat,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct PairingArgs {
    /// Nearest neighbours per camera.
    #[arg(long = "r", default_value_t = 5)]
    pub r: usize,
    /// Gap between concentric picks.
    #[arg(long = "h", default_value_t = 20)]
    pub h: usize,
    /// Concentric picks per period.
    #[arg(long = "w", default_value_t = 1)]
    pub w: usize,
}

impl PairingArgs {
    fn params(&self) -> Result<PairingParams> {
        PairingParams::new(self.r, self.h, self.w)
    }
}

#[derive(Debug, Args)]
pub struct PairsArgs {
    /// Pose JSON or COLMAP images.txt.
    #[arg(long)]
    pub poses: PathBuf,
    #[command(flatten)]
    pub pairing: PairingArgs,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct FilterOptions {
    #[arg(long, value_enum, default_value_t = FilterMode::Strict)]
    pub mode: FilterMode,
    /// State table replacing the built-in one.
    #[arg(long)]
    pub state_table: Option<PathBuf>,
}

impl FilterOptions {
    fn table(&self) -> Result<StateTable> {
        match &self.state_table {
            Some(path) => StateTable::parse(&read_to_string(path)?),
            None => Ok(StateTable::builtin()),
        }
    }
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    #[arg(long)]
    pub poses: PathBuf,
    /// Match list to filter.
    #[arg(long)]
    pub matches: PathBuf,
    #[command(flatten)]
    pub filter: FilterOptions,
    /// Filter report JSON.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct GraphOptions {
    /// Distance decay of edge weights.
    #[arg(long = "k", default_value_t = 1.0)]
    pub k: f64,
    #[arg(long = "min-prob", default_value_t = DEFAULT_MIN_PROBABILITY)]
    pub min_prob: f64,
    #[arg(long, value_enum, default_value_t = NodeWeighting::Betweenness)]
    pub weighting: NodeWeighting,
    /// Scale distances so the median edge is one unit long.
    #[arg(long)]
    pub normalize_positions: bool,
}

impl GraphOptions {
    fn params(&self) -> GraphParams {
        GraphParams {
            edge: EdgeWeightParams {
                k: self.k,
                ..EdgeWeightParams::default()
            },
            min_probability: self.min_prob,
            weighting: self.weighting,
            normalize_positions: self.normalize_positions,
        }
    }
}

#[derive(Debug, Args)]
pub struct GraphArgs {
    #[arg(long)]
    pub poses: PathBuf,
    #[arg(long)]
    pub matches: PathBuf,
    #[command(flatten)]
    pub graph: GraphOptions,
    /// Recorded in the export only.
    #[arg(long = "r")]
    pub r: Option<usize>,
    /// Recorded in the export only.
    #[arg(long = "h")]
    pub h: Option<usize>,
    /// Recorded in the export only.
    #[arg(long = "w")]
    pub w: Option<usize>,
    /// Recorded in the export only.
    #[arg(long, value_enum)]
    pub mode: Option<FilterMode>,
    /// Recorded in the export only.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct OctreeOptions {
    /// Leaves with fewer points are removed.
    #[arg(long, default_value_t = 1)]
    pub tau: usize,
    /// Global output point budget.
    #[arg(long)]
    pub target_points: Option<usize>,
    #[arg(long, default_value_t = 10)]
    pub max_depth: u32,
    #[arg(long, default_value_t = 32)]
    pub leaf_capacity: usize,
    /// Output encoding; defaults to the input's.
    #[arg(long, value_enum)]
    pub encoding: Option<PlyEncoding>,
}

impl OctreeOptions {
    fn params(&self, seed: u64) -> OctreeParams {
        OctreeParams {
            max_depth: self.max_depth,
            leaf_capacity: self.leaf_capacity,
            tau: self.tau,
            target_count: self.target_points,
            seed,
        }
    }
}

#[derive(Debug, Args)]
pub struct OctreeArgs {
    #[arg(short, long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub octree: OctreeOptions,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct ConsistencyArgs {
    /// Image of camera i (PNG or PFM).
    #[arg(long)]
    pub image_i: PathBuf,
    /// Image of camera j (PNG or PFM).
    #[arg(long)]
    pub image_j: PathBuf,
    /// Depth of camera i (PFM).
    #[arg(long)]
    pub depth_i: PathBuf,
    /// Intrinsics and relative pose JSON.
    #[arg(long)]
    pub cameras: PathBuf,
    #[arg(long = "lambda", default_value_t = DEFAULT_LAMBDA)]
    pub lambda: f64,
    /// Result JSON; printed to stdout when absent.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Monte Carlo pairs per filter mode.
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: usize,
    /// Direction pairs for the orientation oracle check.
    #[arg(long, default_value_t = 100_000)]
    pub oracle_pairs: usize,
    /// Random pose sets for the connectivity check.
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, default_value_t = 300)]
    pub max_cameras: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub state_table: Option<PathBuf>,
    /// Also check the pairing graph of these poses.
    #[arg(long)]
    pub poses: Option<PathBuf>,
    #[command(flatten)]
    pub pairing: PairingArgs,
    /// Report JSON; printed to stdout when absent.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[arg(long)]
    pub poses: PathBuf,
    #[command(flatten)]
    pub pairing: PairingArgs,
    #[command(flatten)]
    pub filter: FilterOptions,
    #[command(flatten)]
    pub graph: GraphOptions,
    /// Point cloud to prune.
    #[arg(long)]
    pub points: Option<PathBuf>,
    #[command(flatten)]
    pub octree: OctreeOptions,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

/// Intrinsics and relative pose for `consistency`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraPairFile {
    pub k_i: Intrinsics,
    pub k_j: Intrinsics,
    /// Rows of the rotation from camera i to camera j.
    pub r_ji: [[f64; 3]; 3],
    pub t_ji: [f64; 3],
}

#[derive(Debug, Serialize)]
struct ConsistencyOutput {
    version: u32,
    lambda: f64,
    #[serde(flatten)]
    result: ConsistencyResult,
}

fn json_text<T: Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => write_atomic(p, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_pairs(matches: &Path, poses: &PoseSet) -> Result<PairSet> {
    parse_match_list(&read_to_string(matches)?, poses)
}

fn cmd_gen(args: &GenArgs) -> Result<()> {
    let poses = generate_trajectory(args.kind, args.n, args.noise, args.seed)?;
    let text = match args.format {
        PoseFormat::Json => write_pose_json(&poses)?,
        PoseFormat::Colmap => write_colmap_images(&poses),
    };
    write_atomic(&args.output, text.as_bytes())
}

fn cmd_pairs(args: &PairsArgs) -> Result<()> {
    let params = args.pairing.params()?;
    let poses = load_poses(&args.poses)?;
    let pairs = select_pairs(&poses, &params)?;
    log::info!("{} pairs for {} cameras", pairs.len(), poses.len());
    write_atomic(&args.output, emit_match_list(&pairs, &poses)?.as_bytes())
}

fn run_filter(
    poses: &PoseSet,
    pairs: &PairSet,
    opts: &FilterOptions,
) -> Result<(PairSet, FilterReport)> {
    let table = opts.table()?;
    filter_pairs(poses, pairs, &table, opts.mode)
}

fn cmd_filter(args: &FilterArgs) -> Result<()> {
    let poses = load_poses(&args.poses)?;
    let pairs = load_pairs(&args.matches, &poses)?;
    let (kept, report) = run_filter(&poses, &pairs, &args.filter)?;
    log::info!("kept {} of {} pairs", report.kept, report.input_pairs);
    write_atomic(&args.output, emit_match_list(&kept, &poses)?.as_bytes())?;
    if let Some(path) = &args.report {
        write_atomic(path, json_text(&report)?.as_bytes())?;
    }
    Ok(())
}

fn export_graph(
    poses: &PoseSet,
    pairs: &PairSet,
    opts: &GraphOptions,
    echo: ParamsEcho,
) -> Result<String> {
    let graph = CameraGraph::build(poses, pairs, &opts.params())?;
    WeightsExport::from_graph(&graph, echo).to_json()
}

fn cmd_graph(args: &GraphArgs) -> Result<()> {
    let poses = load_poses(&args.poses)?;
    let pairs = load_pairs(&args.matches, &poses)?;
    let echo = ParamsEcho {
        r: args.r,
        h: args.h,
        w: args.w,
        mode: args.mode,
        k: args.graph.k,
        p_min: args.graph.min_prob,
        seed: args.seed,
    };
    write_atomic(
        &args.output,
        export_graph(&poses, &pairs, &args.graph, echo)?.as_bytes(),
    )
}

fn prune_ply(input: &Path, output: &Path, opts: &OctreeOptions, seed: u64) -> Result<()> {
    let params = opts.params(seed);
    params.validate()?;
    let bytes = read_bytes(input)?;
    let encoding = match opts.encoding {
        Some(PlyEncoding::Ascii) => Encoding::Ascii,
        Some(PlyEncoding::Binary) => Encoding::BinaryLittleEndian,
        None => ply_encoding(&bytes)?,
    };
    let cloud = read_ply(&bytes)?;
    let tree = Octree::build(cloud.positions(), &params)?;
    let keep = tree.prune(&params);
    log::info!("kept {} of {} points", keep.len(), cloud.len());
    write_atomic(output, &write_ply(&cloud.select(&keep), encoding))
}

fn cmd_octree(args: &OctreeArgs) -> Result<()> {
    prune_ply(&args.input, &args.output, &args.octree, args.seed)
}

fn cmd_consistency(args: &ConsistencyArgs) -> Result<()> {
    let cams: CameraPairFile = serde_json::from_str(&read_to_string(&args.cameras)?)?;
    let image_i = load_image(&args.image_i)?;
    let image_j = load_image(&args.image_j)?;
    let depth_i = load_depth(&args.depth_i)?;
    let r = cams.r_ji;
    let inputs = ConsistencyInputs {
        image_i: &image_i,
        image_j: &image_j,
        k_i: cams.k_i,
        k_j: cams.k_j,
        r_ji: Matrix3::new(
            r[0][0], r[0][1], r[0][2], r[1][0], r[1][1], r[1][2], r[2][0], r[2][1], r[2][2],
        ),
        t_ji: Vector3::from(cams.t_ji),
        depth_i: &depth_i,
        lambda: args.lambda,
    };
    let result = consistency_loss(&inputs)?;
    let out = ConsistencyOutput {
        version: 1,
        lambda: args.lambda,
        result,
    };
    write_or_print(args.output.as_deref(), &json_text(&out)?)
}

fn cmd_validate(args: &ValidateArgs) -> Result<bool> {
    let table = match &args.state_table {
        Some(path) => StateTable::parse(&read_to_string(path)?)?,
        None => StateTable::builtin(),
    };
    let pairing = args.pairing.params()?;
    let poses = args.poses.as_deref().map(load_poses).transpose()?;
    let params = ValidationParams {
        samples: args.samples,
        oracle_pairs: args.oracle_pairs,
        trials: args.trials,
        max_cameras: args.max_cameras,
        seed: args.seed,
    };
    let report = run_validation(&table, &params, poses.as_ref().map(|p| (p, &pairing)))?;
    for check in &report.checks {
        let verdict = if check.passed { "PASS" } else { "FAIL" };
        eprintln!(
            "{verdict} {}: {} (expected {}) {}",
            check.name, check.value, check.expected, check.detail
        );
    }
    write_or_print(args.output.as_deref(), &json_text(&report)?)?;
    Ok(report.passed)
}

fn cmd_pipeline(args: &PipelineArgs) -> Result<()> {
    let pairing = args.pairing.params()?;
    std::fs::create_dir_all(&args.out_dir).map_err(|e| Error::io(&args.out_dir, e))?;
    let out = |name: &str| args.out_dir.join(name);

    let poses = load_poses(&args.poses)?;
    let pairs = select_pairs(&poses, &pairing)?;
    write_atomic(
        out("pairs.txt"),
        emit_match_list(&pairs, &poses)?.as_bytes(),
    )?;

    let (kept, report) = run_filter(&poses, &pairs, &args.filter)?;
    write_atomic(
        out("matches.txt"),
        emit_match_list(&kept, &poses)?.as_bytes(),
    )?;
    write_atomic(out("filter_report.json"), json_text(&report)?.as_bytes())?;

    let echo = ParamsEcho {
        r: Some(pairing.r),
        h: Some(pairing.h),
        w: Some(pairing.w),
        mode: Some(args.filter.mode),
        k: args.graph.k,
        p_min: args.graph.min_prob,
        seed: Some(args.seed),
    };
    write_atomic(
        out("weights.json"),
        export_graph(&poses, &kept, &args.graph, echo)?.as_bytes(),
    )?;

    if let Some(points) = &args.points {
        prune_ply(points, &out("points_pruned.ply"), &args.octree, args.seed)?;
    }
    log::info!(
        "{} cameras, {} pairs, {} after filtering",
        poses.len(),
        pairs.len(),
        kept.len()
    );
    Ok(())
}

/// Runs a parsed command. `Ok(false)` means a validation check failed.
pub fn execute(cli: &Cli) -> Result<bool> {
    match &cli.command {
        Command::Gen(a) => cmd_gen(a).map(|_| true),
        Command::Pairs(a) => cmd_pairs(a).map(|_| true),
        Command::Filter(a) => cmd_filter(a).map(|_| true),
        Command::Graph(a) => cmd_graph(a).map(|_| true),
        Command::Octree(a) => cmd_octree(a).map(|_| true),
        Command::Consistency(a) => cmd_consistency(a).map(|_| true),
        Command::Validate(a) => cmd_validate(a),
        Command::Pipeline(a) => cmd_pipeline(a).map(|_| true),
    }
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidParams(_) => EXIT_USAGE,
        _ => EXIT_DATA,
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_VALIDATION,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
