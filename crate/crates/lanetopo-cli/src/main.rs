//! Command-line interface: evaluate, generate, infer and convert.
//!
//! Exit codes: 0 success, 2 I/O failure, 3 schema/data failure,
//! 4 config failure. `TOOL_THREADS` caps evaluation parallelism.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use lanetopo::config::ToolConfig;
use lanetopo::geometry::{bezier_to_polyline, resample_polyline, BezierCurve, Polyline3};
use lanetopo::metrics::evaluate;
use lanetopo::scenesim::{attach_features, generate_scene, perturb_scene, SceneFrame};
use lanetopo::schema::{
    document_to_frame, frames_to_json, parse_documents, parse_frames, FrameDocument, PointPolicy,
    SchemaError,
};
use lanetopo::topology::{infer_lane_graph, MlpParams};

#[derive(Parser)]
#[command(
    name = "lanetopo",
    version,
    about = "Lane-graph topology inference and evaluation toolkit"
)]
struct Cli {
    /// Config override as key.path=value; repeatable. Values parse as JSON
    /// and fall back to strings.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate predictions against ground truth; prints the report JSON
    Evaluate {
        /// Ground-truth frame file
        #[arg(long)]
        gt: PathBuf,
        /// Prediction frame file
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Generate a synthetic ground-truth / perturbed-prediction dataset pair
    Generate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "out-gt")]
        out_gt: PathBuf,
        #[arg(long = "out-pred")]
        out_pred: PathBuf,
    },
    /// Re-infer the topology matrices of a frame file with MLP heads
    Infer {
        #[arg(long)]
        frames: PathBuf,
        /// Lane-lane relationship MLP parameters (JSON)
        #[arg(long = "lane-mlp")]
        lane_mlp: PathBuf,
        /// Lane-TE relationship MLP parameters (JSON)
        #[arg(long = "te-mlp")]
        te_mlp: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output file; defaults to stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Convert lane representations to the 11-point form
    Convert {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum)]
        mode: ConvertMode,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ConvertMode {
    /// Treat each lane's 5 points as Bézier control points and sample 11
    #[value(name = "bezier5_to_points11")]
    Bezier5ToPoints11,
    /// Resample each lane polyline to 11 equally spaced points
    #[value(name = "resample11")]
    Resample11,
}

#[derive(Debug)]
enum CliError {
    Io(String),
    Schema(String),
    Config(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Io(_) => 2,
            CliError::Schema(_) => 3,
            CliError::Config(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Io(m) | CliError::Schema(m) | CliError::Config(m) => f.write_str(m),
        }
    }
}

impl From<SchemaError> for CliError {
    fn from(e: SchemaError) -> Self {
        match e {
            SchemaError::Io { .. } => CliError::Io(e.to_string()),
            _ => CliError::Schema(e.to_string()),
        }
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("failed to read {}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text)
        .map_err(|e| CliError::Io(format!("failed to write {}: {e}", path.display())))
}

fn load_config(path: Option<&Path>, overrides: &[String]) -> Result<ToolConfig, CliError> {
    let text = match path {
        Some(p) => Some(read_file(p)?),
        None => None,
    };
    ToolConfig::from_json_with_overrides(text.as_deref(), overrides)
        .map_err(|e| CliError::Config(e.to_string()))
}

fn load_frame_file(path: &Path) -> Result<Vec<SceneFrame>, CliError> {
    let text = read_file(path)?;
    Ok(parse_frames(&text)?)
}

fn load_mlp(path: &Path) -> Result<MlpParams, CliError> {
    let text = read_file(path)?;
    let params: MlpParams = serde_json::from_str(&text)
        .map_err(|e| CliError::Schema(format!("{}: malformed MLP JSON: {e}", path.display())))?;
    params
        .validate()
        .map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))?;
    Ok(params)
}

fn save_frame_file(path: &Path, frames: &[SceneFrame]) -> Result<(), CliError> {
    let mut text = frames_to_json(frames);
    text.push('\n');
    write_file(path, &text)
}

fn cmd_evaluate(gt: &Path, pred: &Path, config: &ToolConfig) -> Result<(), CliError> {
    let gt_frames = load_frame_file(gt)?;
    let pred_frames = load_frame_file(pred)?;
    let report = evaluate(&pred_frames, &gt_frames, &config.eval_config())
        .map_err(|e| CliError::Schema(e.to_string()))?;
    let json = serde_json::to_string_pretty(&report).expect("report serialization cannot fail");
    println!("{json}");
    Ok(())
}

fn cmd_generate(config: &ToolConfig, out_gt: &Path, out_pred: &Path) -> Result<(), CliError> {
    let g = &config.generator;
    let gt: Vec<SceneFrame> = (0..g.n_frames)
        .map(|i| {
            let frame = generate_scene(g.seed + i as u64, g.n_lanes, g.n_tes, g.layout);
            match g.feature_dim {
                Some(dim) => attach_features(&frame, dim, g.seed),
                None => frame,
            }
        })
        .collect();
    let pred: Vec<SceneFrame> = gt
        .iter()
        .map(|f| perturb_scene(f, &config.perturbation))
        .collect();
    save_frame_file(out_gt, &gt)?;
    save_frame_file(out_pred, &pred)?;
    eprintln!(
        "generated {} frames ({} layout) -> {} / {}",
        gt.len(),
        g.layout.as_str(),
        out_gt.display(),
        out_pred.display()
    );
    Ok(())
}

/// Expands a gated relationship matrix back over all original instances;
/// rows and columns of instances below the prior threshold stay false.
fn expand_edges(
    edges: &[Vec<bool>],
    row_map: &[usize],
    col_map: &[usize],
    rows: usize,
    cols: usize,
) -> Vec<Vec<bool>> {
    let mut full = vec![vec![false; cols]; rows];
    for (gi, &oi) in row_map.iter().enumerate() {
        for (gj, &oj) in col_map.iter().enumerate() {
            full[oi][oj] = edges[gi][gj];
        }
    }
    full
}

fn cmd_infer(
    frames_path: &Path,
    lane_mlp_path: &Path,
    te_mlp_path: &Path,
    config: &ToolConfig,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let frames = load_frame_file(frames_path)?;
    let lane_mlp = load_mlp(lane_mlp_path)?;
    let te_mlp = load_mlp(te_mlp_path)?;
    let inference = config.inference_config();

    let inferred = frames
        .iter()
        .map(|frame| {
            let graph = infer_lane_graph(
                &frame.lanes,
                &frame.traffic_elements,
                &lane_mlp,
                &te_mlp,
                &inference,
            )
            .map_err(|e| {
                CliError::Schema(format!(
                    "frame \"{}\": {e}; supply frames with \"feature\" vectors to run inference",
                    frame.frame_id
                ))
            })?;
            Ok(SceneFrame {
                frame_id: frame.frame_id.clone(),
                lanes: frame.lanes.clone(),
                traffic_elements: frame.traffic_elements.clone(),
                lane_lane: expand_edges(
                    &graph.lane_lane.edges,
                    &graph.lane_indices,
                    &graph.lane_indices,
                    frame.lanes.len(),
                    frame.lanes.len(),
                ),
                lane_te: expand_edges(
                    &graph.lane_te.edges,
                    &graph.lane_indices,
                    &graph.te_indices,
                    frame.lanes.len(),
                    frame.traffic_elements.len(),
                ),
            })
        })
        .collect::<Result<Vec<SceneFrame>, CliError>>()?;

    match out {
        Some(path) => save_frame_file(path, &inferred)?,
        None => println!("{}", frames_to_json(&inferred)),
    }
    Ok(())
}

fn convert_document(doc: FrameDocument, mode: ConvertMode) -> Result<SceneFrame, CliError> {
    let frame_id = doc.frame_id.clone();
    let mut converted = doc;
    for (i, lane) in converted.lanes.iter_mut().enumerate() {
        let context = |e: &dyn std::fmt::Display| {
            CliError::Schema(format!("frame \"{frame_id}\": lanes[{i}]: {e}"))
        };
        let points = match mode {
            ConvertMode::Bezier5ToPoints11 => {
                let curve = BezierCurve::from_slice(&lane.points).map_err(|e| context(&e))?;
                bezier_to_polyline(&curve, 11).map_err(|e| context(&e))?
            }
            ConvertMode::Resample11 => {
                let line = Polyline3::new(lane.points.clone()).map_err(|e| context(&e))?;
                resample_polyline(&line, 11).map_err(|e| context(&e))?
            }
        };
        lane.points = points.points().to_vec();
    }
    document_to_frame(converted).map_err(CliError::from)
}

fn cmd_convert(input: &Path, mode: ConvertMode, out: &Path) -> Result<(), CliError> {
    let text = read_file(input)?;
    let policy = match mode {
        ConvertMode::Bezier5ToPoints11 => PointPolicy::ExactlyFive,
        ConvertMode::Resample11 => PointPolicy::AtLeastTwo,
    };
    let docs = parse_documents(&text, policy)?;
    let frames = docs
        .into_iter()
        .map(|doc| convert_document(doc, mode))
        .collect::<Result<Vec<SceneFrame>, CliError>>()?;
    save_frame_file(out, &frames)
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Evaluate { gt, pred, config } => {
            let config = load_config(config.as_deref(), &cli.set)?;
            cmd_evaluate(gt, pred, &config)
        }
        Command::Generate {
            config,
            out_gt,
            out_pred,
        } => {
            let config = load_config(Some(config), &cli.set)?;
            cmd_generate(&config, out_gt, out_pred)
        }
        Command::Infer {
            frames,
            lane_mlp,
            te_mlp,
            config,
            out,
        } => {
            let config = load_config(config.as_deref(), &cli.set)?;
            cmd_infer(frames, lane_mlp, te_mlp, &config, out.as_deref())
        }
        Command::Convert { input, mode, out } => cmd_convert(input, *mode, out),
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let threads = match std::env::var("TOOL_THREADS") {
        Ok(v) => v.parse::<usize>().map_err(|_| {
            CliError::Config(format!("TOOL_THREADS must be an integer, got \"{v}\""))
        })?,
        Err(_) => 0, // rayon default
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Config(format!("failed to build thread pool: {e}")))?;
    pool.install(|| dispatch(cli))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
