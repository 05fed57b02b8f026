//! `cortex-atlas` command-line driver: one subcommand per pipeline stage,
//! each writing a JSON artifact plus a run report, and a local HTTP service
//! that serves an exported scene to the viewer.

pub mod artifact;
pub mod commands;
pub mod serve;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use cortex_atlas::mesh::{Hemisphere, RegionId};
use cortex_atlas::param::Preconditioner;
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "cortex-atlas", version, about = "Cortical surface mapping and connectivity scenes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Harmonic disk map and area correction of one hemisphere mesh.
    Param(ParamArgs),
    /// Lift disk maps onto the sphere, align the hemispheres, explode.
    Sphere(SphereArgs),
    /// Greedy MDF clustering of a streamline file.
    Cluster(ClusterArgs),
    /// Endpoint assignment, bundle coalescing and the connectivity graph.
    Connect(ConnectArgs),
    /// Scalar channel and seed-correlation overlays.
    Overlay(OverlayArgs),
    /// Assemble artifacts into a scene document.
    Export(ExportArgs),
    /// Serve a scene over local HTTP.
    Serve(ServeArgs),
    /// Write the synthetic two-hemisphere demo inputs.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct ReportArg {
    /// Run report path; defaults to the output path with `.report.json` appended.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ParamArgs {
    /// Mesh file (.off, .vtk or .json).
    #[arg(long)]
    pub mesh: PathBuf,
    /// Per-vertex label CSV: `vertex_id,label_id[,name,r,g,b]`.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Mesh identifier; defaults to the mesh file stem.
    #[arg(long)]
    pub id: Option<String>,
    #[arg(long)]
    pub hemisphere: Option<Hemisphere>,
    /// Region removed before mapping (the medial wall).
    #[arg(long)]
    pub remove_label: Option<RegionId>,
    #[arg(long, default_value_t = 500)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 0.1)]
    pub step: f64,
    #[arg(long, default_value_t = 1e-7)]
    pub tol: f64,
    #[arg(long, default_value = "laplacian", value_parser = parse_preconditioner)]
    pub preconditioner: Preconditioner,
    /// Disk map artifact.
    #[arg(long)]
    pub out: PathBuf,
    /// Processed mesh (after region removal) as mesh JSON.
    #[arg(long)]
    pub mesh_out: Option<PathBuf>,
    #[command(flatten)]
    pub report: ReportArg,
}

fn parse_preconditioner(s: &str) -> Result<Preconditioner, String> {
    match s {
        "none" => Ok(Preconditioner::None),
        "laplacian" => Ok(Preconditioner::Laplacian),
        _ => Err(format!("unknown preconditioner '{s}' (none, laplacian)")),
    }
}

#[derive(Debug, Args)]
pub struct SphereArgs {
    /// Processed mesh JSON, left hemisphere first; one or two.
    #[arg(long = "mesh", required = true)]
    pub meshes: Vec<PathBuf>,
    /// Disk map artifacts in the same order as `--mesh`.
    #[arg(long = "map", required = true)]
    pub maps: Vec<PathBuf>,
    #[arg(long, default_value_t = cortex_atlas::sphere::DEFAULT_SEAM_SAMPLES)]
    pub seam_samples: usize,
    /// Exploded-view scale factor (repeatable).
    #[arg(long = "scale", default_values_t = vec![1.0], allow_negative_numbers = true)]
    pub scales: Vec<f64>,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub report: ReportArg,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[arg(long)]
    pub streamlines: PathBuf,
    /// `text` or `binary`; guessed from the extension when omitted.
    #[arg(long)]
    pub format: Option<String>,
    #[arg(long, default_value_t = cortex_atlas::tract::DEFAULT_THETA_MM, allow_negative_numbers = true)]
    pub theta: f64,
    #[arg(long, default_value_t = cortex_atlas::tract::DEFAULT_K)]
    pub k: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub report: ReportArg,
}

#[derive(Debug, Args)]
pub struct ConnectArgs {
    #[arg(long)]
    pub clusters: PathBuf,
    /// The streamline file the clusters were built from.
    #[arg(long)]
    pub streamlines: PathBuf,
    #[arg(long)]
    pub format: Option<String>,
    #[arg(long = "mesh", required = true)]
    pub meshes: Vec<PathBuf>,
    /// Disk map artifacts, one per mesh, for endpoint transfer.
    #[arg(long = "map")]
    pub maps: Vec<PathBuf>,
    /// Sphere artifact for endpoint transfer.
    #[arg(long)]
    pub sphere: Option<PathBuf>,
    #[arg(long = "dmax", default_value_t = cortex_atlas::tract::DEFAULT_DMAX_MM, allow_negative_numbers = true)]
    pub d_max: f64,
    #[arg(long)]
    pub out: PathBuf,
    /// Adjacency CSV `region_a,region_b,bundle_count,streamline_count`.
    #[arg(long)]
    pub graph_csv: Option<PathBuf>,
    #[command(flatten)]
    pub report: ReportArg,
}

#[derive(Debug, Args)]
pub struct OverlayArgs {
    #[arg(long = "mesh", required = true)]
    pub meshes: Vec<PathBuf>,
    /// Disk map artifacts, used to map time-series rows of the meshes as loaded.
    #[arg(long = "map")]
    pub maps: Vec<PathBuf>,
    /// Vertex channel exported as an overlay (repeatable).
    #[arg(long = "channel")]
    pub channels: Vec<String>,
    /// TSF1 time-series file.
    #[arg(long)]
    pub tsf: Option<PathBuf>,
    #[arg(long, conflicts_with = "seed_region")]
    pub seed_vertex: Option<usize>,
    #[arg(long)]
    pub seed_region: Option<RegionId>,
    #[arg(long)]
    pub regress_mean_gray: bool,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub report: ReportArg,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long = "mesh", required = true)]
    pub meshes: Vec<PathBuf>,
    #[arg(long = "map")]
    pub maps: Vec<PathBuf>,
    #[arg(long)]
    pub sphere: Option<PathBuf>,
    #[arg(long)]
    pub bundles: Option<PathBuf>,
    #[arg(long = "overlays")]
    pub overlays: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub report: ReportArg,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub scene: PathBuf,
    /// Time series enabling `/api/correlation`.
    #[arg(long)]
    pub tsf: Option<PathBuf>,
    /// Directory with viewer assets served under `/`.
    #[arg(long)]
    pub assets: Option<PathBuf>,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Rings of the hemisphere construction; 99 gives about 30k vertices.
    #[arg(long, default_value_t = 30)]
    pub rings: usize,
    #[arg(long, default_value_t = 2000)]
    pub streamlines: usize,
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

/// Machine-readable summary written next to every artifact.
#[derive(Debug, Clone, Default, Serialize)]
pub struct RunReport {
    pub command: String,
    pub ok: bool,
    pub outputs: Vec<PathBuf>,
    pub timings: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub stats: BTreeMap<String, serde_json::Value>,
}

impl RunReport {
    pub fn new(command: &str) -> Self {
        RunReport { command: command.into(), ..Default::default() }
    }

    pub fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        *self.timings.entry(stage.to_string()).or_default() += t.elapsed().as_secs_f64();
        out
    }

    pub fn stat(&mut self, key: &str, value: impl Serialize) {
        self.stats.insert(key.into(), serde_json::to_value(value).expect("stat serializes"));
    }
}

pub fn default_report_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".report.json");
    PathBuf::from(s)
}

/// Runs a file-producing subcommand and writes its report, also on failure.
pub fn execute(cli: Cli) -> anyhow::Result<RunReport> {
    let (name, out, report_path) = match &cli.command {
        Command::Param(a) => ("param", &a.out, &a.report.report),
        Command::Sphere(a) => ("sphere", &a.out, &a.report.report),
        Command::Cluster(a) => ("cluster", &a.out, &a.report.report),
        Command::Connect(a) => ("connect", &a.out, &a.report.report),
        Command::Overlay(a) => ("overlay", &a.out, &a.report.report),
        Command::Export(a) => ("export", &a.out, &a.report.report),
        Command::Synth(a) => {
            let mut report = RunReport::new("synth");
            commands::synth(a, &mut report)?;
            report.ok = true;
            return Ok(report);
        }
        Command::Serve(a) => {
            serve::run_blocking(a)?;
            return Ok(RunReport::new("serve"));
        }
    };
    let report_path = report_path.clone().unwrap_or_else(|| default_report_path(out));
    let mut report = RunReport::new(name);
    let t = Instant::now();
    let result = match &cli.command {
        Command::Param(a) => commands::param(a, &mut report),
        Command::Sphere(a) => commands::sphere(a, &mut report),
        Command::Cluster(a) => commands::cluster(a, &mut report),
        Command::Connect(a) => commands::connect(a, &mut report),
        Command::Overlay(a) => commands::overlay(a, &mut report),
        Command::Export(a) => commands::export(a, &mut report),
        Command::Serve(_) | Command::Synth(_) => unreachable!(),
    };
    report.timings.insert("total".into(), t.elapsed().as_secs_f64());
    report.ok = result.is_ok();
    if let Err(e) = &result {
        report.error = Some(format!("{e:#}"));
    }
    for w in &report.warnings {
        log::warn!("{w}");
    }
    let bytes = serde_json::to_vec_pretty(&report)?;
    std::fs::write(&report_path, bytes).map_err(|e| anyhow::anyhow!("writing report {}: {e}", report_path.display()))?;
    result.map(|_| report)
}
