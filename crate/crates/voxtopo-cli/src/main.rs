//! `voxtopo`: command-line pipelines over the voxtopo library.
//!
//! Exit codes: 0 on success, 1 when the inputs or flags were rejected up
//! front, 2 when a file could not be read, parsed, or written. Every file
//! output is written atomically (temp file in the target directory, then
//! rename), so a crashed run never leaves a half-written volume behind.

mod run;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use run::{parse_dims, parse_spacing, parse_triple, CliError};

#[derive(Parser)]
#[command(
    name = "voxtopo",
    version,
    about = "Topology of 3D probability volumes: barcodes, Betti-number losses, \
             topology-constrained refinement, tube masks, and segmentation metrics"
)]
struct Cli {
    /// Cap the number of worker threads (default: one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic phantom: intensity, ground truth, path, and a
    /// corrupted soft prediction.
    Phantom(PhantomArgs),
    /// Compute the persistence barcode of a volume.
    Barcode(BarcodeArgs),
    /// Print the Betti numbers of a volume at one threshold.
    Betti(BettiArgs),
    /// Tabulate Betti numbers over a grid of thresholds.
    BettiCurve(BettiCurveArgs),
    /// Score a volume's barcode against target Betti numbers.
    Loss(LossArgs),
    /// Gradient-descend a probability volume toward the target topology.
    Refine(RefineArgs),
    /// Rasterize a tube of fixed radius around a centerline path.
    Cylinder(CylinderArgs),
    /// Grow a path by a margin and keep voxels inside an intensity window.
    Grow(GrowArgs),
    /// Compare a predicted mask against a reference mask.
    Metrics(MetricsArgs),
    /// Paired two-sided t-test between two numeric series.
    Ttest(TtestArgs),
}

#[derive(Args)]
struct PhantomArgs {
    /// Shape family: straight_tube, helix, closed_ring, two_tube_bridged,
    /// or coil_touching.
    #[arg(long)]
    kind: String,
    /// Output prefix; writes <prefix>_intensity.svol, <prefix>_gt.svol,
    /// <prefix>_prob.svol, and <prefix>_path.json.
    #[arg(long)]
    out_prefix: PathBuf,
    /// Grid size as nx,ny,nz.
    #[arg(long, default_value = "64,64,64", value_parser = parse_dims)]
    dims: (usize, usize, usize),
    /// Voxel spacing in mm as sx,sy,sz.
    #[arg(long, default_value = "1,1,1", value_parser = parse_spacing)]
    spacing: (f64, f64, f64),
    /// Tube radius in mm.
    #[arg(long, default_value_t = 3.5)]
    radius_mm: f64,
    /// Half-width of the uniform noise added to the soft prediction.
    #[arg(long, default_value_t = 0.05)]
    noise_sigma: f64,
    /// Intensity value inside the tube.
    #[arg(long, default_value_t = 50.0, allow_negative_numbers = true)]
    intensity_inside: f64,
    /// Intensity value outside the tube.
    #[arg(long, default_value_t = -500.0, allow_negative_numbers = true)]
    intensity_outside: f64,
    /// Noise seed; the same seed reproduces the phantom bit for bit.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct BarcodeArgs {
    /// Input volume (.svol); masks are read as 0/1 probabilities.
    #[arg(long = "in")]
    input: PathBuf,
    /// Output CSV: dim,birth,death,birth_voxel,death_voxel.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BettiArgs {
    /// Input volume (.svol); masks are read as 0/1 probabilities.
    #[arg(long = "in")]
    input: PathBuf,
    /// Threshold for the super-level set.
    #[arg(long, default_value_t = 0.5)]
    p: f64,
}

#[derive(Args)]
struct BettiCurveArgs {
    /// Input volume (.svol); masks are read as 0/1 probabilities.
    #[arg(long = "in")]
    input: PathBuf,
    /// Output CSV: p,b0,b1,b2.
    #[arg(long)]
    out: PathBuf,
    /// Number of evenly spaced thresholds spanning [0, 1].
    #[arg(long, default_value_t = 101)]
    samples: usize,
}

#[derive(Args)]
struct LossArgs {
    /// Input volume (.svol); masks are read as 0/1 probabilities.
    #[arg(long = "in")]
    input: PathBuf,
    /// Target Betti numbers as b0,b1,b2.
    #[arg(long, default_value = "1,0,0", value_parser = parse_triple)]
    target: (usize, usize, usize),
    /// Output CSV (stdout when omitted): l0,l1,l2,total.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RefineArgs {
    /// Initial probability volume (.svol).
    #[arg(long = "in")]
    input: PathBuf,
    /// Refined probability volume (.svol).
    #[arg(long)]
    out: PathBuf,
    /// Optional per-iteration trace CSV: iter,proximity,topo,total,b0,b1,b2.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Target Betti numbers as b0,b1,b2.
    #[arg(long, default_value = "1,0,0", value_parser = parse_triple)]
    target: (usize, usize, usize),
    /// Weight of the topology term.
    #[arg(long, default_value_t = 0.01)]
    lambda: f64,
    /// Number of gradient steps.
    #[arg(long, default_value_t = 100)]
    steps: usize,
    /// Step size in logit space.
    #[arg(long, default_value_t = 800.0)]
    step_size: f64,
    /// Pooling factor applied before persistence.
    #[arg(long, default_value_t = 2)]
    ph_downsample: usize,
    /// Clamp applied to the input before taking logits.
    #[arg(long, default_value_t = 1e-4)]
    clamp_eps: f64,
}

#[derive(Args)]
struct CylinderArgs {
    /// Centerline path (JSON: {"points": [[x,y,z], ...], "closed": bool}).
    #[arg(long)]
    path: PathBuf,
    /// Output mask (.svol).
    #[arg(long)]
    out: PathBuf,
    /// Grid size as nx,ny,nz.
    #[arg(long, value_parser = parse_dims)]
    dims: (usize, usize, usize),
    /// Voxel spacing in mm as sx,sy,sz.
    #[arg(long, default_value = "1,1,1", value_parser = parse_spacing)]
    spacing: (f64, f64, f64),
    /// Tube radius in mm [default: 1.5 x min spacing, a 3-voxel diameter].
    #[arg(long)]
    radius_mm: Option<f64>,
}

#[derive(Args)]
struct GrowArgs {
    /// Centerline path (JSON: {"points": [[x,y,z], ...], "closed": bool}).
    #[arg(long)]
    path: PathBuf,
    /// Intensity volume (.svol) supplying the window test.
    #[arg(long = "in")]
    input: PathBuf,
    /// Output mask (.svol).
    #[arg(long)]
    out: PathBuf,
    /// Growth margin around the path in mm.
    #[arg(long, default_value_t = 30.0)]
    margin_mm: f64,
    /// Lower bound of the intensity window.
    #[arg(long, default_value_t = -80.0, allow_negative_numbers = true)]
    hu_lo: f64,
    /// Upper bound of the intensity window.
    #[arg(long, default_value_t = 200.0, allow_negative_numbers = true)]
    hu_hi: f64,
}

#[derive(Args)]
struct MetricsArgs {
    /// Predicted volume (.svol); scalar inputs are thresholded at --p.
    #[arg(long)]
    pred: PathBuf,
    /// Reference volume (.svol); scalar inputs are thresholded at --p.
    #[arg(long = "ref")]
    reference: PathBuf,
    /// Threshold applied to scalar inputs.
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    /// Output CSV (stdout when omitted): case,dice,hd,hd95,asd.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TtestArgs {
    /// First series: text file, one number per line.
    #[arg(long)]
    a: PathBuf,
    /// Second series, paired with the first line by line.
    #[arg(long)]
    b: PathBuf,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            std::process::exit(code);
        }
    };

    if let Err(err) = dispatch(cli) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(CliError::Usage("--threads must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Usage(format!("thread pool setup failed: {e}")))?;
    }
    match cli.command {
        Command::Phantom(a) => run::phantom(a),
        Command::Barcode(a) => run::barcode(a),
        Command::Betti(a) => run::betti(a),
        Command::BettiCurve(a) => run::betti_curve(a),
        Command::Loss(a) => run::loss(a),
        Command::Refine(a) => run::refine(a),
        Command::Cylinder(a) => run::cylinder(a),
        Command::Grow(a) => run::grow(a),
        Command::Metrics(a) => run::metrics(a),
        Command::Ttest(a) => run::ttest(a),
    }
}
