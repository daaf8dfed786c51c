//! Command implementations, file plumbing, and the exit-code mapping.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use voxtopo::cubical::compute_barcode;
use voxtopo::cylinder::{grow_and_threshold, rasterize_tube, read_path};
use voxtopo::loss::{topo_loss, BettiTarget};
use voxtopo::metrics::{metric_report, paired_t_test};
use voxtopo::phantom::{generate, PhantomKind, PhantomSpec};
use voxtopo::refine::RefineConfig;
use voxtopo::volume::{
    read_volume, volume_to_bytes, BinaryVolume, ScalarVolume, Volume,
};

use crate::{
    BarcodeArgs, BettiArgs, BettiCurveArgs, CylinderArgs, GrowArgs, LossArgs, MetricsArgs,
    PhantomArgs, RefineArgs, TtestArgs,
};

/// Everything a command can fail with. `Usage` and validation errors from
/// the library exit with 1; broken files and I/O exit with 2.
#[derive(Debug)]
pub enum CliError {
    Core(voxtopo::Error),
    Usage(String),
    Io { path: PathBuf, source: std::io::Error },
    Parse { path: PathBuf, msg: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_validation() => 1,
            CliError::Core(_) => 2,
            CliError::Usage(_) => 1,
            CliError::Io { .. } | CliError::Parse { .. } => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::Io { path, source } => write!(f, "{}: {source}", path.display()),
            CliError::Parse { path, msg } => write!(f, "{}: {msg}", path.display()),
        }
    }
}

impl From<voxtopo::Error> for CliError {
    fn from(e: voxtopo::Error) -> Self {
        CliError::Core(e)
    }
}

pub fn parse_dims(s: &str) -> Result<(usize, usize, usize), String> {
    let v = split3(s)?;
    let mut out = [0usize; 3];
    for (slot, part) in out.iter_mut().zip(&v) {
        *slot = part.parse().map_err(|e| format!("bad dimension {part:?}: {e}"))?;
    }
    Ok((out[0], out[1], out[2]))
}

pub fn parse_spacing(s: &str) -> Result<(f64, f64, f64), String> {
    let v = split3(s)?;
    let mut out = [0f64; 3];
    for (slot, part) in out.iter_mut().zip(&v) {
        *slot = part.parse().map_err(|e| format!("bad spacing {part:?}: {e}"))?;
    }
    Ok((out[0], out[1], out[2]))
}

pub fn parse_triple(s: &str) -> Result<(usize, usize, usize), String> {
    let v = split3(s)?;
    let mut out = [0usize; 3];
    for (slot, part) in out.iter_mut().zip(&v) {
        *slot = part.parse().map_err(|e| format!("bad count {part:?}: {e}"))?;
    }
    Ok((out[0], out[1], out[2]))
}

fn split3(s: &str) -> Result<Vec<&str>, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected three comma-separated values, got {s:?}"));
    }
    Ok(parts)
}

/// Writes through a temp file in the destination directory so the target
/// path either keeps its old content or receives the complete new content.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let io_err = |source| CliError::Io { path: path.to_path_buf(), source };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::Builder::new()
        .prefix(".voxtopo-tmp.")
        .tempfile_in(dir)
        .map_err(io_err)?;
    tmp.write_all(bytes).map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => write_atomic(path, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Reads a volume as scalar values; masks become exact 0/1 volumes.
fn read_scalar(path: &Path) -> Result<ScalarVolume, CliError> {
    Ok(match read_volume(path)? {
        Volume::Scalar(v) => v,
        Volume::Binary(m) => m.to_scalar(),
    })
}

/// Reads a volume as a mask; scalar volumes are thresholded at `p`.
fn read_mask(path: &Path, p: f64) -> Result<BinaryVolume, CliError> {
    Ok(match read_volume(path)? {
        Volume::Binary(m) => m,
        Volume::Scalar(v) => v.threshold(p),
    })
}

fn require_finite(name: &str, value: f64) -> Result<(), CliError> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("--{name} must be finite, got {value}")))
    }
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut os = prefix.as_os_str().to_os_string();
    os.push(suffix);
    PathBuf::from(os)
}

pub fn phantom(args: PhantomArgs) -> Result<(), CliError> {
    let kind: PhantomKind = args.kind.parse()?;
    let spec = PhantomSpec {
        kind,
        dims: args.dims,
        spacing: args.spacing,
        tube_radius_mm: args.radius_mm,
        intensity_inside: args.intensity_inside,
        intensity_outside: args.intensity_outside,
        noise_sigma: args.noise_sigma,
        seed: args.seed,
    };
    let ph = generate(&spec)?;
    write_atomic(
        &with_suffix(&args.out_prefix, "_intensity.svol"),
        &volume_to_bytes(&Volume::Scalar(ph.intensity)),
    )?;
    write_atomic(
        &with_suffix(&args.out_prefix, "_gt.svol"),
        &volume_to_bytes(&Volume::Binary(ph.gt)),
    )?;
    write_atomic(
        &with_suffix(&args.out_prefix, "_prob.svol"),
        &volume_to_bytes(&Volume::Scalar(ph.prob)),
    )?;
    write_atomic(&with_suffix(&args.out_prefix, "_path.json"), ph.path.to_json().as_bytes())?;
    Ok(())
}

pub fn barcode(args: BarcodeArgs) -> Result<(), CliError> {
    let vol = read_scalar(&args.input)?;
    let bc = compute_barcode(&vol)?;
    write_atomic(&args.out, bc.to_csv().as_bytes())
}

pub fn betti(args: BettiArgs) -> Result<(), CliError> {
    require_finite("p", args.p)?;
    let vol = read_scalar(&args.input)?;
    let bc = compute_barcode(&vol)?;
    let (b0, b1, b2) = bc.betti_numbers(args.p);
    println!("{b0},{b1},{b2}");
    Ok(())
}

pub fn betti_curve(args: BettiCurveArgs) -> Result<(), CliError> {
    if args.samples < 2 {
        return Err(CliError::Usage(format!(
            "--samples must be >= 2, got {}",
            args.samples
        )));
    }
    let vol = read_scalar(&args.input)?;
    let bc = compute_barcode(&vol)?;
    let mut csv = String::from("p,b0,b1,b2\n");
    for i in 0..args.samples {
        let p = i as f64 / (args.samples - 1) as f64;
        let (b0, b1, b2) = bc.betti_numbers(p);
        csv.push_str(&format!("{p},{b0},{b1},{b2}\n"));
    }
    write_atomic(&args.out, csv.as_bytes())
}

pub fn loss(args: LossArgs) -> Result<(), CliError> {
    let vol = read_scalar(&args.input)?;
    let bc = compute_barcode(&vol)?;
    let target = BettiTarget::new(args.target.0, args.target.1, args.target.2);
    let value = topo_loss(&bc, target);
    let csv = format!(
        "l0,l1,l2,total\n{},{},{},{}\n",
        value.per_dim[0], value.per_dim[1], value.per_dim[2], value.total
    );
    emit(args.out.as_deref(), &csv)
}

pub fn refine(args: RefineArgs) -> Result<(), CliError> {
    let y0 = read_scalar(&args.input)?;
    let cfg = RefineConfig {
        lambda: args.lambda,
        steps: args.steps,
        step_size: args.step_size,
        ph_downsample: args.ph_downsample,
        betti_target: BettiTarget::new(args.target.0, args.target.1, args.target.2),
        clamp_eps: args.clamp_eps,
    };
    let (refined, trace) = voxtopo::refine::refine(&y0, &cfg)?;
    write_atomic(&args.out, &volume_to_bytes(&Volume::Scalar(refined)))?;
    if let Some(trace_path) = &args.trace {
        write_atomic(trace_path, trace.to_csv().as_bytes())?;
    }
    Ok(())
}

pub fn cylinder(args: CylinderArgs) -> Result<(), CliError> {
    let path = read_path(&args.path)?;
    let (sx, sy, sz) = args.spacing;
    let radius = args.radius_mm.unwrap_or(1.5 * sx.min(sy).min(sz));
    let tube = rasterize_tube(&path, radius, args.dims, args.spacing)?;
    write_atomic(&args.out, &volume_to_bytes(&Volume::Binary(tube)))
}

pub fn grow(args: GrowArgs) -> Result<(), CliError> {
    let path = read_path(&args.path)?;
    let intensity = read_scalar(&args.input)?;
    let grown = grow_and_threshold(&path, args.margin_mm, &intensity, args.hu_lo, args.hu_hi)?;
    write_atomic(&args.out, &volume_to_bytes(&Volume::Binary(grown)))
}

pub fn metrics(args: MetricsArgs) -> Result<(), CliError> {
    require_finite("p", args.p)?;
    let pred = read_mask(&args.pred, args.p)?;
    let reference = read_mask(&args.reference, args.p)?;
    let report = metric_report(&pred, &reference)?;
    let case = args
        .pred
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| args.pred.display().to_string());
    let csv = format!(
        "case,dice,hd,hd95,asd\n{case},{},{},{},{}\n",
        report.dice, report.hd_mm, report.hd95_mm, report.asd_mm
    );
    emit(args.out.as_deref(), &csv)
}

fn read_series(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    let mut values = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let value: f64 = trimmed.parse().map_err(|e| CliError::Parse {
            path: path.to_path_buf(),
            msg: format!("line {}: {e}", lineno + 1),
        })?;
        values.push(value);
    }
    Ok(values)
}

pub fn ttest(args: TtestArgs) -> Result<(), CliError> {
    let a = read_series(&args.a)?;
    let b = read_series(&args.b)?;
    let result = paired_t_test(&a, &b)?;
    print!("t,df,p_value\n{},{},{}\n", result.t, result.df, result.p_value);
    Ok(())
}
