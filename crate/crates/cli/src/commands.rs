//! Subcommand definitions and their implementations.

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use radon_core::sweep::{run_sweep, SweepKind, SweepRow, SweepSpec};
use radon_core::verify::{run_checks_with, Level, VerifyOptions};
use radon_core::{
    back_project, forward_project, rasterize, AngleSetKind, EllipsePhantom, Image, ImageGrid, RasterMode,
    Sinogram, SinogramGrid, WeightKind,
};

use crate::error::{CliError, EXIT_OK};
use crate::phantom_file;
use crate::rdk::{RdkArray, RdkKind};

#[derive(Debug, Parser)]
#[command(name = "radon", version, about = "Ray-driven and pixel-driven parallel-beam Radon transforms")]
pub struct Cli {
    /// Upper bound on worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Forward-project a phantom or an RDK image into an RDK sinogram.
    Project(ProjectArgs),
    /// Backproject an RDK sinogram into an RDK image.
    Backproject(BackprojectArgs),
    /// Rasterize a phantom into an RDK image.
    Phantom(PhantomArgs),
    /// Run a convergence sweep and write one CSV row per case.
    Sweep(SweepArgs),
    /// Check operator invariants against the reference oracles.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct AngleArgs {
    /// Number of equispaced angles in [0, 180) degrees.
    #[arg(long, conflicts_with = "angles_deg")]
    pub nphi: Option<usize>,
    /// Explicit increasing angles in degrees, e.g. 0,45,90.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub angles_deg: Option<Vec<f64>>,
}

impl AngleArgs {
    fn resolve(&self, default_count: Option<usize>) -> Result<AngleSetKind, CliError> {
        match (&self.nphi, &self.angles_deg, default_count) {
            (Some(n), _, _) => Ok(AngleSetKind::FullEquispaced(*n)),
            (None, Some(deg), _) => Ok(AngleSetKind::Explicit(deg.iter().map(|d| d.to_radians()).collect())),
            (None, None, Some(n)) => Ok(AngleSetKind::FullEquispaced(n)),
            (None, None, None) => Err(CliError::Usage("one of --nphi or --angles-deg is required".into())),
        }
    }
}

#[derive(Debug, Args)]
pub struct ProjectArgs {
    /// Built-in phantom (ellipse-suite, disk:<r>:<density>), phantom file, or RDK image.
    pub source: String,
    /// Image size; taken from the file for RDK images.
    #[arg(long)]
    pub nx: Option<usize>,
    /// Detector bins; defaults to the image size.
    #[arg(long)]
    pub ns: Option<usize>,
    #[command(flatten)]
    pub angles: AngleArgs,
    #[arg(long, default_value = "ray")]
    pub method: WeightKind,
    #[arg(long)]
    pub out: PathBuf,
    /// Average over k x k subpixel samples when rasterizing.
    #[arg(long)]
    pub mean_sample: Option<usize>,
    /// Physical field-of-view width; scales line integrals by width/2.
    #[arg(long)]
    pub fov: Option<f64>,
    /// Print the projection mass delta_s * sum_p g per angle.
    #[arg(long)]
    pub verbose: bool,
}

#[derive(Debug, Args)]
pub struct BackprojectArgs {
    /// RDK sinogram file.
    pub input: PathBuf,
    #[arg(long)]
    pub nx: usize,
    /// Angles of the sinogram rows; defaults to equispaced.
    #[command(flatten)]
    pub angles: AngleArgs,
    #[arg(long, default_value = "ray")]
    pub method: WeightKind,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PhantomArgs {
    pub source: String,
    #[arg(long)]
    pub nx: usize,
    #[arg(long)]
    pub mean_sample: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// forward-balanced, backproj-constant, backproj-ratio or backproj-angles.
    #[arg(long)]
    pub kind: SweepKind,
    /// Image sizes, ascending.
    #[arg(long, value_delimiter = ',', required = true)]
    pub resolutions: Vec<usize>,
    /// Angle counts, ascending.
    #[arg(long, value_delimiter = ',', required = true)]
    pub nphi: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "ray,pixel")]
    pub methods: Vec<WeightKind>,
    /// Detector bins per pixel (backproj-ratio only).
    #[arg(long, default_value_t = 1)]
    pub ratio: usize,
    #[arg(long, default_value = "ellipse-suite")]
    pub phantom: String,
    #[arg(long)]
    pub mean_sample: Option<usize>,
    #[arg(long, default_value_t = radon_core::metrics::DEFAULT_BACKPROJECTION_MASK)]
    pub mask_radius: f64,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Leave the wall_time_s column empty so repeated runs are byte-identical.
    #[arg(long)]
    pub no_timing: bool,
    /// Abort when the estimated number of weight evaluations exceeds this.
    #[arg(long, default_value_t = 2e10)]
    pub max_work: f64,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value = "quick")]
    pub level: Level,
    #[arg(long, default_value_t = VerifyOptions::default().seed)]
    pub seed: u64,
    /// Scales inspected ray-driven weights to test that faults are detected.
    #[arg(long, hide = true, default_value_t = 1.0)]
    pub tamper_ray_scale: f64,
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn raster_mode(mean_sample: Option<usize>) -> Result<RasterMode, CliError> {
    match mean_sample {
        None => Ok(RasterMode::PointSample),
        Some(0) => Err(CliError::Usage("--mean-sample must be positive".into())),
        Some(k) => Ok(RasterMode::MeanValue(k)),
    }
}

fn display(path: &Path) -> String {
    path.display().to_string()
}

fn write_rdk(array: RdkArray, path: &Path) -> Result<(), CliError> {
    array.write(path).map_err(|e| CliError::rdk(display(path), e))
}

fn read_rdk(path: &Path, kind: RdkKind) -> Result<RdkArray, CliError> {
    let array = RdkArray::read(path).map_err(|e| CliError::rdk(display(path), e))?;
    if array.kind != kind {
        return Err(CliError::Parse {
            origin: display(path),
            line: 1,
            message: format!("expected an {} file, found {}", kind.name(), array.kind.name()),
        });
    }
    Ok(array)
}

fn image_to_rdk(image: Image) -> RdkArray {
    let n = image.grid().n_x();
    RdkArray {
        kind: RdkKind::Image,
        rows: n,
        cols: n,
        values: image.into_values(),
    }
}

/// Loads the `project` input as a discrete image.
fn project_input(args: &ProjectArgs) -> Result<Image, CliError> {
    let path = Path::new(&args.source);
    let is_rdk = path.is_file()
        && std::fs::read(path)
            .map_err(|e| CliError::io(&args.source, e))?
            .starts_with(b"RDK1 ");
    if is_rdk {
        let array = read_rdk(path, RdkKind::Image)?;
        if args.nx.is_some_and(|n| n != array.rows) {
            return Err(CliError::Usage(format!(
                "--nx {} does not match the {}x{} input image",
                args.nx.unwrap_or(0),
                array.rows,
                array.cols
            )));
        }
        let grid = ImageGrid::new(array.rows).map_err(usage)?;
        return Image::from_values(grid, array.values).map_err(usage);
    }
    let phantom: EllipsePhantom = phantom_file::load(&args.source)?;
    let n_x = args.nx.ok_or_else(|| CliError::Usage("--nx is required for phantom input".into()))?;
    let grid = ImageGrid::new(n_x).map_err(usage)?;
    rasterize(&phantom, grid, raster_mode(args.mean_sample)?).map_err(usage)
}

pub fn project(args: &ProjectArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if let Some(w) = args.fov {
        if !(w.is_finite() && w > 0.0) {
            return Err(CliError::Usage("--fov must be a positive width".into()));
        }
    }
    let image = project_input(args)?;
    let n_s = args.ns.unwrap_or(image.grid().n_x());
    let sg = SinogramGrid::new(n_s, &args.angles.resolve(None)?).map_err(usage)?;
    let mut sino = forward_project(&image, &sg, args.method).map_err(usage)?;
    if let Some(width) = args.fov {
        let scale = 0.5 * width;
        sino.values_mut().iter_mut().for_each(|v| *v *= scale);
    }
    if args.verbose {
        let ds = sg.delta_s();
        for q in 0..sg.n_phi() {
            let mass: f64 = ds * sino.row(q).iter().sum::<f64>();
            writeln!(out, "angle {:.6} deg: mass {mass:.15e}", sg.angles()[q].to_degrees())
                .map_err(|e| CliError::io("<stdout>", e))?;
        }
    }
    write_rdk(
        RdkArray {
            kind: RdkKind::Sinogram,
            rows: sg.n_phi(),
            cols: n_s,
            values: sino.into_values(),
        },
        &args.out,
    )
}

pub fn backproject(args: &BackprojectArgs) -> Result<(), CliError> {
    let array = read_rdk(&args.input, RdkKind::Sinogram)?;
    let sg = SinogramGrid::new(array.cols, &args.angles.resolve(Some(array.rows))?).map_err(usage)?;
    if sg.n_phi() != array.rows {
        return Err(CliError::Usage(format!(
            "{} angles given for a sinogram with {} rows",
            sg.n_phi(),
            array.rows
        )));
    }
    let sino = Sinogram::from_values(sg, array.values).map_err(usage)?;
    let grid = ImageGrid::new(args.nx).map_err(usage)?;
    let image = back_project(&sino, grid, args.method).map_err(usage)?;
    write_rdk(image_to_rdk(image), &args.out)
}

pub fn phantom(args: &PhantomArgs) -> Result<(), CliError> {
    let phantom = phantom_file::load(&args.source)?;
    let grid = ImageGrid::new(args.nx).map_err(usage)?;
    let image = rasterize(&phantom, grid, raster_mode(args.mean_sample)?).map_err(usage)?;
    write_rdk(image_to_rdk(image), &args.out)
}

pub const CSV_COLUMNS: [&str; 8] = [
    "n_x",
    "n_s",
    "n_phi",
    "method",
    "global_rel_l2",
    "worst_angle_rel_l2",
    "worst_angle_deg",
    "wall_time_s",
];

fn sci(v: f64) -> String {
    format!("{v:e}")
}

/// CSV fields of one sweep row.
pub fn csv_record(row: &SweepRow, timing: bool) -> [String; 8] {
    [
        row.n_x.to_string(),
        row.n_s.to_string(),
        row.n_phi.to_string(),
        row.method.name().to_string(),
        sci(row.global_rel_l2),
        row.worst_angle_rel_l2.map(sci).unwrap_or_default(),
        row.worst_angle_deg.map(|d| d.to_string()).unwrap_or_default(),
        if timing { row.wall_time_s.to_string() } else { String::new() },
    ]
}

pub fn sweep_spec(args: &SweepArgs) -> Result<SweepSpec, CliError> {
    let mut spec = SweepSpec::new(args.kind, args.resolutions.clone(), args.nphi.clone(), args.methods.clone())
        .with_ratio(args.ratio);
    spec.phantom = phantom_file::load(&args.phantom)?;
    spec.raster = raster_mode(args.mean_sample)?;
    spec.mask_radius = args.mask_radius;
    spec.validate().map_err(usage)?;
    Ok(spec)
}

pub fn sweep(args: &SweepArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let spec = sweep_spec(args)?;
    let work = spec.estimated_work();
    if work > args.max_work {
        return Err(CliError::Usage(format!(
            "sweep needs about {work:.3e} weight evaluations, above the cap of {:.3e}; raise --max-work to run it",
            args.max_work
        )));
    }
    let (sink, name): (Box<dyn Write + '_>, String) = match &args.csv {
        Some(path) => (
            Box::new(File::create(path).map_err(|e| CliError::io(display(path), e))?),
            display(path),
        ),
        None => (Box::new(stdout), "<stdout>".into()),
    };
    let io_err = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(e) => CliError::io(name.clone(), e),
        other => CliError::Invariant(format!("csv: {other:?}")),
    };
    let mut writer = csv::Writer::from_writer(sink);
    writer.write_record(CSV_COLUMNS).map_err(io_err)?;
    let mut failure: Option<csv::Error> = None;
    run_sweep(&spec, |row| {
        if failure.is_none() {
            let result = writer.write_record(csv_record(row, !args.no_timing)).and_then(|_| Ok(writer.flush()?));
            failure = result.err();
        }
    })
    .map_err(usage)?;
    if let Some(e) = failure {
        return Err(io_err(e));
    }
    writer.flush().map_err(|e| CliError::io(name.clone(), e))
}

pub fn verify(args: &VerifyArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let opts = VerifyOptions {
        level: args.level,
        seed: args.seed,
        ray_weight_scale: args.tamper_ray_scale,
    };
    let mut write_err = None;
    let outcomes = run_checks_with(&opts, |o| {
        if let Err(e) = writeln!(out, "{o}") {
            write_err.get_or_insert(e);
        }
    });
    if let Some(e) = write_err {
        return Err(CliError::io("<stdout>", e));
    }
    let failed: Vec<&str> = outcomes.iter().filter(|o| !o.passed()).map(|o| o.name).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Invariant(format!("failed invariant groups: {}", failed.join(", "))))
    }
}

/// Runs a parsed command line, returning the process exit code.
pub fn run(cli: Cli) -> Result<u8, CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot configure thread pool: {e}")))?;
    }
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match &cli.command {
        Command::Project(a) => project(a, &mut out)?,
        Command::Backproject(a) => backproject(a)?,
        Command::Phantom(a) => phantom(a)?,
        Command::Sweep(a) => sweep(a, &mut out)?,
        Command::Verify(a) => verify(a, &mut out)?,
    }
    Ok(EXIT_OK)
}
