//! Convergence sweeps over resolutions, angle counts and methods.

use std::f64::consts::PI;
use std::time::Instant;

use thiserror::Error;

use crate::error::{GeometryError, MetricsError, OperatorError, PhantomError};
use crate::geometry::{AngleSetKind, Image, ImageGrid, SinogramGrid};
use crate::metrics::{error_report, image_relative_error, DEFAULT_BACKPROJECTION_MASK};
use crate::operators::{back_project, forward_project};
use crate::phantoms::{analytic_sinogram, constant_sinogram, rasterize, EllipsePhantom, RasterMode};
use crate::weights::WeightKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    /// Forward projection of a phantom at `n_s = n_x` against its analytic
    /// sinogram.
    ForwardBalanced,
    /// Backprojection of the constant sinogram at `n_s = n_x`.
    BackprojConstant,
    /// Backprojection of the constant sinogram at `n_s = ratio * n_x`.
    BackprojRatio,
    /// Backprojection of the constant sinogram over a list of angle counts.
    BackprojAngles,
}

impl SweepKind {
    pub fn name(self) -> &'static str {
        match self {
            SweepKind::ForwardBalanced => "forward-balanced",
            SweepKind::BackprojConstant => "backproj-constant",
            SweepKind::BackprojRatio => "backproj-ratio",
            SweepKind::BackprojAngles => "backproj-angles",
        }
    }

    fn is_forward(self) -> bool {
        self == SweepKind::ForwardBalanced
    }
}

impl std::str::FromStr for SweepKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [
            SweepKind::ForwardBalanced,
            SweepKind::BackprojConstant,
            SweepKind::BackprojRatio,
            SweepKind::BackprojAngles,
        ]
        .into_iter()
        .find(|k| k.name() == s)
        .ok_or_else(|| format!("unknown sweep kind '{s}'"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub kind: SweepKind,
    /// Image sizes `n_x`, ascending.
    pub resolutions: Vec<usize>,
    /// Angle counts, ascending. Every resolution is run with every count.
    pub n_phi: Vec<usize>,
    /// `n_s / n_x` for [`SweepKind::BackprojRatio`]; must be 1 otherwise.
    pub detector_ratio: usize,
    pub methods: Vec<WeightKind>,
    /// Phantom for forward sweeps.
    pub phantom: EllipsePhantom,
    pub raster: RasterMode,
    /// Mask radius for backprojection errors.
    pub mask_radius: f64,
}

impl SweepSpec {
    pub fn new(kind: SweepKind, resolutions: Vec<usize>, n_phi: Vec<usize>, methods: Vec<WeightKind>) -> Self {
        SweepSpec {
            kind,
            resolutions,
            n_phi,
            detector_ratio: 1,
            methods,
            phantom: EllipsePhantom::ellipse_suite(),
            raster: RasterMode::PointSample,
            mask_radius: DEFAULT_BACKPROJECTION_MASK,
        }
    }

    pub fn with_ratio(mut self, ratio: usize) -> Self {
        self.detector_ratio = ratio;
        self
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        let ascending = |v: &[usize]| !v.is_empty() && v.windows(2).all(|w| w[0] < w[1]) && v[0] > 0;
        if !ascending(&self.resolutions) {
            return Err(SweepError::Invalid("resolutions must be nonempty, positive and strictly ascending".into()));
        }
        if !ascending(&self.n_phi) {
            return Err(SweepError::Invalid("angle counts must be nonempty, positive and strictly ascending".into()));
        }
        if self.methods.is_empty() {
            return Err(SweepError::Invalid("at least one method is required".into()));
        }
        if self.detector_ratio == 0 {
            return Err(SweepError::Invalid("detector ratio must be positive".into()));
        }
        if self.detector_ratio != 1 && self.kind != SweepKind::BackprojRatio {
            return Err(SweepError::Invalid(format!(
                "detector ratio only applies to {}",
                SweepKind::BackprojRatio.name()
            )));
        }
        Ok(())
    }

    pub fn n_s(&self, n_x: usize) -> usize {
        n_x * self.detector_ratio
    }

    /// Rough count of weight evaluations for the whole sweep.
    pub fn estimated_work(&self) -> f64 {
        let mut total = 0.0;
        for &n_x in &self.resolutions {
            let n_s = self.n_s(n_x) as f64;
            let n_x = n_x as f64;
            for &n_phi in &self.n_phi {
                let per_method = if self.kind.is_forward() {
                    // each ray visits ~3 pixels per outer index
                    n_phi as f64 * n_s * n_x * 3.0
                } else {
                    // each pixel visits ~(3 + 2 n_s / n_x) bins per angle
                    n_x * n_x * n_phi as f64 * (3.0 + 2.0 * n_s / n_x)
                };
                total += per_method * self.methods.len() as f64;
            }
        }
        total
    }

    /// All `(n_x, n_s, n_phi, method)` combinations in run order.
    pub fn cases(&self) -> Vec<(usize, usize, usize, WeightKind)> {
        let mut out = Vec::new();
        for &n_x in &self.resolutions {
            for &n_phi in &self.n_phi {
                for &m in &self.methods {
                    out.push((n_x, self.n_s(n_x), n_phi, m));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub n_x: usize,
    pub n_s: usize,
    pub n_phi: usize,
    pub method: WeightKind,
    pub global_rel_l2: f64,
    /// Forward sweeps only.
    pub worst_angle_rel_l2: Option<f64>,
    pub worst_angle_deg: Option<f64>,
    /// Per-angle errors of forward sweeps; empty for backprojections.
    pub per_angle_rel_l2: Vec<f64>,
    pub wall_time_s: f64,
}

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid sweep: {0}")]
    Invalid(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Phantom(#[from] PhantomError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// Forward experiment: discrete phantom projected with `method`, compared
/// with the analytic sinogram.
pub fn forward_case(
    phantom: &EllipsePhantom,
    raster: RasterMode,
    n_x: usize,
    n_s: usize,
    angles: &AngleSetKind,
    method: WeightKind,
) -> Result<SweepRow, SweepError> {
    let start = Instant::now();
    let grid = ImageGrid::new(n_x)?;
    let sgrid = SinogramGrid::new(n_s, angles)?;
    let image = rasterize(phantom, grid, raster)?;
    let truth = analytic_sinogram(phantom, &sgrid);
    let approx = forward_project(&image, &sgrid, method)?;
    let report = error_report(&truth, &approx)?;
    Ok(SweepRow {
        n_x,
        n_s,
        n_phi: sgrid.n_phi(),
        method,
        global_rel_l2: report.global_rel_l2,
        worst_angle_rel_l2: Some(report.worst_angle_rel_l2),
        worst_angle_deg: Some(report.worst_angle_deg(&truth)),
        per_angle_rel_l2: report.per_angle_rel_l2,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// Backprojection experiment: the constant sinogram `g = 1`, whose exact
/// backprojection is `pi` everywhere.
pub fn constant_backprojection_case(
    n_x: usize,
    n_s: usize,
    angles: &AngleSetKind,
    method: WeightKind,
    mask_radius: f64,
) -> Result<SweepRow, SweepError> {
    let start = Instant::now();
    let grid = ImageGrid::new(n_x)?;
    let sgrid = SinogramGrid::new(n_s, angles)?;
    let sino = constant_sinogram(&sgrid, 1.0);
    let approx = back_project(&sino, grid, method)?;
    let truth = Image::constant(grid, PI);
    let err = image_relative_error(&truth, &approx, Some(mask_radius))?;
    Ok(SweepRow {
        n_x,
        n_s,
        n_phi: sgrid.n_phi(),
        method,
        global_rel_l2: err,
        worst_angle_rel_l2: None,
        worst_angle_deg: None,
        per_angle_rel_l2: Vec::new(),
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// Runs every case of `spec`, handing each row to `on_row` as it finishes.
pub fn run_sweep(spec: &SweepSpec, mut on_row: impl FnMut(&SweepRow)) -> Result<Vec<SweepRow>, SweepError> {
    spec.validate()?;
    let mut rows = Vec::new();
    for (n_x, n_s, n_phi, method) in spec.cases() {
        let angles = AngleSetKind::FullEquispaced(n_phi);
        let row = if spec.kind.is_forward() {
            forward_case(&spec.phantom, spec.raster, n_x, n_s, &angles, method)?
        } else {
            constant_backprojection_case(n_x, n_s, &angles, method, spec.mask_radius)?
        };
        on_row(&row);
        rows.push(row);
    }
    Ok(rows)
}

/// Least-squares slope of `log(y)` against `log(x)`.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let cov: f64 = logs.iter().map(|&(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = logs.iter().map(|&(x, _)| (x - mx) * (x - mx)).sum();
    cov / var
}
