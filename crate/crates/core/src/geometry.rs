//! Discretization geometry for the normalized parallel-beam setting.
//!
//! The image lives on `[-1, 1]^2`, split into `n_x * n_x` square pixels of
//! side `delta_x = 2 / n_x`. The detector covers `[-1, 1]` with `n_s` bins of
//! width `delta_s = 2 / n_s`. Projection angles lie in `[0, pi)`; each angle
//! owns an angular pixel whose width is used as a quadrature weight by the
//! backprojection and by the sinogram norm.
//!
//! Pixel indices are `(i, j)` with `i` the x-index and `j` the y-index.
//! Arrays are row-major with `i` as the slow index: entry `i * n_x + j`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::sync::Arc;

use crate::error::GeometryError;

/// Angles closer than this to a multiple of `pi/2` are treated as exactly
/// axis-aligned.
pub const AXIS_TOLERANCE: f64 = 1e-12;

/// Returns true when `phi` is a multiple of `pi/2` up to [`AXIS_TOLERANCE`].
pub fn is_axis_aligned(phi: f64) -> bool {
    phi.sin().abs().min(phi.cos().abs()) < AXIS_TOLERANCE
}

/// Unit projection direction `(cos phi, sin phi)`.
///
/// Axis-aligned angles are snapped to exact unit vectors so that dot products
/// with grid points reproduce exact pixel offsets.
pub fn direction(phi: f64) -> (f64, f64) {
    let (s, c) = phi.sin_cos();
    if s.abs() < AXIS_TOLERANCE {
        (c.signum(), 0.0)
    } else if c.abs() < AXIS_TOLERANCE {
        (0.0, s.signum())
    } else {
        (c, s)
    }
}

/// Direction perpendicular to [`direction`], i.e. `(-sin phi, cos phi)`.
pub fn perpendicular(phi: f64) -> (f64, f64) {
    let (c, s) = direction(phi);
    (-s, c)
}

/// Signed offset `x . theta - s` of the point `(x, y)` from the ray
/// `{x : x . theta = s}`. Every projector evaluates weights at this value.
#[inline(always)]
pub fn ray_offset(x: f64, y: f64, theta: (f64, f64), s: f64) -> f64 {
    x * theta.0 + y * theta.1 - s
}

/// How the set of projection angles is chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum AngleSetKind {
    /// `phi_q = q * pi / n` with uniform angular widths `pi / n`.
    FullEquispaced(usize),
    /// `n` angles at the midpoints of a uniform partition of `[a, b)`.
    Limited { start: f64, end: f64, count: usize },
    /// Arbitrary strictly increasing angles in `[0, pi)`; widths follow the
    /// midpoint partition of `[0, pi)`.
    Explicit(Vec<f64>),
}

/// Square image grid with `n_x * n_x` pixels covering `[-1, 1]^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ImageGrid {
    n_x: usize,
}

impl ImageGrid {
    pub fn new(n_x: usize) -> Result<Self, GeometryError> {
        if n_x == 0 {
            return Err(GeometryError::EmptyGrid("n_x"));
        }
        Ok(ImageGrid { n_x })
    }

    #[inline]
    pub fn n_x(&self) -> usize {
        self.n_x
    }

    #[inline]
    pub fn delta_x(&self) -> f64 {
        2.0 / self.n_x as f64
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n_x * self.n_x
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinate of pixel center `k` along either axis: `(k + 1/2) delta_x - 1`.
    #[inline]
    pub fn coordinate(&self, k: usize) -> f64 {
        (k as f64 + 0.5) * self.delta_x() - 1.0
    }

    pub fn pixel_center(&self, i: usize, j: usize) -> Result<(f64, f64), GeometryError> {
        if i >= self.n_x || j >= self.n_x {
            return Err(GeometryError::IndexOutOfRange {
                index: i.max(j),
                len: self.n_x,
            });
        }
        Ok((self.coordinate(i), self.coordinate(j)))
    }

    #[inline]
    pub fn flat_index(&self, i: usize, j: usize) -> usize {
        i * self.n_x + j
    }
}

/// Detector bins and projection angles.
///
/// Cloning is cheap; angle data is shared.
#[derive(Debug, Clone, PartialEq)]
pub struct SinogramGrid {
    n_s: usize,
    angles: Arc<[f64]>,
    widths: Arc<[f64]>,
    equispaced: bool,
}

impl SinogramGrid {
    pub fn new(n_s: usize, angle_set: &AngleSetKind) -> Result<Self, GeometryError> {
        if n_s == 0 {
            return Err(GeometryError::EmptyGrid("n_s"));
        }
        let (angles, widths, equispaced) = build_angles(angle_set)?;
        Ok(SinogramGrid {
            n_s,
            angles: angles.into(),
            widths: widths.into(),
            equispaced,
        })
    }

    /// Full-range equispaced grid, the common case.
    pub fn equispaced(n_s: usize, n_phi: usize) -> Result<Self, GeometryError> {
        Self::new(n_s, &AngleSetKind::FullEquispaced(n_phi))
    }

    #[inline]
    pub fn n_s(&self) -> usize {
        self.n_s
    }

    #[inline]
    pub fn n_phi(&self) -> usize {
        self.angles.len()
    }

    #[inline]
    pub fn delta_s(&self) -> f64 {
        2.0 / self.n_s as f64
    }

    /// Largest angular pixel width.
    pub fn delta_phi(&self) -> f64 {
        self.widths.iter().copied().fold(0.0, f64::max)
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn angular_widths(&self) -> &[f64] {
        &self.widths
    }

    /// True for [`AngleSetKind::FullEquispaced`] grids.
    pub fn is_equispaced(&self) -> bool {
        self.equispaced
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n_s * self.angles.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Detector bin center `s_p = (p + 1/2) delta_s - 1`, without bounds check.
    #[inline]
    pub fn coordinate(&self, p: usize) -> f64 {
        (p as f64 + 0.5) * self.delta_s() - 1.0
    }

    pub fn detector_center(&self, p: usize) -> Result<f64, GeometryError> {
        if p >= self.n_s {
            return Err(GeometryError::IndexOutOfRange { index: p, len: self.n_s });
        }
        Ok(self.coordinate(p))
    }

    /// Projection direction for angle index `q`.
    pub fn direction(&self, q: usize) -> (f64, f64) {
        direction(self.angles[q])
    }

    pub fn perpendicular(&self, q: usize) -> (f64, f64) {
        perpendicular(self.angles[q])
    }
}

fn build_angles(angle_set: &AngleSetKind) -> Result<(Vec<f64>, Vec<f64>, bool), GeometryError> {
    match *angle_set {
        AngleSetKind::FullEquispaced(n) => {
            if n == 0 {
                return Err(GeometryError::NoAngles);
            }
            let angles = (0..n).map(|q| q as f64 * PI / n as f64).collect();
            Ok((angles, vec![PI / n as f64; n], true))
        }
        AngleSetKind::Limited { start, end, count } => {
            if count == 0 {
                return Err(GeometryError::NoAngles);
            }
            if !(0.0 <= start && start < end && end <= PI) {
                return Err(GeometryError::InvalidInterval { start, end });
            }
            let width = (end - start) / count as f64;
            let angles = (0..count)
                .map(|q| start + (q as f64 + 0.5) * width)
                .collect();
            Ok((angles, vec![width; count], false))
        }
        AngleSetKind::Explicit(ref angles) => {
            let widths = midpoint_widths(angles)?;
            Ok((angles.clone(), widths, false))
        }
    }
}

/// Angular pixel widths of the midpoint partition of `[0, pi)`.
fn midpoint_widths(angles: &[f64]) -> Result<Vec<f64>, GeometryError> {
    if angles.is_empty() {
        return Err(GeometryError::NoAngles);
    }
    for (q, &phi) in angles.iter().enumerate() {
        if !(0.0..PI).contains(&phi) {
            return Err(GeometryError::AngleOutOfRange { index: q, angle: phi });
        }
        if q > 0 && phi <= angles[q - 1] {
            return Err(GeometryError::NotIncreasing { index: q });
        }
    }
    let n = angles.len();
    let boundary = |q: usize| -> f64 {
        // boundary between angular pixels q-1 and q
        if q == 0 {
            0.0
        } else if q == n {
            PI
        } else {
            0.5 * (angles[q - 1] + angles[q])
        }
    };
    Ok((0..n).map(|q| boundary(q + 1) - boundary(q)).collect())
}

/// Complete discretization: image grid plus sinogram grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizationParams {
    pub image: ImageGrid,
    pub sinogram: SinogramGrid,
}

impl DiscretizationParams {
    pub fn n_x(&self) -> usize {
        self.image.n_x()
    }

    pub fn n_s(&self) -> usize {
        self.sinogram.n_s()
    }

    pub fn n_phi(&self) -> usize {
        self.sinogram.n_phi()
    }

    pub fn delta_x(&self) -> f64 {
        self.image.delta_x()
    }

    pub fn delta_s(&self) -> f64 {
        self.sinogram.delta_s()
    }

    pub fn delta_phi(&self) -> f64 {
        self.sinogram.delta_phi()
    }
}

pub fn make_params(
    n_x: usize,
    n_s: usize,
    angle_set: &AngleSetKind,
) -> Result<DiscretizationParams, GeometryError> {
    Ok(DiscretizationParams {
        image: ImageGrid::new(n_x)?,
        sinogram: SinogramGrid::new(n_s, angle_set)?,
    })
}

/// Threshold below which `|theta_x|` triggers the x/y role swap in the
/// index-range computation.
pub const SWAP_THRESHOLD: f64 = FRAC_1_SQRT_2;

/// Dense image of pixel coefficients `f_ij`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    grid: ImageGrid,
    values: Vec<f64>,
}

impl Image {
    pub fn zeros(grid: ImageGrid) -> Self {
        Image {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: ImageGrid, value: f64) -> Self {
        Image {
            grid,
            values: vec![value; grid.len()],
        }
    }

    pub fn from_values(grid: ImageGrid, values: Vec<f64>) -> Result<Self, GeometryError> {
        check_values(&values, grid.len())?;
        Ok(Image { grid, values })
    }

    /// Builds an image by evaluating `f` at every pixel center.
    pub fn from_fn(grid: ImageGrid, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let n = grid.n_x();
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..n {
            let x = grid.coordinate(i);
            for j in 0..n {
                values.push(f(x, grid.coordinate(j)));
            }
        }
        Image { grid, values }
    }

    pub fn grid(&self) -> ImageGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.flat_index(i, j)]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Dense sinogram of coefficients `g_qp`, rows are angles.
#[derive(Debug, Clone, PartialEq)]
pub struct Sinogram {
    grid: SinogramGrid,
    values: Vec<f64>,
}

impl Sinogram {
    pub fn zeros(grid: SinogramGrid) -> Self {
        let len = grid.len();
        Sinogram {
            grid,
            values: vec![0.0; len],
        }
    }

    pub fn from_values(grid: SinogramGrid, values: Vec<f64>) -> Result<Self, GeometryError> {
        check_values(&values, grid.len())?;
        Ok(Sinogram { grid, values })
    }

    pub fn grid(&self) -> &SinogramGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// The projection for angle index `q`.
    pub fn row(&self, q: usize) -> &[f64] {
        let n_s = self.grid.n_s();
        &self.values[q * n_s..(q + 1) * n_s]
    }

    pub fn get(&self, q: usize, p: usize) -> f64 {
        self.values[q * self.grid.n_s() + p]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

fn check_values(values: &[f64], expected: usize) -> Result<(), GeometryError> {
    if values.len() != expected {
        return Err(GeometryError::LengthMismatch {
            expected,
            actual: values.len(),
        });
    }
    if let Some(index) = values.iter().position(|v| !v.is_finite()) {
        return Err(GeometryError::NonFinite { index });
    }
    Ok(())
}
