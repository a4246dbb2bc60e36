//! Matrix-free forward projection and backprojection.
//!
//! Both operators are convolutional: the matrix entry for pixel `(i, j)` and
//! ray `(q, p)` is a weight function evaluated at `x_ij . theta_q - s_p`.
//! Because the weight has connected support `[c_lo, c_hi]`, the pixels hit
//! by a ray (for a fixed outer index) and the detector bins hit by a pixel
//! form index intervals that can be computed in closed form.
//!
//! Every output entry is produced by exactly one worker and summed in a
//! fixed order, so results are bitwise independent of the thread count.

use rayon::prelude::*;

use crate::error::OperatorError;
use crate::geometry::{
    ray_offset, DiscretizationParams, Image, ImageGrid, Sinogram, SinogramGrid, SWAP_THRESHOLD,
};
use crate::weights::{Kernel, PixelHat, RayGeometry, SupportInterval, WeightKind};

/// Inclusive index interval, empty when `lo > hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexRange {
    pub lo: isize,
    pub hi: isize,
}

impl IndexRange {
    pub const EMPTY: IndexRange = IndexRange { lo: 0, hi: -1 };

    /// Integer range covering the real interval `[lo, hi]`, widened by one
    /// index on each side and clamped to `0..len`.
    #[inline]
    pub fn covering(lo: f64, hi: f64, len: usize) -> IndexRange {
        let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
        let last = len as f64 - 1.0;
        if !(hi >= -1.0 && lo <= last + 1.0) {
            return IndexRange::EMPTY;
        }
        let lo = (lo.floor() - 1.0).max(0.0);
        let hi = (hi.ceil() + 1.0).min(last);
        if lo > hi {
            return IndexRange::EMPTY;
        }
        IndexRange {
            lo: lo as isize,
            hi: hi as isize,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.lo > self.hi
    }

    pub fn len(&self) -> usize {
        if self.is_empty() {
            0
        } else {
            (self.hi - self.lo + 1) as usize
        }
    }

    pub fn contains(&self, k: usize) -> bool {
        !self.is_empty() && self.lo <= k as isize && k as isize <= self.hi
    }

    #[inline]
    pub fn iter(&self) -> std::ops::Range<usize> {
        if self.is_empty() {
            0..0
        } else {
            self.lo as usize..self.hi as usize + 1
        }
    }
}

/// Which pixel index runs along the ray in [`forward_project`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Traversal {
    /// `j` outer, `i` inner. Used when `|theta_x| >= 1/sqrt(2)`.
    ColumnsOuter,
    /// `i` outer, `j` inner (x and y roles swapped).
    RowsOuter,
}

impl Traversal {
    pub fn for_direction(theta: (f64, f64)) -> Traversal {
        if theta.0.abs() < SWAP_THRESHOLD {
            Traversal::RowsOuter
        } else {
            Traversal::ColumnsOuter
        }
    }

    /// Maps `(outer, inner)` loop indices to `(i, j)`.
    #[inline(always)]
    pub fn pixel(self, outer: usize, inner: usize) -> (usize, usize) {
        match self {
            Traversal::ColumnsOuter => (inner, outer),
            Traversal::RowsOuter => (outer, inner),
        }
    }
}

/// Range of inner pixel indices whose centers satisfy
/// `x_ij . theta - s in support`, for a fixed outer index.
///
/// For [`Traversal::ColumnsOuter`] `outer` is `j` and the result holds `i`;
/// for [`Traversal::RowsOuter`] the roles are exchanged.
#[inline]
pub fn inner_index_range(
    grid: ImageGrid,
    traversal: Traversal,
    theta: (f64, f64),
    s: f64,
    support: SupportInterval,
    outer: usize,
) -> IndexRange {
    let (along, across) = match traversal {
        Traversal::ColumnsOuter => (theta.0, theta.1),
        Traversal::RowsOuter => (theta.1, theta.0),
    };
    assert!(along != 0.0, "index range needs a nonzero direction component");
    let dx = grid.delta_x();
    let fixed = grid.coordinate(outer) * across;
    // the one-index widening in `covering` absorbs rounding from the reciprocal
    let scale = 1.0 / (along * dx);
    let shift = 1.0 / dx - 0.5;
    let base = s - fixed;
    let to_index = |c: f64| (c + base) * scale + shift;
    IndexRange::covering(to_index(support.lo), to_index(support.hi), grid.n_x())
}

/// Range of detector bins with `proj - s_p in support`, where
/// `proj = x_ij . theta_q`.
#[inline]
pub fn detector_range(sino_grid: &SinogramGrid, proj: f64, support: SupportInterval) -> IndexRange {
    let ds = sino_grid.delta_s();
    let lo = (proj - support.hi + 1.0) / ds - 0.5;
    let hi = (proj - support.lo + 1.0) / ds - 0.5;
    IndexRange::covering(lo, hi, sino_grid.n_s())
}

/// Inner index range for ray `(q, p)` and outer index `outer`, along with
/// the traversal that determines what `outer` and the result refer to.
pub fn image_index_range(
    params: &DiscretizationParams,
    kind: WeightKind,
    q: usize,
    p: usize,
    outer: usize,
) -> (Traversal, IndexRange) {
    let sg = &params.sinogram;
    let theta = sg.direction(q);
    let traversal = Traversal::for_direction(theta);
    let support = kind.support(sg.angles()[q], params.delta_x(), params.delta_s());
    let range = inner_index_range(params.image, traversal, theta, sg.coordinate(p), support, outer);
    (traversal, range)
}

/// Detector bins that can receive a nonzero weight from pixel `(i, j)` at
/// angle index `q`.
pub fn detector_index_range(
    params: &DiscretizationParams,
    kind: WeightKind,
    i: usize,
    j: usize,
    q: usize,
) -> IndexRange {
    let sg = &params.sinogram;
    let theta = sg.direction(q);
    let img = params.image;
    let proj = ray_offset(img.coordinate(i), img.coordinate(j), theta, 0.0);
    let support = kind.support(sg.angles()[q], params.delta_x(), params.delta_s());
    detector_range(sg, proj, support)
}

fn first_non_finite(values: &[f64]) -> Option<usize> {
    values.iter().position(|v| !v.is_finite())
}

/// Discrete forward projection `(A f)[qp] = delta_x^2 sum_ij w(phi_q, x_ij . theta_q - s_p) f_ij`.
pub fn forward_project(
    image: &Image,
    sino_grid: &SinogramGrid,
    kind: WeightKind,
) -> Result<Sinogram, OperatorError> {
    if let Some(index) = first_non_finite(image.values()) {
        return Err(OperatorError::NonFiniteInput { index });
    }
    let values = match kind {
        WeightKind::RayDriven => forward_with::<RayGeometry>(image, sino_grid),
        WeightKind::PixelDriven => forward_with::<PixelHat>(image, sino_grid),
    };
    Ok(Sinogram::from_values(sino_grid.clone(), values).expect("finite input gives finite output"))
}

fn forward_with<K: Kernel>(image: &Image, sino_grid: &SinogramGrid) -> Vec<f64> {
    let grid = image.grid();
    let n = grid.n_x();
    let n_s = sino_grid.n_s();
    let (dx, ds) = (grid.delta_x(), sino_grid.delta_s());
    let coords: Vec<f64> = (0..n).map(|k| grid.coordinate(k)).collect();
    let f = image.values();
    // f laid out as [outer][inner] for each traversal, so inner loops are contiguous
    let f_by_rows = f;
    let f_by_columns: Vec<f64> = (0..n * n).map(|k| f[(k % n) * n + k / n]).collect();

    let mut out = vec![0.0; sino_grid.len()];
    out.par_chunks_mut(n_s).enumerate().for_each(|(q, row)| {
        let theta = sino_grid.direction(q);
        let kernel = K::for_angle(sino_grid.angles()[q], dx, ds);
        let support = kernel.support();
        let traversal = Traversal::for_direction(theta);
        let f_t = match traversal {
            Traversal::ColumnsOuter => &f_by_columns[..],
            Traversal::RowsOuter => f_by_rows,
        };
        for (p, slot) in row.iter_mut().enumerate() {
            let s = sino_grid.coordinate(p);
            let mut val = 0.0;
            for outer in 0..n {
                let range = inner_index_range(grid, traversal, theta, s, support, outer);
                let f_line = &f_t[outer * n..(outer + 1) * n];
                for inner in range.iter() {
                    let (i, j) = traversal.pixel(outer, inner);
                    let t = ray_offset(coords[i], coords[j], theta, s);
                    val += kernel.weight(t) * f_line[inner];
                }
            }
            *slot = dx * dx * val;
        }
    });
    out
}

/// Discrete backprojection
/// `(B g)[ij] = delta_s sum_q |Phi_q| sum_p w(phi_q, x_ij . theta_q - s_p) g_qp`.
pub fn back_project(
    sino: &Sinogram,
    image_grid: ImageGrid,
    kind: WeightKind,
) -> Result<Image, OperatorError> {
    if let Some(index) = first_non_finite(sino.values()) {
        return Err(OperatorError::NonFiniteInput { index });
    }
    let values = match kind {
        WeightKind::RayDriven => backward_with::<RayGeometry>(sino, image_grid),
        WeightKind::PixelDriven => backward_with::<PixelHat>(sino, image_grid),
    };
    Ok(Image::from_values(image_grid, values).expect("finite input gives finite output"))
}

struct AngleData<K> {
    theta: (f64, f64),
    width: f64,
    kernel: K,
    support: SupportInterval,
}

fn backward_with<K: Kernel>(sino: &Sinogram, grid: ImageGrid) -> Vec<f64> {
    let sg = sino.grid();
    let n = grid.n_x();
    let n_s = sg.n_s();
    let (dx, ds) = (grid.delta_x(), sg.delta_s());
    let g = sino.values();
    let detector: Vec<f64> = (0..n_s).map(|p| sg.coordinate(p)).collect();
    let angles: Vec<AngleData<K>> = sg
        .angles()
        .iter()
        .zip(sg.angular_widths())
        .enumerate()
        .map(|(q, (&phi, &width))| {
            let kernel = K::for_angle(phi, dx, ds);
            AngleData {
                theta: sg.direction(q),
                width,
                support: kernel.support(),
                kernel,
            }
        })
        .collect();

    let mut out = vec![0.0; grid.len()];
    out.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        let x = grid.coordinate(i);
        for (j, slot) in row.iter_mut().enumerate() {
            let y = grid.coordinate(j);
            let mut val = 0.0;
            for (q, a) in angles.iter().enumerate() {
                let proj = ray_offset(x, y, a.theta, 0.0);
                let g_row = &g[q * n_s..(q + 1) * n_s];
                for p in detector_range(sg, proj, a.support).iter() {
                    let t = ray_offset(x, y, a.theta, detector[p]);
                    val += a.width * a.kernel.weight(t) * g_row[p];
                }
            }
            *slot = ds * val;
        }
    });
    out
}

/// Maximum number of entries per matrix accepted by [`assemble_dense`].
pub const DENSE_ENTRY_LIMIT: u128 = 100_000_000;

/// Explicit system matrices for small problems, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperatorPair {
    /// `(n_phi * n_s) x n_x^2`, entries `delta_x^2 w`.
    pub a_matrix: Vec<f64>,
    /// `n_x^2 x (n_phi * n_s)`, entries `delta_s |Phi_q| w`.
    pub b_matrix: Vec<f64>,
    pub kind: WeightKind,
    pub params: DiscretizationParams,
}

impl DenseOperatorPair {
    pub fn rows(&self) -> usize {
        self.params.sinogram.len()
    }

    pub fn cols(&self) -> usize {
        self.params.image.len()
    }

    pub fn a(&self, row: usize, col: usize) -> f64 {
        self.a_matrix[row * self.cols() + col]
    }

    pub fn b(&self, row: usize, col: usize) -> f64 {
        self.b_matrix[row * self.rows() + col]
    }

    pub fn apply_a(&self, f: &[f64]) -> Vec<f64> {
        matvec(&self.a_matrix, self.rows(), self.cols(), f)
    }

    pub fn apply_b(&self, g: &[f64]) -> Vec<f64> {
        matvec(&self.b_matrix, self.cols(), self.rows(), g)
    }
}

fn matvec(m: &[f64], rows: usize, cols: usize, v: &[f64]) -> Vec<f64> {
    assert_eq!(v.len(), cols);
    m.chunks_exact(cols)
        .take(rows)
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

pub fn assemble_dense(
    params: &DiscretizationParams,
    kind: WeightKind,
) -> Result<DenseOperatorPair, OperatorError> {
    let rows = params.sinogram.len();
    let cols = params.image.len();
    let entries = rows as u128 * cols as u128;
    if entries > DENSE_ENTRY_LIMIT {
        return Err(OperatorError::TooLarge {
            entries,
            limit: DENSE_ENTRY_LIMIT,
        });
    }
    let (img, sg) = (params.image, &params.sinogram);
    let (dx, ds) = (params.delta_x(), params.delta_s());
    let mut a_matrix = vec![0.0; rows * cols];
    let mut b_matrix = vec![0.0; rows * cols];
    for (q, (&phi, &width)) in sg.angles().iter().zip(sg.angular_widths()).enumerate() {
        let theta = sg.direction(q);
        for p in 0..sg.n_s() {
            let row = q * sg.n_s() + p;
            for i in 0..img.n_x() {
                for j in 0..img.n_x() {
                    let col = img.flat_index(i, j);
                    let t = ray_offset(img.coordinate(i), img.coordinate(j), theta, sg.coordinate(p));
                    let w = kind.weight(phi, dx, ds, t);
                    a_matrix[row * cols + col] = dx * dx * w;
                    b_matrix[col * rows + row] = ds * width * w;
                }
            }
        }
    }
    Ok(DenseOperatorPair {
        a_matrix,
        b_matrix,
        kind,
        params: params.clone(),
    })
}
