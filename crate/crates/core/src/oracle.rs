//! Slow reference implementations used to check the closed forms and the
//! matrix-free operators.
//!
//! Nothing here shares code with the index-range logic in
//! [`crate::operators`], and the clipping routine does not use the
//! trapezoid formula of [`crate::weights`].

use crate::error::OperatorError;
use crate::geometry::{ray_offset, Image, Sinogram, SinogramGrid, SWAP_THRESHOLD};
use crate::weights::WeightKind;

/// Largest image side accepted by the brute-force projectors.
pub const BRUTE_FORCE_MAX_NX: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClipResult {
    /// Length of the line inside the closed square.
    pub chord_length: f64,
    /// Length of the line inside the square's boundary. Nonzero only when
    /// the line contains one of the square's edges.
    pub boundary_overlap: f64,
}

impl ClipResult {
    /// Chord length with shared edges counted half.
    pub fn corrected(&self) -> f64 {
        self.chord_length - 0.5 * self.boundary_overlap
    }
}

/// Intersects the line `{x : x . (cos phi, sin phi) = s}` with the closed
/// axis-aligned square of side `delta_x` centered at `center`.
///
/// Parametric slab clipping along the line direction `(-sin phi, cos phi)`.
pub fn clip_line_square(phi: f64, s: f64, center: (f64, f64), delta_x: f64) -> ClipResult {
    let (sn, cs) = phi.sin_cos();
    let half = 0.5 * delta_x;

    // work relative to the square's center so that rounding scales with delta_x
    let offset = s - (center.0 * cs + center.1 * sn);

    let axis_aligned = sn.abs().min(cs.abs()) < 1e-12;
    if axis_aligned && (offset.abs() - half).abs() <= 1e-12 * delta_x {
        return ClipResult {
            chord_length: delta_x,
            boundary_overlap: delta_x,
        };
    }

    let base = (offset * cs, offset * sn);
    let dir = (-sn, cs);
    let mut u_lo = f64::NEG_INFINITY;
    let mut u_hi = f64::INFINITY;
    for (b, d) in [(base.0, dir.0), (base.1, dir.1)] {
        if d.abs() < 1e-15 {
            if b.abs() > half {
                return ClipResult {
                    chord_length: 0.0,
                    boundary_overlap: 0.0,
                };
            }
        } else {
            let (a, e) = ((-half - b) / d, (half - b) / d);
            u_lo = u_lo.max(a.min(e));
            u_hi = u_hi.min(a.max(e));
        }
    }
    ClipResult {
        chord_length: (u_hi - u_lo).max(0.0),
        boundary_overlap: 0.0,
    }
}

/// Forward projection by exhaustive summation over every pixel of every ray.
///
/// The per-ray summation visits pixels in the same order as
/// [`crate::operators::forward_project`] (the index along the ray outermost),
/// so the results agree bitwise.
pub fn brute_force_forward(
    image: &Image,
    sino_grid: &SinogramGrid,
    kind: WeightKind,
) -> Result<Sinogram, OperatorError> {
    let grid = image.grid();
    let n = grid.n_x();
    if n > BRUTE_FORCE_MAX_NX {
        return Err(OperatorError::OracleTooLarge { n_x: n, limit: BRUTE_FORCE_MAX_NX });
    }
    let (dx, ds) = (grid.delta_x(), sino_grid.delta_s());
    let f = image.values();
    let mut out = Vec::with_capacity(sino_grid.len());
    for (q, &phi) in sino_grid.angles().iter().enumerate() {
        let theta = sino_grid.direction(q);
        let rows_outer = theta.0.abs() < SWAP_THRESHOLD;
        for p in 0..sino_grid.n_s() {
            let s = sino_grid.coordinate(p);
            let mut val = 0.0;
            for outer in 0..n {
                for inner in 0..n {
                    let (i, j) = if rows_outer { (outer, inner) } else { (inner, outer) };
                    let t = ray_offset(grid.coordinate(i), grid.coordinate(j), theta, s);
                    val += kind.weight(phi, dx, ds, t) * f[i * n + j];
                }
            }
            out.push(dx * dx * val);
        }
    }
    Ok(Sinogram::from_values(sino_grid.clone(), out).expect("finite by construction"))
}

/// Backprojection by exhaustive summation over every detector bin.
pub fn brute_force_backproject(
    sino: &Sinogram,
    image_grid: crate::geometry::ImageGrid,
    kind: WeightKind,
) -> Result<Image, OperatorError> {
    let n = image_grid.n_x();
    if n > BRUTE_FORCE_MAX_NX {
        return Err(OperatorError::OracleTooLarge { n_x: n, limit: BRUTE_FORCE_MAX_NX });
    }
    let sgrid = sino.grid();
    let (dx, ds) = (image_grid.delta_x(), sgrid.delta_s());
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let (x, y) = (image_grid.coordinate(i), image_grid.coordinate(j));
            let mut val = 0.0;
            for (q, (&phi, &width)) in sgrid.angles().iter().zip(sgrid.angular_widths()).enumerate() {
                let theta = sgrid.direction(q);
                for p in 0..sgrid.n_s() {
                    let t = ray_offset(x, y, theta, sgrid.coordinate(p));
                    val += width * kind.weight(phi, dx, ds, t) * sino.get(q, p);
                }
            }
            out.push(ds * val);
        }
    }
    Ok(Image::from_values(image_grid, out).expect("finite by construction"))
}

/// Number of trapezoid intervals used by [`weight_quadrature`].
pub const QUADRATURE_NODES: usize = 1_000_000;

/// Trapezoid rule for `int w(phi, t) dt` over `[-delta, delta]`, which
/// contains the support of both kinds (`delta = delta_x` for ray-driven,
/// `delta = delta_s` for pixel-driven). Should be 1.
pub fn weight_quadrature(kind: WeightKind, phi: f64, delta: f64) -> f64 {
    let n = QUADRATURE_NODES;
    let node = |k: usize| delta * (2.0 * k as f64 - n as f64) / n as f64;
    let h = 2.0 * delta / n as f64;
    let w = |t: f64| kind.weight(phi, delta, delta, t);
    let interior: f64 = (1..n).map(|k| w(node(k))).sum();
    h * (interior + 0.5 * (w(node(0)) + w(node(n))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ImageGrid;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, SQRT_2};

    #[test]
    fn diagonal_chord() {
        let r = clip_line_square(FRAC_PI_4, 0.0, (0.0, 0.0), 1.0);
        assert_abs_diff_eq!(r.chord_length, SQRT_2, epsilon = 1e-15);
        assert_eq!(r.boundary_overlap, 0.0);
    }

    #[test]
    fn edge_overlap_counts_half() {
        let r = clip_line_square(0.0, 0.5, (0.0, 0.0), 1.0);
        assert_eq!(r.chord_length, 1.0);
        assert_eq!(r.boundary_overlap, 1.0);
        assert_eq!(r.corrected(), 0.5);
        let r = clip_line_square(FRAC_PI_2, 0.5, (0.0, 0.0), 1.0);
        assert_eq!(r.corrected(), 0.5);
    }

    #[test]
    fn misses_and_interior_axis_rays() {
        assert_eq!(clip_line_square(0.0, 0.7, (0.0, 0.0), 1.0).chord_length, 0.0);
        let r = clip_line_square(FRAC_PI_2, 0.1, (0.3, 0.2), 0.5);
        assert_abs_diff_eq!(r.chord_length, 0.5, epsilon = 1e-15);
        assert_eq!(r.boundary_overlap, 0.0);
    }

    #[test]
    fn quadrature_is_unit_mass() {
        assert_abs_diff_eq!(weight_quadrature(WeightKind::RayDriven, 0.0, 1.0), 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(weight_quadrature(WeightKind::RayDriven, FRAC_PI_4, 1.0), 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(weight_quadrature(WeightKind::RayDriven, 1.1, 0.01), 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(weight_quadrature(WeightKind::PixelDriven, 0.3, 0.25), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn brute_force_size_guard() {
        let img = Image::zeros(ImageGrid::new(65).unwrap());
        let sg = SinogramGrid::equispaced(4, 2).unwrap();
        assert!(matches!(
            brute_force_forward(&img, &sg, WeightKind::RayDriven),
            Err(OperatorError::OracleTooLarge { .. })
        ));
    }

    #[test]
    fn brute_force_single_pixel() {
        let grid = ImageGrid::new(4).unwrap();
        let mut img = Image::zeros(grid);
        img.values_mut()[grid.flat_index(1, 2)] = 1.0;
        let sg = SinogramGrid::equispaced(5, 3).unwrap();
        let out = brute_force_forward(&img, &sg, WeightKind::RayDriven).unwrap();
        let dx = grid.delta_x();
        for q in 0..3 {
            for p in 0..5 {
                let t = ray_offset(grid.coordinate(1), grid.coordinate(2), sg.direction(q), sg.coordinate(p));
                let w = WeightKind::RayDriven.weight(sg.angles()[q], dx, sg.delta_s(), t);
                assert_eq!(out.get(q, p), dx * dx * w);
            }
        }
        let zero = brute_force_forward(&Image::zeros(grid), &sg, WeightKind::PixelDriven).unwrap();
        assert!(zero.values().iter().all(|&v| v == 0.0));
    }

    proptest! {
        #[test]
        fn clipping_is_translation_invariant(
            phi in 0.0..PI,
            s in -1.0f64..1.0,
            cx in -1.0f64..1.0,
            cy in -1.0f64..1.0,
            dx in 0.05f64..0.5,
        ) {
            let (sn, cs) = phi.sin_cos();
            let shifted = s - (cx * cs + cy * sn);
            let a = clip_line_square(phi, s, (cx, cy), dx);
            let b = clip_line_square(phi, shifted, (0.0, 0.0), dx);
            prop_assert!((a.corrected() - b.corrected()).abs() <= 1e-12 * dx.max(1.0) + 1e-12);
            prop_assert!(a.chord_length <= dx * SQRT_2 * (1.0 + 1e-12));
        }
    }
}
