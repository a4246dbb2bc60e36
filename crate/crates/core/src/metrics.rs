//! Discrete L2 norms and relative errors.
//!
//! Sinogram norms weight each angle by its angular pixel width and each
//! bin by `delta_s`; image norms weight each pixel by `delta_x^2`. For
//! equispaced full-range angle sets every width is `pi / n_phi`.

use crate::error::MetricsError;
use crate::geometry::{Image, Sinogram};

/// Relative L2 errors of a candidate sinogram against a reference.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub global_rel_l2: f64,
    pub per_angle_rel_l2: Vec<f64>,
    pub worst_angle_rel_l2: f64,
    pub worst_angle_index: usize,
    pub mask_radius: Option<f64>,
}

impl ErrorReport {
    pub fn worst_angle_deg(&self, sino: &Sinogram) -> f64 {
        sino.grid().angles()[self.worst_angle_index].to_degrees()
    }
}

/// Default spatial mask for backprojection comparisons.
pub const DEFAULT_BACKPROJECTION_MASK: f64 = 0.95;

fn sum_sq(values: impl Iterator<Item = f64>) -> f64 {
    values.map(|v| v * v).sum()
}

/// `sqrt(sum_q |Phi_q| delta_s sum_p g_qp^2)`.
pub fn sinogram_norm(sino: &Sinogram) -> f64 {
    let grid = sino.grid();
    let ds = grid.delta_s();
    grid.angular_widths()
        .iter()
        .enumerate()
        .map(|(q, &w)| w * ds * sum_sq(sino.row(q).iter().copied()))
        .sum::<f64>()
        .sqrt()
}

/// `sqrt(delta_s sum_p g_qp^2)` for a single projection.
pub fn projection_norm(sino: &Sinogram, q: usize) -> f64 {
    (sino.grid().delta_s() * sum_sq(sino.row(q).iter().copied())).sqrt()
}

#[inline]
fn in_mask(x: f64, y: f64, mask_radius: Option<f64>) -> bool {
    mask_radius.is_none_or(|r| x * x + y * y <= r * r)
}

/// `sqrt(delta_x^2 sum f_ij^2)` over pixels with `|x_ij| <= mask_radius`.
pub fn image_norm(image: &Image, mask_radius: Option<f64>) -> f64 {
    let grid = image.grid();
    let n = grid.n_x();
    let mut acc = 0.0;
    for i in 0..n {
        let x = grid.coordinate(i);
        for j in 0..n {
            if in_mask(x, grid.coordinate(j), mask_radius) {
                let v = image.get(i, j);
                acc += v * v;
            }
        }
    }
    (grid.delta_x().powi(2) * acc).sqrt()
}

fn difference(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Global, per-angle and worst-angle relative errors of `candidate`.
pub fn error_report(truth: &Sinogram, candidate: &Sinogram) -> Result<ErrorReport, MetricsError> {
    if truth.grid() != candidate.grid() {
        return Err(MetricsError::GridMismatch);
    }
    let diff = Sinogram::from_values(
        truth.grid().clone(),
        difference(truth.values(), candidate.values()),
    )
    .map_err(|_| MetricsError::GridMismatch)?;

    let reference = sinogram_norm(truth);
    if reference == 0.0 {
        return Err(MetricsError::Undefined {
            what: "sinogram".into(),
        });
    }
    let global_rel_l2 = sinogram_norm(&diff) / reference;

    let mut per_angle_rel_l2 = Vec::with_capacity(truth.grid().n_phi());
    for q in 0..truth.grid().n_phi() {
        let norm = projection_norm(truth, q);
        if norm == 0.0 {
            return Err(MetricsError::Undefined {
                what: format!("projection {q}"),
            });
        }
        per_angle_rel_l2.push(projection_norm(&diff, q) / norm);
    }
    let (worst_angle_index, worst_angle_rel_l2) = per_angle_rel_l2
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (q, e)| if e > best.1 { (q, e) } else { best });

    Ok(ErrorReport {
        global_rel_l2,
        per_angle_rel_l2,
        worst_angle_rel_l2,
        worst_angle_index,
        mask_radius: None,
    })
}

/// Relative L2 error of an image restricted to the mask.
pub fn image_relative_error(
    truth: &Image,
    candidate: &Image,
    mask_radius: Option<f64>,
) -> Result<f64, MetricsError> {
    if truth.grid() != candidate.grid() {
        return Err(MetricsError::GridMismatch);
    }
    let reference = image_norm(truth, mask_radius);
    if reference == 0.0 {
        return Err(MetricsError::Undefined {
            what: "image".into(),
        });
    }
    let diff = Image::from_values(truth.grid(), difference(truth.values(), candidate.values()))
        .map_err(|_| MetricsError::GridMismatch)?;
    Ok(image_norm(&diff, mask_radius) / reference)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{AngleSetKind, ImageGrid, SinogramGrid};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn filled(grid: &SinogramGrid, v: f64) -> Sinogram {
        Sinogram::from_values(grid.clone(), vec![v; grid.len()]).unwrap()
    }

    #[test]
    fn sinogram_norms() {
        let grid = SinogramGrid::equispaced(7, 5).unwrap();
        assert_abs_diff_eq!(sinogram_norm(&filled(&grid, 1.0)), (2.0 * PI).sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(sinogram_norm(&filled(&grid, 2.0)), 2.0 * (2.0 * PI).sqrt(), epsilon = 1e-14);
        let mut single = Sinogram::zeros(grid.clone());
        single.values_mut()[3] = 1.0;
        let expected = (PI / 5.0 * grid.delta_s()).sqrt();
        assert_abs_diff_eq!(sinogram_norm(&single), expected, epsilon = 1e-15);
    }

    #[test]
    fn explicit_angles_use_their_widths() {
        let grid = SinogramGrid::new(4, &AngleSetKind::Explicit(vec![0.1, 0.2, 3.0])).unwrap();
        // widths sum to pi, so a constant sinogram still has norm sqrt(2 pi)
        assert_abs_diff_eq!(sinogram_norm(&filled(&grid, 1.0)), (2.0 * PI).sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn image_norms() {
        let grid = ImageGrid::new(40).unwrap();
        let ones = Image::constant(grid, 1.0);
        assert_abs_diff_eq!(image_norm(&ones, None), 2.0, epsilon = 1e-14);
        let count = (0..40)
            .flat_map(|i| (0..40).map(move |j| (i, j)))
            .filter(|&(i, j)| grid.coordinate(i).hypot(grid.coordinate(j)) <= 0.95)
            .count();
        let expected = (grid.delta_x().powi(2) * count as f64).sqrt();
        assert_abs_diff_eq!(image_norm(&ones, Some(0.95)), expected, epsilon = 1e-14);
        let mut single = Image::zeros(grid);
        single.values_mut()[5] = 1.0;
        assert_abs_diff_eq!(image_norm(&single, None), grid.delta_x(), epsilon = 1e-16);
    }

    #[test]
    fn trivial_reports() {
        let grid = SinogramGrid::equispaced(6, 4).unwrap();
        let g = Sinogram::from_values(grid.clone(), (0..24).map(|k| 1.0 + k as f64).collect()).unwrap();
        let same = error_report(&g, &g).unwrap();
        assert_eq!(same.global_rel_l2, 0.0);
        assert!(same.per_angle_rel_l2.iter().all(|&e| e == 0.0));
        let zero = error_report(&g, &Sinogram::zeros(grid.clone())).unwrap();
        assert_abs_diff_eq!(zero.global_rel_l2, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(zero.worst_angle_rel_l2, 1.0, epsilon = 1e-15);
        let mut double = g.clone();
        double.values_mut().iter_mut().for_each(|v| *v *= 2.0);
        let r = error_report(&g, &double).unwrap();
        assert_abs_diff_eq!(r.global_rel_l2, 1.0, epsilon = 1e-15);
        for e in &r.per_angle_rel_l2 {
            assert_abs_diff_eq!(*e, 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn zero_reference_is_an_error() {
        let grid = SinogramGrid::equispaced(3, 2).unwrap();
        let zero = Sinogram::zeros(grid.clone());
        assert!(matches!(error_report(&zero, &filled(&grid, 1.0)), Err(MetricsError::Undefined { .. })));
        let mut partial = Sinogram::zeros(grid.clone());
        partial.values_mut()[0] = 1.0;
        assert_eq!(
            error_report(&partial, &partial),
            Err(MetricsError::Undefined { what: "projection 1".into() })
        );
        let img = Image::zeros(ImageGrid::new(3).unwrap());
        assert!(image_relative_error(&img, &img, None).is_err());
        let other = SinogramGrid::equispaced(3, 3).unwrap();
        assert_eq!(error_report(&filled(&grid, 1.0), &filled(&other, 1.0)), Err(MetricsError::GridMismatch));
    }

    proptest! {
        #[test]
        fn reports_are_scale_invariant(
            truth in proptest::collection::vec(0.5f64..2.0, 12),
            noise in proptest::collection::vec(-0.5f64..0.5, 12),
            alpha in prop_oneof![-10.0f64..-0.1, 0.1f64..10.0],
        ) {
            let grid = SinogramGrid::equispaced(4, 3).unwrap();
            let cand: Vec<f64> = truth.iter().zip(&noise).map(|(a, b)| a + b).collect();
            let g = Sinogram::from_values(grid.clone(), truth.clone()).unwrap();
            let c = Sinogram::from_values(grid.clone(), cand.clone()).unwrap();
            let gs = Sinogram::from_values(grid.clone(), truth.iter().map(|v| v * alpha).collect()).unwrap();
            let cs = Sinogram::from_values(grid.clone(), cand.iter().map(|v| v * alpha).collect()).unwrap();
            let a = error_report(&g, &c).unwrap();
            let b = error_report(&gs, &cs).unwrap();
            prop_assert!((a.global_rel_l2 - b.global_rel_l2).abs() <= 1e-14);
            for (x, y) in a.per_angle_rel_l2.iter().zip(&b.per_angle_rel_l2) {
                prop_assert!((x - y).abs() <= 1e-14);
            }
            let max = a.per_angle_rel_l2.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert_eq!(a.worst_angle_rel_l2, max);
        }
    }
}
