//! Ellipse phantoms with closed-form line integrals.

use crate::error::PhantomError;
use crate::geometry::{direction, Image, ImageGrid, Sinogram, SinogramGrid};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ellipse {
    pub center: (f64, f64),
    /// Semi-axes `(a, b)` before rotation; `a` lies along the x-axis.
    pub semi_axes: (f64, f64),
    /// Counter-clockwise rotation in radians.
    pub rotation: f64,
    /// Added to the density of every point inside.
    pub density: f64,
}

impl Ellipse {
    pub fn disk(center: (f64, f64), radius: f64, density: f64) -> Self {
        Ellipse {
            center,
            semi_axes: (radius, radius),
            rotation: 0.0,
            density,
        }
    }

    /// Closed ellipse membership.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let (dx, dy) = (x - self.center.0, y - self.center.1);
        let (s, c) = self.rotation.sin_cos();
        let u = (c * dx + s * dy) / self.semi_axes.0;
        let v = (-s * dx + c * dy) / self.semi_axes.1;
        u * u + v * v <= 1.0
    }

    /// Length of the chord cut from the line `{x : x . theta_phi = s}`.
    pub fn chord_length(&self, phi: f64, s: f64) -> f64 {
        let (a, b) = self.semi_axes;
        let theta = direction(phi);
        let offset = s - (self.center.0 * theta.0 + self.center.1 * theta.1);
        let (sr, cr) = (phi - self.rotation).sin_cos();
        // squared support function of the ellipse in direction theta
        let r2 = a * a * cr * cr + b * b * sr * sr;
        let disc = r2 - offset * offset;
        if disc <= 0.0 {
            0.0
        } else {
            2.0 * a * b * disc.sqrt() / r2
        }
    }

    pub fn area(&self) -> f64 {
        std::f64::consts::PI * self.semi_axes.0 * self.semi_axes.1
    }
}

/// Sum of ellipse indicators, supported in the closed unit ball.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipsePhantom {
    components: Vec<Ellipse>,
}

impl EllipsePhantom {
    pub fn new(components: Vec<Ellipse>) -> Result<Self, PhantomError> {
        if components.is_empty() {
            return Err(PhantomError::Empty);
        }
        for (index, e) in components.iter().enumerate() {
            let finite = [e.center.0, e.center.1, e.rotation, e.density]
                .iter()
                .all(|v| v.is_finite());
            if !finite {
                return Err(PhantomError::NonFinite { index });
            }
            let (a, b) = e.semi_axes;
            if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
                return Err(PhantomError::BadAxes { index });
            }
            let extent = e.center.0.hypot(e.center.1) + a.max(b);
            if extent > 1.0 + 1e-12 {
                return Err(PhantomError::OutsideUnitBall { index, extent });
            }
        }
        Ok(EllipsePhantom { components })
    }

    /// Centered disk of the given radius and density.
    pub fn disk(radius: f64, density: f64) -> Result<Self, PhantomError> {
        Self::new(vec![Ellipse::disk((0.0, 0.0), radius, density)])
    }

    /// Built-in test object: a large disk, an off-center rotated ellipse, and
    /// a small high-contrast disk.
    pub fn ellipse_suite() -> Self {
        Self::new(vec![
            Ellipse::disk((0.0, 0.0), 0.7, 1.0),
            Ellipse {
                center: (0.2, -0.1),
                semi_axes: (0.3, 0.15),
                rotation: 30f64.to_radians(),
                density: 0.5,
            },
            Ellipse::disk((-0.3, 0.3), 0.08, 2.0),
        ])
        .expect("built-in phantom is valid")
    }

    pub fn components(&self) -> &[Ellipse] {
        &self.components
    }

    pub fn density_at(&self, x: f64, y: f64) -> f64 {
        self.components
            .iter()
            .filter(|e| e.contains(x, y))
            .map(|e| e.density)
            .sum()
    }

    /// Exact line integral along `{x : x . theta_phi = s}`.
    pub fn line_integral(&self, phi: f64, s: f64) -> f64 {
        self.components
            .iter()
            .map(|e| e.density * e.chord_length(phi, s))
            .sum()
    }

    /// Integral of the density over the plane.
    pub fn mass(&self) -> f64 {
        self.components.iter().map(|e| e.density * e.area()).sum()
    }
}

/// How pixel values are obtained from a continuous phantom.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RasterMode {
    /// Value at the pixel center.
    PointSample,
    /// Mean over a `k x k` grid of subpixel midpoints.
    MeanValue(usize),
}

pub fn rasterize(
    phantom: &EllipsePhantom,
    grid: ImageGrid,
    mode: RasterMode,
) -> Result<Image, PhantomError> {
    match mode {
        RasterMode::PointSample => Ok(Image::from_fn(grid, |x, y| phantom.density_at(x, y))),
        RasterMode::MeanValue(0) => Err(PhantomError::BadSupersampling),
        RasterMode::MeanValue(k) => {
            let dx = grid.delta_x();
            let offsets: Vec<f64> = (0..k)
                .map(|m| ((m as f64 + 0.5) / k as f64 - 0.5) * dx)
                .collect();
            let norm = 1.0 / (k * k) as f64;
            Ok(Image::from_fn(grid, |x, y| {
                let mut sum = 0.0;
                for &ox in &offsets {
                    for &oy in &offsets {
                        sum += phantom.density_at(x + ox, y + oy);
                    }
                }
                sum * norm
            }))
        }
    }
}

/// Pointwise analytic Radon transform at every `(phi_q, s_p)`.
pub fn analytic_sinogram(phantom: &EllipsePhantom, sino_grid: &SinogramGrid) -> Sinogram {
    let mut values = Vec::with_capacity(sino_grid.len());
    for &phi in sino_grid.angles() {
        for p in 0..sino_grid.n_s() {
            values.push(phantom.line_integral(phi, sino_grid.coordinate(p)));
        }
    }
    Sinogram::from_values(sino_grid.clone(), values).expect("finite phantom gives finite sinogram")
}

/// Sinogram with every entry equal to `value`. Its exact backprojection is
/// the constant `pi * value`.
pub fn constant_sinogram(sino_grid: &SinogramGrid, value: f64) -> Sinogram {
    let mut sino = Sinogram::zeros(sino_grid.clone());
    sino.values_mut().fill(value);
    sino
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_4, PI};

    /// Adaptive Simpson quadrature; refines only where the integrand jumps.
    fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
        fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
            (b - a) / 6.0 * (fa + 4.0 * fm + fb)
        }
        #[allow(clippy::too_many_arguments)]
        fn recurse(
            f: &dyn Fn(f64) -> f64,
            a: f64,
            b: f64,
            fa: f64,
            fm: f64,
            fb: f64,
            whole: f64,
            tol: f64,
            depth: u32,
        ) -> f64 {
            let m = 0.5 * (a + b);
            let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
            let (flm, frm) = (f(lm), f(rm));
            let left = simpson(fa, flm, fm, a, m);
            let right = simpson(fm, frm, fb, m, b);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                return left + right + (left + right - whole) / 15.0;
            }
            recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
        // seed with a fine uniform split so no component is missed entirely
        let pieces = 64;
        let h = (b - a) / pieces as f64;
        (0..pieces)
            .map(|k| {
                let (lo, hi) = (a + k as f64 * h, a + (k + 1) as f64 * h);
                let (fa, fm, fb) = (f(lo), f(0.5 * (lo + hi)), f(hi));
                recurse(f, lo, hi, fa, fm, fb, simpson(fa, fm, fb, lo, hi), tol / pieces as f64, 60)
            })
            .sum()
    }

    fn numeric_line_integral(ph: &EllipsePhantom, phi: f64, s: f64) -> f64 {
        let (c, sn) = (phi.cos(), phi.sin());
        let f = move |t: f64| ph.density_at(s * c - t * sn, s * sn + t * c);
        adaptive_simpson(&f, -1.5, 1.5, 1e-11)
    }

    #[test]
    fn disk_chords() {
        let ph = EllipsePhantom::disk(0.5, 1.0).unwrap();
        for phi in [0.0, 0.4, 2.0] {
            assert_abs_diff_eq!(ph.line_integral(phi, 0.0), 1.0, epsilon = 1e-15);
            assert_eq!(ph.line_integral(phi, 0.5), 0.0);
            assert_abs_diff_eq!(ph.line_integral(phi, 0.3), 0.8, epsilon = 1e-15);
        }
    }

    #[test]
    fn rotated_ellipse_matches_quadrature() {
        let ph = EllipsePhantom::new(vec![Ellipse {
            center: (0.1, -0.2),
            semi_axes: (0.4, 0.2),
            rotation: 30f64.to_radians(),
            density: 1.0,
        }])
        .unwrap();
        let cases = [(0.0, 0.05), (0.3, -0.1), (1.2, 0.15), (2.5, -0.3), (FRAC_PI_4, 0.0), (3.0, 0.2)];
        for (phi, s) in cases {
            let exact = ph.line_integral(phi, s);
            let numeric = numeric_line_integral(&ph, phi, s);
            assert!((exact - numeric).abs() < 1e-8, "phi={phi} s={s}: {exact} vs {numeric}");
        }
    }

    #[test]
    fn suite_matches_quadrature() {
        let ph = EllipsePhantom::ellipse_suite();
        for (phi, s) in [(0.1, 0.0), (1.0, 0.25), (2.2, -0.35)] {
            let numeric = numeric_line_integral(&ph, phi, s);
            assert!((ph.line_integral(phi, s) - numeric).abs() < 1e-8);
        }
    }

    #[test]
    fn rasterize_point_samples() {
        let grid = ImageGrid::new(2).unwrap();
        let unit = EllipsePhantom::disk(1.0, 1.0).unwrap();
        let img = rasterize(&unit, grid, RasterMode::PointSample).unwrap();
        assert!(img.values().iter().all(|&v| v == 1.0));
        let half = EllipsePhantom::disk(0.5, 1.0).unwrap();
        let img = rasterize(&half, grid, RasterMode::PointSample).unwrap();
        assert!(img.values().iter().all(|&v| v == 0.0));
        assert_eq!(
            rasterize(&half, grid, RasterMode::MeanValue(0)),
            Err(PhantomError::BadSupersampling)
        );
    }

    #[test]
    fn mean_value_area() {
        let grid = ImageGrid::new(256).unwrap();
        let ph = EllipsePhantom::disk(0.5, 1.0).unwrap();
        let img = rasterize(&ph, grid, RasterMode::MeanValue(4)).unwrap();
        let area: f64 = img.values().iter().sum::<f64>() * grid.delta_x().powi(2);
        assert!((area - PI / 4.0).abs() < 0.01 * PI / 4.0);
    }

    #[test]
    fn mean_value_approaches_point_value_inside() {
        let grid = ImageGrid::new(32).unwrap();
        let ph = EllipsePhantom::ellipse_suite();
        let point = rasterize(&ph, grid, RasterMode::PointSample).unwrap();
        let mean = rasterize(&ph, grid, RasterMode::MeanValue(8)).unwrap();
        // pixel (16, 16) has center (1/32, 1/32), well inside the big disk only
        assert_eq!(point.get(16, 16), 1.0);
        assert_eq!(mean.get(16, 16), 1.0);
    }

    #[test]
    fn validation() {
        assert_eq!(EllipsePhantom::new(vec![]), Err(PhantomError::Empty));
        assert!(matches!(
            EllipsePhantom::new(vec![Ellipse::disk((0.5, 0.0), 0.6, 1.0)]),
            Err(PhantomError::OutsideUnitBall { index: 0, .. })
        ));
        assert!(matches!(
            EllipsePhantom::new(vec![Ellipse::disk((0.0, 0.0), 0.0, 1.0)]),
            Err(PhantomError::BadAxes { index: 0 })
        ));
        assert!(matches!(
            EllipsePhantom::new(vec![Ellipse::disk((f64::NAN, 0.0), 0.1, 1.0)]),
            Err(PhantomError::NonFinite { index: 0 })
        ));
    }

    #[test]
    fn constant_sinograms() {
        let sg = SinogramGrid::equispaced(5, 3).unwrap();
        assert!(constant_sinogram(&sg, 2.0).values().iter().all(|&v| v == 2.0));
        assert!(constant_sinogram(&sg, 0.0).values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn mass_is_constant_across_angles() {
        let ph = EllipsePhantom::ellipse_suite();
        let sg = SinogramGrid::equispaced(2048, 12).unwrap();
        let sino = analytic_sinogram(&ph, &sg);
        let ds = sg.delta_s();
        for q in 0..sg.n_phi() {
            let m: f64 = sino.row(q).iter().sum::<f64>() * ds;
            // midpoint rule on a function with square-root edges
            assert!((m - ph.mass()).abs() < 1e-4, "q={q}: {m} vs {}", ph.mass());
        }
    }

    proptest! {
        #[test]
        fn sinogram_symmetry(phi in 0.0..PI, s in -1.0f64..1.0) {
            let ph = EllipsePhantom::ellipse_suite();
            let a = ph.line_integral(phi, s);
            let b = ph.line_integral(phi + PI, -s);
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }
}
