//! Closed-form ray-driven and pixel-driven weight functions.
//!
//! A discretization assigns the matrix entry `delta_x^2 * w(phi_q, x_ij . theta_q - s_p)`
//! to pixel `(i, j)` and ray `(q, p)`. For ray-driven weights, `delta_x^2 * w`
//! is the length of the intersection of the ray with the pixel (half of it
//! when the ray runs along a pixel edge). The pixel-driven weight is a hat
//! of half-width `delta_s` that distributes each pixel onto the two nearest
//! detector bins.

use std::f64::consts::SQRT_2;

use crate::geometry::{direction, is_axis_aligned};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WeightKind {
    RayDriven,
    PixelDriven,
}

impl WeightKind {
    pub fn name(self) -> &'static str {
        match self {
            WeightKind::RayDriven => "ray",
            WeightKind::PixelDriven => "pixel",
        }
    }

    /// Support of `t -> w(phi, t)` for the given angle and resolutions.
    pub fn support(self, phi: f64, delta_x: f64, delta_s: f64) -> SupportInterval {
        match self {
            WeightKind::RayDriven => RayGeometry::new(phi, delta_x).support(),
            WeightKind::PixelDriven => PixelHat::new(delta_s).support(),
        }
    }

    /// Evaluates `w(phi, t)`. Builds the per-angle cache on every call; hot
    /// loops should hold a [`Kernel`] instead.
    pub fn weight(self, phi: f64, delta_x: f64, delta_s: f64, t: f64) -> f64 {
        match self {
            WeightKind::RayDriven => RayGeometry::new(phi, delta_x).weight(t),
            WeightKind::PixelDriven => pixel_weight(delta_s, t),
        }
    }
}

impl std::fmt::Display for WeightKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for WeightKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ray" | "ray-driven" | "rd" => Ok(WeightKind::RayDriven),
            "pixel" | "pixel-driven" | "pd" => Ok(WeightKind::PixelDriven),
            other => Err(format!("unknown method '{other}' (expected ray or pixel)")),
        }
    }
}

/// Closed interval `[lo, hi]` outside of which a weight function vanishes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportInterval {
    pub lo: f64,
    pub hi: f64,
}

impl SupportInterval {
    pub fn contains(&self, t: f64) -> bool {
        self.lo <= t && t <= self.hi
    }
}

/// A weight function specialized to one projection angle.
pub trait Kernel: Sync + Send + Sized {
    fn for_angle(phi: f64, delta_x: f64, delta_s: f64) -> Self;

    fn weight(&self, t: f64) -> f64;

    fn support(&self) -> SupportInterval;
}

/// Relative tolerance (in units of `delta_x`) within which an axis-aligned
/// ray counts as lying on a pixel edge. Pixel edges computed on grids whose
/// size is not a power of two are off by a few ulps, and an exact comparison
/// would give such rays full weight in both neighbors or in neither.
pub const EDGE_TOLERANCE: f64 = 1e-12;

/// Per-angle constants of the ray-driven trapezoid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayGeometry {
    /// Half-width of the plateau, `(delta_x/2) | |cos| - |sin| |`.
    pub s_lower: f64,
    /// Half-width of the support, `(delta_x/2) (|cos| + |sin|)`.
    pub s_upper: f64,
    /// Chord length through the pixel center in units of `delta_x`.
    pub kappa: f64,
    pub axis_aligned: bool,
    pub delta_x: f64,
    plateau: f64,
    ramp_scale: f64,
    edge: f64,
    edge_tol: f64,
}

impl RayGeometry {
    pub fn new(phi: f64, delta_x: f64) -> Self {
        let half = 0.5 * delta_x;
        if is_axis_aligned(phi) {
            return RayGeometry {
                s_lower: half,
                s_upper: half,
                kappa: 1.0,
                axis_aligned: true,
                delta_x,
                plateau: 1.0 / delta_x,
                ramp_scale: 0.0,
                edge: 0.5 / delta_x,
                edge_tol: EDGE_TOLERANCE * delta_x,
            };
        }
        let (c, s) = direction(phi);
        let (c, s) = (c.abs(), s.abs());
        let kappa = (1.0 / c).min(1.0 / s);
        RayGeometry {
            s_lower: half * (c - s).abs(),
            s_upper: half * (c + s),
            kappa,
            axis_aligned: false,
            delta_x,
            plateau: kappa / delta_x,
            ramp_scale: 1.0 / (delta_x * delta_x * c * s),
            edge: 0.0,
            edge_tol: 0.0,
        }
    }
}

impl Kernel for RayGeometry {
    fn for_angle(phi: f64, delta_x: f64, _delta_s: f64) -> Self {
        RayGeometry::new(phi, delta_x)
    }

    #[inline]
    fn weight(&self, t: f64) -> f64 {
        let a = t.abs();
        if self.axis_aligned {
            // a ray along a pixel edge is shared half and half with the neighbor
            if a < self.s_upper - self.edge_tol {
                self.plateau
            } else if a <= self.s_upper + self.edge_tol {
                self.edge
            } else {
                0.0
            }
        } else if a < self.s_lower {
            self.plateau
        } else if a < self.s_upper {
            // plateau and ramp agree at |t| = s_lower; the ramp branch takes it
            (self.s_upper - a) * self.ramp_scale
        } else {
            0.0
        }
    }

    fn support(&self) -> SupportInterval {
        // the edge tolerance is far below the one-index widening of the
        // operators' index ranges, so it need not enter the support
        SupportInterval {
            lo: -self.s_upper,
            hi: self.s_upper,
        }
    }
}

/// Ray-driven weight `w_rd(phi, t)` for the angle cached in `cache`.
pub fn ray_weight(cache: &RayGeometry, t: f64) -> f64 {
    cache.weight(t)
}

/// Pixel-driven hat `max(delta_s - |t|, 0) / delta_s^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelHat {
    pub delta_s: f64,
    inv_sq: f64,
}

impl PixelHat {
    pub fn new(delta_s: f64) -> Self {
        PixelHat {
            delta_s,
            inv_sq: 1.0 / (delta_s * delta_s),
        }
    }
}

impl Kernel for PixelHat {
    fn for_angle(_phi: f64, _delta_x: f64, delta_s: f64) -> Self {
        PixelHat::new(delta_s)
    }

    #[inline]
    fn weight(&self, t: f64) -> f64 {
        (self.delta_s - t.abs()).max(0.0) * self.inv_sq
    }

    fn support(&self) -> SupportInterval {
        SupportInterval {
            lo: -self.delta_s,
            hi: self.delta_s,
        }
    }
}

pub fn pixel_weight(delta_s: f64, t: f64) -> f64 {
    PixelHat::new(delta_s).weight(t)
}

pub fn support_interval(kind: WeightKind, phi: f64, delta_x: f64, delta_s: f64) -> SupportInterval {
    kind.support(phi, delta_x, delta_s)
}

/// `delta_x^2 * w_rd(phi, center . theta - s)`: the length of the line
/// `{x : x . theta_phi = s}` inside the closed square of side `delta_x`
/// around `center`, minus half of its overlap with the square's boundary.
pub fn intersection_length_closed_form(phi: f64, s: f64, center: (f64, f64), delta_x: f64) -> f64 {
    let (c, sn) = direction(phi);
    let t = center.0 * c + center.1 * sn - s;
    delta_x * delta_x * RayGeometry::new(phi, delta_x).weight(t)
}

/// Upper bound of the ray-driven weight, `sqrt(2) / delta_x`.
pub fn ray_weight_bound(delta_x: f64) -> f64 {
    SQRT_2 / delta_x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::clip_line_square;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    #[test]
    fn ray_weight_cases() {
        let axis = RayGeometry::new(0.0, 1.0);
        assert_eq!(ray_weight(&axis, 0.0), 1.0);
        assert_eq!(ray_weight(&axis, 0.5), 0.5);
        assert_eq!(ray_weight(&axis, -0.5), 0.5);
        assert_eq!(ray_weight(&axis, 0.5000001), 0.0);
        let diag = RayGeometry::new(FRAC_PI_4, 1.0);
        assert_abs_diff_eq!(ray_weight(&diag, 0.0), SQRT_2, epsilon = 1e-15);
    }

    #[test]
    fn ray_weight_ramp_matches_clipping() {
        let phi = 30f64.to_radians();
        let g = RayGeometry::new(phi, 1.0);
        assert_abs_diff_eq!(g.s_upper, 0.683_012_701_892_219_3, epsilon = 1e-15);
        let w = ray_weight(&g, 0.2);
        // chord of the line x . theta = -0.2 through the unit square at the origin
        let clip = clip_line_square(phi, -0.2, (0.0, 0.0), 1.0);
        assert_abs_diff_eq!(w, clip.chord_length, epsilon = 1e-12);
        assert_abs_diff_eq!(w, 1.115_470_053_837_925, epsilon = 1e-12);
    }

    #[test]
    fn pixel_weight_values() {
        assert_eq!(pixel_weight(0.5, 0.0), 2.0);
        assert_eq!(pixel_weight(0.5, 0.5), 0.0);
        assert_eq!(pixel_weight(0.5, 0.25), 1.0);
        assert_eq!(pixel_weight(0.5, -0.25), 1.0);
        assert_eq!(pixel_weight(0.5, 3.0), 0.0);
    }

    #[test]
    fn support_intervals() {
        let r0 = support_interval(WeightKind::RayDriven, 0.0, 1.0, 0.1);
        assert_eq!((r0.lo, r0.hi), (-0.5, 0.5));
        let r45 = support_interval(WeightKind::RayDriven, FRAC_PI_4, 1.0, 0.1);
        assert_abs_diff_eq!(r45.hi, SQRT_2 / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r45.lo, -SQRT_2 / 2.0, epsilon = 1e-15);
        let p = support_interval(WeightKind::PixelDriven, 1.0, 1.0, 0.25);
        assert_eq!((p.lo, p.hi), (-0.25, 0.25));
    }

    #[test]
    fn closed_form_examples() {
        assert_eq!(intersection_length_closed_form(0.0, 0.0, (0.0, 0.0), 1.0), 1.0);
        // corner touch
        let corner = intersection_length_closed_form(FRAC_PI_4, SQRT_2 * 0.5, (0.0, 0.0), 1.0);
        assert_abs_diff_eq!(corner, 0.0, epsilon = 1e-15);
        // ray along an edge counts half
        assert_eq!(intersection_length_closed_form(0.0, 0.5, (0.0, 0.0), 1.0), 0.5);
        assert_eq!(intersection_length_closed_form(FRAC_PI_2, -0.5, (0.0, 0.0), 1.0), 0.5);
    }

    #[test]
    fn geometry_cache_invariants() {
        for k in 0..=1000 {
            let phi = PI * k as f64 / 1000.0;
            let dx = 0.37;
            let g = RayGeometry::new(phi, dx);
            assert!(0.0 <= g.s_lower && g.s_lower <= g.s_upper);
            assert!(g.s_upper <= dx / SQRT_2 * (1.0 + 1e-15));
            assert!(g.kappa >= 1.0 && g.kappa <= SQRT_2 * (1.0 + 1e-15));
            if g.axis_aligned {
                assert_eq!((g.s_lower, g.s_upper, g.kappa), (dx / 2.0, dx / 2.0, 1.0));
            }
        }
    }

    #[test]
    fn weight_kind_parsing() {
        assert_eq!("ray".parse::<WeightKind>().unwrap(), WeightKind::RayDriven);
        assert_eq!("pixel".parse::<WeightKind>().unwrap(), WeightKind::PixelDriven);
        assert!("siddon".parse::<WeightKind>().is_err());
        assert_eq!(WeightKind::PixelDriven.to_string(), "pixel");
    }

    proptest! {
        #[test]
        fn weights_are_even_and_bounded(phi in 0.0..PI, t in -1.0f64..1.0, dx in 0.01f64..1.0, ds in 0.01f64..1.0) {
            let g = RayGeometry::new(phi, dx);
            let w = g.weight(t);
            prop_assert_eq!(w, g.weight(-t));
            prop_assert!(w >= 0.0 && w <= ray_weight_bound(dx) * (1.0 + 1e-12));
            if t.abs() > dx / SQRT_2 {
                prop_assert_eq!(w, 0.0);
            }
            let h = PixelHat::new(ds);
            prop_assert_eq!(h.weight(t), h.weight(-t));
            prop_assert!(h.weight(t) <= 1.0 / ds);
        }

        #[test]
        fn quarter_turn_symmetry(phi in 0.01..(FRAC_PI_2 - 0.01), t in -1.0f64..1.0) {
            let dx = 0.5;
            let w = RayGeometry::new(phi, dx).weight(t);
            let w_turn = RayGeometry::new(phi + FRAC_PI_2, dx).weight(t);
            let w_mirror = RayGeometry::new(PI - phi, dx).weight(t);
            let scale = ray_weight_bound(dx);
            prop_assert!((w - w_turn).abs() <= 1e-12 * scale);
            prop_assert!((w - w_mirror).abs() <= 1e-12 * scale);
        }
    }
}
