//! Randomized invariant checks shared by the `verify` command and the test
//! suites.
//!
//! Each check draws its configurations from a seeded generator, so a given
//! seed and case count always exercises the same inputs. A check reports the
//! worst observed deviation relative to its tolerance.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, SQRT_2};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{
    direction, ray_offset, AngleSetKind, DiscretizationParams, Image, ImageGrid, Sinogram,
    SinogramGrid,
};
use crate::metrics::{image_norm, sinogram_norm};
use crate::operators::{assemble_dense, back_project, forward_project};
use crate::oracle::{brute_force_backproject, brute_force_forward, clip_line_square, weight_quadrature};
use crate::weights::{Kernel, PixelHat, RayGeometry, WeightKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Quick,
    Full,
}

impl std::str::FromStr for Level {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "quick" => Ok(Level::Quick),
            "full" => Ok(Level::Full),
            other => Err(format!("unknown level '{other}' (expected quick or full)")),
        }
    }
}

/// Knobs for [`run_checks`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub level: Level,
    pub seed: u64,
    /// Multiplies every ray-driven weight inspected by the checks. Anything
    /// other than 1 is a deliberate fault used to test the harness itself.
    pub ray_weight_scale: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            level: Level::Quick,
            seed: 0x5eed,
            ray_weight_scale: 1.0,
        }
    }
}

/// Per-check case counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CaseCounts {
    pub clip: usize,
    pub quadrature: usize,
    pub configs: usize,
    pub adjoint_pairs: usize,
    pub norm_images: usize,
    pub exhaustive_dense: bool,
}

impl CaseCounts {
    pub fn for_level(level: Level) -> Self {
        match level {
            Level::Quick => CaseCounts {
                clip: 1_000,
                quadrature: 4,
                configs: 200,
                adjoint_pairs: 10,
                norm_images: 20,
                exhaustive_dense: false,
            },
            Level::Full => CaseCounts {
                clip: 10_000,
                quadrature: 16,
                configs: 1_000,
                adjoint_pairs: 100,
                norm_images: 100,
                exhaustive_dense: true,
            },
        }
    }
}

/// Outcome of one named invariant group.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub cases: usize,
    /// Largest `deviation / allowed` seen; the check passes iff it is <= 1.
    pub worst_ratio: f64,
    pub detail: String,
}

impl CheckOutcome {
    pub fn passed(&self) -> bool {
        self.worst_ratio <= 1.0
    }
}

impl std::fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} {} ({} cases, worst {:.3} of tolerance){}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.cases,
            self.worst_ratio,
            if self.detail.is_empty() { String::new() } else { format!(": {}", self.detail) }
        )
    }
}

/// Collects `(deviation, allowed)` observations.
struct Tracker {
    name: &'static str,
    cases: usize,
    worst_ratio: f64,
    worst_case: String,
}

impl Tracker {
    fn new(name: &'static str) -> Self {
        Tracker {
            name,
            cases: 0,
            worst_ratio: 0.0,
            worst_case: String::new(),
        }
    }

    fn observe(&mut self, deviation: f64, allowed: f64, describe: impl FnOnce() -> String) {
        self.cases += 1;
        let ratio = if deviation.is_nan() {
            f64::INFINITY
        } else if allowed > 0.0 {
            deviation / allowed
        } else if deviation > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        if ratio > self.worst_ratio {
            self.worst_ratio = ratio;
            self.worst_case = describe();
        }
    }

    fn finish(self) -> CheckOutcome {
        let detail = if self.worst_ratio > 1.0 {
            format!("worst case {}", self.worst_case)
        } else {
            String::new()
        };
        CheckOutcome {
            name: self.name,
            cases: self.cases,
            worst_ratio: self.worst_ratio,
            detail,
        }
    }
}

fn rng(seed: u64, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

/// Angle in `[0, pi)` at least `1e-3` away (in sine) from the axes, where
/// chord lengths depend smoothly enough on the offset to compare two
/// independent roundings.
fn generic_angle(r: &mut ChaCha8Rng) -> f64 {
    loop {
        let phi = r.gen_range(0.0..PI);
        let (s, c) = phi.sin_cos();
        if s.abs().min(c.abs()) >= 1e-3 {
            return phi;
        }
    }
}

/// Generic angles mixed with the special ones: axes and diagonals.
fn any_angle(r: &mut ChaCha8Rng) -> f64 {
    match r.gen_range(0..10) {
        0 => [0.0, FRAC_PI_2][r.gen_range(0..2)],
        1 => [FRAC_PI_4, 3.0 * FRAC_PI_4][r.gen_range(0..2)],
        _ => generic_angle(r),
    }
}

fn random_angle_set(r: &mut ChaCha8Rng, max: usize) -> AngleSetKind {
    let n = r.gen_range(1..=max);
    if r.gen_bool(0.5) {
        AngleSetKind::FullEquispaced(n)
    } else {
        let mut angles: Vec<f64> = (0..n).map(|_| r.gen_range(0.0..PI)).collect();
        angles.sort_by(f64::total_cmp);
        angles.dedup();
        AngleSetKind::Explicit(angles)
    }
}

fn random_values(r: &mut ChaCha8Rng, len: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..len).map(|_| r.gen_range(lo..hi)).collect()
}

/// Ray-driven weights against the clipping oracle:
/// `|delta_x^2 w(phi, t) - corrected chord| <= 1e-12 delta_x`.
pub fn check_clip_oracle(cases: usize, seed: u64, ray_weight_scale: f64) -> CheckOutcome {
    let mut r = rng(seed, 1);
    let mut tr = Tracker::new("clip-oracle");
    for case in 0..cases {
        // one case in eight puts an axis-aligned ray exactly on a pixel edge;
        // power-of-two grids keep those edges exact in floating point
        let edge_case = case % 8 == 0;
        let n_x = if edge_case { 1usize << r.gen_range(0..10) } else { r.gen_range(1..=1024) };
        let grid = ImageGrid::new(n_x).expect("positive size");
        let dx = grid.delta_x();
        let (i, j) = (r.gen_range(0..n_x), r.gen_range(0..n_x));
        let (x, y) = (grid.coordinate(i), grid.coordinate(j));
        let (phi, s) = if edge_case {
            let phi = [0.0, FRAC_PI_2][r.gen_range(0..2)];
            let base = if phi == 0.0 { x } else { y };
            let side = [-0.5, 0.5, 0.0, 0.25][r.gen_range(0..4)];
            (phi, base + side * dx)
        } else {
            let phi = any_angle(&mut r);
            let theta = direction(phi);
            let reach = 0.5 * dx * (theta.0.abs() + theta.1.abs());
            (phi, ray_offset(x, y, theta, 0.0) + r.gen_range(-1.2..1.2) * reach)
        };
        let theta = direction(phi);
        let t = ray_offset(x, y, theta, s);
        let weight = ray_weight_scale * RayGeometry::new(phi, dx).weight(t);
        let chord = clip_line_square(phi, s, (x, y), dx).corrected();
        tr.observe((dx * dx * weight - chord).abs(), 1e-12 * dx, || {
            format!("n_x={n_x} pixel=({i},{j}) phi={phi} s={s}")
        });
    }
    tr.finish()
}

/// Unit mass of both weight functions: `int w(phi, t) dt = 1` when
/// `delta_x = delta_s`.
pub fn check_weight_quadrature(cases: usize, seed: u64, ray_weight_scale: f64) -> CheckOutcome {
    let mut r = rng(seed, 2);
    let mut tr = Tracker::new("weight-quadrature");
    for case in 0..cases {
        let phi = if case == 0 { 0.0 } else { generic_angle(&mut r) };
        let delta = 2.0 / r.gen_range(1..=512) as f64;
        for kind in [WeightKind::RayDriven, WeightKind::PixelDriven] {
            let scale = if kind == WeightKind::RayDriven { ray_weight_scale } else { 1.0 };
            let mass = scale * weight_quadrature(kind, phi, delta);
            tr.observe((mass - 1.0).abs(), 1e-9, || format!("{kind} phi={phi} delta={delta} mass={mass}"));
        }
    }
    tr.finish()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn max_abs(a: &[f64]) -> f64 {
    a.iter().map(|v| v.abs()).fold(0.0, f64::max)
}

/// Matrix-free operators against explicit matrices to `1e-14` (relative
/// to the largest output entry), on every grid with
/// `n_x, n_s <= 16`, `n_phi <= 8` when `exhaustive`, a sample otherwise.
pub fn check_dense_equivalence(exhaustive: bool, seed: u64) -> CheckOutcome {
    let mut r = rng(seed, 3);
    let mut tr = Tracker::new("dense-equivalence");
    let sizes: Vec<usize> = if exhaustive { (1..=16).collect() } else { vec![1, 2, 3, 5, 8, 16] };
    let angle_counts: Vec<usize> = if exhaustive { (1..=8).collect() } else { vec![1, 4, 8] };
    for &n_x in &sizes {
        for &n_s in &sizes {
            for &n_phi in &angle_counts {
                let params = DiscretizationParams {
                    image: ImageGrid::new(n_x).expect("positive"),
                    sinogram: SinogramGrid::equispaced(n_s, n_phi).expect("positive"),
                };
                for kind in [WeightKind::RayDriven, WeightKind::PixelDriven] {
                    let dense = assemble_dense(&params, kind).expect("small grid");
                    let f = Image::from_values(params.image, random_values(&mut r, n_x * n_x, -1.0, 1.0))
                        .expect("finite");
                    let g = Sinogram::from_values(
                        params.sinogram.clone(),
                        random_values(&mut r, params.sinogram.len(), -1.0, 1.0),
                    )
                    .expect("finite");
                    let fwd = forward_project(&f, &params.sinogram, kind).expect("finite");
                    let bwd = back_project(&g, params.image, kind).expect("finite");
                    let fa = dense.apply_a(f.values());
                    let bb = dense.apply_b(g.values());
                    let describe = || format!("{kind} n_x={n_x} n_s={n_s} n_phi={n_phi}");
                    tr.observe(max_abs_diff(fwd.values(), &fa), 1e-14 * max_abs(&fa).max(1.0), describe);
                    tr.observe(max_abs_diff(bwd.values(), &bb), 1e-14 * max_abs(&bb).max(1.0), describe);
                }
            }
        }
    }
    tr.finish()
}

/// Matrix-free operators against exhaustive summation; the summation order
/// is shared, so agreement must be bitwise.
pub fn check_brute_force(cases: usize, seed: u64) -> CheckOutcome {
    let mut r = rng(seed, 4);
    let mut tr = Tracker::new("brute-force-equivalence");
    for _ in 0..cases {
        let n_x = r.gen_range(1..=24);
        let n_s = r.gen_range(1..=24);
        let angles = random_angle_set(&mut r, 10);
        let grid = ImageGrid::new(n_x).expect("positive");
        let sg = SinogramGrid::new(n_s, &angles).expect("valid angles");
        let f = Image::from_values(grid, random_values(&mut r, grid.len(), -1.0, 1.0)).expect("finite");
        let g = Sinogram::from_values(sg.clone(), random_values(&mut r, sg.len(), -1.0, 1.0)).expect("finite");
        for kind in [WeightKind::RayDriven, WeightKind::PixelDriven] {
            let fast = forward_project(&f, &sg, kind).expect("finite");
            let slow = brute_force_forward(&f, &sg, kind).expect("small grid");
            let fast_b = back_project(&g, grid, kind).expect("finite");
            let slow_b = brute_force_backproject(&g, grid, kind).expect("small grid");
            let describe = || format!("{kind} n_x={n_x} n_s={n_s} angles={angles:?}");
            let mismatch = fast.values() != slow.values() || fast_b.values() != slow_b.values();
            tr.observe(if mismatch { 1.0 } else { 0.0 }, 0.0, describe);
        }
    }
    tr.finish()
}

/// Grid shapes for the adjointness check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridShape {
    Balanced,
    /// `delta_s / delta_x = 1/4`.
    FineDetector,
    /// `delta_x / delta_s = 1/4`.
    FineImage,
}

impl GridShape {
    pub const ALL: [GridShape; 3] = [GridShape::Balanced, GridShape::FineDetector, GridShape::FineImage];

    pub fn name(self) -> &'static str {
        match self {
            GridShape::Balanced => "balanced",
            GridShape::FineDetector => "ds/dx=1/4",
            GridShape::FineImage => "dx/ds=1/4",
        }
    }

    fn sizes(self, base: usize) -> (usize, usize) {
        match self {
            GridShape::Balanced => (base, base),
            GridShape::FineDetector => (base, 4 * base),
            GridShape::FineImage => (4 * base, base),
        }
    }
}

fn image_inner(a: &Image, b: &Image) -> f64 {
    let dx = a.grid().delta_x();
    dx * dx * a.values().iter().zip(b.values()).map(|(x, y)| x * y).sum::<f64>()
}

fn sinogram_inner(a: &Sinogram, b: &Sinogram) -> f64 {
    let grid = a.grid();
    let n_s = grid.n_s();
    let ds = grid.delta_s();
    grid.angular_widths()
        .iter()
        .enumerate()
        .map(|(q, w)| {
            let rows = a.values()[q * n_s..(q + 1) * n_s].iter().zip(&b.values()[q * n_s..(q + 1) * n_s]);
            w * ds * rows.map(|(x, y)| x * y).sum::<f64>()
        })
        .sum()
}

/// `<A f, g> = <f, B g>` to `1e-12` relative, for `pairs` random
/// nonnegative pairs on one method and grid shape.
pub fn check_adjointness(kind: WeightKind, shape: GridShape, pairs: usize, seed: u64) -> CheckOutcome {
    let mut r = rng(seed, 5 + shape as u64 * 2 + kind as u64);
    let mut tr = Tracker::new("adjointness");
    for _ in 0..pairs {
        let (n_x, n_s) = shape.sizes(r.gen_range(4..=24));
        let angles = random_angle_set(&mut r, 24);
        let grid = ImageGrid::new(n_x).expect("positive");
        let sg = SinogramGrid::new(n_s, &angles).expect("valid angles");
        let f = Image::from_values(grid, random_values(&mut r, grid.len(), 0.0, 1.0)).expect("finite");
        let g = Sinogram::from_values(sg.clone(), random_values(&mut r, sg.len(), 0.0, 1.0)).expect("finite");
        let lhs = sinogram_inner(&forward_project(&f, &sg, kind).expect("finite"), &g);
        let rhs = image_inner(&f, &back_project(&g, grid, kind).expect("finite"));
        tr.observe((lhs - rhs).abs(), 1e-12 * lhs.abs(), || {
            format!("{kind} {} n_x={n_x} n_s={n_s} lhs={lhs} rhs={rhs}", shape.name())
        });
    }
    tr.finish()
}

/// `A(alpha f + beta f') = alpha A f + beta A f'` to `1e-14` relative.
pub fn check_linearity(cases: usize, seed: u64) -> CheckOutcome {
    let mut r = rng(seed, 20);
    let mut tr = Tracker::new("linearity");
    for _ in 0..cases {
        let n_x = r.gen_range(1..=32);
        let n_s = r.gen_range(1..=32);
        let grid = ImageGrid::new(n_x).expect("positive");
        let sg = SinogramGrid::new(n_s, &random_angle_set(&mut r, 12)).expect("valid angles");
        let f1 = random_values(&mut r, grid.len(), -1.0, 1.0);
        let f2 = random_values(&mut r, grid.len(), -1.0, 1.0);
        let (alpha, beta) = (r.gen_range(-3.0..3.0), r.gen_range(-3.0..3.0));
        let combo: Vec<f64> = f1.iter().zip(&f2).map(|(a, b)| alpha * a + beta * b).collect();
        for kind in [WeightKind::RayDriven, WeightKind::PixelDriven] {
            let project = |v: &[f64]| {
                forward_project(&Image::from_values(grid, v.to_vec()).expect("finite"), &sg, kind)
                    .expect("finite")
            };
            let lhs = project(&combo);
            let (a1, a2) = (project(&f1), project(&f2));
            let rhs: Vec<f64> = a1.values().iter().zip(a2.values()).map(|(a, b)| alpha * a + beta * b).collect();
            let diff = Sinogram::from_values(
                sg.clone(),
                lhs.values().iter().zip(&rhs).map(|(a, b)| a - b).collect(),
            )
            .expect("finite");
            let scale = alpha.abs() * sinogram_norm(&a1) + beta.abs() * sinogram_norm(&a2);
            tr.observe(sinogram_norm(&diff), 1e-14 * scale, || {
                format!("{kind} n_x={n_x} n_s={n_s}")
            });
        }
    }
    tr.finish()
}

/// Relative room given to inequality bounds that can hold with equality.
pub const BOUND_SLACK: f64 = 1.0 + 1e-12;

/// Sums of weights over pixels and over detector bins stay within the
/// bounds that make the discretizations uniformly bounded.
pub fn check_sums_of_weights(cases: usize, seed: u64, ray_weight_scale: f64) -> CheckOutcome {
    let mut r = rng(seed, 30);
    let mut tr = Tracker::new("sums-of-weights");
    for _ in 0..cases {
        let n_x = r.gen_range(1..=96);
        let n_s = r.gen_range(1..=96);
        let grid = ImageGrid::new(n_x).expect("positive");
        let sg = SinogramGrid::equispaced(n_s, 1).expect("positive");
        let (dx, ds) = (grid.delta_x(), sg.delta_s());
        let phi = any_angle(&mut r);
        let theta = direction(phi);
        let ray = RayGeometry::new(phi, dx);
        let hat = PixelHat::new(ds);
        let describe = |what: &str| format!("{what} n_x={n_x} n_s={n_s} phi={phi}");

        // over pixels, for one ray
        let s = sg.coordinate(r.gen_range(0..n_s));
        let (mut ray_sum, mut hat_sum) = (0.0, 0.0);
        for i in 0..n_x {
            for j in 0..n_x {
                let t = ray_offset(grid.coordinate(i), grid.coordinate(j), theta, s);
                ray_sum += ray_weight_scale * ray.weight(t);
                hat_sum += hat.weight(t);
            }
        }
        // bounds are attained (e.g. a diagonal ray through pixel centers),
        // so rounding needs a little room
        let ray_bound = BOUND_SLACK * 8f64.sqrt() / (dx * dx);
        tr.observe(ray_sum, ray_bound, || describe("sum_ij ray"));
        let hat_bound = BOUND_SLACK * (ds / dx).ceil() * 4.0 * SQRT_2 / (dx * ds);
        tr.observe(hat_sum, hat_bound, || describe("sum_ij pixel"));

        // over detector bins, for one pixel well inside the detector
        let (i, j) = (r.gen_range(0..n_x), r.gen_range(0..n_x));
        let (x, y) = (grid.coordinate(i), grid.coordinate(j));
        let proj = ray_offset(x, y, theta, 0.0);
        if proj.abs() <= 1.0 - dx / SQRT_2 {
            let sum: f64 = (0..n_s)
                .map(|p| ray_weight_scale * ray.weight(ray_offset(x, y, theta, sg.coordinate(p))))
                .sum();
            tr.observe((sum - 1.0 / ds).abs(), BOUND_SLACK * 8f64.sqrt() / dx, || describe("sum_p ray"));
        }
    }
    tr.finish()
}

/// Exact-weight identities: pixel-driven weights sum to `1/delta_s` over the
/// detector, and ray-driven projections of a pixel indicator are its chord
/// lengths.
pub fn check_exact_weights(cases: usize, seed: u64, ray_weight_scale: f64) -> CheckOutcome {
    let mut r = rng(seed, 40);
    let mut tr = Tracker::new("exact-weights");
    for case in 0..cases {
        let n_x = r.gen_range(1..=64);
        let n_s = r.gen_range(1..=64);
        let grid = ImageGrid::new(n_x).expect("positive");
        let sg = SinogramGrid::equispaced(n_s, 1).expect("positive");
        let ds = sg.delta_s();
        let phi = any_angle(&mut r);
        let theta = direction(phi);
        let hat = PixelHat::new(ds);
        let (i, j) = (r.gen_range(0..n_x), r.gen_range(0..n_x));
        let (x, y) = (grid.coordinate(i), grid.coordinate(j));
        let proj = ray_offset(x, y, theta, 0.0);
        let sum: f64 = (0..n_s).map(|p| hat.weight(ray_offset(x, y, theta, sg.coordinate(p)))).sum();
        let inside = sg.coordinate(0) <= proj && proj <= sg.coordinate(n_s - 1);
        let describe = || format!("n_x={n_x} n_s={n_s} phi={phi} pixel=({i},{j}) sum*ds={}", sum * ds);
        if inside {
            tr.observe((sum * ds - 1.0).abs(), 1e-14, describe);
        } else {
            tr.observe((sum * ds - 1.0).max(0.0), 1e-14, describe);
        }

        // single-pixel indicator through the full operator; small grids only
        if case % 4 == 0 {
            let n_x = r.gen_range(1..=24);
            let n_s = r.gen_range(1..=24);
            let grid = ImageGrid::new(n_x).expect("positive");
            let sg = SinogramGrid::new(n_s, &random_angle_set(&mut r, 6)).expect("valid angles");
            let (i, j) = (r.gen_range(0..n_x), r.gen_range(0..n_x));
            let mut f = Image::zeros(grid);
            f.values_mut()[grid.flat_index(i, j)] = 1.0;
            let g = forward_project(&f, &sg, WeightKind::RayDriven).expect("finite");
            let center = (grid.coordinate(i), grid.coordinate(j));
            for q in 0..sg.n_phi() {
                for p in 0..n_s {
                    let phi = sg.angles()[q];
                    let chord = clip_line_square(phi, sg.coordinate(p), center, grid.delta_x()).corrected();
                    tr.observe((ray_weight_scale * g.get(q, p) - chord).abs(), 1e-12, || {
                        format!("indicator n_x={n_x} pixel=({i},{j}) phi={phi} p={p}")
                    });
                }
            }
        }
    }
    tr.finish()
}

/// Upper bound on `||R f||` for unit-norm `f`, ray-driven, when
/// `delta_s / delta_x <= c`.
pub fn ray_norm_bound(c: f64) -> f64 {
    (8f64.sqrt() * PI * (1.0 + 8f64.sqrt() * c)).sqrt()
}

/// Upper bound on `||R f||` for unit-norm `f`, pixel-driven, when
/// `delta_x / delta_s <= c`.
pub fn pixel_norm_bound(c: f64) -> f64 {
    (4.0 * SQRT_2 * PI * (c + 1.0)).sqrt()
}

/// Operator norms stay below the resolution-independent bounds.
pub fn check_operator_norm(images: usize, seed: u64, ray_weight_scale: f64) -> CheckOutcome {
    let mut r = rng(seed, 50);
    let mut tr = Tracker::new("operator-norm");
    for k in 0..images {
        let n_x = r.gen_range(2..=48);
        let n_s = r.gen_range(2..=48);
        let grid = ImageGrid::new(n_x).expect("positive");
        let sg = SinogramGrid::new(n_s, &random_angle_set(&mut r, 24)).expect("valid angles");
        let values = match k % 3 {
            0 => vec![1.0; grid.len()],
            1 => random_values(&mut r, grid.len(), 0.0, 1.0),
            _ => random_values(&mut r, grid.len(), -1.0, 1.0),
        };
        let f = Image::from_values(grid, values).expect("finite");
        let norm = image_norm(&f, None);
        let unit = Image::from_values(grid, f.values().iter().map(|v| v / norm).collect()).expect("finite");
        let (dx, ds) = (grid.delta_x(), sg.delta_s());
        for kind in [WeightKind::RayDriven, WeightKind::PixelDriven] {
            let sino_norm = sinogram_norm(&forward_project(&unit, &sg, kind).expect("finite"));
            let (value, bound) = match kind {
                WeightKind::RayDriven => (ray_weight_scale * sino_norm, ray_norm_bound(ds / dx)),
                WeightKind::PixelDriven => (sino_norm, pixel_norm_bound(dx / ds)),
            };
            tr.observe(value, BOUND_SLACK * bound, || format!("{kind} n_x={n_x} n_s={n_s} norm={value} bound={bound}"));
        }
    }
    tr.finish()
}

/// Smooth bump supported in the ball of radius 0.8.
pub fn smooth_bump(x: f64, y: f64) -> f64 {
    let r2 = (x * x + y * y) / 0.64;
    if r2 < 1.0 {
        (1.0 - r2).powi(3)
    } else {
        0.0
    }
}

/// Spread `max_q - min_q` of the projection masses `delta_s sum_p g_qp`.
pub fn projection_mass_spread(sino: &Sinogram) -> f64 {
    let ds = sino.grid().delta_s();
    let masses: Vec<f64> = (0..sino.grid().n_phi()).map(|q| ds * sino.row(q).iter().sum::<f64>()).collect();
    let max = masses.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = masses.iter().copied().fold(f64::INFINITY, f64::min);
    max - min
}

/// Zero-order data consistency: pixel-driven projections of an image
/// supported inside radius 0.8 all carry the same mass to `1e-10`. The
/// ray-driven spread is reported in the detail line only.
pub fn check_zero_order(cases: usize, seed: u64) -> CheckOutcome {
    let mut r = rng(seed, 60);
    let mut tr = Tracker::new("zero-order-consistency");
    let mut ray_spread: f64 = 0.0;
    for _ in 0..cases {
        let n_x = r.gen_range(8..=96);
        let n_s = r.gen_range(8..=96);
        let grid = ImageGrid::new(n_x).expect("positive");
        let sg = SinogramGrid::new(n_s, &random_angle_set(&mut r, 32)).expect("valid angles");
        let f = Image::from_fn(grid, smooth_bump);
        let pixel = forward_project(&f, &sg, WeightKind::PixelDriven).expect("finite");
        let spread = projection_mass_spread(&pixel);
        tr.observe(spread, 1e-10, || format!("n_x={n_x} n_s={n_s} spread={spread}"));
        let ray = forward_project(&f, &sg, WeightKind::RayDriven).expect("finite");
        ray_spread = ray_spread.max(projection_mass_spread(&ray));
    }
    let mut out = tr.finish();
    let note = format!("ray-driven spread {ray_spread:.3e} (informational)");
    out.detail = if out.detail.is_empty() { note } else { format!("{}; {note}", out.detail) };
    out
}

/// Runs every invariant group at the requested level.
pub fn run_checks(opts: &VerifyOptions) -> Vec<CheckOutcome> {
    run_checks_with(opts, |_| {})
}

/// Like [`run_checks`], handing each outcome to `on_outcome` as it finishes.
pub fn run_checks_with(opts: &VerifyOptions, mut on_outcome: impl FnMut(&CheckOutcome)) -> Vec<CheckOutcome> {
    let counts = CaseCounts::for_level(opts.level);
    let (seed, scale) = (opts.seed, opts.ray_weight_scale);
    let mut out = Vec::new();
    let mut push = |o: CheckOutcome| {
        on_outcome(&o);
        out.push(o);
    };
    push(check_clip_oracle(counts.clip, seed, scale));
    push(check_weight_quadrature(counts.quadrature, seed, scale));
    push(check_dense_equivalence(counts.exhaustive_dense, seed));
    push(check_brute_force(counts.configs / 10, seed));
    let mut adjoint: Option<CheckOutcome> = None;
    for kind in [WeightKind::RayDriven, WeightKind::PixelDriven] {
        for shape in GridShape::ALL {
            let o = check_adjointness(kind, shape, counts.adjoint_pairs, seed);
            adjoint = Some(match adjoint {
                None => o,
                Some(acc) => merge(acc, o),
            });
        }
    }
    push(adjoint.expect("at least one shape"));
    push(check_linearity(counts.configs / 10, seed));
    push(check_sums_of_weights(counts.configs, seed, scale));
    push(check_exact_weights(counts.configs, seed, scale));
    push(check_operator_norm(counts.norm_images, seed, scale));
    push(check_zero_order(counts.configs / 20, seed));
    out
}

fn merge(a: CheckOutcome, b: CheckOutcome) -> CheckOutcome {
    let worse = if b.worst_ratio > a.worst_ratio { &b } else { &a };
    CheckOutcome {
        name: a.name,
        cases: a.cases + b.cases,
        worst_ratio: worse.worst_ratio,
        detail: worse.detail.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tracker_ratios() {
        let mut t = Tracker::new("t");
        t.observe(0.5, 1.0, String::new);
        t.observe(0.0, 0.0, String::new);
        assert!(t.finish().passed());
        let mut t = Tracker::new("t");
        t.observe(1e-20, 0.0, || "bad".into());
        let o = t.finish();
        assert!(!o.passed());
        assert!(o.detail.contains("bad"));
        let mut t = Tracker::new("t");
        t.observe(f64::NAN, 1.0, String::new);
        assert!(!t.finish().passed());
    }

    #[test]
    fn level_parsing() {
        assert_eq!("quick".parse::<Level>().unwrap(), Level::Quick);
        assert_eq!("full".parse::<Level>().unwrap(), Level::Full);
        assert!("fast".parse::<Level>().is_err());
    }

    #[test]
    fn small_checks_pass() {
        assert!(check_clip_oracle(300, 7, 1.0).passed());
        assert!(check_sums_of_weights(50, 7, 1.0).passed());
        assert!(check_exact_weights(40, 7, 1.0).passed());
        assert!(check_adjointness(WeightKind::PixelDriven, GridShape::FineImage, 3, 7).passed());
    }

    #[test]
    fn tampered_weights_are_caught() {
        let o = check_clip_oracle(100, 7, 1.001);
        assert!(!o.passed());
        assert!(o.to_string().starts_with("FAIL clip-oracle"));
        assert!(!check_exact_weights(40, 7, 1.001).passed());
    }

    #[test]
    fn bounds_are_increasing() {
        assert!(ray_norm_bound(1.0) > ray_norm_bound(0.25));
        assert!(pixel_norm_bound(1.0) > pixel_norm_bound(0.25));
    }
}
