use std::f64::consts::PI;

use radon_core::phantoms::Ellipse;
use radon_core::sweep::forward_case;
use radon_core::{
    back_project, constant_sinogram, forward_project, image_relative_error, rasterize, AngleSetKind, EllipsePhantom,
    Image, ImageGrid, RasterMode, SinogramGrid, WeightKind,
};

#[test]
fn disk_projection_at_zero_angle_within_two_percent() {
    let phantom = EllipsePhantom::disk(0.5, 1.0).unwrap();
    for kind in [WeightKind::RayDriven, WeightKind::PixelDriven] {
        let row = forward_case(&phantom, RasterMode::PointSample, 256, 256, &AngleSetKind::FullEquispaced(6), kind)
            .unwrap();
        assert!(row.per_angle_rel_l2[0] < 0.02, "{kind}: {}", row.per_angle_rel_l2[0]);
        assert!(row.global_rel_l2 < 0.02);
    }
}

#[test]
fn pixel_driven_backprojection_of_one_is_pi() {
    let grid = ImageGrid::new(64).unwrap();
    let sg = SinogramGrid::new(80, &AngleSetKind::Limited { start: 0.0, end: PI, count: 45 }).unwrap();
    let image = back_project(&constant_sinogram(&sg, 1.0), grid, WeightKind::PixelDriven).unwrap();
    let truth = Image::constant(grid, PI);
    assert!(image_relative_error(&truth, &image, Some(1.0 - sg.delta_s())).unwrap() < 1e-13);
}

#[test]
fn ray_driven_backprojection_of_one_is_close_to_pi() {
    let grid = ImageGrid::new(100).unwrap();
    let sg = SinogramGrid::equispaced(100, 90).unwrap();
    let image = back_project(&constant_sinogram(&sg, 1.0), grid, WeightKind::RayDriven).unwrap();
    let err = image_relative_error(&Image::constant(grid, PI), &image, Some(0.95)).unwrap();
    assert!(err > 1e-3 && err < 5e-2, "{err}");
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let grid = ImageGrid::new(40).unwrap();
    let sg = SinogramGrid::equispaced(37, 23).unwrap();
    let f = rasterize(&EllipsePhantom::ellipse_suite(), grid, RasterMode::MeanValue(2)).unwrap();
    let g = forward_project(&f, &sg, WeightKind::RayDriven).unwrap();
    for threads in [1, 2, 5] {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        for kind in [WeightKind::RayDriven, WeightKind::PixelDriven] {
            let (a, b) = pool.install(|| (forward_project(&f, &sg, kind).unwrap(), back_project(&g, grid, kind).unwrap()));
            let (a1, b1) = (forward_project(&f, &sg, kind).unwrap(), back_project(&g, grid, kind).unwrap());
            assert_eq!(a.values(), a1.values());
            assert_eq!(b.values(), b1.values());
        }
    }
}

#[test]
fn pixel_driven_forward_error_peaks_on_diagonals() {
    let row = forward_case(
        &EllipsePhantom::ellipse_suite(),
        RasterMode::PointSample,
        256,
        256,
        &AngleSetKind::FullEquispaced(360),
        WeightKind::PixelDriven,
    )
    .unwrap();
    let deg = row.worst_angle_deg.unwrap();
    assert!((deg - 45.0).abs() < 1e-9 || (deg - 135.0).abs() < 1e-9, "{deg}");
}

#[test]
fn limited_and_explicit_angle_sets_agree() {
    let grid = ImageGrid::new(24).unwrap();
    let f = rasterize(&EllipsePhantom::ellipse_suite(), grid, RasterMode::PointSample).unwrap();
    let limited = SinogramGrid::new(24, &AngleSetKind::Limited { start: 0.2, end: 1.4, count: 6 }).unwrap();
    let explicit = SinogramGrid::new(24, &AngleSetKind::Explicit(limited.angles().to_vec())).unwrap();
    let a = forward_project(&f, &limited, WeightKind::RayDriven).unwrap();
    let b = forward_project(&f, &explicit, WeightKind::RayDriven).unwrap();
    assert_eq!(a.values(), b.values());
}

#[test]
fn off_center_ellipse_projection_converges() {
    let phantom = EllipsePhantom::new(vec![Ellipse {
        center: (0.3, -0.2),
        semi_axes: (0.4, 0.2),
        rotation: 1.0,
        density: 1.0,
    }])
    .unwrap();
    let angles = AngleSetKind::FullEquispaced(32);
    let coarse = forward_case(&phantom, RasterMode::MeanValue(4), 64, 64, &angles, WeightKind::RayDriven).unwrap();
    let fine = forward_case(&phantom, RasterMode::MeanValue(4), 256, 256, &angles, WeightKind::RayDriven).unwrap();
    assert!(fine.global_rel_l2 < 0.5 * coarse.global_rel_l2);
}
