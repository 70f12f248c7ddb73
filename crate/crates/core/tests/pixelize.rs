use std::f64::consts::PI;

use platosphere::pixelize::{
    geometric_action_check, image_coords, lat_lon, sample_equirect, EquirectImage, Placement, SpherePixelization,
};
use platosphere::solids::{Flavor, SolidKind};

#[test]
fn table_sizes_and_unit_norm() {
    for (kind, w, total) in [(SolidKind::Cube, 24, 3456), (SolidKind::Icosahedron, 17, 3060)] {
        let pix = SpherePixelization::new(kind, w, Placement::Gnomonic).unwrap();
        assert_eq!(pix.centers().len(), total);
        for c in pix.centers() {
            let n = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
            assert!((n - 1.0).abs() <= 1e-12);
        }
    }
}

#[test]
fn solid_angles_sum_to_the_sphere() {
    for kind in SolidKind::ALL {
        let pix = SpherePixelization::new(kind, 16, Placement::Gnomonic).unwrap();
        let rel = (pix.total_area() - 4.0 * PI).abs() / (4.0 * PI);
        assert!(rel < 0.02, "{kind:?} {rel}");
    }
    let pix = SpherePixelization::new(SolidKind::Cube, 16, Placement::Midpoint).unwrap();
    assert!((pix.total_area() - 4.0 * PI).abs() / (4.0 * PI) < 0.02);
}

#[test]
fn generators_move_centers_onto_predicted_pixels() {
    let cases = [
        (SolidKind::Tetrahedron, 5, 3),
        (SolidKind::Cube, 4, 4),
        (SolidKind::Octahedron, 9, 7),
        (SolidKind::Icosahedron, 9, 3),
    ];
    for (kind, w, w_mid) in cases {
        for flavor in [Flavor::Chiral, Flavor::Full] {
            for (placement, width) in [(Placement::Gnomonic, w), (Placement::Midpoint, w_mid)] {
                let pix = SpherePixelization::new(kind, width, placement).unwrap();
                let r = geometric_action_check(&pix, flavor, 1e-9).unwrap();
                assert!(r.pass, "{kind:?} {flavor:?} {placement:?}: {}", r.max_mismatch);
            }
        }
    }
}

#[test]
fn midpoint_and_gnomonic_share_the_coarsest_level() {
    // one subdivision step places the same points either way
    let a = SpherePixelization::new(SolidKind::Cube, 2, Placement::Gnomonic).unwrap();
    let b = SpherePixelization::new(SolidKind::Cube, 2, Placement::Midpoint).unwrap();
    for (p, q) in a.centers().iter().zip(b.centers()) {
        assert!((0..3).all(|k| (p[k] - q[k]).abs() < 1e-12));
    }
}

#[test]
fn linear_in_longitude_image_is_sampled_exactly() {
    let (h, w) = (33, 64);
    // value = column index; bilinear reproduces it wherever no wrap seam is crossed
    let img = EquirectImage::from_fn(h, w, 1, |_, lon, _| (lon + PI) / (2.0 * PI) * w as f64).unwrap();
    let pix = SpherePixelization::new(SolidKind::Cube, 8, Placement::Gnomonic).unwrap();
    let f = sample_equirect(&img, &pix).unwrap();
    let mut checked = 0;
    for (k, &c) in pix.centers().iter().enumerate() {
        let (_, v) = image_coords(h, w, c);
        if v <= (w - 1) as f64 {
            let err = (f.data()[k] - v).abs();
            // exact up to f32 storage of the grid values
            assert!(err < 1e-4 * w as f64, "{err}");
            checked += 1;
        }
    }
    assert!(checked > 300);
}

#[test]
fn latitude_only_image_ignores_longitude() {
    let (h, w) = (181, 360);
    let img = EquirectImage::from_fn(h, w, 2, |lat, _, c| if c == 0 { lat.sin() } else { lat }).unwrap();
    let pix = SpherePixelization::new(SolidKind::Icosahedron, 9, Placement::Gnomonic).unwrap();
    let f = sample_equirect(&img, &pix).unwrap();
    assert_eq!(f.channels(), 2);
    let n = pix.centers().len();
    for (k, &c) in pix.centers().iter().enumerate() {
        let (lat, _) = lat_lon(c);
        // bilinear error of a smooth function of latitude on a 1-degree grid
        assert!((f.data()[k] - lat.sin()).abs() < 1e-4);
        assert!((f.data()[n + k] - lat).abs() < 1e-5);
    }
}

#[test]
fn image_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let img = EquirectImage::from_fn(5, 8, 3, |lat, lon, c| lat + 2.0 * lon + c as f64).unwrap();
    let (raw, side) = (dir.path().join("img.raw"), dir.path().join("img.json"));
    img.write(&raw, &side).unwrap();
    assert_eq!(std::fs::metadata(&raw).unwrap().len(), 5 * 8 * 3 * 4);
    assert_eq!(EquirectImage::read(&raw, &side).unwrap(), img);
    assert!(EquirectImage::new(5, 8, 1, vec![f32::NAN; 40]).is_err());
}

#[test]
fn centers_csv_is_stable() {
    let a = SpherePixelization::new(SolidKind::Tetrahedron, 3, Placement::Gnomonic).unwrap();
    let b = SpherePixelization::new(SolidKind::Tetrahedron, 3, Placement::Gnomonic).unwrap();
    let csv = a.centers_csv();
    assert_eq!(csv, b.centers_csv());
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "face,pixel,x,y,z");
    assert_eq!(lines.len(), 1 + 4 * 6);
    assert!(lines[1].starts_with("0,0,"));
}
