//! Pixel centers on the unit sphere, per-pixel solid angles, and sampling of
//! equirectangular images onto scalar fields.
//!
//! Square face `(c0, c1, c2, c3)`: pixel `(r, c)` sits at
//! `c0 + (c + 1/2)/d (c1 - c0) + (r + 1/2)/d (c3 - c0)` before projection.
//! Triangular face: the face is cut into `(w+1)²` small triangles and pixel
//! `(i, j)` is the down-pointing triangle with barycentric centroid
//! `(k + 2/3, i + 2/3, j + 2/3) / (w + 1)` on `(c0, c1, c2)`, `k = w - 1 - i - j`.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::FeatureField;
use crate::solids::{mat_vec, normalize, Flavor, Solid, SolidKind, SolidSymmetry, Vec3};
use crate::spherenet::SphereGrid;
use crate::tilings::{FeatureKind, TilingKind};

/// How face lattices reach the sphere.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    /// Subdivide the flat face, then project radially.
    Gnomonic,
    /// Repeated edge-midpoint subdivision, projecting at every level.
    /// Needs a power-of-two subdivision count (`d` for squares, `w + 1` for triangles).
    Midpoint,
}

impl std::str::FromStr for Placement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Placement> {
        match s {
            "gnomonic" => Ok(Placement::Gnomonic),
            "midpoint" => Ok(Placement::Midpoint),
            _ => Err(Error::InvalidArgument(format!(
                "unknown placement '{s}' (gnomonic, midpoint)"
            ))),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SpherePixelization {
    kind: SolidKind,
    width: usize,
    pixels_per_face: usize,
    placement: Placement,
    centers: Vec<Vec3>,
    areas: Vec<f64>,
}

/// Lattice points of one face, already on the sphere.
struct FaceLattice {
    n: usize,
    tri: bool,
    points: Vec<Vec3>,
}

impl FaceLattice {
    fn idx(&self, a: usize, b: usize) -> usize {
        a * (self.n + 1) + b
    }

    fn at(&self, a: usize, b: usize) -> Vec3 {
        self.points[self.idx(a, b)]
    }

    fn gnomonic(corners: &[Vec3], n: usize) -> FaceLattice {
        let tri = corners.len() == 3;
        let nf = n as f64;
        let mut points = vec![[0.0; 3]; (n + 1) * (n + 1)];
        for a in 0..=n {
            for b in 0..=n {
                if tri && a + b > n {
                    continue;
                }
                let (x, y) = (a as f64 / nf, b as f64 / nf);
                let p = if tri {
                    // a weights c1, b weights c2
                    combine(&[(1.0 - x - y, corners[0]), (x, corners[1]), (y, corners[2])])
                } else {
                    // a runs along c0 -> c3 (rows), b along c0 -> c1 (columns)
                    combine(&[
                        (1.0 - x - y, corners[0]),
                        (y, corners[1]),
                        (x, corners[3]),
                    ])
                };
                points[a * (n + 1) + b] = normalize(p);
            }
        }
        FaceLattice { n, tri, points }
    }

    fn midpoint(corners: &[Vec3], n: usize) -> Result<FaceLattice> {
        if !n.is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "midpoint subdivision needs a power-of-two count, got {n}"
            )));
        }
        let tri = corners.len() == 3;
        let mut l = FaceLattice {
            n,
            tri,
            points: vec![[0.0; 3]; (n + 1) * (n + 1)],
        };
        let c: Vec<Vec3> = corners.iter().map(|&v| normalize(v)).collect();
        let set = |l: &mut FaceLattice, a: usize, b: usize, p: Vec3| {
            let i = l.idx(a, b);
            l.points[i] = p;
        };
        if tri {
            set(&mut l, 0, 0, c[0]);
            set(&mut l, n, 0, c[1]);
            set(&mut l, 0, n, c[2]);
        } else {
            set(&mut l, 0, 0, c[0]);
            set(&mut l, 0, n, c[1]);
            set(&mut l, n, n, c[2]);
            set(&mut l, n, 0, c[3]);
        }
        let mut s = n;
        while s > 1 {
            let h = s / 2;
            for a in (0..=n).step_by(s) {
                for b in (0..=n).step_by(s) {
                    if tri && a + b > n {
                        continue;
                    }
                    // edges from (a, b) in the lattice directions
                    let dirs: &[(i64, i64)] = if tri { &[(1, 0), (0, 1), (1, -1)] } else { &[(1, 0), (0, 1)] };
                    for &(da, db) in dirs {
                        let (a2, b2) = (a as i64 + da * s as i64, b as i64 + db * s as i64);
                        if a2 < 0 || b2 < 0 || a2 as usize > n || b2 as usize > n {
                            continue;
                        }
                        let (a2, b2) = (a2 as usize, b2 as usize);
                        if tri && a2 + b2 > n {
                            continue;
                        }
                        let m = normalize(add(l.at(a, b), l.at(a2, b2)));
                        let (ma, mb) = ((a + a2) / 2, (b + b2) / 2);
                        set(&mut l, ma, mb, m);
                    }
                    if !tri && a + s <= n && b + s <= n {
                        let sum = add(add(l.at(a, b), l.at(a + s, b)), add(l.at(a, b + s), l.at(a + s, b + s)));
                        set(&mut l, a + h, b + h, normalize(sum));
                    }
                }
            }
            s = h;
        }
        Ok(l)
    }

    /// Pixel vertex triples/quads in tiling order, plus the small triangles
    /// each pixel owns a share of.
    fn cells(&self, coords: &[(i64, i64)]) -> Vec<(Vec3, f64)> {
        if self.tri {
            let n = self.n;
            // share of every up triangle among its adjacent down triangles
            let mut area = vec![0.0; coords.len()];
            let down_index = |a: i64, b: i64| -> Option<usize> {
                if a < 0 || b < 0 || (a + b) as usize > n - 2 {
                    return None;
                }
                coords.iter().position(|&c| c == (a, b))
            };
            for a in 0..n {
                for b in 0..n - a {
                    let up = tri_area(self.at(a, b), self.at(a + 1, b), self.at(a, b + 1));
                    let (ai, bi) = (a as i64, b as i64);
                    let owners: Vec<usize> = [(ai - 1, bi), (ai, bi - 1), (ai, bi)]
                        .iter()
                        .filter_map(|&(x, y)| if n >= 2 { down_index(x, y) } else { None })
                        .collect();
                    for &o in &owners {
                        area[o] += up / owners.len() as f64;
                    }
                }
            }
            coords
                .iter()
                .zip(area)
                .map(|(&(i, j), extra)| {
                    let (i, j) = (i as usize, j as usize);
                    let (p, q, r) = (self.at(i + 1, j), self.at(i, j + 1), self.at(i + 1, j + 1));
                    (normalize(add(add(p, q), r)), tri_area(p, q, r) + extra)
                })
                .collect()
        } else {
            coords
                .iter()
                .map(|&(r, c)| {
                    let (r, c) = (r as usize, c as usize);
                    let (p, q, s, t) = (self.at(r, c), self.at(r, c + 1), self.at(r + 1, c + 1), self.at(r + 1, c));
                    let center = normalize(add(add(p, q), add(s, t)));
                    (center, tri_area(p, q, s) + tri_area(p, s, t))
                })
                .collect()
        }
    }
}

fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn combine(terms: &[(f64, Vec3)]) -> Vec3 {
    let mut p = [0.0; 3];
    for (w, v) in terms {
        for k in 0..3 {
            p[k] += w * v[k];
        }
    }
    p
}

/// Solid angle of a spherical triangle with unit-vector corners.
pub fn tri_area(a: Vec3, b: Vec3, c: Vec3) -> f64 {
    let triple = a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
        + a[2] * (b[0] * c[1] - b[1] * c[0]);
    let dot = |x: Vec3, y: Vec3| x[0] * y[0] + x[1] * y[1] + x[2] * y[2];
    let denom = 1.0 + dot(a, b) + dot(b, c) + dot(c, a);
    2.0 * triple.abs().atan2(denom)
}

impl SpherePixelization {
    pub fn new(kind: SolidKind, width: usize, placement: Placement) -> Result<SpherePixelization> {
        if width == 0 {
            return Err(Error::InvalidArgument("width must be at least 1".into()));
        }
        let solid = Solid::build(kind);
        let tiling = crate::tilings::Tiling::for_sides(solid.sides(), width, false)?;
        let n = match tiling.kind() {
            TilingKind::Square => width,
            TilingKind::Hex => width + 1,
        };
        let mut centers = Vec::with_capacity(solid.num_faces() * tiling.num_pixels());
        let mut areas = Vec::with_capacity(centers.capacity());
        for f in 0..solid.num_faces() {
            let corners: Vec<Vec3> = solid.faces()[f].iter().map(|&v| solid.vertices()[v]).collect();
            let lattice = match placement {
                Placement::Gnomonic => FaceLattice::gnomonic(&corners, n),
                Placement::Midpoint => FaceLattice::midpoint(&corners, n)?,
            };
            for (c, a) in lattice.cells(tiling.pixels()) {
                centers.push(c);
                areas.push(a);
            }
        }
        Ok(SpherePixelization {
            kind,
            width,
            pixels_per_face: tiling.num_pixels(),
            placement,
            centers,
            areas,
        })
    }

    pub fn kind(&self) -> SolidKind {
        self.kind
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn placement(&self) -> Placement {
        self.placement
    }

    pub fn pixels_per_face(&self) -> usize {
        self.pixels_per_face
    }

    pub fn num_faces(&self) -> usize {
        self.centers.len() / self.pixels_per_face
    }

    /// Centers indexed by `face * pixels_per_face + pixel`.
    pub fn centers(&self) -> &[Vec3] {
        &self.centers
    }

    pub fn center(&self, face: usize, pixel: usize) -> Vec3 {
        self.centers[face * self.pixels_per_face + pixel]
    }

    /// Solid angle per pixel, steradians.
    pub fn areas(&self) -> &[f64] {
        &self.areas
    }

    pub fn total_area(&self) -> f64 {
        self.areas.iter().sum()
    }

    pub fn centers_csv(&self) -> String {
        let mut s = String::from("face,pixel,x,y,z\n");
        for (i, c) in self.centers.iter().enumerate() {
            let _ = writeln!(
                s,
                "{},{},{:.17e},{:.17e},{:.17e}",
                i / self.pixels_per_face,
                i % self.pixels_per_face,
                c[0],
                c[1],
                c[2]
            );
        }
        s
    }

    pub fn export_centers(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.centers_csv())?;
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GeometricGeneratorCheck {
    pub generator: usize,
    pub max_mismatch: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct GeometricReport {
    pub solid: String,
    pub flavor: Flavor,
    pub width: usize,
    pub generators: Vec<GeometricGeneratorCheck>,
    pub max_mismatch: f64,
    pub tol: f64,
    pub pass: bool,
}

/// Rotates (or reflects) every center by each generator's matrix and compares
/// with the center the scalar field action sends it to.
pub fn geometric_action_check(pix: &SpherePixelization, flavor: Flavor, tol: f64) -> Result<GeometricReport> {
    let sym = SolidSymmetry::new(pix.kind, flavor);
    let grid = SphereGrid::from_symmetry(sym, pix.width)?;
    let npix = pix.pixels_per_face;
    let mut generators = Vec::new();
    for (gi, h) in grid.sym().generators().iter().enumerate() {
        let m = grid.sym().solid().matrix_of(&h.vertex);
        let perm = grid.field_perm(FeatureKind::Scalar, &h.flag, false);
        let mut worst: f64 = 0.0;
        for (i, &c) in pix.centers.iter().enumerate() {
            let moved = mat_vec(&m, c);
            let target = pix.centers[perm.apply(i)];
            let d = (0..3).map(|k| (moved[k] - target[k]).abs()).fold(0.0, f64::max);
            worst = worst.max(d);
        }
        debug_assert_eq!(perm.degree(), pix.num_faces() * npix);
        generators.push(GeometricGeneratorCheck {
            generator: gi,
            max_mismatch: worst,
            pass: worst <= tol,
        });
    }
    let max_mismatch = generators.iter().map(|g| g.max_mismatch).fold(0.0, f64::max);
    Ok(GeometricReport {
        solid: pix.kind.name().into(),
        flavor,
        width: pix.width,
        pass: generators.iter().all(|g| g.pass),
        generators,
        max_mismatch,
        tol,
    })
}

/// `H × W × C` image over latitude (rows, top = north pole) and longitude
/// (columns, `-π` at column 0, wrapping).
#[derive(Clone, Debug, PartialEq)]
pub struct EquirectImage {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f32>,
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    #[serde(rename = "H")]
    h: usize,
    #[serde(rename = "W")]
    w: usize,
    #[serde(rename = "C")]
    c: usize,
}

impl EquirectImage {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f32>) -> Result<EquirectImage> {
        if height < 2 || width < 2 || channels == 0 {
            return Err(Error::InvalidArgument(format!(
                "image must be at least 2x2 with a channel, got {height}x{width}x{channels}"
            )));
        }
        if data.len() != height * width * channels {
            return Err(Error::Shape(format!(
                "{} values for a {height}x{width}x{channels} image",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(EquirectImage {
            height,
            width,
            channels,
            data,
        })
    }

    /// Image with value `f(lat, lon, channel)` at each grid point.
    pub fn from_fn(height: usize, width: usize, channels: usize, f: impl Fn(f64, f64, usize) -> f64) -> Result<EquirectImage> {
        let mut data = Vec::with_capacity(height * width * channels);
        for i in 0..height.max(2) {
            for j in 0..width {
                let (lat, lon) = grid_lat_lon(height.max(2), width, i, j);
                for c in 0..channels {
                    data.push(f(lat, lon, c) as f32);
                }
            }
        }
        EquirectImage::new(height, width, channels, data)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    fn at(&self, i: usize, j: usize, c: usize) -> f64 {
        self.data[(i * self.width + j) * self.channels + c] as f64
    }

    /// Reads raw little-endian `f32` data and its `{H, W, C}` JSON sidecar.
    pub fn read(raw: &Path, sidecar: &Path) -> Result<EquirectImage> {
        let meta: Sidecar = serde_json::from_str(&std::fs::read_to_string(sidecar)?)?;
        let mut bytes = Vec::new();
        std::fs::File::open(raw)?.read_to_end(&mut bytes)?;
        if bytes.len() % 4 != 0 {
            return Err(Error::Shape(format!("{} bytes is not a whole number of f32", bytes.len())));
        }
        let data = bytes
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes")))
            .collect();
        EquirectImage::new(meta.h, meta.w, meta.c, data)
    }

    pub fn write(&self, raw: &Path, sidecar: &Path) -> Result<()> {
        let mut f = std::fs::File::create(raw)?;
        for v in &self.data {
            f.write_all(&v.to_le_bytes())?;
        }
        let meta = Sidecar {
            h: self.height,
            w: self.width,
            c: self.channels,
        };
        std::fs::write(sidecar, serde_json::to_string(&meta)?)?;
        Ok(())
    }
}

/// Latitude and longitude of image grid point `(i, j)`.
pub fn grid_lat_lon(height: usize, width: usize, i: usize, j: usize) -> (f64, f64) {
    (
        PI / 2.0 - i as f64 * PI / (height - 1) as f64,
        -PI + 2.0 * PI * j as f64 / width as f64,
    )
}

pub fn lat_lon(p: Vec3) -> (f64, f64) {
    (p[2].clamp(-1.0, 1.0).asin(), p[1].atan2(p[0]))
}

/// Fractional image coordinates `(row, column)` of a point; column in `[0, W)`.
pub fn image_coords(height: usize, width: usize, p: Vec3) -> (f64, f64) {
    let (lat, lon) = lat_lon(p);
    let u = (PI / 2.0 - lat) / PI * (height - 1) as f64;
    let v = ((lon + PI) / (2.0 * PI) * width as f64).rem_euclid(width as f64);
    (u.clamp(0.0, (height - 1) as f64), v)
}

/// Bilinear samples at every pixel center; a scalar field with one channel
/// per image channel.
pub fn sample_equirect(image: &EquirectImage, pix: &SpherePixelization) -> Result<FeatureField> {
    let (h, w, ch) = (image.height, image.width, image.channels);
    let n = pix.centers.len();
    let mut data = vec![0.0; ch * n];
    for (k, &p) in pix.centers.iter().enumerate() {
        let (u, v) = image_coords(h, w, p);
        let i0 = (u.floor() as usize).min(h - 2);
        let fu = u - i0 as f64;
        let j0 = (v.floor() as usize).min(w - 1);
        let fv = v - j0 as f64;
        let j1 = (j0 + 1) % w;
        for c in 0..ch {
            let top = image.at(i0, j0, c) * (1.0 - fv) + image.at(i0, j1, c) * fv;
            let bottom = image.at(i0 + 1, j0, c) * (1.0 - fv) + image.at(i0 + 1, j1, c) * fv;
            data[c * n + k] = top * (1.0 - fu) + bottom * fu;
        }
    }
    FeatureField::from_data(FeatureKind::Scalar, ch, pix.num_faces(), 1, pix.pixels_per_face, data)
}
