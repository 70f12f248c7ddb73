//! The four Platonic solids that admit face tilings with translations, their
//! flags, and their rotation (chiral) or rotation+reflection (full) groups as
//! aligned permutation actions on vertices, faces and flags.
//!
//! Faces are counter-clockwise vertex cycles seen from outside, starting at the
//! face's smallest vertex index. The flags of face `f` are indexed by the point
//! group element that carries the face's anchor flag `(f, {c0, c1}, c0)` onto
//! them (see [`crate::pointgroup`]), giving flag index `f * |K| + g`; this puts
//! the face blocks contiguously in memory.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::permgroup::{GeneratedAction, Permutation, DEFAULT_GROUP_CAP};
use crate::pointgroup::PointGroup;

pub type Vec3 = [f64; 3];
pub type Mat3 = [[f64; 3]; 3];

/// Tolerance for matching rotated vertices to vertex indices.
pub const GEOMETRIC_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolidKind {
    Tetrahedron,
    Cube,
    Octahedron,
    Icosahedron,
}

impl SolidKind {
    pub const ALL: [SolidKind; 4] = [
        SolidKind::Tetrahedron,
        SolidKind::Cube,
        SolidKind::Octahedron,
        SolidKind::Icosahedron,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SolidKind::Tetrahedron => "tetrahedron",
            SolidKind::Cube => "cube",
            SolidKind::Octahedron => "octahedron",
            SolidKind::Icosahedron => "icosahedron",
        }
    }

    pub fn num_faces(self) -> usize {
        match self {
            SolidKind::Tetrahedron => 4,
            SolidKind::Cube => 6,
            SolidKind::Octahedron => 8,
            SolidKind::Icosahedron => 20,
        }
    }

    pub fn vertices_per_face(self) -> usize {
        match self {
            SolidKind::Cube => 4,
            _ => 3,
        }
    }

    /// Rotation group name: A4, S4, S4, A5.
    pub fn rotation_group_name(self) -> &'static str {
        match self {
            SolidKind::Tetrahedron => "A4",
            SolidKind::Cube | SolidKind::Octahedron => "S4",
            SolidKind::Icosahedron => "A5",
        }
    }
}

impl fmt::Display for SolidKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolidKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tetrahedron" | "tetra" => Ok(SolidKind::Tetrahedron),
            "cube" | "hexahedron" => Ok(SolidKind::Cube),
            "octahedron" | "octa" => Ok(SolidKind::Octahedron),
            "icosahedron" | "icosa" => Ok(SolidKind::Icosahedron),
            "dodecahedron" => Err(Error::Unsupported(
                "the dodecahedron's face tiling has no translational symmetry".into(),
            )),
            other => Err(Error::InvalidArgument(format!("unknown solid '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flavor {
    /// Rotations only.
    Chiral,
    /// Rotations and reflections.
    Full,
}

impl FromStr for Flavor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chiral" => Ok(Flavor::Chiral),
            "full" => Ok(Flavor::Full),
            other => Err(Error::InvalidArgument(format!("unknown flavor '{other}'"))),
        }
    }
}

/// An incident (face, edge, vertex) triple; the edge is stored as a sorted pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Flag {
    pub face: usize,
    pub edge: (usize, usize),
    pub vertex: usize,
}

#[derive(Clone, Debug)]
pub struct Solid {
    kind: SolidKind,
    vertices: Vec<Vec3>,
    edges: Vec<(usize, usize)>,
    faces: Vec<Vec<usize>>,
}

pub(crate) fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn normalize(a: Vec3) -> Vec3 {
    let n = norm(a);
    [a[0] / n, a[1] / n, a[2] / n]
}

pub(crate) fn mat_vec(m: &Mat3, v: Vec3) -> Vec3 {
    [dot(m[0], v), dot(m[1], v), dot(m[2], v)]
}

fn det3(m: &Mat3) -> f64 {
    dot(m[0], cross(m[1], m[2]))
}

/// Rodrigues rotation about `axis` by `angle` radians (right-hand rule).
pub fn rotation_matrix(axis: Vec3, angle: f64) -> Mat3 {
    let [x, y, z] = normalize(axis);
    let (s, c) = angle.sin_cos();
    let t = 1.0 - c;
    [
        [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
        [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
        [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
    ]
}

const PHI: f64 = 1.618_033_988_749_895;

impl Solid {
    pub fn build(kind: SolidKind) -> Solid {
        let raw: Vec<Vec3> = match kind {
            SolidKind::Tetrahedron => vec![
                [1.0, 1.0, 1.0],
                [1.0, -1.0, -1.0],
                [-1.0, 1.0, -1.0],
                [-1.0, -1.0, 1.0],
            ],
            SolidKind::Cube => {
                let mut v = Vec::new();
                for sx in [1.0, -1.0] {
                    for sy in [1.0, -1.0] {
                        for sz in [1.0, -1.0] {
                            v.push([sx, sy, sz]);
                        }
                    }
                }
                v
            }
            SolidKind::Octahedron => vec![
                [1.0, 0.0, 0.0],
                [-1.0, 0.0, 0.0],
                [0.0, 1.0, 0.0],
                [0.0, -1.0, 0.0],
                [0.0, 0.0, 1.0],
                [0.0, 0.0, -1.0],
            ],
            SolidKind::Icosahedron => {
                let mut v = Vec::new();
                for a in [1.0, -1.0] {
                    for b in [PHI, -PHI] {
                        v.push([0.0, a, b]);
                    }
                }
                for a in [1.0, -1.0] {
                    for b in [PHI, -PHI] {
                        v.push([a, b, 0.0]);
                    }
                }
                for a in [PHI, -PHI] {
                    for b in [1.0, -1.0] {
                        v.push([a, 0.0, b]);
                    }
                }
                v
            }
        };
        let vertices: Vec<Vec3> = raw.into_iter().map(normalize).collect();
        let faces = find_faces(&vertices);
        assert_eq!(faces.len(), kind.num_faces(), "face count for {kind}");
        let mut edges: Vec<(usize, usize)> = faces
            .iter()
            .flat_map(|cyc| {
                (0..cyc.len()).map(move |k| {
                    let (a, b) = (cyc[k], cyc[(k + 1) % cyc.len()]);
                    (a.min(b), a.max(b))
                })
            })
            .collect();
        edges.sort_unstable();
        edges.dedup();
        Solid {
            kind,
            vertices,
            edges,
            faces,
        }
    }

    pub fn kind(&self) -> SolidKind {
        self.kind
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn faces(&self) -> &[Vec<usize>] {
        &self.faces
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    /// Number of sides of each face.
    pub fn sides(&self) -> usize {
        self.faces[0].len()
    }

    pub fn point_group(&self, flavor: Flavor) -> PointGroup {
        PointGroup::new(self.sides(), flavor == Flavor::Full)
    }

    pub fn flags_per_face(&self, flavor: Flavor) -> usize {
        self.point_group(flavor).order()
    }

    /// All (face, edge, vertex) flags in index order.
    pub fn flags(&self) -> Vec<Flag> {
        let k = self.point_group(Flavor::Full);
        let mut out = Vec::with_capacity(self.num_faces() * k.order());
        for f in 0..self.num_faces() {
            for g in 0..k.order() {
                out.push(self.flag(f, k, g));
            }
        }
        out
    }

    /// All (face, vertex) pairs in index order.
    pub fn chiral_flags(&self) -> Vec<(usize, usize)> {
        self.faces
            .iter()
            .enumerate()
            .flat_map(|(f, cyc)| cyc.iter().map(move |&v| (f, v)))
            .collect()
    }

    /// The flag `g . anchor(f)`.
    pub fn flag(&self, face: usize, k: PointGroup, g: usize) -> Flag {
        let cyc = &self.faces[face];
        let m = cyc.len();
        let (s, r) = k.element(g);
        let v = cyc[s];
        let other = if r == 0 {
            cyc[(s + 1) % m]
        } else {
            cyc[(s + m - 1) % m]
        };
        Flag {
            face,
            edge: (v.min(other), v.max(other)),
            vertex: v,
        }
    }

    pub fn face_center(&self, f: usize) -> Vec3 {
        let cyc = &self.faces[f];
        let mut c = [0.0; 3];
        for &v in cyc {
            for (ci, vi) in c.iter_mut().zip(self.vertices[v]) {
                *ci += vi;
            }
        }
        c.map(|x| x / cyc.len() as f64)
    }

    /// Face whose vertex set equals `verts` (any order).
    pub fn face_with_vertices(&self, verts: &[usize]) -> Option<usize> {
        let mut key = verts.to_vec();
        key.sort_unstable();
        self.faces.iter().position(|cyc| {
            let mut c = cyc.clone();
            c.sort_unstable();
            c == key
        })
    }

    /// Position of vertex `v` in the cycle of face `f`.
    pub fn corner_of(&self, f: usize, v: usize) -> Option<usize> {
        self.faces[f].iter().position(|&x| x == v)
    }

    /// The face across side `s` of face `f` (the edge from corner `s` to corner
    /// `s + 1`) together with the side index of the shared edge on that face.
    pub fn side_neighbor(&self, f: usize, s: usize) -> (usize, usize) {
        let cyc = &self.faces[f];
        let m = cyc.len();
        let (a, b) = (cyc[s], cyc[(s + 1) % m]);
        for (g, other) in self.faces.iter().enumerate() {
            if g == f {
                continue;
            }
            for t in 0..m {
                if other[t] == b && other[(t + 1) % m] == a {
                    return (g, t);
                }
            }
        }
        unreachable!("every edge of a closed solid is shared by two faces");
    }

    /// Vertex permutation induced by an orthogonal matrix, if it maps the vertex set to itself.
    pub fn vertex_perm_of(&self, m: &Mat3) -> Option<Permutation> {
        let mut images = Vec::with_capacity(self.vertices.len());
        for &v in &self.vertices {
            let w = mat_vec(m, v);
            let hit = self
                .vertices
                .iter()
                .position(|&u| norm(sub(u, w)) < GEOMETRIC_TOL)?;
            images.push(hit);
        }
        Permutation::from_images(images).ok()
    }

    /// Recovers the orthogonal matrix realizing a vertex permutation.
    ///
    /// Platonic vertex sets satisfy `sum v v^T = (n/3) I`, so the least-squares
    /// solution is `(3/n) sum w v^T`.
    pub fn matrix_of(&self, vperm: &Permutation) -> Mat3 {
        let n = self.vertices.len() as f64;
        let mut m = [[0.0; 3]; 3];
        for (i, &v) in self.vertices.iter().enumerate() {
            let w = self.vertices[vperm.apply(i)];
            for (a, row) in m.iter_mut().enumerate() {
                for (b, x) in row.iter_mut().enumerate() {
                    *x += 3.0 / n * w[a] * v[b];
                }
            }
        }
        m
    }

    /// Canonical generator matrices: a face-centred rotation, a vertex- or
    /// edge-centred rotation, and (full flavor) one reflection.
    pub fn generator_matrices(&self, flavor: Flavor) -> Vec<Mat3> {
        use std::f64::consts::PI;
        let diag = [1.0, 1.0, 1.0];
        let mut out = match self.kind {
            // 90 deg about z through a face centre, 120 deg about a body diagonal through a vertex.
            SolidKind::Cube => vec![
                rotation_matrix([0.0, 0.0, 1.0], PI / 2.0),
                rotation_matrix(diag, 2.0 * PI / 3.0),
            ],
            // 120 deg about (1,1,1) through a face centre, 90 deg about z through a vertex.
            SolidKind::Octahedron => vec![
                rotation_matrix(diag, 2.0 * PI / 3.0),
                rotation_matrix([0.0, 0.0, 1.0], PI / 2.0),
            ],
            // 120 deg about the axis through vertex (1,1,1) and the opposite face
            // centre, 180 deg about z through two edge midpoints.
            SolidKind::Tetrahedron => vec![
                rotation_matrix([-1.0, -1.0, -1.0], 2.0 * PI / 3.0),
                rotation_matrix([0.0, 0.0, 1.0], PI),
            ],
            // 120 deg about a face normal, 72 deg about the vertex (0, 1, phi).
            SolidKind::Icosahedron => vec![
                rotation_matrix(diag, 2.0 * PI / 3.0),
                rotation_matrix([0.0, 1.0, PHI], 2.0 * PI / 5.0),
            ],
        };
        if flavor == Flavor::Full {
            out.push(match self.kind {
                SolidKind::Icosahedron => [[-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
                _ => [[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]],
            });
        }
        out
    }
}

/// Faces as maximal vertex sets on supporting planes, oriented counter-clockwise
/// around the outward normal and started at their smallest vertex.
fn find_faces(vertices: &[Vec3]) -> Vec<Vec<usize>> {
    let n = vertices.len();
    let mut faces: Vec<Vec<usize>> = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                let (pa, pb, pc) = (vertices[a], vertices[b], vertices[c]);
                let nrm = cross(sub(pb, pa), sub(pc, pa));
                if norm(nrm) < 1e-12 {
                    continue;
                }
                let side: Vec<f64> = vertices.iter().map(|&v| dot(nrm, sub(v, pa))).collect();
                let above = side.iter().any(|&s| s > 1e-9);
                let below = side.iter().any(|&s| s < -1e-9);
                if above && below {
                    continue;
                }
                let mut on: Vec<usize> = (0..n).filter(|&i| side[i].abs() <= 1e-9).collect();
                on.sort_unstable();
                if !faces.contains(&on) {
                    faces.push(on);
                }
            }
        }
    }
    faces.sort();
    faces
        .into_iter()
        .map(|set| {
            let mut center = [0.0; 3];
            for &v in &set {
                for (ci, vi) in center.iter_mut().zip(vertices[v]) {
                    *ci += vi / set.len() as f64;
                }
            }
            let normal = normalize(center);
            let e1 = normalize(sub(vertices[set[0]], center));
            let e2 = cross(normal, e1);
            let angle = |v: usize| {
                let d = sub(vertices[v], center);
                let a = dot(d, e2).atan2(dot(d, e1));
                if a < -1e-12 {
                    a + 2.0 * std::f64::consts::PI
                } else {
                    a.max(0.0)
                }
            };
            let mut cyc = set.clone();
            cyc.sort_by(|&x, &y| angle(x).partial_cmp(&angle(y)).unwrap());
            cyc
        })
        .collect()
}

/// A solid's symmetry group as aligned actions on vertices, faces and flags.
#[derive(Clone, Debug)]
pub struct SolidSymmetry {
    solid: Solid,
    flavor: Flavor,
    vertex_action: GeneratedAction,
    face_action: GeneratedAction,
    flag_action: GeneratedAction,
}

/// A group element seen through all three aligned actions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymmetryElement {
    pub vertex: Permutation,
    pub face: Permutation,
    pub flag: Permutation,
}

impl SolidSymmetry {
    pub fn new(kind: SolidKind, flavor: Flavor) -> SolidSymmetry {
        let solid = Solid::build(kind);
        let gens: Vec<Permutation> = solid
            .generator_matrices(flavor)
            .iter()
            .map(|m| {
                let p = solid
                    .vertex_perm_of(m)
                    .expect("generator matrix must permute the vertices");
                assert!(
                    flavor == Flavor::Full || det3(m) > 0.0,
                    "chiral generators must be rotations"
                );
                p
            })
            .collect();
        SolidSymmetry::from_vertex_gens(solid, flavor, gens)
    }

    fn from_vertex_gens(solid: Solid, flavor: Flavor, gens: Vec<Permutation>) -> SolidSymmetry {
        let nv = solid.vertices.len();
        let mut faces = Vec::new();
        let mut flags = Vec::new();
        for g in &gens {
            let (f, fl) = induced_perms(&solid, flavor, g);
            faces.push(f);
            flags.push(fl);
        }
        let k = solid.flags_per_face(flavor);
        SolidSymmetry {
            vertex_action: GeneratedAction::new(nv, gens).expect("degree"),
            face_action: GeneratedAction::new(solid.num_faces(), faces).expect("degree"),
            flag_action: GeneratedAction::new(solid.num_faces() * k, flags).expect("degree"),
            solid,
            flavor,
        }
    }

    pub fn solid(&self) -> &Solid {
        &self.solid
    }

    pub fn kind(&self) -> SolidKind {
        self.solid.kind
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    pub fn point_group(&self) -> PointGroup {
        self.solid.point_group(self.flavor)
    }

    pub fn flags_per_face(&self) -> usize {
        self.point_group().order()
    }

    pub fn num_flags(&self) -> usize {
        self.solid.num_faces() * self.flags_per_face()
    }

    pub fn vertex_action(&self) -> &GeneratedAction {
        &self.vertex_action
    }

    pub fn face_action(&self) -> &GeneratedAction {
        &self.face_action
    }

    pub fn flag_action(&self) -> &GeneratedAction {
        &self.flag_action
    }

    pub fn num_gens(&self) -> usize {
        self.vertex_action.num_gens()
    }

    pub fn generator(&self, i: usize) -> SymmetryElement {
        SymmetryElement {
            vertex: self.vertex_action.gens()[i].clone(),
            face: self.face_action.gens()[i].clone(),
            flag: self.flag_action.gens()[i].clone(),
        }
    }

    pub fn generators(&self) -> Vec<SymmetryElement> {
        (0..self.num_gens()).map(|i| self.generator(i)).collect()
    }

    /// The element given by a vertex permutation (which must be a symmetry).
    pub fn element_from_vertex_perm(&self, vperm: &Permutation) -> SymmetryElement {
        let (face, flag) = induced_perms(&self.solid, self.flavor, vperm);
        SymmetryElement {
            vertex: vperm.clone(),
            face,
            flag,
        }
    }

    pub fn order(&self) -> usize {
        self.vertex_action
            .group_order(DEFAULT_GROUP_CAP)
            .expect("Platonic groups are small")
    }

    /// Every group element (breadth-first from the identity over the vertex action).
    pub fn elements(&self) -> Vec<SymmetryElement> {
        self.vertex_action
            .enumerate_group(DEFAULT_GROUP_CAP)
            .expect("Platonic groups are small")
            .iter()
            .map(|v| self.element_from_vertex_perm(v))
            .collect()
    }

    /// Labels flags by their face (the face-block partition).
    pub fn face_blocks(&self) -> Vec<usize> {
        let k = self.flags_per_face();
        (0..self.num_flags()).map(|i| i / k).collect()
    }

    /// Generators of the set-stabilizer of face `f`, restricted to its flags.
    pub fn face_stabilizer(&self, f: usize) -> Result<GeneratedAction> {
        if f >= self.solid.num_faces() {
            return Err(Error::IndexOutOfRange {
                index: f,
                degree: self.solid.num_faces(),
            });
        }
        let k = self.flags_per_face();
        let stab: Vec<Permutation> = self
            .flag_action
            .enumerate_group(DEFAULT_GROUP_CAP)?
            .into_iter()
            .filter(|p| p.apply(f * k) / k == f)
            .map(|p| {
                Permutation::from_images_unchecked(
                    (0..k).map(|i| p.apply(f * k + i) - f * k).collect(),
                )
            })
            .collect();
        // Greedily pick generators until their closure is the whole stabilizer.
        let mut gens: Vec<Permutation> = Vec::new();
        let mut closure = GeneratedAction::trivial(k).enumerate_group(DEFAULT_GROUP_CAP)?;
        for p in &stab {
            if !closure.contains(p) {
                gens.push(p.clone());
                closure = GeneratedAction::new(k, gens.clone())?.enumerate_group(DEFAULT_GROUP_CAP)?;
            }
        }
        debug_assert_eq!(closure.len(), stab.len());
        GeneratedAction::new(k, gens)
    }

    /// Splits a flag permutation into the face permutation and, per face, the
    /// permutation of that face's flag block onto its image block.
    ///
    /// Recomposition: `tensor_product(face, id_K) ∘ direct_sum(inner)`.
    pub fn flag_decomposition(&self, h: &Permutation) -> Result<(Permutation, Vec<Permutation>)> {
        let k = self.flags_per_face();
        let nf = self.solid.num_faces();
        if h.degree() != nf * k {
            return Err(Error::DegreeMismatch {
                left: nf * k,
                right: h.degree(),
            });
        }
        let mut face_images = Vec::with_capacity(nf);
        let mut inner = Vec::with_capacity(nf);
        for f in 0..nf {
            let target = h.apply(f * k) / k;
            let mut local = Vec::with_capacity(k);
            for i in 0..k {
                let img = h.apply(f * k + i);
                if img / k != target {
                    return Err(Error::NotBlockPreserving(format!(
                        "flags of face {f} are split across faces"
                    )));
                }
                local.push(img % k);
            }
            face_images.push(target);
            inner.push(Permutation::from_images(local)?);
        }
        let face = Permutation::from_images(face_images)
            .map_err(|_| Error::NotBlockPreserving("face map is not a bijection".into()))?;
        Ok((face, inner))
    }

    pub fn recompose(&self, face: &Permutation, inner: &[Permutation]) -> Permutation {
        let outer = Permutation::tensor_product(face, &Permutation::identity(self.flags_per_face()));
        outer
            .compose(&Permutation::direct_sum(inner))
            .expect("matching degrees")
    }

    /// Restricts to the subgroup generated by the given vertex permutations.
    pub fn restrict(&self, vertex_gens: &[Permutation]) -> Result<SolidSymmetry> {
        let elements = self.vertex_action.enumerate_group(DEFAULT_GROUP_CAP)?;
        for (i, g) in vertex_gens.iter().enumerate() {
            if !elements.contains(g) {
                return Err(Error::NotAMember { index: i });
            }
        }
        Ok(SolidSymmetry::from_vertex_gens(
            self.solid.clone(),
            self.flavor,
            vertex_gens.to_vec(),
        ))
    }
}

/// Face and flag permutations induced by a vertex permutation.
fn induced_perms(solid: &Solid, flavor: Flavor, vperm: &Permutation) -> (Permutation, Permutation) {
    let k = solid.point_group(flavor);
    let nf = solid.num_faces();
    let m = solid.sides();
    let mut face_img = Vec::with_capacity(nf);
    let mut flag_img = Vec::with_capacity(nf * k.order());
    for f in 0..nf {
        let cyc = &solid.faces[f];
        let mapped: Vec<usize> = cyc.iter().map(|&v| vperm.apply(v)).collect();
        let target = solid
            .face_with_vertices(&mapped)
            .expect("symmetries map faces to faces");
        face_img.push(target);
        for g in 0..k.order() {
            let flag = solid.flag(f, k, g);
            let v = vperm.apply(flag.vertex);
            let other = if flag.edge.0 == flag.vertex {
                flag.edge.1
            } else {
                flag.edge.0
            };
            let w = vperm.apply(other);
            let s = solid.corner_of(target, v).expect("vertex on face");
            let tcyc = &solid.faces[target];
            let image = if flavor == Flavor::Chiral || tcyc[(s + 1) % m] == w {
                k.index(s, 0)
            } else {
                debug_assert_eq!(tcyc[(s + m - 1) % m], w);
                k.index(s, 1)
            };
            flag_img.push(target * k.order() + image);
        }
    }
    (
        Permutation::from_images(face_img).expect("face bijection"),
        Permutation::from_images(flag_img).expect("flag bijection"),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        let expect = [
            (SolidKind::Tetrahedron, 4, 6, 4, 12),
            (SolidKind::Cube, 8, 12, 6, 24),
            (SolidKind::Octahedron, 6, 12, 8, 24),
            (SolidKind::Icosahedron, 12, 30, 20, 60),
        ];
        for (kind, v, e, f, cf) in expect {
            let s = Solid::build(kind);
            assert_eq!(s.vertices().len(), v, "{kind}");
            assert_eq!(s.edges().len(), e, "{kind}");
            assert_eq!(s.num_faces(), f, "{kind}");
            assert_eq!(s.chiral_flags().len(), cf, "{kind}");
            assert_eq!(s.flags().len(), 2 * cf, "{kind}");
            for v in s.vertices() {
                assert!((norm(*v) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn faces_are_ccw_from_outside() {
        for kind in SolidKind::ALL {
            let s = Solid::build(kind);
            for (f, cyc) in s.faces().iter().enumerate() {
                let c = s.face_center(f);
                let (a, b) = (s.vertices()[cyc[0]], s.vertices()[cyc[1]]);
                let n = cross(sub(a, c), sub(b, c));
                assert!(dot(n, c) > 0.0, "{kind} face {f}");
                assert_eq!(cyc[0], *cyc.iter().min().unwrap());
            }
        }
    }

    #[test]
    fn flags_are_incident() {
        for kind in SolidKind::ALL {
            let s = Solid::build(kind);
            for fl in s.flags() {
                let cyc = &s.faces()[fl.face];
                assert!(fl.edge.0 == fl.vertex || fl.edge.1 == fl.vertex);
                assert!(cyc.contains(&fl.edge.0) && cyc.contains(&fl.edge.1));
                assert!(s.edges().contains(&fl.edge));
            }
            for (f, v) in s.chiral_flags() {
                assert!(s.faces()[f].contains(&v));
            }
        }
    }

    #[test]
    fn group_orders() {
        let expect = [
            (SolidKind::Tetrahedron, 12, 24),
            (SolidKind::Cube, 24, 48),
            (SolidKind::Octahedron, 24, 48),
            (SolidKind::Icosahedron, 60, 120),
        ];
        for (kind, chiral, full) in expect {
            assert_eq!(SolidSymmetry::new(kind, Flavor::Chiral).order(), chiral);
            assert_eq!(SolidSymmetry::new(kind, Flavor::Full).order(), full);
        }
    }

    #[test]
    fn dodecahedron_is_rejected() {
        assert!(matches!(
            "dodecahedron".parse::<SolidKind>(),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn side_neighbors_share_reversed_edges() {
        for kind in SolidKind::ALL {
            let s = Solid::build(kind);
            let m = s.sides();
            for f in 0..s.num_faces() {
                for side in 0..m {
                    let (g, t) = s.side_neighbor(f, side);
                    assert_ne!(f, g);
                    assert_eq!(s.side_neighbor(g, t), (f, side));
                    assert_eq!(s.faces()[g][t], s.faces()[f][(side + 1) % m]);
                }
            }
        }
    }

    #[test]
    fn face_stabilizers() {
        let cube = SolidSymmetry::new(SolidKind::Cube, Flavor::Chiral);
        for f in 0..6 {
            let st = cube.face_stabilizer(f).unwrap();
            assert_eq!(st.degree(), 4);
            assert_eq!(st.group_order(100).unwrap(), 4);
            assert_eq!(st.all_orbits().num_orbits(), 1);
        }
        let ico = SolidSymmetry::new(SolidKind::Icosahedron, Flavor::Chiral);
        assert_eq!(ico.face_stabilizer(7).unwrap().group_order(100).unwrap(), 3);
        let cube_full = SolidSymmetry::new(SolidKind::Cube, Flavor::Full);
        let st = cube_full.face_stabilizer(2).unwrap();
        assert_eq!(st.group_order(100).unwrap(), 8);
        // dihedral, not cyclic: no element of order 8
        assert!(st.enumerate_group(100).unwrap().iter().all(|p| p.order() <= 4));
    }

    #[test]
    fn decomposition_of_quarter_turn() {
        let cube = SolidSymmetry::new(SolidKind::Cube, Flavor::Chiral);
        let h = cube.generator(0);
        let (face, inner) = cube.flag_decomposition(&h.flag).unwrap();
        let s = cube.solid();
        // faces whose centre lies on the z axis are fixed, the four side faces form a 4-cycle
        let mut fixed = Vec::new();
        for f in 0..6 {
            let c = s.face_center(f);
            if c[2].abs() > 0.5 {
                fixed.push(f);
                assert_eq!(face.apply(f), f);
                assert_eq!(inner[f].order(), 4);
            }
        }
        assert_eq!(fixed.len(), 2);
        let cycles: Vec<_> = face.cycles().into_iter().filter(|c| c.len() > 1).collect();
        assert_eq!(cycles.len(), 1);
        assert_eq!(cycles[0].len(), 4);

        let (id_face, id_inner) = cube
            .flag_decomposition(&Permutation::identity(24))
            .unwrap();
        assert!(id_face.is_identity());
        assert!(id_inner.iter().all(Permutation::is_identity));
    }

    #[test]
    fn decomposition_rejects_block_splitting() {
        let cube = SolidSymmetry::new(SolidKind::Cube, Flavor::Chiral);
        let bad = Permutation::from_cycles(24, &[&[0, 4]]).unwrap();
        assert!(matches!(
            cube.flag_decomposition(&bad),
            Err(Error::NotBlockPreserving(_))
        ));
    }

    #[test]
    fn matrices_recovered_from_vertex_perms() {
        for kind in SolidKind::ALL {
            let s = Solid::build(kind);
            for m in s.generator_matrices(Flavor::Full) {
                let p = s.vertex_perm_of(&m).unwrap();
                let back = s.matrix_of(&p);
                for a in 0..3 {
                    for b in 0..3 {
                        assert!((back[a][b] - m[a][b]).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn restriction_checks_membership() {
        let cube = SolidSymmetry::new(SolidKind::Cube, Flavor::Chiral);
        let c4 = cube.restrict(&[cube.generator(0).vertex]).unwrap();
        assert_eq!(c4.order(), 4);
        let full = SolidSymmetry::new(SolidKind::Cube, Flavor::Full);
        let refl = full.generator(2).vertex;
        assert!(matches!(cube.restrict(&[refl]), Err(Error::NotAMember { index: 0 })));
    }
}
