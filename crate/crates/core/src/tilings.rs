//! Face pixelizations and their symmetries.
//!
//! Square grids (cube faces) index pixel `(r, c)` as `r * d + c`; column runs
//! from corner 0 towards corner 1 and row from corner 0 towards corner 3.
//!
//! Hex grids (triangular faces) use the `w(w+1)/2` subdivision triangles that
//! share the face's orientation, each standing in for one hexagon. Cell `(i, j)`
//! with `i, j >= 0`, `i + j <= w - 1` has barycentric centre
//! `(k + 1/3, i + 1/3, j + 1/3) / w` on corners `(C0, C1, C2)` where
//! `k = w - 1 - i - j`; cells are ordered by `j`, then `i`.
//!
//! Point group element `g` acts on pixels as it acts on the face corners (see
//! [`crate::pointgroup`]): one rotation step sends corner `s` to `s + 1`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::permgroup::{GeneratedAction, Permutation};
use crate::pointgroup::PointGroup;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TilingKind {
    Square,
    Hex,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Scalar,
    Regular,
}

impl std::str::FromStr for FeatureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "scalar" => Ok(FeatureKind::Scalar),
            "regular" => Ok(FeatureKind::Regular),
            other => Err(Error::InvalidArgument(format!("unknown feature kind '{other}'"))),
        }
    }
}

pub type Coord = (i64, i64);

#[derive(Clone, Debug)]
pub struct Tiling {
    kind: TilingKind,
    width: usize,
    pixels: Vec<Coord>,
    index: HashMap<Coord, usize>,
    k: PointGroup,
    t_gens: Vec<Permutation>,
    k_gens: Vec<Permutation>,
    /// Pixel permutation of every point group element, by element index.
    k_perms: Vec<Permutation>,
}

/// Rotation one step about the face centre, valid on interior and halo coordinates.
fn rot_coord(kind: TilingKind, w: i64, (a, b): Coord) -> Coord {
    match kind {
        TilingKind::Square => (b, w - 1 - a),
        TilingKind::Hex => (w - 1 - a - b, a),
    }
}

/// Mirror fixing corner 0.
fn mir_coord(_kind: TilingKind, _w: i64, (a, b): Coord) -> Coord {
    (b, a)
}

/// Applies point group element `g` to a (possibly halo) coordinate.
pub fn act_coord(kind: TilingKind, width: usize, k: PointGroup, g: usize, c: Coord) -> Coord {
    let (s, r) = k.element(g);
    let w = width as i64;
    let mut out = if r == 1 { mir_coord(kind, w, c) } else { c };
    for _ in 0..s {
        out = rot_coord(kind, w, out);
    }
    out
}

fn perm_from_coord_map(pixels: &[Coord], index: &HashMap<Coord, usize>, f: impl Fn(Coord) -> Coord) -> Permutation {
    Permutation::from_images(pixels.iter().map(|&c| index[&f(c)]).collect())
        .expect("coordinate map is a bijection of the grid")
}

impl Tiling {
    pub fn square(d: usize, with_reflections: bool) -> Tiling {
        assert!(d >= 1, "square tiling needs d >= 1");
        let pixels: Vec<Coord> = (0..d as i64)
            .flat_map(|r| (0..d as i64).map(move |c| (r, c)))
            .collect();
        let index = pixels.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        let di = d as i64;
        let mut t = Tiling::finish(TilingKind::Square, d, pixels, index, with_reflections);
        t.t_gens = vec![
            perm_from_coord_map(&t.pixels, &t.index, |(r, c)| (r, (c + 1) % di)),
            perm_from_coord_map(&t.pixels, &t.index, |(r, c)| ((r + 1) % di, c)),
        ];
        t
    }

    pub fn hex(w: usize, with_reflections: bool) -> Tiling {
        assert!(w >= 1, "hex tiling needs w >= 1");
        let wi = w as i64;
        let pixels: Vec<Coord> = (0..wi)
            .flat_map(|j| (0..wi - j).map(move |i| (i, j)))
            .collect();
        let index = pixels.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        Tiling::finish(TilingKind::Hex, w, pixels, index, with_reflections)
    }

    /// The tiling a solid's faces carry: square for 4-gons, hex for triangles.
    pub fn for_sides(sides: usize, width: usize, with_reflections: bool) -> Result<Tiling> {
        if width == 0 {
            return Err(Error::InvalidArgument("tiling width must be at least 1".into()));
        }
        match sides {
            4 => Ok(Tiling::square(width, with_reflections)),
            3 => Ok(Tiling::hex(width, with_reflections)),
            m => Err(Error::Unsupported(format!("no tiling for {m}-gon faces"))),
        }
    }

    fn finish(
        kind: TilingKind,
        width: usize,
        pixels: Vec<Coord>,
        index: HashMap<Coord, usize>,
        with_reflections: bool,
    ) -> Tiling {
        let k = PointGroup::new(if kind == TilingKind::Square { 4 } else { 3 }, with_reflections);
        let k_perms: Vec<Permutation> = (0..k.order())
            .map(|g| perm_from_coord_map(&pixels, &index, |c| act_coord(kind, width, k, g, c)))
            .collect();
        let k_gens = k.generators().iter().map(|&g| k_perms[g].clone()).collect();
        Tiling {
            kind,
            width,
            pixels,
            index,
            k,
            t_gens: Vec::new(),
            k_gens,
            k_perms,
        }
    }

    pub fn kind(&self) -> TilingKind {
        self.kind
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn num_pixels(&self) -> usize {
        self.pixels.len()
    }

    pub fn pixels(&self) -> &[Coord] {
        &self.pixels
    }

    pub fn pixel_index(&self, c: Coord) -> Option<usize> {
        self.index.get(&c).copied()
    }

    pub fn point_group(&self) -> PointGroup {
        self.k
    }

    pub fn k_order(&self) -> usize {
        self.k.order()
    }

    pub fn t_gens(&self) -> &[Permutation] {
        &self.t_gens
    }

    pub fn k_gens(&self) -> &[Permutation] {
        &self.k_gens
    }

    /// Pixel permutation of point group element `g`.
    pub fn k_perm(&self, g: usize) -> &Permutation {
        &self.k_perms[g]
    }

    fn require_translations(&self) -> Result<()> {
        if self.t_gens.is_empty() {
            Err(Error::Unsupported(
                "circular translations undefined on triangular faces".into(),
            ))
        } else {
            Ok(())
        }
    }

    /// `U = K ⋉ T` on the pixels: translations then point group generators.
    pub fn scalar_face_action(&self) -> Result<GeneratedAction> {
        self.require_translations()?;
        let gens = self.t_gens.iter().chain(&self.k_gens).cloned().collect();
        GeneratedAction::new(self.num_pixels(), gens)
    }

    /// `U` on `K × N`: k-generators act as regular permutation ⊗ pixel rotation,
    /// t-generators as identity ⊗ translation.
    pub fn regular_face_action(&self) -> Result<GeneratedAction> {
        self.require_translations()?;
        let id_k = Permutation::identity(self.k_order());
        let mut gens: Vec<Permutation> = self
            .t_gens
            .iter()
            .map(|t| Permutation::tensor_product(&id_k, t))
            .collect();
        gens.extend(self.regular_point_gens());
        GeneratedAction::new(self.k_order() * self.num_pixels(), gens)
    }

    fn regular_point_gens(&self) -> Vec<Permutation> {
        self.k
            .generators()
            .into_iter()
            .map(|g| Permutation::tensor_product(&self.k.regular_perm(g), &self.k_perms[g]))
            .collect()
    }

    /// The point group alone acting on `N` or `K × N`; defined for both tiling kinds.
    pub fn point_action(&self, feature: FeatureKind) -> GeneratedAction {
        match feature {
            FeatureKind::Scalar => GeneratedAction::new(self.num_pixels(), self.k_gens.clone()),
            FeatureKind::Regular => GeneratedAction::new(
                self.k_order() * self.num_pixels(),
                self.regular_point_gens(),
            ),
        }
        .expect("degrees agree")
    }

    /// The per-face symmetry used by dense maps: `K ⋉ T` on square grids and
    /// `K` alone on hex grids, where global translations do not exist.
    pub fn local_action(&self, feature: FeatureKind) -> GeneratedAction {
        match (self.kind, feature) {
            (TilingKind::Square, FeatureKind::Scalar) => self.scalar_face_action().expect("square"),
            (TilingKind::Square, FeatureKind::Regular) => {
                self.regular_face_action().expect("square")
            }
            (TilingKind::Hex, f) => self.point_action(f),
        }
    }

    pub fn fibers(&self, feature: FeatureKind) -> usize {
        match feature {
            FeatureKind::Scalar => 1,
            FeatureKind::Regular => self.k_order(),
        }
    }

    pub fn grid(&self) -> ExtGrid {
        ExtGrid::new(self)
    }
}

/// A face grid together with a one-cell halo, kernel offsets and side geometry.
///
/// Extended cells list the interior first (in tiling order), then the halo.
/// Square halos are `r, c in [-1, d]`; hex halos are `i, j >= -1`, `i + j <= w`.
/// Each side `s` runs from corner `s` to corner `s + 1`; along a side, position
/// `t` increases in that direction.
#[derive(Clone, Debug)]
pub struct ExtGrid {
    kind: TilingKind,
    width: usize,
    k: PointGroup,
    coords: Vec<Coord>,
    index: HashMap<Coord, usize>,
    interior: usize,
    corners: Vec<usize>,
    offsets: Vec<Coord>,
    neighbors: Vec<Vec<usize>>,
    offset_perm: Vec<Vec<usize>>,
    ext_perm: Vec<Permutation>,
    side_halo: Vec<Vec<usize>>,
    side_edge: Vec<Vec<usize>>,
}

const SQUARE_RING: [Coord; 8] = [
    (0, 1),
    (1, 1),
    (1, 0),
    (1, -1),
    (0, -1),
    (-1, -1),
    (-1, 0),
    (-1, 1),
];
const HEX_RING: [Coord; 6] = [(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)];

impl ExtGrid {
    fn new(t: &Tiling) -> ExtGrid {
        let w = t.width as i64;
        let mut coords = t.pixels.clone();
        let mut halo: Vec<Coord> = match t.kind {
            TilingKind::Square => (-1..=w)
                .flat_map(|r| (-1..=w).map(move |c| (r, c)))
                .filter(|&(r, c)| r < 0 || c < 0 || r >= w || c >= w)
                .collect(),
            TilingKind::Hex => (-1..=w + 1)
                .flat_map(|j| (-1..=w + 1).map(move |i| (i, j)))
                .filter(|&(i, j)| i + j <= w && (i < 0 || j < 0 || i + j >= w))
                .collect(),
        };
        halo.sort_by_key(|&(a, b)| (b, a));
        coords.extend(halo);
        let index: HashMap<Coord, usize> = coords.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        let corner_coords: Vec<Coord> = match t.kind {
            TilingKind::Square => vec![(-1, -1), (-1, w), (w, w), (w, -1)],
            TilingKind::Hex => vec![(-1, -1), (w + 1, -1), (-1, w + 1)],
        };
        let corners = corner_coords.iter().map(|c| index[c]).collect();

        let ring: &[Coord] = match t.kind {
            TilingKind::Square => &SQUARE_RING,
            TilingKind::Hex => &HEX_RING,
        };
        let mut offsets = vec![(0, 0)];
        offsets.extend_from_slice(ring);
        let neighbors = t
            .pixels
            .iter()
            .map(|&(a, b)| offsets.iter().map(|&(da, db)| index[&(a + da, b + db)]).collect())
            .collect();

        let k = t.k;
        let rlen = ring.len();
        let mirror_sum = if t.kind == TilingKind::Square { 2 } else { 1 };
        let offset_perm = (0..k.order())
            .map(|g| {
                let (s, r) = k.element(g);
                let mut v = vec![0];
                for i in 0..rlen {
                    let m = if r == 1 { (mirror_sum + rlen - i) % rlen } else { i };
                    v.push(1 + (m + 2 * s) % rlen);
                }
                v
            })
            .collect();

        let ext_perm = (0..k.order())
            .map(|g| perm_from_coord_map(&coords, &index, |c| act_coord(t.kind, t.width, k, g, c)))
            .collect::<Vec<_>>();

        let m = k.sides();
        let side0_halo: Vec<Coord> = match t.kind {
            TilingKind::Square => (0..w).map(|c| (-1, c)).collect(),
            TilingKind::Hex => (0..=w).map(|i| (i, -1)).collect(),
        };
        let side0_edge: Vec<Coord> = match t.kind {
            TilingKind::Square => (0..w).map(|c| (0, c)).collect(),
            TilingKind::Hex => (0..w).map(|i| (i, 0)).collect(),
        };
        let rot = k.index(1 % m, 0);
        let walk = |start: &[Coord]| -> Vec<Vec<usize>> {
            let mut out = Vec::with_capacity(m);
            let mut cur: Vec<usize> = start.iter().map(|c| index[c]).collect();
            for _ in 0..m {
                out.push(cur.clone());
                cur = cur.iter().map(|&i| ext_perm[rot].apply(i)).collect();
            }
            out
        };
        let side_halo = walk(&side0_halo);
        let side_edge = walk(&side0_edge);

        ExtGrid {
            kind: t.kind,
            width: t.width,
            k,
            interior: t.pixels.len(),
            coords,
            index,
            corners,
            offsets,
            neighbors,
            offset_perm,
            ext_perm,
            side_halo,
            side_edge,
        }
    }

    pub fn kind(&self) -> TilingKind {
        self.kind
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn point_group(&self) -> PointGroup {
        self.k
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn interior_len(&self) -> usize {
        self.interior
    }

    pub fn coords(&self) -> &[Coord] {
        &self.coords
    }

    pub fn cell(&self, c: Coord) -> Option<usize> {
        self.index.get(&c).copied()
    }

    /// Halo corner cells, zeroed by padding.
    pub fn corners(&self) -> &[usize] {
        &self.corners
    }

    /// Kernel offsets: centre first, then the neighbour ring counter-clockwise.
    pub fn offsets(&self) -> &[Coord] {
        &self.offsets
    }

    pub fn num_offsets(&self) -> usize {
        self.offsets.len()
    }

    /// `neighbors()[y][o]`: extended cell at interior pixel `y` plus offset `o`.
    pub fn neighbors(&self) -> &[Vec<usize>] {
        &self.neighbors
    }

    /// `offset_perm()[g][o]`: offset index `g` maps `o` to.
    pub fn offset_perm(&self) -> &[Vec<usize>] {
        &self.offset_perm
    }

    /// Point group element `g` acting on extended cells.
    pub fn ext_perm(&self, g: usize) -> &Permutation {
        &self.ext_perm[g]
    }

    /// Halo cells outside side `s`, in along order.
    pub fn side_halo(&self, s: usize) -> &[usize] {
        &self.side_halo[s]
    }

    /// Interior cells touching side `s`, in along order.
    pub fn side_edge(&self, s: usize) -> &[usize] {
        &self.side_edge[s]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::permgroup::DEFAULT_GROUP_CAP;

    #[test]
    fn pixel_counts() {
        assert_eq!(Tiling::square(3, false).num_pixels(), 9);
        assert_eq!(Tiling::square(24, false).num_pixels(), 576);
        assert_eq!(Tiling::hex(17, false).num_pixels(), 153);
        assert_eq!(Tiling::hex(41, false).num_pixels(), 861);
        assert_eq!(Tiling::hex(25, false).num_pixels(), 325);
    }

    #[test]
    fn square_groups() {
        let t = Tiling::square(3, false);
        let a = t.scalar_face_action().unwrap();
        assert_eq!(a.group_order(DEFAULT_GROUP_CAP).unwrap(), 36);
        assert_eq!(a.tensor_square().all_orbits().num_orbits(), 3);
        let reg = t.regular_face_action().unwrap();
        assert_eq!(reg.degree(), 36);
        assert_eq!(reg.group_order(DEFAULT_GROUP_CAP).unwrap(), 36);
        assert_eq!(reg.all_orbits().num_orbits(), 1);
        assert_eq!(reg.tensor_square().all_orbits().num_orbits(), 36);
    }

    #[test]
    fn degenerate_square() {
        let t = Tiling::square(1, true);
        assert!(t.t_gens().iter().all(Permutation::is_identity));
        assert!(t.k_gens().iter().all(Permutation::is_identity));
    }

    #[test]
    fn hex_has_no_translations() {
        let t = Tiling::hex(5, false);
        assert!(matches!(t.scalar_face_action(), Err(Error::Unsupported(_))));
        assert!(matches!(t.regular_face_action(), Err(Error::Unsupported(_))));
        assert_eq!(t.k_gens()[0].order(), 3);
    }

    #[test]
    fn hex_rotation_cycles_corners() {
        let w = 9;
        let t = Tiling::hex(w, false);
        let c: Vec<usize> = [(0, 0), (w as i64 - 1, 0), (0, w as i64 - 1)]
            .iter()
            .map(|&x| t.pixel_index(x).unwrap())
            .collect();
        let rot = &t.k_gens()[0];
        assert_eq!(rot.apply(c[0]), c[1]);
        assert_eq!(rot.apply(c[1]), c[2]);
        assert_eq!(rot.apply(c[2]), c[0]);
    }

    #[test]
    fn k_perms_are_a_representation() {
        for t in [Tiling::square(4, true), Tiling::square(3, true), Tiling::hex(6, true)] {
            let k = t.point_group();
            for a in 0..k.order() {
                for b in 0..k.order() {
                    let lhs = t.k_perm(k.mul(a, b)).clone();
                    let rhs = t.k_perm(a).compose(t.k_perm(b)).unwrap();
                    assert_eq!(lhs, rhs);
                }
            }
        }
    }

    #[test]
    fn ext_grid_shapes() {
        let g = Tiling::square(4, false).grid();
        assert_eq!(g.len(), 36);
        assert_eq!(g.corners().len(), 4);
        let h = Tiling::hex(5, false).grid();
        assert_eq!(h.len() - h.interior_len(), 3 * 5 + 6);
        for s in 0..3 {
            assert_eq!(h.side_halo(s).len(), 6);
            assert_eq!(h.side_edge(s).len(), 5);
        }
        // halo = sides plus corners, no overlaps
        let mut all: Vec<usize> = (0..3).flat_map(|s| h.side_halo(s).to_vec()).collect();
        all.extend(h.corners());
        all.sort_unstable();
        all.dedup();
        assert_eq!(all.len(), 3 * 5 + 6);
    }

    #[test]
    fn offsets_rotate_with_the_grid() {
        for t in [Tiling::square(5, true), Tiling::hex(7, true)] {
            let g = t.grid();
            let k = t.point_group();
            for e in 0..k.order() {
                for (y, row) in g.neighbors().iter().enumerate() {
                    let gy = t.k_perm(e).apply(y);
                    for o in 0..g.num_offsets() {
                        let lhs = g.ext_perm(e).apply(row[o]);
                        let rhs = g.neighbors()[gy][g.offset_perm()[e][o]];
                        assert_eq!(lhs, rhs);
                    }
                }
            }
        }
    }

    #[test]
    fn sides_follow_corners() {
        let t = Tiling::square(3, false);
        let g = t.grid();
        // side 1 runs along c = d - 1 from r = 0 upwards
        let coords: Vec<Coord> = g.side_edge(1).iter().map(|&i| g.coords()[i]).collect();
        assert_eq!(coords, vec![(0, 2), (1, 2), (2, 2)]);
    }
}
