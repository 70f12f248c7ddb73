//! Parameter-sharing bases for equivariant linear maps and the three model
//! symmetries on `Δ × K × N` (regular) or `Δ × N` (scalar) features:
//!
//! * gauge: arbitrary face exchange with independent per-face transformations,
//! * hierarchy: the solid's face permutations with independent per-face transformations,
//! * main: the solid group acting jointly on faces, flags and pixels, plus
//!   independent per-face translations.
//!
//! A basis is the orbit partition of the tensor-square action: every orbit is
//! one shared parameter.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::permgroup::{GeneratedAction, OrbitPartition, Permutation};
use crate::solids::SolidSymmetry;
use crate::tilings::{FeatureKind, Tiling, TilingKind};

/// Largest dense dimension accepted for materialization.
pub const MAX_DENSE_DIM: usize = 4096;

/// Default tolerance for commutation checks.
pub const COMMUTATION_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::Shape(format!(
                "vector of length {} for {} columns",
                x.len(),
                self.cols
            )));
        }
        Ok(self
            .data
            .chunks(self.cols)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Map from matrix cell to shared parameter id.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamBasis {
    rows: usize,
    cols: usize,
    num_params: usize,
    cell_param: Vec<Option<usize>>,
}

impl ParamBasis {
    /// Square basis from an orbit partition of `n × n` cells (row-major).
    pub fn from_partition(n: usize, part: &OrbitPartition) -> ParamBasis {
        assert_eq!(part.degree(), n * n);
        ParamBasis {
            rows: n,
            cols: n,
            num_params: part.num_orbits(),
            cell_param: part.orbit_id().iter().map(|&i| Some(i)).collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn num_params(&self) -> usize {
        self.num_params
    }

    pub fn param(&self, r: usize, c: usize) -> Option<usize> {
        self.cell_param[r * self.cols + c]
    }

    pub fn cell_params(&self) -> &[Option<usize>] {
        &self.cell_param
    }

    /// Cells carrying each parameter, row-major indices.
    pub fn supports(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_params];
        for (cell, p) in self.cell_param.iter().enumerate() {
            if let Some(p) = p {
                out[*p].push(cell);
            }
        }
        out
    }

    fn check_weights(&self, w: &[f64]) -> Result<()> {
        if w.len() != self.num_params {
            return Err(Error::WeightLength {
                expected: self.num_params,
                got: w.len(),
            });
        }
        Ok(())
    }

    pub fn materialize(&self, w: &[f64]) -> Result<DenseMatrix> {
        self.check_weights(w)?;
        let data = self
            .cell_param
            .iter()
            .map(|p| p.map_or(0.0, |p| w[p]))
            .collect();
        DenseMatrix::from_row_major(self.rows, self.cols, data)
    }

    /// Recovers weights from a matrix in the basis span. Fails if the matrix is
    /// not constant (within `tol`) on every parameter's support, or is non-zero
    /// off the support.
    pub fn project(&self, m: &DenseMatrix, tol: f64) -> Result<Vec<f64>> {
        if (m.rows, m.cols) != (self.rows, self.cols) {
            return Err(Error::Shape(format!(
                "{}x{} matrix for a {}x{} basis",
                m.rows, m.cols, self.rows, self.cols
            )));
        }
        let mut w: Vec<Option<f64>> = vec![None; self.num_params];
        for (cell, p) in self.cell_param.iter().enumerate() {
            let v = m.data[cell];
            match p {
                None if v.abs() > tol => {
                    return Err(Error::InvalidArgument(format!(
                        "matrix is non-zero outside the basis support at cell {cell}"
                    )))
                }
                None => {}
                Some(p) => match w[*p] {
                    None => w[*p] = Some(v),
                    Some(prev) if (prev - v).abs() > tol => {
                        return Err(Error::InvalidArgument(format!(
                            "matrix is not constant on the support of parameter {p}"
                        )))
                    }
                    Some(_) => {}
                },
            }
        }
        Ok(w.into_iter().map(|x| x.unwrap_or(0.0)).collect())
    }

    /// `row,col,param_id` lines; unshared cells are omitted.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("row,col,param_id\n");
        for r in 0..self.rows {
            for c in 0..self.cols {
                if let Some(p) = self.param(r, c) {
                    s.push_str(&format!("{r},{c},{p}\n"));
                }
            }
        }
        s
    }
}

pub fn basis_from_action(action: &GeneratedAction) -> ParamBasis {
    ParamBasis::from_partition(action.degree(), &action.tensor_square().all_orbits())
}

/// `L_U` basis; square tilings only.
pub fn lu_basis(tiling: &Tiling, feature: FeatureKind) -> Result<ParamBasis> {
    let action = match feature {
        FeatureKind::Scalar => tiling.scalar_face_action()?,
        FeatureKind::Regular => tiling.regular_face_action()?,
    };
    Ok(basis_from_action(&action))
}

/// Basis for the per-face map under [`Tiling::local_action`] (point group only on hex grids).
pub fn local_basis(tiling: &Tiling, feature: FeatureKind) -> ParamBasis {
    basis_from_action(&tiling.local_action(feature))
}

pub fn lh_faces_basis(sym: &SolidSymmetry) -> ParamBasis {
    basis_from_action(sym.face_action())
}

pub fn lh_flags_basis(sym: &SolidSymmetry) -> ParamBasis {
    basis_from_action(sym.flag_action())
}

/// `w1 I + w2 (1 1^T - I)`; a single parameter when `n = 1`.
pub fn deepsets_basis(n: usize) -> ParamBasis {
    assert!(n >= 1);
    let cell_param = (0..n * n)
        .map(|c| Some(if c / n == c % n { 0 } else { 1 }))
        .collect();
    ParamBasis {
        rows: n,
        cols: n,
        num_params: if n == 1 { 1 } else { 2 },
        cell_param,
    }
}

fn check_compatible(sym: &SolidSymmetry, tiling: &Tiling) -> Result<()> {
    let sides = sym.solid().sides();
    let ok = match tiling.kind() {
        TilingKind::Square => sides == 4,
        TilingKind::Hex => sides == 3,
    };
    if !ok {
        return Err(Error::Unsupported(format!(
            "{:?} tiling on a solid with {sides}-gon faces",
            tiling.kind()
        )));
    }
    if tiling.k_order() != sym.flags_per_face() {
        return Err(Error::Shape(format!(
            "tiling point group of order {} but {} flags per face",
            tiling.k_order(),
            sym.flags_per_face()
        )));
    }
    Ok(())
}

/// Feature permutation induced by a flag permutation `h`: data at
/// `(f, a, p)` moves to `(f', g a, g . p)` where `h` sends the anchor flag of
/// `f` to flag `g` of `f'`. `pix(g)` gives the pixel permutation of `g` on the
/// pixel index set in use (interior or extended).
pub fn field_permutation(
    sym: &SolidSymmetry,
    flag_perm: &Permutation,
    feature: FeatureKind,
    npix: usize,
    pix: impl Fn(usize) -> Permutation,
) -> Permutation {
    let k = sym.point_group();
    let ko = k.order();
    let nf = sym.solid().num_faces();
    let fibers = if feature == FeatureKind::Regular { ko } else { 1 };
    let mut images = vec![0; nf * fibers * npix];
    let pixperms: Vec<Permutation> = (0..ko).map(pix).collect();
    for f in 0..nf {
        let base = flag_perm.apply(f * ko);
        let (f2, g) = (base / ko, base % ko);
        let pp = &pixperms[g];
        for a in 0..fibers {
            let a2 = if fibers == 1 { 0 } else { k.mul(g, a) };
            debug_assert!(fibers == 1 || flag_perm.apply(f * ko + a) == f2 * ko + a2);
            for p in 0..npix {
                images[(f * fibers + a) * npix + p] = (f2 * fibers + a2) * npix + pp.apply(p);
            }
        }
    }
    Permutation::from_images(images).expect("field permutation is a bijection")
}

/// `β(h)` on interior pixels.
pub fn beta(
    sym: &SolidSymmetry,
    tiling: &Tiling,
    feature: FeatureKind,
    flag_perm: &Permutation,
) -> Result<Permutation> {
    check_compatible(sym, tiling)?;
    Ok(field_permutation(sym, flag_perm, feature, tiling.num_pixels(), |g| {
        tiling.k_perm(g).clone()
    }))
}

/// The solid part of ρ*: one `β(h)` per solid generator.
pub fn rho_solid(sym: &SolidSymmetry, tiling: &Tiling, feature: FeatureKind) -> Result<GeneratedAction> {
    check_compatible(sym, tiling)?;
    let gens = sym
        .flag_action()
        .gens()
        .iter()
        .map(|h| beta(sym, tiling, feature, h))
        .collect::<Result<Vec<_>>>()?;
    GeneratedAction::new(dim(sym, tiling, feature), gens)
}

/// ρ*: the solid generators followed by each face's translation generators, in face order.
pub fn rho_star(sym: &SolidSymmetry, tiling: &Tiling, feature: FeatureKind) -> Result<GeneratedAction> {
    let solid = rho_solid(sym, tiling, feature)?;
    let mut gens = solid.into_gens();
    let nf = sym.solid().num_faces();
    let id_fib = Permutation::identity(tiling.fibers(feature));
    let block = tiling.fibers(feature) * tiling.num_pixels();
    for f in 0..nf {
        for t in tiling.t_gens() {
            gens.push(on_face(nf, block, f, &Permutation::tensor_product(&id_fib, t)));
        }
    }
    GeneratedAction::new(nf * block, gens)
}

fn on_face(nf: usize, block: usize, f: usize, p: &Permutation) -> Permutation {
    let parts: Vec<Permutation> = (0..nf)
        .map(|i| if i == f { p.clone() } else { Permutation::identity(block) })
        .collect();
    Permutation::direct_sum(&parts)
}

fn local_on_face0(sym: &SolidSymmetry, tiling: &Tiling, feature: FeatureKind) -> Vec<Permutation> {
    let nf = sym.solid().num_faces();
    let local = tiling.local_action(feature);
    local
        .gens()
        .iter()
        .map(|u| on_face(nf, local.degree(), 0, u))
        .collect()
}

/// Gauge symmetry: adjacent face transpositions (generating `Sym(Δ)`) then face-0 `U` generators.
pub fn rho_gauge(sym: &SolidSymmetry, tiling: &Tiling, feature: FeatureKind) -> Result<GeneratedAction> {
    check_compatible(sym, tiling)?;
    let nf = sym.solid().num_faces();
    let block = Permutation::identity(tiling.fibers(feature) * tiling.num_pixels());
    let mut gens: Vec<Permutation> = (0..nf.saturating_sub(1))
        .map(|i| {
            let t = Permutation::from_cycles(nf, &[&[i, i + 1]]).expect("valid transposition");
            Permutation::tensor_product(&t, &block)
        })
        .collect();
    gens.extend(local_on_face0(sym, tiling, feature));
    GeneratedAction::new(dim(sym, tiling, feature), gens)
}

/// Hierarchy symmetry: the solid's face permutations then face-0 `U` generators.
pub fn rho_hierarchy(
    sym: &SolidSymmetry,
    tiling: &Tiling,
    feature: FeatureKind,
) -> Result<GeneratedAction> {
    check_compatible(sym, tiling)?;
    let block = Permutation::identity(tiling.fibers(feature) * tiling.num_pixels());
    let mut gens: Vec<Permutation> = sym
        .face_action()
        .gens()
        .iter()
        .map(|p| Permutation::tensor_product(p, &block))
        .collect();
    gens.extend(local_on_face0(sym, tiling, feature));
    GeneratedAction::new(dim(sym, tiling, feature), gens)
}

pub fn dim(sym: &SolidSymmetry, tiling: &Tiling, feature: FeatureKind) -> usize {
    sym.solid().num_faces() * tiling.fibers(feature) * tiling.num_pixels()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Gauge,
    Hierarchy,
    Main,
}

impl Model {
    pub const ALL: [Model; 3] = [Model::Gauge, Model::Hierarchy, Model::Main];
}

impl std::str::FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gauge" => Ok(Model::Gauge),
            "hierarchy" => Ok(Model::Hierarchy),
            "main" => Ok(Model::Main),
            other => Err(Error::InvalidArgument(format!("unknown model '{other}'"))),
        }
    }
}

/// The assembled form `L_H ⊗ 1 1^T + I ⊗ L_U` of one model.
///
/// The outer basis acts on faces (gauge: exchangeable, hierarchy: solid face
/// orbits) or, for the main model with regular features, on flags. Each outer
/// cell is broadcast over a block of `block × block` entries.
#[derive(Clone, Debug)]
pub struct AssembledMap {
    model: Model,
    feature: FeatureKind,
    outer: ParamBasis,
    local: ParamBasis,
    block: usize,
    num_faces: usize,
    action: GeneratedAction,
}

impl AssembledMap {
    pub fn new(model: Model, sym: &SolidSymmetry, tiling: &Tiling, feature: FeatureKind) -> Result<Self> {
        check_compatible(sym, tiling)?;
        let nf = sym.solid().num_faces();
        let n = tiling.num_pixels();
        let fib = tiling.fibers(feature);
        let (outer, block, action) = match model {
            Model::Gauge => (deepsets_basis(nf), fib * n, rho_gauge(sym, tiling, feature)?),
            Model::Hierarchy => (lh_faces_basis(sym), fib * n, rho_hierarchy(sym, tiling, feature)?),
            Model::Main => match feature {
                FeatureKind::Regular => (lh_flags_basis(sym), n, rho_star(sym, tiling, feature)?),
                FeatureKind::Scalar => (lh_faces_basis(sym), n, rho_star(sym, tiling, feature)?),
            },
        };
        let total = nf * fib * n;
        if total > MAX_DENSE_DIM {
            return Err(Error::Unsupported(format!(
                "dense dimension {total} exceeds {MAX_DENSE_DIM}"
            )));
        }
        Ok(AssembledMap {
            model,
            feature,
            outer,
            local: local_basis(tiling, feature),
            block,
            num_faces: nf,
            action,
        })
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn feature(&self) -> FeatureKind {
        self.feature
    }

    pub fn dim(&self) -> usize {
        self.outer.rows() * self.block
    }

    pub fn lh_basis(&self) -> &ParamBasis {
        &self.outer
    }

    pub fn lu_basis(&self) -> &ParamBasis {
        &self.local
    }

    pub fn num_lh(&self) -> usize {
        self.outer.num_params()
    }

    pub fn num_lu(&self) -> usize {
        self.local.num_params()
    }

    /// The symmetry this map is built to commute with.
    pub fn action(&self) -> &GeneratedAction {
        &self.action
    }

    /// Parameter count of the full equivariant space (orbits of the model's action).
    pub fn orbit_param_count(&self) -> usize {
        self.action.tensor_square().all_orbits().num_orbits()
    }

    pub fn assemble(&self, lh: &[f64], lu: &[f64]) -> Result<DenseMatrix> {
        let outer = self.outer.materialize(lh)?;
        let local = self.local.materialize(lu)?;
        let n = self.dim();
        let mut m = DenseMatrix::zeros(n, n);
        let b = self.block;
        for r in 0..n {
            let or = r / b;
            for c in 0..n {
                m.data[r * n + c] = outer.get(or, c / b);
            }
        }
        let l = local.rows();
        for f in 0..self.num_faces {
            for i in 0..l {
                for j in 0..l {
                    m.data[(f * l + i) * n + f * l + j] += local.get(i, j);
                }
            }
        }
        Ok(m)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GeneratorCheck {
    pub generator: usize,
    pub max_abs_diff: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CommutationReport {
    pub generators: Vec<GeneratorCheck>,
    pub max_abs_diff: f64,
    pub tol: f64,
    pub pass: bool,
    pub note: &'static str,
}

/// Checks `M P(g) = P(g) M` for each generator, where `P(g) e_i = e_{g(i)}`.
pub fn verify_commutation(m: &DenseMatrix, action: &GeneratedAction, tol: f64) -> Result<CommutationReport> {
    let n = action.degree();
    if m.rows != n || m.cols != n {
        return Err(Error::Shape(format!(
            "{}x{} matrix against an action of degree {n}",
            m.rows, m.cols
        )));
    }
    let mut generators = Vec::new();
    for (gi, p) in action.gens().iter().enumerate() {
        let inv = p.inverse();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            let pi = inv.apply(i);
            for j in 0..n {
                // (M P)[i][j] = M[i][p(j)],  (P M)[i][j] = M[p^-1(i)][j]
                let d = (m.get(i, p.apply(j)) - m.get(pi, j)).abs();
                worst = worst.max(d);
            }
        }
        generators.push(GeneratorCheck {
            generator: gi,
            max_abs_diff: worst,
            pass: worst <= tol,
        });
    }
    let max_abs_diff = generators.iter().map(|g| g.max_abs_diff).fold(0.0, f64::max);
    Ok(CommutationReport {
        pass: generators.iter().all(|g| g.pass),
        generators,
        max_abs_diff,
        tol,
        note: "commuting with every generator implies commuting with the generated group",
    })
}

/// Restricts a solid symmetry to the subgroup generated by vertex permutations.
pub fn restrict_orientation(sym: &SolidSymmetry, subgroup_gens: &[Permutation]) -> Result<SolidSymmetry> {
    sym.restrict(subgroup_gens)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solids::{Flavor, SolidKind};

    fn cube() -> SolidSymmetry {
        SolidSymmetry::new(SolidKind::Cube, Flavor::Chiral)
    }

    #[test]
    fn basic_bases() {
        assert_eq!(basis_from_action(&GeneratedAction::trivial(3)).num_params(), 9);
        assert_eq!(lh_faces_basis(&cube()).num_params(), 3);
        assert_eq!(lh_flags_basis(&cube()).num_params(), 24);
        let c4 = GeneratedAction::new(4, vec![Permutation::from_cycles(4, &[&[0, 1, 2, 3]]).unwrap()]).unwrap();
        assert_eq!(basis_from_action(&c4).num_params(), 4);
        assert_eq!(deepsets_basis(6).num_params(), 2);
        assert_eq!(deepsets_basis(1).num_params(), 1);
        assert_eq!(deepsets_basis(4).materialize(&[1.0, 0.0]).unwrap(), DenseMatrix::identity(4));
    }

    #[test]
    fn lu_counts() {
        let t = Tiling::square(3, false);
        let reg = lu_basis(&t, FeatureKind::Regular).unwrap();
        assert_eq!((reg.rows(), reg.num_params()), (36, 36));
        assert_eq!(lu_basis(&t, FeatureKind::Scalar).unwrap().num_params(), 3);
        assert_eq!(lu_basis(&Tiling::square(1, false), FeatureKind::Scalar).unwrap().num_params(), 1);
        assert!(matches!(
            lu_basis(&Tiling::hex(3, false), FeatureKind::Scalar),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn rho_star_degree_and_identity() {
        let sym = cube();
        let t = Tiling::square(3, false);
        let a = rho_star(&sym, &t, FeatureKind::Regular).unwrap();
        assert_eq!(a.degree(), 216);
        let id = beta(&sym, &t, FeatureKind::Regular, &Permutation::identity(24)).unwrap();
        assert!(id.is_identity());
    }

    #[test]
    fn assembled_zero_and_local_only() {
        let sym = cube();
        let t = Tiling::square(2, false);
        let m = AssembledMap::new(Model::Main, &sym, &t, FeatureKind::Regular).unwrap();
        let z = m.assemble(&vec![0.0; m.num_lh()], &vec![0.0; m.num_lu()]).unwrap();
        assert!(z.data().iter().all(|&x| x == 0.0));
        let lu: Vec<f64> = (0..m.num_lu()).map(|i| i as f64 + 1.0).collect();
        let a = m.assemble(&vec![0.0; m.num_lh()], &lu).unwrap();
        let l = m.lu_basis().materialize(&lu).unwrap();
        let n = m.dim();
        let b = l.rows();
        for r in 0..n {
            for c in 0..n {
                let expect = if r / b == c / b { l.get(r % b, c % b) } else { 0.0 };
                assert_eq!(a.get(r, c), expect);
            }
        }
    }

    #[test]
    fn commutation_detects_violations() {
        let sym = cube();
        let b = lh_faces_basis(&sym);
        let m = b.materialize(&[0.3, -1.2, 2.5]).unwrap();
        assert!(verify_commutation(&m, sym.face_action(), 1e-12).unwrap().pass);
        assert_eq!(
            verify_commutation(&DenseMatrix::identity(6), sym.face_action(), 0.0)
                .unwrap()
                .max_abs_diff,
            0.0
        );
        // swap two entries of different orbits
        let mut bad = m.clone();
        let (x, y) = (bad.get(0, 0), bad.get(0, 1));
        bad.set(0, 0, y);
        bad.set(0, 1, x);
        assert!(!verify_commutation(&bad, sym.face_action(), 1e-12).unwrap().pass);
    }

    #[test]
    fn projection_roundtrip() {
        let b = lh_faces_basis(&cube());
        let w = [1.5, -2.0, 0.25];
        assert_eq!(b.project(&b.materialize(&w).unwrap(), 0.0).unwrap(), w);
        let mut m = b.materialize(&w).unwrap();
        m.set(0, 0, 9.0);
        assert!(b.project(&m, 1e-12).is_err());
    }

    #[test]
    fn weight_length_is_checked() {
        let b = deepsets_basis(3);
        assert!(matches!(
            b.materialize(&[1.0]),
            Err(Error::WeightLength { expected: 2, got: 1 })
        ));
    }
}
