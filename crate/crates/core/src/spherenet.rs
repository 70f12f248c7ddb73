//! Forward passes on pixelized spheres: group convolution, the sphere layer
//! (pool each grid, apply an `L_H` map across grids, broadcast back), pooling,
//! upsampling, normalization and the classification / U-Net graphs.
//!
//! Regular fields carry one fiber per flag of each face; the fiber index is the
//! point group element of the flag. A group convolution kernel `W` is shared
//! across fibers by rotating it:
//!
//! ```text
//! out[b][y] = sum_a sum_o W[b^-1 a][b^-1 o] in[a][y + o]
//! ```
//!
//! and lifts scalar input with `W[b^-1 o]`.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::equivmaps::{field_permutation, lh_faces_basis, lh_flags_basis, ParamBasis};
use crate::error::{Error, Result};
use crate::field::FeatureField;
use crate::padding::{PadMode, PadPlan, PaddingGraph};
use crate::permgroup::Permutation;
use crate::solids::{Flavor, SolidKind, SolidSymmetry};
use crate::tilings::{ExtGrid, FeatureKind, Tiling, TilingKind};

/// A solid symmetry with one face tiling, its halo grid and padding plans.
#[derive(Clone, Debug)]
pub struct SphereGrid {
    sym: SolidSymmetry,
    tiling: Tiling,
    grid: ExtGrid,
    scalar_graph: PaddingGraph,
    regular_graph: PaddingGraph,
    scalar_pad: PadPlan,
    regular_pad: PadPlan,
    lh_flags: ParamBasis,
    lh_faces: ParamBasis,
}

impl SphereGrid {
    pub fn new(kind: SolidKind, flavor: Flavor, width: usize) -> Result<SphereGrid> {
        SphereGrid::from_symmetry(SolidSymmetry::new(kind, flavor), width)
    }

    pub fn from_symmetry(sym: SolidSymmetry, width: usize) -> Result<SphereGrid> {
        if width == 0 {
            return Err(Error::InvalidArgument("width must be at least 1".into()));
        }
        let tiling = Tiling::for_sides(sym.solid().sides(), width, sym.flavor() == Flavor::Full)?;
        let grid = tiling.grid();
        let scalar_graph = PaddingGraph::scalar(&sym, &grid);
        let regular_graph = PaddingGraph::regular(&sym, &grid)?;
        let scalar_pad = PadPlan::from_graph(&scalar_graph, &grid);
        let regular_pad = PadPlan::from_graph(&regular_graph, &grid);
        Ok(SphereGrid {
            lh_flags: lh_flags_basis(&sym),
            lh_faces: lh_faces_basis(&sym),
            sym,
            tiling,
            grid,
            scalar_graph,
            regular_graph,
            scalar_pad,
            regular_pad,
        })
    }

    pub fn sym(&self) -> &SolidSymmetry {
        &self.sym
    }

    pub fn tiling(&self) -> &Tiling {
        &self.tiling
    }

    pub fn grid(&self) -> &ExtGrid {
        &self.grid
    }

    pub fn width(&self) -> usize {
        self.tiling.width()
    }

    pub fn num_faces(&self) -> usize {
        self.sym.solid().num_faces()
    }

    pub fn k_order(&self) -> usize {
        self.tiling.k_order()
    }

    pub fn fibers(&self, feature: FeatureKind) -> usize {
        self.tiling.fibers(feature)
    }

    pub fn padding_graph(&self, feature: FeatureKind) -> &PaddingGraph {
        match feature {
            FeatureKind::Scalar => &self.scalar_graph,
            FeatureKind::Regular => &self.regular_graph,
        }
    }

    /// `L_H` basis on the pooled grids: flags for regular fields, faces for scalar ones.
    pub fn lh_basis(&self, feature: FeatureKind) -> &ParamBasis {
        match feature {
            FeatureKind::Scalar => &self.lh_faces,
            FeatureKind::Regular => &self.lh_flags,
        }
    }

    pub fn zeros(&self, feature: FeatureKind, channels: usize) -> FeatureField {
        FeatureField::zeros(
            feature,
            channels,
            self.num_faces(),
            self.fibers(feature),
            self.tiling.num_pixels(),
        )
    }

    pub fn random<R: Rng>(&self, rng: &mut R, feature: FeatureKind, channels: usize) -> FeatureField {
        FeatureField::random(
            rng,
            feature,
            channels,
            self.num_faces(),
            self.fibers(feature),
            self.tiling.num_pixels(),
        )
    }

    pub fn check_field(&self, field: &FeatureField) -> Result<()> {
        let pixels = if field.is_padded() {
            self.grid.len()
        } else {
            self.tiling.num_pixels()
        };
        if field.faces() != self.num_faces()
            || field.fibers() != self.fibers(field.feature())
            || field.pixels() != pixels
        {
            return Err(Error::Shape(format!(
                "field {}x{}x{} does not match {} faces, {} fibers, {} pixels",
                field.faces(),
                field.fibers(),
                field.pixels(),
                self.num_faces(),
                self.fibers(field.feature()),
                pixels
            )));
        }
        Ok(())
    }

    /// Equivariant padding.
    pub fn pad(&self, field: &FeatureField) -> Result<FeatureField> {
        self.pad_with(field, PadMode::Graph)
    }

    pub fn pad_with(&self, field: &FeatureField, mode: PadMode) -> Result<FeatureField> {
        self.check_field(field)?;
        let nodes = field.faces() * field.fibers();
        match mode {
            PadMode::Graph => match field.feature() {
                FeatureKind::Scalar => self.scalar_pad.pad(field),
                FeatureKind::Regular => self.regular_pad.pad(field),
            },
            PadMode::Circular => PadPlan::circular(&self.grid, nodes)?.pad(field),
            PadMode::Zero => PadPlan::zero(&self.grid, nodes).pad(field),
        }
    }

    /// Field permutation of a solid element given by its flag permutation,
    /// on interior or extended pixels.
    pub fn field_perm(&self, feature: FeatureKind, flag_perm: &Permutation, padded: bool) -> Permutation {
        if padded {
            field_permutation(&self.sym, flag_perm, feature, self.grid.len(), |g| {
                self.grid.ext_perm(g).clone()
            })
        } else {
            field_permutation(&self.sym, flag_perm, feature, self.tiling.num_pixels(), |g| {
                self.tiling.k_perm(g).clone()
            })
        }
    }

    /// Applies a solid symmetry (given by its flag permutation) to a field.
    pub fn transform(&self, field: &FeatureField, flag_perm: &Permutation) -> Result<FeatureField> {
        self.check_field(field)?;
        field.permuted(&self.field_perm(field.feature(), flag_perm, field.is_padded()))
    }

    /// Circularly translates the grids of face `f` by `(dr, dc)` (square grids only).
    pub fn translate_face(&self, field: &FeatureField, f: usize, dr: i64, dc: i64) -> Result<FeatureField> {
        self.check_field(field)?;
        if self.tiling.kind() != TilingKind::Square || field.is_padded() {
            return Err(Error::Unsupported(
                "translations act on unpadded square grids only".into(),
            ));
        }
        let d = self.width() as i64;
        let mut out = field.clone();
        for c in 0..field.channels() {
            for a in 0..field.fibers() {
                for (p, &(r, cc)) in self.tiling.pixels().iter().enumerate() {
                    let q = self
                        .tiling
                        .pixel_index(((r + dr).rem_euclid(d), (cc + dc).rem_euclid(d)))
                        .expect("wrapped pixel");
                    out.set(c, f, a, q, field.get(c, f, a, p));
                }
            }
        }
        Ok(out)
    }
}

/// Group convolution weights, `[out][in][relative fiber][offset]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvKernel {
    pub in_channels: usize,
    pub out_channels: usize,
    pub input: FeatureKind,
    pub kernel_size: usize,
    pub weights: Vec<f64>,
}

impl ConvKernel {
    pub fn num_weights(
        grid: &SphereGrid,
        input: FeatureKind,
        in_channels: usize,
        out_channels: usize,
        kernel_size: usize,
    ) -> Result<usize> {
        Ok(out_channels * in_channels * grid.fibers(input) * num_offsets(grid, kernel_size)?)
    }

    pub fn new(
        grid: &SphereGrid,
        input: FeatureKind,
        in_channels: usize,
        out_channels: usize,
        kernel_size: usize,
        weights: Vec<f64>,
    ) -> Result<ConvKernel> {
        let expected = ConvKernel::num_weights(grid, input, in_channels, out_channels, kernel_size)?;
        if weights.len() != expected {
            return Err(Error::WeightLength {
                expected,
                got: weights.len(),
            });
        }
        Ok(ConvKernel {
            in_channels,
            out_channels,
            input,
            kernel_size,
            weights,
        })
    }

    pub fn random<R: Rng>(
        rng: &mut R,
        grid: &SphereGrid,
        input: FeatureKind,
        in_channels: usize,
        out_channels: usize,
        kernel_size: usize,
    ) -> Result<ConvKernel> {
        let n = ConvKernel::num_weights(grid, input, in_channels, out_channels, kernel_size)?;
        let w = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        ConvKernel::new(grid, input, in_channels, out_channels, kernel_size, w)
    }
}

fn num_offsets(grid: &SphereGrid, kernel_size: usize) -> Result<usize> {
    match kernel_size {
        1 => Ok(1),
        3 => Ok(grid.grid.num_offsets()),
        k => Err(Error::InvalidArgument(format!("kernel size {k}; expected 1 or 3"))),
    }
}

/// Group convolution; returns a regular field on interior pixels.
pub fn group_conv(grid: &SphereGrid, field: &FeatureField, kernel: &ConvKernel) -> Result<FeatureField> {
    grid.check_field(field)?;
    if field.channels() != kernel.in_channels {
        return Err(Error::Shape(format!(
            "kernel expects {} input channels, field has {}",
            kernel.in_channels,
            field.channels()
        )));
    }
    if field.feature() != kernel.input {
        return Err(Error::Shape(format!(
            "kernel expects {:?} input, field is {:?}",
            kernel.input,
            field.feature()
        )));
    }
    if kernel.kernel_size > 1 && !field.is_padded() {
        return Err(Error::Shape(format!(
            "kernel size {} needs a padded input",
            kernel.kernel_size
        )));
    }
    let k = grid.tiling.point_group();
    let ko = k.order();
    let fib_in = field.fibers();
    let no = num_offsets(grid, kernel.kernel_size)?;
    let npix = grid.tiling.num_pixels();
    let ci_n = kernel.in_channels;
    let co_n = kernel.out_channels;
    let g = &grid.grid;

    // Rearranged kernels: wb[b][co][ci][a][o] = W[co][ci][rel(b, a)][b^-1 o].
    let mut wb = vec![0.0; ko * co_n * ci_n * fib_in * no];
    for b in 0..ko {
        let binv = k.inv(b);
        for co in 0..co_n {
            for ci in 0..ci_n {
                for a in 0..fib_in {
                    let rel = if fib_in == 1 { 0 } else { k.mul(binv, a) };
                    for o in 0..no {
                        let src = g.offset_perm()[binv][o];
                        let dst = (((b * co_n + co) * ci_n + ci) * fib_in + a) * no + o;
                        wb[dst] = kernel.weights[((co * ci_n + ci) * fib_in + rel) * no + src];
                    }
                }
            }
        }
    }

    let nbr: Vec<usize> = if no == 1 {
        (0..npix).collect()
    } else {
        g.neighbors().iter().flatten().copied().collect()
    };
    let mut out = grid.zeros(FeatureKind::Regular, co_n);
    let in_pix = field.pixels();
    let data = field.data();
    let nf = grid.num_faces();
    let mut patch = vec![0.0; ci_n * fib_in * no];
    for f in 0..nf {
        for y in 0..npix {
            for ci in 0..ci_n {
                for a in 0..fib_in {
                    let base = ((ci * nf + f) * fib_in + a) * in_pix;
                    for o in 0..no {
                        patch[(ci * fib_in + a) * no + o] = data[base + nbr[y * no + o]];
                    }
                }
            }
            for b in 0..ko {
                for co in 0..co_n {
                    let w = &wb[(b * co_n + co) * patch.len()..(b * co_n + co + 1) * patch.len()];
                    let v: f64 = w.iter().zip(&patch).map(|(x, y)| x * y).sum();
                    out.set(co, f, b, y, v);
                }
            }
        }
    }
    Ok(out)
}

/// Mean of each grid's interior pixels: `[channel][face * fibers + fiber]`.
pub fn grid_means(grid: &SphereGrid, field: &FeatureField) -> Vec<Vec<f64>> {
    let n = grid.tiling.num_pixels();
    let nodes = field.faces() * field.fibers();
    (0..field.channels())
        .map(|c| {
            let ch = field.channel(c);
            (0..nodes)
                .map(|node| {
                    let start = node * field.pixels();
                    ch[start..start + n].iter().sum::<f64>() / n as f64
                })
                .collect()
        })
        .collect()
}

/// The global half of a sphere layer: weights `[out][in][L_H param]`.
#[derive(Clone, Debug, PartialEq)]
pub struct GlobalWeights {
    pub in_channels: usize,
    pub out_channels: usize,
    pub weights: Vec<f64>,
}

impl GlobalWeights {
    pub fn num_weights(grid: &SphereGrid, feature: FeatureKind, gin: usize, gout: usize) -> usize {
        gin * gout * grid.lh_basis(feature).num_params()
    }
}

/// Channel split for the global path: `floor(fraction * channels)`.
pub fn global_channels(fraction: f64, channels: usize) -> usize {
    (fraction * channels as f64 + 1e-9).floor() as usize
}

/// Group convolution plus, on the first `lh.out_channels` output channels,
/// `Broadcast ∘ L_H ∘ Pool` of the first `lh.in_channels` input channels.
pub fn sphere_layer(
    grid: &SphereGrid,
    field: &FeatureField,
    lh: &GlobalWeights,
    conv: &ConvKernel,
) -> Result<FeatureField> {
    let mut out = group_conv(grid, field, conv)?;
    if lh.in_channels == 0 || lh.out_channels == 0 {
        return Ok(out);
    }
    if lh.in_channels > field.channels() || lh.out_channels > out.channels() {
        return Err(Error::Shape(format!(
            "global path {}->{} on a {}->{} layer",
            lh.in_channels,
            lh.out_channels,
            field.channels(),
            out.channels()
        )));
    }
    if field.feature() != FeatureKind::Regular {
        return Err(Error::Unsupported("sphere layers act on regular fields".into()));
    }
    let basis = grid.lh_basis(FeatureKind::Regular);
    let np = basis.num_params();
    let expected = lh.in_channels * lh.out_channels * np;
    if lh.weights.len() != expected {
        return Err(Error::WeightLength {
            expected,
            got: lh.weights.len(),
        });
    }
    let pooled = grid_means(grid, field);
    let nodes = basis.rows();
    let npix = out.pixels();
    let cells = basis.cell_params();
    for co in 0..lh.out_channels {
        let mut acc = vec![0.0; nodes];
        for ci in 0..lh.in_channels {
            let w = &lh.weights[(co * lh.in_channels + ci) * np..(co * lh.in_channels + ci + 1) * np];
            for (i, a) in acc.iter_mut().enumerate() {
                for (j, x) in pooled[ci].iter().enumerate() {
                    if let Some(p) = cells[i * nodes + j] {
                        *a += w[p] * x;
                    }
                }
            }
        }
        let ch = co * nodes * npix;
        for (node, v) in acc.iter().enumerate() {
            for x in &mut out.data_mut()[ch + node * npix..ch + (node + 1) * npix] {
                *x += v;
            }
        }
    }
    Ok(out)
}

/// For each coarse pixel, the fine pixels it pools over.
pub fn pool_supports(tiling: &Tiling) -> Result<(usize, Vec<Vec<usize>>)> {
    let w = tiling.width();
    match tiling.kind() {
        TilingKind::Square => {
            if !w.is_multiple_of(2) {
                return Err(Error::InvalidArgument(format!(
                    "2x2 pooling needs an even width, got {w}"
                )));
            }
            let coarse = Tiling::square(w / 2, false);
            let sup = coarse
                .pixels()
                .iter()
                .map(|&(r, c)| {
                    [(0, 0), (0, 1), (1, 0), (1, 1)]
                        .iter()
                        .map(|&(dr, dc)| tiling.pixel_index((2 * r + dr, 2 * c + dc)).expect("fine pixel"))
                        .collect()
                })
                .collect();
            Ok((w / 2, sup))
        }
        TilingKind::Hex => {
            if w % 2 != 1 {
                return Err(Error::InvalidArgument(format!(
                    "hexagonal pooling needs an odd width, got {w}"
                )));
            }
            let coarse = Tiling::hex(w.div_ceil(2), false);
            let g = tiling.grid();
            let sup = coarse
                .pixels()
                .iter()
                .map(|&(i, j)| {
                    g.offsets()
                        .iter()
                        .filter_map(|&(di, dj)| tiling.pixel_index((2 * i + di, 2 * j + dj)))
                        .collect()
                })
                .collect();
            Ok((w.div_ceil(2), sup))
        }
    }
}

/// Max pooling: 2×2 blocks on square grids, centre plus one ring on hex grids.
pub fn pool(fine: &SphereGrid, coarse: &SphereGrid, field: &FeatureField) -> Result<FeatureField> {
    fine.check_field(field)?;
    if field.is_padded() {
        return Err(Error::Shape("pooling expects an unpadded field".into()));
    }
    let (cw, sup) = pool_supports(&fine.tiling)?;
    if coarse.width() != cw || coarse.sym.kind() != fine.sym.kind() {
        return Err(Error::Shape(format!("pooled width is {cw}, target grid has {}", coarse.width())));
    }
    let mut out = coarse.zeros(field.feature(), field.channels());
    let n_in = field.pixels();
    let n_out = sup.len();
    for (dst, src) in out.data_mut().chunks_mut(n_out).zip(field.data().chunks(n_in)) {
        for (d, s) in dst.iter_mut().zip(&sup) {
            *d = s.iter().map(|&p| src[p]).fold(f64::NEG_INFINITY, f64::max);
        }
    }
    Ok(out)
}

/// Nearest-neighbour 2× upsampling of square grids.
pub fn upsample(coarse: &SphereGrid, fine: &SphereGrid, field: &FeatureField) -> Result<FeatureField> {
    coarse.check_field(field)?;
    if coarse.tiling.kind() != TilingKind::Square || fine.width() != 2 * coarse.width() {
        return Err(Error::Unsupported(
            "upsampling doubles square grids only".into(),
        ));
    }
    let mut out = fine.zeros(field.feature(), field.channels());
    let n_in = field.pixels();
    let src_of: Vec<usize> = fine
        .tiling
        .pixels()
        .iter()
        .map(|&(r, c)| coarse.tiling.pixel_index((r / 2, c / 2)).expect("coarse pixel"))
        .collect();
    let n_out = src_of.len();
    for (dst, src) in out.data_mut().chunks_mut(n_out).zip(field.data().chunks(n_in)) {
        for (d, &s) in dst.iter_mut().zip(&src_of) {
            *d = src[s];
        }
    }
    Ok(out)
}

pub fn relu(field: &FeatureField) -> FeatureField {
    let mut out = field.clone();
    for x in out.data_mut() {
        *x = x.max(0.0);
    }
    out
}

/// Per-channel fixed statistics and affine parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchNormParams {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub eps: f64,
}

pub fn batchnorm_inference(field: &FeatureField, p: &BatchNormParams) -> Result<FeatureField> {
    let c = field.channels();
    if [p.mean.len(), p.var.len(), p.gamma.len(), p.beta.len()] != [c; 4] {
        return Err(Error::Shape(format!("batchnorm parameters for {c} channels expected")));
    }
    let mut out = field.clone();
    let n = field.channel_len();
    for ch in 0..c {
        let scale = p.gamma[ch] / (p.var[ch] + p.eps).sqrt();
        for x in &mut out.data_mut()[ch * n..(ch + 1) * n] {
            *x = (*x - p.mean[ch]) * scale + p.beta[ch];
        }
    }
    Ok(out)
}

/// Mean over faces, fibers and pixels: one value per channel.
pub fn global_pool(field: &FeatureField) -> Vec<f64> {
    (0..field.channels())
        .map(|c| {
            let ch = field.channel(c);
            ch.iter().sum::<f64>() / ch.len() as f64
        })
        .collect()
}

/// Mean over fibers; yields a scalar field.
pub fn fiber_pool(field: &FeatureField) -> FeatureField {
    let (fib, n) = (field.fibers(), field.pixels());
    let mut out = FeatureField::zeros(FeatureKind::Scalar, field.channels(), field.faces(), 1, n)
        .with_padded(field.is_padded());
    for (dst, src) in out.data_mut().chunks_mut(n).zip(field.data().chunks(fib * n)) {
        for chunk in src.chunks(n) {
            for (d, s) in dst.iter_mut().zip(chunk) {
                *d += s / fib as f64;
            }
        }
    }
    out
}

/// Per-pixel linear map across channels with bias, shared by every fiber.
pub fn pointwise(field: &FeatureField, out_channels: usize, weights: &[f64]) -> Result<FeatureField> {
    let ci_n = field.channels();
    let expected = out_channels * ci_n + out_channels;
    if weights.len() != expected {
        return Err(Error::WeightLength {
            expected,
            got: weights.len(),
        });
    }
    let n = field.channel_len();
    let mut data = vec![0.0; out_channels * n];
    for co in 0..out_channels {
        let bias = weights[out_channels * ci_n + co];
        let dst = &mut data[co * n..(co + 1) * n];
        dst.fill(bias);
        for ci in 0..ci_n {
            let w = weights[co * ci_n + ci];
            for (d, s) in dst.iter_mut().zip(field.channel(ci)) {
                *d += w * s;
            }
        }
    }
    Ok(
        FeatureField::from_data(field.feature(), out_channels, field.faces(), field.fibers(), field.pixels(), data)?
            .with_padded(field.is_padded()),
    )
}

/// One step of a network graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum LayerSpec {
    Pad,
    Conv {
        in_channels: usize,
        out_channels: usize,
        kernel_size: usize,
    },
    Sphere {
        in_channels: usize,
        out_channels: usize,
        kernel_size: usize,
        global_in: usize,
        global_out: usize,
    },
    BatchNorm {
        channels: usize,
    },
    Relu,
    /// Identity at inference.
    Dropout {
        rate: f64,
    },
    MaxPool,
    Upsample,
    /// Checks the channel count and the number of pooling steps taken.
    AssertShape {
        channels: usize,
        pool_level: usize,
    },
    GlobalPool,
    FiberPool,
    Pointwise {
        in_channels: usize,
        out_channels: usize,
    },
    /// Runs the inner layers and concatenates their output with the block's input.
    UBlock {
        layers: Vec<LayerSpec>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub name: String,
    pub input_channels: usize,
    pub layers: Vec<LayerSpec>,
}

fn bn_relu_drop(out: &mut Vec<LayerSpec>, channels: usize, rate: f64) {
    out.push(LayerSpec::BatchNorm { channels });
    out.push(LayerSpec::Relu);
    out.push(LayerSpec::Dropout { rate });
}

fn conv(i: usize, o: usize, k: usize) -> LayerSpec {
    LayerSpec::Conv {
        in_channels: i,
        out_channels: o,
        kernel_size: k,
    }
}

fn sphere(c: usize, fraction: f64) -> LayerSpec {
    let g = global_channels(fraction, c);
    LayerSpec::Sphere {
        in_channels: c,
        out_channels: c,
        kernel_size: 3,
        global_in: g,
        global_out: g,
    }
}

impl NetworkSpec {
    /// Classification network: three pooling stages, `C` base channels and
    /// global fraction `F`; input is one scalar channel.
    ///
    /// A padding step is inserted before the third stage's 3×3 convolution,
    /// which every other 3×3 convolution also has.
    pub fn classifier(c: usize, fraction: f64, num_classes: usize, dropout: f64) -> NetworkSpec {
        let mut l = Vec::new();
        l.push(LayerSpec::Pad);
        l.push(conv(1, c, 3));
        l.push(LayerSpec::AssertShape {
            channels: c,
            pool_level: 0,
        });
        bn_relu_drop(&mut l, c, dropout);
        let mut ch = c;
        for stage in 0..4 {
            if stage > 0 {
                l.push(LayerSpec::MaxPool);
                l.push(conv(ch, 2 * ch, 1));
                ch *= 2;
                bn_relu_drop(&mut l, ch, dropout);
            }
            l.push(LayerSpec::Pad);
            l.push(conv(ch, ch, 3));
            bn_relu_drop(&mut l, ch, dropout);
            l.push(LayerSpec::Pad);
            if stage < 3 {
                l.push(sphere(ch, fraction));
            } else {
                let g = if fraction > 0.0 { 1 } else { 0 };
                l.push(LayerSpec::Sphere {
                    in_channels: ch,
                    out_channels: num_classes,
                    kernel_size: 3,
                    global_in: g * ch,
                    global_out: g * num_classes,
                });
            }
        }
        l.push(LayerSpec::AssertShape {
            channels: num_classes,
            pool_level: 3,
        });
        l.push(LayerSpec::GlobalPool);
        NetworkSpec {
            name: "classifier".into(),
            input_channels: 1,
            layers: l,
        }
    }

    /// U-Net with `depth` pooling levels (three in the full architecture).
    /// Output is a scalar field of per-pixel class scores.
    pub fn unet(c: usize, fraction: f64, input_channels: usize, num_classes: usize, depth: usize, dropout: f64) -> NetworkSpec {
        fn level(ch: usize, l: usize, depth: usize, fraction: f64, dropout: f64) -> Vec<LayerSpec> {
            // ch is this level's channel count; the parent has ch / 2.
            let mut v = vec![LayerSpec::MaxPool, conv(ch / 2, ch, 1)];
            bn_relu_drop(&mut v, ch, dropout);
            v.push(LayerSpec::Pad);
            v.push(conv(ch, ch, 3));
            bn_relu_drop(&mut v, ch, dropout);
            v.push(LayerSpec::Pad);
            v.push(sphere(ch, fraction));
            if l < depth {
                v.push(LayerSpec::UBlock {
                    layers: level(2 * ch, l + 1, depth, fraction, dropout),
                });
                bn_relu_drop(&mut v, 2 * ch, dropout);
                v.push(LayerSpec::Pad);
                v.push(conv(2 * ch, ch, 3));
                bn_relu_drop(&mut v, ch, dropout);
                v.push(LayerSpec::Pad);
                v.push(sphere(ch, fraction));
            }
            v.push(LayerSpec::Upsample);
            v.push(conv(ch, ch / 2, 1));
            v
        }
        let mut top = vec![LayerSpec::Pad, conv(input_channels, c, 3)];
        top.push(LayerSpec::AssertShape {
            channels: c,
            pool_level: 0,
        });
        bn_relu_drop(&mut top, c, dropout);
        top.push(LayerSpec::Pad);
        top.push(conv(c, c, 3));
        bn_relu_drop(&mut top, c, dropout);
        top.push(LayerSpec::Pad);
        top.push(sphere(c, fraction));
        let inner_c = if depth > 0 {
            top.push(LayerSpec::UBlock {
                layers: level(2 * c, 1, depth, fraction, dropout),
            });
            2 * c
        } else {
            c
        };
        bn_relu_drop(&mut top, inner_c, dropout);
        top.push(LayerSpec::Pad);
        top.push(conv(inner_c, 2 * c, 3));
        bn_relu_drop(&mut top, 2 * c, dropout);
        top.push(LayerSpec::Pad);
        top.push(sphere(2 * c, fraction));
        top.push(LayerSpec::AssertShape {
            channels: 2 * c,
            pool_level: 0,
        });
        top.push(LayerSpec::FiberPool);
        let mut layers = vec![LayerSpec::UBlock { layers: top }];
        bn_relu_drop(&mut layers, 2 * c + input_channels, dropout);
        layers.push(LayerSpec::Pointwise {
            in_channels: 2 * c + input_channels,
            out_channels: num_classes,
        });
        NetworkSpec {
            name: "unet".into(),
            input_channels,
            layers,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<NetworkSpec> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Shape of the running value during shape inference.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Shape {
    feature: FeatureKind,
    channels: usize,
    width: usize,
    padded: bool,
    vector: bool,
}

/// A network bound to a solid and input width, with every grid it visits.
#[derive(Clone, Debug)]
pub struct Network {
    spec: NetworkSpec,
    input_width: usize,
    grids: BTreeMap<usize, SphereGrid>,
    param_counts: Vec<usize>,
}

/// Output of a forward pass.
#[derive(Clone, Debug, PartialEq)]
pub enum Output {
    Field(FeatureField),
    Vector(Vec<f64>),
}

impl Output {
    pub fn as_vector(&self) -> Option<&[f64]> {
        match self {
            Output::Vector(v) => Some(v),
            Output::Field(_) => None,
        }
    }

    pub fn as_field(&self) -> Option<&FeatureField> {
        match self {
            Output::Field(f) => Some(f),
            Output::Vector(_) => None,
        }
    }
}

impl Network {
    pub fn new(spec: NetworkSpec, kind: SolidKind, flavor: Flavor, input_width: usize) -> Result<Network> {
        let sym = SolidSymmetry::new(kind, flavor);
        let mut net = Network {
            spec,
            input_width,
            grids: BTreeMap::new(),
            param_counts: Vec::new(),
        };
        net.grids.insert(input_width, SphereGrid::from_symmetry(sym.clone(), input_width)?);
        let start = Shape {
            feature: FeatureKind::Scalar,
            channels: net.spec.input_channels,
            width: input_width,
            padded: false,
            vector: false,
        };
        let layers = net.spec.layers.clone();
        let mut counts = Vec::new();
        net.infer(&layers, start, &sym, &mut counts)?;
        net.param_counts = counts;
        Ok(net)
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn input_grid(&self) -> &SphereGrid {
        &self.grids[&self.input_width]
    }

    pub fn grid(&self, width: usize) -> Option<&SphereGrid> {
        self.grids.get(&width)
    }

    /// Weight count of each parametrized layer, in execution order.
    pub fn param_counts(&self) -> &[usize] {
        &self.param_counts
    }

    pub fn num_params(&self) -> usize {
        self.param_counts.iter().sum()
    }

    /// Width after `level` pooling steps from the input.
    pub fn pooled_width(&self, level: usize) -> Result<usize> {
        let sides = self.input_grid().tiling().kind();
        let mut w = self.input_width;
        for _ in 0..level {
            let t = match sides {
                TilingKind::Square => Tiling::square(w, false),
                TilingKind::Hex => Tiling::hex(w, false),
            };
            w = pool_supports(&t)?.0;
        }
        Ok(w)
    }

    fn grid_for(&mut self, sym: &SolidSymmetry, width: usize) -> Result<()> {
        if let std::collections::btree_map::Entry::Vacant(e) = self.grids.entry(width) {
            e.insert(SphereGrid::from_symmetry(sym.clone(), width)?);
        }
        Ok(())
    }

    fn infer(&mut self, layers: &[LayerSpec], mut s: Shape, sym: &SolidSymmetry, counts: &mut Vec<usize>) -> Result<Shape> {
        for (i, layer) in layers.iter().enumerate() {
            let fail = |msg: String| Error::Shape(format!("layer {i} ({}): {msg}", layer_name(layer)));
            if s.vector {
                return Err(fail("input is already globally pooled".into()));
            }
            let grid = &self.grids[&s.width];
            match layer {
                LayerSpec::Pad => {
                    if s.padded {
                        return Err(fail("input is already padded".into()));
                    }
                    s.padded = true;
                }
                LayerSpec::Conv { in_channels, out_channels, kernel_size }
                | LayerSpec::Sphere { in_channels, out_channels, kernel_size, .. } => {
                    if *in_channels != s.channels {
                        return Err(fail(format!("expects {in_channels} channels, got {}", s.channels)));
                    }
                    if *kernel_size > 1 && !s.padded {
                        return Err(fail("3x3 convolution on an unpadded field".into()));
                    }
                    let mut n = ConvKernel::num_weights(grid, s.feature, *in_channels, *out_channels, *kernel_size)
                        .map_err(|e| fail(e.to_string()))?;
                    if let LayerSpec::Sphere { global_in, global_out, .. } = layer {
                        if *global_in > *in_channels || *global_out > *out_channels {
                            return Err(fail("global channels exceed layer channels".into()));
                        }
                        if *global_in > 0 && s.feature != FeatureKind::Regular {
                            return Err(fail("global path needs a regular input".into()));
                        }
                        n += GlobalWeights::num_weights(grid, FeatureKind::Regular, *global_in, *global_out);
                    }
                    counts.push(n);
                    s = Shape {
                        feature: FeatureKind::Regular,
                        channels: *out_channels,
                        width: s.width,
                        padded: false,
                        vector: false,
                    };
                }
                LayerSpec::BatchNorm { channels } => {
                    if *channels != s.channels {
                        return Err(fail(format!("expects {channels} channels, got {}", s.channels)));
                    }
                    counts.push(4 * channels);
                }
                LayerSpec::Relu | LayerSpec::Dropout { .. } => {}
                LayerSpec::MaxPool => {
                    if s.padded {
                        return Err(fail("pooling a padded field".into()));
                    }
                    let (w, _) = pool_supports(grid.tiling()).map_err(|e| fail(e.to_string()))?;
                    self.grid_for(sym, w)?;
                    s.width = w;
                }
                LayerSpec::Upsample => {
                    if s.padded {
                        return Err(fail("upsampling a padded field".into()));
                    }
                    if grid.tiling().kind() != TilingKind::Square {
                        return Err(fail("upsampling needs square grids".into()));
                    }
                    self.grid_for(sym, 2 * s.width)?;
                    s.width *= 2;
                }
                LayerSpec::AssertShape { channels, pool_level } => {
                    let w = self.pooled_width(*pool_level)?;
                    if s.channels != *channels || s.width != w || s.feature != FeatureKind::Regular {
                        return Err(fail(format!(
                            "expected {channels} regular channels at width {w}, got {} {:?} at width {}",
                            s.channels, s.feature, s.width
                        )));
                    }
                }
                LayerSpec::GlobalPool => s.vector = true,
                LayerSpec::FiberPool => s.feature = FeatureKind::Scalar,
                LayerSpec::Pointwise { in_channels, out_channels } => {
                    if *in_channels != s.channels {
                        return Err(fail(format!("expects {in_channels} channels, got {}", s.channels)));
                    }
                    counts.push(out_channels * in_channels + out_channels);
                    s.channels = *out_channels;
                }
                LayerSpec::UBlock { layers } => {
                    let inner = self.infer(layers, s, sym, counts)?;
                    if inner.width != s.width || inner.feature != s.feature || inner.padded != s.padded || inner.vector {
                        return Err(fail("block output cannot be concatenated with its input".into()));
                    }
                    s.channels += inner.channels;
                }
            }
        }
        Ok(s)
    }

    /// Runs the network on a scalar input field.
    pub fn forward(&self, weights: &NetworkWeights, input: &FeatureField) -> Result<Output> {
        if weights.values.len() != self.num_params() {
            return Err(Error::WeightLength {
                expected: self.num_params(),
                got: weights.values.len(),
            });
        }
        self.input_grid().check_field(input)?;
        if input.channels() != self.spec.input_channels || input.feature() != FeatureKind::Scalar {
            return Err(Error::Shape(format!(
                "expected {} scalar input channels",
                self.spec.input_channels
            )));
        }
        let mut cursor = 0;
        self.run(&self.spec.layers, Output::Field(input.clone()), self.input_width, weights, &mut cursor)
            .map(|(o, _)| o)
    }

    pub fn forward_batch(&self, weights: &NetworkWeights, inputs: &[FeatureField]) -> Result<Vec<Output>> {
        inputs.iter().map(|x| self.forward(weights, x)).collect()
    }

    fn run(
        &self,
        layers: &[LayerSpec],
        mut value: Output,
        mut width: usize,
        weights: &NetworkWeights,
        cursor: &mut usize,
    ) -> Result<(Output, usize)> {
        let take = |cursor: &mut usize, n: usize| -> &[f64] {
            let s = &weights.values[*cursor..*cursor + n];
            *cursor += n;
            s
        };
        for layer in layers {
            let grid = &self.grids[&width];
            let Output::Field(x) = &value else {
                return Err(Error::Shape("layer after global pooling".into()));
            };
            let next = match layer {
                LayerSpec::Pad => grid.pad(x)?,
                LayerSpec::Conv { in_channels, out_channels, kernel_size } => {
                    let n = ConvKernel::num_weights(grid, x.feature(), *in_channels, *out_channels, *kernel_size)?;
                    let k = ConvKernel::new(grid, x.feature(), *in_channels, *out_channels, *kernel_size, take(cursor, n).to_vec())?;
                    group_conv(grid, x, &k)?
                }
                LayerSpec::Sphere { in_channels, out_channels, kernel_size, global_in, global_out } => {
                    let n = ConvKernel::num_weights(grid, x.feature(), *in_channels, *out_channels, *kernel_size)?;
                    let w = take(cursor, n + GlobalWeights::num_weights(grid, FeatureKind::Regular, *global_in, *global_out));
                    let k = ConvKernel::new(grid, x.feature(), *in_channels, *out_channels, *kernel_size, w[..n].to_vec())?;
                    let g = GlobalWeights {
                        in_channels: *global_in,
                        out_channels: *global_out,
                        weights: w[n..].to_vec(),
                    };
                    sphere_layer(grid, x, &g, &k)?
                }
                LayerSpec::BatchNorm { channels } => {
                    let w = take(cursor, 4 * channels);
                    let c = *channels;
                    let p = BatchNormParams {
                        mean: w[..c].to_vec(),
                        var: w[c..2 * c].to_vec(),
                        gamma: w[2 * c..3 * c].to_vec(),
                        beta: w[3 * c..].to_vec(),
                        eps: 1e-5,
                    };
                    batchnorm_inference(x, &p)?
                }
                LayerSpec::Relu => relu(x),
                LayerSpec::Dropout { .. } => x.clone(),
                LayerSpec::MaxPool => {
                    let (w, _) = pool_supports(grid.tiling())?;
                    let out = pool(grid, &self.grids[&w], x)?;
                    width = w;
                    out
                }
                LayerSpec::Upsample => {
                    let out = upsample(grid, &self.grids[&(2 * width)], x)?;
                    width *= 2;
                    out
                }
                LayerSpec::AssertShape { channels, pool_level } => {
                    if x.channels() != *channels || width != self.pooled_width(*pool_level)? {
                        return Err(Error::Shape(format!(
                            "shape assertion failed: {} channels at width {width}",
                            x.channels()
                        )));
                    }
                    x.clone()
                }
                LayerSpec::GlobalPool => {
                    value = Output::Vector(global_pool(x));
                    continue;
                }
                LayerSpec::FiberPool => fiber_pool(x),
                LayerSpec::Pointwise { in_channels, out_channels } => {
                    let w = take(cursor, out_channels * in_channels + out_channels);
                    pointwise(x, *out_channels, w)?
                }
                LayerSpec::UBlock { layers } => {
                    let (inner, w) = self.run(layers, Output::Field(x.clone()), width, weights, cursor)?;
                    let Output::Field(inner) = inner else {
                        return Err(Error::Shape("block produced a pooled vector".into()));
                    };
                    debug_assert_eq!(w, width);
                    x.concat(&inner)?
                }
            };
            value = Output::Field(next);
        }
        Ok((value, width))
    }
}

fn layer_name(l: &LayerSpec) -> &'static str {
    match l {
        LayerSpec::Pad => "pad",
        LayerSpec::Conv { .. } => "conv",
        LayerSpec::Sphere { .. } => "sphere",
        LayerSpec::BatchNorm { .. } => "batch_norm",
        LayerSpec::Relu => "relu",
        LayerSpec::Dropout { .. } => "dropout",
        LayerSpec::MaxPool => "max_pool",
        LayerSpec::Upsample => "upsample",
        LayerSpec::AssertShape { .. } => "assert_shape",
        LayerSpec::GlobalPool => "global_pool",
        LayerSpec::FiberPool => "fiber_pool",
        LayerSpec::Pointwise { .. } => "pointwise",
        LayerSpec::UBlock { .. } => "u_block",
    }
}

/// Flat layer-ordered weights; stored on disk as little-endian `f64`.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkWeights {
    pub values: Vec<f64>,
}

impl NetworkWeights {
    pub fn zeros(net: &Network) -> NetworkWeights {
        NetworkWeights {
            values: vec![0.0; net.num_params()],
        }
    }

    /// Uniform weights scaled by fan-in; batch norm gets positive variances
    /// and scales near one.
    pub fn random(net: &Network, seed: u64) -> NetworkWeights {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut values = Vec::with_capacity(net.num_params());
        fill_random(&net.spec.layers, net, net.input_width, FeatureKind::Scalar, &mut rng, &mut values);
        debug_assert_eq!(values.len(), net.num_params());
        NetworkWeights { values }
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<NetworkWeights> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        if bytes.len() % 8 != 0 {
            return Err(Error::Shape(format!("weight blob of {} bytes is not a multiple of 8", bytes.len())));
        }
        let values: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        if let Some(i) = values.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(NetworkWeights { values })
    }
}

fn fill_random(
    layers: &[LayerSpec],
    net: &Network,
    mut width: usize,
    mut feature: FeatureKind,
    rng: &mut ChaCha8Rng,
    out: &mut Vec<f64>,
) -> (usize, FeatureKind) {
    let uniform = |rng: &mut ChaCha8Rng, n: usize, scale: f64, out: &mut Vec<f64>| {
        for _ in 0..n {
            out.push(rng.gen_range(-1.0..1.0) * scale);
        }
    };
    for layer in layers {
        let grid = &net.grids[&width];
        match layer {
            LayerSpec::Conv { in_channels, out_channels, kernel_size }
            | LayerSpec::Sphere { in_channels, out_channels, kernel_size, .. } => {
                let n = ConvKernel::num_weights(grid, feature, *in_channels, *out_channels, *kernel_size).expect("validated");
                let fan_in = (n / out_channels).max(1) as f64;
                uniform(rng, n, (3.0 / fan_in).sqrt(), out);
                if let LayerSpec::Sphere { global_in, global_out, .. } = layer {
                    let g = GlobalWeights::num_weights(grid, FeatureKind::Regular, *global_in, *global_out);
                    let fan = (*global_in * grid.lh_basis(FeatureKind::Regular).rows()).max(1) as f64;
                    uniform(rng, g, (3.0 / fan).sqrt(), out);
                }
                feature = FeatureKind::Regular;
            }
            LayerSpec::BatchNorm { channels } => {
                let c = *channels;
                for _ in 0..c {
                    out.push(rng.gen_range(-0.1..0.1));
                }
                for _ in 0..c {
                    out.push(rng.gen_range(0.5..1.5));
                }
                for _ in 0..c {
                    out.push(rng.gen_range(0.8..1.2));
                }
                for _ in 0..c {
                    out.push(rng.gen_range(-0.1..0.1));
                }
            }
            LayerSpec::MaxPool => width = pool_supports(grid.tiling()).expect("validated").0,
            LayerSpec::Upsample => width *= 2,
            LayerSpec::FiberPool => feature = FeatureKind::Scalar,
            LayerSpec::Pointwise { in_channels, out_channels } => {
                uniform(rng, out_channels * in_channels, (3.0 / *in_channels as f64).sqrt(), out);
                uniform(rng, *out_channels, 0.1, out);
            }
            LayerSpec::UBlock { layers } => {
                fill_random(layers, net, width, feature, rng, out);
            }
            LayerSpec::Pad
            | LayerSpec::Relu
            | LayerSpec::Dropout { .. }
            | LayerSpec::AssertShape { .. }
            | LayerSpec::GlobalPool => {}
        }
    }
    (width, feature)
}

/// Worst deviation of one layer from `L(h x) = h L(x)` over the generators.
#[derive(Clone, Debug, Serialize)]
pub struct LayerCheck {
    pub layer: String,
    pub max_abs_diff: f64,
    pub pass: bool,
}

/// Checks every layer kind against the solid generators at matched resolutions:
/// inputs at `width`, outputs of pooling and upsampling at their own widths.
/// Square grids also check pooling against 2-pixel face translations.
pub fn layer_equivariance(kind: SolidKind, flavor: Flavor, width: usize, seed: u64, tol: f64) -> Result<Vec<LayerCheck>> {
    let g = SphereGrid::new(kind, flavor, width)?;
    let (cw, _) = pool_supports(g.tiling())?;
    let coarse = SphereGrid::new(kind, flavor, cw)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gens = g.sym().generators();
    let xs = g.random(&mut rng, FeatureKind::Scalar, 2);
    let xr = g.random(&mut rng, FeatureKind::Regular, 3);
    let mut checks = Vec::new();

    // field -> field layer on grid `a` producing a field on grid `b`
    let mut field_check = |name: &str, a: &SphereGrid, b: &SphereGrid, x: &FeatureField, f: &dyn Fn(&FeatureField) -> Result<FeatureField>| -> Result<()> {
        let y = f(x)?;
        let mut worst: f64 = 0.0;
        for h in &gens {
            let lhs = f(&a.transform(x, &h.flag)?)?;
            worst = worst.max(lhs.max_abs_diff(&b.transform(&y, &h.flag)?));
        }
        checks.push(LayerCheck {
            layer: name.to_string(),
            max_abs_diff: worst,
            pass: worst <= tol,
        });
        Ok(())
    };

    field_check("pad_scalar", &g, &g, &xs, &|x| g.pad(x))?;
    field_check("pad_regular", &g, &g, &xr, &|x| g.pad(x))?;
    let lift = ConvKernel::random(&mut rng, &g, FeatureKind::Scalar, 2, 3, 3)?;
    field_check("conv_lift", &g, &g, &xs, &|x| group_conv(&g, &g.pad(x)?, &lift))?;
    let k3 = ConvKernel::random(&mut rng, &g, FeatureKind::Regular, 3, 2, 3)?;
    field_check("conv_3", &g, &g, &xr, &|x| group_conv(&g, &g.pad(x)?, &k3))?;
    let k1 = ConvKernel::random(&mut rng, &g, FeatureKind::Regular, 3, 2, 1)?;
    field_check("conv_1", &g, &g, &xr, &|x| group_conv(&g, x, &k1))?;
    let n = GlobalWeights::num_weights(&g, FeatureKind::Regular, 2, 2);
    let lh = GlobalWeights {
        in_channels: 2,
        out_channels: 2,
        weights: (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    };
    field_check("sphere", &g, &g, &xr, &|x| sphere_layer(&g, &g.pad(x)?, &lh, &k3))?;
    field_check("max_pool", &g, &coarse, &xr, &|x| pool(&g, &coarse, x))?;
    if g.tiling().kind() == TilingKind::Square {
        let xc = coarse.random(&mut rng, FeatureKind::Regular, 2);
        field_check("upsample", &coarse, &g, &xc, &|x| upsample(&coarse, &g, x))?;
    }
    field_check("relu", &g, &g, &xr, &|x| Ok(relu(x)))?;
    let bn = BatchNormParams {
        mean: vec![0.1, -0.2, 0.3],
        var: vec![0.5, 1.5, 2.0],
        gamma: vec![1.1, 0.9, -0.7],
        beta: vec![0.05, 0.0, -0.1],
        eps: 1e-5,
    };
    field_check("batch_norm", &g, &g, &xr, &|x| batchnorm_inference(x, &bn))?;
    field_check("fiber_pool", &g, &g, &xr, &|x| Ok(fiber_pool(x)))?;
    let pw: Vec<f64> = (0..2 * 3 + 2).map(|_| rng.gen_range(-1.0..1.0)).collect();
    field_check("pointwise", &g, &g, &xr, &|x| pointwise(x, 2, &pw))?;

    let y = global_pool(&xr);
    let mut worst: f64 = 0.0;
    for h in &gens {
        let z = global_pool(&g.transform(&xr, &h.flag)?);
        for (a, b) in y.iter().zip(&z) {
            worst = worst.max((a - b).abs());
        }
    }
    checks.push(LayerCheck {
        layer: "global_pool".into(),
        max_abs_diff: worst,
        pass: worst <= tol,
    });

    if g.tiling().kind() == TilingKind::Square {
        let y = pool(&g, &coarse, &xr)?;
        let mut worst: f64 = 0.0;
        for f in 0..g.num_faces() {
            for (dr, dc) in [(2, 0), (0, 2)] {
                let lhs = pool(&g, &coarse, &g.translate_face(&xr, f, dr, dc)?)?;
                let rhs = coarse.translate_face(&y, f, dr / 2, dc / 2)?;
                worst = worst.max(lhs.max_abs_diff(&rhs));
            }
        }
        checks.push(LayerCheck {
            layer: "max_pool_translation".into(),
            max_abs_diff: worst,
            pass: worst <= tol,
        });
    }
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cube(w: usize) -> SphereGrid {
        SphereGrid::new(SolidKind::Cube, Flavor::Chiral, w).unwrap()
    }

    #[test]
    fn delta_kernel_is_identity() {
        let g = cube(4);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = g.random(&mut rng, FeatureKind::Regular, 1);
        // centre offset, relative fiber 0 only
        let mut w = vec![0.0; 4 * 9];
        w[0] = 1.0;
        let k = ConvKernel::new(&g, FeatureKind::Regular, 1, 1, 3, w).unwrap();
        let y = group_conv(&g, &g.pad(&x).unwrap(), &k).unwrap();
        assert!(y.max_abs_diff(&x) < 1e-15);
    }

    #[test]
    fn all_ones_kernel_sums_the_patch() {
        let g = cube(4);
        let x = FeatureField::constant(FeatureKind::Regular, 1, 6, 4, 16, 1.0);
        let k = ConvKernel::new(&g, FeatureKind::Regular, 1, 1, 3, vec![1.0; 36]).unwrap();
        let y = group_conv(&g, &g.pad(&x).unwrap(), &k).unwrap();
        // interior pixels away from halo corners see 9 cells x 4 fibers
        let p = g.tiling().pixel_index((1, 1)).unwrap();
        assert_eq!(y.get(0, 0, 0, p), 36.0);
        // corner pixels see one zero halo corner
        let c = g.tiling().pixel_index((0, 0)).unwrap();
        assert_eq!(y.get(0, 0, 0, c), 32.0);
    }

    #[test]
    fn unpadded_3x3_is_rejected() {
        let g = cube(2);
        let x = g.zeros(FeatureKind::Regular, 1);
        let k = ConvKernel::new(&g, FeatureKind::Regular, 1, 1, 3, vec![0.0; 36]).unwrap();
        assert!(matches!(group_conv(&g, &x, &k), Err(Error::Shape(_))));
    }

    #[test]
    fn zero_global_weights_leave_conv_output() {
        let g = cube(4);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = g.pad(&g.random(&mut rng, FeatureKind::Regular, 2)).unwrap();
        let k = ConvKernel::random(&mut rng, &g, FeatureKind::Regular, 2, 2, 3).unwrap();
        let lh = GlobalWeights {
            in_channels: 2,
            out_channels: 2,
            weights: vec![0.0; 4 * 24],
        };
        assert_eq!(sphere_layer(&g, &x, &lh, &k).unwrap(), group_conv(&g, &x, &k).unwrap());
    }

    #[test]
    fn pooling_widths() {
        let mut w = 17;
        let mut chain = vec![w];
        while w > 3 {
            w = pool_supports(&Tiling::hex(w, false)).unwrap().0;
            chain.push(w);
        }
        assert_eq!(chain, vec![17, 9, 5, 3]);
        let mut w = 24;
        let mut chain = vec![w];
        for _ in 0..3 {
            w = pool_supports(&Tiling::square(w, false)).unwrap().0;
            chain.push(w);
        }
        assert_eq!(chain, vec![24, 12, 6, 3]);
        assert!(pool_supports(&Tiling::square(3, false)).is_err());
        assert!(pool_supports(&Tiling::hex(4, false)).is_err());
    }

    #[test]
    fn simple_layers() {
        let g = cube(4);
        let c = FeatureField::constant(FeatureKind::Regular, 2, 6, 4, 16, 2.5);
        let coarse = cube(2);
        assert_eq!(pool(&g, &coarse, &c).unwrap(), FeatureField::constant(FeatureKind::Regular, 2, 6, 4, 4, 2.5));
        assert_eq!(global_pool(&c), vec![2.5, 2.5]);
        assert_eq!(relu(&c), c);
        let up = upsample(&coarse, &g, &pool(&g, &coarse, &c).unwrap()).unwrap();
        assert_eq!(up, c);
        assert_eq!(fiber_pool(&c).fibers(), 1);
    }

    #[test]
    fn zero_weights_give_zero_scores() {
        let spec = NetworkSpec::classifier(2, 0.5, 3, 0.1);
        let net = Network::new(spec, SolidKind::Cube, Flavor::Chiral, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = net.input_grid().random(&mut rng, FeatureKind::Scalar, 1);
        let out = net.forward(&NetworkWeights::zeros(&net), &x).unwrap();
        assert_eq!(out.as_vector().unwrap(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn weights_roundtrip() {
        let w = NetworkWeights {
            values: vec![1.0, -2.5, 3.25],
        };
        let mut buf = Vec::new();
        w.write_to(&mut buf).unwrap();
        assert_eq!(buf.len(), 24);
        assert_eq!(NetworkWeights::read_from(&buf[..]).unwrap(), w);
    }

    #[test]
    fn spec_json_roundtrip() {
        let spec = NetworkSpec::unet(2, 0.5, 3, 4, 2, 0.1);
        assert_eq!(NetworkSpec::from_json(&spec.to_json().unwrap()).unwrap(), spec);
    }
}
