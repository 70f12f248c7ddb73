use platosphere::equivmaps::{local_basis, AssembledMap, DenseMatrix, Model};
use platosphere::field::FeatureField;
use platosphere::padding::PadMode;
use platosphere::solids::{Flavor, SolidKind};
use platosphere::spherenet::{
    group_conv, pool, sphere_layer, ConvKernel, GlobalWeights, Network, NetworkSpec, NetworkWeights, SphereGrid,
};
use platosphere::tilings::{FeatureKind, TilingKind};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn grids(width_sq: usize, width_hex: usize) -> Vec<SphereGrid> {
    let mut out = Vec::new();
    for kind in SolidKind::ALL {
        for flavor in [Flavor::Chiral, Flavor::Full] {
            let w = if kind == SolidKind::Cube { width_sq } else { width_hex };
            out.push(SphereGrid::new(kind, flavor, w).unwrap());
        }
    }
    out
}

fn label(g: &SphereGrid) -> String {
    format!("{}/{:?}/w{}", g.sym().kind().name(), g.sym().flavor(), g.width())
}

#[test]
fn padding_commutes_with_every_solid_symmetry() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for g in grids(4, 4) {
        for feature in [FeatureKind::Scalar, FeatureKind::Regular] {
            let x = g.random(&mut rng, feature, 2);
            let px = g.pad(&x).unwrap();
            let zero = g.pad_with(&x, PadMode::Zero).unwrap();
            // every non-corner halo cell is filled
            let filled = px.data().iter().zip(zero.data()).filter(|(a, b)| a != b).count();
            let halo = g.grid().len() - g.grid().interior_len() - g.grid().corners().len();
            assert_eq!(filled, 2 * px.faces() * px.fibers() * halo, "{}", label(&g));
            for h in g.sym().elements() {
                let lhs = g.pad(&g.transform(&x, &h.flag).unwrap()).unwrap();
                let rhs = g.transform(&px, &h.flag).unwrap();
                assert!(lhs.max_abs_diff(&rhs) < 1e-12, "{} {:?}", label(&g), feature);
            }
        }
    }
}

#[test]
fn convolution_commutes_with_solid_symmetries() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for g in grids(5, 5) {
        for feature in [FeatureKind::Scalar, FeatureKind::Regular] {
            let x = g.random(&mut rng, feature, 2);
            let k = ConvKernel::random(&mut rng, &g, feature, 2, 3, 3).unwrap();
            let y = group_conv(&g, &g.pad(&x).unwrap(), &k).unwrap();
            for h in g.sym().generators() {
                let lhs = group_conv(&g, &g.pad(&g.transform(&x, &h.flag).unwrap()).unwrap(), &k).unwrap();
                let rhs = g.transform(&y, &h.flag).unwrap();
                let err = lhs.max_abs_diff(&rhs) / y.max_abs().max(1.0);
                assert!(err < 1e-12, "{} {:?}: {err}", label(&g), feature);
            }
        }
    }
}

#[test]
fn sphere_layer_commutes_with_solid_symmetries() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for g in grids(4, 5) {
        let x = g.random(&mut rng, FeatureKind::Regular, 3);
        let k = ConvKernel::random(&mut rng, &g, FeatureKind::Regular, 3, 2, 3).unwrap();
        let n = GlobalWeights::num_weights(&g, FeatureKind::Regular, 2, 1);
        let lh = GlobalWeights {
            in_channels: 2,
            out_channels: 1,
            weights: (0..n).map(|i| ((i * 37 % 11) as f64 - 5.0) / 5.0).collect(),
        };
        let y = sphere_layer(&g, &g.pad(&x).unwrap(), &lh, &k).unwrap();
        for h in g.sym().generators() {
            let lhs = sphere_layer(&g, &g.pad(&g.transform(&x, &h.flag).unwrap()).unwrap(), &lh, &k).unwrap();
            let rhs = g.transform(&y, &h.flag).unwrap();
            assert!(lhs.max_abs_diff(&rhs) < 1e-11, "{}", label(&g));
        }
    }
}

#[test]
fn pooling_commutes_with_solid_symmetries() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for (fine, coarse) in grids(6, 7).into_iter().zip(grids(3, 4)) {
        let x = fine.random(&mut rng, FeatureKind::Regular, 1);
        let y = pool(&fine, &coarse, &x).unwrap();
        for h in fine.sym().generators() {
            let lhs = pool(&fine, &coarse, &fine.transform(&x, &h.flag).unwrap()).unwrap();
            assert_eq!(lhs, coarse.transform(&y, &h.flag).unwrap(), "{}", label(&fine));
        }
    }
}

#[test]
fn square_pooling_commutes_with_even_translations() {
    let fine = SphereGrid::new(SolidKind::Cube, Flavor::Chiral, 8).unwrap();
    let coarse = SphereGrid::new(SolidKind::Cube, Flavor::Chiral, 4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let x = fine.random(&mut rng, FeatureKind::Regular, 1);
    let y = pool(&fine, &coarse, &x).unwrap();
    let lhs = pool(&fine, &coarse, &fine.translate_face(&x, 2, 2, -4).unwrap()).unwrap();
    assert_eq!(lhs, coarse.translate_face(&y, 2, 1, -2).unwrap());
}

/// Columns are images of unit vectors.
fn dense_of(dim: usize, f: impl Fn(&[f64]) -> Vec<f64>) -> DenseMatrix {
    let mut m = DenseMatrix::zeros(dim, dim);
    let mut e = vec![0.0; dim];
    for j in 0..dim {
        e[j] = 1.0;
        for (i, v) in f(&e).into_iter().enumerate() {
            m.set(i, j, v);
        }
        e[j] = 0.0;
    }
    m
}

/// A sphere layer with per-face padding is `L_H ⊗ 11ᵀ + I ⊗ L_U` for some
/// parameters of the dense model.
#[test]
fn dense_model_matches_matrix_free_layer() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    for (kind, w) in [
        (SolidKind::Cube, 3),
        (SolidKind::Tetrahedron, 3),
        (SolidKind::Octahedron, 2),
        (SolidKind::Icosahedron, 2),
    ] {
        for flavor in [Flavor::Chiral, Flavor::Full] {
            let g = SphereGrid::new(kind, flavor, w).unwrap();
            let mode = match g.tiling().kind() {
                TilingKind::Square => PadMode::Circular,
                TilingKind::Hex => PadMode::Zero,
            };
            let k = ConvKernel::random(&mut rng, &g, FeatureKind::Regular, 1, 1, 3).unwrap();
            let nlh = GlobalWeights::num_weights(&g, FeatureKind::Regular, 1, 1);
            let lh_w: Vec<f64> = (0..nlh).map(|i| (i as f64 * 0.37).sin()).collect();
            let lh = GlobalWeights {
                in_channels: 1,
                out_channels: 1,
                weights: lh_w.clone(),
            };
            let shape = g.zeros(FeatureKind::Regular, 1);
            let dim = shape.data().len();
            let field = |v: &[f64]| {
                FeatureField::from_data(FeatureKind::Regular, 1, shape.faces(), shape.fibers(), shape.pixels(), v.to_vec())
                    .unwrap()
            };
            let conv = dense_of(dim, |v| {
                group_conv(&g, &g.pad_with(&field(v), mode).unwrap(), &k).unwrap().into_data()
            });
            let layer = dense_of(dim, |v| {
                sphere_layer(&g, &g.pad_with(&field(v), mode).unwrap(), &lh, &k)
                    .unwrap()
                    .into_data()
            });

            // Per-face block of the convolution, then its coordinates in the local basis.
            let basis = local_basis(g.tiling(), FeatureKind::Regular);
            let l = basis.rows();
            let mut block = DenseMatrix::zeros(l, l);
            for i in 0..l {
                for j in 0..l {
                    block.set(i, j, conv.get(i, j));
                }
            }
            let lu = basis.project(&block, 1e-12).unwrap_or_else(|e| panic!("{kind:?} {flavor:?}: {e}"));
            let map = AssembledMap::new(Model::Main, g.sym(), g.tiling(), FeatureKind::Regular).unwrap();
            let n = g.tiling().num_pixels() as f64;
            let lh_scaled: Vec<f64> = lh_w.iter().map(|x| x / n).collect();
            let dense = map.assemble(&lh_scaled, &lu).unwrap();
            assert!(dense.max_abs_diff(&layer) < 1e-12, "{kind:?} {flavor:?}");
        }
    }
}

#[test]
fn classifier_is_invariant() {
    for (kind, w) in [(SolidKind::Cube, 8), (SolidKind::Icosahedron, 9)] {
        let spec = NetworkSpec::classifier(2, 0.5, 3, 0.1);
        let net = Network::new(spec, kind, Flavor::Chiral, w).unwrap();
        let weights = NetworkWeights::random(&net, 5);
        let g = net.input_grid();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let x = g.random(&mut rng, FeatureKind::Scalar, 1);
        let y = net.forward(&weights, &x).unwrap();
        let y = y.as_vector().unwrap();
        assert_eq!(y.len(), 3);
        for h in g.sym().generators() {
            let z = net.forward(&weights, &g.transform(&x, &h.flag).unwrap()).unwrap();
            for (a, b) in y.iter().zip(z.as_vector().unwrap()) {
                assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0), "{kind:?}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn unet_is_equivariant() {
    let spec = NetworkSpec::unet(2, 0.5, 2, 3, 2, 0.1);
    let net = Network::new(spec, SolidKind::Cube, Flavor::Chiral, 8).unwrap();
    let weights = NetworkWeights::random(&net, 6);
    let g = net.input_grid();
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    let x = g.random(&mut rng, FeatureKind::Scalar, 2);
    let y = net.forward(&weights, &x).unwrap();
    let y = y.as_field().unwrap();
    assert_eq!((y.channels(), y.feature()), (3, FeatureKind::Scalar));
    for h in g.sym().generators() {
        let z = net.forward(&weights, &g.transform(&x, &h.flag).unwrap()).unwrap();
        let rhs = g.transform(y, &h.flag).unwrap();
        assert!(z.as_field().unwrap().max_abs_diff(&rhs) < 1e-9 * y.max_abs().max(1.0));
    }
}

#[test]
fn network_shape_errors_are_reported() {
    let spec = NetworkSpec::classifier(2, 0.5, 3, 0.1);
    // width 6 cannot be pooled three times
    assert!(Network::new(spec.clone(), SolidKind::Cube, Flavor::Chiral, 6).is_err());
    let net = Network::new(spec, SolidKind::Cube, Flavor::Chiral, 8).unwrap();
    let w = NetworkWeights {
        values: vec![0.0; net.num_params() - 1],
    };
    let x = net.input_grid().zeros(FeatureKind::Scalar, 1);
    assert!(net.forward(&w, &x).is_err());
}

/// Per-face translations are not symmetries of cross-face padding.
#[test]
fn face_translation_is_not_a_padded_symmetry() {
    let g = SphereGrid::new(SolidKind::Cube, Flavor::Chiral, 4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let x = g.random(&mut rng, FeatureKind::Regular, 1);
    let k = ConvKernel::random(&mut rng, &g, FeatureKind::Regular, 1, 1, 3).unwrap();
    let y = group_conv(&g, &g.pad(&x).unwrap(), &k).unwrap();
    let tx = g.translate_face(&x, 0, 0, 1).unwrap();
    let lhs = group_conv(&g, &g.pad(&tx).unwrap(), &k).unwrap();
    assert!(lhs.max_abs_diff(&g.translate_face(&y, 0, 0, 1).unwrap()) > 1e-3);
    // circular padding keeps it
    let yc = group_conv(&g, &g.pad_with(&x, PadMode::Circular).unwrap(), &k).unwrap();
    let lc = group_conv(&g, &g.pad_with(&tx, PadMode::Circular).unwrap(), &k).unwrap();
    assert!(lc.max_abs_diff(&g.translate_face(&yc, 0, 0, 1).unwrap()) < 1e-12);
}

#[test]
fn classifier_output_depends_on_input() {
    let net = Network::new(NetworkSpec::classifier(2, 0.5, 3, 0.1), SolidKind::Cube, Flavor::Chiral, 8).unwrap();
    let weights = NetworkWeights::random(&net, 5);
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let a = net.input_grid().random(&mut rng, FeatureKind::Scalar, 1);
    let b = net.input_grid().random(&mut rng, FeatureKind::Scalar, 1);
    let ya = net.forward(&weights, &a).unwrap();
    let yb = net.forward(&weights, &b).unwrap();
    let d: f64 = ya.as_vector().unwrap().iter().zip(yb.as_vector().unwrap()).map(|(p, q)| (p - q).abs()).sum();
    assert!(d > 1e-6, "{d}");
}

#[test]
fn every_layer_is_equivariant_at_matched_resolution() {
    for kind in SolidKind::ALL {
        for flavor in [Flavor::Chiral, Flavor::Full] {
            let widths: &[usize] = if kind == SolidKind::Cube { &[4, 8] } else { &[9] };
            for &w in widths {
                let checks = platosphere::spherenet::layer_equivariance(kind, flavor, w, 7, 1e-12).unwrap();
                assert!(checks.len() >= 12);
                for c in checks {
                    assert!(c.pass, "{kind:?} {flavor:?} w{w} {}: {}", c.layer, c.max_abs_diff);
                }
            }
        }
    }
}
