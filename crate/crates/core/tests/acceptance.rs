//! Acceptance criteria 1-9. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails. Runtime limits count towards the verdict.

use std::time::{Duration, Instant};

use platosphere::equivmaps::{local_basis, verify_commutation, AssembledMap, DenseMatrix, Model};
use platosphere::field::FeatureField;
use platosphere::padding::PadMode;
use platosphere::permgroup::{GeneratedAction, Permutation, DEFAULT_GROUP_CAP};
use platosphere::pixelize::{geometric_action_check, Placement, SpherePixelization};
use platosphere::solids::{Flavor, SolidKind, SolidSymmetry};
use platosphere::spherenet::{
    group_conv, layer_equivariance, pool_supports, sphere_layer, ConvKernel, GlobalWeights, Network, NetworkSpec,
    NetworkWeights, SphereGrid,
};
use platosphere::tilings::{FeatureKind, Tiling, TilingKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FLAVORS: [Flavor; 2] = [Flavor::Chiral, Flavor::Full];
const FEATURES: [FeatureKind; 2] = [FeatureKind::Scalar, FeatureKind::Regular];

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn tiling_for(sym: &SolidSymmetry, width: usize) -> Tiling {
    Tiling::for_sides(sym.solid().sides(), width, sym.flavor() == Flavor::Full).unwrap()
}

fn rand_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// 1. Chiral flag actions are regular.
fn flag_regularity() -> Verdict {
    let mut ok = true;
    let mut seen = Vec::new();
    for kind in SolidKind::ALL {
        let sym = SolidSymmetry::new(kind, Flavor::Chiral);
        let flags = sym.flag_action();
        let group = flags.enumerate_group(DEFAULT_GROUP_CAP).unwrap();
        let n = flags.degree();
        ok &= group.len() == n;
        // trivial stabilizers: only the identity fixes any flag
        for g in &group {
            if !g.is_identity() && g.fixed_points() > 0 {
                ok = false;
            }
        }
        seen.push(format!("{}={}/{}", kind.name(), group.len(), n));
    }
    ok &= seen.join(",") == "tetrahedron=12/12,cube=24/24,octahedron=24/24,icosahedron=60/60";
    verdict(ok, format!("order/degree {}", seen.join(" ")))
}

/// 2. Structural constants.
fn structural_constants() -> Verdict {
    let faces: Vec<usize> = SolidKind::ALL
        .iter()
        .map(|&k| SolidSymmetry::new(k, Flavor::Chiral).solid().num_faces())
        .collect();
    let hex: Vec<usize> = [41, 25, 17].iter().map(|&w| Tiling::hex(w, false).num_pixels()).collect();
    let cube = Tiling::square(24, false).num_pixels();
    let mut chain = vec![17];
    while chain.len() < 4 {
        let w = *chain.last().unwrap();
        chain.push(pool_supports(&Tiling::hex(w, false)).unwrap().0);
    }
    let ok = faces == [4, 6, 8, 20] && hex == [861, 325, 153] && cube == 576 && chain == [17, 9, 5, 3];
    verdict(
        ok,
        format!("faces {faces:?}, hex pixels {hex:?}, cube 576={cube}, hex pooling {chain:?}"),
    )
}

fn small_actions() -> Vec<(String, GeneratedAction)> {
    let mut out = Vec::new();
    for kind in SolidKind::ALL {
        for flavor in FLAVORS {
            let sym = SolidSymmetry::new(kind, flavor);
            let tag = format!("{}/{flavor:?}", kind.name());
            out.push((format!("{tag} vertices"), sym.vertex_action().clone()));
            out.push((format!("{tag} faces"), sym.face_action().clone()));
            out.push((format!("{tag} flags"), sym.flag_action().clone()));
            out.push((format!("{tag} faces^2"), sym.face_action().tensor_square()));
            out.push((format!("{tag} flags^2"), sym.flag_action().tensor_square()));
            for w in 1..=3 {
                let t = tiling_for(&sym, w);
                for f in FEATURES {
                    out.push((format!("{tag} w{w} {f:?} local"), t.local_action(f)));
                    out.push((format!("{tag} w{w} {f:?} local^2"), t.local_action(f).tensor_square()));
                }
            }
        }
    }
    out
}

/// 3. Orbit search agrees with Burnside's count.
fn orbit_oracle() -> Verdict {
    let mut checked = 0;
    let mut bad = Vec::new();
    for (name, a) in small_actions() {
        if a.group_order(DEFAULT_GROUP_CAP).unwrap() > 120 {
            continue;
        }
        checked += 1;
        let stack = a.all_orbits().num_orbits();
        let burnside = a.burnside_orbit_count(DEFAULT_GROUP_CAP).unwrap();
        if stack != burnside {
            bad.push(format!("{name}: {stack} vs {burnside}"));
        }
    }
    verdict(bad.is_empty() && checked > 100, format!("{checked} actions, mismatches {bad:?}"))
}

/// 4. Assembled main maps commute with every rho* generator.
fn claim_one() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    let mut checks = 0;
    let mut pass = true;
    for kind in SolidKind::ALL {
        for flavor in FLAVORS {
            let sym = SolidSymmetry::new(kind, flavor);
            for w in 1..=3 {
                let t = tiling_for(&sym, w);
                for f in FEATURES {
                    let m = AssembledMap::new(Model::Main, &sym, &t, f).unwrap();
                    for _ in 0..100 {
                        let a = m.assemble(&rand_vec(&mut rng, m.num_lh()), &rand_vec(&mut rng, m.num_lu())).unwrap();
                        let rep = verify_commutation(&a, m.action(), 1e-12).unwrap();
                        worst = worst.max(rep.max_abs_diff);
                        pass &= rep.pass;
                        checks += 1;
                    }
                }
            }
        }
    }
    verdict(pass, format!("{checks} draws, max |MP - PM| = {worst:.2e} (tol 1e-12)"))
}

/// 5. Parameter counts along gauge -> hierarchy -> main.
fn expressivity() -> Verdict {
    let sym = SolidSymmetry::new(SolidKind::Cube, Flavor::Chiral);
    let t = Tiling::square(3, false);
    let cube: Vec<usize> = Model::ALL
        .iter()
        .map(|&m| AssembledMap::new(m, &sym, &t, FeatureKind::Regular).unwrap().orbit_param_count())
        .collect();
    let mut ok = cube == [37, 38, 56];
    let mut configs = 0;
    for kind in SolidKind::ALL {
        for flavor in FLAVORS {
            let sym = SolidSymmetry::new(kind, flavor);
            for w in 1..=3 {
                let t = tiling_for(&sym, w);
                for f in FEATURES {
                    let parts: Vec<_> = Model::ALL
                        .iter()
                        .map(|&m| AssembledMap::new(m, &sym, &t, f).unwrap().action().tensor_square().all_orbits())
                        .collect();
                    ok &= parts[0].num_orbits() <= parts[1].num_orbits() && parts[1].num_orbits() <= parts[2].num_orbits();
                    ok &= parts[2].refines(&parts[1]) && parts[1].refines(&parts[0]);
                    configs += 1;
                }
            }
        }
    }
    verdict(ok, format!("cube w3 regular (gauge, hierarchy, main) = {cube:?}; chain and refinement on {configs} configurations"))
}

/// 6. Padding graphs commute with the action; padding commutes operationally.
fn padding() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut ok = true;
    let mut float_worst: f64 = 0.0;
    let mut configs = 0;
    for kind in SolidKind::ALL {
        for flavor in FLAVORS {
            for w in 1..=5 {
                let g = SphereGrid::new(kind, flavor, w).unwrap();
                for f in FEATURES {
                    let graph = g.padding_graph(f);
                    let gens = g.sym().generators();
                    for h in &gens {
                        let nodes: &Permutation = match f {
                            FeatureKind::Scalar => &h.face,
                            FeatureKind::Regular => &h.flag,
                        };
                        ok &= graph.adjacency_commutes(nodes);
                    }
                    // integer data must come through exactly
                    let mut xi = g.zeros(f, 2);
                    for v in xi.data_mut() {
                        *v = rng.gen_range(-1000i32..1000) as f64;
                    }
                    let xf = g.random(&mut rng, f, 2);
                    for h in &gens {
                        for (x, exact) in [(&xi, true), (&xf, false)] {
                            let lhs = g.pad(&g.transform(x, &h.flag).unwrap()).unwrap();
                            let rhs = g.transform(&g.pad(x).unwrap(), &h.flag).unwrap();
                            let d = lhs.max_abs_diff(&rhs);
                            if exact {
                                ok &= d == 0.0;
                            } else {
                                float_worst = float_worst.max(d);
                            }
                        }
                    }
                    configs += 1;
                }
            }
        }
    }
    ok &= float_worst <= 1e-15;
    verdict(ok, format!("{configs} graphs; integer fields exact, float max diff {float_worst:.2e} (tol 1e-15)"))
}

/// 7. Layer-wise equivariance and classifier invariance.
fn layers_and_network() -> Verdict {
    let mut ok = true;
    let mut layer_worst: f64 = 0.0;
    let mut layer_checks = 0;
    for kind in SolidKind::ALL {
        for flavor in FLAVORS {
            let widths: &[usize] = if kind == SolidKind::Cube { &[4, 8] } else { &[9, 17] };
            for &w in widths {
                for c in layer_equivariance(kind, flavor, w, 7, 1e-12).unwrap() {
                    ok &= c.pass;
                    layer_worst = layer_worst.max(c.max_abs_diff);
                    layer_checks += 1;
                }
            }
        }
    }

    let spec = NetworkSpec::classifier(4, 0.25, 10, 0.1);
    let net = Network::new(spec, SolidKind::Cube, Flavor::Chiral, 24).unwrap();
    let weights = NetworkWeights::random(&net, 77);
    let g = net.input_grid();
    let elements = g.sym().elements();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut rel_worst: f64 = 0.0;
    for _ in 0..20 {
        let x = g.random(&mut rng, FeatureKind::Scalar, 1);
        let h = &elements[rng.gen_range(0..elements.len())];
        let y = net.forward(&weights, &x).unwrap();
        let z = net.forward(&weights, &g.transform(&x, &h.flag).unwrap()).unwrap();
        let (y, z) = (y.as_vector().unwrap(), z.as_vector().unwrap());
        let scale = y.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let diff = y.iter().zip(z).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        rel_worst = rel_worst.max(diff / scale);
    }
    ok &= rel_worst <= 1e-5;
    verdict(
        ok,
        format!(
            "{layer_checks} layer checks, max diff {layer_worst:.2e} (tol 1e-12); classifier cube w24 C=4 F=0.25, 20 pairs, max relative logit diff {rel_worst:.2e} (tol 1e-5)"
        ),
    )
}

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

/// 8. The matrix-free sphere layer equals the dense assembled map.
fn matrix_free() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    let mut ok = true;
    let mut configs = Vec::new();
    for kind in SolidKind::ALL {
        let widths: &[usize] = if kind == SolidKind::Cube { &[1, 3] } else { &[1, 2] };
        for flavor in FLAVORS {
            for &w in widths {
                let g = SphereGrid::new(kind, flavor, w).unwrap();
                let mode = match g.tiling().kind() {
                    TilingKind::Square => PadMode::Circular,
                    TilingKind::Hex => PadMode::Zero,
                };
                let k = ConvKernel::random(&mut rng, &g, FeatureKind::Regular, 1, 1, 3).unwrap();
                let n = GlobalWeights::num_weights(&g, FeatureKind::Regular, 1, 1);
                let lh = GlobalWeights {
                    in_channels: 1,
                    out_channels: 1,
                    weights: rand_vec(&mut rng, n),
                };
                let shape = g.zeros(FeatureKind::Regular, 1);
                let field = |v: &[f64]| {
                    FeatureField::from_data(FeatureKind::Regular, 1, shape.faces(), shape.fibers(), shape.pixels(), v.to_vec())
                        .unwrap()
                };
                let dim = shape.data().len();
                let conv = dense_of(dim, |v| group_conv(&g, &g.pad_with(&field(v), mode).unwrap(), &k).unwrap().into_data());
                let layer = dense_of(dim, |v| {
                    sphere_layer(&g, &g.pad_with(&field(v), mode).unwrap(), &lh, &k).unwrap().into_data()
                });
                let basis = local_basis(g.tiling(), FeatureKind::Regular);
                let l = basis.rows();
                let mut block = DenseMatrix::zeros(l, l);
                for i in 0..l {
                    for j in 0..l {
                        block.set(i, j, conv.get(i, j));
                    }
                }
                let Ok(lu) = basis.project(&block, 1e-12) else {
                    ok = false;
                    continue;
                };
                let map = AssembledMap::new(Model::Main, g.sym(), g.tiling(), FeatureKind::Regular).unwrap();
                let npix = g.tiling().num_pixels() as f64;
                let scaled: Vec<f64> = lh.weights.iter().map(|x| x / npix).collect();
                let d = map.assemble(&scaled, &lu).unwrap().max_abs_diff(&layer);
                worst = worst.max(d);
                configs.push(format!("{}{w}", &kind.name()[..4]));
            }
        }
    }
    ok &= worst <= 1e-12;
    verdict(ok, format!("{} configurations, max diff {worst:.2e} (tol 1e-12)", configs.len()))
}

/// 9. Pixel centers are unit vectors and move with the solid's generators.
fn geometry() -> Verdict {
    let mut ok = true;
    let mut norm_worst: f64 = 0.0;
    let mut geo_worst: f64 = 0.0;
    for kind in SolidKind::ALL {
        let widths: &[usize] = if kind == SolidKind::Cube { &[1, 4, 24] } else { &[1, 9, 17] };
        for &w in widths {
            let pix = SpherePixelization::new(kind, w, Placement::Gnomonic).unwrap();
            for c in pix.centers() {
                norm_worst = norm_worst.max(((c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt() - 1.0).abs());
            }
            if w <= 9 {
                for flavor in FLAVORS {
                    let r = geometric_action_check(&pix, flavor, 1e-9).unwrap();
                    ok &= r.pass;
                    geo_worst = geo_worst.max(r.max_mismatch);
                }
            }
        }
    }
    ok &= norm_worst <= 1e-12;
    verdict(ok, format!("max | |c| - 1 | = {norm_worst:.2e} (tol 1e-12), max geometric mismatch {geo_worst:.2e} (tol 1e-9)"))
}

fn main() {
    let criteria: [(&str, Duration, fn() -> Verdict); 9] = [
        ("flag regularity", Duration::from_secs(1), flag_regularity),
        ("structural constants", Duration::from_secs(1), structural_constants),
        ("orbit oracle agreement", Duration::from_secs(10), orbit_oracle),
        ("assembled main maps commute with rho*", Duration::from_secs(60), claim_one),
        ("expressivity chain", Duration::from_secs(120), expressivity),
        ("padding equivariance", Duration::from_secs(10), padding),
        ("layer and end-to-end equivariance", Duration::from_secs(300), layers_and_network),
        ("matrix-free equals dense", Duration::from_secs(30), matrix_free),
        ("geometry", Duration::from_secs(10), geometry),
    ];
    let mut failed = 0;
    for (i, (name, limit, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = check();
        let elapsed = start.elapsed();
        let pass = v.pass && elapsed <= *limit;
        if !pass {
            failed += 1;
        }
        println!(
            "{} criterion {}: {name}: {} [{:.2}s, limit {}s]",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            v.detail,
            elapsed.as_secs_f64(),
            limit.as_secs()
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
