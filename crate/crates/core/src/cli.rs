//! Command-line front end. Every verb prints JSON on stdout (CSV where asked).
//!
//! Exit codes: 0 success, 1 a verification failed, 2 usage or input error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::equivmaps::{verify_commutation, AssembledMap, Model, ParamBasis, COMMUTATION_TOL};
use crate::error::{Error, Result};
use crate::field::FeatureField;
use crate::padding::PaddingGraph;
use crate::permgroup::{GeneratedAction, DEFAULT_GROUP_CAP};
use crate::pixelize::{geometric_action_check, sample_equirect, EquirectImage, Placement, SpherePixelization};
use crate::solids::{Flavor, SolidKind, SolidSymmetry};
use crate::spherenet::{layer_equivariance, Network, NetworkSpec, NetworkWeights, Output, SphereGrid};
use crate::tilings::{FeatureKind, Tiling};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Environment variable naming a directory for memoized basis files.
pub const CACHE_ENV: &str = "PLATOSPHERE_CACHE";

#[derive(Parser, Debug)]
#[command(name = "platosphere", version, about = "Equivariant networks on Platonic-solid sphere grids")]
struct Cli {
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Indent JSON output.
    #[arg(long, global = true)]
    pretty: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solid facts.
    Solid {
        #[command(subcommand)]
        what: SolidCmd,
    },
    /// Orbits of a solid's action (stack search, checked against Burnside).
    Orbits {
        solid: SolidKind,
        #[arg(long, default_value = "chiral")]
        flavor: Flavor,
        #[arg(long, value_enum, default_value = "flags")]
        action: ActionKind,
        /// Tiling width for pixel actions.
        #[arg(long, default_value_t = 3)]
        width: usize,
    },
    /// Parameter-sharing bases of an assembled map.
    Basis {
        solid: SolidKind,
        #[command(flatten)]
        map: MapArgs,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        /// Which factor to print; CSV needs one.
        #[arg(long, value_enum)]
        part: Option<Part>,
    },
    /// Checks equivariance of assembled maps or of every network layer.
    VerifyEquivariance {
        solid: SolidKind,
        #[command(flatten)]
        map: MapArgs,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long, default_value_t = COMMUTATION_TOL)]
        tol: f64,
        #[arg(long, value_enum, default_value = "maps")]
        target: Target,
    },
    /// Checks that padding graphs and padding commute with the solid's action.
    VerifyPadding {
        solid: SolidKind,
        #[arg(long, default_value = "chiral")]
        flavor: Flavor,
        #[arg(long, default_value_t = 4)]
        width: usize,
        #[arg(long, default_value = "regular")]
        features: FeatureKind,
    },
    /// Prints the cross-face padding graph.
    Padgraph {
        solid: SolidKind,
        #[arg(long, default_value = "chiral")]
        flavor: Flavor,
        #[arg(long, default_value_t = 4)]
        width: usize,
        #[arg(long, default_value = "regular")]
        features: FeatureKind,
    },
    /// Pixel centers on the sphere (CSV), optionally with the geometric check.
    Pixelize {
        solid: SolidKind,
        #[arg(long)]
        width: usize,
        #[arg(long, default_value = "gnomonic")]
        placement: Placement,
        /// Write the CSV here and print a JSON summary instead.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run the geometric action check for this flavor.
        #[arg(long)]
        check: Option<Flavor>,
    },
    /// Samples an equirectangular image (raw f32 + JSON sidecar) onto a field.
    Sample {
        image: PathBuf,
        sidecar: PathBuf,
        solid: SolidKind,
        #[arg(long)]
        width: usize,
        #[arg(long, default_value = "gnomonic")]
        placement: Placement,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Runs a network on a field.
    Forward(ForwardArgs),
    /// Parameter counts of the gauge, hierarchy and main models.
    CompareModels {
        solid: SolidKind,
        #[command(flatten)]
        map: MapArgs,
    },
}

#[derive(Subcommand, Debug)]
enum SolidCmd {
    Info {
        solid: SolidKind,
        #[arg(long, default_value = "chiral")]
        flavor: Flavor,
    },
}

#[derive(Args, Debug, Clone)]
struct MapArgs {
    #[arg(long, default_value = "chiral")]
    flavor: Flavor,
    #[arg(long, default_value_t = 3)]
    width: usize,
    #[arg(long, default_value = "regular")]
    features: FeatureKind,
    #[arg(long, default_value = "main")]
    model: Model,
}

#[derive(Args, Debug)]
struct ForwardArgs {
    solid: SolidKind,
    #[arg(long, default_value = "chiral")]
    flavor: Flavor,
    #[arg(long)]
    width: usize,
    /// Network spec JSON; otherwise built from --network.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "classifier")]
    network: NetworkKind,
    #[arg(long, default_value_t = 4)]
    channels: usize,
    #[arg(long, default_value_t = 0.25)]
    fraction: f64,
    #[arg(long, default_value_t = 10)]
    classes: usize,
    /// Input channels of the U-Net.
    #[arg(long, default_value_t = 1)]
    inputs: usize,
    /// Pooling levels of the U-Net.
    #[arg(long, default_value_t = 2)]
    depth: usize,
    /// Little-endian f64 weight blob; random weights from --seed otherwise.
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Input field JSON; a random field from --seed otherwise.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Print the network spec and exit.
    #[arg(long)]
    dump_spec: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ActionKind {
    Vertices,
    Faces,
    Flags,
    FacePairs,
    FlagPairs,
    Pixels,
    PixelPairs,
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
enum Part {
    Lh,
    Lu,
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq)]
enum Target {
    Maps,
    Layers,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum NetworkKind {
    Classifier,
    Unet,
}

/// Parses `argv` (including the program name) and runs it, writing to `out` and `err`.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                write!(out, "{text}")
            } else {
                write!(err, "{text}")
            };
            return code;
        }
    };
    match execute(&cli) {
        Ok((value, text, pass)) => {
            let written = match text {
                Some(t) => write!(out, "{t}"),
                None => {
                    let s = if cli.pretty {
                        serde_json::to_string_pretty(&value)
                    } else {
                        serde_json::to_string(&value)
                    }
                    .expect("JSON values serialize");
                    writeln!(out, "{s}")
                }
            };
            if written.is_err() {
                return EXIT_USAGE;
            }
            if pass {
                EXIT_OK
            } else {
                EXIT_VERIFY_FAILED
            }
        }
        Err(e) => {
            let _ = writeln!(err, "{}", json!({ "error": e.to_string() }));
            EXIT_USAGE
        }
    }
}

/// JSON value, optional raw text replacing it, and whether checks passed.
type Outcome = (Value, Option<String>, bool);

fn execute(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Solid {
            what: SolidCmd::Info { solid, flavor },
        } => Ok((solid_info(*solid, *flavor), None, true)),
        Command::Orbits {
            solid,
            flavor,
            action,
            width,
        } => orbits(*solid, *flavor, *action, *width).map(|v| (v, None, true)),
        Command::Basis { solid, map, format, part } => basis(*solid, map, *format, *part),
        Command::VerifyEquivariance {
            solid,
            map,
            trials,
            tol,
            target,
        } => match target {
            Target::Maps => verify_maps(*solid, map, *trials, *tol, cli.seed),
            Target::Layers => verify_layers(*solid, map, *tol, cli.seed),
        },
        Command::VerifyPadding {
            solid,
            flavor,
            width,
            features,
        } => verify_padding(*solid, *flavor, *width, *features, cli.seed),
        Command::Padgraph {
            solid,
            flavor,
            width,
            features,
        } => {
            let g = SphereGrid::new(*solid, *flavor, *width)?;
            Ok((serde_json::to_value(g.padding_graph(*features))?, None, true))
        }
        Command::Pixelize {
            solid,
            width,
            placement,
            out,
            check,
        } => pixelize(*solid, *width, *placement, out.as_deref(), *check),
        Command::Sample {
            image,
            sidecar,
            solid,
            width,
            placement,
            out,
        } => {
            let img = EquirectImage::read(image, sidecar)?;
            let pix = SpherePixelization::new(*solid, *width, *placement)?;
            let field = sample_equirect(&img, &pix)?;
            match out {
                Some(p) => {
                    std::fs::write(p, serde_json::to_string(&field)?)?;
                    Ok((
                        json!({ "channels": field.channels(), "faces": field.faces(), "pixels": field.pixels(), "out": p }),
                        None,
                        true,
                    ))
                }
                None => Ok((serde_json::to_value(&field)?, None, true)),
            }
        }
        Command::Forward(args) => forward(args, cli.seed),
        Command::CompareModels { solid, map } => compare_models(*solid, map).map(|v| (v, None, true)),
    }
}

fn tiling_for(sym: &SolidSymmetry, width: usize) -> Result<Tiling> {
    Tiling::for_sides(sym.solid().sides(), width, sym.flavor() == Flavor::Full)
}

fn solid_info(kind: SolidKind, flavor: Flavor) -> Value {
    let sym = SolidSymmetry::new(kind, flavor);
    let s = sym.solid();
    json!({
        "solid": kind.name(),
        "flavor": flavor,
        "faces": s.num_faces(),
        "vertices": s.vertices().len(),
        "edges": s.edges().len(),
        "vertices_per_face": s.sides(),
        "chiral_flags": s.chiral_flags().len(),
        "flags": s.flags().len(),
        "flags_per_face": sym.flags_per_face(),
        "group_order": sym.order(),
        "rotation_group": kind.rotation_group_name(),
        "face_stabilizer_order": sym.order() / s.num_faces(),
    })
}

fn orbits(kind: SolidKind, flavor: Flavor, action: ActionKind, width: usize) -> Result<Value> {
    let sym = SolidSymmetry::new(kind, flavor);
    let a: GeneratedAction = match action {
        ActionKind::Vertices => sym.vertex_action().clone(),
        ActionKind::Faces => sym.face_action().clone(),
        ActionKind::Flags => sym.flag_action().clone(),
        ActionKind::FacePairs => sym.face_action().tensor_square(),
        ActionKind::FlagPairs => sym.flag_action().tensor_square(),
        ActionKind::Pixels => tiling_for(&sym, width)?.point_action(FeatureKind::Scalar),
        ActionKind::PixelPairs => tiling_for(&sym, width)?.point_action(FeatureKind::Scalar).tensor_square(),
    };
    let part = a.all_orbits();
    let burnside = a.burnside_orbit_count(DEFAULT_GROUP_CAP)?;
    Ok(json!({
        "solid": kind.name(),
        "flavor": flavor,
        "action": format!("{action:?}").to_lowercase(),
        "degree": a.degree(),
        "group_order": a.group_order(DEFAULT_GROUP_CAP)?,
        "num_orbits": part.num_orbits(),
        "burnside_count": burnside,
        "orbits": part.orbits(),
    }))
}

#[derive(Serialize, Deserialize)]
struct CachedBases {
    lh: ParamBasis,
    lu: ParamBasis,
}

fn cache_key(kind: SolidKind, map: &MapArgs) -> String {
    let req = format!(
        "basis-v1|{}|{:?}|{}|{:?}|{:?}",
        kind.name(),
        map.flavor,
        map.width,
        map.features,
        map.model
    );
    let digest = Sha256::digest(req.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Bases of an assembled map, read from or stored in `$PLATOSPHERE_CACHE` when set.
fn load_bases(kind: SolidKind, map: &MapArgs) -> Result<(CachedBases, bool)> {
    let dir = std::env::var_os(CACHE_ENV).map(PathBuf::from);
    let path = dir.as_ref().map(|d| d.join(format!("{}.json", cache_key(kind, map))));
    if let Some(p) = &path {
        if let Ok(text) = std::fs::read_to_string(p) {
            if let Ok(b) = serde_json::from_str::<CachedBases>(&text) {
                return Ok((b, true));
            }
        }
    }
    let sym = SolidSymmetry::new(kind, map.flavor);
    let tiling = tiling_for(&sym, map.width)?;
    let m = AssembledMap::new(map.model, &sym, &tiling, map.features)?;
    let b = CachedBases {
        lh: m.lh_basis().clone(),
        lu: m.lu_basis().clone(),
    };
    if let (Some(d), Some(p)) = (&dir, &path) {
        std::fs::create_dir_all(d)?;
        std::fs::write(p, serde_json::to_string(&b)?)?;
    }
    Ok((b, false))
}

fn basis_json(b: &ParamBasis) -> Value {
    json!({
        "rows": b.rows(),
        "cols": b.cols(),
        "num_params": b.num_params(),
        "cells": b.cell_params(),
    })
}

fn basis(kind: SolidKind, map: &MapArgs, format: Format, part: Option<Part>) -> Result<Outcome> {
    let (b, cached) = load_bases(kind, map)?;
    if format == Format::Csv {
        let part = part.ok_or_else(|| Error::InvalidArgument("--format csv needs --part lh or --part lu".into()))?;
        let text = match part {
            Part::Lh => b.lh.to_csv(),
            Part::Lu => b.lu.to_csv(),
        };
        return Ok((Value::Null, Some(text), true));
    }
    let mut v = json!({
        "solid": kind.name(),
        "flavor": map.flavor,
        "width": map.width,
        "features": map.features,
        "model": map.model,
        "cached": cached,
    });
    if part != Some(Part::Lu) {
        v["lh"] = basis_json(&b.lh);
    }
    if part != Some(Part::Lh) {
        v["lu"] = basis_json(&b.lu);
    }
    Ok((v, None, true))
}

fn verify_maps(kind: SolidKind, map: &MapArgs, trials: usize, tol: f64, seed: u64) -> Result<Outcome> {
    let sym = SolidSymmetry::new(kind, map.flavor);
    let tiling = tiling_for(&sym, map.width)?;
    let m = AssembledMap::new(map.model, &sym, &tiling, map.features)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    for _ in 0..trials {
        let lh: Vec<f64> = (0..m.num_lh()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let lu: Vec<f64> = (0..m.num_lu()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let rep = verify_commutation(&m.assemble(&lh, &lu)?, m.action(), tol)?;
        worst = worst.max(rep.max_abs_diff);
        if !rep.pass {
            failures += 1;
        }
    }
    let pass = failures == 0;
    Ok((
        json!({
            "solid": kind.name(),
            "flavor": map.flavor,
            "width": map.width,
            "features": map.features,
            "model": map.model,
            "dim": m.dim(),
            "generators": m.action().num_gens(),
            "trials": trials,
            "failures": failures,
            "max_abs_diff": worst,
            "tol": tol,
            "pass": pass,
        }),
        None,
        pass,
    ))
}

fn verify_layers(kind: SolidKind, map: &MapArgs, tol: f64, seed: u64) -> Result<Outcome> {
    let checks = layer_equivariance(kind, map.flavor, map.width, seed, tol)?;
    let pass = checks.iter().all(|c| c.pass);
    Ok((
        json!({
            "solid": kind.name(),
            "flavor": map.flavor,
            "width": map.width,
            "layers": checks,
            "tol": tol,
            "pass": pass,
        }),
        None,
        pass,
    ))
}

fn verify_padding(kind: SolidKind, flavor: Flavor, width: usize, feature: FeatureKind, seed: u64) -> Result<Outcome> {
    let g = SphereGrid::new(kind, flavor, width)?;
    let graph: &PaddingGraph = g.padding_graph(feature);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // integer-valued field: padding only copies and averages pairs, so results are exact
    let mut x = g.zeros(feature, 2);
    for v in x.data_mut() {
        *v = rng.gen_range(-1000i32..1000) as f64;
    }
    let px = g.pad(&x)?;
    let mut adjacency = Vec::new();
    let mut worst: f64 = 0.0;
    for h in g.sym().generators() {
        let node_perm = match feature {
            FeatureKind::Scalar => &h.face,
            FeatureKind::Regular => &h.flag,
        };
        adjacency.push(graph.adjacency_commutes(node_perm));
        let lhs = g.pad(&g.transform(&x, &h.flag)?)?;
        worst = worst.max(lhs.max_abs_diff(&g.transform(&px, &h.flag)?));
    }
    let pass = adjacency.iter().all(|&b| b) && worst == 0.0 && graph.is_symmetric();
    Ok((
        json!({
            "solid": kind.name(),
            "flavor": flavor,
            "width": width,
            "features": feature,
            "nodes": graph.num_nodes(),
            "edges": graph.edges().len(),
            "symmetric": graph.is_symmetric(),
            "adjacency_commutes": adjacency,
            "operational_max_abs_diff": worst,
            "pass": pass,
        }),
        None,
        pass,
    ))
}

fn pixelize(kind: SolidKind, width: usize, placement: Placement, out: Option<&Path>, check: Option<Flavor>) -> Result<Outcome> {
    let pix = SpherePixelization::new(kind, width, placement)?;
    let report = check.map(|f| geometric_action_check(&pix, f, 1e-9)).transpose()?;
    let pass = report.as_ref().is_none_or(|r| r.pass);
    match out {
        None if report.is_none() => Ok((Value::Null, Some(pix.centers_csv()), true)),
        _ => {
            if let Some(p) = out {
                pix.export_centers(p)?;
            }
            let norm_err = pix
                .centers()
                .iter()
                .map(|c| ((c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt() - 1.0).abs())
                .fold(0.0, f64::max);
            Ok((
                json!({
                    "solid": kind.name(),
                    "width": width,
                    "placement": placement,
                    "centers": pix.centers().len(),
                    "pixels_per_face": pix.pixels_per_face(),
                    "max_norm_error": norm_err,
                    "total_area": pix.total_area(),
                    "out": out,
                    "geometric_check": report,
                    "pass": pass,
                }),
                None,
                pass,
            ))
        }
    }
}

fn forward(args: &ForwardArgs, seed: u64) -> Result<Outcome> {
    let spec = match &args.spec {
        Some(p) => NetworkSpec::from_json(&std::fs::read_to_string(p)?)?,
        None => match args.network {
            NetworkKind::Classifier => NetworkSpec::classifier(args.channels, args.fraction, args.classes, 0.1),
            NetworkKind::Unet => {
                NetworkSpec::unet(args.channels, args.fraction, args.inputs, args.classes, args.depth, 0.1)
            }
        },
    };
    if args.dump_spec {
        return Ok((serde_json::to_value(&spec)?, None, true));
    }
    let net = Network::new(spec, args.solid, args.flavor, args.width)?;
    let weights = match &args.weights {
        Some(p) => NetworkWeights::read_from(std::fs::File::open(p)?)?,
        None => NetworkWeights::random(&net, seed),
    };
    let input: FeatureField = match &args.input {
        Some(p) => serde_json::from_str(&std::fs::read_to_string(p)?)?,
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
            net.input_grid()
                .random(&mut rng, FeatureKind::Scalar, net.spec().input_channels)
        }
    };
    let y = net.forward(&weights, &input)?;
    let output = match y {
        Output::Vector(v) => json!({ "scores": v }),
        Output::Field(f) => serde_json::to_value(&f)?,
    };
    Ok((
        json!({
            "network": net.spec().name,
            "solid": args.solid.name(),
            "width": args.width,
            "num_params": net.num_params(),
            "output": output,
        }),
        None,
        true,
    ))
}

fn compare_models(kind: SolidKind, map: &MapArgs) -> Result<Value> {
    let sym = SolidSymmetry::new(kind, map.flavor);
    let tiling = tiling_for(&sym, map.width)?;
    let mut counts = Vec::new();
    for m in Model::ALL {
        counts.push(AssembledMap::new(m, &sym, &tiling, map.features)?.orbit_param_count());
    }
    Ok(json!({
        "solid": kind.name(),
        "flavor": map.flavor,
        "width": map.width,
        "features": map.features,
        "gauge": counts[0],
        "hierarchy": counts[1],
        "main": counts[2],
        "monotone": counts.windows(2).all(|w| w[0] <= w[1]),
    }))
}
