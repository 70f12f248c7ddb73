//! C ABI over `platosphere`.
//!
//! Every call returns a [`PsStatus`]. On failure a message is kept per thread
//! and can be copied out with [`ps_last_error_message`]. Handles are opaque
//! and must be released with the matching `*_free` function.
//!
//! Feature arrays use the library layout `[channel][face][fiber][pixel]` as
//! contiguous `double`s.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use platosphere::equivmaps::{verify_commutation, AssembledMap, Model};
use platosphere::field::FeatureField;
use platosphere::pixelize::{Placement, SpherePixelization};
use platosphere::solids::{Flavor, SolidKind, SolidSymmetry};
use platosphere::spherenet::{Network, NetworkSpec, NetworkWeights, Output, SphereGrid};
use platosphere::tilings::{FeatureKind, Tiling};
use platosphere::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Result codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Unsupported = 3,
    ShapeMismatch = 4,
    BufferTooSmall = 5,
    VerificationFailed = 6,
    Io = 7,
    Internal = 8,
}

/// Symmetry group of a solid.
pub struct PsSymmetry {
    inner: SolidSymmetry,
}

/// A solid with one face tiling, padding plans and field actions.
pub struct PsGrid {
    inner: SphereGrid,
}

/// A network bound to a solid and input width.
pub struct PsNetwork {
    inner: Network,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> PsStatus {
    match e {
        Error::Unsupported(_) => PsStatus::Unsupported,
        Error::Shape(_) | Error::WeightLength { .. } | Error::DegreeMismatch { .. } => PsStatus::ShapeMismatch,
        Error::Io(_) => PsStatus::Io,
        _ => PsStatus::InvalidArgument,
    }
}

/// Runs `f`, turning errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (PsStatus, String)>) -> PsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            PsStatus::Ok
        }
        Ok(Err((s, msg))) => {
            set_error(msg);
            s
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal error: {msg}"));
            PsStatus::Internal
        }
    }
}

type FfiResult<T> = Result<T, (PsStatus, String)>;

fn lib<T>(r: platosphere::Result<T>) -> FfiResult<T> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (PsStatus, String) {
    (PsStatus::NullPointer, format!("{what} is null"))
}

unsafe fn string_arg<'a>(p: *const c_char, what: &str) -> FfiResult<&'a str> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (PsStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn parse<T: std::str::FromStr<Err = Error>>(p: *const c_char, what: &str) -> FfiResult<T> {
    lib(string_arg(p, what)?.parse())
}

unsafe fn slice_arg<'a>(p: *const f64, len: usize, what: &str) -> FfiResult<&'a [f64]> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_out<'a>(p: *mut f64, len: usize, needed: usize, what: &str) -> FfiResult<&'a mut [f64]> {
    if len < needed {
        return Err((PsStatus::BufferTooSmall, format!("{what} holds {len}, needs {needed}")));
    }
    if needed == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, needed))
}

unsafe fn write<T>(p: *mut T, v: T, what: &str) -> FfiResult<()> {
    if p.is_null() {
        return Err(null(what));
    }
    *p = v;
    Ok(())
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> FfiResult<&'a T> {
    p.as_ref().ok_or_else(|| null(what))
}

/// Length in bytes of the last error message on this thread, excluding the terminator.
#[no_mangle]
pub extern "C" fn ps_last_error_length() -> usize {
    LAST_ERROR.with(|e| e.borrow().len())
}

/// Copies the last error message into `buf` (NUL-terminated, truncated to `len - 1`
/// bytes). Returns the full message length.
///
/// # Safety
/// `buf` must point to `len` writable bytes or be null with `len == 0`.
#[no_mangle]
pub unsafe extern "C" fn ps_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ps_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Builds the symmetry group of `solid` ("tetrahedron", "cube", "octahedron",
/// "icosahedron") with `flavor` ("chiral" or "full").
///
/// # Safety
/// String arguments must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_symmetry_new(solid: *const c_char, flavor: *const c_char, out: *mut *mut PsSymmetry) -> PsStatus {
    guard(|| {
        let kind: SolidKind = parse(solid, "solid")?;
        let flavor: Flavor = parse(flavor, "flavor")?;
        let h = Box::new(PsSymmetry {
            inner: SolidSymmetry::new(kind, flavor),
        });
        write(out, Box::into_raw(h), "out")
    })
}

/// # Safety
/// `h` must come from [`ps_symmetry_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ps_symmetry_free(h: *mut PsSymmetry) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Group order, number of faces and number of flags (regular-action degree).
///
/// # Safety
/// `h` must be a live handle; output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_symmetry_counts(
    h: *const PsSymmetry,
    order: *mut usize,
    faces: *mut usize,
    flags: *mut usize,
) -> PsStatus {
    guard(|| {
        let s = &handle(h, "symmetry")?.inner;
        write(order, s.order(), "order")?;
        write(faces, s.solid().num_faces(), "faces")?;
        write(flags, s.num_flags(), "flags")
    })
}

/// Number of generators of the group.
///
/// # Safety
/// `h` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_symmetry_num_generators(h: *const PsSymmetry, out: *mut usize) -> PsStatus {
    guard(|| write(out, handle(h, "symmetry")?.inner.num_gens(), "out"))
}

/// Writes the flag permutation of generator `index` (`out[i]` = image of flag `i`).
///
/// # Safety
/// `h` must be a live handle; `out` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn ps_symmetry_generator_flags(h: *const PsSymmetry, index: usize, out: *mut usize, len: usize) -> PsStatus {
    guard(|| {
        let s = &handle(h, "symmetry")?.inner;
        if index >= s.num_gens() {
            return Err((PsStatus::InvalidArgument, format!("generator {index} of {}", s.num_gens())));
        }
        let g = s.generator(index);
        let images = g.flag.images();
        if len < images.len() {
            return Err((PsStatus::BufferTooSmall, format!("buffer holds {len}, needs {}", images.len())));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        std::slice::from_raw_parts_mut(out, images.len()).copy_from_slice(images);
        Ok(())
    })
}

/// Builds a sphere grid of the given face `width`.
///
/// # Safety
/// String arguments must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_grid_new(solid: *const c_char, flavor: *const c_char, width: usize, out: *mut *mut PsGrid) -> PsStatus {
    guard(|| {
        let kind: SolidKind = parse(solid, "solid")?;
        let flavor: Flavor = parse(flavor, "flavor")?;
        let g = lib(SphereGrid::new(kind, flavor, width))?;
        write(out, Box::into_raw(Box::new(PsGrid { inner: g })), "out")
    })
}

/// # Safety
/// `h` must come from [`ps_grid_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ps_grid_free(h: *mut PsGrid) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

fn feature_of(regular: bool) -> FeatureKind {
    if regular {
        FeatureKind::Regular
    } else {
        FeatureKind::Scalar
    }
}

fn field_len(g: &SphereGrid, feature: FeatureKind, channels: usize, padded: bool) -> usize {
    let pixels = if padded {
        g.grid().len()
    } else {
        g.tiling().num_pixels()
    };
    channels * g.num_faces() * g.fibers(feature) * pixels
}

/// Number of `double`s in a field with `channels` channels.
///
/// # Safety
/// `h` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_grid_field_len(h: *const PsGrid, regular: bool, channels: usize, padded: bool, out: *mut usize) -> PsStatus {
    guard(|| {
        let g = &handle(h, "grid")?.inner;
        write(out, field_len(g, feature_of(regular), channels, padded), "out")
    })
}

unsafe fn read_field(g: &SphereGrid, regular: bool, channels: usize, data: *const f64, len: usize) -> FfiResult<FeatureField> {
    let feature = feature_of(regular);
    let expected = field_len(g, feature, channels, false);
    if len != expected {
        return Err((PsStatus::ShapeMismatch, format!("{len} values, expected {expected}")));
    }
    let v = slice_arg(data, len, "input")?.to_vec();
    lib(FeatureField::from_data(
        feature,
        channels,
        g.num_faces(),
        g.fibers(feature),
        g.tiling().num_pixels(),
        v,
    ))
}

/// Equivariant padding; `out` receives the padded field.
///
/// # Safety
/// `input` must hold `in_len` values and `out` `out_len` values.
#[no_mangle]
pub unsafe extern "C" fn ps_grid_pad(
    h: *const PsGrid,
    regular: bool,
    channels: usize,
    input: *const f64,
    in_len: usize,
    out: *mut f64,
    out_len: usize,
) -> PsStatus {
    guard(|| {
        let g = &handle(h, "grid")?.inner;
        let x = read_field(g, regular, channels, input, in_len)?;
        let y = lib(g.pad(&x))?;
        slice_out(out, out_len, y.data().len(), "out")?.copy_from_slice(y.data());
        Ok(())
    })
}

/// Applies solid generator `index` to an unpadded field.
///
/// # Safety
/// `input` must hold `in_len` values and `out` `out_len` values.
#[no_mangle]
pub unsafe extern "C" fn ps_grid_transform(
    h: *const PsGrid,
    regular: bool,
    channels: usize,
    index: usize,
    input: *const f64,
    in_len: usize,
    out: *mut f64,
    out_len: usize,
) -> PsStatus {
    guard(|| {
        let g = &handle(h, "grid")?.inner;
        let sym = g.sym();
        if index >= sym.num_gens() {
            return Err((PsStatus::InvalidArgument, format!("generator {index} of {}", sym.num_gens())));
        }
        let x = read_field(g, regular, channels, input, in_len)?;
        let y = lib(g.transform(&x, &sym.generator(index).flag))?;
        slice_out(out, out_len, y.data().len(), "out")?.copy_from_slice(y.data());
        Ok(())
    })
}

/// Pixel centers as `x, y, z` triples ordered by face then pixel. `written`
/// receives the number of doubles (3 per pixel).
///
/// # Safety
/// `solid` must be NUL-terminated; `out` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn ps_pixel_centers(solid: *const c_char, width: usize, out: *mut f64, len: usize, written: *mut usize) -> PsStatus {
    guard(|| {
        let kind: SolidKind = parse(solid, "solid")?;
        let pix = lib(SpherePixelization::new(kind, width, Placement::Gnomonic))?;
        let flat: Vec<f64> = pix.centers().iter().flatten().copied().collect();
        write(written, flat.len(), "written")?;
        slice_out(out, len, flat.len(), "out")?.copy_from_slice(&flat);
        Ok(())
    })
}

/// Classification network with `channels` base channels, global fraction
/// `fraction` and `classes` outputs, on a scalar input of one channel.
///
/// # Safety
/// String arguments must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_network_classifier_new(
    solid: *const c_char,
    flavor: *const c_char,
    width: usize,
    channels: usize,
    fraction: f64,
    classes: usize,
    out: *mut *mut PsNetwork,
) -> PsStatus {
    guard(|| {
        let kind: SolidKind = parse(solid, "solid")?;
        let flavor: Flavor = parse(flavor, "flavor")?;
        let spec = NetworkSpec::classifier(channels, fraction, classes, 0.0);
        let net = lib(Network::new(spec, kind, flavor, width))?;
        write(out, Box::into_raw(Box::new(PsNetwork { inner: net })), "out")
    })
}

/// Network from a JSON spec.
///
/// # Safety
/// String arguments must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_network_from_json(
    spec_json: *const c_char,
    solid: *const c_char,
    flavor: *const c_char,
    width: usize,
    out: *mut *mut PsNetwork,
) -> PsStatus {
    guard(|| {
        let spec = lib(NetworkSpec::from_json(string_arg(spec_json, "spec")?))?;
        let kind: SolidKind = parse(solid, "solid")?;
        let flavor: Flavor = parse(flavor, "flavor")?;
        let net = lib(Network::new(spec, kind, flavor, width))?;
        write(out, Box::into_raw(Box::new(PsNetwork { inner: net })), "out")
    })
}

/// # Safety
/// `h` must come from a network constructor and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ps_network_free(h: *mut PsNetwork) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Total weight count and input field length.
///
/// # Safety
/// `h` must be a live handle; output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_network_sizes(h: *const PsNetwork, num_params: *mut usize, input_len: *mut usize) -> PsStatus {
    guard(|| {
        let net = &handle(h, "network")?.inner;
        write(num_params, net.num_params(), "num_params")?;
        let g = net.input_grid();
        write(input_len, field_len(g, FeatureKind::Scalar, net.spec().input_channels, false), "input_len")
    })
}

/// Fills `out` with seeded random weights.
///
/// # Safety
/// `out` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn ps_network_random_weights(h: *const PsNetwork, seed: u64, out: *mut f64, len: usize) -> PsStatus {
    guard(|| {
        let net = &handle(h, "network")?.inner;
        let w = NetworkWeights::random(net, seed);
        slice_out(out, len, w.values.len(), "out")?.copy_from_slice(&w.values);
        Ok(())
    })
}

/// Forward pass on a scalar input. `written` receives the output length
/// (class scores, or a flattened field).
///
/// # Safety
/// Pointer/length pairs must describe valid buffers.
#[no_mangle]
pub unsafe extern "C" fn ps_network_forward(
    h: *const PsNetwork,
    weights: *const f64,
    weights_len: usize,
    input: *const f64,
    input_len: usize,
    out: *mut f64,
    out_len: usize,
    written: *mut usize,
) -> PsStatus {
    guard(|| {
        let net = &handle(h, "network")?.inner;
        let w = NetworkWeights {
            values: slice_arg(weights, weights_len, "weights")?.to_vec(),
        };
        let x = read_field(net.input_grid(), false, net.spec().input_channels, input, input_len)?;
        let y = lib(net.forward(&w, &x))?;
        let flat: Vec<f64> = match y {
            Output::Vector(v) => v,
            Output::Field(f) => f.into_data(),
        };
        write(written, flat.len(), "written")?;
        slice_out(out, out_len, flat.len(), "out")?.copy_from_slice(&flat);
        Ok(())
    })
}

/// Parameter counts of the gauge, hierarchy and main models, in that order.
///
/// # Safety
/// String arguments must be NUL-terminated; `out` must hold 3 values.
#[no_mangle]
pub unsafe extern "C" fn ps_compare_models(
    solid: *const c_char,
    flavor: *const c_char,
    width: usize,
    regular: bool,
    out: *mut usize,
) -> PsStatus {
    guard(|| {
        let kind: SolidKind = parse(solid, "solid")?;
        let flavor: Flavor = parse(flavor, "flavor")?;
        let sym = SolidSymmetry::new(kind, flavor);
        let t = lib(Tiling::for_sides(sym.solid().sides(), width, flavor == Flavor::Full))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let out = std::slice::from_raw_parts_mut(out, 3);
        for (i, m) in Model::ALL.into_iter().enumerate() {
            out[i] = lib(AssembledMap::new(m, &sym, &t, feature_of(regular)))?.orbit_param_count();
        }
        Ok(())
    })
}

/// Assembles `trials` random maps of `model` ("gauge", "hierarchy", "main")
/// and checks commutation with the model's generators at `tol`.
/// Returns [`PsStatus::VerificationFailed`] when any check fails; `max_diff`
/// is written either way.
///
/// # Safety
/// String arguments must be NUL-terminated; `max_diff` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_verify_equivariance(
    solid: *const c_char,
    flavor: *const c_char,
    model: *const c_char,
    width: usize,
    regular: bool,
    trials: usize,
    seed: u64,
    tol: f64,
    max_diff: *mut f64,
) -> PsStatus {
    guard(|| {
        let kind: SolidKind = parse(solid, "solid")?;
        let flavor: Flavor = parse(flavor, "flavor")?;
        let model: Model = parse(model, "model")?;
        let sym = SolidSymmetry::new(kind, flavor);
        let t = lib(Tiling::for_sides(sym.solid().sides(), width, flavor == Flavor::Full))?;
        let m = lib(AssembledMap::new(model, &sym, &t, feature_of(regular)))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        let mut pass = true;
        for _ in 0..trials {
            let lh: Vec<f64> = (0..m.num_lh()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let lu: Vec<f64> = (0..m.num_lu()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let rep = lib(verify_commutation(&lib(m.assemble(&lh, &lu))?, m.action(), tol))?;
            worst = worst.max(rep.max_abs_diff);
            pass &= rep.pass;
        }
        write(max_diff, worst, "max_diff")?;
        if pass {
            Ok(())
        } else {
            Err((PsStatus::VerificationFailed, format!("max deviation {worst:e} exceeds {tol:e}")))
        }
    })
}
