//! Feature fields: `channels × faces × fibers × pixels`, row-major.
//!
//! Pixels are either the interior cells of a face grid or, after padding, the
//! extended cells (interior first, then halo) of [`crate::tilings::ExtGrid`].

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::permgroup::Permutation;
use crate::tilings::FeatureKind;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureField {
    feature: FeatureKind,
    channels: usize,
    faces: usize,
    fibers: usize,
    pixels: usize,
    padded: bool,
    data: Vec<f64>,
}

impl FeatureField {
    pub fn zeros(feature: FeatureKind, channels: usize, faces: usize, fibers: usize, pixels: usize) -> Self {
        assert!(feature == FeatureKind::Regular || fibers == 1, "scalar fields have one fiber");
        FeatureField {
            feature,
            channels,
            faces,
            fibers,
            pixels,
            padded: false,
            data: vec![0.0; channels * faces * fibers * pixels],
        }
    }

    pub fn constant(
        feature: FeatureKind,
        channels: usize,
        faces: usize,
        fibers: usize,
        pixels: usize,
        value: f64,
    ) -> Self {
        let mut f = FeatureField::zeros(feature, channels, faces, fibers, pixels);
        f.data.fill(value);
        f
    }

    pub fn random<R: Rng>(
        rng: &mut R,
        feature: FeatureKind,
        channels: usize,
        faces: usize,
        fibers: usize,
        pixels: usize,
    ) -> Self {
        let mut f = FeatureField::zeros(feature, channels, faces, fibers, pixels);
        for x in &mut f.data {
            *x = rng.gen_range(-1.0..1.0);
        }
        f
    }

    pub fn from_data(
        feature: FeatureKind,
        channels: usize,
        faces: usize,
        fibers: usize,
        pixels: usize,
        data: Vec<f64>,
    ) -> Result<Self> {
        if data.len() != channels * faces * fibers * pixels {
            return Err(Error::Shape(format!(
                "{} values for a {channels}x{faces}x{fibers}x{pixels} field",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        if feature == FeatureKind::Scalar && fibers != 1 {
            return Err(Error::Shape("scalar fields have one fiber".into()));
        }
        Ok(FeatureField {
            feature,
            channels,
            faces,
            fibers,
            pixels,
            padded: false,
            data,
        })
    }

    pub(crate) fn with_padded(mut self, padded: bool) -> Self {
        self.padded = padded;
        self
    }

    pub fn feature(&self) -> FeatureKind {
        self.feature
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn faces(&self) -> usize {
        self.faces
    }

    pub fn fibers(&self) -> usize {
        self.fibers
    }

    pub fn pixels(&self) -> usize {
        self.pixels
    }

    pub fn is_padded(&self) -> bool {
        self.padded
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Values of one channel, `faces × fibers × pixels`.
    pub fn channel(&self, c: usize) -> &[f64] {
        let n = self.channel_len();
        &self.data[c * n..(c + 1) * n]
    }

    pub fn channel_len(&self) -> usize {
        self.faces * self.fibers * self.pixels
    }

    #[inline]
    pub fn index(&self, c: usize, f: usize, a: usize, p: usize) -> usize {
        ((c * self.faces + f) * self.fibers + a) * self.pixels + p
    }

    #[inline]
    pub fn get(&self, c: usize, f: usize, a: usize, p: usize) -> f64 {
        self.data[self.index(c, f, a, p)]
    }

    #[inline]
    pub fn set(&mut self, c: usize, f: usize, a: usize, p: usize, v: f64) {
        let i = self.index(c, f, a, p);
        self.data[i] = v;
    }

    /// Applies a permutation of `faces × fibers × pixels` to every channel:
    /// the value at `i` moves to `perm(i)`.
    pub fn permuted(&self, perm: &Permutation) -> Result<FeatureField> {
        let n = self.channel_len();
        if perm.degree() != n {
            return Err(Error::DegreeMismatch {
                left: n,
                right: perm.degree(),
            });
        }
        let mut out = self.clone();
        for c in 0..self.channels {
            let src = &self.data[c * n..(c + 1) * n];
            let dst = &mut out.data[c * n..(c + 1) * n];
            for (i, &v) in src.iter().enumerate() {
                dst[perm.apply(i)] = v;
            }
        }
        Ok(out)
    }

    /// Keeps the first `interior` pixels of each grid (drops a halo).
    pub fn crop(&self, interior: usize) -> FeatureField {
        let mut out = FeatureField::zeros(self.feature, self.channels, self.faces, self.fibers, interior);
        for (dst, src) in out
            .data
            .chunks_mut(interior)
            .zip(self.data.chunks(self.pixels))
        {
            dst.copy_from_slice(&src[..interior]);
        }
        out
    }

    /// Concatenates along channels.
    pub fn concat(&self, other: &FeatureField) -> Result<FeatureField> {
        if (self.feature, self.faces, self.fibers, self.pixels, self.padded)
            != (other.feature, other.faces, other.fibers, other.pixels, other.padded)
        {
            return Err(Error::Shape("cannot concatenate fields of different shapes".into()));
        }
        let mut out = self.clone();
        out.channels += other.channels;
        out.data.extend_from_slice(&other.data);
        Ok(out)
    }

    pub fn max_abs_diff(&self, other: &FeatureField) -> f64 {
        assert_eq!(self.data.len(), other.data.len(), "field shapes differ");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.abs()).fold(0.0, f64::max)
    }
}
