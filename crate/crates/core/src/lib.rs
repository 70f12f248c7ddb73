//! Rotation-equivariant convolutional networks on the sphere via Platonic
//! solid approximations: permutation groups, solid symmetries, face tilings,
//! equivariant linear maps, cross-face padding, layers and pixelization.

pub mod cli;
pub mod error;
pub mod permgroup;
pub mod pixelize;
pub mod pointgroup;
pub mod solids;
pub mod spherenet;
pub mod tilings;
pub mod equivmaps;
pub mod field;
pub mod padding;

pub use error::{Error, Result};
