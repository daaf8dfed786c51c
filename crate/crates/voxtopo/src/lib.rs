//! Topology of 3D probability volumes.
//!
//! The pipeline this crate supports: compute the persistence barcode of a
//! probability volume over its super-level-set filtration ([`cubical`]),
//! score the barcode against target Betti numbers and push voxel-level
//! subgradients back through the pairing ([`loss`]), and run gradient
//! descent on a logit reparameterization of the volume until the thresholded
//! prediction has the prescribed topology ([`refine`]). Around that core:
//! tube masks grown from centerline paths ([`cylinder`]), overlap and
//! surface-distance metrics with a paired t-test ([`metrics`]), and seeded
//! synthetic phantoms for end-to-end evaluation ([`phantom`]).
//!
//! Conventions shared by every module: volumes are row-major with x fastest
//! (voxel (ix, iy, iz) at linear index `ix + nx * (iy + ny * iz)`), spacing
//! is in millimeters, and `threshold(vol, p)` keeps voxels with value >= p.

pub mod cubical;
pub mod cylinder;
pub mod error;
pub mod loss;
pub mod metrics;
pub mod phantom;
pub mod refine;
pub mod rng;
pub mod volume;

pub use error::{Error, Result};
pub use volume::{BinaryVolume, ScalarVolume, Volume};
