//! Joint user grouping and multicast transmit beamforming.
//!
//! Two problem shapes are covered. In the two-slot model every user is
//! assigned to exactly one of two time slots and each slot carries one
//! multicast beam; the mixed-binary program couples the 0/1 assignment with
//! the beam vectors through per-user quality constraints. In the multi-slot
//! model there are Q slots and user i must be covered in at least P_i of
//! them. Both are handled the same way: lift to a semidefinite relaxation
//! over per-slot Gram matrices plus relaxed assignment weights, then recover
//! an assignment and beams by thresholding the weights and sampling Gaussian
//! vectors from the relaxation's covariance blocks.
//!
//! The crate is organized bottom-up:
//!
//! - [`linalg`]: dense real-symmetric and complex-Hermitian kernels,
//! - [`instance`]: problem data and validation,
//! - [`sdp`]: a small dense interior-point solver with a complex-to-real
//!   embedding,
//! - [`relaxation`]: builders for the two relaxations and solution
//!   extraction,
//! - [`rounding`]: randomized extraction of binary assignments and beams,
//! - [`bounds`]: approximation-ratio constants and checks,
//! - [`oracle`]: enumeration brackets for small instances,
//! - [`rng`]: keyed deterministic random streams.
//!
//! Everything here is deterministic given explicit seeds; file formats, the
//! CLI, and parallel drivers live in the companion crate.

#![cfg_attr(not(feature = "std"), no_std)]
#![warn(missing_docs)]

extern crate alloc;

pub mod bounds;
pub mod instance;
pub mod linalg;
pub mod oracle;
pub mod relaxation;
pub mod rng;
pub mod rounding;
pub mod sdp;
