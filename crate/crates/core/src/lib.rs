//! DCT-compressed policy evolution for hexapod gait generation.
//!
//! A 6x450 history of joint positions, velocities and accelerations is
//! compressed to its 6x9 block of lowest-frequency DCT coefficients, fed
//! through an evolved elementwise affine policy, and turned into
//! per-motor sinusoid parameters. A steady-state GA evolves the policy on a
//! kinematic hexapod surrogate, and the `experiment` module compares it
//! against an uncompressed baseline policy.

pub mod dct;
pub mod error;
pub mod experiment;
pub mod gait;
pub mod matrix;
pub mod output;
pub mod policy;
pub mod rng;
pub mod sim;
pub mod ssga;
pub mod stats;

pub use error::{Error, Result};
pub use matrix::RealMatrix;
