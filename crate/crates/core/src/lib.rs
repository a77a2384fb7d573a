//! Simulation and exact analysis of the two-photon polarization Bell experiment.
//!
//! ```
//! use bellsim::{models::{by_id, Model}, Angle};
//!
//! let retro = by_id("retro").unwrap();
//! let e = retro.exact_correlator(Angle::ZERO, Angle::frac_pi(1, 8)).unwrap();
//! assert!((e - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
//! ```

pub mod angle;
pub mod inequalities;
pub mod models;
pub mod signaling;
pub mod statistics;
pub mod stream;
pub mod trial;
pub mod wire;

pub use angle::{angular_distance, canonicalize, polarizer_sign, Angle, AngleError, Outcome};
pub use models::{Model, ModelError};
pub use stream::RandomStream;
pub use trial::{Hidden, SamplingOrder, Trial, TrialSet};
