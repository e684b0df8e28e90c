//! Thermography-guided velocity control for electrosurgical cutting.
//!
//! The crate models the moving-source temperature field around an
//! electrosurgical tip, the tip's compliant mechanics, constrained unscented
//! filters that estimate both from thermal images, and the velocity
//! optimiser that trades thermal spread against tool deflection. A
//! simulated phantom and a trial harness close the loop.

pub mod error;
pub mod thermal_field;
pub mod tool_dynamics;
pub mod estimators;
pub mod harness;
pub mod sim_phantom;
pub mod ukf;
pub mod velocity_optimizer;

pub use error::{Error, Result};
