//! Robustness of quantum memories.
//!
//! Channels are stored by their normalized Choi states. The robustness
//! quantifier is computed by a PPT-relaxed semidefinite program solved by a
//! built-in interior-point method. Around it sit closed-form bounds,
//! nonlocal-game witnesses, quasi-probability simulation and a small
//! open-system dynamics model.

pub mod channels;
pub mod dynamics;
pub mod error;
pub mod games;
pub mod io;
pub mod linalg;
pub mod robustness;
pub mod sdp;
pub mod simulation;

pub use error::{Error, Result};
