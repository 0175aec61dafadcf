//! Secret key rates of CV-MDI-QKD with photon-subtracted two-mode squeezed
//! coherent and vacuum states.
//!
//! All quadratures are in shot-noise units (ħ = 2, vacuum variance 1) and
//! ordered `(q₁, p₁, q₂, p₂, …)`.

pub mod channel;
pub mod error;
pub mod experiments;
pub mod fock;
pub mod keyrate;
pub mod laguerre;
pub mod optimizer;
pub mod phase_space;
pub mod pstmsc;
pub mod states;

pub use error::{Error, Result};
