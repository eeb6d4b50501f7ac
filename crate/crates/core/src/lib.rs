//! Finite composite games mixing nonatomic populations, atomic splittable
//! and atomic non-splittable participants.
//!
//! A game is described by its evaluation function `Phi`; equilibria are the
//! solutions of the variational inequality `<Phi(x), y - x> <= 0` on the
//! product of simplices. On top of that the crate provides six evolutionary
//! dynamics, their Lyapunov functions, potential and dissipativity checks,
//! and a builder for routing games on networks.

pub mod builtin;
pub mod congestion;
pub mod dynamics;
pub mod equilibrium;
pub mod error;
pub mod game;
pub mod linalg;
pub mod lyapunov;
pub mod numdiff;
pub mod profile;
pub mod sampling;
pub mod simplex;
pub mod specfile;

pub use error::{Error, Result};
pub use game::{GameSpec, Potential};
pub use profile::{Category, Participant, StrategyProfile, TangentVector};

/// Engine version recorded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
