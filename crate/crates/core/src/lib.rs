//! Finite sequential stochastic teams.
//!
//! Teams are described by a [`model::TeamSpec`]: a prior on `ω0`, one
//! measurement kernel and action space per decision maker, and a cost over
//! `ω0` and the actions. The crate evaluates policies, reduces teams to
//! independent static form, builds and validates strategic measures, and
//! solves teams exactly by dynamic programming over extended states, with a
//! brute-force oracle for cross-checking.
//!
//! Heavy loops run on rayon when the `parallel` feature is on (the default).
//! Every parallel path has a sequential twin selected with
//! [`par::Execution::Sequential`], and results do not depend on the choice.

pub mod cases;
pub mod error;
pub mod layout;
pub mod model;
pub mod oracle;
pub mod par;
pub mod random;
pub mod reduction;
pub mod solver;
pub mod strategic;

pub use error::{Result, TeamError};
