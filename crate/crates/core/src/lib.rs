//! Schreier graphs of spinal groups acting on rooted regular trees, with
//! closed-form and brute-force spectra of their Markov operators.

pub mod action;
pub mod algebra;
pub mod bloch;
pub mod closed_form;
pub mod eigenfunctions;
mod error;
pub mod graph;
pub mod measures;
pub mod oracle;

pub use action::{act, act_boundary, BoundaryPoint, TreeWord};
pub use algebra::{Epimorphism, Generator, OmegaSequence, ResidueVector, SpinalParams};
pub use error::{Error, Result};
pub use graph::{build_boundary_ball, build_level_graph, BoundaryBall, SchreierLevelGraph};
