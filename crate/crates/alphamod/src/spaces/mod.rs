//! Function spaces on a discretised box.

pub mod embedding;
mod grid;
pub mod norms;

pub use embedding::{embedding_threshold, Boundary, EmbeddingKind, Threshold};
pub use grid::{FreqGrid, GridFunction};

pub use norms::{
    alpha_mod_norm, lp_equivalence_check, lp_norm, sigma_tau, sobolev_norm, ExponentTuple, IndexPair,
};
