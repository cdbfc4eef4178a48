//! Sparse hypergraph regularity toolkit.
//!
//! Cut-type seminorms over product test tensors, an iterative decomposition
//! algorithm, homomorphism counting (plain, signed, induced), the hypergraph
//! parameter Δ′, entropic variational problems for upper and lower tails, and
//! exact / Monte Carlo / importance-sampling tail estimation.

pub mod base;
pub mod combin;
pub mod decomposition;
pub mod error;
pub mod homomorphism;
pub mod hypergraph;
pub mod io;
pub mod norm;
pub mod stats;
pub mod tails;
pub mod tensor;
pub mod variational;
pub mod verify;

#[cfg(test)]
mod properties;

pub use base::{growing, BaseSystem, TestTensor, WeightedBase};
pub use decomposition::{decompose, verify_result, DecompositionResult, Status};
pub use error::{Error, Result};
pub use homomorphism::{
    hom_count, hom_multilinear, hom_signed, induced_hom, is_sidorenko_candidate, t_density, tp_density,
};
pub use hypergraph::{DeltaPrimeCertificate, DominatingBase, Quotient, RGraph, Rational, SignedRGraph};
pub use norm::{dual_norm_exact, dual_norm_heuristic, system_norm, CertMode, NormCertificate, NormMode};
pub use tensor::{jay, lin_form, loglik_ratio, relent, relent_scalar, DenseTensor, ErModel, SymTensor};
pub use tails::{tail_exact_enum, tail_mc, tail_tilted, TailEstimate, TailMethod};
pub use variational::{solve, Direction, SolveOptions, TailProblem, VariationalSolution};
