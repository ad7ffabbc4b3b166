//! Solvers for sequences of SPD systems `K x(n) = f(n)` with a fixed matrix.
//!
//! The crate reduces the global problem to the subdomain interface
//! ([`substructure`]), preconditions the interface problem with two-level
//! BDDC ([`bddc`]), optionally enriched by per-face eigenvectors
//! ([`adaptive`]), and solves it with (deflated) PCG that recycles Krylov
//! information between right-hand sides ([`krylov`]).
//!
//! Everything here is `no_std` + `alloc`. Enable the `parallel` feature to
//! run per-subdomain work on the rayon pool; reductions are always done in
//! subdomain order, so results do not depend on the thread count.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod adaptive;
pub mod bddc;
mod error;
pub mod flowseq;
pub mod krylov;
pub mod linalg;
pub mod mesh;
pub mod operator;
mod par;
pub mod solver;
pub mod substructure;

pub use error::{Error, Result};
