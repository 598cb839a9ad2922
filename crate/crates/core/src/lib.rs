//! Analysis of position-dependent force fields through their generalized
//! potentials: classification by curl and helicity, verification of the
//! representations `F = -V∇U` and `F = -V∇U - ∇W`, particle dynamics with
//! work-energy diagnostics, work integrals, zero-work accessibility
//! constructions and the auxiliary Hamiltonian of a curl force.

// `!(x > 0.0)` guards deliberately reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod accessibility;
pub mod auxiliary;
pub mod cli;
pub mod darboux;
pub mod dynamics;
pub mod error;
pub mod exprlang;
pub mod fieldkit;
pub mod ode;
pub mod pathwork;
pub mod types;

pub use error::{Error, Result};
pub use types::{Dim, Mat3, Vec3};
