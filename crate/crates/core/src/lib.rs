//! Exact simulation of few-photon linear-optics protocols.
//!
//! Layers, bottom up: [`fock`] states and ladder algebra, [`multiport`]
//! transfer matrices, [`scattering`] through them with permanent engines,
//! then protocol modules built on top.

// negated comparisons double as NaN rejection
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dipole;
pub mod fock;
pub mod multiport;
pub mod qfilter;
pub mod rus;
pub mod scattering;
pub mod stategen;
pub mod time_resolved;

pub use num_complex::Complex64 as C64;
