//! Topological data of chiral Dirac operators coupled to constant abelian
//! potentials on tori.

pub mod cocycle;
pub mod dirac;
pub mod exform;
pub mod fock;
pub mod liegerbe;
pub mod verify;

/// Point of `ℝ³`.
pub type Vec3 = [f64; 3];
/// Point of `ℤ³`.
pub type IVec3 = [i64; 3];
