//! Desk-scale numerical pluripotential theory on model Kähler manifolds.
//!
//! The crate provides flat complex tori and projective-space chart atlases
//! as grid manifolds, quasi-plurisubharmonic function fields with their
//! Monge-Ampère measures, Lelong numbers and capacities, explicit a priori
//! bound certificates for degenerate Monge-Ampère equations, a damped-Newton
//! solver, integrability experiments (Skoda-type inequalities, fiberwise
//! canonical-density integrals), Green/heat kernels on flat tori, and
//! end-to-end degenerating-family experiments.
//!
//! Everything is double precision on regular tensor grids; the library aims
//! at checkable inequalities and exact constants rather than scale.

pub mod bounds;
// pub mod density;
// pub mod family;
pub mod green;
pub mod grid;
pub mod numerics;
pub mod psh;
// pub mod report;
// pub mod skoda;
// pub mod solver;

mod error;

pub use error::{Error, Result};
pub use grid::{ManifoldKind, ModelManifold, ReferenceForm, ScalarField, VolumeReport};
pub use psh::{CapacityReport, Mask, PositiveMeasure, QuasiPshFunction};
pub use bounds::{BoundCertificate, HypothesisData};
// pub use solver::{MaProblem, MaSolution};
