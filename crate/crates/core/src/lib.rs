//! Left-invariant Hermitian geometry on Lie algebras that contain an
//! abelian ideal of codimension two.
//!
//! The crate computes the complex structure tensors `C`/`D` of a Hermitian
//! Lie algebra in a unitary frame, builds the admissible frames adapted to
//! the ideal chain `a_J ⊂ b ⊂ a ⊂ a'`, extracts the reduced invariants of
//! the three regimes (`Ja ≠ a` with non-abelian quotient, `Ja = a`, and
//! `Ja ≠ a` with abelian quotient), verifies the closed-form identities
//! numerically against an independent Chevalley-Eilenberg oracle, searches
//! the cone of compatible metrics for balanced and pluriclosed metrics, and
//! runs the exclusion/Kählerization arguments as executable verdicts.

pub mod error;
pub mod frames;
pub mod generator;
pub mod hermitian;
pub mod liealg;
pub mod linalg;
pub mod metricsearch;
pub mod theorems;

pub mod rng;

pub(crate) mod lm;

pub use error::{Error, Result};

// dense matrix types used across the public surface
pub use nalgebra;
pub use frames::{AdmissibleFrame, CaseTag, IdealChain, JType, ReducedA, ReducedB, ReducedMain};
pub use generator::{GenParams, Instance, MetricTarget, Provenance};
pub use hermitian::{
    ComplexStructure, HermitianMetric, StructureTensors, TorsionTensor, UnitaryFrame,
};
pub use liealg::{RealLieAlgebra, Subspace};
pub use linalg::{CMatrix, CVector, Tolerance};
pub use metricsearch::{MetricParam, Objective, SearchConfig, SearchReport};
pub use theorems::{LemmaReport, MetricExistence, Verdict};
