//! Proportionality axioms for approval-based committee elections.
//!
//! The crate checks JR, t-EJR+ and EJR+ for candidate sets, counts and
//! samples proportional committees, builds integer programs for the related
//! decision problems, and ships a few proportional voting rules, synthetic
//! generators and a pabulib reader.

#![forbid(unsafe_code)]

pub mod axioms;
pub mod count;
pub mod election;
pub mod error;
pub mod fixtures;
pub mod gen;
pub mod milp;
pub mod pabulib;
pub mod quotient;
pub mod rules;
pub mod sample;

pub use axioms::{check, check_ejrp, check_jr, check_t_ejrp, satisfies, witness_is_valid, Axiom, AxiomReport, Violation};
pub use election::{
    committee_distance, expected_random_distance, CandidateId, CandidateSet, Committee, Election,
    ElectionMeta, VoterId, DEFAULT_ENUMERATION_CAP,
};
pub use error::{Error, Result};
pub use quotient::{EquivalenceClass, QuotientStructure};
