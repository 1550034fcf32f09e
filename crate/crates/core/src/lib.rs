//! Abstract machines for the weak head λ-calculus strategy, instrumented to
//! measure their overhead against the number of β-steps they simulate.
//!
//! The crate provides named terms and reference reducers ([`term`],
//! [`strategy`]), size-exploding term families ([`family`]), four machines
//! behind a common interface ([`search_am`], [`micro_am`], [`mam`], [`kam`]),
//! the conformance harness ([`machine::harness`]), and cost accounting,
//! benchmarking and emission ([`metrics`], [`bench`], [`emit`]).

pub mod bench;
pub mod corpus;
pub mod emit;
pub mod family;
pub mod kam;
pub mod machine;
pub mod mam;
pub mod metrics;
pub mod micro_am;
pub mod search_am;
pub mod strategy;
pub mod suite;
pub mod term;
