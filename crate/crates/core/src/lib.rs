//! Analysis, partitioning and execution of dataflow protocol models.
//!
//! A model wires cryptographic and plumbing primitives into a network.
//! This crate derives the minimal confidentiality and integrity guarantee
//! every port must carry ([`analysis`]), explains contradictory models
//! with minimal constraint cores, checks declared expectations against the
//! derived guarantees ([`assertions`]), groups instances into protection
//! domains under several merge strategies and prices the result
//! ([`partition`]), and validates models by actually running them
//! ([`exec`]). [`io`] reads and writes the XML model format and [`netgen`]
//! grows pseudo-random models for testing.

pub mod analysis;
pub mod assertions;
pub mod exec;
pub mod graph;
pub mod io;
pub mod netgen;
pub mod partition;
pub mod registry;
mod rand;
pub mod rule;
pub mod sat;

pub use analysis::{
    brute_force_lexmin, collect_constraints, confirm_lexmin_by_flips, extract_conflict,
    solve_lexmin, AnalysisError, Conflict, Constraint, Label, Outcome,
};
pub use assertions::{check_assertions, Assertion, Violation};
pub use exec::{run, ExecError, ExecOptions, RunOutcome};
pub use graph::{
    bind_instance, domain_label, Assignment, Channel, DomainId, DomainSet, Guarantee,
    GuaranteeAtom, GuaranteeKind, Instance, ModelError, Network, PrimitiveSpec,
    ValidationReport,
};
pub use io::{annotate_conflict, parse_model, serialize_annotated, serialize_model, Document, ParseError};
pub use netgen::{random_network, sized_network};
pub use partition::{
    channel_policy, compute_metrics, metrics_table, monolithic_metrics, parse_weights,
    partition, partition_bounded, tcb_class, MergeBound, Metrics, PolicyEntry, Strategy,
    TcbClass, Weights, WeightsError,
};
pub use rule::{eval_rule, free_atoms, instantiate_rule, normalize, parse_rule, RuleExpr, RuleParseError};
