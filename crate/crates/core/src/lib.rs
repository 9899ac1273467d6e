//! Workbench for the confidential pi-calculus: syntax and parsing, an early
//! labelled transition system, bounded bisimulation, a non-forwarding
//! analyzer and the encoding of the full pi-calculus into its confidential
//! fragment.

pub mod bisim;
pub mod encode;
pub mod error;
pub mod gen;
pub mod laws;
pub mod lts;
pub mod name;
pub mod nonforward;
pub mod parser;
pub mod syntax;

pub use bisim::{check, check_closed_domain_instance, Checker, CounterStep, Outcome, Side, Verdict};
pub use encode::{
    check_completeness, encode, encode_with_handlers, handler, renaming_policy, source_reductions, Encoder,
    EncodingReport, NameTriple,
};
pub use error::{Error, Result};
pub use laws::{check_laws, law_suite, Law, LawReport, Report};
pub use lts::{run_trace, successors, tau_reachable, tau_successors, Action, TauReach, Transition, TransitionRecord};
pub use name::{FreshNames, Name, NameKind};
pub use nonforward::{
    check_nonforwarding, check_nonforwarding_with, static_guarantee, witness_check, Evidence, EvidenceResult,
    ForwardingViolation, NFResult, NFVerdict, StaticGuarantee, TaintRule,
};
pub use parser::{parse, render, ParseMode, ParseOptions};
pub use syntax::{
    all_names, alpha_eq, bound_names, canonicalize, free_names, free_output_objects, fnn, rename_apart, substitute,
    validate_cpi, Prefix, Process, Substitution, ValidationReport, Violation, ViolationKind,
};
