//! The non-forwarding property: a channel received from the environment,
//! unknown to the receiver beforehand, is never sent on afterwards.
//!
//! [`check_nonforwarding`] explores all traces up to a depth, breadth first,
//! tracking which received channels are tainted. [`static_guarantee`] gives
//! the syntactic certificate: every valid confidential term is non-forwarding.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};
use std::fmt;

use serde::{Serialize, Serializer};

use crate::bisim::{check, Verdict};
use crate::error::{Error, Result};
use crate::lts::{labelled, Action};
use crate::name::{FreshNames, Name};
use crate::syntax::{canonicalize, free_names, free_output_objects, validate_cpi, Process, ValidationReport};

/// When a received channel counts as new to the receiver.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TaintRule {
    /// Not free in the receiving state.
    #[default]
    FreeNames,
    /// Not among the free output objects of the receiving state (weaker
    /// premise, so more channels are tracked).
    FreeOutputs,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ForwardingViolation {
    pub trace: Vec<Action>,
    /// Index in `trace` of the input that received `channel`.
    pub receive_index: usize,
    /// Index in `trace` of the output that sent it on.
    pub send_index: usize,
    pub channel: Name,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NFResult {
    SatisfiedUpToDepth(usize),
    Violated,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NFVerdict {
    pub result: NFResult,
    pub depth: usize,
    pub violation: Option<ForwardingViolation>,
}

impl NFVerdict {
    pub fn is_satisfied(&self) -> bool {
        matches!(self.result, NFResult::SatisfiedUpToDepth(_))
    }
}

impl Serialize for NFVerdict {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut s = serializer.serialize_struct("NFVerdict", 3)?;
        let result = match self.result {
            NFResult::SatisfiedUpToDepth(_) => "satisfied_up_to_depth",
            NFResult::Violated => "violated",
        };
        s.serialize_field("result", result)?;
        s.serialize_field("depth", &self.depth)?;
        s.serialize_field("violation", &self.violation)?;
        s.end()
    }
}

impl fmt::Display for NFVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.result, &self.violation) {
            (NFResult::Violated, Some(v)) => {
                write!(f, "violated: `{}` received at step {} is sent at step {}", v.channel, v.receive_index, v.send_index)?;
                for (i, a) in v.trace.iter().enumerate() {
                    write!(f, "\n  {i}. {a}")?;
                }
                Ok(())
            }
            _ => write!(f, "satisfied up to depth {}", self.depth),
        }
    }
}

struct Node {
    state: Process,
    /// Tainted channels and the trace index that received each.
    taint: BTreeMap<Name, usize>,
    trace: Vec<Action>,
}

/// Explores every trace of length at most `depth` and reports the first
/// forwarding found (breadth first, so with the earliest send), using the
/// definition's premise that the channel was not free in the receiver.
pub fn check_nonforwarding(p: &Process, depth: usize) -> Result<NFVerdict> {
    check_nonforwarding_with(p, depth, TaintRule::FreeNames)
}

pub fn check_nonforwarding_with(p: &Process, depth: usize, rule: TaintRule) -> Result<NFVerdict> {
    let start = canonicalize(p);
    let initial: BTreeSet<Name> = free_names(&start).into_iter().filter(|n| n.is_channel()).collect();
    let mut visited: HashSet<(Process, Vec<Name>)> = HashSet::new();
    let mut queue = VecDeque::from([Node { state: start, taint: BTreeMap::new(), trace: Vec::new() }]);
    while let Some(node) = queue.pop_front() {
        if node.trace.len() == depth {
            continue;
        }
        let free = free_names(&node.state);
        let mut env = initial.clone();
        env.extend(free.iter().filter(|n| n.is_channel()).cloned());
        let fresh = FreshNames::avoiding(env.iter());
        let known = match rule {
            TaintRule::FreeNames => free.clone(),
            TaintRule::FreeOutputs => free_output_objects(&node.state),
        };
        for (action, target, _) in labelled(&node.state, &env, &fresh)? {
            let index = node.trace.len();
            let mut trace = node.trace.clone();
            trace.push(action.clone());
            if action.is_output() {
                let bound = action.bound_names();
                if let Some((channel, &receive_index)) = action
                    .objects()
                    .iter()
                    .filter(|o| !bound.contains(*o))
                    .find_map(|o| node.taint.get_key_value(o))
                {
                    let violation = ForwardingViolation { trace, receive_index, send_index: index, channel: channel.clone() };
                    return Ok(NFVerdict { result: NFResult::Violated, depth, violation: Some(violation) });
                }
            }
            let mut taint = node.taint.clone();
            if let Action::In { objects, .. } = &action {
                for o in objects {
                    if !known.contains(o) {
                        taint.entry(o.clone()).or_insert(index);
                    }
                }
            }
            let target_free = free_names(&target);
            taint.retain(|n, _| target_free.contains(n));
            let key = (target.clone(), taint.keys().cloned().collect::<Vec<_>>());
            if visited.insert(key) {
                queue.push_back(Node { state: target, taint, trace });
            }
        }
    }
    Ok(NFVerdict { result: NFResult::SatisfiedUpToDepth(depth), depth, violation: None })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum StaticGuarantee {
    /// The term is a valid confidential term, so it cannot forward.
    Guaranteed,
    NotApplicable { report: ValidationReport },
}

pub fn static_guarantee(p: &Process) -> StaticGuarantee {
    let report = validate_cpi(p);
    if report.is_valid() {
        StaticGuarantee::Guaranteed
    } else {
        StaticGuarantee::NotApplicable { report }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EvidenceResult {
    Positive,
    Negative,
}

/// Bounded evidence that `p` is non-forwarding because it is bisimilar (up to
/// the game depth) to a confidential witness.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Evidence {
    pub result: EvidenceResult,
    pub validation: ValidationReport,
    pub verdict: Verdict,
}

pub fn witness_check(p: &Process, q: &Process, depth: usize) -> Result<Evidence> {
    let validation = validate_cpi(q);
    if !validation.is_valid() {
        return Err(Error::WitnessNotCpi(validation));
    }
    let verdict = check(p, q, depth)?;
    let result = if verdict.is_bisimilar() { EvidenceResult::Positive } else { EvidenceResult::Negative };
    Ok(Evidence { result, validation, verdict })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lts::run_trace;
    use crate::parser::{parse, ParseMode};

    fn pi(s: &str) -> Process {
        parse(s, ParseMode::PiFull).unwrap()
    }

    #[test]
    fn plain_forward() {
        let v = check_nonforwarding(&pi("k?(x).g!<x>.0"), 2).unwrap();
        assert_eq!(v.result, NFResult::Violated);
        let w = v.violation.unwrap();
        assert_eq!((w.receive_index, w.send_index), (0, 1));
        assert!(w.channel.is_reserved());
        assert_eq!(w.trace[0], Action::In { subject: Name::channel("k"), objects: vec![w.channel.clone()] });
        assert_eq!(w.trace[1], Action::Out { subject: Name::channel("g"), objects: vec![w.channel.clone()] });
        assert_eq!(run_trace(&pi("k?(x).g!<x>.0"), &w.trace).unwrap(), Process::Nil);
    }

    #[test]
    fn private_relay_does_not_forward() {
        let v = check_nonforwarding(&pi("k?(x).new l in (l!<x>.0 | l?(y).0)"), 4).unwrap();
        assert_eq!(v.result, NFResult::SatisfiedUpToDepth(4));
    }

    #[test]
    fn extruded_relay_forwards() {
        let p = pi("k?(x).new l in (k!<l>.l!<x>.0 | l?(y).0)");
        let v = check_nonforwarding(&p, 4).unwrap();
        assert_eq!(v.result, NFResult::Violated);
        let w = v.violation.unwrap();
        assert!(run_trace(&p, &w.trace).is_ok());
    }

    #[test]
    fn known_channels_are_not_tainted() {
        // `g` is free in the receiver, so sending it back is not forwarding.
        assert!(check_nonforwarding(&pi("k?(x).[x=g]g!<g>.0"), 3).unwrap().is_satisfied());
    }

    #[test]
    fn static_examples() {
        assert_eq!(static_guarantee(&pi("k?(x).x!<l>.0")), StaticGuarantee::Guaranteed);
        assert!(matches!(static_guarantee(&pi("k?(x).g!<x>.0")), StaticGuarantee::NotApplicable { .. }));
        assert_eq!(static_guarantee(&Process::Nil), StaticGuarantee::Guaranteed);
    }

    #[test]
    fn witnesses() {
        let e = witness_check(&Process::Nil, &Process::Nil, 3).unwrap();
        assert_eq!(e.result, EvidenceResult::Positive);
        let e = witness_check(&pi("k?(x).g!<x>.0"), &pi("k?(x).g!<m>.0"), 2).unwrap();
        assert_eq!(e.result, EvidenceResult::Negative);
        // The relay keeps an internal step after the input, so the inert
        // continuation is not a strong witness; the relay over its own
        // restricted channel is.
        let p = pi("k?(x).new l in (l!<x>.0 | l?(y).0)");
        assert_eq!(witness_check(&p, &pi("k?(x).0"), 3).unwrap().result, EvidenceResult::Negative);
        let q = pi("k?(x).new l in (l!<l>.0 | l?(y).0)");
        assert_eq!(witness_check(&p, &q, 3).unwrap().result, EvidenceResult::Positive);
        assert!(matches!(witness_check(&p, &p, 3), Err(Error::WitnessNotCpi(_))));
    }

    #[test]
    fn json_shape() {
        let v = check_nonforwarding(&pi("k?(x).g!<x>.0"), 2).unwrap();
        let json = serde_json::to_value(&v).unwrap();
        assert_eq!(json["result"], "violated");
        assert_eq!(json["violation"]["send_index"], 1);
        assert_eq!(json["violation"]["trace"][1]["kind"], "out");
    }
}
