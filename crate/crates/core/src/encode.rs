//! Encoding of the monadic, sum-free pi-calculus into the confidential
//! calculus, and a harness that checks operational completeness on closed
//! terms.
//!
//! Every source name `a` is paired with two handler addresses `#n_a` and
//! `#m_a`. A channel is never sent directly: the sender asks the subject's
//! handler for the subject (via `n_a`) and asks the object's handler to
//! deliver the object (via `m_b`); the handler then sends the object together
//! with its own addresses. Received names can therefore be used as subjects
//! and, through their handler addresses, passed on without ever being output.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Serialize, Serializer};

use crate::bisim::{Checker, Outcome, Verdict};
use crate::error::{Error, Result};
use crate::lts::{tau_reachable, tau_successors};
use crate::name::{Name, NameKind, RESERVED_PREFIX};
use crate::parser::render;
use crate::syntax::{all_names, fnn, free_names, Prefix, Process};

/// Environment variable that sets where per-occurrence name numbering starts.
pub const FRESH_START_VAR: &str = "CPI_FRESH_START";

/// A source name with its two handler addresses.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct NameTriple {
    pub base: Name,
    pub n_name: Name,
    pub m_name: Name,
}

/// `a` to `(a, #n_a, #m_a)`; the addresses share the kind of `a`.
pub fn renaming_policy(a: &Name) -> Result<NameTriple> {
    if a.is_reserved() {
        return Err(Error::ReservedName(a.clone()));
    }
    Ok(NameTriple {
        base: a.clone(),
        n_name: Name::new(a.kind(), format!("{RESERVED_PREFIX}n_{}", a.ident())),
        m_name: Name::new(a.kind(), format!("{RESERVED_PREFIX}m_{}", a.ident())),
    })
}

fn reserved(kind: NameKind, stem: &str, tag: impl fmt::Display) -> Name {
    Name::new(kind, format!("{RESERVED_PREFIX}{stem}_{tag}"))
}

/// The handler for channel `k`:
/// `!n_k(x).x!<k>.0 | !m_k(x1,x2).x1(y).(new t) y!<k,n_k,m_k,t>.x2!<t>.0`.
pub fn handler(k: &Name) -> Result<Process> {
    let NameTriple { base, n_name, m_name } = renaming_policy(k)?;
    if !base.is_channel() {
        return Err(Error::SourceMode(format!("handlers are built for channels, `{base}` is a variable")));
    }
    let tag = base.ident();
    let x = reserved(NameKind::Variable, "x", tag);
    let x1 = reserved(NameKind::Variable, "x1", tag);
    let x2 = reserved(NameKind::Variable, "x2", tag);
    let y = reserved(NameKind::Variable, "y", tag);
    let t = reserved(NameKind::Channel, "t", tag);
    let subject_server = Process::repl(Process::receive(
        n_name.clone(),
        vec![x.clone()],
        Process::send(x, vec![base.clone()], Process::Nil),
    ));
    let object_server = Process::repl(Process::receive(
        m_name.clone(),
        vec![x1.clone(), x2.clone()],
        Process::receive(
            x1,
            vec![y.clone()],
            Process::restrict(
                vec![t.clone()],
                Process::send(y, vec![base, n_name, m_name, t.clone()], Process::send(x2, vec![t], Process::Nil)),
            ),
        ),
    ));
    Ok(Process::par(subject_server, object_server))
}

/// Stateful encoder: per-occurrence names are numbered from a counter.
#[derive(Clone, Debug)]
pub struct Encoder {
    next: usize,
}

impl Default for Encoder {
    fn default() -> Self {
        Self::new()
    }
}

impl Encoder {
    /// Starts numbering at `$CPI_FRESH_START`, or 0.
    pub fn new() -> Self {
        let start = std::env::var(FRESH_START_VAR).ok().and_then(|v| v.trim().parse().ok()).unwrap_or(0);
        Self::starting_at(start)
    }

    pub fn starting_at(start: usize) -> Self {
        Encoder { next: start }
    }

    fn tick(&mut self) -> usize {
        self.next += 1;
        self.next - 1
    }

    pub fn encode(&mut self, p: &Process) -> Result<Process> {
        check_source(p)?;
        let p = surface_apart(p);
        self.process(&p)
    }

    fn process(&mut self, p: &Process) -> Result<Process> {
        Ok(match p {
            Process::Nil => Process::Nil,
            Process::Par { left, right } => Process::par(self.process(left)?, self.process(right)?),
            Process::Repl { body } => Process::repl(self.process(body)?),
            Process::Restrict { channels, body } => {
                let mut out = self.process(body)?;
                for k in channels.iter().rev() {
                    let triple = renaming_policy(k)?;
                    out = Process::restrict(
                        vec![triple.base, triple.n_name, triple.m_name],
                        Process::par(out, handler(k)?),
                    );
                }
                out
            }
            Process::Prefixed { prefix, continuation } => {
                let guards: Vec<(Name, Name)> =
                    prefix.guards().into_iter().map(|(l, r)| (l.clone(), r.clone())).collect();
                let c = self.tick();
                let cont = self.process(continuation)?;
                match prefix.action() {
                    Prefix::Send { subject, objects } => {
                        let e1 = reserved(NameKind::Channel, "e1", c);
                        let e2 = reserved(NameKind::Channel, "e2", c);
                        let y = reserved(NameKind::Variable, "y", c);
                        let subject = renaming_policy(subject)?;
                        let object = renaming_policy(&objects[0])?;
                        let body = Process::send(y.clone(), vec![e1.clone()], cont);
                        let body = Process::receive(e2.clone(), vec![y], body);
                        let body = Process::send(object.m_name, vec![e1.clone(), e2.clone()], body);
                        let first = Prefix::with_guards(&guards, Prefix::send(subject.n_name, vec![e1.clone()]));
                        Process::restrict(vec![e1, e2], Process::prefixed(first, body))
                    }
                    Prefix::Receive { subject, binders } => {
                        let x = renaming_policy(&binders[0])?;
                        let xp = reserved(NameKind::Variable, "xp", c);
                        let y = reserved(NameKind::Variable, "y", c);
                        let body = Process::receive(xp.clone(), vec![y], cont);
                        let first = Prefix::with_guards(
                            &guards,
                            Prefix::receive(subject.clone(), vec![x.base, x.n_name, x.m_name, xp]),
                        );
                        Process::prefixed(first, body)
                    }
                    Prefix::Match { .. } => unreachable!("action() strips guards"),
                }
            }
        })
    }
}

/// Encodes with a fresh [`Encoder`].
pub fn encode(p: &Process) -> Result<Process> {
    Encoder::new().encode(p)
}

/// `encode(p)` in parallel with the handlers of every free name of `p` that
/// is not only matched, in sorted order (`encode(p) | 0` if there are none).
pub fn encode_with_handlers(p: &Process) -> Result<Process> {
    encode_with_handlers_by(&mut Encoder::new(), p)
}

pub fn encode_with_handlers_by(encoder: &mut Encoder, p: &Process) -> Result<Process> {
    let encoded = encoder.encode(p)?;
    let handlers = fnn(p)
        .iter()
        .filter(|k| k.is_channel())
        .map(handler)
        .collect::<Result<Vec<_>>>()?;
    Ok(Process::par(encoded, Process::par_all(handlers)))
}

fn check_source(p: &Process) -> Result<()> {
    if let Some(n) = free_names(p).into_iter().find(|n| n.is_reserved()) {
        return Err(Error::ReservedName(n));
    }
    fn walk(p: &Process) -> Result<()> {
        match p {
            Process::Nil => Ok(()),
            Process::Par { left, right } => walk(left).and_then(|_| walk(right)),
            Process::Restrict { body, .. } | Process::Repl { body } => walk(body),
            Process::Prefixed { prefix, continuation } => {
                let arity = match prefix.action() {
                    Prefix::Send { objects, .. } => objects.len(),
                    Prefix::Receive { binders, .. } => binders.len(),
                    Prefix::Match { .. } => unreachable!("action() strips guards"),
                };
                if arity != 1 {
                    return Err(Error::SourceMode(format!(
                        "`{prefix}` is not monadic; the encoding takes monadic terms"
                    )));
                }
                walk(continuation)
            }
        }
    }
    walk(p)
}

/// Renames reserved binders (as introduced when parsing shadowed binders) to
/// surface identifiers unused anywhere in the term.
fn surface_apart(p: &Process) -> Process {
    struct Apart {
        used: BTreeSet<String>,
        scope: Vec<(Name, Name)>,
    }
    impl Apart {
        fn pick(&mut self, b: &Name) -> Name {
            if !b.is_reserved() {
                return b.clone();
            }
            let mut i = 0;
            let mut ident = "v".to_string();
            while self.used.contains(&ident) {
                i += 1;
                ident = format!("v_{i}");
            }
            self.used.insert(ident.clone());
            Name::new(b.kind(), ident)
        }
        fn look(&self, n: &Name) -> Name {
            self.scope.iter().rev().find(|(o, _)| o == n).map(|(_, m)| m.clone()).unwrap_or_else(|| n.clone())
        }
        fn prefix(&self, p: &Prefix, binders: &[Name]) -> Prefix {
            match p {
                Prefix::Send { subject, objects } => {
                    Prefix::send(self.look(subject), objects.iter().map(|o| self.look(o)).collect())
                }
                Prefix::Receive { subject, .. } => Prefix::receive(self.look(subject), binders.to_vec()),
                Prefix::Match { lhs, rhs, inner } => {
                    Prefix::guarded(self.look(lhs), self.look(rhs), self.prefix(inner, binders))
                }
            }
        }
        fn process(&mut self, p: &Process) -> Process {
            match p {
                Process::Nil => Process::Nil,
                Process::Par { left, right } => {
                    let l = self.process(left);
                    Process::par(l, self.process(right))
                }
                Process::Repl { body } => Process::repl(self.process(body)),
                Process::Restrict { channels, body } => {
                    let new: Vec<Name> = channels.iter().map(|c| self.pick(c)).collect();
                    let mark = self.scope.len();
                    self.scope.extend(channels.iter().cloned().zip(new.iter().cloned()));
                    let body = self.process(body);
                    self.scope.truncate(mark);
                    Process::restrict(new, body)
                }
                Process::Prefixed { prefix, continuation } => {
                    let old = prefix.binders().to_vec();
                    let new: Vec<Name> = old.iter().map(|b| self.pick(b)).collect();
                    let prefix = self.prefix(prefix, &new);
                    let mark = self.scope.len();
                    self.scope.extend(old.into_iter().zip(new));
                    let cont = self.process(continuation);
                    self.scope.truncate(mark);
                    Process::prefixed(prefix, cont)
                }
            }
        }
    }
    let used = all_names(p).iter().map(|n| n.ident().to_string()).collect();
    Apart { used, scope: Vec::new() }.process(p)
}

/// The reducts of a closed source term, up to alpha-equivalence.
pub fn source_reductions(p: &Process) -> Result<Vec<Process>> {
    let free = free_names(p);
    if !free.is_empty() {
        let names: Vec<String> = free.iter().map(|n| n.to_string()).collect();
        return Err(Error::SourceMode(format!("term is not closed: free {}", names.join(", "))));
    }
    tau_successors(p)
}

/// Outcome of the witness search for one source reduction.
#[derive(Clone, Debug)]
pub struct EncodingReport {
    pub source: Process,
    pub source_target: Process,
    /// Internal steps from the encoded source to the witness.
    pub tau_steps_used: Option<usize>,
    pub matched_state: Option<Process>,
    /// The game verdict for the witness, or against the encoded source when
    /// no witness was found.
    pub verdict: Verdict,
}

impl EncodingReport {
    pub fn succeeded(&self) -> bool {
        self.matched_state.is_some()
    }
}

impl Serialize for EncodingReport {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut s = serializer.serialize_struct("EncodingReport", 5)?;
        s.serialize_field("source", &render(&self.source))?;
        s.serialize_field("target", &render(&self.source_target))?;
        s.serialize_field("tau_steps", &self.tau_steps_used)?;
        s.serialize_field("witness", &self.matched_state.as_ref().map(render))?;
        s.serialize_field("verdict", &self.verdict)?;
        s.end()
    }
}

/// For every reduct `q` of the closed term `p`, searches the internal steps
/// of the encoding of `p` (breadth first, at most `tau_budget` deep) for the
/// first state bisimilar, up to `bisim_depth`, to the encoding of `q`.
pub fn check_completeness(p: &Process, tau_budget: usize, bisim_depth: usize) -> Result<Vec<EncodingReport>> {
    let reducts = source_reductions(p)?;
    if reducts.is_empty() {
        return Ok(Vec::new());
    }
    let encoded = encode_with_handlers(p)?;
    let reachable = tau_reachable(&encoded, tau_budget)?;
    let mut checker = Checker::new();
    let mut reports = Vec::with_capacity(reducts.len());
    for q in reducts {
        let target = encode_with_handlers(&q)?;
        let mut found = None;
        for (state, steps) in &reachable.states {
            let verdict = checker.check(state, &target, bisim_depth)?;
            if verdict.result != Outcome::NotBisimilar {
                found = Some((state.clone(), *steps, verdict));
                break;
            }
        }
        reports.push(match found {
            Some((state, steps, verdict)) => EncodingReport {
                source: p.clone(),
                source_target: q,
                tau_steps_used: Some(steps),
                matched_state: Some(state),
                verdict,
            },
            None => EncodingReport {
                source: p.clone(),
                source_target: q,
                tau_steps_used: None,
                matched_state: None,
                verdict: checker.check(&encoded, &target, bisim_depth)?,
            },
        });
    }
    Ok(reports)
}
