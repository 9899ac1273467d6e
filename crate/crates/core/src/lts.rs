//! Early labelled transition semantics (polyadic).
//!
//! Transitions are derived in two stages. [`commitments`] applies the rules to
//! compute every output, input abstraction and internal step a process can
//! commit to; inputs stay abstracted over their binders. [`successors`] then
//! instantiates each input with every tuple over the environment plus one
//! canonical fresh channel per tuple position, which keeps the branching
//! finite while covering every received name up to renaming.

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::name::{FreshNames, Name};
use crate::parser::render;
use crate::syntax::{canonicalize, free_names, subst::subst_unchecked, Prefix, Process, Substitution};

/// A transition label.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    /// `k!<l..>`
    Out { subject: Name, objects: Vec<Name> },
    /// `k?<l..>` (early: carries the received channels)
    In { subject: Name, objects: Vec<Name> },
    /// `(new b..) k!<l..>` with `bound ⊆ objects`
    BoundOut { subject: Name, objects: Vec<Name>, bound: Vec<Name> },
    Tau,
}

impl Action {
    pub fn subject(&self) -> Option<&Name> {
        match self {
            Action::Out { subject, .. } | Action::In { subject, .. } | Action::BoundOut { subject, .. } => {
                Some(subject)
            }
            Action::Tau => None,
        }
    }

    pub fn objects(&self) -> &[Name] {
        match self {
            Action::Out { objects, .. } | Action::In { objects, .. } | Action::BoundOut { objects, .. } => objects,
            Action::Tau => &[],
        }
    }

    pub fn bound_names(&self) -> BTreeSet<Name> {
        match self {
            Action::BoundOut { bound, .. } => bound.iter().cloned().collect(),
            _ => BTreeSet::new(),
        }
    }

    pub fn free_names(&self) -> BTreeSet<Name> {
        let bound = self.bound_names();
        self.subject()
            .into_iter()
            .chain(self.objects())
            .filter(|n| !bound.contains(*n))
            .cloned()
            .collect()
    }

    pub fn names(&self) -> BTreeSet<Name> {
        self.subject().into_iter().chain(self.objects()).cloned().collect()
    }

    pub fn is_output(&self) -> bool {
        matches!(self, Action::Out { .. } | Action::BoundOut { .. })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Action::Out { .. } => "out",
            Action::In { .. } => "in",
            Action::BoundOut { .. } => "bound_out",
            Action::Tau => "tau",
        }
    }

    /// Applies a renaming to every name in the label.
    pub fn rename(&self, sigma: &Substitution) -> Action {
        let r = |n: &Name| sigma.get(n).cloned().unwrap_or_else(|| n.clone());
        match self {
            Action::Out { subject, objects } => Action::Out { subject: r(subject), objects: objects.iter().map(r).collect() },
            Action::In { subject, objects } => Action::In { subject: r(subject), objects: objects.iter().map(r).collect() },
            Action::BoundOut { subject, objects, bound } => Action::BoundOut {
                subject: r(subject),
                objects: objects.iter().map(r).collect(),
                bound: bound.iter().map(r).collect(),
            },
            Action::Tau => Action::Tau,
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |ns: &[Name]| ns.iter().map(|n| n.ident()).collect::<Vec<_>>().join(",");
        match self {
            Action::Out { subject, objects } => write!(f, "{subject}!<{}>", list(objects)),
            Action::In { subject, objects } => write!(f, "{subject}?<{}>", list(objects)),
            Action::BoundOut { subject, objects, bound } => {
                write!(f, "(new {}) {subject}!<{}>", list(bound), list(objects))
            }
            Action::Tau => f.write_str("tau"),
        }
    }
}

impl fmt::Debug for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for Action {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut s = serializer.serialize_struct("Action", 4)?;
        s.serialize_field("kind", self.kind())?;
        s.serialize_field("subject", &self.subject())?;
        s.serialize_field("objects", self.objects())?;
        let bound: Vec<Name> = match self {
            Action::BoundOut { bound, .. } => bound.clone(),
            _ => Vec::new(),
        };
        s.serialize_field("bound", &bound)?;
        s.end()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transition {
    pub source: Process,
    pub action: Action,
    pub target: Process,
    /// Rule names of the derivation, innermost first.
    pub rules: Vec<&'static str>,
}

/// JSON view of a transition.
#[derive(Clone, Debug, Serialize)]
pub struct TransitionRecord {
    pub action: Action,
    pub target: String,
    pub rules: Vec<&'static str>,
}

impl From<&Transition> for TransitionRecord {
    fn from(t: &Transition) -> Self {
        TransitionRecord { action: t.action.clone(), target: render(&t.target), rules: t.rules.clone() }
    }
}

/// A rule-level commitment: what a process can do before early instantiation.
#[derive(Clone, Debug)]
pub(crate) enum Commit {
    Out { subject: Name, objects: Vec<Name>, bound: Vec<Name>, target: Process, rules: Vec<&'static str> },
    In { subject: Name, binders: Vec<Name>, body: Process, rules: Vec<&'static str> },
    Tau { target: Process, rules: Vec<&'static str> },
}

impl Commit {
    fn push_rule(&mut self, rule: &'static str) {
        match self {
            Commit::Out { rules, .. } | Commit::In { rules, .. } | Commit::Tau { rules, .. } => rules.push(rule),
        }
    }

    fn map_residual(mut self, rule: &'static str, f: impl FnOnce(Process) -> Process) -> Commit {
        match &mut self {
            Commit::Out { target, .. } | Commit::Tau { target, .. } => *target = f(std::mem::take(target)),
            Commit::In { body, .. } => *body = f(std::mem::take(body)),
        }
        self.push_rule(rule);
        self
    }
}

fn with(rules: &[&'static str], extra: &[&'static str], last: &'static str) -> Vec<&'static str> {
    let mut out = rules.to_vec();
    out.extend_from_slice(extra);
    out.push(last);
    out
}

fn instantiate(binders: &[Name], objects: &[Name], body: &Process) -> Process {
    let sigma = Substitution::from_pairs(binders.iter().cloned().zip(objects.iter().cloned()));
    subst_unchecked(body, &sigma)
}

fn arity_clash(subject: &Name, out: usize, inp: usize) -> Error {
    Error::Sort(format!(
        "synchronisation on `{subject}` pairs an output of arity {out} with an input of arity {inp}"
    ))
}

/// Synchronises an output commitment with an input commitment.
/// `output_left` tells which side of the composition the output came from.
fn synchronise(out: &Commit, inp: &Commit, output_left: bool) -> Result<Option<Commit>> {
    let (
        Commit::Out { subject, objects, bound, target, rules: orules },
        Commit::In { subject: isub, binders, body, rules: irules },
    ) = (out, inp)
    else {
        return Ok(None);
    };
    if subject != isub {
        return Ok(None);
    }
    if objects.len() != binders.len() {
        return Err(arity_clash(subject, objects.len(), binders.len()));
    }
    let received = instantiate(binders, objects, body);
    let pair = if output_left {
        Process::par(target.clone(), received)
    } else {
        Process::par(received, target.clone())
    };
    let (rule, target) = match (bound.is_empty(), output_left) {
        (true, true) => ("comm-l", pair),
        (true, false) => ("comm-r", pair),
        (false, true) => ("close-l", Process::restrict(bound.clone(), pair)),
        (false, false) => ("close-r", Process::restrict(bound.clone(), pair)),
    };
    let (first, second) = if output_left { (orules, irules) } else { (irules, orules) };
    Ok(Some(Commit::Tau { target, rules: with(first, second, rule) }))
}

/// Every commitment derivable for `p`. Requires distinct binders that avoid
/// the free names (as produced by [`canonicalize`]).
pub(crate) fn commitments(p: &Process) -> Result<Vec<Commit>> {
    match p {
        Process::Nil => Ok(Vec::new()),
        Process::Prefixed { prefix, continuation } => Ok(prefix_commit(prefix, continuation, Vec::new())
            .into_iter()
            .collect()),
        Process::Par { left, right } => {
            let cl = commitments(left)?;
            let cr = commitments(right)?;
            let mut out = Vec::with_capacity(cl.len() + cr.len());
            for c in &cl {
                out.push(c.clone().map_residual("par-l", |t| Process::par(t, (**right).clone())));
            }
            for c in &cr {
                out.push(c.clone().map_residual("par-r", |t| Process::par((**left).clone(), t)));
            }
            for a in &cl {
                for b in &cr {
                    if let Some(t) = synchronise(a, b, true)? {
                        out.push(t);
                    }
                    if let Some(t) = synchronise(b, a, false)? {
                        out.push(t);
                    }
                }
            }
            Ok(out)
        }
        Process::Restrict { channels, body } => {
            let mut commits = commitments(body)?;
            for k in channels.iter().rev() {
                commits = commits.into_iter().filter_map(|c| restrict_commit(k, c)).collect();
            }
            Ok(commits)
        }
        Process::Repl { body } => {
            let inner = commitments(body)?;
            let mut out = Vec::with_capacity(inner.len());
            for c in &inner {
                out.push(c.clone().map_residual("rep-act", |t| Process::par(t, p.clone())));
            }
            for a in &inner {
                for b in &inner {
                    if let Some(Commit::Tau { target, mut rules }) = synchronise(a, b, true)? {
                        let last = rules.pop();
                        rules.push(if last == Some("close-l") { "rep-close" } else { "rep-comm" });
                        out.push(Commit::Tau { target: Process::par(target, p.clone()), rules });
                    }
                }
            }
            Ok(out)
        }
    }
}

fn prefix_commit(prefix: &Prefix, continuation: &Process, mut guards: Vec<&'static str>) -> Option<Commit> {
    match prefix {
        Prefix::Match { lhs, rhs, inner } => {
            if lhs != rhs {
                return None;
            }
            guards.push("match");
            prefix_commit(inner, continuation, guards)
        }
        // Labels carry channels only: a prefix on a free variable is stuck.
        Prefix::Send { subject, objects } => {
            if !subject.is_channel() || objects.iter().any(|o| !o.is_channel()) {
                return None;
            }
            let mut rules = vec!["out"];
            rules.extend(guards);
            Some(Commit::Out {
                subject: subject.clone(),
                objects: objects.clone(),
                bound: Vec::new(),
                target: continuation.clone(),
                rules,
            })
        }
        Prefix::Receive { subject, binders } => {
            if !subject.is_channel() {
                return None;
            }
            let mut rules = vec!["in"];
            rules.extend(guards);
            Some(Commit::In { subject: subject.clone(), binders: binders.clone(), body: continuation.clone(), rules })
        }
    }
}

/// `(res)` and `(open)` for a single restricted channel.
fn restrict_commit(k: &Name, c: Commit) -> Option<Commit> {
    let wrap = |t: Process| Process::restrict(vec![k.clone()], t);
    match c {
        Commit::Tau { .. } => Some(c.map_residual("res", wrap)),
        Commit::In { ref subject, .. } => (subject != k).then(|| c.map_residual("res", wrap)),
        Commit::Out { subject, objects, mut bound, target, mut rules } => {
            if &subject == k {
                None
            } else if objects.contains(k) {
                bound.push(k.clone());
                rules.push("open");
                Some(Commit::Out { subject, objects, bound, target, rules })
            } else {
                rules.push("res");
                Some(Commit::Out { subject, objects, bound, target: wrap(target), rules })
            }
        }
    }
}

/// All transitions of `p` with inputs instantiated over `environment ∪ fn(p)`
/// plus one canonical fresh channel per tuple position.
///
/// The source is canonicalized first; targets are canonical. Bound outputs
/// carry the binder's canonical name.
pub fn successors(p: &Process, environment: &BTreeSet<Name>) -> Result<Vec<Transition>> {
    let source = canonicalize(p);
    let mut env: BTreeSet<Name> = environment.iter().filter(|n| n.is_channel()).cloned().collect();
    env.extend(free_names(&source).into_iter().filter(|n| n.is_channel()));
    let fresh = FreshNames::avoiding(env.iter());
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (action, target, rules) in labelled(&source, &env, &fresh)? {
        if seen.insert((action.clone(), target.clone())) {
            out.push(Transition { source: source.clone(), action, target, rules });
        }
    }
    Ok(out)
}

/// Early transitions of an already canonical process.
pub(crate) fn labelled(
    source: &Process,
    env: &BTreeSet<Name>,
    fresh: &FreshNames,
) -> Result<Vec<(Action, Process, Vec<&'static str>)>> {
    let mut out = Vec::new();
    for c in commitments(source)? {
        match c {
            Commit::Tau { target, rules } => out.push((Action::Tau, canonicalize(&target), rules)),
            Commit::Out { subject, objects, bound, target, rules } => {
                let action = if bound.is_empty() {
                    Action::Out { subject, objects }
                } else {
                    Action::BoundOut { subject, objects, bound }
                };
                out.push((action, canonicalize(&target), rules));
            }
            Commit::In { subject, binders, body, rules } => {
                let extra = fresh.peek_channels(binders.len());
                for tuple in input_tuples(env, &extra) {
                    let target = canonicalize(&instantiate(&binders, &tuple, &body));
                    out.push((Action::In { subject: subject.clone(), objects: tuple }, target, rules.clone()));
                }
            }
        }
    }
    Ok(out)
}

/// Tuples whose `i`-th component ranges over `env ∪ {fresh[i]}`.
fn input_tuples(env: &BTreeSet<Name>, fresh: &[Name]) -> Vec<Vec<Name>> {
    let mut tuples: Vec<Vec<Name>> = vec![Vec::new()];
    for extra in fresh {
        let mut next = Vec::with_capacity(tuples.len() * (env.len() + 1));
        for t in &tuples {
            for n in env.iter().chain(std::iter::once(extra)) {
                let mut t = t.clone();
                t.push(n.clone());
                next.push(t);
            }
        }
        tuples = next;
    }
    tuples
}

/// Targets of the internal steps of `p`, canonical and deduplicated.
pub fn tau_successors(p: &Process) -> Result<Vec<Process>> {
    let source = canonicalize(p);
    tau_targets(&source)
}

pub(crate) fn tau_targets(canonical: &Process) -> Result<Vec<Process>> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for c in commitments(canonical)? {
        if let Commit::Tau { target, .. } = c {
            let t = canonicalize(&target);
            if seen.insert(t.clone()) {
                out.push(t);
            }
        }
    }
    Ok(out)
}

/// Residuals of `p` (canonical) under exactly `action`. Bound outputs match up
/// to renaming of their bound names; the residual uses the requested names.
pub(crate) fn residuals(p: &Process, action: &Action) -> Result<Vec<Process>> {
    let mut out = Vec::new();
    let source_free = free_names(p);
    for c in commitments(p)? {
        match (c, action) {
            (Commit::Tau { target, .. }, Action::Tau) => out.push(canonicalize(&target)),
            (Commit::In { subject, binders, body, .. }, Action::In { subject: s, objects }) => {
                if &subject == s && binders.len() == objects.len() {
                    out.push(canonicalize(&instantiate(&binders, objects, &body)));
                }
            }
            (Commit::Out { subject, objects, bound, target, .. }, Action::Out { subject: s, objects: o }) => {
                if bound.is_empty() && &subject == s && &objects == o {
                    out.push(canonicalize(&target));
                }
            }
            (
                Commit::Out { subject, objects, bound, target, .. },
                Action::BoundOut { subject: s, objects: o, bound: b },
            ) => {
                if bound.len() != b.len() || &subject != s || objects.len() != o.len() {
                    continue;
                }
                if b.iter().any(|n| source_free.contains(n)) {
                    continue;
                }
                let rho = Substitution::from_pairs(bound.iter().cloned().zip(b.iter().cloned()));
                let renamed: Vec<Name> =
                    objects.iter().map(|n| rho.get(n).cloned().unwrap_or_else(|| n.clone())).collect();
                if &renamed == o {
                    out.push(canonicalize(&subst_unchecked(&target, &rho)));
                }
            }
            _ => {}
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

/// Follows `actions` from `p` and returns the final process.
///
/// Nondeterminism is resolved by search: the first path (in derivation order)
/// along which every step exists is taken. Fails with the index of the
/// deepest step that no path could perform.
pub fn run_trace(p: &Process, actions: &[Action]) -> Result<Process> {
    fn go(p: &Process, actions: &[Action], step: usize, deepest: &mut usize) -> Result<Option<Process>> {
        let Some((first, rest)) = actions.split_first() else {
            return Ok(Some(p.clone()));
        };
        let next = residuals(p, first)?;
        if next.is_empty() {
            *deepest = (*deepest).max(step);
        }
        for n in next {
            if let Some(end) = go(&n, rest, step + 1, deepest)? {
                return Ok(Some(end));
            }
        }
        Ok(None)
    }
    let mut deepest = 0;
    match go(&canonicalize(p), actions, 0, &mut deepest)? {
        Some(end) => Ok(end),
        None => Err(Error::NoSuchTransition { step: deepest }),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TauReach {
    /// Reachable processes in breadth-first order, each with its distance.
    pub states: Vec<(Process, usize)>,
    /// Set when unexplored states remained at the budget.
    pub budget_exceeded: bool,
}

impl TauReach {
    pub fn processes(&self) -> impl Iterator<Item = &Process> {
        self.states.iter().map(|(p, _)| p)
    }
}

/// Processes reachable from `p` in at most `budget` internal steps,
/// deduplicated up to alpha-equivalence.
pub fn tau_reachable(p: &Process, budget: usize) -> Result<TauReach> {
    let start = canonicalize(p);
    let mut seen = HashSet::from([start.clone()]);
    let mut states = vec![(start.clone(), 0)];
    let mut frontier = VecDeque::from([(start, 0usize)]);
    let mut budget_exceeded = false;
    while let Some((q, d)) = frontier.pop_front() {
        let next = tau_targets(&q)?;
        if d == budget {
            if next.iter().any(|n| !seen.contains(n)) {
                budget_exceeded = true;
            }
            continue;
        }
        for n in next {
            if seen.insert(n.clone()) {
                states.push((n.clone(), d + 1));
                frontier.push_back((n, d + 1));
            }
        }
    }
    Ok(TauReach { states, budget_exceeded })
}
