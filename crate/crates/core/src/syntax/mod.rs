//! Prefixes, processes and the name-analysis functions over them.

pub(crate) mod subst;
mod validate;

use std::collections::BTreeSet;
use std::fmt;

pub use subst::{alpha_eq, canonicalize, rename_apart, substitute, Substitution};
pub use validate::{validate_cpi, PathStep, ValidationReport, Violation, ViolationKind};

use crate::name::Name;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Prefix {
    /// `subject!<objects>`
    Send { subject: Name, objects: Vec<Name> },
    /// `subject?(binders)`
    Receive { subject: Name, binders: Vec<Name> },
    /// `[lhs=rhs]inner`
    Match { lhs: Name, rhs: Name, inner: Box<Prefix> },
}

impl Prefix {
    pub fn send(subject: Name, objects: Vec<Name>) -> Self {
        Prefix::Send { subject, objects }
    }

    pub fn receive(subject: Name, binders: Vec<Name>) -> Self {
        Prefix::Receive { subject, binders }
    }

    pub fn guarded(lhs: Name, rhs: Name, inner: Prefix) -> Self {
        Prefix::Match { lhs, rhs, inner: Box::new(inner) }
    }

    /// The send or receive at the end of a match chain.
    pub fn action(&self) -> &Prefix {
        match self {
            Prefix::Match { inner, .. } => inner.action(),
            other => other,
        }
    }

    /// The `(lhs, rhs)` pairs of the match chain, outermost first.
    pub fn guards(&self) -> Vec<(&Name, &Name)> {
        let mut out = Vec::new();
        let mut cur = self;
        while let Prefix::Match { lhs, rhs, inner } = cur {
            out.push((lhs, rhs));
            cur = inner;
        }
        out
    }

    /// Rebuilds the match chain `guards` around `action`.
    pub fn with_guards(guards: &[(Name, Name)], action: Prefix) -> Prefix {
        guards
            .iter()
            .rev()
            .fold(action, |acc, (l, r)| Prefix::guarded(l.clone(), r.clone(), acc))
    }

    /// Names bound by this prefix in its continuation.
    pub fn binders(&self) -> &[Name] {
        match self.action() {
            Prefix::Receive { binders, .. } => binders,
            _ => &[],
        }
    }
}

#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Process {
    #[default]
    Nil,
    Prefixed { prefix: Prefix, continuation: Box<Process> },
    Par { left: Box<Process>, right: Box<Process> },
    /// `(nu k1, ..., kn) body`, definitionally `(nu k1)...(nu kn) body`.
    Restrict { channels: Vec<Name>, body: Box<Process> },
    Repl { body: Box<Process> },
}

impl Process {
    pub fn prefixed(prefix: Prefix, continuation: Process) -> Self {
        Process::Prefixed { prefix, continuation: Box::new(continuation) }
    }

    pub fn par(left: Process, right: Process) -> Self {
        Process::Par { left: Box::new(left), right: Box::new(right) }
    }

    /// Left-nested parallel composition; `0` for an empty iterator.
    pub fn par_all(parts: impl IntoIterator<Item = Process>) -> Self {
        parts
            .into_iter()
            .reduce(Process::par)
            .unwrap_or(Process::Nil)
    }

    /// Restriction; an empty channel list yields `body` unchanged.
    pub fn restrict(channels: Vec<Name>, body: Process) -> Self {
        if channels.is_empty() {
            body
        } else {
            Process::Restrict { channels, body: Box::new(body) }
        }
    }

    pub fn repl(body: Process) -> Self {
        Process::Repl { body: Box::new(body) }
    }

    pub fn send(subject: Name, objects: Vec<Name>, continuation: Process) -> Self {
        Process::prefixed(Prefix::send(subject, objects), continuation)
    }

    pub fn receive(subject: Name, binders: Vec<Name>, continuation: Process) -> Self {
        Process::prefixed(Prefix::receive(subject, binders), continuation)
    }

    pub fn is_nil(&self) -> bool {
        matches!(self, Process::Nil)
    }

    /// Number of AST nodes, counting each prefix (and each match guard) as one.
    pub fn size(&self) -> usize {
        fn prefix_size(p: &Prefix) -> usize {
            match p {
                Prefix::Match { inner, .. } => 1 + prefix_size(inner),
                _ => 1,
            }
        }
        match self {
            Process::Nil => 1,
            Process::Prefixed { prefix, continuation } => prefix_size(prefix) + continuation.size(),
            Process::Par { left, right } => 1 + left.size() + right.size(),
            Process::Restrict { body, .. } | Process::Repl { body } => 1 + body.size(),
        }
    }
}

impl fmt::Display for Process {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::parser::render(self))
    }
}

impl fmt::Debug for Process {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "`{}`", crate::parser::render(self))
    }
}

impl fmt::Display for Prefix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::parser::render_prefix(self))
    }
}

impl fmt::Debug for Prefix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "`{}`", crate::parser::render_prefix(self))
    }
}

/// Walks every name occurrence, telling the callback whether the occurrence
/// is free. `skip_reflexive_matches` drops `[a=a]` guards (for `fnn`).
fn visit_occurrences(p: &Process, skip_reflexive_matches: bool, f: &mut dyn FnMut(Occurrence<'_>)) {
    fn prefix_names<'a>(
        prefix: &'a Prefix,
        bound: &[&Name],
        skip: bool,
        f: &mut dyn FnMut(Occurrence<'_>),
    ) {
        let free = |n: &Name| !bound.contains(&n);
        match prefix {
            Prefix::Send { subject, objects } => {
                f(Occurrence { name: subject, free: free(subject), role: Role::Subject });
                for o in objects {
                    f(Occurrence { name: o, free: free(o), role: Role::OutputObject });
                }
            }
            Prefix::Receive { subject, .. } => {
                f(Occurrence { name: subject, free: free(subject), role: Role::Subject });
            }
            Prefix::Match { lhs, rhs, inner } => {
                if !(skip && lhs == rhs) {
                    f(Occurrence { name: lhs, free: free(lhs), role: Role::Matched });
                    f(Occurrence { name: rhs, free: free(rhs), role: Role::Matched });
                }
                prefix_names(inner, bound, skip, f);
            }
        }
    }

    fn go<'a>(p: &'a Process, bound: &mut Vec<&'a Name>, skip: bool, f: &mut dyn FnMut(Occurrence<'_>)) {
        match p {
            Process::Nil => {}
            Process::Prefixed { prefix, continuation } => {
                prefix_names(prefix, bound, skip, f);
                let binders = prefix.binders();
                for b in binders {
                    f(Occurrence { name: b, free: false, role: Role::Binder });
                }
                let mark = bound.len();
                bound.extend(binders.iter());
                go(continuation, bound, skip, f);
                bound.truncate(mark);
            }
            Process::Par { left, right } => {
                go(left, bound, skip, f);
                go(right, bound, skip, f);
            }
            Process::Restrict { channels, body } => {
                for c in channels {
                    f(Occurrence { name: c, free: false, role: Role::Binder });
                }
                let mark = bound.len();
                bound.extend(channels.iter());
                go(body, bound, skip, f);
                bound.truncate(mark);
            }
            Process::Repl { body } => go(body, bound, skip, f),
        }
    }

    go(p, &mut Vec::new(), skip_reflexive_matches, f);
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Role {
    Subject,
    OutputObject,
    Matched,
    Binder,
}

struct Occurrence<'a> {
    name: &'a Name,
    free: bool,
    role: Role,
}

/// `fn(p)`: names with at least one free occurrence.
pub fn free_names(p: &Process) -> BTreeSet<Name> {
    let mut out = BTreeSet::new();
    visit_occurrences(p, false, &mut |o| {
        if o.free {
            out.insert(o.name.clone());
        }
    });
    out
}

/// `bn(p)`: every name introduced by a restriction or an input binder.
pub fn bound_names(p: &Process) -> BTreeSet<Name> {
    let mut out = BTreeSet::new();
    visit_occurrences(p, false, &mut |o| {
        if o.role == Role::Binder {
            out.insert(o.name.clone());
        }
    });
    out
}

/// `fn(p) ∪ bn(p)`.
pub fn all_names(p: &Process) -> BTreeSet<Name> {
    let mut out = BTreeSet::new();
    visit_occurrences(p, false, &mut |o| {
        out.insert(o.name.clone());
    });
    out
}

/// `fo(p)`: free channels occurring as objects of output prefixes.
pub fn free_output_objects(p: &Process) -> BTreeSet<Name> {
    let mut out = BTreeSet::new();
    visit_occurrences(p, false, &mut |o| {
        if o.free && o.role == Role::OutputObject && o.name.is_channel() {
            out.insert(o.name.clone());
        }
    });
    out
}

/// Free names, except that a reflexive guard `[a=a]` contributes nothing.
pub fn fnn(p: &Process) -> BTreeSet<Name> {
    let mut out = BTreeSet::new();
    visit_occurrences(p, true, &mut |o| {
        if o.free {
            out.insert(o.name.clone());
        }
    });
    out
}
