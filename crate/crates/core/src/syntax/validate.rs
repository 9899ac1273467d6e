//! Well-formedness of confidential terms: object/binder kinds and sorting.

use std::collections::HashMap;
use std::fmt;

use serde::Serialize;

use super::{rename_apart, Prefix, Process};
use crate::name::Name;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PathStep {
    Left,
    Right,
    Body,
    Continuation,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ViolationKind {
    /// An output object that is not a channel (a received variable being forwarded).
    NonChannelObject { name: Name },
    /// An input binder that is not a variable.
    NonVariableBinder { name: Name },
    /// A name used at two different communication arities.
    Sort { name: Name, arities: (usize, usize) },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    /// Path from the root to the offending prefix.
    pub path: Vec<PathStep>,
    /// The offending prefix, rendered.
    pub prefix: String,
    #[serde(flatten)]
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let path = if self.path.is_empty() {
            "root".to_string()
        } else {
            self.path
                .iter()
                .map(|s| match s {
                    PathStep::Left => "left",
                    PathStep::Right => "right",
                    PathStep::Body => "body",
                    PathStep::Continuation => "cont",
                })
                .collect::<Vec<_>>()
                .join("/")
        };
        match &self.kind {
            ViolationKind::NonChannelObject { name } => {
                write!(f, "{path}: `{}` outputs variable `{name}` (received names cannot be sent)", self.prefix)
            }
            ViolationKind::NonVariableBinder { name } => {
                write!(f, "{path}: `{}` binds channel `{name}` (only variables can be bound by input)", self.prefix)
            }
            ViolationKind::Sort { name, arities } => write!(
                f,
                "{path}: `{}` uses `{name}` at arity {} but it is also used at arity {}",
                self.prefix, arities.1, arities.0
            ),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn sort_errors(&self) -> impl Iterator<Item = &Violation> {
        self.violations.iter().filter(|v| matches!(v.kind, ViolationKind::Sort { .. }))
    }

    pub fn kind_errors(&self) -> impl Iterator<Item = &Violation> {
        self.violations.iter().filter(|v| !matches!(v.kind, ViolationKind::Sort { .. }))
    }
}

/// Checks the confidential-calculus restrictions: outputs carry channels only,
/// inputs bind variables only, and every name is used at a single sort.
pub fn validate_cpi(p: &Process) -> ValidationReport {
    let mut report = ValidationReport::default();
    check_kinds(p, &mut Vec::new(), &mut report);
    report.violations.extend(check_sorts(p));
    report
}

fn check_kinds(p: &Process, path: &mut Vec<PathStep>, report: &mut ValidationReport) {
    match p {
        Process::Nil => {}
        Process::Prefixed { prefix, continuation } => {
            match prefix.action() {
                Prefix::Send { objects, .. } => {
                    for o in objects.iter().filter(|o| !o.is_channel()) {
                        report.violations.push(Violation {
                            path: path.clone(),
                            prefix: prefix.to_string(),
                            kind: ViolationKind::NonChannelObject { name: o.clone() },
                        });
                    }
                }
                Prefix::Receive { binders, .. } => {
                    for b in binders.iter().filter(|b| !b.is_variable()) {
                        report.violations.push(Violation {
                            path: path.clone(),
                            prefix: prefix.to_string(),
                            kind: ViolationKind::NonVariableBinder { name: b.clone() },
                        });
                    }
                }
                Prefix::Match { .. } => unreachable!("action() strips guards"),
            }
            path.push(PathStep::Continuation);
            check_kinds(continuation, path, report);
            path.pop();
        }
        Process::Par { left, right } => {
            path.push(PathStep::Left);
            check_kinds(left, path, report);
            path.pop();
            path.push(PathStep::Right);
            check_kinds(right, path, report);
            path.pop();
        }
        Process::Restrict { body, .. } | Process::Repl { body } => {
            path.push(PathStep::Body);
            check_kinds(body, path, report);
            path.pop();
        }
    }
}

/// Sort inference by unification. Each name gets a sort variable; a channel
/// sort records the sorts of the tuple it carries. Sorts may be recursive
/// (`k!<k>`), which union-find handles without an occurs check.
struct Sorts {
    parent: Vec<usize>,
    carried: Vec<Option<Vec<usize>>>,
    by_name: HashMap<Name, usize>,
}

impl Sorts {
    fn new() -> Self {
        Sorts { parent: Vec::new(), carried: Vec::new(), by_name: HashMap::new() }
    }

    fn fresh(&mut self) -> usize {
        self.parent.push(self.parent.len());
        self.carried.push(None);
        self.parent.len() - 1
    }

    fn of(&mut self, n: &Name) -> usize {
        if let Some(&v) = self.by_name.get(n) {
            return v;
        }
        let v = self.fresh();
        self.by_name.insert(n.clone(), v);
        v
    }

    fn find(&mut self, v: usize) -> usize {
        let mut root = v;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = v;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    /// Unifies two sort variables; returns the first arity clash found.
    fn unify(&mut self, a: usize, b: usize) -> Option<(usize, usize)> {
        let mut work = vec![(a, b)];
        let mut clash = None;
        while let Some((a, b)) = work.pop() {
            let (ra, rb) = (self.find(a), self.find(b));
            if ra == rb {
                continue;
            }
            self.parent[rb] = ra;
            match (self.carried[ra].take(), self.carried[rb].take()) {
                (Some(x), Some(y)) => {
                    if x.len() != y.len() {
                        clash.get_or_insert((x.len(), y.len()));
                        self.carried[ra] = Some(x);
                    } else {
                        work.extend(x.iter().copied().zip(y.iter().copied()));
                        self.carried[ra] = Some(x);
                    }
                }
                (x, y) => self.carried[ra] = x.or(y),
            }
        }
        clash
    }

    /// Records that `subject` carries tuples of `objects`.
    fn use_at(&mut self, subject: &Name, objects: &[Name]) -> Option<(usize, usize)> {
        let s = self.of(subject);
        let comps: Vec<usize> = objects.iter().map(|o| self.of(o)).collect();
        let tuple = self.fresh();
        self.carried[tuple] = Some(comps);
        self.unify(s, tuple)
    }
}

fn check_sorts(p: &Process) -> Vec<Violation> {
    // Distinct binders make each name stand for exactly one binding.
    let canon = rename_apart(p);
    let mut sorts = Sorts::new();
    let mut out = Vec::new();
    sort_walk(&canon, &mut Vec::new(), &mut sorts, &mut out);
    out
}

fn sort_walk(p: &Process, path: &mut Vec<PathStep>, sorts: &mut Sorts, out: &mut Vec<Violation>) {
    match p {
        Process::Nil => {}
        Process::Prefixed { prefix, continuation } => {
            let (subject, objects) = match prefix.action() {
                Prefix::Send { subject, objects } => (subject, objects),
                Prefix::Receive { subject, binders } => (subject, binders),
                Prefix::Match { .. } => unreachable!("action() strips guards"),
            };
            if let Some(arities) = sorts.use_at(subject, objects) {
                out.push(Violation {
                    path: path.clone(),
                    prefix: prefix.to_string(),
                    kind: ViolationKind::Sort { name: subject.clone(), arities },
                });
            }
            path.push(PathStep::Continuation);
            sort_walk(continuation, path, sorts, out);
            path.pop();
        }
        Process::Par { left, right } => {
            path.push(PathStep::Left);
            sort_walk(left, path, sorts, out);
            path.pop();
            path.push(PathStep::Right);
            sort_walk(right, path, sorts, out);
            path.pop();
        }
        Process::Restrict { body, .. } | Process::Repl { body } => {
            path.push(PathStep::Body);
            sort_walk(body, path, sorts, out);
            path.pop();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::name::Name;

    fn ch(s: &str) -> Name {
        Name::channel(s)
    }
    fn var(s: &str) -> Name {
        Name::variable(s)
    }

    #[test]
    fn forwarding_is_rejected_at_the_object() {
        // k(x).g!<x>.0
        let p = Process::receive(ch("k"), vec![var("x")], Process::send(ch("g"), vec![var("x")], Process::Nil));
        let report = validate_cpi(&p);
        assert_eq!(report.violations.len(), 1);
        let v = &report.violations[0];
        assert_eq!(v.path, vec![PathStep::Continuation]);
        assert_eq!(v.kind, ViolationKind::NonChannelObject { name: var("x") });
    }

    #[test]
    fn received_subject_is_legal() {
        // k(x).x!<l>.0
        let p = Process::receive(ch("k"), vec![var("x")], Process::send(var("x"), vec![ch("l")], Process::Nil));
        assert!(validate_cpi(&p).is_valid());
    }

    #[test]
    fn arity_clash_is_a_sort_violation() {
        // k!<l>.0 | k!<l,m>.0
        let p = Process::par(
            Process::send(ch("k"), vec![ch("l")], Process::Nil),
            Process::send(ch("k"), vec![ch("l"), ch("m")], Process::Nil),
        );
        let report = validate_cpi(&p);
        let sorts: Vec<_> = report.sort_errors().collect();
        assert_eq!(sorts.len(), 1);
        assert!(matches!(&sorts[0].kind, ViolationKind::Sort { name, arities: (1, 2) } if *name == ch("k")));
    }

    #[test]
    fn sort_clash_through_communication() {
        // k!<l>.l!<m>.0 | k(x).x!<m,m>.0 : l is used at arity 1 and, via x, at arity 2
        let p = Process::par(
            Process::send(ch("k"), vec![ch("l")], Process::send(ch("l"), vec![ch("m")], Process::Nil)),
            Process::receive(ch("k"), vec![var("x")], Process::send(var("x"), vec![ch("m"), ch("m")], Process::Nil)),
        );
        assert_eq!(validate_cpi(&p).sort_errors().count(), 1);
    }

    #[test]
    fn recursive_sorts_are_fine() {
        let p = Process::par(
            Process::send(ch("k"), vec![ch("k")], Process::Nil),
            Process::receive(ch("k"), vec![var("x")], Process::send(var("x"), vec![ch("k")], Process::Nil)),
        );
        assert!(validate_cpi(&p).is_valid());
    }
}
