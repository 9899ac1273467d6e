//! Capture-avoiding substitution and alpha-conversion.

use std::collections::{BTreeMap, BTreeSet};

use super::{all_names, bound_names, free_names, Prefix, Process};
use crate::error::Error;
use crate::name::{FreshNames, Name};

/// A finite simultaneous substitution of channels for names.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Substitution {
    map: BTreeMap<Name, Name>,
}

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    /// `{to/from}`
    pub fn single(from: Name, to: Name) -> Self {
        let mut s = Self::new();
        s.insert(from, to);
        s
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (Name, Name)>) -> Self {
        let mut s = Self::new();
        for (from, to) in pairs {
            s.insert(from, to);
        }
        s
    }

    /// Adds `{to/from}`. Identity entries are dropped.
    pub fn insert(&mut self, from: Name, to: Name) {
        if from != to {
            self.map.insert(from, to);
        } else {
            self.map.remove(&from);
        }
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn get(&self, n: &Name) -> Option<&Name> {
        self.map.get(n)
    }

    pub fn domain(&self) -> impl Iterator<Item = &Name> {
        self.map.keys()
    }

    pub fn range(&self) -> impl Iterator<Item = &Name> {
        self.map.values()
    }

    fn apply_name(&self, n: &Name) -> Name {
        self.map.get(n).cloned().unwrap_or_else(|| n.clone())
    }

    fn without(&self, n: &Name) -> Substitution {
        let mut s = self.clone();
        s.map.remove(n);
        s
    }

    fn maps_to(&self, n: &Name) -> bool {
        self.map.values().any(|v| v == n)
    }
}

/// Simultaneous capture-avoiding substitution `p{sigma}`.
///
/// Fails if a name in the domain of `sigma` occurs in `p` only as a binder, or if
/// `sigma` maps anything to a variable.
pub fn substitute(p: &Process, sigma: &Substitution) -> Result<Process, Error> {
    if let Some(target) = sigma.range().find(|n| !n.is_channel()) {
        return Err(Error::SubstitutionDomain(format!(
            "substitution range must contain channels only, found variable `{target}`"
        )));
    }
    let free = free_names(p);
    let bound = bound_names(p);
    if let Some(n) = sigma.domain().find(|n| !free.contains(*n) && bound.contains(*n)) {
        return Err(Error::SubstitutionDomain(format!(
            "`{n}` is bound in the process and cannot be substituted"
        )));
    }
    Ok(subst_unchecked(p, sigma))
}

/// Capture-avoiding substitution without the domain checks. Binders that would
/// capture a name in the range are renamed to fresh reserved names.
pub(crate) fn subst_unchecked(p: &Process, sigma: &Substitution) -> Process {
    if sigma.is_empty() {
        return p.clone();
    }
    let mut fresh = FreshNames::avoiding(all_names(p).iter().chain(sigma.domain()).chain(sigma.range()));
    Subst { fresh: &mut fresh }.process(p, sigma)
}

struct Subst<'a> {
    fresh: &'a mut FreshNames,
}

impl Subst<'_> {
    /// Removes the binders from `sigma` and renames any binder that `sigma`
    /// could otherwise capture.
    fn enter_binders(&mut self, binders: &[Name], sigma: &Substitution) -> (Vec<Name>, Substitution) {
        let mut inner = sigma.clone();
        for b in binders {
            inner = inner.without(b);
        }
        let mut renamed = Vec::with_capacity(binders.len());
        for b in binders {
            if inner.maps_to(b) {
                let fresh = self.fresh.next(b.kind());
                inner.insert(b.clone(), fresh.clone());
                renamed.push(fresh);
            } else {
                renamed.push(b.clone());
            }
        }
        (renamed, inner)
    }

    fn prefix(&self, prefix: &Prefix, sigma: &Substitution, binders: &[Name]) -> Prefix {
        match prefix {
            Prefix::Send { subject, objects } => Prefix::Send {
                subject: sigma.apply_name(subject),
                objects: objects.iter().map(|o| sigma.apply_name(o)).collect(),
            },
            Prefix::Receive { subject, .. } => Prefix::Receive {
                subject: sigma.apply_name(subject),
                binders: binders.to_vec(),
            },
            Prefix::Match { lhs, rhs, inner } => Prefix::Match {
                lhs: sigma.apply_name(lhs),
                rhs: sigma.apply_name(rhs),
                inner: Box::new(self.prefix(inner, sigma, binders)),
            },
        }
    }

    fn process(&mut self, p: &Process, sigma: &Substitution) -> Process {
        if sigma.is_empty() {
            return p.clone();
        }
        match p {
            Process::Nil => Process::Nil,
            Process::Prefixed { prefix, continuation } => {
                let (binders, inner) = self.enter_binders(prefix.binders(), sigma);
                let prefix = self.prefix(prefix, sigma, &binders);
                Process::prefixed(prefix, self.process(continuation, &inner))
            }
            Process::Par { left, right } => {
                Process::par(self.process(left, sigma), self.process(right, sigma))
            }
            Process::Restrict { channels, body } => {
                let (channels, inner) = self.enter_binders(channels, sigma);
                Process::restrict(channels, self.process(body, &inner))
            }
            Process::Repl { body } => Process::repl(self.process(body, sigma)),
        }
    }
}

/// Alpha-canonical form.
///
/// Binders are renamed, in pre-order traversal order, to the reserved sequence
/// `#0, #1, ...` (skipping identifiers that occur free), and directly nested
/// restrictions are merged into one restriction list. Two processes are
/// alpha-equivalent iff their canonical forms are structurally equal.
pub fn canonicalize(p: &Process) -> Process {
    let free = free_names(p);
    let mut canon = Canon { fresh: FreshNames::avoiding(free.iter()), scope: Vec::new() };
    canon.process(p)
}

pub fn alpha_eq(p: &Process, q: &Process) -> bool {
    canonicalize(p) == canonicalize(q)
}

struct Canon {
    fresh: FreshNames,
    scope: Vec<(Name, Name)>,
}

impl Canon {
    fn lookup(&self, n: &Name) -> Name {
        self.scope
            .iter()
            .rev()
            .find(|(old, _)| old == n)
            .map(|(_, new)| new.clone())
            .unwrap_or_else(|| n.clone())
    }

    fn prefix(&self, prefix: &Prefix, binders: &[Name]) -> Prefix {
        match prefix {
            Prefix::Send { subject, objects } => Prefix::Send {
                subject: self.lookup(subject),
                objects: objects.iter().map(|o| self.lookup(o)).collect(),
            },
            Prefix::Receive { subject, .. } => Prefix::Receive {
                subject: self.lookup(subject),
                binders: binders.to_vec(),
            },
            Prefix::Match { lhs, rhs, inner } => Prefix::Match {
                lhs: self.lookup(lhs),
                rhs: self.lookup(rhs),
                inner: Box::new(self.prefix(inner, binders)),
            },
        }
    }

    fn bind(&mut self, binders: &[Name]) -> Vec<Name> {
        binders
            .iter()
            .map(|b| {
                let new = self.fresh.next(b.kind());
                self.scope.push((b.clone(), new.clone()));
                new
            })
            .collect()
    }

    fn process(&mut self, p: &Process) -> Process {
        match p {
            Process::Nil => Process::Nil,
            Process::Prefixed { prefix, continuation } => {
                let mark = self.scope.len();
                // The prefix's own names are resolved outside the binders' scope.
                let old_binders = prefix.binders().to_vec();
                let new_binders: Vec<Name> = old_binders.iter().map(|b| self.fresh.next(b.kind())).collect();
                let prefix = self.prefix(prefix, &new_binders);
                self.scope.extend(old_binders.into_iter().zip(new_binders));
                let cont = self.process(continuation);
                self.scope.truncate(mark);
                Process::prefixed(prefix, cont)
            }
            Process::Par { left, right } => {
                let l = self.process(left);
                let r = self.process(right);
                Process::par(l, r)
            }
            Process::Restrict { .. } => {
                let mut channels = Vec::new();
                let mut cur = p;
                while let Process::Restrict { channels: cs, body } = cur {
                    channels.extend(cs.iter().cloned());
                    cur = body;
                }
                let mark = self.scope.len();
                let new = self.bind(&channels);
                let body = self.process(cur);
                self.scope.truncate(mark);
                Process::restrict(new, body)
            }
            Process::Repl { body } => Process::repl(self.process(body)),
        }
    }
}

/// Renames binders apart (from each other and from every free name) while
/// keeping original identifiers wherever they are already unique.
pub fn rename_apart(p: &Process) -> Process {
    let free = free_names(p);
    let mut seen: BTreeSet<String> = free.iter().map(|n| n.ident().to_string()).collect();
    let mut fresh = FreshNames::avoiding(all_names(p).iter());
    let mut scope = Vec::new();
    apart(p, &mut seen, &mut fresh, &mut scope)
}

fn apart(p: &Process, seen: &mut BTreeSet<String>, fresh: &mut FreshNames, scope: &mut Vec<(Name, Name)>) -> Process {
    fn lookup(scope: &[(Name, Name)], n: &Name) -> Name {
        scope
            .iter()
            .rev()
            .find(|(old, _)| old == n)
            .map(|(_, new)| new.clone())
            .unwrap_or_else(|| n.clone())
    }
    fn prefix(pre: &Prefix, scope: &[(Name, Name)], binders: &[Name]) -> Prefix {
        match pre {
            Prefix::Send { subject, objects } => Prefix::Send {
                subject: lookup(scope, subject),
                objects: objects.iter().map(|o| lookup(scope, o)).collect(),
            },
            Prefix::Receive { subject, .. } => Prefix::Receive {
                subject: lookup(scope, subject),
                binders: binders.to_vec(),
            },
            Prefix::Match { lhs, rhs, inner } => Prefix::Match {
                lhs: lookup(scope, lhs),
                rhs: lookup(scope, rhs),
                inner: Box::new(prefix(inner, scope, binders)),
            },
        }
    }
    let mut pick = |b: &Name, seen: &mut BTreeSet<String>| {
        if seen.insert(b.ident().to_string()) {
            b.clone()
        } else {
            let n = fresh.next(b.kind());
            seen.insert(n.ident().to_string());
            n
        }
    };
    match p {
        Process::Nil => Process::Nil,
        Process::Prefixed { prefix: pre, continuation } => {
            let old = pre.binders().to_vec();
            let new: Vec<Name> = old.iter().map(|b| pick(b, seen)).collect();
            let pre = prefix(pre, scope, &new);
            let mark = scope.len();
            scope.extend(old.into_iter().zip(new));
            let cont = apart(continuation, seen, fresh, scope);
            scope.truncate(mark);
            Process::prefixed(pre, cont)
        }
        Process::Par { left, right } => {
            let l = apart(left, seen, fresh, scope);
            let r = apart(right, seen, fresh, scope);
            Process::par(l, r)
        }
        Process::Restrict { channels, body } => {
            let new: Vec<Name> = channels.iter().map(|b| pick(b, seen)).collect();
            let mark = scope.len();
            scope.extend(channels.iter().cloned().zip(new.iter().cloned()));
            let body = apart(body, seen, fresh, scope);
            scope.truncate(mark);
            Process::restrict(new, body)
        }
        Process::Repl { body } => Process::repl(apart(body, seen, fresh, scope)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ch(s: &str) -> Name {
        Name::channel(s)
    }
    fn var(s: &str) -> Name {
        Name::variable(s)
    }

    /// Oracle: rename every binder to a globally fresh name first, then
    /// substitute without any capture check.
    fn naive_after_renaming(p: &Process, sigma: &Substitution) -> Process {
        fn naive(p: &Process, sigma: &Substitution) -> Process {
            let f = |n: &Name| sigma.get(n).cloned().unwrap_or_else(|| n.clone());
            fn pre(x: &Prefix, f: &dyn Fn(&Name) -> Name) -> Prefix {
                match x {
                    Prefix::Send { subject, objects } => Prefix::send(f(subject), objects.iter().map(f).collect()),
                    Prefix::Receive { subject, binders } => Prefix::receive(f(subject), binders.clone()),
                    Prefix::Match { lhs, rhs, inner } => Prefix::guarded(f(lhs), f(rhs), pre(inner, f)),
                }
            }
            match p {
                Process::Nil => Process::Nil,
                Process::Prefixed { prefix, continuation } => {
                    Process::prefixed(pre(prefix, &f), naive(continuation, sigma))
                }
                Process::Par { left, right } => Process::par(naive(left, sigma), naive(right, sigma)),
                Process::Restrict { channels, body } => Process::restrict(channels.clone(), naive(body, sigma)),
                Process::Repl { body } => Process::repl(naive(body, sigma)),
            }
        }
        // Canonical binders `#n` avoid every free name and every name in sigma
        // as long as sigma mentions no reserved identifiers.
        naive(&canonicalize(p), sigma)
    }

    #[test]
    fn renames_free_subject() {
        let p = Process::receive(ch("k"), vec![var("x")], Process::Nil);
        let got = substitute(&p, &Substitution::single(ch("k"), ch("l"))).unwrap();
        assert_eq!(got, Process::receive(ch("l"), vec![var("x")], Process::Nil));
    }

    #[test]
    fn instantiates_objects() {
        // pi-mode object instantiation: g!<x>{l/x}
        let p = Process::send(ch("g"), vec![var("x")], Process::Nil);
        let got = substitute(&p, &Substitution::single(var("x"), ch("l"))).unwrap();
        assert_eq!(got, Process::send(ch("g"), vec![ch("l")], Process::Nil));
    }

    #[test]
    fn avoids_capture() {
        // ((nu l) k!<l>.m!<n>.0){l/n}
        let p = Process::restrict(
            vec![ch("l")],
            Process::send(ch("k"), vec![ch("l")], Process::send(ch("m"), vec![ch("n")], Process::Nil)),
        );
        let sigma = Substitution::single(ch("n"), ch("l"));
        let got = substitute(&p, &sigma).unwrap();
        let Process::Restrict { channels, body } = &got else { panic!("expected restriction, got {got:?}") };
        let fresh = channels[0].clone();
        assert!(fresh.is_reserved());
        assert_eq!(
            **body,
            Process::send(ch("k"), vec![fresh.clone()], Process::send(ch("m"), vec![ch("l")], Process::Nil))
        );
        assert!(alpha_eq(&got, &naive_after_renaming(&p, &sigma)));
    }

    #[test]
    fn rejects_bound_only_domain() {
        let p = Process::restrict(vec![ch("l")], Process::send(ch("k"), vec![ch("l")], Process::Nil));
        assert!(matches!(
            substitute(&p, &Substitution::single(ch("l"), ch("m"))),
            Err(Error::SubstitutionDomain(_))
        ));
    }

    #[test]
    fn canonical_forms_identify_alpha_variants() {
        let a = Process::restrict(vec![ch("l")], Process::send(ch("k"), vec![ch("l")], Process::Nil));
        let b = Process::restrict(vec![ch("m")], Process::send(ch("k"), vec![ch("m")], Process::Nil));
        assert_eq!(canonicalize(&a), canonicalize(&b));

        let x = Process::receive(ch("k"), vec![var("x")], Process::Nil);
        let y = Process::receive(ch("k"), vec![var("y")], Process::Nil);
        let z = Process::receive(ch("m"), vec![var("x")], Process::Nil);
        assert_eq!(canonicalize(&x), canonicalize(&y));
        assert_ne!(canonicalize(&x), canonicalize(&z));
    }

    #[test]
    fn canonical_form_merges_nested_restrictions() {
        let nested = Process::restrict(vec![ch("k")], Process::restrict(vec![ch("l")], Process::Nil));
        let flat = Process::restrict(vec![ch("k"), ch("l")], Process::Nil);
        assert_eq!(canonicalize(&nested), canonicalize(&flat));
    }

    #[test]
    fn canonical_binders_avoid_free_reserved_names() {
        let p = Process::restrict(
            vec![ch("l")],
            Process::send(ch("#0"), vec![ch("l")], Process::Nil),
        );
        let c = canonicalize(&p);
        assert_eq!(c, Process::restrict(vec![ch("#1")], Process::send(ch("#0"), vec![ch("#1")], Process::Nil)));
    }

    #[test]
    fn rename_apart_keeps_unique_names() {
        let p = Process::par(
            Process::send(ch("k"), vec![ch("l")], Process::Nil),
            Process::restrict(vec![ch("l")], Process::restrict(vec![ch("m")], Process::Nil)),
        );
        let q = rename_apart(&p);
        assert!(alpha_eq(&p, &q));
        let bn = bound_names(&q);
        assert!(bn.contains(&ch("m")));
        assert!(!bn.contains(&ch("l")));
    }
}
