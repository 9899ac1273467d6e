//! Bounded strong bisimilarity.
//!
//! `check(p, q, d)` plays the bisimulation game for `d` rounds: every move of
//! one side must be answered by an identically labelled move of the other into
//! a pair that survives `d - 1` further rounds. Inputs on both sides are
//! instantiated over the same environment, and bound outputs are renamed to
//! the same fresh names, so labels can be compared by equality.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::rc::Rc;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::lts::{labelled, Action};
use crate::name::{FreshNames, Name};
use crate::syntax::{all_names, canonicalize, free_names, subst::subst_unchecked, validate_cpi, Prefix, Process, Substitution};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

/// One step of a refutation: `action` was played by the side opposite to
/// `side`, and `side` could not answer it (or every answer lost later on).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CounterStep {
    pub action: Action,
    pub side: Side,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    BisimilarUpToDepth(usize),
    NotBisimilar,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub result: Outcome,
    /// Empty unless the result is `NotBisimilar`.
    pub counterexample: Vec<CounterStep>,
    pub depth_used: usize,
}

impl Verdict {
    pub fn is_bisimilar(&self) -> bool {
        matches!(self.result, Outcome::BisimilarUpToDepth(_))
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.result {
            Outcome::BisimilarUpToDepth(d) => write!(f, "bisimilar up to depth {d}"),
            Outcome::NotBisimilar => {
                write!(f, "not bisimilar (depth {})", self.depth_used)?;
                for (i, s) in self.counterexample.iter().enumerate() {
                    let side = match s.side {
                        Side::Left => "left",
                        Side::Right => "right",
                    };
                    write!(f, "\n  {}. {} (unmatched by {side})", i + 1, s.action)?;
                }
                Ok(())
            }
        }
    }
}

impl Serialize for Verdict {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut s = serializer.serialize_struct("Verdict", 3)?;
        let result = match self.result {
            Outcome::BisimilarUpToDepth(_) => "bisimilar_up_to_depth",
            Outcome::NotBisimilar => "not_bisimilar",
        };
        s.serialize_field("result", result)?;
        s.serialize_field("depth", &self.depth_used)?;
        s.serialize_field("counterexample", &self.counterexample)?;
        s.end()
    }
}

type Moves = Rc<Vec<(Action, Process)>>;

#[derive(Default)]
struct Memo {
    /// Largest depth at which the pair is known to survive.
    ok: usize,
    /// Smallest depth at which the pair is known to lose, with the refutation.
    fail: Option<(usize, Vec<CounterStep>)>,
}

/// A bisimulation checker whose memo tables persist across calls.
#[derive(Default)]
pub struct Checker {
    memo: HashMap<(Process, Process), Memo>,
    moves: HashMap<(Process, Vec<Name>), Moves>,
}

impl Checker {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn check(&mut self, p: &Process, q: &Process, depth: usize) -> Result<Verdict> {
        let (p, q) = (canonicalize(p), canonicalize(q));
        Ok(match self.game(&p, &q, depth)? {
            None => Verdict { result: Outcome::BisimilarUpToDepth(depth), counterexample: Vec::new(), depth_used: depth },
            Some(cex) => Verdict { result: Outcome::NotBisimilar, counterexample: cex, depth_used: depth },
        })
    }

    /// Transitions of `p` over `env`, with bound outputs renamed to the first
    /// fresh names outside `env`.
    fn moves(&mut self, p: &Process, env: &BTreeSet<Name>) -> Result<Moves> {
        let key = (p.clone(), env.iter().cloned().collect::<Vec<_>>());
        if let Some(m) = self.moves.get(&key) {
            return Ok(m.clone());
        }
        let fresh = FreshNames::avoiding(env.iter());
        let mut out: Vec<(Action, Process)> = Vec::new();
        for (action, target, _) in labelled(p, env, &fresh)? {
            let (action, target) = match action {
                Action::BoundOut { subject, objects, bound } => {
                    let common = fresh.peek_channels(bound.len());
                    let rho = Substitution::from_pairs(bound.iter().cloned().zip(common.iter().cloned()));
                    let objects = objects.iter().map(|n| rho.get(n).cloned().unwrap_or_else(|| n.clone())).collect();
                    let target = canonicalize(&subst_unchecked(&target, &rho));
                    (Action::BoundOut { subject, objects, bound: common }, target)
                }
                other => (other, target),
            };
            if !out.iter().any(|(a, t)| a == &action && t == &target) {
                out.push((action, target));
            }
        }
        let m = Rc::new(out);
        self.moves.insert(key, m.clone());
        Ok(m)
    }

    fn game(&mut self, p: &Process, q: &Process, depth: usize) -> Result<Option<Vec<CounterStep>>> {
        if depth == 0 || p == q {
            return Ok(None);
        }
        let key = (p.clone(), q.clone());
        if let Some(m) = self.memo.get(&key) {
            if depth <= m.ok {
                return Ok(None);
            }
            if let Some((d, cex)) = &m.fail {
                if *d <= depth {
                    return Ok(Some(cex.clone()));
                }
            }
        }
        let result = self.round(p, q, depth)?;
        let entry = self.memo.entry(key).or_default();
        match &result {
            None => entry.ok = entry.ok.max(depth),
            Some(cex) => {
                if entry.fail.as_ref().is_none_or(|(d, _)| depth < *d) {
                    entry.fail = Some((depth, cex.clone()));
                }
            }
        }
        Ok(result)
    }

    fn round(&mut self, p: &Process, q: &Process, depth: usize) -> Result<Option<Vec<CounterStep>>> {
        let env: BTreeSet<Name> =
            free_names(p).into_iter().chain(free_names(q)).filter(|n| n.is_channel()).collect();
        let pm = self.moves(p, &env)?;
        let qm = self.moves(q, &env)?;
        // Label mismatches first: they give the shortest refutations.
        for (moves, others, unmatched) in [(&pm, &qm, Side::Right), (&qm, &pm, Side::Left)] {
            for (a, _) in moves.iter() {
                if !others.iter().any(|(b, _)| a == b) {
                    return Ok(Some(vec![CounterStep { action: a.clone(), side: unmatched }]));
                }
            }
        }
        for (moves, others, unmatched) in [(&pm, &qm, Side::Right), (&qm, &pm, Side::Left)] {
            for (a, s) in moves.iter() {
                let mut first_loss = None;
                let mut answered = false;
                for (_, t) in others.iter().filter(|(b, _)| a == b) {
                    let (l, r) = match unmatched {
                        Side::Right => (s, t),
                        Side::Left => (t, s),
                    };
                    match self.game(l, r, depth - 1)? {
                        None => {
                            answered = true;
                            break;
                        }
                        Some(cex) => {
                            first_loss.get_or_insert(cex);
                        }
                    }
                }
                if !answered {
                    let mut cex = vec![CounterStep { action: a.clone(), side: unmatched }];
                    cex.extend(first_loss.unwrap_or_default());
                    return Ok(Some(cex));
                }
            }
        }
        Ok(None)
    }
}

/// Plays the `depth`-round bisimulation game between `p` and `q`.
pub fn check(p: &Process, q: &Process, depth: usize) -> Result<Verdict> {
    Checker::new().check(p, q, depth)
}

/// Returns `(lhs, rhs)`:
/// `(new k)((new l) k!<l>.m?(y).[y=l]pi.0 | k?(x).body)` and the same process
/// with `0` in place of `[y=l]pi.0`. A free channel `x` in `body` is bound to
/// the input's variable.
pub fn closed_domain_sides(body: &Process, m: &Name, pi: &Prefix) -> Result<(Process, Process)> {
    let guarded = Process::prefixed(
        Prefix::guarded(Name::variable("y"), Name::channel("l"), pi.clone()),
        Process::Nil,
    );
    let lhs = closed_domain_process(body, m, pi, guarded)?;
    let rhs = closed_domain_process(body, m, pi, Process::Nil)?;
    Ok((lhs, rhs))
}

/// The right-hand side with `pi.0` (unguarded) after `m?(y)`; not bisimilar
/// to the left-hand side whenever `pi` can fire.
pub fn closed_domain_mutant(body: &Process, m: &Name, pi: &Prefix) -> Result<Process> {
    closed_domain_process(body, m, pi, Process::prefixed(pi.clone(), Process::Nil))
}

fn closed_domain_process(body: &Process, m: &Name, pi: &Prefix, after_m: Process) -> Result<Process> {
    let k = Name::channel("k");
    let l = Name::channel("l");
    let x = Name::variable("x");
    let y = Name::variable("y");
    let body_names = all_names(body);
    let pi_names = all_names(&Process::prefixed(pi.clone(), Process::Nil));
    let mentioned: BTreeSet<&str> =
        body_names.iter().chain(&pi_names).map(|n| n.ident()).chain([m.ident()]).collect();
    for reserved in ["k", "l", "y"] {
        if mentioned.contains(reserved) {
            return Err(Error::Construction(format!("`{reserved}` is reserved by the construction")));
        }
    }
    if !m.is_channel() {
        return Err(Error::Construction(format!("`{m}` must be a channel")));
    }
    let body = subst_unchecked(body, &Substitution::single(Name::channel("x"), x.clone()));
    let sender = Process::restrict(
        vec![l.clone()],
        Process::send(k.clone(), vec![l], Process::receive(m.clone(), vec![y], after_m)),
    );
    let p = Process::restrict(vec![k.clone()], Process::par(sender, Process::receive(k, vec![x], body)));
    let report = validate_cpi(&p);
    if !report.is_valid() {
        return Err(Error::Construction(format!(
            "instance is not a confidential term: {}",
            report.violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
        )));
    }
    Ok(p)
}

/// Checks one instance of the closed-domain property: an extruded channel
/// that the receiver may not forward can never come back on `m`.
pub fn check_closed_domain_instance(body: &Process, m: &Name, pi: &Prefix, depth: usize) -> Result<Verdict> {
    let (lhs, rhs) = closed_domain_sides(body, m, pi)?;
    check(&lhs, &rhs, depth)
}
