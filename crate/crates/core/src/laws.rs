//! Algebraic laws of strong bisimilarity, checked on random instances.

use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::bisim::{Checker, Verdict};
use crate::encode::{handler, renaming_policy};
use crate::error::Result;
use crate::gen::{random_prefix, random_process, rng, GenConfig};
use crate::name::Name;
use crate::parser::render;
use crate::syntax::{free_names, Prefix, Process};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Law {
    /// `[a=a]pi.P ~ pi.P`
    ReflexiveMatch,
    /// `P | (Q | R) ~ (P | Q) | R`
    ParAssociative,
    /// `P | Q ~ Q | P`
    ParCommutative,
    /// `P | 0 ~ P`
    ParUnit,
    /// `(new k)(new l)P ~ (new l)(new k)P`
    RestrictionSwap,
    /// `(new k)0 ~ 0`
    RestrictNil,
    /// `P | (new k)Q ~ (new k)(P | Q)` for `k` not free in `P`
    ScopeExtrusion,
    /// `!P ~ P | !P`
    ReplicationUnfold,
    /// `(new k)!k(x..).P ~ 0`
    DeadReplicatedInput,
    /// `(new k, n_k, m_k)H_k ~ 0`
    RestrictedHandler,
    /// `P | Q ~ P`, which is false: used to check that the suite can fail.
    DropParallel,
}

impl Law {
    pub const ALL: [Law; 10] = [
        Law::ReflexiveMatch,
        Law::ParAssociative,
        Law::ParCommutative,
        Law::ParUnit,
        Law::RestrictionSwap,
        Law::RestrictNil,
        Law::ScopeExtrusion,
        Law::ReplicationUnfold,
        Law::DeadReplicatedInput,
        Law::RestrictedHandler,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Law::ReflexiveMatch => "[a=a]pi.P ~ pi.P",
            Law::ParAssociative => "P|(Q|R) ~ (P|Q)|R",
            Law::ParCommutative => "P|Q ~ Q|P",
            Law::ParUnit => "P|0 ~ P",
            Law::RestrictionSwap => "(new k)(new l)P ~ (new l)(new k)P",
            Law::RestrictNil => "(new k)0 ~ 0",
            Law::ScopeExtrusion => "P|(new k)Q ~ (new k)(P|Q), k not in fn(P)",
            Law::ReplicationUnfold => "!P ~ P|!P",
            Law::DeadReplicatedInput => "(new k)!k(x).P ~ 0",
            Law::RestrictedHandler => "(new k,n_k,m_k)H_k ~ 0",
            Law::DropParallel => "P|Q ~ P",
        }
    }

    /// Builds one instance `(lhs, rhs)` from random components.
    pub fn instance<R: Rng>(self, rng: &mut R, cfg: &GenConfig) -> Result<(Process, Process)> {
        let term = |rng: &mut R| random_process(rng, cfg);
        let channel = |rng: &mut R| cfg.channels.choose(rng).expect("channels").clone();
        Ok(match self {
            Law::ReflexiveMatch => {
                let pi = random_prefix(rng, cfg);
                let a = channel(rng);
                let p = term(rng);
                let guarded = Prefix::guarded(a.clone(), a, pi.clone());
                (Process::prefixed(guarded, p.clone()), Process::prefixed(pi, p))
            }
            Law::ParAssociative => {
                let (p, q, r) = (term(rng), term(rng), term(rng));
                (
                    Process::par(p.clone(), Process::par(q.clone(), r.clone())),
                    Process::par(Process::par(p, q), r),
                )
            }
            Law::ParCommutative => {
                let (p, q) = (term(rng), term(rng));
                (Process::par(p.clone(), q.clone()), Process::par(q, p))
            }
            Law::ParUnit => {
                let p = term(rng);
                (Process::par(p.clone(), Process::Nil), p)
            }
            Law::RestrictionSwap => {
                let p = term(rng);
                let k = channel(rng);
                let l = channel(rng);
                (
                    Process::restrict(vec![k.clone()], Process::restrict(vec![l.clone()], p.clone())),
                    Process::restrict(vec![l], Process::restrict(vec![k], p)),
                )
            }
            Law::RestrictNil => (Process::restrict(vec![channel(rng)], Process::Nil), Process::Nil),
            Law::ScopeExtrusion => {
                let (p, q) = (term(rng), term(rng));
                let free = free_names(&p);
                let candidates: Vec<&Name> = cfg.channels.iter().filter(|c| !free.contains(*c)).collect();
                let k = match candidates.choose(rng) {
                    Some(k) => (*k).clone(),
                    None => Name::channel("z"),
                };
                (
                    Process::par(p.clone(), Process::restrict(vec![k.clone()], q.clone())),
                    Process::restrict(vec![k], Process::par(p, q)),
                )
            }
            Law::ReplicationUnfold => {
                let p = term(rng);
                (Process::repl(p.clone()), Process::par(p.clone(), Process::repl(p)))
            }
            Law::DeadReplicatedInput => {
                let k = channel(rng);
                let p = term(rng);
                let x = Name::variable("x");
                (
                    Process::restrict(vec![k.clone()], Process::repl(Process::receive(k, vec![x], p))),
                    Process::Nil,
                )
            }
            Law::RestrictedHandler => {
                let k = channel(rng);
                let t = renaming_policy(&k)?;
                (Process::restrict(vec![t.base, t.n_name, t.m_name], handler(&k)?), Process::Nil)
            }
            Law::DropParallel => {
                let (p, q) = (term(rng), term(rng));
                (Process::par(p.clone(), q), p)
            }
        })
    }
}

impl fmt::Display for Law {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LawFailure {
    pub lhs: String,
    pub rhs: String,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, Serialize)]
pub struct LawReport {
    pub law: Law,
    pub name: &'static str,
    pub instances: usize,
    pub failures: Vec<LawFailure>,
}

impl LawReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub seed: u64,
    pub depth: usize,
    pub laws: Vec<LawReport>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.laws.iter().all(LawReport::passed)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.laws {
            let status = if l.passed() { "pass" } else { "FAIL" };
            writeln!(f, "{status} {:<45} {} instances, {} failures", l.name, l.instances, l.failures.len())?;
            if let Some(first) = l.failures.first() {
                writeln!(f, "  lhs: {}\n  rhs: {}\n  {}", first.lhs, first.rhs, first.verdict)?;
            }
        }
        Ok(())
    }
}

/// Size bound for the random components of law instances.
pub const LAW_TERM_SIZE: usize = 6;

/// Checks `instances` random instances of each law at `depth`.
pub fn check_laws(laws: &[Law], seed: u64, instances: usize, depth: usize) -> Result<Report> {
    let cfg = GenConfig::cpi(LAW_TERM_SIZE);
    let mut reports = Vec::with_capacity(laws.len());
    for (i, &law) in laws.iter().enumerate() {
        let mut r = rng(seed.wrapping_add(i as u64));
        let mut checker = Checker::new();
        let mut failures = Vec::new();
        for _ in 0..instances {
            let (lhs, rhs) = law.instance(&mut r, &cfg)?;
            let verdict = checker.check(&lhs, &rhs, depth)?;
            if !verdict.is_bisimilar() {
                failures.push(LawFailure { lhs: render(&lhs), rhs: render(&rhs), verdict });
            }
        }
        reports.push(LawReport { law, name: law.name(), instances, failures });
    }
    Ok(Report { seed, depth, laws: reports })
}

/// Checks the ten standard laws.
pub fn law_suite(seed: u64, instances: usize, depth: usize) -> Result<Report> {
    check_laws(&Law::ALL, seed, instances, depth)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suite_passes() {
        let report = law_suite(1, 10, 3).unwrap();
        assert!(report.passed(), "{report}");
    }

    #[test]
    fn dropping_a_component_is_caught() {
        let report = check_laws(&[Law::DropParallel], 1, 20, 3).unwrap();
        assert!(!report.passed());
    }
}
