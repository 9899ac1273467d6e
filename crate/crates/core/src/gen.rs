//! Seeded random generation of monadic terms, for property tests, the law
//! suite and benchmarks.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::name::Name;
use crate::syntax::{Prefix, Process};

/// Deterministic generator used throughout the workbench.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Clone, Debug)]
pub struct GenConfig {
    /// Upper bound on [`Process::size`].
    pub max_size: usize,
    /// Free channels the term may mention.
    pub channels: Vec<Name>,
    /// Free variables the term may mention (as subjects, guards, or, when
    /// forwarding is allowed, objects).
    pub variables: Vec<Name>,
    /// Allow received variables as output objects (full pi-calculus).
    pub forwarding: bool,
    pub replication: bool,
    pub matches: bool,
}

impl GenConfig {
    /// Monadic confidential terms over `a, b, c`.
    pub fn cpi(max_size: usize) -> Self {
        GenConfig {
            max_size,
            channels: ["a", "b", "c"].into_iter().map(Name::channel).collect(),
            variables: Vec::new(),
            forwarding: false,
            replication: true,
            matches: true,
        }
    }

    /// Monadic full pi-calculus terms over `a, b, c`.
    pub fn pi(max_size: usize) -> Self {
        GenConfig { forwarding: true, ..Self::cpi(max_size) }
    }
}

struct Scope<'a> {
    cfg: &'a GenConfig,
    channels: Vec<Name>,
    variables: Vec<Name>,
    counter: usize,
    repl_depth: usize,
}

impl Scope<'_> {
    fn subject<R: Rng>(&self, rng: &mut R) -> Name {
        let vars = self.variables.len();
        let i = rng.gen_range(0..self.channels.len() + vars);
        if i < self.channels.len() {
            self.channels[i].clone()
        } else {
            self.variables[i - self.channels.len()].clone()
        }
    }

    fn object<R: Rng>(&self, rng: &mut R) -> Name {
        if self.cfg.forwarding {
            self.subject(rng)
        } else {
            self.channels.choose(rng).expect("at least one channel").clone()
        }
    }

    fn fresh(&mut self, stem: &str) -> String {
        self.counter += 1;
        format!("{stem}{}", self.counter)
    }

    fn action<R: Rng>(&mut self, rng: &mut R) -> (Prefix, Option<Name>) {
        let subject = self.subject(rng);
        if rng.gen_bool(0.5) {
            (Prefix::send(subject, vec![self.object(rng)]), None)
        } else {
            let x = Name::variable(self.fresh("x"));
            (Prefix::receive(subject, vec![x.clone()]), Some(x))
        }
    }

    fn process<R: Rng>(&mut self, rng: &mut R, budget: usize) -> Process {
        if budget <= 1 {
            return Process::Nil;
        }
        let mut choices: Vec<(u8, u32)> = vec![(b'p', 6), (b'n', 2), (b'0', 1)];
        if budget >= 3 {
            choices.push((b'|', 3));
            if self.cfg.matches {
                choices.push((b'=', 1));
            }
        }
        if self.cfg.replication && self.repl_depth < 1 {
            choices.push((b'!', 1));
        }
        let kind = choices.choose_weighted(rng, |c| c.1).expect("non-empty").0;
        match kind {
            b'0' => Process::Nil,
            b'|' => {
                let left = rng.gen_range(1..=budget - 2);
                let l = self.process(rng, left);
                let r = self.process(rng, budget - 1 - left);
                Process::par(l, r)
            }
            b'n' => {
                let k = Name::channel(self.fresh("r"));
                self.channels.push(k.clone());
                let body = self.process(rng, budget - 1);
                self.channels.pop();
                Process::restrict(vec![k], body)
            }
            b'!' => {
                self.repl_depth += 1;
                let body = self.process(rng, budget - 1);
                self.repl_depth -= 1;
                Process::repl(body)
            }
            guard => {
                let guarded = guard == b'=';
                let used = if guarded { 2 } else { 1 };
                let (mut prefix, bound) = self.action(rng);
                if guarded {
                    prefix = Prefix::guarded(self.subject(rng), self.subject(rng), prefix);
                }
                if let Some(x) = &bound {
                    self.variables.push(x.clone());
                }
                let cont = self.process(rng, budget - used);
                if bound.is_some() {
                    self.variables.pop();
                }
                Process::prefixed(prefix, cont)
            }
        }
    }
}

/// A random monadic process with `size() <= cfg.max_size`. Without
/// forwarding every generated term is a valid confidential term.
pub fn random_process<R: Rng>(rng: &mut R, cfg: &GenConfig) -> Process {
    let mut scope = Scope {
        cfg,
        channels: cfg.channels.clone(),
        variables: cfg.variables.clone(),
        counter: 0,
        repl_depth: 0,
    };
    let max = cfg.max_size.max(1);
    let size = rng.gen_range(max.div_ceil(2)..=max);
    scope.process(rng, size)
}

/// A random unguarded monadic prefix over the configured free names.
pub fn random_prefix<R: Rng>(rng: &mut R, cfg: &GenConfig) -> Prefix {
    let mut scope = Scope {
        cfg,
        channels: cfg.channels.clone(),
        variables: cfg.variables.clone(),
        counter: 0,
        repl_depth: 0,
    };
    scope.action(rng).0
}
