//! Names: the atoms every process term is built from.
//!
//! A name is either a channel or a variable. The two sorts are disjoint and a
//! name's kind never changes after construction. Identifiers starting with `#`
//! form the reserved alphabet: the parser rejects them in surface input and only
//! the fresh-name machinery (canonicalization, substitution, the encoder) emits
//! them.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::{Serialize, Serializer};

/// Prefix marking identifiers that belong to the reserved alphabet.
pub const RESERVED_PREFIX: char = '#';

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NameKind {
    Channel,
    Variable,
}

/// A channel or variable identifier.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Name {
    ident: Arc<str>,
    kind: NameKind,
}

impl Name {
    pub fn new(kind: NameKind, ident: impl AsRef<str>) -> Self {
        let ident = ident.as_ref();
        debug_assert!(!ident.is_empty(), "empty identifier");
        Name { ident: Arc::from(ident), kind }
    }

    pub fn channel(ident: impl AsRef<str>) -> Self {
        Name::new(NameKind::Channel, ident)
    }

    pub fn variable(ident: impl AsRef<str>) -> Self {
        Name::new(NameKind::Variable, ident)
    }

    /// The `n`-th name of the plain reserved sequence `#0, #1, ...`.
    pub fn reserved(kind: NameKind, n: usize) -> Self {
        Name::new(kind, format!("{RESERVED_PREFIX}{n}"))
    }

    pub fn ident(&self) -> &str {
        &self.ident
    }

    pub fn kind(&self) -> NameKind {
        self.kind
    }

    pub fn is_channel(&self) -> bool {
        self.kind == NameKind::Channel
    }

    pub fn is_variable(&self) -> bool {
        self.kind == NameKind::Variable
    }

    pub fn is_reserved(&self) -> bool {
        self.ident.starts_with(RESERVED_PREFIX)
    }

    /// Same identifier, other kind.
    pub fn with_kind(&self, kind: NameKind) -> Self {
        Name { ident: self.ident.clone(), kind }
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.ident)
    }
}

impl fmt::Debug for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            NameKind::Channel => write!(f, "{}", self.ident),
            NameKind::Variable => write!(f, "?{}", self.ident),
        }
    }
}

impl Serialize for Name {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.ident)
    }
}

/// Hands out reserved names `#<n>` whose identifiers avoid a given set.
///
/// Kind is not part of the avoidance check: a fresh channel never shares an
/// identifier with any variable in the avoided set either, which keeps rendered
/// terms unambiguous.
#[derive(Debug, Clone, Default)]
pub struct FreshNames {
    next: usize,
    avoid: BTreeSet<Arc<str>>,
}

impl FreshNames {
    pub fn avoiding<'a>(names: impl IntoIterator<Item = &'a Name>) -> Self {
        FreshNames {
            next: 0,
            avoid: names.into_iter().map(|n| n.ident.clone()).collect(),
        }
    }

    pub fn avoid(&mut self, name: &Name) {
        self.avoid.insert(name.ident.clone());
    }

    pub fn next(&mut self, kind: NameKind) -> Name {
        loop {
            let candidate = Name::reserved(kind, self.next);
            self.next += 1;
            if !self.avoid.contains(&candidate.ident) {
                self.avoid.insert(candidate.ident.clone());
                return candidate;
            }
        }
    }

    /// The first `count` fresh channels, without consuming them.
    pub fn peek_channels(&self, count: usize) -> Vec<Name> {
        let mut copy = self.clone();
        (0..count).map(|_| copy.next(NameKind::Channel)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kinds_are_disjoint() {
        assert_ne!(Name::channel("x"), Name::variable("x"));
        assert_eq!(Name::channel("x").with_kind(NameKind::Variable), Name::variable("x"));
    }

    #[test]
    fn fresh_names_skip_avoided_identifiers() {
        let taken = [Name::channel("#0"), Name::variable("#2")];
        let mut fresh = FreshNames::avoiding(taken.iter());
        assert_eq!(fresh.next(NameKind::Channel), Name::channel("#1"));
        assert_eq!(fresh.next(NameKind::Channel), Name::channel("#3"));
        assert!(fresh.next(NameKind::Variable).is_reserved());
    }
}
