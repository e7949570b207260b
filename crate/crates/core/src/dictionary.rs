//! Interning of IRIs and plain literals into dense resource ids.
//!
//! Ids start at 1 and follow first-intern order; the numeric order doubles as
//! the total order that decides merge direction.

use std::collections::HashMap;
use std::fmt;
use std::num::NonZeroU32;
use std::sync::RwLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const OWL_SAME_AS: &str = "http://www.w3.org/2002/07/owl#sameAs";
pub const OWL_DIFFERENT_FROM: &str = "http://www.w3.org/2002/07/owl#differentFrom";

/// Prefix for bare names in rule and query text, and the prefix `STR` strips.
pub const DEFAULT_BASE: &str = "http://example.org/";

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ResourceId(NonZeroU32);

impl ResourceId {
    /// Panics on 0, which never denotes a resource.
    pub fn new(raw: u32) -> Self {
        Self(NonZeroU32::new(raw).expect("resource id 0 is reserved"))
    }

    pub fn from_raw(raw: u32) -> Option<Self> {
        NonZeroU32::new(raw).map(Self)
    }

    #[inline]
    pub fn get(self) -> u32 {
        self.0.get()
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0.get() as usize
    }
}

impl fmt::Debug for ResourceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

impl fmt::Display for ResourceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// `precedes(a, b)`: strict total order on resources.
#[inline]
pub fn precedes(a: ResourceId, b: ResourceId) -> bool {
    a < b
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Term {
    Iri(String),
    Literal(String),
}

impl Term {
    pub fn iri(s: impl Into<String>) -> Self {
        Term::Iri(s.into())
    }

    pub fn literal(s: impl Into<String>) -> Self {
        Term::Literal(s.into())
    }

    pub fn lexical(&self) -> &str {
        match self {
            Term::Iri(s) | Term::Literal(s) => s,
        }
    }
}

impl fmt::Display for Term {
    /// N-Triples surface form.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Iri(iri) => write!(f, "<{iri}>"),
            Term::Literal(lit) => {
                f.write_str("\"")?;
                for c in lit.chars() {
                    match c {
                        '"' => f.write_str("\\\"")?,
                        '\\' => f.write_str("\\\\")?,
                        '\n' => f.write_str("\\n")?,
                        '\r' => f.write_str("\\r")?,
                        '\t' => f.write_str("\\t")?,
                        c => write!(f, "{c}")?,
                    }
                }
                f.write_str("\"")
            }
        }
    }
}

/// Ids of the two built-in properties, as currently interned.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    pub same_as: ResourceId,
    pub different_from: ResourceId,
}

#[derive(Default)]
struct Inner {
    ids: HashMap<Term, ResourceId>,
    terms: Vec<Term>,
}

#[derive(Default)]
pub struct Dictionary {
    inner: RwLock<Inner>,
}

impl Dictionary {
    pub fn new() -> Self {
        Self::default()
    }

    /// A dictionary where `owl:sameAs` is 1 and `owl:differentFrom` is 2.
    pub fn with_builtins() -> Self {
        let dict = Self::new();
        dict.vocabulary();
        dict
    }

    pub fn intern(&self, term: Term) -> ResourceId {
        if let Some(id) = self.id_of(&term) {
            return id;
        }
        let mut inner = self.inner.write().unwrap();
        if let Some(&id) = inner.ids.get(&term) {
            return id;
        }
        let next = u32::try_from(inner.terms.len() + 1).expect("resource id space exhausted");
        let id = ResourceId::new(next);
        inner.terms.push(term.clone());
        inner.ids.insert(term, id);
        id
    }

    pub fn intern_iri(&self, iri: &str) -> ResourceId {
        self.intern(Term::iri(iri))
    }

    pub fn id_of(&self, term: &Term) -> Option<ResourceId> {
        self.inner.read().unwrap().ids.get(term).copied()
    }

    pub fn lookup(&self, id: ResourceId) -> Result<Term> {
        self.inner
            .read()
            .unwrap()
            .terms
            .get(id.index() - 1)
            .cloned()
            .ok_or(Error::UnknownResource(id.get()))
    }

    /// Like [`lookup`](Self::lookup) but accepts the reserved raw id 0.
    pub fn lookup_raw(&self, raw: u32) -> Result<Term> {
        let id = ResourceId::from_raw(raw).ok_or(Error::UnknownResource(raw))?;
        self.lookup(id)
    }

    pub fn len(&self) -> usize {
        self.inner.read().unwrap().terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Interns the built-in properties if needed and returns their ids.
    pub fn vocabulary(&self) -> Vocabulary {
        Vocabulary {
            same_as: self.intern_iri(OWL_SAME_AS),
            different_from: self.intern_iri(OWL_DIFFERENT_FROM),
        }
    }

    pub fn ids(&self) -> impl Iterator<Item = ResourceId> {
        (1..=self.len() as u32).map(ResourceId::new)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_id_is_one_and_intern_is_idempotent() {
        let dict = Dictionary::new();
        assert_eq!(dict.intern_iri("a").get(), 1);
        assert_eq!(dict.intern_iri("a").get(), 1);
        assert_eq!(dict.len(), 1);
    }

    #[test]
    fn ids_follow_insertion_order() {
        let dict = Dictionary::new();
        let ids: Vec<u32> = ["a", "b", "c"].iter().map(|t| dict.intern_iri(t).get()).collect();
        assert_eq!(ids, vec![1, 2, 3]);
        assert_eq!(dict.lookup(ResourceId::new(2)).unwrap(), Term::iri("b"));
    }

    #[test]
    fn literal_and_iri_with_same_text_are_distinct() {
        let dict = Dictionary::new();
        let lit = dict.intern(Term::literal("Obama"));
        let iri = dict.intern(Term::iri("Obama"));
        assert_ne!(lit, iri);
        assert_eq!(dict.lookup(lit).unwrap(), Term::literal("Obama"));
    }

    #[test]
    fn reserved_and_unknown_ids_fail() {
        let dict = Dictionary::new();
        assert!(matches!(dict.lookup_raw(0), Err(Error::UnknownResource(0))));
        assert!(dict.lookup(ResourceId::new(7)).is_err());
    }

    #[test]
    fn builtins_take_the_first_two_ids() {
        let dict = Dictionary::with_builtins();
        let v = dict.vocabulary();
        assert_eq!((v.same_as.get(), v.different_from.get()), (1, 2));
        assert_eq!(dict.intern_iri("x").get(), 3);
    }

    #[test]
    fn precedes_is_strict_and_total() {
        let (a, b) = (ResourceId::new(1), ResourceId::new(2));
        assert!(precedes(a, b));
        assert!(!precedes(b, a));
        assert!(!precedes(b, b));
    }

    #[test]
    fn concurrent_interning_yields_a_contiguous_range() {
        let dict = Dictionary::new();
        std::thread::scope(|s| {
            for t in 0..4 {
                let dict = &dict;
                s.spawn(move || {
                    for i in 0..200 {
                        dict.intern_iri(&format!("r{}", (i * 7 + t) % 300));
                    }
                });
            }
        });
        let n = dict.len();
        for id in 1..=n as u32 {
            let term = dict.lookup(ResourceId::new(id)).unwrap();
            assert_eq!(dict.id_of(&term), Some(ResourceId::new(id)));
        }
    }
}
