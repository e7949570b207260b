//! The fact store: an append-only, duplicate-free log of triples.
//!
//! Every fact keeps its log position forever; removal is done by setting an
//! outdated mark. Six access paths are threaded through the log as linked
//! lists: array-headed lists by subject, predicate and object, and hash-headed
//! lists by subject-predicate, predicate-object and subject-object. New facts
//! are prepended with a CAS on the list head, so scans never take a lock.
//!
//! A single shared cursor hands out facts in log order. A fact becomes visible
//! to the cursor only after it has been linked into every access path, so a
//! fact returned by [`FactStore::next`] can always see, through the indexes,
//! every fact at an earlier position.

use std::fmt;
use std::sync::atomic::{AtomicBool, AtomicU32, AtomicUsize, Ordering};

use dashmap::mapref::entry::Entry;
use dashmap::DashMap;
use rustc_hash::FxBuildHasher;
use serde::{Deserialize, Serialize};

use crate::append_vec::AppendVec;
use crate::dictionary::ResourceId;
use crate::error::{Error, Result};

pub type Position = usize;

const NIL: u32 = u32::MAX;

const BY_S: usize = 0;
const BY_P: usize = 1;
const BY_O: usize = 2;
const BY_SP: usize = 3;
const BY_PO: usize = 4;
const BY_SO: usize = 5;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Triple {
    pub s: ResourceId,
    pub p: ResourceId,
    pub o: ResourceId,
}

impl Triple {
    pub fn new(s: ResourceId, p: ResourceId, o: ResourceId) -> Self {
        Self { s, p, o }
    }

    /// Convenience for tests and fixtures.
    pub fn raw(s: u32, p: u32, o: u32) -> Self {
        Self::new(ResourceId::new(s), ResourceId::new(p), ResourceId::new(o))
    }

    pub fn terms(&self) -> [ResourceId; 3] {
        [self.s, self.p, self.o]
    }

    pub fn map(self, mut f: impl FnMut(ResourceId) -> ResourceId) -> Self {
        Self::new(f(self.s), f(self.p), f(self.o))
    }

    pub fn contains(&self, r: ResourceId) -> bool {
        self.s == r || self.p == r || self.o == r
    }

    fn key(&self) -> [u32; 3] {
        [self.s.get(), self.p.get(), self.o.get()]
    }
}

impl fmt::Debug for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}, {}, {}>", self.s, self.p, self.o)
    }
}

/// Snapshot of a stored fact.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Fact {
    pub triple: Triple,
    pub position: Position,
    pub marked: bool,
}

/// An atom with constants in some positions and wildcards elsewhere.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct Pattern {
    pub s: Option<ResourceId>,
    pub p: Option<ResourceId>,
    pub o: Option<ResourceId>,
}

impl Pattern {
    pub fn new(s: Option<ResourceId>, p: Option<ResourceId>, o: Option<ResourceId>) -> Self {
        Self { s, p, o }
    }

    pub fn any() -> Self {
        Self::default()
    }

    pub fn matches(&self, t: &Triple) -> bool {
        self.s.is_none_or(|s| s == t.s) && self.p.is_none_or(|p| p == t.p) && self.o.is_none_or(|o| o == t.o)
    }
}

/// Window annotation of a body atom relative to the fact being processed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Strictness {
    /// Only facts strictly before the window position.
    Strict,
    /// Facts up to and including the window position.
    Inclusive,
}

impl Strictness {
    /// Exclusive upper bound on positions admitted at window `pos`.
    #[inline]
    pub fn end(self, pos: Position) -> Position {
        match self {
            Strictness::Strict => pos,
            Strictness::Inclusive => pos + 1,
        }
    }
}

struct Record {
    triple: Triple,
    marked: AtomicBool,
    published: AtomicBool,
    next: [AtomicU32; 6],
}

impl Record {
    fn new(triple: Triple) -> Self {
        Self {
            triple,
            marked: AtomicBool::new(false),
            published: AtomicBool::new(false),
            next: std::array::from_fn(|_| AtomicU32::new(NIL)),
        }
    }
}

type PairHeads = DashMap<(u32, u32), AtomicU32, FxBuildHasher>;

pub struct FactStore {
    log: AppendVec<Record>,
    cursor: AtomicUsize,
    unique: DashMap<[u32; 3], u32, FxBuildHasher>,
    single: [Box<[AtomicU32]>; 3],
    pairs: [PairHeads; 3],
    busy: AtomicBool,
}

/// Clears the store's materialisation flag on drop.
pub struct BusyGuard<'a>(&'a FactStore);

impl Drop for BusyGuard<'_> {
    fn drop(&mut self) {
        self.0.busy.store(false, Ordering::Release);
    }
}

fn push_front(head: &AtomicU32, link: &AtomicU32, pos: u32) {
    let mut old = head.load(Ordering::Acquire);
    loop {
        link.store(old, Ordering::Relaxed);
        match head.compare_exchange_weak(old, pos, Ordering::AcqRel, Ordering::Acquire) {
            Ok(_) => return,
            Err(actual) => old = actual,
        }
    }
}

impl FactStore {
    /// A store for resources with ids below `resource_bound`.
    pub fn new(resource_bound: usize) -> Self {
        let heads = || -> Box<[AtomicU32]> { (0..resource_bound.max(1)).map(|_| AtomicU32::new(NIL)).collect() };
        Self {
            log: AppendVec::new(),
            cursor: AtomicUsize::new(0),
            unique: DashMap::with_hasher(FxBuildHasher),
            single: [heads(), heads(), heads()],
            pairs: std::array::from_fn(|_| DashMap::with_hasher(FxBuildHasher)),
            busy: AtomicBool::new(false),
        }
    }

    pub fn from_triples(resource_bound: usize, triples: impl IntoIterator<Item = Triple>) -> Self {
        let store = Self::new(resource_bound);
        for t in triples {
            store.add(t);
        }
        store
    }

    pub fn resource_bound(&self) -> usize {
        self.single[0].len()
    }

    /// Appends `triple` unless it is already present, marked or not.
    pub fn add(&self, triple: Triple) -> bool {
        assert!(
            triple.terms().iter().all(|r| r.index() < self.resource_bound()),
            "resource id out of range for this store: {triple:?}"
        );
        // most derivations are duplicates; a shared-lock probe settles them
        if self.unique.contains_key(&triple.key()) {
            return false;
        }
        let pos = match self.unique.entry(triple.key()) {
            Entry::Occupied(_) => return false,
            Entry::Vacant(vacant) => {
                let pos = self.log.reserve();
                let raw = u32::try_from(pos).expect("fact log overflow");
                self.log.set(pos, Record::new(triple));
                vacant.insert(raw);
                raw
            }
        };
        let record = self.log.get(pos as usize).unwrap();
        let [s, p, o] = triple.key();
        push_front(&self.single[BY_S][s as usize], &record.next[BY_S], pos);
        push_front(&self.single[BY_P][p as usize], &record.next[BY_P], pos);
        push_front(&self.single[BY_O][o as usize], &record.next[BY_O], pos);
        for (slot, key) in [(BY_SP, (s, p)), (BY_PO, (p, o)), (BY_SO, (s, o))] {
            let head = self.pairs[slot - BY_SP]
                .entry(key)
                .or_insert_with(|| AtomicU32::new(NIL));
            push_front(&head, &record.next[slot], pos);
        }
        record.published.store(true, Ordering::Release);
        true
    }

    pub fn contains(&self, triple: &Triple) -> bool {
        self.unique.contains_key(&triple.key())
    }

    pub fn position_of(&self, triple: &Triple) -> Option<Position> {
        self.unique.get(&triple.key()).map(|p| *p as Position)
    }

    fn record(&self, pos: Position) -> Option<&Record> {
        self.log.get(pos)
    }

    fn snapshot(&self, pos: Position, record: &Record) -> Fact {
        Fact {
            triple: record.triple,
            position: pos,
            marked: record.marked.load(Ordering::Acquire),
        }
    }

    pub fn get(&self, pos: Position) -> Option<Fact> {
        self.record(pos).map(|r| self.snapshot(pos, r))
    }

    pub fn is_marked(&self, pos: Position) -> bool {
        self.record(pos).is_some_and(|r| r.marked.load(Ordering::Acquire))
    }

    /// Sets the outdated mark; `Ok(true)` only for the call that flipped it.
    pub fn mark_outdated(&self, pos: Position) -> Result<bool> {
        let record = self.record(pos).ok_or(Error::UnknownFact(pos))?;
        Ok(!record.marked.swap(true, Ordering::AcqRel))
    }

    /// Returns the fact at the cursor and advances it.
    pub fn next(&self) -> Option<Fact> {
        loop {
            let c = self.cursor.load(Ordering::Acquire);
            if c >= self.log.reserved() {
                return None;
            }
            match self.record(c) {
                Some(r) if r.published.load(Ordering::Acquire) => {
                    if self
                        .cursor
                        .compare_exchange(c, c + 1, Ordering::AcqRel, Ordering::Acquire)
                        .is_ok()
                    {
                        return Some(self.snapshot(c, r));
                    }
                }
                // the writer of slot `c` is still linking it
                _ => std::thread::yield_now(),
            }
        }
    }

    pub fn has_next(&self) -> bool {
        self.cursor.load(Ordering::Acquire) < self.log.reserved()
    }

    /// The fact most recently returned by [`next`](Self::next).
    pub fn last(&self) -> Result<Fact> {
        let c = self.cursor.load(Ordering::Acquire);
        if c == 0 {
            return Err(Error::NoLastFact);
        }
        self.get(c - 1).ok_or(Error::NoLastFact)
    }

    pub fn cursor(&self) -> Position {
        self.cursor.load(Ordering::Acquire)
    }

    /// Number of facts in the log, marked ones included.
    pub fn len(&self) -> usize {
        self.log.reserved()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All published facts in log order, marked ones included.
    pub fn iter(&self) -> impl Iterator<Item = Fact> + '_ {
        (0..self.len()).filter_map(move |pos| {
            let r = self.record(pos)?;
            r.published.load(Ordering::Acquire).then(|| self.snapshot(pos, r))
        })
    }

    pub fn unmarked(&self) -> impl Iterator<Item = Fact> + '_ {
        self.iter().filter(|f| !f.marked)
    }

    pub fn unmarked_len(&self) -> usize {
        self.unmarked().count()
    }

    /// Facts matching `pattern` inside the window. `window = None` admits
    /// every position.
    pub fn scan(&self, pattern: Pattern, window: Option<(Position, Strictness)>, skip_marked: bool) -> Scan<'_> {
        let end = window.map_or(usize::MAX, |(pos, strictness)| strictness.end(pos));
        self.scan_before(pattern, end, skip_marked)
    }

    /// Facts matching `pattern` at positions below `end`.
    pub fn scan_before(&self, pattern: Pattern, end: Position, skip_marked: bool) -> Scan<'_> {
        let head = |heads: &[AtomicU32], r: ResourceId| heads.get(r.index()).map_or(NIL, |h| h.load(Ordering::Acquire));
        let pair = |slot: usize, a: ResourceId, b: ResourceId| {
            self.pairs[slot - BY_SP]
                .get(&(a.get(), b.get()))
                .map_or(NIL, |h| h.load(Ordering::Acquire))
        };
        let source = match (pattern.s, pattern.p, pattern.o) {
            (Some(s), Some(p), Some(o)) => Source::Single(self.position_of(&Triple::new(s, p, o))),
            (Some(s), Some(p), None) => Source::Chain(BY_SP, pair(BY_SP, s, p)),
            (None, Some(p), Some(o)) => Source::Chain(BY_PO, pair(BY_PO, p, o)),
            (Some(s), None, Some(o)) => Source::Chain(BY_SO, pair(BY_SO, s, o)),
            (Some(s), None, None) => Source::Chain(BY_S, head(&self.single[BY_S], s)),
            (None, Some(p), None) => Source::Chain(BY_P, head(&self.single[BY_P], p)),
            (None, None, Some(o)) => Source::Chain(BY_O, head(&self.single[BY_O], o)),
            (None, None, None) => Source::Log(0, self.len().min(end)),
        };
        Scan {
            store: self,
            source,
            pattern,
            end,
            skip_marked,
            exclude: [None, None],
        }
    }

    /// Every unmarked fact mentioning `c` in any position, each at most once.
    pub fn facts_containing(&self, c: ResourceId) -> impl Iterator<Item = Fact> + '_ {
        let by_s = self.scan_before(Pattern::new(Some(c), None, None), usize::MAX, true);
        let mut by_p = self.scan_before(Pattern::new(None, Some(c), None), usize::MAX, true);
        by_p.exclude = [Some((0, c)), None];
        let mut by_o = self.scan_before(Pattern::new(None, None, Some(c)), usize::MAX, true);
        by_o.exclude = [Some((0, c)), Some((1, c))];
        by_s.chain(by_p).chain(by_o)
    }

    /// Marks the store as being materialised until the guard drops.
    pub fn materialisation_guard(&self) -> BusyGuard<'_> {
        self.busy.store(true, Ordering::Release);
        BusyGuard(self)
    }

    /// A fresh store holding exactly the unmarked facts, in log order.
    pub fn compact(&self) -> Result<FactStore> {
        if self.busy.load(Ordering::Acquire) {
            return Err(Error::MaterialisationInProgress);
        }
        Ok(Self::from_triples(
            self.resource_bound(),
            self.unmarked().map(|f| f.triple),
        ))
    }
}

impl fmt::Debug for FactStore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FactStore")
            .field("len", &self.len())
            .field("cursor", &self.cursor())
            .finish()
    }
}

enum Source {
    Single(Option<Position>),
    Chain(usize, u32),
    Log(Position, Position),
}

pub struct Scan<'a> {
    store: &'a FactStore,
    source: Source,
    pattern: Pattern,
    end: Position,
    skip_marked: bool,
    /// Skip facts whose term at the given index equals the resource.
    exclude: [Option<(usize, ResourceId)>; 2],
}

impl Scan<'_> {
    fn admit(&self, pos: Position, record: &Record) -> Option<Fact> {
        if pos >= self.end || !self.pattern.matches(&record.triple) {
            return None;
        }
        let terms = record.triple.terms();
        if self.exclude.iter().flatten().any(|&(i, r)| terms[i] == r) {
            return None;
        }
        let fact = self.store.snapshot(pos, record);
        (!(self.skip_marked && fact.marked)).then_some(fact)
    }
}

impl Iterator for Scan<'_> {
    type Item = Fact;

    fn next(&mut self) -> Option<Fact> {
        loop {
            match &mut self.source {
                Source::Single(slot) => {
                    let pos = slot.take()?;
                    let Some(record) = self.store.record(pos) else {
                        continue;
                    };
                    if let Some(f) = self.admit(pos, record) {
                        return Some(f);
                    }
                }
                Source::Chain(which, cur) => {
                    if *cur == NIL {
                        return None;
                    }
                    let pos = *cur as Position;
                    let record = self.store.record(pos)?;
                    *cur = record.next[*which].load(Ordering::Acquire);
                    if let Some(f) = self.admit(pos, record) {
                        return Some(f);
                    }
                }
                Source::Log(i, end) => {
                    if *i >= *end {
                        return None;
                    }
                    let pos = *i;
                    *i += 1;
                    if let Some(record) = self.store.record(pos) {
                        if let Some(f) = self.admit(pos, record) {
                            return Some(f);
                        }
                    }
                }
            }
        }
    }
}
