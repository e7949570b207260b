//! The representative map: which resource stands for each sameAs-clique.
//!
//! `succ[d]` is the resource `d` was merged into (0 while `d` represents
//! itself). `pred` threads every clique into a singly linked list that starts
//! at its representative. Merges always point to a smaller id, so `succ`
//! chains strictly decrease and every resource is merged at most once.

use std::sync::atomic::{AtomicU32, Ordering};

use crate::dictionary::{precedes, ResourceId};
use crate::error::{Error, Result};
use crate::store::Triple;

pub struct RepresentativeMap {
    succ: Box<[AtomicU32]>,
    pred: Box<[AtomicU32]>,
}

impl RepresentativeMap {
    /// Identity map over ids below `resource_bound`.
    pub fn new(resource_bound: usize) -> Self {
        let zeros = || (0..resource_bound.max(1)).map(|_| AtomicU32::new(0)).collect();
        Self {
            succ: zeros(),
            pred: zeros(),
        }
    }

    pub fn resource_bound(&self) -> usize {
        self.succ.len()
    }

    /// Merges the clique of `d` into that of `c`. Returns `Ok(false)` if `d`
    /// had already been merged.
    pub fn merge_into(&self, d: ResourceId, c: ResourceId) -> Result<bool> {
        if !precedes(c, d) {
            return Err(Error::MergeOrder { from: d, into: c });
        }
        if self.succ[d.index()]
            .compare_exchange(0, c.get(), Ordering::AcqRel, Ordering::Acquire)
            .is_err()
        {
            return Ok(false);
        }
        // Walk to the end of c's list and hang d's list off it; if another
        // merge wins the tail, keep walking.
        let mut e = c.index();
        loop {
            let next = self.pred[e].load(Ordering::Acquire);
            if next != 0 {
                e = next as usize;
                continue;
            }
            match self.pred[e].compare_exchange(0, d.get(), Ordering::AcqRel, Ordering::Acquire) {
                Ok(_) => return Ok(true),
                Err(actual) => e = actual as usize,
            }
        }
    }

    /// Follows `succ` to a self-representing resource. Wait-free: chains
    /// strictly decrease.
    #[inline]
    pub fn resolve(&self, c: ResourceId) -> ResourceId {
        let mut r = c.get();
        loop {
            let next = self.succ[r as usize].load(Ordering::Acquire);
            if next == 0 {
                return ResourceId::new(r);
            }
            r = next;
        }
    }

    pub fn is_representative(&self, c: ResourceId) -> bool {
        self.succ[c.index()].load(Ordering::Acquire) == 0
    }

    /// The resource `c` was directly merged into, if any.
    pub fn successor(&self, c: ResourceId) -> Option<ResourceId> {
        ResourceId::from_raw(self.succ[c.index()].load(Ordering::Acquire))
    }

    /// `rep` followed by every resource in its clique list.
    pub fn clique_members(&self, rep: ResourceId) -> Vec<ResourceId> {
        let mut out = vec![rep];
        let mut e = self.pred[rep.index()].load(Ordering::Acquire);
        while e != 0 {
            out.push(ResourceId::new(e));
            e = self.pred[e as usize].load(Ordering::Acquire);
        }
        out
    }

    pub fn clique_size(&self, rep: ResourceId) -> usize {
        let mut n = 1;
        let mut e = self.pred[rep.index()].load(Ordering::Acquire);
        while e != 0 {
            n += 1;
            e = self.pred[e as usize].load(Ordering::Acquire);
        }
        n
    }

    pub fn normalize_fact(&self, t: Triple) -> Triple {
        t.map(|r| self.resolve(r))
    }

    /// Resources with ids in `1..resource_bound` that represent themselves.
    pub fn representatives(&self) -> impl Iterator<Item = ResourceId> + '_ {
        (1..self.succ.len() as u32)
            .map(ResourceId::new)
            .filter(|r| self.is_representative(*r))
    }

    /// `resolve` for every id in `1..resource_bound`, as a plain vector
    /// indexed by id (index 0 unused).
    pub fn snapshot(&self) -> Vec<u32> {
        (0..self.succ.len() as u32)
            .map(|i| match ResourceId::from_raw(i) {
                Some(r) => self.resolve(r).get(),
                None => 0,
            })
            .collect()
    }
}

impl std::fmt::Debug for RepresentativeMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let merged: Vec<_> = (1..self.succ.len() as u32)
            .map(ResourceId::new)
            .filter_map(|r| Some((r, self.successor(r)?)))
            .collect();
        f.debug_struct("RepresentativeMap").field("merged", &merged).finish()
    }
}
