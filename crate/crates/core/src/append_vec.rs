//! Append-only vector with lock-free slot reservation.
//!
//! Storage is split into segments of doubling size so elements never move
//! and readers can hold plain references while writers append.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::OnceLock;

const FIRST_SEGMENT: usize = 64;
const SEGMENTS: usize = 40;

type Segment<T> = Box<[OnceLock<T>]>;

pub(crate) struct AppendVec<T> {
    reserved: AtomicUsize,
    segments: Box<[OnceLock<Segment<T>>]>,
}

#[inline]
fn locate(index: usize) -> (usize, usize) {
    let bucket = index / FIRST_SEGMENT + 1;
    let segment = (usize::BITS - 1 - bucket.leading_zeros()) as usize;
    let start = FIRST_SEGMENT * ((1 << segment) - 1);
    (segment, index - start)
}

impl<T> AppendVec<T> {
    pub(crate) fn new() -> Self {
        Self {
            reserved: AtomicUsize::new(0),
            segments: (0..SEGMENTS).map(|_| OnceLock::new()).collect(),
        }
    }

    /// Claims the next index. The slot stays empty until [`set`](Self::set).
    pub(crate) fn reserve(&self) -> usize {
        self.reserved.fetch_add(1, Ordering::AcqRel)
    }

    pub(crate) fn set(&self, index: usize, value: T) -> &T {
        let (segment, offset) = locate(index);
        let slots =
            self.segments[segment].get_or_init(|| (0..FIRST_SEGMENT << segment).map(|_| OnceLock::new()).collect());
        let slot = &slots[offset];
        assert!(slot.set(value).is_ok(), "slot {index} written twice");
        slot.get().unwrap()
    }

    #[inline]
    pub(crate) fn get(&self, index: usize) -> Option<&T> {
        let (segment, offset) = locate(index);
        self.segments.get(segment)?.get()?.get(offset)?.get()
    }

    /// Number of reserved slots, some of which may still be empty.
    #[inline]
    pub(crate) fn reserved(&self) -> usize {
        self.reserved.load(Ordering::Acquire)
    }
}
