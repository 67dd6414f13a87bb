//! Storage for `Phi(e, V_i)`.
//!
//! Mutations happen only while the net's spin lock is held, so a
//! load-modify-store on a word never races with another writer of the same net.
//! Packed words never span two nets.

use std::sync::atomic::{AtomicU32, AtomicU64, Ordering};

use crate::{BlockId, NetId};

/// Memory layout of the pin count table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PinCountLayout {
    /// One 32-bit counter per `(net, block)`.
    #[default]
    Plain,
    /// `ceil(log2(max |e| + 1))` bits per counter, packed into 64-bit words.
    Packed,
}

pub(crate) enum PinCounts {
    Plain { k: usize, data: Vec<AtomicU32> },
    Packed { bits: u32, per_word: usize, words_per_net: usize, data: Vec<AtomicU64> },
}

impl PinCounts {
    pub(crate) fn new(layout: PinCountLayout, nets: usize, k: usize, max_net_size: usize) -> Self {
        match layout {
            PinCountLayout::Plain => {
                PinCounts::Plain { k, data: (0..nets * k).map(|_| AtomicU32::new(0)).collect() }
            }
            PinCountLayout::Packed => {
                let bits = (usize::BITS - max_net_size.leading_zeros()).max(1);
                let per_word = (64 / bits) as usize;
                let words_per_net = k.div_ceil(per_word);
                PinCounts::Packed {
                    bits,
                    per_word,
                    words_per_net,
                    data: (0..nets * words_per_net).map(|_| AtomicU64::new(0)).collect(),
                }
            }
        }
    }

    #[inline]
    pub(crate) fn get(&self, e: NetId, b: BlockId) -> u32 {
        match self {
            PinCounts::Plain { k, data } => data[e as usize * k + b as usize].load(Ordering::Relaxed),
            PinCounts::Packed { bits, per_word, words_per_net, data } => {
                let (word, shift) = Self::locate(*bits, *per_word, *words_per_net, e, b);
                ((data[word].load(Ordering::Relaxed) >> shift) & ((1u64 << bits) - 1)) as u32
            }
        }
    }

    #[inline]
    fn locate(bits: u32, per_word: usize, words_per_net: usize, e: NetId, b: BlockId) -> (usize, u32) {
        let word = e as usize * words_per_net + b as usize / per_word;
        (word, (b as usize % per_word) as u32 * bits)
    }

    #[inline]
    pub(crate) fn set(&self, e: NetId, b: BlockId, value: u32) {
        match self {
            PinCounts::Plain { k, data } => data[e as usize * k + b as usize].store(value, Ordering::Relaxed),
            PinCounts::Packed { bits, per_word, words_per_net, data } => {
                let (word, shift) = Self::locate(*bits, *per_word, *words_per_net, e, b);
                let mask = ((1u64 << bits) - 1) << shift;
                let old = data[word].load(Ordering::Relaxed);
                data[word].store((old & !mask) | ((value as u64) << shift), Ordering::Relaxed);
            }
        }
    }

    /// Returns the new value.
    #[inline]
    pub(crate) fn increment(&self, e: NetId, b: BlockId) -> u32 {
        match self {
            PinCounts::Plain { k, data } => data[e as usize * k + b as usize].fetch_add(1, Ordering::Relaxed) + 1,
            PinCounts::Packed { .. } => {
                let v = self.get(e, b) + 1;
                self.set(e, b, v);
                v
            }
        }
    }

    /// Returns the new value.
    #[inline]
    pub(crate) fn decrement(&self, e: NetId, b: BlockId) -> u32 {
        match self {
            PinCounts::Plain { k, data } => data[e as usize * k + b as usize].fetch_sub(1, Ordering::Relaxed) - 1,
            PinCounts::Packed { .. } => {
                let v = self.get(e, b) - 1;
                self.set(e, b, v);
                v
            }
        }
    }
}
