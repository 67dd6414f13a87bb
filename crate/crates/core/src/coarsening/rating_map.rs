//! Open addressing map from cluster id to accumulated rating.
//!
//! Starts with `2^15` slots and doubles once more than a third is used. Each
//! entry remembers the last net that contributed to it, so a net is counted at
//! most once per cluster.

const INITIAL_CAPACITY: usize = 1 << 15;
const EMPTY: u32 = u32::MAX;

pub(crate) struct RatingMap {
    keys: Vec<u32>,
    values: Vec<f64>,
    last_net: Vec<u32>,
    used: Vec<usize>,
}

impl Default for RatingMap {
    fn default() -> Self {
        Self::with_capacity(INITIAL_CAPACITY)
    }
}

impl RatingMap {
    pub(crate) fn with_capacity(capacity: usize) -> Self {
        let capacity = capacity.next_power_of_two();
        Self { keys: vec![EMPTY; capacity], values: vec![0.0; capacity], last_net: vec![EMPTY; capacity], used: Vec::new() }
    }

    #[inline]
    fn slot(&self, key: u32) -> usize {
        let mask = self.keys.len() - 1;
        let mut i = (crate::util::mix(key as u64) as usize) & mask;
        while self.keys[i] != EMPTY && self.keys[i] != key {
            i = (i + 1) & mask;
        }
        i
    }

    /// Adds `value` to `key` unless `net` already contributed to it.
    #[inline]
    pub(crate) fn add_once(&mut self, key: u32, net: u32, value: f64) {
        let i = self.slot(key);
        if self.keys[i] == EMPTY {
            self.keys[i] = key;
            self.values[i] = value;
            self.last_net[i] = net;
            self.used.push(i);
            if self.used.len() * 3 > self.keys.len() {
                self.grow();
            }
        } else if self.last_net[i] != net {
            self.values[i] += value;
            self.last_net[i] = net;
        }
    }

    fn grow(&mut self) {
        let entries: Vec<(u32, f64, u32)> =
            self.used.iter().map(|&i| (self.keys[i], self.values[i], self.last_net[i])).collect();
        *self = Self::with_capacity(self.keys.len() * 2);
        for (k, v, n) in entries {
            let i = self.slot(k);
            self.keys[i] = k;
            self.values[i] = v;
            self.last_net[i] = n;
            self.used.push(i);
        }
    }

    #[cfg(test)]
    pub(crate) fn capacity(&self) -> usize {
        self.keys.len()
    }

    #[cfg(test)]
    pub(crate) fn len(&self) -> usize {
        self.used.len()
    }

    /// Entries in insertion order.
    pub(crate) fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.used.iter().map(|&i| (self.keys[i], self.values[i]))
    }

    pub(crate) fn clear(&mut self) {
        for &i in &self.used {
            self.keys[i] = EMPTY;
            self.last_net[i] = EMPTY;
        }
        self.used.clear();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_each_net_once() {
        let mut m = RatingMap::default();
        m.add_once(7, 0, 1.0);
        m.add_once(7, 0, 1.0);
        m.add_once(7, 1, 0.5);
        assert_eq!(m.iter().collect::<Vec<_>>(), vec![(7, 1.5)]);
        m.clear();
        assert_eq!(m.len(), 0);
    }

    #[test]
    fn grows_past_a_third() {
        let mut m = RatingMap::with_capacity(16);
        for k in 0..6 {
            m.add_once(k, k, k as f64);
        }
        assert_eq!(m.capacity(), 32);
        let mut entries: Vec<_> = m.iter().collect();
        entries.sort_by_key(|e| e.0);
        assert_eq!(entries, (0..6).map(|k| (k, k as f64)).collect::<Vec<_>>());
    }
}
