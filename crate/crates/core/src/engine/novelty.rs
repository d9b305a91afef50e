//! Hit-count bucketing and the campaign-wide map of seen (cell, bucket) pairs.

use sha2::{Digest, Sha256};

use crate::vm::{CoverageBitmap, MAP_SIZE};

/// Bucket index for a hit count: 0 for no hits, then 1, 2, 3, 4-7, 8-15,
/// 16-31, 32-127, 128-255 as 1..=8.
pub fn bucket(count: u8) -> u8 {
    match count {
        0 => 0,
        1 => 1,
        2 => 2,
        3 => 3,
        4..=7 => 4,
        8..=15 => 5,
        16..=31 => 6,
        32..=127 => 7,
        _ => 8,
    }
}

/// Per cell, a bitmask of nonzero buckets seen so far.
pub struct VirginMap {
    seen: Box<[u16]>,
    edges: usize,
}

impl Default for VirginMap {
    fn default() -> Self {
        Self::new()
    }
}

impl VirginMap {
    pub fn new() -> Self {
        VirginMap { seen: vec![0u16; MAP_SIZE].into_boxed_slice(), edges: 0 }
    }

    /// Merges `bitmap` and returns the (cell, bucket) pairs it added.
    pub fn merge(&mut self, bitmap: &CoverageBitmap) -> Vec<(u16, u8)> {
        let mut novel = Vec::new();
        for &i in bitmap.touched() {
            let b = bucket(bitmap.get(i));
            let slot = &mut self.seen[i as usize];
            let bit = 1u16 << b;
            if *slot & bit == 0 {
                if *slot == 0 {
                    self.edges += 1;
                }
                *slot |= bit;
                novel.push((i, b));
            }
        }
        novel
    }

    pub fn contains(&self, cell: u16, bucket: u8) -> bool {
        self.seen[cell as usize] & (1 << bucket) != 0
    }

    /// Cells ever seen nonzero.
    pub fn edge_count(&self) -> usize {
        self.edges
    }
}

/// True iff `bitmap` holds a (cell, bucket) pair absent from `global`;
/// `global` is updated either way.
pub fn has_new_coverage(bitmap: &CoverageBitmap, global: &mut VirginMap) -> bool {
    !global.merge(bitmap).is_empty()
}

/// Digest of the bucketized bitmap, independent of hit order.
pub fn signature(bitmap: &CoverageBitmap) -> String {
    let mut cells: Vec<(u16, u8)> = bitmap.touched().iter().map(|&i| (i, bucket(bitmap.get(i)))).collect();
    cells.sort_unstable();
    let mut h = Sha256::new();
    for (i, b) in cells {
        h.update(i.to_be_bytes());
        h.update([b]);
    }
    hex::encode(&h.finalize()[..16])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map_with(cell: u16, count: u8) -> CoverageBitmap {
        let mut m = CoverageBitmap::new();
        for _ in 0..count {
            m.increment(cell);
        }
        m
    }

    #[test]
    fn bucket_table() {
        let expect = [(0, 0), (1, 1), (2, 2), (3, 3), (4, 4), (7, 4), (8, 5), (15, 5), (16, 6), (31, 6), (32, 7), (127, 7), (128, 8), (255, 8)];
        for (c, b) in expect {
            assert_eq!(bucket(c), b, "count {c}");
        }
    }

    #[test]
    fn novelty_rules() {
        let mut g = VirginMap::new();
        assert!(!has_new_coverage(&CoverageBitmap::new(), &mut g));
        assert!(has_new_coverage(&map_with(9, 3), &mut g));
        assert!(has_new_coverage(&map_with(9, 4), &mut g));
        assert!(!has_new_coverage(&map_with(9, 5), &mut g));
        assert!(!has_new_coverage(&map_with(9, 6), &mut g));
        assert_eq!(g.edge_count(), 1);
        assert!(g.contains(9, 3) && g.contains(9, 4) && !g.contains(9, 5));
    }
}
