//! AFL-style edge coverage: a 64 KiB hit-count map and the previous-location
//! register.

use std::io;
use std::path::Path;

pub const MAP_SIZE: usize = 1 << 16;

/// 64-bit finalizer used to turn a code address into a map location.
pub fn mix64(mut x: u64) -> u64 {
    x ^= x >> 33;
    x = x.wrapping_mul(0xFF51_AFD7_ED55_8CCD);
    x ^= x >> 33;
    x = x.wrapping_mul(0xC4CE_B9FE_1A85_EC53);
    x ^= x >> 33;
    x
}

pub fn location(pc: u64) -> u16 {
    (mix64(pc) % MAP_SIZE as u64) as u16
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EdgeState {
    pub prev: u16,
}

/// Hit counters plus the list of cells that went nonzero since the last
/// reset, so resets and copies only touch what an execution reached.
#[derive(Clone)]
pub struct CoverageBitmap {
    cells: Box<[u8; MAP_SIZE]>,
    touched: Vec<u16>,
}

impl Default for CoverageBitmap {
    fn default() -> Self {
        Self::new()
    }
}

impl PartialEq for CoverageBitmap {
    fn eq(&self, other: &Self) -> bool {
        self.cells[..] == other.cells[..]
    }
}

impl Eq for CoverageBitmap {}

impl std::fmt::Debug for CoverageBitmap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "CoverageBitmap({} nonzero)", self.nonzero_count())
    }
}

impl CoverageBitmap {
    pub fn new() -> Self {
        let cells: Box<[u8; MAP_SIZE]> = vec![0u8; MAP_SIZE].into_boxed_slice().try_into().expect("map size");
        CoverageBitmap { cells, touched: Vec::new() }
    }

    pub fn from_bytes(bytes: &[u8]) -> Option<Self> {
        if bytes.len() != MAP_SIZE {
            return None;
        }
        let mut m = Self::new();
        m.cells.copy_from_slice(bytes);
        m.touched = (0..MAP_SIZE).filter(|&i| bytes[i] != 0).map(|i| i as u16).collect();
        Some(m)
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.cells[..]
    }

    pub fn get(&self, index: u16) -> u8 {
        self.cells[index as usize]
    }

    pub fn increment(&mut self, index: u16) {
        let c = &mut self.cells[index as usize];
        if *c == 0 {
            self.touched.push(index);
        }
        *c = c.saturating_add(1);
    }

    /// Indices of nonzero cells in first-hit order.
    pub fn touched(&self) -> &[u16] {
        &self.touched
    }

    pub fn nonzero_count(&self) -> usize {
        self.touched.len()
    }

    pub fn clear(&mut self) {
        for &i in &self.touched {
            self.cells[i as usize] = 0;
        }
        self.touched.clear();
    }

    /// Replaces this map's contents with `other`'s, visiting only nonzero cells.
    pub fn copy_from(&mut self, other: &CoverageBitmap) {
        self.clear();
        for &i in &other.touched {
            self.cells[i as usize] = other.cells[i as usize];
        }
        self.touched.extend_from_slice(&other.touched);
    }

    pub fn write_to(&self, path: &Path) -> io::Result<()> {
        std::fs::write(path, self.as_bytes())
    }

    pub fn read_from(path: &Path) -> io::Result<Self> {
        let bytes = std::fs::read(path)?;
        Self::from_bytes(&bytes).ok_or_else(|| {
            io::Error::new(io::ErrorKind::InvalidData, format!("bitmap file must be {MAP_SIZE} bytes, got {}", bytes.len()))
        })
    }
}

pub fn record_edge(state: &mut EdgeState, pc: u64, bitmap: &mut CoverageBitmap) {
    let cur = location(pc);
    bitmap.increment(cur ^ state.prev);
    state.prev = cur >> 1;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fresh_state_hits_location() {
        let mut s = EdgeState::default();
        let mut m = CoverageBitmap::new();
        record_edge(&mut s, 42, &mut m);
        let cur = location(42);
        assert_eq!(m.touched(), &[cur]);
        assert_eq!(m.get(cur), 1);
        assert_eq!(s.prev, cur >> 1);
    }

    #[test]
    fn repeated_pc_lands_on_xor_shift() {
        let mut s = EdgeState::default();
        let mut m = CoverageBitmap::new();
        record_edge(&mut s, 7, &mut m);
        record_edge(&mut s, 7, &mut m);
        let cur = location(7);
        assert_eq!(m.get(cur ^ (cur >> 1)), 1 + (cur == cur ^ (cur >> 1)) as u8);
    }

    #[test]
    fn saturates() {
        let mut m = CoverageBitmap::new();
        for _ in 0..1000 {
            m.increment(3);
        }
        assert_eq!(m.get(3), 255);
        assert_eq!(m.nonzero_count(), 1);
    }

    #[test]
    fn file_round_trip() {
        let dir = std::env::temp_dir().join(format!("greyant-bitmap-{}", std::process::id()));
        let mut m = CoverageBitmap::new();
        for i in 0..MAP_SIZE {
            for _ in 0..300 {
                m.increment(i as u16);
            }
        }
        m.write_to(&dir).unwrap();
        let back = CoverageBitmap::read_from(&dir).unwrap();
        assert_eq!(back, m);
        assert!(back.as_bytes().iter().all(|&b| b == 255));
        std::fs::write(&dir, [0u8; 10]).unwrap();
        assert!(CoverageBitmap::read_from(&dir).is_err());
        std::fs::remove_file(&dir).unwrap();
    }

    #[test]
    fn clear_and_copy_are_sparse_but_complete() {
        let mut a = CoverageBitmap::new();
        a.increment(1);
        a.increment(900);
        let mut b = CoverageBitmap::new();
        b.increment(5);
        b.copy_from(&a);
        assert_eq!(b, a);
        b.clear();
        assert_eq!(b, CoverageBitmap::new());
    }
}
