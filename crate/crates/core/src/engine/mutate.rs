//! Byte-level mutation operators. One operator is applied per call.

use rand::Rng;

pub const ARITH_MAX: u32 = 35;
pub const DEFAULT_MAX_LEN: usize = 1024;

const INTERESTING: [i64; 10] = [0, 1, -1, 127, 128, 255, 32767, 32769, 2147483647, 2147483649];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MutOp {
    BitFlip(u8),
    ByteFlip,
    Arith(usize),
    Interesting,
    RandomByte,
    BlockDelete,
    BlockInsert,
    BlockDuplicate,
    Splice,
}

/// Relative operator weights. Single-byte overwrites dominate because
/// they are what clears byte-wise comparisons.
const WEIGHTS: [(MutOp, u32); 13] = [
    (MutOp::BitFlip(1), 1),
    (MutOp::BitFlip(2), 1),
    (MutOp::BitFlip(4), 1),
    (MutOp::ByteFlip, 1),
    (MutOp::Arith(1), 1),
    (MutOp::Arith(2), 1),
    (MutOp::Arith(4), 1),
    (MutOp::Interesting, 2),
    (MutOp::RandomByte, 8),
    (MutOp::BlockDelete, 1),
    (MutOp::BlockInsert, 1),
    (MutOp::BlockDuplicate, 1),
    (MutOp::Splice, 1),
];

pub fn pick_op<R: Rng>(rng: &mut R) -> MutOp {
    let total: u32 = WEIGHTS.iter().map(|w| w.1).sum();
    let mut x = rng.gen_range(0..total);
    for (op, w) in WEIGHTS {
        if x < w {
            return op;
        }
        x -= w;
    }
    unreachable!()
}

/// Applies one random operator to `input`. `other` is the splice partner.
/// The result is zero-padded to `min_len` and truncated to `max_len`.
pub fn mutate<R: Rng>(input: &[u8], other: &[u8], rng: &mut R, min_len: usize, max_len: usize) -> Vec<u8> {
    let op = pick_op(rng);
    let mut out = apply(op, input, other, rng);
    out.truncate(max_len.max(min_len));
    if out.len() < min_len {
        out.resize(min_len, 0);
    }
    out
}

pub fn apply<R: Rng>(op: MutOp, input: &[u8], other: &[u8], rng: &mut R) -> Vec<u8> {
    let mut v = input.to_vec();
    if v.is_empty() && !matches!(op, MutOp::BlockInsert | MutOp::Splice) {
        v.push(rng.gen());
        return v;
    }
    let len = v.len();
    match op {
        MutOp::BitFlip(n) => {
            let bits = len * 8;
            let start = rng.gen_range(0..bits);
            for b in start..(start + n as usize).min(bits) {
                v[b / 8] ^= 0x80 >> (b % 8);
            }
        }
        MutOp::ByteFlip => {
            let i = rng.gen_range(0..len);
            v[i] ^= 0xff;
        }
        MutOp::Arith(width) => {
            if width > len {
                return apply(MutOp::Arith(1), input, other, rng);
            }
            let at = rng.gen_range(0..=len - width);
            let delta = rng.gen_range(1..=ARITH_MAX) as i64;
            let delta = if rng.gen() { delta } else { -delta };
            let cur = read_be(&v[at..at + width]);
            write_be(&mut v[at..at + width], cur.wrapping_add(delta));
        }
        MutOp::Interesting => {
            let value = INTERESTING[rng.gen_range(0..INTERESTING.len())];
            let min_width = if (-128..=255).contains(&value) {
                1
            } else if (-32768..=65535).contains(&value) {
                2
            } else {
                4
            };
            let widths: Vec<usize> = [1usize, 2, 4].into_iter().filter(|&w| w >= min_width && w <= len).collect();
            if widths.is_empty() {
                let i = rng.gen_range(0..len);
                v[i] = rng.gen();
            } else {
                let w = widths[rng.gen_range(0..widths.len())];
                let at = rng.gen_range(0..=len - w);
                write_be(&mut v[at..at + w], value);
            }
        }
        MutOp::RandomByte => {
            let i = rng.gen_range(0..len);
            v[i] = rng.gen();
        }
        MutOp::BlockDelete => {
            if len > 1 {
                let n = rng.gen_range(1..=(len / 2).clamp(1, 16));
                let at = rng.gen_range(0..=len - n);
                v.drain(at..at + n);
            }
        }
        MutOp::BlockInsert => {
            let n = rng.gen_range(1..=8);
            let at = rng.gen_range(0..=len);
            let block: Vec<u8> = (0..n).map(|_| rng.gen()).collect();
            v.splice(at..at, block);
        }
        MutOp::BlockDuplicate => {
            let n = rng.gen_range(1..=len.min(16));
            let from = rng.gen_range(0..=len - n);
            let to = rng.gen_range(0..=len);
            let block = v[from..from + n].to_vec();
            v.splice(to..to, block);
        }
        MutOp::Splice => {
            let i = rng.gen_range(0..=len);
            let j = rng.gen_range(0..=other.len());
            v.truncate(i);
            v.extend_from_slice(&other[j..]);
        }
    }
    v
}

fn read_be(b: &[u8]) -> i64 {
    b.iter().fold(0i64, |acc, &x| (acc << 8) | x as i64)
}

fn write_be(b: &mut [u8], value: i64) {
    let n = b.len();
    for (k, slot) in b.iter_mut().enumerate() {
        *slot = (value >> (8 * (n - 1 - k))) as u8;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn delete_at_floor_repads() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let out = apply(MutOp::BlockDelete, &[1, 2, 3, 4], &[], &mut rng);
            assert!(out.len() < 4);
            let m = mutate(&[1, 2, 3, 4], &[1, 2, 3, 4], &mut rng, 4, DEFAULT_MAX_LEN);
            assert!(m.len() >= 4);
        }
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(99);
            let mut x = vec![0u8; 6];
            let mut all = Vec::new();
            for _ in 0..200 {
                x = mutate(&x, b"splice", &mut rng, 6, 64);
                all.push(x.clone());
            }
            all
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn splice_with_self_is_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = b"abcdefgh";
        for _ in 0..500 {
            let out = apply(MutOp::Splice, a, a, &mut rng);
            assert!(out.len() <= 2 * a.len());
            let m = mutate(a, a, &mut rng, 3, DEFAULT_MAX_LEN);
            assert!((3..=2 * a.len() + 16).contains(&m.len()));
        }
    }

    #[test]
    fn arith_and_interesting_are_big_endian() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let out = apply(MutOp::Arith(2), &[0x01, 0x00], &[], &mut rng);
            let v = u16::from_be_bytes([out[0], out[1]]) as i64;
            assert!((256 - 35..=256 + 35).contains(&v) && v != 256);
        }
        let mut seen_max = false;
        for _ in 0..2000 {
            let out = apply(MutOp::Interesting, &[9, 9, 9, 9], &[], &mut rng);
            seen_max |= out == [0x7f, 0xff, 0xff, 0xff];
        }
        assert!(seen_max);
    }
}
