//! Seed selection: draw candidate parameter vectors from the contract's
//! literals, keep the one with the widest coverage.

use rand::Rng;

use crate::abi::{AbiType, ParamValue};
use crate::mcb::LiteralCorpus;
use crate::name::Name;

fn fits(ty: AbiType, v: i64) -> bool {
    match ty {
        AbiType::U8 => (0..=u8::MAX as i64).contains(&v),
        AbiType::U16 => (0..=u16::MAX as i64).contains(&v),
        AbiType::U32 => (0..=u32::MAX as i64).contains(&v),
        _ => true,
    }
}

fn pick<'a, T, R: Rng>(rng: &mut R, pool: &'a [T]) -> Option<&'a T> {
    (!pool.is_empty()).then(|| &pool[rng.gen_range(0..pool.len())])
}

/// One candidate value per parameter, uniform over type-compatible corpus
/// entries, random when there are none.
pub fn draw_candidate<R: Rng>(corpus: &LiteralCorpus, params: &[AbiType], rng: &mut R) -> Vec<ParamValue> {
    params
        .iter()
        .map(|&ty| match ty {
            AbiType::U8 | AbiType::U16 | AbiType::U32 | AbiType::U64 | AbiType::I64 | AbiType::Asset => {
                let ints: Vec<i64> = corpus.constants.iter().copied().filter(|&v| fits(ty, v)).collect();
                let v = pick(rng, &ints).copied().unwrap_or_else(|| rng.gen());
                match ty {
                    AbiType::U8 => ParamValue::U8(v as u8),
                    AbiType::U16 => ParamValue::U16(v as u16),
                    AbiType::U32 => ParamValue::U32(v as u32),
                    AbiType::U64 => ParamValue::U64(v as u64),
                    AbiType::I64 => ParamValue::I64(v),
                    _ => ParamValue::Asset(v),
                }
            }
            AbiType::Name => ParamValue::Name(pick(rng, &corpus.names).copied().unwrap_or_else(|| Name::from_raw(rng.gen()))),
            AbiType::PublicKey => {
                let mut k = [0u8; 33];
                rng.fill(&mut k[..]);
                ParamValue::PublicKey(k)
            }
            AbiType::String | AbiType::Bytes => {
                let s = pick(rng, &corpus.strings).cloned().unwrap_or_else(|| {
                    let n = rng.gen_range(1..=8);
                    (0..n).map(|_| rng.gen()).collect()
                });
                if ty == AbiType::String {
                    ParamValue::String(s)
                } else {
                    ParamValue::Bytes(s)
                }
            }
        })
        .collect()
}

/// Index of the highest score; ties go to the lowest index.
pub fn best_candidate(scores: &[usize]) -> Option<usize> {
    scores.iter().enumerate().fold(None, |best: Option<(usize, usize)>, (i, &s)| match best {
        Some((_, bs)) if bs >= s => best,
        _ => Some((i, s)),
    })
    .map(|(i, _)| i)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ties_pick_first() {
        assert_eq!(best_candidate(&[3, 3, 3]), Some(0));
        assert_eq!(best_candidate(&[1, 4, 4, 2]), Some(1));
        assert_eq!(best_candidate(&[]), None);
    }

    #[test]
    fn draws_respect_types() {
        let corpus = LiteralCorpus { constants: vec![7, 70000, -3], strings: vec![b"hi".to_vec()], names: vec![Name::lit("bob")] };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..50 {
            let c = draw_candidate(&corpus, &[AbiType::U8, AbiType::U32, AbiType::Name, AbiType::String], &mut rng);
            assert_eq!(c[0], ParamValue::U8(7));
            assert!(matches!(c[1], ParamValue::U32(7) | ParamValue::U32(70000)));
            assert_eq!(c[2], ParamValue::Name(Name::lit("bob")));
            assert_eq!(c[3], ParamValue::String(b"hi".to_vec()));
        }
        let empty = LiteralCorpus::default();
        let c = draw_candidate(&empty, &[AbiType::String], &mut rng);
        assert!(matches!(&c[0], ParamValue::String(s) if !s.is_empty()));
    }
}
