use super::{ContractModule, Literal};
use crate::name::Name;

/// Distinct literals of a module grouped by kind, in first-occurrence order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LiteralCorpus {
    pub constants: Vec<i64>,
    pub strings: Vec<Vec<u8>>,
    pub names: Vec<Name>,
}

pub fn extract_literals(m: &ContractModule) -> LiteralCorpus {
    let mut c = LiteralCorpus::default();
    for lit in &m.literals {
        match lit {
            Literal::Int(i) if !c.constants.contains(i) => c.constants.push(*i),
            Literal::Name(n) if !c.names.contains(n) => c.names.push(*n),
            Literal::Str(s) if !c.strings.contains(s) => c.strings.push(s.clone()),
            _ => {}
        }
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mcb::assemble;

    #[test]
    fn distinct_in_order() {
        let m = assemble(
            "contract c\nlit 7\nlit \"hi\"\nlit 7\nlit @bob\nfn apply(3)\n  const 3\n  const @bob\n  const 7\n  assertnz \"hi\"\n  assertnz \"no\"\napply apply\n",
        )
        .unwrap();
        let c = extract_literals(&m);
        assert_eq!(c.constants, vec![7, 3]);
        assert_eq!(c.names, vec![Name::lit("bob")]);
        assert_eq!(c.strings, vec![b"hi".to_vec(), b"no".to_vec()]);
    }
}
