//! Minimal contract bytecode: instruction set, module layout and validation.

mod asm;
mod literals;

pub use asm::{assemble, disassemble, AsmError};
pub use literals::{extract_literals, LiteralCorpus};

use std::fmt;

use thiserror::Error;

use crate::abi::AbiDescriptor;
use crate::name::Name;
use crate::vm::HostFn;

/// Upper bounds that keep code addresses inside their packed fields.
pub const MAX_FUNCTIONS: usize = 1 << 12;
pub const MAX_BODY_LEN: usize = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Op {
    Call(u32),
    /// Pops a table slot and calls the function stored there.
    CallIndirect,
    Br(u32),
    BrIf(u32),
    Return,
    Const(i64),
    Add,
    Sub,
    Mul,
    Mod,
    Eq,
    Ne,
    LtS,
    GtS,
    Drop,
    Dup,
    LoadLocal(u32),
    StoreLocal(u32),
    /// Pushes action parameter `n`; variable-length parameters push a
    /// string handle (the parameter index).
    ParamLoad(u32),
    /// Pops offset and handle, pushes the byte or -1 when out of range.
    MemoByte,
    /// Pops a handle, pushes the string length.
    MemoLen,
    HostCall(HostFn),
    /// Pops a value and traps with literal message `n` when it is zero.
    AssertNz(u32),
}

impl Op {
    pub fn mnemonic(&self) -> &'static str {
        match self {
            Op::Call(_) => "call",
            Op::CallIndirect => "call_indirect",
            Op::Br(_) => "br",
            Op::BrIf(_) => "br_if",
            Op::Return => "return",
            Op::Const(_) => "const",
            Op::Add => "add",
            Op::Sub => "sub",
            Op::Mul => "mul",
            Op::Mod => "mod",
            Op::Eq => "eq",
            Op::Ne => "ne",
            Op::LtS => "lt_s",
            Op::GtS => "gt_s",
            Op::Drop => "drop",
            Op::Dup => "dup",
            Op::LoadLocal(_) => "load",
            Op::StoreLocal(_) => "store",
            Op::ParamLoad(_) => "param",
            Op::MemoByte => "memobyte",
            Op::MemoLen => "memolen",
            Op::HostCall(_) => "host",
            Op::AssertNz(_) => "assertnz",
        }
    }

    /// Instructions that feed the coverage map.
    pub fn is_control_flow(&self) -> bool {
        matches!(self, Op::Call(_) | Op::CallIndirect | Op::Br(_) | Op::BrIf(_) | Op::Return)
    }

    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Op::Const(_) | Op::Add | Op::Sub | Op::Mul | Op::Mod | Op::Eq | Op::Ne | Op::LtS | Op::GtS
        )
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.mnemonic())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Function {
    pub name: String,
    pub params: u32,
    /// Total local slots, parameters included.
    pub locals: u32,
    pub body: Vec<Op>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Literal {
    Int(i64),
    Name(Name),
    Str(Vec<u8>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContractModule {
    pub name: Name,
    pub functions: Vec<Function>,
    pub table: Vec<u32>,
    pub literals: Vec<Literal>,
    pub abi: AbiDescriptor,
    pub apply_fn: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Violation {
    #[error("missing apply function")]
    MissingApply,
    #[error("apply arity: expected 3 parameters, found {0}")]
    ApplyArity(u32),
    #[error("bad table slot {slot}: function {func} does not exist")]
    BadTableSlot { slot: usize, func: u32 },
    #[error("dangling ABI entry {0}")]
    DanglingAbi(Name),
    #[error("invalid branch target {target} in {func} at {offset}")]
    BadBranchTarget { func: String, offset: usize, target: u32 },
    #[error("unresolved call to function {callee} in {func} at {offset}")]
    BadCall { func: String, offset: usize, callee: u32 },
    #[error("local {index} out of range in {func} at {offset}")]
    BadLocal { func: String, offset: usize, index: u32 },
    #[error("assert message {index} is not a string literal in {func} at {offset}")]
    BadMessage { func: String, offset: usize, index: u32 },
    #[error("module exceeds size limits")]
    TooLarge,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid module: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
pub struct ValidationError(pub Vec<Violation>);

impl ContractModule {
    pub fn function_index(&self, name: &str) -> Option<u32> {
        self.functions.iter().position(|f| f.name == name).map(|i| i as u32)
    }

    /// Function implementing ABI action `action`, if any.
    pub fn action_function(&self, action: Name) -> Option<u32> {
        self.functions
            .iter()
            .position(|f| Name::parse(&f.name).is_ok_and(|n| n == action))
            .map(|i| i as u32)
    }

    pub fn literal_str(&self, index: u32) -> Option<&[u8]> {
        match self.literals.get(index as usize) {
            Some(Literal::Str(s)) => Some(s),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        let mut v = Vec::new();
        if self.functions.len() > MAX_FUNCTIONS || self.functions.iter().any(|f| f.body.len() >= MAX_BODY_LEN) {
            v.push(Violation::TooLarge);
        }
        match self.functions.get(self.apply_fn as usize) {
            None => v.push(Violation::MissingApply),
            Some(f) if f.params != 3 => v.push(Violation::ApplyArity(f.params)),
            Some(_) => {}
        }
        for (slot, &func) in self.table.iter().enumerate() {
            if func as usize >= self.functions.len() {
                v.push(Violation::BadTableSlot { slot, func });
            }
        }
        for entry in &self.abi.entries {
            if self.action_function(entry.name).is_none() {
                v.push(Violation::DanglingAbi(entry.name));
            }
        }
        for f in &self.functions {
            let len = f.body.len();
            for (offset, op) in f.body.iter().enumerate() {
                match *op {
                    Op::Br(t) | Op::BrIf(t) if t as usize >= len => v.push(Violation::BadBranchTarget {
                        func: f.name.clone(),
                        offset,
                        target: t,
                    }),
                    Op::Call(c) if c as usize >= self.functions.len() => v.push(Violation::BadCall {
                        func: f.name.clone(),
                        offset,
                        callee: c,
                    }),
                    Op::LoadLocal(i) | Op::StoreLocal(i) if i >= f.locals => v.push(Violation::BadLocal {
                        func: f.name.clone(),
                        offset,
                        index: i,
                    }),
                    Op::AssertNz(i) if self.literal_str(i).is_none() => v.push(Violation::BadMessage {
                        func: f.name.clone(),
                        offset,
                        index: i,
                    }),
                    _ => {}
                }
            }
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(ValidationError(v))
        }
    }

    /// Canonical binary encoding; equal modules encode to equal bytes.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Vec::new();
        w.extend_from_slice(b"MCB1");
        w.extend_from_slice(&self.name.value().to_be_bytes());
        put_u32(&mut w, self.functions.len() as u32);
        for f in &self.functions {
            put_bytes(&mut w, f.name.as_bytes());
            put_u32(&mut w, f.params);
            put_u32(&mut w, f.locals);
            put_u32(&mut w, f.body.len() as u32);
            for op in &f.body {
                encode_op(&mut w, op);
            }
        }
        put_u32(&mut w, self.table.len() as u32);
        for &t in &self.table {
            put_u32(&mut w, t);
        }
        put_u32(&mut w, self.literals.len() as u32);
        for lit in &self.literals {
            match lit {
                Literal::Int(i) => {
                    w.push(0);
                    w.extend_from_slice(&i.to_be_bytes());
                }
                Literal::Name(n) => {
                    w.push(1);
                    w.extend_from_slice(&n.value().to_be_bytes());
                }
                Literal::Str(s) => {
                    w.push(2);
                    put_bytes(&mut w, s);
                }
            }
        }
        put_u32(&mut w, self.abi.entries.len() as u32);
        for e in &self.abi.entries {
            w.extend_from_slice(&e.name.value().to_be_bytes());
            put_bytes(&mut w, crate::abi::join_types(&e.params).as_bytes());
        }
        put_u32(&mut w, self.apply_fn);
        w
    }
}

fn put_u32(w: &mut Vec<u8>, v: u32) {
    w.extend_from_slice(&v.to_be_bytes());
}

fn put_bytes(w: &mut Vec<u8>, b: &[u8]) {
    put_u32(w, b.len() as u32);
    w.extend_from_slice(b);
}

fn encode_op(w: &mut Vec<u8>, op: &Op) {
    let (tag, imm): (u8, Option<i64>) = match *op {
        Op::Call(i) => (0, Some(i as i64)),
        Op::CallIndirect => (1, None),
        Op::Br(t) => (2, Some(t as i64)),
        Op::BrIf(t) => (3, Some(t as i64)),
        Op::Return => (4, None),
        Op::Const(c) => (5, Some(c)),
        Op::Add => (6, None),
        Op::Sub => (7, None),
        Op::Mul => (8, None),
        Op::Mod => (9, None),
        Op::Eq => (10, None),
        Op::Ne => (11, None),
        Op::LtS => (12, None),
        Op::GtS => (13, None),
        Op::Drop => (14, None),
        Op::Dup => (15, None),
        Op::LoadLocal(i) => (16, Some(i as i64)),
        Op::StoreLocal(i) => (17, Some(i as i64)),
        Op::ParamLoad(i) => (18, Some(i as i64)),
        Op::MemoByte => (19, None),
        Op::MemoLen => (20, None),
        Op::HostCall(h) => (21, Some(h as i64)),
        Op::AssertNz(i) => (22, Some(i as i64)),
    };
    w.push(tag);
    if let Some(imm) = imm {
        w.extend_from_slice(&imm.to_be_bytes());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "contract empty\nfn apply(3)\napply apply\n";

    #[test]
    fn minimal_module() {
        let m = assemble(MINIMAL).unwrap();
        assert_eq!(m.functions.len(), 1);
        assert!(m.table.is_empty());
        assert_eq!(m.name, Name::lit("empty"));
        assert_eq!(m.to_bytes(), assemble(MINIMAL).unwrap().to_bytes());
    }

    #[test]
    fn apply_arity_violation() {
        let mut m = assemble(MINIMAL).unwrap();
        m.functions[0].params = 2;
        let err = m.validate().unwrap_err();
        assert_eq!(err.0, vec![Violation::ApplyArity(2)]);
        assert!(err.to_string().contains("apply arity"));
    }

    #[test]
    fn dangling_abi_after_removing_function() {
        let src = "contract c\nfn apply(3)\nfn play(0)\nabi play (u64)\napply apply\n";
        let mut m = assemble(src).unwrap();
        assert!(m.validate().is_ok());
        m.functions.pop();
        let err = m.validate().unwrap_err();
        assert_eq!(err.0, vec![Violation::DanglingAbi(Name::lit("play"))]);
        assert!(err.to_string().contains("dangling ABI entry"));
    }

    #[test]
    fn bad_table_slot_and_missing_apply() {
        let mut m = assemble(MINIMAL).unwrap();
        m.table.push(5);
        m.apply_fn = 9;
        let err = m.validate().unwrap_err();
        assert!(err.0.contains(&Violation::MissingApply));
        assert!(err.0.contains(&Violation::BadTableSlot { slot: 0, func: 5 }));
    }
}
