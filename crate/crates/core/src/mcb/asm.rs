//! Line-oriented assembler and canonical disassembler for contract modules.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use super::{ContractModule, Function, Literal, Op, ValidationError};
use crate::abi::{self, AbiDescriptor, AbiEntry};
use crate::name::Name;
use crate::vm::HostFn;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AsmError {
    #[error("{line}:{col}: syntax error: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("{line}:{col}: unresolved symbol {symbol:?}")]
    Unresolved { line: usize, col: usize, symbol: String },
    #[error("{line}:{col}: arity mismatch: {msg}")]
    Arity { line: usize, col: usize, msg: String },
    #[error(transparent)]
    Invalid(#[from] ValidationError),
}

fn syntax(line: usize, col: usize, msg: impl Into<String>) -> AsmError {
    AsmError::Syntax { line, col, msg: msg.into() }
}

/// Source position of a symbol awaiting resolution.
#[derive(Clone)]
struct Pending {
    line: usize,
    col: usize,
    symbol: String,
}

struct FnBuilder {
    func: Function,
    line: usize,
    labels: HashMap<String, u32>,
    branches: Vec<(usize, Pending)>,
    calls: Vec<(usize, Pending)>,
}

#[derive(Default)]
struct Assembler {
    name: Option<Name>,
    literals: Vec<Literal>,
    functions: Vec<FnBuilder>,
    table: Vec<Pending>,
    abi: Vec<(Pending, Vec<abi::AbiType>)>,
    apply: Option<Pending>,
}

impl Assembler {
    fn implicit_int(&mut self, v: i64) {
        let present = self.literals.iter().any(|l| match l {
            Literal::Int(i) => *i == v,
            Literal::Name(n) => n.value() as i64 == v,
            Literal::Str(_) => false,
        });
        if !present {
            self.literals.push(Literal::Int(v));
        }
    }

    fn implicit_name(&mut self, n: Name) {
        if !self.literals.contains(&Literal::Name(n)) {
            self.literals.push(Literal::Name(n));
        }
    }

    fn message(&mut self, s: Vec<u8>) -> u32 {
        let lit = Literal::Str(s);
        match self.literals.iter().position(|l| *l == lit) {
            Some(i) => i as u32,
            None => {
                self.literals.push(lit);
                (self.literals.len() - 1) as u32
            }
        }
    }

    fn current(&mut self, line: usize) -> Result<&mut FnBuilder, AsmError> {
        self.functions
            .last_mut()
            .ok_or_else(|| syntax(line, 1, "instruction outside of a function"))
    }
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.')
}

fn strip_comment(line: &str) -> &str {
    let mut in_str = false;
    let mut escaped = false;
    for (i, c) in line.char_indices() {
        match c {
            '\\' if in_str && !escaped => {
                escaped = true;
                continue;
            }
            '"' if !escaped => in_str = !in_str,
            '#' if !in_str => return &line[..i],
            _ => {}
        }
        escaped = false;
    }
    line
}

fn parse_escaped(body: &str, line: usize, col: usize) -> Result<Vec<u8>, AsmError> {
    let mut out = Vec::new();
    let bytes = body.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'\\' {
            let esc = *bytes.get(i + 1).ok_or_else(|| syntax(line, col + i, "dangling escape"))?;
            match esc {
                b'n' => out.push(b'\n'),
                b't' => out.push(b'\t'),
                b'0' => out.push(0),
                b'\\' => out.push(b'\\'),
                b'"' => out.push(b'"'),
                b'\'' => out.push(b'\''),
                b'x' => {
                    let hex = body.get(i + 2..i + 4).ok_or_else(|| syntax(line, col + i, "short \\x escape"))?;
                    out.push(u8::from_str_radix(hex, 16).map_err(|_| syntax(line, col + i, "bad \\x escape"))?);
                    i += 2;
                }
                _ => return Err(syntax(line, col + i, format!("unknown escape \\{}", esc as char))),
            }
            i += 2;
        } else {
            out.push(bytes[i]);
            i += 1;
        }
    }
    Ok(out)
}

fn parse_quoted(tok: &str, line: usize, col: usize) -> Result<Vec<u8>, AsmError> {
    let body = tok
        .strip_prefix('"')
        .and_then(|t| t.strip_suffix('"'))
        .filter(|_| tok.len() >= 2)
        .ok_or_else(|| syntax(line, col, "expected a quoted string"))?;
    parse_escaped(body, line, col + 1)
}

fn escape(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() + 2);
    s.push('"');
    for &b in bytes {
        match b {
            b'"' => s.push_str("\\\""),
            b'\\' => s.push_str("\\\\"),
            0x20..=0x7e => s.push(b as char),
            _ => {
                let _ = write!(s, "\\x{b:02x}");
            }
        }
    }
    s.push('"');
    s
}

enum ConstValue {
    Int(i64),
    Name(Name),
}

fn parse_const(tok: &str, line: usize, col: usize) -> Result<ConstValue, AsmError> {
    // names never contain '0', so `@0x` marks a raw value
    if let Some(hex) = tok.strip_prefix("@0x") {
        return u64::from_str_radix(hex, 16)
            .map(|v| ConstValue::Name(Name::from_raw(v)))
            .map_err(|_| syntax(line, col, format!("bad raw name {tok:?}")));
    }
    if let Some(n) = tok.strip_prefix('@') {
        return Name::parse(n)
            .map(ConstValue::Name)
            .map_err(|e| syntax(line, col, e.to_string()));
    }
    if let Some(body) = tok.strip_prefix('\'').and_then(|t| t.strip_suffix('\'')) {
        let bytes = parse_escaped(body, line, col + 1)?;
        return match bytes.as_slice() {
            [b] => Ok(ConstValue::Int(*b as i64)),
            _ => Err(syntax(line, col, "character literal must be one byte")),
        };
    }
    parse_int(tok, line, col).map(ConstValue::Int)
}

fn parse_int(tok: &str, line: usize, col: usize) -> Result<i64, AsmError> {
    let (neg, digits) = match tok.strip_prefix('-') {
        Some(d) => (true, d),
        None => (false, tok),
    };
    let parsed = match digits.strip_prefix("0x") {
        Some(h) => u64::from_str_radix(h, 16).map(|v| v as i64),
        None => digits.parse::<u64>().map(|v| v as i64),
    };
    let v = parsed.map_err(|_| syntax(line, col, format!("invalid integer {tok:?}")))?;
    Ok(if neg { v.wrapping_neg() } else { v })
}

fn parse_index(tok: &str, line: usize, col: usize) -> Result<u32, AsmError> {
    tok.parse::<u32>()
        .map_err(|_| syntax(line, col, format!("expected a non-negative index, got {tok:?}")))
}

fn parse_fn_header(rest: &str, line: usize, col: usize) -> Result<(String, u32, Option<u32>), AsmError> {
    let open = rest.find('(').ok_or_else(|| syntax(line, col, "expected fn <name>(<argc>)"))?;
    let close = rest.rfind(')').ok_or_else(|| syntax(line, col, "expected ')'"))?;
    let name = rest[..open].trim();
    if !is_ident(name) {
        return Err(syntax(line, col, format!("invalid function name {name:?}")));
    }
    if close < open {
        return Err(syntax(line, col + close, "unbalanced parentheses"));
    }
    let argc = parse_index(rest[open + 1..close].trim(), line, col + open + 1)?;
    let tail = rest[close + 1..].trim();
    let locals = match tail.strip_prefix("locals") {
        _ if tail.is_empty() => None,
        Some(n) => Some(parse_index(n.trim(), line, col + close + 1)?),
        None => return Err(syntax(line, col + close + 1, "unexpected text after parameter count")),
    };
    Ok((name.to_string(), argc, locals))
}

pub fn assemble(text: &str) -> Result<ContractModule, AsmError> {
    let mut asm = Assembler::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = strip_comment(raw);
        let trimmed = content.trim();
        if trimmed.is_empty() {
            continue;
        }
        let indent = content.len() - content.trim_start().len();
        let col = indent + 1;
        let (head, rest) = match trimmed.find(char::is_whitespace) {
            Some(p) => (&trimmed[..p], trimmed[p..].trim()),
            None => (trimmed, ""),
        };
        let rest_col = col + trimmed.len() - rest.len();

        if let Some(label) = head.strip_suffix(':').filter(|_| rest.is_empty()) {
            if !is_ident(label) {
                return Err(syntax(line, col, format!("invalid label {label:?}")));
            }
            let f = asm.current(line)?;
            let at = f.func.body.len() as u32;
            if f.labels.insert(label.to_string(), at).is_some() {
                return Err(syntax(line, col, format!("duplicate label {label:?}")));
            }
            continue;
        }

        let needs_operand = |what: &str| {
            if rest.is_empty() {
                Err(syntax(line, rest_col, format!("{head} expects {what}")))
            } else {
                Ok(())
            }
        };
        let no_operand = || {
            if rest.is_empty() {
                Ok(())
            } else {
                Err(syntax(line, rest_col, format!("{head} takes no operand")))
            }
        };

        match head {
            "contract" => {
                needs_operand("an account name")?;
                if asm.name.is_some() {
                    return Err(syntax(line, col, "duplicate contract declaration"));
                }
                asm.name = Some(Name::parse(rest).map_err(|e| syntax(line, rest_col, e.to_string()))?);
            }
            "lit" => {
                needs_operand("a literal")?;
                let lit = if rest.starts_with('"') {
                    Literal::Str(parse_quoted(rest, line, rest_col)?)
                } else {
                    match parse_const(rest, line, rest_col)? {
                        ConstValue::Int(i) => Literal::Int(i),
                        ConstValue::Name(n) => Literal::Name(n),
                    }
                };
                asm.literals.push(lit);
            }
            "fn" => {
                needs_operand("a header")?;
                let (name, params, locals) = parse_fn_header(rest, line, rest_col)?;
                if asm.functions.iter().any(|f| f.func.name == name) {
                    return Err(syntax(line, rest_col, format!("duplicate function {name:?}")));
                }
                asm.functions.push(FnBuilder {
                    func: Function { name, params, locals: locals.unwrap_or(params).max(params), body: Vec::new() },
                    line,
                    labels: HashMap::new(),
                    branches: Vec::new(),
                    calls: Vec::new(),
                });
            }
            "table" => {
                let mut offset = 0;
                for tok in rest.split_whitespace() {
                    let at = rest[offset..].find(tok).unwrap() + offset;
                    offset = at + tok.len();
                    asm.table.push(Pending { line, col: rest_col + at, symbol: tok.to_string() });
                }
            }
            "abi" => {
                needs_operand("an action signature")?;
                let (name, params) = abi::parse_entry(rest).map_err(|m| syntax(line, rest_col, m))?;
                asm.abi.push((Pending { line, col: rest_col, symbol: name.to_string() }, params));
            }
            "apply" => {
                needs_operand("a function name")?;
                asm.apply = Some(Pending { line, col: rest_col, symbol: rest.to_string() });
            }
            _ => {
                let op = match head {
                    "call" => {
                        needs_operand("a function name")?;
                        let f = asm.current(line)?;
                        let at = f.func.body.len();
                        f.calls.push((at, Pending { line, col: rest_col, symbol: rest.to_string() }));
                        Op::Call(0)
                    }
                    "br" | "br_if" => {
                        needs_operand("a label or offset")?;
                        let target = match rest.parse::<u32>() {
                            Ok(t) => t,
                            Err(_) => {
                                let f = asm.current(line)?;
                                let at = f.func.body.len();
                                f.branches.push((at, Pending { line, col: rest_col, symbol: rest.to_string() }));
                                0
                            }
                        };
                        if head == "br" {
                            Op::Br(target)
                        } else {
                            Op::BrIf(target)
                        }
                    }
                    "const" => {
                        needs_operand("a value")?;
                        match parse_const(rest, line, rest_col)? {
                            ConstValue::Int(i) => {
                                asm.implicit_int(i);
                                Op::Const(i)
                            }
                            ConstValue::Name(n) => {
                                asm.implicit_name(n);
                                Op::Const(n.value() as i64)
                            }
                        }
                    }
                    "load" | "store" | "param" => {
                        needs_operand("an index")?;
                        let i = parse_index(rest, line, rest_col)?;
                        match head {
                            "load" => Op::LoadLocal(i),
                            "store" => Op::StoreLocal(i),
                            _ => Op::ParamLoad(i),
                        }
                    }
                    "host" => {
                        needs_operand("a host function")?;
                        let h = rest.parse::<HostFn>().map_err(|_| AsmError::Unresolved {
                            line,
                            col: rest_col,
                            symbol: rest.to_string(),
                        })?;
                        Op::HostCall(h)
                    }
                    "assertnz" => {
                        needs_operand("a message")?;
                        let msg = parse_quoted(rest, line, rest_col)?;
                        Op::AssertNz(asm.message(msg))
                    }
                    other => {
                        let op = match other {
                            "call_indirect" => Op::CallIndirect,
                            "return" => Op::Return,
                            "add" => Op::Add,
                            "sub" => Op::Sub,
                            "mul" => Op::Mul,
                            "mod" => Op::Mod,
                            "eq" => Op::Eq,
                            "ne" => Op::Ne,
                            "lt_s" => Op::LtS,
                            "gt_s" => Op::GtS,
                            "drop" => Op::Drop,
                            "dup" => Op::Dup,
                            "memobyte" => Op::MemoByte,
                            "memolen" => Op::MemoLen,
                            _ => return Err(syntax(line, col, format!("unknown instruction {other:?}"))),
                        };
                        no_operand()?;
                        op
                    }
                };
                let f = asm.current(line)?;
                if let Op::LoadLocal(i) | Op::StoreLocal(i) = op {
                    f.func.locals = f.func.locals.max(i + 1);
                }
                f.func.body.push(op);
            }
        }
    }
    finish(asm)
}

fn finish(asm: Assembler) -> Result<ContractModule, AsmError> {
    let name = asm.name.ok_or_else(|| syntax(1, 1, "missing contract declaration"))?;
    let index: HashMap<String, u32> = asm
        .functions
        .iter()
        .enumerate()
        .map(|(i, f)| (f.func.name.clone(), i as u32))
        .collect();
    let resolve = |p: &Pending| {
        index.get(&p.symbol).copied().ok_or_else(|| AsmError::Unresolved {
            line: p.line,
            col: p.col,
            symbol: p.symbol.clone(),
        })
    };

    let mut functions = Vec::with_capacity(asm.functions.len());
    for mut fb in asm.functions {
        for (at, p) in &fb.calls {
            fb.func.body[*at] = Op::Call(resolve(p)?);
        }
        for (at, p) in &fb.branches {
            let target = *fb.labels.get(&p.symbol).ok_or_else(|| AsmError::Unresolved {
                line: p.line,
                col: p.col,
                symbol: p.symbol.clone(),
            })?;
            fb.func.body[*at] = match fb.func.body[*at] {
                Op::Br(_) => Op::Br(target),
                _ => Op::BrIf(target),
            };
        }
        let _ = fb.line;
        functions.push(fb.func);
    }

    let table = asm.table.iter().map(resolve).collect::<Result<Vec<_>, _>>()?;
    let mut entries = Vec::with_capacity(asm.abi.len());
    for (p, params) in asm.abi {
        resolve(&p)?;
        let name = Name::parse(&p.symbol).map_err(|e| syntax(p.line, p.col, e.to_string()))?;
        entries.push(AbiEntry { name, params });
    }
    let apply = asm.apply.ok_or_else(|| syntax(1, 1, "missing apply declaration"))?;
    let apply_fn = resolve(&apply)?;
    let argc = functions[apply_fn as usize].params;
    if argc != 3 {
        return Err(AsmError::Arity {
            line: apply.line,
            col: apply.col,
            msg: format!("apply function {:?} takes {argc} parameters, expected 3", apply.symbol),
        });
    }

    let module = ContractModule {
        name,
        functions,
        table,
        literals: asm.literals,
        abi: AbiDescriptor { entries },
        apply_fn,
    };
    module.validate()?;
    Ok(module)
}

/// Canonical text form. Re-assembling the output yields an identical module.
pub fn disassemble(m: &ContractModule) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "contract {}", m.name);
    for lit in &m.literals {
        let _ = match lit {
            Literal::Int(i) => writeln!(out, "lit {i}"),
            Literal::Name(n) => writeln!(out, "lit {}", name_token(*n).unwrap_or_else(|| format!("@0x{:016x}", n.value()))),
            Literal::Str(s) => writeln!(out, "lit {}", escape(s)),
        };
    }
    for f in &m.functions {
        let implied = f.body.iter().fold(f.params, |acc, op| match op {
            Op::LoadLocal(i) | Op::StoreLocal(i) => acc.max(i + 1),
            _ => acc,
        });
        if implied == f.locals {
            let _ = writeln!(out, "fn {}({})", f.name, f.params);
        } else {
            let _ = writeln!(out, "fn {}({}) locals {}", f.name, f.params, f.locals);
        }
        let mut targets: Vec<u32> = f
            .body
            .iter()
            .filter_map(|op| match op {
                Op::Br(t) | Op::BrIf(t) => Some(*t),
                _ => None,
            })
            .collect();
        targets.sort_unstable();
        targets.dedup();
        for (off, op) in f.body.iter().enumerate() {
            if targets.binary_search(&(off as u32)).is_ok() {
                let _ = writeln!(out, "L{off}:");
            }
            let _ = match *op {
                Op::Call(c) => writeln!(out, "  call {}", m.functions[c as usize].name),
                Op::Br(t) => writeln!(out, "  br L{t}"),
                Op::BrIf(t) => writeln!(out, "  br_if L{t}"),
                Op::Const(c) => {
                    let named = m.literals.iter().find_map(|l| match l {
                        Literal::Name(n) if n.value() as i64 == c => name_token(*n),
                        _ => None,
                    });
                    match named {
                        Some(tok) => writeln!(out, "  const {tok}"),
                        None => writeln!(out, "  const {c}"),
                    }
                }
                Op::LoadLocal(i) => writeln!(out, "  load {i}"),
                Op::StoreLocal(i) => writeln!(out, "  store {i}"),
                Op::ParamLoad(i) => writeln!(out, "  param {i}"),
                Op::HostCall(h) => writeln!(out, "  host {h}"),
                Op::AssertNz(i) => writeln!(out, "  assertnz {}", escape(m.literal_str(i).unwrap_or_default())),
                other => writeln!(out, "  {}", other.mnemonic()),
            };
        }
    }
    if !m.table.is_empty() {
        let names: Vec<&str> = m.table.iter().map(|&t| m.functions[t as usize].name.as_str()).collect();
        let _ = writeln!(out, "table {}", names.join(" "));
    }
    for e in &m.abi.entries {
        let _ = writeln!(out, "abi {} ({})", e.name, abi::join_types(&e.params));
    }
    let _ = writeln!(out, "apply {}", m.functions[m.apply_fn as usize].name);
    out
}

/// `@name` when the value round-trips through its text form.
fn name_token(n: Name) -> Option<String> {
    let s = n.to_string();
    (Name::parse(&s).ok() == Some(n)).then(|| format!("@{s}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn branch_past_end_is_rejected() {
        let err = assemble("contract c\nfn apply(3)\n  br 5\n  return\napply apply\n").unwrap_err();
        assert!(err.to_string().contains("invalid branch target"), "{err}");
    }

    #[test]
    fn syntax_errors_carry_position() {
        let err = assemble("contract c\nfn apply(3)\n  frobnicate\napply apply\n").unwrap_err();
        assert_eq!(err, AsmError::Syntax { line: 3, col: 3, msg: "unknown instruction \"frobnicate\"".into() });
        let err = assemble("contract c\nfn apply(3)\n  jump far\napply apply\n").unwrap_err();
        assert_eq!(err, AsmError::Syntax { line: 3, col: 3, msg: "unknown instruction \"jump\"".into() });
        let err = assemble("contract c\nfn apply(3)\n  add 1\napply apply\n").unwrap_err();
        assert_eq!(err, AsmError::Syntax { line: 3, col: 7, msg: "add takes no operand".into() });
        let err = assemble("contract c\nfn apply(3)\n  call nowhere\napply apply\n").unwrap_err();
        assert_eq!(err, AsmError::Unresolved { line: 3, col: 8, symbol: "nowhere".into() });
        let err = assemble("contract c\nfn apply(3)\n  host teleport\napply apply\n").unwrap_err();
        assert!(matches!(err, AsmError::Unresolved { line: 3, .. }));
        let err = assemble("contract c\nfn apply(3)\n  br_if missing\napply apply\n").unwrap_err();
        assert!(matches!(err, AsmError::Unresolved { line: 3, .. }));
    }

    #[test]
    fn apply_arity_mismatch() {
        let err = assemble("contract c\nfn apply(2)\napply apply\n").unwrap_err();
        assert!(matches!(err, AsmError::Arity { line: 3, .. }), "{err}");
    }

    #[test]
    fn labels_and_literals() {
        let src = r#"
contract c          # comment
lit "play"
fn apply(3)
  const 'v'
  const @transfer
  eq
  br_if yes
  return
yes:
  const 0
  assertnz "no # here"
  return
apply apply
"#;
        let m = assemble(src).unwrap();
        let body = &m.functions[0].body;
        assert_eq!(body[0], Op::Const(118));
        assert_eq!(body[3], Op::BrIf(5));
        assert_eq!(
            m.literals,
            vec![
                Literal::Str(b"play".to_vec()),
                Literal::Int(118),
                Literal::Name(Name::lit("transfer")),
                Literal::Int(0),
                Literal::Str(b"no # here".to_vec()),
            ]
        );
        assert_eq!(body[6], Op::AssertNz(4));
    }

    #[test]
    fn locals_grow_with_use() {
        let m = assemble("contract c\nfn apply(3)\n  const 1\n  store 6\napply apply\n").unwrap();
        assert_eq!(m.functions[0].locals, 7);
    }

    #[test]
    fn disassembly_reassembles() {
        let src = "contract c\nlit \"a\\x01\"\nfn apply(3)\n  load 0\n  call h\n  br_if 0\nfn h(1)\n  const -5\n  return\ntable h apply\nabi h (u8,string)\napply apply\n";
        let m = assemble(src).unwrap();
        let text = disassemble(&m);
        assert_eq!(assemble(&text).unwrap().to_bytes(), m.to_bytes());
    }
}
