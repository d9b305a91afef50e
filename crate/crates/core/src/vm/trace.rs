//! Ordered execution events and their line-record file form.

use std::fmt::Write as _;

use crate::chain::ArgValue;
use crate::mcb::Op;
use crate::name::Name;
use crate::vm::HostFn;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstrEvent {
    pub op: Op,
    pub operands: Vec<i64>,
    pub result: Option<i64>,
    pub src_pc: u64,
    pub dst_pc: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HostCallEvent {
    pub host_fn: HostFn,
    pub args: Vec<ArgValue>,
    pub payer: Name,
    pub effect: Option<Vec<u8>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransferEvent {
    pub from: Name,
    pub to: Name,
    pub amount: i64,
    pub memo: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceEvent {
    Instr(InstrEvent),
    Host(HostCallEvent),
    Transfer(TransferEvent),
    /// A contract's apply was entered for one action delivery.
    ApplyEnter { receiver: Name, code: Name, action: Name },
    ApplyExit { receiver: Name },
}

impl TraceEvent {
    pub fn as_instr(&self) -> Option<&InstrEvent> {
        match self {
            TraceEvent::Instr(i) => Some(i),
            _ => None,
        }
    }

    pub fn as_host(&self) -> Option<&HostCallEvent> {
        match self {
            TraceEvent::Host(h) => Some(h),
            _ => None,
        }
    }

    pub fn to_line(&self) -> String {
        let mut s = String::new();
        match self {
            TraceEvent::Instr(i) => {
                let ops: Vec<String> = i.operands.iter().map(|v| v.to_string()).collect();
                let _ = write!(
                    s,
                    "I|{}|{}|{}|{}|{}",
                    i.op.mnemonic(),
                    ops.join(","),
                    i.result.map(|r| r.to_string()).unwrap_or_default(),
                    i.src_pc,
                    i.dst_pc.map(|d| d.to_string()).unwrap_or_default()
                );
            }
            TraceEvent::Host(h) => {
                let args: Vec<String> = h.args.iter().map(arg_text).collect();
                let _ = write!(s, "H|{}|{}|{}", h.host_fn, args.join(","), h.payer);
            }
            TraceEvent::Transfer(t) => {
                let _ = write!(s, "T|{}|{}|{}|{}", t.from, t.to, t.amount, hex::encode(&t.memo));
            }
            TraceEvent::ApplyEnter { receiver, code, action } => {
                let _ = write!(s, "A|{receiver}|{code}|{action}");
            }
            TraceEvent::ApplyExit { receiver } => {
                let _ = write!(s, "X|{receiver}");
            }
        }
        s
    }
}

fn arg_text(a: &ArgValue) -> String {
    match a {
        ArgValue::Int(i) => i.to_string(),
        ArgValue::Bytes(b) => format!("0x{}", hex::encode(b)),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TraceLog {
    pub events: Vec<TraceEvent>,
}

impl TraceLog {
    pub fn push(&mut self, e: TraceEvent) {
        self.events.push(e);
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn clear(&mut self) {
        self.events.clear();
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&e.to_line());
            out.push('\n');
        }
        out
    }
}

/// One parsed trace file line. Fields stay textual where the file form
/// does not carry enough information to rebuild the event.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceRecord {
    Instr { opcode: String, operands: Vec<i64>, result: Option<i64>, src: u64, dst: Option<u64> },
    Host { host_fn: HostFn, args: Vec<ArgValue>, payer: Name },
    Transfer { from: Name, to: Name, amount: i64, memo: Vec<u8> },
    Enter { receiver: Name, code: Name, action: Name },
    Exit { receiver: Name },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("trace line {line}: {msg}")]
pub struct TraceParseError {
    pub line: usize,
    pub msg: String,
}

fn opt<T: std::str::FromStr>(s: &str) -> Result<Option<T>, ()> {
    if s.is_empty() {
        Ok(None)
    } else {
        s.parse().map(Some).map_err(|_| ())
    }
}

fn name_field(s: &str) -> Result<Name, ()> {
    if s.is_empty() {
        Ok(Name::from_raw(0))
    } else {
        Name::parse(s).map_err(|_| ())
    }
}

fn parse_record(line: &str) -> Result<TraceRecord, ()> {
    let f: Vec<&str> = line.split('|').collect();
    match (f[0], f.len()) {
        ("I", 6) => Ok(TraceRecord::Instr {
            opcode: f[1].to_string(),
            operands: if f[2].is_empty() {
                Vec::new()
            } else {
                f[2].split(',').map(|v| v.parse().map_err(|_| ())).collect::<Result<_, _>>()?
            },
            result: opt(f[3])?,
            src: f[4].parse().map_err(|_| ())?,
            dst: opt(f[5])?,
        }),
        ("H", 4) => Ok(TraceRecord::Host {
            host_fn: f[1].parse().map_err(|_| ())?,
            args: if f[2].is_empty() {
                Vec::new()
            } else {
                f[2].split(',')
                    .map(|a| match a.strip_prefix("0x") {
                        Some(h) => hex::decode(h).map(ArgValue::Bytes).map_err(|_| ()),
                        None => a.parse().map(ArgValue::Int).map_err(|_| ()),
                    })
                    .collect::<Result<_, _>>()?
            },
            payer: name_field(f[3])?,
        }),
        ("T", 5) => Ok(TraceRecord::Transfer {
            from: name_field(f[1])?,
            to: name_field(f[2])?,
            amount: f[3].parse().map_err(|_| ())?,
            memo: hex::decode(f[4]).map_err(|_| ())?,
        }),
        ("A", 4) => Ok(TraceRecord::Enter {
            receiver: name_field(f[1])?,
            code: name_field(f[2])?,
            action: name_field(f[3])?,
        }),
        ("X", 2) => Ok(TraceRecord::Exit { receiver: name_field(f[1])? }),
        _ => Err(()),
    }
}

pub fn parse_trace(text: &str) -> Result<Vec<TraceRecord>, TraceParseError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| {
            parse_record(l).map_err(|_| TraceParseError { line: i + 1, msg: format!("malformed record {l:?}") })
        })
        .collect()
}
