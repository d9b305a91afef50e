//! Instrumented interpreter for contract modules.

mod coverage;
mod host;
mod trace;

pub use coverage::{location, mix64, record_edge, CoverageBitmap, EdgeState, MAP_SIZE};
pub use host::{Arity, HostCategory, HostFn, UnknownHostFn};
pub use trace::{parse_trace, HostCallEvent, InstrEvent, TraceEvent, TraceLog, TraceParseError, TraceRecord, TransferEvent};

use thiserror::Error;

use crate::chain::ArgValue;
use crate::mcb::{ContractModule, Op};
use crate::name::Name;

pub const DEFAULT_STEP_LIMIT: u64 = 1_000_000;
pub const MAX_CALL_DEPTH: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Trap {
    #[error("assertion failure: {0}")]
    Assert(String),
    #[error("stack underflow")]
    StackUnderflow,
    #[error("bad table slot {0}")]
    BadTableSlot(i64),
    #[error("integer remainder by zero")]
    RemainderByZero,
    #[error("no action parameter {0}")]
    MissingParam(u32),
    #[error("call depth exceeded")]
    CallDepth,
    #[error("step limit exceeded")]
    StepLimit,
    #[error("missing authority of {0}")]
    MissingAuth(Name),
    #[error("{0}")]
    Host(String),
}

/// Packed code address of instruction `offset` in function `func` of the
/// contract deployed at `account`.
pub fn code_address(account: Name, func: u32, offset: usize) -> u64 {
    account.value() ^ (((func as u64) << 20) | offset as u64)
}

/// Context supplied by the chain for one action delivery.
pub trait HostEnv {
    fn param(&self, index: u32) -> Option<&ArgValue>;
    /// `args` are in push order. Host events are appended to `trace`.
    fn host_call(&mut self, f: HostFn, args: &[i64], trace: &mut TraceLog) -> Result<Option<i64>, Trap>;
}

struct Frame {
    func: u32,
    ip: usize,
    locals: Vec<i64>,
    base: usize,
}

pub struct Vm {
    pub bitmap: CoverageBitmap,
    pub edge: EdgeState,
    pub trace: TraceLog,
    pub step_limit: u64,
    steps: u64,
    edges_recorded: u64,
}

impl Default for Vm {
    fn default() -> Self {
        Self::new()
    }
}

impl Vm {
    pub fn new() -> Self {
        Vm {
            bitmap: CoverageBitmap::new(),
            edge: EdgeState::default(),
            trace: TraceLog::default(),
            step_limit: DEFAULT_STEP_LIMIT,
            steps: 0,
            edges_recorded: 0,
        }
    }

    /// Clears coverage and trace for a fresh iteration.
    pub fn reset(&mut self) {
        self.bitmap.clear();
        self.trace.clear();
        self.edge = EdgeState::default();
        self.steps = 0;
        self.edges_recorded = 0;
    }

    /// Called at the start of every transaction.
    pub fn begin_transaction(&mut self) {
        self.edge = EdgeState::default();
        self.steps = 0;
    }

    /// Number of `record_edge` invocations since the last reset.
    pub fn edges_recorded(&self) -> u64 {
        self.edges_recorded
    }

    fn edge_at(&mut self, pc: u64) {
        record_edge(&mut self.edge, pc, &mut self.bitmap);
        self.edges_recorded += 1;
    }

    fn instr(&mut self, op: Op, operands: Vec<i64>, result: Option<i64>, src_pc: u64, dst_pc: Option<u64>) {
        self.trace.push(TraceEvent::Instr(InstrEvent { op, operands, result, src_pc, dst_pc }));
    }

    /// Runs `entry` of `module` deployed at `account` to completion.
    pub fn execute(
        &mut self,
        module: &ContractModule,
        account: Name,
        entry: u32,
        args: &[i64],
        env: &mut dyn HostEnv,
    ) -> Result<Option<i64>, Trap> {
        let f = &module.functions[entry as usize];
        let mut frames = vec![new_frame(entry, f.locals, args, 0)];
        let mut stack: Vec<i64> = Vec::new();

        macro_rules! pop {
            () => {
                stack.pop().ok_or(Trap::StackUnderflow)?
            };
        }

        loop {
            let frame = frames.last_mut().expect("active frame");
            let func = &module.functions[frame.func as usize];
            let here = frame.ip;
            if here >= func.body.len() {
                // fell off the end: implicit return, not instrumented
                let ret = (stack.len() > frame.base).then(|| *stack.last().unwrap());
                let base = frame.base;
                frames.pop();
                stack.truncate(base);
                if frames.is_empty() {
                    return Ok(ret);
                }
                stack.extend(ret);
                continue;
            }
            self.steps += 1;
            if self.steps > self.step_limit {
                return Err(Trap::StepLimit);
            }
            let op = func.body[here];
            let pc = code_address(account, frame.func, here);
            frame.ip += 1;
            match op {
                Op::Call(callee) => {
                    self.edge_at(pc);
                    let dst = code_address(account, callee, 0);
                    self.instr(op, Vec::new(), None, pc, Some(dst));
                    let cf = &module.functions[callee as usize];
                    let fr = self.enter(&mut stack, callee, cf.params, cf.locals, frames.len())?;
                    frames.push(fr);
                }
                Op::CallIndirect => {
                    self.edge_at(pc);
                    let slot = pop!();
                    let callee = usize::try_from(slot)
                        .ok()
                        .and_then(|s| module.table.get(s))
                        .copied()
                        .ok_or(Trap::BadTableSlot(slot))?;
                    let dst = code_address(account, callee, 0);
                    self.instr(op, vec![slot], None, pc, Some(dst));
                    let cf = &module.functions[callee as usize];
                    let fr = self.enter(&mut stack, callee, cf.params, cf.locals, frames.len())?;
                    frames.push(fr);
                }
                Op::Br(t) => {
                    self.edge_at(pc);
                    frame.ip = t as usize;
                    let dst = code_address(account, frame.func, t as usize);
                    self.instr(op, Vec::new(), None, pc, Some(dst));
                }
                Op::BrIf(t) => {
                    self.edge_at(pc);
                    let c = pop!();
                    let frame = frames.last_mut().unwrap();
                    let next = if c != 0 { t as usize } else { here + 1 };
                    frame.ip = next;
                    let dst = code_address(account, frame.func, next);
                    self.instr(op, vec![c], None, pc, Some(dst));
                }
                Op::Return => {
                    self.edge_at(pc);
                    let base = frame.base;
                    let ret = (stack.len() > base).then(|| *stack.last().unwrap());
                    frames.pop();
                    stack.truncate(base);
                    let dst = frames.last().map(|f| code_address(account, f.func, f.ip));
                    self.instr(op, ret.into_iter().collect(), None, pc, dst);
                    if frames.is_empty() {
                        return Ok(ret);
                    }
                    stack.extend(ret);
                }
                Op::Const(c) => {
                    stack.push(c);
                    self.instr(op, Vec::new(), Some(c), pc, None);
                }
                Op::Add | Op::Sub | Op::Mul | Op::Mod | Op::Eq | Op::Ne | Op::LtS | Op::GtS => {
                    let b = pop!();
                    let a = pop!();
                    let r = match op {
                        Op::Add => a.wrapping_add(b),
                        Op::Sub => a.wrapping_sub(b),
                        Op::Mul => a.wrapping_mul(b),
                        Op::Mod => {
                            if b == 0 {
                                return Err(Trap::RemainderByZero);
                            }
                            a.wrapping_rem(b)
                        }
                        Op::Eq => (a == b) as i64,
                        Op::Ne => (a != b) as i64,
                        Op::LtS => (a < b) as i64,
                        _ => (a > b) as i64,
                    };
                    stack.push(r);
                    self.instr(op, vec![a, b], Some(r), pc, None);
                }
                Op::Drop => {
                    pop!();
                }
                Op::Dup => {
                    let v = *stack.last().ok_or(Trap::StackUnderflow)?;
                    stack.push(v);
                }
                Op::LoadLocal(i) => {
                    let v = frames.last().unwrap().locals[i as usize];
                    stack.push(v);
                }
                Op::StoreLocal(i) => {
                    let v = pop!();
                    frames.last_mut().unwrap().locals[i as usize] = v;
                }
                Op::ParamLoad(i) => match env.param(i).ok_or(Trap::MissingParam(i))? {
                    ArgValue::Int(v) => stack.push(*v),
                    ArgValue::Bytes(_) => stack.push(i as i64),
                },
                Op::MemoByte => {
                    let offset = pop!();
                    let handle = pop!();
                    let b = string_param(env, handle)
                        .and_then(|s| usize::try_from(offset).ok().and_then(|o| s.get(o)))
                        .map_or(-1, |&b| b as i64);
                    stack.push(b);
                }
                Op::MemoLen => {
                    let handle = pop!();
                    stack.push(string_param(env, handle).map_or(0, |s| s.len() as i64));
                }
                Op::HostCall(h) => {
                    let n = match h.arity() {
                        host::Arity::Fixed(n) => n,
                        host::Arity::Counted { fixed } => {
                            let count = pop!();
                            let count = usize::try_from(count).map_err(|_| Trap::Host(format!("{h}: bad argument count {count}")))?;
                            if count > stack.len() {
                                return Err(Trap::StackUnderflow);
                            }
                            fixed + count
                        }
                    };
                    if n > stack.len() {
                        return Err(Trap::StackUnderflow);
                    }
                    let args = stack.split_off(stack.len() - n);
                    if let Some(r) = env.host_call(h, &args, &mut self.trace)? {
                        stack.push(r);
                    }
                }
                Op::AssertNz(msg) => {
                    let v = pop!();
                    if v == 0 {
                        let text = module.literal_str(msg).unwrap_or_default();
                        return Err(Trap::Assert(String::from_utf8_lossy(text).into_owned()));
                    }
                }
            }
        }
    }

    fn enter(&mut self, stack: &mut Vec<i64>, func: u32, params: u32, locals: u32, depth: usize) -> Result<Frame, Trap> {
        if depth >= MAX_CALL_DEPTH {
            return Err(Trap::CallDepth);
        }
        let n = params as usize;
        if stack.len() < n {
            return Err(Trap::StackUnderflow);
        }
        let args = stack.split_off(stack.len() - n);
        Ok(new_frame(func, locals, &args, stack.len()))
    }
}

fn new_frame(func: u32, locals: u32, args: &[i64], base: usize) -> Frame {
    let mut l = vec![0i64; (locals as usize).max(args.len())];
    l[..args.len()].copy_from_slice(args);
    Frame { func, ip: 0, locals: l, base }
}

/// Resolves a string handle pushed by `param`; -1 is the empty string.
pub fn string_param(env: &dyn HostEnv, handle: i64) -> Option<&[u8]> {
    let idx = u32::try_from(handle).ok()?;
    match env.param(idx)? {
        ArgValue::Bytes(b) => Some(b),
        ArgValue::Int(_) => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mcb::assemble;

    struct NoHost(Vec<ArgValue>);

    impl HostEnv for NoHost {
        fn param(&self, index: u32) -> Option<&ArgValue> {
            self.0.get(index as usize)
        }
        fn host_call(&mut self, f: HostFn, _: &[i64], _: &mut TraceLog) -> Result<Option<i64>, Trap> {
            Err(Trap::Host(format!("{f} unavailable")))
        }
    }

    fn run(src: &str, params: Vec<ArgValue>) -> (Vm, Result<Option<i64>, Trap>) {
        let m = assemble(src).unwrap();
        let mut vm = Vm::new();
        let r = vm.execute(&m, m.name, m.apply_fn, &[1, 2, 3], &mut NoHost(params));
        (vm, r)
    }

    #[test]
    fn straight_line_has_no_edges() {
        let (vm, r) = run("contract c\nfn apply(3)\n  const 2\n  const 3\n  add\napply apply\n", vec![]);
        assert_eq!(r, Ok(Some(5)));
        assert_eq!(vm.bitmap.nonzero_count(), 0);
        assert_eq!(vm.trace.len(), 3);
    }

    #[test]
    fn assert_traps_with_message() {
        let (_, r) = run("contract c\nfn apply(3)\n  const 0\n  assertnz \"rollback\"\napply apply\n", vec![]);
        assert_eq!(r, Err(Trap::Assert("rollback".into())));
    }

    #[test]
    fn remainder_by_zero_traps() {
        let (_, r) = run("contract c\nfn apply(3)\n  const 1\n  const 0\n  mod\napply apply\n", vec![]);
        assert_eq!(r, Err(Trap::RemainderByZero));
    }

    #[test]
    fn bad_slot_traps() {
        let (_, r) = run("contract c\nfn apply(3)\n  const 4\n  call_indirect\napply apply\n", vec![]);
        assert_eq!(r, Err(Trap::BadTableSlot(4)));
    }

    #[test]
    fn loops_saturate() {
        let src = "contract c\nfn apply(3)\n  const 1000\n  store 3\ntop:\n  load 3\n  const 1\n  sub\n  dup\n  store 3\n  br_if top\napply apply\n";
        let (vm, r) = run(src, vec![]);
        assert!(r.is_ok());
        assert!(vm.bitmap.as_bytes().contains(&255));
    }

    #[test]
    fn memo_access() {
        let src = "contract c\nfn apply(3)\n  param 0\n  const 1\n  memobyte\n  param 0\n  memolen\n  add\n  const -1\n  const 0\n  memobyte\n  add\napply apply\n";
        let (_, r) = run(src, vec![ArgValue::Bytes(b"ab".to_vec())]);
        assert_eq!(r, Ok(Some(b'b' as i64 + 2 - 1)));
    }

    #[test]
    fn step_limit() {
        let src = "contract c\nfn apply(3)\ntop:\n  br top\napply apply\n";
        let m = assemble(src).unwrap();
        let mut vm = Vm::new();
        vm.step_limit = 50;
        let r = vm.execute(&m, m.name, 0, &[0, 0, 0], &mut NoHost(vec![]));
        assert_eq!(r, Err(Trap::StepLimit));
        assert_eq!(vm.edges_recorded(), 50);
    }

    #[test]
    fn call_returns_value_and_records_edges() {
        let src = "contract c\nfn apply(3)\n  const 4\n  call sq\n  return\nfn sq(1)\n  load 0\n  load 0\n  mul\n  return\napply apply\n";
        let (vm, r) = run(src, vec![]);
        assert_eq!(r, Ok(Some(16)));
        assert_eq!(vm.edges_recorded(), 3);
        let cf = vm.trace.events.iter().filter(|e| e.as_instr().is_some_and(|i| i.op.is_control_flow())).count();
        assert_eq!(cf, 3);
    }
}
