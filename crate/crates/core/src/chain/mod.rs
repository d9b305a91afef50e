//! Deterministic chain simulator: accounts, token ledger, transactions with
//! journaled rollback, inline and deferred actions, receipt forwarding.

mod action;
mod snapshot;
mod token;

pub use action::{decode_args, encode_args, Action, ArgValue, Transaction};
pub use token::{token_module, TOKEN_SOURCE};

use std::collections::{BTreeMap, VecDeque};
use std::sync::Arc;

use thiserror::Error;

use crate::abi::AbiType;
use crate::mcb::{ContractModule, ValidationError};
use crate::name::{Name, NameError};
use crate::vm::{string_param, HostCallEvent, HostEnv, HostFn, TraceEvent, TraceLog, TransferEvent, Trap, Vm};

pub const TOKEN_ACCOUNT: Name = Name::from_raw(0x5530_EA03_3482_A600);
pub const MAX_INLINE_DEPTH: usize = 64;
/// Bound on deferred transactions executed by one `run_deferred` call.
pub const MAX_DEFERRED_RUN: usize = 256;
pub const DEFAULT_CPU_BUDGET: i64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockInfo {
    pub tapos_num: u32,
    pub tapos_prefix: u32,
    pub timestamp: u64,
}

impl Default for BlockInfo {
    fn default() -> Self {
        BlockInfo { tapos_num: 3500, tapos_prefix: 941_147, timestamp: 1_600_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Row {
    pub value: Vec<u8>,
    pub payer: Name,
}

#[derive(Debug, Clone)]
pub struct Account {
    pub name: Name,
    /// In units of 0.0001 token.
    pub balance: i64,
    pub contract: Option<Arc<ContractModule>>,
    pub tables: BTreeMap<u64, BTreeMap<u64, Row>>,
    pub net_cpu_budget: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChainError {
    #[error("account {0} already exists")]
    DuplicateAccount(Name),
    #[error(transparent)]
    Malformed(#[from] NameError),
    #[error("unknown account {0}")]
    UnknownAccount(Name),
    #[error("amount must be positive, got {0}")]
    NonPositiveAmount(i64),
    #[error(transparent)]
    Invalid(#[from] ValidationError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TxStatus {
    Success,
    Failed(String),
}

#[derive(Debug, Clone)]
pub struct ExecutionResult {
    pub tx_id: u64,
    pub signer: Name,
    pub status: TxStatus,
    pub trace: TraceLog,
    pub origin: Option<u64>,
}

impl ExecutionResult {
    pub fn is_success(&self) -> bool {
        self.status == TxStatus::Success
    }
}

#[derive(Debug, Clone)]
enum Undo {
    Balance(Name, i64),
    Row { account: Name, table: u64, key: u64, old: Option<Row> },
}

#[derive(Debug, Clone)]
pub struct ChainState {
    accounts: BTreeMap<Name, Account>,
    deferred: VecDeque<Transaction>,
    pub block_info: BlockInfo,
    next_tx_id: u64,
    journal: Vec<Undo>,
}

impl Default for ChainState {
    fn default() -> Self {
        Self::new(BlockInfo::default())
    }
}

impl ChainState {
    /// A chain holding only the system token contract.
    pub fn new(block_info: BlockInfo) -> Self {
        let mut c = ChainState {
            accounts: BTreeMap::new(),
            deferred: VecDeque::new(),
            block_info,
            next_tx_id: 1,
            journal: Vec::new(),
        };
        c.create(TOKEN_ACCOUNT).expect("fresh chain");
        c.deploy(TOKEN_ACCOUNT, token_module()).expect("token contract deploys");
        c
    }

    pub fn account(&self, name: Name) -> Option<&Account> {
        self.accounts.get(&name)
    }

    pub fn accounts(&self) -> impl Iterator<Item = &Account> {
        self.accounts.values()
    }

    pub fn balance(&self, name: Name) -> i64 {
        self.accounts.get(&name).map_or(0, |a| a.balance)
    }

    pub fn total_supply(&self) -> i64 {
        self.accounts.values().map(|a| a.balance).sum()
    }

    pub fn deferred_len(&self) -> usize {
        self.deferred.len()
    }

    pub fn deferred_queue(&self) -> impl Iterator<Item = &Transaction> {
        self.deferred.iter()
    }

    pub fn create_account(&mut self, name: &str) -> Result<Name, ChainError> {
        let n = Name::parse(name)?;
        self.create(n)?;
        Ok(n)
    }

    pub fn create(&mut self, name: Name) -> Result<(), ChainError> {
        if self.accounts.contains_key(&name) {
            return Err(ChainError::DuplicateAccount(name));
        }
        self.accounts.insert(
            name,
            Account { name, balance: 0, contract: None, tables: BTreeMap::new(), net_cpu_budget: DEFAULT_CPU_BUDGET },
        );
        Ok(())
    }

    pub fn deploy(&mut self, name: Name, module: Arc<ContractModule>) -> Result<(), ChainError> {
        module.validate()?;
        let acct = self.accounts.get_mut(&name).ok_or(ChainError::UnknownAccount(name))?;
        acct.contract = Some(module);
        Ok(())
    }

    /// Mints `amount` to `to`.
    pub fn issue(&mut self, to: Name, amount: i64) -> Result<TransferEvent, ChainError> {
        if amount <= 0 {
            return Err(ChainError::NonPositiveAmount(amount));
        }
        let acct = self.accounts.get_mut(&to).ok_or(ChainError::UnknownAccount(to))?;
        acct.balance += amount;
        Ok(TransferEvent { from: TOKEN_ACCOUNT, to, amount, memo: b"issue".to_vec() })
    }

    fn set_balance(&mut self, name: Name, value: i64) {
        let acct = self.accounts.get_mut(&name).expect("checked account");
        self.journal.push(Undo::Balance(name, acct.balance));
        acct.balance = value;
    }

    fn set_row(&mut self, account: Name, table: u64, key: u64, row: Option<Row>) {
        let tables = &mut self.accounts.get_mut(&account).expect("executing account").tables;
        let t = tables.entry(table).or_default();
        let old = match row {
            Some(r) => t.insert(key, r),
            None => t.remove(&key),
        };
        if t.is_empty() {
            tables.remove(&table);
        }
        self.journal.push(Undo::Row { account, table, key, old });
    }

    fn rollback(&mut self) {
        while let Some(u) = self.journal.pop() {
            match u {
                Undo::Balance(n, v) => self.accounts.get_mut(&n).expect("journaled account").balance = v,
                Undo::Row { account, table, key, old } => {
                    let tables = &mut self.accounts.get_mut(&account).expect("journaled account").tables;
                    let t = tables.entry(table).or_default();
                    match old {
                        Some(r) => {
                            t.insert(key, r);
                        }
                        None => {
                            t.remove(&key);
                        }
                    }
                    if t.is_empty() {
                        tables.remove(&table);
                    }
                }
            }
        }
    }

    /// Executes a transaction atomically. On failure every state change is
    /// undone and deferred transactions it scheduled are dropped.
    pub fn push_transaction(&mut self, mut tx: Transaction, vm: &mut Vm) -> ExecutionResult {
        vm.begin_transaction();
        vm.trace.clear();
        if tx.id == 0 {
            tx.id = self.next_tx_id;
            self.next_tx_id += 1;
        }
        debug_assert!(self.journal.is_empty());
        let mut scheduled = Vec::new();
        let outcome = self.run_actions(&tx, vm, &mut scheduled);
        let status = match outcome {
            Ok(()) => {
                self.journal.clear();
                for mut d in scheduled {
                    d.id = self.next_tx_id;
                    self.next_tx_id += 1;
                    d.origin = Some(tx.id);
                    self.deferred.push_back(d);
                }
                TxStatus::Success
            }
            Err(reason) => {
                self.rollback();
                TxStatus::Failed(reason)
            }
        };
        ExecutionResult { tx_id: tx.id, signer: tx.signer, status, trace: std::mem::take(&mut vm.trace), origin: tx.origin }
    }

    fn run_actions(&mut self, tx: &Transaction, vm: &mut Vm, scheduled: &mut Vec<Transaction>) -> Result<(), String> {
        if !self.accounts.contains_key(&tx.signer) {
            return Err(format!("unknown signer {}", tx.signer));
        }
        if tx.actions.is_empty() {
            return Err("transaction has no actions".into());
        }
        for a in &tx.actions {
            let mut a = a.clone();
            a.payer = tx.signer;
            self.execute_action(a, vm, scheduled, 0)?;
        }
        Ok(())
    }

    /// Delivers an action to its receiver and every account notified along
    /// the way, then runs the inline actions they emitted, depth first.
    fn execute_action(&mut self, act: Action, vm: &mut Vm, scheduled: &mut Vec<Transaction>, depth: usize) -> Result<(), String> {
        if depth > MAX_INLINE_DEPTH {
            return Err("inline action depth exceeded".into());
        }
        let params = decode_args(&act.data).unwrap_or_default();
        let mut recipients = vec![act.receiver];
        let mut inlines = Vec::new();
        let mut i = 0;
        while i < recipients.len() {
            let r = recipients[i];
            i += 1;
            let acct = self.accounts.get(&r).ok_or_else(|| format!("unknown account {r}"))?;
            let Some(module) = acct.contract.clone() else { continue };
            let mut delivered = act.clone();
            delivered.receiver = r;
            vm.trace.push(TraceEvent::ApplyEnter { receiver: r, code: act.code, action: act.name });
            let apply_args = [r.value() as i64, act.code.value() as i64, act.name.value() as i64];
            let mut env = ActionEnv {
                chain: self,
                action: &delivered,
                params: &params,
                recipients: &mut recipients,
                inlines: &mut inlines,
                scheduled,
            };
            let res = vm.execute(&module, r, module.apply_fn, &apply_args, &mut env);
            vm.trace.push(TraceEvent::ApplyExit { receiver: r });
            res.map_err(|t| t.to_string())?;
        }
        for inline in inlines {
            self.execute_action(inline, vm, scheduled, depth + 1)?;
        }
        Ok(())
    }

    /// Drains the deferred queue in FIFO order; each entry is an
    /// independent transaction.
    pub fn run_deferred(&mut self, vm: &mut Vm) -> Vec<ExecutionResult> {
        let mut out = Vec::new();
        while out.len() < MAX_DEFERRED_RUN {
            let Some(tx) = self.deferred.pop_front() else { break };
            out.push(self.push_transaction(tx, vm));
        }
        out
    }

    /// A transfer through the token contract signed by `from`.
    pub fn transfer_tx(from: Name, to: Name, amount: i64, memo: &[u8]) -> Transaction {
        Transaction::new(
            from,
            vec![Action::new(
                TOKEN_ACCOUNT,
                Name::lit("transfer"),
                &[
                    ArgValue::Int(from.value() as i64),
                    ArgValue::Int(to.value() as i64),
                    ArgValue::Int(amount),
                    ArgValue::Bytes(memo.to_vec()),
                ],
                vec![from],
            )],
        )
    }
}

struct ActionEnv<'a> {
    chain: &'a mut ChainState,
    action: &'a Action,
    params: &'a [ArgValue],
    recipients: &'a mut Vec<Name>,
    inlines: &'a mut Vec<Action>,
    scheduled: &'a mut Vec<Transaction>,
}

fn name_arg(v: i64) -> Name {
    Name::from_raw(v as u64)
}

impl ActionEnv<'_> {
    fn event(&self, host_fn: HostFn, args: Vec<ArgValue>, effect: Option<Vec<u8>>, trace: &mut TraceLog) {
        trace.push(TraceEvent::Host(HostCallEvent { host_fn, args, payer: self.action.payer, effect }));
    }

    fn require_account(&self, n: Name) -> Result<(), Trap> {
        if self.chain.accounts.contains_key(&n) {
            Ok(())
        } else {
            Err(Trap::Host(format!("unknown account {n}")))
        }
    }

    /// Builds the action a contract sends; arguments are typed by the
    /// target's ABI so string parameters carry the referenced bytes.
    fn outgoing(&self, args: &[i64]) -> Action {
        let receiver = name_arg(args[0]);
        let name = name_arg(args[1]);
        let types: Vec<AbiType> = self
            .chain
            .accounts
            .get(&receiver)
            .and_then(|a| a.contract.as_ref())
            .and_then(|m| m.abi.get(name))
            .map(|e| e.params.clone())
            .unwrap_or_default();
        let values: Vec<ArgValue> = args[2..]
            .iter()
            .enumerate()
            .map(|(i, &v)| match types.get(i) {
                Some(t) if t.is_variable() || *t == AbiType::PublicKey => {
                    ArgValue::Bytes(string_param(self, v).unwrap_or_default().to_vec())
                }
                _ => ArgValue::Int(v),
            })
            .collect();
        let mut a = Action::new(receiver, name, &values, vec![self.action.receiver]);
        a.payer = self.action.payer;
        a
    }
}

impl HostEnv for ActionEnv<'_> {
    fn param(&self, index: u32) -> Option<&ArgValue> {
        self.params.get(index as usize)
    }

    fn host_call(&mut self, f: HostFn, args: &[i64], trace: &mut TraceLog) -> Result<Option<i64>, Trap> {
        let ints = || args.iter().map(|&v| ArgValue::Int(v)).collect::<Vec<_>>();
        let receiver = self.action.receiver;
        match f {
            HostFn::TaposBlockNum | HostFn::TaposBlockPrefix | HostFn::BlockTimeStamp => {
                let b = self.chain.block_info;
                let v = match f {
                    HostFn::TaposBlockNum => b.tapos_num as i64,
                    HostFn::TaposBlockPrefix => b.tapos_prefix as i64,
                    _ => b.timestamp as i64,
                };
                self.event(f, Vec::new(), Some(v.to_be_bytes().to_vec()), trace);
                Ok(Some(v))
            }
            HostFn::SendInline | HostFn::SendDeferred => {
                let a = self.outgoing(args);
                let mut logged = vec![ArgValue::Int(args[0]), ArgValue::Int(args[1])];
                logged.extend(decode_args(&a.data).unwrap_or_default());
                self.event(f, logged, None, trace);
                self.require_account(a.receiver)?;
                if f == HostFn::SendInline {
                    self.inlines.push(a);
                } else {
                    self.scheduled.push(Transaction::new(receiver, vec![a]));
                }
                Ok(None)
            }
            HostFn::RequireRecipient => {
                let who = name_arg(args[0]);
                self.event(f, ints(), None, trace);
                self.require_account(who)?;
                if !self.recipients.contains(&who) {
                    self.recipients.push(who);
                }
                Ok(None)
            }
            HostFn::DbStore | HostFn::DbUpdate | HostFn::DbDelete | HostFn::DbGet => {
                let (table, key) = (args[0] as u64, args[1] as u64);
                let existing = self
                    .chain
                    .accounts
                    .get(&receiver)
                    .and_then(|a| a.tables.get(&table))
                    .and_then(|t| t.get(&key))
                    .cloned();
                match f {
                    HostFn::DbGet => {
                        let v = existing
                            .and_then(|r| r.value.as_slice().try_into().ok().map(i64::from_be_bytes))
                            .unwrap_or(-1);
                        self.event(f, ints(), Some(v.to_be_bytes().to_vec()), trace);
                        Ok(Some(v))
                    }
                    HostFn::DbDelete => {
                        self.event(f, ints(), None, trace);
                        if existing.is_none() {
                            return Err(Trap::Host(format!("db_delete: no row {key} in table {table}")));
                        }
                        self.chain.set_row(receiver, table, key, None);
                        Ok(None)
                    }
                    _ => {
                        let value = args[2].to_be_bytes().to_vec();
                        self.event(f, ints(), Some(value.clone()), trace);
                        if f == HostFn::DbUpdate && existing.is_none() {
                            return Err(Trap::Host(format!("db_update: no row {key} in table {table}")));
                        }
                        self.chain.set_row(receiver, table, key, Some(Row { value, payer: self.action.payer }));
                        Ok(None)
                    }
                }
            }
            HostFn::RequireAuth | HostFn::HasAuth => {
                let who = name_arg(args[0]);
                let ok = self.action.auth.contains(&who);
                self.event(f, ints(), None, trace);
                if f == HostFn::HasAuth {
                    Ok(Some(ok as i64))
                } else if ok {
                    Ok(None)
                } else {
                    Err(Trap::MissingAuth(who))
                }
            }
            HostFn::Transfer => {
                let (from, to, amount) = (name_arg(args[0]), name_arg(args[1]), args[2]);
                let memo = string_param(self, args[3]).unwrap_or_default().to_vec();
                self.event(
                    f,
                    vec![ArgValue::Int(args[0]), ArgValue::Int(args[1]), ArgValue::Int(amount), ArgValue::Bytes(memo.clone())],
                    None,
                    trace,
                );
                if receiver != TOKEN_ACCOUNT {
                    return Err(Trap::Host("transfer is reserved to the token contract".into()));
                }
                if amount <= 0 {
                    return Err(Trap::Host("must transfer positive quantity".into()));
                }
                self.require_account(from)?;
                self.require_account(to)?;
                let from_bal = self.chain.balance(from);
                if from_bal < amount {
                    return Err(Trap::Host("overdrawn balance".into()));
                }
                if from != to {
                    self.chain.set_balance(from, from_bal - amount);
                    let to_bal = self.chain.balance(to);
                    self.chain.set_balance(to, to_bal + amount);
                }
                trace.push(TraceEvent::Transfer(TransferEvent { from, to, amount, memo }));
                Ok(None)
            }
            HostFn::GetBalance => {
                let v = self.chain.balance(name_arg(args[0]));
                self.event(f, ints(), Some(v.to_be_bytes().to_vec()), trace);
                Ok(Some(v))
            }
            HostFn::Assert => {
                self.event(f, ints(), None, trace);
                if args[0] == 0 {
                    Err(Trap::Assert("assert".into()))
                } else {
                    Ok(None)
                }
            }
        }
    }
}
