//! Detector plugins: scenario setup, transaction construction from decoded
//! inputs, and trace oracles.

mod agents;
mod p1;
mod p2;
mod p3;
mod p4;
mod p5;
mod p6;
mod spans;

pub use agents::{fakeagent, fakenotifier, rbatk, AGENT_ACCOUNT, NOTIFIER_ACCOUNT, ROLLBACK_ACCOUNT, SENDER_ACCOUNT};
pub use p1::FakeEosTransfer;
pub use p2::FakeNotification;
pub use p3::BlockInfoDependency;
pub use p4::MissingPermission;
pub use p5::Rollback;
pub use p6::ReceiptHijack;
pub use spans::{context_of, Context};

use std::sync::Arc;

use thiserror::Error;

use crate::abi::{AbiType, ParamValue};
use crate::chain::{ChainError, ChainState, ExecutionResult, Transaction};
use crate::mcb::ContractModule;
use crate::name::Name;
use crate::vm::Vm;

pub const PLUGIN_IDS: [&str; 6] = ["p1", "p2", "p3", "p4", "p5", "p6"];

/// Accounts owned by the fuzzer for scenarios that need a caller or payee.
pub const PLAYER_POOL: [Name; 3] = [
    Name::from_raw(0xAC4D_E55C_0000_0000), // player
    Name::from_raw(0xAC4D_E55C_2000_0000), // player1
    Name::from_raw(0xAC4D_E55C_4000_0000), // player2
];
/// Tokens issued to every pool account and agent.
pub const STARTING_FUNDS: i64 = 10_000_000; // 1000.0000 tokens

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PluginError {
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error("{0}")]
    Setup(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Target {
    pub label: String,
    pub params: Vec<AbiType>,
}

/// The contract under test as deployed for a campaign.
#[derive(Debug, Clone)]
pub struct Victim {
    pub account: Name,
    pub module: Arc<ContractModule>,
}

/// Index of one event within one execution result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EventRef {
    pub result: usize,
    pub event: usize,
}

/// Chain state before and after an iteration plus everything it executed.
pub struct IterationView<'a> {
    pub baseline: &'a ChainState,
    pub chain: &'a ChainState,
    pub results: &'a [ExecutionResult],
}

pub trait Plugin: Send {
    fn id(&self) -> &'static str;

    /// Sets up agents and accounts. Runs once per campaign on a fresh chain
    /// where the victim is already deployed.
    fn before_fuzz(&mut self, chain: &mut ChainState, vm: &mut Vm, victim: &Victim) -> Result<(), PluginError>;

    fn targets(&self) -> Vec<Target>;

    /// Scenario transactions for one decoded input. Must be deterministic.
    fn fuzz(&self, chain: &ChainState, target: usize, params: &[ParamValue]) -> Vec<Transaction>;

    /// `Some(evidence)` when the iteration triggered the vulnerability.
    fn after_fuzz(&self, view: &IterationView<'_>) -> Option<Vec<EventRef>>;
}

pub fn plugin_by_id(id: &str) -> Option<Box<dyn Plugin>> {
    Some(match id {
        "p1" => Box::new(FakeEosTransfer::default()),
        "p2" => Box::new(FakeNotification::default()),
        "p3" => Box::new(BlockInfoDependency::default()),
        "p4" => Box::new(MissingPermission::default()),
        "p5" => Box::new(Rollback::default()),
        "p6" => Box::new(ReceiptHijack::default()),
        _ => return None,
    })
}

/// Creates the player pool and funds it.
pub(crate) fn setup_pool(chain: &mut ChainState) -> Result<(), PluginError> {
    for p in PLAYER_POOL {
        chain.create(p)?;
        chain.issue(p, STARTING_FUNDS)?;
    }
    Ok(())
}

/// Maps any fuzzed name onto a pool account.
pub(crate) fn pool_account(raw: i64) -> Name {
    PLAYER_POOL[(raw as u64 % PLAYER_POOL.len() as u64) as usize]
}

pub(crate) fn is_pool_account(n: Name) -> bool {
    PLAYER_POOL.contains(&n)
}

/// Token amount in 1..=10.0000, derived from a fuzzed asset value.
pub(crate) fn clamp_quantity(raw: i64) -> i64 {
    (raw as u64 % 10_0000) as i64 + 1
}

/// Victim actions the fuzzer can call directly, with pool accounts for
/// name parameters and clamped quantities for assets.
pub(crate) fn direct_call(victim: &Victim, action: Name, params: &[ParamValue], signer: Name) -> Transaction {
    use crate::chain::{Action, ArgValue};
    let args: Vec<ArgValue> = params
        .iter()
        .map(|p| match p {
            ParamValue::Name(n) => ArgValue::Int(pool_account(n.value() as i64).value() as i64),
            ParamValue::Asset(a) => ArgValue::Int(clamp_quantity(*a)),
            other => other.to_arg(),
        })
        .collect();
    Transaction::new(signer, vec![Action::new(victim.account, action, &args, vec![signer])])
}

/// Pool account used to sign a direct call: the first name argument's
/// mapping, or the first pool account.
pub(crate) fn caller_for(params: &[ParamValue]) -> Name {
    params
        .iter()
        .find_map(|p| match p {
            ParamValue::Name(n) => Some(pool_account(n.value() as i64)),
            _ => None,
        })
        .unwrap_or(PLAYER_POOL[0])
}


/// What a generic fuzz target exercises.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Entry {
    /// Call a victim action directly.
    Action(Name),
    /// A token transfer from a pool account to the victim.
    Deposit,
}

/// Every ABI action of the victim. A declared `transfer` action is a token
/// handler, so it is exercised by sending tokens instead of a direct call.
pub(crate) fn victim_entries(victim: &Victim) -> Vec<(Entry, Target)> {
    let transfer = Name::lit("transfer");
    victim
        .module
        .abi
        .entries
        .iter()
        .map(|e| {
            if e.name == transfer {
                (Entry::Deposit, asset_memo_target("deposit"))
            } else {
                (Entry::Action(e.name), Target { label: e.name.to_string(), params: e.params.clone() })
            }
        })
        .collect()
}

/// Transactions for a generic target.
pub(crate) fn entry_txs(victim: &Victim, entry: Entry, params: &[ParamValue]) -> Vec<Transaction> {
    match entry {
        Entry::Action(a) => vec![direct_call(victim, a, params, caller_for(params))],
        Entry::Deposit => {
            let (q, memo) = asset_and_memo(params);
            vec![ChainState::transfer_tx(PLAYER_POOL[0], victim.account, q, &memo)]
        }
    }
}

/// Clamped quantity and memo from an `(asset, string)` input.
pub(crate) fn asset_and_memo(params: &[ParamValue]) -> (i64, Vec<u8>) {
    let q = params.iter().find_map(|p| match p {
        ParamValue::Asset(a) => Some(clamp_quantity(*a)),
        _ => None,
    });
    let memo = params.iter().find_map(|p| match p {
        ParamValue::String(s) => Some(s.clone()),
        _ => None,
    });
    (q.unwrap_or(1), memo.unwrap_or_default())
}

pub(crate) fn asset_memo_target(label: &str) -> Target {
    Target { label: label.into(), params: vec![AbiType::Asset, AbiType::String] }
}
