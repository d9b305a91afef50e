//! Block information dependency: block state feeds a payout decision.

use super::{entry_txs, is_pool_account, setup_pool, victim_entries, Entry, EventRef, IterationView, Plugin, PluginError, Target, Victim};
use crate::abi::ParamValue;
use crate::chain::{ChainState, ExecutionResult, Transaction};
use crate::vm::{HostCategory, TraceEvent, Vm};

#[derive(Default)]
pub struct BlockInfoDependency {
    victim: Option<Victim>,
    entries: Vec<(Entry, Target)>,
}

/// (query event, transfer event) when block state was read before the
/// victim paid a fuzzer-owned account.
pub fn block_dependent_payout(r: &ExecutionResult, victim: crate::name::Name) -> Option<(usize, usize)> {
    let mut query = None;
    for (i, e) in r.trace.events.iter().enumerate() {
        match e {
            TraceEvent::Host(h) if query.is_none() && h.host_fn.category() == HostCategory::Query => query = Some(i),
            TraceEvent::Transfer(t) if t.from == victim && is_pool_account(t.to) => {
                if let Some(q) = query {
                    return Some((q, i));
                }
            }
            _ => {}
        }
    }
    None
}

impl Plugin for BlockInfoDependency {
    fn id(&self) -> &'static str {
        "p3"
    }

    fn before_fuzz(&mut self, chain: &mut ChainState, _: &mut Vm, victim: &Victim) -> Result<(), PluginError> {
        setup_pool(chain)?;
        self.entries = victim_entries(victim);
        self.victim = Some(victim.clone());
        Ok(())
    }

    fn targets(&self) -> Vec<Target> {
        self.entries.iter().map(|(_, t)| t.clone()).collect()
    }

    fn fuzz(&self, _: &ChainState, target: usize, params: &[ParamValue]) -> Vec<Transaction> {
        entry_txs(self.victim.as_ref().expect("before_fuzz ran"), self.entries[target].0, params)
    }

    fn after_fuzz(&self, view: &IterationView<'_>) -> Option<Vec<EventRef>> {
        let victim = self.victim.as_ref()?.account;
        view.results.iter().enumerate().find_map(|(ri, r)| {
            block_dependent_payout(r, victim)
                .map(|(q, t)| vec![EventRef { result: ri, event: q }, EventRef { result: ri, event: t }])
        })
    }
}
