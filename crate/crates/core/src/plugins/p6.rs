//! Receipt hijacking: the victim signs a deferred transaction that hands
//! a notification to an outside account at the victim's expense.

use super::{context_of, entry_txs, setup_pool, victim_entries, Entry, EventRef, IterationView, Plugin, PluginError, Target, Victim};
use crate::abi::ParamValue;
use crate::chain::{ChainState, Transaction};
use crate::name::Name;
use crate::vm::{HostFn, TraceEvent, Vm};

#[derive(Default)]
pub struct ReceiptHijack {
    victim: Option<Victim>,
    entries: Vec<(Entry, Target)>,
}

fn victim_host_calls(trace: &crate::vm::TraceLog, victim: Name, f: HostFn) -> Vec<(usize, i64)> {
    let ctx = context_of(trace);
    trace
        .events
        .iter()
        .enumerate()
        .filter_map(|(i, e)| match e {
            TraceEvent::Host(h) if h.host_fn == f && ctx[i].is_some_and(|c| c.receiver == victim) => {
                Some((i, h.args.first().and_then(|a| a.as_int()).unwrap_or(0)))
            }
            _ => None,
        })
        .collect()
}

impl Plugin for ReceiptHijack {
    fn id(&self) -> &'static str {
        "p6"
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
        for (ri, r) in view.results.iter().enumerate() {
            let Some(&(send, _)) = victim_host_calls(&r.trace, victim, HostFn::SendDeferred).first() else { continue };
            for (di, d) in view.results.iter().enumerate() {
                if d.origin != Some(r.tx_id) || d.signer != victim {
                    continue;
                }
                let forwarded = victim_host_calls(&d.trace, victim, HostFn::RequireRecipient)
                    .into_iter()
                    .find(|&(_, who)| who != victim.value() as i64);
                if let Some((fi, _)) = forwarded {
                    return Some(vec![EventRef { result: ri, event: send }, EventRef { result: di, event: fi }]);
                }
            }
        }
        None
    }
}
