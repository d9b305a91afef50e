//! Fake EOS transfer: the victim's token handler is reachable by calling
//! its `transfer` action directly.

use super::{
    asset_and_memo, asset_memo_target, context_of, EventRef, IterationView, Plugin, PluginError, Target, Victim,
    AGENT_ACCOUNT, SENDER_ACCOUNT, STARTING_FUNDS,
};
use crate::abi::ParamValue;
use crate::chain::{Action, ArgValue, ChainState, ExecutionResult, Transaction};
use crate::mcb::Op;
use crate::name::Name;
use crate::vm::{TraceEvent, Vm};

#[derive(Default)]
pub struct FakeEosTransfer {
    victim: Option<Name>,
    /// Entry address of the handler a genuine transfer reaches.
    handler: Option<u64>,
}

/// Destinations of indirect calls made while `who` handled an action.
fn indirect_calls(result: &ExecutionResult, who: Name) -> Vec<(usize, u64)> {
    let ctx = context_of(&result.trace);
    result
        .trace
        .events
        .iter()
        .enumerate()
        .filter_map(|(i, e)| match e {
            TraceEvent::Instr(ins) if ins.op == Op::CallIndirect && ctx[i].is_some_and(|c| c.receiver == who) => {
                ins.dst_pc.map(|d| (i, d))
            }
            _ => None,
        })
        .collect()
}

impl Plugin for FakeEosTransfer {
    fn id(&self) -> &'static str {
        "p1"
    }

    fn before_fuzz(&mut self, chain: &mut ChainState, vm: &mut Vm, victim: &Victim) -> Result<(), PluginError> {
        chain.create(AGENT_ACCOUNT)?;
        chain.deploy(AGENT_ACCOUNT, super::fakeagent())?;
        chain.issue(AGENT_ACCOUNT, STARTING_FUNDS)?;
        chain.create(SENDER_ACCOUNT)?;
        chain.issue(SENDER_ACCOUNT, STARTING_FUNDS)?;
        self.victim = Some(victim.account);
        // precheck: a genuine transfer shows whether and where the victim
        // handles incoming tokens
        let r = chain.push_transaction(ChainState::transfer_tx(SENDER_ACCOUNT, victim.account, 1_0000, b"precheck"), vm);
        self.handler = if r.is_success() {
            indirect_calls(&r, victim.account).first().map(|&(_, d)| d)
        } else {
            None
        };
        Ok(())
    }

    fn targets(&self) -> Vec<Target> {
        vec![asset_memo_target("attack")]
    }

    fn fuzz(&self, _: &ChainState, _: usize, params: &[ParamValue]) -> Vec<Transaction> {
        let victim = self.victim.expect("before_fuzz ran");
        let (q, memo) = asset_and_memo(params);
        let args = [ArgValue::Int(victim.value() as i64), ArgValue::Int(q), ArgValue::Bytes(memo)];
        vec![Transaction::new(
            AGENT_ACCOUNT,
            vec![Action::new(AGENT_ACCOUNT, Name::lit("attack"), &args, vec![AGENT_ACCOUNT])],
        )]
    }

    fn after_fuzz(&self, view: &IterationView<'_>) -> Option<Vec<EventRef>> {
        let (victim, handler) = (self.victim?, self.handler?);
        view.results.iter().enumerate().find_map(|(ri, r)| {
            indirect_calls(r, victim)
                .into_iter()
                .find(|&(_, d)| d == handler)
                .map(|(ei, _)| vec![EventRef { result: ri, event: ei }])
        })
    }
}
