//! Fake transfer notification: the victim credits a receipt forwarded by
//! a third party without checking that it was the recipient.

use super::{
    asset_and_memo, asset_memo_target, context_of, EventRef, IterationView, Plugin, PluginError, Target, Victim,
    NOTIFIER_ACCOUNT, SENDER_ACCOUNT, STARTING_FUNDS,
};
use crate::abi::ParamValue;
use crate::chain::{ChainState, ExecutionResult, Transaction, TOKEN_ACCOUNT};
use crate::mcb::Op;
use crate::name::Name;
use crate::vm::Vm;

#[derive(Default)]
pub struct FakeNotification {
    victim: Option<Name>,
}

fn check(r: &ExecutionResult, victim: Name) -> Option<Vec<usize>> {
    let ctx = context_of(&r.trace);
    let mut chain = Vec::new();
    let hops = [TOKEN_ACCOUNT, NOTIFIER_ACCOUNT, victim];
    for (i, e) in r.trace.events.iter().enumerate() {
        let Some(ins) = e.as_instr() else { continue };
        let Some(c) = ctx[i] else { continue };
        if ins.op == Op::CallIndirect && chain.len() < hops.len() && c.receiver == hops[chain.len()] {
            chain.push(i);
        }
    }
    if chain.len() < hops.len() {
        return None;
    }
    // the victim never compared its own name with the receipt's recipient
    let pair = [victim.value() as i64, NOTIFIER_ACCOUNT.value() as i64];
    let compared = r.trace.events.iter().enumerate().any(|(i, e)| {
        e.as_instr().is_some_and(|ins| {
            matches!(ins.op, Op::Eq | Op::Ne)
                && ctx[i].is_some_and(|c| c.receiver == victim)
                && ins.operands.len() == 2
                && (ins.operands[..] == pair || ins.operands[..] == [pair[1], pair[0]])
        })
    });
    (!compared).then_some(chain)
}

impl Plugin for FakeNotification {
    fn id(&self) -> &'static str {
        "p2"
    }

    fn before_fuzz(&mut self, chain: &mut ChainState, _: &mut Vm, victim: &Victim) -> Result<(), PluginError> {
        chain.create(SENDER_ACCOUNT)?;
        chain.issue(SENDER_ACCOUNT, STARTING_FUNDS)?;
        chain.create(NOTIFIER_ACCOUNT)?;
        chain.deploy(NOTIFIER_ACCOUNT, super::fakenotifier(victim.account))?;
        self.victim = Some(victim.account);
        Ok(())
    }

    fn targets(&self) -> Vec<Target> {
        vec![asset_memo_target("notify")]
    }

    fn fuzz(&self, _: &ChainState, _: usize, params: &[ParamValue]) -> Vec<Transaction> {
        let (q, memo) = asset_and_memo(params);
        vec![ChainState::transfer_tx(SENDER_ACCOUNT, NOTIFIER_ACCOUNT, q, &memo)]
    }

    fn after_fuzz(&self, view: &IterationView<'_>) -> Option<Vec<EventRef>> {
        let victim = self.victim?;
        view.results.iter().enumerate().find_map(|(ri, r)| {
            check(r, victim).map(|evs| evs.into_iter().map(|event| EventRef { result: ri, event }).collect())
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vm::{InstrEvent, TraceEvent, TraceLog};

    #[test]
    fn empty_trace_is_clean() {
        let r = ExecutionResult {
            tx_id: 1,
            signer: SENDER_ACCOUNT,
            status: crate::chain::TxStatus::Success,
            trace: TraceLog::default(),
            origin: None,
        };
        assert_eq!(check(&r, Name::lit("victim")), None);
    }

    #[test]
    fn comparison_either_order_counts() {
        let victim = Name::lit("victim");
        let mut trace = TraceLog::default();
        for who in [TOKEN_ACCOUNT, NOTIFIER_ACCOUNT, victim] {
            trace.push(TraceEvent::ApplyEnter { receiver: who, code: TOKEN_ACCOUNT, action: Name::lit("transfer") });
            trace.push(TraceEvent::Instr(InstrEvent { op: Op::CallIndirect, operands: vec![0], result: None, src_pc: 0, dst_pc: Some(1) }));
            if who == victim {
                trace.push(TraceEvent::Instr(InstrEvent {
                    op: Op::Ne,
                    operands: vec![NOTIFIER_ACCOUNT.value() as i64, victim.value() as i64],
                    result: Some(1),
                    src_pc: 0,
                    dst_pc: None,
                }));
            }
            trace.push(TraceEvent::ApplyExit { receiver: who });
        }
        let mut r = ExecutionResult { tx_id: 1, signer: SENDER_ACCOUNT, status: crate::chain::TxStatus::Success, trace, origin: None };
        assert_eq!(check(&r, victim), None);
        r.trace.events.retain(|e| !matches!(e, TraceEvent::Instr(i) if i.op == Op::Ne));
        assert_eq!(check(&r, victim), Some(vec![1, 4, 7]));
    }
}
