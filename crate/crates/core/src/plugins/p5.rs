//! Rollback: a losing bet can be undone because the payout is revealed
//! inside the betting transaction.

use super::{
    asset_and_memo, asset_memo_target, context_of, EventRef, IterationView, Plugin, PluginError, Target, Victim,
    ROLLBACK_ACCOUNT, STARTING_FUNDS,
};
use crate::abi::ParamValue;
use crate::chain::{Action, ArgValue, ChainState, Transaction};
use crate::name::Name;
use crate::vm::{HostFn, TraceEvent, Vm};

#[derive(Default)]
pub struct Rollback {
    victim: Option<Name>,
}

impl Plugin for Rollback {
    fn id(&self) -> &'static str {
        "p5"
    }

    fn before_fuzz(&mut self, chain: &mut ChainState, _: &mut Vm, victim: &Victim) -> Result<(), PluginError> {
        chain.create(ROLLBACK_ACCOUNT)?;
        chain.deploy(ROLLBACK_ACCOUNT, super::rbatk())?;
        chain.issue(ROLLBACK_ACCOUNT, STARTING_FUNDS)?;
        self.victim = Some(victim.account);
        Ok(())
    }

    fn targets(&self) -> Vec<Target> {
        vec![asset_memo_target("makebet")]
    }

    fn fuzz(&self, _: &ChainState, _: usize, params: &[ParamValue]) -> Vec<Transaction> {
        let victim = self.victim.expect("before_fuzz ran");
        let (q, memo) = asset_and_memo(params);
        let args = [ArgValue::Int(victim.value() as i64), ArgValue::Int(q), ArgValue::Bytes(memo)];
        vec![Transaction::new(
            ROLLBACK_ACCOUNT,
            vec![Action::new(ROLLBACK_ACCOUNT, Name::lit("makebet"), &args, vec![ROLLBACK_ACCOUNT])],
        )]
    }

    fn after_fuzz(&self, view: &IterationView<'_>) -> Option<Vec<EventRef>> {
        let victim = self.victim?;
        if view.chain.balance(ROLLBACK_ACCOUNT) <= view.baseline.balance(ROLLBACK_ACCOUNT) {
            return None;
        }
        view.results.iter().enumerate().filter(|(_, r)| r.is_success()).find_map(|(ri, r)| {
            let ctx = context_of(&r.trace);
            r.trace.events.iter().enumerate().find_map(|(i, e)| match e {
                TraceEvent::Host(h) if h.host_fn == HostFn::SendInline && ctx[i].is_some_and(|c| c.receiver == victim) => {
                    Some(vec![EventRef { result: ri, event: i }])
                }
                _ => None,
            })
        })
    }
}
