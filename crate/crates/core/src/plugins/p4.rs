//! Missing permission check before a sensitive operation.

use super::{
    context_of, direct_call, caller_for, setup_pool, EventRef, IterationView, Plugin, PluginError, Target, Victim,
};
use crate::abi::{AbiType, ParamValue};
use crate::chain::{ChainState, ExecutionResult, Transaction};
use crate::name::Name;
use crate::vm::{HostCategory, TraceEvent, Vm};

#[derive(Default)]
pub struct MissingPermission {
    victim: Option<Victim>,
    actions: Vec<(Name, Target)>,
}

/// First sensitive host call in a victim action span with no permission
/// check earlier in the same span.
pub fn unguarded_sensitive_call(r: &ExecutionResult, victim: Name) -> Option<usize> {
    let ctx = context_of(&r.trace);
    let mut guarded_span = None;
    for (i, e) in r.trace.events.iter().enumerate() {
        let Some(c) = ctx[i].filter(|c| c.receiver == victim) else { continue };
        let TraceEvent::Host(h) = e else { continue };
        if h.host_fn.category() == HostCategory::Permission {
            guarded_span = Some(c.span);
        } else if h.host_fn.is_sensitive() && guarded_span != Some(c.span) {
            return Some(i);
        }
    }
    None
}

impl Plugin for MissingPermission {
    fn id(&self) -> &'static str {
        "p4"
    }

    fn before_fuzz(&mut self, chain: &mut ChainState, _: &mut Vm, victim: &Victim) -> Result<(), PluginError> {
        setup_pool(chain)?;
        self.actions = victim
            .module
            .abi
            .entries
            .iter()
            .filter(|e| e.params.iter().any(|t| matches!(t, AbiType::Name | AbiType::PublicKey)))
            .map(|e| (e.name, Target { label: e.name.to_string(), params: e.params.clone() }))
            .collect();
        self.victim = Some(victim.clone());
        Ok(())
    }

    fn targets(&self) -> Vec<Target> {
        self.actions.iter().map(|(_, t)| t.clone()).collect()
    }

    fn fuzz(&self, _: &ChainState, target: usize, params: &[ParamValue]) -> Vec<Transaction> {
        let victim = self.victim.as_ref().expect("before_fuzz ran");
        vec![direct_call(victim, self.actions[target].0, params, caller_for(params))]
    }

    fn after_fuzz(&self, view: &IterationView<'_>) -> Option<Vec<EventRef>> {
        let victim = self.victim.as_ref()?.account;
        view.results
            .iter()
            .enumerate()
            .find_map(|(ri, r)| unguarded_sensitive_call(r, victim).map(|event| vec![EventRef { result: ri, event }]))
    }
}
