use crate::name::Name;
use crate::vm::{TraceEvent, TraceLog};

/// The action delivery an event belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Context {
    pub receiver: Name,
    pub code: Name,
    pub action: Name,
    /// Index of the delivery's apply-entry marker.
    pub span: usize,
}

/// Delivery context for every event of `trace`; `None` outside any apply.
pub fn context_of(trace: &TraceLog) -> Vec<Option<Context>> {
    let mut stack: Vec<Context> = Vec::new();
    trace
        .events
        .iter()
        .enumerate()
        .map(|(i, e)| match e {
            TraceEvent::ApplyEnter { receiver, code, action } => {
                stack.push(Context { receiver: *receiver, code: *code, action: *action, span: i });
                stack.last().copied()
            }
            TraceEvent::ApplyExit { .. } => stack.pop(),
            _ => stack.last().copied(),
        })
        .collect()
}
