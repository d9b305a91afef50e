use std::sync::{Arc, OnceLock};

use crate::mcb::{assemble, ContractModule};

/// The system token contract. `transfer` checks the sender's authority,
/// moves the balance and notifies both parties.
pub const TOKEN_SOURCE: &str = r#"
contract eosio.token
fn apply(3)
  load 0
  load 1
  ne
  br_if done
  load 2
  const @transfer
  eq
  br_if dispatch
  return
dispatch:
  const 0
  call_indirect
done:
  return
fn transfer(0)
  param 0
  host require_auth
  param 0
  param 1
  param 2
  param 3
  host transfer
  param 0
  host require_recipient
  param 1
  host require_recipient
  return
table transfer
abi transfer (name,name,asset,string)
apply apply
"#;

pub fn token_module() -> Arc<ContractModule> {
    static MODULE: OnceLock<Arc<ContractModule>> = OnceLock::new();
    MODULE
        .get_or_init(|| Arc::new(assemble(TOKEN_SOURCE).expect("token contract assembles")))
        .clone()
}
