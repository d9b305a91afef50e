//! Coverage-guided grey-box fuzzing for EOSIO-style contracts.
//!
//! A small stack bytecode ([`mcb`]) runs inside an instrumented interpreter
//! ([`vm`]) on top of a deterministic chain simulator ([`chain`]). The fuzz
//! engine ([`engine`]) mutates byte strings, decodes them into action
//! parameters through the ABI codec ([`abi`]) and hands them to detector
//! plugins ([`plugins`]) that judge execution traces.

pub mod abi;
pub mod chain;
pub mod corpus;
pub mod engine;
pub mod mcb;
pub mod name;
pub mod plugins;
pub mod vm;

pub use name::{Name, NameError};
