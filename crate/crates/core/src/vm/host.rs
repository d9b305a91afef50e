//! Host function registry.

use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum HostCategory {
    Query,
    Interaction,
    Data,
    Permission,
    Token,
    Misc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum HostFn {
    TaposBlockNum,
    TaposBlockPrefix,
    BlockTimeStamp,
    SendInline,
    SendDeferred,
    RequireRecipient,
    DbStore,
    DbUpdate,
    DbDelete,
    DbGet,
    RequireAuth,
    HasAuth,
    Transfer,
    GetBalance,
    Assert,
}

/// How many stack values a host function consumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arity {
    Fixed(usize),
    /// `fixed` leading values, then the count of trailing values on top.
    Counted { fixed: usize },
}

impl HostFn {
    pub const ALL: [HostFn; 15] = [
        HostFn::TaposBlockNum,
        HostFn::TaposBlockPrefix,
        HostFn::BlockTimeStamp,
        HostFn::SendInline,
        HostFn::SendDeferred,
        HostFn::RequireRecipient,
        HostFn::DbStore,
        HostFn::DbUpdate,
        HostFn::DbDelete,
        HostFn::DbGet,
        HostFn::RequireAuth,
        HostFn::HasAuth,
        HostFn::Transfer,
        HostFn::GetBalance,
        HostFn::Assert,
    ];

    pub fn name(self) -> &'static str {
        match self {
            HostFn::TaposBlockNum => "tapos_block_num",
            HostFn::TaposBlockPrefix => "tapos_block_prefix",
            HostFn::BlockTimeStamp => "block_time_stamp",
            HostFn::SendInline => "send_inline",
            HostFn::SendDeferred => "send_deferred",
            HostFn::RequireRecipient => "require_recipient",
            HostFn::DbStore => "db_store",
            HostFn::DbUpdate => "db_update",
            HostFn::DbDelete => "db_delete",
            HostFn::DbGet => "db_get",
            HostFn::RequireAuth => "require_auth",
            HostFn::HasAuth => "has_auth",
            HostFn::Transfer => "transfer",
            HostFn::GetBalance => "get_balance",
            HostFn::Assert => "assert",
        }
    }

    pub fn category(self) -> HostCategory {
        use HostFn::*;
        match self {
            TaposBlockNum | TaposBlockPrefix | BlockTimeStamp => HostCategory::Query,
            SendInline | SendDeferred | RequireRecipient => HostCategory::Interaction,
            DbStore | DbUpdate | DbDelete | DbGet => HostCategory::Data,
            RequireAuth | HasAuth => HostCategory::Permission,
            Transfer | GetBalance => HostCategory::Token,
            Assert => HostCategory::Misc,
        }
    }

    pub fn arity(self) -> Arity {
        use HostFn::*;
        match self {
            TaposBlockNum | TaposBlockPrefix | BlockTimeStamp => Arity::Fixed(0),
            SendInline | SendDeferred => Arity::Counted { fixed: 2 },
            RequireRecipient | RequireAuth | HasAuth | GetBalance | Assert => Arity::Fixed(1),
            DbGet | DbDelete => Arity::Fixed(2),
            DbStore | DbUpdate => Arity::Fixed(3),
            Transfer => Arity::Fixed(4),
        }
    }

    /// Whether the call pushes a result.
    pub fn returns(self) -> bool {
        use HostFn::*;
        matches!(self, TaposBlockNum | TaposBlockPrefix | BlockTimeStamp | DbGet | HasAuth | GetBalance)
    }

    /// Calls that change state or move value on the contract's behalf.
    pub fn is_sensitive(self) -> bool {
        use HostFn::*;
        matches!(self, SendInline | SendDeferred | DbStore | DbUpdate | DbDelete | Transfer)
    }
}

impl fmt::Display for HostFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownHostFn(pub String);

impl fmt::Display for UnknownHostFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown host function {:?}", self.0)
    }
}

impl std::error::Error for UnknownHostFn {}

impl FromStr for HostFn {
    type Err = UnknownHostFn;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        HostFn::ALL
            .iter()
            .copied()
            .find(|h| h.name() == s)
            .ok_or_else(|| UnknownHostFn(s.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for h in HostFn::ALL {
            assert_eq!(h.name().parse::<HostFn>().unwrap(), h);
        }
        assert!("teleport".parse::<HostFn>().is_err());
    }
}
