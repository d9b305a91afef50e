use crate::name::Name;

/// A value carried in action data: a 64-bit integer or an opaque byte string.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ArgValue {
    Int(i64),
    Bytes(Vec<u8>),
}

impl ArgValue {
    pub fn as_int(&self) -> Option<i64> {
        match self {
            ArgValue::Int(v) => Some(*v),
            ArgValue::Bytes(_) => None,
        }
    }

    pub fn as_bytes(&self) -> Option<&[u8]> {
        match self {
            ArgValue::Bytes(b) => Some(b),
            ArgValue::Int(_) => None,
        }
    }
}

/// Tagged encoding: `0x00` + i64 big-endian, or `0x01` + u32 length + bytes.
pub fn encode_args(args: &[ArgValue]) -> Vec<u8> {
    let mut out = Vec::new();
    for a in args {
        match a {
            ArgValue::Int(v) => {
                out.push(0);
                out.extend_from_slice(&v.to_be_bytes());
            }
            ArgValue::Bytes(b) => {
                out.push(1);
                out.extend_from_slice(&(b.len() as u32).to_be_bytes());
                out.extend_from_slice(b);
            }
        }
    }
    out
}

pub fn decode_args(mut data: &[u8]) -> Option<Vec<ArgValue>> {
    let mut out = Vec::new();
    while let Some((&tag, rest)) = data.split_first() {
        match tag {
            0 => {
                let v = i64::from_be_bytes(rest.get(..8)?.try_into().ok()?);
                out.push(ArgValue::Int(v));
                data = &rest[8..];
            }
            1 => {
                let len = u32::from_be_bytes(rest.get(..4)?.try_into().ok()?) as usize;
                let body = rest.get(4..4 + len)?;
                out.push(ArgValue::Bytes(body.to_vec()));
                data = &rest[4 + len..];
            }
            _ => return None,
        }
    }
    Some(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Action {
    /// Account the action was originally sent to.
    pub code: Name,
    /// Account currently handling the action.
    pub receiver: Name,
    pub name: Name,
    pub data: Vec<u8>,
    pub auth: Vec<Name>,
    /// Filled in from the enclosing transaction's signer.
    pub payer: Name,
}

impl Action {
    pub fn new(receiver: Name, name: Name, args: &[ArgValue], auth: Vec<Name>) -> Self {
        Action { code: receiver, receiver, name, data: encode_args(args), auth, payer: Name::default() }
    }

    pub fn args(&self) -> Vec<ArgValue> {
        decode_args(&self.data).unwrap_or_default()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transaction {
    pub actions: Vec<Action>,
    pub signer: Name,
    /// Assigned by the chain when the transaction is pushed or scheduled.
    pub id: u64,
    /// For deferred transactions, the id of the transaction that scheduled it.
    pub origin: Option<u64>,
}

impl Transaction {
    pub fn new(signer: Name, actions: Vec<Action>) -> Self {
        Transaction { actions, signer, id: 0, origin: None }
    }
}
