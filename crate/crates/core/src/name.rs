//! EOSIO-style account names packed into 64 bits.
//!
//! Twelve 5-bit symbols are stored from the most significant bit down, with
//! a 4-bit thirteenth symbol in the low nibble. Every `u64` is a valid
//! packing, so decoded fuzz bytes always map onto some name.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

const CHARMAP: &[u8; 32] = b".12345abcdefghijklmnopqrstuvwxyz";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NameError {
    #[error("account name must be 1-12 characters, got {0}")]
    Length(usize),
    #[error("invalid character {0:?} in account name")]
    Char(char),
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Name(u64);

fn symbol(c: u8) -> Option<u64> {
    match c {
        b'.' => Some(0),
        b'1'..=b'5' => Some((c - b'1') as u64 + 1),
        b'a'..=b'z' => Some((c - b'a') as u64 + 6),
        _ => None,
    }
}

impl Name {
    pub const fn from_raw(value: u64) -> Self {
        Name(value)
    }

    pub const fn value(self) -> u64 {
        self.0
    }

    /// Parses a 1-12 character account name.
    pub fn parse(s: &str) -> Result<Self, NameError> {
        let bytes = s.as_bytes();
        if bytes.is_empty() || bytes.len() > 12 {
            return Err(NameError::Length(s.chars().count()));
        }
        let mut value = 0u64;
        for (i, &c) in bytes.iter().enumerate() {
            let sym = symbol(c).ok_or(NameError::Char(c as char))?;
            value |= sym << (64 - 5 * (i as u32 + 1));
        }
        Ok(Name(value))
    }

    /// Name literal for compile-time constants. Panics on malformed input.
    pub fn lit(s: &str) -> Self {
        Self::parse(s).unwrap_or_else(|e| panic!("bad name literal {s:?}: {e}"))
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = [b'.'; 13];
        let mut v = self.0;
        for i in 0..13 {
            let (mask, shift) = if i == 0 { (0x0f, 4) } else { (0x1f, 5) };
            out[12 - i] = CHARMAP[(v & mask) as usize];
            v >>= shift;
        }
        let end = out.iter().rposition(|&c| c != b'.').map_or(0, |p| p + 1);
        f.write_str(std::str::from_utf8(&out[..end]).expect("ascii"))
    }
}

impl fmt::Debug for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Name({self})")
    }
}

impl FromStr for Name {
    type Err = NameError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Name::parse(s)
    }
}
