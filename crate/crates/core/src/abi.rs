//! Conversion between raw fuzz bytes and structured action parameters.
//!
//! Fixed-width parameters are consumed first, narrowest first, and whatever
//! remains is shared equally between the variable-length parameters (the
//! first `remainder` of them get one extra byte). The decoded values are then
//! put back into declaration order.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::chain::ArgValue;
use crate::name::{Name, NameError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AbiError {
    #[error("input too short: need at least {need} bytes, got {have}")]
    InsufficientBytes { need: usize, have: usize },
    #[error("{extra} trailing bytes: no variable-length parameter to absorb them")]
    TrailingBytes { extra: usize },
    #[error("expected {expected} parameters, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("parameter {index} does not match declared type {expected}")]
    TypeMismatch { index: usize, expected: AbiType },
    #[error("unknown ABI type {0:?}")]
    UnknownType(String),
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error(transparent)]
    Name(#[from] NameError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AbiType {
    U8,
    U16,
    U32,
    U64,
    I64,
    Name,
    Asset,
    PublicKey,
    String,
    Bytes,
}

impl AbiType {
    /// Width in bits, `None` for variable-length types.
    pub fn bit_len(self) -> Option<usize> {
        match self {
            AbiType::U8 => Some(8),
            AbiType::U16 => Some(16),
            AbiType::U32 => Some(32),
            AbiType::U64 | AbiType::I64 | AbiType::Name | AbiType::Asset => Some(64),
            AbiType::PublicKey => Some(264),
            AbiType::String | AbiType::Bytes => None,
        }
    }

    pub fn is_variable(self) -> bool {
        self.bit_len().is_none()
    }

    pub fn byte_len(self) -> Option<usize> {
        self.bit_len().map(|b| b.div_ceil(8))
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AbiType::U8 => "u8",
            AbiType::U16 => "u16",
            AbiType::U32 => "u32",
            AbiType::U64 => "u64",
            AbiType::I64 => "i64",
            AbiType::Name => "name",
            AbiType::Asset => "asset",
            AbiType::PublicKey => "public_key",
            AbiType::String => "string",
            AbiType::Bytes => "bytes",
        }
    }
}

impl fmt::Display for AbiType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AbiType {
    type Err = AbiError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.trim() {
            "u8" | "uint8" => AbiType::U8,
            "u16" | "uint16" => AbiType::U16,
            "u32" | "uint32" => AbiType::U32,
            "u64" | "uint64" => AbiType::U64,
            "i64" | "int64" => AbiType::I64,
            "name" | "account" => AbiType::Name,
            "asset" => AbiType::Asset,
            "public_key" => AbiType::PublicKey,
            "string" => AbiType::String,
            "bytes" => AbiType::Bytes,
            other => return Err(AbiError::UnknownType(other.to_string())),
        })
    }
}

/// One callable action: its name and declared parameter list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AbiEntry {
    pub name: Name,
    pub params: Vec<AbiType>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AbiDescriptor {
    pub entries: Vec<AbiEntry>,
}

impl AbiDescriptor {
    pub fn get(&self, action: Name) -> Option<&AbiEntry> {
        self.entries.iter().find(|e| e.name == action)
    }

    /// Parses a standalone descriptor: one `<action> (<type>,...)` per line,
    /// optionally prefixed with `abi`. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, AbiError> {
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let line = line.strip_prefix("abi ").unwrap_or(line).trim();
            let (name, params) = parse_entry(line).map_err(|msg| AbiError::Syntax { line: i + 1, msg })?;
            entries.push(AbiEntry { name: Name::parse(name)?, params });
        }
        Ok(AbiDescriptor { entries })
    }
}

impl fmt::Display for AbiDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.entries {
            writeln!(f, "{} ({})", e.name, join_types(&e.params))?;
        }
        Ok(())
    }
}

pub(crate) fn join_types(params: &[AbiType]) -> String {
    params.iter().map(|t| t.as_str()).collect::<Vec<_>>().join(",")
}

/// Splits `<name> (<t>,<t>)` into its parts.
pub(crate) fn parse_entry(line: &str) -> Result<(&str, Vec<AbiType>), String> {
    let open = line.find('(').ok_or("expected '(' in ABI entry")?;
    let close = line.rfind(')').ok_or("expected ')' in ABI entry")?;
    if close < open || !line[close + 1..].trim().is_empty() {
        return Err("malformed parameter list".into());
    }
    let name = line[..open].trim();
    if name.is_empty() {
        return Err("missing action name".into());
    }
    let inner = line[open + 1..close].trim();
    let params = if inner.is_empty() {
        Vec::new()
    } else {
        inner
            .split(',')
            .map(|t| t.parse::<AbiType>().map_err(|e| e.to_string()))
            .collect::<Result<_, _>>()?
    };
    Ok((name, params))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ParamValue {
    U8(u8),
    U16(u16),
    U32(u32),
    U64(u64),
    I64(i64),
    Name(Name),
    Asset(i64),
    PublicKey([u8; 33]),
    String(Vec<u8>),
    Bytes(Vec<u8>),
}

impl ParamValue {
    pub fn ty(&self) -> AbiType {
        match self {
            ParamValue::U8(_) => AbiType::U8,
            ParamValue::U16(_) => AbiType::U16,
            ParamValue::U32(_) => AbiType::U32,
            ParamValue::U64(_) => AbiType::U64,
            ParamValue::I64(_) => AbiType::I64,
            ParamValue::Name(_) => AbiType::Name,
            ParamValue::Asset(_) => AbiType::Asset,
            ParamValue::PublicKey(_) => AbiType::PublicKey,
            ParamValue::String(_) => AbiType::String,
            ParamValue::Bytes(_) => AbiType::Bytes,
        }
    }

    /// Integer view used when the value is placed on the VM stack.
    pub fn as_i64(&self) -> Option<i64> {
        Some(match *self {
            ParamValue::U8(v) => v as i64,
            ParamValue::U16(v) => v as i64,
            ParamValue::U32(v) => v as i64,
            ParamValue::U64(v) => v as i64,
            ParamValue::I64(v) | ParamValue::Asset(v) => v,
            ParamValue::Name(n) => n.value() as i64,
            _ => return None,
        })
    }

    pub fn to_arg(&self) -> ArgValue {
        match self {
            ParamValue::PublicKey(k) => ArgValue::Bytes(k.to_vec()),
            ParamValue::String(b) | ParamValue::Bytes(b) => ArgValue::Bytes(b.clone()),
            other => ArgValue::Int(other.as_i64().expect("fixed integer type")),
        }
    }

    fn write_fixed(&self, out: &mut Vec<u8>) {
        match self {
            ParamValue::U8(v) => out.push(*v),
            ParamValue::U16(v) => out.extend_from_slice(&v.to_be_bytes()),
            ParamValue::U32(v) => out.extend_from_slice(&v.to_be_bytes()),
            ParamValue::U64(v) => out.extend_from_slice(&v.to_be_bytes()),
            ParamValue::I64(v) | ParamValue::Asset(v) => out.extend_from_slice(&v.to_be_bytes()),
            ParamValue::Name(n) => out.extend_from_slice(&n.value().to_be_bytes()),
            ParamValue::PublicKey(k) => out.extend_from_slice(k),
            ParamValue::String(_) | ParamValue::Bytes(_) => unreachable!("variable-length value"),
        }
    }
}

fn read_fixed(ty: AbiType, bits: &[u8]) -> ParamValue {
    fn arr<const N: usize>(b: &[u8]) -> [u8; N] {
        b.try_into().expect("width checked by caller")
    }
    match ty {
        AbiType::U8 => ParamValue::U8(bits[0]),
        AbiType::U16 => ParamValue::U16(u16::from_be_bytes(arr(bits))),
        AbiType::U32 => ParamValue::U32(u32::from_be_bytes(arr(bits))),
        AbiType::U64 => ParamValue::U64(u64::from_be_bytes(arr(bits))),
        AbiType::I64 => ParamValue::I64(i64::from_be_bytes(arr(bits))),
        AbiType::Name => ParamValue::Name(Name::from_raw(u64::from_be_bytes(arr(bits)))),
        AbiType::Asset => ParamValue::Asset(i64::from_be_bytes(arr(bits))),
        AbiType::PublicKey => ParamValue::PublicKey(arr(bits)),
        AbiType::String | AbiType::Bytes => unreachable!("variable-length type"),
    }
}

/// Orders parameters for decoding. Returns the sorted types together with
/// `map`, where `map[i]` is the declaration index of sorted slot `i`.
pub fn sort_params(params: &[AbiType]) -> (Vec<AbiType>, Vec<usize>) {
    let mut order: Vec<usize> = (0..params.len()).collect();
    // stable: ties keep declaration order
    order.sort_by_key(|&i| match params[i].bit_len() {
        Some(bits) => (0, bits),
        None => (1, 0),
    });
    (order.iter().map(|&i| params[i]).collect(), order)
}

pub fn min_input_length(params: &[AbiType]) -> usize {
    let fixed_bits: usize = params.iter().filter_map(|t| t.bit_len()).sum();
    let variable = params.iter().filter(|t| t.is_variable()).count();
    fixed_bits.div_ceil(8) + variable
}

/// Byte allocation for `count` variable-length parameters sharing
/// `remaining` bytes.
pub fn split_lengths(remaining: usize, count: usize) -> Vec<usize> {
    if count == 0 {
        return Vec::new();
    }
    let base = remaining / count;
    let extra = remaining % count;
    (0..count).map(|i| base + usize::from(i < extra)).collect()
}

pub fn bytes_to_params(bytes: &[u8], params: &[AbiType]) -> Result<Vec<ParamValue>, AbiError> {
    let need = min_input_length(params);
    if bytes.len() < need {
        return Err(AbiError::InsufficientBytes { need, have: bytes.len() });
    }
    if bytes.len() > need && !params.iter().any(|t| t.is_variable()) {
        return Err(AbiError::TrailingBytes { extra: bytes.len() - need });
    }
    let (sorted, map) = sort_params(params);
    let mut slots: Vec<Option<ParamValue>> = vec![None; params.len()];
    let mut cursor = 0;
    let mut variable = Vec::new();
    for (ty, &orig) in sorted.iter().zip(&map) {
        match ty.byte_len() {
            Some(n) => {
                slots[orig] = Some(read_fixed(*ty, &bytes[cursor..cursor + n]));
                cursor += n;
            }
            None => variable.push((orig, *ty)),
        }
    }
    let lens = split_lengths(bytes.len() - cursor, variable.len());
    for ((orig, ty), len) in variable.into_iter().zip(lens) {
        let chunk = bytes[cursor..cursor + len].to_vec();
        cursor += len;
        slots[orig] = Some(match ty {
            AbiType::String => ParamValue::String(chunk),
            _ => ParamValue::Bytes(chunk),
        });
    }
    debug_assert_eq!(cursor, bytes.len());
    Ok(slots.into_iter().map(|v| v.expect("every slot filled")).collect())
}

/// Smallest total such that the equal split gives every variable parameter
/// at least its current length (and at least one byte).
fn canonical_total(lens: &[usize]) -> usize {
    let k = lens.len();
    if k == 0 {
        return 0;
    }
    let mut total = lens.iter().sum::<usize>().max(k);
    loop {
        if split_lengths(total, k).iter().zip(lens).all(|(a, l)| a >= l) {
            return total;
        }
        total += 1;
    }
}

/// Inverse of [`bytes_to_params`]. Variable-length values shorter than their
/// canonical share are padded with trailing zero bytes.
pub fn params_to_bytes(values: &[ParamValue], params: &[AbiType]) -> Result<Vec<u8>, AbiError> {
    if values.len() != params.len() {
        return Err(AbiError::Arity { expected: params.len(), got: values.len() });
    }
    for (index, (v, t)) in values.iter().zip(params).enumerate() {
        if v.ty() != *t {
            return Err(AbiError::TypeMismatch { index, expected: *t });
        }
    }
    let (sorted, map) = sort_params(params);
    let mut out = Vec::with_capacity(min_input_length(params));
    let mut variable = Vec::new();
    for (ty, &orig) in sorted.iter().zip(&map) {
        if ty.is_variable() {
            variable.push(match &values[orig] {
                ParamValue::String(b) | ParamValue::Bytes(b) => b.as_slice(),
                _ => unreachable!("type checked above"),
            });
        } else {
            values[orig].write_fixed(&mut out);
        }
    }
    let lens: Vec<usize> = variable.iter().map(|b| b.len()).collect();
    let shares = split_lengths(canonical_total(&lens), lens.len());
    for (value, share) in variable.into_iter().zip(shares) {
        out.extend_from_slice(value);
        out.resize(out.len() + share - value.len(), 0);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use AbiType::*;

    #[test]
    fn sorting_examples() {
        assert_eq!(sort_params(&[String, U8, U8]), (vec![U8, U8, String], vec![1, 2, 0]));
        assert_eq!(sort_params(&[]), (vec![], vec![]));
        assert_eq!(
            sort_params(&[U64, U8, String, Bytes]),
            (vec![U8, U64, String, Bytes], vec![1, 0, 2, 3])
        );
        assert_eq!(sort_params(&[PublicKey, Name, U16]), (vec![U16, Name, PublicKey], vec![2, 1, 0]));
    }

    #[test]
    fn worked_example() {
        let bytes = hex::decode("1623416e7446757a7a6572").unwrap();
        let params = bytes_to_params(&bytes, &[String, U8, U8]).unwrap();
        assert_eq!(
            params,
            vec![ParamValue::String(bytes[2..].to_vec()), ParamValue::U8(22), ParamValue::U8(35)]
        );
        assert_eq!(params_to_bytes(&params, &[String, U8, U8]).unwrap(), bytes);
    }

    #[test]
    fn empty_abi() {
        assert_eq!(bytes_to_params(&[], &[]).unwrap(), vec![]);
        assert_eq!(params_to_bytes(&[], &[]).unwrap(), Vec::<u8>::new());
        assert_eq!(min_input_length(&[]), 0);
    }

    #[test]
    fn equal_split_with_left_remainder() {
        let ten = bytes_to_params(&[1; 10], &[String, String]).unwrap();
        assert_eq!(ten, vec![ParamValue::String(vec![1; 5]), ParamValue::String(vec![1; 5])]);
        let eleven = bytes_to_params(&[1; 11], &[String, String]).unwrap();
        assert_eq!(eleven, vec![ParamValue::String(vec![1; 6]), ParamValue::String(vec![1; 5])]);
    }

    #[test]
    fn minimum_lengths() {
        assert_eq!(min_input_length(&[String, U8, U8]), 3);
        assert_eq!(min_input_length(&[PublicKey]), 33);
        assert_eq!(min_input_length(&[Name, Name, Asset, String]), 25);
    }

    #[test]
    fn short_input_is_rejected() {
        assert_eq!(
            bytes_to_params(&[1, 2], &[String, U8, U8]),
            Err(AbiError::InsufficientBytes { need: 3, have: 2 })
        );
    }

    #[test]
    fn big_endian_fixed_widths() {
        let v = bytes_to_params(&[0x01, 0x02, 0xff, 0, 0, 0, 0, 0, 0, 0], &[U16, I64]).unwrap();
        assert_eq!(v, vec![ParamValue::U16(0x0102), ParamValue::I64(-(1 << 56))]);
    }

    #[test]
    fn encoding_pads_short_variable_values() {
        let vals = [ParamValue::String(b"abc".to_vec()), ParamValue::Bytes(b"x".to_vec())];
        let bytes = params_to_bytes(&vals, &[String, Bytes]).unwrap();
        assert_eq!(bytes, b"abcx\0".to_vec());
        // a longer second value forces a larger total
        let vals = [ParamValue::String(b"a".to_vec()), ParamValue::Bytes(b"xyz".to_vec())];
        let bytes = params_to_bytes(&vals, &[String, Bytes]).unwrap();
        assert_eq!(bytes, b"a\0\0xyz".to_vec());
    }

    #[test]
    fn encoding_rejects_mismatch() {
        assert_eq!(
            params_to_bytes(&[ParamValue::U8(1)], &[U16]),
            Err(AbiError::TypeMismatch { index: 0, expected: U16 })
        );
        assert!(matches!(params_to_bytes(&[], &[U8]), Err(AbiError::Arity { .. })));
    }

    #[test]
    fn descriptor_text() {
        let d = AbiDescriptor::parse("# token\nabi transfer (name,name,asset,string)\nping ()\n").unwrap();
        assert_eq!(d.entries.len(), 2);
        assert_eq!(d.get(crate::name::Name::lit("transfer")).unwrap().params, vec![Name, Name, Asset, String]);
        assert_eq!(AbiDescriptor::parse(&d.to_string()).unwrap(), d);
        assert!(AbiDescriptor::parse("foo (float)").is_err());
    }
}
