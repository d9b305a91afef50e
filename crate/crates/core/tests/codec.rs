use greyant::abi::{bytes_to_params, min_input_length, params_to_bytes, AbiError, AbiType, ParamValue};
use proptest::prelude::*;

const TYPES: [AbiType; 10] = [
    AbiType::U8,
    AbiType::U16,
    AbiType::U32,
    AbiType::U64,
    AbiType::I64,
    AbiType::Name,
    AbiType::Asset,
    AbiType::PublicKey,
    AbiType::String,
    AbiType::Bytes,
];

fn abi() -> impl Strategy<Value = Vec<AbiType>> {
    prop::collection::vec(prop::sample::select(TYPES.to_vec()), 0..6)
}

fn abi_and_input() -> impl Strategy<Value = (Vec<AbiType>, Vec<u8>)> {
    abi().prop_flat_map(|params| {
        let min = min_input_length(&params);
        let max = if params.iter().any(|t| t.is_variable()) { min + 40 } else { min };
        (Just(params), prop::collection::vec(any::<u8>(), min..=max))
    })
}

#[test]
fn worked_example() {
    let bytes = hex::decode("1623416e7446757a7a6572").unwrap();
    let params = [AbiType::String, AbiType::U8, AbiType::U8];
    let values = bytes_to_params(&bytes, &params).unwrap();
    assert_eq!(values, vec![ParamValue::String(bytes[2..].to_vec()), ParamValue::U8(22), ParamValue::U8(35)]);
    assert_eq!(params_to_bytes(&values, &params).unwrap(), bytes);
}

#[test]
fn length_errors() {
    assert_eq!(
        bytes_to_params(&[1, 2], &[AbiType::U16, AbiType::String]),
        Err(AbiError::InsufficientBytes { need: 3, have: 2 })
    );
    assert_eq!(bytes_to_params(&[1, 2, 3], &[AbiType::U16]), Err(AbiError::TrailingBytes { extra: 1 }));
    assert!(matches!(params_to_bytes(&[ParamValue::U8(1)], &[AbiType::U16]), Err(AbiError::TypeMismatch { index: 0, .. })));
}

#[test]
fn two_strings_split_left_first() {
    let v = bytes_to_params(b"abcde", &[AbiType::String, AbiType::Bytes]).unwrap();
    assert_eq!(v, vec![ParamValue::String(b"abc".to_vec()), ParamValue::Bytes(b"de".to_vec())]);
}

proptest! {
    #[test]
    fn decode_then_encode_is_identity((params, input) in abi_and_input()) {
        let values = bytes_to_params(&input, &params).unwrap();
        prop_assert_eq!(values.len(), params.len());
        for (v, t) in values.iter().zip(&params) {
            prop_assert_eq!(v.ty(), *t);
        }
        prop_assert_eq!(params_to_bytes(&values, &params).unwrap(), input);
    }

    #[test]
    fn encode_then_decode_pads_variable_values((params, input) in abi_and_input(), extra in prop::collection::vec(any::<u8>(), 0..5)) {
        // grow the variable values unevenly, then check the encoder keeps them as prefixes
        let mut values = bytes_to_params(&input, &params).unwrap();
        if let Some(ParamValue::String(s) | ParamValue::Bytes(s)) = values.iter_mut().find(|v| v.ty().is_variable()) {
            s.extend_from_slice(&extra);
        }
        let bytes = params_to_bytes(&values, &params).unwrap();
        let back = bytes_to_params(&bytes, &params).unwrap();
        for (a, b) in values.iter().zip(&back) {
            match (a, b) {
                (ParamValue::String(x), ParamValue::String(y)) | (ParamValue::Bytes(x), ParamValue::Bytes(y)) => {
                    prop_assert!(y.starts_with(x));
                    prop_assert!(y[x.len()..].iter().all(|&z| z == 0));
                }
                _ => prop_assert_eq!(a, b),
            }
        }
    }

    #[test]
    fn short_inputs_rejected(params in abi(), cut in 1usize..4) {
        let min = min_input_length(&params);
        prop_assume!(min >= cut);
        let err = bytes_to_params(&vec![0; min - cut], &params).unwrap_err();
        prop_assert_eq!(err, AbiError::InsufficientBytes { need: min, have: min - cut });
    }
}
