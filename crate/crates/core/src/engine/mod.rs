//! Coverage-guided campaign loop.

mod mutate;
mod novelty;
mod report;
mod seed;

pub use mutate::{apply as apply_mutation, mutate, pick_op, MutOp, ARITH_MAX, DEFAULT_MAX_LEN};
pub use novelty::{bucket, has_new_coverage, signature, VirginMap};
pub use report::{parse_report, CampaignReport, Finding, ReportParseError, ReportRecord, StageTiming};
pub use seed::{best_candidate, draw_candidate};

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::abi::{self, AbiError};
use crate::chain::{BlockInfo, ChainError, ChainState, ExecutionResult};
use crate::mcb::{extract_literals, ContractModule};
use crate::plugins::{EventRef, IterationView, Plugin, PluginError, Target, Victim};
use crate::vm::{CoverageBitmap, Vm};

/// Tokens the victim holds before fuzzing so it can pay out.
pub const VICTIM_BANKROLL: i64 = 10_000_000;
/// Extra random bytes a black-box input may carry beyond the minimum.
pub const BLACKBOX_SLACK: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Greybox,
    Blackbox,
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "greybox" => Ok(Mode::Greybox),
            "blackbox" => Ok(Mode::Blackbox),
            _ => Err(format!("unknown mode {s:?} (expected greybox or blackbox)")),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Greybox => "greybox",
            Mode::Blackbox => "blackbox",
        })
    }
}

#[derive(Debug, Clone)]
pub struct CampaignConfig {
    pub mode: Mode,
    pub iterations: u64,
    pub rng_seed: u64,
    pub min_len_override: Option<usize>,
    pub seed_candidates: usize,
    pub block_info: BlockInfo,
    pub max_input_len: usize,
    /// End the campaign at the first finding.
    pub stop_on_finding: bool,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        CampaignConfig {
            mode: Mode::Greybox,
            iterations: 2000,
            rng_seed: 0,
            min_len_override: None,
            seed_candidates: 16,
            block_info: BlockInfo::default(),
            max_input_len: DEFAULT_MAX_LEN,
            stop_on_finding: false,
        }
    }
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("iterations must be positive")]
    ZeroIterations,
    #[error("deploying the contract: {0}")]
    Deploy(#[from] ChainError),
    #[error("plugin setup: {0}")]
    Setup(#[from] PluginError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueueEntry {
    pub input: Vec<u8>,
    pub signature: String,
    /// (cell, bucket) pairs this entry added to the global map.
    pub novel: Vec<(u16, u8)>,
    pub discovered_at: u64,
}

/// Everything one iteration produced.
pub struct Iteration {
    pub results: Vec<ExecutionResult>,
    pub chain: ChainState,
    pub evidence: Option<Vec<EventRef>>,
}

pub struct Campaign {
    plugin: Box<dyn Plugin>,
    victim: Victim,
    baseline: ChainState,
    targets: Vec<Target>,
    vm: Vm,
    config: CampaignConfig,
    queues: Vec<Vec<QueueEntry>>,
}

impl Campaign {
    /// Fresh chain with the victim deployed and funded, then the plugin's
    /// own setup.
    pub fn new(mut plugin: Box<dyn Plugin>, module: Arc<ContractModule>, config: CampaignConfig) -> Result<Self, EngineError> {
        if config.iterations == 0 {
            return Err(EngineError::ZeroIterations);
        }
        let mut chain = ChainState::new(config.block_info);
        let victim = Victim { account: module.name, module };
        chain.create(victim.account)?;
        chain.deploy(victim.account, victim.module.clone())?;
        chain.issue(victim.account, VICTIM_BANKROLL)?;
        let mut vm = Vm::new();
        plugin.before_fuzz(&mut chain, &mut vm, &victim)?;
        vm.reset();
        let targets = plugin.targets();
        let queues = vec![Vec::new(); targets.len()];
        Ok(Campaign { plugin, victim, baseline: chain, targets, vm, config, queues })
    }

    pub fn targets(&self) -> &[Target] {
        &self.targets
    }

    pub fn baseline(&self) -> &ChainState {
        &self.baseline
    }

    pub fn queue(&self, target: usize) -> &[QueueEntry] {
        &self.queues[target]
    }

    /// Coverage of the most recent execution.
    pub fn bitmap(&self) -> &CoverageBitmap {
        &self.vm.bitmap
    }

    pub fn min_len(&self, target: usize) -> usize {
        let floor = abi::min_input_length(&self.targets[target].params);
        self.max_len(target).min(self.config.min_len_override.map_or(floor, |o| o.max(floor)))
    }

    /// Targets without variable-length parameters take exactly their fixed
    /// width.
    pub fn max_len(&self, target: usize) -> usize {
        let params = &self.targets[target].params;
        if params.iter().any(|t| t.is_variable()) {
            self.config.max_input_len.max(abi::min_input_length(params))
        } else {
            abi::min_input_length(params)
        }
    }

    /// Decodes `input` for `target`, runs the scenario on a copy of the
    /// baseline and evaluates the oracle.
    pub fn replay(&mut self, target: usize, input: &[u8]) -> Result<Iteration, AbiError> {
        let mut t = StageTiming::default();
        self.step(target, input, &mut t)
    }

    fn step(&mut self, target: usize, input: &[u8], timing: &mut StageTiming) -> Result<Iteration, AbiError> {
        let start = Instant::now();
        let params = abi::bytes_to_params(input, &self.targets[target].params)?;
        let txs = self.plugin.fuzz(&self.baseline, target, &params);
        let converted = Instant::now();
        timing.conversion += converted - start;

        // restoring the chain is part of running the transactions
        let mut chain = self.baseline.clone();

        self.vm.reset();
        let mut results = Vec::with_capacity(txs.len() + 1);
        for tx in txs {
            results.push(chain.push_transaction(tx, &mut self.vm));
        }
        results.extend(chain.run_deferred(&mut self.vm));
        let evidence = self.plugin.after_fuzz(&IterationView { baseline: &self.baseline, chain: &chain, results: &results });
        timing.execution += converted.elapsed();
        Ok(Iteration { results, chain, evidence })
    }

    /// Highest-coverage candidate drawn from the contract's literals,
    /// encoded back to bytes.
    pub fn select_seed(&mut self, target: usize, rng: &mut ChaCha8Rng) -> Vec<u8> {
        let corpus = extract_literals(&self.victim.module);
        let params = self.targets[target].params.clone();
        let min_len = self.min_len(target);
        let mut candidates = Vec::with_capacity(self.config.seed_candidates);
        let mut scores = Vec::with_capacity(self.config.seed_candidates);
        for _ in 0..self.config.seed_candidates.max(1) {
            let values = draw_candidate(&corpus, &params, rng);
            let mut bytes = abi::params_to_bytes(&values, &params).expect("candidate matches its own types");
            if bytes.len() < min_len {
                bytes.resize(min_len, 0);
            }
            let covered = match self.replay(target, &bytes) {
                Ok(_) => self.vm.bitmap.nonzero_count(),
                Err(_) => 0,
            };
            candidates.push(bytes);
            scores.push(covered);
        }
        let best = best_candidate(&scores).unwrap_or(0);
        candidates.swap_remove(best)
    }

    pub fn run(&mut self) -> CampaignReport {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.rng_seed);
        let mut timing = StageTiming::default();
        let mut virgin = VirginMap::new();
        let mut seen = VirginMap::new();
        let mut feedback = CoverageBitmap::new();
        let mut feedback_reads = 0u64;
        let mut findings: Vec<Finding> = Vec::new();
        let mut found = vec![false; self.targets.len()];
        let mut cursors = vec![0usize; self.targets.len()];
        let greybox = self.config.mode == Mode::Greybox;

        if greybox {
            for t in 0..self.targets.len() {
                let input = self.select_seed(t, &mut rng);
                let _ = self.replay(t, &input);
                let novel = virgin.merge(&self.vm.bitmap);
                feedback_reads += 1;
                let signature = signature(&self.vm.bitmap);
                self.queues[t].push(QueueEntry { input, signature, novel, discovered_at: 0 });
            }
        }

        let mut executed = 0;
        for i in 0..self.config.iterations {
            if self.targets.is_empty() {
                break;
            }
            let t = (i % self.targets.len() as u64) as usize;
            let (min_len, max_len) = (self.min_len(t), self.max_len(t));

            let gen_start = Instant::now();
            let input = if greybox {
                let q = &self.queues[t];
                let base = &q[cursors[t]].input;
                cursors[t] = (cursors[t] + 1) % q.len();
                let other = &q[rng.gen_range(0..q.len())].input;
                mutate(base, other, &mut rng, min_len, max_len)
            } else {
                let len = rng.gen_range(min_len..=max_len.min(min_len + BLACKBOX_SLACK));
                (0..len).map(|_| rng.gen()).collect()
            };
            timing.generation += gen_start.elapsed();

            let outcome = self.step(t, &input, &mut timing).expect("inputs respect the minimum length");
            executed += 1;

            let bitmap_start = Instant::now();
            if greybox {
                feedback.copy_from(&self.vm.bitmap);
            } else {
                seen.merge(&self.vm.bitmap);
            }
            timing.bitmap += bitmap_start.elapsed();

            if greybox {
                let novelty_start = Instant::now();
                feedback_reads += 1;
                let novel = virgin.merge(&feedback);
                if !novel.is_empty() {
                    let signature = signature(&feedback);
                    self.queues[t].push(QueueEntry { input: input.clone(), signature, novel, discovered_at: i });
                }
                timing.generation += novelty_start.elapsed();
            }

            if let Some(evidence) = outcome.evidence {
                if !found[t] {
                    found[t] = true;
                    findings.push(Finding { plugin: self.plugin.id().to_string(), iteration: i, target: t, input, evidence });
                }
                if self.config.stop_on_finding {
                    break;
                }
            }
        }

        CampaignReport {
            plugin: self.plugin.id().to_string(),
            findings,
            edges: if greybox { virgin.edge_count() } else { seen.edge_count() },
            iterations: executed,
            queue_len: self.queues.iter().map(Vec::len).sum(),
            feedback_reads,
            timing,
        }
    }
}

/// Builds a campaign and runs it to completion.
pub fn run_campaign(
    plugin: Box<dyn Plugin>,
    module: Arc<ContractModule>,
    config: CampaignConfig,
) -> Result<CampaignReport, EngineError> {
    let mut c = Campaign::new(plugin, module, config)?;
    Ok(c.run())
}
