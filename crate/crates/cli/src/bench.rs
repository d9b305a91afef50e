//! Runs the bundled corpus. The report on stdout depends only on the seed
//! and budgets; timing goes to stderr.

use std::fmt::Write as _;
use std::path::Path;

use greyant::corpus::{detection_suite, guarded, BundledContract};
use greyant::engine::{CampaignConfig, CampaignReport, Mode};
use rayon::prelude::*;

use crate::{campaign, write_report, ConfigError};

struct Job {
    contract: BundledContract,
    mode: Mode,
    iterations: u64,
}

/// Relative edge gain of `grey` over `black`.
pub fn percent_delta(grey: usize, black: usize) -> String {
    if black == 0 {
        return if grey == 0 { "+0.0%".into() } else { "inf".into() };
    }
    format!("{:+.1}%", (grey as f64 - black as f64) * 100.0 / black as f64)
}

pub fn run(seed: u64, iterations: u64, guarded_iterations: u64, report: Option<&Path>) -> Result<u8, ConfigError> {
    if iterations == 0 || guarded_iterations == 0 {
        return Err(ConfigError("iteration budgets must be positive".into()));
    }
    let mut jobs = Vec::new();
    for contract in detection_suite() {
        for mode in [Mode::Greybox, Mode::Blackbox] {
            jobs.push(Job { contract: contract.clone(), mode, iterations });
        }
    }
    for mode in [Mode::Greybox, Mode::Blackbox] {
        jobs.push(Job { contract: guarded(), mode, iterations: guarded_iterations });
    }

    // collect keeps job order, so the output is canonical regardless of
    // which worker finishes first
    let reports: Vec<CampaignReport> = jobs
        .par_iter()
        .map(|j| {
            let cfg = CampaignConfig { mode: j.mode, iterations: j.iterations, rng_seed: seed, ..CampaignConfig::default() };
            campaign(j.contract.plugin, j.contract.module(), cfg)
        })
        .collect::<Result<_, _>>()?;

    let mut out = String::new();
    for (j, r) in jobs.iter().zip(&reports) {
        let first = r.findings.first().map_or("-".to_string(), |f| f.iteration.to_string());
        let _ = writeln!(
            out,
            "case|{}|{}|{}|found={}/{}|edges={}|iters={}|queue={}|first={}",
            j.contract.id,
            j.mode,
            j.contract.plugin,
            r.findings.len(),
            j.contract.expected,
            r.edges,
            r.iterations,
            r.queue_len,
            first
        );
        eprintln!(
            "timing|{}|{}|{:.0} iters/s|transform {:.2}%",
            j.contract.id,
            j.mode,
            r.iters_per_sec(),
            r.timing.transformation_share() * 100.0
        );
    }
    for pair in jobs.chunks(2).zip(reports.chunks(2)) {
        let (j, r) = pair;
        let _ = writeln!(out, "delta|{}|{}|{}|{}", j[0].contract.id, r[0].edges, r[1].edges, percent_delta(r[0].edges, r[1].edges));
    }
    for (k, mode) in [Mode::Greybox, Mode::Blackbox].into_iter().enumerate() {
        let (mut vuln, mut vuln_hit, mut safe, mut safe_hit) = (0, 0, 0, 0);
        for (j, r) in jobs.iter().zip(&reports).skip(k).step_by(2) {
            if j.contract.id == "guarded" {
                continue;
            }
            if j.contract.expected > 0 {
                vuln += 1;
                vuln_hit += usize::from(r.findings.len() >= j.contract.expected);
            } else {
                safe += 1;
                safe_hit += usize::from(!r.findings.is_empty());
            }
        }
        let g = &reports[reports.len() - 2 + k];
        let reached = if g.findings.is_empty() { "missed" } else { "reached" };
        let _ = writeln!(out, "summary|{mode}|vulnerable={vuln_hit}/{vuln}|safe_flagged={safe_hit}/{safe}|guarded={reached}");
    }
    write_report(report, &out)?;
    Ok(0)
}
