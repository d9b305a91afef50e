//! Campaign reports and their line-record form.

use std::fmt::Write as _;
use std::time::Duration;

use crate::plugins::EventRef;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Finding {
    pub plugin: String,
    pub iteration: u64,
    pub target: usize,
    pub input: Vec<u8>,
    pub evidence: Vec<EventRef>,
}

/// Wall-clock totals per loop stage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StageTiming {
    pub generation: Duration,
    pub conversion: Duration,
    pub execution: Duration,
    pub bitmap: Duration,
}

impl StageTiming {
    pub fn total(&self) -> Duration {
        self.generation + self.conversion + self.execution + self.bitmap
    }

    /// Share of loop time spent converting inputs and bitmaps.
    pub fn transformation_share(&self) -> f64 {
        let total = self.total().as_secs_f64();
        if total == 0.0 {
            0.0
        } else {
            (self.conversion + self.bitmap).as_secs_f64() / total
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignReport {
    pub plugin: String,
    pub findings: Vec<Finding>,
    pub edges: usize,
    pub iterations: u64,
    pub queue_len: usize,
    /// Times the engine consulted a coverage map for feedback.
    pub feedback_reads: u64,
    pub timing: StageTiming,
}

impl CampaignReport {
    pub fn iters_per_sec(&self) -> f64 {
        let t = self.timing.total().as_secs_f64();
        if t == 0.0 {
            0.0
        } else {
            self.iterations as f64 / t
        }
    }

    /// `F` lines for findings, then `S` and `T` lines.
    pub fn to_text(&self) -> String {
        let mut out = self.findings_text();
        let _ = writeln!(out, "S|{}|{}|{:.3}", self.edges, self.iterations, self.iters_per_sec());
        let t = &self.timing;
        let _ = writeln!(
            out,
            "T|{:.3}|{:.3}|{:.3}|{:.3}",
            ms(t.generation),
            ms(t.conversion),
            ms(t.execution),
            ms(t.bitmap)
        );
        out
    }

    pub fn findings_text(&self) -> String {
        let mut out = String::new();
        for f in &self.findings {
            let _ = writeln!(out, "F|{}|{}|{}", f.plugin, f.iteration, hex::encode(&f.input));
        }
        out
    }
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1000.0
}

#[derive(Debug, Clone, PartialEq)]
pub enum ReportRecord {
    Finding { plugin: String, iteration: u64, input: Vec<u8> },
    Summary { edges: usize, iterations: u64, iters_per_sec: f64 },
    Timing { gen_ms: f64, conv_ms: f64, exec_ms: f64, bitmap_ms: f64 },
}

impl ReportRecord {
    pub fn to_line(&self) -> String {
        match self {
            ReportRecord::Finding { plugin, iteration, input } => format!("F|{plugin}|{iteration}|{}", hex::encode(input)),
            ReportRecord::Summary { edges, iterations, iters_per_sec } => format!("S|{edges}|{iterations}|{iters_per_sec:.3}"),
            ReportRecord::Timing { gen_ms, conv_ms, exec_ms, bitmap_ms } => {
                format!("T|{gen_ms:.3}|{conv_ms:.3}|{exec_ms:.3}|{bitmap_ms:.3}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("report line {line}: malformed record {text:?}")]
pub struct ReportParseError {
    pub line: usize,
    pub text: String,
}

pub fn parse_report(text: &str) -> Result<Vec<ReportRecord>, ReportParseError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let err = || ReportParseError { line: i + 1, text: line.to_string() };
        let f: Vec<&str> = line.split('|').collect();
        let num = |s: &str| s.parse::<f64>().map_err(|_| err());
        let rec = match (f[0], f.len()) {
            ("F", 4) => ReportRecord::Finding {
                plugin: f[1].to_string(),
                iteration: f[2].parse().map_err(|_| err())?,
                input: hex::decode(f[3]).map_err(|_| err())?,
            },
            ("S", 4) => ReportRecord::Summary {
                edges: f[1].parse().map_err(|_| err())?,
                iterations: f[2].parse().map_err(|_| err())?,
                iters_per_sec: num(f[3])?,
            },
            ("T", 5) => ReportRecord::Timing { gen_ms: num(f[1])?, conv_ms: num(f[2])?, exec_ms: num(f[3])?, bitmap_ms: num(f[4])? },
            _ => return Err(err()),
        };
        out.push(rec);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_round_trip() {
        let r = CampaignReport {
            plugin: "p3".into(),
            findings: vec![Finding { plugin: "p3".into(), iteration: 12, target: 0, input: vec![0, 0xab], evidence: vec![] }],
            edges: 40,
            iterations: 2000,
            queue_len: 3,
            feedback_reads: 2000,
            timing: StageTiming {
                generation: Duration::from_micros(1500),
                conversion: Duration::from_micros(20),
                execution: Duration::from_millis(900),
                bitmap: Duration::from_micros(77),
            },
        };
        let text = r.to_text();
        assert!(text.starts_with("F|p3|12|00ab\nS|40|2000|"));
        let recs = parse_report(&text).unwrap();
        let back: String = recs.iter().map(|r| r.to_line() + "\n").collect();
        assert_eq!(back, text);
        assert!(parse_report("Z|1").is_err());
    }
}
