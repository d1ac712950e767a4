//! Line-delimited run reports. Each line is one JSON object tagged by `kind`;
//! field order is fixed by the struct definitions.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use crate::error::{invalid, Error, Result};
use crate::ssd::RoundStats;
use crate::sequence::TokenId;

pub const DISCLAIMER: &str = "speedup is measured in forward passes and assumes a memory-bound regime \
where one batched verification forward costs about one single-sequence forward; no wall-clock timing";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub strategy: String,
    /// Generated tokens (prompt excluded).
    pub tokens: Vec<TokenId>,
    /// Forwards the stepwise decoder needs: one per generated token.
    pub baseline_forwards: usize,
    pub forwards: usize,
    /// `1 - forwards / baseline_forwards`.
    pub reduction: f64,
    /// `baseline_forwards / forwards`.
    pub speedup: f64,
    pub disclaimer: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub config: RunConfig,
    pub summary: Summary,
    pub rounds: Vec<RoundStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareSummary {
    pub baseline: String,
    pub candidate: String,
    pub identical: bool,
    pub baseline_forwards: usize,
    pub candidate_forwards: usize,
    pub reduction: f64,
    pub speedup: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    pub summary: CompareSummary,
    pub baseline: Report,
    pub candidate: Report,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Line {
    Config(RunConfig),
    Summary(Summary),
    Round(RoundStats),
    Compare(CompareSummary),
}

fn emit(out: &mut String, line: &Line) {
    let _ = writeln!(out, "{}", serde_json::to_string(line).expect("report lines serialize"));
}

fn parse_lines(text: &str) -> Result<Vec<Line>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| serde_json::from_str(l).map_err(|e| Error::Parse { line: n + 1, msg: e.to_string() }))
        .collect()
}

fn take_report(lines: &mut std::iter::Peekable<std::vec::IntoIter<Line>>) -> Result<Report> {
    let Some(Line::Config(config)) = lines.next() else {
        return Err(invalid("report must start with a config line"));
    };
    let Some(Line::Summary(summary)) = lines.next() else {
        return Err(invalid("config line must be followed by a summary line"));
    };
    let mut rounds = Vec::new();
    while let Some(Line::Round(_)) = lines.peek() {
        if let Some(Line::Round(r)) = lines.next() {
            rounds.push(r);
        }
    }
    Ok(Report {
        config,
        summary,
        rounds,
    })
}

impl Report {
    pub fn to_lines(&self) -> String {
        let mut out = String::new();
        self.write_lines(&mut out);
        out
    }

    fn write_lines(&self, out: &mut String) {
        emit(out, &Line::Config(self.config.clone()));
        emit(out, &Line::Summary(self.summary.clone()));
        for r in &self.rounds {
            emit(out, &Line::Round(r.clone()));
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = parse_lines(text)?.into_iter().peekable();
        let report = take_report(&mut lines)?;
        if lines.next().is_some() {
            return Err(invalid("trailing lines after report"));
        }
        Ok(report)
    }
}

impl CompareReport {
    pub fn to_lines(&self) -> String {
        let mut out = String::new();
        emit(&mut out, &Line::Compare(self.summary.clone()));
        self.baseline.write_lines(&mut out);
        self.candidate.write_lines(&mut out);
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = parse_lines(text)?.into_iter().peekable();
        let Some(Line::Compare(summary)) = lines.next() else {
            return Err(invalid("compare report must start with a compare line"));
        };
        let baseline = take_report(&mut lines)?;
        let candidate = take_report(&mut lines)?;
        if lines.next().is_some() {
            return Err(invalid("trailing lines after compare report"));
        }
        Ok(Self {
            summary,
            baseline,
            candidate,
        })
    }
}
