//! Spike records, spike logs and external stimuli, with their file formats.
//!
//! Spike log CSV: one `t_ps,neuron_id` line per spike, ascending time, LF
//! endings, no header. Stimulus JSON: a list of `{t_ps, neuron_id, amplitude}`.

use std::fmt::Write as _;
use std::io::{self, BufRead};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::SimTime;
use crate::num::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SpikeRecord {
    pub time: SimTime,
    pub neuron_id: usize,
}

/// Drive injected straight into a neuron's somatic loop.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ExternalInput<S: Scalar> {
    pub t_ps: u64,
    pub neuron_id: usize,
    pub amplitude: S,
}

impl<S: Scalar> ExternalInput<S> {
    pub fn new(t: SimTime, neuron_id: usize, amplitude: S) -> Self {
        ExternalInput {
            t_ps: t.0,
            neuron_id,
            amplitude,
        }
    }

    pub fn time(&self) -> SimTime {
        SimTime(self.t_ps)
    }
}

pub fn stimulus_from_json<S: Scalar>(s: &str) -> serde_json::Result<Vec<ExternalInput<S>>> {
    serde_json::from_str(s)
}

pub fn stimulus_to_json<S: Scalar>(inputs: &[ExternalInput<S>]) -> serde_json::Result<String> {
    serde_json::to_string_pretty(inputs)
}

#[derive(Debug, Error)]
pub enum SpikeLogError {
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("line {line}: time {t} ps precedes previous spike")]
    OutOfOrder { line: usize, t: u64 },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Time-ordered firing records.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SpikeLog(pub Vec<SpikeRecord>);

impl SpikeLog {
    pub fn new() -> Self {
        SpikeLog(Vec::new())
    }

    /// Builds a log from unordered `(t_ps, neuron)` pairs, sorting by time then neuron.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (u64, usize)>) -> Self {
        let mut v: Vec<SpikeRecord> = pairs
            .into_iter()
            .map(|(t, n)| SpikeRecord {
                time: SimTime(t),
                neuron_id: n,
            })
            .collect();
        v.sort();
        SpikeLog(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn records(&self) -> &[SpikeRecord] {
        &self.0
    }

    pub fn push(&mut self, r: SpikeRecord) {
        self.0.push(r);
    }

    pub fn first_time(&self) -> Option<SimTime> {
        self.0.first().map(|r| r.time)
    }

    pub fn last_time(&self) -> Option<SimTime> {
        self.0.last().map(|r| r.time)
    }

    /// Highest neuron id present plus one.
    pub fn neuron_span(&self) -> usize {
        self.0.iter().map(|r| r.neuron_id + 1).max().unwrap_or(0)
    }

    /// Spike times per neuron, each ascending.
    pub fn trains(&self, n_neurons: usize) -> Vec<Vec<SimTime>> {
        let mut out = vec![Vec::new(); n_neurons];
        for r in &self.0 {
            if r.neuron_id < n_neurons {
                out[r.neuron_id].push(r.time);
            }
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(self.0.len() * 12);
        for r in &self.0 {
            let _ = writeln!(s, "{},{}", r.time.0, r.neuron_id);
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self, SpikeLogError> {
        Self::read_csv(text.as_bytes())
    }

    pub fn read_csv<R: BufRead>(reader: R) -> Result<Self, SpikeLogError> {
        let mut v = Vec::new();
        let mut prev = 0u64;
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = i + 1;
            if line.is_empty() {
                continue;
            }
            let bad = |msg: &str| SpikeLogError::Malformed {
                line: lineno,
                msg: format!("{msg}: {line:?}"),
            };
            let (t, n) = line.split_once(',').ok_or_else(|| bad("expected `t_ps,neuron_id`"))?;
            let t: u64 = t.trim().parse().map_err(|_| bad("bad t_ps"))?;
            let n: usize = n.trim().parse().map_err(|_| bad("bad neuron_id"))?;
            if t < prev {
                return Err(SpikeLogError::OutOfOrder { line: lineno, t });
            }
            prev = t;
            v.push(SpikeRecord {
                time: SimTime(t),
                neuron_id: n,
            });
        }
        Ok(SpikeLog(v))
    }
}
