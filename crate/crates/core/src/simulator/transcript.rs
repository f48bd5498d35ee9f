//! JSON-lines transcripts.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::protocol::{Bit, Val};

pub const SCHEMA_VERSION: u32 = 1;

/// How much a run records.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TranscriptLevel {
    /// Header, decisions and monitor verdicts.
    #[default]
    Summary,
    /// Adds OUTER boundaries and one record per INNER iteration.
    Iterations,
    /// Adds every send and delivery.
    Full,
}

impl std::str::FromStr for TranscriptLevel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "summary" => Ok(TranscriptLevel::Summary),
            "iterations" => Ok(TranscriptLevel::Iterations),
            "full" => Ok(TranscriptLevel::Full),
            _ => Err(format!("unknown transcript level {s:?} (summary, iterations, full)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Record {
    Header {
        schema: u32,
        n: usize,
        f: usize,
        names: Vec<String>,
        /// The actual faulty set.
        faulty: Vec<usize>,
        inputs: String,
        adversary: String,
        total_rounds: u64,
    },
    OuterBegin {
        outer: u32,
        faulty: Vec<usize>,
        round: u64,
    },
    Iteration {
        outer: u32,
        inner: u32,
        case: u8,
        a: Vec<usize>,
        s: Vec<usize>,
        /// `v` of every node, one character each, before and after.
        v_start: String,
        v_end: String,
        round: u64,
    },
    Send {
        round: u64,
        from: usize,
        to: usize,
        seq: u64,
        outer: u32,
        inner: u32,
        phase: u8,
        route: u32,
        hop: u8,
        value: Option<u8>,
    },
    Deliver {
        round: u64,
        from: usize,
        to: usize,
        seq: u64,
        accepted: bool,
    },
    Decision {
        round: u64,
        decisions: String,
    },
    Monitors {
        lemma1: bool,
        agreement_at_fstar: bool,
        agreement: bool,
        validity: bool,
        delivery: bool,
    },
}

pub(crate) fn bits_string(bits: impl IntoIterator<Item = Bit>) -> String {
    bits.into_iter().map(Bit::as_char).collect()
}

pub(crate) fn val_code(v: Val) -> Option<u8> {
    v.map(Bit::as_u8)
}

/// Where records go.
#[derive(Default)]
pub enum Sink {
    #[default]
    None,
    Memory(Vec<Record>),
    Writer(Box<dyn Write + Send>),
}

impl std::fmt::Debug for Sink {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Sink::None => f.write_str("None"),
            Sink::Memory(r) => write!(f, "Memory({} records)", r.len()),
            Sink::Writer(_) => f.write_str("Writer"),
        }
    }
}

impl Sink {
    pub(crate) fn is_none(&self) -> bool {
        matches!(self, Sink::None)
    }

    pub(crate) fn emit(&mut self, record: Record) -> std::io::Result<()> {
        match self {
            Sink::None => Ok(()),
            Sink::Memory(v) => {
                v.push(record);
                Ok(())
            }
            Sink::Writer(w) => {
                serde_json::to_writer(&mut *w, &record)?;
                w.write_all(b"\n")
            }
        }
    }

    pub(crate) fn flush(&mut self) -> std::io::Result<()> {
        match self {
            Sink::Writer(w) => w.flush(),
            _ => Ok(()),
        }
    }
}

/// Serializes records as JSON lines.
pub fn to_jsonl(records: &[Record]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("records serialize"));
        out.push('\n');
    }
    out
}

/// Parses JSON lines back into records, skipping blank lines.
pub fn parse_jsonl(text: &str) -> Result<Vec<Record>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}
