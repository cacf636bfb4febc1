use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeSet, BinaryHeap};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{MemoryError, MemoryRecord, RecordDraft, RecordKind};
use crate::clock::SimTime;
use crate::text;

/// Append-only session history, optionally mirrored to a line-delimited file.
#[derive(Debug, Default)]
pub struct MemoryStore {
    records: Vec<MemoryRecord>,
    sink: Option<BufWriter<File>>,
}

impl MemoryStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Store that also appends every record to `path`.
    pub fn with_sink(path: &Path) -> Result<Self, MemoryError> {
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| MemoryError::io(path, e))?;
        Ok(Self { records: Vec::new(), sink: Some(BufWriter::new(file)) })
    }

    /// Mirrors later appends to `path`; records already held are not rewritten.
    pub fn attach_sink(&mut self, path: &Path) -> Result<(), MemoryError> {
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| MemoryError::io(path, e))?;
        self.sink = Some(BufWriter::new(file));
        Ok(())
    }

    /// Reads a session file written through a sink.
    pub fn load(path: &Path) -> Result<Self, MemoryError> {
        let file = File::open(path).map_err(|e| MemoryError::io(path, e))?;
        let mut store = Self::new();
        for (n, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| MemoryError::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let record: MemoryRecord =
                serde_json::from_str(&line).map_err(|e| MemoryError::Parse(format!("line {}: {e}", n + 1)))?;
            store.restore(record)?;
        }
        Ok(store)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[MemoryRecord] {
        &self.records
    }

    pub fn get(&self, record_id: u64) -> Option<&MemoryRecord> {
        let idx = usize::try_from(record_id).ok()?.checked_sub(1)?;
        self.records.get(idx)
    }

    pub fn last_timestamp(&self) -> SimTime {
        self.records.last().map(|r| r.timestamp).unwrap_or(SimTime::ZERO)
    }

    pub fn count(&self, kind: RecordKind) -> usize {
        self.records.iter().filter(|r| r.kind == kind).count()
    }

    /// Last `n` records of the given kinds, oldest first.
    pub fn latest(&self, n: usize, pred: impl Fn(RecordKind) -> bool) -> Vec<MemoryRecord> {
        let mut out: Vec<MemoryRecord> = self.records.iter().rev().filter(|r| pred(r.kind)).take(n).cloned().collect();
        out.reverse();
        out
    }

    /// Stores a record and returns its id. Ids are 1, 2, 3, ...
    pub fn append(&mut self, draft: RecordDraft) -> Result<u64, MemoryError> {
        if let Some(link) = draft.missing_link() {
            return Err(MemoryError::MissingLink { kind: draft.kind, link });
        }
        let last = self.last_timestamp();
        if draft.timestamp < last {
            return Err(MemoryError::ClockViolation { last, got: draft.timestamp });
        }
        let record = MemoryRecord {
            record_id: self.records.len() as u64 + 1,
            kind: draft.kind,
            timestamp: draft.timestamp,
            text: draft.text,
            links: draft.links,
        };
        self.write_sink(&record)?;
        let id = record.record_id;
        self.records.push(record);
        Ok(id)
    }

    /// Re-inserts a record with its original id. Restoring a record that is
    /// already stored unchanged is a no-op.
    pub fn restore(&mut self, record: MemoryRecord) -> Result<u64, MemoryError> {
        if let Some(existing) = self.get(record.record_id) {
            return if *existing == record {
                Ok(record.record_id)
            } else {
                Err(MemoryError::Conflict(record.record_id))
            };
        }
        if record.record_id != self.records.len() as u64 + 1 {
            return Err(MemoryError::OutOfOrder { expected: self.records.len() as u64 + 1, got: record.record_id });
        }
        let id = self.append(RecordDraft {
            kind: record.kind,
            timestamp: record.timestamp,
            text: record.text.clone(),
            links: record.links.clone(),
        })?;
        debug_assert_eq!(self.records.last(), Some(&record));
        Ok(id)
    }

    fn write_sink(&mut self, record: &MemoryRecord) -> Result<(), MemoryError> {
        if let Some(sink) = self.sink.as_mut() {
            let line = serde_json::to_string(record).map_err(|e| MemoryError::Parse(e.to_string()))?;
            writeln!(sink, "{line}").and_then(|_| sink.flush()).map_err(|e| MemoryError::Sink(e.to_string()))?;
        }
        Ok(())
    }

    /// Top `k` records by score, best first. Equal scores go to the higher
    /// record id.
    pub fn retrieve(&self, query: &str, k: usize, now: SimTime, scorer: &dyn RecordScorer) -> Vec<MemoryRecord> {
        self.retrieve_where(query, k, now, scorer, |_| true)
    }

    /// [`MemoryStore::retrieve`] restricted to records accepted by `keep`.
    pub fn retrieve_where(
        &self,
        query: &str,
        k: usize,
        now: SimTime,
        scorer: &dyn RecordScorer,
        keep: impl Fn(&MemoryRecord) -> bool,
    ) -> Vec<MemoryRecord> {
        if k == 0 {
            return Vec::new();
        }
        let query = Query::new(query);
        let mut heap: BinaryHeap<Reverse<Ranked>> = BinaryHeap::with_capacity(k + 1);
        for (idx, record) in self.records.iter().enumerate() {
            if !keep(record) {
                continue;
            }
            let ranked = Ranked { score: scorer.score(&query, record, now), record_id: record.record_id, idx };
            if heap.len() < k {
                heap.push(Reverse(ranked));
            } else if heap.peek().is_some_and(|Reverse(worst)| ranked > *worst) {
                heap.pop();
                heap.push(Reverse(ranked));
            }
        }
        let mut top: Vec<Ranked> = heap.into_iter().map(|Reverse(r)| r).collect();
        top.sort_by(|a, b| b.cmp(a));
        top.into_iter().map(|r| self.records[r.idx].clone()).collect()
    }
}

#[derive(Debug, Clone, Copy)]
struct Ranked {
    score: f64,
    record_id: u64,
    idx: usize,
}

impl Ord for Ranked {
    fn cmp(&self, other: &Self) -> Ordering {
        self.score.total_cmp(&other.score).then(self.record_id.cmp(&other.record_id))
    }
}

impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Ranked {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Ranked {}

/// A retrieval query with its content terms precomputed.
#[derive(Debug, Clone)]
pub struct Query {
    pub text: String,
    pub terms: BTreeSet<String>,
}

impl Query {
    pub fn new(text: &str) -> Self {
        Self { text: text.to_string(), terms: text::content_terms(text) }
    }
}

pub trait RecordScorer {
    fn score(&self, query: &Query, record: &MemoryRecord, now: SimTime) -> f64;
}

/// Shared content terms, halved for every `half_life` of record age.
#[derive(Debug, Clone)]
pub struct RecencyLexicalScorer {
    pub half_life_secs: f64,
}

pub const DEFAULT_HALF_LIFE_SECS: f64 = 120.0;

impl Default for RecencyLexicalScorer {
    fn default() -> Self {
        Self { half_life_secs: DEFAULT_HALF_LIFE_SECS }
    }
}

impl RecordScorer for RecencyLexicalScorer {
    fn score(&self, query: &Query, record: &MemoryRecord, now: SimTime) -> f64 {
        let shared = text::overlap(&query.terms, &text::content_terms(&record.text)) as f64;
        let age = now.saturating_sub(record.timestamp).as_secs_f64();
        shared * 0.5f64.powf(age / self.half_life_secs)
    }
}
