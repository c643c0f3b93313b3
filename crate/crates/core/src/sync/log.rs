//! Newline-delimited JSON event log.
//!
//! Each line is one record, tagged by `"type"`:
//!
//! ```text
//! {"type":"update","event_id":"e1","item_id":"about","component_id":"main","at":"CA-en","new_digest":"d1","logical_time":1}
//! {"type":"ack","task_id":3,"digest":"d1","logical_time":2}
//! ```
//!
//! Task ids are assigned by the engine from 1 upward in emission order; an
//! update emits its tasks sorted by target replica. Replaying a log from an
//! empty state therefore reproduces the same ids.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Digest, PropagationTask, SyncConfig, SyncError, SyncState, TaskId, UpdateEvent};
use crate::json::to_canonical_line;
use crate::network::SiteNetwork;
use crate::pattern::Catalog;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AckRecord {
    pub task_id: TaskId,
    pub digest: Digest,
    pub logical_time: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LogRecord {
    Update(UpdateEvent),
    Ack(AckRecord),
}

impl LogRecord {
    pub fn logical_time(&self) -> u64 {
        match self {
            LogRecord::Update(u) => u.logical_time,
            LogRecord::Ack(a) => a.logical_time,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LogError {
    #[error("line {line}: malformed record: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: {source}")]
    Rejected { line: usize, source: SyncError },
}

impl LogError {
    pub fn line(&self) -> usize {
        match self {
            LogError::Malformed { line, .. } | LogError::Rejected { line, .. } => *line,
        }
    }
}

/// Parses a log. Blank lines are ignored; line numbers are 1-based.
pub fn parse_log(text: &str) -> Result<Vec<(usize, LogRecord)>, LogError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l)
                .map(|rec| (i + 1, rec))
                .map_err(|e| LogError::Malformed {
                    line: i + 1,
                    message: e.to_string(),
                })
        })
        .collect()
}

pub fn write_log<'a>(records: impl IntoIterator<Item = &'a LogRecord>) -> String {
    let mut out = String::new();
    for rec in records {
        out.push_str(&to_canonical_line(rec).expect("log records always serialize"));
        out.push('\n');
    }
    out
}

impl SyncState {
    /// Applies one log record, returning any tasks emitted by an update.
    pub fn apply_record(
        &mut self,
        net: &SiteNetwork,
        catalog: &Catalog,
        record: &LogRecord,
    ) -> Result<Vec<PropagationTask>, SyncError> {
        match record {
            LogRecord::Update(ev) => self.apply_update(net, catalog, ev),
            LogRecord::Ack(ack) => {
                self.check_time(ack.logical_time)?;
                self.ack_task(ack.task_id, &ack.digest)?;
                self.last_time = Some(ack.logical_time);
                Ok(Vec::new())
            }
        }
    }
}

/// Replays numbered records from an empty state.
pub fn replay_numbered(
    net: &SiteNetwork,
    catalog: &Catalog,
    config: SyncConfig,
    records: &[(usize, LogRecord)],
) -> Result<SyncState, LogError> {
    let mut state = SyncState::new(config);
    for (line, rec) in records {
        state
            .apply_record(net, catalog, rec)
            .map_err(|source| LogError::Rejected {
                line: *line,
                source,
            })?;
    }
    Ok(state)
}

pub fn replay(
    net: &SiteNetwork,
    catalog: &Catalog,
    config: SyncConfig,
    records: &[LogRecord],
) -> Result<SyncState, LogError> {
    let numbered: Vec<(usize, LogRecord)> = records
        .iter()
        .cloned()
        .enumerate()
        .map(|(i, r)| (i + 1, r))
        .collect();
    replay_numbered(net, catalog, config, &numbered)
}
