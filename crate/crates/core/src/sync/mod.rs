//! Versioned replica state and propagation planning.
//!
//! Each `(item, component)` has a single head revision. An update written at
//! one replica bumps the head and emits one propagation task for every other
//! replica in the component's scope. Acknowledging a task stores the digest
//! the target actually holds; a digest that differs from the revision's is
//! kept and surfaces as a conflict in [`audit`].
//!
//! Logical time is a global sequence: every update and every logged ack must
//! carry a time strictly greater than anything seen before.

mod audit;
pub mod log;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::{NetworkError, ReplicaId, SiteNetwork};
use crate::pattern::{scope_of_pattern, Catalog, ComponentId, ConsistencyLevel, ItemId, Scope};

pub use audit::{audit, Finding, FindingKind, InconsistencyReport, LanguageRelation};

/// Default allowance, in logical-time units, for acking a bounded task.
pub const DEFAULT_BOUNDED_DEADLINE: u64 = 10;

/// Opaque token standing for the meaning of a piece of content. Two
/// translations are consistent iff they carry the same digest.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Digest(pub String);

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Digest {
    fn from(s: &str) -> Self {
        Digest(s.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TaskId(pub u64);

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ComponentKey {
    pub item_id: ItemId,
    pub component_id: ComponentId,
}

impl ComponentKey {
    pub fn new(item_id: ItemId, component_id: ComponentId) -> Self {
        Self {
            item_id,
            component_id,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Revision {
    pub counter: u64,
    pub digest: Digest,
    pub author: ReplicaId,
    pub logical_time: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplicaEntry {
    pub item_id: ItemId,
    pub component_id: ComponentId,
    pub replica: ReplicaId,
    pub revision: Revision,
    /// Digest actually held by the replica; differs from `revision.digest`
    /// after a divergent ack.
    pub digest: Digest,
}

impl ReplicaEntry {
    pub fn is_divergent(&self) -> bool {
        self.digest != self.revision.digest
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UpdateEvent {
    pub event_id: String,
    pub item_id: ItemId,
    pub component_id: ComponentId,
    pub at: ReplicaId,
    pub new_digest: Digest,
    pub logical_time: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropagationTask {
    pub task_id: TaskId,
    pub item_id: ItemId,
    pub component_id: ComponentId,
    pub target: ReplicaId,
    pub to_revision: Revision,
    pub level: ConsistencyLevel,
    /// Absolute logical time by which a bounded task should be acked.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deadline: Option<u64>,
}

impl PropagationTask {
    fn order_key(&self) -> impl Ord + '_ {
        (
            self.level,
            self.deadline.unwrap_or(u64::MAX),
            self.to_revision.logical_time,
            &self.target,
            &self.item_id,
            &self.component_id,
            self.task_id,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskClosure {
    Acked,
    Superseded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyncConfig {
    pub bounded_deadline: u64,
}

impl Default for SyncConfig {
    fn default() -> Self {
        Self {
            bounded_deadline: DEFAULT_BOUNDED_DEADLINE,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SyncError {
    #[error("unknown item {0}")]
    UnknownItem(ItemId),
    #[error("item {item} has no component {component}")]
    UnknownComponent {
        item: ItemId,
        component: ComponentId,
    },
    #[error("write at {replica} is outside the scope of {item}/{component}")]
    OutOfScopeWrite {
        item: ItemId,
        component: ComponentId,
        replica: ReplicaId,
    },
    #[error("stale event: logical time {got} does not exceed {last}")]
    StaleEvent { last: u64, got: u64 },
    #[error("empty digest")]
    EmptyDigest,
    #[error("unknown task {0}")]
    UnknownTask(TaskId),
    #[error("task {0} was already acked")]
    AlreadyAcked(TaskId),
    #[error("task {0} was superseded by a newer revision")]
    Superseded(TaskId),
    #[error("{0}")]
    Network(String),
}

impl From<NetworkError> for SyncError {
    fn from(e: NetworkError) -> Self {
        SyncError::Network(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Held {
    revision: Revision,
    digest: Digest,
}

/// Replica state for every content component. Single writer; clone it to
/// get a snapshot for concurrent readers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyncState {
    config: SyncConfig,
    heads: BTreeMap<ComponentKey, Revision>,
    entries: BTreeMap<ComponentKey, BTreeMap<ReplicaId, Held>>,
    pending: BTreeMap<TaskId, PropagationTask>,
    closed: BTreeMap<TaskId, TaskClosure>,
    last_time: Option<u64>,
    next_task: u64,
}

impl Default for SyncState {
    fn default() -> Self {
        Self::new(SyncConfig::default())
    }
}

/// Resolves the scope and level of one catalog component.
pub(crate) fn component_policy(
    net: &SiteNetwork,
    catalog: &Catalog,
    key: &ComponentKey,
) -> Result<(Scope, ConsistencyLevel), SyncError> {
    let item = catalog
        .get(&key.item_id)
        .ok_or_else(|| SyncError::UnknownItem(key.item_id.clone()))?;
    let component =
        item.component(&key.component_id)
            .ok_or_else(|| SyncError::UnknownComponent {
                item: key.item_id.clone(),
                component: key.component_id.clone(),
            })?;
    let scope = scope_of_pattern(net, &item.origin, item.pattern_of(component))?;
    Ok((scope, item.level_of(component)))
}

impl SyncState {
    pub fn new(config: SyncConfig) -> Self {
        Self {
            config,
            heads: BTreeMap::new(),
            entries: BTreeMap::new(),
            pending: BTreeMap::new(),
            closed: BTreeMap::new(),
            last_time: None,
            next_task: 1,
        }
    }

    pub fn config(&self) -> SyncConfig {
        self.config
    }

    pub fn last_time(&self) -> Option<u64> {
        self.last_time
    }

    fn check_time(&self, t: u64) -> Result<(), SyncError> {
        match self.last_time {
            Some(last) if t <= last => Err(SyncError::StaleEvent { last, got: t }),
            _ => Ok(()),
        }
    }

    /// Advances the logical clock without changing replica state. Used for
    /// logged acks, which carry their own time.
    pub fn advance_clock(&mut self, t: u64) -> Result<(), SyncError> {
        self.check_time(t)?;
        self.last_time = Some(t);
        Ok(())
    }

    /// Applies a write at `ev.at`, returning the propagation tasks it emits.
    /// Pending tasks of the same component are superseded.
    pub fn apply_update(
        &mut self,
        net: &SiteNetwork,
        catalog: &Catalog,
        ev: &UpdateEvent,
    ) -> Result<Vec<PropagationTask>, SyncError> {
        let key = ComponentKey::new(ev.item_id.clone(), ev.component_id.clone());
        let (scope, level) = component_policy(net, catalog, &key)?;
        self.check_time(ev.logical_time)?;
        if ev.new_digest.0.is_empty() {
            return Err(SyncError::EmptyDigest);
        }
        if !scope.contains(&ev.at) {
            return Err(SyncError::OutOfScopeWrite {
                item: key.item_id,
                component: key.component_id,
                replica: ev.at.clone(),
            });
        }

        let counter = self.heads.get(&key).map_or(1, |r| r.counter + 1);
        let revision = Revision {
            counter,
            digest: ev.new_digest.clone(),
            author: ev.at.clone(),
            logical_time: ev.logical_time,
        };

        let stale: Vec<TaskId> = self
            .pending
            .values()
            .filter(|t| t.item_id == key.item_id && t.component_id == key.component_id)
            .map(|t| t.task_id)
            .collect();
        for id in stale {
            self.pending.remove(&id);
            self.closed.insert(id, TaskClosure::Superseded);
        }

        self.entries.entry(key.clone()).or_default().insert(
            ev.at.clone(),
            Held {
                revision: revision.clone(),
                digest: ev.new_digest.clone(),
            },
        );

        let deadline = (level == ConsistencyLevel::Bounded)
            .then(|| ev.logical_time.saturating_add(self.config.bounded_deadline));
        let mut tasks = Vec::with_capacity(scope.len().saturating_sub(1));
        for target in scope.iter().filter(|r| **r != ev.at) {
            let task = PropagationTask {
                task_id: TaskId(self.next_task),
                item_id: key.item_id.clone(),
                component_id: key.component_id.clone(),
                target: target.clone(),
                to_revision: revision.clone(),
                level,
                deadline,
            };
            self.next_task += 1;
            self.pending.insert(task.task_id, task.clone());
            tasks.push(task);
        }

        self.heads.insert(key, revision);
        self.last_time = Some(ev.logical_time);
        Ok(tasks)
    }

    /// Records that the task's target now holds `acked_digest`.
    pub fn ack_task(&mut self, task_id: TaskId, acked_digest: &Digest) -> Result<(), SyncError> {
        if acked_digest.0.is_empty() {
            return Err(SyncError::EmptyDigest);
        }
        let task = match self.pending.remove(&task_id) {
            Some(task) => task,
            None => {
                return Err(match self.closed.get(&task_id) {
                    Some(TaskClosure::Acked) => SyncError::AlreadyAcked(task_id),
                    Some(TaskClosure::Superseded) => SyncError::Superseded(task_id),
                    None => SyncError::UnknownTask(task_id),
                })
            }
        };
        let key = ComponentKey::new(task.item_id, task.component_id);
        self.entries.entry(key).or_default().insert(
            task.target,
            Held {
                revision: task.to_revision,
                digest: acked_digest.clone(),
            },
        );
        self.closed.insert(task_id, TaskClosure::Acked);
        Ok(())
    }

    pub fn is_pending(&self, task_id: TaskId) -> bool {
        self.pending.contains_key(&task_id)
    }

    pub fn pending(&self) -> impl Iterator<Item = &PropagationTask> {
        self.pending.values()
    }

    pub fn pending_task(&self, task_id: TaskId) -> Option<&PropagationTask> {
        self.pending.get(&task_id)
    }

    /// Pending tasks in execution order: strict before bounded before lazy,
    /// then earliest deadline, oldest revision, target replica.
    pub fn plan(&self) -> Vec<PropagationTask> {
        let mut tasks: Vec<&PropagationTask> = self.pending.values().collect();
        tasks.sort_by(|a, b| a.order_key().cmp(&b.order_key()));
        tasks.into_iter().cloned().collect()
    }

    pub fn head(&self, key: &ComponentKey) -> Option<&Revision> {
        self.heads.get(key)
    }

    pub fn heads(&self) -> impl Iterator<Item = (&ComponentKey, &Revision)> {
        self.heads.iter()
    }

    pub fn entry(&self, key: &ComponentKey, replica: &ReplicaId) -> Option<ReplicaEntry> {
        self.entries
            .get(key)
            .and_then(|m| m.get(replica))
            .map(|held| ReplicaEntry {
                item_id: key.item_id.clone(),
                component_id: key.component_id.clone(),
                replica: replica.clone(),
                revision: held.revision.clone(),
                digest: held.digest.clone(),
            })
    }

    pub fn entries(&self) -> Vec<ReplicaEntry> {
        self.entries
            .iter()
            .flat_map(|(key, m)| {
                m.iter().map(move |(replica, held)| ReplicaEntry {
                    item_id: key.item_id.clone(),
                    component_id: key.component_id.clone(),
                    replica: replica.clone(),
                    revision: held.revision.clone(),
                    digest: held.digest.clone(),
                })
            })
            .collect()
    }

    /// True iff the item has no audit findings and no pending tasks.
    pub fn converged(
        &self,
        net: &SiteNetwork,
        catalog: &Catalog,
        item_id: &ItemId,
    ) -> Result<bool, SyncError> {
        if catalog.get(item_id).is_none() {
            return Err(SyncError::UnknownItem(item_id.clone()));
        }
        if self.pending.values().any(|t| &t.item_id == item_id) {
            return Ok(false);
        }
        Ok(audit(self, net, catalog)
            .findings
            .iter()
            .all(|f| &f.item_id != item_id))
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            config: self.config,
            last_time: self.last_time,
            next_task_id: self.next_task,
            heads: self
                .heads
                .iter()
                .map(|(k, r)| HeadRecord {
                    item_id: k.item_id.clone(),
                    component_id: k.component_id.clone(),
                    revision: r.clone(),
                })
                .collect(),
            entries: self.entries(),
            pending: self.pending.values().cloned().collect(),
            closed: self
                .closed
                .iter()
                .map(|(id, c)| ClosedTask {
                    task_id: *id,
                    closure: *c,
                })
                .collect(),
        }
    }

    pub fn from_snapshot(snapshot: Snapshot) -> Self {
        let mut state = SyncState::new(snapshot.config);
        state.last_time = snapshot.last_time;
        state.next_task = snapshot.next_task_id;
        for h in snapshot.heads {
            state
                .heads
                .insert(ComponentKey::new(h.item_id, h.component_id), h.revision);
        }
        for e in snapshot.entries {
            state
                .entries
                .entry(ComponentKey::new(e.item_id, e.component_id))
                .or_default()
                .insert(
                    e.replica,
                    Held {
                        revision: e.revision,
                        digest: e.digest,
                    },
                );
        }
        for t in snapshot.pending {
            state.pending.insert(t.task_id, t);
        }
        for c in snapshot.closed {
            state.closed.insert(c.task_id, c.closure);
        }
        state
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeadRecord {
    pub item_id: ItemId,
    pub component_id: ComponentId,
    pub revision: Revision,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClosedTask {
    pub task_id: TaskId,
    pub closure: TaskClosure,
}

/// JSON form of a [`SyncState`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snapshot {
    pub config: SyncConfig,
    pub last_time: Option<u64>,
    pub next_task_id: u64,
    pub heads: Vec<HeadRecord>,
    pub entries: Vec<ReplicaEntry>,
    pub pending: Vec<PropagationTask>,
    pub closed: Vec<ClosedTask>,
}
