//! Infrastructure repository and publication/discovery engine.
//!
//! The repository is a property graph of domains, nodes and links. Nodes
//! join by publication and leave by removal; subscribers receive
//! node-joined/node-left events. Mutations are serialized behind a single
//! writer lock; snapshots are consistent point-in-time copies. An optional
//! append-only journal (one JSON event per line) makes the repository
//! recoverable across restarts.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use parking_lot::RwLock;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::{Millis, Tier};

#[derive(Debug, Error)]
pub enum InfraError {
    #[error("node {0:?} is already published")]
    DuplicateNode(String),
    #[error("unknown node {0:?}")]
    UnknownNode(String),
    #[error("link ({0:?}, {1:?}) references an absent node")]
    DanglingLink(String, String),
    #[error("invalid node {id:?}: {reason}")]
    InvalidNode { id: String, reason: String },
    #[error("invalid link ({a:?}, {b:?}): {reason}")]
    InvalidLink {
        a: String,
        b: String,
        reason: String,
    },
    #[error("subscription for {0:?} already exists")]
    DuplicateSubscription(String),
    #[error("no subscription for {0:?}")]
    UnknownSubscription(String),
    #[error("journal error: {0}")]
    Journal(String),
}

/// Whether a node is currently part of the infrastructure. Left nodes are
/// tombstoned for audit and excluded from snapshots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum NodeStatus {
    #[default]
    Joined,
    Left,
}

/// A cloud or fog node as stored in the repository.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: String,
    pub domain_id: String,
    pub tier: Tier,
    /// Capacity in millicores.
    pub cpu_cap: u64,
    /// Capacity in MB.
    pub memory_cap: u64,
    /// Capacity in MB.
    pub disk_cap: u64,
    /// Work units per millisecond.
    pub processing_rate: u64,
    /// Cost units per resource unit.
    pub cpu_price: u64,
    pub memory_price: u64,
    pub disk_price: u64,
    #[serde(default)]
    pub status: NodeStatus,
}

impl NodeRecord {
    pub fn capacity(&self) -> crate::types::Resources {
        crate::types::Resources::new(self.cpu_cap, self.memory_cap, self.disk_cap)
    }
}

/// An undirected link between two nodes; one record per unordered pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkRecord {
    pub endpoint_a: String,
    pub endpoint_b: String,
    pub latency: Millis,
    /// MB per second.
    pub bandwidth: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainRecord {
    pub id: String,
    pub node_ids: Vec<String>,
}

/// Point-in-time copy of the repository contents (joined nodes only).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct InfrastructureGraph {
    pub domains: Vec<DomainRecord>,
    pub nodes: Vec<NodeRecord>,
    pub links: Vec<LinkRecord>,
}

impl InfrastructureGraph {
    pub fn node(&self, id: &str) -> Option<&NodeRecord> {
        self.nodes.iter().find(|n| n.id == id)
    }

    /// Latency between two distinct nodes; `None` means unreachable.
    pub fn link_latency(&self, a: &str, b: &str) -> Option<Millis> {
        if a == b {
            return Some(0);
        }
        self.links
            .iter()
            .find(|l| {
                (l.endpoint_a == a && l.endpoint_b == b) || (l.endpoint_a == b && l.endpoint_b == a)
            })
            .map(|l| l.latency)
    }

    pub fn link_bandwidth(&self, a: &str, b: &str) -> Option<u64> {
        self.links
            .iter()
            .find(|l| {
                (l.endpoint_a == a && l.endpoint_b == b) || (l.endpoint_a == b && l.endpoint_b == a)
            })
            .map(|l| l.bandwidth)
    }

    /// Graph invariant check used by snapshot-consistency tests: every link
    /// endpoint must be a present node.
    pub fn invariant_violations(&self) -> Vec<String> {
        let ids: BTreeSet<&str> = self.nodes.iter().map(|n| n.id.as_str()).collect();
        let mut out = Vec::new();
        for l in &self.links {
            for end in [&l.endpoint_a, &l.endpoint_b] {
                if !ids.contains(end.as_str()) {
                    out.push(format!(
                        "link ({}, {}) names absent node {end}",
                        l.endpoint_a, l.endpoint_b
                    ));
                }
            }
        }
        out
    }
}

/// An active notification subscription.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subscription {
    pub subscriber_uri: String,
    /// Repository logical clock (mutation count) at subscribe time.
    pub created_at: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeEventKind {
    NodeJoined,
    NodeLeft,
}

/// The notification payload delivered to subscribers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeEvent {
    pub event_id: u64,
    #[serde(rename = "type")]
    pub kind: NodeEventKind,
    pub node: NodeRecord,
}

/// Delivery backend for notifications. The transport may fail or deliver
/// more than once; receivers de-duplicate by event id.
pub trait NotificationTransport {
    fn deliver(&self, uri: &str, event: &NodeEvent) -> Result<(), String>;
}

/// Receiver-side inbox turning at-least-once transport into exactly-once
/// observation, preserving event order.
#[derive(Debug, Default)]
pub struct EventInbox {
    seen: BTreeSet<u64>,
    events: Vec<NodeEvent>,
}

impl EventInbox {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns false when the event was already observed.
    pub fn accept(&mut self, event: NodeEvent) -> bool {
        if !self.seen.insert(event.event_id) {
            return false;
        }
        self.events.push(event);
        true
    }

    pub fn events(&self) -> &[NodeEvent] {
        &self.events
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "kebab-case")]
enum JournalEntry {
    Publish {
        node: NodeRecord,
        links: Vec<LinkRecord>,
    },
    Remove {
        id: String,
    },
    Subscribe {
        uri: String,
    },
    Unsubscribe {
        uri: String,
    },
}

#[derive(Default)]
struct SubscriptionState {
    info: Subscription,
    outbox: VecDeque<NodeEvent>,
}

#[derive(Default)]
struct RepoState {
    domains: BTreeMap<String, BTreeSet<String>>,
    nodes: BTreeMap<String, NodeRecord>,
    tombstones: BTreeMap<String, NodeRecord>,
    links: BTreeMap<(String, String), LinkRecord>,
    subscriptions: BTreeMap<String, SubscriptionState>,
    next_event_id: u64,
    mutation_seq: u64,
}

fn link_key(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

/// The infrastructure repository. Single writer, many readers; reads take a
/// shared lock over the latest committed state.
pub struct Repository {
    state: RwLock<RepoState>,
    journal: Option<parking_lot::Mutex<std::fs::File>>,
    journal_path: Option<PathBuf>,
}

impl Default for Repository {
    fn default() -> Self {
        Self::new()
    }
}

impl Repository {
    /// In-memory repository without persistence.
    pub fn new() -> Self {
        Repository {
            state: RwLock::new(RepoState::default()),
            journal: None,
            journal_path: None,
        }
    }

    /// Journal-backed repository. Replays any existing journal at the given
    /// path, then appends subsequent mutations to it.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, InfraError> {
        let path = path.as_ref().to_path_buf();
        let mut repo = Repository::new();
        if path.exists() {
            let file =
                std::fs::File::open(&path).map_err(|e| InfraError::Journal(e.to_string()))?;
            for line in std::io::BufReader::new(file).lines() {
                let line = line.map_err(|e| InfraError::Journal(e.to_string()))?;
                if line.trim().is_empty() {
                    continue;
                }
                let entry: JournalEntry =
                    serde_json::from_str(&line).map_err(|e| InfraError::Journal(e.to_string()))?;
                repo.replay(entry)?;
            }
        }
        let file = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| InfraError::Journal(e.to_string()))?;
        repo.journal = Some(parking_lot::Mutex::new(file));
        repo.journal_path = Some(path);
        Ok(repo)
    }

    fn replay(&mut self, entry: JournalEntry) -> Result<(), InfraError> {
        match entry {
            JournalEntry::Publish { node, links } => self.publish_node(node, links).map(|_| ()),
            JournalEntry::Remove { id } => self.remove_node(&id),
            JournalEntry::Subscribe { uri } => self.subscribe(&uri).map(|_| ()),
            JournalEntry::Unsubscribe { uri } => self.unsubscribe(&uri),
        }
    }

    fn journal_append(&self, entry: &JournalEntry) -> Result<(), InfraError> {
        if let Some(file) = &self.journal {
            let mut file = file.lock();
            let line =
                serde_json::to_string(entry).map_err(|e| InfraError::Journal(e.to_string()))?;
            writeln!(file, "{line}").map_err(|e| InfraError::Journal(e.to_string()))?;
        }
        Ok(())
    }

    /// Publish a node together with its adjacent links. Queues a
    /// node-joined event for every active subscription.
    pub fn publish_node(
        &self,
        node: NodeRecord,
        adjacent_links: Vec<LinkRecord>,
    ) -> Result<(), InfraError> {
        let mut node = node;
        node.status = NodeStatus::Joined;
        if node.processing_rate == 0 {
            return Err(InfraError::InvalidNode {
                id: node.id.clone(),
                reason: "processing rate must be at least 1 work unit/ms".into(),
            });
        }
        {
            let mut st = self.state.write();
            if st.nodes.contains_key(&node.id) {
                return Err(InfraError::DuplicateNode(node.id));
            }
            for link in &adjacent_links {
                if link.endpoint_a != node.id && link.endpoint_b != node.id {
                    return Err(InfraError::InvalidLink {
                        a: link.endpoint_a.clone(),
                        b: link.endpoint_b.clone(),
                        reason: format!("link does not touch the published node {:?}", node.id),
                    });
                }
                if link.endpoint_a == link.endpoint_b {
                    return Err(InfraError::InvalidLink {
                        a: link.endpoint_a.clone(),
                        b: link.endpoint_b.clone(),
                        reason: "self links are not allowed".into(),
                    });
                }
                if link.bandwidth == 0 {
                    return Err(InfraError::InvalidLink {
                        a: link.endpoint_a.clone(),
                        b: link.endpoint_b.clone(),
                        reason: "bandwidth must be positive".into(),
                    });
                }
                let other = if link.endpoint_a == node.id {
                    &link.endpoint_b
                } else {
                    &link.endpoint_a
                };
                if !st.nodes.contains_key(other) {
                    return Err(InfraError::DanglingLink(
                        link.endpoint_a.clone(),
                        link.endpoint_b.clone(),
                    ));
                }
            }
            st.tombstones.remove(&node.id);
            st.domains
                .entry(node.domain_id.clone())
                .or_default()
                .insert(node.id.clone());
            st.nodes.insert(node.id.clone(), node.clone());
            for link in &adjacent_links {
                st.links
                    .insert(link_key(&link.endpoint_a, &link.endpoint_b), link.clone());
            }
            st.mutation_seq += 1;
            let event_id = st.next_event_id;
            st.next_event_id += 1;
            let event = NodeEvent {
                event_id,
                kind: NodeEventKind::NodeJoined,
                node: node.clone(),
            };
            for sub in st.subscriptions.values_mut() {
                sub.outbox.push_back(event.clone());
            }
        }
        self.journal_append(&JournalEntry::Publish {
            node,
            links: adjacent_links,
        })
    }

    /// Remove a node: tombstone it, drop its incident links, and queue a
    /// node-left event.
    pub fn remove_node(&self, id: &str) -> Result<(), InfraError> {
        {
            let mut st = self.state.write();
            let mut node = match st.nodes.remove(id) {
                Some(n) => n,
                None => return Err(InfraError::UnknownNode(id.to_string())),
            };
            node.status = NodeStatus::Left;
            if let Some(members) = st.domains.get_mut(&node.domain_id) {
                members.remove(id);
            }
            st.links.retain(|(a, b), _| a != id && b != id);
            st.tombstones.insert(id.to_string(), node.clone());
            st.mutation_seq += 1;
            let event_id = st.next_event_id;
            st.next_event_id += 1;
            let event = NodeEvent {
                event_id,
                kind: NodeEventKind::NodeLeft,
                node,
            };
            for sub in st.subscriptions.values_mut() {
                sub.outbox.push_back(event.clone());
            }
        }
        self.journal_append(&JournalEntry::Remove { id: id.to_string() })
    }

    /// All registered domains with their currently joined node ids. Domains
    /// persist after their last node leaves.
    pub fn list_domains(&self) -> Vec<DomainRecord> {
        let st = self.state.read();
        st.domains
            .iter()
            .map(|(id, members)| DomainRecord {
                id: id.clone(),
                node_ids: members.iter().cloned().collect(),
            })
            .collect()
    }

    /// Consistent point-in-time copy of the graph. Left nodes are excluded.
    pub fn snapshot(&self) -> InfrastructureGraph {
        let st = self.state.read();
        InfrastructureGraph {
            domains: st
                .domains
                .iter()
                .map(|(id, members)| DomainRecord {
                    id: id.clone(),
                    node_ids: members.iter().cloned().collect(),
                })
                .collect(),
            nodes: st.nodes.values().cloned().collect(),
            links: st.links.values().cloned().collect(),
        }
    }

    /// Tombstoned (left) nodes, retained for audit.
    pub fn tombstones(&self) -> Vec<NodeRecord> {
        self.state.read().tombstones.values().cloned().collect()
    }

    pub fn subscribe(&self, subscriber_uri: &str) -> Result<Subscription, InfraError> {
        let sub = {
            let mut st = self.state.write();
            if st.subscriptions.contains_key(subscriber_uri) {
                return Err(InfraError::DuplicateSubscription(
                    subscriber_uri.to_string(),
                ));
            }
            st.mutation_seq += 1;
            let info = Subscription {
                subscriber_uri: subscriber_uri.to_string(),
                created_at: st.mutation_seq,
            };
            st.subscriptions.insert(
                subscriber_uri.to_string(),
                SubscriptionState {
                    info: info.clone(),
                    outbox: VecDeque::new(),
                },
            );
            info
        };
        self.journal_append(&JournalEntry::Subscribe {
            uri: subscriber_uri.to_string(),
        })?;
        Ok(sub)
    }

    pub fn unsubscribe(&self, subscriber_uri: &str) -> Result<(), InfraError> {
        {
            let mut st = self.state.write();
            if st.subscriptions.remove(subscriber_uri).is_none() {
                return Err(InfraError::UnknownSubscription(subscriber_uri.to_string()));
            }
            st.mutation_seq += 1;
        }
        self.journal_append(&JournalEntry::Unsubscribe {
            uri: subscriber_uri.to_string(),
        })
    }

    pub fn subscriptions(&self) -> Vec<Subscription> {
        self.state
            .read()
            .subscriptions
            .values()
            .map(|s| s.info.clone())
            .collect()
    }

    /// Drive notification delivery: push every queued event through the
    /// transport in order. Events stay queued when delivery fails, so
    /// delivery is at-least-once; receivers de-duplicate by event id.
    /// Returns the number of events successfully delivered.
    pub fn pump_notifications(&self, transport: &dyn NotificationTransport) -> usize {
        // Drain under the lock into a work list, then deliver outside it.
        let work: Vec<(String, Vec<NodeEvent>)> = {
            let st = self.state.read();
            st.subscriptions
                .iter()
                .filter(|(_, s)| !s.outbox.is_empty())
                .map(|(uri, s)| (uri.clone(), s.outbox.iter().cloned().collect()))
                .collect()
        };
        let mut delivered_total = 0;
        for (uri, events) in work {
            let mut delivered = 0;
            for event in &events {
                match transport.deliver(&uri, event) {
                    Ok(()) => delivered += 1,
                    // Keep order: stop at the first failure for this
                    // subscriber and retry from it on the next pump.
                    Err(_) => break,
                }
            }
            if delivered > 0 {
                let mut st = self.state.write();
                if let Some(sub) = st.subscriptions.get_mut(&uri) {
                    for _ in 0..delivered {
                        sub.outbox.pop_front();
                    }
                }
            }
            delivered_total += delivered;
        }
        delivered_total
    }

    /// Number of queued, not yet delivered events across all subscribers.
    pub fn pending_notifications(&self) -> usize {
        self.state
            .read()
            .subscriptions
            .values()
            .map(|s| s.outbox.len())
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    pub(crate) fn fog_node(id: &str, domain: &str) -> NodeRecord {
        NodeRecord {
            id: id.into(),
            domain_id: domain.into(),
            tier: Tier::Fog,
            cpu_cap: 4000,
            memory_cap: 8192,
            disk_cap: 100_000,
            processing_rate: 1,
            cpu_price: 2,
            memory_price: 1,
            disk_price: 1,
            status: NodeStatus::Joined,
        }
    }

    fn link(a: &str, b: &str, latency: Millis) -> LinkRecord {
        LinkRecord {
            endpoint_a: a.into(),
            endpoint_b: b.into(),
            latency,
            bandwidth: 100,
        }
    }

    struct Collector(parking_lot::Mutex<BTreeMap<String, EventInbox>>);

    impl Collector {
        fn new() -> Self {
            Collector(parking_lot::Mutex::new(BTreeMap::new()))
        }
        fn events(&self, uri: &str) -> Vec<NodeEvent> {
            self.0
                .lock()
                .get(uri)
                .map(|i| i.events().to_vec())
                .unwrap_or_default()
        }
    }

    impl NotificationTransport for Collector {
        fn deliver(&self, uri: &str, event: &NodeEvent) -> Result<(), String> {
            self.0
                .lock()
                .entry(uri.to_string())
                .or_default()
                .accept(event.clone());
            Ok(())
        }
    }

    #[test]
    fn publish_into_empty_repo() {
        let repo = Repository::new();
        repo.publish_node(fog_node("f1", "fog-a"), vec![]).unwrap();
        let snap = repo.snapshot();
        assert_eq!(snap.nodes.len(), 1);
        assert_eq!(snap.links.len(), 0);
    }

    #[test]
    fn publish_second_node_with_link() {
        let repo = Repository::new();
        repo.publish_node(fog_node("f1", "fog-a"), vec![]).unwrap();
        repo.publish_node(fog_node("f2", "fog-a"), vec![link("f1", "f2", 1)])
            .unwrap();
        let snap = repo.snapshot();
        assert_eq!(snap.nodes.len(), 2);
        assert_eq!(snap.links.len(), 1);
        assert_eq!(snap.link_latency("f1", "f2"), Some(1));
        assert_eq!(snap.link_latency("f2", "f1"), Some(1));
    }

    #[test]
    fn double_publish_is_rejected() {
        let repo = Repository::new();
        repo.publish_node(fog_node("f1", "fog-a"), vec![]).unwrap();
        let err = repo
            .publish_node(fog_node("f1", "fog-a"), vec![])
            .unwrap_err();
        assert!(matches!(err, InfraError::DuplicateNode(_)));
    }

    #[test]
    fn dangling_link_is_rejected() {
        let repo = Repository::new();
        let err = repo
            .publish_node(fog_node("f1", "fog-a"), vec![link("f1", "ghost", 1)])
            .unwrap_err();
        assert!(matches!(err, InfraError::DanglingLink(_, _)));
    }

    #[test]
    fn remove_drops_incident_links_and_tombstones() {
        let repo = Repository::new();
        repo.publish_node(fog_node("f1", "fog-a"), vec![]).unwrap();
        repo.publish_node(fog_node("f2", "fog-a"), vec![link("f1", "f2", 1)])
            .unwrap();
        repo.remove_node("f2").unwrap();
        let snap = repo.snapshot();
        assert_eq!(snap.nodes.len(), 1);
        assert_eq!(snap.links.len(), 0);
        assert_eq!(repo.tombstones().len(), 1);
        assert_eq!(repo.tombstones()[0].status, NodeStatus::Left);
    }

    #[test]
    fn remove_unknown_node_fails() {
        let repo = Repository::new();
        assert!(matches!(
            repo.remove_node("zz"),
            Err(InfraError::UnknownNode(_))
        ));
    }

    #[test]
    fn domains_listing_and_retention() {
        let repo = Repository::new();
        assert!(repo.list_domains().is_empty());
        repo.publish_node(fog_node("c1", "cloud-a"), vec![])
            .unwrap();
        repo.publish_node(fog_node("f1", "fog-a"), vec![]).unwrap();
        repo.publish_node(fog_node("f2", "fog-b"), vec![]).unwrap();
        assert_eq!(repo.list_domains().len(), 3);
        // A domain outlives its last node.
        repo.remove_node("f2").unwrap();
        let domains = repo.list_domains();
        assert_eq!(domains.len(), 3);
        let fog_b = domains.iter().find(|d| d.id == "fog-b").unwrap();
        assert!(fog_b.node_ids.is_empty());
    }

    #[test]
    fn publish_remove_leaves_prior_snapshot() {
        let repo = Repository::new();
        repo.publish_node(fog_node("f1", "fog-a"), vec![]).unwrap();
        let before = repo.snapshot();
        repo.publish_node(fog_node("f2", "fog-a"), vec![link("f1", "f2", 3)])
            .unwrap();
        repo.remove_node("f2").unwrap();
        let after = repo.snapshot();
        assert_eq!(before.nodes, after.nodes);
        assert_eq!(before.links, after.links);
        assert_eq!(before.domains, after.domains);
    }

    #[test]
    fn subscribe_then_publish_delivers_exactly_one_event() {
        let repo = Repository::new();
        repo.subscribe("http://cb").unwrap();
        repo.publish_node(fog_node("f3", "fog-a"), vec![]).unwrap();
        let collector = Collector::new();
        repo.pump_notifications(&collector);
        repo.pump_notifications(&collector);
        let events = collector.events("http://cb");
        assert_eq!(events.len(), 1);
        assert_eq!(events[0].kind, NodeEventKind::NodeJoined);
        assert_eq!(events[0].node.id, "f3");
    }

    #[test]
    fn unsubscribe_stops_delivery() {
        let repo = Repository::new();
        repo.subscribe("http://cb").unwrap();
        repo.unsubscribe("http://cb").unwrap();
        repo.publish_node(fog_node("f4", "fog-a"), vec![]).unwrap();
        let collector = Collector::new();
        repo.pump_notifications(&collector);
        assert!(collector.events("http://cb").is_empty());
    }

    #[test]
    fn duplicate_subscription_is_rejected() {
        let repo = Repository::new();
        repo.subscribe("http://cb").unwrap();
        assert!(matches!(
            repo.subscribe("http://cb"),
            Err(InfraError::DuplicateSubscription(_))
        ));
        assert!(matches!(
            repo.unsubscribe("http://other"),
            Err(InfraError::UnknownSubscription(_))
        ));
    }

    #[test]
    fn snapshot_is_never_torn_under_concurrent_publishes() {
        let repo = Arc::new(Repository::new());
        repo.publish_node(fog_node("seed", "fog-a"), vec![])
            .unwrap();
        let writer = {
            let repo = Arc::clone(&repo);
            std::thread::spawn(move || {
                for i in 0..200 {
                    let id = format!("n{i}");
                    repo.publish_node(fog_node(&id, "fog-a"), vec![link(&id, "seed", 1)])
                        .unwrap();
                }
            })
        };
        let mut last_len = 0;
        for _ in 0..500 {
            let snap = repo.snapshot();
            assert!(snap.invariant_violations().is_empty());
            assert!(snap.nodes.len() >= last_len);
            last_len = snap.nodes.len();
        }
        writer.join().unwrap();
        assert!(repo.snapshot().invariant_violations().is_empty());
    }

    #[test]
    fn journal_replay_restores_state() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("repo.jsonl");
        {
            let repo = Repository::open(&path).unwrap();
            repo.publish_node(fog_node("f1", "fog-a"), vec![]).unwrap();
            repo.publish_node(fog_node("f2", "fog-a"), vec![link("f1", "f2", 2)])
                .unwrap();
            repo.publish_node(fog_node("f3", "fog-a"), vec![link("f3", "f1", 9)])
                .unwrap();
            repo.remove_node("f3").unwrap();
            repo.subscribe("http://cb").unwrap();
        }
        let reopened = Repository::open(&path).unwrap();
        let snap = reopened.snapshot();
        assert_eq!(snap.nodes.len(), 2);
        assert_eq!(snap.link_latency("f1", "f2"), Some(2));
        assert_eq!(reopened.tombstones().len(), 1);
        assert_eq!(reopened.subscriptions().len(), 1);
    }

    #[test]
    fn zero_rate_node_is_invalid() {
        let repo = Repository::new();
        let mut n = fog_node("f1", "fog-a");
        n.processing_rate = 0;
        assert!(matches!(
            repo.publish_node(n, vec![]),
            Err(InfraError::InvalidNode { .. })
        ));
    }
}
