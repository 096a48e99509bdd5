//! Simulated cloud/fog domains, deterministic clock, and the monitoring
//! engine.
//!
//! The world advances a single millisecond clock as messages, transfers and
//! processing delays are charged against it. Every change is appended to a
//! totally ordered event log, which audits and latency accounting read back.

mod config;

pub use config::{pair_key, PaasModule, SimConfig, CLIENT_ENDPOINT, REGISTRY_ENDPOINT};

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::appgraph::{structure_time, ApplicationDescriptor, EstimateError};
use crate::chaining::ChainLink;
use crate::infra::InfrastructureGraph;
use crate::migration::{MigrationReason, MigrationRequest};
use crate::placement::Assignment;
use crate::types::{Millis, Resources, Tier};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SimError {
    #[error("unknown node {0:?}")]
    UnknownNode(String),
    #[error("unknown instance {0:?}")]
    UnknownInstance(String),
    #[error("instance {0:?} is not running")]
    InstanceNotRunning(String),
    #[error("component {component:?} of {app:?} already has a live instance")]
    DuplicateInstance { app: String, component: String },
    #[error("node {node:?} lacks capacity for {component:?} ({detail})")]
    CapacityExceeded {
        node: String,
        component: String,
        detail: String,
    },
    #[error("no route between {0:?} and {1:?}")]
    Unreachable(String, String),
    #[error("application {0:?} is not running")]
    AppNotRunning(String),
    #[error("chain is missing a link from {0:?} to {1:?}")]
    ChainIncomplete(String, String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InstanceState {
    Created,
    Running,
    Stopped,
}

/// A component instance hosted on a simulated node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub id: String,
    pub app: String,
    pub component: String,
    pub node: String,
    pub state: InstanceState,
    pub demands: Resources,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DisturbanceKind {
    Mobility,
    Bottleneck,
}

impl From<DisturbanceKind> for MigrationReason {
    fn from(kind: DisturbanceKind) -> Self {
        match kind {
            DisturbanceKind::Mobility => MigrationReason::Mobility,
            DisturbanceKind::Bottleneck => MigrationReason::Bottleneck,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SimEventKind {
    Message {
        from: String,
        to: String,
        latency: Millis,
        label: String,
    },
    Transfer {
        from: String,
        to: String,
        size_mb: u64,
        duration: Millis,
    },
    Processing {
        endpoint: String,
        duration: Millis,
        label: String,
    },
    InstanceChange {
        instance: String,
        app: String,
        component: String,
        node: String,
        state: InstanceState,
        demands: Resources,
    },
    InjectionScheduled {
        id: u64,
        disturbance: DisturbanceKind,
        node: String,
        at: Millis,
    },
    DisturbanceObserved {
        id: u64,
        disturbance: DisturbanceKind,
        node: String,
    },
}

/// One entry of the totally ordered event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimEvent {
    pub time: Millis,
    pub seq: u64,
    #[serde(flatten)]
    pub kind: SimEventKind,
}

#[derive(Debug, Clone)]
struct ScheduledDisturbance {
    id: u64,
    kind: DisturbanceKind,
    node: String,
    at: Millis,
}

#[derive(Debug, Clone)]
struct NodeInfo {
    tier: Tier,
    capacity: Resources,
    rate: u64,
}

/// A forwarding-table entry: one outbound chain hop installed on a node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForwardingEntry {
    pub app: String,
    pub link: ChainLink,
}

/// The simulated world. Single-threaded by construction; callers serialize
/// access through one command interface.
pub struct SimWorld {
    config: SimConfig,
    clock: Millis,
    seq: u64,
    events: Vec<SimEvent>,
    nodes: BTreeMap<String, NodeInfo>,
    usage: BTreeMap<String, Resources>,
    instances: BTreeMap<String, Instance>,
    next_instance: u64,
    // node id -> (app, from component, to component) -> entry
    forwarding: BTreeMap<String, BTreeMap<(String, String, String), ForwardingEntry>>,
    scheduled: Vec<ScheduledDisturbance>,
    next_injection: u64,
    observed: BTreeSet<u64>,
    // app -> component -> monitored node
    monitors: BTreeMap<String, BTreeMap<String, String>>,
    rng: RefCell<ChaCha8Rng>,
}

impl SimWorld {
    pub fn new(config: SimConfig) -> Self {
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        SimWorld {
            config,
            clock: 0,
            seq: 0,
            events: Vec::new(),
            nodes: BTreeMap::new(),
            usage: BTreeMap::new(),
            instances: BTreeMap::new(),
            next_instance: 0,
            forwarding: BTreeMap::new(),
            scheduled: Vec::new(),
            next_injection: 0,
            observed: BTreeSet::new(),
            monitors: BTreeMap::new(),
            rng: RefCell::new(rng),
        }
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    /// Reseed the jitter stream, e.g. per benchmark repetition.
    pub fn reseed(&mut self, seed: u64) {
        self.rng = RefCell::new(ChaCha8Rng::seed_from_u64(seed));
    }

    pub fn now(&self) -> Millis {
        self.clock
    }

    /// Move the clock forward to an absolute time (never backwards).
    pub fn advance_to(&mut self, t: Millis) {
        self.clock = self.clock.max(t);
    }

    /// Make the repository's view of the infrastructure available to the
    /// simulator (tiers, capacities, processing rates). Upserts only.
    pub fn sync_infrastructure(&mut self, infra: &InfrastructureGraph) {
        for n in &infra.nodes {
            self.nodes.insert(
                n.id.clone(),
                NodeInfo {
                    tier: n.tier,
                    capacity: n.capacity(),
                    rate: n.processing_rate,
                },
            );
        }
    }

    pub fn knows_node(&self, id: &str) -> bool {
        self.nodes.contains_key(id)
    }

    pub fn node_usage(&self, id: &str) -> Resources {
        self.usage.get(id).copied().unwrap_or_default()
    }

    pub fn usage_map(&self) -> BTreeMap<String, Resources> {
        self.usage.clone()
    }

    pub fn events(&self) -> &[SimEvent] {
        &self.events
    }

    fn log(&mut self, kind: SimEventKind) {
        let event = SimEvent {
            time: self.clock,
            seq: self.seq,
            kind,
        };
        self.seq += 1;
        self.events.push(event);
    }

    fn jitter(&self) -> Millis {
        if self.config.jitter_ms == 0 {
            0
        } else {
            self.rng.borrow_mut().gen_range(0..=self.config.jitter_ms)
        }
    }

    fn latency_between(&self, a: &str, b: &str) -> Result<Millis, SimError> {
        let nodes = &self.nodes;
        let tier_of = |name: &str| nodes.get(name).map(|n| n.tier);
        self.config
            .latency(a, b, &tier_of)
            .ok_or_else(|| SimError::Unreachable(a.to_string(), b.to_string()))
    }

    /// Send one message: advance the clock by the pair latency (plus
    /// jitter) and log it. Returns the charged latency.
    pub fn send(&mut self, from: &str, to: &str, label: &str) -> Result<Millis, SimError> {
        let latency = self
            .latency_between(from, to)?
            .saturating_add(self.jitter());
        self.clock = self.clock.saturating_add(latency);
        self.log(SimEventKind::Message {
            from: from.to_string(),
            to: to.to_string(),
            latency,
            label: label.to_string(),
        });
        Ok(latency)
    }

    /// A request/acknowledgment pair between two endpoints.
    pub fn exchange(&mut self, from: &str, to: &str, label: &str) -> Result<Millis, SimError> {
        let a = self.send(from, to, &format!("{label}.request"))?;
        let b = self.send(to, from, &format!("{label}.ack"))?;
        Ok(a + b)
    }

    /// Charge a processing delay at an endpoint.
    pub fn process(&mut self, endpoint: &str, duration: Millis, label: &str) {
        self.clock = self.clock.saturating_add(duration);
        self.log(SimEventKind::Processing {
            endpoint: endpoint.to_string(),
            duration,
            label: label.to_string(),
        });
    }

    fn live_instance_of(&self, app: &str, component: &str) -> Option<&Instance> {
        self.instances
            .values()
            .find(|i| i.app == app && i.component == component && i.state != InstanceState::Stopped)
    }

    pub fn running_instance_of(&self, app: &str, component: &str) -> Option<&Instance> {
        self.instances
            .values()
            .find(|i| i.app == app && i.component == component && i.state == InstanceState::Running)
    }

    pub fn instance(&self, id: &str) -> Option<&Instance> {
        self.instances.get(id)
    }

    pub fn instances_of_app(&self, app: &str) -> Vec<&Instance> {
        self.instances.values().filter(|i| i.app == app).collect()
    }

    pub fn running_instances(&self) -> Vec<&Instance> {
        self.instances
            .values()
            .filter(|i| i.state == InstanceState::Running)
            .collect()
    }

    /// Create an instance in `created` state, debiting node capacity.
    pub fn create_instance(
        &mut self,
        app: &str,
        node: &str,
        component: &str,
        demands: Resources,
    ) -> Result<String, SimError> {
        let info = self
            .nodes
            .get(node)
            .ok_or_else(|| SimError::UnknownNode(node.to_string()))?
            .clone();
        if self.live_instance_of(app, component).is_some() {
            return Err(SimError::DuplicateInstance {
                app: app.to_string(),
                component: component.to_string(),
            });
        }
        let used = self.usage.get(node).copied().unwrap_or_default();
        let would = used.checked_add(demands);
        if !would.fits_within(info.capacity) {
            return Err(SimError::CapacityExceeded {
                node: node.to_string(),
                component: component.to_string(),
                detail: format!(
                    "cpu {}/{} memory {}/{} disk {}/{}",
                    would.cpu,
                    info.capacity.cpu,
                    would.memory,
                    info.capacity.memory,
                    would.disk,
                    info.capacity.disk
                ),
            });
        }
        self.usage.insert(node.to_string(), would);
        let id = format!("i-{:04}", self.next_instance);
        self.next_instance += 1;
        let instance = Instance {
            id: id.clone(),
            app: app.to_string(),
            component: component.to_string(),
            node: node.to_string(),
            state: InstanceState::Created,
            demands,
        };
        self.instances.insert(id.clone(), instance);
        self.log(SimEventKind::InstanceChange {
            instance: id.clone(),
            app: app.to_string(),
            component: component.to_string(),
            node: node.to_string(),
            state: InstanceState::Created,
            demands,
        });
        Ok(id)
    }

    /// Move a created instance to running.
    pub fn run_instance(&mut self, id: &str) -> Result<(), SimError> {
        let instance = self
            .instances
            .get_mut(id)
            .ok_or_else(|| SimError::UnknownInstance(id.to_string()))?;
        if instance.state == InstanceState::Stopped {
            return Err(SimError::InstanceNotRunning(id.to_string()));
        }
        instance.state = InstanceState::Running;
        let ev = SimEventKind::InstanceChange {
            instance: instance.id.clone(),
            app: instance.app.clone(),
            component: instance.component.clone(),
            node: instance.node.clone(),
            state: InstanceState::Running,
            demands: instance.demands,
        };
        self.log(ev);
        Ok(())
    }

    /// Create and immediately run an instance.
    pub fn start_instance(
        &mut self,
        app: &str,
        node: &str,
        component: &str,
        demands: Resources,
    ) -> Result<String, SimError> {
        let id = self.create_instance(app, node, component, demands)?;
        self.run_instance(&id)?;
        Ok(id)
    }

    /// Stop a live instance, crediting node capacity back.
    pub fn stop_instance(&mut self, id: &str) -> Result<(), SimError> {
        let instance = self
            .instances
            .get_mut(id)
            .ok_or_else(|| SimError::UnknownInstance(id.to_string()))?;
        if instance.state == InstanceState::Stopped {
            return Err(SimError::InstanceNotRunning(id.to_string()));
        }
        instance.state = InstanceState::Stopped;
        let node = instance.node.clone();
        let demands = instance.demands;
        let ev = SimEventKind::InstanceChange {
            instance: instance.id.clone(),
            app: instance.app.clone(),
            component: instance.component.clone(),
            node: node.clone(),
            state: InstanceState::Stopped,
            demands,
        };
        let used = self.usage.get(&node).copied().unwrap_or_default();
        self.usage.insert(node, used.checked_sub(demands));
        self.log(ev);
        Ok(())
    }

    /// Transfer an image between endpoints, routed through the registry
    /// when neither endpoint is the registry. Advances the clock by the
    /// per-hop durations and returns the total.
    pub fn transfer_image(
        &mut self,
        from: &str,
        to: &str,
        size_mb: u64,
    ) -> Result<Millis, SimError> {
        let hops: Vec<(String, String)> =
            if from == REGISTRY_ENDPOINT || to == REGISTRY_ENDPOINT || from == to {
                vec![(from.to_string(), to.to_string())]
            } else {
                vec![
                    (from.to_string(), REGISTRY_ENDPOINT.to_string()),
                    (REGISTRY_ENDPOINT.to_string(), to.to_string()),
                ]
            };
        let mut total = 0;
        for (a, b) in hops {
            let duration = if a == b {
                0
            } else {
                let bw = self
                    .config
                    .bandwidth(&a, &b)
                    .ok_or_else(|| SimError::Unreachable(a.clone(), b.clone()))?;
                // MB over MB/s, expressed in ms.
                size_mb.saturating_mul(1000).div_ceil(bw)
            };
            self.clock = self.clock.saturating_add(duration);
            self.log(SimEventKind::Transfer {
                from: a,
                to: b,
                size_mb,
                duration,
            });
            total += duration;
        }
        Ok(total)
    }

    /// Replace all forwarding entries of one application with the given
    /// chain links. Idempotent by construction.
    pub fn replace_forwarding(&mut self, app: &str, links: &[ChainLink]) {
        for table in self.forwarding.values_mut() {
            table.retain(|(a, _, _), _| a != app);
        }
        for link in links {
            let entry = ForwardingEntry {
                app: app.to_string(),
                link: link.clone(),
            };
            self.forwarding
                .entry(link.from.node.clone())
                .or_default()
                .insert(
                    (
                        app.to_string(),
                        link.from.component.clone(),
                        link.to.component.clone(),
                    ),
                    entry,
                );
        }
    }

    pub fn forwarding_table(&self, node: &str) -> Vec<ForwardingEntry> {
        self.forwarding
            .get(node)
            .map(|t| t.values().cloned().collect())
            .unwrap_or_default()
    }

    pub fn forwarding_of_app(&self, app: &str) -> Vec<ForwardingEntry> {
        let mut out: Vec<ForwardingEntry> = self
            .forwarding
            .values()
            .flat_map(|t| t.values())
            .filter(|e| e.app == app)
            .cloned()
            .collect();
        out.sort_by(|a, b| {
            (&a.link.from.component, &a.link.to.component)
                .cmp(&(&b.link.from.component, &b.link.to.component))
        });
        out
    }

    pub fn clear_forwarding(&mut self, app: &str) {
        for table in self.forwarding.values_mut() {
            table.retain(|(a, _, _), _| a != app);
        }
    }

    /// Schedule a mobility or bottleneck disturbance on a node. Monitoring
    /// observes it at the first poll at or after `at`.
    pub fn inject_event(
        &mut self,
        kind: DisturbanceKind,
        node: &str,
        at: Millis,
    ) -> Result<u64, SimError> {
        if !self.nodes.contains_key(node) {
            return Err(SimError::UnknownNode(node.to_string()));
        }
        let id = self.next_injection;
        self.next_injection += 1;
        self.scheduled.push(ScheduledDisturbance {
            id,
            kind,
            node: node.to_string(),
            at,
        });
        self.log(SimEventKind::InjectionScheduled {
            id,
            disturbance: kind,
            node: node.to_string(),
            at,
        });
        Ok(id)
    }

    /// Register monitoring for an application's components.
    pub fn monitor_register(&mut self, app: &str, placements: BTreeMap<String, String>) {
        self.monitors.insert(app.to_string(), placements);
    }

    /// Point one monitored component at its new node after a migration.
    pub fn monitor_update(&mut self, app: &str, component: &str, node: &str) {
        if let Some(components) = self.monitors.get_mut(app) {
            components.insert(component.to_string(), node.to_string());
        }
    }

    pub fn monitor_unregister(&mut self, app: &str) {
        self.monitors.remove(app);
    }

    pub fn monitored_node(&self, app: &str, component: &str) -> Option<&String> {
        self.monitors.get(app).and_then(|m| m.get(component))
    }

    /// Poll monitoring at time `now`: every scheduled disturbance due by
    /// `now` produces one migration request per registered component on the
    /// affected node, de-duplicated per injection id.
    pub fn monitor_tick(&mut self, now: Millis) -> Vec<MigrationRequest> {
        self.advance_to(now);
        let mut due: Vec<ScheduledDisturbance> = self
            .scheduled
            .iter()
            .filter(|d| d.at <= now && !self.observed.contains(&d.id))
            .cloned()
            .collect();
        due.sort_by(|a, b| (a.at, &a.node, a.id).cmp(&(b.at, &b.node, b.id)));
        let mut requests = Vec::new();
        for d in due {
            self.observed.insert(d.id);
            self.log(SimEventKind::DisturbanceObserved {
                id: d.id,
                disturbance: d.kind,
                node: d.node.clone(),
            });
            for (app, components) in &self.monitors {
                for (component, node) in components {
                    if *node == d.node {
                        requests.push(MigrationRequest {
                            app: app.clone(),
                            component: component.clone(),
                            reason: d.kind.into(),
                            hint: None,
                        });
                    }
                }
            }
        }
        requests
    }

    /// Simulated source-to-sink traversal of a running application. The
    /// footage parameter scales each component's nominal workload; hop
    /// latencies come from the application's chain links.
    pub fn measure_e2e(
        &self,
        app_id: &str,
        app: &ApplicationDescriptor,
        assignment: &Assignment,
        links: &[ChainLink],
        footage_units: u64,
    ) -> Result<Millis, SimError> {
        for c in &app.components {
            if self.running_instance_of(app_id, &c.id).is_none() {
                return Err(SimError::AppNotRunning(app_id.to_string()));
            }
        }
        let latencies: BTreeMap<(String, String), Millis> = links
            .iter()
            .map(|l| {
                (
                    (l.from.component.clone(), l.to.component.clone()),
                    l.route_latency,
                )
            })
            .collect();
        let processing = |component: &str| -> Result<Millis, EstimateError> {
            let node_id = assignment
                .get(component)
                .ok_or_else(|| EstimateError::Unassigned(component.to_string()))?;
            let info = self
                .nodes
                .get(node_id)
                .ok_or_else(|| EstimateError::MissingNode(node_id.to_string()))?;
            if info.rate == 0 {
                return Err(EstimateError::ZeroRate(node_id.to_string()));
            }
            let work = app.component(component).map(|c| c.workload).unwrap_or(0);
            Ok(footage_units.saturating_mul(work).div_ceil(info.rate))
        };
        let latency = |from: &str, to: &str| -> Result<Millis, EstimateError> {
            let base = latencies
                .get(&(from.to_string(), to.to_string()))
                .copied()
                .ok_or_else(|| EstimateError::MissingLink(from.to_string(), to.to_string()))?;
            Ok(base.saturating_add(self.jitter()))
        };
        structure_time(&app.structure, &processing, &latency).map_err(|e| match e {
            EstimateError::Unassigned(c) => SimError::AppNotRunning(c),
            EstimateError::MissingNode(n) => SimError::UnknownNode(n),
            EstimateError::MissingLink(a, b) => SimError::ChainIncomplete(a, b),
            EstimateError::ZeroRate(n) => SimError::UnknownNode(n),
        })
    }

    /// Event log as JSON lines.
    pub fn events_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&serde_json::to_string(e).expect("event serializes"));
            out.push('\n');
        }
        out
    }

    /// Event log as CSV (`time,seq,kind,a,b,value,label`).
    pub fn events_csv(&self) -> String {
        let mut out = String::from("time,seq,kind,a,b,value,label\n");
        for e in &self.events {
            let (kind, a, b, value, label) = match &e.kind {
                SimEventKind::Message {
                    from,
                    to,
                    latency,
                    label,
                } => ("message", from.clone(), to.clone(), *latency, label.clone()),
                SimEventKind::Transfer {
                    from,
                    to,
                    duration,
                    size_mb,
                } => (
                    "transfer",
                    from.clone(),
                    to.clone(),
                    *duration,
                    format!("{size_mb}MB"),
                ),
                SimEventKind::Processing {
                    endpoint,
                    duration,
                    label,
                } => (
                    "processing",
                    endpoint.clone(),
                    String::new(),
                    *duration,
                    label.clone(),
                ),
                SimEventKind::InstanceChange {
                    instance,
                    node,
                    state,
                    component,
                    ..
                } => (
                    "instance-change",
                    instance.clone(),
                    node.clone(),
                    0,
                    format!("{component}:{state:?}"),
                ),
                SimEventKind::InjectionScheduled {
                    id,
                    disturbance,
                    node,
                    at,
                } => (
                    "injection-scheduled",
                    node.clone(),
                    String::new(),
                    *at,
                    format!("{disturbance:?}#{id}"),
                ),
                SimEventKind::DisturbanceObserved {
                    id,
                    disturbance,
                    node,
                } => (
                    "disturbance-observed",
                    node.clone(),
                    String::new(),
                    0,
                    format!("{disturbance:?}#{id}"),
                ),
            };
            out.push_str(&format!(
                "{},{},{kind},{a},{b},{value},{label}\n",
                e.time, e.seq
            ));
        }
        out
    }

    /// Audit: the event log is totally ordered by (time, seq).
    pub fn audit_clock_monotone(&self) -> Result<(), String> {
        for w in self.events.windows(2) {
            if (w[1].time, w[1].seq) <= (w[0].time, w[0].seq) {
                return Err(format!(
                    "event order violated at seq {} -> {}",
                    w[0].seq, w[1].seq
                ));
            }
        }
        Ok(())
    }

    /// Audit: at no point does one component of one application have two
    /// live instances (cold migration: stop strictly precedes start).
    pub fn audit_single_running(&self) -> Result<(), String> {
        let mut live: BTreeMap<(String, String), BTreeSet<String>> = BTreeMap::new();
        for e in &self.events {
            if let SimEventKind::InstanceChange {
                instance,
                app,
                component,
                state,
                ..
            } = &e.kind
            {
                let key = (app.clone(), component.clone());
                let set = live.entry(key.clone()).or_default();
                match state {
                    InstanceState::Created | InstanceState::Running => {
                        set.insert(instance.clone());
                    }
                    InstanceState::Stopped => {
                        set.remove(instance);
                    }
                }
                if set.len() > 1 {
                    return Err(format!(
                        "{}/{} has {} live instances at t={}",
                        key.0,
                        key.1,
                        set.len(),
                        e.time
                    ));
                }
            }
        }
        Ok(())
    }

    /// Audit: replaying instance events never drives any node's usage over
    /// capacity or below zero.
    pub fn audit_capacity(&self) -> Result<(), String> {
        let mut usage: BTreeMap<String, (i128, i128, i128)> = BTreeMap::new();
        for e in &self.events {
            if let SimEventKind::InstanceChange {
                node,
                state,
                demands,
                instance,
                ..
            } = &e.kind
            {
                let entry = usage.entry(node.clone()).or_insert((0, 0, 0));
                match state {
                    InstanceState::Created => {
                        entry.0 += demands.cpu as i128;
                        entry.1 += demands.memory as i128;
                        entry.2 += demands.disk as i128;
                    }
                    InstanceState::Stopped => {
                        entry.0 -= demands.cpu as i128;
                        entry.1 -= demands.memory as i128;
                        entry.2 -= demands.disk as i128;
                    }
                    InstanceState::Running => {}
                }
                if entry.0 < 0 || entry.1 < 0 || entry.2 < 0 {
                    return Err(format!("usage below zero on {node} after {instance}"));
                }
                if let Some(info) = self.nodes.get(node) {
                    if entry.0 > info.capacity.cpu as i128
                        || entry.1 > info.capacity.memory as i128
                        || entry.2 > info.capacity.disk as i128
                    {
                        return Err(format!("capacity exceeded on {node} at t={}", e.time));
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::infra::{LinkRecord, NodeRecord, NodeStatus};

    fn infra_two_fogs() -> InfrastructureGraph {
        let node = |id: &str, tier: Tier| NodeRecord {
            id: id.into(),
            domain_id: "d".into(),
            tier,
            cpu_cap: 4,
            memory_cap: 100,
            disk_cap: 100,
            processing_rate: 1,
            cpu_price: 1,
            memory_price: 1,
            disk_price: 1,
            status: NodeStatus::Joined,
        };
        InfrastructureGraph {
            domains: vec![],
            nodes: vec![node("f1", Tier::Fog), node("f2", Tier::Fog)],
            links: vec![LinkRecord {
                endpoint_a: "f1".into(),
                endpoint_b: "f2".into(),
                latency: 1,
                bandwidth: 100,
            }],
        }
    }

    fn world() -> SimWorld {
        let mut w = SimWorld::new(SimConfig::default());
        w.sync_infrastructure(&infra_two_fogs());
        w
    }

    #[test]
    fn start_on_exact_residual_capacity_succeeds() {
        let mut w = world();
        let demands = Resources::new(4, 10, 10);
        w.start_instance("app", "f1", "a", demands).unwrap();
        assert_eq!(w.node_usage("f1").cpu, 4);
        let err = w
            .start_instance("app", "f1", "b", Resources::new(1, 1, 1))
            .unwrap_err();
        assert!(matches!(err, SimError::CapacityExceeded { .. }));
    }

    #[test]
    fn second_start_of_same_component_is_rejected() {
        let mut w = world();
        w.start_instance("app", "f1", "a", Resources::new(1, 1, 1))
            .unwrap();
        let err = w
            .start_instance("app", "f2", "a", Resources::new(1, 1, 1))
            .unwrap_err();
        assert!(matches!(err, SimError::DuplicateInstance { .. }));
    }

    #[test]
    fn stop_then_start_elsewhere_logs_both_in_order() {
        let mut w = world();
        let id = w
            .start_instance("app", "f1", "a", Resources::new(1, 1, 1))
            .unwrap();
        w.stop_instance(&id).unwrap();
        w.start_instance("app", "f2", "a", Resources::new(1, 1, 1))
            .unwrap();
        assert_eq!(w.node_usage("f1").cpu, 0);
        assert_eq!(w.node_usage("f2").cpu, 1);
        w.audit_single_running().unwrap();
        w.audit_clock_monotone().unwrap();
        w.audit_capacity().unwrap();
        let changes: Vec<_> = w
            .events()
            .iter()
            .filter_map(|e| match &e.kind {
                SimEventKind::InstanceChange { node, state, .. } => Some((node.clone(), *state)),
                _ => None,
            })
            .collect();
        assert_eq!(
            changes,
            vec![
                ("f1".to_string(), InstanceState::Created),
                ("f1".to_string(), InstanceState::Running),
                ("f1".to_string(), InstanceState::Stopped),
                ("f2".to_string(), InstanceState::Created),
                ("f2".to_string(), InstanceState::Running),
            ]
        );
    }

    #[test]
    fn transfer_through_registry_sums_hops() {
        let mut w = world();
        // one hop: node -> registry at the default 100 MB/s
        assert_eq!(
            w.transfer_image("f1", REGISTRY_ENDPOINT, 100).unwrap(),
            1000
        );
        // two hops via the registry
        assert_eq!(w.transfer_image("f1", "f2", 100).unwrap(), 2000);
        assert_eq!(w.transfer_image("f1", "f2", 0).unwrap(), 0);
    }

    #[test]
    fn missing_bandwidth_is_unreachable() {
        let cfg = SimConfig {
            default_bandwidth_mbps: None,
            ..SimConfig::default()
        };
        let mut w = SimWorld::new(cfg);
        w.sync_infrastructure(&infra_two_fogs());
        let err = w.transfer_image("f1", REGISTRY_ENDPOINT, 10).unwrap_err();
        assert!(matches!(err, SimError::Unreachable(..)));
    }

    #[test]
    fn injection_is_observed_at_next_poll() {
        let mut w = world();
        w.monitor_register("app", [("a".to_string(), "f1".to_string())].into());
        w.inject_event(DisturbanceKind::Mobility, "f1", 5000)
            .unwrap();
        assert!(w.monitor_tick(4900).is_empty());
        let requests = w.monitor_tick(5000);
        assert_eq!(requests.len(), 1);
        assert_eq!(requests[0].app, "app");
        assert_eq!(requests[0].component, "a");
        assert_eq!(requests[0].reason, MigrationReason::Mobility);
        // observed once only
        assert!(w.monitor_tick(5100).is_empty());
    }

    #[test]
    fn bottleneck_without_monitored_components_yields_nothing() {
        let mut w = world();
        w.inject_event(DisturbanceKind::Bottleneck, "f2", 10)
            .unwrap();
        assert!(w.monitor_tick(100).is_empty());
    }

    #[test]
    fn same_tick_events_order_by_node_id() {
        let mut w = world();
        w.monitor_register(
            "app",
            [
                ("a".to_string(), "f1".to_string()),
                ("b".to_string(), "f2".to_string()),
            ]
            .into(),
        );
        // insert out of node order
        w.inject_event(DisturbanceKind::Mobility, "f2", 50).unwrap();
        w.inject_event(DisturbanceKind::Mobility, "f1", 50).unwrap();
        let requests = w.monitor_tick(100);
        assert_eq!(requests.len(), 2);
        assert_eq!(requests[0].component, "a"); // f1 first
        assert_eq!(requests[1].component, "b");
    }

    #[test]
    fn unknown_node_injection_is_rejected() {
        let mut w = world();
        assert!(matches!(
            w.inject_event(DisturbanceKind::Mobility, "ghost", 0),
            Err(SimError::UnknownNode(_))
        ));
    }

    #[test]
    fn event_log_is_deterministic() {
        let run = || {
            let mut w = world();
            w.send("f1", "f2", "ping").unwrap();
            w.exchange("orchestrator", "f1", "deploy").unwrap();
            let id = w
                .start_instance("app", "f1", "a", Resources::new(1, 1, 1))
                .unwrap();
            w.transfer_image("f1", "f2", 50).unwrap();
            w.stop_instance(&id).unwrap();
            w.events_jsonl()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn zero_workload_over_zero_latency_chain_measures_zero() {
        use crate::appgraph::EdgeKind;
        use crate::appgraph::{ApplicationDescriptor, ComponentDescriptor, StructureNode as N};
        use crate::chaining::{ChainEndpoint, ChainLink};

        let comp = |id: &str| ComponentDescriptor {
            id: id.into(),
            cpu_req: 1,
            memory_req: 1,
            disk_req: 1,
            traffic_req: 0,
            workload: 7,
            allowed_tiers: [Tier::Fog].into(),
            image_size: 1,
        };
        let app = ApplicationDescriptor::new(
            "zero",
            vec![comp("a"), comp("b")],
            N::sequence(vec![N::leaf("a"), N::leaf("b")]),
        );
        let mut w = world();
        w.start_instance("zero", "f1", "a", Resources::new(1, 1, 1))
            .unwrap();
        w.start_instance("zero", "f1", "b", Resources::new(1, 1, 1))
            .unwrap();
        let links = vec![ChainLink {
            from: ChainEndpoint {
                component: "a".into(),
                node: "f1".into(),
            },
            to: ChainEndpoint {
                component: "b".into(),
                node: "f1".into(),
            },
            kind: EdgeKind::Sequence,
            route_latency: 0,
        }];
        let assignment: crate::placement::Assignment = [
            ("a".to_string(), "f1".to_string()),
            ("b".to_string(), "f1".to_string()),
        ]
        .into();
        assert_eq!(
            w.measure_e2e("zero", &app, &assignment, &links, 0).unwrap(),
            0
        );
        // nonzero footage costs processing time again
        assert_eq!(
            w.measure_e2e("zero", &app, &assignment, &links, 1).unwrap(),
            14
        );
    }

    #[test]
    fn csv_export_has_header_and_rows() {
        let mut w = world();
        w.send("f1", "f2", "ping").unwrap();
        let csv = w.events_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "time,seq,kind,a,b,value,label");
        assert_eq!(lines.len(), 2);
        assert!(lines[1].contains("message"));
    }
}
