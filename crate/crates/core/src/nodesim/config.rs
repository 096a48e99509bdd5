//! Simulation configuration: the message latency matrix, transfer
//! bandwidths and timing knobs.
//!
//! Latency is defined between named endpoints: PaaS modules, infrastructure
//! nodes, the image registry and clients. Exact pair entries win; otherwise
//! a class-based default applies (LAN within a tier, WAN across tiers,
//! configured PaaS-to-tier values). The defaults are configuration
//! stand-ins, not measured data.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::types::{Millis, Tier};

/// PaaS module endpoints of the latency matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum PaasModule {
    Orchestrator,
    GraphGenerator,
    Repository,
    DeploymentEngine,
    ExecutionEngine,
    MigrationEngine,
    MonitoringEngine,
}

impl PaasModule {
    pub const ALL: [PaasModule; 7] = [
        PaasModule::Orchestrator,
        PaasModule::GraphGenerator,
        PaasModule::Repository,
        PaasModule::DeploymentEngine,
        PaasModule::ExecutionEngine,
        PaasModule::MigrationEngine,
        PaasModule::MonitoringEngine,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            PaasModule::Orchestrator => "orchestrator",
            PaasModule::GraphGenerator => "graph-generator",
            PaasModule::Repository => "repository",
            PaasModule::DeploymentEngine => "deployment-engine",
            PaasModule::ExecutionEngine => "execution-engine",
            PaasModule::MigrationEngine => "migration-engine",
            PaasModule::MonitoringEngine => "monitoring-engine",
        }
    }
}

pub const REGISTRY_ENDPOINT: &str = "registry";
pub const CLIENT_ENDPOINT: &str = "client";

/// Canonical unordered-pair key used in the latency and bandwidth maps.
pub fn pair_key(a: &str, b: &str) -> String {
    if a <= b {
        format!("{a}|{b}")
    } else {
        format!("{b}|{a}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    /// Exact pair latencies, keyed `"a|b"` with endpoints sorted.
    pub latency_ms: BTreeMap<String, Millis>,
    /// Exact pair bandwidths in MB/s, keyed like `latency_ms`.
    pub bandwidth_mbps: BTreeMap<String, u64>,
    /// Monitoring poll period.
    pub monitor_period_ms: Millis,
    pub seed: u64,
    /// Default latency within one tier (fog LAN, cloud LAN).
    pub lan_ms: Millis,
    /// Default latency across tiers (fog <-> cloud).
    pub wan_ms: Millis,
    pub paas_fog_ms: Millis,
    pub paas_cloud_ms: Millis,
    pub paas_paas_ms: Millis,
    /// Fallback bandwidth for pairs without an exact entry; `None` makes
    /// such pairs unreachable for transfers.
    pub default_bandwidth_mbps: Option<u64>,
    /// Processing delay charged per blueprint install: twice on the
    /// deployment path, once on the migration path.
    pub blueprint_install_ms: Millis,
    /// Upper bound of uniform additive jitter applied per message and per
    /// measured end-to-end hop. Zero keeps runs exactly repeatable across
    /// repetitions.
    pub jitter_ms: Millis,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            latency_ms: BTreeMap::new(),
            bandwidth_mbps: BTreeMap::new(),
            monitor_period_ms: 100,
            seed: 0,
            lan_ms: 1,
            wan_ms: 50,
            paas_fog_ms: 10,
            paas_cloud_ms: 40,
            paas_paas_ms: 1,
            default_bandwidth_mbps: Some(100),
            blueprint_install_ms: 250,
            jitter_ms: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum EndpointClass {
    Paas,
    Fog,
    Cloud,
    Registry,
    Client,
}

impl SimConfig {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        let mut cfg: SimConfig = serde_json::from_str(text)?;
        cfg.normalize_keys();
        Ok(cfg)
    }

    /// Re-key pair maps so lookups are order-independent.
    pub fn normalize_keys(&mut self) {
        let relatency: BTreeMap<String, Millis> = self
            .latency_ms
            .iter()
            .map(|(k, v)| (normalize_pair(k), *v))
            .collect();
        self.latency_ms = relatency;
        let rebandwidth: BTreeMap<String, u64> = self
            .bandwidth_mbps
            .iter()
            .map(|(k, v)| (normalize_pair(k), *v))
            .collect();
        self.bandwidth_mbps = rebandwidth;
    }

    pub fn set_latency(&mut self, a: &str, b: &str, ms: Millis) {
        self.latency_ms.insert(pair_key(a, b), ms);
    }

    pub fn set_bandwidth(&mut self, a: &str, b: &str, mbps: u64) {
        self.bandwidth_mbps.insert(pair_key(a, b), mbps);
    }

    /// One-way message latency between two endpoints. `node_tier` resolves
    /// node endpoints to their tier; unknown endpoints are unreachable
    /// unless an exact pair entry exists.
    pub fn latency(
        &self,
        a: &str,
        b: &str,
        node_tier: &dyn Fn(&str) -> Option<Tier>,
    ) -> Option<Millis> {
        if a == b {
            return Some(0);
        }
        if let Some(ms) = self.latency_ms.get(&pair_key(a, b)) {
            return Some(*ms);
        }
        let ca = classify(a, node_tier)?;
        let cb = classify(b, node_tier)?;
        Some(self.class_default(ca, cb))
    }

    pub fn bandwidth(&self, a: &str, b: &str) -> Option<u64> {
        if let Some(bw) = self.bandwidth_mbps.get(&pair_key(a, b)) {
            return match *bw {
                0 => None,
                bw => Some(bw),
            };
        }
        self.default_bandwidth_mbps.filter(|bw| *bw > 0)
    }

    fn class_default(&self, a: EndpointClass, b: EndpointClass) -> Millis {
        use EndpointClass::*;
        // The registry behaves like a cloud-hosted hub; clients sit at the
        // network edge next to fog nodes.
        let fold = |c: EndpointClass| match c {
            Registry => Cloud,
            Client => Fog,
            other => other,
        };
        match (fold(a), fold(b)) {
            (Paas, Paas) => self.paas_paas_ms,
            (Paas, Fog) | (Fog, Paas) => self.paas_fog_ms,
            (Paas, Cloud) | (Cloud, Paas) => self.paas_cloud_ms,
            (Fog, Fog) | (Cloud, Cloud) => self.lan_ms,
            (Fog, Cloud) | (Cloud, Fog) => self.wan_ms,
            _ => unreachable!("folded classes"),
        }
    }
}

fn classify(name: &str, node_tier: &dyn Fn(&str) -> Option<Tier>) -> Option<EndpointClass> {
    if PaasModule::ALL.iter().any(|m| m.as_str() == name) {
        return Some(EndpointClass::Paas);
    }
    if name == REGISTRY_ENDPOINT {
        return Some(EndpointClass::Registry);
    }
    if name == CLIENT_ENDPOINT {
        return Some(EndpointClass::Client);
    }
    match node_tier(name) {
        Some(Tier::Fog) => Some(EndpointClass::Fog),
        Some(Tier::Cloud) => Some(EndpointClass::Cloud),
        None => None,
    }
}

fn normalize_pair(key: &str) -> String {
    match key.split_once('|') {
        Some((a, b)) => pair_key(a.trim(), b.trim()),
        None => key.to_string(),
    }
}
