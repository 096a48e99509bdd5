//! Benchmark harness: latency test cases at desk scale.
//!
//! tc1-tc3 keep the PaaS "centralized" (default latency classes) and vary
//! where the application components run; tc4-tc6 keep the components fixed
//! (deployed in one cloud region, migrated to the other) and move the
//! deployment/migration engines through the latency matrix instead.

use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use fogpaas::infra::Repository;
use fogpaas::migration::{MigrationReason, MigrationRequest};
use fogpaas::nodesim::{SimConfig, SimWorld};
use fogpaas::orchestrator::{
    orchestration_latency, Orchestrator, OrchestratorConfig, PlacementDirective,
};
use fogpaas::placement::Assignment;
use fogpaas::scenarios::{self, EngineSite};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("unknown scenario {0:?} (expected tc1..tc6)")]
    UnknownScenario(String),
    #[error("scenario run failed: {0}")]
    Run(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ScenarioId {
    Tc1,
    Tc2,
    Tc3,
    Tc4,
    Tc5,
    Tc6,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 6] = [
        ScenarioId::Tc1,
        ScenarioId::Tc2,
        ScenarioId::Tc3,
        ScenarioId::Tc4,
        ScenarioId::Tc5,
        ScenarioId::Tc6,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ScenarioId::Tc1 => "tc1",
            ScenarioId::Tc2 => "tc2",
            ScenarioId::Tc3 => "tc3",
            ScenarioId::Tc4 => "tc4",
            ScenarioId::Tc5 => "tc5",
            ScenarioId::Tc6 => "tc6",
        }
    }

    /// tc1-tc3 vary the application layout; tc4-tc6 vary the PaaS module
    /// coordinates.
    pub fn is_layout_case(&self) -> bool {
        matches!(self, ScenarioId::Tc1 | ScenarioId::Tc2 | ScenarioId::Tc3)
    }
}

impl FromStr for ScenarioId {
    type Err = ScenarioError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "tc1" => Ok(ScenarioId::Tc1),
            "tc2" => Ok(ScenarioId::Tc2),
            "tc3" => Ok(ScenarioId::Tc3),
            "tc4" => Ok(ScenarioId::Tc4),
            "tc5" => Ok(ScenarioId::Tc5),
            "tc6" => Ok(ScenarioId::Tc6),
            other => Err(ScenarioError::UnknownScenario(other.to_string())),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchScenario {
    pub id: ScenarioId,
    pub repetitions: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    DeployLatency,
    MigrateLatency,
    E2e,
}

impl Metric {
    pub fn as_str(&self) -> &'static str {
        match self {
            Metric::DeployLatency => "deploy_latency",
            Metric::MigrateLatency => "migrate_latency",
            Metric::E2e => "e2e",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchRow {
    pub scenario: String,
    pub repetition: u32,
    pub metric: Metric,
    pub value_ms: u64,
}

/// Per-(scenario, metric) aggregate.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchSummary {
    pub scenario: String,
    pub metric: Metric,
    pub mean_ms: f64,
    pub min_ms: u64,
    pub max_ms: u64,
}

/// One repetition of one scenario: fresh repository, world and
/// orchestrator; deploy the pinned layout, measure, migrate.
fn run_repetition(id: ScenarioId, seed: u64) -> Result<Vec<(Metric, u64)>, ScenarioError> {
    let run = |e: &dyn std::fmt::Display| ScenarioError::Run(e.to_string());

    let (infra, config, app, layout, migrate_component, hint): (
        _,
        SimConfig,
        _,
        Assignment,
        &str,
        String,
    ) = if id.is_layout_case() {
        let layout = match id {
            ScenarioId::Tc1 => scenarios::tc1_layout(),
            ScenarioId::Tc2 => scenarios::tc2_layout(),
            _ => scenarios::tc3_layout(),
        };
        // migrate the analyzer towards the other fog node (tc1, tc2) or
        // into the cloud when only one fog node is in play (tc3)
        let hint = match id {
            ScenarioId::Tc3 => "c1".to_string(),
            _ => "f1".to_string(),
        };
        let config = SimConfig {
            seed,
            ..SimConfig::default()
        };
        (
            scenarios::edge_cloud_infra(),
            config,
            scenarios::bench_app(),
            layout,
            "analyzer",
            hint,
        )
    } else {
        let site = match id {
            ScenarioId::Tc4 => EngineSite::NearDestination,
            ScenarioId::Tc5 => EngineSite::NearPaas,
            _ => EngineSite::NearSource,
        };
        let mut config = scenarios::two_region_sim_config(site);
        config.seed = seed;
        (
            scenarios::two_region_infra(),
            config,
            scenarios::bench_app_any_tier(),
            scenarios::two_region_layout(),
            "analyzer",
            "c-virginia".to_string(),
        )
    };

    let repo = Arc::new(Repository::new());
    scenarios::publish_infra(&repo, &infra);
    let mut world = SimWorld::new(config);
    world.sync_infrastructure(&repo.snapshot());
    world.reseed(seed);
    let orch = Orchestrator::new(repo, world, OrchestratorConfig::default());

    let record = orch
        .handle_deploy(app, PlacementDirective::Pinned(layout))
        .map_err(|e| run(&e))?;
    let deploy_latency = orchestration_latency(&record.plans[0]).map_err(|e| run(&e))?;

    let mut out = vec![(Metric::DeployLatency, deploy_latency)];
    if id.is_layout_case() {
        let e2e = orch.measure_e2e(&record.id, 1).map_err(|e| run(&e))?;
        out.push((Metric::E2e, e2e));
    }

    let migration = orch
        .handle_migrate(MigrationRequest {
            app: record.id.clone(),
            component: migrate_component.to_string(),
            reason: MigrationReason::Manual,
            hint: Some(hint),
        })
        .map_err(|e| run(&e))?;
    let migrate_latency = orchestration_latency(&migration.plan).map_err(|e| run(&e))?;
    out.push((Metric::MigrateLatency, migrate_latency));
    Ok(out)
}

/// Run one scenario for the configured repetitions. Repetition `r` uses
/// seed `base_seed + r`, so a fixed seed list reproduces byte-identical
/// rows.
pub fn run_scenario(s: &BenchScenario, base_seed: u64) -> Result<Vec<BenchRow>, ScenarioError> {
    let mut rows = Vec::new();
    for rep in 0..s.repetitions {
        let values = run_repetition(s.id, base_seed + rep as u64)?;
        for (metric, value_ms) in values {
            rows.push(BenchRow {
                scenario: s.id.as_str().to_string(),
                repetition: rep,
                metric,
                value_ms,
            });
        }
    }
    Ok(rows)
}

/// Run several scenarios sequentially (determinism over parallelism).
pub fn run_benchmark(
    scenarios: &[BenchScenario],
    base_seed: u64,
) -> Result<Vec<BenchRow>, ScenarioError> {
    let mut rows = Vec::new();
    for s in scenarios {
        rows.extend(run_scenario(s, base_seed)?);
    }
    Ok(rows)
}

pub fn summarize(rows: &[BenchRow]) -> Vec<BenchSummary> {
    let mut grouped: std::collections::BTreeMap<(String, Metric), Vec<u64>> =
        std::collections::BTreeMap::new();
    for row in rows {
        grouped
            .entry((row.scenario.clone(), row.metric))
            .or_default()
            .push(row.value_ms);
    }
    grouped
        .into_iter()
        .map(|((scenario, metric), values)| BenchSummary {
            scenario,
            metric,
            mean_ms: values.iter().sum::<u64>() as f64 / values.len() as f64,
            min_ms: *values.iter().min().expect("non-empty group"),
            max_ms: *values.iter().max().expect("non-empty group"),
        })
        .collect()
}
