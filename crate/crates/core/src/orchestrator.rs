//! The orchestrator: deployment and migration orchestration plans as
//! explicit state machines over the repository, the planner, the chaining
//! engine, the migration engine and the simulated domains.
//!
//! Operations on one application are serialized; records are committed at
//! every status transition so reads never block behind a running plan. All
//! simulator interaction happens under a single command lock, which keeps
//! the global clock and the event log deterministic.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use parking_lot::{Mutex, RwLock};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::appgraph::{
    flatten_to_vnffg, validate_graph, ApplicationDescriptor, ForwardingGraph, Violation,
};
use crate::chaining::{apply_chaining_plan, derive_chaining_plan, ChainingPlan};
use crate::infra::{InfrastructureGraph, Repository};
use crate::migration::{
    build_migration_plan, execute_migration, select_target, MigrationContext, MigrationError,
    MigrationReport, MigrationRequest, MigrationStep,
};
use crate::nodesim::{PaasModule, SimError, SimEventKind, SimWorld};
use crate::placement::{
    evaluate_plan, is_feasible, plan_exhaustive_with_budget, plan_greedy, Assignment,
    DeploymentPlan, PlacementError, PlacementProblem, DEFAULT_ENUMERATION_BUDGET,
};
use crate::types::{Millis, Resources};

#[derive(Debug, Error)]
pub enum OrchestratorError {
    #[error("invalid descriptor: {}", format_violations(.0))]
    InvalidDescriptor(Vec<Violation>),
    #[error("placement failed: {0}")]
    PlacementFailed(String),
    #[error("deployment failed: {0}")]
    DeploymentFailed(String),
    #[error("chaining failed: {0}")]
    ChainingFailed(String),
    #[error("unknown application {0:?}")]
    UnknownApplication(String),
    #[error("unknown migration {0:?}")]
    UnknownMigration(String),
    #[error("application {id:?} is {status:?}")]
    NotRunning { id: String, status: AppStatus },
    #[error("migration {id} failed: {reason}")]
    MigrationFailed { id: String, reason: String },
    #[error("migration rejected: {0}")]
    MigrationRejected(String),
    #[error("orchestration plan is not terminal")]
    NonTerminal,
}

fn format_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

/// States of deployment and migration orchestration plans.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlanPhase {
    Received,
    Discovered,
    Planned,
    Instantiated,
    Deployed,
    Chained,
    Executing,
    TargetSelected,
    Migrated,
    Rechained,
    Monitored,
}

pub const DEPLOY_PHASES: [PlanPhase; 8] = [
    PlanPhase::Received,
    PlanPhase::Discovered,
    PlanPhase::Planned,
    PlanPhase::Instantiated,
    PlanPhase::Deployed,
    PlanPhase::Chained,
    PlanPhase::Executing,
    PlanPhase::Monitored,
];

pub const MIGRATE_PHASES: [PlanPhase; 5] = [
    PlanPhase::Received,
    PlanPhase::TargetSelected,
    PlanPhase::Migrated,
    PlanPhase::Rechained,
    PlanPhase::Monitored,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlanKind {
    Deployment,
    Migration,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub phase: PlanPhase,
    pub at_ms: Millis,
}

/// One orchestrated step: the state it reaches plus its clock window.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepLogEntry {
    pub state: PlanPhase,
    pub enter_ms: Millis,
    pub exit_ms: Millis,
}

/// A deployment or migration plan instance with full timing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrchestrationPlan {
    pub kind: PlanKind,
    pub app: String,
    /// Simulator time when the triggering request was sent.
    pub started_ms: Millis,
    /// Simulator time when the final acknowledgment arrived; present once
    /// the plan is terminal.
    pub finished_ms: Option<Millis>,
    pub transitions: Vec<Transition>,
    pub step_log: Vec<StepLogEntry>,
    pub failed_at: Option<PlanPhase>,
    /// Messages exchanged on behalf of this plan.
    pub message_count: u64,
}

impl OrchestrationPlan {
    fn new(kind: PlanKind, app: &str, started_ms: Millis) -> Self {
        OrchestrationPlan {
            kind,
            app: app.to_string(),
            started_ms,
            finished_ms: None,
            transitions: Vec::new(),
            step_log: Vec::new(),
            failed_at: None,
            message_count: 0,
        }
    }

    pub fn is_terminal(&self) -> bool {
        self.finished_ms.is_some()
    }

    /// The phase order this plan must follow.
    pub fn expected_phases(&self) -> &'static [PlanPhase] {
        match self.kind {
            PlanKind::Deployment => &DEPLOY_PHASES,
            PlanKind::Migration => &MIGRATE_PHASES,
        }
    }

    /// Check that the recorded transitions advance strictly in order
    /// without skipping states.
    pub fn verify_ordering(&self) -> Result<(), String> {
        let expected = self.expected_phases();
        if self.transitions.len() > expected.len() {
            return Err(format!(
                "{} transitions, expected at most {}",
                self.transitions.len(),
                expected.len()
            ));
        }
        for (i, t) in self.transitions.iter().enumerate() {
            if t.phase != expected[i] {
                return Err(format!(
                    "transition {i} is {:?}, expected {:?}",
                    t.phase, expected[i]
                ));
            }
        }
        for w in self.transitions.windows(2) {
            if w[1].at_ms < w[0].at_ms {
                return Err("transition times go backwards".into());
            }
        }
        Ok(())
    }
}

/// Latency of a terminal plan: final acknowledgment minus request start on
/// the simulator clock.
pub fn orchestration_latency(plan: &OrchestrationPlan) -> Result<Millis, OrchestratorError> {
    match plan.finished_ms {
        Some(end) => Ok(end - plan.started_ms),
        None => Err(OrchestratorError::NonTerminal),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AppStatus {
    Deploying,
    Running,
    Migrating,
    Failed,
    Terminated,
}

/// Lifecycle record of one application.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApplicationRecord {
    pub id: String,
    pub descriptor: ApplicationDescriptor,
    pub forwarding_graph: ForwardingGraph,
    pub deployment: Option<DeploymentPlan>,
    pub chaining: Option<ChainingPlan>,
    pub status: AppStatus,
    /// Deployment plan first, then one entry per migration.
    pub plans: Vec<OrchestrationPlan>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MigrationStatus {
    Completed,
    Failed,
}

/// Outcome record of one migration request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MigrationRecord {
    pub id: String,
    pub app: String,
    pub request: MigrationRequest,
    pub status: MigrationStatus,
    pub report: Option<MigrationReport>,
    pub plan: OrchestrationPlan,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlacementStrategy {
    Greedy,
    Exhaustive,
    /// Greedy first; an exhaustive pass backs it up when greedy dead-ends.
    GreedyThenExhaustive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiscoveryMode {
    /// Snapshot the repository on every deploy request.
    OnDemand,
    /// Reuse the first snapshot taken (emulates pre-done discovery).
    Cached,
}

/// How the deploy request chooses node assignments.
#[derive(Debug, Clone)]
pub enum PlacementDirective {
    Auto,
    /// Use exactly this assignment (benchmark layouts).
    Pinned(Assignment),
}

#[derive(Debug, Clone, Copy)]
pub struct OrchestratorConfig {
    pub alpha: f64,
    pub strategy: PlacementStrategy,
    pub discovery: DiscoveryMode,
    pub enumeration_budget: u64,
}

impl Default for OrchestratorConfig {
    fn default() -> Self {
        OrchestratorConfig {
            alpha: 0.5,
            strategy: PlacementStrategy::GreedyThenExhaustive,
            discovery: DiscoveryMode::OnDemand,
            enumeration_budget: DEFAULT_ENUMERATION_BUDGET,
        }
    }
}

/// Test hook: make one upcoming step fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaultPoint {
    Instantiation,
    Chaining,
    Migration(MigrationStep),
}

pub struct Orchestrator {
    repo: Arc<Repository>,
    world: Mutex<SimWorld>,
    records: RwLock<BTreeMap<String, ApplicationRecord>>,
    op_guards: Mutex<BTreeMap<String, Arc<Mutex<()>>>>,
    migrations: RwLock<BTreeMap<String, MigrationRecord>>,
    cached_snapshot: Mutex<Option<InfrastructureGraph>>,
    fault: Mutex<Option<FaultPoint>>,
    config: OrchestratorConfig,
    next_app: AtomicU64,
    next_migration: AtomicU64,
}

impl Orchestrator {
    pub fn new(repo: Arc<Repository>, world: SimWorld, config: OrchestratorConfig) -> Self {
        Orchestrator {
            repo,
            world: Mutex::new(world),
            records: RwLock::new(BTreeMap::new()),
            op_guards: Mutex::new(BTreeMap::new()),
            migrations: RwLock::new(BTreeMap::new()),
            cached_snapshot: Mutex::new(None),
            fault: Mutex::new(None),
            config,
            next_app: AtomicU64::new(1),
            next_migration: AtomicU64::new(1),
        }
    }

    pub fn repository(&self) -> &Repository {
        &self.repo
    }

    /// Direct simulator access (tests, benchmarks, monitoring drivers).
    pub fn world(&self) -> parking_lot::MutexGuard<'_, SimWorld> {
        self.world.lock()
    }

    /// Arm a one-shot failure at the given point.
    pub fn inject_fault(&self, fault: FaultPoint) {
        *self.fault.lock() = Some(fault);
    }

    fn take_fault(&self, matching: impl Fn(&FaultPoint) -> bool) -> Option<FaultPoint> {
        let mut slot = self.fault.lock();
        if slot.as_ref().is_some_and(&matching) {
            slot.take()
        } else {
            None
        }
    }

    fn op_guard(&self, id: &str) -> Arc<Mutex<()>> {
        Arc::clone(self.op_guards.lock().entry(id.to_string()).or_default())
    }

    fn commit(&self, record: &ApplicationRecord) {
        self.records
            .write()
            .insert(record.id.clone(), record.clone());
    }

    /// Current record view; side-effect free.
    pub fn application_status(&self, id: &str) -> Result<ApplicationRecord, OrchestratorError> {
        self.records
            .read()
            .get(id)
            .cloned()
            .ok_or_else(|| OrchestratorError::UnknownApplication(id.to_string()))
    }

    pub fn applications(&self) -> Vec<ApplicationRecord> {
        self.records.read().values().cloned().collect()
    }

    pub fn migration_status(&self, id: &str) -> Result<MigrationRecord, OrchestratorError> {
        self.migrations
            .read()
            .get(id)
            .cloned()
            .ok_or_else(|| OrchestratorError::UnknownMigration(id.to_string()))
    }

    fn discovery_snapshot(&self) -> InfrastructureGraph {
        match self.config.discovery {
            DiscoveryMode::OnDemand => self.repo.snapshot(),
            DiscoveryMode::Cached => {
                let mut cache = self.cached_snapshot.lock();
                cache.get_or_insert_with(|| self.repo.snapshot()).clone()
            }
        }
    }

    /// Deploy an application end to end: discovery, placement,
    /// instantiation, chaining, execution start and monitoring
    /// registration, as one state machine run.
    pub fn handle_deploy(
        &self,
        descriptor: ApplicationDescriptor,
        directive: PlacementDirective,
    ) -> Result<ApplicationRecord, OrchestratorError> {
        let violations = validate_graph(&descriptor);
        if !violations.is_empty() {
            return Err(OrchestratorError::InvalidDescriptor(violations));
        }
        let fg = flatten_to_vnffg(&descriptor).map_err(|e| {
            OrchestratorError::InvalidDescriptor(vec![Violation {
                location: "structure".into(),
                message: e.to_string(),
            }])
        })?;

        let id = format!("app-{:04}", self.next_app.fetch_add(1, Ordering::SeqCst));
        let guard = self.op_guard(&id);
        let _op = guard.lock();
        let mut world = self.world.lock();

        let mut record = ApplicationRecord {
            id: id.clone(),
            descriptor,
            forwarding_graph: fg,
            deployment: None,
            chaining: None,
            status: AppStatus::Deploying,
            plans: Vec::new(),
        };
        self.commit(&record);

        let events_start = world.events().len();
        let started = world.now();
        let mut plan = OrchestrationPlan::new(PlanKind::Deployment, &id, started);
        let orch = PaasModule::Orchestrator.as_str();
        let label = |what: &str| format!("{id}/{what}");

        let result = (|| -> Result<(), OrchestratorError> {
            world
                .send(
                    PaasModule::GraphGenerator.as_str(),
                    orch,
                    &label("deploy.request"),
                )
                .map_err(sim_deploy)?;
            transition(&mut plan, PlanPhase::Received, world.now());

            // -- discovery ------------------------------------------------
            let enter = world.now();
            let install = world.config().blueprint_install_ms;
            world.process(orch, install, &label("blueprint-install.discovery"));
            world
                .exchange(orch, PaasModule::Repository.as_str(), &label("discover"))
                .map_err(sim_deploy)?;
            let snapshot = self.discovery_snapshot();
            world.sync_infrastructure(&snapshot);
            transition(&mut plan, PlanPhase::Discovered, world.now());
            step(&mut plan, PlanPhase::Discovered, enter, world.now());

            // -- placement ------------------------------------------------
            let enter = world.now();
            world.process(orch, install, &label("blueprint-install.deployment"));
            world
                .send(
                    orch,
                    PaasModule::DeploymentEngine.as_str(),
                    &label("plan.request"),
                )
                .map_err(sim_deploy)?;
            let effective = with_residual_capacity(snapshot.clone(), &world.usage_map());
            let problem = PlacementProblem::new(&record.descriptor, &effective, self.config.alpha)
                .map_err(|e| OrchestratorError::PlacementFailed(e.to_string()))?;
            let deployment = match &directive {
                PlacementDirective::Pinned(assignment) => {
                    let report = is_feasible(&problem, assignment);
                    if !report.ok {
                        return Err(OrchestratorError::PlacementFailed(format!(
                            "pinned assignment infeasible: {}",
                            report.violations.join("; ")
                        )));
                    }
                    let objective = evaluate_plan(&problem, assignment)
                        .map_err(|e| OrchestratorError::PlacementFailed(e.to_string()))?;
                    DeploymentPlan {
                        assignment: assignment.clone(),
                        objective,
                    }
                }
                PlacementDirective::Auto => solve(
                    &problem,
                    self.config.strategy,
                    self.config.enumeration_budget,
                )
                .map_err(|e| OrchestratorError::PlacementFailed(e.to_string()))?,
            };
            transition(&mut plan, PlanPhase::Planned, world.now());
            step(&mut plan, PlanPhase::Planned, enter, world.now());
            record.deployment = Some(deployment);

            // -- instantiation + deployment -------------------------------
            let enter = world.now();
            let assignment = record
                .deployment
                .as_ref()
                .expect("just planned")
                .assignment
                .clone();
            let engine = PaasModule::DeploymentEngine.as_str();
            let fault_here = self
                .take_fault(|f| *f == FaultPoint::Instantiation)
                .is_some();
            let mut created = Vec::new();
            for comp_id in record.descriptor.structure.leaves() {
                let comp = record.descriptor.component(comp_id).expect("validated");
                let node = assignment.get(comp_id).expect("total assignment").clone();
                world
                    .exchange(engine, &node, &label(&format!("{comp_id}.deploy")))
                    .map_err(sim_deploy)?;
                let iid = world
                    .create_instance(&id, &node, comp_id, comp.demands())
                    .map_err(|e| OrchestratorError::DeploymentFailed(e.to_string()))?;
                created.push(iid);
            }
            if fault_here {
                return Err(OrchestratorError::DeploymentFailed(
                    "injected instantiation fault".into(),
                ));
            }
            transition(&mut plan, PlanPhase::Instantiated, world.now());
            for iid in &created {
                world
                    .run_instance(iid)
                    .map_err(|e| OrchestratorError::DeploymentFailed(e.to_string()))?;
            }
            world
                .send(engine, orch, &label("plan.ack"))
                .map_err(sim_deploy)?;
            transition(&mut plan, PlanPhase::Deployed, world.now());
            step(&mut plan, PlanPhase::Deployed, enter, world.now());

            // -- chaining --------------------------------------------------
            let enter = world.now();
            let executor = PaasModule::ExecutionEngine.as_str();
            world
                .send(orch, executor, &label("chain.request"))
                .map_err(sim_deploy)?;
            if self.take_fault(|f| *f == FaultPoint::Chaining).is_some() {
                return Err(OrchestratorError::ChainingFailed(
                    "injected chaining fault".into(),
                ));
            }
            let chaining =
                derive_chaining_plan(&id, &record.forwarding_graph, &assignment, &snapshot)
                    .map_err(|e| OrchestratorError::ChainingFailed(e.to_string()))?;
            let mut touched: Vec<&String> = chaining.links.iter().map(|l| &l.from.node).collect();
            touched.sort();
            touched.dedup();
            for node in touched {
                let node = node.clone();
                world
                    .exchange(executor, &node, &label("table.install"))
                    .map_err(sim_deploy)?;
            }
            apply_chaining_plan(&chaining, &mut world)
                .map_err(|e| OrchestratorError::ChainingFailed(e.to_string()))?;
            world
                .send(executor, orch, &label("chain.ack"))
                .map_err(sim_deploy)?;
            record.chaining = Some(chaining);
            transition(&mut plan, PlanPhase::Chained, world.now());
            step(&mut plan, PlanPhase::Chained, enter, world.now());

            // -- execution start -------------------------------------------
            let enter = world.now();
            world
                .exchange(orch, executor, &label("execute"))
                .map_err(sim_deploy)?;
            transition(&mut plan, PlanPhase::Executing, world.now());
            step(&mut plan, PlanPhase::Executing, enter, world.now());

            // -- monitoring -------------------------------------------------
            let enter = world.now();
            world
                .exchange(
                    orch,
                    PaasModule::MonitoringEngine.as_str(),
                    &label("monitor"),
                )
                .map_err(sim_deploy)?;
            world.monitor_register(
                &id,
                assignment
                    .iter()
                    .map(|(c, n)| (c.clone(), n.clone()))
                    .collect(),
            );
            transition(&mut plan, PlanPhase::Monitored, world.now());
            step(&mut plan, PlanPhase::Monitored, enter, world.now());
            Ok(())
        })();

        match result {
            Ok(()) => {
                // module endpoints always resolve; a failed ack must not
                // strand the committed record
                let _ = world.send(
                    orch,
                    PaasModule::GraphGenerator.as_str(),
                    &label("deploy.ack"),
                );
                plan.finished_ms = Some(world.now());
                plan.message_count = count_messages(&world, events_start, &id);
                record.status = AppStatus::Running;
                record.plans.push(plan);
                self.commit(&record);
                Ok(record)
            }
            Err(err) => {
                // tear down whatever was instantiated; chains and monitoring
                // registrations go with it
                let ids: Vec<String> = world
                    .instances_of_app(&id)
                    .iter()
                    .map(|i| i.id.clone())
                    .collect();
                for iid in ids {
                    let _ = world.stop_instance(&iid);
                }
                world.clear_forwarding(&id);
                world.monitor_unregister(&id);
                let _ = world.send(
                    orch,
                    PaasModule::GraphGenerator.as_str(),
                    &label("deploy.nack"),
                );
                plan.failed_at = Some(next_phase(&plan, PlanKind::Deployment));
                plan.finished_ms = Some(world.now());
                plan.message_count = count_messages(&world, events_start, &id);
                record.status = AppStatus::Failed;
                record.deployment = None;
                record.chaining = None;
                record.plans.push(plan);
                self.commit(&record);
                Err(err)
            }
        }
    }

    /// Migrate one component of a running application.
    pub fn handle_migrate(
        &self,
        req: MigrationRequest,
    ) -> Result<MigrationRecord, OrchestratorError> {
        let guard = self.op_guard(&req.app);
        let _op = guard.lock();

        let mut record = self.application_status(&req.app)?;
        if record.status != AppStatus::Running {
            return Err(OrchestratorError::NotRunning {
                id: req.app.clone(),
                status: record.status,
            });
        }
        if record.descriptor.component(&req.component).is_none() {
            return Err(OrchestratorError::MigrationRejected(format!(
                "component {:?} is not part of {:?}",
                req.component, req.app
            )));
        }
        record.status = AppStatus::Migrating;
        self.commit(&record);

        let mid = format!(
            "m-{:04}",
            self.next_migration.fetch_add(1, Ordering::SeqCst)
        );
        let mut world = self.world.lock();
        let events_start = world.events().len();
        let started = world.now();
        let mut plan = OrchestrationPlan::new(PlanKind::Migration, &req.app, started);
        let orch = PaasModule::Orchestrator.as_str();
        let requester = match req.reason {
            crate::migration::MigrationReason::Manual => crate::nodesim::CLIENT_ENDPOINT,
            _ => PaasModule::MonitoringEngine.as_str(),
        };
        let label = |what: &str| format!("{}/{what}", req.app);
        let fault = self.take_fault(|f| matches!(f, FaultPoint::Migration(_)));
        let fail_at = match fault {
            Some(FaultPoint::Migration(step)) => Some(step),
            _ => None,
        };

        let outcome = (|| -> Result<crate::migration::MigrationOutcome, MigrationError> {
            world
                .send(requester, orch, &label("migrate.request"))
                .map_err(|e| MigrationError::StepFailed {
                    step: MigrationStep::StopInstance,
                    cause: e.to_string(),
                    rollback: "nothing to roll back".into(),
                })?;
            transition(&mut plan, PlanPhase::Received, world.now());

            let enter = world.now();
            let install = world.config().blueprint_install_ms;
            world.process(orch, install, &label("blueprint-install.migration"));
            world
                .send(
                    orch,
                    PaasModule::MigrationEngine.as_str(),
                    &label("migrate.dispatch"),
                )
                .map_err(|e| MigrationError::StepFailed {
                    step: MigrationStep::StopInstance,
                    cause: e.to_string(),
                    rollback: "nothing to roll back".into(),
                })?;
            let snapshot = self.discovery_snapshot();
            world.sync_infrastructure(&snapshot);
            let deployment = record.deployment.as_ref().expect("running app has a plan");
            let chaining = record.chaining.as_ref().expect("running app is chained");
            let target = select_target(
                &req,
                &snapshot,
                &record.descriptor,
                &deployment.assignment,
                &record.forwarding_graph,
                &world.usage_map(),
            )?;
            let source = deployment
                .assignment
                .get(&req.component)
                .expect("deployed")
                .clone();
            let component = record
                .descriptor
                .component(&req.component)
                .expect("checked");
            let migration_plan = build_migration_plan(component, &source, &target, world.config())?;
            transition(&mut plan, PlanPhase::TargetSelected, world.now());
            step(&mut plan, PlanPhase::TargetSelected, enter, world.now());

            let ctx = MigrationContext {
                app_id: &req.app,
                descriptor: &record.descriptor,
                assignment: &deployment.assignment,
                chaining,
                infra: &snapshot,
            };
            let outcome = execute_migration(&migration_plan, &ctx, &mut world, fail_at)?;

            // fold the six step timings into the three remaining phases
            let timing_window = |steps: &[MigrationStep]| {
                let spans: Vec<_> = outcome
                    .report
                    .step_timings
                    .iter()
                    .filter(|t| steps.contains(&t.step))
                    .collect();
                (spans.first().map(|t| t.start), spans.last().map(|t| t.end))
            };
            let (m_start, m_end) = timing_window(&[
                MigrationStep::StopInstance,
                MigrationStep::PushImage,
                MigrationStep::PullImage,
                MigrationStep::StartInstance,
            ]);
            transition(&mut plan, PlanPhase::Migrated, m_end.unwrap_or(world.now()));
            step(
                &mut plan,
                PlanPhase::Migrated,
                m_start.unwrap_or(enter),
                m_end.unwrap_or(world.now()),
            );
            let (r_start, r_end) = timing_window(&[MigrationStep::Rechain]);
            transition(
                &mut plan,
                PlanPhase::Rechained,
                r_end.unwrap_or(world.now()),
            );
            step(
                &mut plan,
                PlanPhase::Rechained,
                r_start.unwrap_or(world.now()),
                r_end.unwrap_or(world.now()),
            );
            let (n_start, n_end) = timing_window(&[MigrationStep::RegisterMonitoring]);
            transition(
                &mut plan,
                PlanPhase::Monitored,
                n_end.unwrap_or(world.now()),
            );
            step(
                &mut plan,
                PlanPhase::Monitored,
                n_start.unwrap_or(world.now()),
                n_end.unwrap_or(world.now()),
            );
            Ok(outcome)
        })();

        match outcome {
            Ok(outcome) => {
                let _ = world.send(orch, requester, &label("migrate.ack"));
                plan.finished_ms = Some(world.now());
                plan.message_count = count_messages(&world, events_start, &req.app);

                let effective = with_residual_capacity(self.repo.snapshot(), &world.usage_map());
                if let Some(deployment) = record.deployment.as_mut() {
                    deployment.assignment = outcome.report.new_assignment.clone();
                    if let Ok(problem) =
                        PlacementProblem::new(&record.descriptor, &effective, self.config.alpha)
                    {
                        if let Ok(objective) = evaluate_plan(&problem, &deployment.assignment) {
                            deployment.objective = objective;
                        }
                    }
                }
                record.chaining = Some(outcome.chaining.clone());
                record.status = AppStatus::Running;
                record.plans.push(plan.clone());
                self.commit(&record);

                let migration_record = MigrationRecord {
                    id: mid.clone(),
                    app: req.app.clone(),
                    request: req,
                    status: MigrationStatus::Completed,
                    report: Some(outcome.report),
                    plan,
                    error: None,
                };
                self.migrations
                    .write()
                    .insert(mid, migration_record.clone());
                Ok(migration_record)
            }
            Err(err) => {
                let _ = world.send(orch, requester, &label("migrate.nack"));
                plan.failed_at = Some(next_phase(&plan, PlanKind::Migration));
                plan.finished_ms = Some(world.now());
                plan.message_count = count_messages(&world, events_start, &req.app);
                record.status = AppStatus::Running; // still serving on the source
                record.plans.push(plan.clone());
                self.commit(&record);
                let migration_record = MigrationRecord {
                    id: mid.clone(),
                    app: req.app.clone(),
                    request: req,
                    status: MigrationStatus::Failed,
                    report: None,
                    plan,
                    error: Some(err.to_string()),
                };
                self.migrations
                    .write()
                    .insert(mid.clone(), migration_record);
                Err(OrchestratorError::MigrationFailed {
                    id: mid,
                    reason: err.to_string(),
                })
            }
        }
    }

    /// Stop all instances and drop chains and monitoring for an
    /// application.
    pub fn teardown(&self, id: &str) -> Result<ApplicationRecord, OrchestratorError> {
        let guard = self.op_guard(id);
        let _op = guard.lock();
        let mut record = self.application_status(id)?;
        let mut world = self.world.lock();
        let ids: Vec<String> = world
            .instances_of_app(id)
            .iter()
            .map(|i| i.id.clone())
            .collect();
        for iid in ids {
            let _ = world.stop_instance(&iid);
        }
        world.clear_forwarding(id);
        world.monitor_unregister(id);
        record.status = AppStatus::Terminated;
        record.chaining = None;
        self.commit(&record);
        Ok(record)
    }

    /// Poll the monitoring engine at simulator time `at`.
    pub fn poll_monitoring(&self, at: Millis) -> Vec<MigrationRequest> {
        self.world.lock().monitor_tick(at)
    }

    /// End-to-end traversal of a running application under a synthetic
    /// footage workload.
    pub fn measure_e2e(&self, id: &str, footage_units: u64) -> Result<Millis, OrchestratorError> {
        let record = self.application_status(id)?;
        if record.status != AppStatus::Running {
            return Err(OrchestratorError::NotRunning {
                id: id.to_string(),
                status: record.status,
            });
        }
        let deployment = record
            .deployment
            .as_ref()
            .ok_or(OrchestratorError::NonTerminal)?;
        let chaining = record
            .chaining
            .as_ref()
            .ok_or(OrchestratorError::NonTerminal)?;
        let world = self.world.lock();
        world
            .measure_e2e(
                id,
                &record.descriptor,
                &deployment.assignment,
                &chaining.links,
                footage_units,
            )
            .map_err(|e| match e {
                SimError::AppNotRunning(_) => OrchestratorError::NotRunning {
                    id: id.to_string(),
                    status: record.status,
                },
                other => OrchestratorError::DeploymentFailed(other.to_string()),
            })
    }
}

fn sim_deploy(e: SimError) -> OrchestratorError {
    OrchestratorError::DeploymentFailed(e.to_string())
}

fn transition(plan: &mut OrchestrationPlan, phase: PlanPhase, at_ms: Millis) {
    plan.transitions.push(Transition { phase, at_ms });
}

fn step(plan: &mut OrchestrationPlan, state: PlanPhase, enter_ms: Millis, exit_ms: Millis) {
    plan.step_log.push(StepLogEntry {
        state,
        enter_ms,
        exit_ms,
    });
}

/// The state a failing plan was advancing towards.
fn next_phase(plan: &OrchestrationPlan, kind: PlanKind) -> PlanPhase {
    let expected: &[PlanPhase] = match kind {
        PlanKind::Deployment => &DEPLOY_PHASES,
        PlanKind::Migration => &MIGRATE_PHASES,
    };
    expected
        .get(plan.transitions.len())
        .copied()
        .unwrap_or(*expected.last().expect("non-empty phase list"))
}

fn count_messages(world: &SimWorld, from_index: usize, app_id: &str) -> u64 {
    let prefix = format!("{app_id}/");
    world.events()[from_index..]
        .iter()
        .filter(|e| match &e.kind {
            SimEventKind::Message { label, .. } => label.starts_with(&prefix),
            _ => false,
        })
        .count() as u64
}

fn with_residual_capacity(
    mut infra: InfrastructureGraph,
    usage: &BTreeMap<String, Resources>,
) -> InfrastructureGraph {
    for n in &mut infra.nodes {
        if let Some(u) = usage.get(&n.id) {
            n.cpu_cap = n.cpu_cap.saturating_sub(u.cpu);
            n.memory_cap = n.memory_cap.saturating_sub(u.memory);
            n.disk_cap = n.disk_cap.saturating_sub(u.disk);
        }
    }
    infra
}

fn solve(
    problem: &PlacementProblem<'_>,
    strategy: PlacementStrategy,
    budget: u64,
) -> Result<DeploymentPlan, PlacementError> {
    match strategy {
        PlacementStrategy::Greedy => plan_greedy(problem),
        PlacementStrategy::Exhaustive => plan_exhaustive_with_budget(problem, budget),
        PlacementStrategy::GreedyThenExhaustive => match plan_greedy(problem) {
            Ok(plan) => Ok(plan),
            Err(PlacementError::Infeasible) => plan_exhaustive_with_budget(problem, budget),
            Err(other) => Err(other),
        },
    }
}
