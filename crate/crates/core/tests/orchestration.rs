//! End-to-end orchestration scenarios over the simulated edge/cloud
//! environment.

use std::collections::BTreeSet;
use std::sync::Arc;

use fogpaas::appgraph::{ApplicationDescriptor, ComponentDescriptor, StructureNode as N};
use fogpaas::chaining::verify_chains;
use fogpaas::infra::Repository;
use fogpaas::migration::{MigrationReason, MigrationRequest, MigrationStep};
use fogpaas::nodesim::{SimConfig, SimWorld};
use fogpaas::orchestrator::{
    orchestration_latency, AppStatus, DiscoveryMode, FaultPoint, Orchestrator, OrchestratorConfig,
    OrchestratorError, PlacementDirective, PlanPhase,
};
use fogpaas::scenarios;
use fogpaas::types::Tier;

fn edge_cloud_orchestrator(config: SimConfig) -> Orchestrator {
    let repo = Arc::new(Repository::new());
    scenarios::publish_edge_cloud(&repo);
    let mut world = SimWorld::new(config);
    world.sync_infrastructure(&repo.snapshot());
    Orchestrator::new(repo, world, OrchestratorConfig::default())
}

fn uniform_config(latency: u64) -> SimConfig {
    SimConfig {
        lan_ms: latency,
        wan_ms: latency,
        paas_fog_ms: latency,
        paas_cloud_ms: latency,
        paas_paas_ms: latency,
        blueprint_install_ms: 0,
        jitter_ms: 0,
        ..SimConfig::default()
    }
}

fn zero_image(mut app: ApplicationDescriptor) -> ApplicationDescriptor {
    for c in &mut app.components {
        c.image_size = 0;
    }
    app
}

#[test]
fn parade_deploy_reaches_running_with_six_steps() {
    let orch = edge_cloud_orchestrator(SimConfig::default());
    let record = orch
        .handle_deploy(scenarios::smart_parade_app(), PlacementDirective::Auto)
        .unwrap();
    assert_eq!(record.status, AppStatus::Running);
    let plan = &record.plans[0];
    assert_eq!(plan.step_log.len(), 6);
    plan.verify_ordering().unwrap();
    assert_eq!(plan.transitions.len(), 8);
    assert!(plan.is_terminal());

    // chains verify against the live assignment
    let deployment = record.deployment.as_ref().unwrap();
    let violations = verify_chains(
        &record.forwarding_graph,
        &deployment.assignment,
        record.chaining.as_ref().unwrap(),
        &orch.repository().snapshot(),
    );
    assert!(violations.is_empty(), "{violations:?}");

    // tier constraints held
    let snap = orch.repository().snapshot();
    for (comp, node) in &deployment.assignment {
        let tier = snap.node(node).unwrap().tier;
        let allowed = &record.descriptor.component(comp).unwrap().allowed_tiers;
        assert!(allowed.contains(&tier), "{comp} on {node}");
    }

    let world = orch.world();
    world.audit_clock_monotone().unwrap();
    world.audit_single_running().unwrap();
    world.audit_capacity().unwrap();
}

#[test]
fn fog_only_component_without_fog_nodes_fails_placement() {
    let repo = Arc::new(Repository::new());
    let infra = scenarios::edge_cloud_infra();
    // publish only the cloud node
    let cloud = infra
        .nodes
        .iter()
        .find(|n| n.tier == Tier::Cloud)
        .unwrap()
        .clone();
    repo.publish_node(cloud, vec![]).unwrap();
    let mut world = SimWorld::new(SimConfig::default());
    world.sync_infrastructure(&repo.snapshot());
    let orch = Orchestrator::new(repo, world, OrchestratorConfig::default());

    let app = ApplicationDescriptor::new(
        "edge-only",
        vec![ComponentDescriptor {
            id: "sensor".into(),
            cpu_req: 1,
            memory_req: 1,
            disk_req: 1,
            traffic_req: 0,
            workload: 1,
            allowed_tiers: [Tier::Fog].into(),
            image_size: 1,
        }],
        N::leaf("sensor"),
    );
    let err = orch
        .handle_deploy(app, PlacementDirective::Auto)
        .unwrap_err();
    assert!(
        matches!(err, OrchestratorError::PlacementFailed(_)),
        "{err}"
    );
    assert_eq!(orch.world().running_instances().len(), 0);
    let record = &orch.applications()[0];
    assert_eq!(record.status, AppStatus::Failed);
    assert_eq!(record.plans[0].failed_at, Some(PlanPhase::Planned));
}

#[test]
fn injected_chain_failure_stops_every_instance() {
    let orch = edge_cloud_orchestrator(SimConfig::default());
    orch.inject_fault(FaultPoint::Chaining);
    let err = orch
        .handle_deploy(scenarios::smart_parade_app(), PlacementDirective::Auto)
        .unwrap_err();
    assert!(matches!(err, OrchestratorError::ChainingFailed(_)));
    assert_eq!(orch.world().running_instances().len(), 0);
    let record = &orch.applications()[0];
    assert_eq!(record.status, AppStatus::Failed);
    assert_eq!(record.plans[0].failed_at, Some(PlanPhase::Chained));
    orch.world().audit_capacity().unwrap();
}

#[test]
fn injected_instantiation_failure_tears_down() {
    let orch = edge_cloud_orchestrator(SimConfig::default());
    orch.inject_fault(FaultPoint::Instantiation);
    let err = orch
        .handle_deploy(scenarios::smart_parade_app(), PlacementDirective::Auto)
        .unwrap_err();
    assert!(matches!(err, OrchestratorError::DeploymentFailed(_)));
    assert_eq!(orch.world().running_instances().len(), 0);
    assert_eq!(
        orch.applications()[0].plans[0].failed_at,
        Some(PlanPhase::Instantiated)
    );
}

#[test]
fn mobility_event_migrates_the_component() {
    let orch = edge_cloud_orchestrator(SimConfig::default());
    let record = orch
        .handle_deploy(scenarios::smart_parade_app(), PlacementDirective::Auto)
        .unwrap();
    let source = record.deployment.as_ref().unwrap().assignment["capture-parade-footage"].clone();

    let poll_at = {
        let mut world = orch.world();
        let at = world.now() + 10;
        world
            .inject_event(fogpaas::nodesim::DisturbanceKind::Mobility, &source, at)
            .unwrap();
        let period = world.config().monitor_period_ms;
        at.div_ceil(period) * period
    };
    let requests = orch.poll_monitoring(poll_at);
    let ours: Vec<&MigrationRequest> = requests
        .iter()
        .filter(|r| r.component == "capture-parade-footage")
        .collect();
    assert!(
        !ours.is_empty(),
        "expected a mobility request, got {requests:?}"
    );
    assert_eq!(ours[0].reason, MigrationReason::Mobility);

    let migration = orch.handle_migrate(ours[0].clone()).unwrap();
    let report = migration.report.unwrap();
    assert_ne!(report.target, source);
    // the paper's parade scenario moves the capture component between fog
    // nodes as the parade moves; both fog nodes sit in the same domain
    let snap = orch.repository().snapshot();
    assert_eq!(snap.node(&report.target).unwrap().tier, Tier::Fog);

    let record = orch.application_status(&record.id).unwrap();
    assert_eq!(record.status, AppStatus::Running);
    let violations = verify_chains(
        &record.forwarding_graph,
        &record.deployment.as_ref().unwrap().assignment,
        record.chaining.as_ref().unwrap(),
        &snap,
    );
    assert!(violations.is_empty(), "{violations:?}");

    // monitoring followed the component to its new node
    assert_eq!(
        orch.world()
            .monitored_node(&record.id, "capture-parade-footage")
            .unwrap(),
        &report.target
    );
    orch.world().audit_single_running().unwrap();
}

#[test]
fn migrating_a_terminated_app_is_rejected_without_state_change() {
    let orch = edge_cloud_orchestrator(SimConfig::default());
    let record = orch
        .handle_deploy(scenarios::smart_parade_app(), PlacementDirective::Auto)
        .unwrap();
    orch.teardown(&record.id).unwrap();
    let before = serde_json::to_string(&orch.application_status(&record.id).unwrap()).unwrap();
    let err = orch
        .handle_migrate(MigrationRequest {
            app: record.id.clone(),
            component: "capture-parade-footage".into(),
            reason: MigrationReason::Manual,
            hint: None,
        })
        .unwrap_err();
    assert!(matches!(err, OrchestratorError::NotRunning { .. }));
    let after = serde_json::to_string(&orch.application_status(&record.id).unwrap()).unwrap();
    assert_eq!(before, after);
}

#[test]
fn concurrent_migrations_serialize_and_stay_consistent() {
    let orch = Arc::new(edge_cloud_orchestrator(SimConfig::default()));
    let record = orch
        .handle_deploy(scenarios::smart_parade_app(), PlacementDirective::Auto)
        .unwrap();
    let id = record.id.clone();
    let mut handles = Vec::new();
    for _ in 0..2 {
        let orch = Arc::clone(&orch);
        let id = id.clone();
        handles.push(std::thread::spawn(move || {
            orch.handle_migrate(MigrationRequest {
                app: id,
                component: "capture-parade-footage".into(),
                reason: MigrationReason::Manual,
                hint: None,
            })
        }));
    }
    let results: Vec<_> = handles.into_iter().map(|h| h.join().unwrap()).collect();
    // both ran to a conclusion; with two fog nodes the component simply
    // bounces, so both succeed
    assert!(results.iter().all(|r| r.is_ok()), "{results:?}");

    let record = orch.application_status(&id).unwrap();
    assert_eq!(record.status, AppStatus::Running);
    let violations = verify_chains(
        &record.forwarding_graph,
        &record.deployment.as_ref().unwrap().assignment,
        record.chaining.as_ref().unwrap(),
        &orch.repository().snapshot(),
    );
    assert!(violations.is_empty(), "{violations:?}");
    orch.world().audit_single_running().unwrap();
}

#[test]
fn status_reads_have_no_side_effects() {
    let orch = edge_cloud_orchestrator(SimConfig::default());
    let record = orch
        .handle_deploy(scenarios::smart_parade_app(), PlacementDirective::Auto)
        .unwrap();
    let first = serde_json::to_string(&orch.application_status(&record.id).unwrap()).unwrap();
    for _ in 0..3 {
        let _ = orch.application_status(&record.id).unwrap();
    }
    let last = serde_json::to_string(&orch.application_status(&record.id).unwrap()).unwrap();
    assert_eq!(first, last);
    assert!(matches!(
        orch.application_status("app-9999"),
        Err(OrchestratorError::UnknownApplication(_))
    ));
}

#[test]
fn deploy_latency_is_message_count_times_uniform_latency() {
    let m = 10;
    let orch = edge_cloud_orchestrator(uniform_config(m));
    let record = orch
        .handle_deploy(
            zero_image(scenarios::bench_app()),
            PlacementDirective::Pinned(scenarios::tc1_layout()),
        )
        .unwrap();
    let plan = &record.plans[0];
    let latency = orchestration_latency(plan).unwrap();
    assert_eq!(latency, plan.message_count * m);
    assert!(plan.message_count > 0);
}

#[test]
fn deploy_minus_migrate_is_the_message_difference_under_uniform_latency() {
    let m = 10;
    let orch = edge_cloud_orchestrator(uniform_config(m));
    let record = orch
        .handle_deploy(
            zero_image(scenarios::bench_app()),
            PlacementDirective::Pinned(scenarios::tc1_layout()),
        )
        .unwrap();
    let deploy_plan = record.plans[0].clone();
    let migration = orch
        .handle_migrate(MigrationRequest {
            app: record.id.clone(),
            component: "analyzer".into(),
            reason: MigrationReason::Manual,
            hint: Some("f1".into()),
        })
        .unwrap();
    let migrate_plan = migration.plan;

    let deploy_latency = orchestration_latency(&deploy_plan).unwrap();
    let migrate_latency = orchestration_latency(&migrate_plan).unwrap();
    assert_eq!(deploy_latency, deploy_plan.message_count * m);
    assert_eq!(migrate_latency, migrate_plan.message_count * m);
    assert!(
        deploy_plan.message_count > migrate_plan.message_count,
        "deploy {} vs migrate {}",
        deploy_plan.message_count,
        migrate_plan.message_count
    );
    assert!(deploy_latency > migrate_latency);
    assert_eq!(
        deploy_latency - migrate_latency,
        (deploy_plan.message_count - migrate_plan.message_count) * m
    );
}

#[test]
fn zero_latency_config_yields_zero_orchestration_latency() {
    let orch = edge_cloud_orchestrator(uniform_config(0));
    let record = orch
        .handle_deploy(
            zero_image(scenarios::bench_app()),
            PlacementDirective::Pinned(scenarios::tc1_layout()),
        )
        .unwrap();
    assert_eq!(orchestration_latency(&record.plans[0]).unwrap(), 0);
}

#[test]
fn nonterminal_plan_has_no_latency() {
    let plan = fogpaas::orchestrator::OrchestrationPlan {
        kind: fogpaas::orchestrator::PlanKind::Deployment,
        app: "x".into(),
        started_ms: 0,
        finished_ms: None,
        transitions: vec![],
        step_log: vec![],
        failed_at: None,
        message_count: 0,
    };
    assert!(matches!(
        orchestration_latency(&plan),
        Err(OrchestratorError::NonTerminal)
    ));
}

#[test]
fn on_demand_discovery_sees_nodes_published_between_requests() {
    let repo = Arc::new(Repository::new());
    let infra = scenarios::edge_cloud_infra();
    let cloud = infra
        .nodes
        .iter()
        .find(|n| n.tier == Tier::Cloud)
        .unwrap()
        .clone();
    repo.publish_node(cloud, vec![]).unwrap();
    let mut world = SimWorld::new(SimConfig::default());
    world.sync_infrastructure(&repo.snapshot());
    let orch = Orchestrator::new(Arc::clone(&repo), world, OrchestratorConfig::default());

    let fog_app = || {
        ApplicationDescriptor::new(
            "edge-only",
            vec![ComponentDescriptor {
                id: "sensor".into(),
                cpu_req: 1,
                memory_req: 1,
                disk_req: 1,
                traffic_req: 0,
                workload: 1,
                allowed_tiers: [Tier::Fog].into(),
                image_size: 1,
            }],
            N::leaf("sensor"),
        )
    };
    assert!(orch
        .handle_deploy(fog_app(), PlacementDirective::Auto)
        .is_err());

    // a fog node joins after the first request
    let fog = infra.nodes.iter().find(|n| n.id == "f1").unwrap().clone();
    repo.publish_node(fog, vec![]).unwrap();
    let record = orch
        .handle_deploy(fog_app(), PlacementDirective::Auto)
        .unwrap();
    assert_eq!(record.status, AppStatus::Running);
    assert_eq!(
        record.deployment.as_ref().unwrap().assignment["sensor"],
        "f1"
    );
}

#[test]
fn cached_discovery_keeps_using_the_first_snapshot() {
    let repo = Arc::new(Repository::new());
    let infra = scenarios::edge_cloud_infra();
    let cloud = infra
        .nodes
        .iter()
        .find(|n| n.tier == Tier::Cloud)
        .unwrap()
        .clone();
    repo.publish_node(cloud, vec![]).unwrap();
    let mut world = SimWorld::new(SimConfig::default());
    world.sync_infrastructure(&repo.snapshot());
    let config = OrchestratorConfig {
        discovery: DiscoveryMode::Cached,
        ..Default::default()
    };
    let orch = Orchestrator::new(Arc::clone(&repo), world, config);

    let fog_app = ApplicationDescriptor::new(
        "edge-only",
        vec![ComponentDescriptor {
            id: "sensor".into(),
            cpu_req: 1,
            memory_req: 1,
            disk_req: 1,
            traffic_req: 0,
            workload: 1,
            allowed_tiers: [Tier::Fog].into(),
            image_size: 1,
        }],
        N::leaf("sensor"),
    );
    assert!(orch
        .handle_deploy(fog_app.clone(), PlacementDirective::Auto)
        .is_err());
    let fog = infra.nodes.iter().find(|n| n.id == "f1").unwrap().clone();
    repo.publish_node(fog, vec![]).unwrap();
    // the cache still predates the fog node
    assert!(orch
        .handle_deploy(fog_app, PlacementDirective::Auto)
        .is_err());
}

#[test]
fn failed_runs_leave_no_orphan_instances() {
    let orch = edge_cloud_orchestrator(SimConfig::default());
    orch.inject_fault(FaultPoint::Chaining);
    let _ = orch.handle_deploy(scenarios::smart_parade_app(), PlacementDirective::Auto);
    let good = orch
        .handle_deploy(scenarios::smart_parade_app(), PlacementDirective::Auto)
        .unwrap();
    orch.inject_fault(FaultPoint::Migration(MigrationStep::PullImage));
    let err = orch.handle_migrate(MigrationRequest {
        app: good.id.clone(),
        component: "capture-parade-footage".into(),
        reason: MigrationReason::Manual,
        hint: None,
    });
    assert!(err.is_err());

    // every running instance belongs to a running or migrating application
    let statuses: std::collections::BTreeMap<String, AppStatus> = orch
        .applications()
        .into_iter()
        .map(|r| (r.id.clone(), r.status))
        .collect();
    let world = orch.world();
    let owners: BTreeSet<String> = world
        .running_instances()
        .iter()
        .map(|i| i.app.clone())
        .collect();
    for app in owners {
        let status = statuses[&app];
        assert!(
            matches!(status, AppStatus::Running | AppStatus::Migrating),
            "{app} is {status:?} but has running instances"
        );
    }
    world.audit_single_running().unwrap();
    world.audit_capacity().unwrap();

    // the failed migration left the app serving and consistent
    let record = orch.application_status(&good.id).unwrap();
    assert_eq!(record.status, AppStatus::Running);
    let violations = verify_chains(
        &record.forwarding_graph,
        &record.deployment.as_ref().unwrap().assignment,
        record.chaining.as_ref().unwrap(),
        &orch.repository().snapshot(),
    );
    assert!(violations.is_empty(), "{violations:?}");
}

#[test]
fn e2e_measurement_follows_the_chain_layout() {
    let orch = edge_cloud_orchestrator(SimConfig::default());
    let record = orch
        .handle_deploy(
            scenarios::bench_app(),
            PlacementDirective::Pinned(scenarios::tc1_layout()),
        )
        .unwrap();
    // hand sum for the tc1 layout under the default config, footage 1:
    //   capture 2 + hop f1->f2 1 + 5*(analyzer 1 + fog-displayer 1) + hop
    //   f2->c1 50 + cloud-displayer 2 = 65
    assert_eq!(orch.measure_e2e(&record.id, 1).unwrap(), 65);
    // footage 0 costs only the hops? no: processing scales to zero but the
    // hops remain; the zero-everything case is covered in the unit tests
    let doubled = orch.measure_e2e(&record.id, 2).unwrap();
    assert!(doubled > 65);

    orch.teardown(&record.id).unwrap();
    assert!(orch.measure_e2e(&record.id, 1).is_err());
}

fn layout_e2e(config: SimConfig) -> Vec<u64> {
    [
        scenarios::tc2_layout(),
        scenarios::tc1_layout(),
        scenarios::tc3_layout(),
    ]
    .into_iter()
    .map(|layout| {
        let orch = edge_cloud_orchestrator(config.clone());
        let record = orch
            .handle_deploy(scenarios::bench_app(), PlacementDirective::Pinned(layout))
            .unwrap();
        orch.measure_e2e(&record.id, 1).unwrap()
    })
    .collect()
}

#[test]
fn tc_layout_e2e_ordering_matches_the_latency_model() {
    let values = layout_e2e(SimConfig::default());
    assert!(
        values[0] < values[1],
        "tc2 {} !< tc1 {}",
        values[0],
        values[1]
    );
    assert!(
        values[1] < values[2],
        "tc1 {} !< tc3 {}",
        values[1],
        values[2]
    );
}

#[test]
fn tc_layout_e2e_ordering_holds_whenever_wan_dominates_lan() {
    // The edge placements cross the LAN once per loop iteration, so the
    // ordering needs the WAN to cost more than those repeated hops, not
    // merely more than one of them.
    for lan in 0u64..4 {
        for gap in [1, 10, 150] {
            let wan = 11 * lan + gap;
            let config = SimConfig {
                lan_ms: lan,
                wan_ms: wan,
                ..SimConfig::default()
            };
            let values = layout_e2e(config);
            assert!(
                values[0] < values[1] && values[1] < values[2],
                "lan {lan} wan {wan}: {values:?}"
            );
        }
    }
}

#[test]
fn removing_a_hosting_node_notifies_subscribers() {
    use fogpaas::infra::{EventInbox, NodeEvent, NodeEventKind, NotificationTransport};

    let orch = edge_cloud_orchestrator(SimConfig::default());
    let record = orch
        .handle_deploy(scenarios::smart_parade_app(), PlacementDirective::Auto)
        .unwrap();
    let hosting = record.deployment.as_ref().unwrap().assignment["capture-parade-footage"].clone();

    orch.repository().subscribe("http://watcher").unwrap();
    // removal succeeds even while components run on the node; whoever
    // subscribed learns about it through the node-left event
    orch.repository().remove_node(&hosting).unwrap();

    struct Sink(parking_lot::Mutex<EventInbox>);
    impl NotificationTransport for Sink {
        fn deliver(&self, _uri: &str, event: &NodeEvent) -> Result<(), String> {
            self.0.lock().accept(event.clone());
            Ok(())
        }
    }
    let sink = Sink(parking_lot::Mutex::new(EventInbox::new()));
    orch.repository().pump_notifications(&sink);
    let inbox = sink.0.into_inner();
    assert_eq!(inbox.events().len(), 1);
    assert_eq!(inbox.events()[0].kind, NodeEventKind::NodeLeft);
    assert_eq!(inbox.events()[0].node.id, hosting);

    // the simulated instance keeps serving until the orchestrator reacts
    assert!(orch
        .world()
        .running_instance_of(&record.id, "capture-parade-footage")
        .is_some());
    // and the snapshot no longer offers the node
    assert!(orch.repository().snapshot().node(&hosting).is_none());
}

#[test]
fn status_shows_migrating_while_a_migration_is_in_flight() {
    let orch = Arc::new(edge_cloud_orchestrator(SimConfig::default()));
    let record = orch
        .handle_deploy(scenarios::smart_parade_app(), PlacementDirective::Auto)
        .unwrap();
    let id = record.id.clone();

    // hold the simulator command lock so the migration parks right after
    // committing its status transition
    let world_guard = orch.world();
    let handle = {
        let orch = Arc::clone(&orch);
        let id = id.clone();
        std::thread::spawn(move || {
            orch.handle_migrate(MigrationRequest {
                app: id,
                component: "capture-parade-footage".into(),
                reason: MigrationReason::Manual,
                hint: None,
            })
        })
    };
    let mut observed_migrating = false;
    for _ in 0..200 {
        if orch.application_status(&id).unwrap().status == AppStatus::Migrating {
            observed_migrating = true;
            break;
        }
        std::thread::sleep(std::time::Duration::from_millis(5));
    }
    drop(world_guard);
    assert!(
        observed_migrating,
        "status never showed the in-flight migration"
    );
    handle.join().unwrap().unwrap();
    assert_eq!(
        orch.application_status(&id).unwrap().status,
        AppStatus::Running
    );
}

#[test]
fn monitoring_follows_the_component_after_migration() {
    let orch = edge_cloud_orchestrator(SimConfig::default());
    let record = orch
        .handle_deploy(scenarios::smart_parade_app(), PlacementDirective::Auto)
        .unwrap();
    let migration = orch
        .handle_migrate(MigrationRequest {
            app: record.id.clone(),
            component: "capture-parade-footage".into(),
            reason: MigrationReason::Manual,
            hint: None,
        })
        .unwrap();
    let new_node = migration.report.unwrap().target;

    // an event on the new node now reaches the re-registered component
    let poll_at = {
        let mut world = orch.world();
        let at = world.now() + 1;
        world
            .inject_event(fogpaas::nodesim::DisturbanceKind::Bottleneck, &new_node, at)
            .unwrap();
        let period = world.config().monitor_period_ms;
        at.div_ceil(period) * period
    };
    let requests = orch.poll_monitoring(poll_at);
    assert!(
        requests
            .iter()
            .any(|r| r.component == "capture-parade-footage" && r.app == record.id),
        "{requests:?}"
    );
}
