//! Ready-made applications, infrastructures and benchmark layouts.
//!
//! Two showcase applications (a smart parade and a smart accident manager)
//! exercise every structure kind. The test-case layouts tc1..tc6 pair the
//! live-pipeline benchmark application with fixed placements (tc1-tc3) or
//! with different PaaS-module latency coordinates (tc4-tc6).

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::appgraph::{ApplicationDescriptor, ComponentDescriptor, StructureNode as N};
use crate::infra::{InfrastructureGraph, LinkRecord, NodeRecord, NodeStatus, Repository};
use crate::nodesim::{PaasModule, SimConfig};
use crate::placement::Assignment;
use crate::types::Tier;

#[allow(clippy::too_many_arguments)] // mirrors the descriptor field order
fn component(
    id: &str,
    cpu: u64,
    memory: u64,
    disk: u64,
    traffic: u64,
    workload: u64,
    tiers: &[Tier],
    image: u64,
) -> ComponentDescriptor {
    ComponentDescriptor {
        id: id.into(),
        cpu_req: cpu,
        memory_req: memory,
        disk_req: disk,
        traffic_req: traffic,
        workload,
        allowed_tiers: tiers.iter().copied().collect(),
        image_size: image,
    }
}

const BOTH: &[Tier] = &[Tier::Cloud, Tier::Fog];
const FOG: &[Tier] = &[Tier::Fog];
const CLOUD: &[Tier] = &[Tier::Cloud];

/// The smart parade application: footage is captured at the edge, patterns
/// are derived and analyzed, then either feed targeted advertising or raise
/// warnings, and everything ends up stored and displayed.
pub fn smart_parade_app() -> ApplicationDescriptor {
    let components = vec![
        // camera-bound, must sit on a fog node near the parade
        component("capture-parade-footage", 500, 256, 512, 4000, 20, FOG, 80),
        // latency-sensitive pattern extraction stays at the edge
        component(
            "visible-pattern-deriver",
            1000,
            512,
            256,
            2000,
            30,
            FOG,
            120,
        ),
        component(
            "parade-footage-analyzer",
            1500,
            1024,
            512,
            1000,
            40,
            BOTH,
            200,
        ),
        component("facial-recognition", 1000, 1024, 256, 500, 30, BOTH, 150),
        component("advertisement-issuer", 250, 128, 64, 200, 10, BOTH, 40),
        component("warning-alert-issuer", 250, 128, 64, 200, 10, BOTH, 40),
        // delay-tolerant long-term storage belongs in the cloud
        component("historical-storage", 500, 2048, 4096, 500, 20, CLOUD, 60),
        component("results-displayer", 250, 256, 64, 500, 10, BOTH, 50),
    ];
    // Footage flows capture -> pattern deriver -> analyzer. Analysis either
    // drives ad targeting (via facial recognition) or raises a warning;
    // derived patterns then go to storage and to the display in parallel.
    let structure = N::sequence(vec![
        N::leaf("capture-parade-footage"),
        N::leaf("visible-pattern-deriver"),
        N::leaf("parade-footage-analyzer"),
        N::selection(
            vec![
                N::sequence(vec![
                    N::leaf("facial-recognition"),
                    N::leaf("advertisement-issuer"),
                ]),
                N::leaf("warning-alert-issuer"),
            ],
            None,
        ),
        N::parallel(vec![
            N::leaf("historical-storage"),
            N::leaf("results-displayer"),
        ]),
    ]);
    ApplicationDescriptor::new("smart-parade", components, structure)
}

/// The parade application as a version-1 descriptor document.
pub fn smart_parade_descriptor_json() -> String {
    let app = smart_parade_app();
    let doc = serde_json::json!({
        "version": 1,
        "name": app.name,
        "components": app.components,
        "structure": app.structure,
    });
    serde_json::to_string_pretty(&doc).expect("fixture serializes")
}

/// The smart accident management application: collisions are detected at
/// the roadside; alerts reach the emergency planner while the road planner
/// steers the car detector and the traffic lights; all accident data ends
/// up in diagnostics.
pub fn smart_accident_app() -> ApplicationDescriptor {
    let components = vec![
        component("collision-detector", 500, 256, 128, 2000, 20, FOG, 80),
        component("alert-issuer", 250, 128, 64, 500, 10, FOG, 40),
        component("emergency-planner", 1000, 512, 256, 500, 30, BOTH, 100),
        component("road-planner", 750, 512, 256, 500, 25, BOTH, 90),
        // rides along the ambulance, one RSU ahead
        component("car-detector-notifier", 500, 256, 128, 1000, 20, FOG, 70),
        component("traffic-light-manager", 250, 128, 64, 500, 10, FOG, 40),
        component(
            "diagnostics-prognostics",
            2000,
            4096,
            8192,
            500,
            50,
            CLOUD,
            250,
        ),
    ];
    let structure = N::sequence(vec![
        N::leaf("collision-detector"),
        N::parallel(vec![
            N::sequence(vec![N::leaf("alert-issuer"), N::leaf("emergency-planner")]),
            N::sequence(vec![
                N::leaf("road-planner"),
                N::leaf("car-detector-notifier"),
                N::leaf("traffic-light-manager"),
            ]),
        ]),
        N::leaf("diagnostics-prognostics"),
    ]);
    ApplicationDescriptor::new("smart-accident", components, structure)
}

/// The benchmark pipeline: capture feeds a per-frame analyze/display loop
/// at the edge, and a summary lands on the central cloud display.
///
/// Image sizes are kept small so a migration's transfer time stays within
/// the same order as its message costs.
pub fn bench_app() -> ApplicationDescriptor {
    bench_app_with_tiers(false)
}

/// Benchmark pipeline variant with every component allowed on both tiers,
/// for layouts that host the whole application in the cloud (tc4-tc6).
pub fn bench_app_any_tier() -> ApplicationDescriptor {
    bench_app_with_tiers(true)
}

fn bench_app_with_tiers(any_tier: bool) -> ApplicationDescriptor {
    let capture_tiers = if any_tier { BOTH } else { FOG };
    let components = vec![
        component("capture", 250, 128, 64, 4000, 2, capture_tiers, 10),
        component("analyzer", 1000, 1024, 256, 1000, 1, BOTH, 10),
        component("fog-displayer", 250, 128, 64, 500, 1, BOTH, 10),
        component("cloud-displayer", 250, 256, 64, 500, 2, BOTH, 10),
    ];
    let structure = N::sequence(vec![
        N::leaf("capture"),
        N::repeat(
            N::sequence(vec![N::leaf("analyzer"), N::leaf("fog-displayer")]),
            5,
        ),
        N::leaf("cloud-displayer"),
    ]);
    ApplicationDescriptor::new("parade-live", components, structure)
}

fn node(id: &str, domain: &str, tier: Tier, rate: u64, prices: (u64, u64, u64)) -> NodeRecord {
    NodeRecord {
        id: id.into(),
        domain_id: domain.into(),
        tier,
        cpu_cap: 8000,
        memory_cap: 16_384,
        disk_cap: 200_000,
        processing_rate: rate,
        cpu_price: prices.0,
        memory_price: prices.1,
        disk_price: prices.2,
        status: NodeStatus::Joined,
    }
}

fn link(a: &str, b: &str, latency: u64) -> LinkRecord {
    LinkRecord {
        endpoint_a: a.into(),
        endpoint_b: b.into(),
        latency,
        bandwidth: 100,
    }
}

/// Two fog nodes in one LAN plus one cloud node over a WAN link: the
/// environment for tc1-tc3 and most orchestration tests.
pub fn edge_cloud_infra() -> InfrastructureGraph {
    InfrastructureGraph {
        domains: vec![],
        nodes: vec![
            node("c1", "cloud-east", Tier::Cloud, 1, (1, 1, 1)),
            node("f1", "fog-montreal", Tier::Fog, 1, (2, 2, 2)),
            node("f2", "fog-montreal", Tier::Fog, 1, (2, 2, 2)),
        ],
        links: vec![
            link("f1", "f2", 1),
            link("f1", "c1", 50),
            link("f2", "c1", 50),
        ],
    }
    .normalized()
}

/// Load a whole infrastructure graph into a repository via the publication
/// API, attaching each link once its second endpoint joins.
pub fn publish_infra(repo: &Repository, infra: &InfrastructureGraph) {
    let mut published: Vec<&str> = Vec::new();
    for n in &infra.nodes {
        let adjacent: Vec<LinkRecord> = infra
            .links
            .iter()
            .filter(|l| {
                let other = if l.endpoint_a == n.id {
                    Some(l.endpoint_b.as_str())
                } else if l.endpoint_b == n.id {
                    Some(l.endpoint_a.as_str())
                } else {
                    None
                };
                other.is_some_and(|o| published.contains(&o))
            })
            .cloned()
            .collect();
        repo.publish_node(n.clone(), adjacent)
            .expect("fixture publishes cleanly");
        published.push(&n.id);
    }
}

/// Load [`edge_cloud_infra`] into a repository via the publication API.
pub fn publish_edge_cloud(repo: &Repository) {
    publish_infra(repo, &edge_cloud_infra());
}

/// Two cloud regions for the distributed-PaaS layouts (tc4-tc6):
/// components start in `c-iowa` and migrate to `c-virginia`.
pub fn two_region_infra() -> InfrastructureGraph {
    InfrastructureGraph {
        domains: vec![],
        nodes: vec![
            node("c-iowa", "cloud-iowa", Tier::Cloud, 1, (1, 1, 1)),
            node("c-virginia", "cloud-virginia", Tier::Cloud, 1, (2, 1, 1)),
        ],
        links: vec![link("c-iowa", "c-virginia", 40)],
    }
    .normalized()
}

impl InfrastructureGraph {
    /// Fill in the domain records from the node list.
    fn normalized(mut self) -> Self {
        let mut domains: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for n in &self.nodes {
            domains
                .entry(n.domain_id.clone())
                .or_default()
                .push(n.id.clone());
        }
        self.domains = domains
            .into_iter()
            .map(|(id, node_ids)| crate::infra::DomainRecord { id, node_ids })
            .collect();
        self
    }
}

/// Fixed placements of [`bench_app`] over [`edge_cloud_infra`].
pub fn tc1_layout() -> Assignment {
    [
        ("capture", "f1"),
        ("analyzer", "f2"),
        ("fog-displayer", "f2"),
        ("cloud-displayer", "c1"),
    ]
    .iter()
    .map(|(c, n)| (c.to_string(), n.to_string()))
    .collect()
}

pub fn tc2_layout() -> Assignment {
    [
        ("capture", "f1"),
        ("analyzer", "f2"),
        ("fog-displayer", "f1"),
        ("cloud-displayer", "f2"),
    ]
    .iter()
    .map(|(c, n)| (c.to_string(), n.to_string()))
    .collect()
}

pub fn tc3_layout() -> Assignment {
    [
        ("capture", "f1"),
        ("analyzer", "f1"),
        ("fog-displayer", "c1"),
        ("cloud-displayer", "c1"),
    ]
    .iter()
    .map(|(c, n)| (c.to_string(), n.to_string()))
    .collect()
}

/// All components on the source region for tc4-tc6.
pub fn two_region_layout() -> Assignment {
    ["capture", "analyzer", "fog-displayer", "cloud-displayer"]
        .iter()
        .map(|c| (c.to_string(), "c-iowa".to_string()))
        .collect()
}

/// Where the movable PaaS modules sit in a distributed-PaaS layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EngineSite {
    /// Deployment and migration engines beside the destination region.
    NearDestination,
    /// Beside the rest of the PaaS modules.
    NearPaas,
    /// Beside the source region.
    NearSource,
}

/// Latency coordinates for the distributed-PaaS test cases. The fixed PaaS
/// modules live in one site; the two engines move according to `site`.
pub fn two_region_sim_config(site: EngineSite) -> SimConfig {
    let mut cfg = SimConfig::default();
    let fixed = [
        PaasModule::Orchestrator,
        PaasModule::GraphGenerator,
        PaasModule::Repository,
        PaasModule::ExecutionEngine,
        PaasModule::MonitoringEngine,
    ];
    let movable = [PaasModule::DeploymentEngine, PaasModule::MigrationEngine];
    let (src, dst) = ("c-iowa", "c-virginia");
    const LOCAL: u64 = 1; // same site
    const REGIONAL: u64 = 40; // between the two cloud regions
    const HOME_TO_CLOUD: u64 = 50; // PaaS home site to either region

    for m in fixed {
        cfg.set_latency(m.as_str(), src, HOME_TO_CLOUD);
        cfg.set_latency(m.as_str(), dst, HOME_TO_CLOUD);
        for other in fixed {
            if m != other {
                cfg.set_latency(m.as_str(), other.as_str(), LOCAL);
            }
        }
    }
    for m in movable {
        let (to_src, to_dst, to_fixed) = match site {
            EngineSite::NearDestination => (REGIONAL, LOCAL, HOME_TO_CLOUD),
            EngineSite::NearPaas => (HOME_TO_CLOUD, HOME_TO_CLOUD, LOCAL),
            EngineSite::NearSource => (LOCAL, REGIONAL, HOME_TO_CLOUD),
        };
        cfg.set_latency(m.as_str(), src, to_src);
        cfg.set_latency(m.as_str(), dst, to_dst);
        for f in fixed {
            cfg.set_latency(m.as_str(), f.as_str(), to_fixed);
        }
    }
    cfg.set_latency(
        PaasModule::DeploymentEngine.as_str(),
        PaasModule::MigrationEngine.as_str(),
        LOCAL,
    );
    // the registry is Azure-internal: fast from both regions, far from home
    cfg.set_latency("registry", src, 5);
    cfg.set_latency("registry", dst, 5);
    cfg.set_latency("client", PaasModule::Orchestrator.as_str(), 1);
    cfg
}

/// Seeded random placement instance for oracle suites: up to `max_comps`
/// components in a random structure over up to `max_nodes` fully linked
/// nodes. Feasible for the exhaustive solver in the overwhelming majority
/// of draws (capacities are roomy but not unlimited).
pub fn random_placement_instance(
    seed: u64,
    max_comps: usize,
    max_nodes: usize,
) -> (ApplicationDescriptor, InfrastructureGraph, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_comps = rng.gen_range(1..=max_comps);
    let n_nodes = rng.gen_range(2..=max_nodes.max(2));

    let mut components = Vec::new();
    for i in 0..n_comps {
        let tiers: &[Tier] = match rng.gen_range(0..10) {
            0 => CLOUD,
            1 | 2 => FOG,
            _ => BOTH,
        };
        components.push(component(
            &format!("comp{i}"),
            rng.gen_range(1..=4),
            rng.gen_range(1..=4),
            rng.gen_range(1..=4),
            0,
            rng.gen_range(1..=20),
            tiers,
            rng.gen_range(1..=50),
        ));
    }

    let ids: Vec<String> = components.iter().map(|c| c.id.clone()).collect();
    let structure = random_structure(&mut rng, &ids);

    let mut nodes = Vec::new();
    for i in 0..n_nodes {
        let tier = if i % 2 == 0 { Tier::Fog } else { Tier::Cloud };
        nodes.push(node(
            &format!("n{i}"),
            &format!("{tier}-dom"),
            tier,
            rng.gen_range(1..=4),
            (
                rng.gen_range(1..=5),
                rng.gen_range(1..=5),
                rng.gen_range(1..=5),
            ),
        ));
        let cap = rng.gen_range(6..=16);
        nodes.last_mut().unwrap().cpu_cap = cap;
        nodes.last_mut().unwrap().memory_cap = rng.gen_range(6..=16);
        nodes.last_mut().unwrap().disk_cap = rng.gen_range(6..=16);
    }
    let mut links = Vec::new();
    for i in 0..n_nodes {
        for j in (i + 1)..n_nodes {
            links.push(LinkRecord {
                endpoint_a: format!("n{i}"),
                endpoint_b: format!("n{j}"),
                latency: rng.gen_range(1..=50),
                bandwidth: 100,
            });
        }
    }
    let infra = InfrastructureGraph {
        domains: vec![],
        nodes,
        links,
    }
    .normalized();
    let alpha = [0.0, 0.5, 1.0][rng.gen_range(0..3)];
    (
        ApplicationDescriptor::new(format!("rand-{seed}"), components, structure),
        infra,
        alpha,
    )
}

fn random_structure(rng: &mut ChaCha8Rng, ids: &[String]) -> N {
    if ids.len() == 1 {
        return N::leaf(ids[0].clone());
    }
    match rng.gen_range(0..4) {
        // plain chain
        0 | 1 => N::sequence(ids.iter().map(|i| N::leaf(i.clone())).collect()),
        // head, parallel middle, optional tail
        2 => {
            let mut children = vec![N::leaf(ids[0].clone())];
            let middle: Vec<N> = ids[1..].iter().map(|i| N::leaf(i.clone())).collect();
            children.push(N::parallel(middle));
            N::sequence(children)
        }
        // loop over the tail
        _ => {
            let mut children = vec![N::leaf(ids[0].clone())];
            if ids.len() > 1 {
                let body: Vec<N> = ids[1..].iter().map(|i| N::leaf(i.clone())).collect();
                children.push(N::repeat(N::sequence(body), rng.gen_range(1..=3)));
            }
            N::sequence(children)
        }
    }
}
