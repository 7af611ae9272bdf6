use std::path::Path;

use proptest::prelude::*;

use hybrid_noc::calib::CostCalibration;
use hybrid_noc::routing::{compute_routes, RouteMetric};
use hybrid_noc::simcore::{analytical_traversals, max_route_descents, simulate, zero_load_latency, SimConfig, NUM_VCS};
use hybrid_noc::techlib::{ProfileSet, TechKind};
use hybrid_noc::topology::{self, add_express_links, build_mesh, Topology};
use hybrid_noc::traffic::{generate_synthetic, PacketDescriptor, TrafficModelConfig};

fn profiles() -> ProfileSet {
    ProfileSet::builtin()
}

fn mesh(k: usize, t: TechKind) -> Topology {
    build_mesh(k, profiles().get(t).unwrap()).unwrap()
}

fn packet(inject_cycle: u64, src: usize, dst: usize, flits: u32) -> PacketDescriptor {
    PacketDescriptor { inject_cycle, src, dst, flits }
}

fn run(t: &Topology, packets: &[PacketDescriptor]) -> hybrid_noc::simcore::SimResult {
    let routes = compute_routes(t, RouteMetric::Latency).unwrap();
    simulate(t, &routes, packets, &CostCalibration::builtin(), &SimConfig::default()).unwrap()
}

#[test]
fn single_flit_golden_latencies() {
    assert_eq!(run(&mesh(4, TechKind::Electronic), &[packet(0, 0, 1, 1)]).packets[0].latency, 7);
    assert_eq!(run(&mesh(4, TechKind::HyPPI), &[packet(0, 0, 1, 1)]).packets[0].latency, 8);
}

#[test]
fn mesh4_topology_file_matches_builder() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/mesh4.topo");
    let parsed = topology::load(&path).unwrap();
    assert_eq!(parsed, mesh(4, TechKind::Electronic));
}

#[test]
fn vc_ordering_fits_every_explored_network() {
    let set = profiles();
    for base in [TechKind::Electronic, TechKind::Photonic, TechKind::HyPPI] {
        let m = build_mesh(16, set.get(base).unwrap()).unwrap();
        let routes = compute_routes(&m, RouteMetric::Latency).unwrap();
        assert!((max_route_descents(&m, &routes) as usize) < NUM_VCS);
        for ex in [TechKind::Electronic, TechKind::Photonic, TechKind::HyPPI] {
            for hops in [3, 5, 15] {
                let t = add_express_links(&m, hops, set.get(ex).unwrap()).unwrap();
                let routes = compute_routes(&t, RouteMetric::Latency).unwrap();
                let d = max_route_descents(&t, &routes) as usize;
                assert!(d < NUM_VCS, "{base}+{ex}{hops}: {d} descents");
            }
        }
    }
}

#[test]
fn sampled_pairs_follow_rates() {
    let m = mesh(4, TechKind::Electronic);
    let traffic = generate_synthetic(&m, &TrafficModelConfig { p: 0.3, sigma: 1.0, ..TrafficModelConfig::default() }).unwrap();
    let draws = 200_000;
    let pairs = traffic.sample_pairs(draws, 7).unwrap();
    let n = m.num_nodes();
    let mut counts = vec![0u64; n * n];
    for (s, d) in pairs {
        counts[s * n + d] += 1;
    }
    let total = traffic.total();
    let mut chi2 = 0.0;
    let mut cells = 0;
    for s in 0..n {
        for d in 0..n {
            let expected = traffic.rate(s, d) / total * draws as f64;
            if expected == 0.0 {
                assert_eq!(counts[s * n + d], 0);
                continue;
            }
            chi2 += (counts[s * n + d] as f64 - expected).powi(2) / expected;
            cells += 1;
        }
    }
    let dof = (cells - 1) as f64;
    // Normal approximation, roughly the 99.99th percentile.
    assert!(chi2 < dof + 3.7 * (2.0 * dof).sqrt(), "chi2 {chi2:.1} with {dof} dof");
}

fn trace(n: usize) -> impl Strategy<Value = Vec<PacketDescriptor>> {
    prop::collection::vec((0u64..200, 0..n, 1..n, prop::sample::select(vec![1u32, 32])), 1..120).prop_map(move |v| {
        let mut p: Vec<PacketDescriptor> = v.into_iter().map(|(c, s, off, f)| packet(c, s, (s + off) % n, f)).collect();
        p.sort_by_key(|x| x.inject_cycle);
        p
    })
}

fn small_network() -> impl Strategy<Value = Topology> {
    (
        prop::sample::select(vec![TechKind::Electronic, TechKind::HyPPI]),
        prop::option::of((2usize..=3, prop::sample::select(vec![TechKind::Electronic, TechKind::Photonic, TechKind::HyPPI]))),
    )
        .prop_map(|(base, ex)| {
            let m = mesh(4, base);
            match ex {
                Some((h, t)) => add_express_links(&m, h, profiles().get(t).unwrap()).unwrap(),
                None => m,
            }
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn flit_counts_equal_analytical_and_latency_bounded(t in small_network(), packets in trace(16)) {
        let routes = compute_routes(&t, RouteMetric::Latency).unwrap();
        let res = simulate(&t, &routes, &packets, &CostCalibration::builtin(), &SimConfig::default()).unwrap();
        let (links, routers) = analytical_traversals(&t, &routes, &packets);
        prop_assert_eq!(&res.link_flits, &links);
        prop_assert_eq!(&res.router_flits, &routers);
        prop_assert_eq!(res.packets.len(), packets.len());
        for rec in &res.packets {
            let desc = packets[rec.id];
            prop_assert!(rec.latency >= zero_load_latency(&routes, &desc));
            prop_assert_eq!(rec.latency, rec.delivered_cycle - rec.inject_cycle);
        }
    }

    #[test]
    fn simulation_is_deterministic(t in small_network(), packets in trace(16), seed in any::<u64>()) {
        let routes = compute_routes(&t, RouteMetric::Latency).unwrap();
        let cfg = SimConfig { seed, ..SimConfig::default() };
        let cal = CostCalibration::builtin();
        let a = simulate(&t, &routes, &packets, &cal, &cfg).unwrap();
        let b = simulate(&t, &routes, &packets, &cal, &cfg).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn sparse_traffic_never_slower_with_express_links(k in 4usize..=8, hops in 2usize..=4, pairs in prop::collection::vec((any::<prop::sample::Index>(), any::<prop::sample::Index>(), prop::sample::select(vec![1u32, 32])), 1..20)) {
        prop_assume!(hops < k);
        let base = mesh(k, TechKind::Electronic);
        let hybrid = add_express_links(&base, hops, profiles().get(TechKind::HyPPI).unwrap()).unwrap();
        let n = k * k;
        let packets: Vec<PacketDescriptor> = pairs
            .iter()
            .enumerate()
            .filter_map(|(i, (s, d, f))| {
                let (s, d) = (s.index(n), d.index(n));
                (s != d).then(|| packet(i as u64 * 1000, s, d, *f))
            })
            .collect();
        prop_assume!(!packets.is_empty());
        let a = run(&base, &packets);
        let b = run(&hybrid, &packets);
        for (x, y) in a.packets.iter().zip(&b.packets) {
            prop_assert!(y.latency <= x.latency, "packet {}: {} > {}", x.id, y.latency, x.latency);
        }
    }
}
