use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sharedlink_core::model::flows::{
    discharge_split, diverge_flows, merge_flows_indicator, merge_flows_priority, sending_flow,
};
use sharedlink_core::simulator::{
    advance_merge, sample_mode_holding, simulate, simulate_with_path, IntegratorOptions, SimConfig, Simulation,
};
use sharedlink_core::stability::{
    check_existence_merge, check_existence_network, in_phi0, in_phi1, in_phi2, merge_sufficient,
};
use sharedlink_core::{
    DivergeParams, DivergeRule, InflowChain, MergeParams, Mode, Network, NetworkState, PriorityVector, ProductChain,
};

fn table_chain() -> ProductChain {
    let c = InflowChain::new(3000.0, 1.0, 1.5).unwrap();
    ProductChain::new(c, c)
}

fn md_network(f3: f64, phi: f64) -> Network {
    Network::merge_diverge(
        MergeParams::new([1500.0, 1500.0], f3, PriorityVector::new(phi).unwrap()).unwrap(),
        DivergeParams::new(f3, 40.0, [1400.0, 1400.0]).unwrap(),
    )
}

#[test]
fn merged_total_never_exceeds_receiving_flow() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100_000 {
        let phi = PriorityVector::new(rng.random()).unwrap();
        let cap = [rng.random_range(1.0..3000.0), rng.random_range(1.0..3000.0)];
        let a = [rng.random_range(0.0..4000.0), rng.random_range(0.0..4000.0)];
        let r = rng.random_range(1.0..5000.0);
        let q = [rng.random_range(1e-6..100.0), rng.random_range(1e-6..100.0)];
        let s = [sending_flow(q[0], a[0], cap[0]), sending_flow(q[1], a[1], cap[1])];
        let f = merge_flows_indicator(s, [true, true], r, phi);
        assert!(f[0] + f[1] <= r * (1.0 + 1e-15));
        let g = merge_flows_priority(s, r, phi);
        assert!(g[0] + g[1] <= r * (1.0 + 1e-15));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn flows_respect_their_bounds(
        phi1 in 0.0f64..=1.0,
        a1 in 0.0f64..4000.0, a2 in 0.0f64..4000.0,
        q1 in prop_oneof![Just(0.0), 0.0f64..100.0], q2 in prop_oneof![Just(0.0), 0.0f64..100.0],
        r in 1.0f64..5000.0,
        psi1 in 0.0f64..=1.0, s3 in 0.0f64..5000.0,
        r4 in 1.0f64..3000.0, r5 in 1.0f64..3000.0,
    ) {
        let phi = PriorityVector::new(phi1).unwrap();
        let s = [sending_flow(q1, a1, 1500.0), sending_flow(q2, a2, 1500.0)];
        for f in [merge_flows_indicator(s, [q1 > 0.0, q2 > 0.0], r, phi), merge_flows_priority(s, r, phi)] {
            prop_assert!(f[0] >= 0.0 && f[0] <= s[0]);
            prop_assert!(f[1] >= 0.0 && f[1] <= s[1]);
        }
        let d = DivergeParams::new(s3.max(1.0), 40.0, [r4, r5]).unwrap();
        let [f34, f35] = diverge_flows(psi1, s3, &d, DivergeRule::Symmetric);
        prop_assert!(f34 >= 0.0 && f34 <= s3.min(r4));
        prop_assert!(f35 >= 0.0 && f35 <= s3.min(r5));
    }

    #[test]
    fn split_sums_to_one(x1 in 0.0f64..100.0, x2 in 0.0f64..100.0, f1 in 0.0f64..3000.0, f2 in 0.0f64..3000.0) {
        let psi = discharge_split([x1, x2], [f1, f2]);
        prop_assert_eq!(psi[0] + psi[1], 1.0);
        prop_assert!((0.0..=1.0).contains(&psi[0]) && (0.0..=1.0).contains(&psi[1]));
    }

    #[test]
    fn ratio_bound_keeps_proportions(psi1 in 0.01f64..0.99, s3 in 0.0f64..6000.0, r4 in 100.0f64..3000.0, r5 in 100.0f64..3000.0) {
        let d = DivergeParams::new(3000.0, 40.0, [r4, r5]).unwrap();
        let [f34, f35] = diverge_flows(psi1, s3, &d, DivergeRule::Symmetric);
        let psi2 = 1.0 - psi1;
        if f34 < psi1 * s3 && f35 < psi2 * s3 {
            prop_assert!(((f34 / f35) / (psi1 / psi2) - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn drift_conserves_vehicles(
        phi1 in 0.47f64..0.53, k in 0usize..4,
        q1 in prop_oneof![Just(0.0), 0.0f64..100.0], q2 in prop_oneof![Just(0.0), 0.0f64..100.0],
        x1 in 0.0f64..20.0, x2 in 0.0f64..20.0,
    ) {
        let net = md_network(2600.0, phi1);
        let chain = table_chain();
        let s = NetworkState::new(Mode::ALL[k], [q1, q2], [x1, x2]);
        let a = chain.inflow(s.mode);
        let f = net.flows(&s, a);
        let d = net.drift(&s, a);
        let total: f64 = d.iter().sum();
        prop_assert!((total - (a[0] + a[1] - f.f34 - f.f35)).abs() <= 1e-9 * (a[0] + a[1] + 1.0));
    }

    #[test]
    fn symmetric_parameters_give_symmetric_membership(phi1 in 0.0f64..=1.0, f3 in 2000.0f64..3500.0) {
        let p = PriorityVector::new(phi1).unwrap();
        let mean = [1200.0, 1200.0];
        let cap = [1500.0, 1500.0];
        prop_assert_eq!(in_phi0(p, mean, cap, f3), in_phi0(p.swapped(), mean, cap, f3));
        prop_assert_eq!(in_phi1(p, mean, f3), in_phi1(p.swapped(), mean, f3));
        prop_assert_eq!(
            in_phi2(p, mean, cap, f3, [1400.0, 1400.0]),
            in_phi2(p.swapped(), mean, cap, f3, [1400.0, 1400.0])
        );
    }
}

#[test]
fn set_inclusions_on_random_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut checked = [0usize; 3];
    let mut phi1_not_phi0 = 0;
    while checked.iter().any(|&c| c < 10_000) {
        let mean = [rng.random_range(1.0..2000.0), rng.random_range(1.0..2000.0)];
        let cap = [rng.random_range(1.0..3000.0), rng.random_range(1.0..3000.0)];
        let f3 = rng.random_range(1.0..5000.0);
        let down = [rng.random_range(1.0..3000.0), rng.random_range(1.0..3000.0)];
        let phi = PriorityVector::new(rng.random()).unwrap();
        if check_existence_network(mean, cap, f3, down) {
            checked[0] += 1;
            if in_phi2(phi, mean, cap, f3, down) {
                assert!(in_phi1(phi, mean, f3));
            }
        }
        if check_existence_merge(mean, cap, f3) {
            checked[1] += 1;
            assert_eq!(merge_sufficient(phi, mean, cap, f3), in_phi1(phi, mean, f3));
            if in_phi1(phi, mean, f3) {
                checked[2] += 1;
                phi1_not_phi0 += usize::from(!in_phi0(phi, mean, cap, f3));
            }
        }
    }
    assert_eq!(phi1_not_phi0, 0);
}

#[test]
fn runs_are_deterministic() {
    for net in [
        Network::merge_only(MergeParams::new([1500.0, 1500.0], 2500.0, PriorityVector::new(0.5).unwrap()).unwrap()),
        md_network(2600.0, 0.5),
    ] {
        let config = SimConfig::new(net, table_chain(), 200.0, NetworkState::empty(Mode::Off), 42);
        let a = simulate(&config).unwrap();
        let b = simulate(&config).unwrap();
        assert_eq!(a, b);
        let other = SimConfig { seed: 43, ..config };
        assert_ne!(a, simulate(&other).unwrap());
    }
}

#[test]
fn merge_diverge_path_stays_feasible_and_conserves() {
    let net = md_network(2600.0, 0.5);
    let config = SimConfig::new(net, table_chain(), 500.0, NetworkState::empty(Mode::Off), 3);
    let (_, path) = simulate_with_path(&config, 0.01).unwrap();
    for p in &path {
        let s = p.state;
        assert!(s.upstream.iter().chain(&s.link3).all(|&q| q >= 0.0));
        assert!(s.link3_total() <= 40.0 + 1e-9);
    }
    let mut sim = Simulation::new(&config).unwrap();
    sim.advance_to(500.0).unwrap();
    let (arrived, departed) = sim.flow_totals();
    let held = sim.state().total();
    assert!((arrived - departed - held).abs() <= 1e-6 * arrived);
}

#[test]
fn mode_occupancy_matches_stationary_distribution() {
    let chain = ProductChain::new(
        InflowChain::new(3000.0, 1.0, 1.5).unwrap(),
        InflowChain::new(2000.0, 0.7, 2.0).unwrap(),
    );
    let net =
        Network::merge_only(MergeParams::new([1500.0, 1500.0], 2500.0, PriorityVector::new(0.5).unwrap()).unwrap());
    // At 1e4 hr the per-mode standard error is about half a percentage point.
    let config = SimConfig::new(net, chain, 1e5, NetworkState::empty(Mode::Off), 5);
    let stats = simulate(&config).unwrap();
    for mode in Mode::ALL {
        let p = stats.mode_occupancy[mode.index()];
        assert!((p - chain.stationary(mode)).abs() < 0.01, "{mode}: {p}");
    }
}

/// Fixed-step explicit Euler on the snapped state. Its error is of order
/// `h * flow` per regime change, so flows are scaled down to keep the
/// accumulated error below the comparison tolerance.
fn reference_path(net: &Network, chain: &ProductChain, jumps: &[(f64, Mode)], horizon: f64, h: f64) -> Vec<[f64; 2]> {
    let mut q = [0.0, 0.0];
    let mut out = Vec::new();
    let mut mode_idx = 0;
    let steps = (horizon / h).round() as usize;
    for i in 0..steps {
        let t = i as f64 * h;
        while mode_idx + 1 < jumps.len() && jumps[mode_idx + 1].0 <= t + 1e-12 {
            mode_idx += 1;
        }
        if i % 100_000 == 0 {
            out.push(q);
        }
        let s = net.snap(&NetworkState::new(jumps[mode_idx].1, q, [0.0; 2]));
        let d = net.drift(&s, chain.inflow(s.mode));
        q = [(q[0] + h * d[0]).max(0.0), (q[1] + h * d[1]).max(0.0)];
    }
    out.push(q);
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(3))]

    #[test]
    fn merge_paths_match_reference_integrator(
        seed in 0u64..1000,
        phi1 in 0.1f64..0.9,
        peak in 0.3f64..1.0,
        cap in 0.2f64..0.6,
        r3 in 0.3f64..1.0,
        rate in 0.2f64..1.0,
    ) {
        let horizon = 100.0;
        let chain = ProductChain::new(
            InflowChain::new(peak, rate, rate * 1.5).unwrap(),
            InflowChain::new(peak * 0.8, rate * 0.7, rate).unwrap(),
        );
        let net = Network::merge_only(MergeParams::new([cap, cap * 1.2], r3, PriorityVector::new(phi1).unwrap()).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut jumps = vec![(0.0, Mode::Off)];
        while jumps.last().unwrap().0 < horizon {
            let (t, m) = *jumps.last().unwrap();
            let (dt, next) = sample_mode_holding(m, &chain, &mut rng);
            jumps.push((t + dt, next));
        }
        let opts = IntegratorOptions::default();
        let mut state = NetworkState::empty(Mode::Off);
        let mut exact = vec![state.upstream];
        let mut t = 0.0;
        let mut k = 0;
        for n in 1..=100 {
            let target = n as f64;
            while t < target {
                while k + 1 < jumps.len() && jumps[k + 1].0 <= t {
                    k += 1;
                }
                state.mode = jumps[k].1;
                let stop = jumps.get(k + 1).map_or(target, |j| j.0.min(target));
                let inflow = chain.inflow(state.mode);
                let r = advance_merge(&net, &mut state, inflow, stop - t, &opts);
                t = if r.reached_end { stop } else { t + r.elapsed };
            }
            exact.push(state.upstream);
        }
        let reference = reference_path(&net, &chain, &jumps, horizon, 1e-5);
        prop_assert_eq!(reference.len(), exact.len());
        for (a, b) in exact.iter().zip(&reference) {
            prop_assert!((a[0] - b[0]).abs().max((a[1] - b[1]).abs()) <= 1e-4, "{:?} vs {:?}", a, b);
        }
    }
}
