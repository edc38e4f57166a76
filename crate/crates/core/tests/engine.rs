use std::collections::BTreeMap;

use proptest::prelude::*;
use wlan_sandbox::sim::SimTime;
use wlan_sandbox::wlan::{
    canonical_scenario, isolated_link_bound, simulate_scenario, simulate_with, BssConfig,
    ChannelParams, MacParams, McsTable, Node, Role, Scenario, SimOptions, TrafficLoad,
};

fn node(id: &str, role: Role, bss: u32, x: f64, y: f64) -> Node {
    Node {
        id: id.into(),
        role,
        bss,
        x,
        y,
        walls: BTreeMap::new(),
    }
}

fn bss(id: u32, ap: &str, load: TrafficLoad, power: f64) -> BssConfig {
    BssConfig {
        id,
        ap: ap.into(),
        traffic_load: load,
        tx_power_dbm: power,
    }
}

fn scenario(nodes: Vec<Node>, bss: Vec<BssConfig>) -> Scenario {
    let s = Scenario {
        nodes,
        bss,
        channel: ChannelParams::default(),
        mcs_table: McsTable::default(),
        mac: MacParams::default(),
        power_levels: vec![3.0, 7.0, 11.0, 15.0, 19.0, 23.0],
        default_power_dbm: 23.0,
    };
    s.validate().unwrap();
    s
}

fn isolated(power: f64) -> Scenario {
    scenario(
        vec![node("ap", Role::Ap, 1, 0.0, 0.0), node("sta", Role::Sta, 1, 3.0, 0.0)],
        vec![bss(1, "ap", TrafficLoad::Saturated, power)],
    )
}

fn secs(s: u64) -> SimTime {
    SimTime::from_secs(s)
}

#[test]
fn isolated_link_matches_closed_form() {
    let s = isolated(23.0);
    let bound = isolated_link_bound(&s.mac, 129.0);
    let r = simulate_scenario(&s, secs(10), 1).unwrap();
    let thr = r.bss[0].thr_mbps;
    assert!((thr - bound).abs() / bound < 0.05, "{thr} vs {bound}");
    assert_eq!(r.bss[0].collisions, 0);
}

#[test]
fn colocated_bsss_share_airtime_fairly() {
    let s = scenario(
        vec![
            node("ap1", Role::Ap, 1, 0.0, 0.0),
            node("sta1", Role::Sta, 1, 0.0, 3.0),
            node("ap2", Role::Ap, 2, 1.0, 0.0),
            node("sta2", Role::Sta, 2, 1.0, 3.0),
        ],
        vec![
            bss(1, "ap1", TrafficLoad::Saturated, 23.0),
            bss(2, "ap2", TrafficLoad::Saturated, 23.0),
        ],
    );
    let single = simulate_scenario(&isolated(23.0), secs(10), 1)
        .unwrap()
        .aggregate_mbps();
    let (mut a, mut b) = (0.0, 0.0);
    for seed in 0..10 {
        let r = simulate_scenario(&s, secs(10), seed).unwrap();
        a += r.bss[0].thr_mbps;
        b += r.bss[1].thr_mbps;
        let sum = r.aggregate_mbps();
        assert!((sum - single).abs() / single < 0.15, "seed {seed}: {sum} vs {single}");
    }
    assert!((a - b).abs() / a.max(b) < 0.10, "{a} vs {b}");
}

#[test]
fn canonical_low_power_runs_concurrently() {
    let s = canonical_scenario().with_powers(&[7.0, 7.0]).unwrap();
    let alone = simulate_scenario(&isolated(7.0), secs(10), 3).unwrap().bss[0].thr_mbps;
    let r = simulate_scenario(&s, secs(10), 3).unwrap();
    for b in &r.bss {
        assert!((b.thr_mbps - alone).abs() / alone < 0.10, "{} vs {alone}", b.thr_mbps);
        assert_eq!(b.collisions, 0);
    }
}

#[test]
fn canonical_default_power_shares_the_medium() {
    let r = simulate_scenario(&canonical_scenario(), secs(10), 3).unwrap();
    let airtime: f64 = r.bss.iter().map(|b| b.airtime).sum();
    assert!(airtime <= 1.05, "{airtime}");
    let alone = simulate_scenario(&isolated(23.0), secs(10), 3).unwrap().aggregate_mbps();
    assert!(r.aggregate_mbps() < 1.5 * alone);
}

#[test]
fn finite_load_is_delivered_but_never_exceeded() {
    let mut s = isolated(23.0);
    s.bss[0].traffic_load = TrafficLoad::Mbps(20.0);
    let r = simulate_scenario(&s, secs(10), 1).unwrap();
    assert!(r.bss[0].thr_mbps <= 20.0 + 1e-9);
    assert!(r.bss[0].thr_mbps > 19.5, "{}", r.bss[0].thr_mbps);
    assert_eq!(r.bss[0].offered_mbps, Some(20.0));

    s.bss[0].traffic_load = TrafficLoad::Mbps(0.0);
    let r = simulate_scenario(&s, secs(1), 1).unwrap();
    assert_eq!(r.bss[0].thr_mbps, 0.0);
    assert_eq!(r.bss[0].mean_sinr_db, None);
}

#[test]
fn unreachable_station_is_flagged_not_fatal() {
    let s = scenario(
        vec![node("ap", Role::Ap, 1, 0.0, 0.0), node("sta", Role::Sta, 1, 900.0, 0.0)],
        vec![bss(1, "ap", TrafficLoad::Saturated, 3.0)],
    );
    let r = simulate_scenario(&s, secs(1), 1).unwrap();
    assert_eq!(r.bss[0].thr_mbps, 0.0);
    assert!(r.bss[0].zero_rate_link);
    assert_eq!(r.bss[0].airtime, 0.0);
}

#[test]
fn same_inputs_same_report_and_trace() {
    let s = canonical_scenario();
    let mut opts = SimOptions::new(SimTime::from_millis(50), 9);
    opts.trace = true;
    let a = simulate_with(&s, &opts).unwrap();
    let b = simulate_with(&s, &opts).unwrap();
    assert_eq!(a.report, b.report);
    assert_eq!(a.trace, b.trace);
    let trace = a.trace.unwrap();
    assert!(trace.starts_with("time_us,seq,kind,detail\n"));
    assert!(trace.contains(",tx_end,"));
    let other = simulate_scenario(&s, secs(2), 10).unwrap();
    assert_ne!(other, simulate_scenario(&s, secs(2), 9).unwrap());
}

#[test]
fn samples_partition_the_window() {
    let mut opts = SimOptions::new(secs(4), 2);
    opts.sample_interval = Some(SimTime::from_millis(500));
    let out = simulate_with(&canonical_scenario(), &opts).unwrap();
    assert_eq!(out.samples.len(), 8);
    for b in 0..2 {
        let mean = out.samples.iter().map(|s| s.thr_mbps[b]).sum::<f64>() / 8.0;
        assert!((mean - out.report.bss[b].thr_mbps).abs() < 1e-6);
    }
}

#[test]
fn zero_duration_is_empty() {
    let r = simulate_scenario(&canonical_scenario(), SimTime::ZERO, 1).unwrap();
    assert!(r.bss.iter().all(|b| b.thr_mbps == 0.0 && b.frames_ok == 0));
}

fn arb_scenario() -> impl Strategy<Value = Scenario> {
    let bss_strategy = (
        0.0..60.0f64,
        0.0..60.0f64,
        1.0..12.0f64,
        0.0..std::f64::consts::TAU,
        prop_oneof![Just(None), (0.5..80.0f64).prop_map(Some)],
        0usize..6,
    );
    prop::collection::vec(bss_strategy, 1..4).prop_map(|specs| {
        let levels = [3.0, 7.0, 11.0, 15.0, 19.0, 23.0];
        let mut nodes = Vec::new();
        let mut list = Vec::new();
        for (i, (x, y, r, th, load, p)) in specs.into_iter().enumerate() {
            let id = i as u32 + 1;
            nodes.push(node(&format!("ap{id}"), Role::Ap, id, x, y));
            nodes.push(node(&format!("sta{id}"), Role::Sta, id, x + r * th.cos(), y + r * th.sin()));
            let load = load.map_or(TrafficLoad::Saturated, TrafficLoad::Mbps);
            list.push(bss(id, &format!("ap{id}"), load, levels[p]));
        }
        scenario(nodes, list)
    })
}

/// Every pair of APs hears each other, so at most one is on air at a time.
fn all_aps_sense_each_other(s: &Scenario) -> bool {
    let aps: Vec<usize> = s.bss.iter().map(|b| s.node_index(&b.ap).unwrap()).collect();
    aps.iter().all(|&a| {
        aps.iter()
            .filter(|&&b| b != a)
            .all(|&b| s.cca_busy(a, &[(b, s.bss[s.nodes[b].bss as usize - 1].tx_power_dbm)]))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn throughput_and_airtime_bounds(s in arb_scenario(), seed in 0u64..1000) {
        let r = simulate_scenario(&s, SimTime::from_millis(400), seed).unwrap();
        for (b, cfg) in r.bss.iter().zip(&s.bss) {
            prop_assert!(b.thr_mbps >= 0.0);
            prop_assert!(b.thr_mbps <= s.mcs_table.max_rate() + 1e-9);
            if let Some(offered) = cfg.traffic_load.offered_mbps() {
                prop_assert!(b.thr_mbps <= offered + 1e-9);
            }
            prop_assert!((0.0..=1.0).contains(&b.airtime));
        }
        if all_aps_sense_each_other(&s) {
            let total: f64 = r.bss.iter().map(|b| b.airtime).sum();
            prop_assert!(total <= 1.05, "airtime sum {}", total);
        }
    }

    #[test]
    fn deterministic_for_any_scenario(s in arb_scenario(), seed in 0u64..1000) {
        let d = SimTime::from_millis(200);
        prop_assert_eq!(simulate_scenario(&s, d, seed).unwrap(), simulate_scenario(&s, d, seed).unwrap());
    }

    /// With carrier sense disabled an AP never defers. The property is checked
    /// where every frame is decodable under any overlap, so backoff growth
    /// from failures cannot offset the removed deferrals.
    #[test]
    fn disabling_carrier_sense_never_reduces_airtime(
        gap in 40.0..200.0f64,
        p1 in 0usize..6,
        p2 in 0usize..6,
        seed in 0u64..1000,
    ) {
        let levels = [3.0, 7.0, 11.0, 15.0, 19.0, 23.0];
        let s = scenario(
            vec![
                node("ap1", Role::Ap, 1, 0.0, 0.0),
                node("sta1", Role::Sta, 1, -2.0, 0.0),
                node("ap2", Role::Ap, 2, gap, 0.0),
                node("sta2", Role::Sta, 2, gap + 2.0, 0.0),
            ],
            vec![
                bss(1, "ap1", TrafficLoad::Saturated, levels[p1]),
                bss(2, "ap2", TrafficLoad::Saturated, levels[p2]),
            ],
        );
        let d = SimTime::from_millis(500);
        let base = simulate_scenario(&s, d, seed).unwrap();
        prop_assume!(base.bss.iter().all(|b| b.collisions == 0));
        let mut deaf = s.clone();
        // far above any received power: carrier sense never fires
        deaf.channel.cca_threshold_dbm = 1000.0;
        let open = simulate_scenario(&deaf, d, seed).unwrap();
        prop_assume!(open.bss.iter().all(|b| b.collisions == 0));
        for (a, b) in base.bss.iter().zip(&open.bss) {
            prop_assert!(b.airtime >= a.airtime - 1e-9, "{} -> {}", a.airtime, b.airtime);
        }
    }
}
