mod common;

use common::{on_line, synthetic};
use mec_placer::baselines::{genetic, head_cluster, kmeans_repetitive, kmtk, GaParams, HeadRule};
use mec_placer::evaluation::combination_cost;
use mec_placer::{
    brute_force_optimal, feasibility_check, metrics, train, HyperParams, Mode, Placement, Topology,
    Violation,
};
use proptest::prelude::*;

/// Independent feasibility test straight from the constraint definitions.
fn feasible(assign: &[usize], t: &Topology, d_th: f64, cap: f64) -> bool {
    let n = assign.len();
    let mut load = vec![0.0; n];
    for (i, &a) in assign.iter().enumerate() {
        if assign[a] != a || t.dist(i, a) > d_th {
            return false;
        }
        load[a] += t.workload(i);
    }
    load.iter().all(|&l| l <= cap)
}

/// Every assignment in `0..n`ⁿ, neighbor-restricted or not.
fn exhaustive_min(t: &Topology, d_th: f64, cap: f64) -> f64 {
    let n = t.n();
    let mut best = f64::INFINITY;
    let total = n.pow(n as u32);
    let mut assign = vec![0; n];
    for code in 0..total {
        let mut c = code;
        for slot in assign.iter_mut() {
            *slot = c % n;
            c /= n;
        }
        if feasible(&assign, t, d_th, cap) {
            let k = (0..n).filter(|&i| assign[i] == i).count();
            let d: f64 = (0..n).map(|i| t.dist(i, assign[i])).sum();
            best = best.min(d + 10.0 * k as f64);
        }
    }
    best
}

fn line_instance(pos: &[f64], loads: &[f64]) -> Topology {
    on_line(pos, loads, 9.0)
}

#[test]
fn combination_cost_is_distance_plus_ten_per_server() {
    assert_eq!(combination_cost(5.0, 2), 25.0);
    let t = synthetic(30, 1);
    let m = metrics(&Placement::all_self(30, 9.0, 150.0), &t).unwrap();
    assert_eq!(m.avg_delay_km, 0.0);
    assert_eq!(m.combination_cost, 300.0);
}

#[test]
fn single_violations_are_reported_with_magnitude() {
    let t = line_instance(&[0.0, 1.0, 9.5], &[100.0, 51.0, 10.0]);
    let h = HyperParams::default();
    let over = Placement::from_assignment(vec![0, 0, 2], 9.0, 150.0);
    let v = feasibility_check(&over, &t, &h);
    assert_eq!(v.len(), 1);
    match &v[0] {
        Violation::Capacity { server, excess, .. } => {
            assert_eq!(*server, 0);
            assert!((excess - 1.0).abs() < 1e-12);
        }
        other => panic!("unexpected {other}"),
    }

    let t = line_instance(&[0.0, 9.5], &[10.0, 10.0]);
    let far = Placement::from_assignment(vec![0, 0], 9.0, 150.0);
    let v = feasibility_check(&far, &t, &h);
    assert!(
        matches!(v[..], [Violation::Distance { excess_km, .. }] if (excess_km - 0.5).abs() < 1e-12)
    );
    assert!(metrics(&far, &t).is_err());
}

#[test]
fn oracle_hand_examples() {
    let h = HyperParams::default();
    // the middle station minimizes summed distance
    let t = line_instance(&[0.0, 1.0, 3.0], &[10.0, 10.0, 10.0]);
    let p = brute_force_optimal(&t, &h).unwrap();
    assert_eq!(p.assignment, vec![1, 1, 1]);
    assert_eq!(metrics(&p, &t).unwrap().combination_cost, 13.0);

    // equal sums: the smaller id wins
    let t = line_instance(&[0.0, 1.0, 2.0], &[10.0, 10.0, 10.0]);
    assert_eq!(
        brute_force_optimal(&t, &h).unwrap().assignment,
        vec![1, 1, 1]
    );
    let t = line_instance(&[0.0, 2.0], &[10.0, 10.0]);
    assert_eq!(brute_force_optimal(&t, &h).unwrap().k(), 1);

    let t = line_instance(&[0.0, 20.0], &[10.0, 10.0]);
    let p = brute_force_optimal(&t, &h).unwrap();
    assert_eq!(metrics(&p, &t).unwrap().combination_cost, 20.0);

    assert!(brute_force_optimal(&synthetic(8, 0), &h).is_err());
}

#[test]
fn oracle_bounds_every_algorithm() {
    let h = HyperParams {
        episodes: 500,
        ..HyperParams::default()
    };
    for seed in 0..5 {
        let mut p = mec_placer::dataset::SynthParams::new(6, seed);
        p.workload_range = (20, 90);
        p.bbox = mec_placer::dataset::BoundingBox {
            lat_min: 31.20,
            lat_max: 31.28,
            lon_min: 121.40,
            lon_max: 121.48,
        };
        let st = mec_placer::dataset::synthesize(&p).unwrap();
        let t = Topology::build(st, 9.0, 15).unwrap();
        let best = metrics(&brute_force_optimal(&t, &h).unwrap(), &t)
            .unwrap()
            .combination_cost;
        let ga = GaParams {
            generations: 100,
            ..GaParams::default()
        };
        let candidates = [
            head_cluster(&t, &h, HeadRule::TopK, seed),
            head_cluster(&t, &h, HeadRule::TopDoF, seed),
            head_cluster(&t, &h, HeadRule::Random, seed),
            kmeans_repetitive(&t, &h, seed),
            kmtk(&t, &h, seed),
            genetic(&t, &h, &ga, seed),
            train(&t, &h, seed, Mode::Qmc).unwrap().best_placement,
            train(&t, &h, seed, Mode::Tdmc).unwrap().best_placement,
        ];
        for c in &candidates {
            assert!(metrics(c, &t).unwrap().combination_cost >= best - 1e-9);
        }
    }
}

fn small_instance() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, f64, f64)> {
    (2usize..=5).prop_flat_map(|n| {
        (
            prop::collection::vec(0.0..25.0f64, n),
            prop::collection::vec(1u32..120, n)
                .prop_map(|v| v.into_iter().map(f64::from).collect()),
            3.0..12.0f64,
            prop::sample::select(vec![100.0, 150.0, 200.0]),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn oracle_agrees_with_independent_enumeration((pos, loads, d_th, cap) in small_instance()) {
        let t = on_line(&pos, &loads, d_th);
        let h = HyperParams::with_threshold(d_th, cap);
        if loads.iter().any(|&w| w > cap) {
            prop_assert!(brute_force_optimal(&t, &h).is_err());
            return Ok(());
        }
        let p = brute_force_optimal(&t, &h).unwrap();
        prop_assert!(feasibility_check(&p, &t, &h).is_empty());
        let got = metrics(&p, &t).unwrap().combination_cost;
        let want = exhaustive_min(&t, d_th, cap);
        prop_assert!((got - want).abs() < 1e-9, "{} vs {}", got, want);
    }

    /// Arbitrary assignments: the checker flags exactly the infeasible ones.
    #[test]
    fn feasibility_check_is_sound_and_complete(
        (pos, loads, d_th, cap) in small_instance(),
        raw in prop::collection::vec(0usize..5, 5),
    ) {
        let n = pos.len();
        let t = on_line(&pos, &loads, d_th);
        let h = HyperParams::with_threshold(d_th, cap);
        let assign: Vec<usize> = raw[..n].iter().map(|&a| a % n).collect();
        let p = Placement::from_assignment(assign.clone(), d_th, cap);
        let flagged = !feasibility_check(&p, &t, &h).is_empty();
        prop_assert_eq!(flagged, !feasible(&assign, &t, d_th, cap));
    }

    /// Feasible placements with one injected fault are always caught.
    #[test]
    fn injected_violations_are_detected(seed in 0u64..500, kind in 0usize..3) {
        let t = synthetic(40, seed);
        let h = HyperParams::default();
        let p = head_cluster(&t, &h, HeadRule::TopK, seed);
        prop_assert!(feasibility_check(&p, &t, &h).is_empty());
        let mut assign = p.assignment.clone();
        let member = (0..40).find(|&i| assign[i] != i);
        match (kind, member) {
            // point a member at a non-server
            (0, Some(m)) => {
                let other = (0..40).find(|&j| j != m && assign[j] != j).unwrap_or(m);
                prop_assume!(other != m);
                assign[m] = other;
            }
            // send a station to a server beyond the threshold
            (1, _) => {
                let far = (0..40).flat_map(|i| p.es_set.iter().map(move |&s| (i, s)))
                    .find(|&(i, s)| t.dist(i, s) > h.d_th_km && assign[i] != i);
                prop_assume!(far.is_some());
                let (i, s) = far.unwrap();
                assign[i] = s;
            }
            // squeeze capacity below the heaviest server
            _ => {
                let heaviest = p.clusters().iter()
                    .map(|(_, m)| m.iter().map(|&i| t.workload(i)).sum::<f64>())
                    .fold(0.0, f64::max);
                let tight = HyperParams { capacity_max: heaviest - 0.5, ..h };
                let caught = feasibility_check(&p, &t, &tight)
                    .iter()
                    .any(|v| matches!(v, Violation::Capacity { .. }));
                prop_assert!(caught);
                return Ok(());
            }
        }
        let broken = Placement::from_assignment(assign, h.d_th_km, h.capacity_max);
        prop_assert!(!feasibility_check(&broken, &t, &h).is_empty());
    }
}
