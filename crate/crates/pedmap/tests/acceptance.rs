//! Acceptance gate: one test per shipping criterion, each printing a single
//! PASS line with its measured runtime. Run with `--nocapture` to see them.

use pedmap::advisory::{replay, stopping_distance, AdvisoryOutput, AdvisoryParams};
use pedmap::drive_log::DriveLog;
use pedmap::evaluation::{
    evaluate_run, match_counts, precision, recall, GroundTruth, GroundTruthWindow, MatchCounts,
};
use pedmap::geodesy::{
    destination_point, haversine_distance, heading_angle, initial_bearing, BearingDeg, GeoPoint,
};
use pedmap::hotspot_map::{
    build_map, filter_by_weight, load_map, merge_maps, save_map, HotspotMap, HotspotNode,
};
use pedmap::scenario::{generate, GeneratedScenario, ScenarioKind, ScenarioSpec};
use pedmap::spatial_index::{brute_force_nearest, SpatialIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

fn pass(n: u32, what: &str, started: Instant) {
    println!(
        "ACCEPTANCE {n} {what}: PASS ({:.2}s)",
        started.elapsed().as_secs_f64()
    );
}

#[test]
fn acceptance_1_stopping_distance_formula() {
    let started = Instant::now();
    let p = AdvisoryParams {
        offset: 1.0,
        ..AdvisoryParams::default()
    };
    let s50 = stopping_distance(50.0, &p).unwrap();
    let s100 = stopping_distance(100.0, &p).unwrap();
    assert!(
        (s50 - 14.178).abs() <= 0.001,
        "s(50) = {s50}, want 14.178 ± 0.001"
    );
    assert!(
        (s100 - 56.478).abs() <= 0.001,
        "s(100) = {s100}, want 56.478 ± 0.001"
    );
    pass(1, "stopping-distance formula", started);
}

#[test]
fn acceptance_2_geodesy() {
    let started = Instant::now();
    let origin = GeoPoint::new(0.0, 0.0).unwrap();
    let one_east = GeoPoint::new(0.0, 1.0).unwrap();
    let d = haversine_distance(origin, one_east);
    assert!(
        (d - 111_195.08).abs() <= 0.01,
        "1 degree at the equator = {d}, want 111195.08 ± 0.01"
    );

    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..10_000 {
        let start =
            GeoPoint::new(rng.gen_range(-85.0..85.0), rng.gen_range(-180.0..180.0)).unwrap();
        let bearing = BearingDeg::new(rng.gen_range(0.0..360.0));
        let dist = rng.gen_range(1.0..100_000.0);
        let end = destination_point(start, bearing, dist);
        let measured = haversine_distance(start, end);
        assert!(
            (measured - dist).abs() / dist <= 1e-6,
            "case {case}: went {dist} m, measured {measured} m"
        );
        let back = initial_bearing(start, end).unwrap();
        assert!(
            heading_angle(bearing, back) <= 1e-3,
            "case {case}: bearing {} came back {}",
            bearing.degrees(),
            back.degrees()
        );
    }
    assert!(started.elapsed().as_secs_f64() < 1.0, "budget exceeded");
    pass(2, "geodesy round trips", started);
}

#[test]
fn acceptance_3_index_oracle_equivalence() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for n in [10usize, 100, 10_000] {
        let nodes: Vec<HotspotNode> = (0..n)
            .map(|_| HotspotNode {
                pos: GeoPoint::new(
                    32.0 + rng.gen_range(-0.05..0.05),
                    -117.0 + rng.gen_range(-0.05..0.05),
                )
                .unwrap(),
                weight: rng.gen_range(1..20),
                samples: 1,
            })
            .collect();
        let map = HotspotMap::from_parts(5.0, [], nodes).unwrap();
        let index = SpatialIndex::build(&map, 16);
        for q in 0..1_000 {
            let query = GeoPoint::new(
                32.0 + rng.gen_range(-0.06..0.06),
                -117.0 + rng.gen_range(-0.06..0.06),
            )
            .unwrap();
            let fast = index.nearest(query).unwrap();
            let slow = brute_force_nearest(&map, query).unwrap();
            assert_eq!(
                fast, slow,
                "mismatch on {n}-node map, query {q}: {fast:?} vs {slow:?}"
            );
        }
    }
    assert!(started.elapsed().as_secs_f64() < 10.0, "budget exceeded");
    pass(3, "index equals brute force", started);
}

#[test]
fn acceptance_4_metric_formulas() {
    let started = Instant::now();
    assert_eq!(precision(3, 1), 0.75);
    assert_eq!(recall(1, 3), 0.25);
    assert_eq!(precision(0, 0), 1.0);
    assert_eq!(recall(0, 0), 1.0);
    assert_eq!(precision(1, 0), 1.0);
    assert_eq!(precision(0, 2), 0.0);

    let win = |t_start, t_end| GroundTruthWindow {
        t_start,
        t_end,
        label: "crossing".to_string(),
    };
    assert_eq!(
        match_counts(&[], &[win(0.0, 1.0)]),
        MatchCounts {
            correct: 0,
            false_advisories: 0,
            missed: 1,
            covered_windows: 0
        }
    );
    assert_eq!(
        match_counts(
            &[(0.0, 2.0), (10.0, 12.0)],
            &[win(1.0, 3.0), win(20.0, 25.0)]
        ),
        MatchCounts {
            correct: 1,
            false_advisories: 1,
            missed: 1,
            covered_windows: 1
        }
    );
    pass(4, "precision/recall formulas", started);
}

/// Shared harness: generate a scenario, build the map from its training
/// drives, replay the test drive, and score it.
fn run_scenario(spec: &ScenarioSpec, params: &AdvisoryParams) -> (f64, f64) {
    let generated = generate(spec).expect("spec is valid");
    let map = build_map(&generated.train_logs, 5.0);
    let run = replay(&generated.test_log, &map, params).expect("replay succeeds");
    let out = AdvisoryOutput::from_run(&run);
    let report = evaluate_run(&out, &generated.ground_truth).expect("clip ids match");
    (report.precision, report.recall)
}

#[test]
fn acceptance_5_perfect_information_pipeline() {
    let started = Instant::now();
    for kind in ScenarioKind::all() {
        let spec = ScenarioSpec::with_defaults(kind, 7);
        let (p, r) = run_scenario(&spec, &AdvisoryParams::default());
        assert_eq!(p, 1.0, "{kind}: precision {p} at zero noise");
        assert_eq!(r, 1.0, "{kind}: recall {r} at zero noise");
    }
    assert!(started.elapsed().as_secs_f64() < 5.0, "budget exceeded");
    pass(5, "noise-free pipeline is perfect", started);
}

#[test]
fn acceptance_6_sampling_distance_recall_trend() {
    let started = Instant::now();
    let recall_at = |sampling_distance_m: f64| -> f64 {
        let params = AdvisoryParams {
            sampling_distance_m,
            ..AdvisoryParams::default()
        };
        let mut total = 0.0;
        let mut runs = 0;
        for seed in 100..120 {
            for kind in ScenarioKind::all() {
                let spec = ScenarioSpec {
                    noise_m: 1.0,
                    ..ScenarioSpec::with_defaults(kind, seed)
                };
                let (_, r) = run_scenario(&spec, &params);
                total += r;
                runs += 1;
            }
        }
        total / runs as f64
    };
    let recall_k2 = recall_at(2.0);
    let recall_k5 = recall_at(5.0);
    assert!(
        recall_k5 < recall_k2,
        "mean recall must fall with sampling distance: K=2 -> {recall_k2}, K=5 -> {recall_k5}"
    );
    assert!(started.elapsed().as_secs_f64() < 30.0, "budget exceeded");
    println!("  mean recall: K=2 -> {recall_k2:.3}, K=5 -> {recall_k5:.3}");
    pass(6, "coarser sampling lowers recall", started);
}

#[test]
fn acceptance_7_invariant_suites() {
    let started = Instant::now();

    // Weight conservation under build: map weight equals the independent
    // per-second max-count sum over all logs.
    let scenarios: Vec<GeneratedScenario> = ScenarioKind::all()
        .into_iter()
        .map(|kind| {
            generate(&ScenarioSpec {
                noise_m: 1.0,
                ..ScenarioSpec::with_defaults(kind, 11)
            })
            .unwrap()
        })
        .collect();
    let logs: Vec<DriveLog> = scenarios
        .iter()
        .flat_map(|s| s.train_logs.clone())
        .collect();
    let expected_weight: u64 = logs
        .iter()
        .map(|log| {
            let mut per_second: std::collections::BTreeMap<u64, u32> = Default::default();
            for det in log.detections() {
                let k = det.t.floor() as u64;
                let top = per_second.entry(k).or_insert(0);
                *top = (*top).max(det.ped_count);
            }
            per_second.values().map(|&c| c as u64).sum::<u64>()
        })
        .sum();
    let whole = build_map(&logs, 5.0);
    assert_eq!(
        whole.total_weight(),
        expected_weight,
        "build conserves weight"
    );

    // Weight conservation under merge.
    let (first, rest) = logs.split_at(4);
    let map_a = build_map(first, 5.0);
    let map_b = build_map(rest, 5.0);
    let merged = merge_maps(&map_a, &map_b).unwrap();
    assert_eq!(
        merged.total_weight(),
        map_a.total_weight() + map_b.total_weight(),
        "merge conserves weight"
    );

    // FOV invariant: no active sample faces away.
    let mut checked_samples = 0usize;
    for s in &scenarios {
        let map = build_map(&s.train_logs, 5.0);
        let run = replay(&s.test_log, &map, &AdvisoryParams::default()).unwrap();
        for sample in &run.samples {
            if sample.active {
                if let Some(theta) = sample.heading_angle_deg {
                    assert!(theta < 90.0, "active sample with θ = {theta}");
                }
            }
            checked_samples += 1;
        }

        // Episode reconstruction: active samples and episodes describe the
        // same time structure.
        let active_count = run.samples.iter().filter(|s| s.active).count();
        let episode_count: usize = run.episodes.iter().map(|e| e.sample_count).sum();
        assert_eq!(active_count, episode_count);
        for ep in &run.episodes {
            assert!(ep.t_start <= ep.t_end);
            for sample in run
                .samples
                .iter()
                .filter(|s| s.t >= ep.t_start && s.t <= ep.t_end)
            {
                assert!(sample.active, "inactive sample inside an episode span");
            }
        }

        // Min-weight monotonicity: raising the threshold on these
        // single-cause scenarios only removes active samples.
        let active_at = |min_weight: u64| -> Vec<bool> {
            let params = AdvisoryParams {
                min_weight,
                ..AdvisoryParams::default()
            };
            replay(&s.test_log, &map, &params)
                .unwrap()
                .samples
                .iter()
                .map(|s| s.active)
                .collect()
        };
        let base = active_at(1);
        for higher in [2, 3, 4] {
            let raised = active_at(higher);
            for (i, (&lo, &hi)) in base.iter().zip(raised.iter()).enumerate() {
                assert!(
                    lo || !hi,
                    "raising min_weight to {higher} activated sample {i}"
                );
            }
        }
    }
    assert!(checked_samples > 100, "scenarios produced too few samples");

    // Stopping-distance monotonicity in v, t, b; anti-monotonicity in f.
    let base = AdvisoryParams::default();
    let s = |v: f64, p: &AdvisoryParams| stopping_distance(v, p).unwrap();
    for v in [10.0, 30.0, 50.0, 80.0] {
        assert!(s(v, &base) < s(v + 5.0, &base));
        let slower_reaction = AdvisoryParams {
            reaction_time_s: base.reaction_time_s + 0.5,
            ..base
        };
        assert!(s(v, &base) < s(v, &slower_reaction));
        let bigger_offset = AdvisoryParams {
            offset: base.offset + 0.5,
            ..base
        };
        assert!(s(v, &base) < s(v, &bigger_offset));
        let grippier = AdvisoryParams {
            friction: base.friction + 0.1,
            ..base
        };
        assert!(s(v, &grippier) < s(v, &base));
    }

    // Save/load round trip is byte-stable.
    let text = save_map(&whole);
    let loaded = load_map(&text).unwrap();
    assert_eq!(loaded, whole);
    assert_eq!(
        save_map(&loaded),
        text,
        "second save must be byte-identical"
    );

    // Filtering respects the threshold and never invents weight.
    let filtered = filter_by_weight(&whole, 2);
    assert!(filtered.nodes().iter().all(|n| n.weight >= 2));
    assert!(filtered.total_weight() <= whole.total_weight());

    assert!(started.elapsed().as_secs_f64() < 30.0, "budget exceeded");
    pass(7, "cross-module invariants", started);
}

#[test]
fn acceptance_8_self_replay_recall() {
    let started = Instant::now();
    for kind in ScenarioKind::all() {
        let spec = ScenarioSpec::with_defaults(kind, 7);
        let generated = generate(&spec).unwrap();
        let training = &generated.train_logs[0];
        let map = build_map(std::slice::from_ref(training), 5.0);
        let run = replay(training, &map, &AdvisoryParams::default()).unwrap();
        let out = AdvisoryOutput::from_run(&run);
        // Every pedestrian second of the training clip must fall inside an
        // episode.
        let windows: Vec<GroundTruthWindow> = spec
            .ped_seconds
            .iter()
            .map(|&k| GroundTruthWindow {
                t_start: k as f64,
                t_end: (k + 1) as f64,
                label: kind.slug().to_string(),
            })
            .collect();
        let gt = GroundTruth {
            clip_id: training.clip_id().to_string(),
            windows,
        };
        let report = evaluate_run(&out, &gt).unwrap();
        assert_eq!(
            report.recall, 1.0,
            "{kind}: self-replay recall {}",
            report.recall
        );
    }
    assert!(started.elapsed().as_secs_f64() < 5.0, "budget exceeded");
    pass(8, "self-replay recall is total", started);
}
