use std::collections::{BTreeMap, BTreeSet};

use roadwatch_core::pipeline::{group_by_frame, Pipeline, SceneConfig};
use roadwatch_core::simulate::{simulate_scenario, ScenarioConfig};

fn scenario(emit_ids: bool) -> ScenarioConfig {
    let mut cfg: ScenarioConfig = serde_json::from_str(
        r#"{
            "camera": {"image_size": [1920, 1080], "focal": 1400, "pitch_deg": 12,
                       "pan_deg": 20, "height_m": 8, "fps": 25},
            "vehicles": [
                {"id": 1, "dimensions": [4.5, 1.8, 1.5], "position": [3.5, 18], "velocity": [0, 20]},
                {"id": 2, "dimensions": [4.8, 1.9, 1.6], "position": [-3.5, 55], "velocity": [0, -15]},
                {"id": 3, "dimensions": [4.2, 1.7, 1.4], "position": [7, 20], "velocity": [0, 12], "spawn": 10}
            ],
            "duration": 50
        }"#,
    )
    .unwrap();
    cfg.emit_track_ids = emit_ids;
    cfg
}

/// Track ID sets per frame, keyed by which vehicle each track sits on.
fn run(emit_ids: bool) -> (BTreeMap<u64, BTreeSet<u64>>, usize) {
    let sim = simulate_scenario(&scenario(emit_ids), 1).unwrap();
    let cal = sim.calibration.resolve().unwrap();
    let mut p = Pipeline::new(SceneConfig::default(), cal, sim.scenario.image_size).unwrap();
    let mut owners: BTreeMap<u64, BTreeSet<u64>> = BTreeMap::new();
    let mut dropped = 0;
    for (frame, dets) in group_by_frame(sim.detections.clone()) {
        let out = p.process_frame(frame, dets).unwrap();
        dropped += out.dropped.len();
        for t in &out.tracks {
            let nearest = sim
                .ground_truth
                .iter()
                .filter(|g| g.frame == frame)
                .min_by(|a, b| a.center.dist(t.center).total_cmp(&b.center.dist(t.center)))
                .unwrap();
            assert!(nearest.center.dist(t.center) * sim.scenario.lambda < 1e-6);
            owners.entry(nearest.vehicle).or_default().insert(t.track_id);
        }
    }
    (owners, dropped)
}

#[test]
fn upstream_ids_pass_through() {
    let (owners, dropped) = run(true);
    assert_eq!(dropped, 0);
    for (vehicle, ids) in owners {
        assert_eq!(ids, BTreeSet::from([vehicle]));
    }
}

#[test]
fn iou_tracker_keeps_one_id_per_vehicle() {
    let (owners, _) = run(false);
    assert_eq!(owners.len(), 3);
    let mut seen = BTreeSet::new();
    for ids in owners.values() {
        assert_eq!(ids.len(), 1, "{owners:?}");
        assert!(seen.insert(*ids.iter().next().unwrap()));
    }
}
