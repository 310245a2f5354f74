//! End-to-end acceptance checks. Runs without the libtest harness so every
//! criterion prints exactly one PASS/FAIL line.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use nalgebra::Vector2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use roadwatch_cli::{cmd_eval, cmd_run, cmd_simulate, EvalArgs, RunArgs};
use roadwatch_core::assignment::min_cost_assignment;
use roadwatch_core::box3d::{bottom_quadrangle, box_from_contour, Quadrangle};
use roadwatch_core::danger::{quad_distance, vehicle_heatmap, GridSpec};
use roadwatch_core::kinematics::{predict_state, KinematicState, PredictionConfig, PredictionSnapshot};
use roadwatch_core::pipeline::{group_by_frame, FrameOutput, Pipeline, SceneConfig, VehicleClass};
use roadwatch_core::simulate::{
    forward_project, simulate_scenario, CameraSpec, GroundTruthRecord, ScenarioConfig, SimCamera, Simulation,
    VehicleSpec,
};
use roadwatch_core::{ImagePoint, PlanePoint};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn random_spec(rng: &mut ChaCha8Rng) -> CameraSpec {
    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
    CameraSpec {
        image_size: [1920, 1080],
        focal: rng.random_range(900.0..2200.0),
        principal_point: Some(ImagePoint::new(rng.random_range(900.0..1020.0), rng.random_range(480.0..600.0))),
        pitch_deg: rng.random_range(6.0..45.0),
        pan_deg: sign * rng.random_range(8.0..60.0),
        roll_deg: rng.random_range(-6.0..6.0),
        height_m: rng.random_range(4.0..15.0),
        fps: 25.0,
        d: 10.0,
    }
}

fn camera(pitch: f64, pan: f64, roll: f64, height: f64, focal: f64) -> CameraSpec {
    CameraSpec {
        image_size: [1920, 1080],
        focal,
        principal_point: None,
        pitch_deg: pitch,
        pan_deg: pan,
        roll_deg: roll,
        height_m: height,
        fps: 25.0,
        d: 10.0,
    }
}

fn car(id: u64, position: [f64; 2], velocity: [f64; 2]) -> VehicleSpec {
    VehicleSpec {
        id,
        class: VehicleClass::Car,
        dimensions: [4.5, 1.8, 1.5],
        position,
        velocity,
        acceleration: [0.0, 0.0],
        spawn: 0,
        despawn: None,
    }
}

fn scenario(cam: CameraSpec, vehicles: Vec<VehicleSpec>, duration: u64) -> ScenarioConfig {
    ScenarioConfig {
        camera: cam,
        vehicles,
        noise: Default::default(),
        duration,
        measurement_area: None,
        emit_track_ids: true,
    }
}

fn run_pipeline(sim: &Simulation) -> Vec<FrameOutput> {
    let cal = sim.calibration.resolve().unwrap();
    let mut p = Pipeline::new(SceneConfig::default(), cal, sim.scenario.image_size).unwrap();
    group_by_frame(sim.detections.clone())
        .into_iter()
        .map(|(f, dets)| p.process_frame(f, dets).unwrap())
        .collect()
}

fn truth_index(sim: &Simulation) -> BTreeMap<(u64, u64), &GroundTruthRecord> {
    sim.ground_truth.iter().map(|g| ((g.frame, g.vehicle), g)).collect()
}

fn projection_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut n = 0;
    let mut cams = 0;
    while cams < 100 {
        let Ok(cam) = SimCamera::new(random_spec(&mut rng)) else { continue };
        cams += 1;
        let cal = cam.calibration();
        let c = cal.center();
        for _ in 0..1000 {
            let p = cam.road_to_world(rng.random_range(-25.0..25.0), rng.random_range(3.0..200.0));
            let px = forward_project(&p, cal).unwrap();
            let back = cal.project_to_plane(px).unwrap();
            worst = worst.max((back - p).norm() / (p - c).norm());
            n += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(worst <= 1e-6 && secs < 5.0, format!("{n} points, worst relative error {worst:.2e}, {secs:.2} s"))
}

fn plane_membership() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let mut worst: f64 = 0.0;
    let mut n = 0;
    while n < 100_000 {
        let Ok(cam) = SimCamera::new(random_spec(&mut rng)) else { continue };
        let cal = cam.calibration();
        for _ in 0..1000 {
            let px = ImagePoint::new(rng.random_range(0.0..1920.0), rng.random_range(0.0..1080.0));
            if let Ok(p) = cal.project_to_plane(px) {
                worst = worst.max(cal.plane_residual(&p).abs());
                n += 1;
            }
        }
    }
    outcome(worst <= 1e-9, format!("{n} queries, worst |rho . [P,1]| {worst:.2e}"))
}

fn seg_dist(p: Vector2<f64>, a: Vector2<f64>, b: Vector2<f64>) -> f64 {
    let ab = b - a;
    let t = ((p - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
    (a + ab * t - p).norm()
}

/// Separating-axis test for two convex polygons.
fn convex_overlap(a: &[Vector2<f64>; 4], b: &[Vector2<f64>; 4]) -> bool {
    for poly in [a, b] {
        for k in 0..4 {
            let e = poly[(k + 1) % 4] - poly[k];
            let axis = Vector2::new(-e.y, e.x);
            let span = |q: &[Vector2<f64>; 4]| {
                q.iter().map(|p| p.dot(&axis)).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)))
            };
            let (a0, a1) = span(a);
            let (b0, b1) = span(b);
            if a1 < b0 || b1 < a0 {
                return false;
            }
        }
    }
    true
}

fn boundary_samples(q: &[Vector2<f64>; 4], n: usize) -> Vec<Vector2<f64>> {
    let per = n / 4;
    (0..4)
        .flat_map(|k| {
            let (a, b) = (q[k], q[(k + 1) % 4]);
            (0..per).map(move |i| a + (b - a) * (i as f64 / per as f64))
        })
        .collect()
}

fn sampled_distance(a: &[Vector2<f64>; 4], b: &[Vector2<f64>; 4]) -> f64 {
    let mut best = f64::INFINITY;
    for (p, q) in [(a, b), (b, a)] {
        for s in boundary_samples(p, 10_000) {
            for k in 0..4 {
                best = best.min(seg_dist(s, q[k], q[(k + 1) % 4]));
            }
        }
    }
    best
}

fn random_quad(rng: &mut ChaCha8Rng, center: Vector2<f64>) -> Quadrangle {
    let half = Vector2::new(rng.random_range(0.2..0.6), rng.random_range(0.1..0.3));
    let th: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let (s, c) = th.sin_cos();
    let skew = rng.random_range(-0.1..0.1);
    let ring = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)];
    Quadrangle::new(ring.map(|(x, y)| {
        let l = Vector2::new(x * half.x + skew * y, y * half.y);
        PlanePoint::from_vec(center + Vector2::new(c * l.x - s * l.y, s * l.x + c * l.y))
    }))
}

fn quadrangle_distance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let (mut above, mut gap, mut asym): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..1000 {
        let a = random_quad(&mut rng, Vector2::zeros());
        let at = Vector2::new(rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5));
        let b = random_quad(&mut rng, at);
        let d = quad_distance(&a, &b);
        let (av, bv) = (a.as_vecs(), b.as_vecs());
        let oracle = if convex_overlap(&av, &bv) { 0.0 } else { sampled_distance(&av, &bv) };
        above = above.max(d - oracle);
        gap = gap.max(oracle - d);
        asym = asym.max((d - quad_distance(&b, &a)).abs());
    }
    let mut nonzero = 0;
    for _ in 0..200 {
        let a = random_quad(&mut rng, Vector2::zeros());
        // shifted towards the first quad until a corner lies inside it
        let inside = a.as_vecs()[rng.random_range(0..4)] * rng.random_range(0.0..0.95);
        let b = random_quad(&mut rng, Vector2::zeros());
        let corner = b.as_vecs()[rng.random_range(0..4)];
        let b = b.translated(inside - corner);
        if quad_distance(&a, &b) != 0.0 || quad_distance(&b, &a) != 0.0 {
            nonzero += 1;
        }
    }
    let pass = above <= 0.0 && gap <= 1e-3 && asym <= 1e-12 && nonzero == 0;
    outcome(
        pass,
        format!("1000 pairs: above oracle {above:.1e}, below oracle {gap:.1e}, asymmetry {asym:.1e}; 200 overlapping, {nonzero} nonzero"),
    )
}

fn box_recovery() -> Outcome {
    let poses = [
        camera(14.0, 20.0, 0.0, 8.0, 1400.0),
        camera(22.0, -30.0, 2.0, 10.0, 1600.0),
        camera(10.0, 40.0, -3.0, 6.0, 1200.0),
        camera(30.0, -15.0, 1.0, 12.0, 1800.0),
        camera(18.0, 50.0, 4.0, 9.0, 1500.0),
        camera(26.0, -45.0, -2.0, 7.0, 1300.0),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    let (mut n, mut worst_vertex, mut worst_area, mut failures) = (0, 0.0f64, 0.0f64, 0);
    for (k, pose) in poses.into_iter().enumerate() {
        let vehicles = (0..8)
            .map(|i| {
                let mut v = car(i + 1, [[-7.0, -3.5, 3.5, 7.0][i as usize % 4], rng.random_range(15.0..40.0)], [0.0, 0.0]);
                v.dimensions = [rng.random_range(3.8..5.5), rng.random_range(1.6..2.1), rng.random_range(1.3..2.2)];
                v.velocity = [0.0, rng.random_range(-20.0..20.0)];
                v
            })
            .collect();
        let sim = simulate_scenario(&scenario(pose, vehicles, 30), 0).unwrap();
        let truth = truth_index(&sim);
        let cal = sim.calibration.resolve().unwrap();
        let basis = cal.plane_basis();
        // every third frame, up to 20 vehicles per pose
        let mut taken = 0;
        for det in sim.detections.iter().filter(|d| d.frame % 3 == k as u64 % 3) {
            if taken == 20 {
                break;
            }
            let g = truth[&(det.frame, det.track_id.unwrap())];
            let corners = g.corners_image.unwrap();
            taken += 1;
            n += 1;
            let Ok(bx) = box_from_contour(&det.contour, &cal) else {
                failures += 1;
                continue;
            };
            let cost: Vec<Vec<f64>> = bx.vertices().iter().map(|v| corners.iter().map(|c| v.dist(*c)).collect()).collect();
            let assign = min_cost_assignment(&cost);
            let diag = corners.iter().flat_map(|a| corners.iter().map(move |b| a.dist(*b))).fold(0.0, f64::max);
            let err = assign.iter().enumerate().map(|(i, j)| cost[i][j.unwrap()]).fold(0.0, f64::max) / diag;
            let dims = sim_dims(&sim, det.track_id.unwrap());
            let area = bottom_quadrangle(&bx, &cal, &basis).map(|q| q.area() * cal.lambda().powi(2));
            let Ok(area) = area else {
                failures += 1;
                continue;
            };
            worst_vertex = worst_vertex.max(err);
            worst_area = worst_area.max((area - dims.0 * dims.1).abs() / (dims.0 * dims.1));
        }
    }
    let pass = n >= 100 && failures == 0 && worst_vertex <= 0.02 && worst_area <= 0.10;
    outcome(
        pass,
        format!("{n} vehicles over 6 poses, {failures} failed, worst vertex error {worst_vertex:.2e} of diagonal, worst area error {worst_area:.2e}"),
    )
}

fn sim_dims(sim: &Simulation, id: u64) -> (f64, f64) {
    // footprint side lengths straight from the ground truth
    let g = sim.ground_truth.iter().find(|g| g.vehicle == id).unwrap();
    let q = g.footprint.as_vecs();
    let lam = sim.scenario.lambda;
    ((q[1] - q[0]).norm() * lam, (q[2] - q[1]).norm() * lam)
}

fn speed_estimation() -> Outcome {
    let v = 80.0 / 3.6;
    let cfg = scenario(camera(14.0, 20.0, 0.0, 8.0, 1400.0), vec![car(1, [3.5, 14.0], [0.0, v])], 40);
    let sim = simulate_scenario(&cfg, 0).unwrap();
    let frames = run_pipeline(&sim);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for f in &frames {
        for t in f.tracks.iter().filter(|t| t.history >= 10) {
            worst = worst.max((t.speed_kmh.unwrap() - 80.0).abs());
            checked += 1;
        }
    }
    outcome(checked >= 10 && worst <= 0.5, format!("{checked} frames after the 10th, worst error {worst:.2e} km/h"))
}

fn prediction_exactness() -> Outcome {
    let cfg = PredictionConfig { fps: 25.0, sigma0: 0.1, sigma_rate: 0.05 };
    let cam_spec = camera(16.0, -25.0, 1.0, 9.0, 1500.0);
    let mut constant = car(1, [-3.5, 15.0], [0.0, 19.0]);
    constant.dimensions = [4.2, 1.8, 1.5];
    let mut accel = car(2, [3.5, 14.0], [0.0, 8.0]);
    accel.acceleration = [0.0, 1.0];
    let sim = simulate_scenario(&scenario(cam_spec, vec![constant, accel], 40), 0).unwrap();
    let truth = truth_index(&sim);
    let lam = sim.scenario.lambda;

    // predictor fed the exact state of each frame
    let state_error = |id: u64| {
        let mut errs = Vec::new();
        for f in 0..37u64 {
            let g = truth[&(f, id)];
            let later = truth[&(f + 3, id)];
            let st = KinematicState { center: g.center, velocity: g.velocity, footprint: g.footprint };
            let snap = &predict_state(&st, &[0.12], &cfg).unwrap()[0];
            errs.push(snap.center.dist(later.center) * lam);
        }
        errs
    };
    let cv = state_error(1).into_iter().fold(0.0, f64::max);
    let acc = state_error(2);
    let (acc_lo, acc_hi) = acc.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &e| (lo.min(e), hi.max(e)));

    // the full pipeline on the constant-velocity track
    let frames = run_pipeline(&sim);
    let (mut e2e_cv, mut e2e_acc) = (0.0f64, 0.0f64);
    for f in &frames {
        for t in &f.tracks {
            let Some(p) = t.predictions.iter().find(|p| (p.t_offset - 0.12).abs() < 1e-12) else { continue };
            let Some(later) = truth.get(&(f.frame + 3, t.track_id)) else { continue };
            let e = p.center.dist(later.center) * lam;
            if t.track_id == 1 {
                e2e_cv = e2e_cv.max(e);
            } else {
                e2e_acc = e2e_acc.max(e);
            }
        }
    }
    let pass = cv <= 1e-6 && e2e_cv <= 1e-6 && acc_lo >= 0.0072 * 0.9 && acc_hi <= 0.0072 * 1.1;
    outcome(
        pass,
        format!(
            "constant velocity {cv:.1e} m (pipeline {e2e_cv:.1e} m); 1 m/s^2 error {acc_lo:.5}..{acc_hi:.5} m (pipeline, smoothed velocity: {e2e_acc:.4} m)"
        ),
    )
}

/// Gap between two axis-aligned road rectangles, meters.
fn rect_gap(a: &GroundTruthRecord, b: &GroundTruthRecord, dims: [f64; 2]) -> f64 {
    let dl = ((a.center_m[0] - b.center_m[0]).abs() - dims[1]).max(0.0);
    let da = ((a.center_m[1] - b.center_m[1]).abs() - dims[0]).max(0.0);
    dl.hypot(da)
}

fn danger_recognition() -> Outcome {
    // rear vehicle closes at 17 m/s; contact falls half-way between frames 14 and 15
    let closing = 17.0 / 25.0;
    let gap0 = closing * 14.5;
    let rear = car(1, [3.5, 22.0], [0.0, 25.0]);
    let front = car(2, [3.5, 22.0 + 4.5 + gap0], [0.0, 8.0]);
    let cfg = scenario(camera(10.0, 22.0, 0.0, 8.0, 1400.0), vec![rear, front], 19);
    let sim = simulate_scenario(&cfg, 0).unwrap();
    let truth = truth_index(&sim);
    let frames = run_pipeline(&sim);
    let threshold = SceneConfig::default().alert_threshold;

    let mut problems = Vec::new();
    let mut alert_frames = 0;
    let mut first_overlap = None;
    let mut first_danger = None;
    for f in &frames {
        let ids: Vec<u64> = f.tracks.iter().map(|t| t.track_id).collect();
        if ids != [1, 2] {
            problems.push(format!("frame {}: tracks {ids:?}", f.frame));
            continue;
        }
        let gt = rect_gap(truth[&(f.frame, 1)], truth[&(f.frame, 2)], [4.5, 1.8]);
        if gt == 0.0 && first_overlap.is_none() {
            first_overlap = Some(f.frame);
        }
        let alert = f.alerts.iter().find(|a| a.track_a == 1 && a.track_b == 2);
        match alert {
            Some(a) => {
                alert_frames += 1;
                if (a.distance - gt).abs() > 0.05 {
                    problems.push(format!("frame {}: alert {:.3} m vs true {gt:.3} m", f.frame, a.distance));
                }
            }
            None if gt < threshold => problems.push(format!("frame {}: no alert at {gt:.3} m", f.frame)),
            None => {}
        }
        if alert.is_some() && gt >= threshold + 0.05 {
            problems.push(format!("frame {}: alert at {gt:.3} m", f.frame));
        }
        let hot = f.danger.iter().any(|d| (d.t_offset - 0.12).abs() < 1e-12 && d.max > 0.5);
        if hot && first_danger.is_none() {
            first_danger = Some(f.frame);
        }
    }
    let lead = match (first_overlap, first_danger) {
        (Some(o), Some(d)) if d <= o => Some(o - d),
        _ => None,
    };
    if !lead.is_some_and(|l| l >= 3) {
        problems.push(format!("danger map lead {lead:?} frames (overlap {first_overlap:?}, first map > 0.5 {first_danger:?})"));
    }
    let detail = format!(
        "{} frames, {alert_frames} with alerts, overlap at frame {first_overlap:?}, danger > 0.5 from frame {first_danger:?}",
        frames.len()
    );
    if problems.is_empty() {
        outcome(true, detail)
    } else {
        outcome(false, format!("{detail}; {}", problems.join("; ")))
    }
}

fn heatmap_monte_carlo() -> Outcome {
    let grid = GridSpec { origin: PlanePoint::new(-8.0, -6.0), cell: 0.1, nx: 160, ny: 120 };
    let half = Vector2::new(2.25, 0.9);
    let q = Quadrangle::rect(-half.x, -half.y, half.x, half.y);
    let mut details = Vec::new();
    let mut pass = true;
    for (k, sigma) in [0.2, 0.5, 1.0].into_iter().enumerate() {
        let snap = PredictionSnapshot {
            t_offset: 0.12,
            center: q.center(),
            speed: Vector2::zeros(),
            acceleration: Vector2::zeros(),
            variance: sigma * sigma,
            footprint: q,
        };
        let hm = vehicle_heatmap(1, &snap, &grid).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(200 + k as u64);
        let normal = Normal::new(0.0, sigma).unwrap();
        let mut hits = vec![0u32; grid.len()];
        let samples = 100_000;
        let h = grid.cell;
        // cell centres origin + (i + 0.5) h within half a side of the sample
        let range = |c: f64, o: f64, half: f64, n: usize| {
            let lo = ((c - half - o) / h - 0.5).ceil().max(0.0) as usize;
            let hi = (((c + half - o) / h - 0.5).floor() as i64).min(n as i64 - 1);
            (lo, hi)
        };
        for _ in 0..samples {
            let c = Vector2::new(normal.sample(&mut rng), normal.sample(&mut rng));
            let (i0, i1) = range(c.x, grid.origin.s, half.x, grid.nx);
            let (j0, j1) = range(c.y, grid.origin.t, half.y, grid.ny);
            for j in j0 as i64..=j1 {
                for i in i0 as i64..=i1 {
                    hits[j as usize * grid.nx + i as usize] += 1;
                }
            }
        }
        let mut worst: f64 = 0.0;
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                worst = worst.max((hm.get(i, j) - hits[j * grid.nx + i] as f64 / samples as f64).abs());
            }
        }
        pass &= worst <= 0.02;
        details.push(format!("sigma {sigma} m: {worst:.4}"));
    }
    outcome(pass, format!("max per-cell deviation {}", details.join(", ")))
}

fn brute_force(cost: &[Vec<f64>]) -> f64 {
    fn go(cost: &[Vec<f64>], row: usize, used: &mut Vec<bool>) -> f64 {
        if row == cost.len() {
            return 0.0;
        }
        let mut best = f64::INFINITY;
        for c in 0..cost.len() {
            if !used[c] {
                used[c] = true;
                best = best.min(cost[row][c] + go(cost, row + 1, used));
                used[c] = false;
            }
        }
        best
    }
    go(cost, 0, &mut vec![false; cost.len()])
}

fn eval_scenario() -> ScenarioConfig {
    let mut vehicles = Vec::new();
    for i in 0..6u64 {
        let lane = [-5.25, -1.75, 1.75, 5.25][i as usize % 4];
        let dir = if lane < 0.0 { -1.0 } else { 1.0 };
        let start = if dir > 0.0 { 12.0 } else { 60.0 };
        let mut v = car(i + 1, [lane, start], [0.0, dir * (14.0 + 2.0 * i as f64)]);
        v.spawn = 8 * i;
        vehicles.push(v);
    }
    let mut cfg = scenario(camera(12.0, 18.0, 0.0, 9.0, 1300.0), vehicles, 140);
    cfg.measurement_area = Some([25.0, 45.0]);
    cfg
}

fn evaluation_harness(work: &Path) -> Outcome {
    let dir = work.join("eval");
    let scen = dir.join("scenario.json");
    fs::create_dir_all(&dir).unwrap();
    fs::write(&scen, serde_json::to_vec_pretty(&eval_scenario()).unwrap()).unwrap();
    let gt = dir.join("gt");
    let out = dir.join("out");
    cmd_simulate(&scen, 5, &gt).unwrap();
    cmd_run(&RunArgs {
        calib: gt.join("calibration.json"),
        detections: gt.join("detections.jsonl"),
        out: out.clone(),
        ..Default::default()
    })
    .unwrap();
    let report = dir.join("report.json");
    let summary = cmd_eval(&EvalArgs { outputs: out, gt: gt.clone(), calib: None, out: report.clone() }).unwrap();
    let recall = summary["recall"].as_f64().unwrap();
    let periods: serde_json::Value = serde_json::from_slice(&fs::read(gt.join("scenario_gt.json")).unwrap()).unwrap();
    let n_gt = periods["periods"].as_array().unwrap().len();

    let mut rng = ChaCha8Rng::seed_from_u64(105);
    let mut mismatches = 0;
    for trial in 0..1000 {
        let n = 1 + trial % 6;
        let cost: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.random_range(0.0..100.0)).collect()).collect();
        let assign = min_cost_assignment(&cost);
        let mut cols: Vec<usize> = assign.iter().map(|c| c.unwrap()).collect();
        let total: f64 = cols.iter().enumerate().map(|(r, &c)| cost[r][c]).sum();
        cols.sort_unstable();
        cols.dedup();
        if cols.len() != n || (total - brute_force(&cost)).abs() > 1e-9 {
            mismatches += 1;
        }
    }
    let pass = recall == 1.0 && n_gt >= 5 && mismatches == 0;
    outcome(pass, format!("recall {recall} over {n_gt} periods; Hungarian vs brute force: {mismatches}/1000 mismatches"))
}

fn tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.file_name().unwrap() != "manifest.json" {
                out.insert(p.strip_prefix(dir).unwrap().display().to_string(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn determinism(work: &Path) -> Outcome {
    let mut cfg = eval_scenario();
    cfg.noise.contour_sigma_px = 0.7;
    cfg.noise.drop_prob = 0.05;
    let mut trees = Vec::new();
    for k in 0..2 {
        let dir = work.join(format!("det{k}"));
        fs::create_dir_all(&dir).unwrap();
        let scen = dir.join("scenario.json");
        fs::write(&scen, serde_json::to_vec_pretty(&cfg).unwrap()).unwrap();
        cmd_simulate(&scen, 42, &dir.join("gt")).unwrap();
        cmd_run(&RunArgs {
            calib: dir.join("gt/calibration.json"),
            detections: dir.join("gt/detections.jsonl"),
            out: dir.join("out"),
            ..Default::default()
        })
        .unwrap();
        cmd_eval(&EvalArgs {
            outputs: dir.join("out"),
            gt: dir.join("gt"),
            calib: None,
            out: dir.join("report/report.json"),
        })
        .unwrap();
        fs::remove_file(&scen).unwrap();
        trees.push(tree(&dir));
    }
    let differing: Vec<&String> = trees[0].keys().filter(|k| trees[1].get(*k) != trees[0].get(*k)).collect();
    let rasters = trees[0].keys().filter(|k| k.ends_with(".pgm")).count();
    let pass = differing.is_empty() && trees[0].len() == trees[1].len() && rasters > 0;
    outcome(pass, format!("{} files ({rasters} rasters) compared, {} differ {differing:?}", trees[0].len(), differing.len()))
}

fn main() {
    let work = tempfile::tempdir().unwrap();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("projection round trip", Box::new(projection_round_trip)),
        ("plane membership", Box::new(plane_membership)),
        ("quadrangle distance vs oracle", Box::new(quadrangle_distance)),
        ("3D box recovery", Box::new(box_recovery)),
        ("speed estimation", Box::new(speed_estimation)),
        ("prediction exactness", Box::new(prediction_exactness)),
        ("danger recognition", Box::new(danger_recognition)),
        ("heat-map Monte Carlo agreement", Box::new(heatmap_monte_carlo)),
        ("evaluation harness", Box::new(|| evaluation_harness(work.path()))),
        ("determinism", Box::new(|| determinism(work.path()))),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("acceptance: {failed} failed");
    if failed > 0 {
        std::process::exit(1);
    }
}
