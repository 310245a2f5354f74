//! Evaluation against ground truth: presence-period matching, distance,
//! speed and prediction errors.
//!
//! Medians are the lower-middle order statistic for even sample counts, so
//! a reported median is always one of the samples.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assignment::max_weight_matching;
use crate::calib::{CameraCalibration, PlaneBasis};
use crate::geom::ImagePoint;
use crate::kinematics::{slot_index, speed_kmh};
use crate::pipeline::FrameOutput;
use crate::simulate::{GroundTruthRecord, ScenarioTruth};

/// Default IoU below which period matches are dropped.
pub const DEFAULT_L_IOU: f64 = 0.5;

/// Tracks shorter than this many frames do not count for prediction errors.
pub const PREDICTION_MIN_HISTORY: usize = 5;

/// Largest centre distance (meters) at which a track is attributed to a
/// ground-truth vehicle.
const ATTRIBUTION_RADIUS_M: f64 = 3.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("no matched pairs to score")]
    EmptyMatches,
    #[error("outputs and ground truth do not describe the same scene: {0}")]
    Mismatch(String),
}

/// Presence of one vehicle in the measurement area, seconds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodRecord {
    pub id: u64,
    pub enter_time: f64,
    pub exit_time: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LineGroup {
    #[serde(rename = "u")]
    TowardU,
    #[serde(rename = "v")]
    TowardV,
}

/// A road segment with known length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementLine {
    pub a: ImagePoint,
    pub b: ImagePoint,
    pub length_m: f64,
    pub direction: LineGroup,
}

pub fn interval_iou(a: &PeriodRecord, b: &PeriodRecord) -> f64 {
    let inter = (a.exit_time.min(b.exit_time) - a.enter_time.max(b.enter_time)).max(0.0);
    let union = (a.exit_time - a.enter_time) + (b.exit_time - b.enter_time) - inter;
    if union > 0.0 {
        inter / union
    } else {
        0.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodMatch {
    pub est: u64,
    pub gt: u64,
    pub iou: f64,
}

/// Optimal one-to-one matching by total IoU; pairs below `l_iou` are
/// dropped. Recall is matched ground truth over all ground truth (1 when
/// there is none).
pub fn match_periods(est: &[PeriodRecord], gt: &[PeriodRecord], l_iou: f64) -> (Vec<PeriodMatch>, f64) {
    let weight: Vec<Vec<f64>> = est.iter().map(|e| gt.iter().map(|g| interval_iou(e, g)).collect()).collect();
    let matches: Vec<PeriodMatch> = max_weight_matching(&weight, l_iou)
        .into_iter()
        .map(|(i, j, iou)| PeriodMatch { est: est[i].id, gt: gt[j].id, iou })
        .collect();
    let recall = if gt.is_empty() { 1.0 } else { matches.len() as f64 / gt.len() as f64 };
    (matches, recall)
}

/// Lower-middle median.
pub fn median(samples: &[f64]) -> Option<f64> {
    if samples.is_empty() {
        return None;
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    Some(s[(s.len() - 1) / 2])
}

pub fn mean(samples: &[f64]) -> Option<f64> {
    if samples.is_empty() {
        None
    } else {
        Some(samples.iter().sum::<f64>() / samples.len() as f64)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    pub count: usize,
    pub abs_mean: f64,
    pub abs_median: f64,
    /// Relative errors skip pairs whose true value is 0.
    pub rel_mean: Option<f64>,
    pub rel_median: Option<f64>,
}

/// Absolute and relative error statistics of `(estimate, truth)` pairs.
pub fn error_stats(pairs: &[(f64, f64)]) -> Option<ErrorStats> {
    let abs: Vec<f64> = pairs.iter().map(|(e, t)| (e - t).abs()).collect();
    let rel: Vec<f64> = pairs.iter().filter(|(_, t)| *t != 0.0).map(|(e, t)| (e - t).abs() / t.abs()).collect();
    Some(ErrorStats {
        count: pairs.len(),
        abs_mean: mean(&abs)?,
        abs_median: median(&abs)?,
        rel_mean: mean(&rel),
        rel_median: median(&rel),
    })
}

/// Speed errors over matched `(estimated, true)` km/h pairs.
pub fn speed_metrics(pairs: &[(f64, f64)]) -> Result<ErrorStats, EvalError> {
    error_stats(pairs).ok_or(EvalError::EmptyMatches)
}

/// Length errors of measurement lines, grouped by direction.
pub fn distance_metrics(
    lines: &[MeasurementLine],
    calib: &CameraCalibration,
    basis: &PlaneBasis,
) -> BTreeMap<LineGroup, ErrorStats> {
    let mut groups: BTreeMap<LineGroup, Vec<(f64, f64)>> = BTreeMap::new();
    for l in lines {
        if let Ok(d) = calib.measure_distance(l.a, l.b, basis) {
            groups.entry(l.direction).or_default().push((d, l.length_m));
        }
    }
    groups.into_iter().filter_map(|(g, p)| error_stats(&p).map(|s| (g, s))).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionStats {
    pub count: usize,
    pub location_mean_m: f64,
    pub location_median_m: f64,
    pub speed_abs_mean_kmh: f64,
    pub speed_abs_median_kmh: f64,
    pub speed_rel_mean: Option<f64>,
    pub speed_rel_median: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchingReport {
    pub l_iou: f64,
    pub recall: f64,
    pub matched: usize,
    pub ground_truth: usize,
    pub estimated: usize,
    pub unmatched_estimates: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub distance: BTreeMap<String, ErrorStats>,
    pub speed: Option<ErrorStats>,
    pub prediction: BTreeMap<String, PredictionStats>,
    pub matching: MatchingReport,
    pub median_rule: String,
}

fn group_key(g: LineGroup) -> String {
    match g {
        LineGroup::TowardU => "toward_u".into(),
        LineGroup::TowardV => "toward_v".into(),
    }
}

/// Attributes each track to the ground-truth vehicle whose centre is most
/// often the nearest one (within a few meters) over the track's frames.
pub fn attribute_tracks(frames: &[FrameOutput], truth: &[GroundTruthRecord], lambda: f64) -> BTreeMap<u64, u64> {
    let mut by_frame: HashMap<u64, Vec<&GroundTruthRecord>> = HashMap::new();
    for g in truth {
        by_frame.entry(g.frame).or_default().push(g);
    }
    let mut votes: BTreeMap<u64, BTreeMap<u64, usize>> = BTreeMap::new();
    for f in frames {
        let Some(cands) = by_frame.get(&f.frame) else { continue };
        for t in &f.tracks {
            let best = cands
                .iter()
                .map(|g| (lambda * g.center.dist(t.center), g.vehicle))
                .filter(|(d, _)| *d <= ATTRIBUTION_RADIUS_M)
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            if let Some((_, v)) = best {
                *votes.entry(t.track_id).or_default().entry(v).or_default() += 1;
            }
        }
    }
    votes
        .into_iter()
        .filter_map(|(track, vs)| {
            vs.into_iter().max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0))).map(|(v, _)| (track, v))
        })
        .collect()
}

/// Presence periods of the estimated tracks in the measurement area, and
/// each track's speed (km/h) at its last frame inside the area.
pub fn estimated_periods(frames: &[FrameOutput], plane_t: [f64; 2], fps: f64) -> (Vec<PeriodRecord>, BTreeMap<u64, f64>) {
    let mut span: BTreeMap<u64, (u64, u64)> = BTreeMap::new();
    let mut last_speed: BTreeMap<u64, f64> = BTreeMap::new();
    for f in frames {
        for t in &f.tracks {
            if t.center.t < plane_t[0] || t.center.t > plane_t[1] {
                continue;
            }
            let e = span.entry(t.track_id).or_insert((f.frame, f.frame));
            e.1 = f.frame;
            if let Some(s) = t.speed_kmh {
                last_speed.insert(t.track_id, s);
            }
        }
    }
    let periods = span
        .into_iter()
        .map(|(id, (a, b))| PeriodRecord { id, enter_time: a as f64 / fps, exit_time: (b + 1) as f64 / fps })
        .collect();
    (periods, last_speed)
}

/// Prediction errors per horizon against the ground truth at the predicted
/// frame.
pub fn prediction_metrics(
    frames: &[FrameOutput],
    truth: &[GroundTruthRecord],
    track_to_vehicle: &BTreeMap<u64, u64>,
    fps: f64,
    lambda: f64,
) -> BTreeMap<String, PredictionStats> {
    let gt: HashMap<(u64, u64), &GroundTruthRecord> = truth.iter().map(|g| ((g.frame, g.vehicle), g)).collect();
    let mut per_h: BTreeMap<u64, (f64, Vec<f64>, Vec<(f64, f64)>)> = BTreeMap::new();
    for f in frames {
        for t in &f.tracks {
            if t.history < PREDICTION_MIN_HISTORY {
                continue;
            }
            let Some(&vehicle) = track_to_vehicle.get(&t.track_id) else { continue };
            for p in &t.predictions {
                let target = f.frame + slot_index(p.t_offset, fps);
                let Some(g) = gt.get(&(target, vehicle)) else { continue };
                let key = (p.t_offset * 1e6).round() as u64;
                let e = per_h.entry(key).or_insert((p.t_offset, Vec::new(), Vec::new()));
                e.1.push(lambda * p.center.dist(g.center));
                e.2.push((speed_kmh(p.speed, lambda), g.speed_kmh));
            }
        }
    }
    per_h
        .into_values()
        .filter_map(|(tau, loc, spd)| {
            let s = error_stats(&spd)?;
            Some((
                format!("+{tau}"),
                PredictionStats {
                    count: loc.len(),
                    location_mean_m: mean(&loc)?,
                    location_median_m: median(&loc)?,
                    speed_abs_mean_kmh: s.abs_mean,
                    speed_abs_median_kmh: s.abs_median,
                    speed_rel_mean: s.rel_mean,
                    speed_rel_median: s.rel_median,
                },
            ))
        })
        .collect()
}

/// Full report for one pipeline run against simulator ground truth.
pub fn evaluate(
    frames: &[FrameOutput],
    truth: &[GroundTruthRecord],
    scenario: &ScenarioTruth,
    calib: &CameraCalibration,
    l_iou: f64,
) -> Result<EvalReport, EvalError> {
    if !(scenario.fps > 0.0 && scenario.lambda > 0.0) {
        return Err(EvalError::Mismatch("scenario fps and lambda must be positive".into()));
    }
    let lambda = scenario.lambda;
    let attribution = attribute_tracks(frames, truth, lambda);
    let n_tracks: usize = frames.iter().map(|f| f.tracks.len()).sum();
    if n_tracks > 0 && attribution.is_empty() {
        return Err(EvalError::Mismatch("no track lies near any ground-truth vehicle".into()));
    }

    let basis = calib.plane_basis();
    let distance = distance_metrics(&scenario.lines, calib, &basis)
        .into_iter()
        .map(|(g, s)| (group_key(g), s))
        .collect();

    let (periods, last_speed) = match &scenario.measurement_area {
        Some(area) => estimated_periods(frames, area.plane_t, scenario.fps),
        None => (Vec::new(), BTreeMap::new()),
    };
    let (matches, recall) = match_periods(&periods, &scenario.periods, l_iou);
    let gt_speed: HashMap<u64, f64> = scenario.area_speeds.iter().map(|s| (s.id, s.speed_kmh)).collect();
    let speed_pairs: Vec<(f64, f64)> = matches
        .iter()
        .filter_map(|m| Some((*last_speed.get(&m.est)?, *gt_speed.get(&m.gt)?)))
        .collect();
    let speed = speed_metrics(&speed_pairs).ok();

    let prediction = prediction_metrics(frames, truth, &attribution, scenario.fps, lambda);
    Ok(EvalReport {
        distance,
        speed,
        prediction,
        matching: MatchingReport {
            l_iou,
            recall,
            matched: matches.len(),
            ground_truth: scenario.periods.len(),
            estimated: periods.len(),
            unmatched_estimates: periods.len() - matches.len(),
        },
        median_rule: "lower-middle".into(),
    })
}
