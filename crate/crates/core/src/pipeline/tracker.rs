use super::record::{BBox, DetectionRecord};
use crate::assignment::max_weight_matching;

/// Assigns IDs to `cur` by optimal IoU matching against `prev`. Detections
/// without a partner at or above `gate` get fresh IDs counted up from
/// `next_id`.
pub fn associate_tracks(
    prev: &[(u64, BBox)],
    mut cur: Vec<DetectionRecord>,
    next_id: &mut u64,
    gate: f64,
) -> Vec<DetectionRecord> {
    let weight: Vec<Vec<f64>> = cur
        .iter()
        .map(|d| {
            prev.iter()
                .map(|(_, b)| {
                    let iou = d.bbox.iou(b);
                    if iou >= gate {
                        iou
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    let mut matched = vec![None; cur.len()];
    if !prev.is_empty() {
        for (i, j, _) in max_weight_matching(&weight, gate.max(f64::MIN_POSITIVE)) {
            matched[i] = Some(prev[j].0);
        }
    }
    for (det, m) in cur.iter_mut().zip(matched) {
        det.track_id = Some(m.unwrap_or_else(|| {
            let id = *next_id;
            *next_id += 1;
            id
        }));
    }
    cur
}

#[derive(Clone, Debug)]
struct Tracked {
    id: u64,
    bbox: BBox,
    last_frame: u64,
}

/// IoU tracker used when the detection stream carries no track IDs.
#[derive(Clone, Debug)]
pub struct IouTracker {
    tracks: Vec<Tracked>,
    next_id: u64,
    max_age: u64,
    gate: f64,
}

impl IouTracker {
    pub fn new(max_age: u64, gate: f64) -> Self {
        Self { tracks: Vec::new(), next_id: 1, max_age, gate }
    }

    /// Keeps fresh IDs clear of IDs already used upstream.
    pub fn reserve_above(&mut self, id: u64) {
        self.next_id = self.next_id.max(id + 1);
    }

    pub fn active(&self) -> usize {
        self.tracks.len()
    }

    /// Labels every detection of `frame` that has no ID yet.
    pub fn assign(&mut self, frame: u64, dets: Vec<DetectionRecord>) -> Vec<DetectionRecord> {
        let max_age = self.max_age;
        self.tracks.retain(|t| frame.saturating_sub(t.last_frame) <= max_age);
        let (mut out, todo): (Vec<_>, Vec<_>) = dets.into_iter().partition(|d| d.track_id.is_some());
        let prev: Vec<(u64, BBox)> = self.tracks.iter().map(|t| (t.id, t.bbox)).collect();
        let labeled = associate_tracks(&prev, todo, &mut self.next_id, self.gate);
        for d in &labeled {
            let id = d.track_id.expect("associate_tracks labels every detection");
            match self.tracks.iter_mut().find(|t| t.id == id) {
                Some(t) => {
                    t.bbox = d.bbox;
                    t.last_frame = frame;
                }
                None => self.tracks.push(Tracked { id, bbox: d.bbox, last_frame: frame }),
            }
        }
        out.extend(labeled);
        out
    }
}
