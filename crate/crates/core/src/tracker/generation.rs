//! Starting new targets from chains of unexplained detections, and retiring
//! targets that stayed unmatched for too long.

use std::collections::VecDeque;

use super::config::TrackerConfig;
use super::target::{Target, TargetStatus, TrackPoint};
use super::Detection;
use crate::geometry::iou;

/// Unmatched detections of the most recent frames, oldest first.
#[derive(Debug, Clone, Default)]
pub struct DetectionHistory {
    frames: VecDeque<(u32, Vec<Option<Detection>>)>,
}

impl DetectionHistory {
    /// Records the detections left over at `frame`; keeps at most `depth`
    /// frames.
    pub fn push(&mut self, frame: u32, leftovers: Vec<Detection>, depth: u32) {
        self.frames.push_back((frame, leftovers.into_iter().map(Some).collect()));
        while self.frames.len() > depth as usize {
            self.frames.pop_front();
        }
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    fn consecutive(&self) -> bool {
        self.frames
            .iter()
            .zip(self.frames.iter().skip(1))
            .all(|(a, b)| b.0 == a.0 + 1)
    }
}

/// Links leftovers across the `init_frames` most recent consecutive frames
/// and turns each full chain into a new high-confidence target. A chain that
/// mostly overlaps an existing trajectory is dropped. Detections used by a
/// chain are removed from the history. New ids are drawn from `next_id`.
pub fn generate_targets(
    history: &mut DetectionHistory,
    existing: &[Target],
    next_id: &mut u64,
    cfg: &TrackerConfig,
) -> Vec<Target> {
    let mut born = Vec::new();
    if history.len() < cfg.init_frames as usize || !history.consecutive() {
        return born;
    }
    let n_frames = history.frames.len();
    for start in 0..history.frames[0].1.len() {
        let Some(first) = history.frames[0].1[start].clone() else { continue };
        let mut picks = vec![start];
        let mut chain = vec![first];
        for f in 1..n_frames {
            let prev = chain.last().unwrap().bbox;
            let best = history.frames[f]
                .1
                .iter()
                .enumerate()
                .filter_map(|(j, d)| d.as_ref().map(|d| (j, iou(&prev, &d.bbox))))
                .filter(|&(_, o)| o >= cfg.init_overlap)
                .fold(None, |acc: Option<(usize, f64)>, (j, o)| match acc {
                    Some((_, bo)) if bo >= o => acc,
                    _ => Some((j, o)),
                });
            let Some((j, _)) = best else { break };
            picks.push(j);
            chain.push(history.frames[f].1[j].clone().unwrap());
        }
        if chain.len() < n_frames || overlaps_existing(&chain, existing, cfg) {
            continue;
        }
        for (f, &j) in picks.iter().enumerate() {
            history.frames[f].1[j] = None;
        }
        let links: Vec<_> = chain
            .into_iter()
            .map(|d| {
                (TrackPoint { frame: d.frame, bbox: d.bbox, detector_conf: d.confidence }, d.feature)
            })
            .collect();
        born.push(Target::from_chain(*next_id, &links, cfg));
        *next_id += 1;
    }
    born
}

fn overlaps_existing(chain: &[Detection], existing: &[Target], cfg: &TrackerConfig) -> bool {
    existing.iter().filter(|t| t.is_alive()).any(|t| {
        let total: f64 = chain
            .iter()
            .map(|d| t.box_at(d.frame).map_or(0.0, |b| iou(b, &d.bbox)))
            .sum();
        total / chain.len() as f64 >= cfg.gen_overlap_max
    })
}

/// Marks targets that missed `termination_misses` frames in a row as
/// terminated. Returns the ids that were terminated.
pub fn terminate_targets(targets: &mut [Target], cfg: &TrackerConfig) -> Vec<u64> {
    let mut ended = Vec::new();
    for t in targets.iter_mut().filter(|t| t.is_alive()) {
        if t.missed_count >= cfg.termination_misses {
            t.status = TargetStatus::Terminated;
            ended.push(t.id);
        }
    }
    ended
}
