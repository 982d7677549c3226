use std::collections::VecDeque;

use nalgebra::DVector;

use super::config::TrackerConfig;
use crate::geometry::{BoundingBox, Point};
use crate::stksvd::{AtomMeta, ClassId, LabeledAtom, SampleMeta};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetStatus {
    HighConfident,
    LowConfident,
    Terminated,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackPoint {
    pub frame: u32,
    pub bbox: BoundingBox,
    pub detector_conf: f64,
}

/// One appearance sample kept for training.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub feature: DVector<f64>,
    pub meta: SampleMeta,
}

#[derive(Debug, Clone)]
pub struct Target {
    pub id: u64,
    pub class: ClassId,
    pub trajectory: Vec<TrackPoint>,
    /// Smoothed center displacement in pixels per frame.
    pub velocity: Point,
    pub confidence: f64,
    pub start_frame: u32,
    pub last_seen: u32,
    pub missed_count: u32,
    pub status: TargetStatus,
    /// Amplified or attenuated similarities, one per frame since creation.
    pub scores: Vec<f64>,
    pub last_score: f64,
    pub samples: VecDeque<Sample>,
}

impl Target {
    /// Starts a target from a chain of `(frame, box, detector confidence,
    /// feature)` observations in frame order.
    pub fn from_chain(
        id: u64,
        chain: &[(TrackPoint, DVector<f64>)],
        cfg: &TrackerConfig,
    ) -> Self {
        let first = chain.first().expect("chain is non-empty").0;
        let mut t = Target {
            id,
            class: id,
            trajectory: vec![first],
            velocity: Point::default(),
            confidence: cfg.init_confidence,
            start_frame: first.frame,
            last_seen: first.frame,
            missed_count: 0,
            status: TargetStatus::HighConfident,
            scores: Vec::new(),
            last_score: cfg.init_confidence,
            samples: VecDeque::new(),
        };
        t.push_sample(&chain[0].1, first.frame, first.bbox.center(), cfg.stksvd.buffer_cap);
        for (p, f) in &chain[1..] {
            t.observe(*p, f, cfg);
        }
        t.status = status_for(t.confidence, cfg);
        t
    }

    pub fn last_box(&self) -> BoundingBox {
        self.trajectory.last().expect("trajectory is non-empty").bbox
    }

    pub fn last_center(&self) -> Point {
        self.last_box().center()
    }

    pub fn latest_feature(&self) -> Option<&DVector<f64>> {
        self.samples.back().map(|s| &s.feature)
    }

    pub fn is_alive(&self) -> bool {
        self.status != TargetStatus::Terminated
    }

    pub fn box_at(&self, frame: u32) -> Option<&BoundingBox> {
        self.trajectory
            .binary_search_by_key(&frame, |p| p.frame)
            .ok()
            .map(|i| &self.trajectory[i].bbox)
    }

    /// Absorbs a matched detection: extends the trajectory, updates the
    /// velocity and stores the appearance sample.
    pub fn observe(&mut self, point: TrackPoint, feature: &DVector<f64>, cfg: &TrackerConfig) {
        let prev = self.last_center();
        let gap = point.frame.saturating_sub(self.last_seen).max(1) as f64;
        let c = point.bbox.center();
        let step = Point::new((c.x - prev.x) / gap, (c.y - prev.y) / gap);
        self.velocity = if self.trajectory.len() == 1 {
            step
        } else {
            let a = cfg.velocity_smoothing;
            Point::new(a * step.x + (1.0 - a) * self.velocity.x, a * step.y + (1.0 - a) * self.velocity.y)
        };
        self.trajectory.push(point);
        self.last_seen = point.frame;
        self.missed_count = 0;
        self.push_sample(feature, point.frame, c, cfg.stksvd.buffer_cap);
    }

    fn push_sample(&mut self, feature: &DVector<f64>, frame: u32, center: Point, cap: usize) {
        self.samples.push_back(Sample {
            feature: feature.clone(),
            meta: SampleMeta { time: frame, position: center },
        });
        while self.samples.len() > cap {
            self.samples.pop_front();
        }
    }

    /// Samples from the last `window` frames up to `frame`, as atoms of this
    /// target's class.
    pub fn recent_atoms(&self, frame: u32, window: u32) -> Vec<LabeledAtom> {
        self.samples
            .iter()
            .filter(|s| s.meta.time + window > frame)
            .map(|s| LabeledAtom {
                feature: s.feature.clone(),
                meta: AtomMeta { class: self.class, time: s.meta.time, position: s.meta.position },
            })
            .collect()
    }

    /// Folds `other`'s trajectory and samples into `self`. Frames present in
    /// both keep `self`'s data.
    pub fn absorb_track(&mut self, other: &mut Target, cap: usize) {
        for p in other.trajectory.drain(..) {
            if self.box_at(p.frame).is_none() {
                let i = self.trajectory.partition_point(|q| q.frame < p.frame);
                self.trajectory.insert(i, p);
            }
        }
        let mut merged: Vec<Sample> = self.samples.drain(..).collect();
        for s in other.samples.drain(..) {
            if !merged.iter().any(|m| m.meta.time == s.meta.time) {
                merged.push(s);
            }
        }
        merged.sort_by_key(|s| s.meta.time);
        let skip = merged.len().saturating_sub(cap);
        self.samples = merged.into_iter().skip(skip).collect();
        self.start_frame = self.trajectory[0].frame;
    }
}

pub(crate) fn status_for(confidence: f64, cfg: &TrackerConfig) -> TargetStatus {
    if confidence >= cfg.confidence_threshold {
        TargetStatus::HighConfident
    } else {
        TargetStatus::LowConfident
    }
}

/// Updates the target confidence for the current frame.
///
/// A match pushes `α·S` (with `S` capped at 1) and a miss pushes `β` times
/// the last matched similarity. The confidence is the mean of the pushed
/// values damped by `1 − exp(−√L)` with `L = current − start`. A low
/// confidence target that is matched is reset to the initial confidence.
pub fn update_confidence(target: &mut Target, matched: Option<f64>, current: u32, cfg: &TrackerConfig) -> f64 {
    let len = current.saturating_sub(target.start_frame).max(1) as f64;
    let damping = 1.0 - (-len.sqrt()).exp();
    match matched {
        Some(s) => {
            let s = s.clamp(0.0, 1.0);
            target.scores.push(cfg.alpha * s);
            target.last_score = s;
        }
        None => target.scores.push(cfg.beta * target.last_score),
    }
    let mean = target.scores.iter().sum::<f64>() / target.scores.len() as f64;
    target.confidence = if matched.is_some() && target.status == TargetStatus::LowConfident {
        cfg.init_confidence
    } else {
        mean * damping
    };
    target.status = status_for(target.confidence, cfg);
    target.confidence
}

/// Linear extrapolation of the last center `frames_ahead` frames forward.
pub fn predict_position(target: &Target, frames_ahead: u32) -> Point {
    let c = target.last_center();
    let t = frames_ahead as f64;
    Point::new(c.x + target.velocity.x * t, c.y + target.velocity.y * t)
}
