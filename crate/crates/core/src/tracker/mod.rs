//! Online multi-target tracker with learned appearance models.
//!
//! Each frame runs two association stages. High-confidence targets are
//! matched to detections first, using the learned classifier. Low-confidence
//! targets are then matched against the leftover detections and against
//! high-confidence targets (a match to a target merges the two tracks),
//! using class-restricted reconstruction residuals. Afterwards confidences
//! are updated, new targets are started from chains of leftovers, stale
//! targets are retired and the appearance model is retrained.

pub mod assignment;
pub mod association;
pub mod config;
pub mod generation;
pub mod similarity;
pub mod target;

use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};

pub use assignment::{hungarian, Assignment, INFEASIBLE};
pub use association::{
    associate_stage1, associate_stage2, motion_shape_similarity, similarity_cost, Stage2Result, StageResult,
};
pub use config::TrackerConfig;
pub use generation::{generate_targets, terminate_targets, DetectionHistory};
pub use similarity::{
    appearance_stage1, appearance_stage2, overall_similarity, position_similarity, shape_similarity,
    softmax, RESIDUAL_FLOOR,
};
pub use target::{predict_position, update_confidence, Sample, Target, TargetStatus, TrackPoint};

use crate::error::{Error, Result};
use crate::geometry::BoundingBox;
use crate::mot::MotRecord;
use crate::stksvd::{select_atoms, stksvd_train, ClassId, LabeledDictionary, SampleMeta, StksvdModel};

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub frame: u32,
    pub bbox: BoundingBox,
    pub confidence: f64,
    pub feature: DVector<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssociationStage {
    /// High-confidence target matched to a detection.
    High,
    /// Low-confidence target matched to a detection.
    Low,
    /// Low-confidence target merged into a high-confidence one.
    Merge,
}

/// One accepted association together with its overall similarity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssociationRecord {
    pub frame: u32,
    pub target: u64,
    pub stage: AssociationStage,
    pub similarity: f64,
}

#[derive(Debug, Clone)]
pub struct Tracker {
    cfg: TrackerConfig,
    targets: Vec<Target>,
    model: Option<StksvdModel>,
    history: DetectionHistory,
    next_id: u64,
    last_frame: Option<u32>,
    log: Vec<AssociationRecord>,
}

impl Tracker {
    pub fn new(cfg: TrackerConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            targets: Vec::new(),
            model: None,
            history: DetectionHistory::default(),
            next_id: 1,
            last_frame: None,
            log: Vec::new(),
        })
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.cfg
    }

    /// All targets ever created, including terminated ones.
    pub fn targets(&self) -> &[Target] {
        &self.targets
    }

    pub fn model(&self) -> Option<&StksvdModel> {
        self.model.as_ref()
    }

    pub fn associations(&self) -> &[AssociationRecord] {
        &self.log
    }

    /// Processes the detections of `frame` and returns the boxes of the live
    /// targets observed in it. Frames must be increasing.
    pub fn step(&mut self, frame: u32, detections: Vec<Detection>) -> Result<Vec<MotRecord>> {
        if self.last_frame.is_some_and(|f| frame <= f) {
            return Err(Error::Config(format!(
                "frame {frame} does not follow frame {}",
                self.last_frame.unwrap()
            )));
        }
        self.last_frame = Some(frame);
        self.run(frame, detections).map_err(|e| e.in_frame(frame))?;
        Ok(self
            .targets
            .iter()
            .filter(|t| t.is_alive())
            .filter_map(|t| {
                let p = t.trajectory.last()?;
                (p.frame == frame).then_some(MotRecord { frame, id: t.id as i64, bbox: p.bbox, conf: p.detector_conf })
            })
            .collect())
    }

    fn run(&mut self, frame: u32, mut detections: Vec<Detection>) -> Result<()> {
        for d in &mut detections {
            d.frame = frame;
        }
        let before = self.targets.len();
        let mut matched: Vec<Option<f64>> = vec![None; before];
        let mut used = vec![false; detections.len()];

        self.associate_high(frame, &detections, &mut used, &mut matched)?;
        self.associate_low(frame, &detections, &mut used, &mut matched)?;

        for (i, m) in matched.iter().enumerate() {
            let t = &mut self.targets[i];
            if !t.is_alive() {
                continue;
            }
            update_confidence(t, *m, frame, &self.cfg);
            if m.is_none() {
                t.missed_count += 1;
            }
        }

        let leftovers = detections
            .into_iter()
            .zip(used)
            .filter(|(_, u)| !u)
            .map(|(d, _)| d)
            .collect();
        self.history.push(frame, leftovers, self.cfg.init_frames);
        let born = generate_targets(&mut self.history, &self.targets, &mut self.next_id, &self.cfg);
        self.targets.extend(born);
        terminate_targets(&mut self.targets, &self.cfg);
        self.train(frame)
    }

    fn alive_with(&self, status: TargetStatus) -> Vec<usize> {
        (0..self.targets.len()).filter(|&i| self.targets[i].status == status).collect()
    }

    fn associate_high(
        &mut self,
        frame: u32,
        dets: &[Detection],
        used: &mut [bool],
        matched: &mut [Option<f64>],
    ) -> Result<()> {
        let high = self.alive_with(TargetStatus::HighConfident);
        let Some(model) = self.model.as_ref() else { return Ok(()) };
        if high.is_empty() || dets.is_empty() {
            return Ok(());
        }
        let rows: Vec<&Target> = high.iter().map(|&i| &self.targets[i]).collect();
        let r = associate_stage1(&rows, dets, model, frame, &self.cfg)?;
        for (row, j) in r.assignment.pairs {
            let (i, s) = (high[row], r.similarity[(row, j)]);
            used[j] = true;
            matched[i] = Some(s);
            self.accept(i, &dets[j], s, AssociationStage::High);
        }
        Ok(())
    }

    fn associate_low(
        &mut self,
        frame: u32,
        dets: &[Detection],
        used: &mut [bool],
        matched: &mut [Option<f64>],
    ) -> Result<()> {
        let low = self.alive_with(TargetStatus::LowConfident);
        let Some(model) = self.model.as_ref() else { return Ok(()) };
        if low.is_empty() {
            return Ok(());
        }
        let low_classes: Vec<ClassId> = low.iter().map(|&i| self.targets[i].class).collect();
        if model.dictionary.restrict(|c| low_classes.contains(&c)).is_none() {
            return Ok(());
        }
        let free: Vec<usize> = (0..dets.len()).filter(|&j| !used[j]).collect();
        let free_dets: Vec<Detection> = free.iter().map(|&j| dets[j].clone()).collect();
        let high: Vec<usize> = self
            .alive_with(TargetStatus::HighConfident)
            .into_iter()
            .filter(|&i| self.targets[i].latest_feature().is_some())
            .collect();
        let rows: Vec<&Target> = low.iter().map(|&i| &self.targets[i]).collect();
        let cols: Vec<&Target> = high.iter().map(|&i| &self.targets[i]).collect();
        let r = associate_stage2(&rows, &free_dets, &cols, model, frame, &self.cfg)?;

        let sim = &r.stage.similarity;
        let pairs: Vec<(usize, usize, f64)> =
            r.stage.assignment.pairs.iter().map(|&(row, c)| (row, c, sim[(row, c)])).collect();
        for (row, c, s) in pairs {
            let i = low[row];
            if c < r.n_detections {
                let j = free[c];
                used[j] = true;
                matched[i] = Some(s);
                self.accept(i, &dets[j], s, AssociationStage::Low);
            } else {
                self.merge(i, high[c - r.n_detections], frame, s);
            }
        }
        Ok(())
    }

    fn accept(&mut self, i: usize, det: &Detection, s: f64, stage: AssociationStage) {
        let point = TrackPoint { frame: det.frame, bbox: det.bbox, detector_conf: det.confidence };
        self.targets[i].observe(point, &det.feature, &self.cfg);
        self.log.push(AssociationRecord { frame: det.frame, target: self.targets[i].id, stage, similarity: s });
    }

    /// Folds low-confidence target `low` into high-confidence target `high`.
    fn merge(&mut self, low: usize, high: usize, frame: u32, s: f64) {
        let (lo, hi) = pair_mut(&mut self.targets, low, high);
        hi.absorb_track(lo, self.cfg.stksvd.buffer_cap);
        lo.status = TargetStatus::Terminated;
        if let Some(model) = self.model.as_mut() {
            model.dictionary.relabel(lo.class, hi.class);
        }
        self.log.push(AssociationRecord { frame, target: hi.id, stage: AssociationStage::Merge, similarity: s });
    }

    /// Re-learns the appearance model from the sample buffers of all live
    /// targets, warm-started from each target's current atoms.
    fn train(&mut self, frame: u32) -> Result<()> {
        let alive: Vec<&Target> = self.targets.iter().filter(|t| t.is_alive()).collect();
        if alive.is_empty() {
            self.model = None;
            return Ok(());
        }
        let sc = &self.cfg.stksvd;
        let mut atoms = Vec::new();
        for t in &alive {
            let existing = self.model.as_ref().map(|m| m.dictionary.atoms_of(t.class)).unwrap_or_default();
            let seen: HashSet<u32> = existing.iter().map(|a| a.meta.time).collect();
            let recent: Vec<_> = t
                .recent_atoms(frame, sc.recent_window)
                .into_iter()
                .filter(|a| !seen.contains(&a.meta.time))
                .collect();
            let mut chosen = select_atoms(t.class, &existing, &recent, sc.atoms_per_target);
            if chosen.is_empty() {
                // a target always contributes at least its newest sample
                chosen = t.recent_atoms(frame, u32::MAX);
                chosen.drain(..chosen.len().saturating_sub(1));
            }
            atoms.extend(chosen);
        }
        let d0 = LabeledDictionary::from_atoms(&atoms)?;

        let n: usize = alive.iter().map(|t| t.samples.len()).sum();
        let dim = d0.atoms().n_features();
        let mut y = DMatrix::zeros(dim, n);
        let mut labels = Vec::with_capacity(n);
        let mut metas: Vec<SampleMeta> = Vec::with_capacity(n);
        for (col, (t, s)) in alive.iter().flat_map(|t| t.samples.iter().map(move |s| (t, s))).enumerate() {
            y.set_column(col, &s.feature);
            labels.push(t.class);
            metas.push(s.meta);
        }
        self.model = Some(stksvd_train(&y, &labels, &metas, &d0, sc)?);
        Ok(())
    }

    /// Tracking output: one record per target per tracked frame, sorted by
    /// frame, then id.
    pub fn results(&self) -> Vec<MotRecord> {
        let mut out: Vec<MotRecord> = self
            .targets
            .iter()
            .flat_map(|t| {
                t.trajectory.iter().map(move |p| MotRecord {
                    frame: p.frame,
                    id: t.id as i64,
                    bbox: p.bbox,
                    conf: p.detector_conf,
                })
            })
            .collect();
        out.sort_by_key(|r| (r.frame, r.id));
        out
    }
}

fn pair_mut<T>(v: &mut [T], a: usize, b: usize) -> (&mut T, &mut T) {
    assert_ne!(a, b);
    if a < b {
        let (l, r) = v.split_at_mut(b);
        (&mut l[a], &mut r[0])
    } else {
        let (l, r) = v.split_at_mut(a);
        (&mut r[0], &mut l[b])
    }
}
