//! The two association stages as pure functions over targets and detections.

use nalgebra::DMatrix;

use super::assignment::{hungarian, Assignment, INFEASIBLE};
use super::config::TrackerConfig;
use super::similarity::{
    appearance_stage1, appearance_stage2, overall_similarity, position_similarity, shape_similarity,
    RESIDUAL_FLOOR,
};
use super::target::{predict_position, Target};
use super::Detection;
use crate::error::Result;
use crate::geometry::BoundingBox;
use crate::stksvd::{ClassId, StksvdModel};

/// Hungarian result plus the overall similarity of every candidate pair.
#[derive(Debug, Clone, PartialEq)]
pub struct StageResult {
    pub assignment: Assignment,
    pub similarity: DMatrix<f64>,
}

/// Stage-2 result. Columns below `n_detections` are detections; the rest are
/// high-confidence targets, and a pair there is a merge directive.
#[derive(Debug, Clone, PartialEq)]
pub struct Stage2Result {
    pub stage: StageResult,
    pub n_detections: usize,
}

impl Stage2Result {
    /// `(low row, detection column)` pairs.
    pub fn detection_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.stage.assignment.pairs.iter().copied().filter(|&(_, c)| c < self.n_detections)
    }

    /// `(low row, high target index)` pairs.
    pub fn merges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.stage
            .assignment
            .pairs
            .iter()
            .filter(|&&(_, c)| c >= self.n_detections)
            .map(|&(r, c)| (r, c - self.n_detections))
    }
}

/// Shape times position similarity of `bbox` to the target's prediction for
/// `frame`.
pub fn motion_shape_similarity(target: &Target, bbox: &BoundingBox, frame: u32, cfg: &TrackerConfig) -> Result<f64> {
    let pred = predict_position(target, frame.saturating_sub(target.last_seen));
    let last = target.last_box();
    let shape = shape_similarity((last.w, last.h), (bbox.w, bbox.h))?;
    Ok(shape * position_similarity(pred, bbox.center(), cfg.sigma_x, cfg.sigma_y))
}

/// Cost `1/S`, or infeasible below the association threshold.
pub fn similarity_cost(s: f64, cfg: &TrackerConfig) -> f64 {
    if s >= cfg.assoc_threshold {
        1.0 / s.max(RESIDUAL_FLOOR)
    } else {
        INFEASIBLE
    }
}

fn solve(similarity: DMatrix<f64>, cfg: &TrackerConfig) -> StageResult {
    let assignment = hungarian(&similarity.map(|s| similarity_cost(s, cfg)));
    StageResult { assignment, similarity }
}

/// High-confidence targets (rows) against detections (columns); appearance
/// is the target's class probability under the classifier.
pub fn associate_stage1(
    targets: &[&Target],
    dets: &[Detection],
    model: &StksvdModel,
    frame: u32,
    cfg: &TrackerConfig,
) -> Result<StageResult> {
    let probs = dets
        .iter()
        .map(|d| appearance_stage1(model, &d.feature, cfg.sparsity, cfg.softmax_temperature))
        .collect::<Result<Vec<_>>>()?;
    let mut sim = DMatrix::zeros(targets.len(), dets.len());
    for (r, t) in targets.iter().enumerate() {
        let row = model.class_row(t.class);
        for (j, d) in dets.iter().enumerate() {
            let app = row.map_or(0.0, |k| probs[j][k]);
            let ms = motion_shape_similarity(t, &d.bbox, frame, cfg)?;
            sim[(r, j)] = overall_similarity(1.0, app, ms);
        }
    }
    Ok(solve(sim, cfg))
}

/// Low-confidence targets (rows) against leftover detections followed by
/// high-confidence targets (columns); appearance is the inverse
/// class-restricted reconstruction residual. High targets are queried with
/// their newest sample and compared at their latest box.
pub fn associate_stage2(
    low: &[&Target],
    dets: &[Detection],
    high: &[&Target],
    model: &StksvdModel,
    frame: u32,
    cfg: &TrackerConfig,
) -> Result<Stage2Result> {
    let n_detections = dets.len();
    let high: Vec<&Target> = high.iter().copied().filter(|t| t.latest_feature().is_some()).collect();
    let mut sim = DMatrix::zeros(low.len(), n_detections + high.len());
    if !low.is_empty() && sim.ncols() > 0 {
        let low_classes: Vec<ClassId> = low.iter().map(|t| t.class).collect();
        for c in 0..sim.ncols() {
            let (bbox, query) = if c < n_detections {
                (dets[c].bbox, &dets[c].feature)
            } else {
                let t = high[c - n_detections];
                (t.last_box(), t.latest_feature().unwrap())
            };
            let app = appearance_stage2(model, &low_classes, query, cfg.sparsity)?;
            for (r, t) in low.iter().enumerate() {
                let ms = motion_shape_similarity(t, &bbox, frame, cfg)?;
                sim[(r, c)] = overall_similarity(1.0, app[r], ms);
            }
        }
    }
    Ok(Stage2Result { stage: solve(sim, cfg), n_detections })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;
    use crate::sparse::Dictionary;
    use crate::stksvd::{AtomMeta, LabeledDictionary};
    use crate::tracker::target::TrackPoint;
    use nalgebra::DVector;

    fn unit(i: usize) -> DVector<f64> {
        DVector::from_fn(4, |k, _| if k == i { 1.0 } else { 0.0 })
    }

    /// Classes 1 and 2 own atoms e0 and e1; the classifier is the identity.
    fn model() -> StksvdModel {
        let atoms = Dictionary::new(DMatrix::identity(4, 2)).unwrap();
        let meta = [1, 2].map(|class| AtomMeta { class, time: 0, position: Point::default() });
        StksvdModel {
            dictionary: LabeledDictionary::new(atoms, meta.to_vec()).unwrap(),
            classes: vec![1, 2],
            classifier: DMatrix::identity(2, 2),
            transform: DMatrix::identity(2, 2),
        }
    }

    fn target(id: u64, cx: f64, feature: DVector<f64>) -> Target {
        let p = TrackPoint { frame: 1, bbox: BoundingBox::from_center(Point::new(cx, 100.0), 20.0, 40.0), detector_conf: 1.0 };
        Target::from_chain(id, &[(p, feature)], &TrackerConfig::default())
    }

    fn det(cx: f64, feature: DVector<f64>) -> Detection {
        Detection { frame: 2, bbox: BoundingBox::from_center(Point::new(cx, 100.0), 20.0, 40.0), confidence: 1.0, feature }
    }

    #[test]
    fn stage1_matches_identical_detection() {
        let cfg = TrackerConfig::default();
        let t = target(1, 50.0, unit(0));
        let r = associate_stage1(&[&t], &[det(50.0, unit(0))], &model(), 2, &cfg).unwrap();
        assert_eq!(r.assignment.pairs, vec![(0, 0)]);
        assert!(r.similarity[(0, 0)] > 0.99);
    }

    #[test]
    fn stage1_gates_far_detection() {
        let cfg = TrackerConfig::default();
        let t = target(1, 50.0, unit(0));
        let r = associate_stage1(&[&t], &[det(400.0, unit(0))], &model(), 2, &cfg).unwrap();
        assert!(r.assignment.pairs.is_empty());
        assert_eq!(r.assignment.unmatched_rows, vec![0]);
        assert_eq!(r.assignment.unmatched_cols, vec![0]);
    }

    #[test]
    fn stage1_crossed_scores_follow_brute_force() {
        // both targets sit closer to detection 0, appearance decides
        let cfg = TrackerConfig::default();
        let (a, b) = (target(1, 50.0, unit(0)), target(2, 60.0, unit(1)));
        let dets = [det(58.0, unit(1)), det(40.0, unit(0))];
        let r = associate_stage1(&[&a, &b], &dets, &model(), 2, &cfg).unwrap();
        let s = &r.similarity;
        let straight = s[(0, 0)] + s[(1, 1)];
        let crossed = s[(0, 1)] + s[(1, 0)];
        let best = if crossed > straight { vec![(0, 1), (1, 0)] } else { vec![(0, 0), (1, 1)] };
        assert_eq!(r.assignment.pairs, best);
        assert_eq!(best, vec![(0, 1), (1, 0)]);
    }

    #[test]
    fn stage2_without_low_targets_is_empty() {
        let cfg = TrackerConfig::default();
        let h = target(1, 50.0, unit(0));
        let r = associate_stage2(&[], &[det(50.0, unit(0))], &[&h], &model(), 2, &cfg).unwrap();
        assert!(r.stage.assignment.pairs.is_empty());
    }

    #[test]
    fn stage2_matches_leftover_detection() {
        let cfg = TrackerConfig::default();
        let low = target(2, 80.0, unit(1));
        let r = associate_stage2(&[&low], &[det(81.0, unit(1))], &[], &model(), 2, &cfg).unwrap();
        assert_eq!(r.detection_pairs().collect::<Vec<_>>(), vec![(0, 0)]);
        assert_eq!(r.merges().count(), 0);
    }

    #[test]
    fn stage2_emits_merge_directive() {
        let cfg = TrackerConfig::default();
        let low = target(2, 80.0, unit(1));
        let high = target(1, 82.0, unit(1));
        let r = associate_stage2(&[&low], &[], &[&high], &model(), 2, &cfg).unwrap();
        assert_eq!(r.merges().collect::<Vec<_>>(), vec![(0, 0)]);
    }
}
