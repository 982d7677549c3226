//! CLEAR MOT evaluation of tracker output against ground truth.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::geometry::iou;
use crate::mot::{FrameRecords, MotRecord};
use crate::tracker::{hungarian, INFEASIBLE};

pub const DEFAULT_IOU_THRESHOLD: f64 = 0.5;

/// Coverage ratio at or above which a ground-truth track is mostly tracked.
const MOSTLY_TRACKED: f64 = 0.8;
/// Coverage ratio at or below which a ground-truth track is mostly lost.
const MOSTLY_LOST: f64 = 0.2;

#[derive(Debug, Clone, PartialEq)]
pub struct TrackMetrics {
    pub mota: f64,
    /// Mean IoU over matched pairs.
    pub motp: f64,
    /// False positives per frame.
    pub faf: f64,
    /// Fraction of ground-truth tracks that are mostly tracked.
    pub mt: f64,
    /// Fraction of ground-truth tracks that are mostly lost.
    pub ml: f64,
    pub fp: usize,
    pub fn_: usize,
    pub ids: usize,
    pub frag: usize,
    pub gt_count: usize,
    pub matches: usize,
    pub num_frames: u32,
}

impl TrackMetrics {
    /// Machine-readable `key=value` lines.
    pub fn key_values(&self) -> String {
        format!(
            "mota={}\nmotp={}\nfaf={}\nmt={}\nml={}\nfp={}\nfn={}\nids={}\nfrag={}\ngt_count={}\n",
            self.mota, self.motp, self.faf, self.mt, self.ml, self.fp, self.fn_, self.ids, self.frag, self.gt_count
        )
    }
}

impl fmt::Display for TrackMetrics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<8}{:>10.4}", "MOTA", self.mota)?;
        writeln!(f, "{:<8}{:>10.4}", "MOTP", self.motp)?;
        writeln!(f, "{:<8}{:>10.4}", "FAF", self.faf)?;
        writeln!(f, "{:<8}{:>10.4}", "MT", self.mt)?;
        writeln!(f, "{:<8}{:>10.4}", "ML", self.ml)?;
        writeln!(f, "{:<8}{:>10}", "FP", self.fp)?;
        writeln!(f, "{:<8}{:>10}", "FN", self.fn_)?;
        writeln!(f, "{:<8}{:>10}", "IDS", self.ids)?;
        writeln!(f, "{:<8}{:>10}", "Frag", self.frag)?;
        write!(f, "{:<8}{:>10}", "GT", self.gt_count)
    }
}

#[derive(Default)]
struct GtTrack {
    /// Tracked flag for each frame this object appears in, in frame order.
    coverage: Vec<bool>,
    last_hyp: Option<i64>,
}

/// Matches hypotheses to ground truth frame by frame and accumulates the
/// CLEAR MOT counts.
///
/// A correspondence from the previous frame is kept while its IoU stays at or
/// above `iou_threshold`; the remaining boxes are matched by minimum total
/// `1 − IoU`. An identity switch is counted when a ground-truth object is
/// matched to a different id than the last time it was matched. A
/// fragmentation is counted each time coverage resumes after a gap.
pub fn clear_mot(gt: &FrameRecords, hyp: &FrameRecords, iou_threshold: f64) -> Result<TrackMetrics> {
    let gt_count: usize = gt.values().map(Vec::len).sum();
    if gt_count == 0 {
        return Err(Error::EmptyGroundTruth);
    }
    let num_frames = gt.keys().chain(hyp.keys()).copied().max().unwrap_or(0);
    let empty = Vec::new();

    let mut tracks: BTreeMap<i64, GtTrack> = BTreeMap::new();
    let mut previous: HashMap<i64, i64> = HashMap::new();
    let (mut fp, mut fn_, mut ids, mut matches) = (0usize, 0usize, 0usize, 0usize);
    let mut iou_sum = 0.0;

    let frames: std::collections::BTreeSet<u32> = gt.keys().chain(hyp.keys()).copied().collect();
    for frame in frames {
        let g: &[MotRecord] = gt.get(&frame).unwrap_or(&empty);
        let h: &[MotRecord] = hyp.get(&frame).unwrap_or(&empty);
        let mut g_match: Vec<Option<usize>> = vec![None; g.len()];
        let mut h_used = vec![false; h.len()];

        for (i, gr) in g.iter().enumerate() {
            let Some(&hid) = previous.get(&gr.id) else { continue };
            let carried = h
                .iter()
                .enumerate()
                .find(|(j, hr)| !h_used[*j] && hr.id == hid && iou(&gr.bbox, &hr.bbox) >= iou_threshold);
            if let Some((j, _)) = carried {
                g_match[i] = Some(j);
                h_used[j] = true;
            }
        }

        let free_g: Vec<usize> = (0..g.len()).filter(|&i| g_match[i].is_none()).collect();
        let free_h: Vec<usize> = (0..h.len()).filter(|&j| !h_used[j]).collect();
        let cost = DMatrix::from_fn(free_g.len(), free_h.len(), |r, c| {
            let o = iou(&g[free_g[r]].bbox, &h[free_h[c]].bbox);
            if o >= iou_threshold {
                1.0 - o
            } else {
                INFEASIBLE
            }
        });
        for (r, c) in hungarian(&cost).pairs {
            g_match[free_g[r]] = Some(free_h[c]);
            h_used[free_h[c]] = true;
        }

        previous.clear();
        for (i, gr) in g.iter().enumerate() {
            let track = tracks.entry(gr.id).or_default();
            match g_match[i] {
                Some(j) => {
                    let hid = h[j].id;
                    if track.last_hyp.is_some_and(|last| last != hid) {
                        ids += 1;
                    }
                    track.last_hyp = Some(hid);
                    track.coverage.push(true);
                    previous.insert(gr.id, hid);
                    iou_sum += iou(&gr.bbox, &h[j].bbox);
                    matches += 1;
                }
                None => {
                    track.coverage.push(false);
                    fn_ += 1;
                }
            }
        }
        fp += h_used.iter().filter(|u| !**u).count();
    }

    let mut frag = 0;
    let (mut mt, mut ml) = (0usize, 0usize);
    for t in tracks.values() {
        frag += t.coverage.windows(2).filter(|w| !w[0] && w[1]).count()
            - usize::from(t.coverage.first() == Some(&false) && t.coverage.contains(&true));
        let ratio = t.coverage.iter().filter(|c| **c).count() as f64 / t.coverage.len() as f64;
        if ratio >= MOSTLY_TRACKED {
            mt += 1;
        }
        if ratio <= MOSTLY_LOST {
            ml += 1;
        }
    }
    let n_tracks = tracks.len() as f64;

    Ok(TrackMetrics {
        mota: 1.0 - (fp + fn_ + ids) as f64 / gt_count as f64,
        motp: if matches > 0 { iou_sum / matches as f64 } else { 0.0 },
        faf: if num_frames > 0 { fp as f64 / num_frames as f64 } else { 0.0 },
        mt: mt as f64 / n_tracks,
        ml: ml as f64 / n_tracks,
        fp,
        fn_,
        ids,
        frag,
        gt_count,
        matches,
        num_frames,
    })
}
