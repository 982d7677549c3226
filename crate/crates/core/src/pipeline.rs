//! Glue between image sources, detection files, the tracker and evaluation.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::features::{extract_feature, ImageFrame};
use crate::metrics::{clear_mot, TrackMetrics, DEFAULT_IOU_THRESHOLD};
use crate::mot::{FrameRecords, MotRecord};
use crate::tracker::{AssociationRecord, Detection, Tracker, TrackerConfig};

/// Frames indexed from 1.
pub trait FrameSource: Sync {
    fn num_frames(&self) -> u32;
    fn frame(&self, index: u32) -> Result<ImageFrame>;
}

/// A sequence directory holding `img1/%06d.jpg` or `img1/%06d.png`.
#[derive(Debug, Clone)]
pub struct ImageDir {
    dir: PathBuf,
    ext: &'static str,
    count: u32,
}

impl ImageDir {
    pub fn open(seq: &Path) -> Result<Self> {
        let dir = seq.join("img1");
        if !dir.is_dir() {
            return Err(Error::FileNotFound(dir));
        }
        for ext in ["jpg", "png"] {
            let mut count = 0;
            while dir.join(format!("{:06}.{ext}", count + 1)).exists() {
                count += 1;
            }
            if count > 0 {
                return Ok(Self { dir, ext, count });
            }
        }
        Err(Error::FileNotFound(dir.join("000001.jpg")))
    }
}

impl FrameSource for ImageDir {
    fn num_frames(&self) -> u32 {
        self.count
    }

    fn frame(&self, index: u32) -> Result<ImageFrame> {
        ImageFrame::open(&self.dir.join(format!("{index:06}.{}", self.ext)))
    }
}

#[derive(Debug, Clone)]
pub struct TrackRun {
    pub results: Vec<MotRecord>,
    pub associations: Vec<AssociationRecord>,
    pub frame_times: Vec<Duration>,
}

impl TrackRun {
    pub fn timing_summary(&self) -> String {
        let n = self.frame_times.len();
        if n == 0 {
            return "0 frames".into();
        }
        let total: Duration = self.frame_times.iter().sum();
        let max = self.frame_times.iter().max().unwrap();
        format!(
            "{n} frames in {:.3} s (mean {:.2} ms/frame, max {:.2} ms, {:.1} fps)",
            total.as_secs_f64(),
            total.as_secs_f64() * 1e3 / n as f64,
            max.as_secs_f64() * 1e3,
            n as f64 / total.as_secs_f64().max(1e-9)
        )
    }
}

/// Runs the tracker over every frame of `source`. Detections whose box lies
/// completely outside the image are skipped.
pub fn track_sequence(cfg: &TrackerConfig, source: &dyn FrameSource, detections: &FrameRecords) -> Result<TrackRun> {
    let mut tracker = Tracker::new(cfg.clone())?;
    let mut frame_times = Vec::with_capacity(source.num_frames() as usize);
    let empty = Vec::new();
    for f in 1..=source.num_frames() {
        let start = Instant::now();
        let rows = detections.get(&f).unwrap_or(&empty);
        let dets = if rows.is_empty() {
            Vec::new()
        } else {
            let img = source.frame(f)?;
            let mut dets = Vec::with_capacity(rows.len());
            for r in rows {
                match extract_feature(&img, &r.bbox) {
                    Ok(feat) => dets.push(Detection { frame: f, bbox: r.bbox, confidence: r.conf, feature: feat.values }),
                    Err(Error::NoOverlap) => {}
                    Err(e) => return Err(e.in_frame(f)),
                }
            }
            dets
        };
        tracker.step(f, dets)?;
        frame_times.push(start.elapsed());
    }
    Ok(TrackRun {
        results: tracker.results(),
        associations: tracker.associations().to_vec(),
        frame_times,
    })
}

pub fn group_by_frame(records: &[MotRecord]) -> FrameRecords {
    let mut out = FrameRecords::new();
    for r in records {
        out.entry(r.frame).or_default().push(*r);
    }
    out
}

/// Tracks once per atom budget (in parallel) and evaluates each run. Run `i`
/// uses the base seed plus `i`. Results follow the order of `atoms`.
pub fn sweep_atoms(
    cfg: &TrackerConfig,
    source: &dyn FrameSource,
    detections: &FrameRecords,
    gt: &FrameRecords,
    atoms: &[usize],
) -> Result<Vec<(usize, TrackMetrics)>> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = atoms
            .iter()
            .enumerate()
            .map(|(i, &k)| {
                let mut c = cfg.clone();
                c.stksvd.atoms_per_target = k;
                c.stksvd.seed = cfg.stksvd.seed.wrapping_add(i as u64);
                scope.spawn(move || -> Result<(usize, TrackMetrics)> {
                    let run = track_sequence(&c, source, detections)?;
                    Ok((k, clear_mot(gt, &group_by_frame(&run.results), DEFAULT_IOU_THRESHOLD)?))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("sweep worker panicked")).collect()
    })
}
