//! Synthetic sequences: two-tone rectangles moving linearly in separate
//! horizontal lanes over a noisy gray background.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::features::ImageFrame;
use crate::geometry::BoundingBox;
use crate::mot::{FrameRecords, MotRecord};
use crate::pipeline::FrameSource;

const PALETTE: [[u8; 3]; 12] = [
    [220, 30, 30],
    [30, 200, 40],
    [40, 60, 230],
    [240, 220, 20],
    [200, 40, 210],
    [20, 210, 220],
    [250, 140, 0],
    [120, 60, 20],
    [250, 250, 250],
    [10, 10, 10],
    [130, 200, 120],
    [90, 20, 120],
];

const LANE_SPACING: f64 = 100.0;
const BACKGROUND: u8 = 128;
const NOISE: i32 = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub num_targets: usize,
    pub num_frames: u32,
    pub width: u32,
    pub seed: u64,
    /// Drop every target's detections for this many frames once, somewhere
    /// after frame 20. Zero disables occlusions.
    pub occlusion_len: u32,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self { num_targets: 4, num_frames: 100, width: 640, seed: 0, occlusion_len: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Mover {
    start: BoundingBox,
    vx: f64,
    vy: f64,
    top: [u8; 3],
    bottom: [u8; 3],
    /// First occluded frame, if any.
    hidden_from: Option<u32>,
}

impl Mover {
    fn bbox(&self, frame: u32) -> BoundingBox {
        let t = (frame - 1) as f64;
        BoundingBox { x: self.start.x + self.vx * t, y: self.start.y + self.vy * t, ..self.start }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSequence {
    cfg: SyntheticConfig,
    height: u32,
    movers: Vec<Mover>,
}

impl SyntheticSequence {
    pub fn new(cfg: SyntheticConfig) -> Result<Self> {
        if !(1..=PALETTE.len() / 2).contains(&cfg.num_targets) || cfg.num_frames == 0 || cfg.width < 200 {
            return Err(Error::Config(format!(
                "synthetic sequence needs 1..={} targets, frames > 0 and width ≥ 200",
                PALETTE.len() / 2
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut colors: Vec<[u8; 3]> = PALETTE.to_vec();
        for i in (1..colors.len()).rev() {
            colors.swap(i, rng.gen_range(0..=i));
        }
        let height = (cfg.num_targets as f64 * LANE_SPACING) as u32 + 40;
        let span = (cfg.num_frames - 1) as f64;
        let w_img = cfg.width as f64;
        let movers = (0..cfg.num_targets)
            .map(|i| {
                let w = rng.gen_range(24.0..36.0);
                let h = rng.gen_range(56.0..72.0);
                let vx: f64 = rng.gen_range(-3.0..3.0);
                let vy: f64 = rng.gen_range(-0.1..0.1);
                // keep the whole path inside the image
                let lo = (-vx * span).max(0.0);
                let hi = (w_img - w - (vx * span).max(0.0)).max(lo);
                let x = rng.gen_range(lo..=hi);
                let y = 30.0 + i as f64 * LANE_SPACING;
                let hidden_from = (cfg.occlusion_len > 0 && cfg.num_frames > 20 + cfg.occlusion_len + 5)
                    .then(|| rng.gen_range(21..=cfg.num_frames - cfg.occlusion_len - 5));
                Mover {
                    start: BoundingBox { x, y, w, h },
                    vx,
                    vy,
                    top: colors[2 * i],
                    bottom: colors[2 * i + 1],
                    hidden_from,
                }
            })
            .collect();
        Ok(Self { cfg, height, movers })
    }

    pub fn config(&self) -> &SyntheticConfig {
        &self.cfg
    }

    pub fn size(&self) -> (u32, u32) {
        (self.cfg.width, self.height)
    }

    /// Ground-truth boxes; object `i` has id `i + 1`.
    pub fn ground_truth(&self) -> FrameRecords {
        let mut out = FrameRecords::new();
        for f in 1..=self.cfg.num_frames {
            let rows = self
                .movers
                .iter()
                .enumerate()
                .map(|(i, m)| MotRecord { frame: f, id: i as i64 + 1, bbox: m.bbox(f), conf: 1.0 })
                .collect();
            out.insert(f, rows);
        }
        out
    }

    /// Perfect detections, minus occluded frames.
    pub fn detections(&self) -> FrameRecords {
        let mut out = FrameRecords::new();
        for f in 1..=self.cfg.num_frames {
            let rows = self
                .movers
                .iter()
                .filter(|m| !m.hidden_from.is_some_and(|s| (s..s + self.cfg.occlusion_len).contains(&f)))
                .map(|m| MotRecord { frame: f, id: -1, bbox: m.bbox(f), conf: 1.0 })
                .collect();
            out.insert(f, rows);
        }
        out
    }

    pub fn render(&self, frame: u32) -> Result<ImageFrame> {
        let (w, h) = self.size();
        let mut img = ImageFrame::filled(w, h, [BACKGROUND; 3])?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed ^ (u64::from(frame) << 32));
        for y in 0..h {
            for x in 0..w {
                let v = (i32::from(BACKGROUND) + rng.gen_range(-NOISE..=NOISE)) as u8;
                img.put_pixel(x, y, [v; 3]);
            }
        }
        for m in &self.movers {
            let b = m.bbox(frame);
            let mid = b.y + b.h / 2.0;
            img.fill_rect(b.x, b.y, b.right(), mid, m.top);
            img.fill_rect(b.x, mid, b.right(), b.bottom(), m.bottom);
        }
        Ok(img)
    }

    /// Writes `img1/%06d.png` frames under `dir`.
    pub fn write_images(&self, dir: &std::path::Path) -> Result<()> {
        let img_dir = dir.join("img1");
        std::fs::create_dir_all(&img_dir)?;
        for f in 1..=self.cfg.num_frames {
            self.render(f)?.save(&img_dir.join(format!("{f:06}.png")))?;
        }
        Ok(())
    }
}

impl FrameSource for SyntheticSequence {
    fn num_frames(&self) -> u32 {
        self.cfg.num_frames
    }

    fn frame(&self, index: u32) -> Result<ImageFrame> {
        self.render(index)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::iou;

    #[test]
    fn paths_stay_inside_and_lanes_are_apart() {
        for seed in 0..5 {
            let s = SyntheticSequence::new(SyntheticConfig { num_targets: 6, seed, ..Default::default() }).unwrap();
            let (w, h) = s.size();
            for rows in s.ground_truth().values() {
                for r in rows {
                    assert!(r.bbox.x >= -1e-9 && r.bbox.right() <= w as f64 + 1e-9);
                    assert!(r.bbox.y >= 0.0 && r.bbox.bottom() <= h as f64);
                }
                for a in rows {
                    for b in rows {
                        if a.id != b.id {
                            assert_eq!(iou(&a.bbox, &b.bbox), 0.0);
                            assert!((a.bbox.center().y - b.bbox.center().y).abs() >= 70.0);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn occlusion_drops_detections_only() {
        let cfg = SyntheticConfig { num_targets: 3, occlusion_len: 3, seed: 9, ..Default::default() };
        let s = SyntheticSequence::new(cfg).unwrap();
        let gt: usize = s.ground_truth().values().map(Vec::len).sum();
        let det: usize = s.detections().values().map(Vec::len).sum();
        assert_eq!(gt, 300);
        assert_eq!(det, 300 - 9);
    }

    #[test]
    fn rendering_is_deterministic() {
        let s = SyntheticSequence::new(SyntheticConfig { num_frames: 3, ..Default::default() }).unwrap();
        assert_eq!(s.render(2).unwrap(), s.render(2).unwrap());
        assert_ne!(s.render(1).unwrap(), s.render(3).unwrap());
    }
}
