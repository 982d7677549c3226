//! Appearance features: every detection is resampled to a 32×64 patch and
//! described by RGB histograms of its upper and lower halves.

use std::path::Path;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::geometry::BoundingBox;

pub const PATCH_WIDTH: u32 = 32;
pub const PATCH_HEIGHT: u32 = 64;
pub const BINS_PER_CHANNEL: usize = 16;
/// Histogram length for one body half (3 channels).
pub const HALF_BINS: usize = 3 * BINS_PER_CHANNEL;
pub const FEATURE_DIM: usize = 2 * HALF_BINS;

/// 8-bit RGB image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageFrame {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl ImageFrame {
    pub fn new(width: u32, height: u32, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::DimensionMismatch("image must be at least 1x1".into()));
        }
        if data.len() != (width as usize) * (height as usize) * 3 {
            return Err(Error::DimensionMismatch(format!(
                "expected {} bytes for {width}x{height} RGB, got {}",
                width as usize * height as usize * 3,
                data.len()
            )));
        }
        Ok(Self { width, height, data })
    }

    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Result<Self> {
        let n = width as usize * height as usize;
        Self::new(width, height, rgb.iter().copied().cycle().take(n * 3).collect())
    }

    pub fn open(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::FileNotFound(path.to_path_buf()));
        }
        let img = image::open(path)?.to_rgb8();
        let (w, h) = img.dimensions();
        Self::new(w, h, img.into_raw())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let img = image::RgbImage::from_raw(self.width, self.height, self.data.clone())
            .ok_or_else(|| Error::DimensionMismatch("image buffer size".into()))?;
        img.save(path)?;
        Ok(())
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn put_pixel(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    /// Paints the pixels whose centers fall inside `[x0, x1) × [y0, y1)`.
    pub fn fill_rect(&mut self, x0: f64, y0: f64, x1: f64, y1: f64, rgb: [u8; 3]) {
        let cx0 = (x0 - 0.5).ceil().max(0.0) as u32;
        let cy0 = (y0 - 0.5).ceil().max(0.0) as u32;
        let cx1 = ((x1 - 0.5).ceil().max(0.0) as u32).min(self.width);
        let cy1 = ((y1 - 0.5).ceil().max(0.0) as u32).min(self.height);
        for y in cy0..cy1 {
            for x in cx0..cx1 {
                self.put_pixel(x, y, rgb);
            }
        }
    }
}

/// A fixed 32×64 RGB patch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Patch(ImageFrame);

impl Patch {
    pub fn new(frame: ImageFrame) -> Result<Self> {
        if frame.width != PATCH_WIDTH || frame.height != PATCH_HEIGHT {
            return Err(Error::DimensionMismatch(format!(
                "patch must be {PATCH_WIDTH}x{PATCH_HEIGHT}, got {}x{}",
                frame.width, frame.height
            )));
        }
        Ok(Self(frame))
    }

    pub fn image(&self) -> &ImageFrame {
        &self.0
    }
}

/// L2-normalized 96-bin appearance descriptor.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: DVector<f64>,
}

/// Bilinearly resamples the box region to a 32×64 patch. Samples that fall
/// outside the image are black.
pub fn extract_patch(img: &ImageFrame, bbox: &BoundingBox) -> Result<Patch> {
    let (iw, ih) = (img.width as f64, img.height as f64);
    let ow = bbox.right().min(iw) - bbox.x.max(0.0);
    let oh = bbox.bottom().min(ih) - bbox.y.max(0.0);
    if !(ow > 0.0 && oh > 0.0) {
        return Err(Error::NoOverlap);
    }
    let sx = bbox.w / PATCH_WIDTH as f64;
    let sy = bbox.h / PATCH_HEIGHT as f64;
    let mut out = ImageFrame::filled(PATCH_WIDTH, PATCH_HEIGHT, [0, 0, 0])?;
    for v in 0..PATCH_HEIGHT {
        let py = bbox.y + (v as f64 + 0.5) * sy;
        if py < 0.0 || py >= ih {
            continue;
        }
        for u in 0..PATCH_WIDTH {
            let px = bbox.x + (u as f64 + 0.5) * sx;
            if px < 0.0 || px >= iw {
                continue;
            }
            out.put_pixel(u, v, bilinear(img, px - 0.5, py - 0.5));
        }
    }
    Patch::new(out)
}

fn bilinear(img: &ImageFrame, x: f64, y: f64) -> [u8; 3] {
    let max_x = img.width as i64 - 1;
    let max_y = img.height as i64 - 1;
    let x0f = x.floor();
    let y0f = y.floor();
    let fx = x - x0f;
    let fy = y - y0f;
    let x0 = (x0f as i64).clamp(0, max_x) as u32;
    let x1 = (x0f as i64 + 1).clamp(0, max_x) as u32;
    let y0 = (y0f as i64).clamp(0, max_y) as u32;
    let y1 = (y0f as i64 + 1).clamp(0, max_y) as u32;
    let (p00, p10, p01, p11) = (img.pixel(x0, y0), img.pixel(x1, y0), img.pixel(x0, y1), img.pixel(x1, y1));
    let mut out = [0u8; 3];
    for c in 0..3 {
        let top = p00[c] as f64 * (1.0 - fx) + p10[c] as f64 * fx;
        let bot = p01[c] as f64 * (1.0 - fx) + p11[c] as f64 * fx;
        out[c] = (top * (1.0 - fy) + bot * fy).round().clamp(0.0, 255.0) as u8;
    }
    out
}

/// Unnormalized counts: upper half then lower half, each `R‖G‖B` with 16
/// uniform bins per channel.
pub fn raw_histogram(patch: &Patch) -> [u32; FEATURE_DIM] {
    let img = patch.image();
    let mut hist = [0u32; FEATURE_DIM];
    let half = PATCH_HEIGHT / 2;
    for y in 0..PATCH_HEIGHT {
        let base = if y < half { 0 } else { HALF_BINS };
        for x in 0..PATCH_WIDTH {
            let p = img.pixel(x, y);
            for (c, v) in p.iter().enumerate() {
                hist[base + c * BINS_PER_CHANNEL + (*v as usize) / 16] += 1;
            }
        }
    }
    hist
}

/// Cascaded upper/lower RGB histogram, L2-normalized over all 96 bins.
pub fn color_histogram(patch: &Patch) -> FeatureVector {
    let hist = raw_histogram(patch);
    let mut values = DVector::from_iterator(FEATURE_DIM, hist.iter().map(|&c| c as f64));
    let n = values.norm();
    values /= n;
    FeatureVector { values }
}

pub fn extract_feature(img: &ImageFrame, bbox: &BoundingBox) -> Result<FeatureVector> {
    Ok(color_histogram(&extract_patch(img, bbox)?))
}
