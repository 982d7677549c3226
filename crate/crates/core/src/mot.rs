//! MOTChallenge CSV rows: `frame,id,x,y,w,h,conf,-1,-1,-1`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::BoundingBox;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotRecord {
    /// 1-based frame index.
    pub frame: u32,
    /// Track id; `-1` for raw detections.
    pub id: i64,
    pub bbox: BoundingBox,
    pub conf: f64,
}

pub type FrameRecords = BTreeMap<u32, Vec<MotRecord>>;

pub fn parse_mot(path: &Path) -> Result<FrameRecords> {
    if !path.exists() {
        return Err(Error::FileNotFound(path.to_path_buf()));
    }
    parse_mot_str(&std::fs::read_to_string(path)?)
}

/// Parses MOT rows grouped by frame. Rows keep file order within a frame.
pub fn parse_mot_str(text: &str) -> Result<FrameRecords> {
    let mut out = FrameRecords::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let rec = parse_row(line).map_err(|message| Error::Parse { line: i + 1, message })?;
        out.entry(rec.frame).or_default().push(rec);
    }
    Ok(out)
}

fn parse_row(line: &str) -> std::result::Result<MotRecord, String> {
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if fields.len() < 7 {
        return Err(format!("expected at least 7 fields, got {}", fields.len()));
    }
    let num = |k: usize| -> std::result::Result<f64, String> {
        fields[k]
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| format!("field {} is not a number: {:?}", k + 1, fields[k]))
    };
    let frame = num(0)?;
    if frame < 1.0 || frame.fract() != 0.0 || frame > u32::MAX as f64 {
        return Err(format!("frame must be a positive integer, got {}", fields[0]));
    }
    let id = num(1)?;
    if id.fract() != 0.0 {
        return Err(format!("id must be an integer, got {}", fields[1]));
    }
    let (x, y, w, h) = (num(2)?, num(3)?, num(4)?, num(5)?);
    let bbox = BoundingBox::new(x, y, w, h).map_err(|_| format!("box size must be positive, got w={w} h={h}"))?;
    Ok(MotRecord { frame: frame as u32, id: id as i64, bbox, conf: num(6)? })
}

/// Formats records one per line. Reals use the shortest representation that
/// parses back to the same value.
pub fn format_mot(records: &[MotRecord]) -> String {
    let mut s = String::new();
    for r in records {
        let b = r.bbox;
        writeln!(s, "{},{},{},{},{},{},{},-1,-1,-1", r.frame, r.id, b.x, b.y, b.w, b.h, r.conf).unwrap();
    }
    s
}

pub fn write_mot(records: &[MotRecord], path: &Path) -> Result<()> {
    std::fs::write(path, format_mot(records))?;
    Ok(())
}

/// Flattens frame-grouped records in frame order.
pub fn flatten(records: &FrameRecords) -> Vec<MotRecord> {
    records.values().flatten().copied().collect()
}
