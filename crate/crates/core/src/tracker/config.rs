use std::path::Path;

use crate::error::{Error, Result};
use crate::stksvd::StksvdConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct TrackerConfig {
    /// Minimum overall similarity for an accepted association (both stages).
    pub assoc_threshold: f64,
    pub sigma_x: f64,
    pub sigma_y: f64,
    /// Amplifier applied to the similarity of a matched frame.
    pub alpha: f64,
    /// Attenuator applied to the last similarity on a missed frame.
    pub beta: f64,
    pub init_confidence: f64,
    pub init_frames: u32,
    /// IoU needed to link unmatched detections across consecutive frames.
    pub init_overlap: f64,
    pub termination_misses: u32,
    /// A new chain is vetoed if its mean IoU with an existing trajectory
    /// reaches this value.
    pub gen_overlap_max: f64,
    pub confidence_threshold: f64,
    pub sparsity: usize,
    /// Weight of the newest displacement in the velocity estimate.
    pub velocity_smoothing: f64,
    /// Temperature of the softmax applied to raw classifier scores.
    pub softmax_temperature: f64,
    pub stksvd: StksvdConfig,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            assoc_threshold: 0.4,
            sigma_x: 75.0,
            sigma_y: 50.0,
            alpha: 1.5,
            beta: 0.8,
            init_confidence: 0.75,
            init_frames: 5,
            init_overlap: 0.5,
            termination_misses: 5,
            gen_overlap_max: 0.5,
            confidence_threshold: 0.75,
            sparsity: 5,
            velocity_smoothing: 0.7,
            softmax_temperature: 0.1,
            stksvd: StksvdConfig::default(),
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = [
            ("assoc_threshold", self.assoc_threshold),
            ("init_overlap", self.init_overlap),
            ("gen_overlap_max", self.gen_overlap_max),
            ("velocity_smoothing", self.velocity_smoothing),
        ];
        for (name, v) in unit {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        if !(self.alpha > 1.0 && 1.0 > self.beta && self.beta > 0.0) {
            return Err(Error::Config(format!(
                "need alpha > 1 > beta > 0, got alpha={} beta={}",
                self.alpha, self.beta
            )));
        }
        for (name, v) in [
            ("sigma_x", self.sigma_x),
            ("sigma_y", self.sigma_y),
            ("init_confidence", self.init_confidence),
            ("confidence_threshold", self.confidence_threshold),
            ("softmax_temperature", self.softmax_temperature),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.init_frames == 0 || self.termination_misses == 0 || self.sparsity == 0 {
            return Err(Error::Config(
                "init_frames, termination_misses and sparsity must be at least 1".into(),
            ));
        }
        self.stksvd.validate()
    }

    /// Sets one field by name. Learner fields use a `stksvd.` prefix.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| Error::Config(format!("bad value {value:?} for {key}")))
        }
        match key {
            "assoc_threshold" => self.assoc_threshold = num(key, value)?,
            "sigma_x" => self.sigma_x = num(key, value)?,
            "sigma_y" => self.sigma_y = num(key, value)?,
            "alpha" => self.alpha = num(key, value)?,
            "beta" => self.beta = num(key, value)?,
            "init_confidence" => self.init_confidence = num(key, value)?,
            "init_frames" => self.init_frames = num(key, value)?,
            "init_overlap" => self.init_overlap = num(key, value)?,
            "termination_misses" => self.termination_misses = num(key, value)?,
            "gen_overlap_max" => self.gen_overlap_max = num(key, value)?,
            "confidence_threshold" => self.confidence_threshold = num(key, value)?,
            "sparsity" => self.sparsity = num(key, value)?,
            "velocity_smoothing" => self.velocity_smoothing = num(key, value)?,
            "softmax_temperature" => self.softmax_temperature = num(key, value)?,
            "stksvd.kappa" => self.stksvd.kappa = num(key, value)?,
            "stksvd.lambda" => self.stksvd.lambda = num(key, value)?,
            "stksvd.xi" => self.stksvd.xi = num(key, value)?,
            "stksvd.sigma_s" => self.stksvd.sigma_s = num(key, value)?,
            "stksvd.sparsity" => self.stksvd.sparsity = num(key, value)?,
            "stksvd.iterations" => self.stksvd.iterations = num(key, value)?,
            "stksvd.atoms_per_target" => self.stksvd.atoms_per_target = num(key, value)?,
            "stksvd.recent_window" => self.stksvd.recent_window = num(key, value)?,
            "stksvd.buffer_cap" => self.stksvd.buffer_cap = num(key, value)?,
            "stksvd.seed" => self.stksvd.seed = num(key, value)?,
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines on top of the defaults. Blank lines and
    /// `#` comments are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                message: format!("expected key=value, got {raw:?}"),
            })?;
            cfg.set(key.trim(), value.trim()).map_err(|e| Error::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::FileNotFound(path.to_path_buf()));
        }
        Self::parse(&std::fs::read_to_string(path)?)
    }
}
