//! Command-line entry points: `track`, `eval` and `sweep`.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::error::{Error, Result};
use crate::metrics::{clear_mot, DEFAULT_IOU_THRESHOLD};
use crate::mot::{parse_mot, write_mot};
use crate::pipeline::{sweep_atoms, track_sequence, ImageDir};
use crate::tracker::TrackerConfig;

#[derive(Debug, Parser)]
#[command(name = "stksvd", version, about = "Online multi-target tracker with learned appearance dictionaries")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Track a sequence and write MOT results.
    Track {
        /// Sequence directory containing img1/.
        #[arg(long)]
        seq: PathBuf,
        /// MOT detection file.
        #[arg(long)]
        det: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// key=value configuration file.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, env = "STKSVD_SEED")]
        seed: Option<u64>,
    },
    /// Evaluate MOT results against ground truth.
    Eval {
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        res: PathBuf,
    },
    /// Track and evaluate once per atom budget; emits CSV.
    Sweep {
        #[arg(long)]
        seq: PathBuf,
        #[arg(long)]
        det: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "5,10,15,20,25,30,35,40")]
        atoms: Vec<usize>,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, env = "STKSVD_SEED")]
        seed: Option<u64>,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

pub const SWEEP_HEADER: &str = "atoms,mota,motp,faf,mt,ml,fp,fn,ids,frag";

fn load_config(path: Option<&PathBuf>, seed: Option<u64>) -> Result<TrackerConfig> {
    let mut cfg = match path {
        Some(p) => TrackerConfig::load(p)?,
        None => TrackerConfig::default(),
    };
    if let Some(s) = seed {
        cfg.stksvd.seed = s;
    }
    Ok(cfg)
}

/// Executes a parsed command and returns what it prints on stdout.
pub fn run(cli: Cli) -> Result<String> {
    let mut out = String::new();
    match cli.command {
        Command::Track { seq, det, out: path, config, seed } => {
            let cfg = load_config(config.as_ref(), seed)?;
            let source = ImageDir::open(&seq)?;
            let run = track_sequence(&cfg, &source, &parse_mot(&det)?)?;
            write_mot(&run.results, &path)?;
            let ids: std::collections::BTreeSet<i64> = run.results.iter().map(|r| r.id).collect();
            writeln!(out, "{} boxes, {} tracks -> {}", run.results.len(), ids.len(), path.display()).unwrap();
            writeln!(out, "{}", run.timing_summary()).unwrap();
        }
        Command::Eval { gt, res } => {
            let m = clear_mot(&parse_mot(&gt)?, &parse_mot(&res)?, DEFAULT_IOU_THRESHOLD)?;
            writeln!(out, "{m}").unwrap();
            out.push_str(&m.key_values());
        }
        Command::Sweep { seq, det, atoms, gt, config, seed, out: path } => {
            if atoms.is_empty() || atoms.contains(&0) {
                return Err(Error::Config("atom budgets must be positive".into()));
            }
            let cfg = load_config(config.as_ref(), seed)?;
            let source = ImageDir::open(&seq)?;
            let rows = sweep_atoms(&cfg, &source, &parse_mot(&det)?, &parse_mot(&gt)?, &atoms)?;
            let mut csv = format!("{SWEEP_HEADER}\n");
            for (k, m) in rows {
                writeln!(
                    csv,
                    "{k},{},{},{},{},{},{},{},{},{}",
                    m.mota, m.motp, m.faf, m.mt, m.ml, m.fp, m.fn_, m.ids, m.frag
                )
                .unwrap();
            }
            match path {
                Some(p) => std::fs::write(p, csv)?,
                None => out.push_str(&csv),
            }
        }
    }
    Ok(out)
}
