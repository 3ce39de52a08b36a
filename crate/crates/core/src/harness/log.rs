//! Run logs: JSON lines with one record per decision step followed by one
//! summary record per episode.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::stats::{moving_average, quartiles};
use super::HarnessError;
use crate::env::Termination;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: u32,
    pub actions: Vec<usize>,
    pub reward: f64,
    pub moe: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub seed: u64,
    pub final_moe: f64,
    pub steps: u32,
    pub termination: Termination,
    /// Wall-clock duration. Kept out of the JSON log so that logs of equal
    /// runs are byte-identical.
    #[serde(skip)]
    pub wall_ms: u64,
    #[serde(skip)]
    pub trace: Vec<StepRecord>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunLog {
    pub episodes: Vec<EpisodeRecord>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum Line {
    Step {
        episode: usize,
        seed: u64,
        #[serde(flatten)]
        record: StepRecord,
        termination: Termination,
    },
    Episode(EpisodeRecord),
}

impl RunLog {
    pub fn final_moes(&self) -> Vec<f64> {
        self.episodes.iter().map(|e| e.final_moe).collect()
    }

    pub fn len(&self) -> usize {
        self.episodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.episodes.is_empty()
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for e in &self.episodes {
            write_episode(&mut w, e)?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<(), HarnessError> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_jsonl(&mut w)?;
        w.flush()?;
        Ok(())
    }

    /// Reads a log written by `save`, keeping the per-step traces.
    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Self, HarnessError> {
        let mut log = RunLog::default();
        let mut trace = Vec::new();
        for (n, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: Line = serde_json::from_str(&line).map_err(|e| HarnessError::Log {
                line: n + 1,
                reason: e.to_string(),
            })?;
            match parsed {
                Line::Step { record, .. } => trace.push(record),
                Line::Episode(mut e) => {
                    e.trace = std::mem::take(&mut trace);
                    log.episodes.push(e);
                }
            }
        }
        Ok(log)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        Self::read_jsonl(BufReader::new(File::open(path)?))
    }

    /// `episode,wall_ms` per episode.
    pub fn write_timing_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "episode,wall_ms")?;
        for e in &self.episodes {
            writeln!(w, "{},{}", e.episode, e.wall_ms)?;
        }
        Ok(())
    }

    /// `episode,final_moe,moving_avg`; the average column is empty until the
    /// first full window.
    pub fn write_moe_csv<W: Write>(&self, mut w: W, window: usize) -> Result<(), HarnessError> {
        let moes = self.final_moes();
        let avg = moving_average(&moes, window)?;
        writeln!(w, "episode,final_moe,moving_avg")?;
        for (i, e) in self.episodes.iter().enumerate() {
            match i.checked_sub(window - 1) {
                Some(k) => writeln!(w, "{},{},{}", e.episode, e.final_moe, avg[k])?,
                None => writeln!(w, "{},{},", e.episode, e.final_moe)?,
            }
        }
        Ok(())
    }

    pub fn write_quartiles_csv<W: Write>(&self, mut w: W, label: &str) -> Result<(), HarnessError> {
        let q = quartiles(&self.final_moes())?;
        writeln!(w, "label,min,q1,median,q3,max,iqr")?;
        writeln!(
            w,
            "{label},{},{},{},{},{},{}",
            q.min,
            q.q1,
            q.median,
            q.q3,
            q.max,
            q.iqr()
        )?;
        Ok(())
    }
}

pub(crate) fn write_episode<W: Write>(w: &mut W, e: &EpisodeRecord) -> std::io::Result<()> {
    for (i, s) in e.trace.iter().enumerate() {
        let termination = if i + 1 == e.trace.len() {
            e.termination
        } else {
            Termination::Running
        };
        let line = Line::Step {
            episode: e.episode,
            seed: e.seed,
            record: s.clone(),
            termination,
        };
        serde_json::to_writer(&mut *w, &line)?;
        w.write_all(b"\n")?;
    }
    serde_json::to_writer(&mut *w, &Line::Episode(e.clone()))?;
    w.write_all(b"\n")
}
