//! Memory estimates, stopwatch stamps and the per-run measurement record.

use std::path::Path;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{count_parameters, ArchitectureDescriptor, ArchitectureKind};
use crate::segment::SegmentationMethod;

/// `50 v + 500 l + 3121`.
pub fn mem_cnn(v: u64, l: u64) -> u64 {
    50 * v + 500 * l + 3121
}

/// `32 v + 0 l + 53301`.
pub fn mem_lstm(v: u64, _l: u64) -> u64 {
    32 * v + 53301
}

/// `t_training * (1 - (EC - SE) / EC)`, which is `t_training * SE / EC`.
pub fn actual_train_duration(t_training: f64, epoch_count: usize, save_epoch: usize) -> Result<f64> {
    if epoch_count == 0 {
        return Err(Error::InputDomain("epoch count must be at least 1".into()));
    }
    if save_epoch == 0 || save_epoch > epoch_count {
        return Err(Error::InputDomain(format!(
            "save epoch {save_epoch} is outside 1..={epoch_count}"
        )));
    }
    if save_epoch == epoch_count {
        return Ok(t_training);
    }
    Ok(t_training * save_epoch as f64 / epoch_count as f64)
}

pub fn total_eval_duration(t_pp: f64, t_eval: f64) -> f64 {
    t_pp + t_eval
}

/// Memory estimate for an architecture: the CNN formula for CNN kinds,
/// the LSTM formula for LSTM, the exact parameter count otherwise.
pub fn mem_estimate(arch: &ArchitectureDescriptor, max_length: usize, vocab_size: usize) -> Result<u64> {
    match arch.kind {
        ArchitectureKind::CnnRand | ArchitectureKind::CnnRandSimplified => {
            Ok(mem_cnn(vocab_size as u64, max_length as u64))
        }
        ArchitectureKind::Lstm => Ok(mem_lstm(vocab_size as u64, max_length as u64)),
        ArchitectureKind::MeanPool => count_parameters(arch, max_length, vocab_size),
    }
}

/// Four monotonic stamps: start, preprocessing done, training done,
/// evaluation done.
#[derive(Debug, Clone, Default)]
pub struct Stopwatch {
    stamps: [Option<Instant>; 4],
}

impl Stopwatch {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn started() -> Self {
        let mut s = Self::new();
        s.stamp(0).expect("first stamp");
        s
    }

    /// Records stamp `i` now. Stamps must be taken in order.
    pub fn stamp(&mut self, i: usize) -> Result<()> {
        if i >= 4 {
            return Err(Error::State(format!("stopwatch has no stamp t{i}")));
        }
        if i > 0 && self.stamps[i - 1].is_none() {
            return Err(Error::State(format!("t{i} stamped before t{}", i - 1)));
        }
        self.stamps[i] = Some(Instant::now());
        Ok(())
    }

    pub fn is_complete(&self) -> bool {
        self.stamps.iter().all(Option::is_some)
    }

    /// `(t_pp, t_training, t_eval)` in seconds.
    pub fn durations(&self) -> Result<(f64, f64, f64)> {
        let s: Vec<Instant> = self
            .stamps
            .iter()
            .enumerate()
            .map(|(i, t)| t.ok_or_else(|| Error::State(format!("stopwatch stamp t{i} is missing"))))
            .collect::<Result<_>>()?;
        let d = |a: Instant, b: Instant| b.saturating_duration_since(a).as_secs_f64();
        Ok((d(s[0], s[1]), d(s[1], s[2]), d(s[2], s[3])))
    }

    pub fn total(&self) -> Result<Duration> {
        match (self.stamps[0], self.stamps[3]) {
            (Some(a), Some(b)) => Ok(b.saturating_duration_since(a)),
            _ => Err(Error::State("stopwatch is incomplete".into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub no: u64,
    pub dataset: String,
    pub segmentation: SegmentationMethod,
    pub train: usize,
    pub validation: usize,
    pub test: usize,
    pub batch_size: usize,
    pub vocabulary: usize,
    pub max_review_length: usize,
    pub t_pp: f64,
    pub t_training: f64,
    pub t_eval: f64,
    pub score: f64,
    pub mv_score: f64,
    pub epoch_count: usize,
    pub save_epoch: usize,
    pub t_atd: f64,
    pub t_te: f64,
    pub mem_estimate: u64,
}

pub const REPORT_HEADER: &str = "no,dataset,segmentation,train,validation,test,batch_size,vocabulary,max_review_length,t_pp,t_training,t_eval,score,mv_score,epoch_count,save_epoch,t_atd,t_te,mem_estimate";

impl ExperimentRecord {
    /// The row with every timing column blanked out, for comparing runs.
    pub fn without_timings(&self) -> ExperimentRecord {
        ExperimentRecord {
            t_pp: 0.0,
            t_training: 0.0,
            t_eval: 0.0,
            t_atd: 0.0,
            t_te: 0.0,
            ..self.clone()
        }
    }

    pub fn to_csv_row(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
        w.serialize(self)?;
        let bytes = w.into_inner().map_err(|e| Error::State(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("utf-8").trim_end().to_string())
    }
}

/// Everything a run knows besides its timings.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub dataset: String,
    pub segmentation: SegmentationMethod,
    pub arch: ArchitectureDescriptor,
    pub train: usize,
    pub validation: usize,
    pub test: usize,
    pub batch_size: usize,
    pub vocabulary: usize,
    pub max_review_length: usize,
    pub score: f64,
    pub mv_score: f64,
    pub epoch_count: usize,
    pub save_epoch: usize,
}

pub fn record_experiment(no: u64, stopwatch: &Stopwatch, run: &RunSummary) -> Result<ExperimentRecord> {
    if !stopwatch.is_complete() {
        return Err(Error::State("stopwatch must be fully stamped before recording".into()));
    }
    let (t_pp, t_training, t_eval) = stopwatch.durations()?;
    Ok(ExperimentRecord {
        no,
        dataset: run.dataset.clone(),
        segmentation: run.segmentation,
        train: run.train,
        validation: run.validation,
        test: run.test,
        batch_size: run.batch_size,
        vocabulary: run.vocabulary,
        max_review_length: run.max_review_length,
        t_pp,
        t_training,
        t_eval,
        score: run.score,
        mv_score: run.mv_score,
        epoch_count: run.epoch_count,
        save_epoch: run.save_epoch,
        t_atd: actual_train_duration(t_training, run.epoch_count, run.save_epoch)?,
        t_te: total_eval_duration(t_pp, t_eval),
        mem_estimate: mem_estimate(&run.arch, run.max_review_length, run.vocabulary)?,
    })
}

pub fn parse_report(input: &str) -> Result<Vec<ExperimentRecord>> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input.as_bytes());
    let header = r.headers()?.iter().collect::<Vec<_>>().join(",");
    if header != REPORT_HEADER {
        return Err(Error::parse("<report>", 1, format!("unexpected header '{header}'")));
    }
    r.deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}

pub fn load_report(path: &Path) -> Result<Vec<ExperimentRecord>> {
    match std::fs::read_to_string(path) {
        Ok(s) => parse_report(&s),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Vec::new()),
        Err(e) => Err(Error::io(path, e)),
    }
}

pub fn report_to_string(records: &[ExperimentRecord]) -> Result<String> {
    let mut out = format!("{REPORT_HEADER}\n");
    for r in records {
        out.push_str(&r.to_csv_row()?);
        out.push('\n');
    }
    Ok(out)
}

/// Appends `record` to the report at `path`, renumbering it to follow the
/// existing rows. Returns the stored record.
pub fn append_report(path: &Path, record: &ExperimentRecord) -> Result<ExperimentRecord> {
    use std::io::Write;
    let existing = load_report(path)?;
    let stored = ExperimentRecord {
        no: existing.len() as u64 + 1,
        ..record.clone()
    };
    let mut file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    let mut text = String::new();
    if existing.is_empty() && file.metadata().map(|m| m.len() == 0).unwrap_or(true) {
        text.push_str(REPORT_HEADER);
        text.push('\n');
    }
    text.push_str(&stored.to_csv_row()?);
    text.push('\n');
    file.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))?;
    Ok(stored)
}
