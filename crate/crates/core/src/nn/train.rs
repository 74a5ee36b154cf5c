//! Mini-batch gradient descent with early stopping and best-model
//! snapshots, plus the grid search over CNN hyper-parameters.

use std::fmt;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::arch::{ArchitectureDescriptor, ArchitectureKind};
use super::model::{Mode, Model};
use crate::corpus::Polarity;
use crate::error::{Error, Result};
use crate::seed::{rng_for, Stream};
use crate::segment::EncodedSequence;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub max_epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub min_delta: f64,
    pub patience: usize,
    pub l2: f64,
}

impl TrainConfig {
    pub fn for_kind(kind: ArchitectureKind) -> Self {
        let (max_epochs, patience, learning_rate) = if kind.is_cnn() { (200, 20, 0.05) } else { (5, 2, 0.1) };
        TrainConfig {
            max_epochs,
            batch_size: 64,
            learning_rate,
            seed: 0,
            min_delta: 0.001,
            patience,
            l2: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_epochs == 0 {
            return Err(Error::Config("max_epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::Config(format!("learning rate {} must be positive", self.learning_rate)));
        }
        if !(self.min_delta.is_finite() && self.min_delta >= 0.0) {
            return Err(Error::Config(format!("min_delta {} must be non-negative", self.min_delta)));
        }
        if !(self.l2.is_finite() && self.l2 >= 0.0) {
            return Err(Error::Config(format!("l2 {} must be non-negative", self.l2)));
        }
        Ok(())
    }
}

/// Stops once validation loss has failed to improve by more than
/// `min_delta` for `patience` consecutive epochs.
#[derive(Debug, Clone, PartialEq)]
pub struct EarlyStopping {
    pub min_delta: f64,
    pub patience: usize,
    best: f64,
    wait: usize,
}

impl EarlyStopping {
    pub fn new(min_delta: f64, patience: usize) -> Self {
        EarlyStopping {
            min_delta,
            patience,
            best: f64::INFINITY,
            wait: 0,
        }
    }

    /// Returns true when training should stop.
    pub fn observe(&mut self, val_loss: f64) -> bool {
        if val_loss < self.best - self.min_delta {
            self.best = val_loss;
            self.wait = 0;
        } else {
            self.wait += 1;
        }
        self.wait >= self.patience
    }

    pub fn remaining_patience(&self) -> usize {
        self.patience.saturating_sub(self.wait)
    }
}

/// Tracks the epoch with the strictly best validation accuracy.
#[derive(Debug, Clone, PartialEq)]
pub struct BestModelSave {
    best: f64,
    epoch: usize,
}

impl Default for BestModelSave {
    fn default() -> Self {
        BestModelSave {
            best: f64::NEG_INFINITY,
            epoch: 0,
        }
    }
}

impl BestModelSave {
    /// Returns true when `val_accuracy` beats every earlier epoch.
    pub fn observe(&mut self, epoch: usize, val_accuracy: f64) -> bool {
        if val_accuracy > self.best {
            self.best = val_accuracy;
            self.epoch = epoch;
            true
        } else {
            false
        }
    }

    pub fn best_epoch(&self) -> usize {
        self.epoch
    }

    pub fn best_accuracy(&self) -> f64 {
        self.best
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochMetrics {
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    MaxEpochs,
    EarlyStopping,
    Diverged,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopReason::MaxEpochs => "max-epochs",
            StopReason::EarlyStopping => "early-stopping",
            StopReason::Diverged => "diverged",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainHistory {
    pub epochs: Vec<EpochMetrics>,
    pub epoch_count: usize,
    pub save_epoch: usize,
    pub stop_reason: StopReason,
}

impl TrainHistory {
    pub const CSV_HEADER: &'static str = "epoch,train_loss,val_loss,val_accuracy";

    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", Self::CSV_HEADER);
        for (i, m) in self.epochs.iter().enumerate() {
            out.push_str(&format!("{},{},{},{}\n", i + 1, m.train_loss, m.val_loss, m.val_accuracy));
        }
        out
    }

    pub fn best_val_accuracy(&self) -> Option<f64> {
        self.epochs.get(self.save_epoch.checked_sub(1)?).map(|m| m.val_accuracy)
    }
}

/// Drives the callbacks over epochs produced by `epoch_fn` (called with a
/// 1-based epoch number). `on_best` fires whenever a snapshot should be
/// taken. A numerical failure after at least one epoch ends training with
/// the history so far.
pub fn run_callbacks<F, S>(cfg: &TrainConfig, mut epoch_fn: F, mut on_best: S) -> Result<TrainHistory>
where
    F: FnMut(usize) -> Result<EpochMetrics>,
    S: FnMut(usize),
{
    let mut early = EarlyStopping::new(cfg.min_delta, cfg.patience);
    let mut best = BestModelSave::default();
    let mut epochs = Vec::new();
    let mut stop_reason = StopReason::MaxEpochs;
    for epoch in 1..=cfg.max_epochs {
        let metrics = match epoch_fn(epoch) {
            Ok(m) if m.train_loss.is_finite() && m.val_loss.is_finite() => m,
            Ok(m) if epochs.is_empty() => {
                return Err(Error::Numerical(format!(
                    "non-finite loss in the first epoch (train {}, val {})",
                    m.train_loss, m.val_loss
                )))
            }
            Err(e @ Error::Numerical(_)) if epochs.is_empty() => return Err(e),
            Ok(_) | Err(Error::Numerical(_)) => {
                log::warn!("training diverged in epoch {epoch}; keeping {} completed epochs", epochs.len());
                stop_reason = StopReason::Diverged;
                break;
            }
            Err(e) => return Err(e),
        };
        epochs.push(metrics);
        if best.observe(epoch, metrics.val_accuracy) {
            on_best(epoch);
        }
        if early.observe(metrics.val_loss) {
            stop_reason = StopReason::EarlyStopping;
            break;
        }
    }
    Ok(TrainHistory {
        epoch_count: epochs.len(),
        save_epoch: best.best_epoch(),
        epochs,
        stop_reason,
    })
}

/// Encoded sequences with their labels.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub sequences: Vec<EncodedSequence>,
    pub labels: Vec<Polarity>,
}

impl Dataset {
    pub fn new(sequences: Vec<EncodedSequence>, labels: Vec<Polarity>) -> Result<Self> {
        if sequences.len() != labels.len() {
            return Err(Error::InputDomain(format!(
                "{} sequences but {} labels",
                sequences.len(),
                labels.len()
            )));
        }
        Ok(Dataset { sequences, labels })
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }
}

/// Mean cross-entropy and accuracy (threshold 0.5) of the model on `data`.
pub fn evaluate(model: &Model, data: &Dataset) -> Result<(f64, f64)> {
    let probs = model.forward(&data.sequences, Mode::Eval)?;
    let mut loss = 0.0;
    let mut correct = 0usize;
    for (p, label) in probs.iter().zip(&data.labels) {
        let y = label.target();
        loss -= y * p.ln() + (1.0 - y) * (1.0 - p).ln();
        if (*p > 0.5) == (*label == Polarity::Positive) {
            correct += 1;
        }
    }
    let n = data.len().max(1) as f64;
    Ok((loss / n, correct as f64 / n))
}

/// Trains from `initial` and returns the best-validation-accuracy snapshot
/// with the full history.
pub fn train(initial: &Model, train_set: &Dataset, val_set: &Dataset, cfg: &TrainConfig) -> Result<(Model, TrainHistory)> {
    cfg.validate()?;
    if train_set.is_empty() || val_set.is_empty() {
        return Err(Error::InsufficientData(format!(
            "training needs non-empty partitions (train {}, validation {})",
            train_set.len(),
            val_set.len()
        )));
    }
    let mut shuffle_rng = rng_for(cfg.seed, Stream::Shuffle);
    let mut dropout_rng = rng_for(cfg.seed, Stream::Dropout);
    let mut model = initial.clone();
    let mut best = initial.clone();
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    let history = {
        let model = &mut model;
        let best_slot = &mut best;
        let snapshot = std::cell::RefCell::new(None::<Model>);
        let history = run_callbacks(
            cfg,
            |_epoch| {
                order.shuffle(&mut shuffle_rng);
                let mut total = 0.0;
                for chunk in order.chunks(cfg.batch_size) {
                    let batch: Vec<EncodedSequence> = chunk.iter().map(|&i| train_set.sequences[i].clone()).collect();
                    let labels: Vec<Polarity> = chunk.iter().map(|&i| train_set.labels[i]).collect();
                    let (loss, grads) = model.loss_and_gradients(&batch, &labels, cfg.l2, Mode::Train(&mut dropout_rng))?;
                    model.params_mut().step(&grads, cfg.learning_rate);
                    total += loss * chunk.len() as f64;
                }
                let (val_loss, val_accuracy) = evaluate(model, val_set)?;
                *snapshot.borrow_mut() = Some(model.clone());
                Ok(EpochMetrics {
                    train_loss: total / train_set.len() as f64,
                    val_loss,
                    val_accuracy,
                })
            },
            |_epoch| {
                if let Some(m) = snapshot.borrow_mut().take() {
                    *best_slot = m;
                }
            },
        )?;
        history
    };
    Ok((best, history))
}

/// The grid searched over by [`hyperparameter_sweep`].
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub filter_sets: Vec<Vec<usize>>,
    pub dropouts: Vec<f64>,
    pub l2s: Vec<f64>,
}

impl Default for SweepGrid {
    fn default() -> Self {
        SweepGrid {
            filter_sets: vec![vec![3, 4, 5], vec![10, 16, 22], vec![16, 22, 27], vec![22, 27, 33]],
            dropouts: vec![0.4, 0.5, 0.6],
            l2s: vec![0.0, 0.001, 0.01, 0.1],
        }
    }
}

impl SweepGrid {
    /// Distinct combinations in grid order, plus the number of duplicates
    /// dropped.
    pub fn combinations(&self) -> (Vec<(Vec<usize>, f64, f64)>, usize) {
        let mut out: Vec<(Vec<usize>, f64, f64)> = Vec::new();
        let mut dups = 0;
        for fs in &self.filter_sets {
            for &d in &self.dropouts {
                for &l2 in &self.l2s {
                    let combo = (fs.clone(), d, l2);
                    if out.contains(&combo) {
                        dups += 1;
                    } else {
                        out.push(combo);
                    }
                }
            }
        }
        (out, dups)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub filter_sizes: Vec<usize>,
    pub dropout: f64,
    pub l2: f64,
    pub val_accuracy: f64,
    pub epochs: usize,
}

impl SweepRow {
    pub const CSV_HEADER: &'static str = "filter_sizes,dropout,l2,val_accuracy,epochs";

    pub fn to_csv_row(&self) -> String {
        let fs: Vec<String> = self.filter_sizes.iter().map(usize::to_string).collect();
        format!("{},{},{},{},{}", fs.join("-"), self.dropout, self.l2, self.val_accuracy, self.epochs)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    pub skipped: Vec<Vec<usize>>,
    pub duplicates: usize,
}

impl SweepOutcome {
    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", SweepRow::CSV_HEADER);
        for row in &self.rows {
            out.push_str(&row.to_csv_row());
            out.push('\n');
        }
        out
    }
}

/// Trains one model per grid point under identical seeds. `val_accuracy`
/// is the final epoch's validation accuracy. Filter sets that leave
/// nothing to pool at `max_length` are skipped.
pub fn hyperparameter_sweep(
    base: &ArchitectureDescriptor,
    grid: &SweepGrid,
    train_set: &Dataset,
    val_set: &Dataset,
    max_length: usize,
    vocab_size: usize,
    cfg: &TrainConfig,
) -> Result<SweepOutcome> {
    if !base.kind.is_cnn() {
        return Err(Error::Config(format!("the sweep needs a CNN architecture, got {}", base.kind)));
    }
    let (combos, duplicates) = grid.combinations();
    if combos.is_empty() {
        return Err(Error::Config("the sweep grid is empty".into()));
    }
    if duplicates > 0 {
        log::warn!("dropped {duplicates} duplicate grid points");
    }
    let mut skipped = Vec::new();
    let mut runnable = Vec::new();
    for (fs, d, l2) in combos {
        if fs.iter().any(|&f| f >= max_length) {
            log::info!("skipping filter set {fs:?}: longer than the input length {max_length}");
            if !skipped.contains(&fs) {
                skipped.push(fs);
            }
        } else {
            runnable.push((fs, d, l2));
        }
    }
    let rows = runnable
        .into_par_iter()
        .map(|(fs, d, l2)| {
            let mut arch = base.clone();
            arch.filter_sizes = fs.clone();
            arch.dropout_embed = d;
            let mut init = rng_for(cfg.seed, Stream::Init);
            let model = Model::new(arch, max_length, vocab_size, &mut init)?;
            let run_cfg = TrainConfig { l2, ..cfg.clone() };
            let (_, history) = train(&model, train_set, val_set, &run_cfg)?;
            Ok(SweepRow {
                filter_sizes: fs,
                dropout: d,
                l2,
                val_accuracy: history.epochs.last().map_or(0.0, |m| m.val_accuracy),
                epochs: history.epoch_count,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepOutcome {
        rows,
        skipped,
        duplicates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scripted(losses: &[f64], accs: &[f64], patience: usize) -> TrainHistory {
        let cfg = TrainConfig {
            max_epochs: 50,
            patience,
            ..TrainConfig::for_kind(ArchitectureKind::MeanPool)
        };
        run_callbacks(
            &cfg,
            |e| {
                Ok(EpochMetrics {
                    train_loss: 0.0,
                    val_loss: losses[(e - 1).min(losses.len() - 1)],
                    val_accuracy: accs[(e - 1).min(accs.len() - 1)],
                })
            },
            |_| {},
        )
        .unwrap()
    }

    #[test]
    fn early_stopping_trace() {
        let h = scripted(&[1.0, 0.9, 0.91, 0.92], &[0.5, 0.6, 0.55, 0.58], 2);
        assert_eq!(h.epoch_count, 4);
        assert_eq!(h.save_epoch, 2);
        assert_eq!(h.stop_reason, StopReason::EarlyStopping);
    }

    #[test]
    fn improvements_below_min_delta_do_not_count() {
        let mut es = EarlyStopping::new(0.001, 2);
        assert!(!es.observe(1.0));
        assert!(!es.observe(0.9995));
        assert!(es.observe(0.9991));
    }

    #[test]
    fn best_epoch_is_argmax_of_accuracy() {
        let h = scripted(&[1.0, 0.5, 0.25], &[0.6, 0.8, 0.7], 10);
        assert_eq!(h.save_epoch, 2);
        let mut b = BestModelSave::default();
        assert!(b.observe(1, 0.5));
        assert!(!b.observe(2, 0.5));
    }

    #[test]
    fn divergence_keeps_history() {
        let cfg = TrainConfig::for_kind(ArchitectureKind::MeanPool);
        let h = run_callbacks(
            &cfg,
            |e| {
                Ok(EpochMetrics {
                    train_loss: if e == 3 { f64::NAN } else { 1.0 },
                    val_loss: 1.0 / e as f64,
                    val_accuracy: 0.5,
                })
            },
            |_| {},
        )
        .unwrap();
        assert_eq!(h.epoch_count, 2);
        assert_eq!(h.stop_reason, StopReason::Diverged);
        let first = run_callbacks(&cfg, |_| Err(Error::Numerical("boom".into())), |_| {});
        assert!(matches!(first, Err(Error::Numerical(_))));
    }

    #[test]
    fn default_grid_has_48_points() {
        let (combos, dups) = SweepGrid::default().combinations();
        assert_eq!(combos.len(), 48);
        assert_eq!(dups, 0);
        let g = SweepGrid {
            filter_sets: vec![vec![3], vec![3]],
            dropouts: vec![0.5],
            l2s: vec![0.0],
        };
        assert_eq!(g.combinations(), (vec![(vec![3], 0.5, 0.0)], 1));
    }

    #[test]
    fn config_defaults() {
        let c = TrainConfig::for_kind(ArchitectureKind::CnnRandSimplified);
        assert_eq!((c.max_epochs, c.patience, c.min_delta), (200, 20, 0.001));
        let m = TrainConfig::for_kind(ArchitectureKind::Lstm);
        assert_eq!((m.max_epochs, m.patience), (5, 2));
    }
}
