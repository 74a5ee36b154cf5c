//! The seeded end-to-end run: preprocess, segment, build the vocabulary,
//! encode, train, predict, vote and record.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;

use crate::corpus::{
    load_corpus, preprocess, split_dataset, CorpusOptions, RatingScheme, SentenceRecord, SplitSpec,
};
use crate::error::{Error, Result};
use crate::eval::{
    histogram, majority_vote, predictions_to_string, review_accuracy, sentence_accuracy, Prediction,
};
use crate::morphdict::MorphDictionary;
use crate::nn::{train, ArchitectureDescriptor, ArchitectureKind, Dataset, Mode, Model, TrainConfig, TrainHistory};
use crate::perf::{append_report, record_experiment, ExperimentRecord, RunSummary, Stopwatch};
use crate::seed::{child_seed, rng_for, Stream};
use crate::segment::{
    build_vocabulary, encode, tokenize_words, EncodedSequence, SegmentationMethod, Segmenter, Vocabulary, UNK_TOKEN,
};
use crate::subword::{bpe_train, BpeModel, ResiduePolicy};

pub const DEFAULT_PERCENTILE: f64 = 0.995;
pub const DEFAULT_MIN_FREQUENCY: u64 = 3;
pub const INCOMPLETE_MARKER: &str = ".incomplete";
pub const REPORT_FILE: &str = "report.csv";

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub corpus: PathBuf,
    pub dataset: Option<String>,
    pub scheme: Option<RatingScheme>,
    pub lenient: bool,
    pub method: SegmentationMethod,
    pub dictionary: Option<PathBuf>,
    pub bpe_model: Option<PathBuf>,
    pub bpe_limit: Option<usize>,
    pub residue: ResiduePolicy,
    pub min_frequency: u64,
    pub global_vocab: bool,
    pub split: SplitSpec,
    pub percentile: f64,
    pub arch: ArchitectureDescriptor,
    pub train: TrainConfig,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub force: bool,
}

impl ExperimentConfig {
    pub fn new(corpus: impl Into<PathBuf>, method: SegmentationMethod, kind: ArchitectureKind, output_dir: impl Into<PathBuf>) -> Self {
        ExperimentConfig {
            corpus: corpus.into(),
            dataset: None,
            scheme: None,
            lenient: false,
            method,
            dictionary: None,
            bpe_model: None,
            bpe_limit: None,
            residue: ResiduePolicy::default(),
            min_frequency: DEFAULT_MIN_FREQUENCY,
            global_vocab: false,
            split: SplitSpec::default(),
            percentile: DEFAULT_PERCENTILE,
            arch: ArchitectureDescriptor::for_kind(kind),
            train: TrainConfig::for_kind(kind),
            seed: 0,
            output_dir: output_dir.into(),
            force: false,
        }
    }

    pub fn dataset_name(&self) -> String {
        self.dataset.clone().unwrap_or_else(|| {
            self.corpus
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "corpus".into())
        })
    }

    /// Artifacts of this run live in `<output_dir>/<method tag>`.
    pub fn run_dir(&self) -> PathBuf {
        self.output_dir.join(self.method.tag())
    }

    pub fn validate(&self) -> Result<()> {
        if !self.corpus.is_file() {
            return Err(Error::Config(format!("corpus file {} does not exist", self.corpus.display())));
        }
        if self.method.needs_dictionary() && self.dictionary.is_none() {
            return Err(Error::Config(format!("method {} requires --dict", self.method)));
        }
        for path in self.dictionary.iter().chain(&self.bpe_model) {
            if !path.is_file() {
                return Err(Error::Config(format!("{} does not exist", path.display())));
            }
        }
        if self.arch.kind == ArchitectureKind::Lstm {
            return Err(Error::Config("lstm is descriptor-only and cannot be trained".into()));
        }
        if !(self.percentile > 0.0 && self.percentile <= 1.0) {
            return Err(Error::Config(format!("percentile {} must be in (0, 1]", self.percentile)));
        }
        if self.bpe_limit == Some(0) {
            return Err(Error::Config("BPE limit must be positive".into()));
        }
        self.split.validate()?;
        self.arch.validate()?;
        self.train.validate()
    }
}

/// One partition of sentences with their segmentations.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SegmentedPartition {
    pub sentences: Vec<SentenceRecord>,
    pub tokens: Vec<Vec<String>>,
}

impl SegmentedPartition {
    pub fn encode(&self, vocab: &Vocabulary, max_length: usize) -> Dataset {
        let sequences = self
            .sentences
            .iter()
            .zip(&self.tokens)
            .map(|(s, t)| encode_sentence(vocab, s, t, max_length))
            .collect();
        Dataset {
            sequences,
            labels: self.sentences.iter().map(|s| s.label).collect(),
        }
    }
}

/// Encodes with lineage; a sentence whose every token was discarded
/// becomes a single UNK.
pub fn encode_sentence(vocab: &Vocabulary, sentence: &SentenceRecord, tokens: &[String], max_length: usize) -> EncodedSequence {
    let unk = [UNK_TOKEN.to_string()];
    let tokens = if tokens.is_empty() { &unk[..] } else { tokens };
    let mut seq = encode(vocab, tokens, max_length);
    seq.review_id = sentence.review_id;
    seq.sentence_index = sentence.index;
    seq
}

/// Everything the trainer and evaluator consume.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub segmenter: Segmenter,
    pub bpe: Option<Arc<BpeModel>>,
    pub train: SegmentedPartition,
    pub val: SegmentedPartition,
    pub test: SegmentedPartition,
    pub vocab: Vocabulary,
    pub max_length: usize,
}

pub fn segment_partition(segmenter: &Segmenter, method: SegmentationMethod, sentences: Vec<SentenceRecord>) -> SegmentedPartition {
    let tokens = sentences
        .par_iter()
        .map(|s| segmenter.segment_words(method, &tokenize_words(&s.text)))
        .collect();
    SegmentedPartition { sentences, tokens }
}

/// Builds the segmenter for `cfg`, training BPE on `train_sentences` when
/// no merges file is given.
pub fn build_segmenter(cfg: &ExperimentConfig, train_sentences: &[SentenceRecord]) -> Result<(Segmenter, Option<Arc<BpeModel>>)> {
    let mut segmenter = Segmenter::new().with_residue(cfg.residue);
    if let Some(path) = &cfg.dictionary {
        segmenter = segmenter.with_dictionary(Arc::new(MorphDictionary::load(path)?));
    }
    let mut bpe = None;
    if let Some(default_limit) = cfg.method.bpe_limit() {
        let model = match &cfg.bpe_model {
            Some(path) => BpeModel::load(path)?,
            None => {
                let words = train_sentences.iter().flat_map(|s| tokenize_words(&s.text));
                bpe_train(words, cfg.bpe_limit.unwrap_or(default_limit))?
            }
        };
        let model = Arc::new(model);
        segmenter = segmenter.with_bpe(cfg.method, model.clone());
        bpe = Some(model);
    }
    segmenter.check(cfg.method)?;
    Ok((segmenter, bpe))
}

/// Loads, splits by review, preprocesses, segments and builds the
/// vocabulary. Sentence cutoffs are computed over the whole corpus.
pub fn prepare(cfg: &ExperimentConfig) -> Result<PreparedData> {
    let parsed = load_corpus(
        &cfg.corpus,
        &CorpusOptions {
            scheme: cfg.scheme,
            lenient: cfg.lenient,
        },
    )
    .map_err(|e| e.in_stage("load"))?;
    for (line, msg) in &parsed.skipped {
        log::warn!("{}:{line}: skipped: {msg}", cfg.corpus.display());
    }
    let spec = SplitSpec {
        seed: child_seed(cfg.seed, Stream::Split),
        ..cfg.split
    };
    let parts = split_dataset(&parsed.reviews, &spec).map_err(|e| e.in_stage("split"))?;
    let sentences = preprocess(&parsed.reviews, cfg.percentile);
    let mut by_review: HashMap<u64, Vec<SentenceRecord>> = HashMap::new();
    for s in sentences {
        by_review.entry(s.review_id).or_default().push(s);
    }
    let mut collect = |reviews: &[crate::corpus::Review]| -> Vec<SentenceRecord> {
        reviews.iter().flat_map(|r| by_review.remove(&r.id).unwrap_or_default()).collect()
    };
    let (train_s, val_s, test_s) = (collect(&parts.train), collect(&parts.val), collect(&parts.test));

    let (segmenter, bpe) = build_segmenter(cfg, &train_s).map_err(|e| e.in_stage("segment"))?;
    let train = segment_partition(&segmenter, cfg.method, train_s);
    let val = segment_partition(&segmenter, cfg.method, val_s);
    let test = segment_partition(&segmenter, cfg.method, test_s);

    let vocab = if cfg.global_vocab {
        build_vocabulary(train.tokens.iter().chain(&val.tokens).chain(&test.tokens), cfg.min_frequency)
    } else {
        build_vocabulary(&train.tokens, cfg.min_frequency)
    };
    let longest = train.tokens.iter().map(Vec::len).max().unwrap_or(0).max(1);
    let max_length = if cfg.arch.kind.is_cnn() {
        longest.max(cfg.arch.max_filter() + 1)
    } else {
        longest
    };
    Ok(PreparedData {
        segmenter,
        bpe,
        train,
        val,
        test,
        vocab,
        max_length,
    })
}

/// Eval-mode scores for already encoded sentences.
pub fn predict(model: &Model, data: &Dataset) -> Result<Vec<Prediction>> {
    let scores: Vec<f64> = data
        .sequences
        .par_chunks(256)
        .map(|chunk| model.forward(chunk, Mode::Eval))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    Ok(data
        .sequences
        .iter()
        .zip(&data.labels)
        .zip(scores)
        .map(|((s, &label), score)| Prediction {
            review_id: s.review_id,
            sentence_index: s.sentence_index,
            label,
            score,
        })
        .collect())
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub record: ExperimentRecord,
    pub run_dir: PathBuf,
    pub sentence_accuracy: f64,
    pub review_accuracy: f64,
    pub history: TrainHistory,
    pub predictions: Vec<Prediction>,
}

fn write(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Creates the run directory, refusing to reuse a non-empty one unless
/// `force` is set.
pub fn claim_dir(dir: &Path, force: bool) -> Result<()> {
    if dir.exists() {
        let non_empty = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?.next().is_some();
        if non_empty && !force {
            return Err(Error::Config(format!(
                "{} already exists; pass --force to overwrite",
                dir.display()
            )));
        }
        if non_empty {
            std::fs::remove_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Runs everything and writes the run artifacts, leaving the report
/// untouched. The returned record has `no = 0`.
pub fn run_experiment_unrecorded(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let run_dir = cfg.run_dir();
    claim_dir(&run_dir, cfg.force)?;
    let marker = run_dir.join(INCOMPLETE_MARKER);
    write(&marker, "")?;

    let mut watch = Stopwatch::started();
    let data = prepare(cfg)?;
    watch.stamp(1)?;

    let train_set = data.train.encode(&data.vocab, data.max_length);
    let val_set = data.val.encode(&data.vocab, data.max_length);
    let mut init = rng_for(cfg.seed, Stream::Init);
    let initial = Model::new(cfg.arch.clone(), data.max_length, data.vocab.len(), &mut init).map_err(|e| e.in_stage("train"))?;
    let train_cfg = TrainConfig {
        seed: cfg.seed,
        ..cfg.train.clone()
    };
    let (model, history) = train(&initial, &train_set, &val_set, &train_cfg).map_err(|e| e.in_stage("train"))?;
    watch.stamp(2)?;

    let test_set = data.test.encode(&data.vocab, data.max_length);
    let predictions = predict(&model, &test_set).map_err(|e| e.in_stage("predict"))?;
    let score = sentence_accuracy(&predictions, 0.5).map_err(|e| e.in_stage("evaluate"))?;
    let reviews = majority_vote(&predictions);
    let mv_score = review_accuracy(&reviews).map_err(|e| e.in_stage("evaluate"))?;
    watch.stamp(3)?;

    let summary = RunSummary {
        dataset: cfg.dataset_name(),
        segmentation: cfg.method,
        arch: cfg.arch.clone(),
        train: data.train.sentences.len(),
        validation: data.val.sentences.len(),
        test: data.test.sentences.len(),
        batch_size: cfg.train.batch_size,
        vocabulary: data.vocab.len(),
        max_review_length: data.max_length,
        score,
        mv_score,
        epoch_count: history.epoch_count,
        save_epoch: history.save_epoch,
    };
    let record = record_experiment(0, &watch, &summary)?;

    write(&run_dir.join("predictions.tsv"), &predictions_to_string(&predictions))?;
    model.save(&run_dir.join("model.txt"))?;
    write(&run_dir.join("history.csv"), &history.to_csv())?;
    data.vocab.save(&run_dir.join("vocab.tsv"))?;
    if let Some(bpe) = &data.bpe {
        bpe.save(&run_dir.join("bpe.merges"))?;
    }
    write(&run_dir.join("histogram.csv"), &histogram(&predictions).to_csv())?;
    std::fs::remove_file(&marker).map_err(|e| Error::io(&marker, e))?;
    log::info!(
        "{}: sentence accuracy {score:.4}, review accuracy {mv_score:.4}, {} epochs",
        cfg.method,
        history.epoch_count
    );
    Ok(ExperimentOutcome {
        record,
        run_dir,
        sentence_accuracy: score,
        review_accuracy: mv_score,
        history,
        predictions,
    })
}

/// Runs one experiment and appends its row to `<output_dir>/report.csv`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let mut outcome = run_experiment_unrecorded(cfg)?;
    outcome.record = append_report(&cfg.output_dir.join(REPORT_FILE), &outcome.record)?;
    Ok(outcome)
}

/// Runs independent experiments on up to `jobs` threads. Report rows are
/// appended in input order once every run has finished.
pub fn run_experiments(cfgs: &[ExperimentConfig], jobs: usize) -> Result<Vec<ExperimentOutcome>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let results: Vec<Result<ExperimentOutcome>> = pool.install(|| cfgs.par_iter().map(run_experiment_unrecorded).collect());
    let mut outcomes = Vec::with_capacity(results.len());
    for (cfg, result) in cfgs.iter().zip(results) {
        let mut outcome = result?;
        outcome.record = append_report(&cfg.output_dir.join(REPORT_FILE), &outcome.record)?;
        outcomes.push(outcome);
    }
    Ok(outcomes)
}
