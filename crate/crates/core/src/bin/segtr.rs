use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use segtr::corpus::{compute_stats, load_corpus, split_dataset, write_corpus, CorpusOptions, RatingScheme, SplitSpec};
use segtr::eval::{
    clt_check, load_predictions, majority_vote, predictions_to_string, review_accuracy, sentence_accuracy,
};
use segtr::experiment::{
    encode_sentence, predict, prepare, run_experiments, ExperimentConfig, DEFAULT_MIN_FREQUENCY, DEFAULT_PERCENTILE,
};
use segtr::morphdict::MorphDictionary;
use segtr::nn::{hyperparameter_sweep, train, ArchitectureKind, Dataset, Model, SweepGrid};
use segtr::perf::{load_report, REPORT_HEADER};
use segtr::seed::{child_seed, rng_for, Stream};
use segtr::segment::{tokenize_words, SegmentationMethod, Segmenter, Vocabulary};
use segtr::subword::{bpe_train, classify_syllable, BpeModel, ResiduePolicy};
use segtr::text::mean_graphemes_per_word;
use segtr::{Error, Result};

#[derive(Parser)]
#[command(name = "segtr", version, about = "Text segmentation experiments for sentiment analysis")]
#[command(args_override_self = true)]
struct Cli {
    /// key=value file whose entries act as flags; explicit flags win.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Vocabulary size, average sentence length and longest review.
    Stats(StatsArgs),
    /// Review-level train/validation/test split into three corpus files.
    Split(SplitArgs),
    /// Segment one sentence per input line.
    Segment(SegmentArgs),
    /// Train a BPE merges file.
    BpeTrain(BpeTrainArgs),
    /// Train a classifier and save model, vocabulary and history.
    Train(TrainArgs),
    /// Score a corpus with a saved model.
    Predict(PredictArgs),
    /// Full seeded run; appends a row to <out>/report.csv.
    Experiment(ExperimentArgs),
    /// Grid search over CNN filter sets, dropout and l2.
    Sweep(SweepArgs),
    /// Validate and print an experiment report.
    Report(ReportArgs),
    /// Compare the spread of group means with sigma / sqrt(n).
    CltCheck(CltArgs),
}

#[derive(Args, Clone)]
struct CorpusArgs {
    /// Corpus file: `label<TAB>text` per line.
    #[arg(long)]
    corpus: PathBuf,
    /// Rating scheme for `r:<rating>` labels.
    #[arg(long)]
    scheme: Option<RatingScheme>,
    /// Skip malformed lines instead of failing.
    #[arg(long)]
    lenient: bool,
}

impl CorpusArgs {
    fn options(&self) -> CorpusOptions {
        CorpusOptions {
            scheme: self.scheme,
            lenient: self.lenient,
        }
    }
}

#[derive(Args, Clone)]
struct SeedArgs {
    #[arg(long, env = "SEGTR_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Residue {
    Discard,
    Unk,
}

impl From<Residue> for ResiduePolicy {
    fn from(r: Residue) -> Self {
        match r {
            Residue::Discard => ResiduePolicy::Discard,
            Residue::Unk => ResiduePolicy::Unk,
        }
    }
}

#[derive(Args, Clone)]
struct MethodDeps {
    /// Morphological dictionary TSV.
    #[arg(long)]
    dict: Option<PathBuf>,
    /// BPE merges file.
    #[arg(long)]
    bpe: Option<PathBuf>,
    /// Handling of characters a BPE model has never seen.
    #[arg(long, value_enum, default_value = "discard")]
    residue: Residue,
}

#[derive(Args)]
struct StatsArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    /// Emit a header and one CSV row.
    #[arg(long)]
    csv: bool,
}

#[derive(Args)]
struct SplitArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[command(flatten)]
    ratios: RatioArgs,
    #[command(flatten)]
    seed: SeedArgs,
    /// Directory for train.tsv, val.tsv and test.tsv.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    force: bool,
}

#[derive(Args, Clone)]
struct RatioArgs {
    #[arg(long, default_value_t = 0.8)]
    train_ratio: f64,
    #[arg(long, default_value_t = 0.1)]
    val_ratio: f64,
    #[arg(long, default_value_t = 0.1)]
    test_ratio: f64,
}

#[derive(Args)]
struct SegmentArgs {
    #[arg(long)]
    method: SegmentationMethod,
    #[command(flatten)]
    deps: MethodDeps,
    /// Input text, one sentence per line (default stdin).
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Output file (default stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Append each syllable's pattern, as in `ge/CV`.
    #[arg(long)]
    check_form: bool,
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct BpeTrainArgs {
    /// Plain text input, one sentence per line.
    #[arg(long = "in", conflicts_with = "corpus")]
    input: Option<PathBuf>,
    /// Labeled corpus input.
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    scheme: Option<RatingScheme>,
    #[arg(long)]
    lenient: bool,
    #[arg(long)]
    limit: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    force: bool,
}

#[derive(Args, Clone)]
struct RunArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    /// Dataset name for the report (default: corpus file stem).
    #[arg(long)]
    dataset: Option<String>,
    #[command(flatten)]
    deps: MethodDeps,
    /// BPE vocabulary target when training merges on the fly.
    #[arg(long)]
    bpe_limit: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_MIN_FREQUENCY)]
    min_freq: u64,
    /// Build the vocabulary over every partition.
    #[arg(long)]
    global_vocab: bool,
    #[command(flatten)]
    ratios: RatioArgs,
    #[arg(long, default_value_t = DEFAULT_PERCENTILE)]
    percentile: f64,
    #[arg(long, default_value = "cnn-rand-simplified")]
    arch: ArchitectureKind,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long)]
    min_delta: Option<f64>,
    #[arg(long)]
    l2: Option<f64>,
    #[arg(long)]
    embedding_dim: Option<usize>,
    /// Comma-separated CNN filter sizes.
    #[arg(long, value_delimiter = ',')]
    filter_sizes: Option<Vec<usize>>,
    #[arg(long)]
    filters: Option<usize>,
    #[arg(long)]
    dense: Option<usize>,
    #[arg(long)]
    dropout_embed: Option<f64>,
    #[arg(long)]
    dropout_penultimate: Option<f64>,
    #[command(flatten)]
    seed: SeedArgs,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    force: bool,
}

impl RunArgs {
    fn config(&self, method: SegmentationMethod) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::new(&self.corpus.corpus, method, self.arch, &self.out);
        cfg.dataset = self.dataset.clone();
        cfg.scheme = self.corpus.scheme;
        cfg.lenient = self.corpus.lenient;
        cfg.dictionary = self.deps.dict.clone();
        cfg.bpe_model = self.deps.bpe.clone();
        cfg.bpe_limit = self.bpe_limit;
        cfg.residue = self.deps.residue.into();
        cfg.min_frequency = self.min_freq;
        cfg.global_vocab = self.global_vocab;
        cfg.split = SplitSpec::new(self.ratios.train_ratio, self.ratios.val_ratio, self.ratios.test_ratio, 0)?;
        cfg.percentile = self.percentile;
        let a = &mut cfg.arch;
        set(&mut a.embedding_dim, self.embedding_dim);
        set(&mut a.filter_sizes, self.filter_sizes.clone());
        set(&mut a.filters_per_size, self.filters);
        set(&mut a.dense_dim, self.dense);
        set(&mut a.dropout_embed, self.dropout_embed);
        set(&mut a.dropout_penultimate, self.dropout_penultimate);
        let t = &mut cfg.train;
        set(&mut t.max_epochs, self.epochs);
        set(&mut t.batch_size, self.batch_size);
        set(&mut t.learning_rate, self.lr);
        set(&mut t.patience, self.patience);
        set(&mut t.min_delta, self.min_delta);
        set(&mut t.l2, self.l2);
        t.seed = self.seed.seed;
        cfg.seed = self.seed.seed;
        cfg.force = self.force;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    method: SegmentationMethod,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct PredictArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long)]
    method: SegmentationMethod,
    #[command(flatten)]
    deps: MethodDeps,
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    vocab: PathBuf,
    #[arg(long, default_value_t = DEFAULT_PERCENTILE)]
    percentile: f64,
    /// Predictions TSV.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct ExperimentArgs {
    /// One or more methods, comma-separated.
    #[arg(long, value_delimiter = ',', required = true)]
    method: Vec<SegmentationMethod>,
    /// Parallel runs across methods.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    method: SegmentationMethod,
    /// Filter sets as `3-4-5`, comma-separated (default: the standard grid).
    #[arg(long, value_delimiter = ',')]
    filter_sets: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    dropouts: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    l2s: Option<Vec<f64>>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct ReportArgs {
    /// Report CSV, usually <out>/report.csv.
    #[arg(long = "in")]
    input: PathBuf,
}

#[derive(Args)]
struct CltArgs {
    /// Predictions TSV whose scores form the population.
    #[arg(long, conflicts_with = "uniform")]
    predictions: Option<PathBuf>,
    /// Use an evenly spaced grid of this many points over [0, 1].
    #[arg(long)]
    uniform: Option<usize>,
    /// Group sizes, comma-separated.
    #[arg(long, value_delimiter = ',', default_values_t = [4, 25, 100])]
    n: Vec<usize>,
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    #[command(flatten)]
    seed: SeedArgs,
}

fn write_output(path: &Path, contents: &str, force: bool) -> Result<()> {
    if path.exists() && !force {
        return Err(Error::Config(format!(
            "{} already exists; pass --force to overwrite",
            path.display()
        )));
    }
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::Io {
            path: parent.to_path_buf(),
            source: e,
        })?;
    }
    std::fs::write(path, contents).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn read_input(path: Option<&Path>) -> Result<String> {
    let mut s = String::new();
    match path {
        Some(p) => {
            s = std::fs::read_to_string(p).map_err(|e| Error::Io {
                path: p.to_path_buf(),
                source: e,
            })?
        }
        None => {
            std::io::stdin().read_to_string(&mut s).map_err(|e| Error::Io {
                path: "<stdin>".into(),
                source: e,
            })?;
        }
    }
    Ok(s)
}

fn segmenter_for(method: SegmentationMethod, deps: &MethodDeps) -> Result<Segmenter> {
    let mut seg = Segmenter::new().with_residue(deps.residue.into());
    if let Some(path) = &deps.dict {
        seg = seg.with_dictionary(Arc::new(MorphDictionary::load(path)?));
    }
    if let (Some(path), Some(_)) = (&deps.bpe, method.bpe_limit()) {
        seg = seg.with_bpe(method, Arc::new(BpeModel::load(path)?));
    }
    seg.check(method)?;
    Ok(seg)
}

fn cmd_stats(args: &StatsArgs) -> Result<()> {
    let parsed = load_corpus(&args.corpus.corpus, &args.corpus.options())?;
    let stats = compute_stats(&parsed.reviews);
    if args.csv {
        println!("{}\n{}", segtr::corpus::DatasetStats::CSV_HEADER, stats.to_csv_row());
    } else {
        println!("{stats}");
    }
    Ok(())
}

fn cmd_split(args: &SplitArgs) -> Result<()> {
    let parsed = load_corpus(&args.corpus.corpus, &args.corpus.options())?;
    let r = &args.ratios;
    let spec = SplitSpec::new(r.train_ratio, r.val_ratio, r.test_ratio, child_seed(args.seed.seed, Stream::Split))?;
    let parts = split_dataset(&parsed.reviews, &spec)?;
    for (name, reviews) in [("train", &parts.train), ("val", &parts.val), ("test", &parts.test)] {
        let mut buf = Vec::new();
        write_corpus(reviews, &mut buf).expect("writing to memory");
        write_output(&args.out.join(format!("{name}.tsv")), &String::from_utf8(buf).expect("utf-8"), args.force)?;
        println!("{name}\t{}", reviews.len());
    }
    Ok(())
}

fn cmd_segment(args: &SegmentArgs) -> Result<()> {
    let seg = segmenter_for(args.method, &args.deps)?;
    if args.check_form && args.method != SegmentationMethod::Syllable {
        return Err(Error::Config("--check-form only applies to the syllable method".into()));
    }
    let input = read_input(args.input.as_deref())?;
    let mut out = String::new();
    for line in input.lines() {
        let tokens = seg.segment(args.method, line)?;
        let rendered: Vec<String> = if args.check_form {
            tokens.iter().map(|t| format!("{t}/{}", classify_syllable(t))).collect()
        } else {
            tokens
        };
        out.push_str(&rendered.join(" "));
        out.push('\n');
    }
    match &args.out {
        Some(path) => write_output(path, &out, args.force),
        None => std::io::stdout().write_all(out.as_bytes()).map_err(|e| Error::Io {
            path: "<stdout>".into(),
            source: e,
        }),
    }
}

fn cmd_bpe_train(args: &BpeTrainArgs) -> Result<()> {
    let words: Vec<String> = match (&args.input, &args.corpus) {
        (_, Some(corpus)) => {
            let opts = CorpusOptions {
                scheme: args.scheme,
                lenient: args.lenient,
            };
            load_corpus(corpus, &opts)?.reviews.iter().flat_map(|r| tokenize_words(&r.text)).collect()
        }
        (Some(path), None) => read_input(Some(path))?.lines().flat_map(tokenize_words).collect(),
        (None, None) => read_input(None)?.lines().flat_map(tokenize_words).collect(),
    };
    let model = bpe_train(words, args.limit)?;
    write_output(&args.out, &model.to_file_string(), args.force)?;
    println!("merges\t{}\ntokens\t{}", model.merges().len(), model.tokens().len());
    Ok(())
}

fn cmd_train(args: &TrainArgs) -> Result<()> {
    let cfg = args.run.config(args.method)?;
    segtr::experiment::claim_dir(&cfg.run_dir(), cfg.force)?;
    let data = prepare(&cfg)?;
    let train_set = data.train.encode(&data.vocab, data.max_length);
    let val_set = data.val.encode(&data.vocab, data.max_length);
    let mut init = rng_for(cfg.seed, Stream::Init);
    let initial = Model::new(cfg.arch.clone(), data.max_length, data.vocab.len(), &mut init)?;
    let (model, history) = train(&initial, &train_set, &val_set, &cfg.train)?;
    let dir = cfg.run_dir();
    model.save(&dir.join("model.txt"))?;
    data.vocab.save(&dir.join("vocab.tsv"))?;
    write_output(&dir.join("history.csv"), &history.to_csv(), true)?;
    if let Some(bpe) = &data.bpe {
        bpe.save(&dir.join("bpe.merges"))?;
    }
    println!(
        "epochs\t{}\nsave_epoch\t{}\nval_accuracy\t{}\nstop\t{}\nout\t{}",
        history.epoch_count,
        history.save_epoch,
        history.best_val_accuracy().unwrap_or(0.0),
        history.stop_reason,
        dir.display()
    );
    Ok(())
}

fn cmd_predict(args: &PredictArgs) -> Result<()> {
    let seg = segmenter_for(args.method, &args.deps)?;
    let model = Model::load(&args.model)?;
    let vocab = Vocabulary::load(&args.vocab)?;
    if vocab.len() != model.vocab_size() {
        return Err(Error::Config(format!(
            "vocabulary has {} entries but the model expects {}",
            vocab.len(),
            model.vocab_size()
        )));
    }
    let parsed = load_corpus(&args.corpus.corpus, &args.corpus.options())?;
    let sentences = segtr::corpus::preprocess(&parsed.reviews, args.percentile);
    let sequences = sentences
        .iter()
        .map(|s| {
            let tokens = seg.segment_words(args.method, &tokenize_words(&s.text));
            encode_sentence(&vocab, s, &tokens, model.max_length())
        })
        .collect();
    let data = Dataset::new(sequences, sentences.iter().map(|s| s.label).collect())?;
    let preds = predict(&model, &data)?;
    write_output(&args.out, &predictions_to_string(&preds), args.force)?;
    if !preds.is_empty() {
        println!(
            "sentence_accuracy\t{:.4}\nreview_accuracy\t{:.4}",
            sentence_accuracy(&preds, 0.5)?,
            review_accuracy(&majority_vote(&preds))?
        );
    }
    Ok(())
}

fn cmd_experiment(args: &ExperimentArgs) -> Result<()> {
    let mut methods = Vec::new();
    for m in &args.method {
        if !methods.contains(m) {
            methods.push(*m);
        }
    }
    let cfgs = methods.iter().map(|&m| args.run.config(m)).collect::<Result<Vec<_>>>()?;
    let outcomes = run_experiments(&cfgs, args.jobs)?;
    println!("{REPORT_HEADER}");
    for o in &outcomes {
        println!("{}", o.record.to_csv_row()?);
    }
    Ok(())
}

fn parse_filter_set(s: &str) -> Result<Vec<usize>> {
    s.split('-')
        .map(|x| x.trim().parse::<usize>().map_err(|_| Error::Config(format!("bad filter set '{s}'"))))
        .collect()
}

fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let cfg = args.run.config(args.method)?;
    if !cfg.arch.kind.is_cnn() {
        return Err(Error::Config(format!("the sweep needs a CNN architecture, got {}", cfg.arch.kind)));
    }
    let mut grid = SweepGrid::default();
    if let Some(sets) = &args.filter_sets {
        grid.filter_sets = sets.iter().map(|s| parse_filter_set(s)).collect::<Result<_>>()?;
    }
    set(&mut grid.dropouts, args.dropouts.clone());
    set(&mut grid.l2s, args.l2s.clone());
    let out_path = cfg.output_dir.join("sweep.csv");
    if out_path.exists() && !cfg.force {
        return Err(Error::Config(format!("{} already exists; pass --force to overwrite", out_path.display())));
    }
    let max_filter = grid.filter_sets.iter().flatten().copied().max().unwrap_or(1);
    let mut sweep_cfg = cfg.clone();
    sweep_cfg.arch.filter_sizes = vec![1];
    let data = prepare(&sweep_cfg)?;
    let words: Vec<String> = data.train.sentences.iter().flat_map(|s| tokenize_words(&s.text)).collect();
    eprintln!("mean characters per word: {:.2}", mean_graphemes_per_word(&words));
    let max_length = data.max_length.max(2);
    if max_length < max_filter {
        log::info!("input length {max_length} is shorter than the largest filter {max_filter}");
    }
    let train_set = data.train.encode(&data.vocab, max_length);
    let val_set = data.val.encode(&data.vocab, max_length);
    let outcome = hyperparameter_sweep(&cfg.arch, &grid, &train_set, &val_set, max_length, data.vocab.len(), &cfg.train)?;
    for fs in &outcome.skipped {
        eprintln!("skipped filter set {fs:?}: longer than input length {max_length}");
    }
    let csv = outcome.to_csv();
    write_output(&out_path, &csv, cfg.force)?;
    print!("{csv}");
    Ok(())
}

fn cmd_report(args: &ReportArgs) -> Result<()> {
    if !args.input.is_file() {
        return Err(Error::Config(format!("{} does not exist", args.input.display())));
    }
    let rows = load_report(&args.input)?;
    let dw = rows.iter().map(|r| r.dataset.len()).max().unwrap_or(0).max(7);
    println!(
        "{:>3}  {:<dw$} {:<18} {:>6} {:>6} {:>6} {:>7} {:>4} {:>7} {:>7} {:>4} {:>4} {:>9} {:>9} {:>10}",
        "no", "dataset", "segmentation", "train", "val", "test", "vocab", "len", "score", "mv", "EC", "SE", "t_atd", "t_te", "mem"
    );
    for r in &rows {
        println!(
            "{:>3}  {:<dw$} {:<18} {:>6} {:>6} {:>6} {:>7} {:>4} {:>7.4} {:>7.4} {:>4} {:>4} {:>9.3} {:>9.3} {:>10}",
            r.no,
            r.dataset,
            r.segmentation.tag(),
            r.train,
            r.validation,
            r.test,
            r.vocabulary,
            r.max_review_length,
            r.score,
            r.mv_score,
            r.epoch_count,
            r.save_epoch,
            r.t_atd,
            r.t_te,
            r.mem_estimate
        );
    }
    Ok(())
}

fn cmd_clt(args: &CltArgs) -> Result<()> {
    let population: Vec<f64> = match (&args.predictions, args.uniform) {
        (Some(path), _) => load_predictions(path)?.iter().map(|p| p.score).collect(),
        (None, Some(k)) if k >= 2 => (0..k).map(|i| i as f64 / (k - 1) as f64).collect(),
        (None, Some(_)) => return Err(Error::Config("--uniform needs at least 2 points".into())),
        (None, None) => return Err(Error::Config("pass --predictions FILE or --uniform K".into())),
    };
    println!("n\tsigma_population\tsigma_of_means\tsigma_predicted\tratio\tmean_of_means");
    for &n in &args.n {
        let r = clt_check(&population, n, args.trials, args.seed.seed)?;
        let ratio = if r.sigma_predicted > 0.0 { r.sigma_of_means / r.sigma_predicted } else { 1.0 };
        println!(
            "{n}\t{:.6}\t{:.6}\t{:.6}\t{:.4}\t{:.6}",
            r.sigma_population, r.sigma_of_means, r.sigma_predicted, ratio, r.mean_of_means
        );
    }
    Ok(())
}

/// Splices `key=value` lines from `--config FILE` in front of the explicit
/// flags of the subcommand so that explicit flags override them.
fn expand_config(args: Vec<String>) -> Result<Vec<String>> {
    let Some(pos) = args.iter().position(|a| a == "--config" || a.starts_with("--config=")) else {
        return Ok(args);
    };
    let path = match args[pos].strip_prefix("--config=") {
        Some(p) => p.to_string(),
        None => args
            .get(pos + 1)
            .cloned()
            .ok_or_else(|| Error::Config("--config needs a file".into()))?,
    };
    let consumed = if args[pos].contains('=') { 1 } else { 2 };
    let text = std::fs::read_to_string(&path).map_err(|e| Error::Io {
        path: path.clone().into(),
        source: e,
    })?;
    let mut injected = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("{path}:{}: expected key=value", i + 1)))?;
        let flag = format!("--{}", key.trim().replace('_', "-"));
        match value.trim() {
            "true" => injected.push(flag),
            "false" => {}
            v => {
                injected.push(flag);
                injected.push(v.to_string());
            }
        }
    }
    let mut rest: Vec<String> = args[..pos].to_vec();
    rest.extend_from_slice(&args[pos + consumed..]);
    let sub = rest
        .iter()
        .skip(1)
        .position(|a| !a.starts_with('-'))
        .map(|p| p + 2)
        .unwrap_or(rest.len());
    rest.splice(sub..sub, injected);
    Ok(rest)
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Stats(a) => cmd_stats(a),
        Command::Split(a) => cmd_split(a),
        Command::Segment(a) => cmd_segment(a),
        Command::BpeTrain(a) => cmd_bpe_train(a),
        Command::Train(a) => cmd_train(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Experiment(a) => cmd_experiment(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Report(a) => cmd_report(a),
        Command::CltCheck(a) => cmd_clt(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = match expand_config(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("segtr: error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let cli = Cli::parse_from(args);
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("segtr: error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
