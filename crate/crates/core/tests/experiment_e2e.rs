use std::path::Path;

use segtr::experiment::{run_experiment, run_experiments, ExperimentConfig, INCOMPLETE_MARKER, REPORT_FILE};
use segtr::nn::{ArchitectureKind, Model};
use segtr::perf::load_report;
use segtr::segment::{SegmentationMethod, Vocabulary};

fn corpus() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data/synthetic_reviews.tsv")
}

fn config(method: SegmentationMethod, out: &Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(corpus(), method, ArchitectureKind::MeanPool, out);
    cfg.seed = 7;
    cfg.train.learning_rate = 1.0;
    cfg.train.batch_size = 16;
    cfg.train.max_epochs = 30;
    cfg.train.patience = 5;
    cfg
}

#[test]
fn synthetic_corpus_is_learned() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_experiment(&config(SegmentationMethod::WordToken, dir.path())).unwrap();
    assert!(out.sentence_accuracy >= 0.9, "{}", out.sentence_accuracy);
    assert!(out.review_accuracy >= out.sentence_accuracy - 0.02);
    assert_eq!(out.record.no, 1);
    assert!(out.history.save_epoch >= 1 && out.history.save_epoch <= out.history.epoch_count);
}

#[test]
fn artifacts_are_written_and_reloadable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(SegmentationMethod::WordToken, dir.path());
    let out = run_experiment(&cfg).unwrap();
    let run = cfg.run_dir();
    for file in ["predictions.tsv", "model.txt", "history.csv", "vocab.tsv", "histogram.csv"] {
        assert!(run.join(file).is_file(), "{file} missing");
    }
    assert!(!run.join(INCOMPLETE_MARKER).exists());
    let model = Model::load(&run.join("model.txt")).unwrap();
    let vocab = Vocabulary::load(&run.join("vocab.tsv")).unwrap();
    assert_eq!(model.vocab_size(), vocab.len());
    assert_eq!(out.predictions.len(), out.record.test);
    let rows = load_report(&dir.path().join(REPORT_FILE)).unwrap();
    assert_eq!(rows.len(), 1);
}

#[test]
fn identical_seeds_give_identical_rows() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let x = run_experiment(&config(SegmentationMethod::WordToken, a.path())).unwrap();
    let y = run_experiment(&config(SegmentationMethod::WordToken, b.path())).unwrap();
    assert_eq!(x.record.without_timings(), y.record.without_timings());
    assert_eq!(x.predictions, y.predictions);
}

#[test]
fn rerun_without_force_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(SegmentationMethod::Character, dir.path());
    run_experiment(&cfg).unwrap();
    let err = run_experiment(&cfg).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    cfg.force = true;
    let again = run_experiment(&cfg).unwrap();
    assert_eq!(again.record.no, 2);
}

#[test]
fn parallel_runs_append_in_input_order() {
    let dir = tempfile::tempdir().unwrap();
    let cfgs = vec![
        config(SegmentationMethod::Syllable, dir.path()),
        config(SegmentationMethod::WordToken, dir.path()),
    ];
    let outcomes = run_experiments(&cfgs, 2).unwrap();
    assert_eq!(outcomes.len(), 2);
    let rows = load_report(&dir.path().join(REPORT_FILE)).unwrap();
    let methods: Vec<_> = rows.iter().map(|r| (r.no, r.segmentation)).collect();
    assert_eq!(methods, [(1, SegmentationMethod::Syllable), (2, SegmentationMethod::WordToken)]);
}

#[test]
fn morph_method_without_dictionary_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let err = run_experiment(&config(SegmentationMethod::Lemma, dir.path())).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(!dir.path().join(REPORT_FILE).exists());
}
