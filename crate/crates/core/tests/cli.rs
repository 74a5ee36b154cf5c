use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn segtr(dir: &Path, args: &[&str], stdin: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_segtr"))
        .args(args)
        .current_dir(dir)
        .env_remove("SEGTR_SEED")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn running_example(i: usize) -> String {
    std::fs::read_to_string(data("running_example.txt")).unwrap().lines().nth(i).unwrap().to_string()
}

#[test]
fn segment_renders_syllables() {
    let dir = tempfile::tempdir().unwrap();
    let out = segtr(dir.path(), &["segment", "--method", "syllable"], &running_example(1));
    assert!(out.status.success());
    assert!(stdout(&out).starts_with("ge çen haf ta e li mi ze u laş tı ,"));
}

#[test]
fn segment_with_dictionary_and_check_form() {
    let dir = tempfile::tempdir().unwrap();
    let dict = data("fixture_dict.tsv");
    let out = segtr(dir.path(), &["segment", "--method", "stem-suffix", "--dict", dict.to_str().unwrap()], &running_example(1));
    assert!(out.status.success());
    assert!(stdout(&out).contains("yık Pos Iyor A3sg"));

    let out = segtr(dir.path(), &["segment", "--method", "syllable", "--check-form"], "geçen");
    assert_eq!(stdout(&out).trim(), "ge/CV çen/CVC");
    let out = segtr(dir.path(), &["segment", "--method", "character", "--check-form"], "geçen");
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bpe_train_reports_merges_and_writes_a_model() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("ab.txt"), "abab\n".repeat(5)).unwrap();
    let out = segtr(dir.path(), &["bpe-train", "--in", "ab.txt", "--limit", "4", "--out", "m.txt"], "");
    assert!(out.status.success());
    assert_eq!(stdout(&out), "merges\t2\ntokens\t4\n");
    let out = segtr(dir.path(), &["segment", "--method", "bpe-1k", "--bpe", "m.txt"], "ababab");
    assert_eq!(stdout(&out).trim(), "abab ab");
}

#[test]
fn existing_outputs_need_force() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("ab.txt"), "abab\n".repeat(5)).unwrap();
    let args = ["bpe-train", "--in", "ab.txt", "--limit", "4", "--out", "m.txt"];
    assert!(segtr(dir.path(), &args, "").status.success());
    let again = segtr(dir.path(), &args, "");
    assert_eq!(again.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&again.stderr).contains("--force"));
    let mut forced = args.to_vec();
    forced.push("--force");
    assert!(segtr(dir.path(), &forced, "").status.success());
}

#[test]
fn stats_on_an_empty_corpus_are_zero() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("empty.tsv"), "").unwrap();
    let out = segtr(dir.path(), &["stats", "--corpus", "empty.tsv", "--csv"], "");
    assert!(out.status.success());
    assert_eq!(stdout(&out), "vocab_size,avg_sentence_length,max_review_size\n0,0,0\n");
}

#[test]
fn malformed_corpus_fails_unless_lenient() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.tsv"), "1\tiyi film\nnot a row\n0\tkötü\n").unwrap();
    let strict = segtr(dir.path(), &["stats", "--corpus", "bad.tsv"], "");
    assert_eq!(strict.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&strict.stderr).contains("bad.tsv"));
    let lenient = segtr(dir.path(), &["stats", "--corpus", "bad.tsv", "--lenient"], "");
    assert!(lenient.status.success());
}

#[test]
fn morph_method_without_dictionary_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = segtr(dir.path(), &["segment", "--method", "lemma"], "film");
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.cfg"), "# defaults\nmethod = word-token\n").unwrap();
    let out = segtr(dir.path(), &["--config", "run.cfg", "segment"], "nerde!");
    assert_eq!(stdout(&out).trim(), "nerde !");
    let out = segtr(dir.path(), &["--config", "run.cfg", "segment", "--method", "character"], "ab");
    assert_eq!(stdout(&out).trim(), "a b");
}

#[test]
fn split_writes_three_partitions() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = data("synthetic_reviews.tsv");
    let out = segtr(dir.path(), &["split", "--corpus", corpus.to_str().unwrap(), "--out", "parts"], "");
    assert!(out.status.success());
    assert_eq!(stdout(&out), "train\t400\nval\t50\ntest\t50\n");
    let lines = |n: &str| std::fs::read_to_string(dir.path().join("parts").join(n)).unwrap().lines().count();
    assert_eq!(lines("train.tsv") + lines("val.tsv") + lines("test.tsv"), 500);
}

#[test]
fn experiment_then_predict_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = data("synthetic_reviews.tsv");
    let corpus = corpus.to_str().unwrap();
    let run = [
        "experiment", "--corpus", corpus, "--method", "word-token", "--arch", "mean-pool", "--lr", "1.0", "--batch-size", "16",
        "--epochs", "10", "--out", "runs",
    ];
    let out = segtr(dir.path(), &run, "");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("runs/report.csv").is_file());

    let out = segtr(
        dir.path(),
        &[
            "predict", "--corpus", corpus, "--method", "word-token", "--model", "runs/word-token/model.txt", "--vocab",
            "runs/word-token/vocab.tsv", "--out", "p.tsv",
        ],
        "",
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("sentence_accuracy"));

    let out = segtr(dir.path(), &["clt-check", "--predictions", "p.tsv", "--n", "4,25"], "");
    assert!(out.status.success());
    assert_eq!(stdout(&out).lines().count(), 3);

    let out = segtr(dir.path(), &["report", "--in", "runs/report.csv"], "");
    assert!(stdout(&out).contains("word-token"));
}

#[test]
fn sweep_deduplicates_and_skips() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = data("synthetic_reviews.tsv");
    let out = segtr(
        dir.path(),
        &[
            "sweep", "--corpus", corpus.to_str().unwrap(), "--method", "word-token", "--filter-sets", "2,2,40", "--dropouts",
            "0.5", "--l2s", "0", "--epochs", "1", "--out", "sw",
        ],
        "",
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("sw/sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "filter_sizes,dropout,l2,val_accuracy,epochs");
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("2,0.5,0,"));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("skipped filter set"));
    assert!(stderr.contains("mean characters per word"));
}

#[test]
fn clt_check_on_a_uniform_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = segtr(dir.path(), &["clt-check", "--uniform", "10000", "--n", "25", "--trials", "2000"], "");
    assert!(out.status.success());
    let row = stdout(&out).lines().nth(1).unwrap().to_string();
    let ratio: f64 = row.split('\t').nth(4).unwrap().parse().unwrap();
    assert!((ratio - 1.0).abs() < 0.1, "{row}");
}
