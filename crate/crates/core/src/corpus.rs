//! Review ingestion and preprocessing: rating mapping, sentence splitting,
//! long-sentence breaking, dataset statistics and train/val/test splits.
//!
//! Word counts here are whitespace pieces that carry at least one
//! alphanumeric character (see [`crate::text::word_count`]); vocabulary
//! statistics use the word tokenizer with punctuation tokens removed.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::segment::tokenize_words;
use crate::text::{is_punctuation_token, normalize_whitespace, word_count};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Polarity {
    Negative = 0,
    Positive = 1,
}

impl Polarity {
    pub fn as_u8(self) -> u8 {
        self as u8
    }

    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            0 => Some(Polarity::Negative),
            1 => Some(Polarity::Positive),
            _ => None,
        }
    }

    /// Target value for binary cross-entropy.
    pub fn target(self) -> f64 {
        f64::from(self.as_u8())
    }
}

/// Rating scales of the two review sources.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RatingScheme {
    /// 0.5 to 5.0 in half steps; 2.5 to 3.5 is neutral and dropped.
    MovieReviews,
    /// Integer 1 to 5; 1-3 negative, 4-5 positive.
    ProductReviews,
}

impl FromStr for RatingScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "movie" | "moviereviews" => Ok(RatingScheme::MovieReviews),
            "product" | "productreviews" => Ok(RatingScheme::ProductReviews),
            _ => Err(Error::Config(format!("unknown rating scheme '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RatingClass {
    Labeled(Polarity),
    Excluded,
}

pub fn map_rating_to_polarity(rating: f64, scheme: RatingScheme) -> Result<RatingClass> {
    match scheme {
        RatingScheme::MovieReviews => {
            let halves = rating * 2.0;
            if !(0.5..=5.0).contains(&rating) || halves.fract() != 0.0 {
                return Err(Error::InputDomain(format!(
                    "movie rating {rating} is not in 0.5..5.0 with 0.5 steps"
                )));
            }
            Ok(if rating <= 2.0 {
                RatingClass::Labeled(Polarity::Negative)
            } else if rating <= 3.5 {
                RatingClass::Excluded
            } else {
                RatingClass::Labeled(Polarity::Positive)
            })
        }
        RatingScheme::ProductReviews => {
            if !(1.0..=5.0).contains(&rating) || rating.fract() != 0.0 {
                return Err(Error::InputDomain(format!(
                    "product rating {rating} is not an integer in 1..5"
                )));
            }
            Ok(if rating <= 3.0 {
                RatingClass::Labeled(Polarity::Negative)
            } else {
                RatingClass::Labeled(Polarity::Positive)
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Review {
    pub id: u64,
    pub label: Polarity,
    pub text: String,
}

impl Review {
    pub fn new(id: u64, label: Polarity, text: impl Into<String>) -> Self {
        Review {
            id,
            label,
            text: text.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentenceRecord {
    pub review_id: u64,
    pub index: usize,
    pub text: String,
    pub label: Polarity,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DatasetStats {
    pub vocab_size: usize,
    pub avg_sentence_length: f64,
    pub max_review_size: usize,
}

impl fmt::Display for DatasetStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "vocab_size\t{}", self.vocab_size)?;
        writeln!(f, "avg_sentence_length\t{}", self.avg_sentence_length)?;
        write!(f, "max_review_size\t{}", self.max_review_size)
    }
}

impl DatasetStats {
    pub const CSV_HEADER: &'static str = "vocab_size,avg_sentence_length,max_review_size";

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{}",
            self.vocab_size, self.avg_sentence_length, self.max_review_size
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train_ratio: f64,
    pub val_ratio: f64,
    pub test_ratio: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(train_ratio: f64, val_ratio: f64, test_ratio: f64, seed: u64) -> Result<Self> {
        let spec = SplitSpec {
            train_ratio,
            val_ratio,
            test_ratio,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let ratios = [self.train_ratio, self.val_ratio, self.test_ratio];
        if ratios.iter().any(|r| !r.is_finite() || *r <= 0.0) {
            return Err(Error::Config(format!("split ratios must be positive, got {ratios:?}")));
        }
        let sum: f64 = ratios.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("split ratios sum to {sum}, expected 1.0")));
        }
        Ok(())
    }
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_ratio: 0.8,
            val_ratio: 0.1,
            test_ratio: 0.1,
            seed: 0,
        }
    }
}

const TERMINATORS: [char; 4] = ['.', '!', '?', '…'];

/// Splits after a run of terminators (`.`, `!`, `?`, `…`) that is followed
/// by whitespace or the end of the text. Decimal points are never followed
/// by whitespace and so never split.
pub fn split_sentences(review: &Review) -> Vec<SentenceRecord> {
    let normalized = normalize_whitespace(&review.text);
    let mut sentences = Vec::new();
    let mut current: Vec<&str> = Vec::new();
    for piece in normalized.split(' ').filter(|p| !p.is_empty()) {
        current.push(piece);
        if piece.ends_with(TERMINATORS) {
            sentences.push(current.join(" "));
            current.clear();
        }
    }
    if !current.is_empty() {
        sentences.push(current.join(" "));
    }
    sentences
        .into_iter()
        .enumerate()
        .map(|(index, text)| SentenceRecord {
            review_id: review.id,
            index,
            text,
            label: review.label,
        })
        .collect()
}

/// Nearest-rank percentile: the smallest value `x` such that at least
/// `ceil(p * n)` of the values are `<= x`.
pub fn nearest_rank_percentile(values: &[usize], percentile: f64) -> Option<usize> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    let n = sorted.len();
    // guard against 0.995 * 1000 landing a hair above 995
    let rank = ((percentile * n as f64) - 1e-9).ceil().clamp(1.0, n as f64) as usize;
    Some(sorted[rank - 1])
}

/// Chunks every sentence longer than the percentile cutoff into
/// consecutive windows of at most `cutoff` words, renumbering indices
/// per review. Returns the sentences and the cutoff used.
pub fn break_long_sentences_with_cutoff(
    sentences: &[SentenceRecord],
    percentile: f64,
) -> (Vec<SentenceRecord>, usize) {
    let lengths: Vec<usize> = sentences.iter().map(|s| word_count(&s.text)).collect();
    let Some(cutoff) = nearest_rank_percentile(&lengths, percentile) else {
        return (Vec::new(), 0);
    };
    let cutoff = cutoff.max(1);

    let mut out = Vec::with_capacity(sentences.len());
    let mut next_index: BTreeMap<u64, usize> = BTreeMap::new();
    let mut push = |out: &mut Vec<SentenceRecord>, src: &SentenceRecord, text: String| {
        let idx = next_index.entry(src.review_id).or_insert(0);
        out.push(SentenceRecord {
            review_id: src.review_id,
            index: *idx,
            text,
            label: src.label,
        });
        *idx += 1;
    };

    for (sentence, &len) in sentences.iter().zip(&lengths) {
        if len <= cutoff {
            push(&mut out, sentence, sentence.text.clone());
            continue;
        }
        let mut window: Vec<&str> = Vec::new();
        let mut words = 0;
        for piece in sentence.text.split_whitespace() {
            let is_word = !is_punctuation_token(piece);
            if is_word && words == cutoff {
                push(&mut out, sentence, window.join(" "));
                window.clear();
                words = 0;
            }
            window.push(piece);
            if is_word {
                words += 1;
            }
        }
        if !window.is_empty() {
            push(&mut out, sentence, window.join(" "));
        }
    }
    (out, cutoff)
}

pub fn break_long_sentences(sentences: &[SentenceRecord], percentile: f64) -> Vec<SentenceRecord> {
    break_long_sentences_with_cutoff(sentences, percentile).0
}

pub fn compute_stats(reviews: &[Review]) -> DatasetStats {
    if reviews.is_empty() {
        return DatasetStats::default();
    }
    let mut vocab: HashSet<String> = HashSet::new();
    let mut sentence_words = 0usize;
    let mut sentence_count = 0usize;
    let mut max_review_size = 0usize;
    for review in reviews {
        vocab.extend(
            tokenize_words(&review.text)
                .into_iter()
                .filter(|t| !is_punctuation_token(t)),
        );
        max_review_size = max_review_size.max(word_count(&review.text));
        for sentence in split_sentences(review) {
            sentence_words += word_count(&sentence.text);
            sentence_count += 1;
        }
    }
    let avg_sentence_length = if sentence_count == 0 {
        0.0
    } else {
        sentence_words as f64 / sentence_count as f64
    };
    DatasetStats {
        vocab_size: vocab.len(),
        avg_sentence_length,
        max_review_size,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partitions {
    pub train: Vec<Review>,
    pub val: Vec<Review>,
    pub test: Vec<Review>,
}

/// Review-granular split. Validation and test sizes are `floor(n * ratio)`;
/// the remainder goes to train. Order comes from a seeded shuffle.
pub fn split_dataset(reviews: &[Review], spec: &SplitSpec) -> Result<Partitions> {
    spec.validate()?;
    let n = reviews.len();
    if n < 3 {
        return Err(Error::InsufficientData(format!(
            "need at least 3 reviews to split, got {n}"
        )));
    }
    let floor_of = |ratio: f64| ((n as f64) * ratio + 1e-9).floor() as usize;
    let val_n = floor_of(spec.val_ratio);
    let test_n = floor_of(spec.test_ratio);
    let train_n = n - val_n - test_n;

    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    order.shuffle(&mut rng);

    let pick = |range: std::ops::Range<usize>| -> Vec<Review> {
        order[range].iter().map(|&i| reviews[i].clone()).collect()
    };
    Ok(Partitions {
        train: pick(0..train_n),
        val: pick(train_n..train_n + val_n),
        test: pick(train_n + val_n..n),
    })
}

/// Outcome of reading a corpus file.
#[derive(Debug, Clone, Default)]
pub struct ParsedCorpus {
    pub reviews: Vec<Review>,
    /// Neutral ratings dropped at ingestion.
    pub excluded: usize,
    /// Lines skipped under lenient parsing: (line number, message).
    pub skipped: Vec<(usize, String)>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CorpusOptions {
    pub scheme: Option<RatingScheme>,
    pub lenient: bool,
}

fn parse_corpus_line(line: &str, options: &CorpusOptions) -> std::result::Result<Option<(Polarity, String)>, String> {
    let (label, text) = line
        .split_once('\t')
        .ok_or_else(|| "expected 'label<TAB>text'".to_string())?;
    let text = text.trim();
    if text.is_empty() {
        return Err("empty review text".into());
    }
    let label = label.trim();
    let polarity = if let Some(rating) = label.strip_prefix("r:") {
        let scheme = options
            .scheme
            .ok_or_else(|| "rating label requires a rating scheme".to_string())?;
        let rating: f64 = rating
            .parse()
            .map_err(|_| format!("invalid rating '{rating}'"))?;
        match map_rating_to_polarity(rating, scheme).map_err(|e| e.to_string())? {
            RatingClass::Labeled(p) => p,
            RatingClass::Excluded => return Ok(None),
        }
    } else {
        match label {
            "0" => Polarity::Negative,
            "1" => Polarity::Positive,
            other => return Err(format!("invalid label '{other}'")),
        }
    };
    Ok(Some((polarity, text.to_string())))
}

/// Reads `label<TAB>text` lines. Review ids are 1-based line numbers.
pub fn parse_corpus<R: BufRead>(reader: R, source_name: &str, options: &CorpusOptions) -> Result<ParsedCorpus> {
    let mut parsed = ParsedCorpus::default();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::io(source_name, e))?;
        let line = line.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() {
            continue;
        }
        match parse_corpus_line(line, options) {
            Ok(Some((label, text))) => parsed.reviews.push(Review::new(line_no as u64, label, text)),
            Ok(None) => parsed.excluded += 1,
            Err(message) if options.lenient => parsed.skipped.push((line_no, message)),
            Err(message) => return Err(Error::parse(source_name, line_no, message)),
        }
    }
    Ok(parsed)
}

pub fn parse_corpus_str(input: &str, options: &CorpusOptions) -> Result<ParsedCorpus> {
    parse_corpus(input.as_bytes(), "<input>", options)
}

pub fn load_corpus(path: &Path, options: &CorpusOptions) -> Result<ParsedCorpus> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(std::io::BufReader::new(file), &path.display().to_string(), options)
}

pub fn write_corpus<W: Write>(reviews: &[Review], mut writer: W) -> std::io::Result<()> {
    for review in reviews {
        writeln!(writer, "{}\t{}", review.label.as_u8(), normalize_whitespace(&review.text))?;
    }
    Ok(())
}

/// Sentence decomposition for a whole partition, followed by long-sentence
/// breaking at the given percentile.
pub fn preprocess(reviews: &[Review], percentile: f64) -> Vec<SentenceRecord> {
    let sentences: Vec<SentenceRecord> = reviews.iter().flat_map(split_sentences).collect();
    break_long_sentences(&sentences, percentile)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn review(id: u64, text: &str) -> Review {
        Review::new(id, Polarity::Positive, text)
    }

    fn texts(records: &[SentenceRecord]) -> Vec<&str> {
        records.iter().map(|s| s.text.as_str()).collect()
    }

    #[test]
    fn rating_mapping() {
        use RatingClass::*;
        let movie = RatingScheme::MovieReviews;
        let product = RatingScheme::ProductReviews;
        assert_eq!(map_rating_to_polarity(4.5, movie).unwrap(), Labeled(Polarity::Positive));
        assert_eq!(map_rating_to_polarity(3.0, movie).unwrap(), Excluded);
        assert_eq!(map_rating_to_polarity(2.5, movie).unwrap(), Excluded);
        assert_eq!(map_rating_to_polarity(3.5, movie).unwrap(), Excluded);
        assert_eq!(map_rating_to_polarity(2.0, movie).unwrap(), Labeled(Polarity::Negative));
        assert_eq!(map_rating_to_polarity(0.5, movie).unwrap(), Labeled(Polarity::Negative));
        assert_eq!(map_rating_to_polarity(3.0, product).unwrap(), Labeled(Polarity::Negative));
        assert_eq!(map_rating_to_polarity(4.0, product).unwrap(), Labeled(Polarity::Positive));
        assert!(matches!(map_rating_to_polarity(0.0, movie), Err(Error::InputDomain(_))));
        assert!(matches!(map_rating_to_polarity(4.25, movie), Err(Error::InputDomain(_))));
        assert!(matches!(map_rating_to_polarity(3.5, product), Err(Error::InputDomain(_))));
        assert!(matches!(map_rating_to_polarity(6.0, product), Err(Error::InputDomain(_))));
    }

    #[test]
    fn sentence_splitting() {
        let r = review(1, "iyi film. tavsiye ederim!");
        assert_eq!(texts(&split_sentences(&r)), vec!["iyi film.", "tavsiye ederim!"]);

        let r = review(2, "harika");
        assert_eq!(texts(&split_sentences(&r)), vec!["harika"]);

        let r = review(3, "ne? evet. hayır!");
        let s = split_sentences(&r);
        assert_eq!(s.iter().map(|s| s.index).collect::<Vec<_>>(), vec![0, 1, 2]);
        assert!(s.iter().all(|s| s.review_id == 3 && s.label == Polarity::Positive));
    }

    #[test]
    fn splitter_keeps_decimals_and_terminator_runs() {
        let r = review(1, "puan 3.5 verdim. çok   kötü!!! bilir... ama");
        assert_eq!(
            texts(&split_sentences(&r)),
            vec!["puan 3.5 verdim.", "çok kötü!!!", "bilir...", "ama"]
        );
    }

    #[test]
    fn long_sentences_are_chunked() {
        let short = "a b c d e f g h i j";
        let long = (0..40).map(|i| format!("w{i}")).collect::<Vec<_>>().join(" ");
        let mut sentences = Vec::new();
        for i in 0..995u64 {
            sentences.push(SentenceRecord { review_id: i, index: 0, text: short.into(), label: Polarity::Negative });
        }
        for i in 995..1000u64 {
            sentences.push(SentenceRecord { review_id: i, index: 0, text: long.clone(), label: Polarity::Positive });
        }
        let (out, cutoff) = break_long_sentences_with_cutoff(&sentences, 0.995);
        assert_eq!(cutoff, 10);
        assert_eq!(out.len(), 995 + 5 * 4);
        let chunks: Vec<_> = out.iter().filter(|s| s.review_id == 999).collect();
        assert_eq!(chunks.iter().map(|s| s.index).collect::<Vec<_>>(), vec![0, 1, 2, 3]);
        assert_eq!(chunks[3].text, "w30 w31 w32 w33 w34 w35 w36 w37 w38 w39");
    }

    #[test]
    fn chunking_degenerate_cases() {
        let rec = |t: &str| SentenceRecord { review_id: 1, index: 0, text: t.into(), label: Polarity::Positive };
        let same: Vec<_> = (0..20).map(|_| rec("a b c d e")).collect();
        assert_eq!(break_long_sentences(&same, 0.995).len(), 20);
        let single = vec![rec("a b c d e f g")];
        assert_eq!(break_long_sentences(&single, 0.995), single);
        assert!(break_long_sentences(&[], 0.995).is_empty());
    }

    #[test]
    fn stats() {
        let s = compute_stats(&[review(1, "a b. a")]);
        assert_eq!(s.vocab_size, 2);
        assert_eq!(s.max_review_size, 3);
        assert!((s.avg_sentence_length - 1.5).abs() < 1e-12);
        assert_eq!(compute_stats(&[]), DatasetStats::default());
        let s = compute_stats(&[review(1, "x y"), review(2, "x y")]);
        assert_eq!((s.vocab_size, s.max_review_size), (2, 2));
        assert!((s.avg_sentence_length - 2.0).abs() < 1e-12);
    }

    #[test]
    fn split_sizes() {
        let reviews: Vec<_> = (0..10).map(|i| review(i, "x")).collect();
        let spec = SplitSpec::new(0.8, 0.1, 0.1, 7).unwrap();
        let p = split_dataset(&reviews, &spec).unwrap();
        assert_eq!((p.train.len(), p.val.len(), p.test.len()), (8, 1, 1));

        let reviews: Vec<_> = (0..25).map(|i| review(i, "x")).collect();
        let p = split_dataset(&reviews, &spec).unwrap();
        assert_eq!((p.train.len(), p.val.len(), p.test.len()), (21, 2, 2));
        assert_eq!(p, split_dataset(&reviews, &spec).unwrap());

        let two: Vec<_> = (0..2).map(|i| review(i, "x")).collect();
        assert!(matches!(split_dataset(&two, &spec), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn split_spec_validation() {
        assert!(SplitSpec::new(0.8, 0.1, 0.1, 0).is_ok());
        assert!(matches!(SplitSpec::new(0.8, 0.2, 0.1, 0), Err(Error::Config(_))));
        assert!(matches!(SplitSpec::new(1.0, 0.0, 0.0, 0), Err(Error::Config(_))));
    }

    #[test]
    fn corpus_file_parsing() {
        let input = "1\tiyi film\n0\tkötü\n\nr:3.0\tidare eder\nr:4.5\tsüper\n";
        let opts = CorpusOptions { scheme: Some(RatingScheme::MovieReviews), lenient: false };
        let parsed = parse_corpus_str(input, &opts).unwrap();
        assert_eq!(parsed.reviews.len(), 3);
        assert_eq!(parsed.excluded, 1);
        assert_eq!(parsed.reviews[2].id, 5);
        assert_eq!(parsed.reviews[2].label, Polarity::Positive);

        let bad = "1\tok\n2\tbroken\nnotab\n";
        let err = parse_corpus_str(bad, &CorpusOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let lenient = CorpusOptions { scheme: None, lenient: true };
        let parsed = parse_corpus_str(bad, &lenient).unwrap();
        assert_eq!(parsed.reviews.len(), 1);
        assert_eq!(parsed.skipped.iter().map(|s| s.0).collect::<Vec<_>>(), vec![2, 3]);

        let err = parse_corpus_str("r:4\tx\n", &CorpusOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }
}
