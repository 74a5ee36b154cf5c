//! Word tokenization, the segmentation method registry, vocabulary
//! building and fixed-length id encoding.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::morphdict::{segment_morph, MorphDictionary, MorphVariant};
use crate::subword::{self, BpeModel, ResiduePolicy};
use crate::text::{graphemes, is_punctuation_grapheme, turkish_lowercase};

pub const PAD_TOKEN: &str = "<PAD>";
pub const UNK_TOKEN: &str = "<UNK>";
pub const PAD_ID: u32 = 0;
pub const UNK_ID: u32 = 1;

/// Lowercases (Turkish rules) and splits on whitespace; every punctuation
/// grapheme becomes a token of its own.
pub fn tokenize_words(text: &str) -> Vec<String> {
    let lowered = turkish_lowercase(text);
    let mut tokens = Vec::new();
    for piece in lowered.split_whitespace() {
        let mut current = String::new();
        for g in graphemes(piece) {
            if is_punctuation_grapheme(g) {
                if !current.is_empty() {
                    tokens.push(std::mem::take(&mut current));
                }
                tokens.push(g.to_string());
            } else {
                current.push_str(g);
            }
        }
        if !current.is_empty() {
            tokens.push(current);
        }
    }
    tokens
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SegmentationMethod {
    WordToken,
    Lemma,
    LemmaSuffix,
    LemmaSuffixMeta,
    Stem,
    StemSuffix,
    StemSuffixMeta,
    TokenMeta,
    Character,
    Syllable,
    Bpe1k,
    Bpe5k,
    Bpe30k,
    Hybrid,
}

impl SegmentationMethod {
    pub const ALL: [SegmentationMethod; 14] = [
        SegmentationMethod::WordToken,
        SegmentationMethod::Lemma,
        SegmentationMethod::LemmaSuffix,
        SegmentationMethod::LemmaSuffixMeta,
        SegmentationMethod::Stem,
        SegmentationMethod::StemSuffix,
        SegmentationMethod::StemSuffixMeta,
        SegmentationMethod::TokenMeta,
        SegmentationMethod::Character,
        SegmentationMethod::Syllable,
        SegmentationMethod::Bpe1k,
        SegmentationMethod::Bpe5k,
        SegmentationMethod::Bpe30k,
        SegmentationMethod::Hybrid,
    ];

    pub fn tag(self) -> &'static str {
        use SegmentationMethod::*;
        match self {
            WordToken => "word-token",
            Lemma => "lemma",
            LemmaSuffix => "lemma-suffix",
            LemmaSuffixMeta => "lemma-suffix-meta",
            Stem => "stem",
            StemSuffix => "stem-suffix",
            StemSuffixMeta => "stem-suffix-meta",
            TokenMeta => "token-meta",
            Character => "character",
            Syllable => "syllable",
            Bpe1k => "bpe-1k",
            Bpe5k => "bpe-5k",
            Bpe30k => "bpe-30k",
            Hybrid => "hybrid",
        }
    }

    pub fn morph_variant(self) -> Option<MorphVariant> {
        use SegmentationMethod::*;
        Some(match self {
            Lemma => MorphVariant::Lemma,
            LemmaSuffix => MorphVariant::LemmaSuffix,
            LemmaSuffixMeta => MorphVariant::LemmaSuffixMeta,
            Stem => MorphVariant::Stem,
            StemSuffix => MorphVariant::StemSuffix,
            StemSuffixMeta => MorphVariant::StemSuffixMeta,
            TokenMeta => MorphVariant::TokenMeta,
            _ => return None,
        })
    }

    /// Target vocabulary size for the BPE methods.
    pub fn bpe_limit(self) -> Option<usize> {
        match self {
            SegmentationMethod::Bpe1k => Some(1_000),
            SegmentationMethod::Bpe5k => Some(5_000),
            SegmentationMethod::Bpe30k => Some(30_000),
            _ => None,
        }
    }

    pub fn needs_dictionary(self) -> bool {
        self.morph_variant().is_some() || self == SegmentationMethod::Hybrid
    }
}

impl fmt::Display for SegmentationMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for SegmentationMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s.chars().filter(|c| c.is_alphanumeric()).collect::<String>().to_lowercase();
        SegmentationMethod::ALL
            .into_iter()
            .find(|m| m.tag().replace('-', "") == key)
            .ok_or_else(|| Error::Config(format!("unknown segmentation method '{s}'")))
    }
}

impl serde::Serialize for SegmentationMethod {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.tag())
    }
}

impl<'de> serde::Deserialize<'de> for SegmentationMethod {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Shared, immutable dependencies of the segmentation methods.
#[derive(Debug, Clone, Default)]
pub struct Segmenter {
    dictionary: Option<Arc<MorphDictionary>>,
    bpe: HashMap<SegmentationMethod, Arc<BpeModel>>,
    residue: ResiduePolicy,
}

impl Segmenter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_dictionary(mut self, dict: Arc<MorphDictionary>) -> Self {
        self.dictionary = Some(dict);
        self
    }

    pub fn with_bpe(mut self, method: SegmentationMethod, model: Arc<BpeModel>) -> Self {
        self.bpe.insert(method, model);
        self
    }

    pub fn with_residue(mut self, residue: ResiduePolicy) -> Self {
        self.residue = residue;
        self
    }

    pub fn dictionary(&self) -> Option<&MorphDictionary> {
        self.dictionary.as_deref()
    }

    pub fn check(&self, method: SegmentationMethod) -> Result<()> {
        if method.needs_dictionary() && self.dictionary.is_none() {
            return Err(Error::Config(format!("method {method} requires a morphological dictionary")));
        }
        if method.bpe_limit().is_some() && !self.bpe.contains_key(&method) {
            return Err(Error::Config(format!("method {method} requires a trained BPE model")));
        }
        Ok(())
    }

    pub fn segment(&self, method: SegmentationMethod, text: &str) -> Result<Vec<String>> {
        self.check(method)?;
        let words = tokenize_words(text);
        Ok(self.segment_words(method, &words))
    }

    /// Segments already tokenized words. Callers must have passed
    /// [`Segmenter::check`] for `method`.
    pub fn segment_words(&self, method: SegmentationMethod, words: &[String]) -> Vec<String> {
        use SegmentationMethod::*;
        match method {
            WordToken => words.to_vec(),
            Character => subword::texts(subword::segment_characters(words)),
            Syllable => subword::texts(subword::syllabify_tokens(words)),
            Bpe1k | Bpe5k | Bpe30k => {
                let model = &self.bpe[&method];
                subword::texts(subword::bpe_encode(model, words, self.residue))
            }
            Hybrid => {
                let dict = self.dictionary.as_deref().expect("checked");
                let mut out = Vec::with_capacity(words.len());
                for w in words {
                    if dict.is_known(w) {
                        out.push(w.clone());
                    } else {
                        out.extend(graphemes(w).map(str::to_string));
                    }
                }
                out
            }
            _ => {
                let dict = self.dictionary.as_deref().expect("checked");
                let variant = method.morph_variant().expect("morph method");
                segment_morph(dict, variant, words)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    token_to_id: HashMap<String, u32>,
    frequencies: Vec<u64>,
    min_frequency: u64,
}

impl Vocabulary {
    fn from_sorted(entries: Vec<(String, u64)>, min_frequency: u64) -> Self {
        let mut tokens = vec![PAD_TOKEN.to_string(), UNK_TOKEN.to_string()];
        let mut frequencies = vec![0, 0];
        for (t, f) in entries {
            tokens.push(t);
            frequencies.push(f);
        }
        let token_to_id = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
        Vocabulary {
            tokens,
            token_to_id,
            frequencies,
            min_frequency,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn min_frequency(&self) -> u64 {
        self.min_frequency
    }

    pub fn id(&self, token: &str) -> u32 {
        self.token_to_id.get(token).copied().unwrap_or(UNK_ID)
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn frequency(&self, token: &str) -> Option<u64> {
        self.token_to_id.get(token).map(|&i| self.frequencies[i as usize])
    }

    pub fn contains(&self, token: &str) -> bool {
        self.token_to_id.contains_key(token)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u32, u64)> {
        self.tokens
            .iter()
            .zip(&self.frequencies)
            .enumerate()
            .map(|(i, (t, f))| (t.as_str(), i as u32, *f))
    }

    pub fn write<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "#vocab v1 min_freq={}", self.min_frequency)?;
        for (t, id, f) in self.iter() {
            writeln!(w, "{t}\t{id}\t{f}")?;
        }
        Ok(())
    }

    pub fn to_file_string(&self) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("utf-8 tokens")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_file_string()).map_err(|e| Error::io(path, e))
    }

    pub fn parse<R: BufRead>(reader: R, source_name: &str) -> Result<Self> {
        let mut lines = reader.lines().enumerate();
        let header = match lines.next() {
            Some((_, l)) => l.map_err(|e| Error::io(source_name, e))?,
            None => return Err(Error::parse(source_name, 1, "missing '#vocab v1' header")),
        };
        let min_frequency = header
            .trim_end()
            .strip_prefix("#vocab v1 min_freq=")
            .and_then(|n| n.parse::<u64>().ok())
            .ok_or_else(|| Error::parse(source_name, 1, format!("bad header '{header}'")))?;
        let mut entries = Vec::new();
        for (i, line) in lines {
            let line_no = i + 1;
            let line = line.map_err(|e| Error::io(source_name, e))?;
            let line = line.trim_end_matches(['\r', '\n']);
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            let [token, id, freq] = cols[..] else {
                return Err(Error::parse(source_name, line_no, "expected 'token<TAB>id<TAB>frequency'"));
            };
            let id: usize = id
                .parse()
                .map_err(|_| Error::parse(source_name, line_no, format!("bad id '{id}'")))?;
            let freq: u64 = freq
                .parse()
                .map_err(|_| Error::parse(source_name, line_no, format!("bad frequency '{freq}'")))?;
            if id != entries.len() {
                return Err(Error::parse(source_name, line_no, format!("ids must be contiguous, expected {}", entries.len())));
            }
            if token.is_empty() || token.contains(char::is_whitespace) {
                return Err(Error::parse(source_name, line_no, "token must be non-empty without whitespace"));
            }
            entries.push((token.to_string(), freq));
        }
        if entries.len() < 2 || entries[0].0 != PAD_TOKEN || entries[1].0 != UNK_TOKEN {
            return Err(Error::parse(source_name, 2, "ids 0 and 1 must be <PAD> and <UNK>"));
        }
        let rest: Vec<(String, u64)> = entries.into_iter().skip(2).collect();
        let mut seen = std::collections::HashSet::new();
        for (k, (t, f)) in rest.iter().enumerate() {
            if !seen.insert(t.as_str()) || t == PAD_TOKEN || t == UNK_TOKEN {
                return Err(Error::parse(source_name, k + 4, format!("duplicate token '{t}'")));
            }
            if *f < min_frequency {
                return Err(Error::parse(source_name, k + 4, format!("token '{t}' is below min_freq")));
            }
        }
        Ok(Self::from_sorted(rest, min_frequency))
    }

    pub fn parse_str(input: &str) -> Result<Self> {
        Self::parse(input.as_bytes(), "<input>")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::parse(std::io::BufReader::new(file), &path.display().to_string())
    }
}

/// Counts tokens and keeps those seen at least `min_frequency` times. Ids
/// follow descending frequency, then lexicographic order, after the two
/// reserved ids.
pub fn build_vocabulary<I, S>(segmented_corpus: I, min_frequency: u64) -> Vocabulary
where
    I: IntoIterator<Item = S>,
    S: AsRef<[String]>,
{
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for sentence in segmented_corpus {
        for t in sentence.as_ref() {
            if t == PAD_TOKEN || t == UNK_TOKEN {
                continue;
            }
            *counts.entry(t.clone()).or_insert(0) += 1;
        }
    }
    let mut entries: Vec<(String, u64)> = counts.into_iter().filter(|(_, c)| *c >= min_frequency).collect();
    entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Vocabulary::from_sorted(entries, min_frequency)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedSequence {
    pub ids: Vec<u32>,
    pub true_length: usize,
    pub review_id: u64,
    pub sentence_index: usize,
    /// Set when the input was longer than the fixed length.
    pub truncated: bool,
}

/// Maps tokens to ids (unknown tokens become UNK), right-truncates to
/// `max_length` and pads with PAD.
pub fn encode(vocab: &Vocabulary, tokens: &[String], max_length: usize) -> EncodedSequence {
    let max_length = max_length.max(1);
    let truncated = tokens.len() > max_length;
    let mut ids: Vec<u32> = tokens.iter().take(max_length).map(|t| vocab.id(t)).collect();
    let true_length = ids.len();
    ids.resize(max_length, PAD_ID);
    EncodedSequence {
        ids,
        true_length,
        review_id: 0,
        sentence_index: 0,
        truncated,
    }
}

/// Inverse of [`encode`] with PAD positions dropped.
pub fn decode(vocab: &Vocabulary, seq: &EncodedSequence) -> Vec<String> {
    seq.ids[..seq.true_length]
        .iter()
        .map(|&id| vocab.token(id).unwrap_or(UNK_TOKEN).to_string())
        .collect()
}
