//! Byte-pair encoding over grapheme clusters, without an end-of-word
//! marker. Merges never cross word boundaries.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap, HashSet};
use std::io::{BufRead, Write};
use std::path::Path;

use super::SubwordToken;
use crate::error::{Error, Result};
use crate::text::graphemes;

/// Piece emitted for uncovered characters under [`ResiduePolicy::Unk`].
pub const UNK_PIECE: &str = "<UNK>";

const MIN_PAIR_FREQUENCY: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ResiduePolicy {
    /// Drop characters the model has never seen.
    #[default]
    Discard,
    /// Replace each such character with [`UNK_PIECE`].
    Unk,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BpeModel {
    vocab_limit: usize,
    merges: Vec<(String, String)>,
    alphabet: BTreeSet<String>,
    tokens: BTreeSet<String>,
    ranks: HashMap<(String, String), usize>,
}

impl BpeModel {
    fn from_parts(vocab_limit: usize, alphabet: BTreeSet<String>, merges: Vec<(String, String)>) -> Self {
        let mut tokens = alphabet.clone();
        let mut ranks = HashMap::with_capacity(merges.len());
        for (rank, (l, r)) in merges.iter().enumerate() {
            tokens.insert(format!("{l}{r}"));
            ranks.entry((l.clone(), r.clone())).or_insert(rank);
        }
        BpeModel {
            vocab_limit,
            merges,
            alphabet,
            tokens,
            ranks,
        }
    }

    pub fn vocab_limit(&self) -> usize {
        self.vocab_limit
    }

    pub fn merges(&self) -> &[(String, String)] {
        &self.merges
    }

    pub fn tokens(&self) -> &BTreeSet<String> {
        &self.tokens
    }

    pub fn alphabet(&self) -> &BTreeSet<String> {
        &self.alphabet
    }

    pub fn contains(&self, token: &str) -> bool {
        self.tokens.contains(token)
    }

    /// Applies the recorded merges, in order, to one word.
    pub fn encode_word(&self, word: &str) -> Vec<String> {
        let mut symbols: Vec<String> = graphemes(word).map(str::to_string).collect();
        let mut next_rank = 0usize;
        loop {
            let best = symbols
                .windows(2)
                .filter_map(|w| self.ranks.get(&(w[0].clone(), w[1].clone())).copied())
                .filter(|&r| r >= next_rank)
                .min();
            let Some(rank) = best else { break };
            let (left, right) = &self.merges[rank];
            let mut merged = Vec::with_capacity(symbols.len());
            let mut i = 0;
            while i < symbols.len() {
                if i + 1 < symbols.len() && &symbols[i] == left && &symbols[i + 1] == right {
                    merged.push(format!("{left}{right}"));
                    i += 2;
                } else {
                    merged.push(std::mem::take(&mut symbols[i]));
                    i += 1;
                }
            }
            symbols = merged;
            next_rank = rank + 1;
        }
        symbols
    }

    pub fn write<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "#bpe v1 limit={}", self.vocab_limit)?;
        let alphabet: Vec<&str> = self.alphabet.iter().map(String::as_str).collect();
        writeln!(w, "#alphabet {}", alphabet.join(" "))?;
        for (l, r) in &self.merges {
            writeln!(w, "{l} {r}")?;
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
            Some((_, line)) => line.map_err(|e| Error::io(source_name, e))?,
            None => return Err(Error::parse(source_name, 1, "missing '#bpe v1' header")),
        };
        let limit = header
            .trim_end()
            .strip_prefix("#bpe v1 limit=")
            .and_then(|n| n.parse::<usize>().ok())
            .filter(|n| *n > 0)
            .ok_or_else(|| Error::parse(source_name, 1, format!("bad header '{header}'")))?;

        let mut alphabet: Option<BTreeSet<String>> = None;
        let mut merges = Vec::new();
        let mut merge_lines = Vec::new();
        for (i, line) in lines {
            let line_no = i + 1;
            let line = line.map_err(|e| Error::io(source_name, e))?;
            let line = line.trim_end_matches(['\r', '\n']);
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("#alphabet") {
                if alphabet.is_some() || !merges.is_empty() {
                    return Err(Error::parse(source_name, line_no, "misplaced #alphabet line"));
                }
                let set: BTreeSet<String> = rest.split(' ').filter(|s| !s.is_empty()).map(str::to_string).collect();
                if let Some(bad) = set.iter().find(|s| graphemes(s).count() != 1) {
                    return Err(Error::parse(source_name, line_no, format!("alphabet entry '{bad}' is not one character")));
                }
                alphabet = Some(set);
                continue;
            }
            if line.starts_with('#') {
                continue;
            }
            let mut parts = line.split(' ');
            match (parts.next(), parts.next(), parts.next()) {
                (Some(l), Some(r), None) if !l.is_empty() && !r.is_empty() => {
                    merges.push((l.to_string(), r.to_string()));
                    merge_lines.push(line_no);
                }
                _ => return Err(Error::parse(source_name, line_no, "expected 'left right'")),
            }
        }

        let alphabet = alphabet.unwrap_or_else(|| {
            merges
                .iter()
                .flat_map(|(l, r)| [l, r])
                .filter(|t| graphemes(t).count() == 1)
                .cloned()
                .collect()
        });
        let mut known = alphabet.clone();
        for ((l, r), line_no) in merges.iter().zip(&merge_lines) {
            if !known.contains(l) || !known.contains(r) {
                return Err(Error::parse(source_name, *line_no, format!("merge '{l} {r}' uses an unknown token")));
            }
            known.insert(format!("{l}{r}"));
        }
        if known.len() > limit {
            return Err(Error::parse(
                source_name,
                1,
                format!("{} tokens exceed the limit {limit}", known.len()),
            ));
        }
        Ok(Self::from_parts(limit, alphabet, merges))
    }

    pub fn parse_str(input: &str) -> Result<Self> {
        Self::parse(input.as_bytes(), "<input>")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::parse(std::io::BufReader::new(file), &path.display().to_string())
    }
}

/// Heap entry ordered by count, then by the smallest `(left, right)`.
#[derive(PartialEq, Eq)]
struct Candidate {
    count: u64,
    pair: Reverse<(String, String)>,
    ids: (u32, u32),
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.count.cmp(&other.count).then_with(|| self.pair.cmp(&other.pair))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Trainer {
    symbols: Vec<String>,
    index: HashMap<String, u32>,
    words: Vec<Vec<u32>>,
    freqs: Vec<u64>,
    pair_counts: HashMap<(u32, u32), u64>,
    pair_words: HashMap<(u32, u32), HashSet<usize>>,
    heap: BinaryHeap<Candidate>,
}

impl Trainer {
    fn intern(&mut self, s: &str) -> u32 {
        if let Some(&id) = self.index.get(s) {
            return id;
        }
        let id = self.symbols.len() as u32;
        self.symbols.push(s.to_string());
        self.index.insert(s.to_string(), id);
        id
    }

    fn push(&mut self, ids: (u32, u32)) {
        let count = self.pair_counts.get(&ids).copied().unwrap_or(0);
        if count > 0 {
            let pair = (self.symbols[ids.0 as usize].clone(), self.symbols[ids.1 as usize].clone());
            self.heap.push(Candidate {
                count,
                pair: Reverse(pair),
                ids,
            });
        }
    }

    fn add_word_pairs(&mut self, w: usize, sign: i64) {
        let freq = self.freqs[w];
        for k in 0..self.words[w].len().saturating_sub(1) {
            let ids = (self.words[w][k], self.words[w][k + 1]);
            let c = self.pair_counts.entry(ids).or_insert(0);
            if sign > 0 {
                *c += freq;
                self.pair_words.entry(ids).or_default().insert(w);
            } else {
                *c -= freq;
            }
        }
    }

    /// Best pair still valid in the heap, discarding stale entries.
    fn pop_best(&mut self) -> Option<Candidate> {
        while let Some(top) = self.heap.pop() {
            let current = self.pair_counts.get(&top.ids).copied().unwrap_or(0);
            if current == top.count {
                return Some(top);
            }
            if current > 0 && current < top.count {
                self.push(top.ids);
            }
        }
        None
    }

    fn apply(&mut self, ids: (u32, u32), product: u32) {
        let affected: Vec<usize> = self
            .pair_words
            .remove(&ids)
            .map(|s| {
                let mut v: Vec<usize> = s.into_iter().collect();
                v.sort_unstable();
                v
            })
            .unwrap_or_default();
        for w in affected {
            let word = &self.words[w];
            if !word.windows(2).any(|p| (p[0], p[1]) == ids) {
                continue;
            }
            self.add_word_pairs(w, -1);
            let old = std::mem::take(&mut self.words[w]);
            let mut merged = Vec::with_capacity(old.len());
            let mut i = 0;
            while i < old.len() {
                if i + 1 < old.len() && (old[i], old[i + 1]) == ids {
                    merged.push(product);
                    i += 2;
                } else {
                    merged.push(old[i]);
                    i += 1;
                }
            }
            self.words[w] = merged;
            self.add_word_pairs(w, 1);
            for k in 0..self.words[w].len().saturating_sub(1) {
                let p = (self.words[w][k], self.words[w][k + 1]);
                self.push(p);
            }
        }
    }
}

/// Greedy BPE training: merge the most frequent adjacent pair (ties broken
/// by the smallest `(left, right)`) until the token set would exceed
/// `vocab_limit` or no pair occurs at least twice.
pub fn bpe_train<I, S>(word_tokens: I, vocab_limit: usize) -> Result<BpeModel>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut word_freq: BTreeMap<String, u64> = BTreeMap::new();
    for w in word_tokens {
        let w = w.as_ref();
        if !w.is_empty() {
            *word_freq.entry(w.to_string()).or_insert(0) += 1;
        }
    }
    if word_freq.is_empty() {
        return Err(Error::InsufficientData("BPE training corpus is empty".into()));
    }

    let mut trainer = Trainer {
        symbols: Vec::new(),
        index: HashMap::new(),
        words: Vec::with_capacity(word_freq.len()),
        freqs: Vec::with_capacity(word_freq.len()),
        pair_counts: HashMap::new(),
        pair_words: HashMap::new(),
        heap: BinaryHeap::new(),
    };
    let mut alphabet = BTreeSet::new();
    for (word, freq) in &word_freq {
        let ids: Vec<u32> = graphemes(word)
            .map(|g| {
                alphabet.insert(g.to_string());
                trainer.intern(g)
            })
            .collect();
        trainer.words.push(ids);
        trainer.freqs.push(*freq);
    }
    if vocab_limit < alphabet.len() {
        return Err(Error::Config(format!(
            "vocabulary limit {vocab_limit} is below the {} distinct characters in the corpus",
            alphabet.len()
        )));
    }
    for w in 0..trainer.words.len() {
        trainer.add_word_pairs(w, 1);
    }
    let pairs: Vec<(u32, u32)> = trainer.pair_counts.keys().copied().collect();
    for p in pairs {
        trainer.push(p);
    }

    let mut tokens = alphabet.clone();
    let mut merges = Vec::new();
    while let Some(best) = trainer.pop_best() {
        if best.count < MIN_PAIR_FREQUENCY {
            break;
        }
        let Reverse((left, right)) = best.pair;
        let product = format!("{left}{right}");
        if !tokens.contains(&product) && tokens.len() >= vocab_limit {
            break;
        }
        let product_id = trainer.intern(&product);
        trainer.apply(best.ids, product_id);
        tokens.insert(product);
        merges.push((left, right));
    }
    Ok(BpeModel::from_parts(vocab_limit, alphabet, merges))
}

pub fn bpe_encode(model: &BpeModel, word_tokens: &[String], on_residue: ResiduePolicy) -> Vec<SubwordToken> {
    let mut out = Vec::new();
    for (i, word) in word_tokens.iter().enumerate() {
        for piece in model.encode_word(word) {
            if model.contains(&piece) {
                out.push(SubwordToken::new(piece, i));
            } else if on_residue == ResiduePolicy::Unk {
                out.push(SubwordToken::new(UNK_PIECE, i));
            }
        }
    }
    out
}
