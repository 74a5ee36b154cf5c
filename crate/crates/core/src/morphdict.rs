//! Dictionary-backed morphological segmentation.
//!
//! Analyses are precomputed into a nine-column TSV, one row per surface
//! form, and consumed here. Absent surfaces synthesize an unknown entry,
//! so lookup never fails.

use std::collections::HashMap;
use std::fmt;
use std::io::BufRead;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::text::turkish_lowercase;

pub const UNKNOWN_TAG: &str = "Unk";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MorphVariant {
    Lemma,
    LemmaSuffix,
    LemmaSuffixMeta,
    Stem,
    StemSuffix,
    StemSuffixMeta,
    TokenMeta,
}

impl MorphVariant {
    pub const ALL: [MorphVariant; 7] = [
        MorphVariant::Lemma,
        MorphVariant::LemmaSuffix,
        MorphVariant::LemmaSuffixMeta,
        MorphVariant::Stem,
        MorphVariant::StemSuffix,
        MorphVariant::StemSuffixMeta,
        MorphVariant::TokenMeta,
    ];

    pub fn is_meta(self) -> bool {
        matches!(
            self,
            MorphVariant::LemmaSuffixMeta | MorphVariant::StemSuffixMeta | MorphVariant::TokenMeta
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MorphEntry {
    pub surface: String,
    pub known: bool,
    pub lemma: Vec<String>,
    pub lemma_suffix: Vec<String>,
    pub lemma_meta: Vec<String>,
    pub stem: Vec<String>,
    pub stem_suffix: Vec<String>,
    pub stem_meta: Vec<String>,
    pub token_meta: Vec<String>,
}

impl MorphEntry {
    pub fn unknown(surface: &str) -> Self {
        let word = vec![surface.to_string()];
        let unk = vec![UNKNOWN_TAG.to_string()];
        MorphEntry {
            surface: surface.to_string(),
            known: false,
            lemma: word.clone(),
            lemma_suffix: word.clone(),
            lemma_meta: unk.clone(),
            stem: word.clone(),
            stem_suffix: word,
            stem_meta: unk.clone(),
            token_meta: unk,
        }
    }

    pub fn tokens(&self, variant: MorphVariant) -> &[String] {
        match variant {
            MorphVariant::Lemma => &self.lemma,
            MorphVariant::LemmaSuffix => &self.lemma_suffix,
            MorphVariant::LemmaSuffixMeta => &self.lemma_meta,
            MorphVariant::Stem => &self.stem,
            MorphVariant::StemSuffix => &self.stem_suffix,
            MorphVariant::StemSuffixMeta => &self.stem_meta,
            MorphVariant::TokenMeta => &self.token_meta,
        }
    }

    fn check(&self) -> std::result::Result<(), String> {
        if !self.known {
            return Ok(());
        }
        let columns = [
            ("lemma", &self.lemma),
            ("lemma_suffix", &self.lemma_suffix),
            ("lemma_meta", &self.lemma_meta),
            ("stem", &self.stem),
            ("stem_suffix", &self.stem_suffix),
            ("stem_meta", &self.stem_meta),
            ("token_meta", &self.token_meta),
        ];
        for (name, list) in columns {
            if list.is_empty() {
                return Err(format!("column {name} is empty for a known entry"));
            }
        }
        for (name, list) in [("lemma", &self.lemma), ("stem", &self.stem), ("token_meta", &self.token_meta)] {
            if list.len() != 1 {
                return Err(format!("column {name} must hold exactly one token, got {}", list.len()));
            }
        }
        if self.lemma_suffix[0] != self.lemma[0] {
            return Err("lemma_suffix must start with the lemma".into());
        }
        if self.stem_suffix[0] != self.stem[0] {
            return Err("stem_suffix must start with the stem".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default)]
pub struct MorphDictionary {
    entries: HashMap<String, MorphEntry>,
    duplicates: usize,
}

impl MorphDictionary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Rows that replaced an earlier row with the same surface.
    pub fn duplicate_count(&self) -> usize {
        self.duplicates
    }

    pub fn insert(&mut self, mut entry: MorphEntry) -> Option<MorphEntry> {
        entry.surface = turkish_lowercase(&entry.surface);
        let previous = self.entries.insert(entry.surface.clone(), entry);
        if previous.is_some() {
            self.duplicates += 1;
        }
        previous
    }

    pub fn get(&self, surface: &str) -> Option<&MorphEntry> {
        match self.entries.get(surface) {
            Some(e) => Some(e),
            None => self.entries.get(&turkish_lowercase(surface)),
        }
    }

    /// Looks up a surface, synthesizing an unknown entry when absent.
    pub fn lookup(&self, surface: &str) -> std::borrow::Cow<'_, MorphEntry> {
        match self.get(surface) {
            Some(e) => std::borrow::Cow::Borrowed(e),
            None => std::borrow::Cow::Owned(MorphEntry::unknown(surface)),
        }
    }

    pub fn is_known(&self, surface: &str) -> bool {
        self.get(surface).is_some_and(|e| e.known)
    }

    pub fn entries(&self) -> impl Iterator<Item = &MorphEntry> {
        self.entries.values()
    }

    pub fn parse<R: BufRead>(reader: R, source_name: &str) -> Result<Self> {
        let mut dict = MorphDictionary::new();
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line.map_err(|e| Error::io(source_name, e))?;
            let line = line.trim_end_matches(['\r', '\n']);
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let entry = parse_row(line).map_err(|m| Error::parse(source_name, line_no, m))?;
            dict.insert(entry);
        }
        if dict.duplicates > 0 {
            log::warn!("{source_name}: {} duplicate surface rows, last row wins", dict.duplicates);
        }
        Ok(dict)
    }

    pub fn parse_str(input: &str) -> Result<Self> {
        Self::parse(input.as_bytes(), "<input>")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::parse(std::io::BufReader::new(file), &path.display().to_string())
    }
}

fn split_list(column: &str) -> Vec<String> {
    column.split(' ').filter(|t| !t.is_empty()).map(str::to_string).collect()
}

fn parse_row(line: &str) -> std::result::Result<MorphEntry, String> {
    let cols: Vec<&str> = line.split('\t').collect();
    if cols.len() != 9 {
        return Err(format!("expected 9 tab-separated columns, got {}", cols.len()));
    }
    let surface = cols[0].trim();
    if surface.is_empty() || surface.contains(char::is_whitespace) {
        return Err("surface must be a single non-empty token".into());
    }
    let known = match cols[1].trim() {
        "1" => true,
        "0" => false,
        other => return Err(format!("known flag must be 0 or 1, got '{other}'")),
    };
    if !known {
        // analysis columns on unknown rows are ignored
        return Ok(MorphEntry::unknown(surface));
    }
    let entry = MorphEntry {
        surface: surface.to_string(),
        known,
        lemma: split_list(cols[2]),
        lemma_suffix: split_list(cols[3]),
        lemma_meta: split_list(cols[4]),
        stem: split_list(cols[5]),
        stem_suffix: split_list(cols[6]),
        stem_meta: split_list(cols[7]),
        token_meta: split_list(cols[8]),
    };
    entry.check()?;
    Ok(entry)
}

impl fmt::Display for MorphEntry {
    /// Renders the entry as one dictionary TSV row.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.known {
            return write!(f, "{}\t0\t\t\t\t\t\t\t", self.surface);
        }
        write!(
            f,
            "{}\t1\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            self.surface,
            self.lemma.join(" "),
            self.lemma_suffix.join(" "),
            self.lemma_meta.join(" "),
            self.stem.join(" "),
            self.stem_suffix.join(" "),
            self.stem_meta.join(" "),
            self.token_meta.join(" "),
        )
    }
}

impl FromStr for MorphEntry {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_row(s).map_err(|m| Error::parse("<row>", 1, m))
    }
}

/// Expands each word token by the chosen variant and concatenates the
/// results in order. Unknown words pass through for lemma/stem variants and
/// become `Unk` for the meta variants.
pub fn segment_morph(dict: &MorphDictionary, variant: MorphVariant, word_tokens: &[String]) -> Vec<String> {
    let mut out = Vec::with_capacity(word_tokens.len());
    for word in word_tokens {
        match dict.get(word) {
            Some(entry) if entry.known => out.extend(entry.tokens(variant).iter().cloned()),
            _ if variant.is_meta() => out.push(UNKNOWN_TAG.to_string()),
            _ => out.push(word.clone()),
        }
    }
    out
}
