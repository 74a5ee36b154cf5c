//! Turkish syllabification by the one-vowel-per-syllable onset rule.
//!
//! Between two vowels, a single consonant opens the next syllable; in a
//! longer cluster only the last consonant does and the rest close the
//! previous syllable. Consonants before the first vowel or after the last
//! one stay with the first or last syllable.

use std::fmt;

pub const VOWELS: [char; 8] = ['a', 'e', 'ı', 'i', 'o', 'ö', 'u', 'ü'];
pub const CONSONANTS: [char; 21] = [
    'b', 'c', 'ç', 'd', 'f', 'g', 'ğ', 'h', 'j', 'k', 'l', 'm', 'n', 'p', 'r', 's', 'ş', 't', 'v', 'y', 'z',
];

pub fn is_vowel(c: char) -> bool {
    // circumflexed loan-word vowels count as their plain forms
    VOWELS.contains(&c) || matches!(c, 'â' | 'î' | 'û' | 'A' | 'E' | 'I' | 'İ' | 'O' | 'Ö' | 'U' | 'Ü' | 'Â' | 'Î' | 'Û')
}

pub fn is_consonant(c: char) -> bool {
    CONSONANTS.contains(&c) || c.to_lowercase().any(|l| CONSONANTS.contains(&l))
}

pub fn syllabify_word(word: &str) -> Vec<String> {
    let chars: Vec<char> = word.chars().collect();
    let vowels: Vec<usize> = chars.iter().enumerate().filter(|(_, c)| is_vowel(**c)).map(|(i, _)| i).collect();
    if vowels.len() <= 1 {
        return vec![word.to_string()];
    }
    let mut cuts = Vec::with_capacity(vowels.len() - 1);
    for pair in vowels.windows(2) {
        let (left, right) = (pair[0], pair[1]);
        cuts.push(if right - left == 1 { right } else { right - 1 });
    }
    let mut out = Vec::with_capacity(vowels.len());
    let mut start = 0;
    for cut in cuts {
        out.push(chars[start..cut].iter().collect());
        start = cut;
    }
    out.push(chars[start..].iter().collect());
    out
}

/// Shape of a syllable against the regular and irregular form lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SyllableForm {
    Regular(&'static str),
    Irregular(&'static str),
    /// Vowel-free tokens such as punctuation or numbers.
    PassThrough,
    /// More than one vowel; never produced by [`syllabify_word`].
    Unmatched(String),
}

impl fmt::Display for SyllableForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SyllableForm::Regular(p) | SyllableForm::Irregular(p) => f.write_str(p),
            SyllableForm::PassThrough => f.write_str("-"),
            SyllableForm::Unmatched(p) => write!(f, "?{p}"),
        }
    }
}

const REGULAR: [&str; 8] = ["V", "VC", "CV", "CVC", "VCC", "CCV", "CVCC", "CCVC"];

pub fn classify_syllable(syllable: &str) -> SyllableForm {
    let shape: String = syllable.chars().map(|c| if is_vowel(c) { 'V' } else { 'C' }).collect();
    let vowel_count = shape.matches('V').count();
    if vowel_count == 0 {
        return SyllableForm::PassThrough;
    }
    if vowel_count > 1 {
        return SyllableForm::Unmatched(shape);
    }
    if let Some(p) = REGULAR.iter().find(|p| **p == shape) {
        return SyllableForm::Regular(p);
    }
    let (onset, coda) = shape.split_once('V').expect("one vowel");
    let form = match (onset.len(), coda.len()) {
        (o, 0) if o > 1 => "C{C+}V",
        (o, 1) if o > 1 => "C{C+}VC",
        (0, c) if c > 1 => "VC{C+}",
        (1, c) if c > 1 => "CVC{C+}",
        _ => "C{C+}VC{C+}",
    };
    SyllableForm::Irregular(form)
}
