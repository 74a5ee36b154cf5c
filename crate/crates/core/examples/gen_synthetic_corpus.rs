//! Writes the synthetic review corpus used by the end-to-end tests.
//!
//! Every sentence mixes neutral filler with at least one word from its
//! review's polarity lexicon and none from the other, so polarity is
//! linearly separable from token presence.
//!
//! `cargo run --example gen_synthetic_corpus -- data/synthetic_reviews.tsv`

use std::io::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const POSITIVE: &[&str] = &[
    "harika", "güzel", "mükemmel", "sevdim", "başarılı", "eğlenceli", "muhteşem", "keyifli", "etkileyici", "efsane",
];
const NEGATIVE: &[&str] = &[
    "berbat", "kötü", "sıkıcı", "rezalet", "vasat", "beğenmedim", "başarısız", "gereksiz", "saçma", "yavaş",
];
const FILLER: &[&str] = &[
    "film", "oyuncu", "senaryo", "sahne", "bu", "bir", "ve", "çok", "da", "hikaye", "müzik", "kamera", "yönetmen",
    "ürün", "kargo", "fiyat", "telefon", "gün", "hafta", "zaman", "ama", "gerçekten", "bence", "sonu", "başı",
    "izledim", "aldım", "geldi", "kutu", "renk",
];

fn sentence(rng: &mut ChaCha8Rng, lexicon: &[&str]) -> String {
    let mut words: Vec<&str> = (0..rng.gen_range(3..=8)).map(|_| *FILLER.choose(rng).unwrap()).collect();
    for _ in 0..rng.gen_range(1..=2) {
        words.push(lexicon.choose(rng).unwrap());
    }
    words.shuffle(rng);
    let end = if rng.gen_bool(0.2) { "!" } else { "." };
    format!("{}{end}", words.join(" "))
}

fn main() {
    let path = std::env::args().nth(1).unwrap_or_else(|| "data/synthetic_reviews.tsv".into());
    let mut rng = ChaCha8Rng::seed_from_u64(20240611);
    let mut out = std::io::BufWriter::new(std::fs::File::create(&path).expect("create output"));
    for _ in 0..500 {
        let label: u8 = rng.gen_range(0..=1);
        let lexicon = if label == 1 { POSITIVE } else { NEGATIVE };
        let n = rng.gen_range(2..=5);
        let text: Vec<String> = (0..n).map(|_| sentence(&mut rng, lexicon)).collect();
        writeln!(out, "{label}\t{}", text.join(" ")).expect("write");
    }
}
