//! Independent reference implementations shared by the integration and
//! acceptance targets.
#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use segtr::corpus::Polarity;
use segtr::nn::{ArchitectureDescriptor, Mode, Model};
use segtr::segment::EncodedSequence;
use unicode_segmentation::UnicodeSegmentation;

pub fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

/// Textbook greedy pair merging over word occurrences, recounting every
/// pair from scratch at each step.
pub struct BruteBpe {
    pub merges: Vec<(String, String)>,
    pub tokens: BTreeSet<String>,
}

pub fn brute_bpe(words: &[&str], limit: usize) -> BruteBpe {
    let mut seqs: Vec<Vec<String>> = words
        .iter()
        .filter(|w| !w.is_empty())
        .map(|w| w.graphemes(true).map(str::to_string).collect())
        .collect();
    let mut tokens: BTreeSet<String> = seqs.iter().flatten().cloned().collect();
    let mut merges = Vec::new();
    loop {
        let mut counts: std::collections::BTreeMap<(String, String), u64> = Default::default();
        for s in &seqs {
            for w in s.windows(2) {
                *counts.entry((w[0].clone(), w[1].clone())).or_default() += 1;
            }
        }
        let Some(best) = counts.values().copied().max() else { break };
        if best < 2 {
            break;
        }
        let pair = counts.iter().find(|(_, &c)| c == best).map(|(p, _)| p.clone()).unwrap();
        let product = format!("{}{}", pair.0, pair.1);
        if !tokens.contains(&product) && tokens.len() >= limit {
            break;
        }
        for s in &mut seqs {
            let mut out = Vec::new();
            let mut i = 0;
            while i < s.len() {
                if i + 1 < s.len() && s[i] == pair.0 && s[i + 1] == pair.1 {
                    out.push(product.clone());
                    i += 2;
                } else {
                    out.push(s[i].clone());
                    i += 1;
                }
            }
            *s = out;
        }
        tokens.insert(product);
        merges.push(pair);
    }
    BruteBpe { merges, tokens }
}

/// Replays merges one after another over a word's graphemes.
pub fn brute_encode(merges: &[(String, String)], word: &str) -> Vec<String> {
    let mut s: Vec<String> = word.graphemes(true).map(str::to_string).collect();
    for (l, r) in merges {
        let mut out = Vec::new();
        let mut i = 0;
        while i < s.len() {
            if i + 1 < s.len() && &s[i] == l && &s[i + 1] == r {
                out.push(format!("{l}{r}"));
                i += 2;
            } else {
                out.push(s[i].clone());
                i += 1;
            }
        }
        s = out;
    }
    s
}

/// Toy corpora for the BPE comparison.
pub fn toy_corpora() -> Vec<(Vec<&'static str>, usize)> {
    vec![
        (vec!["abab"; 5], 4),
        (vec!["xyz"], 3),
        (vec!["low", "low", "low", "lower", "lower", "newest", "newest", "newest", "widest", "widest"], 20),
        (vec!["aaaa", "aaa", "aa", "a", "aaaa"], 5),
        (vec!["elma", "elmalar", "elmayı", "armut", "armutlar", "kiraz", "kirazlar", "elmalar"], 25),
        (vec!["hug", "pug", "pun", "bun", "hugs", "hug", "pun", "bun", "hugs", "hug"], 12),
        (vec!["ababab", "bababa", "abba", "baab", "abab"], 8),
        (vec!["pırıl", "pırıl", "yıkıyor", "yıkadı", "pırıltı", "ışık", "ışıl", "ışıl"], 18),
    ]
}

pub fn seq(ids: Vec<u32>, review_id: u64) -> EncodedSequence {
    EncodedSequence {
        true_length: ids.iter().filter(|&&i| i != 0).count(),
        ids,
        review_id,
        sentence_index: 0,
        truncated: false,
    }
}

/// A random small model with every parameter drawn from `[-0.5, 0.5)`,
/// plus a random batch, rejecting instances too close to a ReLU or
/// max-pool kink for central differences.
pub fn random_instance(rng: &mut ChaCha8Rng, arch: &ArchitectureDescriptor) -> (Model, Vec<EncodedSequence>, Vec<Polarity>) {
    loop {
        let length = rng.gen_range(6..=9);
        let vocab = rng.gen_range(3..=7);
        let mut model = Model::new(arch.clone(), length, vocab, rng).unwrap();
        for t in &mut model.params_mut().tensors {
            t.data.iter_mut().for_each(|x| *x = rng.gen_range(-0.5..0.5));
        }
        let batch_size = rng.gen_range(1..=3);
        let batch: Vec<EncodedSequence> = (0..batch_size)
            .map(|b| {
                let used = rng.gen_range(1..=length);
                let mut ids: Vec<u32> = (0..used).map(|_| rng.gen_range(1..vocab as u32)).collect();
                ids.resize(length, 0);
                seq(ids, b as u64)
            })
            .collect();
        let labels = (0..batch_size)
            .map(|_| if rng.gen_bool(0.5) { Polarity::Positive } else { Polarity::Negative })
            .collect();
        if model.kink_margin(&batch) > 1e-2 {
            return (model, batch, labels);
        }
    }
}

/// Largest relative error between analytic and central-difference
/// gradients over every scalar parameter.
pub fn gradient_check(model: &Model, batch: &[EncodedSequence], labels: &[Polarity], l2: f64, eps: f64) -> f64 {
    let (_, grads) = model.loss_and_gradients(batch, labels, l2, Mode::Eval).unwrap();
    let mut probe = model.clone();
    let mut worst: f64 = 0.0;
    for ti in 0..model.params().tensors.len() {
        for j in 0..model.params().tensors[ti].len() {
            let x = model.params().tensors[ti].data[j];
            probe.params_mut().tensors[ti].data[j] = x + eps;
            let plus = probe.loss_and_gradients(batch, labels, l2, Mode::Eval).unwrap().0;
            probe.params_mut().tensors[ti].data[j] = x - eps;
            let minus = probe.loss_and_gradients(batch, labels, l2, Mode::Eval).unwrap().0;
            probe.params_mut().tensors[ti].data[j] = x;
            let numeric = (plus - minus) / (2.0 * eps);
            let analytic = grads.tensors[ti].data[j];
            let scale = numeric.abs().max(analytic.abs());
            let err = if scale < 1e-8 { (numeric - analytic).abs() } else { (numeric - analytic).abs() / scale };
            worst = worst.max(err);
        }
    }
    worst
}

pub fn small_cnn() -> ArchitectureDescriptor {
    let mut a = ArchitectureDescriptor::cnn_rand_simplified();
    a.embedding_dim = 4;
    a.filter_sizes = vec![2, 3];
    a.filters_per_size = 3;
    a.dense_dim = 5;
    a
}

pub fn small_mean_pool() -> ArchitectureDescriptor {
    let mut a = ArchitectureDescriptor::mean_pool();
    a.embedding_dim = 5;
    a
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
