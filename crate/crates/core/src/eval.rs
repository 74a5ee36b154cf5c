//! Sentence scoring, review-level voting, score histograms and the
//! sampling check on the spread of group means.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

use rand::Rng;

use crate::corpus::Polarity;
use crate::error::{Error, Result};
use crate::seed::{rng_for, Stream};

pub const HISTOGRAM_BINS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub review_id: u64,
    pub sentence_index: usize,
    pub label: Polarity,
    pub score: f64,
}

impl Prediction {
    pub fn predicted(&self) -> Polarity {
        if self.score > 0.5 {
            Polarity::Positive
        } else {
            Polarity::Negative
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReviewScore {
    pub review_id: u64,
    pub mean_score: f64,
    pub sentence_count: usize,
    pub predicted: Polarity,
    pub label: Polarity,
}

pub fn sentence_accuracy(preds: &[Prediction], threshold: f64) -> Result<f64> {
    if preds.is_empty() {
        return Err(Error::UndefinedMetric("accuracy of an empty prediction set".into()));
    }
    let correct = preds
        .iter()
        .filter(|p| (p.score > threshold) == (p.label == Polarity::Positive))
        .count();
    Ok(correct as f64 / preds.len() as f64)
}

/// Groups by review and thresholds the mean sentence score at 0.5; a mean
/// of exactly 0.5 is Negative. Output is ordered by review id.
pub fn majority_vote(preds: &[Prediction]) -> Vec<ReviewScore> {
    let mut groups: BTreeMap<u64, (f64, usize, Polarity)> = BTreeMap::new();
    for p in preds {
        let e = groups.entry(p.review_id).or_insert((0.0, 0, p.label));
        e.0 += p.score;
        e.1 += 1;
    }
    groups
        .into_iter()
        .map(|(review_id, (sum, n, label))| {
            let mean_score = sum / n as f64;
            ReviewScore {
                review_id,
                mean_score,
                sentence_count: n,
                predicted: if mean_score > 0.5 { Polarity::Positive } else { Polarity::Negative },
                label,
            }
        })
        .collect()
}

pub fn review_accuracy(reviews: &[ReviewScore]) -> Result<f64> {
    if reviews.is_empty() {
        return Err(Error::UndefinedMetric("accuracy of an empty review set".into()));
    }
    let correct = reviews.iter().filter(|r| r.predicted == r.label).count();
    Ok(correct as f64 / reviews.len() as f64)
}

pub fn overlap_ratio(accuracy: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&accuracy) {
        return Err(Error::InputDomain(format!("accuracy {accuracy} is outside [0, 1]")));
    }
    Ok(1.0 - accuracy)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub bin_edges: Vec<f64>,
    pub counts_neg: Vec<u64>,
    pub counts_pos: Vec<u64>,
}

impl Histogram {
    pub const CSV_HEADER: &'static str = "bin_lo,bin_hi,neg_count,pos_count";

    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", Self::CSV_HEADER);
        for i in 0..HISTOGRAM_BINS {
            out.push_str(&format!(
                "{:.2},{:.2},{},{}\n",
                self.bin_edges[i],
                self.bin_edges[i + 1],
                self.counts_neg[i],
                self.counts_pos[i]
            ));
        }
        out
    }
}

/// 50 uniform bins over [0, 1] per label; 1.0 lands in the last bin.
pub fn histogram(preds: &[Prediction]) -> Histogram {
    let bin_edges = (0..=HISTOGRAM_BINS).map(|i| i as f64 / HISTOGRAM_BINS as f64).collect();
    let mut counts_neg = vec![0; HISTOGRAM_BINS];
    let mut counts_pos = vec![0; HISTOGRAM_BINS];
    for p in preds {
        let bin = ((p.score.clamp(0.0, 1.0) * HISTOGRAM_BINS as f64).floor() as usize).min(HISTOGRAM_BINS - 1);
        match p.label {
            Polarity::Negative => counts_neg[bin] += 1,
            Polarity::Positive => counts_pos[bin] += 1,
        }
    }
    Histogram {
        bin_edges,
        counts_neg,
        counts_pos,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CltReport {
    pub sigma_population: f64,
    pub sigma_of_means: f64,
    pub sigma_predicted: f64,
    pub mean_of_means: f64,
    pub population_mean: f64,
}

fn mean_and_std(values: &[f64]) -> (f64, f64) {
    if values.iter().all(|v| *v == values[0]) {
        return (values[0], 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Draws `trials` groups of `n` scores with replacement and compares the
/// spread of their means against `sigma / sqrt(n)`. Spreads are
/// population standard deviations.
pub fn clt_check(population: &[f64], n: usize, trials: usize, seed: u64) -> Result<CltReport> {
    if n == 0 {
        return Err(Error::InputDomain("group size must be at least 1".into()));
    }
    if trials < 1000 {
        return Err(Error::InputDomain(format!("{trials} trials requested; at least 1000 are required")));
    }
    if population.is_empty() {
        return Err(Error::InsufficientData("the population is empty".into()));
    }
    if population.iter().any(|x| !x.is_finite()) {
        return Err(Error::InputDomain("the population contains non-finite scores".into()));
    }
    let (population_mean, sigma_population) = mean_and_std(population);
    let mut rng = rng_for(seed, Stream::Clt);
    let means: Vec<f64> = (0..trials)
        .map(|_| (0..n).map(|_| population[rng.gen_range(0..population.len())]).sum::<f64>() / n as f64)
        .collect();
    let (mean_of_means, sigma_of_means) = mean_and_std(&means);
    Ok(CltReport {
        sigma_population,
        sigma_of_means,
        sigma_predicted: sigma_population / (n as f64).sqrt(),
        mean_of_means,
        population_mean,
    })
}

pub const PREDICTIONS_HEADER: &str = "review_id\tsentence_index\tlabel\tscore";

pub fn write_predictions<W: Write>(preds: &[Prediction], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{PREDICTIONS_HEADER}")?;
    for p in preds {
        writeln!(w, "{}\t{}\t{}\t{:.4}", p.review_id, p.sentence_index, p.label.as_u8(), p.score)?;
    }
    Ok(())
}

pub fn predictions_to_string(preds: &[Prediction]) -> String {
    let mut buf = Vec::new();
    write_predictions(preds, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("ascii")
}

/// Reads a predictions TSV; the header line is optional.
pub fn parse_predictions<R: BufRead>(reader: R, source_name: &str) -> Result<Vec<Prediction>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(source_name, e))?;
        let line_no = i + 1;
        if line.trim().is_empty() || (line_no == 1 && line == PREDICTIONS_HEADER) {
            continue;
        }
        let err = |m: String| Error::parse(source_name, line_no, m);
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 4 {
            return Err(err(format!("expected 4 tab-separated columns, found {}", cols.len())));
        }
        let review_id = cols[0].parse().map_err(|_| err(format!("bad review id '{}'", cols[0])))?;
        let sentence_index = cols[1].parse().map_err(|_| err(format!("bad sentence index '{}'", cols[1])))?;
        let label = cols[2]
            .parse::<u8>()
            .ok()
            .and_then(Polarity::from_u8)
            .ok_or_else(|| err(format!("bad label '{}'", cols[2])))?;
        let score: f64 = cols[3]
            .parse()
            .ok()
            .filter(|s: &f64| (0.0..=1.0).contains(s))
            .ok_or_else(|| err(format!("bad score '{}'", cols[3])))?;
        out.push(Prediction {
            review_id,
            sentence_index,
            label,
            score,
        });
    }
    Ok(out)
}

pub fn parse_predictions_str(input: &str) -> Result<Vec<Prediction>> {
    parse_predictions(input.as_bytes(), "<input>")
}

pub fn load_predictions(path: &Path) -> Result<Vec<Prediction>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_predictions(std::io::BufReader::new(file), &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn review(id: u64, label: Polarity, scores: &[f64]) -> Vec<Prediction> {
        scores
            .iter()
            .enumerate()
            .map(|(i, &score)| Prediction {
                review_id: id,
                sentence_index: i,
                label,
                score,
            })
            .collect()
    }

    #[test]
    fn accuracy_examples() {
        let mut p = review(1, Polarity::Positive, &[0.9]);
        p.extend(review(2, Polarity::Negative, &[0.1]));
        assert_eq!(sentence_accuracy(&p, 0.5).unwrap(), 1.0);
        p[0].label = Polarity::Negative;
        p[1].label = Polarity::Positive;
        assert_eq!(sentence_accuracy(&p, 0.5).unwrap(), 0.0);
        assert!(matches!(sentence_accuracy(&[], 0.5), Err(Error::UndefinedMetric(_))));
    }

    #[test]
    fn sample_review_means() {
        let cases: [(&[f64], f64, Polarity); 4] = [
            (&[0.36, 0.23, 0.77, 0.78], 0.535, Polarity::Positive),
            (&[0.83, 0.79, 0.88, 0.21], 0.6775, Polarity::Positive),
            (&[0.23, 0.11, 0.29], 0.21, Polarity::Negative),
            (&[0.24, 0.04, 0.15], 0.1433, Polarity::Negative),
        ];
        for (scores, mean, predicted) in cases {
            let r = majority_vote(&review(7, Polarity::Positive, scores));
            assert_eq!(r.len(), 1);
            assert!((r[0].mean_score - mean).abs() < 1e-4);
            assert_eq!(r[0].predicted, predicted);
            assert_eq!(r[0].sentence_count, scores.len());
        }
    }

    #[test]
    fn tie_is_negative() {
        let r = majority_vote(&review(1, Polarity::Positive, &[0.4, 0.6]));
        assert_eq!(r[0].predicted, Polarity::Negative);
    }

    #[test]
    fn overlap_examples() {
        assert!((overlap_ratio(0.7156).unwrap() - 0.2844).abs() < 1e-12);
        assert_eq!(overlap_ratio(1.0).unwrap(), 0.0);
        assert_eq!(overlap_ratio(0.5).unwrap(), 0.5);
        assert!(overlap_ratio(1.5).is_err());
    }

    #[test]
    fn histogram_edges_and_grid() {
        let h = histogram(&review(1, Polarity::Negative, &[0.0]));
        assert_eq!(h.counts_neg[0], 1);
        let h = histogram(&review(1, Polarity::Positive, &[1.0]));
        assert_eq!(h.counts_pos[HISTOGRAM_BINS - 1], 1);
        let grid: Vec<f64> = (0..100).map(|i| (i as f64 + 0.5) / 100.0).collect();
        let mut preds = review(1, Polarity::Positive, &grid);
        preds.extend(review(2, Polarity::Negative, &grid));
        let h = histogram(&preds);
        assert!(h.counts_pos.iter().chain(&h.counts_neg).all(|&c| c == 2));
        let empty = histogram(&[]);
        assert!(empty.counts_pos.iter().chain(&empty.counts_neg).all(|&c| c == 0));
        assert_eq!(h.to_csv().lines().count(), HISTOGRAM_BINS + 1);
    }

    #[test]
    fn clt_degenerate_cases() {
        let r = clt_check(&[0.3; 10], 5, 1000, 1).unwrap();
        assert_eq!((r.sigma_population, r.sigma_of_means), (0.0, 0.0));
        let pop: Vec<f64> = (0..100).map(|i| i as f64 / 99.0).collect();
        let r = clt_check(&pop, 1, 5000, 2).unwrap();
        assert_eq!(r.sigma_predicted, r.sigma_population);
        assert!((r.sigma_of_means / r.sigma_population - 1.0).abs() < 0.05);
        assert!(matches!(clt_check(&pop, 0, 1000, 1), Err(Error::InputDomain(_))));
        assert!(clt_check(&pop, 3, 10, 1).is_err());
    }

    #[test]
    fn predictions_round_trip() {
        let preds = review(3, Polarity::Positive, &[0.1234, 0.9]);
        let text = predictions_to_string(&preds);
        assert_eq!(text.lines().nth(1), Some("3\t0\t1\t0.1234"));
        assert_eq!(parse_predictions_str(&text).unwrap(), preds);
        assert!(parse_predictions_str("1\t0\t2\t0.5\n").is_err());
        assert!(parse_predictions_str("1\t0\t1\t1.5\n").is_err());
        assert!(parse_predictions_str("1\t0\t1\n").is_err());
    }
}
