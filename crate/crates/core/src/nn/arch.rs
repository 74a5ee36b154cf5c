//! Architecture descriptors, layer-shape inference and parameter counts.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArchitectureKind {
    CnnRand,
    CnnRandSimplified,
    Lstm,
    MeanPool,
}

impl ArchitectureKind {
    pub fn tag(self) -> &'static str {
        match self {
            ArchitectureKind::CnnRand => "cnn-rand",
            ArchitectureKind::CnnRandSimplified => "cnn-rand-simplified",
            ArchitectureKind::Lstm => "lstm",
            ArchitectureKind::MeanPool => "mean-pool",
        }
    }

    pub fn is_cnn(self) -> bool {
        matches!(self, ArchitectureKind::CnnRand | ArchitectureKind::CnnRandSimplified)
    }
}

impl fmt::Display for ArchitectureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for ArchitectureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s.chars().filter(|c| c.is_alphanumeric()).collect::<String>().to_lowercase();
        match key.as_str() {
            "cnnrand" | "cnn" => Ok(ArchitectureKind::CnnRand),
            "cnnrandsimplified" | "simplified" | "simplifiedcnnrand" => Ok(ArchitectureKind::CnnRandSimplified),
            "lstm" => Ok(ArchitectureKind::Lstm),
            "meanpool" | "mean" => Ok(ArchitectureKind::MeanPool),
            _ => Err(Error::Config(format!("unknown architecture '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArchitectureDescriptor {
    pub kind: ArchitectureKind,
    pub embedding_dim: usize,
    pub filter_sizes: Vec<usize>,
    pub filters_per_size: usize,
    pub dropout_embed: f64,
    pub dropout_penultimate: f64,
    pub dense_dim: usize,
    pub lstm_units: usize,
}

impl ArchitectureDescriptor {
    pub fn cnn_rand() -> Self {
        ArchitectureDescriptor {
            kind: ArchitectureKind::CnnRand,
            embedding_dim: 50,
            filter_sizes: vec![3, 4, 5],
            filters_per_size: 100,
            dropout_embed: 0.5,
            dropout_penultimate: 0.0,
            dense_dim: 50,
            lstm_units: 0,
        }
    }

    pub fn cnn_rand_simplified() -> Self {
        ArchitectureDescriptor {
            kind: ArchitectureKind::CnnRandSimplified,
            embedding_dim: 20,
            filter_sizes: vec![3, 8],
            filters_per_size: 10,
            dropout_embed: 0.5,
            dropout_penultimate: 0.8,
            dense_dim: 50,
            lstm_units: 0,
        }
    }

    pub fn lstm() -> Self {
        ArchitectureDescriptor {
            kind: ArchitectureKind::Lstm,
            embedding_dim: 32,
            filter_sizes: Vec::new(),
            filters_per_size: 0,
            dropout_embed: 0.2,
            dropout_penultimate: 0.2,
            dense_dim: 0,
            lstm_units: 100,
        }
    }

    pub fn mean_pool() -> Self {
        ArchitectureDescriptor {
            kind: ArchitectureKind::MeanPool,
            embedding_dim: 20,
            filter_sizes: Vec::new(),
            filters_per_size: 0,
            dropout_embed: 0.0,
            dropout_penultimate: 0.0,
            dense_dim: 0,
            lstm_units: 0,
        }
    }

    pub fn for_kind(kind: ArchitectureKind) -> Self {
        match kind {
            ArchitectureKind::CnnRand => Self::cnn_rand(),
            ArchitectureKind::CnnRandSimplified => Self::cnn_rand_simplified(),
            ArchitectureKind::Lstm => Self::lstm(),
            ArchitectureKind::MeanPool => Self::mean_pool(),
        }
    }

    pub fn max_filter(&self) -> usize {
        self.filter_sizes.iter().copied().max().unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.embedding_dim == 0 {
            return Err(Error::Config("embedding dimension must be positive".into()));
        }
        for p in [self.dropout_embed, self.dropout_penultimate] {
            if !(0.0..1.0).contains(&p) {
                return Err(Error::Config(format!("dropout rate {p} must be in [0, 1)")));
            }
        }
        if self.kind.is_cnn() {
            if self.filter_sizes.is_empty() || self.filter_sizes.contains(&0) {
                return Err(Error::Config("CNN needs at least one positive filter size".into()));
            }
            if self.filters_per_size == 0 || self.dense_dim == 0 {
                return Err(Error::Config("CNN needs positive filter count and dense width".into()));
            }
        }
        if self.kind == ArchitectureKind::Lstm && self.lstm_units == 0 {
            return Err(Error::Config("LSTM needs positive unit count".into()));
        }
        Ok(())
    }

    /// Length of the pooled feature map for one filter size.
    pub(crate) fn pooled_len(max_length: usize, filter: usize) -> usize {
        (max_length + 1).saturating_sub(filter) / 2
    }

    /// Width of the concatenated flattened feature maps.
    pub fn concat_width(&self, max_length: usize) -> usize {
        self.filter_sizes
            .iter()
            .map(|&f| Self::pooled_len(max_length, f) * self.filters_per_size)
            .sum()
    }
}

/// One layer's output shape, batch dimension omitted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerShape {
    pub name: String,
    pub dims: Vec<usize>,
}

impl LayerShape {
    fn new(name: impl Into<String>, dims: Vec<usize>) -> Self {
        LayerShape { name: name.into(), dims }
    }
}

impl fmt::Display for LayerShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dims: Vec<String> = self.dims.iter().map(usize::to_string).collect();
        write!(f, "{}\t(None, {})", self.name, dims.join(", "))
    }
}

pub fn infer_shapes(arch: &ArchitectureDescriptor, max_length: usize, _vocab_size: usize) -> Result<Vec<LayerShape>> {
    arch.validate()?;
    if max_length == 0 {
        return Err(Error::Shape("input length must be positive".into()));
    }
    let e = arch.embedding_dim;
    let mut shapes = vec![
        LayerShape::new("input", vec![max_length]),
        LayerShape::new("embedding", vec![max_length, e]),
    ];
    match arch.kind {
        ArchitectureKind::MeanPool => {
            shapes.push(LayerShape::new("mean", vec![e]));
            shapes.push(LayerShape::new("output", vec![1]));
        }
        ArchitectureKind::Lstm => {
            shapes.push(LayerShape::new("lstm", vec![arch.lstm_units]));
            shapes.push(LayerShape::new("output", vec![1]));
        }
        ArchitectureKind::CnnRand | ArchitectureKind::CnnRandSimplified => {
            let max_filter = arch.max_filter();
            if max_length < max_filter {
                return Err(Error::Shape(format!(
                    "input length {max_length} is shorter than filter size {max_filter}"
                )));
            }
            let nf = arch.filters_per_size;
            let mut concat = 0;
            for &f in &arch.filter_sizes {
                let conv = max_length - f + 1;
                let pooled = conv / 2;
                if pooled == 0 {
                    return Err(Error::Shape(format!(
                        "filter size {f} leaves nothing to pool at input length {max_length}"
                    )));
                }
                shapes.push(LayerShape::new(format!("conv{f}"), vec![conv, nf]));
                shapes.push(LayerShape::new(format!("maxpool{f}"), vec![pooled, nf]));
                shapes.push(LayerShape::new(format!("flatten{f}"), vec![pooled * nf]));
                concat += pooled * nf;
            }
            shapes.push(LayerShape::new("concat", vec![concat]));
            shapes.push(LayerShape::new("dense", vec![arch.dense_dim]));
            shapes.push(LayerShape::new("output", vec![1]));
        }
    }
    Ok(shapes)
}

/// Trainable parameter count: embedding `v*E`, each convolution
/// `f*E*filters + filters`, each dense layer `(in+1)*out`, and a standard
/// four-gate LSTM `4*(u*(E+u)+u)`.
pub fn count_parameters(arch: &ArchitectureDescriptor, max_length: usize, vocab_size: usize) -> Result<u64> {
    infer_shapes(arch, max_length, vocab_size)?;
    let e = arch.embedding_dim as u64;
    let mut total = vocab_size as u64 * e;
    let dense = |input: u64, output: u64| (input + 1) * output;
    match arch.kind {
        ArchitectureKind::MeanPool => total += dense(e, 1),
        ArchitectureKind::Lstm => {
            let u = arch.lstm_units as u64;
            total += 4 * (u * (e + u) + u);
            total += dense(u, 1);
        }
        ArchitectureKind::CnnRand | ArchitectureKind::CnnRandSimplified => {
            let nf = arch.filters_per_size as u64;
            for &f in &arch.filter_sizes {
                total += f as u64 * e * nf + nf;
            }
            let concat = arch.concat_width(max_length) as u64;
            total += dense(concat, arch.dense_dim as u64);
            total += dense(arch.dense_dim as u64, 1);
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dims(shapes: &[LayerShape], name: &str) -> Vec<usize> {
        shapes.iter().find(|s| s.name == name).unwrap().dims.clone()
    }

    #[test]
    fn cnn_rand_walkthrough() {
        let s = infer_shapes(&ArchitectureDescriptor::cnn_rand(), 38, 1234).unwrap();
        assert_eq!(dims(&s, "input"), vec![38]);
        assert_eq!(dims(&s, "embedding"), vec![38, 50]);
        assert_eq!(dims(&s, "conv3"), vec![36, 100]);
        assert_eq!(dims(&s, "conv4"), vec![35, 100]);
        assert_eq!(dims(&s, "conv5"), vec![34, 100]);
        assert_eq!(dims(&s, "maxpool3"), vec![18, 100]);
        assert_eq!(dims(&s, "maxpool4"), vec![17, 100]);
        assert_eq!(dims(&s, "maxpool5"), vec![17, 100]);
        assert_eq!(dims(&s, "flatten3"), vec![1800]);
        assert_eq!(dims(&s, "flatten4"), vec![1700]);
        assert_eq!(dims(&s, "flatten5"), vec![1700]);
        assert_eq!(dims(&s, "concat"), vec![5200]);
        assert_eq!(dims(&s, "dense"), vec![50]);
        assert_eq!(dims(&s, "output"), vec![1]);
    }

    #[test]
    fn mean_pool_and_lstm_shapes() {
        let s = infer_shapes(&ArchitectureDescriptor::mean_pool(), 10, 5).unwrap();
        let all: Vec<Vec<usize>> = s.iter().map(|l| l.dims.clone()).collect();
        assert_eq!(all, vec![vec![10], vec![10, 20], vec![20], vec![1]]);
        let s = infer_shapes(&ArchitectureDescriptor::lstm(), 38, 5).unwrap();
        assert_eq!(dims(&s, "embedding"), vec![38, 32]);
        assert_eq!(dims(&s, "lstm"), vec![100]);
    }

    #[test]
    fn short_inputs_are_shape_errors() {
        let arch = ArchitectureDescriptor::cnn_rand_simplified();
        assert!(matches!(infer_shapes(&arch, 7, 10), Err(Error::Shape(_))));
        assert!(matches!(infer_shapes(&arch, 8, 10), Err(Error::Shape(_))));
        assert!(infer_shapes(&arch, 9, 10).is_ok());
    }

    #[test]
    fn parameter_counts() {
        let mut mp = ArchitectureDescriptor::mean_pool();
        mp.embedding_dim = 4;
        assert_eq!(count_parameters(&mp, 10, 100).unwrap(), 405);
        assert_eq!(count_parameters(&mp, 10, 0).unwrap(), 5);

        // independent tally: conv3 + conv8, L=20 gives pooled 9 and 6
        let simplified = ArchitectureDescriptor::cnn_rand_simplified();
        let expected = 10 * 20 + (3 * 20 * 10 + 10) + (8 * 20 * 10 + 10) + (150 + 1) * 50 + (50 + 1);
        assert_eq!(count_parameters(&simplified, 20, 10).unwrap(), expected);
    }

    #[test]
    fn kind_tags_parse() {
        for k in [ArchitectureKind::CnnRand, ArchitectureKind::CnnRandSimplified, ArchitectureKind::Lstm, ArchitectureKind::MeanPool] {
            assert_eq!(k.tag().parse::<ArchitectureKind>().unwrap(), k);
        }
    }
}
