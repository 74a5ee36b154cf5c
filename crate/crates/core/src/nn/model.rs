//! The trainable classifiers: masked mean-pool and the (simplified)
//! CNN-rand, with hand-written reverse-mode gradients.

use std::io::{BufRead, Write};
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::arch::{infer_shapes, ArchitectureDescriptor, ArchitectureKind};
use super::tensor::{ParamSet, Tensor};
use crate::corpus::Polarity;
use crate::error::{Error, Result};
use crate::segment::{EncodedSequence, PAD_ID};

/// Forward-pass mode. Only training mode consults the RNG.
pub enum Mode<'a> {
    Train(&'a mut ChaCha8Rng),
    Eval,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    arch: ArchitectureDescriptor,
    max_length: usize,
    vocab_size: usize,
    params: ParamSet,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Binary cross-entropy written on the logit: `softplus(z) - y*z`.
fn bce_from_logit(z: f64, y: f64) -> f64 {
    z.max(0.0) - z * y + (-z.abs()).exp().ln_1p()
}

fn dropout_mask(rng: Option<&mut ChaCha8Rng>, rate: f64, len: usize) -> Option<Vec<f64>> {
    let rng = rng?;
    if rate <= 0.0 {
        return None;
    }
    let keep = 1.0 / (1.0 - rate);
    Some((0..len).map(|_| if rng.gen::<f64>() < rate { 0.0 } else { keep }).collect())
}

/// Per-filter forward values kept for the backward pass.
struct ConvCache {
    pre: Vec<f64>,
    argmax: Vec<usize>,
}

struct Slots {
    conv: Vec<(usize, usize)>,
    dense_w: usize,
    dense_b: usize,
    out_w: usize,
    out_b: usize,
}

impl Model {
    /// Seeded initialization: embeddings uniform in [-0.05, 0.05], conv and
    /// dense weights uniform in +-1/sqrt(fan_in), zero biases.
    pub fn new(arch: ArchitectureDescriptor, max_length: usize, vocab_size: usize, rng: &mut ChaCha8Rng) -> Result<Self> {
        let mut model = Self::zeros(arch, max_length, vocab_size)?;
        let e = model.arch.embedding_dim;
        for t in &mut model.params.tensors {
            if t.name.ends_with(".bias") {
                continue;
            }
            let bound = if t.name == "embedding" {
                0.05
            } else {
                let fan_in: usize = if t.name.starts_with("conv") { t.dims[1] * e } else { t.dims[0] };
                1.0 / (fan_in.max(1) as f64).sqrt()
            };
            for x in &mut t.data {
                *x = rng.gen_range(-bound..=bound);
            }
        }
        Ok(model)
    }

    pub fn zeros(arch: ArchitectureDescriptor, max_length: usize, vocab_size: usize) -> Result<Self> {
        infer_shapes(&arch, max_length, vocab_size)?;
        let e = arch.embedding_dim;
        let mut tensors = vec![Tensor::zeros("embedding", vec![vocab_size, e])];
        match arch.kind {
            ArchitectureKind::MeanPool => {
                tensors.push(Tensor::zeros("output.weight", vec![e, 1]));
                tensors.push(Tensor::zeros("output.bias", vec![1]));
            }
            ArchitectureKind::CnnRand | ArchitectureKind::CnnRandSimplified => {
                let nf = arch.filters_per_size;
                for (i, &f) in arch.filter_sizes.iter().enumerate() {
                    tensors.push(Tensor::zeros(format!("conv{i}.weight"), vec![nf, f, e]));
                    tensors.push(Tensor::zeros(format!("conv{i}.bias"), vec![nf]));
                }
                let concat = arch.concat_width(max_length);
                tensors.push(Tensor::zeros("dense.weight", vec![concat, arch.dense_dim]));
                tensors.push(Tensor::zeros("dense.bias", vec![arch.dense_dim]));
                tensors.push(Tensor::zeros("output.weight", vec![arch.dense_dim, 1]));
                tensors.push(Tensor::zeros("output.bias", vec![1]));
            }
            ArchitectureKind::Lstm => {
                return Err(Error::Config(
                    "lstm is available for shape and memory accounting only, not training".into(),
                ))
            }
        }
        Ok(Model {
            arch,
            max_length,
            vocab_size,
            params: ParamSet { tensors },
        })
    }

    pub fn arch(&self) -> &ArchitectureDescriptor {
        &self.arch
    }

    pub fn max_length(&self) -> usize {
        self.max_length
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    fn slots(&self) -> Slots {
        let n = self.arch.filter_sizes.len();
        match self.arch.kind {
            ArchitectureKind::MeanPool => Slots {
                conv: Vec::new(),
                dense_w: usize::MAX,
                dense_b: usize::MAX,
                out_w: 1,
                out_b: 2,
            },
            _ => Slots {
                conv: (0..n).map(|i| (1 + 2 * i, 2 + 2 * i)).collect(),
                dense_w: 1 + 2 * n,
                dense_b: 2 + 2 * n,
                out_w: 3 + 2 * n,
                out_b: 4 + 2 * n,
            },
        }
    }

    fn check_input(&self, seq: &EncodedSequence) -> Result<()> {
        if let Some(&bad) = seq.ids.iter().find(|&&id| id as usize >= self.vocab_size) {
            return Err(Error::InputDomain(format!(
                "token id {bad} is outside the vocabulary of size {}",
                self.vocab_size
            )));
        }
        if self.arch.kind.is_cnn() && seq.ids.len() != self.max_length {
            return Err(Error::Shape(format!(
                "sequence length {} does not match model input length {}",
                seq.ids.len(),
                self.max_length
            )));
        }
        Ok(())
    }

    /// Sigmoid probabilities for a batch.
    pub fn forward(&self, batch: &[EncodedSequence], mode: Mode<'_>) -> Result<Vec<f64>> {
        let mut rng = match mode {
            Mode::Train(rng) => Some(rng),
            Mode::Eval => None,
        };
        let mut out = Vec::with_capacity(batch.len());
        for seq in batch {
            self.check_input(seq)?;
            let z = self.example(&seq.ids, None, rng.as_deref_mut(), None);
            out.push(sigmoid(z).clamp(f64::EPSILON, 1.0 - f64::EPSILON));
        }
        Ok(out)
    }

    /// Mean binary cross-entropy plus `l2 * ||dense weights||^2`, and the
    /// gradient of that loss for every parameter tensor.
    pub fn loss_and_gradients(
        &self,
        batch: &[EncodedSequence],
        labels: &[Polarity],
        l2: f64,
        mode: Mode<'_>,
    ) -> Result<(f64, ParamSet)> {
        if batch.is_empty() || batch.len() != labels.len() {
            return Err(Error::InputDomain(format!(
                "batch of {} sequences with {} labels",
                batch.len(),
                labels.len()
            )));
        }
        let mut rng = match mode {
            Mode::Train(rng) => Some(rng),
            Mode::Eval => None,
        };
        let mut grads = ParamSet::zeros_like(&self.params);
        let scale = 1.0 / batch.len() as f64;
        let mut loss = 0.0;
        for (seq, label) in batch.iter().zip(labels) {
            self.check_input(seq)?;
            let y = label.target();
            let z = self.example(&seq.ids, Some((y, scale)), rng.as_deref_mut(), Some(&mut grads));
            loss += bce_from_logit(z, y) * scale;
        }
        if l2 != 0.0 {
            let slots = self.slots();
            for idx in [slots.dense_w, slots.out_w] {
                if let Some(w) = self.params.tensors.get(idx) {
                    loss += l2 * w.squared_norm();
                    for (g, x) in grads.tensors[idx].data.iter_mut().zip(&w.data) {
                        *g += 2.0 * l2 * x;
                    }
                }
            }
        }
        if !loss.is_finite() || !grads.all_finite() {
            return Err(Error::Numerical(format!(
                "non-finite loss {loss} over a batch of {}",
                batch.len()
            )));
        }
        Ok((loss, grads))
    }

    /// One example: returns the output logit, accumulating `scale * dLoss`
    /// into `grads` when a target is given.
    fn example(&self, ids: &[u32], target: Option<(f64, f64)>, rng: Option<&mut ChaCha8Rng>, grads: Option<&mut ParamSet>) -> f64 {
        match self.arch.kind {
            ArchitectureKind::MeanPool => self.mean_pool_example(ids, target, rng, grads),
            _ => self.cnn_example(ids, target, rng, grads),
        }
    }

    fn mean_pool_example(&self, ids: &[u32], target: Option<(f64, f64)>, rng: Option<&mut ChaCha8Rng>, grads: Option<&mut ParamSet>) -> f64 {
        let e = self.arch.embedding_dim;
        let emb = &self.params.tensors[0].data;
        let w = &self.params.tensors[1].data;
        let b = self.params.tensors[2].data[0];
        let positions: Vec<usize> = ids.iter().filter(|&&id| id != PAD_ID).map(|&id| id as usize).collect();
        let n = positions.len();
        let mask = dropout_mask(rng, self.arch.dropout_embed, n * e);
        let mut mean = vec![0.0; e];
        if n > 0 {
            for (p, &id) in positions.iter().enumerate() {
                for k in 0..e {
                    let m = mask.as_ref().map_or(1.0, |m| m[p * e + k]);
                    mean[k] += emb[id * e + k] * m;
                }
            }
            mean.iter_mut().for_each(|x| *x /= n as f64);
        }
        let z = b + mean.iter().zip(w).map(|(a, b)| a * b).sum::<f64>();

        if let (Some((y, scale)), Some(grads)) = (target, grads) {
            let dz = (sigmoid(z) - y) * scale;
            for (g, m) in grads.tensors[1].data.iter_mut().zip(&mean) {
                *g += dz * m;
            }
            grads.tensors[2].data[0] += dz;
            if n > 0 {
                let inv = 1.0 / n as f64;
                let g_emb = &mut grads.tensors[0].data;
                for (p, &id) in positions.iter().enumerate() {
                    for k in 0..e {
                        let m = mask.as_ref().map_or(1.0, |m| m[p * e + k]);
                        g_emb[id * e + k] += dz * w[k] * m * inv;
                    }
                }
            }
        }
        z
    }

    fn cnn_example(&self, ids: &[u32], target: Option<(f64, f64)>, mut rng: Option<&mut ChaCha8Rng>, grads: Option<&mut ParamSet>) -> f64 {
        let e = self.arch.embedding_dim;
        let nf = self.arch.filters_per_size;
        let len = self.max_length;
        let dense = self.arch.dense_dim;
        let slots = self.slots();
        let t = &self.params.tensors;
        let emb = &t[0].data;

        let x_mask = dropout_mask(rng.as_deref_mut(), self.arch.dropout_embed, len * e);
        let mut x = vec![0.0; len * e];
        for (pos, &id) in ids.iter().enumerate() {
            if id == PAD_ID {
                continue;
            }
            let row = id as usize * e;
            for k in 0..e {
                let m = x_mask.as_ref().map_or(1.0, |m| m[pos * e + k]);
                x[pos * e + k] = emb[row + k] * m;
            }
        }

        let mut concat = Vec::with_capacity(self.arch.concat_width(len));
        let mut caches = Vec::with_capacity(self.arch.filter_sizes.len());
        for (fi, &f) in self.arch.filter_sizes.iter().enumerate() {
            let (wi, bi) = slots.conv[fi];
            let (w, b) = (&t[wi].data, &t[bi].data);
            let steps = len + 1 - f;
            let mut pre = vec![0.0; steps * nf];
            for s in 0..steps {
                let window = &x[s * e..(s + f) * e];
                for c in 0..nf {
                    let kernel = &w[c * f * e..(c + 1) * f * e];
                    pre[s * nf + c] = b[c] + kernel.iter().zip(window).map(|(a, b)| a * b).sum::<f64>();
                }
            }
            let pooled_len = steps / 2;
            let mut argmax = Vec::with_capacity(pooled_len * nf);
            for p in 0..pooled_len {
                for c in 0..nf {
                    let (i0, i1) = ((2 * p) * nf + c, (2 * p + 1) * nf + c);
                    let (a0, a1) = (pre[i0].max(0.0), pre[i1].max(0.0));
                    let (arg, val) = if a0 >= a1 { (i0, a0) } else { (i1, a1) };
                    argmax.push(arg);
                    concat.push(val);
                }
            }
            caches.push(ConvCache { pre, argmax });
        }

        let c_mask = dropout_mask(rng, self.arch.dropout_penultimate, concat.len());
        if let Some(m) = &c_mask {
            concat.iter_mut().zip(m).for_each(|(v, m)| *v *= m);
        }

        let (w1, b1) = (&t[slots.dense_w].data, &t[slots.dense_b].data);
        let mut hidden = b1.clone();
        for (i, &ci) in concat.iter().enumerate() {
            if ci == 0.0 {
                continue;
            }
            let row = &w1[i * dense..(i + 1) * dense];
            hidden.iter_mut().zip(row).for_each(|(h, w)| *h += ci * w);
        }
        hidden.iter_mut().for_each(|h| *h = sigmoid(*h));
        let (w2, b2) = (&t[slots.out_w].data, t[slots.out_b].data[0]);
        let z = b2 + hidden.iter().zip(w2).map(|(a, b)| a * b).sum::<f64>();

        let (Some((y, scale)), Some(g)) = (target, grads) else {
            return z;
        };
        let dz = (sigmoid(z) - y) * scale;
        for (gw, h) in g.tensors[slots.out_w].data.iter_mut().zip(&hidden) {
            *gw += dz * h;
        }
        g.tensors[slots.out_b].data[0] += dz;
        let d_pre: Vec<f64> = (0..dense).map(|j| dz * w2[j] * hidden[j] * (1.0 - hidden[j])).collect();
        {
            let gw1 = &mut g.tensors[slots.dense_w].data;
            for (i, &ci) in concat.iter().enumerate() {
                if ci == 0.0 {
                    continue;
                }
                let row = &mut gw1[i * dense..(i + 1) * dense];
                row.iter_mut().zip(&d_pre).for_each(|(gw, d)| *gw += ci * d);
            }
        }
        g.tensors[slots.dense_b].data.iter_mut().zip(&d_pre).for_each(|(gb, d)| *gb += d);
        let mut d_concat: Vec<f64> = (0..concat.len())
            .map(|i| w1[i * dense..(i + 1) * dense].iter().zip(&d_pre).map(|(w, d)| w * d).sum())
            .collect();
        if let Some(m) = &c_mask {
            d_concat.iter_mut().zip(m).for_each(|(d, m)| *d *= m);
        }

        let mut dx = vec![0.0; len * e];
        let mut offset = 0;
        for (fi, &f) in self.arch.filter_sizes.iter().enumerate() {
            let (wi, bi) = slots.conv[fi];
            let w = &t[wi].data;
            let cache = &caches[fi];
            let steps = len + 1 - f;
            let mut d_pre_conv = vec![0.0; steps * nf];
            for (k, &arg) in cache.argmax.iter().enumerate() {
                if cache.pre[arg] > 0.0 {
                    d_pre_conv[arg] += d_concat[offset + k];
                }
            }
            offset += cache.argmax.len();
            for s in 0..steps {
                for c in 0..nf {
                    let d = d_pre_conv[s * nf + c];
                    if d == 0.0 {
                        continue;
                    }
                    g.tensors[bi].data[c] += d;
                    let kernel = c * f * e;
                    for q in 0..f * e {
                        g.tensors[wi].data[kernel + q] += d * x[s * e + q];
                        dx[s * e + q] += d * w[kernel + q];
                    }
                }
            }
        }
        let g_emb = &mut g.tensors[0].data;
        for (pos, &id) in ids.iter().enumerate() {
            if id == PAD_ID {
                continue;
            }
            let row = id as usize * e;
            for k in 0..e {
                let m = x_mask.as_ref().map_or(1.0, |m| m[pos * e + k]);
                g_emb[row + k] += dx[pos * e + k] * m;
            }
        }
        z
    }

    /// Smallest distance of the batch to a non-differentiable point: a
    /// ReLU pre-activation at zero or a tied max-pool window. Infinite for
    /// mean-pool models, which are smooth everywhere.
    pub fn kink_margin(&self, batch: &[EncodedSequence]) -> f64 {
        if !self.arch.kind.is_cnn() {
            return f64::INFINITY;
        }
        let e = self.arch.embedding_dim;
        let nf = self.arch.filters_per_size;
        let len = self.max_length;
        let slots = self.slots();
        let emb = &self.params.tensors[0].data;
        let mut margin = f64::INFINITY;
        for seq in batch {
            let mut x = vec![0.0; len * e];
            for (pos, &id) in seq.ids.iter().enumerate() {
                if id != PAD_ID {
                    x[pos * e..(pos + 1) * e].copy_from_slice(&emb[id as usize * e..(id as usize + 1) * e]);
                }
            }
            for (fi, &f) in self.arch.filter_sizes.iter().enumerate() {
                let (wi, bi) = slots.conv[fi];
                let (w, b) = (&self.params.tensors[wi].data, &self.params.tensors[bi].data);
                let steps = len + 1 - f;
                let mut pre = vec![0.0; steps * nf];
                for s in 0..steps {
                    for c in 0..nf {
                        let v = b[c] + w[c * f * e..(c + 1) * f * e].iter().zip(&x[s * e..(s + f) * e]).map(|(a, b)| a * b).sum::<f64>();
                        pre[s * nf + c] = v;
                        margin = margin.min(v.abs());
                    }
                }
                for p in 0..steps / 2 {
                    for c in 0..nf {
                        let (a0, a1) = (pre[2 * p * nf + c], pre[(2 * p + 1) * nf + c]);
                        if a0 > 0.0 || a1 > 0.0 {
                            margin = margin.min((a0.max(0.0) - a1.max(0.0)).abs());
                        }
                    }
                }
            }
        }
        margin
    }

    pub fn write<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let a = &self.arch;
        writeln!(
            w,
            "#segtr-model v1 kind={} E={} L={} v={}",
            a.kind.tag(),
            a.embedding_dim,
            self.max_length,
            self.vocab_size
        )?;
        let filters: Vec<String> = a.filter_sizes.iter().map(usize::to_string).collect();
        writeln!(
            w,
            "#arch filter_sizes={} filters={} dense={} dropout_embed={} dropout_penultimate={} lstm_units={}",
            if filters.is_empty() { "-".to_string() } else { filters.join(",") },
            a.filters_per_size,
            a.dense_dim,
            a.dropout_embed,
            a.dropout_penultimate,
            a.lstm_units
        )?;
        for t in &self.params.tensors {
            let dims: Vec<String> = t.dims.iter().map(usize::to_string).collect();
            writeln!(w, "{} {}", t.name, dims.join(" "))?;
            let row = if t.dims.len() >= 2 { t.dims[1..].iter().product() } else { t.len().max(1) };
            if t.is_empty() {
                continue;
            }
            for chunk in t.data.chunks(row) {
                let line: Vec<String> = chunk.iter().map(|x| format!("{x:.16e}")).collect();
                writeln!(w, "{}", line.join(" "))?;
            }
        }
        Ok(())
    }

    pub fn to_file_string(&self) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_file_string()).map_err(|e| Error::io(path, e))
    }

    pub fn parse<R: BufRead>(reader: R, source_name: &str) -> Result<Self> {
        let err = |line: usize, msg: String| Error::parse(source_name, line, msg);
        let mut lines = Vec::new();
        for l in reader.lines() {
            lines.push(l.map_err(|e| Error::io(source_name, e))?);
        }
        let header = lines.first().ok_or_else(|| err(1, "missing model header".into()))?;
        let rest = header
            .strip_prefix("#segtr-model v1 ")
            .ok_or_else(|| err(1, format!("bad header '{header}'")))?;
        let fields = key_values(rest).map_err(|m| err(1, m))?;
        let kind: ArchitectureKind = field(&fields, "kind").map_err(|m| err(1, m))?.parse().map_err(|e: Error| err(1, e.to_string()))?;
        let e: usize = parse_field(&fields, "E").map_err(|m| err(1, m))?;
        let max_length: usize = parse_field(&fields, "L").map_err(|m| err(1, m))?;
        let vocab_size: usize = parse_field(&fields, "v").map_err(|m| err(1, m))?;

        let mut arch = ArchitectureDescriptor::for_kind(kind);
        arch.embedding_dim = e;
        let mut cursor = 1;
        if let Some(line) = lines.get(1).filter(|l| l.starts_with("#arch ")) {
            let f = key_values(&line["#arch ".len()..]).map_err(|m| err(2, m))?;
            let sizes = field(&f, "filter_sizes").map_err(|m| err(2, m))?;
            arch.filter_sizes = if sizes == "-" {
                Vec::new()
            } else {
                sizes
                    .split(',')
                    .map(|s| s.parse::<usize>().map_err(|_| err(2, format!("bad filter size '{s}'"))))
                    .collect::<Result<_>>()?
            };
            arch.filters_per_size = parse_field(&f, "filters").map_err(|m| err(2, m))?;
            arch.dense_dim = parse_field(&f, "dense").map_err(|m| err(2, m))?;
            arch.dropout_embed = parse_field(&f, "dropout_embed").map_err(|m| err(2, m))?;
            arch.dropout_penultimate = parse_field(&f, "dropout_penultimate").map_err(|m| err(2, m))?;
            arch.lstm_units = parse_field(&f, "lstm_units").map_err(|m| err(2, m))?;
            cursor = 2;
        }
        if vocab_size > 10_000_000 || e > 100_000 || max_length > 1_000_000 {
            return Err(err(1, "model dimensions are implausibly large".into()));
        }
        let mut model = Model::zeros(arch, max_length, vocab_size).map_err(|e| err(1, e.to_string()))?;
        if model.params.num_scalars() > 200_000_000 {
            return Err(err(1, "model is implausibly large".into()));
        }

        for tensor in &mut model.params.tensors {
            let line_no = cursor + 1;
            let head = lines.get(cursor).ok_or_else(|| err(line_no, format!("missing tensor {}", tensor.name)))?;
            let mut parts = head.split(' ');
            let name = parts.next().unwrap_or_default();
            let dims: Vec<usize> = parts
                .map(|d| d.parse::<usize>().map_err(|_| err(line_no, format!("bad dimension '{d}'"))))
                .collect::<Result<_>>()?;
            if name != tensor.name || dims != tensor.dims {
                return Err(err(
                    line_no,
                    format!("expected tensor {} {:?}, found {name} {dims:?}", tensor.name, tensor.dims),
                ));
            }
            cursor += 1;
            let mut filled = 0;
            while filled < tensor.len() {
                let line_no = cursor + 1;
                let line = lines.get(cursor).ok_or_else(|| err(line_no, format!("tensor {} is truncated", tensor.name)))?;
                for v in line.split(' ').filter(|s| !s.is_empty()) {
                    if filled >= tensor.len() {
                        return Err(err(line_no, format!("tensor {} has too many values", tensor.name)));
                    }
                    tensor.data[filled] = v
                        .parse::<f64>()
                        .ok()
                        .filter(|x| x.is_finite())
                        .ok_or_else(|| err(line_no, format!("bad value '{v}'")))?;
                    filled += 1;
                }
                cursor += 1;
            }
        }
        if let Some((i, _)) = lines.iter().enumerate().skip(cursor).find(|(_, l)| !l.trim().is_empty()) {
            return Err(err(i + 1, "trailing content after the last tensor".into()));
        }
        Ok(model)
    }

    pub fn parse_str(input: &str) -> Result<Self> {
        Self::parse(input.as_bytes(), "<input>")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::parse(std::io::BufReader::new(file), &path.display().to_string())
    }
}

fn key_values(s: &str) -> std::result::Result<Vec<(&str, &str)>, String> {
    s.split_whitespace()
        .map(|kv| kv.split_once('=').ok_or_else(|| format!("expected key=value, got '{kv}'")))
        .collect()
}

fn field<'a>(fields: &[(&str, &'a str)], key: &str) -> std::result::Result<&'a str, String> {
    fields
        .iter()
        .find(|(k, _)| *k == key)
        .map(|(_, v)| *v)
        .ok_or_else(|| format!("missing field '{key}'"))
}

fn parse_field<T: std::str::FromStr>(fields: &[(&str, &str)], key: &str) -> std::result::Result<T, String> {
    let v = field(fields, key)?;
    v.parse().map_err(|_| format!("bad value '{v}' for '{key}'"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::segment::EncodedSequence;
    use rand::SeedableRng;

    fn seq(ids: &[u32]) -> EncodedSequence {
        EncodedSequence {
            ids: ids.to_vec(),
            true_length: ids.iter().filter(|&&i| i != 0).count(),
            review_id: 0,
            sentence_index: 0,
            truncated: false,
        }
    }

    fn small_cnn() -> ArchitectureDescriptor {
        let mut a = ArchitectureDescriptor::cnn_rand_simplified();
        a.embedding_dim = 3;
        a.filter_sizes = vec![2, 3];
        a.filters_per_size = 2;
        a.dense_dim = 4;
        a
    }

    #[test]
    fn zero_weights_give_one_half() {
        let m = Model::zeros(ArchitectureDescriptor::mean_pool(), 4, 5).unwrap();
        assert_eq!(m.forward(&[seq(&[1, 2, 0, 0])], Mode::Eval).unwrap(), vec![0.5]);
        let m = Model::zeros(small_cnn(), 6, 5).unwrap();
        assert_eq!(m.forward(&[seq(&[1, 2, 3, 4, 0, 0])], Mode::Eval).unwrap(), vec![0.5]);
    }

    #[test]
    fn one_half_loss_is_ln2() {
        let m = Model::zeros(ArchitectureDescriptor::mean_pool(), 4, 5).unwrap();
        let (loss, _) = m.loss_and_gradients(&[seq(&[1, 0, 0, 0])], &[Polarity::Positive], 0.0, Mode::Eval).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn l2_adds_exact_penalty() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = Model::new(small_cnn(), 6, 5, &mut rng).unwrap();
        let batch = [seq(&[1, 2, 3, 4, 0, 0])];
        let labels = [Polarity::Negative];
        let (plain, _) = m.loss_and_gradients(&batch, &labels, 0.0, Mode::Eval).unwrap();
        let (reg, _) = m.loss_and_gradients(&batch, &labels, 0.1, Mode::Eval).unwrap();
        let norm = m.params().get("dense.weight").unwrap().squared_norm() + m.params().get("output.weight").unwrap().squared_norm();
        assert!((reg - plain - 0.1 * norm).abs() < 1e-12);
    }

    #[test]
    fn out_of_vocabulary_id_is_rejected() {
        let m = Model::zeros(ArchitectureDescriptor::mean_pool(), 4, 5).unwrap();
        assert!(matches!(m.forward(&[seq(&[5, 0, 0, 0])], Mode::Eval), Err(Error::InputDomain(_))));
    }

    #[test]
    fn lstm_is_descriptor_only() {
        assert!(matches!(Model::zeros(ArchitectureDescriptor::lstm(), 10, 10), Err(Error::Config(_))));
    }

    #[test]
    fn eval_is_deterministic_and_train_uses_dropout() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = Model::new(small_cnn(), 6, 5, &mut rng).unwrap();
        let batch = [seq(&[1, 2, 3, 4, 2, 0]), seq(&[4, 4, 0, 0, 0, 0])];
        let a = m.forward(&batch, Mode::Eval).unwrap();
        assert_eq!(a, m.forward(&batch, Mode::Eval).unwrap());
        let mut drop_rng = ChaCha8Rng::seed_from_u64(9);
        let t = m.forward(&batch, Mode::Train(&mut drop_rng)).unwrap();
        assert_ne!(a, t);
    }

    #[test]
    fn model_file_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = Model::new(small_cnn(), 7, 6, &mut rng).unwrap();
        let text = m.to_file_string();
        assert!(text.starts_with("#segtr-model v1 kind=cnn-rand-simplified E=3 L=7 v=6\n"));
        let back = Model::parse_str(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_file_string(), text);

        let mp = Model::new(ArchitectureDescriptor::mean_pool(), 4, 3, &mut rng).unwrap();
        assert_eq!(Model::parse_str(&mp.to_file_string()).unwrap(), mp);
    }

    #[test]
    fn model_file_errors() {
        assert!(Model::parse_str("").is_err());
        assert!(Model::parse_str("#segtr-model v1 kind=mean-pool E=2 L=3 v=2\n").is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mp = Model::new(ArchitectureDescriptor::mean_pool(), 4, 3, &mut rng).unwrap();
        let text = mp.to_file_string();
        let truncated: String = text.lines().take(4).collect::<Vec<_>>().join("\n");
        assert!(Model::parse_str(&truncated).is_err());
        assert!(Model::parse_str(&format!("{text}junk\n")).is_err());
        assert!(Model::parse_str(&text.replace("output.bias", "bias")).is_err());
    }

    fn max_rel_error(m: &Model, batch: &[EncodedSequence], labels: &[Polarity], l2: f64) -> f64 {
        let (_, grads) = m.loss_and_gradients(batch, labels, l2, Mode::Eval).unwrap();
        let eps = 1e-4;
        let mut worst: f64 = 0.0;
        for (ti, t) in m.params().tensors.iter().enumerate() {
            for j in 0..t.len() {
                let mut plus = m.clone();
                plus.params_mut().tensors[ti].data[j] += eps;
                let mut minus = m.clone();
                minus.params_mut().tensors[ti].data[j] -= eps;
                let lp = plus.loss_and_gradients(batch, labels, l2, Mode::Eval).unwrap().0;
                let lm = minus.loss_and_gradients(batch, labels, l2, Mode::Eval).unwrap().0;
                let numeric = (lp - lm) / (2.0 * eps);
                let analytic = grads.tensors[ti].data[j];
                let denom = numeric.abs().max(analytic.abs()).max(1e-7);
                worst = worst.max((numeric - analytic).abs() / denom);
            }
        }
        worst
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let batch = [seq(&[1, 2, 3, 4, 2, 0]), seq(&[4, 3, 3, 0, 0, 0])];
        let labels = [Polarity::Positive, Polarity::Negative];
        let mp = Model::new(ArchitectureDescriptor::mean_pool(), 6, 5, &mut rng).unwrap();
        assert!(max_rel_error(&mp, &batch, &labels, 0.01) < 1e-4);
        let cnn = loop {
            let mut cnn = Model::new(small_cnn(), 6, 5, &mut rng).unwrap();
            for t in &mut cnn.params_mut().tensors {
                t.data.iter_mut().for_each(|x| *x = rng.gen_range(-0.5..0.5));
            }
            if cnn.kink_margin(&batch) > 1e-3 {
                break cnn;
            }
        };
        assert!(max_rel_error(&cnn, &batch, &labels, 0.01) < 1e-4);
    }
}
