//! Fixed-window next-token predictor trained with plain minibatch SGD.
//!
//! The last `context_len` tokens are embedded and concatenated, passed through
//! one tanh hidden layer and a softmax over the vocabulary. Positions before
//! the start of a sample read a dedicated padding embedding (row `vocab_size`
//! of the embedding table), so every token after the first is predicted.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Sample, TokenId};
use crate::error::{Error, Result};
use crate::fingerprint::Fingerprint;

/// Initial parameters are drawn uniformly from `[-INIT_SCALE, INIT_SCALE]`.
pub const INIT_SCALE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TinyLmConfig {
    pub vocab_size: usize,
    pub context_len: usize,
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub learning_rate: f64,
    /// Predicted positions per SGD step.
    pub batch_size: usize,
    pub pretrain_passes: u32,
    pub finetune_passes: u32,
    pub seed: u64,
}

fn default_batch_size() -> usize {
    16
}

impl Default for TinyLmConfig {
    fn default() -> Self {
        TinyLmConfig {
            vocab_size: 256,
            context_len: 8,
            embed_dim: 16,
            hidden_dim: 64,
            learning_rate: 0.5,
            batch_size: default_batch_size(),
            pretrain_passes: 4,
            finetune_passes: 1,
            seed: 0,
        }
    }
}

impl TinyLmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.vocab_size < 2 {
            return Err(Error::Config(format!(
                "vocab_size must be at least 2, got {}",
                self.vocab_size
            )));
        }
        for (name, v) in [
            ("context_len", self.context_len),
            ("embed_dim", self.embed_dim),
            ("hidden_dim", self.hidden_dim),
            ("batch_size", self.batch_size),
        ] {
            if v < 1 {
                return Err(Error::Config(format!("{name} must be at least 1")));
            }
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }

    pub fn fingerprint(&self) -> String {
        let mut fp = Fingerprint::new("tiny-lm-config");
        fp.u64(self.vocab_size as u64)
            .u64(self.context_len as u64)
            .u64(self.embed_dim as u64)
            .u64(self.hidden_dim as u64)
            .f64(self.learning_rate)
            .u64(self.batch_size as u64)
            .u64(self.pretrain_passes as u64)
            .u64(self.finetune_passes as u64)
            .u64(self.seed);
        fp.hex()
    }

    fn layout(&self) -> Layout {
        let (v, l, d, h) = (self.vocab_size, self.context_len, self.embed_dim, self.hidden_dim);
        let embed = 0;
        let w1 = embed + (v + 1) * d;
        let b1 = w1 + h * l * d;
        let w2 = b1 + h;
        let b2 = w2 + v * h;
        Layout {
            embed,
            w1,
            b1,
            w2,
            b2,
            len: b2 + v,
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.layout().len
    }
}

#[derive(Debug, Clone, Copy)]
struct Layout {
    embed: usize,
    w1: usize,
    b1: usize,
    w2: usize,
    b2: usize,
    len: usize,
}

/// Parameters of the tiny language model, flattened in the order
/// embeddings, hidden weights, hidden bias, output weights, output bias.
#[derive(Debug, Clone, PartialEq)]
pub struct TinyLm {
    cfg: TinyLmConfig,
    params: Vec<f64>,
}

/// Scratch buffers for one forward/backward pass.
struct Scratch {
    x: Vec<f64>,
    hidden: Vec<f64>,
    logits: Vec<f64>,
    dh: Vec<f64>,
    dx: Vec<f64>,
    ctx: Vec<usize>,
}

impl Scratch {
    fn new(cfg: &TinyLmConfig) -> Self {
        Scratch {
            x: vec![0.0; cfg.context_len * cfg.embed_dim],
            hidden: vec![0.0; cfg.hidden_dim],
            logits: vec![0.0; cfg.vocab_size],
            dh: vec![0.0; cfg.hidden_dim],
            dx: vec![0.0; cfg.context_len * cfg.embed_dim],
            ctx: vec![0; cfg.context_len],
        }
    }
}

impl TinyLm {
    pub fn init(cfg: TinyLmConfig) -> Result<Self> {
        cfg.validate()?;
        let mut seed = Fingerprint::new("tiny-lm-init");
        seed.u64(cfg.seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed.seed());
        let params = (0..cfg.parameter_count())
            .map(|_| rng.random_range(-INIT_SCALE..=INIT_SCALE))
            .collect();
        Ok(TinyLm { cfg, params })
    }

    pub fn from_parts(cfg: TinyLmConfig, params: Vec<f64>) -> Result<Self> {
        cfg.validate()?;
        if params.len() != cfg.parameter_count() {
            return Err(Error::Config(format!(
                "expected {} parameters, got {}",
                cfg.parameter_count(),
                params.len()
            )));
        }
        Ok(TinyLm { cfg, params })
    }

    pub fn config(&self) -> &TinyLmConfig {
        &self.cfg
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn check_sample(&self, sample: &Sample) -> Result<()> {
        if let Some(&token) = sample.tokens.iter().find(|&&t| t as usize >= self.cfg.vocab_size) {
            return Err(Error::TokenOutOfVocabulary {
                sample_id: sample.sample_id.clone(),
                token,
                vocab_size: self.cfg.vocab_size,
            });
        }
        Ok(())
    }

    fn fill_context(&self, tokens: &[TokenId], pos: usize, ctx: &mut [usize]) {
        let l = self.cfg.context_len;
        let pad = self.cfg.vocab_size;
        for (j, slot) in ctx.iter_mut().enumerate() {
            // Token at pos - l + j, or padding before the start.
            *slot = (pos + j).checked_sub(l).map_or(pad, |idx| tokens[idx] as usize);
        }
    }

    /// Forward pass for one position; leaves activations in `s` and returns
    /// log-sum-exp of the logits.
    fn forward(&self, s: &mut Scratch) -> f64 {
        let TinyLmConfig {
            embed_dim: d,
            hidden_dim: h,
            vocab_size: v,
            ..
        } = self.cfg;
        let lay = self.cfg.layout();
        let p = &self.params;
        for (j, &id) in s.ctx.iter().enumerate() {
            let row = lay.embed + id * d;
            s.x[j * d..(j + 1) * d].copy_from_slice(&p[row..row + d]);
        }
        let in_dim = s.x.len();
        for k in 0..h {
            let w = &p[lay.w1 + k * in_dim..lay.w1 + (k + 1) * in_dim];
            let pre = p[lay.b1 + k] + dot(w, &s.x);
            s.hidden[k] = pre.tanh();
        }
        let mut max = f64::NEG_INFINITY;
        for t in 0..v {
            let w = &p[lay.w2 + t * h..lay.w2 + (t + 1) * h];
            let z = p[lay.b2 + t] + dot(w, &s.hidden);
            s.logits[t] = z;
            max = max.max(z);
        }
        let sum: f64 = s.logits.iter().map(|z| (z - max).exp()).sum();
        max + sum.ln()
    }

    /// Negative log-likelihood of each token after the first, in nats.
    /// Tokens must already be checked against the vocabulary.
    pub fn token_nlls(&self, tokens: &[TokenId]) -> Vec<f64> {
        let mut s = Scratch::new(&self.cfg);
        (1..tokens.len())
            .map(|pos| {
                self.fill_context(tokens, pos, &mut s.ctx);
                let lse = self.forward(&mut s);
                (lse - s.logits[tokens[pos] as usize]).max(0.0)
            })
            .collect()
    }

    /// Mean of [`TinyLm::token_nlls`], summed in position order.
    pub fn mean_nll(&self, tokens: &[TokenId]) -> f64 {
        let nlls = self.token_nlls(tokens);
        nlls.iter().sum::<f64>() / nlls.len() as f64
    }

    /// Minibatch SGD on next-token cross-entropy. Samples are visited in the
    /// given order, positions in order within a sample; a batch is the next
    /// `batch_size` predicted positions and may span samples. Each pass ends
    /// with a (possibly short) final step.
    pub fn train(&mut self, samples: &[&Sample], passes: u32) {
        let lay = self.cfg.layout();
        let mut grad = vec![0.0; lay.len];
        let mut s = Scratch::new(&self.cfg);
        for _ in 0..passes {
            let mut pending = 0usize;
            for sample in samples {
                for pos in 1..sample.tokens.len() {
                    self.fill_context(&sample.tokens, pos, &mut s.ctx);
                    self.accumulate(&mut s, sample.tokens[pos] as usize, &mut grad);
                    pending += 1;
                    if pending == self.cfg.batch_size {
                        self.step(&mut grad, pending);
                        pending = 0;
                    }
                }
            }
            if pending > 0 {
                self.step(&mut grad, pending);
            }
        }
    }

    fn accumulate(&self, s: &mut Scratch, target: usize, grad: &mut [f64]) {
        let TinyLmConfig {
            embed_dim: d,
            hidden_dim: h,
            vocab_size: v,
            ..
        } = self.cfg;
        let lay = self.cfg.layout();
        let lse = self.forward(s);
        let p = &self.params;

        // Softmax minus one-hot, reusing the logits buffer.
        for z in s.logits.iter_mut() {
            *z = (*z - lse).exp();
        }
        s.logits[target] -= 1.0;

        s.dh.iter_mut().for_each(|x| *x = 0.0);
        for t in 0..v {
            let g = s.logits[t];
            grad[lay.b2 + t] += g;
            let row = lay.w2 + t * h;
            axpy(g, &s.hidden, &mut grad[row..row + h]);
            axpy(g, &p[row..row + h], &mut s.dh);
        }

        let in_dim = s.x.len();
        s.dx.iter_mut().for_each(|x| *x = 0.0);
        for k in 0..h {
            let dpre = s.dh[k] * (1.0 - s.hidden[k] * s.hidden[k]);
            grad[lay.b1 + k] += dpre;
            let row = lay.w1 + k * in_dim;
            axpy(dpre, &s.x, &mut grad[row..row + in_dim]);
            axpy(dpre, &p[row..row + in_dim], &mut s.dx);
        }

        for (j, &id) in s.ctx.iter().enumerate() {
            let row = lay.embed + id * d;
            for c in 0..d {
                grad[row + c] += s.dx[j * d + c];
            }
        }
    }

    fn step(&mut self, grad: &mut [f64], batch: usize) {
        let scale = self.cfg.learning_rate / batch as f64;
        for (w, g) in self.params.iter_mut().zip(grad.iter_mut()) {
            *w -= scale * *g;
            *g = 0.0;
        }
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
