//! Joint objective `alpha * LM + beta * CLS` on a small sequence model with
//! hand-derived gradients.
//!
//! The toy model keeps a running mean of token embeddings, `m_t`, and a
//! hidden state `h_t = tanh(A m_t + c)`. Position `t` predicts token `t + 1`
//! through `W h_t`; the classifier reads the hidden state just before the
//! first `<answer>` token.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LossError {
    #[error("length mismatch: {logits} logit rows for {targets} targets")]
    LengthMismatch { logits: usize, targets: usize },
    #[error("empty sequence")]
    EmptySequence,
    #[error("missing-answer-token")]
    MissingAnswerToken,
    #[error("no-preceding-state: <answer> is the first token")]
    NoPrecedingState,
    #[error("token {0} outside the vocabulary")]
    UnknownToken(usize),
    #[error("invalid weights: alpha={alpha}, beta={beta}")]
    InvalidWeights { alpha: f64, beta: f64 },
    #[error("invalid label {0}")]
    InvalidLabel(u8),
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("bad parameter file: {0}")]
    Format(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub alpha: f64,
    pub beta: f64,
}

impl LossWeights {
    pub const LM_ONLY: LossWeights = LossWeights { alpha: 1.0, beta: 0.0 };
    pub const EQUAL: LossWeights = LossWeights { alpha: 1.0, beta: 1.0 };
    pub const CLS_HEAVY: LossWeights = LossWeights { alpha: 1.0, beta: 10.0 };

    pub fn new(alpha: f64, beta: f64) -> Result<Self, LossError> {
        let ok = alpha.is_finite() && beta.is_finite() && alpha >= 0.0 && beta >= 0.0 && (alpha > 0.0 || beta > 0.0);
        if ok {
            Ok(Self { alpha, beta })
        } else {
            Err(LossError::InvalidWeights { alpha, beta })
        }
    }

    /// Parses `a:b`.
    pub fn parse_ratio(text: &str) -> Result<Self, LossError> {
        let bad = || LossError::InvalidWeights { alpha: f64::NAN, beta: f64::NAN };
        let (a, b) = text.split_once(':').ok_or_else(bad)?;
        Self::new(a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?)
    }
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Summed negative log-likelihood of `targets` under row-wise softmax.
pub fn lm_loss(logits: &[Vec<f64>], targets: &[usize]) -> Result<f64, LossError> {
    if logits.len() != targets.len() {
        return Err(LossError::LengthMismatch { logits: logits.len(), targets: targets.len() });
    }
    if targets.is_empty() {
        return Err(LossError::EmptySequence);
    }
    let mut total = 0.0;
    for (row, &y) in logits.iter().zip(targets) {
        let target = *row.get(y).ok_or(LossError::UnknownToken(y))?;
        total += log_sum_exp(row) - target;
    }
    Ok(total)
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Binary cross-entropy on a logit: `max(z, 0) - z y + ln(1 + e^-|z|)`.
pub fn bce_with_logit(z: f64, y: u8) -> f64 {
    z.max(0.0) - z * f64::from(y) + (-z.abs()).exp().ln_1p()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierHead {
    pub w: Vec<f64>,
    pub b: f64,
}

impl ClassifierHead {
    pub fn zeros(d: usize) -> Self {
        Self { w: vec![0.0; d], b: 0.0 }
    }

    pub fn logit(&self, h: &[f64]) -> f64 {
        self.w.iter().zip(h).map(|(w, h)| w * h).sum::<f64>() + self.b
    }
}

/// Returns `(loss, p_hat)`.
pub fn cls_loss(h: &[f64], head: &ClassifierHead, y: u8) -> Result<(f64, f64), LossError> {
    if y > 1 {
        return Err(LossError::InvalidLabel(y));
    }
    if h.len() != head.w.len() {
        return Err(LossError::LengthMismatch { logits: head.w.len(), targets: h.len() });
    }
    let z = head.logit(h);
    Ok((bce_with_logit(z, y), sigmoid(z)))
}

/// Index of the token right before the first `answer_token`.
pub fn locate_answer_hidden(tokens: &[usize], answer_token: usize) -> Result<usize, LossError> {
    match tokens.iter().position(|&t| t == answer_token) {
        None => Err(LossError::MissingAnswerToken),
        Some(0) => Err(LossError::NoPrecedingState),
        Some(i) => Ok(i - 1),
    }
}

/// Fixed vocabulary of the toy model.
pub mod vocab {
    pub const THINK: usize = 0;
    pub const EVIDENCE: usize = 1;
    pub const ANSWER: usize = 2;
    pub const DEFECT: usize = 3;
    pub const AI: usize = 4;
    pub const REAL: usize = 5;
    pub const EOS: usize = 6;
    pub const FIRST_FILLER: usize = 7;
    pub const FILLERS: usize = 8;
    pub const SIZE: usize = FIRST_FILLER + FILLERS;

    pub fn name(token: usize) -> String {
        match token {
            THINK => "<think>".into(),
            EVIDENCE => "<evidence>".into(),
            ANSWER => "<answer>".into(),
            DEFECT => "<defect>".into(),
            AI => "ai".into(),
            REAL => "real".into(),
            EOS => "<eos>".into(),
            t => format!("w{}", t - FIRST_FILLER),
        }
    }
}

pub const DEFAULT_HIDDEN: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct ToySequenceModel {
    /// Embeddings, one row per token.
    pub e: DMatrix<f64>,
    pub a: DMatrix<f64>,
    pub c: DVector<f64>,
    /// Output projection, one row per token.
    pub w: DMatrix<f64>,
    pub head: ClassifierHead,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub lm_loss: f64,
    pub cls_loss: f64,
    pub total: f64,
    pub p_hat: f64,
}

struct Forward {
    means: Vec<DVector<f64>>,
    hidden: Vec<DVector<f64>>,
    k: usize,
}

impl ToySequenceModel {
    /// Gaussian embeddings and recurrence weights; output and head start at
    /// small values.
    pub fn init(vocab_size: usize, d: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |std: f64, rows: usize, cols: usize| {
            let n = Normal::new(0.0, std).expect("positive std");
            DMatrix::from_fn(rows, cols, |_, _| n.sample(&mut rng))
        };
        let e = draw(1.0, vocab_size, d);
        let a = draw(1.0 / (d as f64).sqrt(), d, d);
        let w = draw(0.1, vocab_size, d);
        let head_w = draw(0.01, 1, d);
        Self {
            e,
            a,
            c: DVector::zeros(d),
            w,
            head: ClassifierHead { w: head_w.iter().copied().collect(), b: 0.0 },
        }
    }

    pub fn vocab_size(&self) -> usize {
        self.e.nrows()
    }

    pub fn hidden_dim(&self) -> usize {
        self.e.ncols()
    }

    fn forward(&self, tokens: &[usize]) -> Result<Forward, LossError> {
        if tokens.len() < 2 {
            return Err(LossError::EmptySequence);
        }
        if let Some(&t) = tokens.iter().find(|&&t| t >= self.vocab_size()) {
            return Err(LossError::UnknownToken(t));
        }
        let k = locate_answer_hidden(tokens, vocab::ANSWER)?;
        let d = self.hidden_dim();
        let mut sum = DVector::zeros(d);
        let mut means = Vec::with_capacity(tokens.len());
        let mut hidden = Vec::with_capacity(tokens.len());
        for (t, &tok) in tokens.iter().enumerate() {
            sum += self.e.row(tok).transpose();
            let m = &sum / (t + 1) as f64;
            let h = (&self.a * &m + &self.c).map(f64::tanh);
            means.push(m);
            hidden.push(h);
        }
        Ok(Forward { means, hidden, k })
    }

    fn logits(&self, h: &DVector<f64>) -> Vec<f64> {
        (&self.w * h).iter().copied().collect()
    }

    /// Classifier probability for a sequence.
    pub fn predict(&self, tokens: &[usize]) -> Result<f64, LossError> {
        let f = self.forward(tokens)?;
        Ok(sigmoid(self.head.logit(f.hidden[f.k].as_slice())))
    }

    /// All parameters in a fixed order: E, A, c, W (row-major), head w, head b.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        push_rows(&mut out, &self.e);
        push_rows(&mut out, &self.a);
        out.extend(self.c.iter());
        push_rows(&mut out, &self.w);
        out.extend(&self.head.w);
        out.push(self.head.b);
        out
    }

    pub fn parameter_count(&self) -> usize {
        let (v, d) = (self.vocab_size(), self.hidden_dim());
        2 * v * d + d * d + 2 * d + 1
    }

    pub fn from_flat(vocab_size: usize, d: usize, values: &[f64]) -> Result<Self, LossError> {
        let mut m = Self {
            e: DMatrix::zeros(vocab_size, d),
            a: DMatrix::zeros(d, d),
            c: DVector::zeros(d),
            w: DMatrix::zeros(vocab_size, d),
            head: ClassifierHead::zeros(d),
        };
        if values.len() != m.parameter_count() {
            return Err(LossError::Format(format!("expected {} values, got {}", m.parameter_count(), values.len())));
        }
        let mut it = values.iter().copied();
        let mut take = |n: usize| it.by_ref().take(n).collect::<Vec<f64>>();
        m.e = DMatrix::from_row_slice(vocab_size, d, &take(vocab_size * d));
        m.a = DMatrix::from_row_slice(d, d, &take(d * d));
        m.c = DVector::from_vec(take(d));
        m.w = DMatrix::from_row_slice(vocab_size, d, &take(vocab_size * d));
        m.head.w = take(d);
        m.head.b = take(1)[0];
        Ok(m)
    }
}

fn push_rows(out: &mut Vec<f64>, m: &DMatrix<f64>) {
    for r in 0..m.nrows() {
        out.extend(m.row(r).iter());
    }
}

/// Gradients with the same shapes as the model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub e: DMatrix<f64>,
    pub a: DMatrix<f64>,
    pub c: DVector<f64>,
    pub w: DMatrix<f64>,
    pub head_w: DVector<f64>,
    pub head_b: f64,
}

impl Gradients {
    pub fn zeros_like(m: &ToySequenceModel) -> Self {
        let (v, d) = (m.vocab_size(), m.hidden_dim());
        Self {
            e: DMatrix::zeros(v, d),
            a: DMatrix::zeros(d, d),
            c: DVector::zeros(d),
            w: DMatrix::zeros(v, d),
            head_w: DVector::zeros(d),
            head_b: 0.0,
        }
    }

    /// Same order as [`ToySequenceModel::flatten`].
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        push_rows(&mut out, &self.e);
        push_rows(&mut out, &self.a);
        out.extend(self.c.iter());
        push_rows(&mut out, &self.w);
        out.extend(self.head_w.iter());
        out.push(self.head_b);
        out
    }

    fn add_scaled(&mut self, other: &Gradients, s: f64) {
        self.e += &other.e * s;
        self.a += &other.a * s;
        self.c += &other.c * s;
        self.w += &other.w * s;
        self.head_w += &other.head_w * s;
        self.head_b += other.head_b * s;
    }
}

fn check_label(y: u8) -> Result<(), LossError> {
    if y > 1 {
        Err(LossError::InvalidLabel(y))
    } else {
        Ok(())
    }
}

pub fn joint_loss(model: &ToySequenceModel, tokens: &[usize], y: u8, weights: LossWeights) -> Result<LossBreakdown, LossError> {
    check_label(y)?;
    let f = model.forward(tokens)?;
    let logits: Vec<Vec<f64>> = f.hidden[..tokens.len() - 1].iter().map(|h| model.logits(h)).collect();
    let lm = lm_loss(&logits, &tokens[1..])?;
    let (cls, p_hat) = cls_loss(f.hidden[f.k].as_slice(), &model.head, y)?;
    Ok(LossBreakdown { lm_loss: lm, cls_loss: cls, total: weights.alpha * lm + weights.beta * cls, p_hat })
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let lse = log_sum_exp(logits);
    logits.iter().map(|l| (l - lse).exp()).collect()
}

/// Loss and analytic gradient of the total for one sequence.
pub fn grad_joint(
    model: &ToySequenceModel,
    tokens: &[usize],
    y: u8,
    weights: LossWeights,
) -> Result<(LossBreakdown, Gradients), LossError> {
    let loss = joint_loss(model, tokens, y, weights)?;
    let f = model.forward(tokens)?;
    let t_len = tokens.len();
    let d = model.hidden_dim();
    let mut g = Gradients::zeros_like(model);

    let z_cls = model.head.logit(f.hidden[f.k].as_slice());
    let dz_cls = weights.beta * (sigmoid(z_cls) - f64::from(y));
    let head_w = DVector::from_column_slice(&model.head.w);
    g.head_w = &f.hidden[f.k] * dz_cls;
    g.head_b = dz_cls;

    // gradient reaching each running mean, then pushed back to embeddings
    let mut dmeans: Vec<DVector<f64>> = vec![DVector::zeros(d); t_len];
    for t in 0..t_len {
        let h = &f.hidden[t];
        let mut dh = DVector::zeros(d);
        if t + 1 < t_len && weights.alpha != 0.0 {
            let mut dlogits = softmax(&model.logits(h));
            dlogits[tokens[t + 1]] -= 1.0;
            let dl = DVector::from_vec(dlogits) * weights.alpha;
            g.w += &dl * h.transpose();
            dh += model.w.transpose() * &dl;
        }
        if t == f.k {
            dh += &head_w * dz_cls;
        }
        let dz = dh.component_mul(&h.map(|v| 1.0 - v * v));
        g.a += &dz * f.means[t].transpose();
        g.c += &dz;
        dmeans[t] = model.a.transpose() * dz;
    }
    let mut carry = DVector::zeros(d);
    for s in (0..t_len).rev() {
        carry += &dmeans[s] / (s + 1) as f64;
        let mut row = g.e.row_mut(tokens[s]);
        row += carry.transpose();
    }
    Ok((loss, g))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example {
    pub tokens: Vec<usize>,
    pub label: u8,
}

/// Sequences shaped `<think> w.. [<defect>] <evidence> w.. <answer> ai|real
/// <eos>` where the defect marker appears exactly for label 1.
pub fn synthetic_corpus(n: usize, seed: u64) -> Vec<Example> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let label = u8::from(rng.random_bool(0.5));
            let mut tokens = vec![vocab::THINK];
            let fillers = |rng: &mut ChaCha8Rng, lo: usize, hi: usize| {
                let n = rng.random_range(lo..=hi);
                (0..n).map(|_| vocab::FIRST_FILLER + rng.random_range(0..vocab::FILLERS)).collect::<Vec<_>>()
            };
            tokens.extend(fillers(&mut rng, 2, 6));
            if label == 1 {
                tokens.push(vocab::DEFECT);
            }
            tokens.push(vocab::EVIDENCE);
            tokens.extend(fillers(&mut rng, 1, 3));
            tokens.push(vocab::ANSWER);
            tokens.push(if label == 1 { vocab::AI } else { vocab::REAL });
            tokens.push(vocab::EOS);
            Example { tokens, label }
        })
        .collect()
}

pub const DEFAULT_CORPUS_SEED: u64 = 7;

/// 200 training and 100 held-out sequences.
pub fn default_split(seed: u64) -> (Vec<Example>, Vec<Example>) {
    let mut all = synthetic_corpus(300, seed);
    let held = all.split_off(200);
    (all, held)
}

/// Mean loss components over a corpus.
pub fn mean_loss(model: &ToySequenceModel, corpus: &[Example], weights: LossWeights) -> Result<LossBreakdown, LossError> {
    if corpus.is_empty() {
        return Err(LossError::EmptyCorpus);
    }
    let mut acc = LossBreakdown { lm_loss: 0.0, cls_loss: 0.0, total: 0.0, p_hat: 0.0 };
    for ex in corpus {
        let l = joint_loss(model, &ex.tokens, ex.label, weights)?;
        acc.lm_loss += l.lm_loss;
        acc.cls_loss += l.cls_loss;
        acc.total += l.total;
        acc.p_hat += l.p_hat;
    }
    let n = corpus.len() as f64;
    Ok(LossBreakdown { lm_loss: acc.lm_loss / n, cls_loss: acc.cls_loss / n, total: acc.total / n, p_hat: acc.p_hat / n })
}

/// Share of sequences where `p_hat >= 0.5` matches the label.
pub fn accuracy(model: &ToySequenceModel, corpus: &[Example]) -> Result<f64, LossError> {
    if corpus.is_empty() {
        return Err(LossError::EmptyCorpus);
    }
    let mut correct = 0;
    for ex in corpus {
        let p = model.predict(&ex.tokens)?;
        if u8::from(p >= 0.5) == ex.label {
            correct += 1;
        }
    }
    Ok(correct as f64 / corpus.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub steps: usize,
    pub lr: f64,
    pub hidden: usize,
    pub seed: u64,
}

impl TrainConfig {
    pub fn new(steps: usize, lr: f64, seed: u64) -> Self {
        Self { steps, lr, hidden: DEFAULT_HIDDEN, seed }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub step: usize,
    pub loss: LossBreakdown,
    pub accuracy: f64,
}

/// Full-batch gradient descent on the mean loss. Each curve point is measured
/// before that step's update; one extra point records the final state.
pub fn train_toy(
    corpus: &[Example],
    weights: LossWeights,
    config: TrainConfig,
) -> Result<(ToySequenceModel, Vec<CurvePoint>), LossError> {
    if corpus.is_empty() {
        return Err(LossError::EmptyCorpus);
    }
    if !(config.lr.is_finite() && config.lr > 0.0) || config.hidden == 0 {
        return Err(LossError::Format("learning rate and hidden size must be positive".into()));
    }
    for ex in corpus {
        check_label(ex.label)?;
        if let Some(&t) = ex.tokens.iter().find(|&&t| t >= vocab::SIZE) {
            return Err(LossError::UnknownToken(t));
        }
        locate_answer_hidden(&ex.tokens, vocab::ANSWER)?;
    }
    let mut model = ToySequenceModel::init(vocab::SIZE, config.hidden, config.seed);
    let mut curve = Vec::with_capacity(config.steps + 1);
    let n = corpus.len() as f64;
    for step in 0..=config.steps {
        let mut total = Gradients::zeros_like(&model);
        let mut acc = LossBreakdown { lm_loss: 0.0, cls_loss: 0.0, total: 0.0, p_hat: 0.0 };
        let mut correct = 0;
        for ex in corpus {
            let (l, g) = grad_joint(&model, &ex.tokens, ex.label, weights)?;
            acc.lm_loss += l.lm_loss / n;
            acc.cls_loss += l.cls_loss / n;
            acc.total += l.total / n;
            acc.p_hat += l.p_hat / n;
            if u8::from(l.p_hat >= 0.5) == ex.label {
                correct += 1;
            }
            total.add_scaled(&g, 1.0 / n);
        }
        curve.push(CurvePoint { step, loss: acc, accuracy: correct as f64 / n });
        if step == config.steps {
            break;
        }
        model.e -= &total.e * config.lr;
        model.a -= &total.a * config.lr;
        model.c -= &total.c * config.lr;
        model.w -= &total.w * config.lr;
        for (w, g) in model.head.w.iter_mut().zip(total.head_w.iter()) {
            *w -= config.lr * g;
        }
        model.head.b -= config.lr * total.head_b;
    }
    Ok((model, curve))
}

pub fn curve_csv(curve: &[CurvePoint]) -> String {
    let mut out = String::from("step,lm_loss,cls_loss,total,accuracy\n");
    for p in curve {
        out.push_str(&format!(
            "{},{:.6},{:.6},{:.6},{:.4}\n",
            p.step, p.loss.lm_loss, p.loss.cls_loss, p.loss.total, p.accuracy
        ));
    }
    out
}

pub const PARAMS_MAGIC: &[u8; 4] = b"TOYP";

/// Header (`TOYP`, vocab size and hidden size as u32 LE) followed by
/// [`ToySequenceModel::flatten`] as f64 LE.
pub fn write_params(model: &ToySequenceModel) -> Vec<u8> {
    let values = model.flatten();
    let mut out = Vec::with_capacity(12 + values.len() * 8);
    out.extend_from_slice(PARAMS_MAGIC);
    out.extend_from_slice(&(model.vocab_size() as u32).to_le_bytes());
    out.extend_from_slice(&(model.hidden_dim() as u32).to_le_bytes());
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn read_params(bytes: &[u8]) -> Result<ToySequenceModel, LossError> {
    if bytes.len() < 12 || &bytes[..4] != PARAMS_MAGIC {
        return Err(LossError::Format("missing TOYP header".into()));
    }
    let v = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let d = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let body = &bytes[12..];
    if body.len() % 8 != 0 {
        return Err(LossError::Format("truncated body".into()));
    }
    let values: Vec<f64> = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    ToySequenceModel::from_flat(v, d, &values)
}
