//! Attention-based bidirectional GRU clickbait scorer and the
//! headline-to-post class shift table.

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::embedding::{tokenize, EmbeddingTable};
use crate::neural::{
    binary_cross_entropy, read_params, write_params, Activation, AdamConfig, AdamState,
    AttentionHead, BiGru, DenseLayer, Differentiable, NeuralError, Parameterized, Tensor,
};
use crate::textsim::{welch_t, EditProfile, TestResult};

pub const MIN_EXAMPLES: usize = 20;
pub const THRESHOLD: f64 = 0.5;
const MODEL_KIND: &str = "clickbait-bigru";
const UNK: &str = "<unk>";

#[derive(Debug, thiserror::Error)]
pub enum ClickbaitError {
    #[error("need at least {min} labelled examples, got {got}")]
    TooFewExamples { min: usize, got: usize },
    #[error("training data has only one class")]
    SingleClass,
    #[error("text is empty")]
    EmptyText,
    #[error("line {line}: {reason}")]
    BadRow { line: usize, reason: String },
    #[error("unknown outlet {0:?}")]
    UnknownOutlet(String),
    #[error("record {0} has no clickbait scores")]
    MissingScores(String),
    #[error("record {0} is not in the corpus")]
    UnknownRecord(String),
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledHeadline {
    pub text: String,
    /// True for clickbait.
    pub label: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClickbaitConfig {
    pub hidden: usize,
    pub attention: usize,
    /// Token vector size when no embedding table is given.
    pub embed_dim: usize,
    pub max_len: usize,
    pub max_vocab: usize,
    pub epochs: usize,
    pub batch_size: usize,
    /// Epochs without improvement before stopping. Improvement is a higher
    /// validation F1, or the same F1 with a lower validation loss.
    pub patience: usize,
    pub adam: AdamConfig,
}

impl Default for ClickbaitConfig {
    fn default() -> Self {
        ClickbaitConfig {
            hidden: 64,
            attention: 64,
            embed_dim: 50,
            max_len: 64,
            max_vocab: 20_000,
            epochs: 10,
            batch_size: 32,
            patience: 3,
            adam: AdamConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Class {
    #[serde(rename = "C")]
    Clickbait,
    #[serde(rename = "NC")]
    NonClickbait,
}

/// Clickbait iff the score is strictly above the threshold.
pub fn classify_score(score: f64, threshold: f64) -> Class {
    if score > threshold {
        Class::Clickbait
    } else {
        Class::NonClickbait
    }
}

/// A token sequence as vocabulary indices, never empty.
pub type Encoded = Vec<usize>;

#[derive(Debug, Clone, PartialEq)]
pub struct ClickbaitModel {
    /// Index 0 is the unknown token.
    vocab: HashMap<String, usize>,
    tokens: Vec<String>,
    pub embeddings: Tensor,
    pub rnn: BiGru,
    pub attention: AttentionHead,
    pub output: DenseLayer,
    threshold: f64,
    pub config: ClickbaitConfig,
    pub seed: u64,
}

struct Trace {
    xs: Vec<Vec<f64>>,
    states: Vec<Vec<f64>>,
    rnn: crate::neural::BiGruCache,
    attn: crate::neural::AttentionCache,
    ctx: Vec<f64>,
    p: f64,
}

impl ClickbaitModel {
    /// Fresh model over `tokens` (unknown token excluded). Vectors come from
    /// `table` when it has the token, small random values otherwise.
    pub fn new(
        tokens: Vec<String>,
        table: Option<&EmbeddingTable>,
        config: ClickbaitConfig,
        seed: u64,
    ) -> ClickbaitModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = table.map_or(config.embed_dim, EmbeddingTable::dim);
        let mut all = vec![UNK.to_string()];
        all.extend(tokens.into_iter().filter(|t| t != UNK));
        let init = Normal::new(0.0, 0.1).expect("valid normal");
        let mut emb = Vec::with_capacity(all.len() * dim);
        for tok in &all {
            match table.and_then(|t| t.get(tok)) {
                Some(v) => emb.extend_from_slice(v),
                None => emb.extend((0..dim).map(|_| init.sample(&mut rng))),
            }
        }
        let vocab = all.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        let h = config.hidden;
        ClickbaitModel {
            vocab,
            tokens: all.clone(),
            embeddings: Tensor::from_vec(&[all.len(), dim], emb).expect("consistent shape"),
            rnn: BiGru::new(dim, h, &mut rng),
            attention: AttentionHead::new(2 * h, config.attention, &mut rng),
            output: DenseLayer::new(2 * h, 1, Activation::Sigmoid, &mut rng),
            threshold: THRESHOLD,
            config: ClickbaitConfig {
                embed_dim: dim,
                ..config
            },
            seed,
        }
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn vocab_size(&self) -> usize {
        self.tokens.len()
    }

    pub fn encode(&self, text: &str) -> Result<Encoded, ClickbaitError> {
        if text.trim().is_empty() {
            return Err(ClickbaitError::EmptyText);
        }
        let mut ids: Encoded = tokenize(text)
            .iter()
            .take(self.config.max_len)
            .map(|t| self.vocab.get(t).copied().unwrap_or(0))
            .collect();
        if ids.is_empty() {
            ids.push(0);
        }
        Ok(ids)
    }

    fn run(&self, ids: &[usize]) -> Trace {
        let xs: Vec<Vec<f64>> = ids.iter().map(|&i| self.embeddings.row(i).to_vec()).collect();
        let refs: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();
        let (states, rnn) = self.rnn.run(&refs).expect("encoded sequences are non-empty");
        let (ctx, attn) = self.attention.forward(&states).expect("state sizes agree");
        let p = self.output.forward_vec(&ctx)[0];
        Trace {
            xs,
            states,
            rnn,
            attn,
            ctx,
            p,
        }
    }

    pub fn score_encoded(&self, ids: &[usize]) -> f64 {
        self.run(ids).p
    }

    pub fn score(&self, text: &str) -> Result<f64, ClickbaitError> {
        Ok(self.score_encoded(&self.encode(text)?))
    }

    pub fn classify(&self, text: &str) -> Result<Class, ClickbaitError> {
        Ok(classify_score(self.score(text)?, self.threshold))
    }

    fn zero_grads(&self) -> Vec<Tensor> {
        self.params().iter().map(|p| p.zeros_like()).collect()
    }

    /// Adds the gradient of `scale * BCE(p, y)` for one sequence to `grads`
    /// and returns the unscaled loss.
    fn accumulate(&self, ids: &[usize], y: f64, scale: f64, grads: &mut [Tensor]) -> f64 {
        let tr = self.run(ids);
        let loss = binary_cross_entropy(tr.p, y);
        let (g_emb, rest) = grads.split_first_mut().expect("embedding grads");
        let (g_rnn, rest) = rest.split_at_mut(18);
        let (g_attn, g_out) = rest.split_at_mut(3);
        let mut out_grads = crate::neural::DenseGrads {
            weights: std::mem::replace(&mut g_out[0], Tensor::zeros(&[0])),
            bias: std::mem::replace(&mut g_out[1], Tensor::zeros(&[0])),
        };
        let dctx = self
            .output
            .backward_pre_activation(&tr.ctx, &[(tr.p - y) * scale], &mut out_grads);
        g_out[0] = out_grads.weights;
        g_out[1] = out_grads.bias;
        let dstates = self.attention.backward(&tr.states, &tr.attn, &dctx, g_attn);
        let refs: Vec<&[f64]> = tr.xs.iter().map(Vec::as_slice).collect();
        let dxs = self.rnn.backward_pass(&refs, &tr.rnn, &dstates, g_rnn);
        for (&i, dx) in ids.iter().zip(dxs) {
            for (g, d) in g_emb.row_mut(i).iter_mut().zip(dx) {
                *g += d;
            }
        }
        loss
    }

    pub fn save<W: Write>(&self, out: W) -> Result<(), ClickbaitError> {
        let config = serde_json::json!({
            "model": self.config,
            "threshold": self.threshold,
            "tokens": self.tokens,
        });
        write_params(out, MODEL_KIND, self.seed, config, &self.params())?;
        Ok(())
    }

    pub fn load<R: Read>(input: R) -> Result<ClickbaitModel, ClickbaitError> {
        let (header, tensors) = read_params(input)?;
        let bad = |m: &str| ClickbaitError::Neural(NeuralError::Format(m.to_string()));
        if header.kind != MODEL_KIND {
            return Err(bad(&format!("expected a {MODEL_KIND} model, found {}", header.kind)));
        }
        let config: ClickbaitConfig = serde_json::from_value(header.config["model"].clone())
            .map_err(|e| bad(&e.to_string()))?;
        let tokens: Vec<String> = serde_json::from_value(header.config["tokens"].clone())
            .map_err(|e| bad(&e.to_string()))?;
        if tokens.first().map(String::as_str) != Some(UNK) {
            return Err(bad("vocabulary must start with the unknown token"));
        }
        let dim = tensors.first().map_or(0, |t| t.last_dim());
        let mut model = ClickbaitModel::new(
            tokens[1..].to_vec(),
            None,
            ClickbaitConfig {
                embed_dim: dim,
                ..config
            },
            header.seed,
        );
        if let Some(t) = header.config["threshold"].as_f64() {
            model.threshold = t;
        }
        let mut params = model.params_mut();
        if params.len() != tensors.len() {
            return Err(bad("parameter count does not match the architecture"));
        }
        for (p, t) in params.iter_mut().zip(tensors) {
            if p.shape() != t.shape() {
                return Err(ClickbaitError::Neural(NeuralError::ShapeMismatch {
                    expected: p.shape().to_vec(),
                    found: t.shape().to_vec(),
                }));
            }
            **p = t;
        }
        Ok(model)
    }

    pub fn save_file(&self, path: &Path) -> Result<(), ClickbaitError> {
        crate::io::write_atomic(path, |w| {
            self.save(w).map_err(std::io::Error::other)
        })?;
        Ok(())
    }

    pub fn load_file(path: &Path) -> Result<ClickbaitModel, ClickbaitError> {
        Self::load(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

impl Parameterized for ClickbaitModel {
    /// Token vectors, forward GRU (9), backward GRU (9), attention (3),
    /// output weights and bias.
    fn params(&self) -> Vec<&Tensor> {
        let mut v = vec![&self.embeddings];
        v.extend(self.rnn.forward.params());
        v.extend(self.rnn.backward.params());
        v.extend(self.attention.params());
        v.extend([&self.output.weights, &self.output.bias]);
        v
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        let mut v = vec![&mut self.embeddings];
        v.extend(self.rnn.forward.params_mut());
        v.extend(self.rnn.backward.params_mut());
        v.extend(self.attention.params_mut());
        v.extend([&mut self.output.weights, &mut self.output.bias]);
        v
    }
}

impl Differentiable for ClickbaitModel {
    /// Encoded sequences with 0/1 labels; the loss is their mean BCE.
    type Batch = [(Encoded, f64)];

    fn loss(&self, batch: &Self::Batch) -> f64 {
        batch
            .iter()
            .map(|(ids, y)| binary_cross_entropy(self.score_encoded(ids), *y))
            .sum::<f64>()
            / batch.len() as f64
    }

    fn loss_and_grad(&self, batch: &Self::Batch) -> (f64, Vec<Tensor>) {
        let mut grads = self.zero_grads();
        let scale = 1.0 / batch.len() as f64;
        let total: f64 = batch
            .iter()
            .map(|(ids, y)| self.accumulate(ids, *y, scale, &mut grads))
            .sum();
        (total * scale, grads)
    }
}

/// F1 on the positive (clickbait) class; 0 when there are no true
/// positives.
pub fn f1_score(predicted: &[bool], actual: &[bool]) -> f64 {
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut fn_ = 0usize;
    for (&p, &a) in predicted.iter().zip(actual) {
        match (p, a) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            _ => {}
        }
    }
    if tp == 0 {
        return 0.0;
    }
    let precision = tp as f64 / (tp + fp) as f64;
    let recall = tp as f64 / (tp + fn_) as f64;
    2.0 * precision * recall / (precision + recall)
}

/// Splits indices per class, sending `round(fraction * class size)` of
/// each class (at least one) to the second part.
pub fn stratified_split(labels: &[bool], fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut first = Vec::new();
    let mut second = Vec::new();
    for class in [true, false] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng);
        let held = ((idx.len() as f64 * fraction).round() as usize)
            .max(1)
            .min(idx.len().saturating_sub(1));
        second.extend_from_slice(&idx[..held]);
        first.extend_from_slice(&idx[held..]);
    }
    first.sort_unstable();
    second.sort_unstable();
    (first, second)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub test_f1: f64,
    pub validation_f1: Vec<f64>,
    pub epochs_run: usize,
    pub train_size: usize,
    pub validation_size: usize,
    pub test_size: usize,
}

fn build_vocab(texts: &[&str], max_vocab: usize) -> Vec<String> {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for t in texts {
        for tok in tokenize(t) {
            *counts.entry(tok).or_default() += 1;
        }
    }
    let mut ranked: Vec<(String, usize)> = counts.into_iter().collect();
    // most frequent first, ties alphabetical
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(max_vocab);
    ranked.into_iter().map(|(t, _)| t).collect()
}

fn predictions(model: &ClickbaitModel, data: &[(Encoded, f64)]) -> Vec<bool> {
    data.par_iter()
        .map(|(ids, _)| model.score_encoded(ids) > model.threshold)
        .collect()
}

fn f1_on(model: &ClickbaitModel, data: &[(Encoded, f64)]) -> f64 {
    let actual: Vec<bool> = data.iter().map(|(_, y)| *y == 1.0).collect();
    f1_score(&predictions(model, data), &actual)
}

/// Stratified 90:10 train/test split by `seed`; a further stratified tenth
/// of the training part drives early stopping. Returns the model with the
/// best validation F1 and its F1 on the test part.
pub fn train(
    dataset: &[LabeledHeadline],
    table: Option<&EmbeddingTable>,
    config: ClickbaitConfig,
    seed: u64,
) -> Result<(ClickbaitModel, TrainReport), ClickbaitError> {
    if dataset.len() < MIN_EXAMPLES {
        return Err(ClickbaitError::TooFewExamples {
            min: MIN_EXAMPLES,
            got: dataset.len(),
        });
    }
    if dataset.iter().any(|h| h.text.trim().is_empty()) {
        return Err(ClickbaitError::EmptyText);
    }
    let labels: Vec<bool> = dataset.iter().map(|h| h.label).collect();
    if labels.iter().all(|&l| l) || labels.iter().all(|&l| !l) {
        return Err(ClickbaitError::SingleClass);
    }
    let (train_idx, test_idx) = stratified_split(&labels, 0.1, seed);
    let train_labels: Vec<bool> = train_idx.iter().map(|&i| labels[i]).collect();
    let (fit_pos, val_pos) = stratified_split(&train_labels, 0.1, seed.wrapping_add(1));
    let fit_idx: Vec<usize> = fit_pos.iter().map(|&p| train_idx[p]).collect();
    let val_idx: Vec<usize> = val_pos.iter().map(|&p| train_idx[p]).collect();

    let fit_texts: Vec<&str> = fit_idx.iter().map(|&i| dataset[i].text.as_str()).collect();
    let mut model = ClickbaitModel::new(build_vocab(&fit_texts, config.max_vocab), table, config, seed);
    let encode = |idx: &[usize], m: &ClickbaitModel| -> Result<Vec<(Encoded, f64)>, ClickbaitError> {
        idx.iter()
            .map(|&i| Ok((m.encode(&dataset[i].text)?, f64::from(u8::from(dataset[i].label)))))
            .collect()
    };
    let fit = encode(&fit_idx, &model)?;
    let val = encode(&val_idx, &model)?;
    let test = encode(&test_idx, &model)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(2));
    let mut adam = AdamState::new(config.adam, &model.params());
    let mut order: Vec<usize> = (0..fit.len()).collect();
    let mut best = (f64::NEG_INFINITY, model.clone());
    let mut best_loss = f64::INFINITY;
    let mut stale = 0;
    let mut history = Vec::new();
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(config.batch_size.max(1)) {
            let batch: Vec<(Encoded, f64)> = chunk.iter().map(|&i| fit[i].clone()).collect();
            let (_, grads) = model.loss_and_grad(&batch);
            adam.update(&mut model.params_mut(), grads)?;
        }
        let f1 = f1_on(&model, &val);
        let loss = model.loss(&val);
        history.push(f1);
        // equal F1 with a lower validation loss still counts as progress
        if f1 > best.0 || (f1 == best.0 && loss < best_loss) {
            best = (f1, model.clone());
            best_loss = loss;
            stale = 0;
        } else {
            stale += 1;
            if stale >= config.patience {
                break;
            }
        }
    }
    let model = best.1;
    let report = TrainReport {
        test_f1: f1_on(&model, &test),
        epochs_run: history.len(),
        validation_f1: history,
        train_size: fit.len(),
        validation_size: val.len(),
        test_size: test.len(),
    };
    Ok((model, report))
}

#[derive(Deserialize)]
struct LabeledRow {
    #[serde(alias = "headline")]
    text: String,
    #[serde(alias = "clickbait")]
    label: String,
}

fn parse_label(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "clickbait" | "c" => Some(true),
        "0" | "false" | "non_clickbait" | "nc" => Some(false),
        _ => None,
    }
}

/// Reads `text,label` CSV with a header; label is 1/0 (also true/false).
/// A `headline,clickbait` header is accepted too.
pub fn load_labeled_csv<R: Read>(input: R) -> Result<Vec<LabeledHeadline>, ClickbaitError> {
    let mut reader = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for (i, row) in reader.deserialize::<LabeledRow>().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| ClickbaitError::BadRow {
            line,
            reason: e.to_string(),
        })?;
        let label = parse_label(&row.label).ok_or_else(|| ClickbaitError::BadRow {
            line,
            reason: format!("bad label {:?}", row.label),
        })?;
        if row.text.trim().is_empty() {
            return Err(ClickbaitError::BadRow {
                line,
                reason: "empty text".into(),
            });
        }
        out.push(LabeledHeadline {
            text: row.text,
            label,
        });
    }
    Ok(out)
}

pub fn write_labeled_csv<W: Write>(data: &[LabeledHeadline], out: W) -> Result<(), ClickbaitError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["text", "label"])?;
    for h in data {
        w.write_record([h.text.as_str(), if h.label { "1" } else { "0" }])?;
    }
    w.flush()?;
    Ok(())
}

/// Fills the headline and post scores of every profile from its record.
pub fn score_profiles(
    model: &ClickbaitModel,
    corpus: &Corpus,
    profiles: &mut [EditProfile],
) -> Result<(), ClickbaitError> {
    let index = corpus.index_by_id();
    profiles.par_iter_mut().try_for_each(|p| {
        let &i = index
            .get(p.record_id.as_str())
            .ok_or_else(|| ClickbaitError::UnknownRecord(p.record_id.clone()))?;
        let r = &corpus.records[i];
        p.headline_clickbait = Some(model.score(&r.headline)?);
        p.post_clickbait = Some(model.score(&r.post_text)?);
        Ok(())
    })
}

/// Post-class counts conditioned on the headline class, one outlet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftTable {
    pub outlet: String,
    pub threshold: f64,
    /// Headlines classed C; denominator of the first row.
    pub headline_c: usize,
    pub headline_nc: usize,
    pub c_to_c: usize,
    pub c_to_nc: usize,
    pub nc_to_c: usize,
    pub nc_to_nc: usize,
    /// None when no headline of that class exists.
    pub p_nc_given_c: Option<f64>,
    pub p_c_given_c: Option<f64>,
    pub p_c_given_nc: Option<f64>,
    pub p_nc_given_nc: Option<f64>,
    pub mean_headline_score: f64,
    pub mean_post_score: f64,
    /// Welch test of post scores against headline scores.
    pub welch: Option<TestResult>,
}

impl ShiftTable {
    pub fn undefined_cells(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        if self.p_nc_given_c.is_none() {
            v.push("P(NC|C)");
        }
        if self.p_c_given_nc.is_none() {
            v.push("P(C|NC)");
        }
        v
    }
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Conditional shift table from (headline score, post score) pairs.
pub fn shift_table_from_scores(outlet: &str, scores: &[(f64, f64)], threshold: f64) -> ShiftTable {
    let (mut cc, mut cn, mut nc, mut nn) = (0, 0, 0, 0);
    for &(h, p) in scores {
        match (classify_score(h, threshold), classify_score(p, threshold)) {
            (Class::Clickbait, Class::Clickbait) => cc += 1,
            (Class::Clickbait, Class::NonClickbait) => cn += 1,
            (Class::NonClickbait, Class::Clickbait) => nc += 1,
            (Class::NonClickbait, Class::NonClickbait) => nn += 1,
        }
    }
    let heads: Vec<f64> = scores.iter().map(|s| s.0).collect();
    let posts: Vec<f64> = scores.iter().map(|s| s.1).collect();
    ShiftTable {
        outlet: outlet.to_string(),
        threshold,
        headline_c: cc + cn,
        headline_nc: nc + nn,
        c_to_c: cc,
        c_to_nc: cn,
        nc_to_c: nc,
        nc_to_nc: nn,
        p_nc_given_c: ratio(cn, cc + cn),
        p_c_given_c: ratio(cc, cc + cn),
        p_c_given_nc: ratio(nc, nc + nn),
        p_nc_given_nc: ratio(nn, nc + nn),
        mean_headline_score: crate::stats::mean(&heads),
        mean_post_score: crate::stats::mean(&posts),
        welch: welch_t(&posts, &heads).ok(),
    }
}

pub fn conditional_shift_table(
    corpus: &Corpus,
    profiles: &[EditProfile],
    outlet: &str,
    threshold: f64,
) -> Result<ShiftTable, ClickbaitError> {
    if !corpus.records.iter().any(|r| r.outlet == outlet) {
        return Err(ClickbaitError::UnknownOutlet(outlet.to_string()));
    }
    let index = corpus.index_by_id();
    let mut scores = Vec::new();
    for p in profiles {
        let &i = index
            .get(p.record_id.as_str())
            .ok_or_else(|| ClickbaitError::UnknownRecord(p.record_id.clone()))?;
        if corpus.records[i].outlet != outlet {
            continue;
        }
        match (p.headline_clickbait, p.post_clickbait) {
            (Some(h), Some(q)) => scores.push((h, q)),
            _ => return Err(ClickbaitError::MissingScores(p.record_id.clone())),
        }
    }
    Ok(shift_table_from_scores(outlet, &scores, threshold))
}
