//! Synthetic paired corpora with topic confounding and a known additive
//! treatment effect, used as ground truth for the causal pipeline.
//!
//! Each record draws a topic, a body made of that topic's tokens and a
//! treatment flag with the topic's treatment probability. Treated records
//! get an edited post; controls mirror the headline. Engagement counts are
//! Poisson draws whose mean is the topic base (plus the effect when
//! treated) scaled by a mean-one gamma multiplier, so topic drives both the
//! treatment and the outcome.

use std::collections::BTreeMap;

use chrono::{DateTime, Duration, Utc};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::clickbait::LabeledHeadline;
use crate::corpus::{Corpus, PairedRecord};
use crate::embedding::EmbeddingTable;
use crate::Metric;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SynthError {
    #[error("n_records must be at least {min}, got {got}")]
    TooFewRecords { min: usize, got: usize },
    #[error("spec has no topics")]
    NoTopics,
    #[error("topic {0:?} has an empty vocabulary")]
    EmptyVocabulary(String),
    #[error("topic {topic:?}: treatment probability {p} is outside [0, 1]")]
    BadProbability { topic: String, p: f64 },
    #[error("noise must be finite and non-negative, got {0}")]
    BadNoise(f64),
    #[error("edit vocabulary is empty")]
    EmptyEditVocabulary,
    #[error("token counts must be positive")]
    ZeroTokens,
}

pub const MIN_RECORDS: usize = 60;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PerMetric {
    pub replies: f64,
    pub retweets: f64,
    pub likes: f64,
}

impl PerMetric {
    pub fn get(&self, m: Metric) -> f64 {
        match m {
            Metric::Replies => self.replies,
            Metric::Retweets => self.retweets,
            Metric::Likes => self.likes,
        }
    }

    fn map(self, mut f: impl FnMut(Metric, f64) -> f64) -> PerMetric {
        PerMetric {
            replies: f(Metric::Replies, self.replies),
            retweets: f(Metric::Retweets, self.retweets),
            likes: f(Metric::Likes, self.likes),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topic {
    pub id: String,
    pub vocabulary: Vec<String>,
    /// Mean engagement of an untreated record.
    pub base: PerMetric,
    pub treat_prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n_records: usize,
    #[serde(default = "default_outlet")]
    pub outlet: String,
    pub topics: Vec<Topic>,
    /// Additive effect on the mean of treated records.
    pub true_effect: PerMetric,
    /// Variance of the mean-one gamma multiplier; 0 gives plain Poisson.
    pub noise: f64,
    pub seed: u64,
    #[serde(default = "default_body_tokens")]
    pub body_tokens: usize,
    #[serde(default = "default_headline_tokens")]
    pub headline_tokens: usize,
    /// Tokens prepended to a headline to form an edited post.
    #[serde(default = "default_edit_vocabulary")]
    pub edit_vocabulary: Vec<String>,
}

fn default_outlet() -> String {
    "synth".into()
}
fn default_body_tokens() -> usize {
    24
}
fn default_headline_tokens() -> usize {
    6
}
fn default_edit_vocabulary() -> Vec<String> {
    ["you", "wont", "believe", "watch", "shocking", "amazing"]
        .map(String::from)
        .to_vec()
}

const TOPIC_WORDS: [(&str, [&str; 8]); 6] = [
    ("politics", ["senate", "vote", "bill", "governor", "campaign", "ballot", "congress", "policy"]),
    ("business", ["market", "stocks", "earnings", "merger", "investor", "profit", "shares", "bank"]),
    ("science", ["study", "climate", "species", "research", "planet", "cells", "ocean", "fossil"]),
    ("sports", ["team", "coach", "season", "league", "playoff", "striker", "score", "stadium"]),
    ("culture", ["film", "album", "festival", "actor", "museum", "novel", "concert", "gallery"]),
    ("health", ["vaccine", "hospital", "doctor", "patients", "virus", "diet", "clinic", "therapy"]),
];

impl SynthSpec {
    /// Six topics whose treatment probability and base engagement rise
    /// together, so the naive treated-minus-control gap is biased upward.
    pub fn confounded(n_records: usize, likes_effect: f64, seed: u64) -> SynthSpec {
        let probs = [0.15, 0.3, 0.45, 0.55, 0.7, 0.85];
        let likes = [20.0, 45.0, 80.0, 110.0, 150.0, 200.0];
        let topics = TOPIC_WORDS
            .iter()
            .zip(probs.iter().zip(likes))
            .map(|((id, words), (&p, l))| Topic {
                id: id.to_string(),
                vocabulary: words.map(String::from).to_vec(),
                base: PerMetric {
                    replies: l / 10.0,
                    retweets: l / 4.0,
                    likes: l,
                },
                treat_prob: p,
            })
            .collect();
        SynthSpec {
            n_records,
            outlet: default_outlet(),
            topics,
            true_effect: PerMetric {
                likes: likes_effect,
                ..PerMetric::default()
            },
            noise: 0.3,
            seed,
            body_tokens: default_body_tokens(),
            headline_tokens: default_headline_tokens(),
            edit_vocabulary: default_edit_vocabulary(),
        }
    }

    /// Same topics with a common treatment probability of one half.
    pub fn unconfounded(n_records: usize, likes_effect: f64, seed: u64) -> SynthSpec {
        let mut s = SynthSpec::confounded(n_records, likes_effect, seed);
        s.topics.iter_mut().for_each(|t| t.treat_prob = 0.5);
        s
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if self.n_records < MIN_RECORDS {
            return Err(SynthError::TooFewRecords {
                min: MIN_RECORDS,
                got: self.n_records,
            });
        }
        if self.topics.is_empty() {
            return Err(SynthError::NoTopics);
        }
        for t in &self.topics {
            if t.vocabulary.is_empty() {
                return Err(SynthError::EmptyVocabulary(t.id.clone()));
            }
            if !(0.0..=1.0).contains(&t.treat_prob) {
                return Err(SynthError::BadProbability {
                    topic: t.id.clone(),
                    p: t.treat_prob,
                });
            }
        }
        if !(self.noise.is_finite() && self.noise >= 0.0) {
            return Err(SynthError::BadNoise(self.noise));
        }
        if self.edit_vocabulary.is_empty() {
            return Err(SynthError::EmptyEditVocabulary);
        }
        if self.body_tokens == 0 || self.headline_tokens == 0 {
            return Err(SynthError::ZeroTokens);
        }
        Ok(())
    }
}

/// Ground truth for one generated record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub id: String,
    pub topic: String,
    pub treated: bool,
    /// Mean outcome before noise, effect included when treated.
    pub expected: PerMetric,
    /// Some expected value was negative and was clamped to zero.
    pub clamped: bool,
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

fn draw_count(mean: f64, noise: f64, rng: &mut ChaCha8Rng) -> u64 {
    let scaled = if noise > 0.0 {
        let g = Gamma::new(1.0 / noise, noise).expect("positive gamma parameters");
        mean * g.sample(rng)
    } else {
        mean
    };
    if scaled <= 0.0 {
        return 0;
    }
    Poisson::new(scaled).expect("positive rate").sample(rng) as u64
}

pub fn generate(spec: &SynthSpec) -> Result<(Corpus, Vec<Truth>), SynthError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let start: DateTime<Utc> = "2018-06-01T00:00:00Z".parse().expect("valid instant");
    let mut records = Vec::with_capacity(spec.n_records);
    let mut truth = Vec::with_capacity(spec.n_records);

    for i in 0..spec.n_records {
        let topic = &spec.topics[rng.random_range(0..spec.topics.len())];
        let pick = |n: usize, rng: &mut ChaCha8Rng| -> Vec<&str> {
            (0..n)
                .map(|_| topic.vocabulary.choose(rng).expect("non-empty").as_str())
                .collect()
        };
        let body = pick(spec.body_tokens, &mut rng).join(" ");
        let headline_words = pick(spec.headline_tokens, &mut rng);
        let headline = capitalize(&headline_words.join(" "));
        let treated = rng.random_bool(topic.treat_prob);
        let post_text = if treated {
            let a = spec.edit_vocabulary.choose(&mut rng).expect("non-empty");
            let b = spec.edit_vocabulary.choose(&mut rng).expect("non-empty");
            format!("{} {b}: {}", capitalize(a), headline_words.join(" "))
        } else {
            headline.clone()
        };

        let mut clamped = false;
        let expected = topic.base.map(|m, base| {
            let mean = base + if treated { spec.true_effect.get(m) } else { 0.0 };
            if mean < 0.0 {
                clamped = true;
                0.0
            } else {
                mean
            }
        });
        let replies = draw_count(expected.replies, spec.noise, &mut rng);
        let retweets = draw_count(expected.retweets, spec.noise, &mut rng);
        let likes = draw_count(expected.likes, spec.noise, &mut rng);
        let created_at = start + Duration::seconds(rng.random_range(0..30 * 86_400));

        let id = format!("{}-{i:06}", spec.outlet);
        truth.push(Truth {
            id: id.clone(),
            topic: topic.id.clone(),
            treated,
            expected,
            clamped,
        });
        records.push(PairedRecord {
            id,
            outlet: spec.outlet.clone(),
            headline,
            body_text: body,
            post_text,
            created_at,
            replies,
            retweets,
            likes,
            section: Some(topic.id.clone()),
        });
    }
    let corpus = Corpus::from_records(records, format!("synth:seed={}", spec.seed))
        .expect("generated ids are unique and non-empty");
    Ok((corpus, truth))
}

/// Word vectors for every token a spec can emit. Each topic token is a
/// shared news component plus an orthogonal topic direction plus small
/// token noise, so bodies of one topic are near-parallel and bodies of
/// different topics sit around cosine 0.5.
pub fn embedding_table(spec: &SynthSpec, dim: usize, seed: u64) -> EmbeddingTable {
    assert!(
        dim > spec.topics.len() + 1,
        "dimension must exceed the topic count"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 0.15).expect("valid normal");
    let mut pairs: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for (k, topic) in spec.topics.iter().enumerate() {
        for tok in &topic.vocabulary {
            let mut v: Vec<f64> = (0..dim).map(|_| noise.sample(&mut rng)).collect();
            v[0] += 1.0;
            v[k + 1] += 1.0;
            pairs.entry(tok.to_lowercase()).or_insert(v);
        }
    }
    let extra = Normal::new(0.0, 0.5).expect("valid normal");
    for tok in spec
        .edit_vocabulary
        .iter()
        .chain(CLICKBAIT_WORDS.iter().map(|s| s.to_string()).collect::<Vec<_>>().iter())
        .chain(NEWS_WORDS.iter().map(|s| s.to_string()).collect::<Vec<_>>().iter())
    {
        let v: Vec<f64> = (0..dim).map(|_| extra.sample(&mut rng)).collect();
        pairs.entry(tok.to_lowercase()).or_insert(v);
    }
    EmbeddingTable::from_pairs(pairs).expect("consistent dimensions")
}

pub const CLICKBAIT_WORDS: [&str; 16] = [
    "you", "wont", "believe", "shocking", "amazing", "secret", "reasons", "why", "this", "will",
    "blow", "mind", "happened", "next", "watch", "insane",
];

pub const NEWS_WORDS: [&str; 16] = [
    "minister", "announces", "budget", "court", "rules", "election", "economy", "report", "growth",
    "council", "approves", "trade", "talks", "officials", "inquiry", "tariffs",
];

/// Headlines whose two classes use disjoint vocabularies; label 1 is
/// clickbait.
pub fn clickbait_dataset(n: usize, seed: u64) -> Vec<LabeledHeadline> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let clickbait = i % 2 == 0;
            let words: &[&str] = if clickbait { &CLICKBAIT_WORDS } else { &NEWS_WORDS };
            let len = rng.random_range(4..=9);
            let text: Vec<&str> = (0..len)
                .map(|_| *words.choose(&mut rng).expect("non-empty"))
                .collect();
            LabeledHeadline {
                text: capitalize(&text.join(" ")),
                label: clickbait,
            }
        })
        .collect()
}

/// Naive gap for one metric straight from generated records and truth.
pub fn naive_gap(corpus: &Corpus, truth: &[Truth], metric: Metric) -> (f64, f64) {
    let mut t = Vec::new();
    let mut c = Vec::new();
    for (r, g) in corpus.records.iter().zip(truth) {
        let y = r.engagement(metric) as f64;
        if g.treated {
            t.push(y);
        } else {
            c.push(y);
        }
    }
    crate::stats::mean_difference(&t, &c)
}

pub fn write_truth_jsonl<W: std::io::Write>(truth: &[Truth], mut out: W) -> std::io::Result<()> {
    for t in truth {
        serde_json::to_writer(&mut out, t)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
