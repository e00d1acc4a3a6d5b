//! Propensity score matching on article body text with a semantic balance
//! gate, the matched average treatment effect, and the ten-fold robustness
//! protocol that discards unstable estimates.

use std::collections::{HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clickbait::{classify_score, Class};
use crate::corpus::{is_mirrored, time_block_of, Corpus, PairedRecord, TimeBlock};
use crate::embedding::{embed_text, EmbeddingTable};
use crate::neural::{Mlp, MlpSpec, MlpTraining, NeuralError, Tensor};
use crate::stats::{mean, mean_difference, t_interval};
use crate::textsim::EditProfile;
use crate::Metric;

#[derive(Debug, thiserror::Error)]
pub enum CausalError {
    #[error("{selector} group has {found} units, need at least {min}")]
    InsufficientUnits {
        selector: &'static str,
        found: usize,
        min: usize,
    },
    #[error("propensity training needs both groups")]
    OneClass,
    #[error("need at least {k} controls to match, have {found}")]
    TooFewControls { k: usize, found: usize },
    #[error("record {0} has no outcome")]
    MissingOutcome(String),
    #[error("record {id} lacks the {field} field required by the selector")]
    MissingField { id: String, field: &'static str },
    #[error("no record of outlet {0:?}")]
    UnknownOutlet(String),
    #[error("invalid scenario {name:?}: {reason}")]
    InvalidScenario { name: String, reason: String },
    #[error("record {0} matches both the treatment and the control selector")]
    Overlap(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Neural(#[from] NeuralError),
}

/// A predicate picking one arm of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Selector {
    /// The post differs from the headline after normalization.
    Edited,
    Mirrored,
    Cluster { cluster: usize },
    /// Headline class and post class.
    Clickbait { headline: Class, post: Class },
}

impl Selector {
    pub fn matches(
        &self,
        record: &PairedRecord,
        profile: Option<&EditProfile>,
        threshold: f64,
    ) -> Result<bool, CausalError> {
        let missing = |field| CausalError::MissingField {
            id: record.id.clone(),
            field,
        };
        Ok(match self {
            Selector::Edited => !is_mirrored(record),
            Selector::Mirrored => is_mirrored(record),
            Selector::Cluster { cluster } => {
                profile.and_then(|p| p.cluster).ok_or_else(|| missing("cluster"))? == *cluster
            }
            Selector::Clickbait { headline, post } => {
                let p = profile.ok_or_else(|| missing("headline_clickbait"))?;
                let h = p.headline_clickbait.ok_or_else(|| missing("headline_clickbait"))?;
                let q = p.post_clickbait.ok_or_else(|| missing("post_clickbait"))?;
                classify_score(h, threshold) == *headline && classify_score(q, threshold) == *post
            }
        })
    }

    fn needs_profile(&self) -> bool {
        matches!(self, Selector::Cluster { .. } | Selector::Clickbait { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub treatment: Selector,
    pub control: Selector,
    pub outlet: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub section: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_block: Option<TimeBlock>,
    /// Drop records whose post mirrors the headline before selecting.
    #[serde(default)]
    pub exclude_mirrored: bool,
}

impl Scenario {
    pub fn edited_vs_mirrored(name: &str, outlet: &str) -> Scenario {
        Scenario {
            name: name.to_string(),
            treatment: Selector::Edited,
            control: Selector::Mirrored,
            outlet: outlet.to_string(),
            section: None,
            time_block: None,
            exclude_mirrored: false,
        }
    }

    pub fn validate(&self) -> Result<(), CausalError> {
        let invalid = |reason: &str| CausalError::InvalidScenario {
            name: self.name.clone(),
            reason: reason.to_string(),
        };
        if self.name.trim().is_empty() {
            return Err(invalid("name is empty"));
        }
        if self.outlet.trim().is_empty() {
            return Err(invalid("outlet is required"));
        }
        if self.treatment == self.control {
            return Err(invalid("treatment and control selectors are identical"));
        }
        if self.exclude_mirrored
            && (self.treatment == Selector::Mirrored || self.control == Selector::Mirrored)
        {
            return Err(invalid("exclude_mirrored empties the mirrored arm"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PropensityConfig {
    pub hidden: [usize; 2],
    pub l2: f64,
    pub l2_layer: usize,
    pub training: MlpTraining,
}

impl Default for PropensityConfig {
    fn default() -> Self {
        PropensityConfig {
            hidden: [128, 64],
            l2: 0.001,
            l2_layer: 1,
            training: MlpTraining {
                epochs: 10,
                ..MlpTraining::default()
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CausalConfig {
    /// Controls matched to each treatment unit.
    pub knn: usize,
    pub alpha: f64,
    pub tau: f64,
    pub folds: usize,
    /// Smallest treatment or control group a scenario may have.
    pub min_group: usize,
    /// Above this many units the similarity moments come from sampled pairs.
    pub exact_pairs_max: usize,
    pub sampled_pairs: usize,
    pub ci_level: f64,
    /// Score boundary for clickbait selectors.
    pub clickbait_threshold: f64,
    pub propensity: PropensityConfig,
    pub seed: u64,
}

impl Default for CausalConfig {
    fn default() -> Self {
        CausalConfig {
            knn: 5,
            alpha: 1.5,
            tau: 0.8,
            folds: 10,
            min_group: 30,
            exact_pairs_max: 2000,
            sampled_pairs: 200_000,
            ci_level: 0.95,
            clickbait_threshold: crate::clickbait::THRESHOLD,
            propensity: PropensityConfig::default(),
            seed: 0,
        }
    }
}

impl CausalConfig {
    pub fn validate(&self) -> Result<(), CausalError> {
        let bad = |m: &str| Err(CausalError::InvalidConfig(m.to_string()));
        if self.knn == 0 {
            return bad("knn must be positive");
        }
        if self.folds < 2 {
            return bad("at least two folds are needed");
        }
        if !(self.alpha.is_finite() && self.tau.is_finite()) {
            return bad("alpha and tau must be finite");
        }
        if !(self.ci_level > 0.0 && self.ci_level < 1.0) {
            return bad("ci_level must lie in (0, 1)");
        }
        if self.sampled_pairs == 0 {
            return bad("sampled_pairs must be positive");
        }
        Ok(())
    }
}

/// One record admitted to a scenario, with its body embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct Unit {
    pub id: String,
    pub treated: bool,
    pub body: Vec<f64>,
    pub replies: f64,
    pub retweets: f64,
    pub likes: f64,
}

impl Unit {
    pub fn outcome(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Replies => self.replies,
            Metric::Retweets => self.retweets,
            Metric::Likes => self.likes,
        }
    }
}

/// Applies the scenario's filters and selectors. Records with an empty body
/// or a body without any in-vocabulary token are left out.
pub fn select_units(
    corpus: &Corpus,
    profiles: &[EditProfile],
    scenario: &Scenario,
    table: &EmbeddingTable,
    config: &CausalConfig,
) -> Result<Vec<Unit>, CausalError> {
    scenario.validate()?;
    if !corpus.records.iter().any(|r| r.outlet == scenario.outlet) {
        return Err(CausalError::UnknownOutlet(scenario.outlet.clone()));
    }
    let by_id: HashMap<&str, &EditProfile> =
        profiles.iter().map(|p| (p.record_id.as_str(), p)).collect();
    let needs_profile = scenario.treatment.needs_profile() || scenario.control.needs_profile();
    let mut units = Vec::new();
    for r in &corpus.records {
        if r.outlet != scenario.outlet || !r.has_body() {
            continue;
        }
        if scenario.section.is_some() && r.section != scenario.section {
            continue;
        }
        if scenario
            .time_block
            .is_some_and(|b| time_block_of(r.created_at) != b)
        {
            continue;
        }
        if scenario.exclude_mirrored && is_mirrored(r) {
            continue;
        }
        let profile = by_id.get(r.id.as_str()).copied();
        if needs_profile && profile.is_none() {
            return Err(CausalError::MissingField {
                id: r.id.clone(),
                field: "profile",
            });
        }
        let t = scenario.treatment.matches(r, profile, config.clickbait_threshold)?;
        let c = scenario.control.matches(r, profile, config.clickbait_threshold)?;
        if t && c {
            return Err(CausalError::Overlap(r.id.clone()));
        }
        if !(t || c) {
            continue;
        }
        let body = embed_text(table, &r.body_text);
        if body.is_zero_hit() {
            continue;
        }
        units.push(Unit {
            id: r.id.clone(),
            treated: t,
            body: body.values,
            replies: r.replies as f64,
            retweets: r.retweets as f64,
            likes: r.likes as f64,
        });
    }
    let n_t = units.iter().filter(|u| u.treated).count();
    let n_c = units.len() - n_t;
    for (selector, found) in [("treatment", n_t), ("control", n_c)] {
        if found < config.min_group {
            return Err(CausalError::InsufficientUnits {
                selector,
                found,
                min: config.min_group,
            });
        }
    }
    Ok(units)
}

pub struct PropensityModel {
    pub mlp: Mlp,
}

impl PropensityModel {
    pub fn score(&self, body: &[f64]) -> f64 {
        self.mlp.predict_one(body)
    }
}

/// Fits P(treated | body vector) with binary cross-entropy and Adam.
pub fn train_propensity(
    units: &[&Unit],
    config: &PropensityConfig,
    seed: u64,
) -> Result<PropensityModel, CausalError> {
    let n_t = units.iter().filter(|u| u.treated).count();
    if n_t == 0 || n_t == units.len() {
        return Err(CausalError::OneClass);
    }
    let dim = units[0].body.len();
    let data: Vec<f64> = units.iter().flat_map(|u| u.body.iter().copied()).collect();
    let x = Tensor::from_vec(&[units.len(), dim], data)?;
    let y: Vec<f64> = units.iter().map(|u| f64::from(u8::from(u.treated))).collect();
    let spec = MlpSpec {
        inputs: dim,
        hidden: config.hidden,
        l2: config.l2,
        l2_layer: config.l2_layer,
    };
    let mut mlp = Mlp::new(spec, seed);
    mlp.fit(&x, &y, &config.training, seed.wrapping_add(1))?;
    Ok(PropensityModel { mlp })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub treatment_id: String,
    pub matched_control_ids: Vec<String>,
    /// |propensity(t) - propensity(c)| per matched control.
    pub gaps: Vec<f64>,
    /// Mean body cosine similarity between the treatment and its controls.
    pub mean_similarity: f64,
}

/// A unit as seen by the matcher.
#[derive(Debug, Clone, Copy)]
pub struct Scored<'a> {
    pub id: &'a str,
    pub propensity: f64,
    pub body: &'a [f64],
}

/// For each treatment, the `k` controls closest in propensity, with
/// replacement across treatments and ties broken by ascending record id.
pub fn knn_match(
    treatments: &[Scored],
    controls: &[Scored],
    k: usize,
) -> Result<Vec<MatchResult>, CausalError> {
    if controls.len() < k || k == 0 {
        return Err(CausalError::TooFewControls {
            k,
            found: controls.len(),
        });
    }
    let mut order: Vec<usize> = (0..controls.len()).collect();
    order.sort_by(|&a, &b| controls[a].id.cmp(controls[b].id));
    let sorted: Vec<&Scored> = order.iter().map(|&i| &controls[i]).collect();
    let norms: Vec<f64> = sorted.iter().map(|c| norm(c.body)).collect();
    Ok(treatments
        .par_iter()
        .map(|t| {
            // (gap, position in id order) so that ties resolve by id
            let mut gaps: Vec<(f64, usize)> = sorted
                .iter()
                .enumerate()
                .map(|(i, c)| ((t.propensity - c.propensity).abs(), i))
                .collect();
            let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
            if gaps.len() > k {
                gaps.select_nth_unstable_by(k - 1, cmp);
                gaps.truncate(k);
            }
            gaps.sort_by(cmp);
            let tn = norm(t.body);
            let sim: f64 = gaps
                .iter()
                .map(|&(_, i)| cosine_with_norms(t.body, sorted[i].body, tn, norms[i]))
                .sum();
            MatchResult {
                treatment_id: t.id.to_string(),
                matched_control_ids: gaps.iter().map(|&(_, i)| sorted[i].id.to_string()).collect(),
                gaps: gaps.iter().map(|g| g.0).collect(),
                mean_similarity: sim / k as f64,
            }
        })
        .collect())
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn cosine_with_norms(u: &[f64], v: &[f64], nu: f64, nv: f64) -> f64 {
    if nu == 0.0 || nv == 0.0 {
        return 0.0;
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    (dot / (nu * nv)).clamp(-1.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BalanceStats {
    pub mu: f64,
    pub sigma: f64,
    pub tau: f64,
    pub alpha: f64,
    /// max(mu + alpha * sigma, tau)
    pub threshold: f64,
    pub achieved: f64,
    pub passed: bool,
}

/// The matching succeeds when the mean matched similarity reaches
/// max(mu + alpha * sigma, tau).
pub fn balance_gate(achieved: f64, mu: f64, sigma: f64, alpha: f64, tau: f64) -> BalanceStats {
    let threshold = (mu + alpha * sigma).max(tau);
    BalanceStats {
        mu,
        sigma,
        tau,
        alpha,
        threshold,
        achieved,
        passed: achieved >= threshold,
    }
}

/// Averages the per-treatment mean similarities and applies the gate.
pub fn balance_check(matches: &[MatchResult], alpha: f64, tau: f64, mu: f64, sigma: f64) -> BalanceStats {
    let achieved = mean(&matches.iter().map(|m| m.mean_similarity).collect::<Vec<_>>());
    balance_gate(achieved, mu, sigma, alpha, tau)
}

/// Mean and population standard deviation of the cosine similarity over
/// document pairs: every pair when there are at most `exact_max` documents,
/// otherwise `samples` uniformly drawn distinct pairs.
pub fn similarity_moments(bodies: &[&[f64]], exact_max: usize, samples: usize, seed: u64) -> (f64, f64) {
    let n = bodies.len();
    if n < 2 {
        return (0.0, 0.0);
    }
    let norms: Vec<f64> = bodies.iter().map(|b| norm(b)).collect();
    let sim = |i: usize, j: usize| cosine_with_norms(bodies[i], bodies[j], norms[i], norms[j]);
    let (sum, sum_sq, count) = if n <= exact_max {
        (0..n)
            .into_par_iter()
            .map(|i| {
                let mut s = 0.0;
                let mut s2 = 0.0;
                for j in (i + 1)..n {
                    let v = sim(i, j);
                    s += v;
                    s2 += v * v;
                }
                (s, s2)
            })
            .collect::<Vec<_>>()
            .into_iter()
            .fold((0.0, 0.0, n * (n - 1) / 2), |acc, (s, s2)| (acc.0 + s, acc.1 + s2, acc.2))
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = 0.0;
        let mut s2 = 0.0;
        for _ in 0..samples {
            let i = rng.random_range(0..n);
            let mut j = rng.random_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            let v = sim(i, j);
            s += v;
            s2 += v * v;
        }
        (s, s2, samples)
    };
    let m = sum / count as f64;
    let var = (sum_sq / count as f64 - m * m).max(0.0);
    (m, var.sqrt())
}

/// Mean over treatments of the mean outcome gap to their matched controls.
pub fn estimate_eate(matches: &[MatchResult], outcomes: &HashMap<String, f64>) -> Result<f64, CausalError> {
    if matches.is_empty() {
        return Ok(0.0);
    }
    let get = |id: &str| {
        outcomes
            .get(id)
            .copied()
            .ok_or_else(|| CausalError::MissingOutcome(id.to_string()))
    };
    let mut total = 0.0;
    for m in matches {
        let yt = get(&m.treatment_id)?;
        let k = m.matched_control_ids.len() as f64;
        let mut gap = 0.0;
        for c in &m.matched_control_ids {
            gap += yt - get(c)?;
        }
        total += gap / k;
    }
    Ok(total / matches.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EateReport {
    pub scenario: String,
    pub metric: Metric,
    pub fold_eates: Vec<f64>,
    pub mean_eate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub discarded: bool,
    pub balance: Vec<BalanceStats>,
}

impl EateReport {
    /// Builds the report from fold values; discarded when the interval
    /// covers zero or any fold failed the balance gate.
    pub fn from_folds(
        scenario: &str,
        metric: Metric,
        fold_eates: Vec<f64>,
        balance: Vec<BalanceStats>,
        ci_level: f64,
    ) -> EateReport {
        let (ci_low, ci_high) = t_interval(&fold_eates, ci_level);
        let discarded = (ci_low <= 0.0 && 0.0 <= ci_high) || balance.iter().any(|b| !b.passed);
        EateReport {
            scenario: scenario.to_string(),
            metric,
            mean_eate: mean(&fold_eates),
            fold_eates,
            ci_low,
            ci_high,
            discarded,
            balance,
        }
    }

    pub fn ci_contains_zero(&self) -> bool {
        self.ci_low <= 0.0 && 0.0 <= self.ci_high
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NaiveDifference {
    pub metric: Metric,
    pub difference: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub scenario: Scenario,
    pub treatment_units: usize,
    pub control_units: usize,
    /// True when every fold passed the balance gate.
    pub balanced: bool,
    /// Unmatched treated-minus-control mean differences.
    pub naive: Vec<NaiveDifference>,
    pub reports: Vec<EateReport>,
}

struct FoldResult {
    balance: BalanceStats,
    eates: [f64; 3],
}

fn fold_seed(seed: u64, fold: usize) -> u64 {
    seed ^ ((fold as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Fold index of every unit, stratified by arm.
pub fn assign_folds(units: &[Unit], folds: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![0; units.len()];
    for arm in [true, false] {
        let mut idx: Vec<usize> = (0..units.len()).filter(|&i| units[i].treated == arm).collect();
        idx.shuffle(&mut rng);
        for (pos, i) in idx.into_iter().enumerate() {
            out[i] = pos % folds;
        }
    }
    out
}

/// Trains, matches, balance-checks and estimates on every unit outside
/// fold `held_out`.
fn run_fold(units: &[Unit], folds: &[usize], held_out: usize, config: &CausalConfig) -> Result<FoldResult, CausalError> {
    let seed = fold_seed(config.seed, held_out);
    let active: Vec<&Unit> = units
        .iter()
        .zip(folds)
        .filter(|(_, &f)| f != held_out)
        .map(|(u, _)| u)
        .collect();
    let model = train_propensity(&active, &config.propensity, seed)?;
    let scored: Vec<(bool, Scored)> = active
        .iter()
        .map(|u| {
            (
                u.treated,
                Scored {
                    id: &u.id,
                    propensity: model.score(&u.body),
                    body: &u.body,
                },
            )
        })
        .collect();
    let treatments: Vec<Scored> = scored.iter().filter(|s| s.0).map(|s| s.1).collect();
    let controls: Vec<Scored> = scored.iter().filter(|s| !s.0).map(|s| s.1).collect();
    let matches = knn_match(&treatments, &controls, config.knn)?;

    let bodies: Vec<&[f64]> = active.iter().map(|u| u.body.as_slice()).collect();
    let (mu, sigma) = similarity_moments(&bodies, config.exact_pairs_max, config.sampled_pairs, seed);
    let balance = balance_check(&matches, config.alpha, config.tau, mu, sigma);

    let mut eates = [0.0; 3];
    for (slot, metric) in eates.iter_mut().zip(Metric::ALL) {
        let outcomes: HashMap<String, f64> = active.iter().map(|u| (u.id.clone(), u.outcome(metric))).collect();
        *slot = estimate_eate(&matches, &outcomes)?;
    }
    Ok(FoldResult { balance, eates })
}

/// Runs the cross-validated protocol on one scenario: per fold, train the
/// propensity model on the other folds, match within them, check balance
/// and estimate the effect for every engagement metric.
pub fn run_scenario(
    corpus: &Corpus,
    profiles: &[EditProfile],
    scenario: &Scenario,
    table: &EmbeddingTable,
    config: &CausalConfig,
) -> Result<ScenarioReport, CausalError> {
    config.validate()?;
    let units = select_units(corpus, profiles, scenario, table, config)?;
    run_units(&units, scenario, config)
}

/// The protocol of [`run_scenario`] on already selected units.
pub fn run_units(units: &[Unit], scenario: &Scenario, config: &CausalConfig) -> Result<ScenarioReport, CausalError> {
    config.validate()?;
    let folds = assign_folds(units, config.folds, config.seed);
    let results: Vec<FoldResult> = (0..config.folds)
        .into_par_iter()
        .map(|f| run_fold(units, &folds, f, config))
        .collect::<Result<_, _>>()?;
    let balance: Vec<BalanceStats> = results.iter().map(|r| r.balance).collect();
    let reports = Metric::ALL
        .iter()
        .enumerate()
        .map(|(mi, &metric)| {
            EateReport::from_folds(
                &scenario.name,
                metric,
                results.iter().map(|r| r.eates[mi]).collect(),
                balance.clone(),
                config.ci_level,
            )
        })
        .collect();
    let naive = Metric::ALL
        .iter()
        .map(|&metric| {
            let t: Vec<f64> = units.iter().filter(|u| u.treated).map(|u| u.outcome(metric)).collect();
            let c: Vec<f64> = units.iter().filter(|u| !u.treated).map(|u| u.outcome(metric)).collect();
            let (difference, std_error) = mean_difference(&t, &c);
            NaiveDifference {
                metric,
                difference,
                std_error,
            }
        })
        .collect();
    let n_t = units.iter().filter(|u| u.treated).count();
    Ok(ScenarioReport {
        scenario: scenario.clone(),
        treatment_units: n_t,
        control_units: units.len() - n_t,
        balanced: balance.iter().all(|b| b.passed),
        naive,
        reports,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioStatus {
    Estimated,
    Skipped,
}

/// Outcome of one configured scenario; under-sized scenarios are skipped
/// rather than failing the whole run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioOutcome {
    pub name: String,
    pub status: ScenarioStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<ScenarioReport>,
}

/// Runs scenarios in order. Insufficient units mark a scenario skipped;
/// any other error aborts.
pub fn run_scenarios(
    corpus: &Corpus,
    profiles: &[EditProfile],
    scenarios: &[Scenario],
    table: &EmbeddingTable,
    config: &CausalConfig,
) -> Result<Vec<ScenarioOutcome>, CausalError> {
    let mut names = HashSet::new();
    for s in scenarios {
        if !names.insert(s.name.as_str()) {
            return Err(CausalError::InvalidScenario {
                name: s.name.clone(),
                reason: "duplicate name".into(),
            });
        }
    }
    scenarios
        .iter()
        .map(|s| match run_scenario(corpus, profiles, s, table, config) {
            Ok(report) => Ok(ScenarioOutcome {
                name: s.name.clone(),
                status: ScenarioStatus::Estimated,
                reason: None,
                report: Some(report),
            }),
            Err(e @ CausalError::InsufficientUnits { .. }) => Ok(ScenarioOutcome {
                name: s.name.clone(),
                status: ScenarioStatus::Skipped,
                reason: Some(e.to_string()),
                report: None,
            }),
            Err(e) => Err(e),
        })
        .collect()
}

/// Flat CSV: one row per scenario and metric, fold values last.
pub fn write_reports_csv<W: std::io::Write>(
    outcomes: &[ScenarioOutcome],
    folds: usize,
    out: W,
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = ["scenario", "metric", "mean_eate", "ci_low", "ci_high", "discarded", "balanced"]
        .map(String::from)
        .to_vec();
    header.extend((1..=folds).map(|i| format!("fold_{i}")));
    w.write_record(&header)?;
    for o in outcomes {
        let Some(report) = &o.report else { continue };
        for r in &report.reports {
            let mut row = vec![
                r.scenario.clone(),
                r.metric.to_string(),
                r.mean_eate.to_string(),
                r.ci_low.to_string(),
                r.ci_high.to_string(),
                r.discarded.to_string(),
                report.balanced.to_string(),
            ];
            row.extend(r.fold_eates.iter().map(f64::to_string));
            row.resize(header.len(), String::new());
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}
