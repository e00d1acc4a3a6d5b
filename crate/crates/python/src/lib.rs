//! Python bindings: text similarity, tests, clustering, the matching
//! estimator, the synthetic generator and the clickbait classifier.

use std::collections::HashMap;
use std::fmt::Display;
use std::path::PathBuf;

use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;

use newsedit::causal::{self, CausalConfig, MatchResult, Scenario};
use newsedit::clickbait::{self, ClickbaitConfig, LabeledHeadline};
use newsedit::clusterer::{elbow_select, fit_best, Init, DEFAULT_ELBOW_THRESHOLD, DEFAULT_RESTARTS};
use newsedit::corpus::{self, Format};
use newsedit::embedding::{self, embed_text};
use newsedit::synth::{self, SynthSpec};
use newsedit::textsim;

fn value_err(e: impl Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn os_err(e: impl Display) -> PyErr {
    PyOSError::new_err(e.to_string())
}

/// Serializes through JSON into plain dicts and lists.
fn to_py<T: serde::Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(value_err)?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

/// NFC with whitespace runs collapsed, as used for mirroring checks.
#[pyfunction]
fn normalize(text: &str) -> String {
    corpus::normalize(text).into_string()
}

#[pyfunction]
fn is_mirrored(headline: &str, post: &str) -> bool {
    corpus::normalize(headline) == corpus::normalize(post)
}

/// Character Levenshtein distance over the longer length, in [0, 1].
#[pyfunction]
fn edit_distance(a: &str, b: &str) -> f64 {
    textsim::normalized_edit_distance(a, b)
}

/// Two-sided Mann-Whitney U; returns (U for x, p-value).
#[pyfunction]
fn mann_whitney_u(x: Vec<f64>, y: Vec<f64>) -> PyResult<(f64, f64)> {
    let r = textsim::mann_whitney_u(&x, &y).map_err(value_err)?;
    Ok((r.statistic, r.p_value))
}

/// Welch's t-test; returns (t, p-value).
#[pyfunction]
fn welch_t(x: Vec<f64>, y: Vec<f64>) -> PyResult<(f64, f64)> {
    let r = textsim::welch_t(&x, &y).map_err(value_err)?;
    Ok((r.statistic, r.p_value))
}

#[pyclass(module = "newsedit_py", frozen)]
struct EmbeddingTable(embedding::EmbeddingTable);

#[pymethods]
impl EmbeddingTable {
    #[new]
    fn new(vectors: HashMap<String, Vec<f64>>) -> PyResult<Self> {
        let mut pairs: Vec<_> = vectors.into_iter().collect();
        pairs.sort_by(|a, b| a.0.cmp(&b.0));
        embedding::EmbeddingTable::from_pairs(pairs).map(Self).map_err(value_err)
    }

    /// Reads a `.vec` text file.
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        embedding::load_table(&path).map(Self).map_err(os_err)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __contains__(&self, token: &str) -> bool {
        self.0.get(token).is_some()
    }

    /// Mean vector of the in-vocabulary tokens; None when there are none.
    fn embed(&self, text: &str) -> Option<Vec<f64>> {
        let v = embed_text(&self.0, text);
        (!v.is_zero_hit()).then_some(v.values)
    }

    /// Cosine similarity of two texts' mean vectors. Raises if either has
    /// no in-vocabulary token.
    fn similarity(&self, a: &str, b: &str) -> PyResult<f64> {
        embedding::cosine(&embed_text(&self.0, a), &embed_text(&self.0, b)).map_err(value_err)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        newsedit::io::write_atomic(&path, |w| self.0.write_vec(w)).map_err(os_err)
    }
}

#[pyclass(module = "newsedit_py", frozen)]
struct Corpus(corpus::Corpus);

#[pymethods]
impl Corpus {
    /// Loads JSONL or CSV, chosen by extension. Bad rows are kept in
    /// `rejects` rather than raised.
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        corpus::load_corpus(&path, Format::from_path(&path))
            .map(Self)
            .map_err(value_err)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    #[getter]
    fn outlets(&self) -> Vec<String> {
        self.0.outlets()
    }

    #[getter]
    fn ids(&self) -> Vec<String> {
        self.0.records.iter().map(|r| r.id.clone()).collect()
    }

    /// (line, reason) per rejected row.
    #[getter]
    fn rejects(&self) -> Vec<(usize, String)> {
        self.0.rejects.iter().map(|r| (r.line, r.reason.clone())).collect()
    }

    fn mirroring_table(&self) -> std::collections::BTreeMap<String, f64> {
        corpus::mirroring_table(&self.0)
    }

    /// Per-record edit profiles as dicts.
    fn profile(&self, py: Python<'_>, table: &EmbeddingTable) -> PyResult<Py<PyAny>> {
        let profiles = py.detach(|| textsim::profile(&self.0, &table.0));
        to_py(py, &profiles)
    }

    fn save_jsonl(&self, path: PathBuf) -> PyResult<()> {
        newsedit::io::write_atomic(&path, |w| self.0.write_jsonl(w)).map_err(os_err)
    }
}

/// K-means++ with restarts. Returns (centroids, labels, inertia); centroids
/// are ordered by their second coordinate.
#[pyfunction]
#[pyo3(signature = (points, k, seed = 0))]
fn kmeans(py: Python<'_>, points: Vec<[f64; 2]>, k: usize, seed: u64) -> PyResult<(Vec<[f64; 2]>, Vec<usize>, f64)> {
    let model = py
        .detach(|| fit_best(&points, k, seed, DEFAULT_RESTARTS, Init::PlusPlus))
        .map_err(value_err)?;
    let labels = model.assign(&points);
    Ok((model.centroids, labels, model.inertia))
}

/// Elbow rule over k = 1..=k_max. Returns (k, inertias).
#[pyfunction]
#[pyo3(signature = (points, k_max, seed = 0, threshold = DEFAULT_ELBOW_THRESHOLD))]
fn elbow(py: Python<'_>, points: Vec<[f64; 2]>, k_max: usize, seed: u64, threshold: f64) -> PyResult<(usize, Vec<f64>)> {
    let e = py
        .detach(|| elbow_select(&points, k_max, seed, threshold))
        .map_err(value_err)?;
    Ok((e.k, e.inertias))
}

/// Balance gate; returns (threshold, passed).
#[pyfunction]
#[pyo3(signature = (achieved, mu, sigma, alpha = 1.5, tau = 0.8))]
fn balance_gate(achieved: f64, mu: f64, sigma: f64, alpha: f64, tau: f64) -> (f64, bool) {
    let b = causal::balance_gate(achieved, mu, sigma, alpha, tau);
    (b.threshold, b.passed)
}

/// Mean over treatments of the average outcome gap to their matched
/// controls. `matches` maps a treatment id to its control ids.
#[pyfunction]
fn estimate_eate(matches: Vec<(String, Vec<String>)>, outcomes: HashMap<String, f64>) -> PyResult<f64> {
    let matches: Vec<MatchResult> = matches
        .into_iter()
        .map(|(t, cs)| MatchResult {
            gaps: vec![0.0; cs.len()],
            treatment_id: t,
            matched_control_ids: cs,
            mean_similarity: 0.0,
        })
        .collect();
    causal::estimate_eate(&matches, &outcomes).map_err(value_err)
}

/// Synthetic single-outlet corpus with a known additive effect on likes.
/// With `confounded`, topics that engage more are also edited more often.
/// Returns (corpus, embedding table, truth dicts).
#[pyfunction]
#[pyo3(signature = (n_records, likes_effect, seed = 0, confounded = true, embed_dim = 24))]
fn synthesize(
    py: Python<'_>,
    n_records: usize,
    likes_effect: f64,
    seed: u64,
    confounded: bool,
    embed_dim: usize,
) -> PyResult<(Corpus, EmbeddingTable, Py<PyAny>)> {
    let spec = if confounded {
        SynthSpec::confounded(n_records, likes_effect, seed)
    } else {
        SynthSpec::unconfounded(n_records, likes_effect, seed)
    };
    if embed_dim <= spec.topics.len() + 1 {
        return Err(PyValueError::new_err(format!("embed_dim must exceed {}", spec.topics.len() + 1)));
    }
    let (c, truth) = synth::generate(&spec).map_err(value_err)?;
    let table = synth::embedding_table(&spec, embed_dim, seed);
    Ok((Corpus(c), EmbeddingTable(table), to_py(py, &truth)?))
}

/// Runs the edited-vs-mirrored scenario for one outlet and returns the
/// report as a dict. `config` takes the same keys as the CLI's `causal`
/// config section.
#[pyfunction]
#[pyo3(signature = (corpus, table, outlet, seed = 0, config = None))]
fn estimate_edit_effect(
    py: Python<'_>,
    corpus: &Corpus,
    table: &EmbeddingTable,
    outlet: &str,
    seed: u64,
    config: Option<&str>,
) -> PyResult<Py<PyAny>> {
    let mut cfg: CausalConfig = match config {
        Some(text) => serde_json::from_str(text).map_err(value_err)?,
        None => CausalConfig::default(),
    };
    cfg.seed = seed;
    let scenario = Scenario::edited_vs_mirrored("edited_vs_mirrored", outlet);
    let report = py
        .detach(|| causal::run_scenario(&corpus.0, &[], &scenario, &table.0, &cfg))
        .map_err(value_err)?;
    to_py(py, &report)
}

#[pyclass(module = "newsedit_py", frozen)]
struct ClickbaitModel(clickbait::ClickbaitModel);

#[pymethods]
impl ClickbaitModel {
    /// Trains on parallel lists of headlines and labels. Returns the model
    /// and a dict with held-out F1 and split sizes.
    #[staticmethod]
    #[pyo3(signature = (texts, labels, seed = 0, epochs = None, table = None))]
    fn train(
        py: Python<'_>,
        texts: Vec<String>,
        labels: Vec<bool>,
        seed: u64,
        epochs: Option<usize>,
        table: Option<&EmbeddingTable>,
    ) -> PyResult<(Self, Py<PyAny>)> {
        if texts.len() != labels.len() {
            return Err(PyValueError::new_err("texts and labels differ in length"));
        }
        let data: Vec<LabeledHeadline> = texts
            .into_iter()
            .zip(labels)
            .map(|(text, label)| LabeledHeadline { text, label })
            .collect();
        let mut config = ClickbaitConfig::default();
        if let Some(e) = epochs {
            config.epochs = e;
        }
        let (model, report) = py
            .detach(|| clickbait::train(&data, table.map(|t| &t.0), config, seed))
            .map_err(value_err)?;
        Ok((Self(model), to_py(py, &report)?))
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        clickbait::ClickbaitModel::load_file(&path).map(Self).map_err(os_err)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.0.save_file(&path).map_err(os_err)
    }

    /// Probability that the text is clickbait.
    fn score(&self, text: &str) -> PyResult<f64> {
        self.0.score(text).map_err(value_err)
    }

    fn is_clickbait(&self, text: &str) -> PyResult<bool> {
        Ok(self.0.classify(text).map_err(value_err)? == clickbait::Class::Clickbait)
    }

    #[getter]
    fn threshold(&self) -> f64 {
        self.0.threshold()
    }
}

/// Labelled synthetic headlines, alternating clickbait and news.
#[pyfunction]
#[pyo3(signature = (n, seed = 0))]
fn clickbait_dataset(n: usize, seed: u64) -> (Vec<String>, Vec<bool>) {
    synth::clickbait_dataset(n, seed)
        .into_iter()
        .map(|h| (h.text, h.label))
        .unzip()
}

#[pymodule]
fn newsedit_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(normalize, m)?)?;
    m.add_function(wrap_pyfunction!(is_mirrored, m)?)?;
    m.add_function(wrap_pyfunction!(edit_distance, m)?)?;
    m.add_function(wrap_pyfunction!(mann_whitney_u, m)?)?;
    m.add_function(wrap_pyfunction!(welch_t, m)?)?;
    m.add_function(wrap_pyfunction!(kmeans, m)?)?;
    m.add_function(wrap_pyfunction!(elbow, m)?)?;
    m.add_function(wrap_pyfunction!(balance_gate, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_eate, m)?)?;
    m.add_function(wrap_pyfunction!(synthesize, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_edit_effect, m)?)?;
    m.add_function(wrap_pyfunction!(clickbait_dataset, m)?)?;
    m.add_class::<EmbeddingTable>()?;
    m.add_class::<Corpus>()?;
    m.add_class::<ClickbaitModel>()?;
    Ok(())
}
