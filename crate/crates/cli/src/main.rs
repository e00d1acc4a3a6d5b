//! `newsedit`: ingest → profile → cluster → clickbait → estimate, plus a
//! synthetic corpus generator.
//!
//! Exit codes: 0 success, 1 runtime or data error, 2 usage error.

mod config;
mod report;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use newsedit::causal::{run_scenarios, write_reports_csv, ScenarioStatus};
use newsedit::clickbait::{self, conditional_shift_table, score_profiles, ClickbaitModel};
use newsedit::clusterer::{cluster_fractions, elbow_select, fit_best, ClusterAssignment, Init, DEFAULT_RESTARTS};
use newsedit::corpus::{load_corpus, Corpus, Format};
use newsedit::embedding::{load_table, EmbeddingTable};
use newsedit::io::{write_atomic, write_json};
use newsedit::synth::{self, SynthSpec};
use newsedit::textsim::{self, EditProfile};

use config::{RunConfig, UsageError};

#[derive(Parser)]
#[command(name = "newsedit", version, about = "Headline-to-post editing analysis and engagement effects")]
struct Cli {
    /// JSON run config; flags override its values.
    #[arg(long, global = true, env = "NEWSEDIT_CONFIG")]
    config: Option<PathBuf>,
    /// Worker threads for folds and scoring (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Paired corpus, JSONL or CSV by extension.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Word vectors in `.vec` text format.
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a corpus and report record and reject counts.
    Ingest(Common),
    /// Edit distance and embedding similarity per record, with summaries.
    Profile(Common),
    /// Cluster profiles into editing styles.
    Cluster {
        #[command(flatten)]
        common: Common,
        /// Profile CSV (default: <out>/profiles.csv).
        #[arg(long)]
        profiles: Option<PathBuf>,
        /// Number of clusters; chosen by the elbow rule when absent.
        #[arg(long)]
        k: Option<usize>,
        /// Largest k tried by the elbow rule.
        #[arg(long)]
        k_max: Option<usize>,
    },
    /// Train or apply the clickbait classifier.
    Clickbait {
        #[command(subcommand)]
        action: ClickbaitCommand,
    },
    /// Estimate matched engagement effects for the configured scenarios.
    Estimate {
        #[command(flatten)]
        common: Common,
        /// Profile CSV, needed by cluster and clickbait scenarios.
        #[arg(long)]
        profiles: Option<PathBuf>,
        /// JSON file with a list of scenarios (overrides the config's).
        #[arg(long)]
        scenarios: Option<PathBuf>,
        /// Controls matched per treatment unit.
        #[arg(long)]
        knn: Option<usize>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        tau: Option<f64>,
        /// Smallest treatment or control group.
        #[arg(long)]
        min_group: Option<usize>,
    },
    /// Generate a synthetic corpus with known effects.
    Synth {
        #[command(flatten)]
        common: Common,
        /// Generator spec (JSON).
        #[arg(long, conflicts_with = "preset")]
        spec: Option<PathBuf>,
        /// Built-in spec: six topics whose treatment odds rise with base engagement.
        #[arg(long, value_enum)]
        preset: Option<Preset>,
        /// Records for a preset.
        #[arg(long, default_value_t = 5000)]
        records: usize,
        /// Additive effect on likes for a preset.
        #[arg(long, default_value_t = 50.0)]
        effect: f64,
        /// Dimension of the emitted embedding table.
        #[arg(long, default_value_t = 24)]
        embed_dim: usize,
        /// Also write this many labelled clickbait headlines.
        #[arg(long)]
        clickbait: Option<usize>,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Preset {
    Confounded,
    Unconfounded,
}

#[derive(Subcommand)]
enum ClickbaitCommand {
    /// Train on a `text,label` CSV and save the model.
    Train {
        #[command(flatten)]
        common: Common,
        /// Training CSV.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Model file to write (default: <out>/clickbait.model).
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Score headlines and posts and write the class shift tables.
    Score {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: Option<PathBuf>,
        /// Profile CSV (default: <out>/profiles.csv).
        #[arg(long)]
        profiles: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(j) = cli.jobs.or(cfg.jobs) {
        if j == 0 {
            bail!(UsageError("--jobs must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .context("thread pool")?;
    }
    match cli.command {
        Command::Ingest(c) => ingest(&cfg.merge(&c)),
        Command::Profile(c) => profile(&cfg.merge(&c)),
        Command::Cluster {
            common,
            profiles,
            k,
            k_max,
        } => {
            let mut r = cfg.merge(&common);
            r.k = k.or(r.k);
            r.k_max = k_max.unwrap_or(r.k_max);
            r.profiles = profiles.or(r.profiles);
            cluster(&r)
        }
        Command::Clickbait { action } => match action {
            ClickbaitCommand::Train {
                common,
                data,
                model,
                epochs,
            } => {
                let mut r = cfg.merge(&common);
                r.clickbait_data = data.or(r.clickbait_data);
                r.clickbait_model = model.or(r.clickbait_model);
                if let Some(e) = epochs {
                    r.clickbait.epochs = e;
                }
                clickbait_train(&r)
            }
            ClickbaitCommand::Score {
                common,
                model,
                profiles,
            } => {
                let mut r = cfg.merge(&common);
                r.clickbait_model = model.or(r.clickbait_model);
                r.profiles = profiles.or(r.profiles);
                clickbait_score(&r)
            }
        },
        Command::Estimate {
            common,
            profiles,
            scenarios,
            knn,
            alpha,
            tau,
            min_group,
        } => {
            let mut r = cfg.merge(&common);
            r.profiles = profiles.or(r.profiles);
            if let Some(p) = scenarios {
                r.scenarios = config::load_scenarios(&p)?;
            }
            let c = &mut r.causal;
            c.knn = knn.unwrap_or(c.knn);
            c.alpha = alpha.unwrap_or(c.alpha);
            c.tau = tau.unwrap_or(c.tau);
            c.min_group = min_group.unwrap_or(c.min_group);
            estimate(&r)
        }
        Command::Synth {
            common,
            spec,
            preset,
            records,
            effect,
            embed_dim,
            clickbait,
        } => {
            let spec = match (spec, preset) {
                (Some(p), _) => {
                    let text = std::fs::read_to_string(&p).with_context(|| format!("cannot read {}", p.display()))?;
                    serde_json::from_str(&text).with_context(|| format!("invalid spec {}", p.display()))?
                }
                (None, Some(Preset::Confounded)) => SynthSpec::confounded(records, effect, 0),
                (None, Some(Preset::Unconfounded)) => SynthSpec::unconfounded(records, effect, 0),
                (None, None) => bail!(UsageError("--spec or --preset is required".into())),
            };
            synth_cmd(&cfg.merge(&common), spec, embed_dim, clickbait)
        }
    }
}

fn load(cfg: &RunConfig) -> Result<Corpus> {
    let path = cfg.corpus()?;
    let corpus = load_corpus(path, Format::from_path(path))?;
    for r in &corpus.rejects {
        eprintln!("warning: {}: line {}: {}", path.display(), r.line, r.reason);
    }
    Ok(corpus)
}

fn table(cfg: &RunConfig) -> Result<EmbeddingTable> {
    Ok(load_table(cfg.embeddings()?)?)
}

fn read_profiles(path: &Path) -> Result<Vec<EditProfile>> {
    let f = std::fs::File::open(path).with_context(|| format!("cannot open profiles {}", path.display()))?;
    textsim::read_profiles_csv(f).with_context(|| format!("cannot parse profiles {}", path.display()))
}

fn write_profiles(path: &Path, profiles: &[EditProfile]) -> Result<()> {
    write_atomic(path, |w| textsim::write_profiles_csv(profiles, w).map_err(std::io::Error::other))
        .with_context(|| format!("cannot write {}", path.display()))
}

fn ingest(cfg: &RunConfig) -> Result<()> {
    let corpus = load(cfg)?;
    let summary = report::ingest_summary(&corpus);
    println!("{} records, {} rejected", corpus.len(), corpus.rejects.len());
    if let Some(out) = &cfg.out {
        write_json(&out.join("ingest.json"), &summary)?;
    }
    Ok(())
}

fn profile(cfg: &RunConfig) -> Result<()> {
    let out = cfg.out()?;
    let corpus = load(cfg)?;
    let table = table(cfg)?;
    let profiles = textsim::profile(&corpus, &table);
    let summary = report::profile_summary(&corpus, &profiles);
    write_profiles(&out.join("profiles.csv"), &profiles)?;
    write_json(&out.join("profile_summary.json"), &summary)?;
    println!(
        "{} profiles, {} with an out-of-vocabulary side",
        profiles.len(),
        profiles.iter().filter(|p| p.zero_hit).count()
    );
    Ok(())
}

fn cluster(cfg: &RunConfig) -> Result<()> {
    let out = cfg.out()?;
    let corpus = load(cfg)?;
    let path = cfg.profiles.clone().unwrap_or_else(|| out.join("profiles.csv"));
    let mut profiles = read_profiles(&path)?;
    let points: Vec<[f64; 2]> = profiles.iter().map(EditProfile::point).collect();
    let seed = cfg.seed();
    let (model, elbow) = match cfg.k {
        Some(k) => (fit_best(&points, k, seed, DEFAULT_RESTARTS, Init::PlusPlus)?, None),
        None => {
            let k_max = cfg.k_max.min(points.len());
            let e = elbow_select(&points, k_max, seed, cfg.elbow_threshold)?;
            (fit_best(&points, e.k, seed, DEFAULT_RESTARTS, Init::PlusPlus)?, Some(e))
        }
    };
    let labels = model.assign(&points);
    let assignments: Vec<ClusterAssignment> = profiles
        .iter_mut()
        .zip(&labels)
        .map(|(p, &c)| {
            p.cluster = Some(c);
            ClusterAssignment {
                record_id: p.record_id.clone(),
                cluster: c,
            }
        })
        .collect();
    let fractions = cluster_fractions(&assignments, &corpus, model.k, None)?;
    write_json(
        &out.join("cluster_model.json"),
        &serde_json::json!({ "model": model, "elbow": elbow }),
    )?;
    write_json(&out.join("cluster_fractions.json"), &fractions)?;
    write_profiles(&out.join("profiles.csv"), &profiles)?;
    println!("k = {}, inertia {:.6}", model.k, model.inertia);
    for (outlet, row) in &fractions {
        let cells: Vec<String> = row.iter().map(|f| format!("{f:.3}")).collect();
        println!("{outlet}: {}", cells.join(" "));
    }
    Ok(())
}

fn clickbait_train(cfg: &RunConfig) -> Result<()> {
    let data_path = cfg
        .clickbait_data
        .as_ref()
        .ok_or_else(|| UsageError("--data is required".into()))?;
    let data = clickbait::load_labeled_csv(
        std::fs::File::open(data_path).with_context(|| format!("cannot open {}", data_path.display()))?,
    )?;
    let table = match &cfg.embeddings {
        Some(p) => Some(load_table(p)?),
        None => None,
    };
    let (model, report) = clickbait::train(&data, table.as_ref(), cfg.clickbait, cfg.seed())?;
    let model_path = match (&cfg.clickbait_model, &cfg.out) {
        (Some(p), _) => p.clone(),
        (None, Some(o)) => o.join("clickbait.model"),
        (None, None) => bail!(UsageError("--model or --out is required".into())),
    };
    model.save_file(&model_path)?;
    if let Some(out) = &cfg.out {
        write_json(&out.join("clickbait_train.json"), &report)?;
    }
    println!("held-out F1 {:.4} ({} test examples)", report.test_f1, report.test_size);
    Ok(())
}

fn clickbait_score(cfg: &RunConfig) -> Result<()> {
    let model_path = cfg.clickbait_model.as_ref().context("no clickbait model given (--model)")?;
    let model = ClickbaitModel::load_file(model_path)
        .with_context(|| format!("cannot load model {}", model_path.display()))?;
    let out = cfg.out()?;
    let corpus = load(cfg)?;
    let path = cfg.profiles.clone().unwrap_or_else(|| out.join("profiles.csv"));
    let mut profiles = read_profiles(&path)?;
    score_profiles(&model, &corpus, &mut profiles)?;
    let tables = corpus
        .outlets()
        .iter()
        .map(|o| Ok((o.clone(), conditional_shift_table(&corpus, &profiles, o, model.threshold())?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    write_profiles(&out.join("profiles.csv"), &profiles)?;
    write_json(&out.join("clickbait_shift.json"), &tables)?;
    for (o, t) in &tables {
        let cell = |p: Option<f64>| p.map_or("undefined".to_string(), |v| format!("{v:.3}"));
        println!(
            "{o}: P(NC|C) = {} (n={}), P(C|NC) = {} (n={})",
            cell(t.p_nc_given_c),
            t.headline_c,
            cell(t.p_c_given_nc),
            t.headline_nc
        );
    }
    Ok(())
}

fn estimate(cfg: &RunConfig) -> Result<()> {
    if cfg.scenarios.is_empty() {
        bail!(UsageError("no scenarios configured".into()));
    }
    let out = cfg.out()?;
    let corpus = load(cfg)?;
    let table = table(cfg)?;
    let profiles = match &cfg.profiles {
        Some(p) => read_profiles(p)?,
        None => Vec::new(),
    };
    let mut causal = cfg.causal;
    causal.seed = cfg.seed();
    causal.validate().map_err(|e| UsageError(e.to_string()))?;
    let outcomes = run_scenarios(&corpus, &profiles, &cfg.scenarios, &table, &causal)?;
    write_json(&out.join("reports.json"), &outcomes)?;
    write_atomic(&out.join("reports.csv"), |w| {
        write_reports_csv(&outcomes, causal.folds, w).map_err(std::io::Error::other)
    })?;
    for o in &outcomes {
        match (&o.status, &o.report) {
            (ScenarioStatus::Skipped, _) => {
                eprintln!("warning: scenario {} skipped: {}", o.name, o.reason.as_deref().unwrap_or(""));
            }
            (ScenarioStatus::Estimated, Some(r)) => {
                for e in &r.reports {
                    println!(
                        "{} {}: EATE {:.3} [{:.3}, {:.3}]{}",
                        o.name,
                        e.metric,
                        e.mean_eate,
                        e.ci_low,
                        e.ci_high,
                        if e.discarded { " discarded" } else { "" }
                    );
                }
            }
            (ScenarioStatus::Estimated, None) => {}
        }
    }
    Ok(())
}

fn synth_cmd(cfg: &RunConfig, mut spec: SynthSpec, dim: usize, clickbait_n: Option<usize>) -> Result<()> {
    let out = cfg.out()?;
    if let Some(s) = cfg.seed {
        spec.seed = s;
    }
    let (corpus, truth) = synth::generate(&spec)?;
    if dim <= spec.topics.len() + 1 {
        bail!(UsageError(format!("--embed-dim must exceed {}", spec.topics.len() + 1)));
    }
    let table = synth::embedding_table(&spec, dim, spec.seed);
    write_atomic(&out.join("corpus.jsonl"), |w| corpus.write_jsonl(w))?;
    write_atomic(&out.join("truth.jsonl"), |w| synth::write_truth_jsonl(&truth, w))?;
    write_atomic(&out.join("embeddings.vec"), |w| table.write_vec(w))?;
    if let Some(n) = clickbait_n {
        let data = synth::clickbait_dataset(n, spec.seed);
        write_atomic(&out.join("clickbait.csv"), |w| {
            clickbait::write_labeled_csv(&data, w).map_err(std::io::Error::other)
        })?;
    }
    println!("{} records written to {}", corpus.len(), out.display());
    Ok(())
}
