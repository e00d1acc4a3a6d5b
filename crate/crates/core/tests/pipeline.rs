use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use newsedit::causal::{
    knn_match, run_units, select_units, train_propensity, CausalConfig, CausalError, MatchResult,
    Scenario, Scored, Selector, Unit,
};
use newsedit::clickbait::{self, conditional_shift_table, score_profiles, Class, ClickbaitConfig};
use newsedit::clusterer::{elbow_select, DEFAULT_ELBOW_THRESHOLD};
use newsedit::embedding::{embed_text, EmbeddingTable};
use newsedit::stats::auc;
use newsedit::synth::{clickbait_dataset, embedding_table, generate, PerMetric, SynthSpec, Topic};
use newsedit::textsim::{profile, read_profiles_csv, write_profiles_csv};

fn two_topic_units(n: usize, seed: u64) -> (Vec<Unit>, Vec<bool>) {
    let spec = SynthSpec {
        topics: vec![
            Topic {
                id: "a".into(),
                vocabulary: ["senate", "vote", "bill", "ballot"].map(String::from).to_vec(),
                base: PerMetric::default(),
                treat_prob: 0.5,
            },
            Topic {
                id: "b".into(),
                vocabulary: ["film", "album", "festival", "actor"].map(String::from).to_vec(),
                base: PerMetric::default(),
                treat_prob: 0.5,
            },
        ],
        ..SynthSpec::confounded(n, 0.0, seed)
    };
    let (corpus, truth) = generate(&spec).unwrap();
    let table = embedding_table(&spec, 16, seed);
    let topic_a: Vec<bool> = truth.iter().map(|t| t.topic == "a").collect();
    let units = corpus
        .records
        .iter()
        .zip(&topic_a)
        .map(|(r, &a)| Unit {
            id: r.id.clone(),
            treated: a,
            body: embed_text(&table, &r.body_text).values,
            replies: 0.0,
            retweets: 0.0,
            likes: 0.0,
        })
        .collect();
    (units, topic_a)
}

fn held_out_auc(units: &[Unit]) -> f64 {
    let split = units.len() * 4 / 5;
    let train: Vec<&Unit> = units[..split].iter().collect();
    let model = train_propensity(&train, &CausalConfig::default().propensity, 3).unwrap();
    let test = &units[split..];
    let scores: Vec<f64> = test.iter().map(|u| model.score(&u.body)).collect();
    assert!(scores.iter().all(|p| *p > 0.0 && *p < 1.0));
    let labels: Vec<bool> = test.iter().map(|u| u.treated).collect();
    auc(&scores, &labels)
}

#[test]
fn propensity_separates_disjoint_topics() {
    let (units, _) = two_topic_units(1000, 1);
    let a = held_out_auc(&units);
    assert!(a > 0.9, "auc {a}");
}

#[test]
fn propensity_is_uninformative_on_shuffled_labels() {
    let (mut units, mut labels) = two_topic_units(2000, 2);
    labels.shuffle(&mut ChaCha8Rng::seed_from_u64(9));
    for (u, l) in units.iter_mut().zip(labels) {
        u.treated = l;
    }
    let a = held_out_auc(&units);
    assert!((0.4..=0.6).contains(&a), "auc {a}");
}

#[test]
fn propensity_needs_both_groups() {
    let (mut units, _) = two_topic_units(100, 3);
    units.iter_mut().for_each(|u| u.treated = true);
    let refs: Vec<&Unit> = units.iter().collect();
    assert!(matches!(
        train_propensity(&refs, &CausalConfig::default().propensity, 1),
        Err(CausalError::OneClass)
    ));
}

/// Fixed matching where every treatment has one control and vice versa.
fn paired(n: usize) -> (Vec<MatchResult>, Vec<MatchResult>) {
    let fwd = (0..n)
        .map(|i| MatchResult {
            treatment_id: format!("t{i}"),
            matched_control_ids: vec![format!("c{i}"), format!("c{}", (i + 1) % n)],
            gaps: vec![0.0; 2],
            mean_similarity: 1.0,
        })
        .collect();
    let rev = (0..n)
        .map(|i| MatchResult {
            treatment_id: format!("c{i}"),
            matched_control_ids: vec![format!("t{i}"), format!("t{}", (i + n - 1) % n)],
            gaps: vec![0.0; 2],
            mean_similarity: 1.0,
        })
        .collect();
    (fwd, rev)
}

#[test]
fn eate_is_linear_and_antisymmetric() {
    use newsedit::causal::estimate_eate;
    let (fwd, rev) = paired(5);
    let y: HashMap<String, f64> = (0..5)
        .flat_map(|i| [(format!("t{i}"), 10.0 + i as f64 * 3.0), (format!("c{i}"), i as f64 * 1.5)])
        .collect();
    let e = estimate_eate(&fwd, &y).unwrap();
    let scaled: HashMap<String, f64> = y.iter().map(|(k, v)| (k.clone(), v * 2.5)).collect();
    let shifted: HashMap<String, f64> = y.iter().map(|(k, v)| (k.clone(), v + 100.0)).collect();
    assert!((estimate_eate(&fwd, &scaled).unwrap() - 2.5 * e).abs() < 1e-12);
    assert!((estimate_eate(&fwd, &shifted).unwrap() - e).abs() < 1e-12);
    assert!((estimate_eate(&rev, &y).unwrap() + e).abs() < 1e-12);
}

#[test]
fn knn_draws_only_from_controls() {
    let body = [1.0, 0.5];
    let ids: Vec<String> = (0..20).map(|i| format!("c{i:02}")).collect();
    let controls: Vec<Scored> = ids
        .iter()
        .enumerate()
        .map(|(i, id)| Scored {
            id,
            propensity: i as f64 / 20.0,
            body: &body,
        })
        .collect();
    let treatments = [
        Scored {
            id: "t1",
            propensity: 0.33,
            body: &body,
        },
        Scored {
            id: "t2",
            propensity: 0.34,
            body: &body,
        },
    ];
    let m = knn_match(&treatments, &controls, 5).unwrap();
    for r in &m {
        assert_eq!(r.matched_control_ids.len(), 5);
        assert!(r.matched_control_ids.iter().all(|c| ids.contains(c)));
        assert!(r.gaps.windows(2).all(|w| w[0] <= w[1]));
    }
    // controls are shared across treatments
    assert_eq!(m[0].matched_control_ids, m[1].matched_control_ids);
}

#[test]
fn scenario_selection_and_skips() {
    let spec = SynthSpec::confounded(400, 20.0, 4);
    let (corpus, _) = generate(&spec).unwrap();
    let table = embedding_table(&spec, 24, 4);
    let config = CausalConfig::default();
    let s = Scenario::edited_vs_mirrored("s", "synth");
    let units = select_units(&corpus, &[], &s, &table, &config).unwrap();
    assert_eq!(units.len(), 400);

    let mut missing = s.clone();
    missing.outlet = "nobody".into();
    assert!(matches!(
        select_units(&corpus, &[], &missing, &table, &config),
        Err(CausalError::UnknownOutlet(_))
    ));

    let mut tight = config;
    tight.min_group = 1000;
    match select_units(&corpus, &[], &s, &table, &tight) {
        Err(CausalError::InsufficientUnits { selector, .. }) => assert_eq!(selector, "treatment"),
        other => panic!("{other:?}"),
    }

    let clusters = Scenario {
        treatment: Selector::Cluster { cluster: 1 },
        control: Selector::Cluster { cluster: 0 },
        ..s.clone()
    };
    assert!(matches!(
        select_units(&corpus, &[], &clusters, &table, &config),
        Err(CausalError::MissingField { .. })
    ));

    let sectioned = Scenario {
        section: Some("sports".into()),
        ..s
    };
    let units = select_units(&corpus, &[], &sectioned, &table, &CausalConfig { min_group: 1, ..config }).unwrap();
    let by_id = corpus.index_by_id();
    assert!(units
        .iter()
        .all(|u| corpus.records[by_id[u.id.as_str()]].section.as_deref() == Some("sports")));
}

#[test]
fn zero_hit_and_empty_bodies_are_excluded() {
    let spec = SynthSpec::confounded(200, 0.0, 5);
    let (mut corpus, _) = generate(&spec).unwrap();
    corpus.records[0].body_text = String::new();
    corpus.records[1].body_text = "qqq zzz".into();
    let table = embedding_table(&spec, 24, 5);
    let units = select_units(
        &corpus,
        &[],
        &Scenario::edited_vs_mirrored("s", "synth"),
        &table,
        &CausalConfig::default(),
    )
    .unwrap();
    assert_eq!(units.len(), 198);
    assert!(units.iter().all(|u| u.id != corpus.records[0].id && u.id != corpus.records[1].id));
}

#[test]
fn run_units_is_deterministic_and_consistent() {
    let spec = SynthSpec::confounded(600, 30.0, 6);
    let (corpus, _) = generate(&spec).unwrap();
    let table = embedding_table(&spec, 24, 6);
    let config = CausalConfig {
        seed: 6,
        ..CausalConfig::default()
    };
    let s = Scenario::edited_vs_mirrored("s", "synth");
    let units = select_units(&corpus, &[], &s, &table, &config).unwrap();
    let a = run_units(&units, &s, &config).unwrap();
    let b = run_units(&units, &s, &config).unwrap();
    assert_eq!(a, b);
    for r in &a.reports {
        assert_eq!(r.fold_eates.len(), 10);
        assert_eq!(r.balance.len(), 10);
        let m = r.fold_eates.iter().sum::<f64>() / 10.0;
        assert!((m - r.mean_eate).abs() < 1e-12);
        assert!(r.ci_low <= r.mean_eate && r.mean_eate <= r.ci_high);
        assert_eq!(r.discarded, r.ci_contains_zero() || r.balance.iter().any(|b| !b.passed));
    }
    let c = run_units(
        &units,
        &s,
        &CausalConfig {
            seed: 7,
            ..config
        },
    )
    .unwrap();
    assert_ne!(a.reports[2].fold_eates, c.reports[2].fold_eates);
}

#[test]
fn clickbait_scores_on_separable_corpus() {
    let data = clickbait_dataset(1000, 11);
    let (model, report) = clickbait::train(&data, None, ClickbaitConfig::default(), 11).unwrap();
    assert!(report.test_f1 >= 0.99, "{report:?}");
    let fresh = clickbait_dataset(200, 12);
    for h in &fresh {
        let s = model.score(&h.text).unwrap();
        if h.label {
            assert!(s > 0.9, "{} scored {s}", h.text);
        } else {
            assert!(s < 0.1, "{} scored {s}", h.text);
        }
    }
    let (again, report2) = clickbait::train(&data, None, ClickbaitConfig::default(), 11).unwrap();
    assert_eq!(report, report2);
    assert_eq!(again, model);
}

#[test]
fn shift_table_over_a_scored_corpus() {
    let data = clickbait_dataset(400, 13);
    let (model, _) = clickbait::train(&data, None, ClickbaitConfig::default(), 13).unwrap();
    let spec = SynthSpec::confounded(120, 0.0, 13);
    let (corpus, _) = generate(&spec).unwrap();
    let table = embedding_table(&spec, 24, 13);
    let mut profiles = profile(&corpus, &table);
    assert!(matches!(
        conditional_shift_table(&corpus, &profiles, "synth", 0.5),
        Err(clickbait::ClickbaitError::MissingScores(_))
    ));
    score_profiles(&model, &corpus, &mut profiles).unwrap();
    let t = conditional_shift_table(&corpus, &profiles, "synth", 0.5).unwrap();
    assert_eq!(t.headline_c + t.headline_nc, 120);
    if let (Some(a), Some(b)) = (t.p_nc_given_c, t.p_c_given_c) {
        assert!((a + b - 1.0).abs() < 1e-12);
    }
    assert!(t.welch.is_some());
    assert!(conditional_shift_table(&corpus, &profiles, "other", 0.5).is_err());

    // scores survive the profile CSV
    let mut buf = Vec::new();
    write_profiles_csv(&profiles, &mut buf).unwrap();
    let back = read_profiles_csv(buf.as_slice()).unwrap();
    assert_eq!(back.len(), profiles.len());
    assert_eq!(back[0].headline_clickbait, profiles[0].headline_clickbait);

    // clickbait transition selectors resolve against scored profiles
    let sel = Selector::Clickbait {
        headline: Class::NonClickbait,
        post: Class::Clickbait,
    };
    let r = &corpus.records[0];
    assert!(sel.matches(r, Some(&profiles[0]), 0.5).is_ok());
}

#[test]
fn profile_points_cluster_into_styles() {
    let spec = SynthSpec::confounded(300, 0.0, 14);
    let (corpus, _) = generate(&spec).unwrap();
    let table = embedding_table(&spec, 24, 14);
    let profiles = profile(&corpus, &table);
    let points: Vec<[f64; 2]> = profiles.iter().map(|p| p.point()).collect();
    let elbow = elbow_select(&points, 6, 1, DEFAULT_ELBOW_THRESHOLD).unwrap();
    assert!(elbow.k >= 2, "{elbow:?}");
    assert!(elbow.inertias.windows(2).all(|w| w[1] <= w[0] + 1e-9));
}

#[test]
fn embedding_table_round_trips_through_vec_file() {
    let spec = SynthSpec::confounded(60, 0.0, 15);
    let table = embedding_table(&spec, 8, 15);
    let f = tempfile::NamedTempFile::new().unwrap();
    table.write_vec(std::fs::File::create(f.path()).unwrap()).unwrap();
    let back: EmbeddingTable = newsedit::embedding::load_table(f.path()).unwrap();
    assert_eq!(back.len(), table.len());
    let v1 = table.get("senate").unwrap();
    let v2 = back.get("senate").unwrap();
    assert!(v1.iter().zip(v2).all(|(a, b)| (a - b).abs() < 1e-12));
}
