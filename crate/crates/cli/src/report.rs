//! JSON summaries written next to the ingest and profile outputs.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use newsedit::corpus::{mirroring_counts, Corpus};
use newsedit::stats::{summarize, Summary};
use newsedit::textsim::{mann_whitney_u, EditProfile, TestResult};

#[derive(Serialize)]
pub struct OutletCounts {
    pub records: usize,
    pub mirrored: usize,
    pub mirroring_fraction: f64,
}

#[derive(Serialize)]
pub struct IngestSummary {
    pub records: usize,
    pub rejects: usize,
    pub outlets: BTreeMap<String, OutletCounts>,
}

pub fn ingest_summary(corpus: &Corpus) -> IngestSummary {
    let outlets = corpus
        .outlets()
        .into_iter()
        .map(|o| {
            let (mirrored, records) = mirroring_counts(corpus, &o).expect("outlet taken from corpus");
            let counts = OutletCounts {
                records,
                mirrored,
                mirroring_fraction: mirrored as f64 / records as f64,
            };
            (o, counts)
        })
        .collect();
    IngestSummary {
        records: corpus.len(),
        rejects: corpus.rejects.len(),
        outlets,
    }
}

#[derive(Serialize)]
pub struct OutletProfile {
    pub records: usize,
    pub mirroring_fraction: f64,
    pub zero_hit: usize,
    pub edit_distance: Option<Summary>,
    /// Over records with in-vocabulary tokens on both sides.
    pub embedding_similarity: Option<Summary>,
}

/// Mann-Whitney tests between two outlets. A side is null when either
/// sample is empty.
#[derive(Serialize)]
pub struct PairwiseTest {
    pub a: String,
    pub b: String,
    pub edit_distance: Option<TestResult>,
    pub embedding_similarity: Option<TestResult>,
}

#[derive(Serialize)]
pub struct ProfileSummary {
    pub outlets: BTreeMap<String, OutletProfile>,
    pub pairwise: Vec<PairwiseTest>,
}

struct Samples {
    distance: Vec<f64>,
    similarity: Vec<f64>,
    mirrored: usize,
    zero_hit: usize,
}

fn summary(xs: &[f64]) -> Option<Summary> {
    (!xs.is_empty()).then(|| summarize(xs))
}

pub fn profile_summary(corpus: &Corpus, profiles: &[EditProfile]) -> ProfileSummary {
    let outlet_of: HashMap<&str, &str> = corpus
        .records
        .iter()
        .map(|r| (r.id.as_str(), r.outlet.as_str()))
        .collect();
    let mut samples: BTreeMap<String, Samples> = BTreeMap::new();
    for p in profiles {
        let Some(outlet) = outlet_of.get(p.record_id.as_str()) else {
            continue;
        };
        let s = samples.entry(outlet.to_string()).or_insert_with(|| Samples {
            distance: Vec::new(),
            similarity: Vec::new(),
            mirrored: 0,
            zero_hit: 0,
        });
        s.distance.push(p.edit_distance);
        if p.zero_hit {
            s.zero_hit += 1;
        } else {
            s.similarity.push(p.embedding_similarity);
        }
        s.mirrored += usize::from(p.mirrored);
    }

    let names: Vec<&String> = samples.keys().collect();
    let mut pairwise = Vec::new();
    for (i, a) in names.iter().enumerate() {
        for b in &names[i + 1..] {
            let (sa, sb) = (&samples[*a], &samples[*b]);
            pairwise.push(PairwiseTest {
                a: a.to_string(),
                b: b.to_string(),
                edit_distance: mann_whitney_u(&sa.distance, &sb.distance).ok(),
                embedding_similarity: mann_whitney_u(&sa.similarity, &sb.similarity).ok(),
            });
        }
    }

    let outlets = samples
        .iter()
        .map(|(o, s)| {
            let n = s.distance.len();
            let p = OutletProfile {
                records: n,
                mirroring_fraction: s.mirrored as f64 / n as f64,
                zero_hit: s.zero_hit,
                edit_distance: summary(&s.distance),
                embedding_similarity: summary(&s.similarity),
            };
            (o.clone(), p)
        })
        .collect();
    ProfileSummary { outlets, pairwise }
}
