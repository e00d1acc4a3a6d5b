//! Headline-to-post similarity profiles and the two-sample tests used to
//! compare their distributions across outlets.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::corpus::{is_mirrored, normalize, Corpus};
use crate::embedding::{cosine_slices, embed_text, EmbeddingTable};

#[derive(Debug, thiserror::Error)]
pub enum TestError {
    #[error("sample {0} is too small for this test")]
    SampleTooSmall(&'static str),
    #[error("both samples have zero variance")]
    DegenerateVariance,
}

/// Levenshtein distance over Unicode scalar values, divided by the longer
/// length. Two empty strings are at distance 0.
pub fn normalized_edit_distance(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let longest = a.len().max(b.len());
    if longest == 0 {
        return 0.0;
    }
    levenshtein(&a, &b) as f64 / longest as f64
}

/// Two-row dynamic program; `b` indexes the row.
pub fn levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Per-record similarity profile between headline and post.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EditProfile {
    pub record_id: String,
    pub edit_distance: f64,
    pub embedding_similarity: f64,
    pub mirrored: bool,
    pub cluster: Option<usize>,
    pub headline_clickbait: Option<f64>,
    pub post_clickbait: Option<f64>,
    /// Headline or post had no in-vocabulary tokens; similarity was set to 0.
    #[serde(default, skip)]
    pub zero_hit: bool,
}

impl EditProfile {
    /// (embedding similarity, edit distance), the clustering plane.
    pub fn point(&self) -> [f64; 2] {
        [self.embedding_similarity, self.edit_distance]
    }
}

pub fn profile(corpus: &Corpus, table: &EmbeddingTable) -> Vec<EditProfile> {
    corpus
        .records
        .par_iter()
        .map(|r| {
            let headline = normalize(&r.headline);
            let post = normalize(&r.post_text);
            let mirrored = is_mirrored(r);
            let edit_distance = if mirrored {
                0.0
            } else {
                normalized_edit_distance(headline.as_str(), post.as_str())
            };
            let hv = embed_text(table, headline.as_str());
            let pv = embed_text(table, post.as_str());
            let zero_hit = hv.is_zero_hit() || pv.is_zero_hit();
            let embedding_similarity = if zero_hit {
                0.0
            } else {
                cosine_slices(&hv.values, &pv.values)
            };
            EditProfile {
                record_id: r.id.clone(),
                edit_distance,
                embedding_similarity,
                mirrored,
                cluster: None,
                headline_clickbait: None,
                post_clickbait: None,
                zero_hit,
            }
        })
        .collect()
}

pub const PROFILE_COLUMNS: [&str; 7] = [
    "record_id",
    "edit_distance",
    "embedding_similarity",
    "mirrored",
    "cluster",
    "headline_clickbait",
    "post_clickbait",
];

pub fn write_profiles_csv<W: Write>(profiles: &[EditProfile], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PROFILE_COLUMNS)?;
    let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    for p in profiles {
        w.write_record([
            p.record_id.clone(),
            p.edit_distance.to_string(),
            p.embedding_similarity.to_string(),
            p.mirrored.to_string(),
            p.cluster.map(|c| c.to_string()).unwrap_or_default(),
            opt(p.headline_clickbait),
            opt(p.post_clickbait),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_profiles_csv<R: Read>(input: R) -> csv::Result<Vec<EditProfile>> {
    #[derive(Deserialize)]
    struct Row {
        record_id: String,
        edit_distance: f64,
        embedding_similarity: f64,
        mirrored: bool,
        cluster: Option<usize>,
        headline_clickbait: Option<f64>,
        post_clickbait: Option<f64>,
    }
    let mut r = csv::Reader::from_reader(input);
    r.deserialize::<Row>()
        .map(|row| {
            row.map(|row| EditProfile {
                record_id: row.record_id,
                edit_distance: row.edit_distance,
                embedding_similarity: row.embedding_similarity,
                mirrored: row.mirrored,
                cluster: row.cluster,
                headline_clickbait: row.headline_clickbait,
                post_clickbait: row.post_clickbait,
                zero_hit: false,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestMethod {
    MannWhitneyU,
    WelchT,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub method: TestMethod,
}

/// Combined sample size at or below which the Mann-Whitney p-value is
/// computed from the exact permutation distribution.
pub const MWU_EXACT_MAX_N: usize = 20;

/// Two-sided Mann-Whitney U test. The statistic is U for `x`: the number of
/// (x, y) pairs with x > y, ties counting one half.
pub fn mann_whitney_u(x: &[f64], y: &[f64]) -> Result<TestResult, TestError> {
    if x.is_empty() {
        return Err(TestError::SampleTooSmall("x"));
    }
    if y.is_empty() {
        return Err(TestError::SampleTooSmall("y"));
    }
    let n = x.len() + y.len();
    let p_value = if n <= MWU_EXACT_MAX_N {
        mann_whitney_exact_p(x, y)
    } else {
        mann_whitney_normal_p(x, y)
    };
    Ok(TestResult {
        statistic: mann_whitney_statistic(x, y),
        p_value,
        method: TestMethod::MannWhitneyU,
    })
}

/// Midranks (1-based) of the pooled sample, doubled so ties stay integral.
fn doubled_midranks(pooled: &[f64]) -> Vec<u64> {
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_by(|&a, &b| pooled[a].total_cmp(&pooled[b]));
    let mut ranks = vec![0u64; pooled.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && pooled[order[j + 1]] == pooled[order[i]] {
            j += 1;
        }
        // (i+1 + j+1) is twice the midrank
        let r2 = (i + j + 2) as u64;
        for &k in &order[i..=j] {
            ranks[k] = r2;
        }
        i = j + 1;
    }
    ranks
}

fn tie_group_sizes(pooled: &[f64]) -> Vec<usize> {
    let mut v = pooled.to_vec();
    v.sort_by(f64::total_cmp);
    let mut sizes = Vec::new();
    let mut i = 0;
    while i < v.len() {
        let mut j = i;
        while j + 1 < v.len() && v[j + 1] == v[i] {
            j += 1;
        }
        sizes.push(j - i + 1);
        i = j + 1;
    }
    sizes
}

pub fn mann_whitney_statistic(x: &[f64], y: &[f64]) -> f64 {
    let pooled: Vec<f64> = x.iter().chain(y).copied().collect();
    let ranks = doubled_midranks(&pooled);
    let r2: u64 = ranks[..x.len()].iter().sum();
    let nx = x.len() as u64;
    (r2 - nx * (nx + 1)) as f64 / 2.0
}

/// Exact two-sided p-value from the permutation distribution of the rank
/// sum, counting subsets with a dynamic program over doubled-rank sums.
pub fn mann_whitney_exact_p(x: &[f64], y: &[f64]) -> f64 {
    let pooled: Vec<f64> = x.iter().chain(y).copied().collect();
    let ranks = doubled_midranks(&pooled);
    let nx = x.len();
    let max_sum: u64 = ranks.iter().sum();
    let width = max_sum as usize + 1;
    // ways[j][s]: subsets of size j with doubled-rank sum s
    let mut ways = vec![vec![0f64; width]; nx + 1];
    ways[0][0] = 1.0;
    for &r in &ranks {
        let r = r as usize;
        for j in (1..=nx).rev() {
            let (lower, upper) = ways.split_at_mut(j);
            let from = &lower[j - 1];
            let to = &mut upper[0];
            for s in (r..width).rev() {
                if from[s - r] != 0.0 {
                    to[s] += from[s - r];
                }
            }
        }
    }
    let total: f64 = ways[nx].iter().sum();
    // centre of the doubled rank-sum distribution, doubled again to stay integral
    let centre4 = (nx as i64) * (pooled.len() as i64 + 1) * 2;
    let obs: i64 = ranks[..nx].iter().sum::<u64>() as i64;
    let obs_dev = (2 * obs - centre4).abs();
    let extreme: f64 = ways[nx]
        .iter()
        .enumerate()
        .filter(|(s, _)| (2 * *s as i64 - centre4).abs() >= obs_dev)
        .map(|(_, w)| *w)
        .sum();
    (extreme / total).min(1.0)
}

/// Normal approximation with tie-corrected variance and continuity
/// correction.
pub fn mann_whitney_normal_p(x: &[f64], y: &[f64]) -> f64 {
    let (nx, ny) = (x.len() as f64, y.len() as f64);
    let n = nx + ny;
    let u = mann_whitney_statistic(x, y);
    let pooled: Vec<f64> = x.iter().chain(y).copied().collect();
    let tie_term: f64 = tie_group_sizes(&pooled)
        .into_iter()
        .map(|t| {
            let t = t as f64;
            t * t * t - t
        })
        .sum();
    let var = nx * ny / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if var <= 0.0 {
        return 1.0;
    }
    let z = ((u - nx * ny / 2.0).abs() - 0.5).max(0.0) / var.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    (2.0 * normal.sf(z)).min(1.0)
}

/// Two-sided Welch t-test with Welch-Satterthwaite degrees of freedom.
pub fn welch_t(x: &[f64], y: &[f64]) -> Result<TestResult, TestError> {
    if x.len() < 2 {
        return Err(TestError::SampleTooSmall("x"));
    }
    if y.len() < 2 {
        return Err(TestError::SampleTooSmall("y"));
    }
    let (nx, ny) = (x.len() as f64, y.len() as f64);
    let (mx, my) = (crate::stats::mean(x), crate::stats::mean(y));
    let (vx, vy) = (
        crate::stats::sample_variance(x),
        crate::stats::sample_variance(y),
    );
    let (sx, sy) = (vx / nx, vy / ny);
    let se2 = sx + sy;
    if se2 == 0.0 {
        return Err(TestError::DegenerateVariance);
    }
    let t = (mx - my) / se2.sqrt();
    let df = se2 * se2 / (sx * sx / (nx - 1.0) + sy * sy / (ny - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    let p = (2.0 * dist.sf(t.abs())).min(1.0);
    Ok(TestResult {
        statistic: t,
        p_value: p,
        method: TestMethod::WelchT,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::PairedRecord;

    #[test]
    fn edit_distance_examples() {
        assert_eq!(normalized_edit_distance("abc", "abc"), 0.0);
        assert!((normalized_edit_distance("kitten", "sitting") - 3.0 / 7.0).abs() < 1e-12);
        assert_eq!(normalized_edit_distance("", "abc"), 1.0);
        assert_eq!(normalized_edit_distance("", ""), 0.0);
        // scalar values, not bytes
        assert_eq!(normalized_edit_distance("é", "e"), 1.0);
        assert_eq!(normalized_edit_distance("日本", "日本語"), 1.0 / 3.0);
    }

    fn rec(id: &str, headline: &str, post: &str) -> PairedRecord {
        PairedRecord {
            id: id.into(),
            outlet: "o".into(),
            headline: headline.into(),
            body_text: "b".into(),
            post_text: post.into(),
            created_at: "2020-01-01T00:00:00Z".parse().unwrap(),
            replies: 0,
            retweets: 0,
            likes: 0,
            section: None,
        }
    }

    fn table() -> EmbeddingTable {
        EmbeddingTable::from_pairs([
            ("senate".to_string(), vec![1.0, 0.0, 0.0]),
            ("votes".to_string(), vec![0.8, 0.2, 0.0]),
            ("cats".to_string(), vec![0.0, 0.0, 1.0]),
            ("dance".to_string(), vec![0.0, 0.3, 0.9]),
        ])
        .unwrap()
    }

    #[test]
    fn profile_examples() {
        let corpus = Corpus::from_records(
            vec![
                rec("m", "Senate votes", "Senate  votes"),
                rec("d", "Senate votes", "cats dance"),
                rec("z", "Senate votes", "qqq"),
            ],
            "mem",
        )
        .unwrap();
        let p = profile(&corpus, &table());
        assert_eq!(p.len(), 3);
        assert_eq!(
            p.iter().map(|e| e.record_id.as_str()).collect::<Vec<_>>(),
            vec!["m", "d", "z"]
        );
        assert_eq!(p[0].edit_distance, 0.0);
        assert!((p[0].embedding_similarity - 1.0).abs() < 1e-12);
        assert!(p[0].mirrored);
        // "Senate votes" vs "cats dance": 12 vs 10 chars, distance 9 from a
        // reference DP
        assert!((p[1].edit_distance - 9.0 / 12.0).abs() < 1e-12);
        assert!(p[1].embedding_similarity < 0.1);
        assert!(!p[1].mirrored);
        assert!(p[2].zero_hit);
        assert_eq!(p[2].embedding_similarity, 0.0);
    }

    #[test]
    fn profile_csv_round_trip() {
        let p = vec![EditProfile {
            record_id: "a,b".into(),
            edit_distance: 0.25,
            embedding_similarity: -0.5,
            mirrored: false,
            cluster: Some(2),
            headline_clickbait: None,
            post_clickbait: Some(0.75),
            zero_hit: false,
        }];
        let mut buf = Vec::new();
        write_profiles_csv(&p, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(
            "record_id,edit_distance,embedding_similarity,mirrored,cluster,headline_clickbait,post_clickbait\n"
        ));
        assert_eq!(read_profiles_csv(buf.as_slice()).unwrap(), p);
    }

    #[test]
    fn mann_whitney_examples() {
        let r = mann_whitney_u(&[1.0, 2.0], &[3.0, 4.0]).unwrap();
        assert_eq!(r.statistic, 0.0);
        // two extreme arrangements out of C(4,2) = 6
        assert!((r.p_value - 2.0 / 6.0).abs() < 1e-12);

        let x = [1.0, 2.0, 2.0, 5.0, 7.0];
        let r = mann_whitney_u(&x, &x).unwrap();
        assert!(r.p_value >= 0.99);
        let big: Vec<f64> = (0..30).map(|i| (i % 7) as f64).collect();
        assert!(mann_whitney_u(&big, &big).unwrap().p_value >= 0.99);

        assert!(mann_whitney_u(&[], &[1.0]).is_err());
    }

    #[test]
    fn mann_whitney_all_tied_large_sample() {
        let r = mann_whitney_u(&[1.0; 15], &[1.0; 15]).unwrap();
        assert_eq!(r.p_value, 1.0);
        assert_eq!(r.statistic, 112.5);
    }

    #[test]
    fn welch_examples() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let r = welch_t(&x, &x).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!((r.p_value - 1.0).abs() < 1e-12);

        let a = [0.0, 0.01, -0.01, 0.02];
        let b = [10.0, 10.01, 9.99, 10.02];
        let r = welch_t(&a, &b).unwrap();
        assert!(r.p_value < 0.001);
        let s = welch_t(&b, &a).unwrap();
        assert_eq!(s.statistic, -r.statistic);
        assert_eq!(s.p_value, r.p_value);

        assert!(matches!(
            welch_t(&[1.0, 1.0], &[2.0, 2.0]),
            Err(TestError::DegenerateVariance)
        ));
        assert!(welch_t(&[1.0], &[2.0, 3.0]).is_err());
    }

    #[test]
    fn welch_matches_reference_value() {
        // x: mean 3, var 2.5; y: mean 6, var 10; computed by hand:
        // se^2 = 0.5 + 2 = 2.5, t = -3/sqrt(2.5)
        // df = 6.25 / (0.25/4 + 4/4) = 5.882352941...
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let y = [2.0, 4.0, 6.0, 8.0, 10.0];
        let r = welch_t(&x, &y).unwrap();
        assert!((r.statistic + 3.0 / 2.5f64.sqrt()).abs() < 1e-12);
        let dist = StudentsT::new(0.0, 1.0, 6.25 / 1.0625).unwrap();
        assert!((r.p_value - 2.0 * dist.cdf(r.statistic)).abs() < 1e-12);
    }
}
