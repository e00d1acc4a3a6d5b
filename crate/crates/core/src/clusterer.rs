//! K-means++ over (embedding similarity, edit distance) points, elbow
//! selection of k and per-outlet cluster fractions.

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;

pub type Point = [f64; 2];

pub const MAX_ITERATIONS: usize = 300;
pub const DEFAULT_RESTARTS: usize = 10;
pub const DEFAULT_ELBOW_THRESHOLD: f64 = 0.15;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ClusterError {
    #[error("k must be positive")]
    ZeroK,
    #[error("{points} points cannot form {k} clusters")]
    TooFewPoints { points: usize, k: usize },
    #[error("k_max must be at least 2")]
    KMaxTooSmall,
    #[error("record {0:?} has no cluster assignment")]
    MissingAssignment(String),
    #[error("no records match outlet {0:?}")]
    EmptyOutlet(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Init {
    PlusPlus,
    /// k distinct points drawn uniformly; the baseline K-means++ improves on.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub k: usize,
    /// Ordered by ascending edit-distance coordinate.
    pub centroids: Vec<Point>,
    pub inertia: f64,
    pub seed: u64,
}

impl ClusterModel {
    pub fn nearest(&self, p: &Point) -> usize {
        nearest(&self.centroids, p).0
    }

    pub fn assign(&self, points: &[Point]) -> Vec<usize> {
        points.iter().map(|p| self.nearest(p)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    pub record_id: String,
    pub cluster: usize,
}

fn dist2(a: &Point, b: &Point) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

fn nearest(centroids: &[Point], p: &Point) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centroids.iter().enumerate() {
        let d = dist2(c, p);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

fn check(points: &[Point], k: usize) -> Result<(), ClusterError> {
    if k == 0 {
        return Err(ClusterError::ZeroK);
    }
    if points.len() < k {
        return Err(ClusterError::TooFewPoints {
            points: points.len(),
            k,
        });
    }
    Ok(())
}

fn seed_plus_plus(points: &[Point], k: usize, rng: &mut ChaCha8Rng) -> Vec<Point> {
    let mut centroids = vec![points[rng.random_range(0..points.len())]];
    let mut d2: Vec<f64> = points.iter().map(|p| dist2(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let idx = if total <= 0.0 {
            // every point already coincides with a centroid
            rng.random_range(0..points.len())
        } else {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = points.len() - 1;
            for (i, w) in d2.iter().enumerate() {
                if target < *w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        };
        let c = points[idx];
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(dist2(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

fn seed_random(points: &[Point], k: usize, rng: &mut ChaCha8Rng) -> Vec<Point> {
    rand::seq::index::sample(rng, points.len(), k)
        .into_iter()
        .map(|i| points[i])
        .collect()
}

/// Lloyd iterations from the given centroids. Returns final centroids,
/// assignments and the inertia trace (one entry per assignment pass).
fn lloyd(points: &[Point], mut centroids: Vec<Point>) -> (Vec<Point>, Vec<usize>, Vec<f64>) {
    let k = centroids.len();
    let mut assign: Vec<usize> = vec![usize::MAX; points.len()];
    let mut trace = Vec::new();
    for _ in 0..MAX_ITERATIONS {
        let mut changed = false;
        let mut inertia = 0.0;
        for (a, p) in assign.iter_mut().zip(points) {
            let (c, d) = nearest(&centroids, p);
            inertia += d;
            if *a != c {
                *a = c;
                changed = true;
            }
        }
        trace.push(inertia);
        if !changed {
            break;
        }
        let mut sums = vec![[0.0, 0.0]; k];
        let mut counts = vec![0usize; k];
        for (a, p) in assign.iter().zip(points) {
            sums[*a][0] += p[0];
            sums[*a][1] += p[1];
            counts[*a] += 1;
        }
        for ((c, s), n) in centroids.iter_mut().zip(&sums).zip(&counts) {
            // empty clusters keep their previous centroid
            if *n > 0 {
                *c = [s[0] / *n as f64, s[1] / *n as f64];
            }
        }
    }
    (centroids, assign, trace)
}

/// Relabels clusters so centroid edit distance ascends (ties by similarity).
fn canonical_order(centroids: Vec<Point>) -> Vec<Point> {
    let mut c = centroids;
    c.sort_by(|a, b| a[1].total_cmp(&b[1]).then(a[0].total_cmp(&b[0])));
    c
}

fn inertia_of(points: &[Point], centroids: &[Point]) -> f64 {
    points.iter().map(|p| nearest(centroids, p).1).sum()
}

pub fn kmeans_fit(points: &[Point], k: usize, seed: u64, init: Init) -> Result<ClusterModel, ClusterError> {
    check(points, k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = match init {
        Init::PlusPlus => seed_plus_plus(points, k, &mut rng),
        Init::Random => seed_random(points, k, &mut rng),
    };
    let (centroids, _, _) = lloyd(points, start);
    let centroids = canonical_order(centroids);
    let inertia = inertia_of(points, &centroids);
    Ok(ClusterModel {
        k,
        centroids,
        inertia,
        seed,
    })
}

/// K-means++ seeding followed by Lloyd iterations to a fixpoint (at most
/// 300 passes). Deterministic for a given seed.
pub fn kmeanspp_fit(points: &[Point], k: usize, seed: u64) -> Result<ClusterModel, ClusterError> {
    kmeans_fit(points, k, seed, Init::PlusPlus)
}

/// Lloyd inertia after every assignment pass, for monotonicity checks.
pub fn inertia_trace(points: &[Point], k: usize, seed: u64) -> Result<Vec<f64>, ClusterError> {
    check(points, k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = seed_plus_plus(points, k, &mut rng);
    Ok(lloyd(points, start).2)
}

/// Best of `restarts` fits with seeds `seed, seed + 1, ...`; the lowest
/// inertia wins, earlier seeds winning ties.
pub fn fit_best(
    points: &[Point],
    k: usize,
    seed: u64,
    restarts: usize,
    init: Init,
) -> Result<ClusterModel, ClusterError> {
    check(points, k)?;
    let fits: Vec<ClusterModel> = (0..restarts.max(1) as u64)
        .into_par_iter()
        .map(|i| kmeans_fit(points, k, seed.wrapping_add(i), init))
        .collect::<Result<_, _>>()?;
    let mut best = fits[0].clone();
    for f in fits.into_iter().skip(1) {
        if f.inertia < best.inertia {
            best = f;
        }
    }
    Ok(best)
}

/// Smallest k whose marginal inertia reduction ratio
/// `(I(k) - I(k+1)) / I(k)` drops below `threshold`; `inertias[i]` holds
/// I(i + 1). Falls back to the largest k tried.
pub fn select_k_from_inertias(inertias: &[f64], threshold: f64) -> usize {
    for k in 1..inertias.len() {
        let (cur, next) = (inertias[k - 1], inertias[k]);
        let ratio = if cur <= 0.0 { 0.0 } else { (cur - next) / cur };
        if ratio < threshold {
            return k;
        }
    }
    inertias.len()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ElbowResult {
    pub k: usize,
    /// Inertia for k = 1..=k_max.
    pub inertias: Vec<f64>,
    pub threshold: f64,
}

pub fn elbow_select(
    points: &[Point],
    k_max: usize,
    seed: u64,
    threshold: f64,
) -> Result<ElbowResult, ClusterError> {
    if k_max < 2 {
        return Err(ClusterError::KMaxTooSmall);
    }
    check(points, k_max)?;
    let inertias = (1..=k_max)
        .map(|k| fit_best(points, k, seed, DEFAULT_RESTARTS, Init::PlusPlus).map(|m| m.inertia))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ElbowResult {
        k: select_k_from_inertias(&inertias, threshold),
        inertias,
        threshold,
    })
}

/// Per-outlet cluster fractions; each row has `k` entries summing to 1.
pub type FractionTable = BTreeMap<String, Vec<f64>>;

/// Fraction of each outlet's records in each cluster. With `outlet` set,
/// only that outlet's row is produced.
pub fn cluster_fractions(
    assignments: &[ClusterAssignment],
    corpus: &Corpus,
    k: usize,
    outlet: Option<&str>,
) -> Result<FractionTable, ClusterError> {
    let by_id: HashMap<&str, usize> = assignments
        .iter()
        .map(|a| (a.record_id.as_str(), a.cluster))
        .collect();
    let mut counts: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for r in &corpus.records {
        if outlet.is_some_and(|o| o != r.outlet) {
            continue;
        }
        let c = *by_id
            .get(r.id.as_str())
            .ok_or_else(|| ClusterError::MissingAssignment(r.id.clone()))?;
        let row = counts.entry(r.outlet.clone()).or_insert_with(|| vec![0; k]);
        if c >= row.len() {
            row.resize(c + 1, 0);
        }
        row[c] += 1;
    }
    if counts.is_empty() {
        return Err(ClusterError::EmptyOutlet(outlet.unwrap_or_default().to_string()));
    }
    Ok(counts
        .into_iter()
        .map(|(o, row)| {
            let n: usize = row.iter().sum();
            (o, row.into_iter().map(|c| c as f64 / n as f64).collect())
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::PairedRecord;
    use rand_distr::{Distribution, Normal};

    pub(crate) fn blobs(centers: &[Point], per: usize, sd: f64, seed: u64) -> Vec<Point> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, sd).unwrap();
        centers
            .iter()
            .flat_map(|c| {
                (0..per)
                    .map(|_| [c[0] + noise.sample(&mut rng), c[1] + noise.sample(&mut rng)])
                    .collect::<Vec<_>>()
            })
            .collect()
    }

    #[test]
    fn single_point_single_cluster() {
        let m = kmeanspp_fit(&[[0.0, 0.0]], 1, 7).unwrap();
        assert_eq!(m.centroids, vec![[0.0, 0.0]]);
        assert_eq!(m.inertia, 0.0);
    }

    #[test]
    fn errors() {
        assert_eq!(kmeanspp_fit(&[[0.0, 0.0]], 0, 1), Err(ClusterError::ZeroK));
        assert_eq!(
            kmeanspp_fit(&[[0.0, 0.0]], 2, 1),
            Err(ClusterError::TooFewPoints { points: 1, k: 2 })
        );
        assert_eq!(
            elbow_select(&[[0.0, 0.0]; 5], 1, 1, 0.15),
            Err(ClusterError::KMaxTooSmall)
        );
    }

    #[test]
    fn separates_two_tight_blobs() {
        let pts = blobs(&[[0.0, 0.0], [1.0, 1.0]], 50, 0.01, 3);
        let m = kmeanspp_fit(&pts, 2, 11).unwrap();
        assert!(dist2(&m.centroids[0], &[0.0, 0.0]).sqrt() < 0.05);
        assert!(dist2(&m.centroids[1], &[1.0, 1.0]).sqrt() < 0.05);
        let a = m.assign(&pts);
        assert!(a[..50].iter().all(|&c| c == 0));
        assert!(a[50..].iter().all(|&c| c == 1));
    }

    #[test]
    fn more_clusters_never_increase_best_inertia() {
        for seed in 0..10 {
            let pts = blobs(&[[0.3, 0.7], [0.8, 0.1]], 20, 0.2, seed);
            let one = fit_best(&pts, 1, seed, 10, Init::PlusPlus).unwrap();
            let two = fit_best(&pts, 2, seed, 10, Init::PlusPlus).unwrap();
            assert!(two.inertia <= one.inertia);
        }
    }

    #[test]
    fn lloyd_inertia_is_non_increasing() {
        for seed in 0..20 {
            let pts = blobs(&[[0.2, 0.2], [0.5, 0.9], [0.9, 0.4]], 30, 0.15, seed);
            let trace = inertia_trace(&pts, 4, seed).unwrap();
            for w in trace.windows(2) {
                assert!(w[1] <= w[0] + 1e-12, "{trace:?}");
            }
        }
    }

    #[test]
    fn fitting_is_deterministic() {
        let pts = blobs(&[[0.2, 0.2], [0.5, 0.9]], 40, 0.2, 5);
        let a = fit_best(&pts, 3, 42, 10, Init::PlusPlus).unwrap();
        let b = fit_best(&pts, 3, 42, 10, Init::PlusPlus).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.assign(&pts), b.assign(&pts));
    }

    #[test]
    fn centroids_are_ordered_by_edit_distance() {
        let pts = blobs(&[[0.9, 0.8], [0.9, 0.05], [0.3, 0.4]], 30, 0.02, 9);
        let m = fit_best(&pts, 3, 0, 10, Init::PlusPlus).unwrap();
        assert!(m.centroids.windows(2).all(|w| w[0][1] <= w[1][1]));
        assert!(m.centroids[0][1] < 0.1);
    }

    #[test]
    fn elbow_rule_application() {
        // ratios 0.5, 0.14, 0.05
        let inertias = [100.0, 50.0, 43.0, 40.85];
        assert_eq!(select_k_from_inertias(&inertias, 0.15), 2);
        assert_eq!(select_k_from_inertias(&[10.0, 1.0, 0.1], 0.15), 3);
        assert_eq!(select_k_from_inertias(&[0.0, 0.0], 0.15), 1);
    }

    #[test]
    fn elbow_picks_three_for_three_blobs() {
        let pts = blobs(&[[0.9, 0.1], [0.8, 0.7], [0.2, 0.9]], 60, 0.03, 21);
        assert_eq!(elbow_select(&pts, 6, 1, 0.15).unwrap().k, 3);
    }

    #[test]
    fn elbow_picks_one_for_a_point_mass_blob() {
        // A continuous 2-D blob loses about 32% of its inertia when split in
        // two, so only a blob with no spread falls under the 15% rule.
        let pts = vec![[0.4, 0.6]; 40];
        assert_eq!(elbow_select(&pts, 4, 1, 0.15).unwrap().k, 1);
    }

    fn rec(id: &str, outlet: &str) -> PairedRecord {
        PairedRecord {
            id: id.into(),
            outlet: outlet.into(),
            headline: "h".into(),
            body_text: "b".into(),
            post_text: "p".into(),
            created_at: "2020-01-01T00:00:00Z".parse().unwrap(),
            replies: 0,
            retweets: 0,
            likes: 0,
            section: None,
        }
    }

    #[test]
    fn fractions_by_outlet() {
        let corpus = Corpus::from_records(
            vec![rec("1", "x"), rec("2", "x"), rec("3", "x"), rec("4", "x"), rec("5", "y")],
            "mem",
        )
        .unwrap();
        let assign: Vec<ClusterAssignment> = [("1", 0), ("2", 0), ("3", 1), ("4", 2), ("5", 0)]
            .iter()
            .map(|(id, c)| ClusterAssignment {
                record_id: id.to_string(),
                cluster: *c,
            })
            .collect();
        let t = cluster_fractions(&assign, &corpus, 3, None).unwrap();
        assert_eq!(t["x"], vec![0.5, 0.25, 0.25]);
        assert_eq!(t["y"], vec![1.0, 0.0, 0.0]);
        for row in t.values() {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        assert_eq!(
            cluster_fractions(&assign, &corpus, 3, Some("q")),
            Err(ClusterError::EmptyOutlet("q".into()))
        );
        assert_eq!(
            cluster_fractions(&assign[..4], &corpus, 3, None),
            Err(ClusterError::MissingAssignment("5".into()))
        );
        let only_y = cluster_fractions(&assign, &corpus, 3, Some("y")).unwrap();
        assert_eq!(only_y.len(), 1);
    }
}
