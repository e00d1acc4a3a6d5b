//! Tools for studying how news headlines are rewritten into social posts and
//! what those rewrites do to audience engagement.
//!
//! The crate is organised as a pipeline:
//!
//! * [`corpus`] loads paired headline/post records and detects mirroring.
//! * [`embedding`] and [`textsim`] profile each pair by edit distance and
//!   embedding similarity, with the rank and t tests used to compare outlets.
//! * [`clusterer`] groups pairs into editing styles with K-means++.
//! * [`neural`] is the small float64 network toolkit behind [`clickbait`]
//!   (bidirectional GRU with attention) and the propensity model in [`causal`].
//! * [`causal`] matches treated posts to controls by propensity score, gates
//!   the match on semantic balance and estimates the average effect over ten
//!   cross-validation folds.
//! * [`synth`] generates corpora with known effects for validating all of the
//!   above.

pub mod causal;
pub mod clickbait;
pub mod clusterer;
pub mod corpus;
pub mod embedding;
pub mod io;
pub mod neural;
pub mod stats;
pub mod synth;
pub mod textsim;

pub use causal::{EateReport, Scenario, ScenarioReport};
pub use clickbait::ClickbaitModel;
pub use clusterer::ClusterModel;
pub use corpus::{Corpus, PairedRecord, TimeBlock};
pub use embedding::{DocVector, EmbeddingTable};
pub use textsim::EditProfile;

/// Engagement counts carried by every record; the outcome variables of the
/// causal analysis.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Replies,
    Retweets,
    Likes,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Replies, Metric::Retweets, Metric::Likes];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Replies => "replies",
            Metric::Retweets => "retweets",
            Metric::Likes => "likes",
        }
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}
