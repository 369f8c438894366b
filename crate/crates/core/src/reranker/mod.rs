//! Stage two: a trainable coherence scorer over (vulnerability, library)
//! pairs and top-k reranking of the screener's candidates.

mod encode;
mod external;
mod loss;
mod model;
mod train;

use serde::{Deserialize, Serialize};

pub use encode::{encode_pair, interaction, EncoderConfig, PairEncoding, INTERACTION_FEATURES};
pub use external::{serve, ExternalScorer, ScoreRequest, ScoreResponse};
pub use loss::{loss_and_gradient, loss_grad_wrt_pre, weighted_bce_loss, Gradients, DEFAULT_ALPHA};
pub use model::{
    clamp_score, coherence_from_pre, score_pair, Forward, ModelParameters, CLAMP_EPS,
    DEFAULT_HIDDEN,
};
pub use train::{train, AdamW, EpochLog, TrainOutcome, TrainingConfig};

use crate::corpus::LibraryDocument;
use crate::error::{Error, Result};
use crate::screener::CandidateSet;

/// The vulnerability side of a batch of pairs.
#[derive(Debug, Clone, Copy)]
pub struct PairQuery<'a> {
    pub id: &'a str,
    pub description: &'a str,
    /// Cleaned description tokens.
    pub tokens: &'a [String],
}

/// The library side of one pair.
#[derive(Debug, Clone, Copy)]
pub struct PairInput<'a> {
    pub doc: &'a LibraryDocument,
    pub screener_score: f64,
}

/// Anything that maps (vulnerability, library) pairs to coherence scores in `(0, 1)`.
pub trait CoherenceScorer {
    fn score_pairs(&self, query: &PairQuery<'_>, pairs: &[PairInput<'_>]) -> Result<Vec<f64>>;
}

impl CoherenceScorer for ModelParameters {
    fn score_pairs(&self, query: &PairQuery<'_>, pairs: &[PairInput<'_>]) -> Result<Vec<f64>> {
        pairs
            .iter()
            .map(|p| {
                let enc = encode_pair(&self.encoder, query.tokens, p.doc, p.screener_score);
                score_pair(&enc, self)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedLibrary {
    pub library: String,
    pub screener_score: f64,
    pub coherence: f64,
}

fn rank_order(a: &RankedLibrary, b: &RankedLibrary) -> std::cmp::Ordering {
    b.coherence
        .total_cmp(&a.coherence)
        .then_with(|| a.library.cmp(&b.library))
}

/// Scores every candidate, sorts by coherence (ties by coordinate) and keeps `k`.
///
/// `docs` is indexed by the candidates' document ids.
pub fn rank_candidates(
    query: &PairQuery<'_>,
    candidates: &CandidateSet,
    docs: &[LibraryDocument],
    scorer: &dyn CoherenceScorer,
    k: usize,
) -> Result<Vec<RankedLibrary>> {
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    if candidates.is_empty() {
        return Ok(Vec::new());
    }
    let mut pairs = Vec::with_capacity(candidates.len());
    for c in &candidates.entries {
        let doc = docs
            .get(c.doc as usize)
            .filter(|d| d.library == c.library)
            .ok_or_else(|| {
                Error::validation(format!("candidate {} has no matching document", c.library))
            })?;
        pairs.push(PairInput {
            doc,
            screener_score: c.score,
        });
    }
    let scores = scorer.score_pairs(query, &pairs)?;
    if scores.len() != pairs.len() {
        return Err(Error::External(format!(
            "scorer returned {} scores for {} pairs",
            scores.len(),
            pairs.len()
        )));
    }
    let mut ranked: Vec<RankedLibrary> = candidates
        .entries
        .iter()
        .zip(scores)
        .map(|(c, s)| {
            if s.is_finite() {
                Ok(RankedLibrary {
                    library: c.library.clone(),
                    screener_score: c.score,
                    coherence: s,
                })
            } else {
                Err(Error::Numerical(format!(
                    "non-finite coherence for {}",
                    c.library
                )))
            }
        })
        .collect::<Result<_>>()?;
    ranked.sort_by(rank_order);
    ranked.truncate(k);
    Ok(ranked)
}
