//! Stage one: weighted TF-IDF matching of a vulnerability query against every
//! library document, keeping the best `candidate_num` libraries.

mod index;

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use index::{InvertedIndex, Posting};

use crate::error::{Error, Result};
use crate::textproc::{EntityWeighting, WeightedQuery};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScreenerConfig {
    pub entity_weight: EntityWeighting,
    pub candidate_num: usize,
    /// `ln(N / (DF + 1))` when set, `ln(N / DF)` otherwise.
    pub idf_smoothing: bool,
    pub exclude_description_less: bool,
}

impl Default for ScreenerConfig {
    fn default() -> Self {
        Self {
            entity_weight: EntityWeighting::Factor(4.0),
            candidate_num: 512,
            idf_smoothing: true,
            exclude_description_less: false,
        }
    }
}

impl ScreenerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.candidate_num == 0 {
            return Err(Error::Config("candidate_num must be at least 1".into()));
        }
        if let EntityWeighting::Factor(f) = self.entity_weight {
            EntityWeighting::factor(f)?;
        }
        Ok(())
    }
}

/// Inverse document frequency. `None` for an unsmoothed term that occurs
/// nowhere; such terms are skipped.
pub fn idf(num_docs: usize, doc_frequency: usize, smoothing: bool) -> Option<f64> {
    let n = num_docs as f64;
    if smoothing {
        Some((n / (doc_frequency as f64 + 1.0)).ln())
    } else if doc_frequency == 0 {
        None
    } else {
        Some((n / doc_frequency as f64).ln())
    }
}

/// Length-normalised term frequency times IDF.
pub fn tf_idf(index: &InvertedIndex, term: &str, doc: u32, smoothing: bool) -> f64 {
    let count = index.term_count(term, doc);
    if count == 0 {
        return 0.0;
    }
    let tf = count as f64 / index.doc_length(doc) as f64;
    idf(index.num_docs(), index.doc_frequency(term), smoothing).map_or(0.0, |idf| tf * idf)
}

/// Scores for every document, by document id.
#[derive(Debug, Clone, PartialEq)]
pub struct DocScores {
    pub scores: Vec<f64>,
    /// Whether the document contains at least one query term.
    pub matched: Vec<bool>,
    pub empty_query: bool,
}

/// `score[j] = sum_i (w_i / sum w) * TF[i, j] * IDF[i]`, accumulated by
/// walking each query term's postings.
pub fn score_all(query: &WeightedQuery, index: &InvertedIndex, smoothing: bool) -> DocScores {
    let n = index.num_docs();
    let mut scores = vec![0.0; n];
    let mut matched = vec![false; n];
    let total = query.total_weight();
    if query.is_empty() || total <= 0.0 {
        return DocScores {
            scores,
            matched,
            empty_query: true,
        };
    }
    for term in &query.terms {
        let postings = index.postings(&term.term);
        let Some(idf) = idf(n, postings.len(), smoothing) else {
            continue;
        };
        let share = term.weight / total;
        for p in postings {
            let tf = p.count as f64 / index.doc_length(p.doc) as f64;
            scores[p.doc as usize] += share * tf * idf;
            matched[p.doc as usize] = true;
        }
    }
    DocScores {
        scores,
        matched,
        empty_query: false,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub library: String,
    pub doc: u32,
    pub score: f64,
    /// Filled in without matching any query term.
    pub padded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub entries: Vec<Candidate>,
    pub query: WeightedQuery,
}

impl CandidateSet {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// The query had no informative terms.
    pub fn empty_query(&self) -> bool {
        self.query.is_empty()
    }

    pub fn libraries(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|c| c.library.as_str())
    }

    /// Debug dump: one `{"library", "score"}` object per line, ranked.
    pub fn write_score_dump(&self, path: impl AsRef<Path>) -> Result<()> {
        #[derive(Serialize)]
        struct Row<'a> {
            library: &'a str,
            score: f64,
        }
        let path = path.as_ref();
        let mut out = String::new();
        for c in &self.entries {
            out.push_str(
                &serde_json::to_string(&Row {
                    library: &c.library,
                    score: c.score,
                })
                .map_err(|e| Error::Format(e.to_string()))?,
            );
            out.push('\n');
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

fn rank_order(a: &(f64, u32), b: &(f64, u32)) -> std::cmp::Ordering {
    b.0.total_cmp(&a.0).then(a.1.cmp(&b.1))
}

/// Top `candidate_num` documents by score, ties by ascending coordinate.
///
/// When fewer than `candidate_num` documents match, the remainder is padded
/// with unmatched (zero-score) documents in coordinate order.
pub fn select_candidates(
    scores: &DocScores,
    index: &InvertedIndex,
    candidate_num: usize,
) -> Vec<Candidate> {
    if scores.empty_query {
        return Vec::new();
    }
    let mut ranked: Vec<(f64, u32)> = scores
        .scores
        .iter()
        .enumerate()
        .map(|(d, &s)| (s, d as u32))
        .collect();
    let k = candidate_num.min(ranked.len());
    if k == 0 {
        return Vec::new();
    }
    if k < ranked.len() {
        ranked.select_nth_unstable_by(k - 1, rank_order);
        ranked.truncate(k);
    }
    ranked.sort_unstable_by(rank_order);
    ranked
        .into_iter()
        .map(|(score, doc)| Candidate {
            library: index.library(doc).to_string(),
            doc,
            score,
            padded: !scores.matched[doc as usize],
        })
        .collect()
}

/// Scores the whole catalog and keeps the configured number of candidates.
pub fn screen(
    query: WeightedQuery,
    index: &InvertedIndex,
    config: &ScreenerConfig,
) -> CandidateSet {
    let scores = score_all(&query, index, config.idf_smoothing);
    let entries = select_candidates(&scores, index, config.candidate_num);
    CandidateSet { entries, query }
}
