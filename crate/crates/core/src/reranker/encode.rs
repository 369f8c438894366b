use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::corpus::LibraryDocument;
use crate::error::{Error, Result};

/// Interaction features appended after the two hashed segments.
pub const INTERACTION_FEATURES: usize = 6;

/// Offsets of the interaction features within the trailing block.
pub mod interaction {
    /// Distinct tokens shared by query and document.
    pub const SHARED_TOKENS: usize = 0;
    /// Shared name tokens over distinct name tokens of the document.
    pub const SHARED_ENTITIES: usize = 1;
    pub const SCREENER_SCORE: usize = 2;
    /// Shared tokens over distinct query tokens.
    pub const QUERY_COVERAGE: usize = 3;
    /// Shared tokens over distinct document tokens.
    pub const DOC_COVERAGE: usize = 4;
    /// 1 when the library has no description.
    pub const DESCRIPTION_LESS: usize = 5;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct EncoderConfig {
    pub feature_dim: usize,
    pub max_tokens_per_side: usize,
    pub hash_seed: u64,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            feature_dim: 2048,
            max_tokens_per_side: 512,
            hash_seed: 0x005E_ED0F_CAFE,
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.feature_dim < INTERACTION_FEATURES + 2 {
            return Err(Error::Config(format!(
                "feature_dim must be at least {}",
                INTERACTION_FEATURES + 2
            )));
        }
        if self.max_tokens_per_side == 0 {
            return Err(Error::Config("max_tokens_per_side must be positive".into()));
        }
        Ok(())
    }

    /// Width of each hashed token segment.
    pub fn segment_width(&self) -> usize {
        (self.feature_dim - INTERACTION_FEATURES) / 2
    }

    pub fn query_segment(&self) -> std::ops::Range<usize> {
        0..self.segment_width()
    }

    pub fn doc_segment(&self) -> std::ops::Range<usize> {
        let w = self.segment_width();
        w..2 * w
    }

    pub fn interaction_offset(&self) -> usize {
        self.feature_dim - INTERACTION_FEATURES
    }
}

/// Sparse fixed-dimension feature vector for one (vulnerability, library) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairEncoding {
    pub dim: usize,
    /// Strictly increasing feature indices.
    pub indices: Vec<u32>,
    pub values: Vec<f64>,
}

impl PairEncoding {
    pub fn get(&self, i: usize) -> f64 {
        self.indices
            .binary_search(&(i as u32))
            .map_or(0.0, |p| self.values[p])
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        for (&i, &x) in self.indices.iter().zip(&self.values) {
            v[i as usize] = x;
        }
        v
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices
            .iter()
            .map(|&i| i as usize)
            .zip(self.values.iter().copied())
    }

    pub fn interaction(&self, config: &EncoderConfig, feature: usize) -> f64 {
        self.get(config.interaction_offset() + feature)
    }
}

fn fnv1a(seed: u64, token: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in seed.to_le_bytes().iter().chain(token.as_bytes()) {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn hash_segment(
    tokens: &[String],
    offset: usize,
    width: usize,
    seed: u64,
    out: &mut BTreeMap<u32, f64>,
) {
    let mut counts: BTreeMap<u32, f64> = BTreeMap::new();
    for t in tokens {
        let slot = offset + (fnv1a(seed, t) % width as u64) as usize;
        *counts.entry(slot as u32).or_default() += 1.0;
    }
    let norm = counts.values().map(|c| c * c).sum::<f64>().sqrt();
    if norm > 0.0 {
        for (slot, c) in counts {
            out.insert(slot, c / norm);
        }
    }
}

/// Joint encoding of query tokens and a library document.
///
/// Layout: `[query hashes | document hashes | (unused) | interactions]`.
/// Each side is capped at `max_tokens_per_side` tokens before hashing.
pub fn encode_pair(
    config: &EncoderConfig,
    vuln_tokens: &[String],
    doc: &LibraryDocument,
    screener_score: f64,
) -> PairEncoding {
    let cap = config.max_tokens_per_side;
    let query = &vuln_tokens[..vuln_tokens.len().min(cap)];
    let doc_tokens = &doc.tokens[..doc.tokens.len().min(cap)];
    let name_tokens = &doc_tokens[..doc.name_len.min(doc_tokens.len())];

    let width = config.segment_width();
    let mut features = BTreeMap::new();
    hash_segment(query, 0, width, config.hash_seed, &mut features);
    hash_segment(doc_tokens, width, width, config.hash_seed, &mut features);

    let q: HashSet<&str> = query.iter().map(String::as_str).collect();
    let d: HashSet<&str> = doc_tokens.iter().map(String::as_str).collect();
    let names: HashSet<&str> = name_tokens.iter().map(String::as_str).collect();
    let shared = q.intersection(&d).count() as f64;
    let shared_names = names.iter().filter(|n| q.contains(*n)).count() as f64;
    let ratio = |num: f64, den: usize| if den == 0 { 0.0 } else { num / den as f64 };

    let base = config.interaction_offset();
    let score = if screener_score.is_finite() {
        screener_score
    } else {
        0.0
    };
    let inter = [
        (interaction::SHARED_TOKENS, shared),
        (
            interaction::SHARED_ENTITIES,
            ratio(shared_names, names.len()),
        ),
        (interaction::SCREENER_SCORE, score),
        (interaction::QUERY_COVERAGE, ratio(shared, q.len())),
        (interaction::DOC_COVERAGE, ratio(shared, d.len())),
        (
            interaction::DESCRIPTION_LESS,
            if doc.description_less { 1.0 } else { 0.0 },
        ),
    ];
    for (offset, value) in inter {
        if value != 0.0 {
            features.insert((base + offset) as u32, value);
        }
    }

    let (indices, values) = features.into_iter().unzip();
    PairEncoding {
        dim: config.feature_dim,
        indices,
        values,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_library_document, LibraryRecord, TextCleaner};

    fn toks(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn doc() -> LibraryDocument {
        build_library_document(
            &TextCleaner::default(),
            &LibraryRecord::new("org.example:mailer", "Sends mail over smtp"),
        )
    }

    #[test]
    fn deterministic() {
        let cfg = EncoderConfig::default();
        let q = toks(&["mail", "smtp", "password"]);
        assert_eq!(
            encode_pair(&cfg, &q, &doc(), 0.1),
            encode_pair(&cfg, &q, &doc(), 0.1)
        );
    }

    #[test]
    fn disjoint_tokens_share_nothing() {
        let cfg = EncoderConfig::default();
        let e = encode_pair(&cfg, &toks(&["zzz", "yyy"]), &doc(), 0.0);
        assert_eq!(e.interaction(&cfg, interaction::SHARED_TOKENS), 0.0);
        assert_eq!(e.interaction(&cfg, interaction::SHARED_ENTITIES), 0.0);
    }

    #[test]
    fn identical_tokens_share_all() {
        let cfg = EncoderConfig::default();
        let d = doc();
        let distinct: HashSet<&String> = d.tokens.iter().collect();
        let e = encode_pair(&cfg, &d.tokens, &d, 0.0);
        assert_eq!(
            e.interaction(&cfg, interaction::SHARED_TOKENS),
            distinct.len() as f64
        );
        assert_eq!(e.interaction(&cfg, interaction::SHARED_ENTITIES), 1.0);
        assert_eq!(e.interaction(&cfg, interaction::QUERY_COVERAGE), 1.0);
    }

    #[test]
    fn segments_are_disjoint_and_normalised() {
        let cfg = EncoderConfig::default();
        let e = encode_pair(&cfg, &toks(&["mail", "mail", "smtp"]), &doc(), 0.25);
        let (mut q2, mut d2) = (0.0, 0.0);
        for (i, x) in e.iter() {
            assert!(x.is_finite());
            if cfg.query_segment().contains(&i) {
                q2 += x * x;
            } else if cfg.doc_segment().contains(&i) {
                d2 += x * x;
            } else {
                assert!(i >= cfg.interaction_offset());
            }
        }
        assert!((q2 - 1.0).abs() < 1e-12);
        assert!((d2 - 1.0).abs() < 1e-12);
        assert_eq!(e.interaction(&cfg, interaction::SCREENER_SCORE), 0.25);
        assert!(e.indices.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn truncation_caps_each_side() {
        let cfg = EncoderConfig {
            max_tokens_per_side: 1,
            ..Default::default()
        };
        let e = encode_pair(&cfg, &toks(&["nothing", "mailer"]), &doc(), 0.0);
        // "mailer" is beyond the cap on the query side
        assert_eq!(e.interaction(&cfg, interaction::SHARED_TOKENS), 0.0);
    }
}
