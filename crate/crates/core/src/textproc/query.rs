use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::entity::EntityRecognizer;
use super::pos::pos_filter;
use crate::corpus::{expand_contractions, split_alphanumeric, TextCleaner};
use crate::error::{Error, Result};

/// How query terms recognised as library entities are amplified.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EntityWeighting {
    /// Entity terms get `frequency * factor`, other terms `frequency`.
    Factor(f64),
    /// Only entity terms are kept. Stands in for an infinite factor.
    EntityOnly,
}

impl EntityWeighting {
    pub fn factor(f: f64) -> Result<Self> {
        if !f.is_finite() || f < 1.0 {
            return Err(Error::Config(format!(
                "entity weight must be a finite value >= 1, got {f}"
            )));
        }
        Ok(EntityWeighting::Factor(f))
    }
}

impl Default for EntityWeighting {
    fn default() -> Self {
        EntityWeighting::Factor(4.0)
    }
}

impl fmt::Display for EntityWeighting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EntityWeighting::Factor(x) => write!(f, "{x}"),
            EntityWeighting::EntityOnly => f.write_str("entity-only"),
        }
    }
}

impl std::str::FromStr for EntityWeighting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "entity-only" | "inf" | "infinity" => Ok(EntityWeighting::EntityOnly),
            other => other
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("invalid entity weight {s:?}")))
                .and_then(EntityWeighting::factor),
        }
    }
}

impl Serialize for EntityWeighting {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            EntityWeighting::Factor(x) => s.serialize_f64(*x),
            EntityWeighting::EntityOnly => s.serialize_str("entity-only"),
        }
    }
}

impl<'de> Deserialize<'de> for EntityWeighting {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        let parsed = match Repr::deserialize(d)? {
            Repr::Num(x) => EntityWeighting::factor(x),
            Repr::Str(s) => s.parse(),
        };
        parsed.map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryTerm {
    pub term: String,
    pub frequency: u32,
    pub entity: bool,
    pub weight: f64,
}

/// Distinct query terms with their weights, in first-occurrence order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WeightedQuery {
    pub terms: Vec<QueryTerm>,
}

impl WeightedQuery {
    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn total_weight(&self) -> f64 {
        self.terms.iter().map(|t| t.weight).sum()
    }

    pub fn entity_flags(&self) -> Vec<bool> {
        self.terms.iter().map(|t| t.entity).collect()
    }

    pub fn weight_of(&self, term: &str) -> Option<f64> {
        self.terms.iter().find(|t| t.term == term).map(|t| t.weight)
    }

    /// Every weight multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let mut q = self.clone();
        for t in &mut q.terms {
            t.weight *= c;
        }
        q
    }

    /// Builds a query from explicit `(term, weight)` pairs.
    pub fn from_weights<S: Into<String>>(pairs: impl IntoIterator<Item = (S, f64)>) -> Self {
        Self {
            terms: pairs
                .into_iter()
                .map(|(term, weight)| QueryTerm {
                    term: term.into(),
                    frequency: 1,
                    entity: false,
                    weight,
                })
                .collect(),
        }
    }
}

/// Term frequencies over already-filtered terms, first-occurrence order.
pub fn term_histogram(terms: &[String]) -> Vec<(String, u32)> {
    let mut index: HashMap<&str, usize> = HashMap::new();
    let mut out: Vec<(String, u32)> = Vec::new();
    for t in terms {
        match index.get(t.as_str()) {
            Some(&i) => out[i].1 += 1,
            None => {
                index.insert(t, out.len());
                out.push((t.clone(), 1));
            }
        }
    }
    out
}

/// Noun/adjective, non-stopword terms of a description, lowercased.
pub fn informative_terms(cleaner: &TextCleaner, description: &str) -> Vec<String> {
    let expanded = expand_contractions(description);
    let cased: Vec<&str> = split_alphanumeric(&expanded).collect();
    pos_filter(&cased)
        .into_iter()
        .filter(|t| !cleaner.is_stopword(t))
        .collect()
}

/// Preprocesses a vulnerability description into a weighted query.
///
/// An empty result means the description has no informative terms.
pub fn build_weighted_query(
    cleaner: &TextCleaner,
    recognizer: &dyn EntityRecognizer,
    description: &str,
    weighting: EntityWeighting,
) -> WeightedQuery {
    let histogram = term_histogram(&informative_terms(cleaner, description));
    let names: Vec<String> = histogram.iter().map(|(t, _)| t.clone()).collect();
    let flags = recognizer.recognize(&names);

    let terms = histogram
        .into_iter()
        .zip(flags)
        .filter_map(|((term, frequency), entity)| {
            let weight = match (weighting, entity) {
                (EntityWeighting::Factor(f), true) => frequency as f64 * f,
                (EntityWeighting::Factor(_), false) => frequency as f64,
                (EntityWeighting::EntityOnly, true) => frequency as f64,
                (EntityWeighting::EntityOnly, false) => return None,
            };
            Some(QueryTerm {
                term,
                frequency,
                entity,
                weight,
            })
        })
        .collect();
    WeightedQuery { terms }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::LibraryRecord;
    use crate::textproc::EntityVocabulary;
    use proptest::prelude::*;

    fn jenkins_vocab() -> EntityVocabulary {
        EntityVocabulary::from_tokens(["jenkins"], 1)
    }

    #[test]
    fn entity_terms_amplified() {
        let q = build_weighted_query(
            &TextCleaner::default(),
            &jenkins_vocab(),
            "jenkins jenkins password",
            EntityWeighting::Factor(4.0),
        );
        assert_eq!(q.weight_of("jenkins"), Some(8.0));
        assert_eq!(q.weight_of("password"), Some(1.0));
        assert_eq!(q.entity_flags(), [true, false]);
    }

    #[test]
    fn unit_weight_is_frequency() {
        let q = build_weighted_query(
            &TextCleaner::default(),
            &jenkins_vocab(),
            "jenkins jenkins password",
            EntityWeighting::Factor(1.0),
        );
        assert_eq!(q.weight_of("jenkins"), Some(2.0));
        assert_eq!(q.weight_of("password"), Some(1.0));
    }

    #[test]
    fn entity_only_drops_other_terms() {
        let q = build_weighted_query(
            &TextCleaner::default(),
            &jenkins_vocab(),
            "jenkins jenkins password",
            EntityWeighting::EntityOnly,
        );
        assert_eq!(q.len(), 1);
        assert_eq!(q.weight_of("jenkins"), Some(2.0));
    }

    #[test]
    fn empty_signal() {
        let q = build_weighted_query(
            &TextCleaner::default(),
            &jenkins_vocab(),
            "it is and the of 1.0.0",
            EntityWeighting::default(),
        );
        assert!(q.is_empty());
    }

    #[test]
    fn cve_2020_2318_entities() {
        let cleaner = TextCleaner::default();
        let catalog: Vec<_> = [
            "org.jenkins-ci.plugins:mailer",
            "org.jenkins-ci.plugins:mailcommander",
            "org.jenkins-ci.plugins:job-direct-mail",
        ]
        .iter()
        .map(|n| LibraryRecord::new(*n, ""))
        .collect();
        let vocab = EntityVocabulary::build(&cleaner, &catalog);
        let q = build_weighted_query(
            &cleaner,
            &vocab,
            "Jenkins Mail Commander Plugin for Jenkins-ci Plugin 1.0.0 and earlier stores passwords \
             unencrypted in job config.xml files on the Jenkins controller where they can be viewed \
             by users with Extended Read permission, or access to the Jenkins controller file system.",
            EntityWeighting::Factor(4.0),
        );
        let entities: Vec<&str> = q
            .terms
            .iter()
            .filter(|t| t.entity)
            .map(|t| t.term.as_str())
            .collect();
        assert_eq!(entities, ["jenkins", "mail", "ci", "job"]);
        assert_eq!(q.weight_of("jenkins"), Some(4.0 * 4.0));
        assert!(q.weight_of("commander").is_some());
        assert!(q.weight_of("stores").is_none());
    }

    #[test]
    fn weighting_parses_and_serializes() {
        assert_eq!(
            "4".parse::<EntityWeighting>().unwrap(),
            EntityWeighting::Factor(4.0)
        );
        assert_eq!(
            "INF".parse::<EntityWeighting>().unwrap(),
            EntityWeighting::EntityOnly
        );
        assert!("0.5".parse::<EntityWeighting>().is_err());
        let j = serde_json::to_string(&EntityWeighting::EntityOnly).unwrap();
        assert_eq!(
            serde_json::from_str::<EntityWeighting>(&j).unwrap(),
            EntityWeighting::EntityOnly
        );
        assert_eq!(
            serde_json::from_str::<EntityWeighting>("4.0").unwrap(),
            EntityWeighting::Factor(4.0)
        );
        assert!(serde_json::from_str::<EntityWeighting>("0.0").is_err());
    }

    proptest! {
        #[test]
        fn weight_is_frequency_times_factor(words in proptest::collection::vec("[a-f]{2,3}", 0..20),
                                            vocab in proptest::collection::vec("[a-f]{2,3}", 0..6),
                                            factor in 1.0f64..10.0) {
            let vocab = EntityVocabulary::from_tokens(vocab, 1);
            let text = words.join(" ");
            let cleaner = TextCleaner::default();
            let q = build_weighted_query(&cleaner, &vocab, &text, EntityWeighting::Factor(factor));
            let plain = build_weighted_query(&cleaner, &vocab, &text, EntityWeighting::Factor(1.0));
            let hist = term_histogram(&informative_terms(&cleaner, &text));
            prop_assert_eq!(plain.len(), hist.len());
            for ((t, p), (h, n)) in q.terms.iter().zip(&plain.terms).zip(&hist) {
                prop_assert_eq!(&t.term, h);
                prop_assert_eq!(p.weight, *n as f64);
                let expected = *n as f64 * if t.entity { factor } else { 1.0 };
                prop_assert_eq!(t.weight, expected);
                prop_assert!(t.weight > 0.0);
            }
        }
    }
}
