//! Both stages wired together over one catalog.

use crate::corpus::{
    build_library_document, LibraryDocument, LibraryRecord, TextCleaner, VulnerabilityRecord,
};
use crate::error::{Error, Result};
use crate::eval::{PredictionRecord, RankedEntry};
use crate::reranker::{rank_candidates, CoherenceScorer, PairQuery, RankedLibrary};
use crate::screener::{screen, CandidateSet, InvertedIndex, ScreenerConfig};
use crate::textproc::{build_weighted_query, EntityVocabulary, EntityWeighting, WeightedQuery};

/// Indexed catalog plus everything needed to turn a description into candidates.
#[derive(Debug, Clone)]
pub struct Linker {
    cleaner: TextCleaner,
    /// In document-id order.
    docs: Vec<LibraryDocument>,
    index: InvertedIndex,
    vocab: EntityVocabulary,
    config: ScreenerConfig,
}

/// Screener output and its reranked top-k.
#[derive(Debug, Clone)]
pub struct Prediction {
    pub candidates: CandidateSet,
    pub ranked: Vec<RankedLibrary>,
}

impl Linker {
    pub fn build(catalog: &[LibraryRecord], config: ScreenerConfig) -> Result<Self> {
        Self::build_with(TextCleaner::default(), catalog, config)
    }

    /// The entity vocabulary always covers every catalog name, even when
    /// description-less libraries are left out of the index.
    pub fn build_with(
        cleaner: TextCleaner,
        catalog: &[LibraryRecord],
        config: ScreenerConfig,
    ) -> Result<Self> {
        config.validate()?;
        if catalog.is_empty() {
            return Err(Error::validation("catalog is empty"));
        }
        let vocab = EntityVocabulary::build(&cleaner, catalog);
        let docs: Vec<LibraryDocument> = catalog
            .iter()
            .filter(|l| !(config.exclude_description_less && l.is_description_less()))
            .map(|l| build_library_document(&cleaner, l))
            .collect();
        let index = InvertedIndex::build(&docs)?;
        Self::from_parts(cleaner, docs, index, vocab, config)
    }

    /// Reassembles a linker from persisted parts. `docs` may be in any order.
    pub fn from_parts(
        cleaner: TextCleaner,
        mut docs: Vec<LibraryDocument>,
        index: InvertedIndex,
        vocab: EntityVocabulary,
        config: ScreenerConfig,
    ) -> Result<Self> {
        config.validate()?;
        docs.sort_by(|a, b| a.library.cmp(&b.library));
        let consistent = docs.len() == index.num_docs()
            && docs
                .iter()
                .zip(index.libraries())
                .enumerate()
                .all(|(i, (d, l))| {
                    d.library == *l && d.len() == index.doc_length(i as u32) as usize
                });
        if !consistent {
            return Err(Error::validation(
                "library documents do not match the index",
            ));
        }
        Ok(Self {
            cleaner,
            docs,
            index,
            vocab,
            config,
        })
    }

    pub fn cleaner(&self) -> &TextCleaner {
        &self.cleaner
    }

    pub fn docs(&self) -> &[LibraryDocument] {
        &self.docs
    }

    pub fn index(&self) -> &InvertedIndex {
        &self.index
    }

    pub fn vocab(&self) -> &EntityVocabulary {
        &self.vocab
    }

    pub fn config(&self) -> &ScreenerConfig {
        &self.config
    }

    pub fn set_config(&mut self, config: ScreenerConfig) -> Result<()> {
        config.validate()?;
        self.config = config;
        Ok(())
    }

    pub fn query(&self, description: &str, weighting: EntityWeighting) -> WeightedQuery {
        build_weighted_query(&self.cleaner, &self.vocab, description, weighting)
    }

    /// Cleaned description tokens, as fed to the pair encoder.
    pub fn query_tokens(&self, description: &str) -> Vec<String> {
        self.cleaner.clean(description)
    }

    pub fn screen(&self, description: &str) -> CandidateSet {
        self.screen_with(description, &self.config)
    }

    /// Screens under a different weighting or pool size; the index is shared.
    pub fn screen_with(&self, description: &str, config: &ScreenerConfig) -> CandidateSet {
        screen(
            self.query(description, config.entity_weight),
            &self.index,
            config,
        )
    }

    /// Screens, then reranks the pool with `scorer`, keeping `k`.
    pub fn predict(
        &self,
        id: &str,
        description: &str,
        scorer: &dyn CoherenceScorer,
        k: usize,
    ) -> Result<Prediction> {
        let candidates = self.screen(description);
        let tokens = self.query_tokens(description);
        let query = PairQuery {
            id,
            description,
            tokens: &tokens,
        };
        let ranked = rank_candidates(&query, &candidates, &self.docs, scorer, k)?;
        Ok(Prediction { candidates, ranked })
    }

    /// Top-k per vulnerability as evaluation records. Without a scorer the
    /// screener ranking itself is used.
    pub fn prediction_records(
        &self,
        vulns: &[VulnerabilityRecord],
        scorer: Option<&dyn CoherenceScorer>,
        k: usize,
    ) -> Result<Vec<PredictionRecord>> {
        vulns
            .iter()
            .map(|v| {
                let ranked = match scorer {
                    Some(s) => self
                        .predict(&v.id, &v.description, s, k)?
                        .ranked
                        .into_iter()
                        .map(|r| RankedEntry {
                            library: r.library,
                            score: r.coherence,
                        })
                        .collect(),
                    None => self
                        .screen(&v.description)
                        .entries
                        .into_iter()
                        .take(k)
                        .map(|c| RankedEntry {
                            library: c.library,
                            score: c.score,
                        })
                        .collect(),
                };
                PredictionRecord::new(v.id.clone(), ranked, v.labels.clone())
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reranker::{EncoderConfig, ModelParameters};

    fn catalog() -> Vec<LibraryRecord> {
        vec![
            LibraryRecord::new(
                "org.jenkins-ci.plugins:mailer",
                "The Jenkins Plugins Parent POM Project",
            ),
            LibraryRecord::new(
                "org.jenkins-ci.plugins:mailcommander",
                "This plug-in provides function that read a mail subject as a CLI Command",
            ),
            LibraryRecord::new(
                "org.jenkins-ci.plugins:job-direct-mail",
                "Job Direct Mail Plugin",
            ),
            LibraryRecord::new("org.example:nodesc", ""),
        ]
    }

    #[test]
    fn builds_and_screens() {
        let linker = Linker::build(&catalog(), ScreenerConfig::default()).unwrap();
        assert_eq!(linker.docs().len(), 4);
        let set = linker.screen("Jenkins Mail Commander Plugin stores passwords");
        assert_eq!(set.len(), 4);
        assert!(set
            .libraries()
            .any(|l| l == "org.jenkins-ci.plugins:mailcommander"));
        let nodesc = set
            .entries
            .iter()
            .find(|c| c.library == "org.example:nodesc")
            .unwrap();
        assert!(nodesc.padded && nodesc.score == 0.0);
    }

    #[test]
    fn excluding_description_less_keeps_vocabulary() {
        let config = ScreenerConfig {
            exclude_description_less: true,
            ..Default::default()
        };
        let linker = Linker::build(&catalog(), config).unwrap();
        assert_eq!(linker.docs().len(), 3);
        assert!(linker.vocab().contains("nodesc"));
        assert!(linker.index().doc_id("org.example:nodesc").is_none());
    }

    #[test]
    fn no_informative_terms() {
        let linker = Linker::build(&catalog(), ScreenerConfig::default()).unwrap();
        let set = linker.screen("the and of");
        assert!(set.is_empty() && set.empty_query());
        let p = ModelParameters::zeros(EncoderConfig::default(), 2);
        assert!(linker
            .predict("q", "the and", &p, 3)
            .unwrap()
            .ranked
            .is_empty());
    }

    #[test]
    fn from_parts_checks_consistency() {
        let linker = Linker::build(&catalog(), ScreenerConfig::default()).unwrap();
        let mut docs = linker.docs().to_vec();
        docs.reverse();
        let ok = Linker::from_parts(
            TextCleaner::default(),
            docs.clone(),
            linker.index().clone(),
            linker.vocab().clone(),
            ScreenerConfig::default(),
        );
        assert!(ok.is_ok());
        docs.pop();
        assert!(Linker::from_parts(
            TextCleaner::default(),
            docs,
            linker.index().clone(),
            linker.vocab().clone(),
            ScreenerConfig::default(),
        )
        .is_err());
    }
}
