//! Query preprocessing: part-of-speech filtering and library-name entity recognition.

mod entity;
mod pos;
mod query;

pub use entity::{recognize_entities, EntityRecognizer, EntityVocabulary};
pub use pos::{pos_filter, tag, PosTag};
pub use query::{
    build_weighted_query, informative_terms, term_histogram, EntityWeighting, QueryTerm,
    WeightedQuery,
};
