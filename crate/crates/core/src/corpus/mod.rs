//! Corpus ingestion, text cleaning, library documents and dataset splits.

mod clean;
mod document;
mod partition;
mod records;

pub use clean::{
    clean_text, expand_contractions, split_alphanumeric, Stopwords, TextCleaner,
    BUNDLED_STOPWORDS_PATH,
};
pub use document::{build_library_document, LibraryDocument};
pub use partition::{
    partition_dataset, partition_with_sizes, ratio_sizes, DatasetSplit, SplitManifest,
    DEFAULT_RATIO,
};
pub use records::{
    load_libraries, load_vulnerabilities, read_json_records, validate_coordinate, write_jsonl,
    LibraryRecord, VulnerabilityRecord, COORDINATE_SEPARATOR,
};
