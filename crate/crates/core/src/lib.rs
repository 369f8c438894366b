//! Vulnerable-library identification from free-text descriptions.
//!
//! A vulnerability description is linked to the catalog libraries it most
//! likely affects in two stages: a weighted TF-IDF screener narrows the full
//! catalog to a candidate pool, then a trainable coherence scorer reranks
//! that pool pair by pair.
//!
//! ```no_run
//! use depmatch::corpus::load_libraries;
//! use depmatch::pipeline::Linker;
//! use depmatch::screener::ScreenerConfig;
//!
//! let catalog = load_libraries("catalog.jsonl").unwrap();
//! let linker = Linker::build(&catalog, ScreenerConfig::default()).unwrap();
//! let candidates = linker.screen("Jenkins Mail Commander Plugin stores passwords unencrypted");
//! for c in candidates.entries.iter().take(5) {
//!     println!("{} {:.4}", c.library, c.score);
//! }
//! ```

pub mod cli;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod fixture;
pub mod pipeline;
pub mod reranker;
pub mod screener;
pub mod textproc;

pub use error::{Error, Result};

/// Version tag written into every persisted artifact.
pub const FORMAT_VERSION: u32 = 1;
