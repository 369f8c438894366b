use std::collections::HashMap;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::records::VulnerabilityRecord;
use crate::error::{Error, Result};

pub const DEFAULT_RATIO: [u32; 3] = [3, 1, 1];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetSplit {
    pub training: Vec<VulnerabilityRecord>,
    pub validation: Vec<VulnerabilityRecord>,
    pub testing: Vec<VulnerabilityRecord>,
}

/// File form of a split: ids only.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub training: Vec<String>,
    pub validation: Vec<String>,
    pub testing: Vec<String>,
    pub seed: u64,
    pub ratio: [u32; 3],
}

impl DatasetSplit {
    pub fn sizes(&self) -> [usize; 3] {
        [
            self.training.len(),
            self.validation.len(),
            self.testing.len(),
        ]
    }

    pub fn manifest(&self, seed: u64, ratio: [u32; 3]) -> SplitManifest {
        let ids = |v: &[VulnerabilityRecord]| v.iter().map(|r| r.id.clone()).collect();
        SplitManifest {
            training: ids(&self.training),
            validation: ids(&self.validation),
            testing: ids(&self.testing),
            seed,
            ratio,
        }
    }

    /// Rebuilds a split from a manifest against a loaded corpus.
    pub fn from_manifest(manifest: &SplitManifest, vulns: &[VulnerabilityRecord]) -> Result<Self> {
        let by_id: HashMap<&str, &VulnerabilityRecord> =
            vulns.iter().map(|v| (v.id.as_str(), v)).collect();
        let pick = |ids: &[String]| -> Result<Vec<VulnerabilityRecord>> {
            ids.iter()
                .map(|id| {
                    by_id.get(id.as_str()).map(|v| (*v).clone()).ok_or_else(|| {
                        Error::validation(format!(
                            "split manifest names unknown vulnerability {id:?}"
                        ))
                    })
                })
                .collect()
        };
        Ok(Self {
            training: pick(&manifest.training)?,
            validation: pick(&manifest.validation)?,
            testing: pick(&manifest.testing)?,
        })
    }
}

impl SplitManifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))?;
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

/// Bucket sizes for `n` items: floor each share, then hand out the
/// remainder one at a time to training, validation, testing in turn.
pub fn ratio_sizes(n: usize, ratio: [u32; 3]) -> [usize; 3] {
    let total: u64 = ratio.iter().map(|&r| r as u64).sum();
    let mut sizes = ratio.map(|r| ((n as u64 * r as u64) / total) as usize);
    let mut remainder = n - sizes.iter().sum::<usize>();
    let mut i = 0;
    while remainder > 0 {
        sizes[i % 3] += 1;
        remainder -= 1;
        i += 1;
    }
    sizes
}

/// Shuffles (under `seed`) and splits labeled vulnerabilities by `ratio`.
pub fn partition_dataset(
    vulns: &[VulnerabilityRecord],
    ratio: [u32; 3],
    seed: u64,
) -> Result<DatasetSplit> {
    if ratio.contains(&0) {
        return Err(Error::Config(format!(
            "split ratio components must be positive: {ratio:?}"
        )));
    }
    partition_with_sizes(vulns, ratio_sizes(vulns.len(), ratio), seed)
}

/// Like [`partition_dataset`] but with pinned per-split sizes.
pub fn partition_with_sizes(
    vulns: &[VulnerabilityRecord],
    sizes: [usize; 3],
    seed: u64,
) -> Result<DatasetSplit> {
    if vulns.is_empty() {
        return Err(Error::validation("cannot partition an empty corpus"));
    }
    if let Some(v) = vulns.iter().find(|v| !v.is_labeled()) {
        return Err(Error::validation(format!(
            "vulnerability {:?} has no labels and cannot be partitioned",
            v.id
        )));
    }
    if sizes.iter().sum::<usize>() != vulns.len() {
        return Err(Error::Config(format!(
            "split sizes {sizes:?} do not sum to corpus size {}",
            vulns.len()
        )));
    }

    // Canonical order first so the split depends on content and seed only.
    let mut order: Vec<&VulnerabilityRecord> = vulns.iter().collect();
    order.sort_by(|a, b| a.id.cmp(&b.id));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let mut it = order.into_iter().cloned();
    let training = it.by_ref().take(sizes[0]).collect();
    let validation = it.by_ref().take(sizes[1]).collect();
    let testing = it.collect();
    Ok(DatasetSplit {
        training,
        validation,
        testing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn corpus(n: usize) -> Vec<VulnerabilityRecord> {
        (0..n)
            .map(|i| VulnerabilityRecord::new(format!("CVE-{i}"), "x", ["a:b"]))
            .collect()
    }

    #[test]
    fn exact_ratio() {
        let s = partition_dataset(&corpus(5), DEFAULT_RATIO, 7).unwrap();
        assert_eq!(s.sizes(), [3, 1, 1]);
    }

    #[test]
    fn remainder_policy() {
        // 2789 * 3/5 = 1673.4, 2789/5 = 557.8
        assert_eq!(ratio_sizes(2789, DEFAULT_RATIO), [1674, 558, 557]);
    }

    #[test]
    fn pinned_sizes_reproduce_published_counts() {
        let s = partition_with_sizes(&corpus(2789), [1668, 556, 565], 1).unwrap();
        assert_eq!(s.sizes(), [1668, 556, 565]);
        let all: HashSet<_> = s
            .training
            .iter()
            .chain(&s.validation)
            .chain(&s.testing)
            .map(|v| v.id.clone())
            .collect();
        assert_eq!(all.len(), 2789);
    }

    #[test]
    fn deterministic_and_order_independent() {
        let c = corpus(50);
        let a = partition_dataset(&c, DEFAULT_RATIO, 42).unwrap();
        let b = partition_dataset(&c, DEFAULT_RATIO, 42).unwrap();
        assert_eq!(a, b);
        let mut rev = c.clone();
        rev.reverse();
        assert_eq!(partition_dataset(&rev, DEFAULT_RATIO, 42).unwrap(), a);
        assert_ne!(partition_dataset(&c, DEFAULT_RATIO, 43).unwrap(), a);
    }

    #[test]
    fn unlabeled_rejected() {
        let mut c = corpus(3);
        c[1].labels.clear();
        assert!(matches!(
            partition_dataset(&c, DEFAULT_RATIO, 0),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn manifest_round_trip() {
        let c = corpus(10);
        let s = partition_dataset(&c, DEFAULT_RATIO, 3).unwrap();
        let m = s.manifest(3, DEFAULT_RATIO);
        let f = tempfile::NamedTempFile::new().unwrap();
        m.save(f.path()).unwrap();
        let back = SplitManifest::load(f.path()).unwrap();
        assert_eq!(back, m);
        assert_eq!(DatasetSplit::from_manifest(&back, &c).unwrap(), s);
    }

    proptest::proptest! {
        #[test]
        fn union_and_disjointness(n in 1usize..200, a in 1u32..6, b in 1u32..6, c in 1u32..6, seed: u64) {
            let s = partition_dataset(&corpus(n), [a, b, c], seed).unwrap();
            let ids: Vec<_> = s.training.iter().chain(&s.validation).chain(&s.testing).map(|v| v.id.clone()).collect();
            let set: HashSet<_> = ids.iter().cloned().collect();
            proptest::prop_assert_eq!(ids.len(), n);
            proptest::prop_assert_eq!(set.len(), n);
        }
    }
}
