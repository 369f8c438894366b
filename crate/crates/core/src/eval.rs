//! Top-k precision/recall/F1, macro reports, zero-shot analysis and
//! screening recall curves.

use std::collections::{BTreeSet, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::VulnerabilityRecord;
use crate::error::{Error, Result};

pub const DEFAULT_KS: [usize; 3] = [1, 2, 3];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry {
    pub library: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub vuln_id: String,
    pub ranked: Vec<RankedEntry>,
    pub affected: BTreeSet<String>,
}

impl PredictionRecord {
    /// Rejects duplicate coordinates in `ranked`.
    pub fn new(
        vuln_id: impl Into<String>,
        ranked: Vec<RankedEntry>,
        affected: BTreeSet<String>,
    ) -> Result<Self> {
        let rec = Self {
            vuln_id: vuln_id.into(),
            ranked,
            affected,
        };
        rec.validate()?;
        Ok(rec)
    }

    /// Convenience for tests and oracles: unit scores in rank order.
    pub fn from_names<S: AsRef<str>>(vuln_id: &str, ranked: &[S], affected: &[S]) -> Result<Self> {
        Self::new(
            vuln_id,
            ranked
                .iter()
                .map(|l| RankedEntry {
                    library: l.as_ref().to_string(),
                    score: 1.0,
                })
                .collect(),
            affected.iter().map(|a| a.as_ref().to_string()).collect(),
        )
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for e in &self.ranked {
            if !seen.insert(e.library.as_str()) {
                return Err(Error::validation(format!(
                    "{}: duplicate coordinate {:?} in ranked list",
                    self.vuln_id, e.library
                )));
            }
        }
        Ok(())
    }
}

/// Metrics of one record at one cutoff, with the integer counts behind them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtK {
    pub k: usize,
    pub hits: usize,
    pub precision_den: usize,
    pub recall_den: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Precision over `min(k, |affected|)`, recall over `|affected|`, F1 = 0 when both are 0.
pub fn metrics_at_k(pred: &PredictionRecord, k: usize) -> Result<AtK> {
    if k == 0 {
        return Err(Error::validation("k must be at least 1"));
    }
    if pred.affected.is_empty() {
        return Err(Error::validation(format!(
            "{}: affected set is empty",
            pred.vuln_id
        )));
    }
    pred.validate()?;
    let hits = pred
        .ranked
        .iter()
        .take(k)
        .filter(|e| pred.affected.contains(&e.library))
        .count();
    let precision_den = k.min(pred.affected.len());
    let recall_den = pred.affected.len();
    let precision = hits as f64 / precision_den as f64;
    let recall = hits as f64 / recall_den as f64;
    // 2PR/(P+R) reduces to 2h/(a+b); one rounding instead of several
    let f1 = if hits == 0 {
        0.0
    } else {
        2.0 * hits as f64 / (precision_den + recall_den) as f64
    };
    Ok(AtK {
        k,
        hits,
        precision_den,
        recall_den,
        precision,
        recall,
        f1,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMetrics {
    pub k: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub count: usize,
    pub per_k: Vec<KMetrics>,
    /// Mean of the per-k F1 values.
    pub average_f1: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zero_shot: Option<Box<MetricsReport>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub full_shot: Option<Box<MetricsReport>>,
}

impl MetricsReport {
    /// A report over no records.
    pub fn empty(ks: &[usize]) -> Self {
        Self {
            count: 0,
            per_k: ks
                .iter()
                .map(|&k| KMetrics {
                    k,
                    precision: 0.0,
                    recall: 0.0,
                    f1: 0.0,
                })
                .collect(),
            average_f1: 0.0,
            zero_shot: None,
            full_shot: None,
        }
    }

    pub fn at(&self, k: usize) -> Option<&KMetrics> {
        self.per_k.iter().find(|m| m.k == k)
    }

    pub fn f1_at(&self, k: usize) -> f64 {
        self.at(k).map_or(0.0, |m| m.f1)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map(|s| s + "\n")
            .map_err(|e| Error::Format(e.to_string()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    /// Table with one row per metric and `Top<k>` columns plus `Avg.`.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        self.render_into(&mut out, "all");
        if let Some(z) = &self.zero_shot {
            out.push('\n');
            z.render_into(&mut out, "zero-shot");
        }
        if let Some(f) = &self.full_shot {
            out.push('\n');
            f.render_into(&mut out, "full-shot");
        }
        out
    }

    fn render_into(&self, out: &mut String, title: &str) {
        let _ = writeln!(out, "{title} ({} vulnerabilities)", self.count);
        let _ = write!(out, "{:<10}", "");
        for m in &self.per_k {
            let _ = write!(out, "{:>8}", format!("Top{}", m.k));
        }
        let _ = writeln!(out, "{:>8}", "Avg.");
        type Column = fn(&KMetrics) -> f64;
        let mean = |f: Column| {
            if self.per_k.is_empty() {
                0.0
            } else {
                self.per_k.iter().map(f).sum::<f64>() / self.per_k.len() as f64
            }
        };
        let rows: [(&str, Column); 3] = [
            ("Precision", |m| m.precision),
            ("Recall", |m| m.recall),
            ("F1", |m| m.f1),
        ];
        for (name, f) in rows {
            let _ = write!(out, "{name:<10}");
            for m in &self.per_k {
                let _ = write!(out, "{:>8.3}", f(m));
            }
            let _ = writeln!(out, "{:>8.3}", mean(f));
        }
    }
}

/// Unweighted means over records for each `k`.
pub fn macro_report(preds: &[PredictionRecord], ks: &[usize]) -> Result<MetricsReport> {
    if preds.is_empty() {
        return Err(Error::validation("no predictions to evaluate"));
    }
    if ks.is_empty() {
        return Err(Error::validation("no cutoffs given"));
    }
    let n = preds.len() as f64;
    let mut per_k = Vec::with_capacity(ks.len());
    for &k in ks {
        let (mut p, mut r, mut f) = (0.0, 0.0, 0.0);
        for pred in preds {
            let m = metrics_at_k(pred, k)?;
            p += m.precision;
            r += m.recall;
            f += m.f1;
        }
        per_k.push(KMetrics {
            k,
            precision: p / n,
            recall: r / n,
            f1: f / n,
        });
    }
    let average_f1 = per_k.iter().map(|m| m.f1).sum::<f64>() / per_k.len() as f64;
    Ok(MetricsReport {
        count: preds.len(),
        per_k,
        average_f1,
        zero_shot: None,
        full_shot: None,
    })
}

/// Attaches zero-shot and full-shot sub-reports. A side with no records gets
/// an empty report (`count` 0, all metrics 0).
pub fn macro_report_with_shots(
    preds: &[PredictionRecord],
    ks: &[usize],
    training_labels: &BTreeSet<String>,
) -> Result<MetricsReport> {
    let mut report = macro_report(preds, ks)?;
    let (zero, full): (Vec<_>, Vec<_>) = preds
        .iter()
        .cloned()
        .partition(|p| is_zero_shot(&p.affected, training_labels));
    let sub = |side: &[PredictionRecord]| -> Result<Box<MetricsReport>> {
        Ok(Box::new(if side.is_empty() {
            MetricsReport::empty(ks)
        } else {
            macro_report(side, ks)?
        }))
    };
    report.zero_shot = Some(sub(&zero)?);
    report.full_shot = Some(sub(&full)?);
    Ok(report)
}

fn is_zero_shot(affected: &BTreeSet<String>, training_labels: &BTreeSet<String>) -> bool {
    affected.iter().all(|l| !training_labels.contains(l))
}

/// Every label that occurs in `records`.
pub fn label_set(records: &[VulnerabilityRecord]) -> BTreeSet<String> {
    records
        .iter()
        .flat_map(|r| r.labels.iter().cloned())
        .collect()
}

/// Zero-shot when none of a record's labels occurs among the training labels.
pub fn zero_shot_split(
    test: &[VulnerabilityRecord],
    training_labels: &BTreeSet<String>,
) -> (Vec<VulnerabilityRecord>, Vec<VulnerabilityRecord>) {
    test.iter()
        .cloned()
        .partition(|v| is_zero_shot(&v.labels, training_labels))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecallPoint {
    pub k: usize,
    pub recall: f64,
}

/// Mean over vulnerabilities of `|top-k ∩ affected| / |affected|`.
///
/// `rankings[i]` is the candidate ranking for `vulns[i]`.
pub fn screening_recall_curve<S: AsRef<str>>(
    vulns: &[VulnerabilityRecord],
    rankings: &[Vec<S>],
    ks: &[usize],
) -> Result<Vec<RecallPoint>> {
    if vulns.len() != rankings.len() {
        return Err(Error::validation(format!(
            "{} vulnerabilities but {} rankings",
            vulns.len(),
            rankings.len()
        )));
    }
    if vulns.is_empty() {
        return Err(Error::validation("no vulnerabilities"));
    }
    if let Some(v) = vulns.iter().find(|v| v.labels.is_empty()) {
        return Err(Error::validation(format!("{} has no labels", v.id)));
    }
    // rank of each label within its ranking, if present
    let positions: Vec<Vec<usize>> = vulns
        .iter()
        .zip(rankings)
        .map(|(v, r)| {
            r.iter()
                .enumerate()
                .filter(|(_, l)| v.labels.contains(l.as_ref()))
                .map(|(i, _)| i)
                .collect()
        })
        .collect();
    Ok(ks
        .iter()
        .map(|&k| {
            let total: f64 = vulns
                .iter()
                .zip(&positions)
                .map(|(v, pos)| {
                    pos.iter().filter(|&&i| i < k).count() as f64 / v.labels.len() as f64
                })
                .sum();
            RecallPoint {
                k,
                recall: total / vulns.len() as f64,
            }
        })
        .collect())
}

pub fn recall_curve_csv(curve: &[RecallPoint]) -> String {
    let mut out = String::from("k,recall\n");
    for p in curve {
        let _ = writeln!(out, "{},{}", p.k, p.recall);
    }
    out
}
