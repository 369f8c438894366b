use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::encode::{EncoderConfig, PairEncoding};
use crate::error::{Error, Result};

const MODEL_FORMAT: &str = "depmatch-model";
pub const DEFAULT_HIDDEN: usize = 256;

/// Scores are kept inside `[CLAMP_EPS, 1 - CLAMP_EPS]`.
pub const CLAMP_EPS: f64 = 1e-12;

/// One-hidden-layer ReLU network producing a single pre-activation.
///
/// `w1` is stored input-major (`w1[i * hidden + h]`) so a sparse input only
/// touches the rows of its non-zero features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParameters {
    pub format: String,
    pub version: u32,
    pub encoder: EncoderConfig,
    pub hidden: usize,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

/// Intermediate values of one forward pass.
#[derive(Debug, Clone)]
pub struct Forward {
    pub hidden_pre: Vec<f64>,
    pub output_pre: f64,
}

impl ModelParameters {
    pub fn zeros(encoder: EncoderConfig, hidden: usize) -> Self {
        Self {
            format: MODEL_FORMAT.to_string(),
            version: crate::FORMAT_VERSION,
            encoder,
            hidden,
            w1: vec![0.0; encoder.feature_dim * hidden],
            b1: vec![0.0; hidden],
            w2: vec![0.0; hidden],
            b2: 0.0,
        }
    }

    /// Uniform initialisation in `±1/sqrt(fan_in)` for every layer.
    pub fn init(encoder: EncoderConfig, hidden: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = Self::zeros(encoder, hidden);
        let b_in = 1.0 / (encoder.feature_dim as f64).sqrt();
        let b_hidden = 1.0 / (hidden as f64).sqrt();
        for w in p.w1.iter_mut().chain(p.b1.iter_mut()) {
            *w = rng.random_range(-b_in..b_in);
        }
        for w in p.w2.iter_mut() {
            *w = rng.random_range(-b_hidden..b_hidden);
        }
        p.b2 = rng.random_range(-b_hidden..b_hidden);
        p
    }

    pub fn feature_dim(&self) -> usize {
        self.encoder.feature_dim
    }

    pub fn num_parameters(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.format != MODEL_FORMAT || self.version != crate::FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported model format {:?} version {}",
                self.format, self.version
            )));
        }
        self.encoder.validate()?;
        let h = self.hidden;
        if h == 0
            || self.w1.len() != self.encoder.feature_dim * h
            || self.b1.len() != h
            || self.w2.len() != h
        {
            return Err(Error::Format(
                "model parameter shapes are inconsistent".into(),
            ));
        }
        let all_finite = self
            .w1
            .iter()
            .chain(&self.b1)
            .chain(&self.w2)
            .chain(std::iter::once(&self.b2))
            .all(|x| x.is_finite());
        if !all_finite {
            return Err(Error::Numerical(
                "model contains non-finite parameters".into(),
            ));
        }
        Ok(())
    }

    pub fn forward(&self, enc: &PairEncoding) -> Result<Forward> {
        if enc.dim != self.encoder.feature_dim {
            return Err(Error::validation(format!(
                "encoding dimension {} does not match model dimension {}",
                enc.dim, self.encoder.feature_dim
            )));
        }
        let h = self.hidden;
        let mut hidden_pre = self.b1.clone();
        for (i, x) in enc.iter() {
            let row = &self.w1[i * h..(i + 1) * h];
            for (z, w) in hidden_pre.iter_mut().zip(row) {
                *z += w * x;
            }
        }
        let output_pre = self.b2
            + hidden_pre
                .iter()
                .zip(&self.w2)
                .map(|(z, w)| z.max(0.0) * w)
                .sum::<f64>();
        if !output_pre.is_finite() {
            return Err(Error::Numerical(format!(
                "network output is not finite ({output_pre})"
            )));
        }
        Ok(Forward {
            hidden_pre,
            output_pre,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string(self).map_err(|e| Error::Format(e.to_string()))?;
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let p: Self = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        p.validate()?;
        Ok(p)
    }
}

/// `1 / (1 + exp(pre))`, evaluated without overflow.
pub fn coherence_from_pre(pre: f64) -> f64 {
    if pre >= 0.0 {
        let e = (-pre).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + pre.exp())
    }
}

pub fn clamp_score(s: f64) -> f64 {
    s.clamp(CLAMP_EPS, 1.0 - CLAMP_EPS)
}

/// Coherence score in `(0, 1)` for one encoded pair.
pub fn score_pair(enc: &PairEncoding, params: &ModelParameters) -> Result<f64> {
    let fwd = params.forward(enc)?;
    Ok(clamp_score(coherence_from_pre(fwd.output_pre)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> EncoderConfig {
        EncoderConfig {
            feature_dim: 16,
            ..Default::default()
        }
    }

    fn enc(dim: usize, pairs: &[(u32, f64)]) -> PairEncoding {
        PairEncoding {
            dim,
            indices: pairs.iter().map(|p| p.0).collect(),
            values: pairs.iter().map(|p| p.1).collect(),
        }
    }

    #[test]
    fn sigmoid_midpoint_and_limits() {
        assert_eq!(coherence_from_pre(0.0), 0.5);
        assert!(coherence_from_pre(50.0) < 1e-20);
        assert!(coherence_from_pre(-50.0) > 1.0 - 1e-15);
        assert_eq!(coherence_from_pre(1e6), 0.0);
        assert_eq!(clamp_score(coherence_from_pre(1e6)), CLAMP_EPS);
        assert_eq!(clamp_score(coherence_from_pre(-1e6)), 1.0 - CLAMP_EPS);
        // decreasing in the pre-activation
        assert!(coherence_from_pre(1.0) < coherence_from_pre(-1.0));
    }

    #[test]
    fn zero_network_gives_half() {
        let p = ModelParameters::zeros(small(), 4);
        let e = enc(16, &[(0, 1.0), (3, -2.5), (15, 7.0)]);
        assert_eq!(score_pair(&e, &p).unwrap(), 0.5);
    }

    #[test]
    fn dimension_mismatch_is_error() {
        let p = ModelParameters::zeros(small(), 4);
        assert!(score_pair(&enc(8, &[]), &p).is_err());
    }

    #[test]
    fn non_finite_surfaces() {
        let mut p = ModelParameters::zeros(small(), 2);
        p.b2 = f64::NAN;
        assert!(matches!(
            score_pair(&enc(16, &[]), &p),
            Err(Error::Numerical(_))
        ));
        assert!(p.validate().is_err());
    }

    #[test]
    fn init_is_seeded_and_bounded() {
        let a = ModelParameters::init(small(), 8, 1);
        let b = ModelParameters::init(small(), 8, 1);
        let c = ModelParameters::init(small(), 8, 2);
        assert_eq!(a, b);
        assert_ne!(a, c);
        let bound = 1.0 / 4.0;
        assert!(a.w1.iter().all(|w| w.abs() < bound));
        assert!(a.validate().is_ok());
    }

    #[test]
    fn file_round_trip_is_exact() {
        let p = ModelParameters::init(small(), 8, 9);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        p.save(&path).unwrap();
        let back = ModelParameters::load(&path).unwrap();
        assert_eq!(back, p);
        let e = enc(16, &[(1, 0.3), (9, 0.7)]);
        assert_eq!(score_pair(&e, &back).unwrap(), score_pair(&e, &p).unwrap());
        let path2 = dir.path().join("m2.json");
        back.save(&path2).unwrap();
        assert_eq!(fs::read(&path).unwrap(), fs::read(&path2).unwrap());
    }
}
