use super::encode::PairEncoding;
use super::model::{clamp_score, coherence_from_pre, ModelParameters};
use crate::error::{Error, Result};

pub const DEFAULT_ALPHA: f64 = 0.9;

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Config(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    Ok(())
}

/// Positive-weighted binary cross-entropy, averaged over the pairs:
/// `-(1/T) * sum(alpha*y*ln(s) + (1-alpha)*(1-y)*ln(1-s))`.
pub fn weighted_bce_loss(scores: &[f64], labels: &[bool], alpha: f64) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::validation(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.is_empty() {
        return Err(Error::validation("loss needs at least one pair"));
    }
    check_alpha(alpha)?;
    let mut total = 0.0;
    for (&s, &y) in scores.iter().zip(labels) {
        if !s.is_finite() {
            return Err(Error::Numerical(format!("non-finite score {s}")));
        }
        let s = clamp_score(s);
        total += if y {
            alpha * s.ln()
        } else {
            (1.0 - alpha) * (1.0 - s).ln()
        };
    }
    Ok(-total / scores.len() as f64)
}

/// Derivative of one pair's loss term with respect to the network output,
/// for `s = 1 / (1 + exp(pre))`.
pub fn loss_grad_wrt_pre(pre: f64, label: bool, alpha: f64) -> f64 {
    let s = coherence_from_pre(pre);
    if label {
        alpha * (1.0 - s)
    } else {
        -(1.0 - alpha) * s
    }
}

/// Gradient buffers shaped like [`ModelParameters`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
    /// Rows of `w1` that may be non-zero.
    pub(crate) touched_rows: Vec<u32>,
}

impl Gradients {
    pub fn zeros_like(p: &ModelParameters) -> Self {
        Self {
            w1: vec![0.0; p.w1.len()],
            b1: vec![0.0; p.b1.len()],
            w2: vec![0.0; p.w2.len()],
            b2: 0.0,
            touched_rows: Vec::new(),
        }
    }

    /// Resets to zero, touching only rows that were written.
    pub fn clear(&mut self, hidden: usize) {
        for &r in &self.touched_rows {
            let r = r as usize;
            self.w1[r * hidden..(r + 1) * hidden].fill(0.0);
        }
        self.touched_rows.clear();
        self.b1.fill(0.0);
        self.w2.fill(0.0);
        self.b2 = 0.0;
    }

    /// Adds `scale * d(output_pre)/d(params)` for one pair.
    pub fn accumulate(
        &mut self,
        params: &ModelParameters,
        enc: &PairEncoding,
        hidden_pre: &[f64],
        scale: f64,
    ) {
        let h = params.hidden;
        self.b2 += scale;
        let mut dz = vec![0.0; h];
        for j in 0..h {
            let z = hidden_pre[j];
            if z > 0.0 {
                self.w2[j] += scale * z;
                dz[j] = scale * params.w2[j];
                self.b1[j] += dz[j];
            }
        }
        for (i, x) in enc.iter() {
            self.touched_rows.push(i as u32);
            let row = &mut self.w1[i * h..(i + 1) * h];
            for (g, d) in row.iter_mut().zip(&dz) {
                *g += d * x;
            }
        }
    }
}

/// Mean loss over the pairs and its exact gradient.
pub fn loss_and_gradient(
    params: &ModelParameters,
    pairs: &[(&PairEncoding, bool)],
    alpha: f64,
) -> Result<(f64, Gradients)> {
    check_alpha(alpha)?;
    if pairs.is_empty() {
        return Err(Error::validation("loss needs at least one pair"));
    }
    let mut grads = Gradients::zeros_like(params);
    let mut scores = Vec::with_capacity(pairs.len());
    let mut labels = Vec::with_capacity(pairs.len());
    let t = pairs.len() as f64;
    for &(enc, y) in pairs {
        let fwd = params.forward(enc)?;
        scores.push(coherence_from_pre(fwd.output_pre));
        labels.push(y);
        let d = loss_grad_wrt_pre(fwd.output_pre, y, alpha) / t;
        grads.accumulate(params, enc, &fwd.hidden_pre, d);
    }
    let loss = weighted_bce_loss(&scores, &labels, alpha)?;
    Ok((loss, grads))
}
