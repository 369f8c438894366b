use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::encode::{encode_pair, EncoderConfig, PairEncoding};
use super::loss::{loss_grad_wrt_pre, weighted_bce_loss, Gradients};
use super::model::{coherence_from_pre, ModelParameters, DEFAULT_HIDDEN};
use crate::corpus::{DatasetSplit, VulnerabilityRecord};
use crate::error::{Error, Result};
use crate::eval::{metrics_at_k, PredictionRecord, RankedEntry};
use crate::pipeline::Linker;

/// File form of the training settings. Unset fields take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingConfig {
    pub alpha: f64,
    pub batch_size: usize,
    pub lr: f64,
    pub epochs: usize,
    pub seed: u64,
    pub feature_dim: usize,
    pub max_tokens_per_side: usize,
    pub hidden: usize,
    pub weight_decay: f64,
    pub hash_seed: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        let enc = EncoderConfig::default();
        Self {
            alpha: 0.9,
            batch_size: 32,
            lr: 1e-3,
            epochs: 20,
            seed: 42,
            feature_dim: enc.feature_dim,
            max_tokens_per_side: enc.max_tokens_per_side,
            hidden: DEFAULT_HIDDEN,
            weight_decay: 0.01,
            hash_seed: enc.hash_seed,
        }
    }
}

impl TrainingConfig {
    pub fn encoder(&self) -> EncoderConfig {
        EncoderConfig {
            feature_dim: self.feature_dim,
            max_tokens_per_side: self.max_tokens_per_side,
            hash_seed: self.hash_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if self.batch_size == 0 || self.hidden == 0 {
            return Err(Error::Config(
                "batch_size and hidden must be positive".into(),
            ));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!(
                "lr must be positive, got {}",
                self.lr
            )));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::Config("weight_decay must be non-negative".into()));
        }
        self.encoder().validate()
    }
}

/// Adam with decoupled weight decay; biases are not decayed.
#[derive(Debug, Clone)]
pub struct AdamW {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    step: u32,
    m: Moments,
    v: Moments,
}

#[derive(Debug, Clone)]
struct Moments {
    w1: Vec<f64>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: f64,
}

impl Moments {
    fn zeros(p: &ModelParameters) -> Self {
        Self {
            w1: vec![0.0; p.w1.len()],
            b1: vec![0.0; p.b1.len()],
            w2: vec![0.0; p.w2.len()],
            b2: 0.0,
        }
    }
}

struct Hyper {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    c1: f64,
    c2: f64,
}

impl Hyper {
    #[inline]
    fn update(&self, w: &mut f64, m: &mut f64, v: &mut f64, g: f64, decay: f64) {
        *m = self.beta1 * *m + (1.0 - self.beta1) * g;
        *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
        let step = (*m / self.c1) / ((*v / self.c2).sqrt() + self.eps);
        *w -= self.lr * (step + decay * *w);
    }
}

impl AdamW {
    pub fn new(params: &ModelParameters, lr: f64, weight_decay: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay,
            step: 0,
            m: Moments::zeros(params),
            v: Moments::zeros(params),
        }
    }

    pub fn step(&mut self, params: &mut ModelParameters, grads: &Gradients) {
        self.step += 1;
        let t = self.step as i32;
        let h = Hyper {
            lr: self.lr,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.eps,
            c1: 1.0 - self.beta1.powi(t),
            c2: 1.0 - self.beta2.powi(t),
        };
        let wd = self.weight_decay;
        for i in 0..params.w1.len() {
            h.update(
                &mut params.w1[i],
                &mut self.m.w1[i],
                &mut self.v.w1[i],
                grads.w1[i],
                wd,
            );
        }
        for i in 0..params.w2.len() {
            h.update(
                &mut params.w2[i],
                &mut self.m.w2[i],
                &mut self.v.w2[i],
                grads.w2[i],
                wd,
            );
        }
        for i in 0..params.b1.len() {
            h.update(
                &mut params.b1[i],
                &mut self.m.b1[i],
                &mut self.v.b1[i],
                grads.b1[i],
                0.0,
            );
        }
        h.update(
            &mut params.b2,
            &mut self.m.b2,
            &mut self.v.b2,
            grads.b2,
            0.0,
        );
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    /// 0 is the untrained initialisation.
    pub epoch: usize,
    pub train_loss: f64,
    pub validation_loss: Option<f64>,
    pub validation_f1_at_1: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: ModelParameters,
    pub best_epoch: usize,
    pub log: Vec<EpochLog>,
    pub train_pairs: usize,
    pub train_positives: usize,
}

/// One vulnerability's screened pool, encoded once.
struct Pool {
    libraries: Vec<String>,
    encodings: Vec<PairEncoding>,
    labels: Vec<bool>,
    affected: std::collections::BTreeSet<String>,
    id: String,
}

fn build_pools(linker: &Linker, vulns: &[VulnerabilityRecord], enc: &EncoderConfig) -> Vec<Pool> {
    vulns
        .iter()
        .map(|v| {
            let candidates = linker.screen(&v.description);
            let tokens = linker.query_tokens(&v.description);
            let docs = linker.docs();
            let mut pool = Pool {
                libraries: Vec::with_capacity(candidates.len()),
                encodings: Vec::with_capacity(candidates.len()),
                labels: Vec::with_capacity(candidates.len()),
                affected: v.labels.clone(),
                id: v.id.clone(),
            };
            for c in &candidates.entries {
                pool.encodings
                    .push(encode_pair(enc, &tokens, &docs[c.doc as usize], c.score));
                pool.labels.push(v.labels.contains(&c.library));
                pool.libraries.push(c.library.clone());
            }
            pool
        })
        .collect()
}

fn mean_loss(params: &ModelParameters, pools: &[Pool], alpha: f64) -> Result<Option<f64>> {
    let mut scores = Vec::new();
    let mut labels = Vec::new();
    for pool in pools {
        for (e, &y) in pool.encodings.iter().zip(&pool.labels) {
            scores.push(coherence_from_pre(params.forward(e)?.output_pre));
            labels.push(y);
        }
    }
    if scores.is_empty() {
        return Ok(None);
    }
    weighted_bce_loss(&scores, &labels, alpha).map(Some)
}

/// Macro F1@1 of the model's top choice per pool.
fn pool_f1_at_1(params: &ModelParameters, pools: &[Pool]) -> Result<Option<f64>> {
    if pools.is_empty() {
        return Ok(None);
    }
    let mut total = 0.0;
    for pool in pools {
        let mut best: Option<(f64, &str)> = None;
        for (e, lib) in pool.encodings.iter().zip(&pool.libraries) {
            let s = coherence_from_pre(params.forward(e)?.output_pre);
            let better = match best {
                None => true,
                Some((bs, bl)) => s > bs || (s == bs && lib.as_str() < bl),
            };
            if better {
                best = Some((s, lib));
            }
        }
        let ranked = best
            .map(|(score, library)| {
                vec![RankedEntry {
                    library: library.to_string(),
                    score,
                }]
            })
            .unwrap_or_default();
        let rec = PredictionRecord::new(pool.id.clone(), ranked, pool.affected.clone())?;
        total += metrics_at_k(&rec, 1)?.f1;
    }
    Ok(Some(total / pools.len() as f64))
}

fn evaluate_epoch(
    epoch: usize,
    params: &ModelParameters,
    train_loss: f64,
    validation: &[Pool],
    alpha: f64,
) -> Result<EpochLog> {
    Ok(EpochLog {
        epoch,
        train_loss,
        validation_loss: mean_loss(params, validation, alpha)?,
        validation_f1_at_1: pool_f1_at_1(params, validation)?,
    })
}

/// Ranks epochs by validation F1@1, then by lower validation loss.
fn improves(new: &EpochLog, best: &EpochLog) -> bool {
    match (new.validation_f1_at_1, best.validation_f1_at_1) {
        (Some(a), Some(b)) if a != b => a > b,
        (Some(_), Some(_)) => match (new.validation_loss, best.validation_loss) {
            (Some(a), Some(b)) => a < b,
            _ => false,
        },
        // no validation data: keep the latest epoch
        _ => true,
    }
}

/// Trains on every (vulnerability, screened candidate) pair of the training
/// split; a candidate is positive when it is one of the vulnerability's labels.
///
/// Returns the parameters of the epoch with the best validation F1@1.
pub fn train(
    split: &DatasetSplit,
    linker: &Linker,
    config: &TrainingConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    let enc = config.encoder();
    let training = build_pools(linker, &split.training, &enc);
    let validation = build_pools(linker, &split.validation, &enc);

    let pairs: Vec<(usize, usize)> = training
        .iter()
        .enumerate()
        .flat_map(|(p, pool)| (0..pool.encodings.len()).map(move |i| (p, i)))
        .collect();
    if pairs.is_empty() {
        return Err(Error::Config(
            "training set is empty after screening".into(),
        ));
    }
    let train_positives = training
        .iter()
        .map(|p| p.labels.iter().filter(|&&y| y).count())
        .sum();

    let mut params = ModelParameters::init(enc, config.hidden, config.seed);
    let mut opt = AdamW::new(&params, config.lr, config.weight_decay);
    let mut grads = Gradients::zeros_like(&params);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(0x9E37_79B9_7F4A_7C15));
    let mut order = pairs.clone();

    let init_loss = mean_loss(&params, &training, config.alpha)?.unwrap_or(0.0);
    let mut log = vec![evaluate_epoch(
        0,
        &params,
        init_loss,
        &validation,
        config.alpha,
    )?];
    let mut best = (0usize, params.clone(), log[0].clone());

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(config.batch_size) {
            grads.clear(params.hidden);
            let t = batch.len() as f64;
            for &(p, i) in batch {
                let e = &training[p].encodings[i];
                let y = training[p].labels[i];
                let fwd = params.forward(e)?;
                let s = coherence_from_pre(fwd.output_pre);
                loss_sum += weighted_bce_loss(&[s], &[y], config.alpha)?;
                let d = loss_grad_wrt_pre(fwd.output_pre, y, config.alpha) / t;
                grads.accumulate(&params, e, &fwd.hidden_pre, d);
            }
            opt.step(&mut params, &grads);
        }
        params.validate()?;
        let entry = evaluate_epoch(
            epoch,
            &params,
            loss_sum / pairs.len() as f64,
            &validation,
            config.alpha,
        )?;
        if improves(&entry, &best.2) {
            best = (epoch, params.clone(), entry.clone());
        }
        log.push(entry);
    }

    Ok(TrainOutcome {
        params: best.1,
        best_epoch: best.0,
        log,
        train_pairs: pairs.len(),
        train_positives,
    })
}
