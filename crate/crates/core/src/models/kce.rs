//! Kernel-based centrality estimation.
//!
//! An event's score pools its cosine similarities to the other events (and,
//! in the full variant, to the document's entities) through a Gaussian kernel
//! bank, weights the pooled soft counts linearly, and optionally adds the
//! linear feature term:
//!
//! ```text
//! f(ev_i) = w_v . Phi(ev_i, events \ {ev_i}) + w_e . Phi(ev_i, entities) + w_f . F(ev_i) + b
//! ```

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{BlockGrad, Differentiable, ModelMeta, ParamBlock, RowAccumulator};
use crate::corpus::Document;
use crate::embeddings::EmbeddingTable;
use crate::features::{FeatureExtractor, FeatureScaler, NUM_FEATURES};
use crate::kernels::{cosine_with_grad, kernel_features_unchecked, KernelBank};
use crate::numeric::Real;
use crate::rng::seeded;

/// Which parameter groups participate. Disabled groups are held at zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KceVariant {
    /// Event kernels only (no entity kernels, no features).
    EventsOnly,
    /// Event kernels plus features.
    EventsFeatures,
    Full,
}

impl KceVariant {
    pub fn uses_entities(self) -> bool {
        self == KceVariant::Full
    }

    pub fn uses_features(self) -> bool {
        self != KceVariant::EventsOnly
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ScoreOptions {
    /// Zero every feature input except frequency (used by the intrusion test).
    pub relational_only: bool,
}

pub(crate) const BLOCK_W_V: usize = 0;
pub(crate) const BLOCK_W_E: usize = 1;
pub(crate) const BLOCK_W_F: usize = 2;
pub(crate) const BLOCK_BIAS: usize = 3;
pub(crate) const BLOCK_EVENT_EMB: usize = 4;
pub(crate) const BLOCK_ENTITY_EMB: usize = 5;

/// A single parameter coordinate shifted by `delta` during a forward pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Perturbation {
    pub block: usize,
    pub index: usize,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KceModel {
    pub variant: KceVariant,
    pub bank: KernelBank,
    pub w_v: Vec<f64>,
    pub w_e: Vec<f64>,
    pub w_f: Vec<f64>,
    pub bias: Vec<f64>,
    pub event_table: EmbeddingTable,
    pub entity_table: EmbeddingTable,
    pub features: FeatureExtractor,
    pub scaler: FeatureScaler,
    #[serde(default)]
    pub meta: ModelMeta,
}

const INIT_SCALE: f64 = 0.01;

impl KceModel {
    /// Linear weights start uniform in `[-0.01, 0.01]` (zero for the groups
    /// the variant disables); the bias starts at zero.
    pub fn new(
        variant: KceVariant,
        bank: KernelBank,
        event_table: EmbeddingTable,
        entity_table: EmbeddingTable,
        features: FeatureExtractor,
        scaler: FeatureScaler,
        seed: u64,
    ) -> Self {
        let mut rng = seeded(seed);
        let k = bank.len();
        let mut draw = |n: usize, on: bool| -> Vec<f64> {
            (0..n)
                .map(|_| {
                    let x = rng.gen_range(-INIT_SCALE..=INIT_SCALE);
                    if on {
                        x
                    } else {
                        0.0
                    }
                })
                .collect()
        };
        let w_v = draw(k, true);
        let w_e = draw(k, variant.uses_entities());
        let w_f = draw(NUM_FEATURES, variant.uses_features());
        KceModel {
            variant,
            bank,
            w_v,
            w_e,
            w_f,
            bias: vec![0.0],
            event_table,
            entity_table,
            features,
            scaler,
            meta: ModelMeta {
                seed: Some(seed),
                ..ModelMeta::default()
            },
        }
    }

    pub fn block_trainable(&self, block: usize) -> bool {
        match block {
            BLOCK_W_V | BLOCK_BIAS => true,
            BLOCK_W_E => self.variant.uses_entities(),
            BLOCK_W_F => self.variant.uses_features(),
            BLOCK_EVENT_EMB => self.event_table.trainable,
            BLOCK_ENTITY_EMB => self.entity_table.trainable && self.variant.uses_entities(),
            _ => false,
        }
    }

    /// Freezes or unfreezes both embedding tables.
    pub fn set_embeddings_trainable(&mut self, trainable: bool) {
        self.event_table.trainable = trainable;
        self.entity_table.trainable = trainable;
    }

    /// Enforces the variant's zeroed parameter groups.
    pub fn apply_variant(&mut self) {
        if !self.variant.uses_entities() {
            self.w_e.iter_mut().for_each(|w| *w = 0.0);
        }
        if !self.variant.uses_features() {
            self.w_f.iter_mut().for_each(|w| *w = 0.0);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.w_v
            .iter()
            .chain(&self.w_e)
            .chain(&self.w_f)
            .chain(&self.bias)
            .chain(&self.event_table.vectors)
            .chain(&self.entity_table.vectors)
            .all(|x| x.is_finite())
    }

    /// Standardized feature rows fed to `w_f`.
    pub fn feature_inputs(&self, doc: &Document, opts: ScoreOptions) -> Vec<[f64; NUM_FEATURES]> {
        if !self.variant.uses_features() {
            return vec![[0.0; NUM_FEATURES]; doc.events.len()];
        }
        self.features
            .document_features(doc)
            .iter()
            .map(|f| {
                let mut x = self.scaler.apply_array(f.to_array());
                if opts.relational_only {
                    x[1..].iter_mut().for_each(|v| *v = 0.0);
                }
                x
            })
            .collect()
    }

    pub fn score_with(&self, doc: &Document, opts: ScoreOptions) -> Vec<f64> {
        self.forward::<f64>(doc, opts, None)
    }

    /// Forward pass in any scalar type, optionally with one parameter shifted.
    pub(crate) fn forward<T: Real>(
        &self,
        doc: &Document,
        opts: ScoreOptions,
        perturb: Option<Perturbation>,
    ) -> Vec<T> {
        let lift = |block: usize, index: usize, v: f64| -> T {
            match perturb {
                Some(p) if p.block == block && p.index == index => {
                    T::from_f64(v) + T::from_f64(p.delta)
                }
                _ => T::from_f64(v),
            }
        };
        let lift_row = |block: usize, table: &EmbeddingTable, row: usize| -> Vec<T> {
            let dim = table.dim;
            (0..dim)
                .map(|c| lift(block, row * dim + c, table.vectors[row * dim + c]))
                .collect()
        };
        let lift_vec = |block: usize, w: &[f64]| -> Vec<T> {
            w.iter().enumerate().map(|(i, &x)| lift(block, i, x)).collect()
        };

        let ev_rows: Vec<Vec<T>> = doc
            .events
            .iter()
            .map(|e| {
                lift_row(
                    BLOCK_EVENT_EMB,
                    &self.event_table,
                    self.event_table.index_of(&e.head_lemma),
                )
            })
            .collect();
        let en_rows: Vec<Vec<T>> = if self.variant.uses_entities() {
            doc.entities
                .iter()
                .map(|e| {
                    lift_row(
                        BLOCK_ENTITY_EMB,
                        &self.entity_table,
                        self.entity_table.index_of(&e.entity_key),
                    )
                })
                .collect()
        } else {
            Vec::new()
        };
        let w_v = lift_vec(BLOCK_W_V, &self.w_v);
        let w_e = lift_vec(BLOCK_W_E, &self.w_e);
        let w_f = lift_vec(BLOCK_W_F, &self.w_f);
        let bias = lift(BLOCK_BIAS, 0, self.bias[0]);
        let feats = self.feature_inputs(doc, opts);

        let linear = |w: &[T], phi: &[T]| -> T {
            let mut s = T::zero();
            for (&a, &b) in w.iter().zip(phi) {
                s += a * b;
            }
            s
        };

        (0..doc.events.len())
            .map(|i| {
                let others: Vec<&[T]> = ev_rows
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, r)| r.as_slice())
                    .collect();
                let phi_v = kernel_features_unchecked(&ev_rows[i], &others, &self.bank);
                let mut s = linear(&w_v, &phi_v) + bias;
                if self.variant.uses_entities() {
                    let phi_e = kernel_features_unchecked(&ev_rows[i], &en_rows, &self.bank);
                    s += linear(&w_e, &phi_e);
                }
                if self.variant.uses_features() {
                    let f: Vec<T> = feats[i].iter().map(|&x| T::from_f64(x)).collect();
                    s += linear(&w_f, &f);
                }
                s
            })
            .collect()
    }

    /// Backward pass for `sum_i dscores[i] * score_i` under `opts`.
    pub fn backward_with(&self, doc: &Document, dscores: &[f64], opts: ScoreOptions) -> Vec<BlockGrad> {
        let n = doc.events.len();
        let k = self.bank.len();
        let ev_idx: Vec<usize> = doc
            .events
            .iter()
            .map(|e| self.event_table.index_of(&e.head_lemma))
            .collect();
        let en_idx: Vec<usize> = doc
            .entities
            .iter()
            .map(|e| self.entity_table.index_of(&e.entity_key))
            .collect();
        let train_ev = self.block_trainable(BLOCK_EVENT_EMB);
        let train_en = self.block_trainable(BLOCK_ENTITY_EMB);

        let mut phi_v = vec![vec![0.0; k]; n];
        let mut ev_acc = RowAccumulator::new(self.event_table.dim);
        for i in 0..n {
            for j in i + 1..n {
                let (s, du, dv) = cosine_with_grad(
                    self.event_table.row(ev_idx[i]),
                    self.event_table.row(ev_idx[j]),
                );
                self.bank.accumulate(s, &mut phi_v[i]);
                self.bank.accumulate(s, &mut phi_v[j]);
                if train_ev {
                    let g = (dscores[i] + dscores[j]) * self.bank.dcos(s, &self.w_v);
                    if g != 0.0 {
                        ev_acc.add_scaled(ev_idx[i], g, &du);
                        ev_acc.add_scaled(ev_idx[j], g, &dv);
                    }
                }
            }
        }

        let mut dw_v = vec![0.0; k];
        for i in 0..n {
            for kk in 0..k {
                dw_v[kk] += dscores[i] * phi_v[i][kk];
            }
        }

        let mut dw_e = vec![0.0; k];
        let mut en_acc = RowAccumulator::new(self.entity_table.dim);
        if self.variant.uses_entities() {
            for i in 0..n {
                let mut phi_e = vec![0.0; k];
                for &r in &en_idx {
                    let (s, du, dv) =
                        cosine_with_grad(self.event_table.row(ev_idx[i]), self.entity_table.row(r));
                    self.bank.accumulate(s, &mut phi_e);
                    if train_ev || train_en {
                        let g = dscores[i] * self.bank.dcos(s, &self.w_e);
                        if g != 0.0 {
                            if train_ev {
                                ev_acc.add_scaled(ev_idx[i], g, &du);
                            }
                            if train_en {
                                en_acc.add_scaled(r, g, &dv);
                            }
                        }
                    }
                }
                for kk in 0..k {
                    dw_e[kk] += dscores[i] * phi_e[kk];
                }
            }
        }

        let mut dw_f = vec![0.0; NUM_FEATURES];
        if self.variant.uses_features() {
            for (f, &g) in self.feature_inputs(doc, opts).iter().zip(dscores) {
                for kk in 0..NUM_FEATURES {
                    dw_f[kk] += g * f[kk];
                }
            }
        }
        let db: f64 = dscores.iter().sum();

        let dense_or_zero = |on: bool, g: Vec<f64>| {
            if on {
                BlockGrad::Dense(g)
            } else {
                BlockGrad::Zero
            }
        };
        vec![
            BlockGrad::Dense(dw_v),
            dense_or_zero(self.variant.uses_entities(), dw_e),
            dense_or_zero(self.variant.uses_features(), dw_f),
            BlockGrad::Dense(vec![db]),
            if train_ev { ev_acc.finish() } else { BlockGrad::Zero },
            if train_en { en_acc.finish() } else { BlockGrad::Zero },
        ]
    }
}

/// Scores every event of `doc`.
pub fn score_kce(model: &KceModel, doc: &Document) -> Vec<f64> {
    model.score_with(doc, ScoreOptions::default())
}

impl Differentiable for KceModel {
    fn score(&self, doc: &Document) -> Vec<f64> {
        score_kce(self, doc)
    }

    fn backward(&self, doc: &Document, dscores: &[f64]) -> Vec<BlockGrad> {
        self.backward_with(doc, dscores, ScoreOptions::default())
    }

    fn blocks(&self) -> Vec<ParamBlock<'_>> {
        vec![
            ParamBlock {
                name: "w_v",
                values: &self.w_v,
                trainable: self.block_trainable(BLOCK_W_V),
                row_dim: None,
            },
            ParamBlock {
                name: "w_e",
                values: &self.w_e,
                trainable: self.block_trainable(BLOCK_W_E),
                row_dim: None,
            },
            ParamBlock {
                name: "w_f",
                values: &self.w_f,
                trainable: self.block_trainable(BLOCK_W_F),
                row_dim: None,
            },
            ParamBlock {
                name: "bias",
                values: &self.bias,
                trainable: true,
                row_dim: None,
            },
            ParamBlock {
                name: "event_embeddings",
                values: &self.event_table.vectors,
                trainable: self.block_trainable(BLOCK_EVENT_EMB),
                row_dim: Some(self.event_table.dim),
            },
            ParamBlock {
                name: "entity_embeddings",
                values: &self.entity_table.vectors,
                trainable: self.block_trainable(BLOCK_ENTITY_EMB),
                row_dim: Some(self.entity_table.dim),
            },
        ]
    }

    fn blocks_mut(&mut self) -> Vec<&mut [f64]> {
        vec![
            &mut self.w_v,
            &mut self.w_e,
            &mut self.w_f,
            &mut self.bias,
            &mut self.event_table.vectors,
            &mut self.entity_table.vectors,
        ]
    }

    fn project(&mut self) {
        self.apply_variant();
    }

    fn freeze_embeddings(&mut self) {
        self.set_embeddings_trainable(false);
    }
}
