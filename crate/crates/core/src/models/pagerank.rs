//! One-step random walk over the event similarity graph, mixed with frequency.
//!
//! Transitions are a softmax over cosine similarities with self-loops
//! excluded, the walk starts uniform, and the one-step visit probabilities are
//! interpolated with the document's L1-normalized lemma frequencies.

use serde::{Deserialize, Serialize};

use super::{BlockGrad, Differentiable, ModelMeta, ParamBlock, RowAccumulator};
use crate::corpus::Document;
use crate::embeddings::EmbeddingTable;
use crate::features::frequency_feature;
use crate::kernels::cosine_with_grad;

pub const MIN_TEMPERATURE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageRankModel {
    pub temperature: f64,
    pub combine_lambda: f64,
    pub event_table: EmbeddingTable,
    #[serde(default)]
    pub meta: ModelMeta,
}

/// Intermediate quantities shared by forward and backward.
struct Walk {
    cos: Vec<Vec<f64>>,
    trans: Vec<Vec<f64>>,
    freq: Vec<f64>,
    visit: Vec<f64>,
}

impl PageRankModel {
    pub fn new(event_table: EmbeddingTable, temperature: f64, combine_lambda: f64) -> Self {
        PageRankModel {
            temperature,
            combine_lambda,
            event_table,
            meta: ModelMeta::default(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.temperature.is_finite()
            && self.combine_lambda.is_finite()
            && self.event_table.vectors.iter().all(|x| x.is_finite())
    }

    fn walk(&self, doc: &Document) -> Walk {
        let n = doc.events.len();
        let rows: Vec<&[f64]> = doc
            .events
            .iter()
            .map(|e| self.event_table.lookup(&e.head_lemma))
            .collect();
        let mut cos = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i + 1..n {
                let c = crate::embeddings::cosine_unchecked(rows[i], rows[j]);
                cos[i][j] = c;
                cos[j][i] = c;
            }
        }
        let mut trans = vec![vec![0.0; n]; n];
        for i in 0..n {
            let max = (0..n)
                .filter(|&j| j != i)
                .map(|j| cos[i][j] / self.temperature)
                .fold(f64::NEG_INFINITY, f64::max);
            let mut z = 0.0;
            for j in (0..n).filter(|&j| j != i) {
                let e = (cos[i][j] / self.temperature - max).exp();
                trans[i][j] = e;
                z += e;
            }
            if z > 0.0 {
                trans[i].iter_mut().for_each(|p| *p /= z);
            }
        }
        let mut visit = vec![0.0; n];
        if n > 1 {
            for row in &trans {
                for (v, p) in visit.iter_mut().zip(row) {
                    *v += p / n as f64;
                }
            }
        }
        let counts: Vec<f64> = (0..n).map(|i| frequency_feature(doc, i)).collect();
        let total: f64 = counts.iter().sum();
        let freq = counts.iter().map(|c| c / total).collect();
        Walk {
            cos,
            trans,
            freq,
            visit,
        }
    }

    /// One-step visit probabilities (sums to 1 when the document has two or more events).
    pub fn visit_distribution(&self, doc: &Document) -> Vec<f64> {
        self.walk(doc).visit
    }
}

pub fn pagerank_scores(model: &PageRankModel, doc: &Document) -> Vec<f64> {
    if doc.events.is_empty() {
        return Vec::new();
    }
    let w = model.walk(doc);
    let lambda = model.combine_lambda;
    if doc.events.len() == 1 {
        return vec![lambda * w.freq[0]];
    }
    w.freq
        .iter()
        .zip(&w.visit)
        .map(|(f, v)| lambda * f + (1.0 - lambda) * v)
        .collect()
}

impl Differentiable for PageRankModel {
    fn score(&self, doc: &Document) -> Vec<f64> {
        pagerank_scores(self, doc)
    }

    fn backward(&self, doc: &Document, dscores: &[f64]) -> Vec<BlockGrad> {
        let n = doc.events.len();
        if n == 0 {
            return vec![BlockGrad::Zero, BlockGrad::Zero, BlockGrad::Zero];
        }
        let w = self.walk(doc);
        let lambda = self.combine_lambda;
        if n == 1 {
            let dl = dscores[0] * w.freq[0];
            return vec![BlockGrad::Zero, BlockGrad::Dense(vec![dl]), BlockGrad::Zero];
        }
        let t = self.temperature;
        let mut d_lambda = 0.0;
        for i in 0..n {
            d_lambda += dscores[i] * (w.freq[i] - w.visit[i]);
        }
        // d score_j / d P_ij = (1 - lambda) / n
        let d_trans: Vec<f64> = dscores
            .iter()
            .map(|g| (1.0 - lambda) * g / n as f64)
            .collect();
        let mut d_cos = vec![vec![0.0; n]; n];
        let mut d_temp = 0.0;
        for i in 0..n {
            let avg: f64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| w.trans[i][j] * d_trans[j])
                .sum();
            for j in (0..n).filter(|&j| j != i) {
                let dz = w.trans[i][j] * (d_trans[j] - avg);
                d_cos[i][j] = dz / t;
                d_temp -= dz * w.cos[i][j] / (t * t);
            }
        }
        let emb = if self.event_table.trainable {
            let mut acc = RowAccumulator::new(self.event_table.dim);
            let idx: Vec<usize> = doc
                .events
                .iter()
                .map(|e| self.event_table.index_of(&e.head_lemma))
                .collect();
            for i in 0..n {
                for j in i + 1..n {
                    let g = d_cos[i][j] + d_cos[j][i];
                    if g == 0.0 {
                        continue;
                    }
                    let (_, du, dv) =
                        cosine_with_grad(self.event_table.row(idx[i]), self.event_table.row(idx[j]));
                    acc.add_scaled(idx[i], g, &du);
                    acc.add_scaled(idx[j], g, &dv);
                }
            }
            acc.finish()
        } else {
            BlockGrad::Zero
        };
        vec![
            BlockGrad::Dense(vec![d_temp]),
            BlockGrad::Dense(vec![d_lambda]),
            emb,
        ]
    }

    fn blocks(&self) -> Vec<ParamBlock<'_>> {
        vec![
            ParamBlock {
                name: "temperature",
                values: std::slice::from_ref(&self.temperature),
                trainable: true,
                row_dim: None,
            },
            ParamBlock {
                name: "combine_lambda",
                values: std::slice::from_ref(&self.combine_lambda),
                trainable: true,
                row_dim: None,
            },
            ParamBlock {
                name: "event_embeddings",
                values: &self.event_table.vectors,
                trainable: self.event_table.trainable,
                row_dim: Some(self.event_table.dim),
            },
        ]
    }

    fn blocks_mut(&mut self) -> Vec<&mut [f64]> {
        vec![
            std::slice::from_mut(&mut self.temperature),
            std::slice::from_mut(&mut self.combine_lambda),
            &mut self.event_table.vectors,
        ]
    }

    fn project(&mut self) {
        self.temperature = self.temperature.max(MIN_TEMPERATURE);
        self.combine_lambda = self.combine_lambda.clamp(0.0, 1.0);
    }

    fn freeze_embeddings(&mut self) {
        self.event_table.trainable = false;
    }
}
