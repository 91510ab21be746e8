//! Linear learning-to-rank over the five standardized event features.

use serde::{Deserialize, Serialize};

use super::{dot5, BlockGrad, Differentiable, ModelMeta, ParamBlock};
use crate::corpus::Document;
use crate::features::{FeatureExtractor, FeatureScaler, NUM_FEATURES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LetorModel {
    pub w_f: Vec<f64>,
    pub bias: Vec<f64>,
    pub scaler: FeatureScaler,
    pub features: FeatureExtractor,
    #[serde(default)]
    pub meta: ModelMeta,
}

impl LetorModel {
    pub fn new(features: FeatureExtractor, scaler: FeatureScaler) -> Self {
        LetorModel {
            w_f: vec![0.0; NUM_FEATURES],
            bias: vec![0.0],
            scaler,
            features,
            meta: ModelMeta::default(),
        }
    }

    pub fn scaled_features(&self, doc: &Document) -> Vec<[f64; NUM_FEATURES]> {
        self.features
            .document_features(doc)
            .iter()
            .map(|f| self.scaler.apply_array(f.to_array()))
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.w_f.iter().chain(&self.bias).all(|x| x.is_finite())
    }
}

/// `w_f . scale(F(ev, doc)) + b` for every event.
pub fn score_letor(model: &LetorModel, doc: &Document) -> Vec<f64> {
    model
        .scaled_features(doc)
        .iter()
        .map(|f| dot5(&model.w_f, f) + model.bias[0])
        .collect()
}

impl Differentiable for LetorModel {
    fn score(&self, doc: &Document) -> Vec<f64> {
        score_letor(self, doc)
    }

    fn backward(&self, doc: &Document, dscores: &[f64]) -> Vec<BlockGrad> {
        let feats = self.scaled_features(doc);
        let mut dw = vec![0.0; NUM_FEATURES];
        let mut db = 0.0;
        for (f, &g) in feats.iter().zip(dscores) {
            for k in 0..NUM_FEATURES {
                dw[k] += g * f[k];
            }
            db += g;
        }
        vec![BlockGrad::Dense(dw), BlockGrad::Dense(vec![db])]
    }

    fn blocks(&self) -> Vec<ParamBlock<'_>> {
        vec![
            ParamBlock {
                name: "w_f",
                values: &self.w_f,
                trainable: true,
                row_dim: None,
            },
            ParamBlock {
                name: "bias",
                values: &self.bias,
                trainable: true,
                row_dim: None,
            },
        ]
    }

    fn blocks_mut(&mut self) -> Vec<&mut [f64]> {
        vec![&mut self.w_f, &mut self.bias]
    }
}
