use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sparsecast_core::{Error, Result};

use crate::adam::Adam;
use crate::models::{Cnn1d, Lstm, Mlp, Network, ParamLayout, RegressionTree};
use crate::rolling::Forecaster;
use crate::SeriesDataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Tree,
    Mlp,
    Cnn,
    Lstm,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::Tree, ModelKind::Mlp, ModelKind::Cnn, ModelKind::Lstm];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Tree => "tree",
            ModelKind::Mlp => "mlp",
            ModelKind::Cnn => "cnn",
            ModelKind::Lstm => "lstm",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Argument(format!("unknown model kind {s:?} (expected tree, mlp, cnn or lstm)")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            batch_size: 32,
            learning_rate: 1e-3,
            beta1: 0.5,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Argument(m.to_owned()));
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if self.batch_size == 0 {
            return bad("batch size must be at least 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning rate must be positive");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("Adam betas must lie in [0, 1)");
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return bad("Adam epsilon must be positive");
        }
        Ok(())
    }
}

/// Layer sizes of each model family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Architecture {
    pub mlp_hidden: [usize; 2],
    pub cnn_filters: usize,
    pub cnn_width: usize,
    pub cnn_dense: usize,
    pub lstm_hidden: usize,
    pub tree_max_depth: usize,
    pub tree_min_leaf: usize,
}

impl Default for Architecture {
    fn default() -> Self {
        Self {
            mlp_hidden: [64, 64],
            cnn_filters: 8,
            cnn_width: 3,
            cnn_dense: 32,
            lstm_hidden: 32,
            tree_max_depth: 8,
            tree_min_leaf: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Model {
    Tree(RegressionTree),
    Mlp(Mlp),
    Cnn(Cnn1d),
    Lstm(Lstm),
}

impl Model {
    fn network(&self) -> Option<&dyn Network> {
        match self {
            Model::Tree(_) => None,
            Model::Mlp(m) => Some(m),
            Model::Cnn(m) => Some(m),
            Model::Lstm(m) => Some(m),
        }
    }

    fn network_mut(&mut self) -> Option<&mut dyn Network> {
        match self {
            Model::Tree(_) => None,
            Model::Mlp(m) => Some(m),
            Model::Cnn(m) => Some(m),
            Model::Lstm(m) => Some(m),
        }
    }

    fn predict(&self, x: &[f64]) -> f64 {
        match self {
            Model::Tree(t) => t.predict(x),
            Model::Mlp(m) => m.forward(x),
            Model::Cnn(m) => m.forward(x),
            Model::Lstm(m) => m.forward(x),
        }
    }
}

/// A trained forecaster together with the dataset geometry it expects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Predictor {
    kind: ModelKind,
    rank: usize,
    window: usize,
    architecture: Architecture,
    train_config: TrainConfig,
    loss_history: Vec<f64>,
    model: Model,
}

/// On-disk form. The layout table is written for readers; loading checks it
/// against the model it describes.
#[derive(Serialize, Deserialize)]
struct Envelope {
    kind: ModelKind,
    rank: usize,
    window: usize,
    layout: ParamLayout,
    predictor: Predictor,
}

impl Predictor {
    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn feature_dim(&self) -> usize {
        2 * self.rank + self.window
    }

    pub fn train_config(&self) -> &TrainConfig {
        &self.train_config
    }

    pub fn architecture(&self) -> &Architecture {
        &self.architecture
    }

    /// Mean squared training error per epoch (one entry for the tree).
    pub fn loss_history(&self) -> &[f64] {
        &self.loss_history
    }

    /// Parameter shape table; empty for the tree.
    pub fn layout(&self) -> ParamLayout {
        self.model.network().map(|n| n.layout().clone()).unwrap_or_default()
    }

    pub fn predict(&self, features: &[f64]) -> Result<f64> {
        if features.len() != self.feature_dim() {
            return Err(Error::Dimension(format!(
                "model expects {} features, got {}",
                self.feature_dim(),
                features.len()
            )));
        }
        Ok(self.model.predict(features))
    }

    pub fn to_json(&self) -> Result<String> {
        let env = Envelope {
            kind: self.kind,
            rank: self.rank,
            window: self.window,
            layout: self.layout(),
            predictor: self.clone(),
        };
        serde_json::to_string_pretty(&env).map_err(|e| Error::Argument(format!("cannot encode model: {e}")))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let env: Envelope = serde_json::from_str(s).map_err(|e| Error::Parse {
            line: e.line(),
            message: e.to_string(),
        })?;
        let p = env.predictor;
        let model_kind = match &p.model {
            Model::Tree(_) => ModelKind::Tree,
            Model::Mlp(_) => ModelKind::Mlp,
            Model::Cnn(_) => ModelKind::Cnn,
            Model::Lstm(_) => ModelKind::Lstm,
        };
        if env.kind != p.kind || model_kind != p.kind || env.rank != p.rank || env.window != p.window {
            return Err(Error::Argument("model envelope header disagrees with its payload".into()));
        }
        if let Some(net) = p.model.network() {
            if net.layout() != &env.layout || net.layout().len() != net.params().len() {
                return Err(Error::Argument("model parameter table does not match its payload".into()));
            }
            if net.input_dim() != p.feature_dim() {
                return Err(Error::Dimension("model input size does not match rank and window".into()));
            }
        }
        Ok(p)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

impl Forecaster for Predictor {
    fn feature_dim(&self) -> usize {
        Predictor::feature_dim(self)
    }

    fn predict_one(&self, features: &[f64]) -> f64 {
        self.model.predict(features)
    }
}

/// Trains `kind` with the default architecture.
pub fn train(kind: ModelKind, ds: &SeriesDataset, cfg: &TrainConfig) -> Result<Predictor> {
    train_with(kind, ds, cfg, &Architecture::default())
}

/// Fits the tree directly; the networks run Adam on minibatch mean squared
/// error, reshuffling the samples every epoch.
pub fn train_with(
    kind: ModelKind,
    ds: &SeriesDataset,
    cfg: &TrainConfig,
    arch: &Architecture,
) -> Result<Predictor> {
    cfg.validate()?;
    if ds.is_empty() {
        return Err(Error::Argument("cannot train on an empty dataset".into()));
    }
    let dim = ds.feature_dim();
    if let Some(s) = ds.samples.iter().find(|s| s.features.len() != dim) {
        return Err(Error::Dimension(format!(
            "sample ({}, {}, {}) has {} features, expected {dim}",
            s.client,
            s.transaction,
            s.slice,
            s.features.len()
        )));
    }
    if ds
        .samples
        .iter()
        .any(|s| !s.target.is_finite() || s.features.iter().any(|v| !v.is_finite()))
    {
        return Err(Error::Argument("dataset contains non-finite values".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let latent = 2 * ds.rank;
    let mut model = match kind {
        ModelKind::Tree => {
            let x: Vec<Vec<f64>> = ds.samples.iter().map(|s| s.features.clone()).collect();
            let y: Vec<f64> = ds.samples.iter().map(|s| s.target).collect();
            Model::Tree(RegressionTree::fit(&x, &y, arch.tree_max_depth, arch.tree_min_leaf))
        }
        ModelKind::Mlp => Model::Mlp(Mlp::new(dim, arch.mlp_hidden, &mut rng)),
        ModelKind::Cnn => Model::Cnn(Cnn1d::new(
            latent,
            ds.window,
            arch.cnn_filters,
            arch.cnn_width,
            arch.cnn_dense,
            &mut rng,
        )),
        ModelKind::Lstm => Model::Lstm(Lstm::new(latent, ds.window, arch.lstm_hidden, &mut rng)),
    };

    let loss_history = match model.network_mut() {
        None => {
            let mse = ds
                .samples
                .iter()
                .map(|s| (model.predict(&s.features) - s.target).powi(2))
                .sum::<f64>()
                / ds.len() as f64;
            vec![mse]
        }
        Some(net) => fit_network(net, ds, cfg, &mut rng)?,
    };

    Ok(Predictor {
        kind,
        rank: ds.rank,
        window: ds.window,
        architecture: arch.clone(),
        train_config: cfg.clone(),
        loss_history,
        model,
    })
}

fn fit_network(
    net: &mut dyn Network,
    ds: &SeriesDataset,
    cfg: &TrainConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>> {
    let n_params = net.params().len();
    let mut adam = Adam::new(n_params, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon);
    let mut grad = vec![0.0; n_params];
    let mut order: Vec<usize> = (0..ds.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(rng);
        let mut sse = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let scale = 2.0 / batch.len() as f64;
            for &s in batch {
                let sample = &ds.samples[s];
                let t = sample.target;
                net.forward_backward(&sample.features, &mut grad, &mut |y| {
                    sse += (y - t) * (y - t);
                    scale * (y - t)
                });
            }
            adam.step(net.params_mut(), &grad);
        }
        let mse = sse / ds.len() as f64;
        if !mse.is_finite() || net.params().iter().any(|p| !p.is_finite()) {
            return Err(Error::Numerical {
                message: format!("training diverged at epoch {}", epoch + 1),
                trace: None,
            });
        }
        history.push(mse);
    }
    Ok(history)
}
