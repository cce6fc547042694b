//! Penalized logistic loss and its gradient.
//!
//! ```text
//! L(θ) = -Σ_g [ s_g ln p_g + (1 - s_g) ln(1 - p_g) ] + Σ_i (θ_i - μ_i)² / (2 σ_i²)
//! ```
//!
//! with `p_g` the probability that `model_b` wins and `s_g ∈ {0, ½, 1}` its
//! score. Per game, `dL/dΔ = (p_g - s_g) / scale` where `Δ = R_b - R_a`.

use rayon::prelude::*;

use crate::dataset::GameDataset;
use crate::error::Result;
use crate::model::{compile_games, CompiledGames, GameRow, ParamIndex, Params, RatingSpec};

/// Smallest probability allowed inside a logarithm.
pub const PROB_FLOOR: f64 = 1e-15;

/// Games per reduction chunk. Fixed so results do not depend on thread count.
const CHUNK: usize = 2048;

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Loss of one game at logit `z`, its derivative in `z`, and whether a
/// probability had to be clamped.
#[inline]
fn game_loss(z: f64, score: f64) -> (f64, f64, bool) {
    let ln_floor = PROB_FLOOR.ln();
    let ln_p = -softplus(-z);
    let ln_q = -softplus(z);
    let p = crate::model::sigmoid(z);
    let mut loss = 0.0;
    let mut dz = 0.0;
    let mut clamped = false;
    if score > 0.0 {
        if ln_p < ln_floor {
            loss -= score * ln_floor;
            clamped = true;
        } else {
            loss -= score * ln_p;
            dz -= score * (1.0 - p);
        }
    }
    if score < 1.0 {
        let w = 1.0 - score;
        if ln_q < ln_floor {
            loss -= w * ln_floor;
            clamped = true;
        } else {
            loss -= w * ln_q;
            dz += w * p;
        }
    }
    (loss, dz, clamped)
}

/// Neumaier compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Likelihood part over a set of compiled games.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LikelihoodSum {
    pub loss: f64,
    pub clamped: usize,
}

struct ChunkResult {
    loss: KahanSum,
    clamped: usize,
    grad: Option<Vec<f64>>,
}

fn reduce_chunks(games: &CompiledGames, theta: &[f64], scale: f64, want_grad: bool) -> (LikelihoodSum, Option<Vec<f64>>) {
    let n = games.len();
    let chunks: Vec<ChunkResult> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut loss = KahanSum::default();
            let mut clamped = 0;
            let mut grad = want_grad.then(|| vec![0.0; theta.len()]);
            for i in c * CHUNK..((c + 1) * CHUNK).min(n) {
                let row: GameRow<'_> = games.row(i);
                let z = row.delta(theta) / scale;
                let (l, dz, was_clamped) = game_loss(z, row.score);
                loss.add(l);
                clamped += was_clamped as usize;
                if let Some(g) = grad.as_mut() {
                    let w = dz / scale;
                    for (&col, &coef) in row.cols.iter().zip(row.coefs) {
                        g[col as usize] += w * coef;
                    }
                }
            }
            ChunkResult { loss, clamped, grad }
        })
        .collect();

    let mut total = KahanSum::default();
    let mut clamped = 0;
    let mut grad = want_grad.then(|| vec![0.0; theta.len()]);
    for chunk in chunks {
        total.add(chunk.loss.value());
        clamped += chunk.clamped;
        if let (Some(g), Some(cg)) = (grad.as_mut(), chunk.grad) {
            for (a, b) in g.iter_mut().zip(cg) {
                *a += b;
            }
        }
    }
    (
        LikelihoodSum {
            loss: total.value(),
            clamped,
        },
        grad,
    )
}

/// Likelihood (no prior) of `games` at `theta`.
pub fn likelihood(games: &CompiledGames, theta: &[f64], scale: f64) -> LikelihoodSum {
    reduce_chunks(games, theta, scale, false).0
}

/// A compiled dataset plus priors: everything needed to evaluate the
/// penalized objective.
#[derive(Debug, Clone)]
pub struct Problem {
    pub games: CompiledGames,
    pub prior_mean: Vec<f64>,
    pub prior_precision: Vec<f64>,
    pub scale: f64,
}

impl Problem {
    pub fn new(dataset: &GameDataset, spec: &RatingSpec, index: &ParamIndex) -> Result<Self> {
        let (prior_mean, prior_precision) = index.priors(spec)?;
        Ok(Problem {
            games: compile_games(dataset, spec, index)?,
            prior_mean,
            prior_precision,
            scale: spec.scale,
        })
    }

    pub fn dim(&self) -> usize {
        self.prior_mean.len()
    }

    fn prior(&self, theta: &[f64], grad: Option<&mut [f64]>) -> f64 {
        let mut pen = KahanSum::default();
        for i in 0..theta.len() {
            let d = theta[i] - self.prior_mean[i];
            pen.add(0.5 * self.prior_precision[i] * d * d);
        }
        if let Some(g) = grad {
            for i in 0..theta.len() {
                g[i] += self.prior_precision[i] * (theta[i] - self.prior_mean[i]);
            }
        }
        pen.value()
    }

    /// Objective value and clamp count.
    pub fn value(&self, theta: &[f64]) -> (f64, usize) {
        let lik = likelihood(&self.games, theta, self.scale);
        (lik.loss + self.prior(theta, None), lik.clamped)
    }

    /// Objective value, writing the gradient into `grad`.
    pub fn value_and_gradient(&self, theta: &[f64], grad: &mut [f64]) -> (f64, usize) {
        let (lik, g) = reduce_chunks(&self.games, theta, self.scale, true);
        grad.copy_from_slice(&g.expect("gradient requested"));
        let pen = self.prior(theta, Some(grad));
        (lik.loss + pen, lik.clamped)
    }
}

/// Penalized negative log-likelihood of `dataset` at `params`.
pub fn objective(params: &Params, dataset: &GameDataset, spec: &RatingSpec, index: &ParamIndex) -> Result<f64> {
    Ok(Problem::new(dataset, spec, index)?.value(params.as_slice()).0)
}

/// Analytic gradient of [`objective`].
pub fn gradient(params: &Params, dataset: &GameDataset, spec: &RatingSpec, index: &ParamIndex) -> Result<Vec<f64>> {
    let problem = Problem::new(dataset, spec, index)?;
    let mut g = vec![0.0; problem.dim()];
    problem.value_and_gradient(params.as_slice(), &mut g);
    Ok(g)
}
