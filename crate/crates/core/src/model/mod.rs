//! Rating model: spec, parameter layout and per-game evaluation.
//!
//! The rating of model `m` in game `g` is
//!
//! ```text
//! R_m(g) = base[m] + Σ_k alpha[k] · 1[g passes filter k] · f_k(g, side of m)
//!                  + Σ_t beta[m, t] · 1[tag_expr_t(g)]
//! ```
//!
//! and the second model wins with probability
//! `1 / (1 + exp(-(R_b(g) - R_a(g)) / scale))`.

mod design;
mod index;
mod spec;
mod tag_expr;

pub use design::{compile_games, CompiledGames, GameRow};
pub use index::{build_index, ParamIndex, ParamKind, Params};
pub use spec::{BasePrior, ModifierTerm, PriorSigma, RatingSpec, SharedTerm};
pub use tag_expr::TagExpr;

use crate::dataset::Game;
use crate::error::{Error, Result};

/// Logistic function, evaluated without overflow for large `|x|`.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Effective rating of `model` in `game`.
pub fn rating_of(model: &str, game: &Game, params: &Params, index: &ParamIndex, spec: &RatingSpec) -> Result<f64> {
    let side = game
        .side_of(model)
        .ok_or_else(|| Error::invalid("model", format!("`{model}` does not play in this game")))?;
    let m = index.model_position(model).ok_or_else(|| Error::UnknownModel(model.to_string()))?;
    let theta = params.as_slice();
    let mut rating = theta[index.base(m)];
    for (k, term) in spec.shared.iter().enumerate() {
        if !term.feature.applies(game) {
            continue;
        }
        let values = term.feature.values(game).ok_or_else(|| Error::Feature {
            game: 0,
            feature: term.feature.name.clone(),
            message: "value missing for an applicable term".into(),
        })?;
        rating += theta[index.alpha(k)] * values.get(side);
    }
    for (t, term) in spec.modifiers.iter().enumerate() {
        if term.tag_expr.matches(game) {
            rating += theta[index.beta(m, t)];
        }
    }
    Ok(rating)
}

/// Probability that `model_b` beats `model_a`.
pub fn win_probability(game: &Game, params: &Params, index: &ParamIndex, spec: &RatingSpec) -> Result<f64> {
    let ra = rating_of(&game.model_a, game, params, index, spec)?;
    let rb = rating_of(&game.model_b, game, params, index, spec)?;
    Ok(sigmoid((rb - ra) / spec.scale))
}
