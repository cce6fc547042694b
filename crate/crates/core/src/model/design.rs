//! Games compiled into sparse linear rows.
//!
//! The rating difference `R_b(g) - R_a(g)` is linear in the parameters, so each
//! game reduces to a sparse coefficient row plus a constant. The constant
//! carries the prior-mean base rating of models missing from the index.

use super::{ParamIndex, RatingSpec};
use crate::dataset::{Game, GameDataset, Side};
use crate::error::{Error, Result};

/// Borrowed view of one compiled game.
#[derive(Debug, Clone, Copy)]
pub struct GameRow<'a> {
    pub cols: &'a [u32],
    pub coefs: &'a [f64],
    pub offset: f64,
    /// Outcome score of `model_b` (1, 0.5 or 0).
    pub score: f64,
}

impl GameRow<'_> {
    /// `R_b(g) - R_a(g)` in rating points.
    pub fn delta(&self, theta: &[f64]) -> f64 {
        self.cols
            .iter()
            .zip(self.coefs)
            .fold(self.offset, |acc, (&c, &w)| acc + w * theta[c as usize])
    }
}

#[derive(Debug, Clone, Default)]
pub struct CompiledGames {
    starts: Vec<usize>,
    cols: Vec<u32>,
    coefs: Vec<f64>,
    offsets: Vec<f64>,
    scores: Vec<f64>,
    /// Games involving at least one model absent from the index.
    pub unseen_games: usize,
}

impl CompiledGames {
    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn row(&self, i: usize) -> GameRow<'_> {
        let (s, e) = (self.starts[i], self.starts[i + 1]);
        GameRow {
            cols: &self.cols[s..e],
            coefs: &self.coefs[s..e],
            offset: self.offsets[i],
            score: self.scores[i],
        }
    }

    pub fn rows(&self) -> impl Iterator<Item = GameRow<'_>> + '_ {
        (0..self.len()).map(move |i| self.row(i))
    }

    fn push_game(&mut self, i: usize, game: &Game, spec: &RatingSpec, index: &ParamIndex) -> Result<()> {
        let mut offset = 0.0;
        let mut unseen = false;
        for (side, sign) in [(Side::A, -1.0), (Side::B, 1.0)] {
            match index.model_position(game.model(side)) {
                Some(m) => {
                    self.cols.push(index.base(m) as u32);
                    self.coefs.push(sign);
                    for (t, term) in spec.modifiers.iter().enumerate() {
                        if term.tag_expr.matches(game) {
                            self.cols.push(index.beta(m, t) as u32);
                            self.coefs.push(sign);
                        }
                    }
                }
                None => {
                    unseen = true;
                    offset += sign * spec.base_prior.mean;
                }
            }
        }
        for (k, term) in spec.shared.iter().enumerate() {
            if !term.feature.applies(game) {
                continue;
            }
            let values = term.feature.values(game).ok_or_else(|| Error::Feature {
                game: i,
                feature: term.feature.name.clone(),
                message: "value missing for an applicable term".into(),
            })?;
            let d = values.diff();
            if d != 0.0 {
                self.cols.push(index.alpha(k) as u32);
                self.coefs.push(d);
            }
        }
        if unseen {
            self.unseen_games += 1;
        }
        self.offsets.push(offset);
        self.scores.push(game.outcome.score_b());
        self.starts.push(self.cols.len());
        Ok(())
    }
}

/// Compiles every game of `dataset` against `index`.
pub fn compile_games(dataset: &GameDataset, spec: &RatingSpec, index: &ParamIndex) -> Result<CompiledGames> {
    let mut out = CompiledGames {
        starts: vec![0],
        ..Default::default()
    };
    for (i, game) in dataset.games().iter().enumerate() {
        out.push_game(i, game, spec, index)?;
    }
    if out.unseen_games > 0 {
        log::warn!("{} games involve models outside the index; scored at the prior mean", out.unseen_games);
    }
    Ok(out)
}
