//! K-fold cross-validation of prior standard deviations.

use rayon::prelude::*;

use super::{fit_map, likelihood, FitOptions};
use crate::dataset::{fold_assignment, GameDataset};
use crate::error::{Error, Result};
use crate::model::{compile_games, PriorSigma, RatingSpec};

/// Default σ grid, in rating points.
pub const DEFAULT_SIGMA_GRID: [f64; 6] = [10.0, 20.0, 40.0, 80.0, 160.0, 320.0];

#[derive(Debug, Clone, PartialEq)]
pub struct CvSelection {
    pub sigma: f64,
    /// Pooled mean held-out loss for each grid value, ascending σ.
    pub losses: Vec<(f64, f64)>,
    /// Held-out games involving a model absent from their training folds.
    pub unseen_games: usize,
}

/// Chooses the prior σ of `term` from `grid` by minimizing the mean held-out
/// logistic loss over `folds` folds. Ties go to the smaller σ.
///
/// Other terms still marked `"cv"` are held at the grid median while tuning.
pub fn tune_prior_sigma(
    dataset: &GameDataset,
    spec: &RatingSpec,
    term: &str,
    grid: &[f64],
    folds: usize,
    seed: u64,
    options: &FitOptions,
) -> Result<CvSelection> {
    if grid.is_empty() || grid.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
        return Err(Error::invalid("grid", "must be a non-empty list of positive values"));
    }
    if folds < 2 {
        return Err(Error::invalid("folds", "must be at least 2"));
    }
    if dataset.len() < folds {
        return Err(Error::invalid("folds", format!("{folds} folds need at least {folds} games")));
    }
    match spec.term_sigma(term) {
        Some(PriorSigma::Cv) => {}
        Some(_) => return Err(Error::invalid("term", format!("term `{term}` does not have prior_sigma \"cv\""))),
        None => return Err(Error::invalid("term", format!("no term named `{term}`"))),
    }

    let mut sorted = grid.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let median = sorted[(sorted.len() - 1) / 2];
    let mut base_spec = spec.clone();
    for other in spec.cv_terms() {
        if other != term {
            base_spec = base_spec.with_term_sigma(&other, PriorSigma::Fixed(median))?;
        }
    }

    let parts = fold_assignment(dataset.len(), folds, seed);
    let splits: Vec<(GameDataset, GameDataset)> = (0..folds)
        .map(|k| {
            let train: Vec<usize> = (0..folds).filter(|&j| j != k).flat_map(|j| parts[j].iter().copied()).collect();
            let mut train = train;
            train.sort_unstable();
            (dataset.select(&train), dataset.select(&parts[k]))
        })
        .collect();

    let jobs: Vec<(usize, usize)> = (0..sorted.len()).flat_map(|s| (0..folds).map(move |k| (s, k))).collect();
    let results: Vec<(f64, usize, usize)> = jobs
        .par_iter()
        .map(|&(s, k)| {
            let spec_s = base_spec.with_term_sigma(term, PriorSigma::Fixed(sorted[s]))?;
            let (train, test) = &splits[k];
            let fit = fit_map(train, &spec_s, options)?;
            let compiled = compile_games(test, &spec_s, &fit.index)?;
            let lik = likelihood(&compiled, fit.params.as_slice(), spec_s.scale);
            Ok((lik.loss, test.len(), compiled.unseen_games))
        })
        .collect::<Result<_>>()?;

    let mut losses = Vec::with_capacity(sorted.len());
    let mut unseen_games = 0;
    for (s, &sigma) in sorted.iter().enumerate() {
        let mut total = 0.0;
        let mut count = 0;
        for k in 0..folds {
            let (loss, n, unseen) = results[s * folds + k];
            total += loss;
            count += n;
            if s == 0 {
                unseen_games += unseen;
            }
        }
        losses.push((sigma, total / count as f64));
    }
    if unseen_games > 0 {
        log::warn!("{unseen_games} held-out games involve models unseen in their training folds");
    }
    let mut best = losses[0];
    for &(sigma, loss) in &losses[1..] {
        if loss < best.1 {
            best = (sigma, loss);
        }
    }
    Ok(CvSelection {
        sigma: best.0,
        losses,
        unseen_games,
    })
}

/// Resolves every `"cv"` prior of `spec`, one term at a time in spec order.
pub fn tune_priors(
    dataset: &GameDataset,
    spec: &RatingSpec,
    grid: &[f64],
    folds: usize,
    seed: u64,
    options: &FitOptions,
) -> Result<(RatingSpec, Vec<(String, CvSelection)>)> {
    let mut current = spec.clone();
    let mut selections = Vec::new();
    for term in spec.cv_terms() {
        let sel = tune_prior_sigma(dataset, &current, &term, grid, folds, seed, options)?;
        current = current.with_term_sigma(&term, PriorSigma::Fixed(sel.sigma))?;
        selections.push((term, sel));
    }
    Ok((current, selections))
}
