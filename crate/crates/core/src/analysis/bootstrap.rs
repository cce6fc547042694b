//! Nonparametric bootstrap of fitted parameters.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dataset::GameDataset;
use crate::error::{Error, Result};
use crate::fit::{fit_with_index, FitOptions};
use crate::model::{build_index, ParamIndex, Params, RatingSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct Bootstrap {
    pub index: ParamIndex,
    /// Sample standard deviation of every parameter across resamples.
    pub std: Vec<f64>,
    /// (resample, model) pairs where the model was absent and its parameters
    /// were held at their prior means.
    pub missing_models: usize,
    pub non_converged: usize,
}

/// Refits on `resamples` datasets of `n` games drawn with replacement; the
/// `i`-th resample uses seed `seed + i`.
///
/// Games are put in a canonical order before resampling, so the result does
/// not depend on the order of the input.
pub fn bootstrap_uncertainty(
    dataset: &GameDataset,
    spec: &RatingSpec,
    options: &FitOptions,
    resamples: usize,
    seed: u64,
) -> Result<Bootstrap> {
    if resamples < 2 {
        return Err(Error::invalid("resamples", "must be at least 2"));
    }
    if dataset.is_empty() {
        return Err(Error::Empty("cannot bootstrap an empty dataset".into()));
    }
    let index = build_index(spec, dataset.roster().iter().cloned())?;
    let mut keyed: Vec<(String, usize)> = dataset
        .games()
        .iter()
        .enumerate()
        .map(|(i, g)| (serde_json::to_string(g).expect("game serialization cannot fail"), i))
        .collect();
    keyed.sort();
    let canonical: Vec<usize> = keyed.into_iter().map(|(_, i)| i).collect();
    let n = canonical.len();
    let prior = Params::prior_means(spec, &index);

    let fits: Vec<(Vec<f64>, usize, bool)> = (0..resamples)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(r as u64));
            let picks: Vec<usize> = (0..n).map(|_| canonical[rng.random_range(0..n)]).collect();
            let sample = dataset.select(&picks);
            let fit = fit_with_index(&sample, spec, index.clone(), options)?;
            let mut values = fit.params.0;
            let mut missing = 0;
            for (m, model) in index.models().iter().enumerate() {
                if sample.roster().contains(model) {
                    continue;
                }
                missing += 1;
                values[index.base(m)] = prior.0[index.base(m)];
                for t in 0..index.modifier_terms().len() {
                    values[index.beta(m, t)] = 0.0;
                }
            }
            Ok((values, missing, fit.converged))
        })
        .collect::<Result<_>>()?;

    let dim = index.len();
    let mut mean = vec![0.0; dim];
    for (v, _, _) in &fits {
        for (m, x) in mean.iter_mut().zip(v) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= resamples as f64);
    let mut var = vec![0.0; dim];
    for (v, _, _) in &fits {
        for ((s, x), m) in var.iter_mut().zip(v).zip(&mean) {
            *s += (x - m) * (x - m);
        }
    }
    let std = var.into_iter().map(|s| (s / (resamples - 1) as f64).sqrt()).collect();
    let missing_models = fits.iter().map(|f| f.1).sum();
    let non_converged = fits.iter().filter(|f| !f.2).count();
    if missing_models > 0 {
        log::warn!("{missing_models} resampled models absent; held at prior means");
    }
    Ok(Bootstrap {
        index,
        std,
        missing_models,
        non_converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Game, Judge, Outcome};

    fn games() -> GameDataset {
        let mut v = Vec::new();
        for i in 0..30 {
            let o = match i % 3 {
                0 => Outcome::AWins,
                1 => Outcome::BWins,
                _ => Outcome::Draw,
            };
            v.push(Game::new(["a", "b", "c"][i % 3], ["b", "c", "a"][i % 3], o, Judge::Human));
        }
        GameDataset::new(v).unwrap()
    }

    #[test]
    fn deterministic_and_order_invariant() {
        let spec = RatingSpec::univariate();
        let ds = games();
        let a = bootstrap_uncertainty(&ds, &spec, &FitOptions::default(), 8, 11).unwrap();
        let b = bootstrap_uncertainty(&ds, &spec, &FitOptions::default(), 8, 11).unwrap();
        assert_eq!(a, b);
        let mut reversed = ds.games().to_vec();
        reversed.reverse();
        let c = bootstrap_uncertainty(&GameDataset::new(reversed).unwrap(), &spec, &FitOptions::default(), 8, 11).unwrap();
        assert_eq!(a.std, c.std);
        assert!(a.std.iter().all(|s| *s > 0.0));
    }

    #[test]
    fn single_game_is_degenerate() {
        let ds = GameDataset::new(vec![Game::new("a", "b", Outcome::AWins, Judge::Human)]).unwrap();
        let bs = bootstrap_uncertainty(&ds, &RatingSpec::univariate(), &FitOptions::default(), 2, 0).unwrap();
        assert_eq!(bs.std, vec![0.0, 0.0]);
    }

    #[test]
    fn missing_models_counted() {
        let mut v = vec![Game::new("a", "b", Outcome::AWins, Judge::Human); 20];
        v.push(Game::new("c", "d", Outcome::AWins, Judge::Human));
        let ds = GameDataset::new(v).unwrap();
        let bs = bootstrap_uncertainty(&ds, &RatingSpec::univariate(), &FitOptions::default(), 10, 0).unwrap();
        assert!(bs.missing_models > 0);
    }

    #[test]
    fn rejects_too_few_resamples() {
        assert!(bootstrap_uncertainty(&games(), &RatingSpec::univariate(), &FitOptions::default(), 1, 0).is_err());
    }
}
