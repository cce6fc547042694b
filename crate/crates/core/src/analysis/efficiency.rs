//! Held-out loss as a function of the number of task games, comparing a
//! multivariate fit that also sees background games against a univariate fit
//! on task games alone.

use std::fmt::Write as _;

use crate::dataset::GameDataset;
use crate::error::{Error, Result};
use crate::fit::{fit_map, held_out_loss, tune_priors, FitOptions, DEFAULT_SIGMA_GRID};
use crate::model::RatingSpec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub budget: usize,
    pub normalized_loss_multivariate: f64,
    pub normalized_loss_univariate: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EfficiencyCurve {
    pub points: Vec<CurvePoint>,
    /// Held-out loss of the reference fit on the test split itself.
    pub oracle_loss: f64,
    /// Held-out loss when every model has the same rating (`ln 2` for
    /// decisive games).
    pub equal_rating_loss: f64,
}

#[derive(Debug, Clone)]
pub struct CurveOptions {
    pub fit: FitOptions,
    /// Grid and fold count used to resolve `"cv"` priors at every budget.
    pub cv_grid: Vec<f64>,
    pub cv_folds: usize,
    pub seed: u64,
}

impl Default for CurveOptions {
    fn default() -> Self {
        CurveOptions {
            fit: FitOptions::default(),
            cv_grid: DEFAULT_SIGMA_GRID.to_vec(),
            cv_folds: 5,
            seed: 0,
        }
    }
}

fn resolve(train: &GameDataset, spec: &RatingSpec, options: &CurveOptions, salt: u64) -> Result<RatingSpec> {
    if spec.cv_terms().is_empty() {
        return Ok(spec.clone());
    }
    let seed = options.seed.wrapping_add(salt);
    Ok(tune_priors(train, spec, &options.cv_grid, options.cv_folds, seed, &options.fit)?.0)
}

/// For each budget `b`: the multivariate fit uses `background` plus the first
/// `b` task games, the univariate fit only those `b` task games. Both losses
/// are reported relative to a univariate fit on `test` itself.
///
/// `"cv"` priors are resolved by cross-validation on each training set.
pub fn sample_efficiency_curve(
    task_games: &GameDataset,
    background: &GameDataset,
    spec_multi: &RatingSpec,
    spec_uni: &RatingSpec,
    budgets: &[usize],
    test: &GameDataset,
    options: &CurveOptions,
) -> Result<EfficiencyCurve> {
    if budgets.is_empty() {
        return Err(Error::invalid("budgets", "must not be empty"));
    }
    if budgets[0] == 0 || budgets.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("budgets", "must be positive and strictly increasing"));
    }
    if let Some(&b) = budgets.iter().find(|&&b| b > task_games.len()) {
        return Err(Error::invalid("budgets", format!("budget {b} exceeds the {} available task games", task_games.len())));
    }
    if test.is_empty() {
        return Err(Error::Empty("test set has no games".into()));
    }

    let oracle_spec = resolve(test, spec_uni, options, u64::MAX)?;
    let oracle = fit_map(test, &oracle_spec, &options.fit)?;
    let oracle_loss = held_out_loss(&oracle, test)?;
    let mut equal = oracle.clone();
    let mean = oracle.spec.base_prior.mean;
    equal.params.0.iter_mut().enumerate().for_each(|(i, v)| {
        *v = if i < equal.index.models().len() { mean } else { 0.0 };
    });
    let equal_rating_loss = held_out_loss(&equal, test)?;

    let mut points = Vec::with_capacity(budgets.len());
    for &b in budgets {
        let first: Vec<usize> = (0..b).collect();
        let task = task_games.select(&first);

        let multi_train = background.concat(&task);
        let multi_spec = resolve(&multi_train, spec_multi, options, b as u64)?;
        let multi = fit_map(&multi_train, &multi_spec, &options.fit)?;

        let uni_spec = resolve(&task, spec_uni, options, b as u64)?;
        let uni = fit_map(&task, &uni_spec, &options.fit)?;

        let point = CurvePoint {
            budget: b,
            normalized_loss_multivariate: held_out_loss(&multi, test)? - oracle_loss,
            normalized_loss_univariate: held_out_loss(&uni, test)? - oracle_loss,
        };
        log::info!(
            "budget {b}: multivariate {:.5}, univariate {:.5}",
            point.normalized_loss_multivariate,
            point.normalized_loss_univariate
        );
        points.push(point);
    }
    Ok(EfficiencyCurve {
        points,
        oracle_loss,
        equal_rating_loss,
    })
}

/// Relative saving in task games at `budget`: if the univariate curve first
/// reaches the multivariate loss at budget `u`, the gain is `(u - budget) / u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gain {
    pub gain: f64,
    pub univariate_budget: f64,
    /// The univariate budget lies beyond the measured curve and was
    /// extrapolated with a power law through its last two points.
    pub extrapolated: bool,
}

impl EfficiencyCurve {
    /// Horizontal efficiency gain at one of the curve's budgets. The
    /// univariate curve is interpolated linearly in log-budget.
    pub fn horizontal_gain(&self, budget: usize) -> Option<Gain> {
        let pos = self.points.iter().position(|p| p.budget == budget)?;
        let target = self.points[pos].normalized_loss_multivariate;
        let uni: Vec<(f64, f64)> = self
            .points
            .iter()
            .map(|p| ((p.budget as f64).ln(), p.normalized_loss_univariate))
            .collect();
        let b = budget as f64;
        let gain_at = |u: f64, extrapolated: bool| Gain {
            gain: ((u - b) / u).clamp(0.0, 1.0 - f64::EPSILON),
            univariate_budget: u,
            extrapolated,
        };
        if uni[0].1 <= target {
            return Some(gain_at(uni[0].0.exp(), false));
        }
        for w in uni.windows(2) {
            let ((x0, y0), (x1, y1)) = (w[0], w[1]);
            if y1 <= target {
                let t = if y0 == y1 { 1.0 } else { (y0 - target) / (y0 - y1) };
                return Some(gain_at((x0 + t * (x1 - x0)).exp(), false));
            }
        }
        // Beyond the last point: fit loss = c · budget^k through the last two.
        let n = uni.len();
        if n < 2 || target <= 0.0 {
            return None;
        }
        let ((x0, y0), (x1, y1)) = (uni[n - 2], uni[n - 1]);
        if y0 <= 0.0 || y1 <= 0.0 || y1 >= y0 {
            return None;
        }
        let k = (y1.ln() - y0.ln()) / (x1 - x0);
        let x = x1 + (target.ln() - y1.ln()) / k;
        Some(gain_at(x.exp(), true))
    }

    /// `budget,normalized_loss_multivariate,normalized_loss_univariate`
    pub fn to_csv(&self) -> String {
        let mut out = String::from("budget,normalized_loss_multivariate,normalized_loss_univariate\n");
        for p in &self.points {
            writeln!(out, "{},{},{}", p.budget, p.normalized_loss_multivariate, p.normalized_loss_univariate).unwrap();
        }
        out
    }

    pub fn to_markdown(&self) -> String {
        let cells: Vec<[String; 3]> = self
            .points
            .iter()
            .map(|p| {
                [
                    p.budget.to_string(),
                    format!("{:.5}", p.normalized_loss_multivariate),
                    format!("{:.5}", p.normalized_loss_univariate),
                ]
            })
            .collect();
        super::markdown_table(&["Budget", "Multivariate", "Univariate"], &cells)
    }
}
