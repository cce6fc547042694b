//! Maximum a-posteriori fitting, held-out evaluation and prior tuning.

mod cv;
mod objective;
pub mod optimizer;

pub use cv::{tune_prior_sigma, tune_priors, CvSelection, DEFAULT_SIGMA_GRID};
pub use objective::{gradient, likelihood, objective, LikelihoodSum, Problem, PROB_FLOOR};
pub use optimizer::Method;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::GameDataset;
use crate::error::{Error, Result};
use crate::model::{build_index, compile_games, ParamIndex, Params, RatingSpec};

#[derive(Debug, Clone, PartialEq)]
pub enum InitialParams {
    PriorMeans,
    Given(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Convergence threshold on the largest absolute gradient entry.
    pub gradient_tolerance: f64,
    pub initial_params: InitialParams,
    pub method: Method,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iterations: 1000,
            gradient_tolerance: 1e-7,
            initial_params: InitialParams::PriorMeans,
            method: Method::default(),
        }
    }
}

impl FitOptions {
    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.gradient_tolerance = tol;
        self
    }

    pub fn with_initial(mut self, params: Vec<f64>) -> Self {
        self.initial_params = InitialParams::Given(params);
        self
    }

    fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::invalid("max_iterations", "must be at least 1"));
        }
        if !(self.gradient_tolerance > 0.0) {
            return Err(Error::invalid("gradient_tolerance", "must be positive"));
        }
        Ok(())
    }
}

/// Fitted parameters plus the metadata of the run that produced them.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub params: Params,
    pub index: ParamIndex,
    pub spec: RatingSpec,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub gradient_max_abs: f64,
    /// Games whose probability had to be clamped at the final point.
    pub clamped: usize,
    /// Objective after every accepted iteration.
    pub trace: Vec<f64>,
}

impl FitResult {
    pub fn base(&self, model: &str) -> Option<f64> {
        self.params.base(&self.index, model)
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.params.get(&self.index, name)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let record = FitRecord {
            objective: self.objective,
            iterations: self.iterations,
            converged: self.converged,
            gradient_max_abs: self.gradient_max_abs,
            params: self.index.names().into_iter().zip(self.params.0.iter().copied()).collect(),
            spec: self.spec.clone(),
        };
        serde_json::to_value(record).expect("fit serialization cannot fail")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(&self.to_json())?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn from_json_str(text: &str) -> Result<FitResult> {
        let record: FitRecord = serde_json::from_str(text).map_err(|e| Error::invalid("fit", e.to_string()))?;
        record.spec.validate()?;
        let roster: Vec<&str> = record.params.keys().filter_map(|k| k.strip_prefix("base:")).collect();
        let index = build_index(&record.spec, roster)?;
        let mut values = vec![f64::NAN; index.len()];
        for (name, v) in &record.params {
            let i = index
                .offset_of(name)
                .ok_or_else(|| Error::invalid("params", format!("unknown parameter `{name}`")))?;
            values[i] = *v;
        }
        if let Some(i) = values.iter().position(|v| v.is_nan()) {
            return Err(Error::invalid("params", format!("missing parameter `{}`", index.name(i))));
        }
        Ok(FitResult {
            params: Params(values),
            index,
            spec: record.spec,
            objective: record.objective,
            iterations: record.iterations,
            converged: record.converged,
            gradient_max_abs: record.gradient_max_abs,
            clamped: 0,
            trace: Vec::new(),
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<FitResult> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }
}

#[derive(Serialize, Deserialize)]
struct FitRecord {
    objective: f64,
    iterations: usize,
    converged: bool,
    #[serde(default)]
    gradient_max_abs: f64,
    params: BTreeMap<String, f64>,
    spec: RatingSpec,
}

/// Fits `spec` to `dataset`, with one base rating per model in the dataset.
pub fn fit_map(dataset: &GameDataset, spec: &RatingSpec, options: &FitOptions) -> Result<FitResult> {
    if dataset.is_empty() {
        return Err(Error::Empty("cannot fit an empty dataset".into()));
    }
    let index = build_index(spec, dataset.roster().iter().cloned())?;
    fit_with_index(dataset, spec, index, options)
}

/// Fits with an explicit layout. Models in `index` that play no game stay at
/// their prior means; games with models outside `index` use prior-mean ratings
/// for them.
pub fn fit_with_index(dataset: &GameDataset, spec: &RatingSpec, index: ParamIndex, options: &FitOptions) -> Result<FitResult> {
    spec.validate()?;
    spec.ensure_resolved()?;
    options.validate()?;
    if !index.matches_spec(spec) {
        return Err(Error::invalid("index", "layout was built for a different spec"));
    }
    let problem = Problem::new(dataset, spec, &index)?;
    let x0 = match &options.initial_params {
        InitialParams::PriorMeans => Params::prior_means(spec, &index).0,
        InitialParams::Given(v) => {
            if v.len() != index.len() || v.iter().any(|x| !x.is_finite()) {
                return Err(Error::invalid("initial_params", format!("expected {} finite values", index.len())));
            }
            v.clone()
        }
    };
    let settings = optimizer::Settings {
        method: options.method,
        max_iterations: options.max_iterations,
        gradient_tolerance: options.gradient_tolerance,
        initial_step: spec.scale / 40.0,
    };
    let eval = |x: &[f64], g: &mut [f64]| problem.value_and_gradient(x, g).0;
    let min = optimizer::minimize(&eval, x0, &settings);
    let (_, clamped) = problem.value(&min.x);
    if clamped > 0 {
        log::warn!("{clamped} game probabilities clamped to [{PROB_FLOOR}, 1 - {PROB_FLOOR}]");
    }
    if !min.converged {
        log::warn!(
            "fit stopped after {} iterations with max |gradient| {:.3e}",
            min.iterations,
            optimizer::max_abs(&min.gradient)
        );
    }
    Ok(FitResult {
        params: Params(min.x),
        index,
        spec: spec.clone(),
        objective: min.value,
        iterations: min.iterations,
        converged: min.converged,
        gradient_max_abs: optimizer::max_abs(&min.gradient),
        clamped,
        trace: min.trace,
    })
}

/// Mean per-game logistic loss (no prior) of `fit` on `test`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeldOut {
    pub mean_loss: f64,
    /// Test games with a model the fit has never seen, scored at the prior mean.
    pub unseen_games: usize,
    pub clamped: usize,
}

pub fn held_out(fit: &FitResult, test: &GameDataset) -> Result<HeldOut> {
    if test.is_empty() {
        return Err(Error::Empty("test set has no games".into()));
    }
    let games = compile_games(test, &fit.spec, &fit.index)?;
    let lik = likelihood(&games, fit.params.as_slice(), fit.spec.scale);
    Ok(HeldOut {
        mean_loss: lik.loss / test.len() as f64,
        unseen_games: games.unseen_games,
        clamped: lik.clamped,
    })
}

pub fn held_out_loss(fit: &FitResult, test: &GameDataset) -> Result<f64> {
    Ok(held_out(fit, test)?.mean_loss)
}
