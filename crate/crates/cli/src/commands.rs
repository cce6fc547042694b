use std::fmt;
use std::path::Path;

use polyfit_core::analysis::{
    bias_report as build_bias_report, bootstrap_uncertainty, build_leaderboard, sample_efficiency_curve, Anchor,
    CurveOptions,
};
use polyfit_core::dataset::{
    convert_benchmark as convert, load_benchmark_csv, load_games_with, model_names, save_games, simulate_games,
    ConversionOptions, FeatureSampler, GroundTruth, LoadOptions, Pairing, SimulationConfig, Stratum, TruthDraw,
};
use polyfit_core::features::{extract_features, FeatureDef, FeatureSource};
use polyfit_core::fit::{fit_map, tune_priors as tune, FitOptions};
use polyfit_core::{FitResult, GameDataset, Judge, RatingSpec};

use crate::{BiasArgs, Common, ConvertArgs, CurveArgs, FitArgs, Format, LeaderboardArgs, SimulateArgs, TuneArgs};

pub enum Status {
    Done,
    NotConverged,
}

#[derive(Debug)]
pub enum CliError {
    Io(String),
    Invalid(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Invalid(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Io(m) | CliError::Invalid(m) => f.write_str(m),
        }
    }
}

impl From<polyfit_core::Error> for CliError {
    fn from(e: polyfit_core::Error) -> Self {
        if e.is_io() {
            CliError::Io(e.to_string())
        } else {
            CliError::Invalid(e.to_string())
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn invalid(message: impl Into<String>) -> CliError {
    CliError::Invalid(message.into())
}

/// Per-command seed: FNV-1a of the command name plus the user seed.
fn derive_seed(command: &str, seed: u64) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in command.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h.wrapping_add(seed)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
    }
    std::fs::write(path, contents).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn fit_options(common: &Common) -> FitOptions {
    FitOptions {
        max_iterations: common.max_iter,
        gradient_tolerance: common.tolerance,
        ..FitOptions::default()
    }
}

fn load(path: &Path, common: &Common) -> Result<GameDataset> {
    let loaded = load_games_with(path, LoadOptions { skip_invalid: common.skip_invalid })?;
    if loaded.skipped > 0 {
        log::warn!("{}: skipped {} invalid line(s)", path.display(), loaded.skipped);
    }
    Ok(loaded.dataset)
}

/// Computes built-in text features the specs rely on. Position needs no
/// extraction and external values are read as stored.
fn prepare(games: &GameDataset, specs: &[&RatingSpec]) -> Result<GameDataset> {
    let mut defs: Vec<FeatureDef> = Vec::new();
    for spec in specs {
        for term in &spec.shared {
            let def = &term.feature;
            if matches!(def.source, FeatureSource::Builtin(_)) && !def.is_position() && !defs.contains(def) {
                defs.push(def.clone());
            }
        }
    }
    if defs.is_empty() {
        return Ok(games.clone());
    }
    Ok(extract_features(games, &defs)?)
}

fn resolve(games: &GameDataset, spec: RatingSpec, cv: &crate::CvArgs, seed: u64, options: &FitOptions) -> Result<RatingSpec> {
    if spec.cv_terms().is_empty() {
        return Ok(spec);
    }
    let (resolved, selections) = tune(games, &spec, &cv.grid, cv.folds, seed, options)?;
    for (term, sel) in &selections {
        log::info!("prior sigma for `{term}`: {}", sel.sigma);
    }
    Ok(resolved)
}

pub fn fit(args: FitArgs) -> Result<Status> {
    let spec = RatingSpec::load(&args.spec)?;
    let games = prepare(&load(&args.games, &args.common)?, &[&spec])?;
    let options = fit_options(&args.common);
    let spec = resolve(&games, spec, &args.cv, derive_seed("fit", args.common.seed), &options)?;
    let fit = fit_map(&games, &spec, &options)?;
    if fit.clamped > 0 {
        log::warn!("{} game probabilities clamped at the solution", fit.clamped);
    }
    log::info!("objective {} after {} iterations", fit.objective, fit.iterations);
    fit.save(&args.out)?;
    Ok(if fit.converged { Status::Done } else { Status::NotConverged })
}

/// Bootstrap standard deviations laid out like `fit`'s parameters.
fn uncertainties(fit: &FitResult, games: &GameDataset, resamples: usize, seed: u64, options: &FitOptions) -> Result<Vec<f64>> {
    if resamples == 0 {
        return Ok(vec![0.0; fit.index.len()]);
    }
    let boot = bootstrap_uncertainty(games, &fit.spec, options, resamples, seed)?;
    if boot.non_converged > 0 {
        log::warn!("{} bootstrap refits did not converge", boot.non_converged);
    }
    Ok(fit
        .index
        .names()
        .iter()
        .map(|name| boot.index.offset_of(name).map_or(0.0, |i| boot.std[i]))
        .collect())
}

fn parse_anchor(text: &str) -> Result<Anchor> {
    let (model, rating) = text
        .rsplit_once('=')
        .ok_or_else(|| invalid(format!("anchor `{text}`: expected MODEL=RATING")))?;
    let rating: f64 = rating
        .trim()
        .parse()
        .map_err(|_| invalid(format!("anchor `{text}`: `{rating}` is not a number")))?;
    Ok(Anchor {
        model: model.trim().to_string(),
        rating,
    })
}

pub fn leaderboard(args: LeaderboardArgs) -> Result<Status> {
    let fit = FitResult::load(&args.fit)?;
    let anchor = args.anchor.as_deref().map(parse_anchor).transpose()?;
    let games = prepare(&load(&args.games, &args.common)?, &[&fit.spec])?;
    let seed = derive_seed("leaderboard", args.common.seed);
    let stds = uncertainties(&fit, &games, args.resamples, seed, &fit_options(&args.common))?;
    let board = build_leaderboard(&fit, &stds, anchor.as_ref())?;
    let text = match args.format {
        Format::Csv => board.to_csv(),
        Format::Md => board.to_markdown(),
    };
    write_file(&args.out, &text)?;
    Ok(Status::Done)
}

pub fn bias_report(args: BiasArgs) -> Result<Status> {
    let fit = FitResult::load(&args.fit)?;
    if fit.spec.shared.is_empty() {
        return Err(invalid("the fit has no shared bias terms"));
    }
    let games = prepare(&load(&args.games, &args.common)?, &[&fit.spec])?;
    let seed = derive_seed("bias-report", args.common.seed);
    let stds = uncertainties(&fit, &games, args.resamples, seed, &fit_options(&args.common))?;
    let report = build_bias_report(&fit, &games, Some(&stds))?;
    let text = match args.format {
        Format::Csv => report.to_csv(),
        Format::Md => report.to_markdown(),
    };
    write_file(&args.out, &text)?;
    Ok(Status::Done)
}

pub fn convert_benchmark(args: ConvertArgs) -> Result<Status> {
    let records = load_benchmark_csv(&args.csv)?;
    let mut options = ConversionOptions::new(args.name, derive_seed("convert-benchmark", args.seed));
    options.fixed_positions = args.fixed_positions;
    if let Some(per_record) = args.pairs_per_question {
        if per_record == 0 {
            return Err(invalid("--pairs-per-question must be at least 1"));
        }
        options.pairing = Pairing::RandomPairs { per_record };
    }
    let conversion = convert(&records, &options)?;
    if conversion.skipped_records > 0 {
        log::warn!("skipped {} question(s) with fewer than two models", conversion.skipped_records);
    }
    save_games(&args.out, &conversion.dataset)?;
    Ok(Status::Done)
}

fn parse_assignment(text: &str) -> Result<(String, f64)> {
    let (name, value) = text
        .rsplit_once('=')
        .ok_or_else(|| invalid(format!("`{text}`: expected NAME=VALUE")))?;
    let value = value
        .parse()
        .map_err(|_| invalid(format!("`{text}`: `{value}` is not a number")))?;
    Ok((name.to_string(), value))
}

fn parse_stratum(text: &str) -> Result<Stratum> {
    let (left, weight) = text
        .rsplit_once(':')
        .ok_or_else(|| invalid(format!("stratum `{text}`: expected [JUDGE@]TAGS:WEIGHT")))?;
    let weight: f64 = weight
        .parse()
        .map_err(|_| invalid(format!("stratum `{text}`: `{weight}` is not a number")))?;
    let (judge, tags) = match left.split_once('@') {
        Some((j, tags)) => (Judge::parse(j).ok_or_else(|| invalid(format!("stratum `{text}`: unknown judge `{j}`")))?, tags),
        None => (Judge::Human, left),
    };
    let tags: Vec<&str> = tags.split(',').map(str::trim).filter(|t| !t.is_empty()).collect();
    Ok(Stratum::new(&tags, judge, weight))
}

fn parse_sampler(text: &str) -> Result<(String, FeatureSampler)> {
    let bad = || invalid(format!("feature `{text}`: expected NAME=normal:MEAN:STD, NAME=uniform:LOW:HIGH or NAME=constant:VALUE"));
    let (name, rule) = text.split_once('=').ok_or_else(bad)?;
    let parts: Vec<&str> = rule.split(':').collect();
    let nums: Vec<f64> = parts[1..].iter().map(|p| p.parse()).collect::<std::result::Result<_, _>>().map_err(|_| bad())?;
    let sampler = match (parts[0], nums.as_slice()) {
        ("normal", &[mean, std]) if std >= 0.0 => FeatureSampler::Normal { mean, std },
        ("uniform", &[low, high]) if low < high => FeatureSampler::Uniform { low, high },
        ("constant", &[v]) => FeatureSampler::Constant(v),
        _ => return Err(bad()),
    };
    Ok((name.to_string(), sampler))
}

pub fn simulate(args: SimulateArgs) -> Result<Status> {
    if args.models < 2 {
        return Err(invalid("--models must be at least 2"));
    }
    let spec = match &args.spec {
        Some(path) => RatingSpec::load(path)?,
        None => RatingSpec::univariate(),
    };
    let roster = model_names("model_", args.models);
    let draw = TruthDraw {
        base_mean: args.base_mean,
        base_std: args.base_std,
        modifier_std: args.modifier_std,
    };
    let seed = derive_seed("simulate", args.seed);
    let mut truth = GroundTruth::sample(spec, &roster, draw, seed)?;
    for assignment in &args.set {
        let (name, value) = parse_assignment(assignment)?;
        truth.set(&name, value)?;
    }
    let mut config = SimulationConfig::new(args.n, seed.wrapping_add(1)).with_draw_rate(args.draw_rate);
    if !args.strata.is_empty() {
        config = config.with_strata(args.strata.iter().map(|s| parse_stratum(s)).collect::<Result<_>>()?);
    }
    for f in &args.features {
        let (name, sampler) = parse_sampler(f)?;
        config = config.with_feature(name, sampler);
    }
    let games = simulate_games(&truth, &roster, &config)?;
    save_games(&args.out, &games)?;
    if let Some(path) = &args.truth_out {
        let record = FitResult {
            params: truth.params.clone(),
            index: truth.index.clone(),
            spec: truth.spec.clone(),
            objective: 0.0,
            iterations: 0,
            converged: true,
            gradient_max_abs: 0.0,
            clamped: 0,
            trace: Vec::new(),
        };
        record.save(path)?;
    }
    Ok(Status::Done)
}

pub fn tune_priors(args: TuneArgs) -> Result<Status> {
    let spec = RatingSpec::load(&args.spec)?;
    if spec.cv_terms().is_empty() {
        return Err(invalid("the spec has no term with prior_sigma \"cv\""));
    }
    let games = prepare(&load(&args.games, &args.common)?, &[&spec])?;
    let seed = derive_seed("tune-priors", args.common.seed);
    let (resolved, selections) = tune(&games, &spec, &args.cv.grid, args.cv.folds, seed, &fit_options(&args.common))?;
    write_file(&args.out, &(resolved.to_json_pretty() + "\n"))?;
    if let Some(path) = &args.losses {
        let mut csv = String::from("term,sigma,mean_loss,selected\n");
        for (term, sel) in &selections {
            for (sigma, loss) in &sel.losses {
                csv.push_str(&format!("{term},{sigma},{loss},{}\n", *sigma == sel.sigma));
            }
        }
        write_file(path, &csv)?;
    }
    Ok(Status::Done)
}

pub fn curve(args: CurveArgs) -> Result<Status> {
    let multi = RatingSpec::load(&args.spec_multi)?;
    let uni = RatingSpec::load(&args.spec_uni)?;
    let specs = [&multi, &uni];
    let task = prepare(&load(&args.task, &args.common)?, &specs)?;
    let background = prepare(&load(&args.background, &args.common)?, &specs)?;
    let test = prepare(&load(&args.test, &args.common)?, &specs)?;
    let options = CurveOptions {
        fit: fit_options(&args.common),
        cv_grid: args.cv.grid.clone(),
        cv_folds: args.cv.folds,
        seed: derive_seed("curve", args.common.seed),
    };
    let curve = sample_efficiency_curve(&task, &background, &multi, &uni, &args.budgets, &test, &options)?;
    if let Some(&last) = args.budgets.last() {
        match curve.horizontal_gain(last) {
            Some(g) => log::info!(
                "efficiency gain at {last}: {:.1}% (univariate needs {:.0}{})",
                g.gain * 100.0,
                g.univariate_budget,
                if g.extrapolated { ", extrapolated" } else { "" }
            ),
            None => log::info!("univariate curve does not reach the multivariate loss at {last}"),
        }
    }
    let text = match args.format {
        Format::Csv => curve.to_csv(),
        Format::Md => curve.to_markdown(),
    };
    write_file(&args.out, &text)?;
    Ok(Status::Done)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_differ_by_command() {
        assert_ne!(derive_seed("fit", 0), derive_seed("simulate", 0));
        assert_eq!(derive_seed("fit", 5), derive_seed("fit", 0).wrapping_add(5));
    }

    #[test]
    fn parses_strata_and_samplers() {
        let s = parse_stratum("llm@code,hard:0.25").unwrap();
        assert_eq!(s.judge, Judge::Llm);
        assert_eq!(s.tags, vec!["code", "hard"]);
        assert_eq!(s.weight, 0.25);
        assert!(parse_stratum(":1").unwrap().tags.is_empty());
        assert!(parse_stratum("robot@x:1").is_err());
        assert_eq!(parse_sampler("len=normal:6:0.5").unwrap().1, FeatureSampler::Normal { mean: 6.0, std: 0.5 });
        assert_eq!(parse_sampler("c=constant:2").unwrap().1, FeatureSampler::Constant(2.0));
        assert!(parse_sampler("len=normal:6").is_err());
        assert!(parse_sampler("len=uniform:2:1").is_err());
    }

    #[test]
    fn parses_anchor() {
        let a = parse_anchor("mixtral=1114").unwrap();
        assert_eq!((a.model.as_str(), a.rating), ("mixtral", 1114.0));
        assert!(parse_anchor("mixtral").is_err());
    }
}
