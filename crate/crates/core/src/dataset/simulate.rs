//! Synthetic games drawn from known ratings.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;

use super::game::{Game, GameDataset, Judge, Outcome};
use crate::error::{Error, Result};
use crate::model::{build_index, win_probability, ParamIndex, Params, RatingSpec};

/// Known parameters that generate outcomes.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub spec: RatingSpec,
    pub index: ParamIndex,
    pub params: Params,
}

/// How random ground truth is drawn by [`GroundTruth::sample`].
#[derive(Debug, Clone, Copy)]
pub struct TruthDraw {
    pub base_mean: f64,
    pub base_std: f64,
    /// Standard deviation of every per-model modifier.
    pub modifier_std: f64,
}

impl GroundTruth {
    pub fn new(spec: RatingSpec, index: ParamIndex, params: Params) -> Result<Self> {
        if params.0.len() != index.len() || !index.matches_spec(&spec) {
            return Err(Error::invalid("params", "parameter vector does not match the index"));
        }
        Ok(GroundTruth { spec, index, params })
    }

    /// Gaussian base ratings and modifiers; shared coefficients start at zero
    /// and are set with [`GroundTruth::set`].
    pub fn sample(spec: RatingSpec, roster: &[String], draw: TruthDraw, seed: u64) -> Result<Self> {
        let index = build_index(&spec, roster.iter().cloned())?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base = Normal::new(draw.base_mean, draw.base_std).map_err(|e| Error::invalid("base_std", e.to_string()))?;
        let modifier = Normal::new(0.0, draw.modifier_std).map_err(|e| Error::invalid("modifier_std", e.to_string()))?;
        let mut values = vec![0.0; index.len()];
        for m in 0..index.models().len() {
            values[index.base(m)] = base.sample(&mut rng);
        }
        for m in 0..index.models().len() {
            for t in 0..index.modifier_terms().len() {
                values[index.beta(m, t)] = modifier.sample(&mut rng);
            }
        }
        Ok(GroundTruth {
            spec,
            index,
            params: Params(values),
        })
    }

    /// Sets one parameter by its `base:`/`alpha:`/`beta:` name.
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        let i = self
            .index
            .offset_of(name)
            .ok_or_else(|| Error::invalid("name", format!("unknown parameter `{name}`")))?;
        self.params.0[i] = value;
        Ok(())
    }
}

/// Per-side sampling rule for one feature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FeatureSampler {
    Normal { mean: f64, std: f64 },
    Uniform { low: f64, high: f64 },
    Constant(f64),
}

impl FeatureSampler {
    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match *self {
            FeatureSampler::Normal { mean, std } => mean + std * rng.sample::<f64, _>(rand_distr::StandardNormal),
            FeatureSampler::Uniform { low, high } => rng.random_range(low..high),
            FeatureSampler::Constant(v) => v,
        }
    }
}

/// A class of games: which tags and which judge, with a relative weight.
#[derive(Debug, Clone, PartialEq)]
pub struct Stratum {
    pub tags: Vec<String>,
    pub judge: Judge,
    pub weight: f64,
}

impl Stratum {
    pub fn new(tags: &[&str], judge: Judge, weight: f64) -> Self {
        Stratum {
            tags: tags.iter().map(|t| t.to_string()).collect(),
            judge,
            weight,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimulationConfig {
    pub n: usize,
    pub seed: u64,
    /// Defaults to untagged human games.
    pub strata: Vec<Stratum>,
    pub features: Vec<(String, FeatureSampler)>,
    /// Probability that a sampled outcome is replaced by a draw.
    pub draw_rate: f64,
}

impl SimulationConfig {
    pub fn new(n: usize, seed: u64) -> Self {
        SimulationConfig {
            n,
            seed,
            strata: vec![Stratum::new(&[], Judge::Human, 1.0)],
            features: Vec::new(),
            draw_rate: 0.0,
        }
    }

    pub fn with_strata(mut self, strata: Vec<Stratum>) -> Self {
        self.strata = strata;
        self
    }

    pub fn with_feature(mut self, name: impl Into<String>, sampler: FeatureSampler) -> Self {
        self.features.push((name.into(), sampler));
        self
    }

    pub fn with_draw_rate(mut self, rate: f64) -> Self {
        self.draw_rate = rate;
        self
    }
}

/// Draws `config.n` games between uniformly chosen ordered pairs of `roster`
/// with outcomes sampled from the truth's win probability.
pub fn simulate_games(truth: &GroundTruth, roster: &[String], config: &SimulationConfig) -> Result<GameDataset> {
    if roster.len() < 2 {
        return Err(Error::Empty("simulation needs at least two models".into()));
    }
    if config.n == 0 {
        return Err(Error::invalid("n", "must be at least 1"));
    }
    if let Some(m) = roster.iter().find(|m| truth.index.model_position(m).is_none()) {
        return Err(Error::UnknownModel(m.clone()));
    }
    if !(0.0..=1.0).contains(&config.draw_rate) {
        return Err(Error::invalid("draw_rate", "must lie in [0, 1]"));
    }
    let weights = WeightedIndex::new(config.strata.iter().map(|s| s.weight))
        .map_err(|e| Error::invalid("strata", e.to_string()))?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut games = Vec::with_capacity(config.n);
    for _ in 0..config.n {
        let i = rng.random_range(0..roster.len());
        let mut j = rng.random_range(0..roster.len() - 1);
        if j >= i {
            j += 1;
        }
        let stratum = &config.strata[weights.sample(&mut rng)];
        let mut game = Game::new(roster[i].clone(), roster[j].clone(), Outcome::AWins, stratum.judge);
        game.tags.extend(stratum.tags.iter().cloned());
        for (name, sampler) in &config.features {
            let a = sampler.sample(&mut rng);
            let b = sampler.sample(&mut rng);
            game = game.with_feature(name.clone(), a, b);
        }
        let p = win_probability(&game, &truth.params, &truth.index, &truth.spec)?;
        game.outcome = if rng.random::<f64>() < p { Outcome::BWins } else { Outcome::AWins };
        if config.draw_rate > 0.0 && rng.random::<f64>() < config.draw_rate {
            game.outcome = Outcome::Draw;
        }
        games.push(game);
    }
    Ok(GameDataset::from_valid(games))
}

/// Model names `<prefix>00`, `<prefix>01`, ...
pub fn model_names(prefix: &str, count: usize) -> Vec<String> {
    let width = count.saturating_sub(1).to_string().len().max(2);
    (0..count).map(|i| format!("{prefix}{i:0width$}")).collect()
}
