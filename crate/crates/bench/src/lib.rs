//! Fixtures shared by the benchmarks.

use polyfit_core::dataset::{model_names, simulate_games, FeatureSampler, GroundTruth, SimulationConfig, Stratum, TruthDraw};
use polyfit_core::features::FeatureDef;
use polyfit_core::{GameDataset, Judge, PriorSigma, RatingSpec, TagExpr};

/// Spec with one shared length term and two modifiers.
pub fn spec() -> RatingSpec {
    RatingSpec::univariate()
        .with_shared(FeatureDef::external("length"), PriorSigma::Fixed(200.0))
        .with_modifier("code", TagExpr::tag("code"), PriorSigma::Fixed(50.0))
        .with_modifier("chinese", TagExpr::tag("chinese"), PriorSigma::Fixed(50.0))
}

/// `n` games among `models` models drawn from [`spec`] with fixed seeds.
pub fn dataset(models: usize, n: usize) -> GameDataset {
    let roster = model_names("m", models);
    let draw = TruthDraw { base_mean: 1000.0, base_std: 100.0, modifier_std: 50.0 };
    let mut truth = GroundTruth::sample(spec(), &roster, draw, 11).expect("valid truth");
    truth.set("alpha:length", 130.0).expect("known term");
    let config = SimulationConfig::new(n, 12)
        .with_strata(vec![
            Stratum::new(&[], Judge::Human, 0.8),
            Stratum::new(&["code"], Judge::Human, 0.1),
            Stratum::new(&["chinese"], Judge::Human, 0.1),
        ])
        .with_feature("length", FeatureSampler::Normal { mean: 6.0, std: 0.4 });
    simulate_games(&truth, &roster, &config).expect("valid config")
}
