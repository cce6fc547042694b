use polyfit_core::analysis::bootstrap_uncertainty;
use polyfit_core::dataset::{model_names, simulate_games, GroundTruth, SimulationConfig, Stratum, TruthDraw};
use polyfit_core::features::{extract_features, BuiltinKind, FeatureDef};
use polyfit_core::{FitOptions, Judge, PriorSigma, RatingSpec, TagExpr};

// Large logs push objective differences near the optimum below rounding, so
// the line search has to keep going on slope information alone.
#[test]
fn resampled_fits_on_large_logs_reach_tolerance() {
    let roster = model_names("m", 8);
    let truth_spec = RatingSpec::univariate().with_modifier("code", TagExpr::tag("code"), PriorSigma::Fixed(50.0));
    let draw = TruthDraw { base_mean: 1000.0, base_std: 100.0, modifier_std: 50.0 };
    let truth = GroundTruth::sample(truth_spec, &roster, draw, 1).unwrap();
    let config = SimulationConfig::new(80_000, 2)
        .with_strata(vec![Stratum::new(&[], Judge::Human, 0.7), Stratum::new(&["code"], Judge::Human, 0.3)]);
    let position = FeatureDef::builtin("position", BuiltinKind::Position);
    let games = extract_features(&simulate_games(&truth, &roster, &config).unwrap(), &[position.clone()]).unwrap();
    let spec = RatingSpec::univariate()
        .with_shared(position, PriorSigma::Fixed(200.0))
        .with_modifier("code", TagExpr::tag("code"), PriorSigma::Fixed(40.0));
    let boot = bootstrap_uncertainty(&games, &spec, &FitOptions::default(), 24, 9).unwrap();
    assert_eq!(boot.non_converged, 0);
}
