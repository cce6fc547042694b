//! Fits and simulations checked against independent reference computations.

use std::collections::BTreeMap;
use std::io::Write as _;

use polyfit_core::analysis::{build_leaderboard, sample_efficiency_curve, Anchor, CurveOptions};
use polyfit_core::dataset::{
    convert_benchmark, load_games, model_names, simulate_games, BenchmarkRecord, ConversionOptions, GroundTruth,
    Pairing, SimulationConfig, Stratum, TruthDraw,
};
use polyfit_core::fit::{fit_map, held_out_loss, tune_prior_sigma, FitOptions, DEFAULT_SIGMA_GRID};
use polyfit_core::model::{build_index, win_probability, Params, PriorSigma, RatingSpec, TagExpr};
use polyfit_core::{Game, GameDataset, Judge, Outcome};

/// Plain Bradley-Terry maximum likelihood via the minorize-maximize update
/// `γ_i ← W_i / Σ_j n_ij / (γ_i + γ_j)`, draws counted as half a win each way.
/// Returns ratings `400 ln γ` shifted so `anchor` sits at `anchor_rating`.
fn mm_bradley_terry(games: &GameDataset, anchor: &str, anchor_rating: f64) -> BTreeMap<String, f64> {
    let models: Vec<String> = games.roster().iter().cloned().collect();
    let pos = |m: &str| models.iter().position(|x| x == m).unwrap();
    let k = models.len();
    let mut wins = vec![0.0; k];
    let mut n = vec![vec![0.0; k]; k];
    for g in games.games() {
        let (a, b) = (pos(&g.model_a), pos(&g.model_b));
        let sb = g.outcome.score_b();
        wins[b] += sb;
        wins[a] += 1.0 - sb;
        n[a][b] += 1.0;
        n[b][a] += 1.0;
    }
    let mut gamma = vec![1.0; k];
    for _ in 0..100_000 {
        let mut next = vec![0.0; k];
        for i in 0..k {
            let denom: f64 = (0..k).filter(|&j| j != i).map(|j| n[i][j] / (gamma[i] + gamma[j])).sum();
            next[i] = wins[i] / denom;
        }
        let norm = next[0];
        next.iter_mut().for_each(|g| *g /= norm);
        let change = next.iter().zip(&gamma).map(|(a, b)| (a.ln() - b.ln()).abs()).fold(0.0, f64::max);
        gamma = next;
        if change < 1e-13 {
            break;
        }
    }
    let shift = anchor_rating - 400.0 * gamma[pos(anchor)].ln();
    models.iter().zip(&gamma).map(|(m, g)| (m.clone(), 400.0 * g.ln() + shift)).collect()
}

fn univariate_truth(count: usize, seed: u64) -> (Vec<String>, GroundTruth) {
    let roster = model_names("m", count);
    let draw = TruthDraw {
        base_mean: 1000.0,
        base_std: 120.0,
        modifier_std: 1.0,
    };
    let truth = GroundTruth::sample(RatingSpec::univariate(), &roster, draw, seed).unwrap();
    (roster, truth)
}

#[test]
fn degenerate_spec_matches_plain_bradley_terry() {
    let (roster, truth) = univariate_truth(10, 31);
    let games = simulate_games(&truth, &roster, &SimulationConfig::new(4000, 32).with_draw_rate(0.1)).unwrap();
    let spec = RatingSpec::univariate().with_base_prior(1000.0, PriorSigma::Fixed(1e6));
    let fit = fit_map(&games, &spec, &FitOptions::default().with_tolerance(1e-10)).unwrap();
    assert!(fit.converged);

    let anchor = Anchor {
        model: roster[0].clone(),
        rating: 1000.0,
    };
    let stds = vec![0.0; fit.index.len()];
    let board = build_leaderboard(&fit, &stds, Some(&anchor)).unwrap();
    let oracle = mm_bradley_terry(&games, &roster[0], 1000.0);
    for row in &board.rows {
        let expected = oracle[&row.model];
        assert!((row.rating.value - expected).abs() < 0.5, "{}: {} vs {}", row.model, row.rating.value, expected);
    }
}

#[test]
fn simulated_win_rates_converge_to_truth() {
    let roster = vec!["a".to_string(), "b".to_string(), "c".to_string()];
    let spec = RatingSpec::univariate();
    let index = build_index(&spec, roster.iter().cloned()).unwrap();
    let truth = GroundTruth::new(spec.clone(), index, Params(vec![1000.0, 1150.0, 900.0])).unwrap();
    let games = simulate_games(&truth, &roster, &SimulationConfig::new(60_000, 41)).unwrap();

    let mut tally: BTreeMap<(String, String), (f64, f64, usize)> = BTreeMap::new();
    for g in games.games() {
        let p = win_probability(g, &truth.params, &truth.index, &spec).unwrap();
        let entry = tally.entry((g.model_a.clone(), g.model_b.clone())).or_insert((0.0, p, 0));
        entry.0 += g.outcome.score_b();
        entry.2 += 1;
    }
    assert_eq!(tally.len(), 6);
    for ((a, b), (wins, p, n)) in tally {
        let rate = wins / n as f64;
        let bound = 3.0 / (n as f64).sqrt();
        assert!((rate - p).abs() <= bound, "{a} vs {b}: {rate} vs {p} (n = {n})");
    }
}

#[test]
fn equal_truth_gives_even_split() {
    let roster = vec!["a".to_string(), "b".to_string()];
    let spec = RatingSpec::univariate();
    let index = build_index(&spec, roster.iter().cloned()).unwrap();
    let truth = GroundTruth::new(spec, index, Params(vec![1000.0, 1000.0])).unwrap();
    let games = simulate_games(&truth, &roster, &SimulationConfig::new(10_000, 7)).unwrap();
    let a_wins = games.games().iter().filter(|g| g.outcome == Outcome::AWins).count() as f64 / 10_000.0;
    assert!((a_wins - 0.5).abs() < 0.02, "{a_wins}");
}

fn records() -> Vec<BenchmarkRecord> {
    (0..40)
        .map(|q| {
            BenchmarkRecord::new(format!("q{q}"))
                .with("x", q % 2 == 0)
                .with("y", q % 3 == 0)
                .with("z", q % 5 == 0)
        })
        .collect()
}

#[test]
fn conversion_swap_symmetry() {
    let mut fixed = ConversionOptions::new("sym", 0);
    fixed.fixed_positions = true;
    let sorted = convert_benchmark(&records(), &fixed).unwrap().dataset;
    let shuffled = convert_benchmark(&records(), &ConversionOptions::new("sym", 0)).unwrap().dataset;
    assert_eq!(sorted.len(), shuffled.len());
    let (mut flipped, mut draws) = (0, 0);
    for (s, r) in sorted.games().iter().zip(shuffled.games()) {
        if s.model_a == r.model_a {
            assert_eq!(s, r);
        } else {
            assert_eq!(&s.swapped(), r);
            assert_eq!(r.outcome, s.outcome.swapped());
            flipped += 1;
        }
        if s.outcome == Outcome::Draw {
            draws += 1;
            assert_eq!(s.outcome.swapped(), Outcome::Draw);
        }
    }
    assert!(flipped > 0 && draws > 0);
}

#[test]
fn dominant_model_ranks_first_after_conversion() {
    let recs: Vec<BenchmarkRecord> = (0..10).map(|q| BenchmarkRecord::new(format!("q{q}")).with("A", true).with("B", false)).collect();
    let conv = convert_benchmark(&recs, &ConversionOptions::new("dom", 1)).unwrap();
    assert_eq!(conv.dataset.len(), 10);
    for g in conv.dataset.games() {
        let winner = match g.outcome {
            Outcome::AWins => &g.model_a,
            Outcome::BWins => &g.model_b,
            Outcome::Draw => panic!("no draws expected"),
        };
        assert_eq!(winner, "A");
        assert!(g.has_tag("benchmark:dom"));
        assert_eq!(g.judge, Judge::Benchmark);
    }
    let fit = fit_map(&conv.dataset, &RatingSpec::univariate(), &FitOptions::default()).unwrap();
    assert!(fit.base("A").unwrap() > fit.base("B").unwrap());
}

#[test]
fn random_pairs_is_subset_of_all_pairs() {
    let mut opts = ConversionOptions::new("rp", 4);
    opts.pairing = Pairing::RandomPairs { per_record: 1 };
    let conv = convert_benchmark(&records(), &opts).unwrap();
    assert_eq!(conv.dataset.len(), 40);
}

fn task_data(modifier_std: f64, n: usize, seed: u64) -> GameDataset {
    let roster = model_names("t", 12);
    let spec = RatingSpec::univariate().with_modifier("task", TagExpr::tag("task"), PriorSigma::Fixed(1.0));
    let draw = TruthDraw {
        base_mean: 1000.0,
        base_std: 100.0,
        modifier_std: modifier_std.max(1e-9),
    };
    let mut truth = GroundTruth::sample(spec, &roster, draw, seed).unwrap();
    if modifier_std == 0.0 {
        for m in &roster {
            truth.set(&format!("beta:{m}:task"), 0.0).unwrap();
        }
    }
    let config = SimulationConfig::new(n, seed + 1).with_strata(vec![
        Stratum::new(&[], Judge::Human, 0.5),
        Stratum::new(&["task"], Judge::Human, 0.5),
    ]);
    simulate_games(&truth, &roster, &config).unwrap()
}

fn cv_spec() -> RatingSpec {
    RatingSpec::univariate().with_modifier("task", TagExpr::tag("task"), PriorSigma::Cv)
}

#[test]
fn no_task_effect_selects_strongest_shrinkage() {
    let games = task_data(0.0, 20_000, 50);
    let sel = tune_prior_sigma(&games, &cv_spec(), "task", &DEFAULT_SIGMA_GRID, 5, 3, &FitOptions::default()).unwrap();
    assert_eq!(sel.sigma, 10.0, "{:?}", sel.losses);
}

#[test]
fn large_task_effect_selects_weak_shrinkage() {
    let games = task_data(300.0, 40_000, 60);
    let sel = tune_prior_sigma(&games, &cv_spec(), "task", &DEFAULT_SIGMA_GRID, 5, 3, &FitOptions::default()).unwrap();
    assert!(sel.sigma >= 160.0, "{:?}", sel.losses);
}

#[test]
fn fold_count_does_not_change_selection() {
    let games = task_data(0.0, 40_000, 70);
    let two = tune_prior_sigma(&games, &cv_spec(), "task", &DEFAULT_SIGMA_GRID, 2, 3, &FitOptions::default()).unwrap();
    let five = tune_prior_sigma(&games, &cv_spec(), "task", &DEFAULT_SIGMA_GRID, 5, 3, &FitOptions::default()).unwrap();
    assert_eq!(two.sigma, five.sigma, "{:?} vs {:?}", two.losses, five.losses);
}

#[test]
fn perfect_predictor_has_vanishing_loss() {
    let games = GameDataset::new(vec![
        Game::new("a", "b", Outcome::BWins, Judge::Human),
        Game::new("b", "a", Outcome::AWins, Judge::Human),
    ])
    .unwrap();
    let mut fit = fit_map(&games, &RatingSpec::univariate(), &FitOptions::default()).unwrap();
    fit.params = Params(vec![0.0, 20_000.0]);
    assert!(held_out_loss(&fit, &games).unwrap() < 1e-12);
}

#[test]
fn efficiency_curves_meet_with_abundant_task_data() {
    let roster = model_names("c", 8);
    let spec = RatingSpec::univariate().with_modifier("task", TagExpr::tag("task"), PriorSigma::Fixed(20.0));
    let draw = TruthDraw {
        base_mean: 1000.0,
        base_std: 100.0,
        modifier_std: 20.0,
    };
    let truth = GroundTruth::sample(spec.clone(), &roster, draw, 90).unwrap();
    let background = simulate_games(&truth, &roster, &SimulationConfig::new(20_000, 91)).unwrap();
    let tagged = SimulationConfig::new(40_000, 92).with_strata(vec![Stratum::new(&["task"], Judge::Human, 1.0)]);
    let task = simulate_games(&truth, &roster, &tagged).unwrap();
    let test = simulate_games(&truth, &roster, &SimulationConfig { seed: 93, n: 10_000, ..tagged }).unwrap();

    let curve = sample_efficiency_curve(
        &task,
        &background,
        &spec,
        &RatingSpec::univariate(),
        &[200, 1000, 40_000],
        &test,
        &CurveOptions::default(),
    )
    .unwrap();
    for p in &curve.points[..2] {
        assert!(p.normalized_loss_multivariate <= p.normalized_loss_univariate, "{p:?}");
    }
    let last = curve.points.last().unwrap();
    assert!((last.normalized_loss_multivariate - last.normalized_loss_univariate).abs() < 0.01, "{last:?}");
}

#[test]
fn load_collects_roster() {
    let mut file = tempfile::NamedTempFile::new().unwrap();
    for (a, b) in [("X", "Y"), ("Y", "Z"), ("Z", "X")] {
        writeln!(file, r#"{{"model_a":"{a}","model_b":"{b}","outcome":"draw","judge":"human","tags":[],"features":{{}}}}"#).unwrap();
    }
    let games = load_games(file.path()).unwrap();
    assert_eq!(games.len(), 3);
    let roster: Vec<&str> = games.roster().iter().map(String::as_str).collect();
    assert_eq!(roster, ["X", "Y", "Z"]);
}
