//! Game records: ingestion, benchmark conversion, simulation and splitting.

mod benchmark;
mod game;
mod io;
mod simulate;

pub use benchmark::{
    convert_benchmark, load_benchmark_csv, read_benchmark_csv, simulate_benchmark, BenchmarkRecord, Conversion,
    ConversionOptions, Pairing,
};
pub use game::{Game, GameDataset, Judge, Outcome, Side, SidePair};
pub use io::{load_games, load_games_with, parse_line, read_games, save_games, to_jsonl, write_games, LoadOptions, Loaded};
pub use simulate::{model_names, simulate_games, FeatureSampler, GroundTruth, SimulationConfig, Stratum, TruthDraw};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Shuffles `dataset` and cuts it into consecutive parts of the given
/// fractions. Part boundaries are `round(cumulative_fraction * n)`.
pub fn split(dataset: &GameDataset, fractions: &[f64], seed: u64) -> Result<Vec<GameDataset>> {
    if fractions.is_empty() || fractions.iter().any(|f| !(*f > 0.0 && f.is_finite())) {
        return Err(Error::invalid("fractions", "every fraction must be positive"));
    }
    let total: f64 = fractions.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::invalid("fractions", format!("must sum to 1, got {total}")));
    }
    let n = dataset.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let mut parts = Vec::with_capacity(fractions.len());
    let mut cumulative = 0.0;
    let mut start = 0;
    for (i, f) in fractions.iter().enumerate() {
        cumulative += f;
        let end = if i + 1 == fractions.len() {
            n
        } else {
            ((cumulative * n as f64).round() as usize).clamp(start, n)
        };
        parts.push(dataset.select(&order[start..end]));
        start = end;
    }
    Ok(parts)
}

/// Partitions game indices into `folds` shuffled groups of near-equal size.
pub fn fold_assignment(n: usize, folds: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut out = vec![Vec::new(); folds];
    for (pos, i) in order.into_iter().enumerate() {
        out[pos % folds].push(i);
    }
    for f in &mut out {
        f.sort_unstable();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn games(n: usize) -> GameDataset {
        GameDataset::new(
            (0..n)
                .map(|i| Game::new(format!("m{}", i % 7), format!("m{}", (i % 7) + 1), Outcome::AWins, Judge::Human).with_feature("id", i as f64, 0.0))
                .collect(),
        )
        .unwrap()
    }

    fn ids(ds: &GameDataset) -> Vec<usize> {
        ds.games().iter().map(|g| g.features["id"].a as usize).collect()
    }

    #[test]
    fn split_sizes_and_disjoint() {
        let ds = games(100);
        let parts = split(&ds, &[0.8, 0.2], 1).unwrap();
        assert_eq!(parts[0].len(), 80);
        assert_eq!(parts[1].len(), 20);
        let all: HashSet<usize> = parts.iter().flat_map(ids).collect();
        assert_eq!(all.len(), 100);
    }

    #[test]
    fn split_deterministic() {
        let ds = games(50);
        let a = split(&ds, &[0.5, 0.3, 0.2], 9).unwrap();
        let b = split(&ds, &[0.5, 0.3, 0.2], 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn split_rejects_bad_fractions() {
        let ds = games(10);
        assert!(split(&ds, &[0.5, 0.6], 1).is_err());
        assert!(split(&ds, &[1.2, -0.2], 1).is_err());
        assert!(split(&ds, &[], 1).is_err());
    }

    #[test]
    fn folds_cover() {
        let f = fold_assignment(11, 3, 5);
        assert_eq!(f.iter().map(Vec::len).sum::<usize>(), 11);
        let all: HashSet<usize> = f.iter().flatten().copied().collect();
        assert_eq!(all.len(), 11);
    }
}
