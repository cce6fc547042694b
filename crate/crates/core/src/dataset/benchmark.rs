//! Conversion of accuracy benchmarks into preference games.
//!
//! For every question and every selected pair of models, the model that
//! answered correctly beats the one that did not; equal correctness is a draw.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use super::game::{Game, GameDataset, Judge, Outcome};
use crate::error::{Error, Result};

/// Per-model correctness on one benchmark question.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchmarkRecord {
    pub question_id: String,
    pub correct: BTreeMap<String, bool>,
}

impl BenchmarkRecord {
    pub fn new(question_id: impl Into<String>) -> Self {
        BenchmarkRecord {
            question_id: question_id.into(),
            correct: BTreeMap::new(),
        }
    }

    pub fn with(mut self, model: impl Into<String>, correct: bool) -> Self {
        self.correct.insert(model.into(), correct);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pairing {
    /// Every unordered pair of models answering the question.
    AllPairs,
    /// At most `per_record` distinct pairs drawn uniformly per question.
    RandomPairs { per_record: usize },
}

#[derive(Debug, Clone)]
pub struct ConversionOptions {
    /// Benchmark name; converted games are tagged `benchmark:<name>`.
    pub name: String,
    pub pairing: Pairing,
    /// Drives the choice of which model sits in the first position.
    pub seed: u64,
    /// Keep the models in sorted order instead of randomizing positions.
    pub fixed_positions: bool,
}

impl ConversionOptions {
    pub fn new(name: impl Into<String>, seed: u64) -> Self {
        ConversionOptions {
            name: name.into(),
            pairing: Pairing::AllPairs,
            seed,
            fixed_positions: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Conversion {
    pub dataset: GameDataset,
    /// Records with fewer than two models, which produce no games.
    pub skipped_records: usize,
}

pub fn convert_benchmark(records: &[BenchmarkRecord], options: &ConversionOptions) -> Result<Conversion> {
    if records.is_empty() {
        return Err(Error::Empty("benchmark has no records".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let tag = format!("benchmark:{}", options.name);
    let mut games = Vec::new();
    let mut skipped_records = 0;

    for record in records {
        if record.correct.len() < 2 {
            log::warn!(
                "benchmark question `{}` has fewer than two models; skipped",
                record.question_id
            );
            skipped_records += 1;
            continue;
        }
        let models: Vec<(&String, bool)> = record.correct.iter().map(|(m, &c)| (m, c)).collect();
        let mut pairs = Vec::new();
        for i in 0..models.len() {
            for j in i + 1..models.len() {
                pairs.push((i, j));
            }
        }
        if let Pairing::RandomPairs { per_record } = options.pairing {
            pairs = pairs
                .choose_multiple(&mut rng, per_record.min(pairs.len()))
                .copied()
                .collect();
            pairs.sort_unstable();
        }
        for (i, j) in pairs {
            let (mut first, mut second) = (models[i], models[j]);
            if !options.fixed_positions && rng.random_bool(0.5) {
                std::mem::swap(&mut first, &mut second);
            }
            let outcome = match (first.1, second.1) {
                (true, false) => Outcome::AWins,
                (false, true) => Outcome::BWins,
                _ => Outcome::Draw,
            };
            games.push(Game::new(first.0.clone(), second.0.clone(), outcome, Judge::Benchmark).with_tag(tag.clone()));
        }
    }
    Ok(Conversion {
        dataset: GameDataset::from_valid(games),
        skipped_records,
    })
}

#[derive(Debug, Deserialize)]
struct CsvRow {
    question_id: String,
    model: String,
    correct: String,
}

/// Reads `question_id,model,correct` rows, grouping by question in order of
/// first appearance.
pub fn read_benchmark_csv(reader: impl Read) -> Result<Vec<BenchmarkRecord>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    for required in ["question_id", "model", "correct"] {
        if !headers.iter().any(|h| h == required) {
            return Err(Error::invalid(required, "missing column in benchmark CSV header"));
        }
    }
    let mut order: Vec<String> = Vec::new();
    let mut by_question: BTreeMap<String, BenchmarkRecord> = BTreeMap::new();
    for (i, row) in rdr.deserialize::<CsvRow>().enumerate() {
        let row = row?;
        let correct = match row.correct.as_str() {
            "1" => true,
            "0" => false,
            other => {
                return Err(Error::InvalidRecord {
                    line: i + 2,
                    field: "correct".into(),
                    message: format!("expected 0 or 1, got `{other}`"),
                })
            }
        };
        let record = by_question.entry(row.question_id.clone()).or_insert_with(|| {
            order.push(row.question_id.clone());
            BenchmarkRecord::new(row.question_id.clone())
        });
        record.correct.insert(row.model, correct);
    }
    Ok(order
        .into_iter()
        .map(|q| by_question.remove(&q).expect("grouped above"))
        .collect())
}

pub fn load_benchmark_csv(path: impl AsRef<Path>) -> Result<Vec<BenchmarkRecord>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_benchmark_csv(file)
}

/// Synthetic benchmark where model `i` answers each question correctly with
/// probability `accuracies[i]`.
pub fn simulate_benchmark(accuracies: &[(String, f64)], questions: usize, seed: u64) -> Vec<BenchmarkRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records: Vec<BenchmarkRecord> = (0..questions)
        .map(|q| {
            let mut r = BenchmarkRecord::new(format!("q{q}"));
            for (model, acc) in accuracies {
                r.correct.insert(model.clone(), rng.random_bool(*acc));
            }
            r
        })
        .collect();
    records.shuffle(&mut rng);
    records
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> ConversionOptions {
        ConversionOptions::new("toy", 3)
    }

    #[test]
    fn correct_beats_incorrect() {
        let recs = vec![BenchmarkRecord::new("q").with("A", true).with("B", false)];
        let out = convert_benchmark(&recs, &opts()).unwrap();
        let g = &out.dataset.games()[0];
        assert_eq!(out.dataset.len(), 1);
        let winner = match g.outcome {
            Outcome::AWins => &g.model_a,
            Outcome::BWins => &g.model_b,
            Outcome::Draw => panic!("expected decisive game"),
        };
        assert_eq!(winner, "A");
        assert_eq!(g.judge, Judge::Benchmark);
        assert!(g.has_tag("benchmark:toy"));
    }

    #[test]
    fn both_correct_is_draw() {
        let recs = vec![BenchmarkRecord::new("q").with("A", true).with("B", true)];
        let out = convert_benchmark(&recs, &opts()).unwrap();
        assert_eq!(out.dataset.len(), 1);
        assert_eq!(out.dataset.games()[0].outcome, Outcome::Draw);
    }

    #[test]
    fn single_model_records_are_skipped() {
        let recs = vec![
            BenchmarkRecord::new("q1").with("A", true),
            BenchmarkRecord::new("q2").with("A", true).with("B", false).with("C", true),
        ];
        let out = convert_benchmark(&recs, &opts()).unwrap();
        assert_eq!(out.skipped_records, 1);
        assert_eq!(out.dataset.len(), 3);
    }

    #[test]
    fn random_pairs_caps_count() {
        let mut rec = BenchmarkRecord::new("q");
        for m in ["a", "b", "c", "d", "e"] {
            rec = rec.with(m, m < "c");
        }
        let mut o = opts();
        o.pairing = Pairing::RandomPairs { per_record: 3 };
        assert_eq!(convert_benchmark(&[rec], &o).unwrap().dataset.len(), 3);
    }

    #[test]
    fn empty_records_error() {
        assert!(convert_benchmark(&[], &opts()).is_err());
    }

    #[test]
    fn csv_grouping() {
        let text = "question_id,model,correct\nq1,A,1\nq1,B,0\nq2,A,0\nq2,B,0\n";
        let recs = read_benchmark_csv(text.as_bytes()).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].question_id, "q1");
        assert_eq!(recs[0].correct["A"], true);
        assert_eq!(recs[1].correct["B"], false);
    }

    #[test]
    fn csv_rejects_bad_flag() {
        let text = "question_id,model,correct\nq1,A,yes\n";
        assert!(matches!(
            read_benchmark_csv(text.as_bytes()).unwrap_err(),
            Error::InvalidRecord { line: 2, .. }
        ));
    }
}
