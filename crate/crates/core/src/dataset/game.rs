use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Result of a judged comparison, from the point of view of the two positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    #[serde(rename = "model_a")]
    AWins,
    #[serde(rename = "model_b")]
    BWins,
    #[serde(rename = "draw")]
    Draw,
}

impl Outcome {
    /// Score of the second model (`model_b`): 1 for a win, 0 for a loss and
    /// 0.5 for a draw.
    pub fn score_b(self) -> f64 {
        match self {
            Outcome::AWins => 0.0,
            Outcome::BWins => 1.0,
            Outcome::Draw => 0.5,
        }
    }

    /// The same result seen with the two positions exchanged.
    pub fn swapped(self) -> Outcome {
        match self {
            Outcome::AWins => Outcome::BWins,
            Outcome::BWins => Outcome::AWins,
            Outcome::Draw => Outcome::Draw,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Judge {
    Human,
    Llm,
    Benchmark,
}

impl Judge {
    pub fn as_str(self) -> &'static str {
        match self {
            Judge::Human => "human",
            Judge::Llm => "llm",
            Judge::Benchmark => "benchmark",
        }
    }

    pub fn parse(s: &str) -> Option<Judge> {
        match s {
            "human" => Some(Judge::Human),
            "llm" => Some(Judge::Llm),
            "benchmark" => Some(Judge::Benchmark),
            _ => None,
        }
    }
}

/// Which of the two positions in a game.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    A,
    B,
}

/// Raw per-side values of one feature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SidePair {
    pub a: f64,
    pub b: f64,
}

impl SidePair {
    pub fn new(a: f64, b: f64) -> Self {
        SidePair { a, b }
    }

    pub fn get(&self, side: Side) -> f64 {
        match side {
            Side::A => self.a,
            Side::B => self.b,
        }
    }

    /// `b - a`, the only quantity a shared term contributes to the win probability.
    pub fn diff(&self) -> f64 {
        self.b - self.a
    }
}

/// One judged comparison between two models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Game {
    pub model_a: String,
    pub model_b: String,
    pub outcome: Outcome,
    pub judge: Judge,
    #[serde(default)]
    pub tags: BTreeSet<String>,
    #[serde(default)]
    pub features: BTreeMap<String, SidePair>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub completion_a: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub completion_b: Option<String>,
}

impl Game {
    pub fn new(
        model_a: impl Into<String>,
        model_b: impl Into<String>,
        outcome: Outcome,
        judge: Judge,
    ) -> Self {
        Game {
            model_a: model_a.into(),
            model_b: model_b.into(),
            outcome,
            judge,
            tags: BTreeSet::new(),
            features: BTreeMap::new(),
            completion_a: None,
            completion_b: None,
        }
    }

    pub fn with_tag(mut self, tag: impl Into<String>) -> Self {
        self.tags.insert(tag.into());
        self
    }

    pub fn with_feature(mut self, name: impl Into<String>, a: f64, b: f64) -> Self {
        self.features.insert(name.into(), SidePair::new(a, b));
        self
    }

    pub fn with_completions(mut self, a: impl Into<String>, b: impl Into<String>) -> Self {
        self.completion_a = Some(a.into());
        self.completion_b = Some(b.into());
        self
    }

    pub fn model(&self, side: Side) -> &str {
        match side {
            Side::A => &self.model_a,
            Side::B => &self.model_b,
        }
    }

    pub fn completion(&self, side: Side) -> Option<&str> {
        match side {
            Side::A => self.completion_a.as_deref(),
            Side::B => self.completion_b.as_deref(),
        }
    }

    /// Side on which `model` plays, if it plays at all.
    pub fn side_of(&self, model: &str) -> Option<Side> {
        if self.model_a == model {
            Some(Side::A)
        } else if self.model_b == model {
            Some(Side::B)
        } else {
            None
        }
    }

    pub fn has_tag(&self, tag: &str) -> bool {
        self.tags.contains(tag)
    }

    /// The same game with the two positions exchanged.
    pub fn swapped(&self) -> Game {
        Game {
            model_a: self.model_b.clone(),
            model_b: self.model_a.clone(),
            outcome: self.outcome.swapped(),
            judge: self.judge,
            tags: self.tags.clone(),
            features: self
                .features
                .iter()
                .map(|(k, v)| (k.clone(), SidePair::new(v.b, v.a)))
                .collect(),
            completion_a: self.completion_b.clone(),
            completion_b: self.completion_a.clone(),
        }
    }

    /// Checks the record invariants, reporting the offending field name.
    pub fn validate(&self) -> std::result::Result<(), (String, String)> {
        if self.model_a.is_empty() {
            return Err(("model_a".into(), "must be non-empty".into()));
        }
        if self.model_b.is_empty() {
            return Err(("model_b".into(), "must be non-empty".into()));
        }
        if self.model_a == self.model_b {
            return Err((
                "model_b".into(),
                format!("a model cannot play itself (`{}`)", self.model_a),
            ));
        }
        for (name, pair) in &self.features {
            if !pair.a.is_finite() || !pair.b.is_finite() {
                return Err((
                    format!("features.{name}"),
                    "both sides must be finite numbers".into(),
                ));
            }
        }
        Ok(())
    }
}

/// An ordered, validated collection of games plus the set of models they reference.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GameDataset {
    games: Vec<Game>,
    roster: BTreeSet<String>,
}

impl GameDataset {
    /// Builds a dataset, validating every game.
    pub fn new(games: Vec<Game>) -> Result<Self> {
        for (i, g) in games.iter().enumerate() {
            if let Err((field, message)) = g.validate() {
                return Err(Error::InvalidRecord {
                    line: i + 1,
                    field,
                    message,
                });
            }
        }
        Ok(Self::from_valid(games))
    }

    pub(crate) fn from_valid(games: Vec<Game>) -> Self {
        let roster = games
            .iter()
            .flat_map(|g| [g.model_a.clone(), g.model_b.clone()])
            .collect();
        GameDataset { games, roster }
    }

    pub fn games(&self) -> &[Game] {
        &self.games
    }

    /// Models referenced by any game, in lexicographic order.
    pub fn roster(&self) -> &BTreeSet<String> {
        &self.roster
    }

    pub fn len(&self) -> usize {
        self.games.len()
    }

    pub fn is_empty(&self) -> bool {
        self.games.is_empty()
    }

    pub fn into_games(self) -> Vec<Game> {
        self.games
    }

    /// Dataset holding the games at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> GameDataset {
        Self::from_valid(indices.iter().map(|&i| self.games[i].clone()).collect())
    }

    /// Concatenation of `self` followed by `other`.
    pub fn concat(&self, other: &GameDataset) -> GameDataset {
        let mut games = self.games.clone();
        games.extend(other.games.iter().cloned());
        Self::from_valid(games)
    }

    /// Games satisfying `keep`, order preserved.
    pub fn filter(&self, keep: impl Fn(&Game) -> bool) -> GameDataset {
        Self::from_valid(self.games.iter().filter(|g| keep(g)).cloned().collect())
    }
}

impl IntoIterator for GameDataset {
    type Item = Game;
    type IntoIter = std::vec::IntoIter<Game>;

    fn into_iter(self) -> Self::IntoIter {
        self.games.into_iter()
    }
}
