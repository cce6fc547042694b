//! Per-side feature values used by shared bias terms.
//!
//! Built-in extractors work on the completion text of each side; external
//! features (classifier scores and the like) are read as-is from the game log.

use serde::{Deserialize, Serialize};

use crate::dataset::{Game, GameDataset, Judge, Side, SidePair};
use crate::error::{Error, Result};
use crate::model::TagExpr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BuiltinKind {
    LogLength,
    Position,
    UniqueTokenRatio,
    FleschReadingEase,
}

impl BuiltinKind {
    /// Value of this feature for one side of `game`.
    pub fn evaluate(self, game: &Game, side: Side) -> std::result::Result<f64, String> {
        if self == BuiltinKind::Position {
            return Ok(position_indicator(side));
        }
        let text = game
            .completion(side)
            .ok_or_else(|| format!("completion for side {side:?} is missing"))?;
        let value = match self {
            BuiltinKind::LogLength => log_length(text),
            BuiltinKind::UniqueTokenRatio => unique_token_ratio(text),
            BuiltinKind::FleschReadingEase => flesch_reading_ease(text),
            BuiltinKind::Position => unreachable!(),
        };
        value.map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureSource {
    Builtin(BuiltinKind),
    External,
}

/// A named per-side feature, optionally gated to a subset of games.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FeatureDefRepr", into = "FeatureDefRepr")]
pub struct FeatureDef {
    pub name: String,
    pub source: FeatureSource,
    pub judge_filter: Option<Judge>,
    pub tag_filter: Option<TagExpr>,
}

impl FeatureDef {
    pub fn builtin(name: impl Into<String>, kind: BuiltinKind) -> Self {
        FeatureDef {
            name: name.into(),
            source: FeatureSource::Builtin(kind),
            judge_filter: None,
            tag_filter: None,
        }
    }

    pub fn external(name: impl Into<String>) -> Self {
        FeatureDef {
            name: name.into(),
            source: FeatureSource::External,
            judge_filter: None,
            tag_filter: None,
        }
    }

    pub fn for_judge(mut self, judge: Judge) -> Self {
        self.judge_filter = Some(judge);
        self
    }

    pub fn for_tags(mut self, expr: TagExpr) -> Self {
        self.tag_filter = Some(expr);
        self
    }

    /// Whether the term is active on `game` at all (the indicator gate).
    pub fn applies(&self, game: &Game) -> bool {
        self.judge_filter.is_none_or(|j| game.judge == j)
            && self.tag_filter.as_ref().is_none_or(|e| e.matches(game))
    }

    pub fn is_position(&self) -> bool {
        self.source == FeatureSource::Builtin(BuiltinKind::Position)
    }

    /// Per-side values on an applicable game. Position is computed directly;
    /// every other feature is read from `game.features`.
    pub fn values(&self, game: &Game) -> Option<SidePair> {
        if self.is_position() {
            Some(SidePair::new(1.0, 0.0))
        } else {
            game.features.get(&self.name).copied()
        }
    }

    /// Computes the per-side values of this feature from scratch.
    fn compute(&self, game: &Game) -> std::result::Result<SidePair, String> {
        match self.source {
            FeatureSource::Builtin(kind) => Ok(SidePair::new(
                kind.evaluate(game, Side::A)?,
                kind.evaluate(game, Side::B)?,
            )),
            FeatureSource::External => game
                .features
                .get(&self.name)
                .copied()
                .ok_or_else(|| "external value missing from game".to_string()),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct FeatureDefRepr {
    name: String,
    source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    kind: Option<BuiltinKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    judge_filter: Option<Judge>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tag_filter: Option<TagExpr>,
}

impl TryFrom<FeatureDefRepr> for FeatureDef {
    type Error = String;

    fn try_from(r: FeatureDefRepr) -> std::result::Result<Self, String> {
        let source = match (r.source.as_str(), r.kind) {
            ("builtin", Some(kind)) => FeatureSource::Builtin(kind),
            ("builtin", None) => return Err(format!("feature `{}`: builtin source requires `kind`", r.name)),
            ("external", None) => FeatureSource::External,
            ("external", Some(_)) => return Err(format!("feature `{}`: external source takes no `kind`", r.name)),
            (other, _) => return Err(format!("feature `{}`: unknown source `{other}`", r.name)),
        };
        Ok(FeatureDef {
            name: r.name,
            source,
            judge_filter: r.judge_filter,
            tag_filter: r.tag_filter,
        })
    }
}

impl From<FeatureDef> for FeatureDefRepr {
    fn from(d: FeatureDef) -> Self {
        let (source, kind) = match d.source {
            FeatureSource::Builtin(k) => ("builtin", Some(k)),
            FeatureSource::External => ("external", None),
        };
        FeatureDefRepr {
            name: d.name,
            source: source.to_string(),
            kind,
            judge_filter: d.judge_filter,
            tag_filter: d.tag_filter,
        }
    }
}

/// Natural log of the number of characters (Unicode scalar values).
pub fn log_length(text: &str) -> Result<f64> {
    let n = text.chars().count();
    if n == 0 {
        return Err(Error::Text("length of empty text has no logarithm".into()));
    }
    Ok((n as f64).ln())
}

/// 1 for the first position, 0 for the second.
pub fn position_indicator(side: Side) -> f64 {
    match side {
        Side::A => 1.0,
        Side::B => 0.0,
    }
}

/// Distinct lowercased whitespace tokens divided by the token count.
pub fn unique_token_ratio(text: &str) -> Result<f64> {
    let tokens: Vec<String> = text.split_whitespace().map(str::to_lowercase).collect();
    if tokens.is_empty() {
        return Err(Error::Text("text has no tokens".into()));
    }
    let distinct: std::collections::HashSet<&str> = tokens.iter().map(String::as_str).collect();
    Ok(distinct.len() as f64 / tokens.len() as f64)
}

/// Vowel-group syllable count: maximal runs of `aeiouy`, at least one per
/// word, minus one for a trailing consonant-`e` when there are two or more
/// groups.
pub fn count_syllables(word: &str) -> usize {
    let letters: Vec<char> = word
        .chars()
        .filter(|c| c.is_alphabetic())
        .flat_map(char::to_lowercase)
        .collect();
    let is_vowel = |c: char| matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y');
    let mut groups = 0;
    let mut in_group = false;
    for &c in &letters {
        if is_vowel(c) {
            if !in_group {
                groups += 1;
            }
            in_group = true;
        } else {
            in_group = false;
        }
    }
    let silent_e = letters.len() >= 2
        && letters[letters.len() - 1] == 'e'
        && !is_vowel(letters[letters.len() - 2]);
    if groups >= 2 && silent_e {
        groups -= 1;
    }
    groups.max(1)
}

/// Words, sentences and syllables as counted for the reading-ease score.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TextCounts {
    pub words: usize,
    pub sentences: usize,
    pub syllables: usize,
}

pub fn text_counts(text: &str) -> TextCounts {
    let is_word = |t: &&str| t.chars().any(char::is_alphanumeric);
    let words: Vec<&str> = text.split_whitespace().filter(is_word).collect();
    let sentences = text
        .split(['.', '!', '?'])
        .filter(|segment| segment.split_whitespace().any(|t| is_word(&t)))
        .count();
    TextCounts {
        words: words.len(),
        sentences,
        syllables: words.iter().map(|w| count_syllables(w)).sum(),
    }
}

/// `206.835 - 1.015 * words/sentences - 84.6 * syllables/words`.
pub fn flesch_reading_ease(text: &str) -> Result<f64> {
    let c = text_counts(text);
    if c.words == 0 || c.sentences == 0 {
        return Err(Error::Text("reading ease needs at least one word and one sentence".into()));
    }
    let words = c.words as f64;
    Ok(206.835 - 1.015 * (words / c.sentences as f64) - 84.6 * (c.syllables as f64 / words))
}

/// Populates `Game::features` for every applicable (game, definition) pair.
/// Games outside a definition's filters get no entry for it.
pub fn extract_features(dataset: &GameDataset, defs: &[FeatureDef]) -> Result<GameDataset> {
    use rayon::prelude::*;

    let games: Vec<Game> = dataset
        .games()
        .par_iter()
        .enumerate()
        .map(|(i, game)| {
            let mut game = game.clone();
            for def in defs {
                if !def.applies(&game) {
                    continue;
                }
                let pair = def.compute(&game).map_err(|message| Error::Feature {
                    game: i,
                    feature: def.name.clone(),
                    message,
                })?;
                game.features.insert(def.name.clone(), pair);
            }
            Ok(game)
        })
        .collect::<Result<_>>()?;
    GameDataset::new(games)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Outcome;
    use approx::assert_abs_diff_eq;

    #[test]
    fn log_length_values() {
        assert_eq!(log_length("e").unwrap(), 0.0);
        assert_abs_diff_eq!(log_length("ab").unwrap(), 0.693_147_180_559_945_3, epsilon = 1e-15);
        assert_abs_diff_eq!(log_length(&"x".repeat(1000)).unwrap(), 6.907_755_278_982_137, epsilon = 1e-12);
        // multi-byte chars count once
        assert_abs_diff_eq!(log_length("éé").unwrap(), 2f64.ln(), epsilon = 1e-15);
        assert!(log_length("").is_err());
    }

    #[test]
    fn position_values() {
        assert_eq!(position_indicator(Side::A), 1.0);
        assert_eq!(position_indicator(Side::B), 0.0);
    }

    #[test]
    fn unique_ratio_values() {
        assert_eq!(unique_token_ratio("a a a b").unwrap(), 0.5);
        assert_eq!(unique_token_ratio("x y z").unwrap(), 1.0);
        assert_abs_diff_eq!(unique_token_ratio("The the THE").unwrap(), 1.0 / 3.0, epsilon = 1e-15);
        assert!(unique_token_ratio("   ").is_err());
    }

    #[test]
    fn syllables() {
        assert_eq!(count_syllables("The"), 1);
        assert_eq!(count_syllables("cat"), 1);
        assert_eq!(count_syllables("make"), 1);
        assert_eq!(count_syllables("readable"), 2);
        assert_eq!(count_syllables("agree"), 2);
        assert_eq!(count_syllables("rhythm"), 1);
        assert_eq!(count_syllables("brr"), 1);
        assert_eq!(count_syllables("beautiful"), 3);
    }

    #[test]
    fn flesch_fixtures() {
        assert_abs_diff_eq!(flesch_reading_ease("The cat sat.").unwrap(), 119.19, epsilon = 1e-9);
        assert_abs_diff_eq!(flesch_reading_ease("Go.").unwrap(), 121.22, epsilon = 1e-9);
        assert_eq!(
            flesch_reading_ease("S. S.").unwrap(),
            flesch_reading_ease("S.").unwrap()
        );
        assert!(flesch_reading_ease("...").is_err());
    }

    #[test]
    fn sentence_runs() {
        let c = text_counts("Wait... what?! Yes");
        assert_eq!(c.sentences, 3);
        assert_eq!(c.words, 3);
    }

    fn toy(n: usize) -> GameDataset {
        GameDataset::new(
            (0..n)
                .map(|i| Game::new(format!("m{i}"), format!("m{}", i + 1), Outcome::AWins, Judge::Human))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn extract_position_everywhere() {
        let out = extract_features(&toy(5), &[FeatureDef::builtin("position", BuiltinKind::Position)]).unwrap();
        for g in out.games() {
            assert_eq!(g.features["position"], SidePair::new(1.0, 0.0));
        }
    }

    #[test]
    fn extract_missing_completion_errors() {
        let err = extract_features(&toy(3), &[FeatureDef::builtin("len", BuiltinKind::LogLength)]).unwrap_err();
        assert!(matches!(err, Error::Feature { game: 0, ref feature, .. } if feature == "len"));
    }

    #[test]
    fn extract_external_passthrough_and_filters() {
        let games = vec![
            Game::new("a", "b", Outcome::AWins, Judge::Human).with_feature("sentiment", 0.2, 0.9),
            Game::new("a", "b", Outcome::AWins, Judge::Llm).with_completions("xx", "yyyy"),
        ];
        let ds = GameDataset::new(games).unwrap();
        let defs = [
            FeatureDef::external("sentiment").for_judge(Judge::Human),
            FeatureDef::builtin("len", BuiltinKind::LogLength).for_judge(Judge::Llm),
        ];
        let out = extract_features(&ds, &defs).unwrap();
        assert_eq!(out.games()[0].features["sentiment"], SidePair::new(0.2, 0.9));
        assert!(!out.games()[0].features.contains_key("len"));
        assert_abs_diff_eq!(out.games()[1].features["len"].diff(), 2f64.ln(), epsilon = 1e-15);
        assert!(!out.games()[1].features.contains_key("sentiment"));
    }

    #[test]
    fn def_json_shape() {
        let def: FeatureDef = serde_json::from_str(
            r#"{"name":"len","source":"builtin","kind":"log_length","judge_filter":"llm","tag_filter":"tag('x')"}"#,
        )
        .unwrap();
        assert_eq!(def.source, FeatureSource::Builtin(BuiltinKind::LogLength));
        assert_eq!(def.judge_filter, Some(Judge::Llm));
        let back: FeatureDef = serde_json::from_str(&serde_json::to_string(&def).unwrap()).unwrap();
        assert_eq!(back, def);
        assert!(serde_json::from_str::<FeatureDef>(r#"{"name":"x","source":"builtin"}"#).is_err());
    }

    proptest::proptest! {
        #[test]
        fn unique_ratio_in_unit_interval(words in proptest::collection::vec("[a-cA-C]{1,3}", 1..20)) {
            let text = words.join(" ");
            let r = unique_token_ratio(&text).unwrap();
            proptest::prop_assert!(r > 0.0 && r <= 1.0);
            let lowered: std::collections::HashSet<String> = words.iter().map(|w| w.to_lowercase()).collect();
            proptest::prop_assert_eq!(r == 1.0, lowered.len() == words.len());
        }

        #[test]
        fn flesch_invariant_under_duplication(words in proptest::collection::vec("[a-z]{1,8}", 1..12)) {
            let text = format!("{}.", words.join(" "));
            let doubled = format!("{text} {text}");
            let a = flesch_reading_ease(&text).unwrap();
            let b = flesch_reading_ease(&doubled).unwrap();
            proptest::prop_assert!((a - b).abs() < 1e-9);
        }
    }
}
