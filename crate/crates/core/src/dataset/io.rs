//! JSONL reading and writing of game logs.
//!
//! One JSON object per line:
//!
//! ```text
//! {"model_a": str, "model_b": str, "outcome": "model_a"|"model_b"|"draw",
//!  "judge": "human"|"llm"|"benchmark", "tags": [str],
//!  "features": {name: {"a": number, "b": number}},
//!  "completion_a": str?, "completion_b": str?}
//! ```
//!
//! `tags` and `features` may be omitted and default to empty. Blank lines are
//! ignored. Unknown keys are ignored.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde_json::{Map, Value};

use super::game::{Game, GameDataset, Judge, Outcome, SidePair};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    /// Count and skip malformed lines instead of failing on the first one.
    pub skip_invalid: bool,
}

#[derive(Debug, Clone)]
pub struct Loaded {
    pub dataset: GameDataset,
    /// Lines dropped under [`LoadOptions::skip_invalid`].
    pub skipped: usize,
}

/// Reads and validates a JSONL game log; malformed lines are hard errors.
pub fn load_games(path: impl AsRef<Path>) -> Result<GameDataset> {
    Ok(load_games_with(path, LoadOptions::default())?.dataset)
}

pub fn load_games_with(path: impl AsRef<Path>, options: LoadOptions) -> Result<Loaded> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_games(BufReader::new(file), options).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn read_games(reader: impl BufRead, options: LoadOptions) -> Result<Loaded> {
    let mut games = Vec::new();
    let mut skipped = 0;
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<reader>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        match parse_line(&line, i + 1) {
            Ok(game) => games.push(game),
            Err(e) if options.skip_invalid => {
                log::warn!("skipping invalid game: {e}");
                skipped += 1;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(Loaded {
        dataset: GameDataset::from_valid(games),
        skipped,
    })
}

/// Parses one JSONL record. `line` is 1-based and only used in errors.
pub fn parse_line(text: &str, line: usize) -> Result<Game> {
    let value: Value = serde_json::from_str(text).map_err(|e| Error::Parse {
        line,
        message: e.to_string(),
    })?;
    let obj = value.as_object().ok_or_else(|| Error::Parse {
        line,
        message: "expected a JSON object".into(),
    })?;
    let bad = |field: &str, message: &str| Error::InvalidRecord {
        line,
        field: field.to_string(),
        message: message.to_string(),
    };

    let model_a = required_str(obj, "model_a").map_err(|m| bad("model_a", m))?;
    let model_b = required_str(obj, "model_b").map_err(|m| bad("model_b", m))?;
    let outcome = match required_str(obj, "outcome").map_err(|m| bad("outcome", m))? {
        "model_a" => Outcome::AWins,
        "model_b" => Outcome::BWins,
        "draw" => Outcome::Draw,
        _ => return Err(bad("outcome", "expected \"model_a\", \"model_b\" or \"draw\"")),
    };
    let judge_str = required_str(obj, "judge").map_err(|m| bad("judge", m))?;
    let judge = Judge::parse(judge_str)
        .ok_or_else(|| bad("judge", "expected \"human\", \"llm\" or \"benchmark\""))?;

    let mut tags = BTreeSet::new();
    match obj.get("tags") {
        None | Some(Value::Null) => {}
        Some(Value::Array(items)) => {
            for item in items {
                let tag = item
                    .as_str()
                    .ok_or_else(|| bad("tags", "every tag must be a string"))?;
                tags.insert(tag.to_string());
            }
        }
        Some(_) => return Err(bad("tags", "expected an array of strings")),
    }

    let mut features = BTreeMap::new();
    match obj.get("features") {
        None | Some(Value::Null) => {}
        Some(Value::Object(map)) => {
            for (name, pair) in map {
                let field = format!("features.{name}");
                let side = |key: &str| -> Result<f64> {
                    pair.get(key)
                        .and_then(Value::as_f64)
                        .ok_or_else(|| bad(&field, &format!("`{key}` must be a number")))
                };
                features.insert(name.clone(), SidePair::new(side("a")?, side("b")?));
            }
        }
        Some(_) => return Err(bad("features", "expected an object")),
    }

    let completion = |key: &str| -> Result<Option<String>> {
        match obj.get(key) {
            None | Some(Value::Null) => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(_) => Err(bad(key, "expected a string")),
        }
    };

    let game = Game {
        model_a: model_a.to_string(),
        model_b: model_b.to_string(),
        outcome,
        judge,
        tags,
        features,
        completion_a: completion("completion_a")?,
        completion_b: completion("completion_b")?,
    };
    game.validate()
        .map_err(|(field, message)| Error::InvalidRecord {
            line,
            field,
            message,
        })?;
    Ok(game)
}

fn required_str<'a>(obj: &'a Map<String, Value>, key: &str) -> std::result::Result<&'a str, &'static str> {
    match obj.get(key) {
        None => Err("missing required field"),
        Some(Value::String(s)) => Ok(s),
        Some(_) => Err("expected a string"),
    }
}

pub fn write_games(mut writer: impl Write, dataset: &GameDataset) -> std::io::Result<()> {
    for game in dataset.games() {
        serde_json::to_writer(&mut writer, game)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()
}

pub fn save_games(path: impl AsRef<Path>, dataset: &GameDataset) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_games(BufWriter::new(file), dataset).map_err(|e| Error::io(path, e))
}

/// Serialized JSONL bytes of `dataset`.
pub fn to_jsonl(dataset: &GameDataset) -> Vec<u8> {
    let mut buf = Vec::new();
    write_games(&mut buf, dataset).expect("writing to a Vec cannot fail");
    buf
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(text: &str) -> Result<GameDataset> {
        Ok(read_games(text.as_bytes(), LoadOptions::default())?.dataset)
    }

    #[test]
    fn minimal_line() {
        let ds = read(r#"{"model_a":"x","model_b":"y","outcome":"draw","judge":"human"}"#).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.roster().len(), 2);
        assert_eq!(ds.games()[0].outcome, Outcome::Draw);
    }

    #[test]
    fn missing_outcome_names_line_and_field() {
        let err = read(r#"{"model_a":"x","model_b":"y","judge":"human","tags":[]}"#).unwrap_err();
        match err {
            Error::InvalidRecord { line, field, .. } => {
                assert_eq!(line, 1);
                assert_eq!(field, "outcome");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn broken_json_reports_line() {
        let text = "{\"model_a\":\"x\",\"model_b\":\"y\",\"outcome\":\"draw\",\"judge\":\"llm\"}\n{oops\n";
        assert!(matches!(read(text).unwrap_err(), Error::Parse { line: 2, .. }));
    }

    #[test]
    fn skip_invalid_counts() {
        let text = "{oops\n{\"model_a\":\"x\",\"model_b\":\"y\",\"outcome\":\"draw\",\"judge\":\"llm\"}\n{\"model_a\":\"x\"}\n";
        let loaded = read_games(text.as_bytes(), LoadOptions { skip_invalid: true }).unwrap();
        assert_eq!(loaded.skipped, 2);
        assert_eq!(loaded.dataset.len(), 1);
    }

    #[test]
    fn bad_feature_side() {
        let text = r#"{"model_a":"x","model_b":"y","outcome":"draw","judge":"llm","features":{"len":{"a":1}}}"#;
        match read(text).unwrap_err() {
            Error::InvalidRecord { field, .. } => assert_eq!(field, "features.len"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn roundtrip_bytes() {
        let text = concat!(
            r#"{"model_a":"x","model_b":"y","outcome":"model_b","judge":"llm","tags":["code","zh"],"features":{"len":{"a":6.5,"b":0.1}},"completion_a":"hi","completion_b":"yo"}"#,
            "\n",
            r#"{"model_a":"y","model_b":"z","outcome":"model_a","judge":"benchmark","tags":[],"features":{}}"#,
            "\n"
        );
        let ds = read(text).unwrap();
        let bytes = to_jsonl(&ds);
        assert_eq!(String::from_utf8(bytes.clone()).unwrap(), text);
        assert_eq!(to_jsonl(&read(std::str::from_utf8(&bytes).unwrap()).unwrap()), bytes);
    }
}
