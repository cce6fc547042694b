//! Boolean expressions over game tags and judge kind.
//!
//! Grammar (lowest precedence first):
//!
//! ```text
//! expr   := and ('|' and)*
//! and    := unary ('&' unary)*
//! unary  := '!' unary | atom
//! atom   := 'tag' '(' STRING ')' | 'judge' '(' STRING ')' | '(' expr ')'
//! STRING := '\'' ... '\'' | '"' ... '"'
//! ```

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dataset::{Game, Judge};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TagExpr {
    Tag(String),
    Judge(Judge),
    Not(Box<TagExpr>),
    And(Box<TagExpr>, Box<TagExpr>),
    Or(Box<TagExpr>, Box<TagExpr>),
}

impl TagExpr {
    pub fn tag(name: impl Into<String>) -> Self {
        TagExpr::Tag(name.into())
    }

    pub fn and(self, other: TagExpr) -> Self {
        TagExpr::And(Box::new(self), Box::new(other))
    }

    pub fn or(self, other: TagExpr) -> Self {
        TagExpr::Or(Box::new(self), Box::new(other))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Self {
        TagExpr::Not(Box::new(self))
    }

    pub fn matches(&self, game: &Game) -> bool {
        match self {
            TagExpr::Tag(t) => game.has_tag(t),
            TagExpr::Judge(j) => game.judge == *j,
            TagExpr::Not(e) => !e.matches(game),
            TagExpr::And(l, r) => l.matches(game) && r.matches(game),
            TagExpr::Or(l, r) => l.matches(game) || r.matches(game),
        }
    }

    pub fn parse(input: &str) -> Result<TagExpr> {
        let mut p = Parser { src: input, pos: 0 };
        let expr = p.expr()?;
        p.skip_ws();
        if p.pos != input.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(expr)
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, parent: u8) -> fmt::Result {
        let prec = match self {
            TagExpr::Or(..) => 0,
            TagExpr::And(..) => 1,
            _ => 2,
        };
        if prec < parent {
            write!(f, "(")?;
        }
        match self {
            TagExpr::Tag(t) => write!(f, "tag('{t}')")?,
            TagExpr::Judge(j) => write!(f, "judge('{}')", j.as_str())?,
            TagExpr::Not(e) => {
                write!(f, "!")?;
                e.fmt_prec(f, 2)?;
            }
            TagExpr::And(l, r) => {
                l.fmt_prec(f, 1)?;
                write!(f, " & ")?;
                r.fmt_prec(f, 2)?;
            }
            TagExpr::Or(l, r) => {
                l.fmt_prec(f, 0)?;
                write!(f, " | ")?;
                r.fmt_prec(f, 1)?;
            }
        }
        if prec < parent {
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl fmt::Display for TagExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

impl FromStr for TagExpr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TagExpr::parse(s)
    }
}

impl Serialize for TagExpr {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TagExpr {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        TagExpr::parse(&s).map_err(serde::de::Error::custom)
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, message: &str) -> Error {
        Error::TagExpr {
            offset: self.pos,
            message: message.to_string(),
        }
    }

    fn rest(&self) -> &str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    fn eat(&mut self, token: &str) -> bool {
        self.skip_ws();
        if self.rest().starts_with(token) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<TagExpr> {
        let mut lhs = self.and()?;
        while self.eat("|") {
            lhs = lhs.or(self.and()?);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<TagExpr> {
        let mut lhs = self.unary()?;
        while self.eat("&") {
            lhs = lhs.and(self.unary()?);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<TagExpr> {
        if self.eat("!") {
            return Ok(self.unary()?.not());
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<TagExpr> {
        if self.eat("(") {
            let e = self.expr()?;
            if !self.eat(")") {
                return Err(self.error("expected `)`"));
            }
            return Ok(e);
        }
        if self.eat("tag") {
            let name = self.call_arg()?;
            return Ok(TagExpr::Tag(name));
        }
        if self.eat("judge") {
            let at = self.pos;
            let name = self.call_arg()?;
            return Judge::parse(&name).map(TagExpr::Judge).ok_or(Error::TagExpr {
                offset: at,
                message: format!("unknown judge `{name}`"),
            });
        }
        Err(self.error("expected `tag(..)`, `judge(..)`, `!` or `(`"))
    }

    fn call_arg(&mut self) -> Result<String> {
        if !self.eat("(") {
            return Err(self.error("expected `(`"));
        }
        self.skip_ws();
        let quote = match self.rest().chars().next() {
            Some(q @ ('\'' | '"')) => q,
            _ => return Err(self.error("expected a quoted string")),
        };
        self.pos += 1;
        let end = self
            .rest()
            .find(quote)
            .ok_or_else(|| self.error("unterminated string"))?;
        let value = self.rest()[..end].to_string();
        self.pos += end + 1;
        if !self.eat(")") {
            return Err(self.error("expected `)`"));
        }
        Ok(value)
    }
}
