use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::TagExpr;
use crate::error::{Error, Result};
use crate::features::FeatureDef;

/// Standard deviation of a zero-mean (or base-mean) Gaussian prior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PriorSigma {
    Fixed(f64),
    /// To be chosen by cross-validation before fitting.
    Cv,
    /// No prior; the term is fitted by maximum likelihood alone.
    Flat,
}

impl PriorSigma {
    /// `1/σ²`, or `None` when the prior is still unresolved.
    pub fn precision(self) -> Option<f64> {
        match self {
            PriorSigma::Fixed(s) => Some(1.0 / (s * s)),
            PriorSigma::Flat => Some(0.0),
            PriorSigma::Cv => None,
        }
    }

    fn check(self, field: &str) -> Result<()> {
        if let PriorSigma::Fixed(s) = self {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::invalid(field, format!("prior sigma must be a positive finite number, got {s}")));
            }
        }
        Ok(())
    }
}

impl fmt::Display for PriorSigma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PriorSigma::Fixed(s) => write!(f, "{s}"),
            PriorSigma::Cv => write!(f, "cv"),
            PriorSigma::Flat => write!(f, "none"),
        }
    }
}

impl Serialize for PriorSigma {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            PriorSigma::Fixed(v) => s.serialize_f64(*v),
            PriorSigma::Cv => s.serialize_str("cv"),
            PriorSigma::Flat => s.serialize_str("none"),
        }
    }
}

impl<'de> Deserialize<'de> for PriorSigma {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = PriorSigma;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a positive number, \"cv\" or \"none\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<PriorSigma, E> {
                Ok(PriorSigma::Fixed(v))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<PriorSigma, E> {
                Ok(PriorSigma::Fixed(v as f64))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<PriorSigma, E> {
                Ok(PriorSigma::Fixed(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<PriorSigma, E> {
                match v {
                    "cv" => Ok(PriorSigma::Cv),
                    "none" => Ok(PriorSigma::Flat),
                    other => Err(E::invalid_value(de::Unexpected::Str(other), &self)),
                }
            }

            fn visit_unit<E: de::Error>(self) -> std::result::Result<PriorSigma, E> {
                Ok(PriorSigma::Flat)
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasePrior {
    pub mean: f64,
    pub sigma: PriorSigma,
}

impl Default for BasePrior {
    fn default() -> Self {
        BasePrior {
            mean: 1000.0,
            sigma: PriorSigma::Fixed(400.0),
        }
    }
}

/// Bias coefficient shared by all models, multiplying a per-side feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharedTerm {
    #[serde(flatten)]
    pub feature: FeatureDef,
    pub prior_sigma: PriorSigma,
}

/// Per-model rating offset active on games matching `tag_expr`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModifierTerm {
    pub name: String,
    pub tag_expr: TagExpr,
    pub prior_sigma: PriorSigma,
}

/// Declarative description of how a model's rating in a game is composed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatingSpec {
    #[serde(default = "default_scale")]
    pub scale: f64,
    #[serde(default)]
    pub base_prior: BasePrior,
    #[serde(default)]
    pub shared: Vec<SharedTerm>,
    #[serde(default)]
    pub modifiers: Vec<ModifierTerm>,
}

fn default_scale() -> f64 {
    400.0
}

impl Default for RatingSpec {
    fn default() -> Self {
        RatingSpec {
            scale: default_scale(),
            base_prior: BasePrior::default(),
            shared: Vec::new(),
            modifiers: Vec::new(),
        }
    }
}

impl RatingSpec {
    /// Plain Bradley-Terry: base ratings only.
    pub fn univariate() -> Self {
        Self::default()
    }

    pub fn with_base_prior(mut self, mean: f64, sigma: PriorSigma) -> Self {
        self.base_prior = BasePrior { mean, sigma };
        self
    }

    pub fn with_shared(mut self, feature: FeatureDef, prior_sigma: PriorSigma) -> Self {
        self.shared.push(SharedTerm { feature, prior_sigma });
        self
    }

    pub fn with_modifier(mut self, name: impl Into<String>, tag_expr: TagExpr, prior_sigma: PriorSigma) -> Self {
        self.modifiers.push(ModifierTerm {
            name: name.into(),
            tag_expr,
            prior_sigma,
        });
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::invalid("scale", "must be a positive finite number"));
        }
        if !self.base_prior.mean.is_finite() {
            return Err(Error::invalid("base_prior.mean", "must be finite"));
        }
        if self.base_prior.sigma == PriorSigma::Cv {
            return Err(Error::invalid("base_prior.sigma", "cross-validation is only supported for terms"));
        }
        self.base_prior.sigma.check("base_prior.sigma")?;
        let mut names = HashSet::new();
        for (i, t) in self.shared.iter().enumerate() {
            if t.feature.name.is_empty() {
                return Err(Error::invalid(format!("shared[{i}].name"), "must be non-empty"));
            }
            if !names.insert(t.feature.name.as_str()) {
                return Err(Error::invalid(format!("shared[{i}].name"), format!("duplicate term name `{}`", t.feature.name)));
            }
            t.prior_sigma.check(&format!("shared[{i}].prior_sigma"))?;
        }
        for (i, t) in self.modifiers.iter().enumerate() {
            if t.name.is_empty() {
                return Err(Error::invalid(format!("modifiers[{i}].name"), "must be non-empty"));
            }
            if !names.insert(t.name.as_str()) {
                return Err(Error::invalid(format!("modifiers[{i}].name"), format!("duplicate term name `{}`", t.name)));
            }
            t.prior_sigma.check(&format!("modifiers[{i}].prior_sigma"))?;
        }
        Ok(())
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let spec: RatingSpec = serde_json::from_str(text).map_err(|e| Error::invalid("spec", e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serialization cannot fail")
    }

    /// Names of terms whose prior is still `"cv"`, shared terms first.
    pub fn cv_terms(&self) -> Vec<String> {
        let shared = self.shared.iter().filter(|t| t.prior_sigma == PriorSigma::Cv).map(|t| t.feature.name.clone());
        let modifiers = self.modifiers.iter().filter(|t| t.prior_sigma == PriorSigma::Cv).map(|t| t.name.clone());
        shared.chain(modifiers).collect()
    }

    pub fn term_sigma(&self, term: &str) -> Option<PriorSigma> {
        self.shared
            .iter()
            .find(|t| t.feature.name == term)
            .map(|t| t.prior_sigma)
            .or_else(|| self.modifiers.iter().find(|t| t.name == term).map(|t| t.prior_sigma))
    }

    /// Copy of the spec with one term's prior replaced.
    pub fn with_term_sigma(&self, term: &str, sigma: PriorSigma) -> Result<RatingSpec> {
        let mut out = self.clone();
        if let Some(t) = out.shared.iter_mut().find(|t| t.feature.name == term) {
            t.prior_sigma = sigma;
        } else if let Some(t) = out.modifiers.iter_mut().find(|t| t.name == term) {
            t.prior_sigma = sigma;
        } else {
            return Err(Error::invalid("term", format!("no term named `{term}`")));
        }
        Ok(out)
    }

    pub fn shared_term(&self, name: &str) -> Option<&SharedTerm> {
        self.shared.iter().find(|t| t.feature.name == name)
    }

    /// Errors if any prior is still `"cv"`.
    pub fn ensure_resolved(&self) -> Result<()> {
        match self.cv_terms().into_iter().next() {
            Some(term) => Err(Error::UnresolvedPrior(term)),
            None => Ok(()),
        }
    }
}
