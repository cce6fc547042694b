use std::collections::{BTreeSet, HashMap, HashSet};

use super::{PriorSigma, RatingSpec};
use crate::error::{Error, Result};

/// Which block of the parameter vector an entry belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParamKind {
    Base { model: usize },
    Alpha { term: usize },
    Beta { model: usize, term: usize },
}

/// Layout of the flat parameter vector.
///
/// Offsets: base ratings for the sorted roster first, then one coefficient
/// per shared term in spec order, then `beta` model-major
/// (`models + shared + model * modifiers + term`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamIndex {
    models: Vec<String>,
    shared: Vec<String>,
    modifiers: Vec<String>,
    model_pos: HashMap<String, usize>,
}

/// Builds the layout for `spec` over `roster`, which is sorted first.
pub fn build_index<I, S>(spec: &RatingSpec, roster: I) -> Result<ParamIndex>
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let models: BTreeSet<String> = roster.into_iter().map(Into::into).collect();
    if models.is_empty() {
        return Err(Error::Empty("roster has no models".into()));
    }
    let mut seen = HashSet::new();
    for name in spec.shared.iter().map(|t| &t.feature.name).chain(spec.modifiers.iter().map(|t| &t.name)) {
        if !seen.insert(name) {
            return Err(Error::invalid("term", format!("duplicate term name `{name}`")));
        }
    }
    let models: Vec<String> = models.into_iter().collect();
    let model_pos = models.iter().enumerate().map(|(i, m)| (m.clone(), i)).collect();
    Ok(ParamIndex {
        models,
        shared: spec.shared.iter().map(|t| t.feature.name.clone()).collect(),
        modifiers: spec.modifiers.iter().map(|t| t.name.clone()).collect(),
        model_pos,
    })
}

impl ParamIndex {
    pub fn len(&self) -> usize {
        self.models.len() * (1 + self.modifiers.len()) + self.shared.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn models(&self) -> &[String] {
        &self.models
    }

    pub fn shared_terms(&self) -> &[String] {
        &self.shared
    }

    pub fn modifier_terms(&self) -> &[String] {
        &self.modifiers
    }

    pub fn model_position(&self, model: &str) -> Option<usize> {
        self.model_pos.get(model).copied()
    }

    pub fn base(&self, model: usize) -> usize {
        model
    }

    pub fn alpha(&self, term: usize) -> usize {
        self.models.len() + term
    }

    pub fn beta(&self, model: usize, term: usize) -> usize {
        self.models.len() + self.shared.len() + model * self.modifiers.len() + term
    }

    pub fn kind(&self, offset: usize) -> ParamKind {
        let k = self.models.len();
        let s = self.shared.len();
        if offset < k {
            ParamKind::Base { model: offset }
        } else if offset < k + s {
            ParamKind::Alpha { term: offset - k }
        } else {
            let rel = offset - k - s;
            let t = self.modifiers.len();
            ParamKind::Beta {
                model: rel / t,
                term: rel % t,
            }
        }
    }

    /// `base:<model>`, `alpha:<term>` or `beta:<model>:<term>`.
    pub fn name(&self, offset: usize) -> String {
        match self.kind(offset) {
            ParamKind::Base { model } => format!("base:{}", self.models[model]),
            ParamKind::Alpha { term } => format!("alpha:{}", self.shared[term]),
            ParamKind::Beta { model, term } => format!("beta:{}:{}", self.models[model], self.modifiers[term]),
        }
    }

    pub fn names(&self) -> Vec<String> {
        (0..self.len()).map(|i| self.name(i)).collect()
    }

    /// Inverse of [`ParamIndex::name`].
    pub fn offset_of(&self, name: &str) -> Option<usize> {
        let (kind, rest) = name.split_once(':')?;
        match kind {
            "base" => self.model_position(rest).map(|m| self.base(m)),
            "alpha" => self.shared.iter().position(|t| t == rest).map(|t| self.alpha(t)),
            "beta" => {
                // model names may contain ':', term names are matched from the right
                let (model, term) = rest.rsplit_once(':')?;
                let m = self.model_position(model)?;
                let t = self.modifiers.iter().position(|x| x == term)?;
                Some(self.beta(m, t))
            }
            _ => None,
        }
    }

    /// Prior mean and precision (`1/σ²`) of every entry.
    pub fn priors(&self, spec: &RatingSpec) -> Result<(Vec<f64>, Vec<f64>)> {
        let precision = |sigma: PriorSigma, term: &str| sigma.precision().ok_or_else(|| Error::UnresolvedPrior(term.to_string()));
        let base_prec = precision(spec.base_prior.sigma, "base")?;
        let mut means = vec![0.0; self.len()];
        let mut precs = vec![0.0; self.len()];
        for m in 0..self.models.len() {
            means[self.base(m)] = spec.base_prior.mean;
            precs[self.base(m)] = base_prec;
        }
        for (k, t) in spec.shared.iter().enumerate() {
            precs[self.alpha(k)] = precision(t.prior_sigma, &t.feature.name)?;
        }
        for (j, t) in spec.modifiers.iter().enumerate() {
            let p = precision(t.prior_sigma, &t.name)?;
            for m in 0..self.models.len() {
                precs[self.beta(m, j)] = p;
            }
        }
        Ok((means, precs))
    }

    /// Whether `spec` has the same term layout this index was built for.
    pub fn matches_spec(&self, spec: &RatingSpec) -> bool {
        self.shared.iter().eq(spec.shared.iter().map(|t| &t.feature.name))
            && self.modifiers.iter().eq(spec.modifiers.iter().map(|t| &t.name))
    }
}

/// Parameter values laid out by a [`ParamIndex`].
#[derive(Debug, Clone, PartialEq)]
pub struct Params(pub Vec<f64>);

impl Params {
    /// Base ratings at the base prior mean, every coefficient at zero.
    pub fn prior_means(spec: &RatingSpec, index: &ParamIndex) -> Params {
        let mut v = vec![0.0; index.len()];
        v[..index.models().len()].fill(spec.base_prior.mean);
        Params(v)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn base(&self, index: &ParamIndex, model: &str) -> Option<f64> {
        index.model_position(model).map(|m| self.0[index.base(m)])
    }

    pub fn get(&self, index: &ParamIndex, name: &str) -> Option<f64> {
        index.offset_of(name).map(|i| self.0[i])
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}
