use std::fmt::Write as _;

use crate::dataset::GameDataset;
use crate::error::{Error, Result};
use crate::features::FeatureDef;
use crate::fit::FitResult;

/// Mean of `|f(g, a) - f(g, b)|` over the games the feature applies to, and
/// the number of such games.
pub fn mean_abs_gap(dataset: &GameDataset, def: &FeatureDef) -> Result<(f64, usize)> {
    let mut total = 0.0;
    let mut count = 0;
    for (i, game) in dataset.games().iter().enumerate() {
        if !def.applies(game) {
            continue;
        }
        let values = def.values(game).ok_or_else(|| Error::Feature {
            game: i,
            feature: def.name.clone(),
            message: "value missing for an applicable term".into(),
        })?;
        total += values.diff().abs();
        count += 1;
    }
    if count == 0 {
        return Err(Error::Empty(format!("no games where `{}` applies", def.name)));
    }
    Ok((total / count as f64, count))
}

/// Expected rating-point effect of a shared term: `α · E_g|f(g, a) - f(g, b)|`.
/// Carries the sign of `α`.
pub fn bias_influence(fit: &FitResult, dataset: &GameDataset, term: &str) -> Result<f64> {
    let k = fit
        .index
        .shared_terms()
        .iter()
        .position(|t| t == term)
        .ok_or_else(|| Error::invalid("term", format!("`{term}` is not a shared term of this fit")))?;
    let alpha = fit.params.0[fit.index.alpha(k)];
    let (gap, _) = mean_abs_gap(dataset, &fit.spec.shared[k].feature)?;
    Ok(alpha * gap)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiasRow {
    pub term: String,
    pub coefficient: f64,
    pub coefficient_std: f64,
    pub influence: f64,
    pub influence_std: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BiasReport {
    pub rows: Vec<BiasRow>,
}

/// One row per shared term. `stds` (indexed like the fit's parameters) gives
/// the coefficient uncertainty; influence uncertainty scales with the mean gap.
pub fn bias_report(fit: &FitResult, dataset: &GameDataset, stds: Option<&[f64]>) -> Result<BiasReport> {
    let mut rows = Vec::new();
    for (k, term) in fit.spec.shared.iter().enumerate() {
        let offset = fit.index.alpha(k);
        let coefficient = fit.params.0[offset];
        let coefficient_std = stds.map_or(0.0, |s| s[offset]);
        let (gap, _) = mean_abs_gap(dataset, &term.feature)?;
        rows.push(BiasRow {
            term: term.feature.name.clone(),
            coefficient,
            coefficient_std,
            influence: coefficient * gap,
            influence_std: coefficient_std * gap,
        });
    }
    Ok(BiasReport { rows })
}

impl BiasReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("term,coefficient,coefficient_std,influence,influence_std\n");
        for r in &self.rows {
            writeln!(out, "{},{},{},{},{}", r.term, r.coefficient, r.coefficient_std, r.influence, r.influence_std).unwrap();
        }
        out
    }

    pub fn to_markdown(&self) -> String {
        let cells: Vec<[String; 3]> = self
            .rows
            .iter()
            .map(|r| {
                [
                    r.term.clone(),
                    format!("{:.2} ± {:.2}", r.coefficient, r.coefficient_std),
                    format!("{:.2} ± {:.2}", r.influence, r.influence_std),
                ]
            })
            .collect();
        super::markdown_table(&["Bias", "Coefficient", "Influence"], &cells)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Game, Judge, Outcome};
    use crate::features::BuiltinKind;
    use crate::model::{build_index, Params, PriorSigma, RatingSpec};

    fn fit_with_alpha(def: FeatureDef, alpha: f64) -> FitResult {
        let spec = RatingSpec::univariate().with_shared(def, PriorSigma::Fixed(100.0));
        let index = build_index(&spec, ["a", "b"]).unwrap();
        FitResult {
            params: Params(vec![1000.0, 1000.0, alpha]),
            index,
            spec,
            objective: 0.0,
            iterations: 0,
            converged: true,
            gradient_max_abs: 0.0,
            clamped: 0,
            trace: vec![],
        }
    }

    fn gaps() -> GameDataset {
        let games = [0.2, 0.3, 0.4, 0.5, 0.6]
            .iter()
            .enumerate()
            .map(|(i, d)| {
                let g = Game::new("a", "b", Outcome::AWins, Judge::Human);
                if i % 2 == 0 {
                    g.with_feature("len", 0.0, *d)
                } else {
                    g.with_feature("len", *d, 0.0)
                }
            })
            .collect();
        GameDataset::new(games).unwrap()
    }

    #[test]
    fn toy_influence() {
        let fit = fit_with_alpha(FeatureDef::external("len"), 100.0);
        assert_eq!(bias_influence(&fit, &gaps(), "len").unwrap(), 40.0);
        let zero = fit_with_alpha(FeatureDef::external("len"), 0.0);
        assert_eq!(bias_influence(&zero, &gaps(), "len").unwrap(), 0.0);
        let neg = fit_with_alpha(FeatureDef::external("len"), -100.0);
        assert_eq!(bias_influence(&neg, &gaps(), "len").unwrap(), -40.0);
    }

    #[test]
    fn position_influence_is_coefficient() {
        let fit = fit_with_alpha(FeatureDef::builtin("position", BuiltinKind::Position), 37.53);
        assert_eq!(bias_influence(&fit, &gaps(), "position").unwrap(), 37.53);
    }

    #[test]
    fn errors() {
        let fit = fit_with_alpha(FeatureDef::external("len").for_judge(Judge::Llm), 1.0);
        assert!(matches!(bias_influence(&fit, &gaps(), "len"), Err(Error::Empty(_))));
        assert!(bias_influence(&fit, &gaps(), "other").is_err());
    }

    #[test]
    fn report_csv() {
        let fit = fit_with_alpha(FeatureDef::builtin("position", BuiltinKind::Position), 2.5);
        let stds = [0.0, 0.0, 0.5];
        let rep = bias_report(&fit, &gaps(), Some(&stds)).unwrap();
        assert_eq!(rep.to_csv(), "term,coefficient,coefficient_std,influence,influence_std\nposition,2.5,0.5,2.5,0.5\n");
        assert!(rep.to_markdown().contains("2.50 ± 0.50"));
    }
}
