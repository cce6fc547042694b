use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::fit::FitResult;

/// Reporting-time shift that puts `model` at `rating`.
#[derive(Debug, Clone, PartialEq)]
pub struct Anchor {
    pub model: String,
    pub rating: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeaderboardRow {
    pub rank: usize,
    pub model: String,
    pub rating: Estimate,
    /// One entry per modifier term, in spec order.
    pub modifiers: Vec<Estimate>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Leaderboard {
    pub modifier_names: Vec<String>,
    pub rows: Vec<LeaderboardRow>,
}

/// Rows sorted by base rating, highest first (ties by name).
pub fn build_leaderboard(fit: &FitResult, stds: &[f64], anchor: Option<&Anchor>) -> Result<Leaderboard> {
    let index = &fit.index;
    if stds.len() != index.len() {
        return Err(Error::invalid("uncertainties", format!("expected {} values, got {}", index.len(), stds.len())));
    }
    let theta = fit.params.as_slice();
    let shift = match anchor {
        Some(a) => {
            let m = index.model_position(&a.model).ok_or_else(|| Error::UnknownModel(a.model.clone()))?;
            a.rating - theta[index.base(m)]
        }
        None => 0.0,
    };
    let mut rows: Vec<LeaderboardRow> = index
        .models()
        .iter()
        .enumerate()
        .map(|(m, model)| LeaderboardRow {
            rank: 0,
            model: model.clone(),
            rating: Estimate {
                value: theta[index.base(m)] + shift,
                std: stds[index.base(m)],
            },
            modifiers: (0..index.modifier_terms().len())
                .map(|t| Estimate {
                    value: theta[index.beta(m, t)],
                    std: stds[index.beta(m, t)],
                })
                .collect(),
        })
        .collect();
    rows.sort_by(|a, b| b.rating.value.total_cmp(&a.rating.value).then_with(|| a.model.cmp(&b.model)));
    for (i, r) in rows.iter_mut().enumerate() {
        r.rank = i + 1;
    }
    Ok(Leaderboard {
        modifier_names: index.modifier_terms().to_vec(),
        rows,
    })
}

impl Leaderboard {
    /// `rank,model,rating,rating_std,<modifier>,<modifier>_std,...`
    pub fn to_csv(&self) -> String {
        let mut out = String::from("rank,model,rating,rating_std");
        for name in &self.modifier_names {
            write!(out, ",{name},{name}_std").unwrap();
        }
        out.push('\n');
        for r in &self.rows {
            write!(out, "{},{},{},{}", r.rank, csv_field(&r.model), r.rating.value, r.rating.std).unwrap();
            for e in &r.modifiers {
                write!(out, ",{},{}", e.value, e.std).unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn to_markdown(&self) -> String {
        let mut header = vec!["Rank".to_string(), "Model".to_string(), "Rating".to_string()];
        header.extend(self.modifier_names.iter().cloned());
        let cells: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                let mut row = vec![
                    r.rank.to_string(),
                    r.model.clone(),
                    format!("{:.0} ± {:.1}", r.rating.value, r.rating.std),
                ];
                row.extend(r.modifiers.iter().map(|e| format!("{:+.0} ± {:.1}", e.value, e.std)));
                row
            })
            .collect();
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        super::markdown_table(&header, &cells)
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_index, Params, PriorSigma, RatingSpec, TagExpr};

    fn fit(bases: &[f64]) -> FitResult {
        let spec = RatingSpec::univariate().with_modifier("english", TagExpr::tag("english"), PriorSigma::Fixed(30.0));
        let names: Vec<String> = (0..bases.len()).map(|i| format!("m{i}")).collect();
        let index = build_index(&spec, names).unwrap();
        let mut values = bases.to_vec();
        values.extend((0..bases.len()).map(|i| -13.0 + i as f64));
        FitResult {
            params: Params(values),
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

    #[test]
    fn ranks_by_rating() {
        let f = fit(&[1100.0, 1300.0, 1200.0]);
        let lb = build_leaderboard(&f, &[1.0; 6], None).unwrap();
        let order: Vec<_> = lb.rows.iter().map(|r| (r.rank, r.model.as_str())).collect();
        assert_eq!(order, vec![(1, "m1"), (2, "m2"), (3, "m0")]);
    }

    #[test]
    fn anchor_is_rigid_shift() {
        let f = fit(&[1100.0, 1300.0, 1200.0]);
        let plain = build_leaderboard(&f, &[0.0; 6], None).unwrap();
        let anchored = build_leaderboard(&f, &[0.0; 6], Some(&Anchor { model: "m0".into(), rating: 1114.0 })).unwrap();
        assert_eq!(anchored.rows[2].rating.value, 1114.0);
        for (p, a) in plain.rows.iter().zip(&anchored.rows) {
            assert_eq!(p.model, a.model);
            assert_eq!(a.rating.value - p.rating.value, 14.0);
        }
        assert!(build_leaderboard(&f, &[0.0; 6], Some(&Anchor { model: "zz".into(), rating: 0.0 })).is_err());
    }

    #[test]
    fn renders_signed_modifiers() {
        let f = fit(&[1300.0]);
        let lb = build_leaderboard(&f, &[4.4, 7.1], None).unwrap();
        assert_eq!(lb.to_csv(), "rank,model,rating,rating_std,english,english_std\n1,m0,1300,4.4,-13,7.1\n");
        let md = lb.to_markdown();
        assert!(md.contains("1300 ± 4.4"), "{md}");
        assert!(md.contains("-13 ± 7.1"), "{md}");
    }

    #[test]
    fn rejects_mismatched_uncertainties() {
        assert!(build_leaderboard(&fit(&[1.0, 2.0]), &[0.0; 3], None).is_err());
    }
}
