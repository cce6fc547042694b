//! Multivariate Bradley-Terry ratings for pairwise-preference data.
//!
//! A model's rating in a game is its base skill plus shared bias terms
//! (coefficients on per-side features such as completion length or position)
//! plus per-model modifiers active on tagged subsets of games. Ratings are
//! fitted by penalized maximum likelihood with Gaussian priors, which pin the
//! otherwise shift-invariant rating level and let sparse tasks borrow
//! strength from the rest of the data.
//!
//! ```
//! use polyfit_core::dataset::{Game, GameDataset, Judge, Outcome};
//! use polyfit_core::fit::{fit_map, FitOptions};
//! use polyfit_core::model::RatingSpec;
//!
//! let games = GameDataset::new(vec![
//!     Game::new("a", "b", Outcome::AWins, Judge::Human),
//!     Game::new("b", "a", Outcome::Draw, Judge::Human),
//! ])
//! .unwrap();
//! let fit = fit_map(&games, &RatingSpec::univariate(), &FitOptions::default()).unwrap();
//! assert!(fit.base("a").unwrap() > fit.base("b").unwrap());
//! ```

pub mod analysis;
pub mod dataset;
pub mod error;
pub mod features;
pub mod fit;
pub mod model;

pub use dataset::{Game, GameDataset, Judge, Outcome};
pub use error::{Error, Result};
pub use fit::{fit_map, FitOptions, FitResult};
pub use model::{ParamIndex, Params, PriorSigma, RatingSpec, TagExpr};
