//! Robust point matching under similarity transformations.
//!
//! Two point sets are matched by minimizing a concave objective over the
//! polytope of partial assignment matrices. Translation, rotation and scale
//! are eliminated in closed form, and the remaining problem in the matching
//! variable is solved by path following: the convex `‖p‖²` is gradually
//! morphed into the concave objective while a Frank-Wolfe solver tracks the
//! minimizer. The final answer is always an integral partial permutation.

pub mod baseline;
pub mod cloud;
pub mod config;
pub mod error;
pub mod io;
pub mod matching;
pub mod objective;
pub mod pathfollow;
pub mod polytope;
pub mod rng;
pub mod synthbench;
pub mod transform;

pub use cloud::{normalize_cloud, Normalization, PointCloud};
pub use config::MatchConfig;
pub use error::{Error, Result};
pub use matching::MatchVector;
pub use objective::VectorizedOperators;
pub use pathfollow::{match_point_sets, MatchResult};
pub use rng::RngStream;
pub use transform::SimilarityTransform;
