//! Robust variable importance for logistic risk models and integer scorecard
//! generation.
//!
//! The crate is `no_std` + `alloc`. With the default `std` feature, the
//! heavier loops (ensemble importance, forests, bootstrap, parsimony refits)
//! run on the rayon global pool; results are identical either way because
//! every work unit owns its RNG stream and reductions are index-ordered.
//!
//! Pipeline, bottom up:
//!
//! - [`tabular`]: cohort representation, splitting, median imputation, design encoding
//! - [`glm`]: logistic fit, loss, AUC, bootstrap CI, generalized VIF
//! - [`rashomon`]: sampling of near-optimal logistic models
//! - [`sage`]: Shapley global importance per model, estimator and exact oracle
//! - [`pool`]: random-effects pooling of importance across models
//! - [`rank`]: pairwise-significance ranking, ensemble ranking, random-forest ranking
//! - [`forest`]: bagged Gini trees behind the random-forest ranking
//! - [`scorecard`]: discretization, integer points, parsimony curve, fine-tuning
//! - [`baseline`]: LACE index and Charlson comorbidity index
//! - [`synth`]: seeded synthetic cohorts with known ground truth

#![cfg_attr(not(feature = "std"), no_std)]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::inconsistent_digit_grouping)]

extern crate alloc;

pub mod baseline;
pub mod error;
pub mod forest;
pub mod glm;
pub mod linalg;
pub mod pool;
pub mod rank;
pub mod rashomon;
pub mod sage;
pub mod scorecard;
pub mod stats;
pub mod synth;
pub mod tabular;

mod par;

pub use error::{Error, Result};
pub use baseline::{ComorbidityFlags, LaceInput, WeightMap};
pub use glm::{AucResult, CoefficientVector};
pub use pool::PooledImportance;
pub use rank::{RankMethod, RankTable};
pub use rashomon::ModelEnsemble;
pub use sage::{ImportanceRecord, SageConfig};
pub use scorecard::{CutSet, ParsimonyCurve, ScoringTable};
pub use synth::GeneratorSpec;
pub use tabular::{Cohort, DesignMatrix, Partition, VariableKind, VariableSchema};

/// Derives a child seed for a named stage or indexed work unit.
///
/// SplitMix64 finalizer over `seed ^ salt`; distinct salts give
/// decorrelated streams from one master seed.
pub fn derive_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) fn rng_for(seed: u64, stream: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
