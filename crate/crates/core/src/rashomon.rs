//! Sampling of near-optimal logistic models: coefficient vectors whose mean
//! loss is within `(1 + epsilon)` of the optimum.
//!
//! Candidates are drawn from `N(θ*, c²·Σ̂)` with `Σ̂` the inverse observed
//! information at the optimum. The scale `c` is calibrated on a fixed pilot
//! batch so that raw acceptance lands in [20%, 60%], then accepted candidates
//! are thinned round-robin over ten equal-width loss sub-bands so the
//! ensemble spreads across the whole band instead of piling up at one end.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::glm::{logistic_loss, observed_information, CoefficientVector};
use crate::linalg::Cholesky;
use crate::tabular::DesignMatrix;

pub const DEFAULT_MODELS: usize = 350;
pub const DEFAULT_EPSILON: f64 = 0.05;

const PILOT_DRAWS: usize = 256;
const TARGET_LOW: f64 = 0.2;
const TARGET_HIGH: f64 = 0.6;
const SUB_BANDS: usize = 10;
/// Accepted candidates gathered before thinning, as a multiple of `m`.
const POOL_FACTOR: usize = 4;
const DRAW_CAP_FACTOR: usize = 1000;
const MIN_ACCEPTANCE: f64 = 0.001;

const PILOT_SALT: u64 = 0x50_494c_4f54;
const DRAW_SALT: u64 = 0x4452_4157;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelEnsemble {
    /// The optimal model the sampler is centered on.
    pub center: CoefficientVector,
    pub models: Vec<CoefficientVector>,
    pub epsilon: f64,
    pub seed: u64,
    /// Accepted / drawn over the main sampling run at the calibrated scale.
    pub acceptance_rate: f64,
    /// Calibrated multiplier `c` on the inverse-information covariance.
    pub scale: f64,
    /// Raw candidate draws made after calibration.
    pub draws: usize,
}

impl ModelEnsemble {
    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    /// Upper loss bound `(1 + epsilon)·L_min`.
    pub fn loss_bound(&self) -> f64 {
        (1.0 + self.epsilon) * self.center.loss
    }
}

/// Draws candidates around a fitted center; one RNG stream per candidate index.
struct Proposal<'a> {
    center: Vec<f64>,
    chol: Cholesky,
    design: &'a DesignMatrix,
    outcome: &'a [f64],
}

impl<'a> Proposal<'a> {
    fn new(center: &CoefficientVector, design: &'a DesignMatrix, outcome: &'a [f64]) -> Result<Self> {
        let mut info = observed_information(center, design);
        let p = info.dim();
        let chol = match info.cholesky(1e-12) {
            Some(c) => c,
            None => {
                let jitter = 1e-8 * (0..p).map(|i| info[(i, i)]).sum::<f64>() / p as f64;
                for i in 0..p {
                    info[(i, i)] += jitter;
                }
                info.cholesky(1e-14)
                    .ok_or_else(|| Error::Sampling("observed information is not positive definite".into()))?
            }
        };
        Ok(Self { center: center.to_params(), chol, design, outcome })
    }

    /// Standardized direction for candidate `index`: `L⁻ᵀ z`, `z ~ N(0, I)`.
    fn direction(&self, seed: u64, index: u64) -> Vec<f64> {
        let mut rng = crate::rng_for(seed, index);
        let z: Vec<f64> = (0..self.center.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
        self.chol.backward(&z)
    }

    fn candidate(&self, direction: &[f64], scale: f64) -> Result<CoefficientVector> {
        let params: Vec<f64> = self.center.iter().zip(direction).map(|(c, d)| c + scale * d).collect();
        let mut model = CoefficientVector::from_params(&params);
        model.loss = logistic_loss(&model, self.design, self.outcome)?;
        Ok(model)
    }

    fn pilot_losses(&self, directions: &[Vec<f64>], scale: f64) -> Result<Vec<f64>> {
        crate::par::map_range(directions.len(), |i| self.candidate(&directions[i], scale).map(|m| m.loss))
            .into_iter()
            .collect()
    }
}

fn acceptance(losses: &[f64], bound: f64) -> f64 {
    losses.iter().filter(|&&l| l <= bound).count() as f64 / losses.len() as f64
}

/// Finds `c` with pilot acceptance in [20%, 60%]: doubling/halving to
/// bracket, then bisection on `log c`. Pilot draws are shared across trials,
/// so acceptance is monotone in `c`.
fn calibrate(proposal: &Proposal<'_>, bound: f64, seed: u64) -> Result<f64> {
    let pilot_seed = crate::derive_seed(seed, PILOT_SALT);
    let directions: Vec<Vec<f64>> = (0..PILOT_DRAWS as u64).map(|i| proposal.direction(pilot_seed, i)).collect();
    let rate = |c: f64| proposal.pilot_losses(&directions, c).map(|l| acceptance(&l, bound));
    let in_band = |a: f64| (TARGET_LOW..=TARGET_HIGH).contains(&a);

    let mut c = 1.0;
    let mut a = rate(c)?;
    if in_band(a) {
        return Ok(c);
    }
    // (small scale, large scale): acceptance above band at `lo`, below at `hi`
    let (mut lo, mut hi);
    if a > TARGET_HIGH {
        loop {
            lo = c;
            c *= 2.0;
            a = rate(c)?;
            if in_band(a) {
                return Ok(c);
            }
            if a < TARGET_LOW {
                hi = c;
                break;
            }
            if c > 1e12 {
                return Err(Error::Sampling("acceptance never drops below 60%; loss is flat in all directions".into()));
            }
        }
    } else {
        loop {
            hi = c;
            c *= 0.5;
            a = rate(c)?;
            if in_band(a) {
                return Ok(c);
            }
            if a > TARGET_HIGH {
                lo = c;
                break;
            }
            if c < 1e-12 {
                return Err(Error::Sampling(format!(
                    "pilot acceptance {a:.4} even at scale {c:e}; use a larger epsilon"
                )));
            }
        }
    }
    for _ in 0..60 {
        c = libm::sqrt(lo * hi);
        a = rate(c)?;
        if in_band(a) {
            return Ok(c);
        }
        if a > TARGET_HIGH {
            lo = c;
        } else {
            hi = c;
        }
    }
    Ok(c)
}

/// Acceptance rate of `n_draws` main-stream candidates at a fixed scale.
///
/// Exposed so that monotonicity in `epsilon` can be checked directly: with
/// the same seed and scale, a larger band accepts a superset of candidates.
pub fn acceptance_at(
    center: &CoefficientVector,
    design: &DesignMatrix,
    outcome: &[f64],
    scale: f64,
    epsilon: f64,
    n_draws: usize,
    seed: u64,
) -> Result<f64> {
    let proposal = Proposal::new(center, design, outcome)?;
    let l_min = logistic_loss(center, design, outcome)?;
    let draw_seed = crate::derive_seed(seed, DRAW_SALT);
    let losses: Vec<f64> = crate::par::map_range(n_draws, |i| {
        proposal.candidate(&proposal.direction(draw_seed, i as u64), scale).map(|m| m.loss)
    })
    .into_iter()
    .collect::<Result<_>>()?;
    Ok(acceptance(&losses, (1.0 + epsilon) * l_min))
}

/// Samples `m` models with loss at most `(1 + epsilon)` times the center's.
pub fn sample_ensemble(
    center: &CoefficientVector,
    design: &DesignMatrix,
    outcome: &[f64],
    m: usize,
    epsilon: f64,
    seed: u64,
) -> Result<ModelEnsemble> {
    if m < 3 {
        return Err(Error::Invalid(format!("ensemble size must be at least 3, got {m}")));
    }
    if !(epsilon > 0.0) {
        return Err(Error::Invalid(format!("epsilon must be positive, got {epsilon}")));
    }
    let l_min = logistic_loss(center, design, outcome)?;
    let bound = (1.0 + epsilon) * l_min;
    let proposal = Proposal::new(center, design, outcome)?;
    let scale = calibrate(&proposal, bound, seed)?;

    let draw_seed = crate::derive_seed(seed, DRAW_SALT);
    let cap = DRAW_CAP_FACTOR * m;
    let pool_target = POOL_FACTOR * m;
    let batch = m.max(64);
    let mut pool: Vec<(usize, CoefficientVector)> = Vec::new();
    let mut drawn = 0usize;
    while pool.len() < pool_target && drawn < cap {
        let size = batch.min(cap - drawn);
        let start = drawn;
        let models: Vec<Result<CoefficientVector>> = crate::par::map_range(size, |i| {
            proposal.candidate(&proposal.direction(draw_seed, (start + i) as u64), scale)
        });
        for (i, model) in models.into_iter().enumerate() {
            let model = model?;
            if model.loss <= bound {
                pool.push((start + i, model));
            }
        }
        drawn += size;
        if drawn >= 10 * batch && (pool.len() as f64) < MIN_ACCEPTANCE * drawn as f64 {
            break;
        }
    }
    let acceptance_rate = pool.len() as f64 / drawn as f64;
    if acceptance_rate < MIN_ACCEPTANCE || pool.len() < m {
        return Err(Error::Sampling(format!(
            "accepted {} of {drawn} candidates (rate {acceptance_rate:.5}); use a larger epsilon",
            pool.len()
        )));
    }

    // round-robin over loss sub-bands, lowest candidate index first within a band
    let width = (bound - l_min) / SUB_BANDS as f64;
    let mut bands: Vec<Vec<usize>> = vec![Vec::new(); SUB_BANDS];
    for (slot, (_, model)) in pool.iter().enumerate() {
        let band = if width > 0.0 { ((model.loss - l_min).max(0.0) / width) as usize } else { 0 };
        bands[band.min(SUB_BANDS - 1)].push(slot);
    }
    let mut cursor = [0usize; SUB_BANDS];
    let mut chosen: Vec<usize> = Vec::with_capacity(m);
    while chosen.len() < m {
        for b in 0..SUB_BANDS {
            if chosen.len() == m {
                break;
            }
            if let Some(&slot) = bands[b].get(cursor[b]) {
                chosen.push(slot);
                cursor[b] += 1;
            }
        }
    }
    chosen.sort_unstable();
    let models = chosen.into_iter().map(|slot| pool[slot].1.clone()).collect();
    let mut center = center.clone();
    center.loss = l_min;
    Ok(ModelEnsemble { center, models, epsilon, seed, acceptance_rate, scale, draws: drawn })
}
