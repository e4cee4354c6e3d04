//! Logistic regression: IRLS fitting, loss, discrimination (AUC) and
//! collinearity diagnostics (generalized VIF).

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use libm::{exp, fabs, log1p};
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::SquareMatrix;
use crate::stats::{log_loss, quantile_sorted, sigmoid};
use crate::tabular::DesignMatrix;

/// Fitted (or sampled) logistic model over a [`DesignMatrix`] layout.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientVector {
    pub intercept: f64,
    pub betas: Vec<f64>,
    /// Mean clamped logistic loss on the data the model was fitted or evaluated on.
    pub loss: f64,
    pub converged: bool,
    /// Ridge penalty (mean-loss scale) used by the fit; 0 for a plain MLE.
    pub ridge: f64,
    pub warning: Option<String>,
}

impl CoefficientVector {
    /// An unfitted model with the given coefficients; `loss` is left at NaN
    /// until [`logistic_loss`] is evaluated.
    pub fn new(intercept: f64, betas: Vec<f64>) -> Self {
        Self { intercept, betas, loss: f64::NAN, converged: false, ridge: 0.0, warning: None }
    }

    /// `[intercept, betas...]`.
    pub fn to_params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.betas.len() + 1);
        p.push(self.intercept);
        p.extend_from_slice(&self.betas);
        p
    }

    pub fn from_params(params: &[f64]) -> Self {
        Self::new(params[0], params[1..].to_vec())
    }

    #[inline]
    pub fn linear_predictor(&self, row: &[f64]) -> f64 {
        self.intercept + row.iter().zip(&self.betas).map(|(x, b)| x * b).sum::<f64>()
    }

    #[inline]
    pub fn probability(&self, row: &[f64]) -> f64 {
        sigmoid(self.linear_predictor(row))
    }

    pub fn linear_predictors(&self, design: &DesignMatrix) -> Vec<f64> {
        (0..design.n_rows()).map(|i| self.linear_predictor(design.row(i))).collect()
    }
}

fn check_shapes(n_betas: usize, design: &DesignMatrix, outcome: &[f64]) -> Result<()> {
    if design.n_rows() != outcome.len() {
        return Err(Error::Shape(format!("{} design rows, {} outcomes", design.n_rows(), outcome.len())));
    }
    if design.n_cols() != n_betas {
        return Err(Error::Shape(format!("{} design columns, {} coefficients", design.n_cols(), n_betas)));
    }
    Ok(())
}

/// Mean logistic loss with probabilities clamped to `[1e-12, 1 - 1e-12]`.
pub fn logistic_loss(model: &CoefficientVector, design: &DesignMatrix, outcome: &[f64]) -> Result<f64> {
    check_shapes(model.betas.len(), design, outcome)?;
    if outcome.is_empty() {
        return Err(Error::Empty);
    }
    let total: f64 = (0..design.n_rows()).map(|i| log_loss(model.probability(design.row(i)), outcome[i])).sum();
    Ok(total / outcome.len() as f64)
}

/// Gradient of the (unpenalized) mean logistic loss, `[∂/∂intercept, ∂/∂β...]`.
pub fn loss_gradient(model: &CoefficientVector, design: &DesignMatrix, outcome: &[f64]) -> Result<Vec<f64>> {
    check_shapes(model.betas.len(), design, outcome)?;
    let k = design.n_cols();
    let mut g = vec![0.0; k + 1];
    for i in 0..design.n_rows() {
        let row = design.row(i);
        let r = model.probability(row) - outcome[i];
        g[0] += r;
        for j in 0..k {
            g[j + 1] += r * row[j];
        }
    }
    let n = outcome.len() as f64;
    g.iter_mut().for_each(|v| *v /= n);
    Ok(g)
}

/// `log(1 + e^{η}) - y η`, the unclamped per-row loss used by the optimizer.
#[inline]
fn smooth_loss(eta: f64, y: f64) -> f64 {
    let softplus = if eta > 0.0 { eta + log1p(exp(-eta)) } else { log1p(exp(eta)) };
    softplus - y * eta
}

const GRAD_TOL: f64 = 1e-8;
const MAX_ITER: usize = 100;
/// Linear predictors beyond this magnitude mean fitted probabilities within
/// ~1e-13 of 0 or 1: treated as (quasi-)separation.
const SEPARATION_ETA: f64 = 30.0;

struct NewtonResult {
    params: Vec<f64>,
    grad_norm: f64,
    separated: bool,
    failed: bool,
}

fn penalized_objective(params: &[f64], design: &DesignMatrix, y: &[f64], ridge: f64) -> f64 {
    let k = design.n_cols();
    let mut total = 0.0;
    for i in 0..design.n_rows() {
        let row = design.row(i);
        let eta = params[0] + (0..k).map(|j| row[j] * params[j + 1]).sum::<f64>();
        total += smooth_loss(eta, y[i]);
    }
    total / y.len() as f64 + 0.5 * ridge * params[1..].iter().map(|b| b * b).sum::<f64>()
}

fn newton(design: &DesignMatrix, y: &[f64], ridge: f64) -> NewtonResult {
    let n = y.len() as f64;
    let k = design.n_cols();
    let p = k + 1;
    let prevalence = y.iter().sum::<f64>() / n;
    let mut params = vec![0.0; p];
    params[0] = libm::log(prevalence / (1.0 - prevalence));
    let mut objective = penalized_objective(&params, design, y, ridge);
    let mut grad_norm = f64::INFINITY;

    for _ in 0..MAX_ITER {
        let mut grad = vec![0.0; p];
        let mut hess = SquareMatrix::zeros(p);
        let mut max_eta: f64 = 0.0;
        for i in 0..design.n_rows() {
            let row = design.row(i);
            let eta = params[0] + (0..k).map(|j| row[j] * params[j + 1]).sum::<f64>();
            max_eta = max_eta.max(fabs(eta));
            let prob = sigmoid(eta);
            let w = prob * (1.0 - prob);
            let r = prob - y[i];
            grad[0] += r;
            hess[(0, 0)] += w;
            for a in 0..k {
                let xa = row[a];
                if xa == 0.0 {
                    continue;
                }
                grad[a + 1] += r * xa;
                hess[(0, a + 1)] += w * xa;
                for b in a..k {
                    hess[(a + 1, b + 1)] += w * xa * row[b];
                }
            }
        }
        for a in 0..p {
            grad[a] /= n;
            for b in a..p {
                let v = hess[(a, b)] / n;
                hess[(a, b)] = v;
                hess[(b, a)] = v;
            }
        }
        for j in 1..p {
            grad[j] += ridge * params[j];
            hess[(j, j)] += ridge;
        }
        grad_norm = grad.iter().fold(0.0, |m: f64, g| m.max(fabs(*g)));
        if ridge == 0.0 && max_eta > SEPARATION_ETA {
            return NewtonResult { params, grad_norm, separated: true, failed: false };
        }
        if grad_norm < 1e-12 {
            break;
        }
        let Some(chol) = hess.cholesky(1e-14) else {
            return NewtonResult { params, grad_norm, separated: false, failed: true };
        };
        let step = chol.solve(&grad);
        let mut scale = 1.0;
        let mut improved = false;
        for _ in 0..40 {
            let trial: Vec<f64> = params.iter().zip(&step).map(|(t, s)| t - scale * s).collect();
            let f = penalized_objective(&trial, design, y, ridge);
            if f <= objective + 1e-15 * (1.0 + fabs(objective)) {
                params = trial;
                objective = f;
                improved = true;
                break;
            }
            scale *= 0.5;
        }
        if !improved {
            // no descent left at machine precision
            break;
        }
    }
    NewtonResult { params, grad_norm, separated: false, failed: false }
}

/// Minimizes mean logistic loss by Newton–IRLS with step-halving.
///
/// On separation or a non-positive-definite Hessian the fit is redone with a
/// ridge penalty of `1e-6·n` on the summed loss (intercept unpenalized); such
/// fits come back with `converged = false` and a warning.
pub fn fit_logistic(design: &DesignMatrix, outcome: &[f64]) -> Result<CoefficientVector> {
    check_shapes(design.n_cols(), design, outcome)?;
    let positives = outcome.iter().filter(|&&y| y > 0.5).count();
    let negatives = outcome.len() - positives;
    if positives < 2 || negatives < 2 {
        return Err(Error::SingleClass(format!("{positives} positive and {negatives} negative rows; need at least 2 of each")));
    }
    let plain = newton(design, outcome, 0.0);
    let (result, ridge, warning) = if plain.separated || plain.failed {
        let reason = if plain.separated { "separation detected" } else { "Hessian not positive definite" };
        // 1e-6·n on the summed loss is 1e-6 on the mean loss
        let ridge = 1e-6;
        let r = newton(design, outcome, ridge);
        if r.failed {
            return Err(Error::Fit(format!("{reason}; ridge refit also failed")));
        }
        (r, ridge, Some(format!("{reason}; returned ridge-regularized fit")))
    } else {
        (plain, 0.0, None)
    };
    let mut model = CoefficientVector::from_params(&result.params);
    model.loss = logistic_loss(&model, design, outcome)?;
    model.converged = ridge == 0.0 && result.grad_norm < GRAD_TOL;
    model.ridge = ridge;
    model.warning = warning;
    if ridge == 0.0 && !model.converged {
        model.warning = Some(format!("gradient max-norm {:.3e} after {MAX_ITER} iterations", result.grad_norm));
    }
    Ok(model)
}

/// Observed information (Hessian of the summed loss) at `model`, over
/// `[intercept, betas...]`.
pub fn observed_information(model: &CoefficientVector, design: &DesignMatrix) -> SquareMatrix {
    let k = design.n_cols();
    let p = k + 1;
    let mut h = SquareMatrix::zeros(p);
    for i in 0..design.n_rows() {
        let row = design.row(i);
        let prob = model.probability(row);
        let w = prob * (1.0 - prob);
        h[(0, 0)] += w;
        for a in 0..k {
            h[(0, a + 1)] += w * row[a];
            for b in a..k {
                h[(a + 1, b + 1)] += w * row[a] * row[b];
            }
        }
    }
    for a in 0..p {
        for b in a..p {
            h[(b, a)] = h[(a, b)];
        }
    }
    h
}

// ---------------------------------------------------------------------------
// discrimination

/// Area under the ROC curve as the Mann–Whitney probability that a random
/// positive outranks a random negative, ties counting one half.
pub fn auc(scores: &[f64], outcome: &[f64]) -> Result<f64> {
    if scores.len() != outcome.len() {
        return Err(Error::Shape(format!("{} scores, {} outcomes", scores.len(), outcome.len())));
    }
    let n_pos = outcome.iter().filter(|&&y| y > 0.5).count();
    let n_neg = outcome.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass("AUC needs positive and negative rows".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // sum of positive midranks (1-based); ties share the average rank
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        let pos_in_block = order[i..=j].iter().filter(|&&r| outcome[r] > 0.5).count();
        rank_sum += mid * pos_in_block as f64;
        i = j + 1;
    }
    let np = n_pos as f64;
    Ok((rank_sum - np * (np + 1.0) / 2.0) / (np * n_neg as f64))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AucResult {
    pub auc: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n_boot: usize,
}

/// AUC with a percentile-bootstrap 95% interval over seeded row resamples.
///
/// A resample containing one class is redrawn, at most 10 times. The
/// interval is widened to contain the point estimate when the percentile
/// bounds fall on one side of it.
pub fn auc_ci(scores: &[f64], outcome: &[f64], n_boot: usize, seed: u64) -> Result<AucResult> {
    if n_boot < 100 {
        return Err(Error::Invalid(format!("n_boot must be at least 100, got {n_boot}")));
    }
    let point = auc(scores, outcome)?;
    let n = scores.len();
    let boots: Vec<Result<f64>> = crate::par::map_range(n_boot, |b| {
        let mut rng = crate::rng_for(seed, b as u64);
        let mut s = vec![0.0; n];
        let mut y = vec![0.0; n];
        for _ in 0..10 {
            for i in 0..n {
                let r = rng.gen_range(0..n);
                s[i] = scores[r];
                y[i] = outcome[r];
            }
            let pos = y.iter().filter(|&&v| v > 0.5).count();
            if pos > 0 && pos < n {
                return auc(&s, &y);
            }
        }
        Err(Error::Bootstrap(format!("replicate {b}: 10 consecutive single-class resamples")))
    });
    let mut values = boots.into_iter().collect::<Result<Vec<f64>>>()?;
    values.sort_by(f64::total_cmp);
    let lo = quantile_sorted(&values, 0.025);
    let hi = quantile_sorted(&values, 0.975);
    Ok(AucResult { auc: point, ci_low: lo.min(point), ci_high: hi.max(point), n_boot })
}

// ---------------------------------------------------------------------------
// collinearity

#[derive(Debug, Clone, PartialEq)]
pub struct Gvif {
    pub variable: String,
    pub gvif: f64,
    /// Number of design columns for the variable.
    pub df: usize,
    /// `gvif^(1 / (2·df))`, comparable across variables of different width.
    pub adjusted: f64,
}

/// Generalized variance-inflation factor per variable,
/// `det(R₁₁)·det(R₂₂)/det(R)` with `R` the predictor correlation matrix
/// partitioned into the variable's columns versus the rest.
pub fn gvif(design: &DesignMatrix) -> Result<Vec<Gvif>> {
    let groups = design.groups();
    if groups.len() < 2 {
        return Err(Error::Invalid("GVIF needs at least two variables".into()));
    }
    let k = design.n_cols();
    let n = design.n_rows() as f64;
    let mut means = vec![0.0; k];
    for i in 0..design.n_rows() {
        for (m, x) in means.iter_mut().zip(design.row(i)) {
            *m += x;
        }
    }
    means.iter_mut().for_each(|m| *m /= n);
    let mut cov = SquareMatrix::zeros(k);
    for i in 0..design.n_rows() {
        let row = design.row(i);
        for a in 0..k {
            let da = row[a] - means[a];
            for b in a..k {
                cov[(a, b)] += da * (row[b] - means[b]);
            }
        }
    }
    let mut sd = vec![0.0; k];
    for a in 0..k {
        sd[a] = libm::sqrt(cov[(a, a)]);
        if !(sd[a] > 1e-12 * (1.0 + fabs(means[a]))) {
            let g = groups.iter().find(|g| g.columns.contains(&a)).expect("column belongs to a group");
            return Err(Error::Constant(g.name.clone()));
        }
    }
    let mut corr = SquareMatrix::zeros(k);
    for a in 0..k {
        for b in a..k {
            let r = if a == b { 1.0 } else { cov[(a, b)] / (sd[a] * sd[b]) };
            corr[(a, b)] = r;
            corr[(b, a)] = r;
        }
    }
    const TOL: f64 = 1e-10;
    let Some(full) = corr.cholesky(TOL) else {
        for (x, ga) in groups.iter().enumerate() {
            for gb in &groups[x + 1..] {
                let idx: Vec<usize> = ga.columns.clone().chain(gb.columns.clone()).collect();
                if corr.select(&idx).cholesky(TOL).is_none() {
                    return Err(Error::Collinear(ga.name.clone(), gb.name.clone()));
                }
            }
        }
        return Err(Error::Singular);
    };
    let log_det = full.log_det();
    groups
        .iter()
        .map(|g| {
            let inside: Vec<usize> = g.columns.clone().collect();
            let outside: Vec<usize> = (0..k).filter(|j| !g.columns.contains(j)).collect();
            let det_in = corr.select(&inside).cholesky(TOL).ok_or(Error::Singular)?.log_det();
            let det_out = corr.select(&outside).cholesky(TOL).ok_or(Error::Singular)?.log_det();
            let value = exp(det_in + det_out - log_det);
            let df = inside.len();
            Ok(Gvif { variable: g.name.clone(), gvif: value, df, adjusted: libm::pow(value, 1.0 / (2.0 * df as f64)) })
        })
        .collect()
}
