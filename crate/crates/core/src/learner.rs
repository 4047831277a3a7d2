//! Ridge-penalized binary logistic regression fitted by iteratively
//! reweighted least squares (Newton's method) with step halving.
//!
//! The objective maximized is
//!
//! ```text
//! L(b, w) = Σ_i [ y_i·z_i − ln(1 + e^{z_i}) ] − ridge·‖w‖²,   z_i = b + w·x_i
//! ```
//!
//! The intercept `b` is not penalized. Fitting starts from all zeros and is
//! fully deterministic.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearnerParams {
    pub ridge: f64,
    pub max_iterations: usize,
    /// Convergence threshold on the change of the penalized log-likelihood.
    pub tolerance: f64,
    pub decision_threshold: f64,
}

impl Default for LearnerParams {
    fn default() -> Self {
        Self {
            ridge: 1e-8,
            max_iterations: 200,
            tolerance: 1e-8,
            decision_threshold: 0.5,
        }
    }
}

impl LearnerParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.ridge >= 0.0 && self.ridge.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "ridge must be >= 0, got {}",
                self.ridge
            )));
        }
        if !(self.decision_threshold > 0.0 && self.decision_threshold < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "decision threshold must lie in (0, 1), got {}",
                self.decision_threshold
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter("max_iterations must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub iterations: usize,
    pub log_likelihood: f64,
    pub gradient_norm: f64,
    /// False when `max_iterations` was hit before convergence.
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub feature_names: Vec<String>,
    pub params: LearnerParams,
    pub training_meta: TrainingMeta,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// ln(1 + e^z) without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Linear scores `b + Xw`. `beta` holds the intercept first.
fn scores(x: &DMatrix<f64>, beta: &DVector<f64>) -> DVector<f64> {
    let w = beta.rows(1, beta.len() - 1);
    let mut z = x * w;
    z.add_scalar_mut(beta[0]);
    z
}

/// Penalized log-likelihood at `beta = [intercept, w...]`.
pub fn objective(x: &DMatrix<f64>, y: &[bool], beta: &DVector<f64>, ridge: f64) -> f64 {
    let z = scores(x, beta);
    let ll: f64 = z
        .iter()
        .zip(y)
        .map(|(&zi, &yi)| if yi { -softplus(-zi) } else { -softplus(zi) })
        .sum();
    let penalty: f64 = beta.iter().skip(1).map(|w| w * w).sum();
    ll - ridge * penalty
}

/// Analytic gradient of [`objective`].
pub fn gradient(x: &DMatrix<f64>, y: &[bool], beta: &DVector<f64>, ridge: f64) -> DVector<f64> {
    let z = scores(x, beta);
    let resid = DVector::from_iterator(
        y.len(),
        z.iter()
            .zip(y)
            .map(|(&zi, &yi)| f64::from(u8::from(yi)) - sigmoid(zi)),
    );
    let mut g = DVector::zeros(beta.len());
    g[0] = resid.sum();
    let gw = x.transpose() * &resid;
    for j in 0..gw.len() {
        g[j + 1] = gw[j] - 2.0 * ridge * beta[j + 1];
    }
    g
}

/// Negative Hessian `X̃ᵀ W X̃ + 2·ridge·I` (intercept block unpenalized).
fn information(x: &DMatrix<f64>, beta: &DVector<f64>, ridge: f64) -> DMatrix<f64> {
    let (m, k) = x.shape();
    let z = scores(x, beta);
    let mut design = DMatrix::zeros(m, k + 1);
    for i in 0..m {
        let p = sigmoid(z[i]);
        let s = (p * (1.0 - p)).sqrt();
        design[(i, 0)] = s;
        for j in 0..k {
            design[(i, j + 1)] = s * x[(i, j)];
        }
    }
    let mut h = design.transpose() * design;
    for j in 1..=k {
        h[(j, j)] += 2.0 * ridge;
    }
    h
}

fn newton_direction(h: DMatrix<f64>, g: &DVector<f64>) -> Option<DVector<f64>> {
    if let Some(chol) = h.clone().cholesky() {
        return Some(chol.solve(g));
    }
    h.lu().solve(g)
}

/// Fit a model. `feature_names` labels the columns of `matrix`.
pub fn train(
    matrix: &DMatrix<f64>,
    labels: &[bool],
    feature_names: &[String],
    params: &LearnerParams,
) -> Result<Model> {
    params.validate()?;
    let (m, k) = matrix.shape();
    if labels.len() != m {
        return Err(Error::LengthMismatch(m, labels.len()));
    }
    if feature_names.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            actual: feature_names.len(),
        });
    }
    if m < 2 {
        return Err(Error::DegenerateTrainingSet);
    }
    let positives = labels.iter().filter(|&&l| l).count();
    if positives == 0 || positives == m {
        return Err(Error::DegenerateTrainingSet);
    }

    let ridge = params.ridge;
    let mut beta = DVector::zeros(k + 1);
    let mut current = objective(matrix, labels, &beta, ridge);
    let mut iterations = 0;
    let mut converged = false;
    let mut grad = gradient(matrix, labels, &beta, ridge);

    while iterations < params.max_iterations {
        if grad.norm() < 1e-12 {
            converged = true;
            break;
        }
        iterations += 1;
        let h = information(matrix, &beta, ridge);
        let Some(direction) = newton_direction(h, &grad) else {
            break;
        };
        // Step halving keeps the objective non-decreasing.
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let candidate = &beta + &direction * step;
            let value = objective(matrix, labels, &candidate, ridge);
            if value.is_finite() && value >= current {
                accepted = Some((candidate, value));
                break;
            }
            step *= 0.5;
        }
        let Some((next, value)) = accepted else {
            // No ascent possible in floating point: we are at the optimum.
            converged = grad.norm() < 1e-6;
            break;
        };
        let change = value - current;
        beta = next;
        current = value;
        grad = gradient(matrix, labels, &beta, ridge);
        if change.abs() < params.tolerance && grad.norm() < 1e-6 {
            converged = true;
            break;
        }
    }

    Ok(Model {
        intercept: beta[0],
        weights: beta.iter().skip(1).copied().collect(),
        feature_names: feature_names.to_vec(),
        params: *params,
        training_meta: TrainingMeta {
            iterations,
            log_likelihood: current,
            gradient_norm: grad.norm(),
            converged,
        },
    })
}

impl Model {
    /// A model with the given coefficients and no training history.
    pub fn from_coefficients(weights: Vec<f64>, intercept: f64, feature_names: Vec<String>) -> Self {
        Self {
            weights,
            intercept,
            feature_names,
            params: LearnerParams::default(),
            training_meta: TrainingMeta {
                iterations: 0,
                log_likelihood: f64::NAN,
                gradient_norm: f64::NAN,
                converged: true,
            },
        }
    }

    pub fn predict_proba(&self, instance: &[f64]) -> Result<f64> {
        if instance.len() != self.weights.len() {
            return Err(Error::DimensionMismatch {
                expected: self.weights.len(),
                actual: instance.len(),
            });
        }
        let z = self.intercept
            + self
                .weights
                .iter()
                .zip(instance)
                .map(|(w, x)| w * x)
                .sum::<f64>();
        Ok(sigmoid(z))
    }

    pub fn predict_proba_matrix(&self, matrix: &DMatrix<f64>) -> Result<Vec<f64>> {
        if matrix.ncols() != self.weights.len() {
            return Err(Error::DimensionMismatch {
                expected: self.weights.len(),
                actual: matrix.ncols(),
            });
        }
        let mut row = Vec::with_capacity(matrix.ncols());
        (0..matrix.nrows())
            .map(|i| {
                row.clear();
                row.extend(matrix.row(i).iter().copied());
                self.predict_proba(&row)
            })
            .collect()
    }

    /// Label 1 iff the predicted probability is at least `threshold`.
    pub fn classify(&self, matrix: &DMatrix<f64>, threshold: f64) -> Result<Vec<bool>> {
        Ok(self
            .predict_proba_matrix(matrix)?
            .into_iter()
            .map(|p| p >= threshold)
            .collect())
    }

    /// |β| per feature, in the model's feature order.
    pub fn coefficient_magnitudes(&self) -> Vec<(String, f64)> {
        self.feature_names
            .iter()
            .cloned()
            .zip(self.weights.iter().map(|w| w.abs()))
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }
}
