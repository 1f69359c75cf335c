use super::{DenseMatrix, ShapeError};

/// Hyperparameters shared by every Adam instance of a model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Decoupled weight decay (AdamW-style), applied before the moment update.
    pub weight_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.0,
        }
    }
}

/// Moment estimates for one parameter matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub first_moment: DenseMatrix,
    pub second_moment: DenseMatrix,
    pub step_count: u64,
}

impl AdamState {
    pub fn new(rows: usize, cols: usize, config: AdamConfig) -> Self {
        Self {
            config,
            first_moment: DenseMatrix::zeros(rows, cols),
            second_moment: DenseMatrix::zeros(rows, cols),
            step_count: 0,
        }
    }
}

/// One bias-corrected Adam update of `param` in place.
pub fn adam_step(param: &mut DenseMatrix, grad: &DenseMatrix, state: &mut AdamState) -> Result<(), ShapeError> {
    if param.shape() != grad.shape() {
        return Err(ShapeError::new("adam_step", param.shape(), grad.shape()));
    }
    if param.shape() != state.first_moment.shape() {
        return Err(ShapeError::new(
            "adam_step state",
            param.shape(),
            state.first_moment.shape(),
        ));
    }
    let AdamConfig {
        lr,
        beta1,
        beta2,
        eps,
        weight_decay,
    } = state.config;
    state.step_count += 1;
    let t = state.step_count as i32;
    let bias1 = 1.0 - beta1.powi(t);
    let bias2 = 1.0 - beta2.powi(t);
    let decay = 1.0 - lr * weight_decay;

    let m = state.first_moment.data_mut();
    let v = state.second_moment.data_mut();
    for (((w, &g), m), v) in param.data_mut().iter_mut().zip(grad.data()).zip(m).zip(v) {
        *w *= decay;
        *m = beta1 * *m + (1.0 - beta1) * g;
        *v = beta2 * *v + (1.0 - beta2) * g * g;
        let m_hat = *m / bias1;
        let v_hat = *v / bias2;
        *w -= lr * m_hat / (v_hat.sqrt() + eps);
    }
    Ok(())
}
