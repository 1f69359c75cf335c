use super::{DenseMatrix, NumericsError, ShapeError};
use crate::rng::Rng;

pub fn relu(x: &DenseMatrix) -> DenseMatrix {
    x.map(|v| v.max(0.0))
}

/// Gradient of `relu` at `x`, given the upstream gradient.
pub fn relu_backward(x: &DenseMatrix, grad: &DenseMatrix) -> Result<DenseMatrix, ShapeError> {
    if x.shape() != grad.shape() {
        return Err(ShapeError::new("relu_backward", x.shape(), grad.shape()));
    }
    let data = x
        .data()
        .iter()
        .zip(grad.data())
        .map(|(&v, &g)| if v > 0.0 { g } else { 0.0 })
        .collect();
    DenseMatrix::from_vec(x.rows(), x.cols(), data)
}

/// Row-wise softmax, shifted by the row maximum.
pub fn softmax_rows(x: &DenseMatrix) -> DenseMatrix {
    let mut out = x.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    out
}

/// Mean cross-entropy over the masked rows, with the gradient taken with
/// respect to the pre-softmax logits (`(p - onehot) / |mask|` per masked row).
///
/// `labels` is indexed by node; only masked entries are read. An empty mask
/// yields a zero loss and a zero gradient.
pub fn masked_cross_entropy(
    probs: &DenseMatrix,
    labels: &[usize],
    mask: &[usize],
) -> Result<(f64, DenseMatrix), NumericsError> {
    let mut grad = DenseMatrix::zeros(probs.rows(), probs.cols());
    if mask.is_empty() {
        return Ok((0.0, grad));
    }
    let scale = 1.0 / mask.len() as f64;
    let mut loss = 0.0;
    for &u in mask {
        if u >= probs.rows() {
            return Err(NumericsError::NodeOutOfRange {
                node: u,
                rows: probs.rows(),
            });
        }
        let label = labels[u];
        if label >= probs.cols() {
            return Err(NumericsError::LabelOutOfRange {
                label,
                classes: probs.cols(),
            });
        }
        loss -= probs.get(u, label).max(f64::MIN_POSITIVE).ln();
        let g = grad.row_mut(u);
        for (gj, &pj) in g.iter_mut().zip(probs.row(u)) {
            *gj = pj * scale;
        }
        g[label] -= scale;
    }
    Ok((loss * scale, grad))
}

/// 0/1 keep-mask with each entry dropped independently with probability `p`.
pub fn dropout_mask(rows: usize, cols: usize, p: f64, rng: &mut Rng) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| if rng.uniform() < p { 0.0 } else { 1.0 })
}

/// Inverted dropout. In evaluation mode (or with `p == 0`) the input passes
/// through unchanged and the mask is all ones.
pub fn dropout(
    x: &DenseMatrix,
    p: f64,
    rng: &mut Rng,
    training: bool,
) -> Result<(DenseMatrix, DenseMatrix), NumericsError> {
    check_dropout_rate(p)?;
    if !training || p == 0.0 {
        return Ok((x.clone(), DenseMatrix::filled(x.rows(), x.cols(), 1.0)));
    }
    let mask = dropout_mask(x.rows(), x.cols(), p, rng);
    let out = apply_dropout(x, &mask, p)?;
    Ok((out, mask))
}

/// `x ⊙ mask / (1 - p)`.
pub fn apply_dropout(x: &DenseMatrix, mask: &DenseMatrix, p: f64) -> Result<DenseMatrix, ShapeError> {
    let keep = 1.0 / (1.0 - p);
    Ok(x.hadamard(mask)?.scale(keep))
}

pub fn check_dropout_rate(p: f64) -> Result<(), NumericsError> {
    if !(0.0..1.0).contains(&p) {
        return Err(NumericsError::InvalidDropout(p));
    }
    Ok(())
}

/// Glorot/Xavier uniform initialization in `[-a, a]`, `a = sqrt(6 / (rows + cols))`.
pub fn glorot_init(rows: usize, cols: usize, rng: &mut Rng) -> DenseMatrix {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    DenseMatrix::from_fn(rows, cols, |_, _| rng.uniform_in(-bound, bound))
}
