//! The two training losses and their analytic gradients.
//!
//! Reconstruction: sum over samples of squared row differences, gradient
//! `2 (x_hat - x)`. Structural contrastive: mean pairwise distance over
//! same-label pairs minus mean pairwise distance over different-label pairs,
//! computed on a within-batch Euclidean distance matrix.

use crate::error::{Error, Result};
use crate::matrix::{row_sq_dist, Matrix};

/// Sum-of-squared-errors loss and its gradient with respect to `x_hat`.
pub fn reconstruction_loss(x: &Matrix, x_hat: &Matrix) -> Result<(f64, Matrix)> {
    if x.rows() != x_hat.rows() || x.cols() != x_hat.cols() {
        return Err(Error::dim(
            "reconstruction_loss",
            format!("{}x{}", x.rows(), x.cols()),
            format!("{}x{}", x_hat.rows(), x_hat.cols()),
        ));
    }
    let mut loss = 0.0;
    let mut grad = Matrix::zeros(x.rows(), x.cols());
    for ((g, &a), &b) in grad.data_mut().iter_mut().zip(x_hat.data()).zip(x.data()) {
        let d = a - b;
        loss += d * d;
        *g = 2.0 * d;
    }
    Ok((loss, grad))
}

/// Pairwise Euclidean distance matrix for one mini-batch.
/// Symmetric, zero diagonal.
pub fn batch_distance_matrix(z_batch: &Matrix) -> Result<Matrix> {
    let b = z_batch.rows();
    if b < 2 {
        return Err(Error::TooFew {
            what: "batch rows",
            min: 2,
            actual: b,
        });
    }
    let mut d = Matrix::zeros(b, b);
    for i in 0..b {
        for j in (i + 1)..b {
            let dist = row_sq_dist(z_batch, i, j).sqrt();
            d.set(i, j, dist);
            d.set(j, i, dist);
        }
    }
    Ok(d)
}

/// Which terms of the contrastive loss are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContrastiveMode {
    /// Pull same-label pairs together and push different-label pairs apart.
    Full,
    /// Keep only the pulling term.
    PositiveOnly,
    /// Keep only the pushing term.
    NegativeOnly,
}

impl ContrastiveMode {
    fn positives_active(self) -> bool {
        !matches!(self, ContrastiveMode::NegativeOnly)
    }

    fn negatives_active(self) -> bool {
        !matches!(self, ContrastiveMode::PositiveOnly)
    }
}

#[derive(Debug, Clone)]
pub struct ContrastiveResult {
    pub loss: f64,
    /// dL/d(z_batch), same shape as the batch.
    pub grad: Matrix,
    /// Ordered same-label pairs (i != j) in the batch.
    pub positive_pairs: usize,
    /// Ordered different-label pairs in the batch.
    pub negative_pairs: usize,
}

/// Structural contrastive loss over one batch, with the analytic gradient
/// with respect to the batch embedding.
///
/// An empty pair set contributes zero instead of dividing by zero; callers
/// can detect the case through the pair counters.
pub fn contrastive_loss(
    z_batch: &Matrix,
    labels: &[usize],
    mode: ContrastiveMode,
) -> Result<ContrastiveResult> {
    let b = z_batch.rows();
    if labels.len() != b {
        return Err(Error::dim("contrastive_loss labels", b, labels.len()));
    }
    let d = batch_distance_matrix(z_batch)?;

    let mut n_pos = 0usize;
    let mut n_neg = 0usize;
    for i in 0..b {
        for j in 0..b {
            if i == j {
                continue;
            }
            if labels[i] == labels[j] {
                n_pos += 1;
            } else {
                n_neg += 1;
            }
        }
    }

    let pos_w = if mode.positives_active() && n_pos > 0 {
        1.0 / n_pos as f64
    } else {
        0.0
    };
    let neg_w = if mode.negatives_active() && n_neg > 0 {
        -1.0 / n_neg as f64
    } else {
        0.0
    };

    let mut loss = 0.0;
    let mut grad = Matrix::zeros(b, z_batch.cols());
    let cols = z_batch.cols();
    for i in 0..b {
        for j in 0..b {
            if i == j {
                continue;
            }
            let w = if labels[i] == labels[j] { pos_w } else { neg_w };
            if w == 0.0 {
                continue;
            }
            let dist = d.get(i, j);
            loss += w * dist;
            if dist > 0.0 {
                // d‖z_i - z_j‖/dz_i = (z_i - z_j)/‖z_i - z_j‖; the (j,i) term
                // contributes the same direction again, handled by the loop
                // visiting both ordered pairs.
                let scale = w / dist;
                let (zi, zj) = (z_batch.row(i), z_batch.row(j));
                let g = grad.row_mut(i);
                for c in 0..cols {
                    g[c] += scale * (zi[c] - zj[c]);
                }
            }
        }
    }
    Ok(ContrastiveResult {
        loss,
        grad,
        positive_pairs: n_pos,
        negative_pairs: n_neg,
    })
}
