//! Feed-forward MLP with manually derived backpropagation.
//!
//! Weights are `fan_in x fan_out`, activations apply element-wise after the
//! affine map. Hidden layers use relu; latent and output layers are identity,
//! which the builder in [`crate::autoencoder`] arranges.

use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    #[inline]
    fn apply(self, v: f64) -> f64 {
        match self {
            Activation::Relu => v.max(0.0),
            Activation::Identity => v,
        }
    }

    /// Derivative as a function of the pre-activation. relu'(0) = 0.
    #[inline]
    fn derivative(self, pre: f64) -> f64 {
        match self {
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Layer {
    pub weight: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

/// Parameters of a dense feed-forward network.
#[derive(Debug, Clone)]
pub struct MlpParams {
    layers: Vec<Layer>,
}

impl MlpParams {
    /// Glorot-uniform init, `U(-sqrt(6/(fan_in+fan_out)), +...)`, biases zero.
    pub fn init(widths: &[usize], activations: &[Activation], rng: &mut ChaCha8Rng) -> Result<Self> {
        if widths.len() < 2 {
            return Err(Error::InvalidConfig(format!(
                "need at least two layer widths, got {widths:?}"
            )));
        }
        if activations.len() != widths.len() - 1 {
            return Err(Error::InvalidConfig(format!(
                "{} activations for {} layers",
                activations.len(),
                widths.len() - 1
            )));
        }
        if widths.iter().any(|&w| w == 0) {
            return Err(Error::InvalidConfig("zero layer width".into()));
        }
        let mut layers = Vec::with_capacity(widths.len() - 1);
        for (i, &act) in activations.iter().enumerate() {
            let (fan_in, fan_out) = (widths[i], widths[i + 1]);
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let weight = crate::rng::uniform_matrix(rng, fan_in, fan_out, -bound, bound);
            layers.push(Layer {
                weight,
                bias: vec![0.0; fan_out],
                activation: act,
            });
        }
        Ok(MlpParams { layers })
    }

    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        for w in layers.windows(2) {
            if w[0].weight.cols() != w[1].weight.rows() {
                return Err(Error::dim("MlpParams::from_layers", w[0].weight.cols(), w[1].weight.rows()));
            }
        }
        for l in &layers {
            if l.bias.len() != l.weight.cols() {
                return Err(Error::dim("MlpParams bias", l.weight.cols(), l.bias.len()));
            }
        }
        Ok(MlpParams { layers })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weight.rows()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("non-empty").weight.cols()
    }

    /// Forward pass through layers `[from, to)`.
    pub fn forward_range(&self, input: &Matrix, from: usize, to: usize) -> Result<Matrix> {
        let mut current = input.clone();
        for layer in &self.layers[from..to] {
            current = layer_forward(layer, &current)?;
        }
        Ok(current)
    }

    pub fn forward(&self, input: &Matrix) -> Result<Matrix> {
        self.forward_range(input, 0, self.layers.len())
    }

    /// Forward pass that keeps pre-activations and activations for backprop.
    fn forward_trace(&self, input: &Matrix) -> Result<ForwardTrace> {
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut post = Vec::with_capacity(self.layers.len() + 1);
        post.push(input.clone());
        for layer in &self.layers {
            let mut z = post.last().expect("seeded").matmul(&layer.weight)?;
            z.add_row_vector(&layer.bias)?;
            let mut a = z.clone();
            for v in a.data_mut() {
                *v = layer.activation.apply(*v);
            }
            pre.push(z);
            post.push(a);
        }
        Ok(ForwardTrace { pre, post })
    }

    /// One backprop pass. `loss_grad` is dL/d(output). Returns per-layer
    /// gradients in layer order.
    pub fn backward(&self, input: &Matrix, loss_grad_fn: impl FnOnce(&Matrix) -> Result<(f64, Matrix)>) -> Result<(f64, Vec<LayerGrad>)> {
        let trace = self.forward_trace(input)?;
        let output = trace.post.last().expect("non-empty");
        let (loss, out_grad) = loss_grad_fn(output)?;
        if out_grad.rows() != output.rows() || out_grad.cols() != output.cols() {
            return Err(Error::dim(
                "backward loss gradient",
                format!("{}x{}", output.rows(), output.cols()),
                format!("{}x{}", out_grad.rows(), out_grad.cols()),
            ));
        }

        let mut grads = vec![
            LayerGrad {
                weight: Matrix::zeros(0, 0),
                bias: Vec::new(),
            };
            self.layers.len()
        ];
        // delta starts as dL/dA_last and is mapped through each activation.
        let mut delta = out_grad;
        for (l, layer) in self.layers.iter().enumerate().rev() {
            let pre = &trace.pre[l];
            for (d, z) in delta.data_mut().iter_mut().zip(pre.data()) {
                *d *= layer.activation.derivative(*z);
            }
            let below = &trace.post[l];
            let w_grad = below.transpose().matmul(&delta)?;
            let mut b_grad = vec![0.0; layer.bias.len()];
            for row in delta.data().chunks(delta.cols()) {
                for (b, d) in b_grad.iter_mut().zip(row) {
                    *b += d;
                }
            }
            grads[l] = LayerGrad {
                weight: w_grad,
                bias: b_grad,
            };
            if l > 0 {
                delta = delta.matmul(&layer.weight.transpose())?;
            }
        }
        Ok((loss, grads))
    }

    pub fn apply_step(&mut self, grads: &[LayerGrad], lr: f64) {
        for (layer, g) in self.layers.iter_mut().zip(grads) {
            for (w, gw) in layer.weight.data_mut().iter_mut().zip(g.weight.data()) {
                *w -= lr * gw;
            }
            for (b, gb) in layer.bias.iter_mut().zip(&g.bias) {
                *b -= lr * gb;
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct LayerGrad {
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

struct ForwardTrace {
    pre: Vec<Matrix>,
    post: Vec<Matrix>,
}

fn layer_forward(layer: &Layer, input: &Matrix) -> Result<Matrix> {
    if input.cols() != layer.weight.rows() {
        return Err(Error::dim("mlp_forward", layer.weight.rows(), input.cols()));
    }
    let mut z = input.matmul(&layer.weight)?;
    z.add_row_vector(&layer.bias)?;
    for v in z.data_mut() {
        *v = layer.activation.apply(*v);
    }
    Ok(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loss::reconstruction_loss;
    use crate::rng;

    fn identity_layer(dim: usize, act: Activation) -> Layer {
        let mut w = Matrix::zeros(dim, dim);
        for i in 0..dim {
            w.set(i, i, 1.0);
        }
        Layer {
            weight: w,
            bias: vec![0.0; dim],
            activation: act,
        }
    }

    #[test]
    fn identity_single_layer_passes_input_through() {
        let params = MlpParams::from_layers(vec![identity_layer(2, Activation::Identity)]).unwrap();
        let x = Matrix::from_rows(&[vec![1.0, 2.0]]).unwrap();
        assert_eq!(params.forward(&x).unwrap(), x);
    }

    #[test]
    fn relu_layer_clamps_negatives() {
        let params = MlpParams::from_layers(vec![identity_layer(2, Activation::Relu)]).unwrap();
        let x = Matrix::from_rows(&[vec![-1.0, 3.0]]).unwrap();
        let y = params.forward(&x).unwrap();
        assert_eq!(y.row(0), &[0.0, 3.0]);
    }

    #[test]
    fn two_layer_forward_matches_hand_matmul() {
        let mut r = rng::seeded(11, rng::TAG_WEIGHT_INIT);
        let params = MlpParams::init(&[3, 4, 2], &[Activation::Relu, Activation::Identity], &mut r).unwrap();
        let x = rng::uniform_matrix(&mut r, 5, 3, -1.0, 1.0);
        let y = params.forward(&x).unwrap();

        // Hand oracle: explicit loops over the same parameters.
        let l0 = &params.layers()[0];
        let l1 = &params.layers()[1];
        for s in 0..5 {
            let mut h = vec![0.0; 4];
            for j in 0..4 {
                let mut acc = l0.bias[j];
                for i in 0..3 {
                    acc += x.get(s, i) * l0.weight.get(i, j);
                }
                h[j] = acc.max(0.0);
            }
            for k in 0..2 {
                let mut acc = l1.bias[k];
                for (j, hv) in h.iter().enumerate() {
                    acc += hv * l1.weight.get(j, k);
                }
                assert!((y.get(s, k) - acc).abs() < 1e-12, "sample {s} unit {k}");
            }
        }
    }

    #[test]
    fn forward_rejects_dim_mismatch() {
        let params = MlpParams::from_layers(vec![identity_layer(2, Activation::Identity)]).unwrap();
        let x = Matrix::from_rows(&[vec![1.0, 2.0, 3.0]]).unwrap();
        assert!(params.forward(&x).is_err());
    }

    #[test]
    fn weight_gradients_match_finite_differences() {
        let mut r = rng::seeded(5, rng::TAG_WEIGHT_INIT);
        let mut params =
            MlpParams::init(&[3, 5, 3], &[Activation::Relu, Activation::Identity], &mut r).unwrap();
        let x = rng::uniform_matrix(&mut r, 6, 3, -1.0, 1.0);

        let (_, grads) = params
            .backward(&x, |out| reconstruction_loss(&x, out))
            .unwrap();

        let h = 1e-6;
        for l in 0..2 {
            for idx in [0usize, 3, 7] {
                let orig = params.layers[l].weight.data()[idx];
                params.layers[l].weight.data_mut()[idx] = orig + h;
                let plus = reconstruction_loss(&x, &params.forward(&x).unwrap()).unwrap().0;
                params.layers[l].weight.data_mut()[idx] = orig - h;
                let minus = reconstruction_loss(&x, &params.forward(&x).unwrap()).unwrap().0;
                params.layers[l].weight.data_mut()[idx] = orig;
                let numeric = (plus - minus) / (2.0 * h);
                let analytic = grads[l].weight.data()[idx];
                let denom = numeric.abs().max(analytic.abs()).max(1e-8);
                assert!(
                    ((numeric - analytic) / denom).abs() < 1e-4,
                    "layer {l} idx {idx}: numeric {numeric} vs analytic {analytic}"
                );
            }
        }
    }
}
