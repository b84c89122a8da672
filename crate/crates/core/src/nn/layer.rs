use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Linear,
}

/// Fully connected layer `y = act(W x + b)` with `W` stored `out x in`.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseLayer {
    pub weights: Array2<f64>,
    pub biases: Array1<f64>,
    pub activation: Activation,
}

/// Values kept from a forward pass for the backward pass.
#[derive(Clone, Debug)]
pub(crate) struct LayerCache {
    pub input: Array2<f64>,
    pub pre_activation: Array2<f64>,
}

#[derive(Clone, Debug)]
pub struct LayerGrad {
    pub weights: Array2<f64>,
    pub biases: Array1<f64>,
}

impl DenseLayer {
    pub fn zeros(inputs: usize, outputs: usize, activation: Activation) -> Self {
        Self {
            weights: Array2::zeros((outputs, inputs)),
            biases: Array1::zeros(outputs),
            activation,
        }
    }

    pub fn inputs(&self) -> usize {
        self.weights.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.weights.nrows()
    }

    pub fn num_params(&self) -> usize {
        self.weights.len() + self.biases.len()
    }

    /// He-uniform weights for ReLU layers, LeCun-uniform for linear outputs; zero biases.
    pub fn init<R: Rng>(&mut self, rng: &mut R) {
        let fan_in = self.inputs().max(1) as f64;
        let gain = match self.activation {
            Activation::Relu => 6.0,
            Activation::Linear => 3.0,
        };
        let limit = (gain / fan_in).sqrt();
        self.weights
            .iter_mut()
            .for_each(|w| *w = rng.gen_range(-limit..=limit));
        self.biases.fill(0.0);
    }

    pub(crate) fn forward(&self, input: ArrayView2<f64>) -> (Array2<f64>, LayerCache) {
        let pre = input.dot(&self.weights.t()) + &self.biases;
        let out = match self.activation {
            Activation::Relu => pre.mapv(|z| z.max(0.0)),
            Activation::Linear => pre.clone(),
        };
        (
            out,
            LayerCache {
                input: input.to_owned(),
                pre_activation: pre,
            },
        )
    }

    pub(crate) fn forward_only(&self, input: ArrayView2<f64>) -> Array2<f64> {
        let mut pre = input.dot(&self.weights.t()) + &self.biases;
        if self.activation == Activation::Relu {
            pre.mapv_inplace(|z| z.max(0.0));
        }
        pre
    }

    /// Returns the parameter gradient and the gradient with respect to the input.
    pub(crate) fn backward(&self, cache: &LayerCache, grad_out: Array2<f64>) -> (LayerGrad, Array2<f64>) {
        let grad_pre = match self.activation {
            Activation::Relu => {
                let mut g = grad_out;
                g.zip_mut_with(&cache.pre_activation, |g, &z| {
                    if z <= 0.0 {
                        *g = 0.0
                    }
                });
                g
            }
            Activation::Linear => grad_out,
        };
        let weights = grad_pre.t().dot(&cache.input);
        let biases = grad_pre.sum_axis(Axis(0));
        let grad_in = grad_pre.dot(&self.weights);
        (LayerGrad { weights, biases }, grad_in)
    }
}

impl LayerGrad {
    pub fn zeros_like(layer: &DenseLayer) -> Self {
        Self {
            weights: Array2::zeros(layer.weights.raw_dim()),
            biases: Array1::zeros(layer.biases.raw_dim()),
        }
    }
}
