use std::sync::Arc;

use ndarray::{aview1, Array1, Array2, ArrayView2, Axis};

use crate::error::{invalid, Error, Result};
use crate::rng;

/// Inputs (`n × d`) and regression targets (`n × k`).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    inputs: Array2<f64>,
    targets: Array2<f64>,
}

impl Dataset {
    pub fn new(n: usize, d: usize, inputs: Vec<f64>, k: usize, targets: Vec<f64>) -> Result<Self> {
        if n < 1 || d < 1 || k < 1 {
            return Err(invalid("dataset needs at least one sample, feature and target"));
        }
        if inputs.iter().chain(&targets).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("dataset"));
        }
        let inputs = Array2::from_shape_vec((n, d), inputs)
            .map_err(|_| Error::DimensionMismatch { expected: n * d, got: 0 })?;
        let targets = Array2::from_shape_vec((n, k), targets)
            .map_err(|_| Error::DimensionMismatch { expected: n * k, got: 0 })?;
        Ok(Self { inputs, targets })
    }

    pub fn len(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn input_dim(&self) -> usize {
        self.inputs.ncols()
    }

    pub fn target_dim(&self) -> usize {
        self.targets.ncols()
    }

    pub fn inputs(&self) -> &Array2<f64> {
        &self.inputs
    }

    pub fn targets(&self) -> &Array2<f64> {
        &self.targets
    }
}

/// Fully connected network: ReLU on hidden layers, identity output, loss is
/// the sample mean of `½‖output − target‖²` over the full dataset.
///
/// Parameters are one flat vector; layer `l` contributes its
/// `out × in` weight matrix (row-major) followed by its `out` biases.
#[derive(Debug, Clone)]
pub struct Mlp {
    widths: Vec<usize>,
    data: Arc<Dataset>,
    init_seed: u64,
}

impl Mlp {
    pub fn new(widths: Vec<usize>, data: Arc<Dataset>, init_seed: u64) -> Result<Self> {
        if widths.len() < 2 {
            return Err(invalid("network needs at least an input and an output layer"));
        }
        if widths.iter().any(|&w| w == 0) {
            return Err(invalid("layer widths must be positive"));
        }
        if widths[0] != data.input_dim() {
            return Err(invalid(format!(
                "input width {} does not match dataset dimension {}",
                widths[0],
                data.input_dim()
            )));
        }
        if *widths.last().unwrap() != data.target_dim() {
            return Err(invalid(format!(
                "output width {} does not match target dimension {}",
                widths.last().unwrap(),
                data.target_dim()
            )));
        }
        Ok(Self { widths, data, init_seed })
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn dataset(&self) -> &Dataset {
        &self.data
    }

    pub fn param_count(&self) -> usize {
        self.widths.windows(2).map(|w| (w[0] + 1) * w[1]).sum()
    }

    /// He-normal weights (`std = √(2/fan_in)`) and zero biases.
    pub fn init_params(&self) -> Vec<f64> {
        let mut r = rng::seeded(self.init_seed);
        let mut params = Vec::with_capacity(self.param_count());
        for w in self.widths.windows(2) {
            let std = (2.0 / w[0] as f64).sqrt();
            params.extend((0..w[0] * w[1]).map(|_| std * rng::standard_normal(&mut r)));
            params.extend(std::iter::repeat_n(0.0, w[1]));
        }
        params
    }

    fn layers<'a>(&self, params: &'a [f64]) -> Vec<(ArrayView2<'a, f64>, &'a [f64])> {
        let mut offset = 0;
        self.widths
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let weights = ArrayView2::from_shape((fan_out, fan_in), &params[offset..offset + fan_in * fan_out])
                    .expect("layer slice has the right length");
                offset += fan_in * fan_out;
                let bias = &params[offset..offset + fan_out];
                offset += fan_out;
                (weights, bias)
            })
            .collect()
    }

    /// Pre-activations of every layer.
    fn forward(&self, params: &[f64]) -> Vec<Array2<f64>> {
        let layers = self.layers(params);
        let last = layers.len() - 1;
        let mut pre = Vec::with_capacity(layers.len());
        let mut act = self.data.inputs.clone();
        for (l, (w, b)) in layers.iter().enumerate() {
            let mut z = act.dot(&w.t());
            z += &aview1(b);
            act = if l == last { z.clone() } else { z.mapv(|v| v.max(0.0)) };
            pre.push(z);
        }
        pre
    }

    pub fn loss(&self, params: &[f64]) -> f64 {
        let pre = self.forward(params);
        let out = pre.last().unwrap();
        let n = self.data.len() as f64;
        0.5 * (out - &self.data.targets).mapv(|e| e * e).sum() / n
    }

    /// Loss and its gradient by reverse-mode accumulation through the layers.
    pub fn loss_grad(&self, params: &[f64]) -> (f64, Vec<f64>) {
        let layers = self.layers(params);
        let pre = self.forward(params);
        let n = self.data.len() as f64;
        let residual = pre.last().unwrap() - &self.data.targets;
        let loss = 0.5 * residual.mapv(|e| e * e).sum() / n;

        let mut grad = vec![0.0; params.len()];
        let mut offsets = Vec::with_capacity(layers.len());
        let mut offset = 0;
        for w in self.widths.windows(2) {
            offsets.push(offset);
            offset += (w[0] + 1) * w[1];
        }

        let mut delta = residual / n;
        for l in (0..layers.len()).rev() {
            let input = if l == 0 {
                self.data.inputs.clone()
            } else {
                pre[l - 1].mapv(|v| v.max(0.0))
            };
            let (w, _) = layers[l];
            let (fan_out, fan_in) = w.dim();
            let dw = delta.t().dot(&input);
            let db: Array1<f64> = delta.sum_axis(Axis(0));
            let o = offsets[l];
            grad[o..o + fan_in * fan_out].copy_from_slice(dw.as_slice().expect("standard layout"));
            grad[o + fan_in * fan_out..o + (fan_in + 1) * fan_out]
                .copy_from_slice(db.as_slice().expect("contiguous"));
            if l > 0 {
                let mut back = delta.dot(&w);
                back.zip_mut_with(&pre[l - 1], |d, &z| {
                    if z <= 0.0 {
                        *d = 0.0;
                    }
                });
                delta = back;
            }
        }
        (loss, grad)
    }
}
