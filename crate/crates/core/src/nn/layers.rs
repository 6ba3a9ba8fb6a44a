use rand::Rng;
use rand_distr::{Distribution, Uniform};

use super::tensor::Tensor2D;
use crate::error::{Error, Result};

pub const CONV_CHANNELS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Identity => x,
        }
    }

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

/// Intermediate values kept from a forward pass for backpropagation.
#[derive(Debug, Clone)]
pub struct LayerCache {
    pub input: Tensor2D,
    pub pre: Tensor2D,
}

#[derive(Debug, Clone)]
pub struct LayerGrads {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub input: Tensor2D,
}

/// Fully connected layer computing `act(x W + b)`; `W` is `in x out`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub weights: Tensor2D,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn new(weights: Tensor2D, bias: Vec<f64>, activation: Activation) -> Result<Self> {
        if bias.len() != weights.cols() {
            return Err(Error::ShapeMismatch(format!(
                "bias length {} for {} outputs",
                bias.len(),
                weights.cols()
            )));
        }
        Ok(Self {
            weights,
            bias,
            activation,
        })
    }

    /// He-uniform weights for ReLU layers, Xavier-uniform otherwise; zero bias.
    pub fn init<R: Rng>(inputs: usize, outputs: usize, activation: Activation, rng: &mut R) -> Self {
        let limit = match activation {
            Activation::Relu => (6.0 / inputs as f64).sqrt(),
            Activation::Identity => (6.0 / (inputs + outputs) as f64).sqrt(),
        };
        let dist = Uniform::new_inclusive(-limit, limit).expect("finite limit");
        let data = (0..inputs * outputs).map(|_| dist.sample(rng)).collect();
        Self {
            weights: Tensor2D::new(inputs, outputs, data).expect("finite init"),
            bias: vec![0.0; outputs],
            activation,
        }
    }

    pub fn inputs(&self) -> usize {
        self.weights.rows()
    }

    pub fn outputs(&self) -> usize {
        self.weights.cols()
    }

    pub fn param_count(&self) -> usize {
        self.weights.rows() * self.weights.cols() + self.bias.len()
    }

    fn check_input(&self, x: &Tensor2D) -> Result<()> {
        if x.cols() != self.inputs() {
            return Err(Error::ShapeMismatch(format!(
                "dense layer expects {} inputs, got {}",
                self.inputs(),
                x.cols()
            )));
        }
        Ok(())
    }

    pub fn forward(&self, x: &Tensor2D) -> Result<Tensor2D> {
        Ok(self.forward_cached(x)?.0)
    }

    pub fn forward_cached(&self, x: &Tensor2D) -> Result<(Tensor2D, LayerCache)> {
        self.check_input(x)?;
        let (n, out) = (x.rows(), self.outputs());
        let w = self.weights.data();
        let mut pre = Tensor2D::zeros(n, out);
        for r in 0..n {
            let dst = pre.row_mut(r);
            dst.copy_from_slice(&self.bias);
            for (i, &xv) in x.row(r).iter().enumerate() {
                if xv == 0.0 {
                    continue;
                }
                let wr = &w[i * out..(i + 1) * out];
                for (d, &wv) in dst.iter_mut().zip(wr) {
                    *d += xv * wv;
                }
            }
        }
        let mut y = pre.clone();
        for v in y.data_mut() {
            *v = self.activation.apply(*v);
        }
        y.ensure_finite("dense forward")?;
        Ok((
            y,
            LayerCache {
                input: x.clone(),
                pre,
            },
        ))
    }

    /// `grad_out` is the loss gradient with respect to this layer's output.
    pub fn backward(&self, cache: &LayerCache, grad_out: &Tensor2D) -> LayerGrads {
        let (n, inp, out) = (cache.input.rows(), self.inputs(), self.outputs());
        let mut g_pre = grad_out.clone();
        for (g, &p) in g_pre.data_mut().iter_mut().zip(cache.pre.data()) {
            *g *= self.activation.derivative(p);
        }
        let mut gw = vec![0.0; inp * out];
        let mut gb = vec![0.0; out];
        let mut gin = Tensor2D::zeros(n, inp);
        let w = self.weights.data();
        for r in 0..n {
            let gr = g_pre.row(r);
            for (b, &g) in gb.iter_mut().zip(gr) {
                *b += g;
            }
            let xr = cache.input.row(r);
            let gi = gin.row_mut(r);
            for i in 0..inp {
                let wrow = &w[i * out..(i + 1) * out];
                let gwrow = &mut gw[i * out..(i + 1) * out];
                let xv = xr[i];
                let mut acc = 0.0;
                for j in 0..out {
                    gwrow[j] += xv * gr[j];
                    acc += gr[j] * wrow[j];
                }
                gi[i] = acc;
            }
        }
        LayerGrads {
            weights: gw,
            bias: gb,
            input: gin,
        }
    }
}

/// Row-wise 1-D convolution: each kernel spans the whole daily feature
/// vector, so channel `c` of a row is `relu(kernel_c . row + bias_c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv1DLayer {
    /// `channels x kernel_len`, one kernel per row.
    pub kernels: Tensor2D,
    pub bias: Vec<f64>,
}

impl Conv1DLayer {
    pub fn new(kernels: Tensor2D, bias: Vec<f64>) -> Result<Self> {
        if bias.len() != kernels.rows() {
            return Err(Error::ShapeMismatch(format!(
                "{} biases for {} kernels",
                bias.len(),
                kernels.rows()
            )));
        }
        Ok(Self { kernels, bias })
    }

    pub fn init<R: Rng>(kernel_len: usize, channels: usize, rng: &mut R) -> Self {
        let limit = (6.0 / kernel_len as f64).sqrt();
        let dist = Uniform::new_inclusive(-limit, limit).expect("finite limit");
        let data = (0..kernel_len * channels).map(|_| dist.sample(rng)).collect();
        Self {
            kernels: Tensor2D::new(channels, kernel_len, data).expect("finite init"),
            bias: vec![0.0; channels],
        }
    }

    pub fn channels(&self) -> usize {
        self.kernels.rows()
    }

    pub fn kernel_len(&self) -> usize {
        self.kernels.cols()
    }

    pub fn param_count(&self) -> usize {
        self.kernels.rows() * self.kernels.cols() + self.bias.len()
    }

    /// Outputs before the ReLU.
    pub fn pre_activation(&self, x: &Tensor2D) -> Result<Tensor2D> {
        if x.cols() != self.kernel_len() {
            return Err(Error::ShapeMismatch(format!(
                "conv kernels span {} features, input has {}",
                self.kernel_len(),
                x.cols()
            )));
        }
        let ch = self.channels();
        let mut out = Tensor2D::zeros(x.rows(), ch);
        for r in 0..x.rows() {
            let xr = x.row(r);
            let dst = out.row_mut(r);
            for c in 0..ch {
                dst[c] = self.bias[c]
                    + self
                        .kernels
                        .row(c)
                        .iter()
                        .zip(xr)
                        .map(|(k, v)| k * v)
                        .sum::<f64>();
            }
        }
        out.ensure_finite("conv forward")?;
        Ok(out)
    }

    pub fn forward(&self, x: &Tensor2D) -> Result<Tensor2D> {
        Ok(self.forward_cached(x)?.0)
    }

    pub fn forward_cached(&self, x: &Tensor2D) -> Result<(Tensor2D, LayerCache)> {
        let pre = self.pre_activation(x)?;
        let mut y = pre.clone();
        for v in y.data_mut() {
            *v = v.max(0.0);
        }
        Ok((
            y,
            LayerCache {
                input: x.clone(),
                pre,
            },
        ))
    }

    /// Gradients for kernels (row-major `channels x kernel_len`) and bias.
    /// The input gradient is not needed by any caller and is left empty.
    pub fn backward(&self, cache: &LayerCache, grad_out: &Tensor2D) -> (Vec<f64>, Vec<f64>) {
        let (ch, len) = (self.channels(), self.kernel_len());
        let mut gk = vec![0.0; ch * len];
        let mut gb = vec![0.0; ch];
        for r in 0..cache.input.rows() {
            let xr = cache.input.row(r);
            for c in 0..ch {
                if cache.pre.get(r, c) <= 0.0 {
                    continue;
                }
                let g = grad_out.get(r, c);
                gb[c] += g;
                for (dst, &xv) in gk[c * len..(c + 1) * len].iter_mut().zip(xr) {
                    *dst += g * xv;
                }
            }
        }
        (gk, gb)
    }
}

pub fn conv1d_forward(layer: &Conv1DLayer, x: &Tensor2D) -> Result<Tensor2D> {
    layer.forward(x)
}

pub fn dense_forward(layer: &DenseLayer, x: &Tensor2D) -> Result<Tensor2D> {
    layer.forward(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn selector_kernel_copies_feature() {
        let x = Tensor2D::from_rows(&[vec![0.5, 2.0, -1.0], vec![3.0, 7.0, 1.0]]).unwrap();
        let k = Tensor2D::new(1, 3, vec![0.0, 1.0, 0.0]).unwrap();
        let layer = Conv1DLayer::new(k, vec![0.0]).unwrap();
        let out = layer.pre_activation(&x).unwrap();
        assert_eq!(out.data(), &[2.0, 7.0]);
    }

    #[test]
    fn zero_kernels_give_relu_bias() {
        let x = Tensor2D::from_rows(&[vec![1.0, 2.0]]).unwrap();
        let layer = Conv1DLayer::new(Tensor2D::zeros(2, 2), vec![0.3, -0.4]).unwrap();
        assert_eq!(layer.forward(&x).unwrap().data(), &[0.3, 0.0]);
    }

    #[test]
    fn identity_dense_passes_through() {
        let x = Tensor2D::from_rows(&[vec![1.5, -2.0], vec![0.0, 4.0]]).unwrap();
        let w = Tensor2D::new(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let layer = DenseLayer::new(w, vec![0.0, 0.0], Activation::Identity).unwrap();
        assert_eq!(layer.forward(&x).unwrap(), x);
        let relu = DenseLayer::new(layer.weights.clone(), vec![0.0, 0.0], Activation::Relu).unwrap();
        let neg = Tensor2D::from_rows(&[vec![-1.0, -2.0]]).unwrap();
        assert_eq!(relu.forward(&neg).unwrap().data(), &[0.0, 0.0]);
    }

    #[test]
    fn forward_matches_naive_loops() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let layer = DenseLayer::init(7, 5, Activation::Relu, &mut rng);
        let conv = Conv1DLayer::init(7, 4, &mut rng);
        let rows: Vec<Vec<f64>> = (0..6)
            .map(|_| (0..7).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let x = Tensor2D::from_rows(&rows).unwrap();
        let y = layer.forward(&x).unwrap();
        let yc = conv.forward(&x).unwrap();
        for r in 0..6 {
            for j in 0..5 {
                let mut s = layer.bias[j];
                for i in 0..7 {
                    s += rows[r][i] * layer.weights.get(i, j);
                }
                assert!((y.get(r, j) - s.max(0.0)).abs() < 1e-12);
            }
            for c in 0..4 {
                let mut s = conv.bias[c];
                for i in 0..7 {
                    s += rows[r][i] * conv.kernels.get(c, i);
                }
                assert!((yc.get(r, c) - s.max(0.0)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn shape_errors() {
        let layer = DenseLayer::new(Tensor2D::zeros(3, 2), vec![0.0; 2], Activation::Relu).unwrap();
        let x = Tensor2D::zeros(1, 4);
        assert!(matches!(layer.forward(&x), Err(Error::ShapeMismatch(_))));
        assert!(matches!(
            Tensor2D::new(1, 1, vec![f64::NAN]),
            Err(Error::NonFinite(_))
        ));
    }
}
