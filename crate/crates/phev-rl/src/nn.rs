//! Minimal dense-network math: batch forward, exact reverse-mode gradients,
//! Adam, and soft target blending. Everything is 64-bit and sequential so
//! runs reproduce bit-for-bit.

use rand::Rng;
use rand_chacha::ChaCha12Rng;

use crate::RlError;

/// Output head activation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Head {
    Linear,
    Tanh,
}

/// One affine layer, weights stored row-major `[rows × cols]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub w: Vec<f64>,
    pub b: Vec<f64>,
    pub rows: usize,
    pub cols: usize,
}

/// Dense multi-layer perceptron with rectifier hidden activations.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub sizes: Vec<usize>,
    pub head: Head,
    pub layers: Vec<Layer>,
}

/// Per-layer parameter gradients, shapes mirroring [`Mlp::layers`].
#[derive(Debug, Clone)]
pub struct Grads {
    pub w: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
}

/// Forward-pass activations kept for the backward pass. `acts[0]` is the
/// input batch, `acts[last]` the output batch.
pub struct Cache {
    pub acts: Vec<Vec<f64>>,
    pub batch: usize,
}

impl Mlp {
    /// Fan-in uniform initialization from the run's seeded generator.
    pub fn new(sizes: &[usize], head: Head, rng: &mut ChaCha12Rng) -> Mlp {
        assert!(sizes.len() >= 2, "need at least input and output sizes");
        let mut layers = Vec::with_capacity(sizes.len() - 1);
        for win in sizes.windows(2) {
            let (cols, rows) = (win[0], win[1]);
            let limit = 1.0 / (cols as f64).sqrt();
            let w = (0..rows * cols)
                .map(|_| rng.random_range(-limit..limit))
                .collect();
            let b = (0..rows).map(|_| rng.random_range(-limit..limit)).collect();
            layers.push(Layer { w, b, rows, cols });
        }
        Mlp {
            sizes: sizes.to_vec(),
            head,
            layers,
        }
    }

    pub fn input_size(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_size(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).collect::<Vec<_>>().iter().sum()
    }

    /// Batch forward. `x` is row-major `[batch × input]`.
    pub fn forward_batch(&self, x: &[f64], batch: usize) -> Vec<f64> {
        self.forward_cached(x, batch).acts.pop().unwrap()
    }

    /// Single-sample forward.
    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.forward_batch(x, 1)
    }

    /// Forward keeping every activation for [`Mlp::backward`].
    pub fn forward_cached(&self, x: &[f64], batch: usize) -> Cache {
        assert_eq!(x.len(), batch * self.input_size(), "input shape mismatch");
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_vec());
        for (li, layer) in self.layers.iter().enumerate() {
            let input = &acts[li];
            let mut out = vec![0.0; batch * layer.rows];
            for s in 0..batch {
                let xin = &input[s * layer.cols..(s + 1) * layer.cols];
                let yout = &mut out[s * layer.rows..(s + 1) * layer.rows];
                for (o, y) in yout.iter_mut().enumerate() {
                    let wrow = &layer.w[o * layer.cols..(o + 1) * layer.cols];
                    *y = layer.b[o] + dot(wrow, xin);
                }
            }
            let last = li == self.layers.len() - 1;
            if !last {
                for v in out.iter_mut() {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
            } else if self.head == Head::Tanh {
                for v in out.iter_mut() {
                    *v = v.tanh();
                }
            }
            acts.push(out);
        }
        Cache { acts, batch }
    }

    /// Exact reverse-mode gradients for an upstream `∂L/∂y` of shape
    /// `[batch × output]`. Returns parameter gradients and `∂L/∂x`.
    pub fn backward(&self, cache: &Cache, upstream: &[f64]) -> (Grads, Vec<f64>) {
        let batch = cache.batch;
        assert_eq!(upstream.len(), batch * self.output_size(), "upstream shape mismatch");
        let mut gw: Vec<Vec<f64>> = self.layers.iter().map(|l| vec![0.0; l.w.len()]).collect();
        let mut gb: Vec<Vec<f64>> = self.layers.iter().map(|l| vec![0.0; l.b.len()]).collect();

        // delta at the output: through tanh if present
        let mut delta = upstream.to_vec();
        if self.head == Head::Tanh {
            let y = cache.acts.last().unwrap();
            for (d, &yv) in delta.iter_mut().zip(y.iter()) {
                *d *= 1.0 - yv * yv;
            }
        }

        for li in (0..self.layers.len()).rev() {
            let layer = &self.layers[li];
            let input = &cache.acts[li];
            let gw_l = &mut gw[li];
            let gb_l = &mut gb[li];
            let mut dx = vec![0.0; batch * layer.cols];
            for s in 0..batch {
                let drow = &delta[s * layer.rows..(s + 1) * layer.rows];
                let xrow = &input[s * layer.cols..(s + 1) * layer.cols];
                let dxrow = &mut dx[s * layer.cols..(s + 1) * layer.cols];
                for (o, &d) in drow.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    gb_l[o] += d;
                    let wrow = &layer.w[o * layer.cols..(o + 1) * layer.cols];
                    let gwrow = &mut gw_l[o * layer.cols..(o + 1) * layer.cols];
                    for k in 0..layer.cols {
                        gwrow[k] += d * xrow[k];
                        dxrow[k] += d * wrow[k];
                    }
                }
            }
            // through the rectifier feeding this layer (not at the input)
            if li > 0 {
                for (d, &a) in dx.iter_mut().zip(cache.acts[li].iter()) {
                    if a <= 0.0 {
                        *d = 0.0;
                    }
                }
            }
            delta = dx;
        }
        (Grads { w: gw, b: gb }, delta)
    }

    /// θ_target ← τ·θ_online + (1−τ)·θ_target, elementwise.
    pub fn soft_update_from(&mut self, online: &Mlp, tau: f64) {
        assert_eq!(self.sizes, online.sizes, "shape mismatch in soft update");
        for (lt, lo) in self.layers.iter_mut().zip(online.layers.iter()) {
            for (t, o) in lt.w.iter_mut().zip(lo.w.iter()) {
                *t = tau * o + (1.0 - tau) * *t;
            }
            for (t, o) in lt.b.iter_mut().zip(lo.b.iter()) {
                *t = tau * o + (1.0 - tau) * *t;
            }
        }
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    // four independent accumulators: fixed summation order, decent throughput
    let n = a.len();
    let chunks = n / 4;
    let (mut s0, mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0, 0.0);
    for c in 0..chunks {
        let i = c * 4;
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    let mut rest = 0.0;
    for i in chunks * 4..n {
        rest += a[i] * b[i];
    }
    (s0 + s1) + (s2 + s3) + rest
}

/// Adam optimizer state for one network.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    pub m_w: Vec<Vec<f64>>,
    pub v_w: Vec<Vec<f64>>,
    pub m_b: Vec<Vec<f64>>,
    pub v_b: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(net: &Mlp, lr: f64) -> AdamState {
        AdamState {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m_w: net.layers.iter().map(|l| vec![0.0; l.w.len()]).collect(),
            v_w: net.layers.iter().map(|l| vec![0.0; l.w.len()]).collect(),
            m_b: net.layers.iter().map(|l| vec![0.0; l.b.len()]).collect(),
            v_b: net.layers.iter().map(|l| vec![0.0; l.b.len()]).collect(),
        }
    }

    /// One bias-corrected moment update in place.
    pub fn step(&mut self, net: &mut Mlp, grads: &Grads) -> Result<(), RlError> {
        for (li, g) in grads.w.iter().enumerate() {
            if g.iter().chain(grads.b[li].iter()).any(|v| !v.is_finite()) {
                return Err(RlError::NonFiniteGradient { layer: li });
            }
        }
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        for (li, layer) in net.layers.iter_mut().enumerate() {
            adam_update(
                &mut layer.w,
                &grads.w[li],
                &mut self.m_w[li],
                &mut self.v_w[li],
                self.lr,
                self.beta1,
                self.beta2,
                self.eps,
                bc1,
                bc2,
            );
            adam_update(
                &mut layer.b,
                &grads.b[li],
                &mut self.m_b[li],
                &mut self.v_b[li],
                self.lr,
                self.beta1,
                self.beta2,
                self.eps,
                bc1,
                bc2,
            );
        }
        Ok(())
    }
}

#[allow(clippy::too_many_arguments)]
fn adam_update(
    params: &mut [f64],
    grads: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    bc1: f64,
    bc2: f64,
) {
    for i in 0..params.len() {
        let g = grads[i];
        m[i] = beta1 * m[i] + (1.0 - beta1) * g;
        v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        params[i] -= lr * m_hat / (v_hat.sqrt() + eps);
    }
}
