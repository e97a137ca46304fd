use crate::error::{contract, Error, Result};
use crate::linalg::DenseMatrix;
use crate::optim::BlockRole;
use crate::rng::SplitMix64;
use crate::scalar::Real;

use super::{Landscape, ParamLayout};

const MAX_PARAMS: usize = 20_000;

/// Teacher-student regression with a tanh MLP and mean squared error.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpSpec {
    /// Layer widths from input to output.
    pub widths: Vec<usize>,
    pub batch_size: usize,
    /// Standard deviation of the target noise.
    pub noise_std: f64,
}

impl Default for MlpSpec {
    fn default() -> Self {
        Self {
            widths: vec![8, 32, 32, 16, 4],
            batch_size: 64,
            noise_std: 0.01,
        }
    }
}

impl MlpSpec {
    pub fn param_count(&self) -> usize {
        self.widths.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.widths.len() < 2 || self.widths.contains(&0) {
            return Err(contract("mlp needs at least two non-zero layer widths"));
        }
        if self.batch_size == 0 {
            return Err(contract("mlp batch size must be positive"));
        }
        if !(self.noise_std >= 0.0) {
            return Err(contract("mlp noise must be non-negative"));
        }
        let n = self.param_count();
        if n > MAX_PARAMS {
            return Err(Error::TooLarge {
                what: "mlp".into(),
                size: n,
                limit: MAX_PARAMS,
            });
        }
        Ok(())
    }

    fn layers(&self) -> usize {
        self.widths.len() - 1
    }

    /// `layer{l}.weight` (`out×in`) and `layer{l}.bias` (`out×1`) per layer.
    /// The first weight is an embedding, the last an output head, the rest
    /// matrix blocks; biases use the norm role.
    pub fn layout(&self) -> Result<ParamLayout> {
        self.validate()?;
        let last = self.layers() - 1;
        let mut blocks = Vec::new();
        for l in 0..self.layers() {
            let (fan_in, fan_out) = (self.widths[l], self.widths[l + 1]);
            let role = if l == last {
                BlockRole::Output
            } else if l == 0 {
                BlockRole::Embedding
            } else {
                BlockRole::Muon
            };
            blocks.push((format!("layer{l}.weight"), fan_out, fan_in, role));
            blocks.push((format!("layer{l}.bias"), fan_out, 1, BlockRole::Norm));
        }
        ParamLayout::new(blocks)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpBatch<T> {
    /// `batch × widths[0]`.
    pub inputs: DenseMatrix<T>,
    /// `batch × widths[last]`.
    pub targets: DenseMatrix<T>,
}

/// The MLP on one fixed minibatch; [`Landscape::stochastic_grad`] draws fresh ones.
#[derive(Debug, Clone)]
pub struct MlpLandscape<T> {
    spec: MlpSpec,
    layout: ParamLayout,
    teacher: Vec<T>,
    batch: MlpBatch<T>,
    init: Vec<T>,
}

impl<T: Real> MlpLandscape<T> {
    /// Student initialization, teacher and the fixed batch come from independent
    /// child streams of `seed`. Weights are `N(0, 1/fan_in)`, biases zero.
    pub fn new(spec: MlpSpec, seed: u64) -> Result<Self> {
        let layout = spec.layout()?;
        let init = random_params(&layout, &mut SplitMix64::child(seed, "init"));
        let teacher = random_params(&layout, &mut SplitMix64::child(seed, "teacher"));
        let batch = draw_batch(&spec, &layout, &teacher, &mut SplitMix64::child(seed, "data"));
        Ok(Self {
            spec,
            layout,
            teacher,
            batch,
            init,
        })
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    pub fn batch(&self) -> &MlpBatch<T> {
        &self.batch
    }

    pub fn teacher(&self) -> &[T] {
        &self.teacher
    }

    pub fn sample_batch(&self, rng: &mut SplitMix64) -> MlpBatch<T> {
        draw_batch(&self.spec, &self.layout, &self.teacher, rng)
    }

    fn weight(&self, w: &[T], l: usize) -> DenseMatrix<T> {
        layer_weight(&self.layout, w, l)
    }

    fn forward(&self, w: &[T], inputs: &DenseMatrix<T>) -> Vec<DenseMatrix<T>> {
        forward(&self.spec, &self.layout, w, inputs)
    }

    pub fn loss_on(&self, w: &[T], batch: &MlpBatch<T>) -> T {
        let y = self.forward(w, &batch.inputs).pop().expect("at least one layer");
        let n = T::from_usize_lossy(y.len());
        y.as_slice()
            .iter()
            .zip(batch.targets.as_slice())
            .map(|(&a, &t)| (a - t) * (a - t))
            .sum::<T>()
            / n
    }

    /// Reverse-mode gradient of [`MlpLandscape::loss_on`].
    pub fn grad_on(&self, w: &[T], batch: &MlpBatch<T>) -> Vec<T> {
        let layers = self.spec.layers();
        let acts = self.forward(w, &batch.inputs);
        let y = &acts[layers];
        let scale = T::lit(2.0) / T::from_usize_lossy(y.len());
        let mut dz = DenseMatrix::from_fn(y.rows(), y.cols(), |i, j| scale * (y[(i, j)] - batch.targets[(i, j)]));
        let mut g = vec![T::zero(); self.layout.total()];
        let slots = self.layout.slots();
        for l in (0..layers).rev() {
            let input = &acts[l];
            let (ws, bs) = (&slots[2 * l], &slots[2 * l + 1]);
            for o in 0..ws.rows {
                let mut bias = T::zero();
                for n in 0..dz.rows() {
                    bias += dz[(n, o)];
                }
                g[bs.offset + o] = bias;
                for i in 0..ws.cols {
                    let mut acc = T::zero();
                    for n in 0..dz.rows() {
                        acc += dz[(n, o)] * input[(n, i)];
                    }
                    g[ws.offset + o * ws.cols + i] = acc;
                }
            }
            if l == 0 {
                break;
            }
            let wm = self.weight(w, l);
            dz = DenseMatrix::from_fn(dz.rows(), ws.cols, |n, i| {
                let back: T = (0..ws.rows).map(|o| dz[(n, o)] * wm[(o, i)]).sum();
                let a = input[(n, i)];
                back * (T::one() - a * a)
            });
        }
        g
    }
}

impl<T: Real> Landscape<T> for MlpLandscape<T> {
    fn dim(&self) -> usize {
        self.layout.total()
    }

    fn loss(&self, w: &[T]) -> T {
        self.loss_on(w, &self.batch)
    }

    fn grad(&self, w: &[T]) -> Vec<T> {
        self.grad_on(w, &self.batch)
    }

    fn layout(&self) -> ParamLayout {
        self.layout.clone()
    }

    fn initial_point(&self) -> Vec<T> {
        self.init.clone()
    }

    fn stochastic_grad(&self, w: &[T], rng: &mut SplitMix64) -> Vec<T> {
        let batch = self.sample_batch(rng);
        self.grad_on(w, &batch)
    }
}

fn random_params<T: Real>(layout: &ParamLayout, rng: &mut SplitMix64) -> Vec<T> {
    let mut w = vec![T::zero(); layout.total()];
    for slot in layout.slots() {
        if slot.name.ends_with(".bias") {
            continue;
        }
        let scale = 1.0 / (slot.cols as f64).sqrt();
        for x in &mut w[slot.range()] {
            *x = T::lit(scale * rng.next_normal());
        }
    }
    w
}

fn draw_batch<T: Real>(spec: &MlpSpec, layout: &ParamLayout, teacher: &[T], rng: &mut SplitMix64) -> MlpBatch<T> {
    let inputs = DenseMatrix::from_fn(spec.batch_size, spec.widths[0], |_, _| T::lit(rng.next_normal()));
    let clean = forward(spec, layout, teacher, &inputs).pop().expect("at least one layer");
    let noise = T::lit(spec.noise_std);
    let targets = DenseMatrix::from_fn(clean.rows(), clean.cols(), |i, j| {
        clean[(i, j)] + noise * T::lit(rng.next_normal())
    });
    MlpBatch { inputs, targets }
}

fn layer_weight<T: Real>(layout: &ParamLayout, w: &[T], l: usize) -> DenseMatrix<T> {
    let ws = &layout.slots()[2 * l];
    DenseMatrix::from_fn(ws.rows, ws.cols, |i, j| w[ws.offset + i * ws.cols + j])
}

/// Activations `[x, h₁, …, y]`; hidden layers use tanh, the head is linear.
fn forward<T: Real>(spec: &MlpSpec, layout: &ParamLayout, w: &[T], inputs: &DenseMatrix<T>) -> Vec<DenseMatrix<T>> {
    let layers = spec.layers();
    let mut acts = vec![inputs.clone()];
    for l in 0..layers {
        let wm = layer_weight(layout, w, l);
        let b = &w[layout.slots()[2 * l + 1].range()];
        let prev = &acts[l];
        let z = DenseMatrix::from_fn(prev.rows(), wm.rows(), |n, o| {
            prev.row(n).iter().zip(wm.row(o)).map(|(&a, &c)| a * c).sum::<T>() + b[o]
        });
        acts.push(if l + 1 < layers { z.map(|x| x.tanh()) } else { z });
    }
    acts
}
