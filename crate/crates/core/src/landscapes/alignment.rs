use crate::error::{contract, Result};
use crate::linalg::{sym_eig, DenseMatrix};
use crate::optim::{Family, OptimizerConfig, ScheduleSpec};
use crate::rng::SplitMix64;
use crate::scalar::Real;
use crate::subspace::coverage_score;

use super::{fd_block_hessian, Landscape, MlpLandscape, MlpSpec, Trainer};

#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentConfig {
    /// Dimension of the Hessian top eigenspace (capped at the row/column size).
    pub d_s: usize,
    /// Gram subspace sizes; `None` means every `k` from `d_s` to the full dimension.
    /// The full dimension is always appended.
    pub k_grid: Option<Vec<usize>>,
    /// Fresh minibatches averaged into the Gram estimates.
    pub gram_batches: usize,
}

impl Default for AlignmentConfig {
    fn default() -> Self {
        Self {
            d_s: 4,
            k_grid: None,
            gram_batches: 32,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// Hessian of one row against `E[GᵀG]`.
    Row,
    /// Hessian of one column against `E[GGᵀ]`.
    Column,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::Row => "row",
            Axis::Column => "column",
        }
    }
}

/// Coverage of one row's (column's) Hessian top-`d_s` eigenspace by the top-`k`
/// Gram eigenspace, for each `k` in `ks`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageCurve<T> {
    pub block: String,
    pub axis: Axis,
    pub index: usize,
    pub d_s: usize,
    pub ks: Vec<usize>,
    pub scores: Vec<T>,
}

fn eigvecs_desc<T: Real>(m: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    Ok(sym_eig(&m.symmetrized())?.vectors)
}

fn sub_hessian<T: Real>(h: &DenseMatrix<T>, idx: &[usize]) -> DenseMatrix<T> {
    DenseMatrix::from_fn(idx.len(), idx.len(), |a, b| h[(idx[a], idx[b])])
}

fn curve<T: Real>(
    hess: &DenseMatrix<T>,
    gram_vecs: &DenseMatrix<T>,
    d_s: usize,
    k_grid: &Option<Vec<usize>>,
) -> Result<(usize, Vec<usize>, Vec<T>)> {
    let n = hess.rows();
    let d = d_s.min(n);
    let top = eigvecs_desc(hess)?.leading_columns(d);
    let ks: Vec<usize> = match k_grid {
        Some(g) => {
            let mut ks: Vec<usize> = g.iter().copied().filter(|&k| k >= d && k < n).collect();
            ks.sort_unstable();
            ks.dedup();
            ks.push(n);
            ks
        }
        None => (d..=n).collect(),
    };
    let scores = ks
        .iter()
        .map(|&k| coverage_score(&top, &gram_vecs.leading_columns(k)))
        .collect::<Result<Vec<T>>>()?;
    Ok((d, ks, scores))
}

/// For every 2-D block of the landscape: finite-difference block Hessian at `w`,
/// Gram estimates `E[GᵀG]`, `E[GGᵀ]` over fresh stochastic gradients, and one
/// coverage curve per row and per column.
pub fn alignment_experiment<T: Real, L: Landscape<T> + ?Sized>(
    landscape: &L,
    w: &[T],
    cfg: &AlignmentConfig,
    rng: &mut SplitMix64,
) -> Result<Vec<CoverageCurve<T>>> {
    if cfg.d_s == 0 || cfg.gram_batches == 0 {
        return Err(contract("alignment needs d_s ≥ 1 and at least one Gram batch"));
    }
    let layout = landscape.layout();
    let slots: Vec<_> = layout.slots().iter().filter(|s| s.rows > 1 && s.cols > 1).cloned().collect();
    let mut row_grams: Vec<DenseMatrix<T>> = slots.iter().map(|s| DenseMatrix::zeros(s.cols, s.cols)).collect();
    let mut col_grams: Vec<DenseMatrix<T>> = slots.iter().map(|s| DenseMatrix::zeros(s.rows, s.rows)).collect();
    for _ in 0..cfg.gram_batches {
        let g = landscape.stochastic_grad(w, rng);
        for (b, s) in slots.iter().enumerate() {
            let gm = DenseMatrix::new(s.rows, s.cols, g[s.range()].to_vec())?;
            row_grams[b].axpy(T::one(), &gm.t_matmul(&gm)?)?;
            col_grams[b].axpy(T::one(), &gm.matmul(&gm.transpose())?)?;
        }
    }
    let inv = T::one() / T::from_usize_lossy(cfg.gram_batches);
    let mut curves = Vec::new();
    for (b, s) in slots.iter().enumerate() {
        let h = fd_block_hessian(landscape, &s.name, w)?;
        let row_vecs = eigvecs_desc(&row_grams[b].scale(inv))?;
        let col_vecs = eigvecs_desc(&col_grams[b].scale(inv))?;
        for i in 0..s.rows {
            let idx: Vec<usize> = (0..s.cols).map(|j| i * s.cols + j).collect();
            let (d, ks, scores) = curve(&sub_hessian(&h, &idx), &row_vecs, cfg.d_s, &cfg.k_grid)?;
            curves.push(CoverageCurve {
                block: s.name.clone(),
                axis: Axis::Row,
                index: i,
                d_s: d,
                ks,
                scores,
            });
        }
        for j in 0..s.cols {
            let idx: Vec<usize> = (0..s.rows).map(|i| i * s.cols + j).collect();
            let (d, ks, scores) = curve(&sub_hessian(&h, &idx), &col_vecs, cfg.d_s, &cfg.k_grid)?;
            curves.push(CoverageCurve {
                block: s.name.clone(),
                axis: Axis::Column,
                index: j,
                d_s: d,
                ks,
                scores,
            });
        }
    }
    Ok(curves)
}

/// Trains the MLP with AdamW (lr 1e-3, constant) for `train_steps` on its
/// fixed batch, then runs [`alignment_experiment`] at the trained point.
pub fn mlp_alignment<T: Real>(
    spec: MlpSpec,
    seed: u64,
    train_steps: usize,
    cfg: &AlignmentConfig,
) -> Result<Vec<CoverageCurve<T>>> {
    let mlp = MlpLandscape::<T>::new(spec, seed)?;
    let opt = OptimizerConfig::new(Family::AdamW);
    let schedule = ScheduleSpec::constant(T::lit(1e-3), train_steps.max(1));
    let mut trainer = Trainer::for_landscape(&mlp, opt, schedule)?;
    for _ in 0..train_steps {
        trainer.step(&mlp)?;
    }
    let w = trainer.params();
    alignment_experiment(&mlp, &w, cfg, &mut SplitMix64::child(seed, "align"))
}
