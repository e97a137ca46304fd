//! Objective functions for experiments and the glue that lets the optimizer
//! stack train on them.

mod alignment;
mod hessian;
mod mlp;
mod quadratic;
mod river;

use std::collections::BTreeMap;

use crate::error::{contract, Result};
use crate::linalg::DenseMatrix;
use crate::optim::{route_and_step, BlockOptState, BlockRole, MatrixBlock, OptimizerConfig, ScheduleSpec, StepReport};
use crate::rng::SplitMix64;
use crate::scalar::Real;

pub use alignment::{alignment_experiment, mlp_alignment, AlignmentConfig, Axis, CoverageCurve};
pub use hessian::{fd_block_hessian, fd_block_hessian_raw, fd_gradient, fd_hvp, FD_HESSIAN_LIMIT};
pub use mlp::{MlpBatch, MlpLandscape, MlpSpec};
pub use quadratic::{KroneckerQuadratic, QuadraticLandscape};
pub use river::{RiverValleyLandscape, RiverValleySpec};

/// A differentiable objective over a flat parameter vector split into named blocks.
pub trait Landscape<T: Real> {
    fn dim(&self) -> usize;
    fn loss(&self, w: &[T]) -> T;
    fn grad(&self, w: &[T]) -> Vec<T>;

    /// Hessian-vector product; central differences of the gradient unless overridden.
    fn hvp(&self, w: &[T], v: &[T]) -> Vec<T> {
        fd_hvp(self, w, v)
    }

    fn layout(&self) -> ParamLayout;

    /// Starting point for training runs.
    fn initial_point(&self) -> Vec<T>;

    /// Gradient on a fresh minibatch; the exact gradient for deterministic landscapes.
    fn stochastic_grad(&self, w: &[T], _rng: &mut SplitMix64) -> Vec<T> {
        self.grad(w)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockSlot {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub offset: usize,
    pub role: BlockRole,
}

impl BlockSlot {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

/// Row-major placement of named matrix blocks inside the flat parameter vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamLayout {
    slots: Vec<BlockSlot>,
}

impl ParamLayout {
    pub fn new(blocks: Vec<(String, usize, usize, BlockRole)>) -> Result<Self> {
        let mut offset = 0;
        let mut slots = Vec::with_capacity(blocks.len());
        for (name, rows, cols, role) in blocks {
            if rows == 0 || cols == 0 {
                return Err(contract(format!("block {name} is empty")));
            }
            if slots.iter().any(|s: &BlockSlot| s.name == name) {
                return Err(contract(format!("duplicate block {name}")));
            }
            slots.push(BlockSlot { name, rows, cols, offset, role });
            offset += rows * cols;
        }
        Ok(Self { slots })
    }

    pub fn slots(&self) -> &[BlockSlot] {
        &self.slots
    }

    pub fn slot(&self, name: &str) -> Option<&BlockSlot> {
        self.slots.iter().find(|s| s.name == name)
    }

    pub fn total(&self) -> usize {
        self.slots.iter().map(BlockSlot::len).sum()
    }

    fn check_len<T>(&self, w: &[T]) -> Result<()> {
        if w.len() != self.total() {
            return Err(contract(format!(
                "parameter vector has {} entries, layout needs {}",
                w.len(),
                self.total()
            )));
        }
        Ok(())
    }

    pub fn block_matrix<T: Real>(&self, slot: &BlockSlot, w: &[T]) -> Result<DenseMatrix<T>> {
        self.check_len(w)?;
        DenseMatrix::new(slot.rows, slot.cols, w[slot.range()].to_vec())
    }

    pub fn split<T: Real>(&self, w: &[T]) -> Result<Vec<MatrixBlock<T>>> {
        self.slots
            .iter()
            .map(|s| Ok(MatrixBlock::new(s.name.clone(), self.block_matrix(s, w)?, s.role)))
            .collect()
    }

    pub fn split_map<T: Real>(&self, w: &[T]) -> Result<BTreeMap<String, DenseMatrix<T>>> {
        self.slots
            .iter()
            .map(|s| Ok((s.name.clone(), self.block_matrix(s, w)?)))
            .collect()
    }

    /// Inverse of [`ParamLayout::split`]; blocks are matched by name.
    pub fn gather<T: Real>(&self, blocks: &[MatrixBlock<T>]) -> Result<Vec<T>> {
        let mut w = vec![T::zero(); self.total()];
        for s in &self.slots {
            let b = blocks
                .iter()
                .find(|b| b.name == s.name)
                .ok_or_else(|| contract(format!("missing block {}", s.name)))?;
            if b.matrix.shape() != (s.rows, s.cols) {
                return Err(contract(format!("block {} has the wrong shape", s.name)));
            }
            w[s.range()].copy_from_slice(b.matrix.as_slice());
        }
        Ok(w)
    }
}

/// Result of one [`Trainer::step`].
#[derive(Debug, Clone)]
pub struct TrainStep<T> {
    pub step: usize,
    /// Loss at the parameters before the update.
    pub loss: T,
    pub report: StepReport<T>,
}

/// Drives `route_and_step` on a landscape with exact gradients.
#[derive(Debug, Clone)]
pub struct Trainer<T> {
    layout: ParamLayout,
    blocks: Vec<MatrixBlock<T>>,
    states: BTreeMap<String, BlockOptState<T>>,
    cfg: OptimizerConfig<T>,
    schedule: ScheduleSpec<T>,
    step: usize,
}

impl<T: Real> Trainer<T> {
    pub fn new(layout: ParamLayout, w0: &[T], cfg: OptimizerConfig<T>, schedule: ScheduleSpec<T>) -> Result<Self> {
        cfg.validate()?;
        let blocks = layout.split(w0)?;
        Ok(Self {
            layout,
            blocks,
            states: BTreeMap::new(),
            cfg,
            schedule,
            step: 0,
        })
    }

    pub fn for_landscape<L: Landscape<T> + ?Sized>(
        landscape: &L,
        cfg: OptimizerConfig<T>,
        schedule: ScheduleSpec<T>,
    ) -> Result<Self> {
        Self::new(landscape.layout(), &landscape.initial_point(), cfg, schedule)
    }

    pub fn params(&self) -> Vec<T> {
        self.layout.gather(&self.blocks).expect("blocks follow the layout")
    }

    pub fn blocks(&self) -> &[MatrixBlock<T>] {
        &self.blocks
    }

    pub fn steps_taken(&self) -> usize {
        self.step
    }

    /// Evaluates loss and gradient at the current point and applies one update.
    /// A non-finite loss is reported as [`crate::Error::NonFinite`].
    pub fn step<L: Landscape<T> + ?Sized>(&mut self, landscape: &L) -> Result<TrainStep<T>> {
        let w = self.params();
        let loss = landscape.loss(&w);
        if !loss.is_finite() {
            return Err(crate::Error::NonFinite("loss"));
        }
        let g = landscape.grad(&w);
        let grads = self.layout.split_map(&g)?;
        let report = route_and_step(&mut self.blocks, &mut self.states, &grads, self.step, &self.schedule, &self.cfg)?;
        let done = TrainStep {
            step: self.step,
            loss,
            report,
        };
        self.step += 1;
        Ok(done)
    }
}
