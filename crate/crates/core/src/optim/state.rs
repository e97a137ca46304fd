use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::polar::RankController;
use crate::scalar::Real;
use crate::subspace::SoapMaskController;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BlockRole {
    /// Hidden 2-D weight handled by the matrix preconditioner.
    Muon,
    Adam,
    Embedding,
    Norm,
    /// Always plain AdamW; never accelerated.
    Output,
}

impl BlockRole {
    pub fn name(self) -> &'static str {
        match self {
            BlockRole::Muon => "muon",
            BlockRole::Adam => "adam",
            BlockRole::Embedding => "embedding",
            BlockRole::Norm => "norm",
            BlockRole::Output => "output",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Self::Muon, Self::Adam, Self::Embedding, Self::Norm, Self::Output]
            .into_iter()
            .find(|r| r.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixBlock<T> {
    pub name: String,
    pub matrix: DenseMatrix<T>,
    pub role: BlockRole,
}

impl<T: Real> MatrixBlock<T> {
    pub fn new(name: impl Into<String>, matrix: DenseMatrix<T>, role: BlockRole) -> Self {
        Self {
            name: name.into(),
            matrix,
            role,
        }
    }
}

/// What the last step did to a block; NaN marks quantities the stepper does not have.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDiagnostics<T> {
    /// RMS of `lr·scale·direction` (weight decay excluded).
    pub update_rms: T,
    /// `‖P‖_F²` for Muon-LITE, mask sum for the elementwise LITE steppers.
    pub sharp_mass: T,
    pub l: T,
    pub l_s: T,
    pub l_smooth: T,
}

impl<T: Real> Default for StepDiagnostics<T> {
    fn default() -> Self {
        Self {
            update_rms: T::nan(),
            sharp_mass: T::nan(),
            l: T::nan(),
            l_s: T::nan(),
            l_smooth: T::nan(),
        }
    }
}

/// Per-block optimizer memory. All moments share the block's shape; the SOAP
/// factors are `rows × rows` and `cols × cols`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockOptState<T> {
    pub m: DenseMatrix<T>,
    pub v: DenseMatrix<T>,
    pub prev_g: DenseMatrix<T>,
    pub m_slow: DenseMatrix<T>,
    pub gram_l: DenseMatrix<T>,
    pub gram_r: DenseMatrix<T>,
    pub q_l: DenseMatrix<T>,
    pub q_r: DenseMatrix<T>,
    pub rank_ctrl: Option<RankController<T>>,
    pub mask_ctrl: Option<SoapMaskController<T>>,
    pub step: usize,
    pub diagnostics: StepDiagnostics<T>,
}

impl<T: Real> BlockOptState<T> {
    pub fn new(rows: usize, cols: usize) -> Self {
        let z = DenseMatrix::zeros(rows, cols);
        Self {
            m: z.clone(),
            v: z.clone(),
            prev_g: z.clone(),
            m_slow: z,
            gram_l: DenseMatrix::zeros(rows, rows),
            gram_r: DenseMatrix::zeros(cols, cols),
            q_l: DenseMatrix::identity(rows),
            q_r: DenseMatrix::identity(cols),
            rank_ctrl: None,
            mask_ctrl: None,
            step: 0,
            diagnostics: StepDiagnostics::default(),
        }
    }

    pub fn for_block(block: &MatrixBlock<T>) -> Self {
        Self::new(block.matrix.rows(), block.matrix.cols())
    }

    pub(crate) fn check_shape(&self, g: &DenseMatrix<T>) -> Result<()> {
        if self.m.shape() != g.shape() {
            return Err(Error::Shape {
                op: "optimizer step",
                left: self.m.shape(),
                right: g.shape(),
            });
        }
        Ok(())
    }
}

/// Scales all blocks by `threshold/‖g‖` when the joint norm exceeds `threshold`.
/// Returns the joint norm before clipping.
pub fn clip_global_norm<T: Real>(grads: &mut [DenseMatrix<T>], threshold: T) -> T {
    let norm = grads
        .iter()
        .map(|g| g.frobenius_norm_sq())
        .sum::<T>()
        .sqrt();
    if norm > threshold {
        let s = threshold / norm;
        for g in grads.iter_mut() {
            g.scale_mut(s);
        }
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;

    type M = DenseMatrix<f64>;

    #[test]
    fn clipping_examples() {
        let mut one = vec![M::from_rows(&[&[0.3, 0.4]])];
        assert_eq!(clip_global_norm(&mut one, 1.0), 0.5);
        assert_eq!(one[0], M::from_rows(&[&[0.3, 0.4]]));

        let mut big = vec![M::from_rows(&[&[4.0]])];
        assert_eq!(clip_global_norm(&mut big, 1.0), 4.0);
        assert_eq!(big[0].as_slice(), &[1.0]);

        let mut two = vec![M::from_rows(&[&[3.0]]), M::from_rows(&[&[0.0, 4.0]])];
        assert_eq!(clip_global_norm(&mut two, 1.0), 5.0);
        assert!((two[0].as_slice()[0] - 0.6).abs() < 1e-15);
        assert!((two[1].as_slice()[1] - 0.8).abs() < 1e-15);
    }
}
