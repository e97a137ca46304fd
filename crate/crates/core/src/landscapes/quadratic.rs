use crate::error::{contract, Result};
use crate::linalg::DenseMatrix;
use crate::optim::BlockRole;
use crate::quadratic::QuadraticSpec;
use crate::rng::SplitMix64;
use crate::scalar::Real;

use super::{Landscape, ParamLayout};

/// `f(w) = ½Σλᵢwᵢ² + bᵀw` exposed as a single `p×1` block named `w`.
#[derive(Debug, Clone)]
pub struct QuadraticLandscape<T> {
    spec: QuadraticSpec<T>,
    init: Vec<T>,
    role: BlockRole,
}

impl<T: Real> QuadraticLandscape<T> {
    /// Starts from `w = (1, …, 1)` with the block treated as an Adam-style parameter.
    pub fn new(spec: QuadraticSpec<T>) -> Self {
        let init = vec![T::one(); spec.dim()];
        Self {
            spec,
            init,
            role: BlockRole::Adam,
        }
    }

    pub fn with_init(mut self, init: Vec<T>) -> Result<Self> {
        if init.len() != self.spec.dim() {
            return Err(contract("initial point does not match the quadratic dimension"));
        }
        self.init = init;
        Ok(self)
    }

    pub fn with_role(mut self, role: BlockRole) -> Self {
        self.role = role;
        self
    }

    pub fn spec(&self) -> &QuadraticSpec<T> {
        &self.spec
    }

    pub fn stationary_point(&self) -> Vec<T> {
        self.spec.stationary_point()
    }
}

impl<T: Real> Landscape<T> for QuadraticLandscape<T> {
    fn dim(&self) -> usize {
        self.spec.dim()
    }

    fn loss(&self, w: &[T]) -> T {
        self.spec.loss(w)
    }

    fn grad(&self, w: &[T]) -> Vec<T> {
        self.spec.grad(w)
    }

    fn hvp(&self, _w: &[T], v: &[T]) -> Vec<T> {
        self.spec.eigenvalues().iter().zip(v).map(|(&l, &x)| l * x).collect()
    }

    fn layout(&self) -> ParamLayout {
        ParamLayout::new(vec![("w".into(), self.spec.dim(), 1, self.role)]).expect("non-empty spec")
    }

    fn initial_point(&self) -> Vec<T> {
        self.init.clone()
    }
}

/// `f(W) = ½·tr(K W H Wᵀ)` on one `r×c` block: every row Hessian is a multiple
/// of `H` and every column Hessian a multiple of `K`.
///
/// Stochastic gradients are taken at `W + σξ` with isotropic `ξ`, so the
/// expected Grams are `H(WᵀK²W + σ²tr(K²)I)H` and `K(WH²Wᵀ + σ²tr(H²)I)K`.
#[derive(Debug, Clone)]
pub struct KroneckerQuadratic<T> {
    row_hessian: DenseMatrix<T>,
    col_hessian: DenseMatrix<T>,
    noise_std: T,
    init: Vec<T>,
}

impl<T: Real> KroneckerQuadratic<T> {
    /// `row_hessian` is `c×c`, `col_hessian` is `r×r`; both symmetric.
    pub fn new(row_hessian: DenseMatrix<T>, col_hessian: DenseMatrix<T>, noise_std: T) -> Result<Self> {
        let tol = T::lit(1e-12);
        for (name, m) in [("row_hessian", &row_hessian), ("col_hessian", &col_hessian)] {
            if !m.is_square() || m.asymmetry() > tol {
                return Err(contract(format!("{name} must be square and symmetric")));
            }
        }
        let n = row_hessian.rows() * col_hessian.rows();
        Ok(Self {
            row_hessian,
            col_hessian,
            noise_std,
            init: vec![T::zero(); n],
        })
    }

    /// Orthogonally rotated diagonal Hessians with the given spectra.
    pub fn with_spectra(row_spectrum: &[T], col_spectrum: &[T], noise_std: T, seed: u64) -> Result<Self> {
        let mut rng = SplitMix64::child(seed, "kronecker");
        let mut rotate = |spectrum: &[T]| -> Result<DenseMatrix<T>> {
            let n = spectrum.len();
            let g = DenseMatrix::from_fn(n, n, |_, _| T::lit(rng.next_normal()));
            let q = crate::linalg::qr_decompose(&g)?.q;
            Ok(q.matmul(&DenseMatrix::from_diag(spectrum))?.matmul(&q.transpose())?.symmetrized())
        };
        let h = rotate(row_spectrum)?;
        let k = rotate(col_spectrum)?;
        Self::new(h, k, noise_std)
    }

    pub fn row_hessian(&self) -> &DenseMatrix<T> {
        &self.row_hessian
    }

    pub fn col_hessian(&self) -> &DenseMatrix<T> {
        &self.col_hessian
    }

    fn shape(&self) -> (usize, usize) {
        (self.col_hessian.rows(), self.row_hessian.rows())
    }

    fn as_matrix(&self, w: &[T]) -> DenseMatrix<T> {
        let (r, c) = self.shape();
        DenseMatrix::from_fn(r, c, |i, j| w[i * c + j])
    }

    fn grad_matrix(&self, w: &DenseMatrix<T>) -> DenseMatrix<T> {
        self.col_hessian
            .matmul(w)
            .and_then(|kw| kw.matmul(&self.row_hessian))
            .expect("shapes fixed at construction")
    }
}

impl<T: Real> Landscape<T> for KroneckerQuadratic<T> {
    fn dim(&self) -> usize {
        let (r, c) = self.shape();
        r * c
    }

    fn loss(&self, w: &[T]) -> T {
        let wm = self.as_matrix(w);
        let g = self.grad_matrix(&wm);
        T::lit(0.5) * wm.as_slice().iter().zip(g.as_slice()).map(|(&a, &b)| a * b).sum::<T>()
    }

    fn grad(&self, w: &[T]) -> Vec<T> {
        self.grad_matrix(&self.as_matrix(w)).into_vec()
    }

    fn hvp(&self, _w: &[T], v: &[T]) -> Vec<T> {
        self.grad(v)
    }

    fn layout(&self) -> ParamLayout {
        let (r, c) = self.shape();
        ParamLayout::new(vec![("w".into(), r, c, BlockRole::Muon)]).expect("non-empty shape")
    }

    fn initial_point(&self) -> Vec<T> {
        self.init.clone()
    }

    fn stochastic_grad(&self, w: &[T], rng: &mut SplitMix64) -> Vec<T> {
        let noisy: Vec<T> = w
            .iter()
            .map(|&x| x + self.noise_std * T::lit(rng.next_normal()))
            .collect();
        self.grad(&noisy)
    }
}
