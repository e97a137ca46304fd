use crate::error::{contract, Result};
use crate::optim::BlockRole;
use crate::scalar::Real;

use super::{Landscape, ParamLayout};

/// `f(x_s, x_f) = ½·L·‖x_s − c(x_f)‖² + ½·μ·‖x_f‖²` with
/// `c(x_f)ᵢ = a·sin(x_f[i mod n_f])`.
#[derive(Debug, Clone, PartialEq)]
pub struct RiverValleySpec<T> {
    pub sharp_dim: usize,
    pub flat_dim: usize,
    pub sharp_curvature: T,
    /// Amplitude `a` of the valley centre, 0.1 by default.
    pub amplitude: T,
    /// Floor curvature `μ`, `L/10⁴` by default.
    pub floor_curvature: T,
}

impl<T: Real> RiverValleySpec<T> {
    pub fn new(sharp_dim: usize, flat_dim: usize, sharp_curvature: T) -> Self {
        Self {
            sharp_dim,
            flat_dim,
            sharp_curvature,
            amplitude: T::lit(0.1),
            floor_curvature: sharp_curvature / T::lit(1e4),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RiverValleyLandscape<T> {
    spec: RiverValleySpec<T>,
    init: Vec<T>,
}

impl<T: Real> RiverValleyLandscape<T> {
    /// Starts at `x_s = 1`, `x_f = 1`.
    pub fn new(spec: RiverValleySpec<T>) -> Result<Self> {
        if spec.sharp_dim == 0 || spec.flat_dim == 0 {
            return Err(contract("river valley needs sharp and flat coordinates"));
        }
        if !(spec.sharp_curvature > T::zero()) || spec.floor_curvature < T::zero() {
            return Err(contract("river valley curvatures must be positive"));
        }
        let init = vec![T::one(); spec.sharp_dim + spec.flat_dim];
        Ok(Self { spec, init })
    }

    pub fn with_init(mut self, init: Vec<T>) -> Result<Self> {
        if init.len() != self.init.len() {
            return Err(contract("initial point does not match the river valley dimension"));
        }
        self.init = init;
        Ok(self)
    }

    pub fn spec(&self) -> &RiverValleySpec<T> {
        &self.spec
    }

    /// Valley centre `c(x_f)` for the sharp coordinates.
    pub fn centre(&self, flat: &[T]) -> Vec<T> {
        (0..self.spec.sharp_dim)
            .map(|i| self.spec.amplitude * flat[i % self.spec.flat_dim].sin())
            .collect()
    }

    /// Point on the valley floor above the given flat coordinates.
    pub fn floor_point(&self, flat: &[T]) -> Vec<T> {
        let mut w = self.centre(flat);
        w.extend_from_slice(flat);
        w
    }
}

impl<T: Real> Landscape<T> for RiverValleyLandscape<T> {
    fn dim(&self) -> usize {
        self.spec.sharp_dim + self.spec.flat_dim
    }

    fn loss(&self, w: &[T]) -> T {
        let (xs, xf) = w.split_at(self.spec.sharp_dim);
        let c = self.centre(xf);
        let half = T::lit(0.5);
        let wall: T = xs.iter().zip(&c).map(|(&a, &b)| (a - b) * (a - b)).sum();
        let floor: T = xf.iter().map(|&x| x * x).sum();
        half * self.spec.sharp_curvature * wall + half * self.spec.floor_curvature * floor
    }

    fn grad(&self, w: &[T]) -> Vec<T> {
        let (xs, xf) = w.split_at(self.spec.sharp_dim);
        let c = self.centre(xf);
        let l = self.spec.sharp_curvature;
        let mut g: Vec<T> = xs.iter().zip(&c).map(|(&a, &b)| l * (a - b)).collect();
        let mut gf: Vec<T> = xf.iter().map(|&x| self.spec.floor_curvature * x).collect();
        for i in 0..self.spec.sharp_dim {
            let j = i % self.spec.flat_dim;
            gf[j] -= g[i] * self.spec.amplitude * xf[j].cos();
        }
        g.extend(gf);
        g
    }

    fn layout(&self) -> ParamLayout {
        ParamLayout::new(vec![
            ("sharp".into(), self.spec.sharp_dim, 1, BlockRole::Adam),
            ("flat".into(), self.spec.flat_dim, 1, BlockRole::Adam),
        ])
        .expect("non-empty dims")
    }

    fn initial_point(&self) -> Vec<T> {
        self.init.clone()
    }
}
