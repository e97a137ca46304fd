use crate::error::{contract, Error, Result};
use crate::linalg::DenseMatrix;
use crate::scalar::Real;

use super::Landscape;

/// Largest block handled by [`fd_block_hessian`].
pub const FD_HESSIAN_LIMIT: usize = 1024;

fn coord_step<T: Real>(x: T) -> T {
    T::lit(1e-5) * (T::one() + x.abs())
}

/// Central differences of the loss, step `1e-5·(1+|wᵢ|)` per coordinate.
pub fn fd_gradient<T: Real, L: Landscape<T> + ?Sized>(landscape: &L, w: &[T]) -> Vec<T> {
    let mut probe = w.to_vec();
    (0..w.len())
        .map(|i| {
            let h = coord_step(w[i]);
            probe[i] = w[i] + h;
            let up = landscape.loss(&probe);
            probe[i] = w[i] - h;
            let down = landscape.loss(&probe);
            probe[i] = w[i];
            (up - down) / (h + h)
        })
        .collect()
}

/// `(∇f(w + εv) − ∇f(w − εv)) / 2ε` with `ε‖v‖ = 1e-5·(1 + ‖w‖)`.
pub fn fd_hvp<T: Real, L: Landscape<T> + ?Sized>(landscape: &L, w: &[T], v: &[T]) -> Vec<T> {
    let vnorm = v.iter().map(|&x| x * x).sum::<T>().sqrt();
    if vnorm == T::zero() {
        return vec![T::zero(); w.len()];
    }
    let wnorm = w.iter().map(|&x| x * x).sum::<T>().sqrt();
    let eps = T::lit(1e-5) * (T::one() + wnorm) / vnorm;
    let plus: Vec<T> = w.iter().zip(v).map(|(&a, &b)| a + eps * b).collect();
    let minus: Vec<T> = w.iter().zip(v).map(|(&a, &b)| a - eps * b).collect();
    let gp = landscape.grad(&plus);
    let gm = landscape.grad(&minus);
    gp.iter().zip(&gm).map(|(&a, &b)| (a - b) / (eps + eps)).collect()
}

/// Symmetrized central-difference Hessian of the loss restricted to one block,
/// indexed in the block's row-major order.
pub fn fd_block_hessian<T: Real, L: Landscape<T> + ?Sized>(
    landscape: &L,
    block: &str,
    w: &[T],
) -> Result<DenseMatrix<T>> {
    Ok(fd_block_hessian_raw(landscape, block, w)?.symmetrized())
}

/// Column `j` holds the central difference of the block gradient along coordinate `j`.
pub fn fd_block_hessian_raw<T: Real, L: Landscape<T> + ?Sized>(
    landscape: &L,
    block: &str,
    w: &[T],
) -> Result<DenseMatrix<T>> {
    let layout = landscape.layout();
    let slot = layout
        .slot(block)
        .ok_or_else(|| contract(format!("unknown block {block}")))?;
    if w.len() != layout.total() {
        return Err(contract("parameter vector does not match the layout"));
    }
    let p = slot.len();
    if p > FD_HESSIAN_LIMIT {
        return Err(Error::TooLarge {
            what: format!("block {block}"),
            size: p,
            limit: FD_HESSIAN_LIMIT,
        });
    }
    let range = slot.range();
    let mut h = DenseMatrix::zeros(p, p);
    let mut probe = w.to_vec();
    for j in 0..p {
        let idx = range.start + j;
        let step = coord_step(w[idx]);
        probe[idx] = w[idx] + step;
        let gp = landscape.grad(&probe);
        probe[idx] = w[idx] - step;
        let gm = landscape.grad(&probe);
        probe[idx] = w[idx];
        for i in 0..p {
            h[(i, j)] = (gp[range.start + i] - gm[range.start + i]) / (step + step);
        }
    }
    if !h.is_finite() {
        return Err(Error::NonFinite("finite-difference Hessian"));
    }
    Ok(h)
}
