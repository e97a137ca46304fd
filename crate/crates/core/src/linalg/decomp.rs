use crate::error::{contract, Error, Result};
use crate::linalg::DenseMatrix;
use crate::scalar::Real;

const JACOBI_MAX_SWEEPS: usize = 100;

/// Thin QR factorization `a = Q·R`.
#[derive(Debug, Clone)]
pub struct Qr<T> {
    /// `m × n`, orthonormal columns.
    pub q: DenseMatrix<T>,
    /// `n × n`, upper triangular with non-negative diagonal.
    pub r: DenseMatrix<T>,
}

/// Symmetric eigendecomposition, eigenvalues in descending order.
#[derive(Debug, Clone)]
pub struct SymEig<T> {
    pub values: Vec<T>,
    /// Eigenvectors as columns, aligned with `values`.
    pub vectors: DenseMatrix<T>,
}

/// Thin singular value decomposition `a = U·diag(σ)·Vᵀ`.
#[derive(Debug, Clone)]
pub struct Svd<T> {
    /// `m × k` with `k = min(m, n)`.
    pub u: DenseMatrix<T>,
    /// Descending, non-negative.
    pub sigma: Vec<T>,
    /// `n × k`.
    pub v: DenseMatrix<T>,
}

impl<T: Real> Svd<T> {
    pub fn reconstruct(&self) -> DenseMatrix<T> {
        let scaled = DenseMatrix::from_fn(self.u.rows(), self.u.cols(), |i, j| {
            self.u[(i, j)] * self.sigma[j]
        });
        scaled
            .matmul(&self.v.transpose())
            .expect("consistent svd shapes")
    }

    /// The exact polar factor `U·Vᵀ`.
    pub fn polar_factor(&self) -> DenseMatrix<T> {
        self.u
            .matmul(&self.v.transpose())
            .expect("consistent svd shapes")
    }

    /// Orthogonal projector onto the span of the leading `k` right singular vectors.
    pub fn right_projector(&self, k: usize) -> DenseMatrix<T> {
        let n = self.v.rows();
        if k == 0 {
            return DenseMatrix::zeros(n, n);
        }
        let vk = self.v.leading_columns(k);
        vk.matmul(&vk.transpose()).expect("consistent svd shapes")
    }
}

/// Householder QR for `a` with `rows ≥ cols`.
///
/// The sign of each Householder reflection is chosen so the diagonal of `R` is
/// non-negative; a zero pivot column is left untouched and still yields an
/// orthonormal column of `Q`.
pub fn qr_decompose<T: Real>(a: &DenseMatrix<T>) -> Result<Qr<T>> {
    let (m, n) = a.shape();
    if m < n {
        return Err(Error::Shape {
            op: "qr_decompose",
            left: (m, n),
            right: (n, n),
        });
    }
    let mut work = a.clone();
    let mut reflectors: Vec<Option<Vec<T>>> = Vec::with_capacity(n);

    for k in 0..n {
        let alpha = (k..m)
            .map(|i| work[(i, k)] * work[(i, k)])
            .sum::<T>()
            .sqrt();
        if alpha == T::zero() {
            reflectors.push(None);
            continue;
        }
        let x0 = work[(k, k)];
        let mut v: Vec<T> = (k..m).map(|i| work[(i, k)]).collect();
        // v = x + sign(x0)·‖x‖·e1 avoids cancellation
        v[0] = if x0 >= T::zero() { x0 + alpha } else { x0 - alpha };
        let vnorm2: T = v.iter().map(|&x| x * x).sum();
        if vnorm2 == T::zero() {
            reflectors.push(None);
            continue;
        }
        let two = T::lit(2.0);
        for j in k..n {
            let dot: T = (k..m).map(|i| v[i - k] * work[(i, j)]).sum();
            let f = two * dot / vnorm2;
            for i in k..m {
                work[(i, j)] -= f * v[i - k];
            }
        }
        reflectors.push(Some(v));
    }

    // Q = H_0 … H_{n-1} applied to the first n columns of I_m.
    let mut q = DenseMatrix::from_fn(m, n, |i, j| if i == j { T::one() } else { T::zero() });
    for k in (0..n).rev() {
        let Some(v) = &reflectors[k] else { continue };
        let vnorm2: T = v.iter().map(|&x| x * x).sum();
        let two = T::lit(2.0);
        for j in 0..n {
            let dot: T = (k..m).map(|i| v[i - k] * q[(i, j)]).sum();
            let f = two * dot / vnorm2;
            for i in k..m {
                q[(i, j)] -= f * v[i - k];
            }
        }
    }

    let mut r = DenseMatrix::from_fn(n, n, |i, j| if j >= i { work[(i, j)] } else { T::zero() });
    for k in 0..n {
        if r[(k, k)] < T::zero() {
            for j in k..n {
                r[(k, j)] = -r[(k, j)];
            }
            for i in 0..m {
                q[(i, k)] = -q[(i, k)];
            }
        }
    }
    Ok(Qr { q, r })
}

fn symmetry_tolerance<T: Real>() -> T {
    T::lit(1e-12).max(T::epsilon() * T::lit(64.0))
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// Sweeps stop once the off-diagonal Frobenius mass drops below `1e-14·‖A‖_F`
/// (or a small multiple of machine epsilon for `f32`), or after 100 sweeps.
pub fn sym_eig<T: Real>(a: &DenseMatrix<T>) -> Result<SymEig<T>> {
    if !a.is_square() {
        return Err(Error::Shape {
            op: "sym_eig",
            left: a.shape(),
            right: (a.cols(), a.rows()),
        });
    }
    let scale = T::one().max(a.max_abs());
    if a.asymmetry() > symmetry_tolerance::<T>() * scale {
        return Err(contract("sym_eig requires a symmetric matrix"));
    }
    let n = a.rows();
    let mut w = a.symmetrized();
    let mut v = DenseMatrix::identity(n);
    let norm = w.frobenius_norm();
    let stop = T::lit(1e-14).max(T::epsilon() * T::lit(4.0)) * norm;

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = T::zero();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    off += w[(i, j)] * w[(i, j)];
                }
            }
        }
        if off.sqrt() <= stop {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = w[(p, q)];
                if apq == T::zero() {
                    continue;
                }
                let theta = (w[(q, q)] - w[(p, p)]) / (T::lit(2.0) * apq);
                let t = if theta.abs() > T::lit(1e150).min(T::max_value().sqrt()) {
                    T::one() / (T::lit(2.0) * theta)
                } else {
                    let sign = if theta >= T::zero() { T::one() } else { -T::one() };
                    sign / (theta.abs() + (theta * theta + T::one()).sqrt())
                };
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = w[(k, p)];
                    let akq = w[(k, q)];
                    w[(k, p)] = c * akp - s * akq;
                    w[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = w[(p, k)];
                    let aqk = w[(q, k)];
                    w[(p, k)] = c * apk - s * aqk;
                    w[(q, k)] = s * apk + c * aqk;
                }
                w[(p, q)] = T::zero();
                w[(q, p)] = T::zero();
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| w[(j, j)].partial_cmp(&w[(i, i)]).unwrap());
    let values = order.iter().map(|&i| w[(i, i)]).collect();
    let vectors = DenseMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(SymEig { values, vectors })
}

/// Brute-force SVD through the eigendecomposition of the Gram matrix.
///
/// Accurate to roughly `ε·σ_max²/σ` per singular value, which is plenty for
/// the well-conditioned matrices it checks.
pub fn svd_oracle<T: Real>(a: &DenseMatrix<T>) -> Result<Svd<T>> {
    if !a.is_finite() {
        return Err(Error::NonFinite("svd_oracle"));
    }
    if a.rows() < a.cols() {
        let t = svd_oracle(&a.transpose())?;
        return Ok(Svd {
            u: t.v,
            sigma: t.sigma,
            v: t.u,
        });
    }
    let (m, n) = a.shape();
    let gram = a.t_matmul(a)?;
    let eig = sym_eig(&gram)?;
    let sigma: Vec<T> = eig
        .values
        .iter()
        .map(|&l| l.max(T::zero()).sqrt())
        .collect();
    let v = eig.vectors;
    let av = a.matmul(&v)?;
    let cutoff = sigma[0] * T::epsilon().sqrt() * T::lit(8.0);

    let mut columns: Vec<Vec<T>> = Vec::with_capacity(n);
    for j in 0..n {
        let candidate: Vec<T> = if sigma[j] > cutoff && sigma[j] > T::zero() {
            (0..m).map(|i| av[(i, j)] / sigma[j]).collect()
        } else {
            Vec::new()
        };
        columns.push(candidate);
    }
    let u = orthonormal_completion(m, columns);
    Ok(Svd {
        u: DenseMatrix::from_columns(&u),
        sigma,
        v,
    })
}

/// Re-orthonormalizes the given columns (modified Gram–Schmidt, two passes) and
/// fills empty slots with unit vectors orthogonal to everything kept so far.
fn orthonormal_completion<T: Real>(m: usize, mut columns: Vec<Vec<T>>) -> Vec<Vec<T>> {
    let dot = |a: &[T], b: &[T]| a.iter().zip(b).map(|(&x, &y)| x * y).sum::<T>();
    let n = columns.len();
    let mut accepted: Vec<Vec<T>> = Vec::with_capacity(n);
    let mut basis_cursor = 0usize;
    for col in columns.iter_mut() {
        let mut fresh = if col.is_empty() { None } else { Some(col.clone()) };
        loop {
            let mut x = match fresh.take() {
                Some(x) => x,
                None => {
                    let mut e = vec![T::zero(); m];
                    e[basis_cursor % m] = T::one();
                    basis_cursor += 1;
                    e
                }
            };
            for _ in 0..2 {
                for q in &accepted {
                    let d = dot(&x, q);
                    for (xi, &qi) in x.iter_mut().zip(q) {
                        *xi -= d * qi;
                    }
                }
            }
            let norm = dot(&x, &x).sqrt();
            if norm > T::lit(0.1) {
                x.iter_mut().for_each(|xi| *xi /= norm);
                accepted.push(x);
                break;
            }
            assert!(basis_cursor <= 2 * m + n, "orthonormal completion exhausted");
        }
    }
    accepted
}
