use nalgebra::{DMatrix, SymmetricEigen};

use super::DenseTensor;
use crate::error::{Error, Result};
use crate::scalar::{cabs, cexp, Complex, Real};

/// A fixed Hermitian operator acting on tensors of one shape.
pub trait LinearMap<T: Real> {
    /// Shape of the tensors the map acts on.
    fn dims(&self) -> &[usize];

    fn apply(&self, x: &DenseTensor<T>) -> DenseTensor<T>;
}

/// Adapts a closure to [`LinearMap`].
pub struct FnMap<F> {
    dims: Vec<usize>,
    f: F,
}

impl<F> FnMap<F> {
    pub fn new(dims: Vec<usize>, f: F) -> Self {
        Self { dims, f }
    }
}

impl<T: Real, F: Fn(&DenseTensor<T>) -> DenseTensor<T>> LinearMap<T> for FnMap<F> {
    fn dims(&self) -> &[usize] {
        &self.dims
    }

    fn apply(&self, x: &DenseTensor<T>) -> DenseTensor<T> {
        (self.f)(x)
    }
}

/// A dense matrix acting on flattened tensors of the given shape.
pub struct DenseMap<T: Real> {
    dims: Vec<usize>,
    matrix: DMatrix<Complex<T>>,
}

impl<T: Real> DenseMap<T> {
    pub fn new(dims: Vec<usize>, matrix: DMatrix<Complex<T>>) -> Result<Self> {
        let n: usize = dims.iter().product();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::Shape(format!(
                "matrix {:?} does not act on tensors of dims {dims:?}",
                matrix.shape()
            )));
        }
        Ok(Self { dims, matrix })
    }
}

impl<T: Real> LinearMap<T> for DenseMap<T> {
    fn dims(&self) -> &[usize] {
        &self.dims
    }

    fn apply(&self, x: &DenseTensor<T>) -> DenseTensor<T> {
        let n = self.matrix.nrows();
        let zero = Complex::new(T::zero(), T::zero());
        let mut out = vec![zero; n];
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = zero;
            for (j, &xj) in x.data().iter().enumerate() {
                acc += self.matrix[(i, j)] * xj;
            }
            *o = acc;
        }
        DenseTensor::new(self.dims.clone(), out).expect("dims checked at construction")
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KrylovOptions<T> {
    /// Largest Krylov subspace built before giving up.
    pub max_dim: usize,
    /// Residual bound, relative to the input norm, that ends the iteration.
    pub tol: T,
}

impl<T: Real> Default for KrylovOptions<T> {
    fn default() -> Self {
        Self {
            max_dim: 30,
            tol: T::of(1e-12),
        }
    }
}

/// `exp(z T) e_1` for a real symmetric tridiagonal `T`.
fn tridiag_expm_e1<T: Real>(alpha: &[T], beta: &[T], z: Complex<T>) -> Vec<Complex<T>> {
    let k = alpha.len();
    let mut m = DMatrix::<T>::zeros(k, k);
    for i in 0..k {
        m[(i, i)] = alpha[i];
        if i + 1 < k {
            m[(i, i + 1)] = beta[i];
            m[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(m);
    let q = eig.eigenvectors;
    let lam = eig.eigenvalues;
    (0..k)
        .map(|i| {
            let mut acc = Complex::new(T::zero(), T::zero());
            for j in 0..k {
                let w = q[(i, j)] * q[(0, j)];
                acc += cexp(z * lam[j]) * w;
            }
            acc
        })
        .collect()
}

/// Approximates `exp(prefactor * H) v` in a Lanczos subspace.
///
/// The basis is fully reorthogonalized. The loop ends when the a-posteriori
/// residual `beta_k |[exp(z T_k) e_1]_k|` drops below `opts.tol`, when the
/// Krylov space becomes invariant, or when it spans the whole vector space.
/// Running out of `max_dim` vectors is an error; there is no restart.
pub fn krylov_expm_apply<T: Real, M: LinearMap<T> + ?Sized>(
    h: &M,
    v: &DenseTensor<T>,
    prefactor: Complex<T>,
    opts: KrylovOptions<T>,
) -> Result<DenseTensor<T>> {
    if h.dims() != v.dims() {
        return Err(Error::Shape(format!(
            "operator acts on {:?}, vector has {:?}",
            h.dims(),
            v.dims()
        )));
    }
    let beta0 = v.norm();
    if beta0 == T::zero() {
        return Ok(v.clone());
    }
    let space_dim = v.len();
    let max_dim = opts.max_dim.max(1);
    let mut basis: Vec<DenseTensor<T>> = vec![v.scale(Complex::new(T::one() / beta0, T::zero()))];
    let mut alpha: Vec<T> = Vec::new();
    let mut beta: Vec<T> = Vec::new();
    let mut scale = T::zero();

    loop {
        let j = basis.len() - 1;
        let mut w = h.apply(&basis[j]);
        let a = basis[j].dot(&w).re;
        alpha.push(a);
        scale = scale.max(a.abs());
        // two passes of classical Gram-Schmidt against the whole basis
        for _ in 0..2 {
            for q in &basis {
                let proj = q.dot(&w);
                w = w.axpy(-proj, q)?;
            }
        }
        let b = w.norm();
        scale = scale.max(b);
        let coeffs = tridiag_expm_e1(&alpha, &beta, prefactor);
        let invariant = b <= T::of(1e-13) * scale.max(T::one()) || basis.len() == space_dim;
        let residual = b * cabs(coeffs[j]);
        if invariant || residual < opts.tol {
            if basis.len() == 1 {
                return Ok(v.scale(coeffs[0]));
            }
            let mut out = DenseTensor::zeros(v.dims());
            for (q, &cq) in basis.iter().zip(&coeffs) {
                out = out.axpy(cq * beta0, q)?;
            }
            return Ok(out);
        }
        if basis.len() >= max_dim {
            return Err(Error::KrylovNotConverged {
                dim: max_dim,
                residual: residual.as_f64(),
            });
        }
        beta.push(b);
        basis.push(w.scale(Complex::new(T::one() / b, T::zero())));
    }
}
