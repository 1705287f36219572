//! Dense complex tensors and the kernels the sweeps are built from.
//!
//! Storage is row-major: the last axis varies fastest. Every matricization
//! first permutes the requested axes to the front, so there is exactly one
//! layout convention in the crate.

mod decomp;
mod krylov;

pub use decomp::{lq_orthogonalize, qr_orthogonalize, svd_split, SvdResult, Truncation};
pub use krylov::{krylov_expm_apply, DenseMap, FnMap, KrylovOptions, LinearMap};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::scalar::{cabs, Complex, Real};

/// Rank-k complex array with row-major storage.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseTensor<T: Real> {
    dims: Vec<usize>,
    data: Vec<Complex<T>>,
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

impl<T: Real> DenseTensor<T> {
    pub fn new(dims: Vec<usize>, data: Vec<Complex<T>>) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::Shape(format!("zero extent in {dims:?}")));
        }
        let n: usize = dims.iter().product();
        if n != data.len() {
            return Err(Error::Shape(format!(
                "dims {dims:?} need {n} entries, got {}",
                data.len()
            )));
        }
        Ok(Self { dims, data })
    }

    pub fn zeros(dims: &[usize]) -> Self {
        let n = dims.iter().product();
        Self {
            dims: dims.to_vec(),
            data: vec![Complex::new(T::zero(), T::zero()); n],
        }
    }

    pub fn scalar(z: Complex<T>) -> Self {
        Self {
            dims: Vec::new(),
            data: vec![z],
        }
    }

    /// Builds a tensor by evaluating `f` at every multi-index.
    pub fn from_fn(dims: &[usize], mut f: impl FnMut(&[usize]) -> Complex<T>) -> Self {
        let n: usize = dims.iter().product();
        let mut idx = vec![0usize; dims.len()];
        let mut data = Vec::with_capacity(n);
        for _ in 0..n {
            data.push(f(&idx));
            for k in (0..dims.len()).rev() {
                idx[k] += 1;
                if idx[k] < dims[k] {
                    break;
                }
                idx[k] = 0;
            }
        }
        Self {
            dims: dims.to_vec(),
            data,
        }
    }

    /// Rank-2 tensor from a matrix.
    pub fn from_matrix(m: &DMatrix<Complex<T>>) -> Self {
        let (r, c) = m.shape();
        let mut data = Vec::with_capacity(r * c);
        for i in 0..r {
            for j in 0..c {
                data.push(m[(i, j)]);
            }
        }
        Self {
            dims: vec![r, c],
            data,
        }
    }

    /// Identity matrix as a rank-2 tensor.
    pub fn identity(n: usize) -> Self {
        Self::from_fn(&[n, n], |i| {
            if i[0] == i[1] {
                Complex::new(T::one(), T::zero())
            } else {
                Complex::new(T::zero(), T::zero())
            }
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn rank(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<Complex<T>> {
        self.data
    }

    fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.dims.len());
        let mut off = 0;
        for (k, &i) in idx.iter().enumerate() {
            debug_assert!(i < self.dims[k]);
            off = off * self.dims[k] + i;
        }
        off
    }

    pub fn get(&self, idx: &[usize]) -> Complex<T> {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], z: Complex<T>) {
        let off = self.offset(idx);
        self.data[off] = z;
    }

    /// Value of a rank-0 (or single-entry) tensor.
    pub fn to_scalar(&self) -> Complex<T> {
        debug_assert_eq!(self.data.len(), 1);
        self.data[0]
    }

    pub fn reshape(mut self, dims: &[usize]) -> Result<Self> {
        let n: usize = dims.iter().product();
        if n != self.data.len() || dims.contains(&0) {
            return Err(Error::Shape(format!(
                "cannot reshape {:?} into {dims:?}",
                self.dims
            )));
        }
        self.dims = dims.to_vec();
        Ok(self)
    }

    /// Reorders axes: axis `k` of the result is axis `perm[k]` of `self`.
    pub fn permute(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.dims.len(), "permutation rank");
        if perm.iter().enumerate().all(|(k, &p)| k == p) {
            return self.clone();
        }
        let src_strides = strides(&self.dims);
        let dims: Vec<usize> = perm.iter().map(|&p| self.dims[p]).collect();
        let st: Vec<usize> = perm.iter().map(|&p| src_strides[p]).collect();
        let n = self.data.len();
        let rank = dims.len();
        let mut data = Vec::with_capacity(n);
        let mut idx = vec![0usize; rank];
        let mut src = 0usize;
        for _ in 0..n {
            data.push(self.data[src]);
            for k in (0..rank).rev() {
                idx[k] += 1;
                src += st[k];
                if idx[k] < dims[k] {
                    break;
                }
                src -= st[k] * dims[k];
                idx[k] = 0;
            }
        }
        Self { dims, data }
    }

    pub fn conj(&self) -> Self {
        Self {
            dims: self.dims.clone(),
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, z: Complex<T>) -> Self {
        Self {
            dims: self.dims.clone(),
            data: self.data.iter().map(|&x| x * z).collect(),
        }
    }

    pub fn scale_mut(&mut self, z: Complex<T>) {
        self.data.iter_mut().for_each(|x| *x *= z);
    }

    /// `self + alpha * other`, dims must agree.
    pub fn axpy(&self, alpha: Complex<T>, other: &Self) -> Result<Self> {
        if self.dims != other.dims {
            return Err(Error::Shape(format!(
                "axpy of {:?} and {:?}",
                self.dims, other.dims
            )));
        }
        Ok(Self {
            dims: self.dims.clone(),
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| a + alpha * b)
                .collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.axpy(Complex::new(T::one(), T::zero()), other)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.axpy(Complex::new(-T::one(), T::zero()), other)
    }

    /// Frobenius norm.
    pub fn norm(&self) -> T {
        self.norm_sqr().sqrt()
    }

    pub fn norm_sqr(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |acc, z| acc + z.re * z.re + z.im * z.im)
    }

    /// Inner product `<self, other>`, conjugate-linear in `self`.
    pub fn dot(&self, other: &Self) -> Complex<T> {
        debug_assert_eq!(self.dims, other.dims);
        self.data
            .iter()
            .zip(&other.data)
            .fold(Complex::new(T::zero(), T::zero()), |acc, (a, b)| {
                acc + a.conj() * b
            })
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |acc, &z| acc.max(cabs(z)))
    }

    /// Views a rank-2 tensor as a matrix.
    pub fn to_matrix(&self) -> DMatrix<Complex<T>> {
        assert_eq!(self.rank(), 2, "to_matrix needs a rank-2 tensor");
        let (r, c) = (self.dims[0], self.dims[1]);
        DMatrix::from_fn(r, c, |i, j| self.data[i * c + j])
    }

    /// Groups `left_axes` (in the given order) into rows and the remaining
    /// axes (in original order) into columns.
    pub(crate) fn matricize(&self, left_axes: &[usize]) -> Result<Matricized<T>> {
        let rank = self.rank();
        if left_axes.is_empty() || left_axes.len() >= rank {
            return Err(Error::Axes(format!(
                "left axes {left_axes:?} must be a nonempty proper subset of {rank} axes"
            )));
        }
        let mut seen = vec![false; rank];
        for &a in left_axes {
            if a >= rank || seen[a] {
                return Err(Error::Axes(format!(
                    "left axes {left_axes:?} invalid for rank {rank}"
                )));
            }
            seen[a] = true;
        }
        let right_axes: Vec<usize> = (0..rank).filter(|&a| !seen[a]).collect();
        let perm: Vec<usize> = left_axes.iter().chain(&right_axes).copied().collect();
        let p = self.permute(&perm);
        let left_dims: Vec<usize> = left_axes.iter().map(|&a| self.dims[a]).collect();
        let right_dims: Vec<usize> = right_axes.iter().map(|&a| self.dims[a]).collect();
        let rows: usize = left_dims.iter().product();
        let cols: usize = right_dims.iter().product();
        let m = DMatrix::from_fn(rows, cols, |i, j| p.data[i * cols + j]);
        Ok(Matricized {
            matrix: m,
            left_dims,
            right_dims,
        })
    }
}

pub(crate) struct Matricized<T: Real> {
    pub matrix: DMatrix<Complex<T>>,
    pub left_dims: Vec<usize>,
    pub right_dims: Vec<usize>,
}

/// Row-major tensor from a column-major matrix, with the given dims.
pub(crate) fn tensor_from_matrix<T: Real>(
    m: &DMatrix<Complex<T>>,
    dims: Vec<usize>,
) -> DenseTensor<T> {
    let (r, c) = m.shape();
    let mut data = Vec::with_capacity(r * c);
    for i in 0..r {
        for j in 0..c {
            data.push(m[(i, j)]);
        }
    }
    debug_assert_eq!(dims.iter().product::<usize>(), r * c);
    DenseTensor { dims, data }
}

/// Row-major `c += a * b` for an `m x k` times `k x n` product.
fn gemm<T: Real>(m: usize, k: usize, n: usize, a: &[Complex<T>], b: &[Complex<T>]) -> Vec<Complex<T>> {
    let zero = Complex::new(T::zero(), T::zero());
    let mut c = vec![zero; m * n];
    for i in 0..m {
        let crow = &mut c[i * n..(i + 1) * n];
        let arow = &a[i * k..(i + 1) * k];
        for (p, &aip) in arow.iter().enumerate() {
            if aip.re == T::zero() && aip.im == T::zero() {
                continue;
            }
            let brow = &b[p * n..(p + 1) * n];
            for (cv, &bv) in crow.iter_mut().zip(brow) {
                *cv += aip * bv;
            }
        }
    }
    c
}

/// Sums over paired axes of `a` and `b`.
///
/// The result carries the unpaired axes of `a` followed by the unpaired axes
/// of `b`, each group in original order.
pub fn contract<T: Real>(
    a: &DenseTensor<T>,
    b: &DenseTensor<T>,
    pairs: &[(usize, usize)],
) -> Result<DenseTensor<T>> {
    let (ra, rb) = (a.rank(), b.rank());
    let mut used_a = vec![false; ra];
    let mut used_b = vec![false; rb];
    for &(ia, ib) in pairs {
        if ia >= ra || ib >= rb {
            return Err(Error::Axes(format!(
                "pair ({ia}, {ib}) out of range for ranks ({ra}, {rb})"
            )));
        }
        if used_a[ia] || used_b[ib] {
            return Err(Error::Axes(format!("axis paired twice in ({ia}, {ib})")));
        }
        if a.dims[ia] != b.dims[ib] {
            return Err(Error::Contract {
                axis_a: ia,
                axis_b: ib,
                extent_a: a.dims[ia],
                extent_b: b.dims[ib],
            });
        }
        used_a[ia] = true;
        used_b[ib] = true;
    }
    let free_a: Vec<usize> = (0..ra).filter(|&i| !used_a[i]).collect();
    let free_b: Vec<usize> = (0..rb).filter(|&i| !used_b[i]).collect();

    let perm_a: Vec<usize> = free_a.iter().copied().chain(pairs.iter().map(|p| p.0)).collect();
    let perm_b: Vec<usize> = pairs.iter().map(|p| p.1).chain(free_b.iter().copied()).collect();
    let pa = a.permute(&perm_a);
    let pb = b.permute(&perm_b);

    let m: usize = free_a.iter().map(|&i| a.dims[i]).product();
    let k: usize = pairs.iter().map(|p| a.dims[p.0]).product();
    let n: usize = free_b.iter().map(|&i| b.dims[i]).product();
    let data = gemm(m, k, n, &pa.data, &pb.data);
    let dims: Vec<usize> = free_a
        .iter()
        .map(|&i| a.dims[i])
        .chain(free_b.iter().map(|&i| b.dims[i]))
        .collect();
    Ok(DenseTensor { dims, data })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::random_tensor as seeded;

    fn z(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn identity_contraction_returns_vector() {
        let id = DenseTensor::<f64>::identity(2);
        let v = DenseTensor::new(vec![2], vec![z(0.3, -1.0), z(2.0, 0.5)]).unwrap();
        let r = contract(&id, &v, &[(1, 0)]).unwrap();
        assert_eq!(r, v);
    }

    #[test]
    fn full_contraction_gives_scalar() {
        let a = DenseTensor::new(vec![2], vec![z(1.0, 0.0), z(0.0, 0.0)]).unwrap();
        let r = contract(&a, &a, &[(0, 0)]).unwrap();
        assert_eq!(r.rank(), 0);
        assert_eq!(r.to_scalar(), z(1.0, 0.0));
    }

    #[test]
    fn matches_triple_loop() {
        let a = seeded(&[3, 4, 5], 1);
        let b = seeded(&[5, 4], 2);
        let r = contract(&a, &b, &[(2, 0), (1, 1)]).unwrap();
        assert_eq!(r.dims(), &[3]);
        for i in 0..3 {
            let mut acc = z(0.0, 0.0);
            for j in 0..4 {
                for k in 0..5 {
                    acc += a.get(&[i, j, k]) * b.get(&[k, j]);
                }
            }
            assert!((acc - r.get(&[i])).norm() < 1e-13);
        }
    }

    #[test]
    fn mismatch_names_axes() {
        let a = DenseTensor::<f64>::zeros(&[2, 3]);
        let b = DenseTensor::<f64>::zeros(&[4, 2]);
        match contract(&a, &b, &[(1, 0)]) {
            Err(Error::Contract { axis_a: 1, axis_b: 0, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            contract(&a, &b, &[(1, 1), (1, 1)]),
            Err(Error::Contract { .. }) | Err(Error::Axes(_))
        ));
    }

    #[test]
    fn permute_roundtrip() {
        let a = seeded(&[2, 3, 4], 7);
        let p = a.permute(&[2, 0, 1]);
        assert_eq!(p.dims(), &[4, 2, 3]);
        assert_eq!(p.get(&[3, 1, 2]), a.get(&[1, 2, 3]));
        let back = p.permute(&[1, 2, 0]);
        assert_eq!(back, a);
    }

    #[test]
    fn reshape_checks_size() {
        let a = DenseTensor::<f64>::zeros(&[2, 3]);
        assert!(a.clone().reshape(&[6]).is_ok());
        assert!(a.reshape(&[5]).is_err());
    }
}
