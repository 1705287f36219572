//! Matrix product states.
//!
//! Site `n` holds a rank-3 tensor with axes `(left bond, physical, right
//! bond)`. Boundary bonds have extent 1. When an orthogonality center `k` is
//! recorded, every site left of `k` is left-isometric and every site right of
//! `k` is right-isometric.
//!
//! Site indices are 0-based here; user-facing layers translate from 1-based.

mod measure;

pub use measure::{
    expect_one_site, expect_two_site, reduced_density_matrix, Observable, ObservableKind,
    SiteSelector,
};

use crate::error::{Error, Result};
use crate::scalar::{Complex, Real};
use crate::tensor::{contract, lq_orthogonalize, qr_orthogonalize, DenseTensor};

/// Largest Hilbert-space dimension [`MatrixProductState::to_dense`] accepts.
pub const DENSE_LIMIT: usize = 1 << 20;

/// Initial local state of one site.
#[derive(Clone, Debug, PartialEq)]
pub enum LocalState<T: Real> {
    /// Arbitrary superposition in the local basis; must have unit norm.
    Vector(Vec<Complex<T>>),
    /// Basis state with the given index (Fock occupation for bosons).
    Basis(usize),
}

impl<T: Real> LocalState<T> {
    /// Normalizes `v` and wraps it.
    pub fn normalized(v: Vec<Complex<T>>) -> Result<Self> {
        let n = v
            .iter()
            .fold(T::zero(), |a, z| a + z.re * z.re + z.im * z.im)
            .sqrt();
        if n == T::zero() {
            return Err(Error::State("zero local state vector".into()));
        }
        Ok(Self::Vector(v.into_iter().map(|z| z / n).collect()))
    }

    fn to_vector(&self, d: usize) -> Result<Vec<Complex<T>>> {
        match self {
            LocalState::Vector(v) => {
                if v.len() != d {
                    return Err(Error::State(format!(
                        "local vector of length {} for local dimension {d}",
                        v.len()
                    )));
                }
                let n = v
                    .iter()
                    .fold(T::zero(), |a, z| a + z.re * z.re + z.im * z.im)
                    .sqrt();
                if (n - T::one()).abs() > T::of(1e-12) {
                    return Err(Error::State(format!(
                        "local vector has norm {n}, expected 1"
                    )));
                }
                Ok(v.clone())
            }
            LocalState::Basis(k) => {
                if *k >= d {
                    return Err(Error::State(format!(
                        "basis state {k} outside local dimension {d}"
                    )));
                }
                let mut v = vec![Complex::new(T::zero(), T::zero()); d];
                v[*k] = Complex::new(T::one(), T::zero());
                Ok(v)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatrixProductState<T: Real> {
    sites: Vec<DenseTensor<T>>,
    center: Option<usize>,
}

/// Maximal useful extent of each interior bond for the given local dims.
pub fn full_rank_bounds(local_dims: &[usize]) -> Vec<usize> {
    let n = local_dims.len();
    (0..n.saturating_sub(1))
        .map(|b| {
            let left = local_dims[..=b]
                .iter()
                .try_fold(1usize, |a, &d| a.checked_mul(d))
                .unwrap_or(usize::MAX);
            let right = local_dims[b + 1..]
                .iter()
                .try_fold(1usize, |a, &d| a.checked_mul(d))
                .unwrap_or(usize::MAX);
            left.min(right)
        })
        .collect()
}

impl<T: Real> MatrixProductState<T> {
    /// Wraps site tensors after checking bond consistency. No canonical form
    /// is assumed.
    pub fn from_sites(sites: Vec<DenseTensor<T>>) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::State("an MPS needs at least one site".into()));
        }
        for (n, s) in sites.iter().enumerate() {
            if s.rank() != 3 {
                return Err(Error::State(format!("site {n} has rank {}", s.rank())));
            }
        }
        if sites[0].dims()[0] != 1 || sites[sites.len() - 1].dims()[2] != 1 {
            return Err(Error::State("boundary bonds must have extent 1".into()));
        }
        for n in 0..sites.len() - 1 {
            if sites[n].dims()[2] != sites[n + 1].dims()[0] {
                return Err(Error::State(format!(
                    "bond {n}: right extent {} of site {n} differs from left extent {} of site {}",
                    sites[n].dims()[2],
                    sites[n + 1].dims()[0],
                    n + 1
                )));
            }
        }
        Ok(Self {
            sites,
            center: None,
        })
    }

    /// Product state with bond dimension 1.
    pub fn product_state(local_dims: &[usize], states: &[LocalState<T>]) -> Result<Self> {
        if local_dims.len() != states.len() {
            return Err(Error::State(format!(
                "{} local dims but {} local states",
                local_dims.len(),
                states.len()
            )));
        }
        if local_dims.is_empty() {
            return Err(Error::State("an MPS needs at least one site".into()));
        }
        let sites = local_dims
            .iter()
            .zip(states)
            .map(|(&d, s)| DenseTensor::new(vec![1, d, 1], s.to_vector(d)?))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            sites,
            center: Some(0),
        })
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> &[DenseTensor<T>] {
        &self.sites
    }

    pub fn site(&self, n: usize) -> &DenseTensor<T> {
        &self.sites[n]
    }

    pub fn center(&self) -> Option<usize> {
        self.center
    }

    pub fn local_dims(&self) -> Vec<usize> {
        self.sites.iter().map(|s| s.dims()[1]).collect()
    }

    /// Extents of the `N - 1` interior bonds.
    pub fn bond_dims(&self) -> Vec<usize> {
        self.sites[..self.sites.len() - 1]
            .iter()
            .map(|s| s.dims()[2])
            .collect()
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    pub(crate) fn sites_mut(&mut self) -> &mut Vec<DenseTensor<T>> {
        &mut self.sites
    }

    pub(crate) fn set_center(&mut self, c: Option<usize>) {
        self.center = c;
    }

    /// Zero-pads every interior bond up to `min(target, full-rank bound)`.
    ///
    /// The represented vector is unchanged. The result carries no
    /// orthogonality center; padded tensors are not isometric until the
    /// state is canonicalized.
    pub fn enlarge_bonds(&self, target: usize) -> Result<Self> {
        if target == 0 {
            return Err(Error::State("target bond dimension must be positive".into()));
        }
        let bounds = full_rank_bounds(&self.local_dims());
        let current = self.bond_dims();
        for (b, &d) in current.iter().enumerate() {
            if d > target {
                return Err(Error::State(format!(
                    "bond {b} already has extent {d} > {target}; use svd truncation to shrink"
                )));
            }
        }
        let new: Vec<usize> = current
            .iter()
            .zip(&bounds)
            .map(|(&d, &bound)| d.max(target.min(bound)))
            .collect();
        if new == current {
            return Ok(self.clone());
        }
        let n = self.len();
        let sites = (0..n)
            .map(|k| {
                let old = &self.sites[k];
                let l = if k == 0 { 1 } else { new[k - 1] };
                let r = if k == n - 1 { 1 } else { new[k] };
                let od = old.dims();
                let mut t = DenseTensor::zeros(&[l, od[1], r]);
                for a in 0..od[0] {
                    for s in 0..od[1] {
                        for b in 0..od[2] {
                            t.set(&[a, s, b], old.get(&[a, s, b]));
                        }
                    }
                }
                t
            })
            .collect();
        Ok(Self {
            sites,
            center: None,
        })
    }

    /// Brings the state into mixed canonical form around `center`.
    pub fn canonicalize(&self, center: usize) -> Result<Self> {
        let mut out = self.clone();
        out.canonicalize_mut(center)?;
        Ok(out)
    }

    pub(crate) fn canonicalize_mut(&mut self, center: usize) -> Result<()> {
        let n = self.len();
        if center >= n {
            return Err(Error::State(format!(
                "center {center} outside a chain of {n} sites"
            )));
        }
        let (from_left, from_right) = match self.center {
            Some(c) => (c.min(center), c.max(center)),
            None => (0, n - 1),
        };
        for k in from_left..center {
            self.shift_right(k)?;
        }
        for k in (center + 1..=from_right).rev() {
            self.shift_left(k)?;
        }
        self.center = Some(center);
        Ok(())
    }

    /// Left-orthogonalizes site `k` and pushes the remainder into `k + 1`.
    pub(crate) fn shift_right(&mut self, k: usize) -> Result<()> {
        let (q, r) = qr_orthogonalize(&self.sites[k], &[0, 1])?;
        self.sites[k + 1] = contract(&r, &self.sites[k + 1], &[(1, 0)])?;
        self.sites[k] = q;
        Ok(())
    }

    /// Right-orthogonalizes site `k` and pushes the remainder into `k - 1`.
    pub(crate) fn shift_left(&mut self, k: usize) -> Result<()> {
        let (l, q) = lq_orthogonalize(&self.sites[k], &[0])?;
        self.sites[k - 1] = contract(&self.sites[k - 1], &l, &[(2, 0)])?;
        self.sites[k] = q;
        Ok(())
    }

    /// `<self|other>`.
    pub fn overlap(&self, other: &Self) -> Result<Complex<T>> {
        if self.local_dims() != other.local_dims() {
            return Err(Error::State("overlap of states with different local dims".into()));
        }
        let mut e = DenseTensor::identity(1);
        for (a, b) in self.sites.iter().zip(&other.sites) {
            let t = contract(&e, b, &[(1, 0)])?;
            e = contract(&a.conj(), &t, &[(0, 0), (1, 1)])?;
        }
        Ok(e.to_scalar())
    }

    pub fn norm(&self) -> T {
        match self.center {
            Some(c) => self.sites[c].norm(),
            None => self.overlap(self).map(|z| z.re.max(T::zero()).sqrt()).unwrap_or(T::zero()),
        }
    }

    /// Largest deviation from isometry of the sites around the center.
    pub fn isometry_defect(&self) -> Option<T> {
        let c = self.center?;
        let mut worst = T::zero();
        for (k, s) in self.sites.iter().enumerate() {
            let pairs: &[(usize, usize)] = if k < c {
                &[(0, 0), (1, 1)]
            } else if k > c {
                &[(1, 1), (2, 2)]
            } else {
                continue;
            };
            let g = contract(&s.conj(), s, pairs).ok()?;
            let dim = g.dims()[0];
            let id = DenseTensor::identity(dim);
            worst = worst.max(g.sub(&id).ok()?.max_abs());
        }
        Some(worst)
    }

    /// Full coefficient tensor `psi[i_1, ..., i_N]`.
    pub fn to_dense(&self) -> Result<DenseTensor<T>> {
        let dims = self.local_dims();
        let total = dims
            .iter()
            .try_fold(1usize, |a, &d| a.checked_mul(d))
            .unwrap_or(usize::MAX);
        if total > DENSE_LIMIT {
            return Err(Error::TooLarge {
                dim: total,
                limit: DENSE_LIMIT,
            });
        }
        let mut acc = self.sites[0].clone();
        for s in &self.sites[1..] {
            let r = acc.rank();
            acc = contract(&acc, s, &[(r - 1, 0)])?;
        }
        acc.reshape(&dims)
    }
}
