//! Matrix product operators.
//!
//! Site `n` holds a rank-4 tensor `W[wl, wr, s, s']` whose physical slice is
//! the matrix element `<s|op|s'>`. Boundary MPO bonds have extent 1.

mod models;

pub use models::{
    hubbard_mpo, protontransfer_mpo, puredephasing_mpo, spinboson_mpo,
    tightbinding_mpo, tightbinding_single_particle, xyz_mpo, HubbardParams,
    ProtonTransferParams, SpinBosonParams, XyzParams,
};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::mps::MatrixProductState;
use crate::scalar::{Complex, LocalOp, Real};
use crate::tensor::{contract, DenseTensor};

/// Largest matrix dimension [`mpo_to_dense`] accepts.
pub const DENSE_LIMIT: usize = 4096;

#[derive(Clone, Debug, PartialEq)]
pub struct MatrixProductOperator<T: Real> {
    sites: Vec<DenseTensor<T>>,
}

impl<T: Real> MatrixProductOperator<T> {
    pub fn from_sites(sites: Vec<DenseTensor<T>>) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::Shape("an MPO needs at least one site".into()));
        }
        for (n, w) in sites.iter().enumerate() {
            if w.rank() != 4 || w.dims()[2] != w.dims()[3] {
                return Err(Error::Shape(format!(
                    "MPO site {n} has dims {:?}, expected (wl, wr, d, d)",
                    w.dims()
                )));
            }
        }
        if sites[0].dims()[0] != 1 || sites[sites.len() - 1].dims()[1] != 1 {
            return Err(Error::Shape("MPO boundary bonds must have extent 1".into()));
        }
        for n in 0..sites.len() - 1 {
            if sites[n].dims()[1] != sites[n + 1].dims()[0] {
                return Err(Error::BlockChain {
                    bond: n,
                    detail: format!(
                        "right extent {} differs from left extent {}",
                        sites[n].dims()[1],
                        sites[n + 1].dims()[0]
                    ),
                });
            }
        }
        Ok(Self { sites })
    }

    /// Identity operator on the given local dimensions.
    pub fn identity(local_dims: &[usize]) -> Result<Self> {
        let sites = local_dims
            .iter()
            .map(|&d| {
                DenseTensor::from_fn(&[1, 1, d, d], |ix| {
                    if ix[2] == ix[3] {
                        Complex::new(T::one(), T::zero())
                    } else {
                        Complex::new(T::zero(), T::zero())
                    }
                })
            })
            .collect();
        Self::from_sites(sites)
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

    pub fn local_dims(&self) -> Vec<usize> {
        self.sites.iter().map(|w| w.dims()[2]).collect()
    }

    pub fn bond_dims(&self) -> Vec<usize> {
        self.sites[..self.sites.len() - 1]
            .iter()
            .map(|w| w.dims()[1])
            .collect()
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    /// Adds `op` to the on-site slot `W[0, wr - 1]` of `site`.
    ///
    /// For operators built by [`mpo_from_blocks`] this adds `op` acting on
    /// `site` to the Hamiltonian.
    pub fn with_onsite_term(&self, site: usize, op: &LocalOp<T>) -> Result<Self> {
        if site >= self.len() {
            return Err(Error::Shape(format!("site {site} outside an MPO of {} sites", self.len())));
        }
        let w = &self.sites[site];
        let d = w.dims()[2];
        if op.nrows() != d || op.ncols() != d {
            return Err(Error::Shape(format!(
                "operator of size {}x{} on site of local dimension {d}",
                op.nrows(),
                op.ncols()
            )));
        }
        let mut out = self.clone();
        let wr = w.dims()[1];
        let t = &mut out.sites[site];
        for s in 0..d {
            for sp in 0..d {
                let v = t.get(&[0, wr - 1, s, sp]) + op[(s, sp)];
                t.set(&[0, wr - 1, s, sp], v);
            }
        }
        Ok(out)
    }
}

/// Operator blocks of one site in the recurrence
///
/// ```text
///       | 1  C  D |
/// W  =  | 0  A  B |
///       | 0  0  1 |
/// ```
///
/// `B` acts on the incoming channels, `C` opens the outgoing ones and `A`
/// carries channels through the site (`A[i][j]` maps incoming `i` to outgoing
/// `j`). An empty `A` is all zeros.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockSpec<T: Real> {
    pub a: Vec<Vec<LocalOp<T>>>,
    pub b: Vec<LocalOp<T>>,
    pub c: Vec<LocalOp<T>>,
    pub d: LocalOp<T>,
}

impl<T: Real> BlockSpec<T> {
    /// A purely local term.
    pub fn onsite(d: LocalOp<T>) -> Self {
        Self {
            a: Vec::new(),
            b: Vec::new(),
            c: Vec::new(),
            d,
        }
    }

    fn dim(&self) -> usize {
        self.d.nrows()
    }
}

/// Assembles an MPO from per-site blocks.
///
/// The first site uses only the top row `(1, C, D)` and the last site only
/// the right column `(D, B, 1)`; the corresponding `A`, `B` or `C` entries are
/// ignored there.
pub fn mpo_from_blocks<T: Real>(blocks: &[BlockSpec<T>]) -> Result<MatrixProductOperator<T>> {
    let n = blocks.len();
    if n < 2 {
        return Err(Error::Shape("block assembly needs at least two sites".into()));
    }
    for (k, bl) in blocks.iter().enumerate() {
        let d = bl.dim();
        if bl.d.ncols() != d {
            return Err(Error::Shape(format!("site {k}: on-site block is not square")));
        }
        let all = bl.b.iter().chain(&bl.c).chain(bl.a.iter().flatten());
        if all.into_iter().any(|m| m.nrows() != d || m.ncols() != d) {
            return Err(Error::Shape(format!("site {k}: blocks must all be {d}x{d}")));
        }
    }
    for k in 0..n - 1 {
        let (nc, nb) = (blocks[k].c.len(), blocks[k + 1].b.len());
        if nc != nb {
            return Err(Error::BlockChain {
                bond: k,
                detail: format!("site {k} opens {nc} channels, site {} closes {nb}", k + 1),
            });
        }
    }
    for (k, bl) in blocks.iter().enumerate().take(n - 1).skip(1) {
        if !bl.a.is_empty()
            && (bl.a.len() != bl.b.len() || bl.a.iter().any(|row| row.len() != bl.c.len()))
        {
            return Err(Error::BlockChain {
                bond: k,
                detail: format!(
                    "A block must be {}x{} at site {k}",
                    bl.b.len(),
                    bl.c.len()
                ),
            });
        }
    }

    let mut sites = Vec::with_capacity(n);
    for (k, bl) in blocks.iter().enumerate() {
        let d = bl.dim();
        let full_l = bl.b.len() + 2;
        let full_r = bl.c.len() + 2;
        let (wl, wr) = match k {
            0 => (1, full_r),
            _ if k == n - 1 => (full_l, 1),
            _ => (full_l, full_r),
        };
        // map full-block (row, col) to the stored slice, if kept
        let row_of = |r: usize| if k == 0 { (r == 0).then_some(0) } else { Some(r) };
        let col_of = |c: usize| {
            if k == n - 1 {
                (c == full_r - 1).then_some(0)
            } else {
                Some(c)
            }
        };
        let mut w = DenseTensor::zeros(&[wl, wr, d, d]);
        let mut put = |r: usize, c: usize, op: &LocalOp<T>| {
            if let (Some(i), Some(j)) = (row_of(r), col_of(c)) {
                for s in 0..d {
                    for sp in 0..d {
                        w.set(&[i, j, s, sp], op[(s, sp)]);
                    }
                }
            }
        };
        let id = DMatrix::identity(d, d);
        put(0, 0, &id);
        put(full_l - 1, full_r - 1, &id);
        put(0, full_r - 1, &bl.d);
        for (j, op) in bl.c.iter().enumerate() {
            put(0, 1 + j, op);
        }
        for (i, op) in bl.b.iter().enumerate() {
            put(1 + i, full_r - 1, op);
        }
        for (i, row) in bl.a.iter().enumerate() {
            for (j, op) in row.iter().enumerate() {
                put(1 + i, 1 + j, op);
            }
        }
        sites.push(w);
    }
    MatrixProductOperator::from_sites(sites)
}

/// Full operator matrix in the row-major product basis.
pub fn mpo_to_dense<T: Real>(mpo: &MatrixProductOperator<T>) -> Result<LocalOp<T>> {
    let total = mpo
        .local_dims()
        .iter()
        .try_fold(1usize, |a, &d| a.checked_mul(d))
        .unwrap_or(usize::MAX);
    if total > DENSE_LIMIT {
        return Err(Error::TooLarge {
            dim: total,
            limit: DENSE_LIMIT,
        });
    }
    // acc[w, R, C] with R, C the row/column indices of the sites so far
    let w0 = mpo.site(0);
    let (wr, d) = (w0.dims()[1], w0.dims()[2]);
    let mut acc = w0.clone().reshape(&[wr, d, d])?;
    let mut dim = d;
    for w in &mpo.sites()[1..] {
        let (wr, d) = (w.dims()[1], w.dims()[2]);
        // [R, C, wr, s, s'] -> [wr, R, s, C, s']
        let t = contract(&acc, w, &[(0, 0)])?.permute(&[2, 0, 3, 1, 4]);
        dim *= d;
        acc = t.reshape(&[wr, dim, dim])?;
    }
    acc.reshape(&[dim, dim]).map(|t| t.to_matrix())
}

/// `<psi|H|psi>` without normalization.
pub fn mpo_expectation<T: Real>(
    psi: &MatrixProductState<T>,
    mpo: &MatrixProductOperator<T>,
) -> Result<Complex<T>> {
    if psi.local_dims() != mpo.local_dims() {
        return Err(Error::Shape(format!(
            "state local dims {:?} differ from operator local dims {:?}",
            psi.local_dims(),
            mpo.local_dims()
        )));
    }
    // env[bra, w, ket]
    let mut env = DenseTensor::from_fn(&[1, 1, 1], |_| Complex::new(T::one(), T::zero()));
    for (a, w) in psi.sites().iter().zip(mpo.sites()) {
        let t = contract(&env, a, &[(2, 0)])?; // [bra, w, s', ket']
        let t = contract(&t, w, &[(1, 0), (2, 3)])?; // [bra, ket', wr, s]
        env = contract(&a.conj(), &t, &[(0, 0), (1, 3)])?; // [bra', ket', wr]
        env = env.permute(&[0, 2, 1]);
    }
    Ok(env.to_scalar())
}
