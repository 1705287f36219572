use nalgebra::DMatrix;

use super::MatrixProductState;
use crate::error::{Error, Result};
use crate::scalar::{is_hermitian, Complex, LocalOp, Real};
use crate::tensor::{contract, DenseTensor};

/// Which sites an observable is evaluated on (0-based).
#[derive(Clone, Debug, PartialEq)]
pub enum SiteSelector {
    Single(usize),
    /// Inclusive range `start..=end`.
    Range { start: usize, end: usize },
    List(Vec<usize>),
}

impl SiteSelector {
    pub fn resolve(&self, n_sites: usize) -> Result<Vec<usize>> {
        let sites = match self {
            SiteSelector::Single(s) => vec![*s],
            SiteSelector::Range { start, end } => {
                if start > end {
                    return Err(Error::Observable(format!("empty site range {start}..={end}")));
                }
                (*start..=*end).collect()
            }
            SiteSelector::List(v) => v.clone(),
        };
        if sites.is_empty() {
            return Err(Error::Observable("no sites selected".into()));
        }
        if let Some(bad) = sites.iter().find(|&&s| s >= n_sites) {
            return Err(Error::Observable(format!(
                "site {bad} outside a chain of {n_sites} sites"
            )));
        }
        Ok(sites)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ObservableKind<T: Real> {
    OneSite { op: LocalOp<T> },
    /// `<op1_i op2_j>` for all selected `i, j`.
    TwoSite { op1: LocalOp<T>, op2: LocalOp<T> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Observable<T: Real> {
    pub name: String,
    pub kind: ObservableKind<T>,
    pub sites: SiteSelector,
}

impl<T: Real> Observable<T> {
    pub fn one_site(name: impl Into<String>, op: LocalOp<T>, sites: SiteSelector) -> Self {
        Self {
            name: name.into(),
            kind: ObservableKind::OneSite { op },
            sites,
        }
    }

    pub fn two_site(
        name: impl Into<String>,
        op1: LocalOp<T>,
        op2: LocalOp<T>,
        sites: SiteSelector,
    ) -> Self {
        Self {
            name: name.into(),
            kind: ObservableKind::TwoSite { op1, op2 },
            sites,
        }
    }

    /// Resolves the site list and checks every operator against the local
    /// dimensions it will act on.
    pub fn validate(&self, local_dims: &[usize]) -> Result<Vec<usize>> {
        let sites = self.sites.resolve(local_dims.len())?;
        let ops: Vec<&LocalOp<T>> = match &self.kind {
            ObservableKind::OneSite { op } => vec![op],
            ObservableKind::TwoSite { op1, op2 } => vec![op1, op2],
        };
        for &s in &sites {
            for op in &ops {
                if op.nrows() != local_dims[s] || op.ncols() != local_dims[s] {
                    return Err(Error::Observable(format!(
                        "{}: operator of size {}x{} on site {s} of local dimension {}",
                        self.name,
                        op.nrows(),
                        op.ncols(),
                        local_dims[s]
                    )));
                }
            }
        }
        Ok(sites)
    }
}

fn op_tensor<T: Real>(op: &LocalOp<T>) -> DenseTensor<T> {
    DenseTensor::from_matrix(op)
}

/// Extends a left overlap block `E[bra, ket]` by one site, optionally with
/// an operator sandwiched on the physical leg.
pub(crate) fn left_transfer<T: Real>(
    e: &DenseTensor<T>,
    a: &DenseTensor<T>,
    op: Option<&DenseTensor<T>>,
) -> Result<DenseTensor<T>> {
    let mut t = contract(e, a, &[(1, 0)])?;
    if let Some(op) = op {
        t = contract(op, &t, &[(1, 1)])?.permute(&[1, 0, 2]);
    }
    contract(&a.conj(), &t, &[(0, 0), (1, 1)])
}

/// Mirror of [`left_transfer`] for a right block `F[bra, ket]`.
pub(crate) fn right_transfer<T: Real>(
    f: &DenseTensor<T>,
    a: &DenseTensor<T>,
    op: Option<&DenseTensor<T>>,
) -> Result<DenseTensor<T>> {
    let mut t = contract(a, f, &[(2, 1)])?;
    if let Some(op) = op {
        t = contract(op, &t, &[(1, 1)])?.permute(&[1, 0, 2]);
    }
    contract(&a.conj(), &t, &[(1, 1), (2, 2)])
}

fn close<T: Real>(e: &DenseTensor<T>, f: &DenseTensor<T>) -> Result<Complex<T>> {
    Ok(contract(e, f, &[(0, 0), (1, 1)])?.to_scalar())
}

struct Blocks<T: Real> {
    left: Vec<DenseTensor<T>>,
    right: Vec<DenseTensor<T>>,
}

/// `left[k]` covers sites `< k`, `right[k]` covers sites `>= k`.
fn overlap_blocks<T: Real>(psi: &MatrixProductState<T>) -> Result<Blocks<T>> {
    let n = psi.len();
    let mut left = Vec::with_capacity(n + 1);
    left.push(DenseTensor::identity(1));
    for k in 0..n {
        let next = left_transfer(&left[k], psi.site(k), None)?;
        left.push(next);
    }
    let mut right = vec![DenseTensor::identity(1); n + 1];
    for k in (0..n).rev() {
        right[k] = right_transfer(&right[k + 1], psi.site(k), None)?;
    }
    Ok(Blocks { left, right })
}

fn clean<T: Real>(z: Complex<T>, hermitian: bool) -> Complex<T> {
    if hermitian {
        Complex::new(z.re, T::zero())
    } else {
        z
    }
}

/// `<psi|op_k|psi>` for every selected site `k`.
///
/// The state is not renormalized. When the operator is Hermitian (to 1e-12)
/// the imaginary parts are set to zero.
pub fn expect_one_site<T: Real>(
    psi: &MatrixProductState<T>,
    obs: &Observable<T>,
) -> Result<Vec<Complex<T>>> {
    let op = match &obs.kind {
        ObservableKind::OneSite { op } => op,
        ObservableKind::TwoSite { .. } => {
            return Err(Error::Observable(format!("{} is a two-site observable", obs.name)))
        }
    };
    let sites = obs.validate(&psi.local_dims())?;
    let herm = is_hermitian(op, T::of(1e-12));
    let opt = op_tensor(op);
    let b = overlap_blocks(psi)?;
    sites
        .iter()
        .map(|&k| {
            let e = left_transfer(&b.left[k], psi.site(k), Some(&opt))?;
            Ok(clean(close(&e, &b.right[k + 1])?, herm))
        })
        .collect()
}

/// Matrix of `<op1_i op2_j>` over the selected sites.
///
/// Operators on different sites are taken to commute; on the diagonal the
/// product `op1 op2` is measured on the single site.
pub fn expect_two_site<T: Real>(
    psi: &MatrixProductState<T>,
    obs: &Observable<T>,
) -> Result<DMatrix<Complex<T>>> {
    let (op1, op2) = match &obs.kind {
        ObservableKind::TwoSite { op1, op2 } => (op1, op2),
        ObservableKind::OneSite { .. } => {
            return Err(Error::Observable(format!("{} is a one-site observable", obs.name)))
        }
    };
    let sites = obs.validate(&psi.local_dims())?;
    let prod = op1 * op2;
    let herm_prod = is_hermitian(&prod, T::of(1e-12));
    let (t1, t2, tp) = (op_tensor(op1), op_tensor(op2), op_tensor(&prod));
    let b = overlap_blocks(psi)?;
    let m = sites.len();
    let mut out = DMatrix::from_element(m, m, Complex::new(T::zero(), T::zero()));

    for (i, &p) in sites.iter().enumerate() {
        let e = left_transfer(&b.left[p], psi.site(p), Some(&tp))?;
        let diag = clean(close(&e, &b.right[p + 1])?, herm_prod);
        for j in (0..m).filter(|&j| sites[j] == p) {
            out[(i, j)] = diag;
        }

        // walk right from p carrying op1 (pairs with op2 later) and op2
        // (pairs with op1 later) in parallel
        let mut e1 = left_transfer(&b.left[p], psi.site(p), Some(&t1))?;
        let mut e2 = left_transfer(&b.left[p], psi.site(p), Some(&t2))?;
        for q in p + 1..psi.len() {
            let targets: Vec<usize> = (0..m).filter(|&j| sites[j] == q).collect();
            for &j in &targets {
                let f1 = left_transfer(&e1, psi.site(q), Some(&t2))?;
                out[(i, j)] = close(&f1, &b.right[q + 1])?;
                let f2 = left_transfer(&e2, psi.site(q), Some(&t1))?;
                out[(j, i)] = close(&f2, &b.right[q + 1])?;
            }
            if sites.iter().all(|&s| s <= q) {
                break;
            }
            e1 = left_transfer(&e1, psi.site(q), None)?;
            e2 = left_transfer(&e2, psi.site(q), None)?;
        }
    }
    Ok(out)
}

/// Normalized one-site reduced density matrix `rho[s, s']`.
pub fn reduced_density_matrix<T: Real>(
    psi: &MatrixProductState<T>,
    site: usize,
) -> Result<LocalOp<T>> {
    if site >= psi.len() {
        return Err(Error::Observable(format!(
            "site {site} outside a chain of {} sites",
            psi.len()
        )));
    }
    let b = overlap_blocks(psi)?;
    let a = psi.site(site);
    let t = contract(&b.left[site], a, &[(1, 0)])?;
    let t = contract(&t, &b.right[site + 1], &[(2, 1)])?;
    let rho = contract(&t, &a.conj(), &[(0, 0), (2, 2)])?.to_matrix();
    let tr = rho.trace();
    if tr.re <= T::zero() {
        return Err(Error::State("zero state has no density matrix".into()));
    }
    // symmetrize to remove rounding asymmetry
    let half = Complex::new(T::of(0.5) / tr.re, T::zero());
    Ok((&rho + rho.adjoint()).map(|z| z * half))
}
