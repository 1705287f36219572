use crate::error::{Error, Result};
use crate::mpo::MatrixProductOperator;
use crate::mps::MatrixProductState;
use crate::scalar::{Complex, Real};
use crate::tensor::{contract, DenseTensor};

pub(crate) fn trivial_env<T: Real>() -> DenseTensor<T> {
    DenseTensor::from_fn(&[1, 1, 1], |_| Complex::new(T::one(), T::zero()))
}

/// Extends `L[bra, w, ket]` over one site.
pub(crate) fn left_env<T: Real>(
    l: &DenseTensor<T>,
    a: &DenseTensor<T>,
    w: &DenseTensor<T>,
) -> Result<DenseTensor<T>> {
    let t = contract(l, a, &[(2, 0)])?;
    let t = contract(&t, w, &[(1, 0), (2, 3)])?;
    Ok(contract(&t, &a.conj(), &[(0, 0), (3, 1)])?.permute(&[2, 1, 0]))
}

/// Extends `R[bra, w, ket]` over one site.
pub(crate) fn right_env<T: Real>(
    r: &DenseTensor<T>,
    a: &DenseTensor<T>,
    w: &DenseTensor<T>,
) -> Result<DenseTensor<T>> {
    let t = contract(a, r, &[(2, 2)])?;
    let t = contract(&t, w, &[(1, 3), (3, 1)])?;
    Ok(contract(&t, &a.conj(), &[(1, 2), (3, 1)])?.permute(&[2, 1, 0]))
}

pub(crate) fn apply_one_site<T: Real>(
    l: &DenseTensor<T>,
    w: &DenseTensor<T>,
    r: &DenseTensor<T>,
    x: &DenseTensor<T>,
) -> Result<DenseTensor<T>> {
    let t = contract(l, x, &[(2, 0)])?;
    let t = contract(&t, w, &[(1, 0), (2, 3)])?;
    contract(&t, r, &[(1, 2), (2, 1)])
}

pub(crate) fn apply_zero_site<T: Real>(
    l: &DenseTensor<T>,
    r: &DenseTensor<T>,
    x: &DenseTensor<T>,
) -> Result<DenseTensor<T>> {
    let t = contract(l, x, &[(2, 0)])?;
    contract(&t, r, &[(1, 1), (2, 2)])
}

pub(crate) fn apply_two_site<T: Real>(
    l: &DenseTensor<T>,
    w1: &DenseTensor<T>,
    w2: &DenseTensor<T>,
    r: &DenseTensor<T>,
    x: &DenseTensor<T>,
) -> Result<DenseTensor<T>> {
    let t = contract(l, x, &[(2, 0)])?;
    let t = contract(&t, w1, &[(1, 0), (2, 3)])?;
    let t = contract(&t, w2, &[(3, 0), (1, 3)])?;
    contract(&t, r, &[(1, 2), (3, 1)])
}

/// Cached partial contractions of `<psi|H|psi>`.
///
/// `left[n]` covers sites `< n` and `right[n]` covers sites `>= n`; entries
/// are `None` where the cached block would be stale.
#[derive(Clone, Debug)]
pub struct SweepEnvironments<T: Real> {
    pub left: Vec<Option<DenseTensor<T>>>,
    pub right: Vec<Option<DenseTensor<T>>>,
}

impl<T: Real> SweepEnvironments<T> {
    /// Builds every block valid for a state centered at `psi.center()`.
    pub fn new(psi: &MatrixProductState<T>, mpo: &MatrixProductOperator<T>) -> Result<Self> {
        if psi.local_dims() != mpo.local_dims() {
            return Err(Error::Shape(format!(
                "state local dims {:?} differ from operator local dims {:?}",
                psi.local_dims(),
                mpo.local_dims()
            )));
        }
        let c = psi
            .center()
            .ok_or_else(|| Error::State("environments need a canonical state".into()))?;
        let n = psi.len();
        let mut env = Self {
            left: vec![None; n + 1],
            right: vec![None; n + 1],
        };
        env.left[0] = Some(trivial_env());
        env.right[n] = Some(trivial_env());
        for k in 0..c {
            let next = left_env(env.l(k), psi.site(k), mpo.site(k))?;
            env.left[k + 1] = Some(next);
        }
        for k in (c + 1..n).rev() {
            let next = right_env(env.r(k + 1), psi.site(k), mpo.site(k))?;
            env.right[k] = Some(next);
        }
        Ok(env)
    }

    pub(crate) fn l(&self, k: usize) -> &DenseTensor<T> {
        self.left[k].as_ref().expect("left environment not built")
    }

    pub(crate) fn r(&self, k: usize) -> &DenseTensor<T> {
        self.right[k].as_ref().expect("right environment not built")
    }

    /// `<psi|H|psi>` evaluated at the center site `c`.
    pub fn energy_at(&self, psi: &MatrixProductState<T>, mpo: &MatrixProductOperator<T>, c: usize) -> Result<Complex<T>> {
        let hx = apply_one_site(self.l(c), mpo.site(c), self.r(c + 1), psi.site(c))?;
        Ok(psi.site(c).dot(&hx))
    }
}
