use super::env::{
    apply_one_site, apply_two_site, apply_zero_site, left_env, right_env, SweepEnvironments,
};
use crate::error::Result;
use crate::mpo::MatrixProductOperator;
use crate::mps::{full_rank_bounds, MatrixProductState};
use crate::scalar::{Complex, Real};
use crate::tensor::{
    contract, krylov_expm_apply, lq_orthogonalize, qr_orthogonalize, svd_split, DenseTensor,
    FnMap, KrylovOptions, Truncation,
};

const SHAPES: &str = "effective Hamiltonian shapes are consistent";

/// Smallest relative weight TDVP2 ever keeps; drops rounding-level
/// singular values when the caller asks for no truncation.
const TDVP2_TOL_FLOOR: f64 = 1e-28;

fn step_factor<T: Real>(tau: T) -> Complex<T> {
    Complex::new(T::zero(), -tau)
}

fn evolve_one<T: Real>(
    l: &DenseTensor<T>,
    w: &DenseTensor<T>,
    r: &DenseTensor<T>,
    x: &DenseTensor<T>,
    tau: T,
    opts: KrylovOptions<T>,
) -> Result<DenseTensor<T>> {
    let h = FnMap::new(x.dims().to_vec(), |v: &DenseTensor<T>| {
        apply_one_site(l, w, r, v).expect(SHAPES)
    });
    krylov_expm_apply(&h, x, step_factor(tau), opts)
}

fn evolve_zero<T: Real>(
    l: &DenseTensor<T>,
    r: &DenseTensor<T>,
    x: &DenseTensor<T>,
    tau: T,
    opts: KrylovOptions<T>,
) -> Result<DenseTensor<T>> {
    let h = FnMap::new(x.dims().to_vec(), |v: &DenseTensor<T>| {
        apply_zero_site(l, r, v).expect(SHAPES)
    });
    krylov_expm_apply(&h, x, step_factor(tau), opts)
}

fn evolve_two<T: Real>(
    l: &DenseTensor<T>,
    w1: &DenseTensor<T>,
    w2: &DenseTensor<T>,
    r: &DenseTensor<T>,
    x: &DenseTensor<T>,
    tau: T,
    opts: KrylovOptions<T>,
) -> Result<DenseTensor<T>> {
    let h = FnMap::new(x.dims().to_vec(), |v: &DenseTensor<T>| {
        apply_two_site(l, w1, w2, r, v).expect(SHAPES)
    });
    krylov_expm_apply(&h, x, step_factor(tau), opts)
}

/// Symmetric one-site sweep on a state centered at site 0.
fn tdvp1_sweep<T: Real>(
    psi: &mut MatrixProductState<T>,
    mpo: &MatrixProductOperator<T>,
    dt: T,
    opts: KrylovOptions<T>,
) -> Result<()> {
    let n = psi.len();
    let tau = dt / T::of(2.0);
    let mut env = SweepEnvironments::new(psi, mpo)?;

    for k in 0..n {
        let a = evolve_one(env.l(k), mpo.site(k), env.r(k + 1), psi.site(k), tau, opts)?;
        if k + 1 == n {
            psi.sites_mut()[k] = a;
            break;
        }
        let (q, c) = qr_orthogonalize(&a, &[0, 1])?;
        env.left[k + 1] = Some(left_env(env.l(k), &q, mpo.site(k))?);
        let c = evolve_zero(env.l(k + 1), env.r(k + 1), &c, -tau, opts)?;
        let sites = psi.sites_mut();
        sites[k] = q;
        sites[k + 1] = contract(&c, &sites[k + 1], &[(1, 0)])?;
    }
    for k in (0..n).rev() {
        let a = evolve_one(env.l(k), mpo.site(k), env.r(k + 1), psi.site(k), tau, opts)?;
        if k == 0 {
            psi.sites_mut()[0] = a;
            break;
        }
        let (c, q) = lq_orthogonalize(&a, &[0])?;
        env.right[k] = Some(right_env(env.r(k + 1), &q, mpo.site(k))?);
        let c = evolve_zero(env.l(k), env.r(k), &c, -tau, opts)?;
        let sites = psi.sites_mut();
        sites[k] = q;
        sites[k - 1] = contract(&sites[k - 1], &c, &[(2, 0)])?;
    }
    psi.set_center(Some(0));
    Ok(())
}

/// One second-order one-site TDVP step of length `dt`.
///
/// Bond dimensions are left unchanged; pad them with
/// [`MatrixProductState::enlarge_bonds`] beforehand.
pub fn tdvp1_step<T: Real>(
    psi: &MatrixProductState<T>,
    mpo: &MatrixProductOperator<T>,
    dt: T,
    opts: KrylovOptions<T>,
) -> Result<MatrixProductState<T>> {
    let mut out = psi.canonicalize(0)?;
    tdvp1_sweep(&mut out, mpo, dt, opts)?;
    Ok(out)
}

/// One second-order two-site TDVP step. Returns the new state and the
/// largest relative truncation error of any split.
pub fn tdvp2_step<T: Real>(
    psi: &MatrixProductState<T>,
    mpo: &MatrixProductOperator<T>,
    dt: T,
    trunc_tol: T,
    d_max: usize,
    opts: KrylovOptions<T>,
) -> Result<(MatrixProductState<T>, T)> {
    let mut psi = psi.canonicalize(0)?;
    let n = psi.len();
    if n == 1 {
        tdvp1_sweep(&mut psi, mpo, dt, opts)?;
        return Ok((psi, T::zero()));
    }
    let tau = dt / T::of(2.0);
    let trunc = Truncation::new(Some(d_max.max(1)), trunc_tol.max(T::of(TDVP2_TOL_FLOOR)));
    let mut env = SweepEnvironments::new(&psi, mpo)?;
    let mut worst = T::zero();

    for k in 0..n - 1 {
        let theta = contract(psi.site(k), psi.site(k + 1), &[(2, 0)])?;
        let theta = evolve_two(env.l(k), mpo.site(k), mpo.site(k + 1), env.r(k + 2), &theta, tau, opts)?;
        let split = svd_split(&theta, &[0, 1], trunc)?;
        worst = worst.max(split.truncation_error);
        env.left[k + 1] = Some(left_env(env.l(k), &split.u, mpo.site(k))?);
        let mut b = split.svh();
        if k + 2 < n {
            b = evolve_one(env.l(k + 1), mpo.site(k + 1), env.r(k + 2), &b, -tau, opts)?;
        }
        let sites = psi.sites_mut();
        sites[k] = split.u;
        sites[k + 1] = b;
    }
    for k in (1..n).rev() {
        let theta = contract(psi.site(k - 1), psi.site(k), &[(2, 0)])?;
        let theta = evolve_two(env.l(k - 1), mpo.site(k - 1), mpo.site(k), env.r(k + 1), &theta, tau, opts)?;
        let split = svd_split(&theta, &[0, 1], trunc)?;
        worst = worst.max(split.truncation_error);
        env.right[k] = Some(right_env(env.r(k + 1), &split.vh, mpo.site(k))?);
        let mut a = split.us();
        if k > 1 {
            a = evolve_one(env.l(k - 1), mpo.site(k - 1), env.r(k), &a, -tau, opts)?;
        }
        let sites = psi.sites_mut();
        sites[k] = split.vh;
        sites[k - 1] = a;
    }
    psi.set_center(Some(0));
    Ok((psi, worst))
}

/// Grows bonds (right to left) where the part of `H|psi>` outside the
/// one-site tangent space, times `dt`, exceeds `growth_tol`. The added
/// directions are the dominant right singular vectors of that part; the
/// represented state is unchanged. Leaves the center at site 0.
fn expand_bonds<T: Real>(
    psi: &mut MatrixProductState<T>,
    mpo: &MatrixProductOperator<T>,
    dt: T,
    growth_tol: T,
    d_max: usize,
) -> Result<()> {
    let n = psi.len();
    psi.canonicalize_mut(n - 1)?;
    if n == 1 {
        return Ok(());
    }
    let bounds = full_rank_bounds(&psi.local_dims());
    let mut env = SweepEnvironments::new(psi, mpo)?;
    for k in (0..n - 1).rev() {
        let a = psi.site(k).clone();
        let m = psi.site(k + 1).clone();
        let (c, b) = lq_orthogonalize(&m, &[0])?;
        let theta = contract(&a, &m, &[(2, 0)])?;
        let x = apply_two_site(env.l(k), mpo.site(k), mpo.site(k + 1), env.r(k + 2), &theta)?;
        // remove the one-site tangent directions: (1 - A A^+) x (1 - B^+ B)
        let ax = contract(&a.conj(), &x, &[(0, 0), (1, 1)])?;
        let y = x.sub(&contract(&a, &ax, &[(2, 0)])?)?;
        let yb = contract(&y, &b.conj(), &[(2, 1), (3, 2)])?;
        let x2 = y.sub(&contract(&yb, &b, &[(2, 0)])?)?;

        let chi = b.dims()[0];
        let local_cap = (a.dims()[0] * a.dims()[1]).min(b.dims()[1] * b.dims()[2]);
        let room = d_max.min(bounds[k]).min(local_cap).saturating_sub(chi);
        let (mut b_new, mut c_new) = (b, c);
        if room > 0 && dt.abs() * x2.norm() > growth_tol {
            let split = svd_split(&x2, &[0, 1], Truncation::none())?;
            let s0 = split.s.first().copied().unwrap_or(T::zero());
            let nonzero = split.s.iter().filter(|&&s| s > T::of(1e-14) * s0).count();
            let mut tail: T = split.s.iter().map(|&s| s * s).fold(T::zero(), |p, q| p + q);
            let mut add = 0;
            while add < room.min(nonzero) && dt.abs() * tail.max(T::zero()).sqrt() > growth_tol {
                tail -= split.s[add] * split.s[add];
                add += 1;
            }
            if add > 0 {
                let (b2, c2) = append_rows(&b_new, &c_new, &split.vh, add)?;
                b_new = b2;
                c_new = c2;
            }
        }
        env.right[k + 1] = Some(right_env(env.r(k + 2), &b_new, mpo.site(k + 1))?);
        let sites = psi.sites_mut();
        sites[k] = contract(&a, &c_new, &[(2, 0)])?;
        sites[k + 1] = b_new;
    }
    psi.set_center(Some(0));
    Ok(())
}

/// Appends the first `add` rows of `vh` (orthogonalized against `b`) to the
/// right isometry `b` and zero columns to `c`.
fn append_rows<T: Real>(
    b: &DenseTensor<T>,
    c: &DenseTensor<T>,
    vh: &DenseTensor<T>,
    add: usize,
) -> Result<(DenseTensor<T>, DenseTensor<T>)> {
    let (chi, s, r) = (b.dims()[0], b.dims()[1], b.dims()[2]);
    let row = s * r;
    let mut rows: Vec<Vec<Complex<T>>> = b.data().chunks(row).map(|c| c.to_vec()).collect();
    for v in vh.data().chunks(row).take(add) {
        let mut v = v.to_vec();
        for _ in 0..2 {
            for q in &rows {
                let p: Complex<T> = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                v.iter_mut().zip(q).for_each(|(x, y)| *x -= p * y);
            }
        }
        let nrm = v.iter().map(|z| z.norm_sqr()).fold(T::zero(), |a, b| a + b).sqrt();
        if nrm < T::of(1e-8) {
            continue;
        }
        v.iter_mut().for_each(|z| *z /= nrm);
        rows.push(v);
    }
    let new_chi = rows.len();
    let b2 = DenseTensor::new(vec![new_chi, s, r], rows.concat())?;
    let cl = c.dims()[0];
    let c2 = DenseTensor::from_fn(&[cl, new_chi], |ix| {
        if ix[1] < chi {
            c.get(&[ix[0], ix[1]])
        } else {
            Complex::new(T::zero(), T::zero())
        }
    });
    Ok((b2, c2))
}

/// One adaptive step: bond expansion followed by a one-site sweep. Returns
/// the new state and its bond dimensions.
pub fn dtdvp_step<T: Real>(
    psi: &MatrixProductState<T>,
    mpo: &MatrixProductOperator<T>,
    dt: T,
    growth_tol: T,
    d_max: usize,
    opts: KrylovOptions<T>,
) -> Result<(MatrixProductState<T>, Vec<usize>)> {
    let mut out = psi.clone();
    expand_bonds(&mut out, mpo, dt, growth_tol, d_max)?;
    tdvp1_sweep(&mut out, mpo, dt, opts)?;
    let dims = out.bond_dims();
    Ok((out, dims))
}
