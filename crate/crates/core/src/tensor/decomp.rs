use nalgebra::DMatrix;

use super::{tensor_from_matrix, DenseTensor};
use crate::error::{Error, Result};
use crate::scalar::{cabs, Complex, Real};

/// Rank limits applied by [`svd_split`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Truncation<T> {
    /// Hard cap on the number of kept singular values; `None` is unlimited.
    pub max_rank: Option<usize>,
    /// Largest admissible discarded weight, relative to the total squared norm.
    pub tol: T,
}

impl<T: Real> Truncation<T> {
    pub fn none() -> Self {
        Self {
            max_rank: None,
            tol: T::zero(),
        }
    }

    pub fn new(max_rank: Option<usize>, tol: T) -> Self {
        Self { max_rank, tol }
    }
}

/// Output of a (possibly truncated) SVD across a bipartition of axes.
#[derive(Clone, Debug)]
pub struct SvdResult<T: Real> {
    /// Left isometry with dims `[left dims..., r]`.
    pub u: DenseTensor<T>,
    /// Kept singular values, descending.
    pub s: Vec<T>,
    /// Right isometry with dims `[r, right dims...]`.
    pub vh: DenseTensor<T>,
    /// Discarded squared weight divided by the total squared weight.
    pub truncation_error: T,
}

impl<T: Real> SvdResult<T> {
    /// `U * diag(S)` with dims `[left dims..., r]`.
    pub fn us(&self) -> DenseTensor<T> {
        scale_last_axis(&self.u, &self.s)
    }

    /// `diag(S) * Vh` with dims `[r, right dims...]`.
    pub fn svh(&self) -> DenseTensor<T> {
        let r = self.s.len();
        let cols = self.vh.len() / r;
        let mut out = self.vh.clone();
        for (i, &s) in self.s.iter().enumerate() {
            for z in &mut out.data_mut()[i * cols..(i + 1) * cols] {
                *z *= s;
            }
        }
        out
    }

    /// Reassembles `U diag(S) Vh` with the left group first.
    pub fn reconstruct(&self) -> DenseTensor<T> {
        let us = self.us();
        super::contract(&us, &self.vh, &[(us.rank() - 1, 0)]).expect("consistent split dims")
    }
}

fn scale_last_axis<T: Real>(t: &DenseTensor<T>, s: &[T]) -> DenseTensor<T> {
    let r = s.len();
    let mut out = t.clone();
    for (k, z) in out.data_mut().iter_mut().enumerate() {
        *z *= s[k % r];
    }
    out
}

/// Number of singular values to keep.
///
/// Ties (gaps below `1e-12 * s_max`) among nonzero values are never split:
/// a cut that would land inside a degenerate cluster is first moved to the
/// end of the cluster when the rank cap allows it and otherwise back to the
/// cluster's start. If the whole leading spectrum is one cluster the cap wins.
fn choose_rank<T: Real>(s: &[T], trunc: &Truncation<T>) -> usize {
    let n = s.len();
    let total = s.iter().fold(T::zero(), |a, &x| a + x * x);
    if total == T::zero() {
        return 1;
    }
    let budget = trunc.tol * total;
    let mut r = n;
    let mut tail = T::zero();
    while r > 1 {
        let next = tail + s[r - 1] * s[r - 1];
        if next > budget {
            break;
        }
        tail = next;
        r -= 1;
    }
    let cap = trunc.max_rank.unwrap_or(n).clamp(1, n);
    r = r.min(cap);

    let gap = T::of(1e-12) * s[0];
    let inside = |k: usize| k < n && k > 0 && s[k] > gap && s[k - 1] - s[k] <= gap;
    while inside(r) && r < cap {
        r += 1;
    }
    if inside(r) {
        let mut b = r;
        while b > 0 && inside(b) {
            b -= 1;
        }
        if b > 0 {
            r = b;
        }
    }
    r
}

type Svd<T> = (DMatrix<Complex<T>>, Vec<T>, DMatrix<Complex<T>>);

fn reconstruction_ok<T: Real>(a: &DMatrix<Complex<T>>, (u, s, vt): &Svd<T>) -> bool {
    let us = DMatrix::from_fn(u.nrows(), s.len(), |i, j| u[(i, j)] * s[j]);
    let err = (us * vt - a).norm();
    err.is_finite() && err <= T::eps() * T::of(1e3) * a.norm()
}

fn library_svd<T: Real>(a: &DMatrix<Complex<T>>) -> Option<Svd<T>> {
    let svd = a.clone().svd(true, true);
    Some((svd.u?, svd.singular_values.iter().copied().collect(), svd.v_t?))
}

/// Thin SVD `a = U diag(s) V^T`, verified by reconstruction.
///
/// The library routine occasionally returns an inconsistent factorization
/// for complex matrices whose entries span many orders of magnitude. Such
/// results are rejected; the adjoint is tried next and one-sided Jacobi
/// rotations are the last resort.
fn checked_svd<T: Real>(a: &DMatrix<Complex<T>>) -> Result<Svd<T>> {
    if let Some(r) = library_svd(a).filter(|r| reconstruction_ok(a, r)) {
        return Ok(r);
    }
    if let Some((u, s, vt)) = library_svd(&a.adjoint()) {
        let r = (vt.adjoint(), s, u.adjoint());
        if reconstruction_ok(a, &r) {
            return Ok(r);
        }
    }
    let r = if a.nrows() >= a.ncols() {
        jacobi_svd(a)
    } else {
        let (u, s, vt) = jacobi_svd(&a.adjoint());
        (vt.adjoint(), s, u.adjoint())
    };
    if reconstruction_ok(a, &r) {
        Ok(r)
    } else {
        Err(Error::LinAlg(format!("no accurate SVD of a {}x{} matrix", a.nrows(), a.ncols())))
    }
}

/// One-sided Jacobi SVD of a tall matrix (`rows >= cols`).
fn jacobi_svd<T: Real>(a: &DMatrix<Complex<T>>) -> Svd<T> {
    let (m, n) = a.shape();
    let zero = Complex::new(T::zero(), T::zero());
    let mut w = a.clone();
    let mut v = DMatrix::<Complex<T>>::identity(n, n);
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = w.column(p).norm_squared();
                let beta = w.column(q).norm_squared();
                let gamma = w.column(p).dotc(&w.column(q));
                let g = cabs(gamma);
                if g == T::zero() || g <= T::eps() * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                // rephase column q so that the overlap is real and positive
                let phase = (gamma / Complex::new(g, T::zero())).conj();
                let zeta = (beta - alpha) / (T::of(2.0) * g);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                for mat in [&mut w, &mut v] {
                    for i in 0..mat.nrows() {
                        let xp = mat[(i, p)];
                        let xq = mat[(i, q)] * phase;
                        mat[(i, p)] = xp * c - xq * s;
                        mat[(i, q)] = xp * s + xq * c;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let s: Vec<T> = (0..n).map(|j| w.column(j).norm()).collect();
    let smax = s.iter().copied().fold(T::zero(), T::max);
    let mut u = DMatrix::from_element(m, n, zero);
    let mut filled = vec![false; n];
    for j in 0..n {
        if s[j] > T::eps() * smax && s[j] > T::zero() {
            let col = w.column(j) / Complex::new(s[j], T::zero());
            u.set_column(j, &col);
            filled[j] = true;
        }
    }
    // complete the null-space columns with unit vectors, orthogonalized
    let mut e = 0;
    for j in 0..n {
        while !filled[j] && e < m {
            let mut x = nalgebra::DVector::from_element(m, zero);
            x[e] = Complex::new(T::one(), T::zero());
            e += 1;
            for _ in 0..2 {
                for k in (0..n).filter(|&k| filled[k]) {
                    let proj = u.column(k).dotc(&x);
                    x -= u.column(k) * proj;
                }
            }
            let nx = x.norm();
            if nx > T::of(0.5) {
                u.set_column(j, &(x / Complex::new(nx, T::zero())));
                filled[j] = true;
            }
        }
    }
    (u, s, v.adjoint())
}

/// Singular value decomposition of `t` with `left_axes` as rows.
pub fn svd_split<T: Real>(
    t: &DenseTensor<T>,
    left_axes: &[usize],
    trunc: Truncation<T>,
) -> Result<SvdResult<T>> {
    let mat = t.matricize(left_axes)?;
    let (m, n) = mat.matrix.shape();
    let (u, sv, v_t) = checked_svd(&mat.matrix)?;
    let k = sv.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| sv[b].partial_cmp(&sv[a]).unwrap_or(std::cmp::Ordering::Equal));
    let sorted: Vec<T> = order.iter().map(|&i| sv[i].max(T::zero())).collect();

    let r = choose_rank(&sorted, &trunc);
    let total = sorted.iter().fold(T::zero(), |a, &x| a + x * x);
    let discarded = sorted[r..].iter().fold(T::zero(), |a, &x| a + x * x);
    let truncation_error = if total > T::zero() {
        discarded / total
    } else {
        T::zero()
    };

    let u_kept = DMatrix::from_fn(m, r, |i, j| u[(i, order[j])]);
    let vh_kept = DMatrix::from_fn(r, n, |i, j| v_t[(order[i], j)]);
    let mut udims = mat.left_dims.clone();
    udims.push(r);
    let mut vdims = vec![r];
    vdims.extend_from_slice(&mat.right_dims);
    Ok(SvdResult {
        u: tensor_from_matrix(&u_kept, udims),
        s: sorted[..r].to_vec(),
        vh: tensor_from_matrix(&vh_kept, vdims),
        truncation_error,
    })
}

/// Thin QR with the diagonal of `R` made real and non-negative.
fn gauge_fixed_qr<T: Real>(
    a: DMatrix<Complex<T>>,
) -> (DMatrix<Complex<T>>, DMatrix<Complex<T>>) {
    let qr = a.qr();
    let mut q = qr.q();
    let mut r = qr.r();
    for i in 0..r.nrows().min(r.ncols()) {
        let d = r[(i, i)];
        let mag = cabs(d);
        if mag > T::zero() {
            let phase = d / Complex::new(mag, T::zero());
            for row in 0..q.nrows() {
                q[(row, i)] *= phase;
            }
            let pc = phase.conj();
            for col in 0..r.ncols() {
                r[(i, col)] *= pc;
            }
        }
    }
    (q, r)
}

/// QR decomposition across `left_axes`.
///
/// Returns `Q` with dims `[left dims..., k]` (isometric over the left group)
/// and `R` with dims `[k, right dims...]`, `k = min(rows, cols)`.
pub fn qr_orthogonalize<T: Real>(
    t: &DenseTensor<T>,
    left_axes: &[usize],
) -> Result<(DenseTensor<T>, DenseTensor<T>)> {
    let mat = t.matricize(left_axes)?;
    let (q, r) = gauge_fixed_qr(mat.matrix);
    let k = q.ncols();
    let mut qd = mat.left_dims;
    qd.push(k);
    let mut rd = vec![k];
    rd.extend_from_slice(&mat.right_dims);
    Ok((tensor_from_matrix(&q, qd), tensor_from_matrix(&r, rd)))
}

/// LQ decomposition across `left_axes`.
///
/// Returns `L` with dims `[left dims..., k]` and `Q` with dims
/// `[k, right dims...]`, where `Q` has orthonormal rows.
pub fn lq_orthogonalize<T: Real>(
    t: &DenseTensor<T>,
    left_axes: &[usize],
) -> Result<(DenseTensor<T>, DenseTensor<T>)> {
    let mat = t.matricize(left_axes)?;
    let (q, r) = gauge_fixed_qr(mat.matrix.adjoint());
    let k = q.ncols();
    let mut ld = mat.left_dims;
    ld.push(k);
    let mut qd = vec![k];
    qd.extend_from_slice(&mat.right_dims);
    Ok((
        tensor_from_matrix(&r.adjoint(), ld),
        tensor_from_matrix(&q.adjoint(), qd),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::contract;
    use crate::testutil::random_tensor;

    fn isometry_defect(q: &DenseTensor<f64>, left: usize) -> f64 {
        let m = q.matricize(&(0..left).collect::<Vec<_>>()).unwrap().matrix;
        let g = m.adjoint() * &m;
        let id = DMatrix::<Complex<f64>>::identity(g.nrows(), g.ncols());
        (g - id).norm()
    }

    /// Column-major entries of a two-site wavefunction on which the library
    /// SVD returns singular values whose squares exceed the norm.
    const SKEWED: [(f64, f64); 16] = [
            (-6.904535683664132e-21, 1.4966133236786186e-19),
            (1.1557820364191284e-16, 7.908405713116446e-18),
            (2.981350914761631e-35, 9.824497601365705e-35),
            (8.183697151360302e-21, -7.778127512581889e-22),
            (-3.532831838465894e-20, 3.701938549149422e-19),
            (-0.08902621015732019, -0.011098301010151582),
            (4.243568353843479e-24, 1.781849974816561e-22),
            (2.241793353468944e-18, -6.046307085951488e-19),
            (-2.968933276200938e-19, 2.1924880289966975e-20),
            (-0.9880544470054066, -0.1252464647849536),
            (2.758083838312999e-23, 1.8439252823501444e-21),
            (1.862856070513353e-19, -7.712576258434701e-20),
            (-0.0002465447088170725, 0.0035805267106002),
            (3.6672544040602684e-15, 1.3450107529209029e-15),
            (2.2153118473243017e-19, 6.855503736578347e-19),
            (0.00011553959702852981, -1.1234543129521871e-5),
    ];

    fn skewed() -> DMatrix<Complex<f64>> {
        DMatrix::from_iterator(4, 4, SKEWED.iter().map(|&(re, im)| Complex::new(re, im)))
    }

    #[test]
    fn skewed_matrix_gets_an_accurate_split() {
        let m = skewed();
        let t = tensor_from_matrix(&m, vec![2, 2, 2, 2]);
        let r = svd_split(&t, &[0, 1], Truncation::none()).unwrap();
        assert!(r.reconstruct().sub(&t).unwrap().norm() < 1e-14);
        let weight: f64 = r.s.iter().map(|s| s * s).sum();
        assert!((weight - t.norm_sqr()).abs() < 1e-14);
        assert!(isometry_defect(&r.u, 2) < 1e-13);
    }

    #[test]
    fn jacobi_svd_is_accurate_on_tall_and_rank_deficient_input() {
        let check = |a: &DMatrix<Complex<f64>>| {
            let r = jacobi_svd(a);
            assert!(reconstruction_ok(a, &r));
            let (u, _, vt) = r;
            let n = a.ncols();
            let id = DMatrix::<Complex<f64>>::identity(n, n);
            assert!((u.adjoint() * &u - &id).norm() < 1e-13);
            assert!((&vt * vt.adjoint() - &id).norm() < 1e-13);
        };
        check(&skewed());
        check(&random_tensor(&[7, 4], 5).to_matrix());
        let low = random_tensor(&[6, 1], 6).to_matrix() * random_tensor(&[1, 3], 7).to_matrix();
        check(&low);
        check(&DMatrix::from_element(3, 2, Complex::new(0.0, 0.0)));
    }

    #[test]
    fn identity_split_keeps_all() {
        let id = DenseTensor::<f64>::identity(4);
        let r = svd_split(&id, &[0], Truncation::none()).unwrap();
        assert_eq!(r.s.len(), 4);
        for &s in &r.s {
            assert!((s - 1.0).abs() < 1e-14);
        }
        assert_eq!(r.truncation_error, 0.0);
    }

    #[test]
    fn rank_one_outer_product() {
        let u = random_tensor(&[3], 3);
        let v = random_tensor(&[5], 4);
        let t = contract(&u, &v, &[]).unwrap();
        let r = svd_split(&t, &[0], Truncation::none()).unwrap();
        assert!((r.s[0] - u.norm() * v.norm()).abs() < 1e-13);
        assert!(r.s[1..].iter().all(|&s| s < 1e-13));
    }

    #[test]
    fn truncation_error_matches_full_spectrum() {
        let t = random_tensor(&[6, 6], 11);
        let full = svd_split(&t, &[0], Truncation::none()).unwrap();
        let cut = svd_split(&t, &[0], Truncation::new(Some(3), 0.0)).unwrap();
        assert_eq!(cut.s.len(), 3);
        let total: f64 = full.s.iter().map(|s| s * s).sum();
        let tail: f64 = full.s[3..].iter().map(|s| s * s).sum();
        assert!((cut.truncation_error - tail / total).abs() < 1e-13);
        let diff = cut.reconstruct().sub(&t).unwrap().norm_sqr();
        assert!((diff - tail).abs() < 1e-12);
    }

    #[test]
    fn tolerance_selects_rank() {
        let t = random_tensor(&[6, 6], 12);
        let full = svd_split(&t, &[0], Truncation::none()).unwrap();
        let total: f64 = full.s.iter().map(|s| s * s).sum();
        let tail2: f64 = full.s[4..].iter().map(|s| s * s).sum();
        let r = svd_split(&t, &[0], Truncation::new(None, tail2 / total * 1.0001)).unwrap();
        assert_eq!(r.s.len(), 4);
        assert!(r.truncation_error <= tail2 / total * 1.0001);
    }

    #[test]
    fn degenerate_cluster_is_not_split() {
        let d = DenseTensor::<f64>::from_fn(&[4, 4], |i| {
            let v = [2.0, 1.0, 1.0, 0.5];
            if i[0] == i[1] {
                Complex::new(v[i[0]], 0.0)
            } else {
                Complex::new(0.0, 0.0)
            }
        });
        let r = svd_split(&d, &[0], Truncation::new(Some(2), 0.0)).unwrap();
        assert_eq!(r.s.len(), 1);
        let r = svd_split(&d, &[0], Truncation::new(Some(3), 0.0)).unwrap();
        assert_eq!(r.s.len(), 3);
        let id = DenseTensor::<f64>::identity(4);
        let r = svd_split(&id, &[0], Truncation::new(Some(2), 0.0)).unwrap();
        assert_eq!(r.s.len(), 2);
    }

    #[test]
    fn svd_rejects_bad_axes() {
        let t = random_tensor(&[2, 3], 1);
        assert!(matches!(svd_split(&t, &[], Truncation::none()), Err(Error::Axes(_))));
        assert!(matches!(svd_split(&t, &[0, 1], Truncation::none()), Err(Error::Axes(_))));
        assert!(matches!(qr_orthogonalize(&t, &[0, 1]), Err(Error::Axes(_))));
    }

    #[test]
    fn qr_diagonal_gauge() {
        let d = DenseTensor::<f64>::from_fn(&[2, 2], |i| {
            if i == [0, 0] {
                Complex::new(3.0, 0.0)
            } else {
                Complex::new(0.0, 0.0)
            }
        });
        let (q, r) = qr_orthogonalize(&d, &[0]).unwrap();
        assert!((q.get(&[0, 0]) - Complex::new(1.0, 0.0)).norm() < 1e-14);
        assert!((r.get(&[0, 0]) - Complex::new(3.0, 0.0)).norm() < 1e-14);
        let back = contract(&q, &r, &[(1, 0)]).unwrap();
        assert!(back.sub(&d).unwrap().norm() < 1e-14);
    }

    #[test]
    fn qr_of_random_tall_matrix_is_isometric() {
        let t = random_tensor(&[5, 3], 5);
        let (q, r) = qr_orthogonalize(&t, &[0]).unwrap();
        assert!(isometry_defect(&q, 1) < 1e-12);
        let back = contract(&q, &r, &[(1, 0)]).unwrap();
        assert!(back.sub(&t).unwrap().norm() < 1e-12);
    }

    #[test]
    fn qr_of_isometric_input() {
        let t = random_tensor(&[5, 3], 8);
        let (q0, _) = qr_orthogonalize(&t, &[0]).unwrap();
        let (q, r) = qr_orthogonalize(&q0, &[0]).unwrap();
        let rm = r.to_matrix();
        for i in 0..3 {
            assert!((rm[(i, i)].norm() - 1.0).abs() < 1e-12);
            for j in 0..i {
                assert!(rm[(i, j)].norm() < 1e-14);
            }
        }
        assert!(contract(&q, &r, &[(1, 0)]).unwrap().sub(&q0).unwrap().norm() < 1e-12);
    }

    #[test]
    fn lq_rows_are_orthonormal() {
        let t = random_tensor(&[3, 2, 4], 9);
        let (l, q) = lq_orthogonalize(&t, &[0]).unwrap();
        assert_eq!(q.dims(), &[3, 2, 4]);
        let qm = q.matricize(&[0]).unwrap().matrix;
        let g = &qm * qm.adjoint();
        assert!((g - DMatrix::<Complex<f64>>::identity(3, 3)).norm() < 1e-12);
        let back = contract(&l, &q, &[(1, 0)]).unwrap();
        assert!(back.sub(&t).unwrap().norm() < 1e-12);
    }

    #[test]
    fn multi_axis_split_reconstructs() {
        let t = random_tensor(&[2, 3, 4], 10);
        let r = svd_split(&t, &[2, 0], Truncation::none()).unwrap();
        assert_eq!(r.u.dims()[..2], [4, 2]);
        let back = r.reconstruct().permute(&[1, 2, 0]);
        assert!(back.sub(&t).unwrap().norm() < 1e-12);
        assert!(isometry_defect(&r.u, 2) < 1e-12);
    }
}
