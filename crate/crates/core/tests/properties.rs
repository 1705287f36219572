//! Randomized invariants of the numerical core.

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use tedopa_core::chain::{chaincoeffs_from_sd, thermalized_sd, SpectralDensity};
use tedopa_core::mpo::{mpo_to_dense, xyz_mpo, XyzParams};
use tedopa_core::mps::{full_rank_bounds, MatrixProductState};
use tedopa_core::tensor::{
    contract, krylov_expm_apply, lq_orthogonalize, qr_orthogonalize, svd_split, DenseMap, KrylovOptions,
    Truncation,
};
use tedopa_core::{Mps, Tensor, C64};

fn random_tensor(dims: &[usize], seed: u64) -> Tensor {
    let mut r = StdRng::seed_from_u64(seed);
    Tensor::from_fn(dims, |_| C64::new(r.gen::<f64>() - 0.5, r.gen::<f64>() - 0.5))
}

fn random_mps(dims: &[usize], bond: usize, seed: u64) -> Mps {
    let bounds = full_rank_bounds(dims);
    let n = dims.len();
    let sites = (0..n)
        .map(|k| {
            let l = if k == 0 { 1 } else { bond.min(bounds[k - 1]) };
            let r = if k == n - 1 { 1 } else { bond.min(bounds[k]) };
            random_tensor(&[l, dims[k], r], seed.wrapping_mul(31).wrapping_add(k as u64))
        })
        .collect();
    MatrixProductState::from_sites(sites).unwrap()
}

fn dense_vec(psi: &Mps) -> Vec<C64> {
    psi.to_dense().unwrap().into_data()
}

fn dist(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn contraction_is_bilinear(m in 1usize..4, k in 1usize..4, n in 1usize..4, seed in any::<u64>(),
                               re in -2.0f64..2.0, im in -2.0f64..2.0) {
        let a = random_tensor(&[m, k], seed);
        let b = random_tensor(&[m, k], seed ^ 1);
        let c = random_tensor(&[k, n], seed ^ 2);
        let z = C64::new(re, im);
        let lhs = contract(&a.axpy(z, &b).unwrap(), &c, &[(1, 0)]).unwrap();
        let rhs = contract(&a, &c, &[(1, 0)]).unwrap()
            .axpy(z, &contract(&b, &c, &[(1, 0)]).unwrap()).unwrap();
        prop_assert!(lhs.sub(&rhs).unwrap().norm() < 1e-12);
    }

    #[test]
    fn contraction_matches_matrix_product(m in 1usize..5, k in 1usize..5, n in 1usize..5, seed in any::<u64>()) {
        let a = random_tensor(&[m, k], seed);
        let b = random_tensor(&[k, n], seed ^ 7);
        let c = contract(&a, &b, &[(1, 0)]).unwrap();
        let want = a.to_matrix() * b.to_matrix();
        prop_assert!((c.to_matrix() - want).norm() < 1e-12);
    }

    #[test]
    fn svd_reconstructs_and_reports_discarded_weight(d0 in 1usize..4, d1 in 1usize..4, d2 in 1usize..4,
                                                     cap in 1usize..6, seed in any::<u64>()) {
        let t = random_tensor(&[d0, d1, d2], seed);
        let full = svd_split(&t, &[0, 1], Truncation::none()).unwrap();
        prop_assert!(full.reconstruct().sub(&t).unwrap().norm() < 1e-12 * t.norm().max(1.0));
        prop_assert!(full.s.windows(2).all(|w| w[0] >= w[1]));
        let cut = svd_split(&t, &[0, 1], Truncation::new(Some(cap), 0.0)).unwrap();
        prop_assert!(cut.s.len() <= cap.max(1) || cut.s.len() == full.s.len());
        let lost: f64 = cut.reconstruct().sub(&t).unwrap().norm_sqr() / t.norm_sqr();
        prop_assert!((lost - cut.truncation_error).abs() < 1e-10);
    }

    #[test]
    fn qr_and_lq_factors_are_isometric(d0 in 1usize..5, d1 in 1usize..5, d2 in 1usize..5, seed in any::<u64>()) {
        let t = random_tensor(&[d0, d1, d2], seed);
        let (q, r) = qr_orthogonalize(&t, &[0, 1]).unwrap();
        let k = q.dims()[2];
        let qq = contract(&q.conj(), &q, &[(0, 0), (1, 1)]).unwrap();
        prop_assert!(qq.sub(&Tensor::identity(k)).unwrap().norm() < 1e-12);
        prop_assert!(contract(&q, &r, &[(2, 0)]).unwrap().sub(&t).unwrap().norm() < 1e-12);
        let (l, q) = lq_orthogonalize(&t, &[0]).unwrap();
        let k = q.dims()[0];
        let qq = contract(&q, &q.conj(), &[(1, 1), (2, 2)]).unwrap();
        prop_assert!(qq.sub(&Tensor::identity(k)).unwrap().norm() < 1e-12);
        prop_assert!(contract(&l, &q, &[(1, 0)]).unwrap().sub(&t).unwrap().norm() < 1e-12);
    }

    #[test]
    fn krylov_propagation_is_unitary_and_exact(n in 2usize..24, dt in 0.01f64..1.0, seed in any::<u64>()) {
        let a = random_tensor(&[n, n], seed).to_matrix();
        let h: DMatrix<C64> = (&a + a.adjoint()) * C64::new(0.5, 0.0);
        let v = random_tensor(&[n], seed ^ 3);
        let map = DenseMap::new(vec![n], h.clone()).unwrap();
        let out = krylov_expm_apply(&map, &v, C64::new(0.0, -dt), KrylovOptions::default()).unwrap();
        prop_assert!((out.norm() - v.norm()).abs() < 1e-10 * v.norm());
        let eig = nalgebra::SymmetricEigen::new(h);
        let ph = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| C64::new(0.0, -l * dt).exp()));
        let want = &eig.eigenvectors * ph * eig.eigenvectors.adjoint()
            * nalgebra::DVector::from_column_slice(v.data());
        prop_assert!(dist(out.data(), want.as_slice()) < 1e-9 * v.norm());
    }

    #[test]
    fn canonical_forms_represent_the_same_state(n in 2usize..6, bond in 1usize..5, seed in any::<u64>()) {
        let dims = vec![2; n];
        let psi = random_mps(&dims, bond, seed);
        let reference = dense_vec(&psi);
        let scale = psi.norm();
        for c in 0..n {
            let phi = psi.canonicalize(c).unwrap();
            prop_assert_eq!(phi.center(), Some(c));
            prop_assert!(phi.isometry_defect().unwrap() < 1e-12);
            prop_assert!(dist(&dense_vec(&phi), &reference) < 1e-11 * scale.max(1.0));
            prop_assert!((phi.norm() - scale).abs() < 1e-11 * scale.max(1.0));
        }
    }

    #[test]
    fn overlap_is_sesquilinear(n in 2usize..5, seed in any::<u64>()) {
        let dims = vec![3; n];
        let a = random_mps(&dims, 3, seed);
        let b = random_mps(&dims, 2, seed ^ 9);
        let ab = a.overlap(&b).unwrap();
        let ba = b.overlap(&a).unwrap();
        prop_assert!((ab - ba.conj()).norm() < 1e-12);
        let want: C64 = dense_vec(&a).iter().zip(dense_vec(&b)).map(|(x, y)| x.conj() * y).sum();
        prop_assert!((ab - want).norm() < 1e-11);
        prop_assert!((a.overlap(&a).unwrap().re - a.norm().powi(2)).abs() < 1e-11);
    }

    #[test]
    fn hamiltonian_mpo_is_hermitian(n in 2usize..5, jx in -1.0f64..1.0, jy in -1.0f64..1.0,
                                    jz in -1.0f64..1.0, hx in -1.0f64..1.0, hz in -1.0f64..1.0) {
        let h = mpo_to_dense(&xyz_mpo::<f64>(n, &XyzParams { jx, jy, jz, hx, hz }).unwrap()).unwrap();
        prop_assert!((&h - h.adjoint()).norm() < 1e-13);
    }

    #[test]
    fn thermalized_density_obeys_detailed_balance(beta in 0.05f64..20.0, w in 0.01f64..0.99,
                                                  alpha in 0.01f64..1.0, s in 0.2f64..3.0) {
        let j = SpectralDensity::ohmic(alpha, s, 1.0).unwrap();
        let jb = thermalized_sd(&j, beta).unwrap();
        let lhs = jb.eval(-w);
        let rhs = (-beta * w).exp() * jb.eval(w);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1e-300));
        prop_assert!(jb.eval(w) >= j.eval(w));
    }

    #[test]
    fn chain_coefficients_are_consistent(n in 2usize..25, alpha in 0.01f64..1.0, s in 0.3f64..3.0,
                                         wc in 0.5f64..5.0) {
        let sd = SpectralDensity::ohmic(alpha, s, wc).unwrap();
        let cc = chaincoeffs_from_sd(&sd, n, None).unwrap();
        prop_assert_eq!(cc.len(), n);
        prop_assert!(cc.t.iter().all(|&t| t > 0.0));
        prop_assert!(cc.eps.iter().all(|&e| (0.0..=wc).contains(&e)));
        prop_assert!((cc.c0 * cc.c0 - sd.total_weight()).abs() < 1e-10 * sd.total_weight());
    }
}
