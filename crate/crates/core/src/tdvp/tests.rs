use nalgebra::{DMatrix, DVector};

use super::*;
use crate::mpo::{mpo_to_dense, xyz_mpo, XyzParams};
use crate::mps::{full_rank_bounds, LocalState, SiteSelector};
use crate::ops;
use crate::testutil::random_tensor;

type C = Complex<f64>;

fn random_state(dims: &[usize], bond: usize, seed: u64) -> MatrixProductState<f64> {
    let bounds = full_rank_bounds(dims);
    let n = dims.len();
    let sites = (0..n)
        .map(|k| {
            let l = if k == 0 { 1 } else { bond.min(bounds[k - 1]) };
            let r = if k == n - 1 { 1 } else { bond.min(bounds[k]) };
            random_tensor(&[l, dims[k], r], seed * 17 + k as u64)
        })
        .collect();
    let psi = MatrixProductState::from_sites(sites).unwrap().canonicalize(0).unwrap();
    let nrm = psi.norm();
    let mut sites = psi.sites().to_vec();
    sites[0].scale_mut(C::new(1.0 / nrm, 0.0));
    MatrixProductState::from_sites(sites).unwrap().canonicalize(0).unwrap()
}

fn model(n: usize) -> MatrixProductOperator<f64> {
    xyz_mpo(n, &XyzParams { jx: 0.9, jy: 0.4, jz: -0.6, hx: 0.3, hz: 0.2 }).unwrap()
}

fn dense_propagate(h: &DMatrix<C>, v: &DVector<C>, t: f64) -> DVector<C> {
    let eig = nalgebra::SymmetricEigen::new(h.clone());
    let phases = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| C::new(0.0, -l * t).exp()));
    &eig.eigenvectors * phases * eig.eigenvectors.adjoint() * v
}

fn dense(psi: &MatrixProductState<f64>) -> DVector<C> {
    DVector::from_vec(psi.to_dense().unwrap().into_data())
}

fn fidelity(a: &DVector<C>, b: &DVector<C>) -> f64 {
    a.dotc(b).norm() / (a.norm() * b.norm())
}

#[test]
fn zero_hamiltonian_leaves_state_alone() {
    let psi = random_state(&[2, 2, 2], 2, 1);
    let zero = MatrixProductOperator::from_sites(
        model(3).sites().iter().map(|w| w.scale(C::new(0.0, 0.0))).collect(),
    )
    .unwrap();
    let out = tdvp1_step(&psi, &zero, 0.1, KrylovOptions::default()).unwrap();
    assert!((dense(&out) - dense(&psi)).norm() < 1e-14);
}

#[test]
fn full_rank_one_site_matches_dense_propagator() {
    let psi = random_state(&[2, 2], 2, 2);
    let mpo = model(2);
    let out = tdvp1_step(&psi, &mpo, 0.05, KrylovOptions::default()).unwrap();
    let want = dense_propagate(&mpo_to_dense(&mpo).unwrap(), &dense(&psi), 0.05);
    assert!((dense(&out) - want).norm() < 1e-10);
    assert!((out.norm() - 1.0).abs() < 1e-12);
}

#[test]
fn all_methods_agree_with_dense_evolution() {
    let dims = [2, 2, 2];
    let psi = random_state(&dims, 2, 3);
    let mpo = model(3);
    let h = mpo_to_dense(&mpo).unwrap();
    let want = dense_propagate(&h, &dense(&psi), 1.0);
    let dt = 0.02;
    let opts = KrylovOptions::default();
    let mut a = psi.clone();
    let mut b = psi.clone();
    let mut c = psi.clone();
    for _ in 0..50 {
        a = tdvp1_step(&a, &mpo, dt, opts).unwrap();
        b = tdvp2_step(&b, &mpo, dt, 0.0, 64, opts).unwrap().0;
        c = dtdvp_step(&c, &mpo, dt, 1e-10, 64, opts).unwrap().0;
    }
    for (name, s) in [("tdvp1", &a), ("tdvp2", &b), ("dtdvp", &c)] {
        let err = (dense(s) - &want).norm();
        assert!(err < 1e-7, "{name}: {err:e}");
    }
}

#[test]
fn tdvp2_grows_bonds_from_a_product_state() {
    let psi = MatrixProductState::<f64>::product_state(
        &[2; 4],
        &[LocalState::Basis(0), LocalState::Basis(1), LocalState::Basis(0), LocalState::Basis(1)],
    )
    .unwrap();
    let mpo = model(4);
    let (out, err) = tdvp2_step(&psi, &mpo, 0.1, 1e-12, 3, KrylovOptions::default()).unwrap();
    assert!(out.max_bond() > 1 && out.max_bond() <= 3);
    assert!(err < 1e-6);
    let want = dense_propagate(&mpo_to_dense(&mpo).unwrap(), &dense(&psi), 0.1);
    assert!(fidelity(&dense(&out), &want) > 1.0 - 1e-6);
}

#[test]
fn huge_growth_tolerance_is_plain_tdvp1() {
    let psi = random_state(&[2, 2, 2, 2], 2, 4);
    let mpo = model(4);
    let opts = KrylovOptions::default();
    let a = tdvp1_step(&psi, &mpo, 0.05, opts).unwrap();
    let (b, dims) = dtdvp_step(&psi, &mpo, 0.05, 1e30, 16, opts).unwrap();
    assert_eq!(dims, psi.bond_dims());
    assert!((dense(&a) - dense(&b)).norm() < 1e-13);
}

#[test]
fn dtdvp_expansion_keeps_norm_and_grows() {
    let psi = MatrixProductState::<f64>::product_state(&[2; 4], &vec![LocalState::Basis(0); 4]).unwrap();
    let mpo = model(4);
    let (out, dims) = dtdvp_step(&psi, &mpo, 0.1, 1e-8, 4, KrylovOptions::default()).unwrap();
    assert!(dims.iter().any(|&d| d > 1));
    assert!(dims.iter().all(|&d| d <= 4));
    assert!((out.norm() - 1.0).abs() < 1e-10);
}

#[test]
fn environments_are_consistent() {
    let psi = random_state(&[2, 2, 2], 2, 5).canonicalize(1).unwrap();
    let mpo = model(3);
    let env = SweepEnvironments::new(&psi, &mpo).unwrap();
    let e = env.energy_at(&psi, &mpo, 1).unwrap();
    assert!((e - mpo_expectation(&psi, &mpo).unwrap()).norm() < 1e-12);
}

#[test]
fn evolve_checks_inputs_and_records() {
    let psi = MatrixProductState::<f64>::product_state(&[2; 3], &vec![LocalState::Basis(0); 3]).unwrap();
    let mpo = model(3);
    let sz = Observable::one_site("sz", ops::sz(), SiteSelector::Range { start: 0, end: 2 });
    let opts = EvolveOptions { rdm_sites: vec![0], ..Default::default() };
    let m = EvolutionMethod::Tdvp1 { d: 2 };
    let mut quiet = |_: usize, _: usize| {};
    assert!(matches!(
        evolve(&psi, &mpo, 0.1, 0.2, &m, std::slice::from_ref(&sz), None, &opts, &mut quiet),
        Err(Error::BondMismatch { bond: 0, have: 1, expected: 2 })
    ));
    let big = psi.enlarge_bonds(2).unwrap();
    assert!(evolve(&big, &mpo, 0.3, 1.0, &m, std::slice::from_ref(&sz), None, &opts, &mut quiet).is_err());
    let rec = evolve(&big, &mpo, 0.1, 0.0, &m, std::slice::from_ref(&sz), None, &opts, &mut quiet).unwrap();
    assert_eq!(rec.times, vec![0.0]);
    let rec = evolve(&big, &mpo, 0.1, 0.5, &m, &[sz], None, &opts, &mut quiet).unwrap();
    assert_eq!(rec.times.len(), 6);
    assert_eq!(rec.observables[0].values[0].len(), 3);
    assert!(rec.norm.iter().all(|n| (n - 1.0).abs() < 1e-10));
    let e0 = rec.energy[0];
    assert!(rec.energy.iter().all(|e| (e - e0).abs() < 1e-9));
    assert_eq!(rec.rdms[0].values.len(), 6);
}

#[test]
fn constant_drive_equals_folded_hamiltonian() {
    let psi = random_state(&[2, 2, 2], 2, 8);
    let mpo = model(3);
    let drive = ops::sx::<f64>() * C::new(0.25, 0.0);
    let folded = mpo.with_onsite_term(0, &drive).unwrap();
    let td = TimeDependentTerm { site: 0, ops: vec![drive; 10] };
    let m = EvolutionMethod::Tdvp1 { d: 2 };
    let obs = [Observable::one_site("sz", ops::sz(), SiteSelector::Single(0))];
    let opts = EvolveOptions::default();
    let mut quiet = |_: usize, _: usize| {};
    let a = evolve(&psi, &mpo, 0.05, 0.5, &m, &obs, Some(&td), &opts, &mut quiet).unwrap();
    let b = evolve(&psi, &folded, 0.05, 0.5, &m, &obs, None, &opts, &mut quiet).unwrap();
    for (x, y) in a.observables[0].values.iter().zip(&b.observables[0].values) {
        assert!((x[0] - y[0]).norm() < 1e-10);
    }
    for (x, y) in a.energy.iter().zip(&b.energy) {
        assert!((x - y).abs() < 1e-10);
    }
}

#[test]
fn dephasing_conserves_population() {
    let chain = crate::chain::chaincoeffs_ohmic_analytic(3, 0.2, 1.0, 1.0).unwrap();
    let mpo = crate::mpo::puredephasing_mpo::<f64>(0.4, 4, 3, &chain).unwrap();
    let tilted = LocalState::normalized(vec![C::new(0.8, 0.0), C::new(0.0, 0.6)]).unwrap();
    let mut states = vec![tilted];
    states.extend(vec![LocalState::Basis(0); 3]);
    let psi = MatrixProductState::product_state(&[2, 4, 4, 4], &states).unwrap().enlarge_bonds(4).unwrap();
    let obs = [Observable::one_site("sz", ops::sz(), SiteSelector::Single(0))];
    let m = EvolutionMethod::Tdvp1 { d: 4 };
    let rec = evolve(&psi, &mpo, 0.05, 5.0, &m, &obs, None, &EvolveOptions::default(), &mut |_, _| {}).unwrap();
    let z0 = rec.observables[0].values[0][0].re;
    assert!((z0 - 0.28).abs() < 1e-12);
    let drift = rec.observables[0].values.iter().map(|v| (v[0].re - z0).abs()).fold(0.0, f64::max);
    assert!(drift < 1e-9, "{drift:e}");
}

#[test]
fn onsite_hamiltonian_does_not_entangle() {
    let sites: Vec<_> = (0..4)
        .map(|k| crate::mpo::BlockSpec::onsite(ops::sx::<f64>() * C::new(0.3 + 0.1 * k as f64, 0.0)))
        .collect();
    let mpo = crate::mpo::mpo_from_blocks(&sites).unwrap();
    let psi = MatrixProductState::<f64>::product_state(&[2; 4], &vec![LocalState::Basis(0); 4]).unwrap();
    let opts = KrylovOptions::default();
    let (b, _) = tdvp2_step(&psi, &mpo, 0.1, 1e-14, 8, opts).unwrap();
    let a = tdvp1_step(&psi, &mpo, 0.1, opts).unwrap();
    assert_eq!(b.bond_dims(), vec![1, 1, 1]);
    assert!((dense(&a) - dense(&b)).norm() < 1e-12);
}

#[test]
fn xy_quench_grows_bonds_monotonically() {
    let p = XyzParams { jx: 1.0, jy: 1.0, jz: 0.0, hx: 0.0, hz: 0.0 };
    let mpo = xyz_mpo::<f64>(6, &p).unwrap();
    let states: Vec<_> = (0..6).map(|k| LocalState::Basis(k % 2)).collect();
    let mut psi = MatrixProductState::<f64>::product_state(&[2; 6], &states).unwrap();
    let mut prev = psi.bond_dims();
    for _ in 0..40 {
        psi = tdvp2_step(&psi, &mpo, 0.05, 1e-12, 6, KrylovOptions::default()).unwrap().0;
        let now = psi.bond_dims();
        assert!(now.iter().zip(&prev).all(|(n, p)| n >= p), "{prev:?} -> {now:?}");
        prev = now;
    }
    assert!(prev.iter().any(|&d| d > 1));
}
