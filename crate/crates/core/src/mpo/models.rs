//! Built-in model Hamiltonians.
//!
//! Chain models put the system on site 0 followed by the chain modes in
//! ascending order. Fermionic models use a Jordan-Wigner encoding with the
//! sites ordered left to right.

use nalgebra::DMatrix;

use super::{mpo_from_blocks, BlockSpec, MatrixProductOperator};
use crate::chain::ChainCoefficients;
use crate::error::{Error, Result};
use crate::ops;
use crate::scalar::{Complex, LocalOp, Real};

fn sc<T: Real>(x: f64, m: &LocalOp<T>) -> LocalOp<T> {
    m * Complex::new(T::of(x), T::zero())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct XyzParams {
    pub jx: f64,
    pub jy: f64,
    pub jz: f64,
    pub hx: f64,
    pub hz: f64,
}

/// `sum_i (Jx X_i X_{i+1} + Jy Y_i Y_{i+1} + Jz Z_i Z_{i+1}) + sum_i (hx X_i + hz Z_i)`
/// with Pauli matrices; MPO bond dimension 5.
pub fn xyz_mpo<T: Real>(n: usize, p: &XyzParams) -> Result<MatrixProductOperator<T>> {
    if n < 2 {
        return Err(Error::Param("the XYZ chain needs at least two sites".into()));
    }
    let (x, y, z) = (ops::sx::<T>(), ops::sy::<T>(), ops::sz::<T>());
    let block = BlockSpec {
        a: Vec::new(),
        b: vec![x.clone(), y.clone(), z.clone()],
        c: vec![sc(p.jx, &x), sc(p.jy, &y), sc(p.jz, &z)],
        d: sc(p.hx, &x) + sc(p.hz, &z),
    };
    mpo_from_blocks(&vec![block; n])
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HubbardParams {
    pub t: f64,
    pub u: f64,
    /// On-site energy per electron.
    pub eps_d: f64,
}

/// Spinful Hubbard chain
/// `-t sum_{i,s} (c_{i s}^+ c_{i+1 s} + h.c.) + U sum_i n_{i up} n_{i down} + eps_d sum_i n_i`
/// on `d = 4` sites (`|0>, |up>, |down>, |up down>`); MPO bond dimension 6.
pub fn hubbard_mpo<T: Real>(n: usize, p: &HubbardParams) -> Result<MatrixProductOperator<T>> {
    if n < 2 {
        return Err(Error::Param("the Hubbard chain needs at least two sites".into()));
    }
    let (cu, cd, par) = (ops::c_up::<T>(), ops::c_down::<T>(), ops::spinful_parity::<T>());
    let (nu, nd) = (cu.adjoint() * &cu, cd.adjoint() * &cd);
    // c_i^+ c_j = (c^+ P)_i (c)_j and c_j^+ c_i = (P c)_i (c^+)_j for j = i + 1
    let c = vec![
        sc(-p.t, &(cu.adjoint() * &par)),
        sc(-p.t, &(cd.adjoint() * &par)),
        sc(-p.t, &(&par * &cu)),
        sc(-p.t, &(&par * &cd)),
    ];
    let b = vec![cu.clone(), cd.clone(), cu.adjoint(), cd.adjoint()];
    let d = sc(p.u, &(&nu * &nd)) + sc(p.eps_d, &(&nu + &nd));
    mpo_from_blocks(&vec![BlockSpec { a: Vec::new(), b, c, d }; n])
}

fn check_chain(chain: &ChainCoefficients, n: usize) -> Result<()> {
    chain.validate()?;
    if n == 0 {
        return Err(Error::Param("chain needs at least one mode".into()));
    }
    if chain.len() < n {
        return Err(Error::Param(format!(
            "chain has {} modes but {n} were requested",
            chain.len()
        )));
    }
    Ok(())
}

/// Blocks of bosonic chain modes `0..n`, mode 0 closing `first_b`.
fn boson_chain_blocks<T: Real>(
    d: usize,
    n: usize,
    chain: &ChainCoefficients,
    first_b: LocalOp<T>,
) -> Vec<BlockSpec<T>> {
    let b = ops::boson_annihilation::<T>(d);
    let bd = b.adjoint();
    let num = ops::number::<T>(d);
    (0..n)
        .map(|k| BlockSpec {
            a: Vec::new(),
            b: if k == 0 { vec![first_b.clone()] } else { vec![b.clone(), bd.clone()] },
            c: if k + 1 < n {
                vec![sc(chain.t[k], &bd), sc(chain.t[k], &b)]
            } else {
                Vec::new()
            },
            d: sc(chain.eps[k], &num),
        })
        .collect()
}

/// `dE/2 sz + c0 sz/2 (b_0 + b_0^+) + sum_n eps_n b_n^+ b_n + sum_n t_n (b_n^+ b_{n+1} + h.c.)`
/// with the two-level system on site 0 and `n` chain modes of dimension `d`.
pub fn puredephasing_mpo<T: Real>(
    delta_e: f64,
    d: usize,
    n: usize,
    chain: &ChainCoefficients,
) -> Result<MatrixProductOperator<T>> {
    check_chain(chain, n)?;
    if d < 2 {
        return Err(Error::Param("bosonic local dimension must be at least 2".into()));
    }
    let z = ops::sz::<T>();
    let mut blocks = vec![BlockSpec {
        a: Vec::new(),
        b: Vec::new(),
        c: vec![sc(chain.c0 / 2.0, &z)],
        d: sc(delta_e / 2.0, &z),
    }];
    blocks.extend(boson_chain_blocks(d, n, chain, ops::boson_displacement(d)));
    mpo_from_blocks(&blocks)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpinBosonParams {
    pub omega0: f64,
    pub delta: f64,
}

/// `w0/2 sz + Delta sx + c0 sx (b_0 + b_0^+) + chain`.
pub fn spinboson_mpo<T: Real>(
    p: &SpinBosonParams,
    d: usize,
    n: usize,
    chain: &ChainCoefficients,
) -> Result<MatrixProductOperator<T>> {
    check_chain(chain, n)?;
    if d < 2 {
        return Err(Error::Param("bosonic local dimension must be at least 2".into()));
    }
    let (x, z) = (ops::sx::<T>(), ops::sz::<T>());
    let mut blocks = vec![BlockSpec {
        a: Vec::new(),
        b: Vec::new(),
        c: vec![sc(chain.c0, &x)],
        d: sc(p.omega0 / 2.0, &z) + sc(p.delta, &x),
    }];
    blocks.extend(boson_chain_blocks(d, n, chain, ops::boson_displacement(d)));
    mpo_from_blocks(&blocks)
}

/// Single-particle matrix of the resonant-level model in the site order used
/// by [`tightbinding_mpo`]: filled lead reversed, impurity, empty lead.
pub fn tightbinding_single_particle(
    n: usize,
    eps_d: f64,
    chain_empty: &ChainCoefficients,
    chain_filled: &ChainCoefficients,
) -> Result<DMatrix<f64>> {
    check_chain(chain_empty, n)?;
    check_chain(chain_filled, n)?;
    let size = 2 * n + 1;
    let imp = n;
    let mut h = DMatrix::zeros(size, size);
    h[(imp, imp)] = eps_d;
    // filled mode k sits at imp - 1 - k, empty mode k at imp + 1 + k
    for k in 0..n {
        h[(imp - 1 - k, imp - 1 - k)] = chain_filled.eps[k];
        h[(imp + 1 + k, imp + 1 + k)] = chain_empty.eps[k];
        if k + 1 < n {
            let (a, b) = (imp - 1 - k, imp - 2 - k);
            h[(a, b)] = chain_filled.t[k];
            h[(b, a)] = chain_filled.t[k];
            let (a, b) = (imp + 1 + k, imp + 2 + k);
            h[(a, b)] = chain_empty.t[k];
            h[(b, a)] = chain_empty.t[k];
        }
    }
    h[(imp, imp - 1)] = chain_filled.c0;
    h[(imp - 1, imp)] = chain_filled.c0;
    h[(imp, imp + 1)] = chain_empty.c0;
    h[(imp + 1, imp)] = chain_empty.c0;
    Ok(h)
}

/// Resonant level between a filled and an empty fermionic chain,
/// `sum_ij h_ij c_i^+ c_j` with `h` from [`tightbinding_single_particle`],
/// on `2 n + 1` spinless sites.
pub fn tightbinding_mpo<T: Real>(
    n: usize,
    eps_d: f64,
    chain_empty: &ChainCoefficients,
    chain_filled: &ChainCoefficients,
) -> Result<MatrixProductOperator<T>> {
    let h = tightbinding_single_particle(n, eps_d, chain_empty, chain_filled)?;
    let size = h.nrows();
    let (c, p) = (ops::fermion_annihilation::<T>(), ops::fermion_parity::<T>());
    let cd = c.adjoint();
    let num = &cd * &c;
    let blocks = (0..size)
        .map(|i| {
            let hop = if i + 1 < size { h[(i, i + 1)] } else { 0.0 };
            BlockSpec {
                a: Vec::new(),
                b: if i > 0 { vec![c.clone(), cd.clone()] } else { Vec::new() },
                c: if i + 1 < size {
                    vec![sc(hop, &(&cd * &p)), sc(hop, &(&p * &c))]
                } else {
                    Vec::new()
                },
                d: sc(h[(i, i)], &num),
            }
        })
        .collect::<Vec<_>>();
    mpo_from_blocks(&blocks)
}

/// Parameters of the enol/keto proton-transfer model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProtonTransferParams {
    pub omega0_e: f64,
    pub omega0_k: f64,
    pub delta: f64,
    pub omega_rc: f64,
    pub g_e: f64,
    pub g_k: f64,
    pub lambda_reorg: f64,
}

impl ProtonTransferParams {
    /// Derives the displacement couplings from the well positions `x0_e`,
    /// `x0_k` (in units of the oscillator length): a term `g (d + d^+)` shifts
    /// the minimum of `w_RC (d^+ d + 1/2)` to `x = -sqrt(2) g / w_RC`, so
    /// `g = -w_RC x0 / sqrt(2)`. The RC frequency is the first on-site energy
    /// of `chain_rc`.
    pub fn with_wells(
        omega0_e: f64,
        omega0_k: f64,
        x0_e: f64,
        x0_k: f64,
        delta: f64,
        chain_rc: &ChainCoefficients,
        lambda_reorg: f64,
    ) -> Self {
        let omega_rc = chain_rc.eps[0];
        let g = |x0: f64| -omega_rc * x0 / std::f64::consts::SQRT_2;
        Self {
            omega0_e,
            omega0_k,
            delta,
            omega_rc,
            g_e: g(x0_e),
            g_k: g(x0_k),
            lambda_reorg,
        }
    }
}

/// Two-level system (site 0, `|e>` first) coupled to a reaction-coordinate
/// mode (site 1, dimension `d_rc`) that is in turn coupled to a bosonic chain.
///
/// ```text
/// H = w_e |e><e| + w_k |k><k| + Delta sx
///   + w_RC (d^+ d + 1/2) + (g_e |e><e| + g_k |k><k|)(d + d^+) + lambda (d + d^+)^2
///   - c0 (d + d^+)(b_0 + b_0^+) + chain
/// ```
pub fn protontransfer_mpo<T: Real>(
    p: &ProtonTransferParams,
    d_rc: usize,
    d: usize,
    n: usize,
    chain: &ChainCoefficients,
) -> Result<MatrixProductOperator<T>> {
    check_chain(chain, n)?;
    if d_rc < 2 || d < 2 {
        return Err(Error::Param("bosonic local dimensions must be at least 2".into()));
    }
    let (up, down, x) = (ops::up_projector::<T>(), ops::down_projector::<T>(), ops::sx::<T>());
    let q = ops::boson_displacement::<T>(d_rc);
    let rc_onsite = sc(p.omega_rc, &(ops::number::<T>(d_rc) + sc(0.5, &ops::identity(d_rc))))
        + sc(p.lambda_reorg, &(&q * &q));
    let mut blocks = vec![
        BlockSpec {
            a: Vec::new(),
            b: Vec::new(),
            c: vec![sc(p.g_e, &up) + sc(p.g_k, &down)],
            d: sc(p.omega0_e, &up) + sc(p.omega0_k, &down) + sc(p.delta, &x),
        },
        BlockSpec {
            a: Vec::new(),
            b: vec![q.clone()],
            c: vec![sc(-chain.c0, &q)],
            d: rc_onsite,
        },
    ];
    blocks.extend(boson_chain_blocks(d, n, chain, ops::boson_displacement(d)));
    mpo_from_blocks(&blocks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::chaincoeffs_ohmic_analytic;
    use crate::mpo::mpo_to_dense;
    use crate::mpo::tests::embed;

    type M = LocalOp<f64>;

    fn comm(a: &M, b: &M) -> f64 {
        (a * b - b * a).norm()
    }

    #[test]
    fn xyz_small_cases() {
        let p = XyzParams { jx: 1.0, jy: 0.0, jz: 0.0, hx: 0.0, hz: 0.0 };
        let h = mpo_to_dense(&xyz_mpo::<f64>(2, &p).unwrap()).unwrap();
        assert!((h - ops::sx::<f64>().kronecker(&ops::sx())).norm() < 1e-15);
        let p = XyzParams { jx: 0.8, jy: 0.8, jz: -0.3, hx: 0.0, hz: 0.5 };
        let mpo = xyz_mpo::<f64>(4, &p).unwrap();
        assert_eq!(mpo.bond_dims(), vec![5, 5, 5]);
        let h = mpo_to_dense(&mpo).unwrap();
        let dims = [2; 4];
        let total_z = (0..4).fold(DMatrix::zeros(16, 16), |acc: M, k| acc + embed(&[(k, ops::sz())], &dims));
        assert!(comm(&h, &total_z) < 1e-13);
    }

    #[test]
    fn hubbard_two_site_limits() {
        let h0 = mpo_to_dense(&hubbard_mpo::<f64>(2, &HubbardParams { t: 0.0, u: 2.0, eps_d: 0.0 }).unwrap()).unwrap();
        let nn = ops::c_up::<f64>().adjoint() * ops::c_up() * ops::c_down::<f64>().adjoint() * ops::c_down();
        let want = embed(&[(0, nn.clone())], &[4, 4]) * Complex::new(2.0, 0.0) + embed(&[(1, nn)], &[4, 4]) * Complex::new(2.0, 0.0);
        assert!((h0 - want).norm() < 1e-14);
        let mpo = hubbard_mpo::<f64>(2, &HubbardParams { t: 1.0, u: 0.0, eps_d: 0.0 }).unwrap();
        assert_eq!(mpo.bond_dims(), vec![6]);
        let h = mpo_to_dense(&mpo).unwrap();
        let eig = nalgebra::SymmetricEigen::new(h.clone());
        // one-particle sector: basis states with a single electron
        let one: Vec<usize> = (0..16)
            .filter(|i| {
                let occ = |s: usize| [0, 1, 1, 2][s];
                occ(i / 4) + occ(i % 4) == 1
            })
            .collect();
        let sub = DMatrix::from_fn(one.len(), one.len(), |a, b| h[(one[a], one[b])]);
        let e1 = nalgebra::SymmetricEigen::new(sub).eigenvalues;
        assert!((e1.iter().cloned().fold(f64::INFINITY, f64::min) + 1.0).abs() < 1e-13);
        assert!(eig.eigenvalues.iter().all(|e| e.is_finite()));
    }

    #[test]
    fn puredephasing_commutes_with_system_sz() {
        let chain = chaincoeffs_ohmic_analytic(2, 0.1, 1.0, 1.0).unwrap();
        let h = mpo_to_dense(&puredephasing_mpo::<f64>(0.3, 3, 2, &chain).unwrap()).unwrap();
        assert!((&h - h.adjoint()).norm() < 1e-13);
        let z = embed(&[(0, ops::sz())], &[2, 3, 3]);
        assert!(comm(&h, &z) < 1e-13);
    }

    #[test]
    fn puredephasing_without_coupling_is_block_diagonal() {
        let mut chain = chaincoeffs_ohmic_analytic(1, 0.1, 1.0, 1.0).unwrap();
        chain.c0 = 0.0;
        let h = mpo_to_dense(&puredephasing_mpo::<f64>(0.3, 3, 1, &chain).unwrap()).unwrap();
        let want = embed(&[(0, ops::sz::<f64>() * Complex::new(0.15, 0.0))], &[2, 3])
            + embed(&[(1, ops::number::<f64>(3) * Complex::new(chain.eps[0], 0.0))], &[2, 3]);
        assert!((h - want).norm() < 1e-15);
    }

    #[test]
    fn spinboson_reduces_to_free_chain() {
        let mut chain = chaincoeffs_ohmic_analytic(3, 0.1, 1.0, 1.0).unwrap();
        chain.c0 = 0.0;
        let p = SpinBosonParams { omega0: 0.0, delta: 0.0 };
        let h = mpo_to_dense(&spinboson_mpo::<f64>(&p, 3, 3, &chain).unwrap()).unwrap();
        let ground = nalgebra::SymmetricEigen::new(h).eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        // free bosons with positive single-particle spectrum: ground energy 0
        let sp = DMatrix::from_fn(3, 3, |i, j| {
            if i == j {
                chain.eps[i]
            } else if i + 1 == j || j + 1 == i {
                chain.t[i.min(j)]
            } else {
                0.0
            }
        });
        let lowest = nalgebra::SymmetricEigen::new(sp).eigenvalues.min();
        assert!(lowest > 0.0);
        assert!(ground.abs() < 1e-13);
    }

    #[test]
    fn tightbinding_conserves_particle_number() {
        let empty = chaincoeffs_ohmic_analytic(2, 0.1, 1.0, 1.0).unwrap();
        let filled = chaincoeffs_ohmic_analytic(2, 0.2, 0.5, 1.0).unwrap();
        let h = mpo_to_dense(&tightbinding_mpo::<f64>(2, 0.1, &empty, &filled).unwrap()).unwrap();
        let dims = [2; 5];
        let num = ops::fermion_annihilation::<f64>().adjoint() * ops::fermion_annihilation();
        let total = (0..5).fold(DMatrix::zeros(32, 32), |acc: M, k| acc + embed(&[(k, num.clone())], &dims));
        assert!(comm(&h, &total) < 1e-13);
        assert!((&h - h.adjoint()).norm() < 1e-14);
    }

    #[test]
    fn protontransfer_symmetric_limit() {
        let chain = chaincoeffs_ohmic_analytic(1, 0.1, 1.0, 1.0).unwrap();
        let p = ProtonTransferParams {
            omega0_e: 0.2,
            omega0_k: -0.1,
            delta: 0.0,
            omega_rc: 0.5,
            g_e: 0.3,
            g_k: 0.3,
            lambda_reorg: 0.05,
        };
        let h = mpo_to_dense(&protontransfer_mpo::<f64>(&p, 3, 3, 1, &chain).unwrap()).unwrap();
        assert!((&h - h.adjoint()).norm() < 1e-13);
        let pe = embed(&[(0, ops::up_projector())], &[2, 3, 3]);
        assert!(comm(&h, &pe) < 1e-13);
    }

    #[test]
    fn well_positions_map_to_couplings() {
        let rc = chaincoeffs_ohmic_analytic(2, 0.1, 1.0, 1.0).unwrap();
        let p = ProtonTransferParams::with_wells(0.0, 0.1, -1.0, 2.0, 0.05, &rc, 0.01);
        assert_eq!(p.omega_rc, rc.eps[0]);
        assert!((p.g_e - rc.eps[0] / 2f64.sqrt()).abs() < 1e-15);
        assert!((p.g_k + 2.0 * rc.eps[0] / 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn mismatched_chain_is_rejected() {
        let chain = chaincoeffs_ohmic_analytic(2, 0.1, 1.0, 1.0).unwrap();
        assert!(puredephasing_mpo::<f64>(0.3, 3, 3, &chain).is_err());
        assert!(tightbinding_mpo::<f64>(3, 0.0, &chain, &chain).is_err());
    }
}
