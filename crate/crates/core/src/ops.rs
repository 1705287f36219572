//! Local operator catalog.
//!
//! Spins use the `(up, down)` ordering with `sz = diag(1, -1)`. Bosonic modes
//! use occupation ordering `0, 1, ..., d-1`. A spinless fermion mode is the
//! `d = 2` space `(empty, occupied)`. A spinful fermion site is the `d = 4`
//! space `|0>, |up>, |down>, |up down>` with `|up down> = c_up^+ c_down^+ |0>`.

use nalgebra::DMatrix;

use crate::scalar::{Complex, LocalOp, Real};

fn from_rows<T: Real>(rows: &[&[(f64, f64)]]) -> LocalOp<T> {
    let n = rows.len();
    DMatrix::from_fn(n, n, |i, j| Complex::new(T::of(rows[i][j].0), T::of(rows[i][j].1)))
}

pub fn identity<T: Real>(d: usize) -> LocalOp<T> {
    DMatrix::identity(d, d)
}

pub fn zeros<T: Real>(d: usize) -> LocalOp<T> {
    DMatrix::zeros(d, d)
}

pub fn sx<T: Real>() -> LocalOp<T> {
    from_rows(&[&[(0.0, 0.0), (1.0, 0.0)], &[(1.0, 0.0), (0.0, 0.0)]])
}

pub fn sy<T: Real>() -> LocalOp<T> {
    from_rows(&[&[(0.0, 0.0), (0.0, -1.0)], &[(0.0, 1.0), (0.0, 0.0)]])
}

pub fn sz<T: Real>() -> LocalOp<T> {
    from_rows(&[&[(1.0, 0.0), (0.0, 0.0)], &[(0.0, 0.0), (-1.0, 0.0)]])
}

/// Projector on the up (first) spin state.
pub fn up_projector<T: Real>() -> LocalOp<T> {
    from_rows(&[&[(1.0, 0.0), (0.0, 0.0)], &[(0.0, 0.0), (0.0, 0.0)]])
}

/// Projector on the down (second) spin state.
pub fn down_projector<T: Real>() -> LocalOp<T> {
    from_rows(&[&[(0.0, 0.0), (0.0, 0.0)], &[(0.0, 0.0), (1.0, 0.0)]])
}

/// Truncated bosonic annihilation operator, `b|n> = sqrt(n)|n-1>`.
pub fn boson_annihilation<T: Real>(d: usize) -> LocalOp<T> {
    DMatrix::from_fn(d, d, |i, j| {
        if j == i + 1 {
            Complex::new(T::of((j as f64).sqrt()), T::zero())
        } else {
            Complex::new(T::zero(), T::zero())
        }
    })
}

pub fn boson_creation<T: Real>(d: usize) -> LocalOp<T> {
    boson_annihilation::<T>(d).adjoint()
}

/// Occupation number `diag(0, 1, ..., d-1)`.
pub fn number<T: Real>(d: usize) -> LocalOp<T> {
    DMatrix::from_fn(d, d, |i, j| {
        if i == j {
            Complex::new(T::of(i as f64), T::zero())
        } else {
            Complex::new(T::zero(), T::zero())
        }
    })
}

/// `b + b^+`.
pub fn boson_displacement<T: Real>(d: usize) -> LocalOp<T> {
    let b = boson_annihilation::<T>(d);
    &b + b.adjoint()
}

/// Spinless fermion annihilation on `(empty, occupied)`.
pub fn fermion_annihilation<T: Real>() -> LocalOp<T> {
    from_rows(&[&[(0.0, 0.0), (1.0, 0.0)], &[(0.0, 0.0), (0.0, 0.0)]])
}

/// Local fermion parity `(-1)^n` of a spinless mode.
pub fn fermion_parity<T: Real>() -> LocalOp<T> {
    sz()
}

/// Spin-up annihilation on a spinful site.
pub fn c_up<T: Real>() -> LocalOp<T> {
    let mut m = zeros::<T>(4);
    m[(0, 1)] = Complex::new(T::one(), T::zero());
    m[(2, 3)] = Complex::new(T::one(), T::zero());
    m
}

/// Spin-down annihilation on a spinful site; carries the sign of the up
/// occupation it has to pass.
pub fn c_down<T: Real>() -> LocalOp<T> {
    let mut m = zeros::<T>(4);
    m[(0, 2)] = Complex::new(T::one(), T::zero());
    m[(1, 3)] = Complex::new(-T::one(), T::zero());
    m
}

/// Parity `(-1)^(n_up + n_down)` of a spinful site.
pub fn spinful_parity<T: Real>() -> LocalOp<T> {
    let mut m = identity::<T>(4);
    m[(1, 1)] = Complex::new(-T::one(), T::zero());
    m[(2, 2)] = Complex::new(-T::one(), T::zero());
    m
}

/// Looks up a named operator for local dimension `d`.
///
/// Spin names (`sx`, `sy`, `sz`, `up`, `down`) need `d = 2`; bosonic names
/// (`n`, `b`, `bdag`, `x`) accept any `d`.
pub fn by_name<T: Real>(name: &str, d: usize) -> Option<LocalOp<T>> {
    let spin = |op: LocalOp<T>| if d == 2 { Some(op) } else { None };
    match name {
        "sx" => spin(sx()),
        "sy" => spin(sy()),
        "sz" => spin(sz()),
        "up" => spin(up_projector()),
        "down" => spin(down_projector()),
        "n" | "num" => Some(number(d)),
        "b" => Some(boson_annihilation(d)),
        "bdag" => Some(boson_creation(d)),
        "x" => Some(boson_displacement(d)),
        "id" => Some(identity(d)),
        _ => None,
    }
}

/// Names accepted by [`by_name`].
pub const CATALOG: &[&str] = &["sx", "sy", "sz", "up", "down", "n", "b", "bdag", "x", "id"];

#[cfg(test)]
mod tests {
    use super::*;

    type M = LocalOp<f64>;

    fn anticomm(a: &M, b: &M) -> M {
        a * b + b * a
    }

    #[test]
    fn pauli_algebra() {
        let (x, y, z) = (sx::<f64>(), sy::<f64>(), sz::<f64>());
        let i = Complex::new(0.0, 1.0);
        assert!((&x * &y - z.map(|v| v * i * 2.0) - &y * &x).norm() < 1e-15);
        assert!((&x * &x - identity::<f64>(2)).norm() < 1e-15);
    }

    #[test]
    fn boson_commutator_below_cutoff() {
        let d = 5;
        let b = boson_annihilation::<f64>(d);
        let comm = &b * b.adjoint() - b.adjoint() * &b;
        for k in 0..d - 1 {
            assert!((comm[(k, k)].re - 1.0).abs() < 1e-14);
        }
        assert!((b.adjoint() * &b - number::<f64>(d)).norm() < 1e-14);
    }

    #[test]
    fn spinful_site_anticommutes() {
        let (u, dn) = (c_up::<f64>(), c_down::<f64>());
        assert!(anticomm(&u, &dn).norm() < 1e-15);
        assert!(anticomm(&u, &dn.adjoint()).norm() < 1e-15);
        assert!((anticomm(&u, &u.adjoint()) - identity::<f64>(4)).norm() < 1e-15);
        assert!((anticomm(&dn, &dn.adjoint()) - identity::<f64>(4)).norm() < 1e-15);
        let p = spinful_parity::<f64>();
        assert!(anticomm(&p, &u).norm() < 1e-15);
    }
}
