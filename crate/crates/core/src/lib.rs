//! Finite-temperature open-quantum-system dynamics on matrix product states.
//!
//! The crate is organised bottom-up:
//!
//! * [`tensor`]: dense complex tensors, contraction, truncated SVD, QR and a
//!   Lanczos propagator for `exp(z H) v`.
//! * [`mps`]: matrix product states, canonical forms and measurements.
//! * [`mpo`]: matrix product operators, the block-recurrence assembler and the
//!   built-in model Hamiltonians.
//! * [`chain`]: spectral densities, thermalisation, orthogonal-polynomial
//!   chain coefficients and the chain-to-mode transform.
//! * [`tdvp`]: one-site, two-site and bond-adaptive TDVP time evolution.
//!
//! Numerical code is generic over the real scalar type ([`Real`], implemented
//! for `f32` and `f64`). The aliases at the crate root pin the common `f64`
//! instantiation. Chain mapping works in `f64` throughout; coefficients are
//! converted when an MPO is built for another scalar type.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chain;
pub mod error;
pub mod mpo;
pub mod mps;
pub mod ops;
pub mod scalar;
pub mod tdvp;
pub mod tensor;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
pub use scalar::{Complex, LocalOp, Real};

/// Double-precision dense tensor.
pub type Tensor = tensor::DenseTensor<f64>;
/// Double-precision matrix product state.
pub type Mps = mps::MatrixProductState<f64>;
/// Double-precision matrix product operator.
pub type Mpo = mpo::MatrixProductOperator<f64>;
/// Double-precision local operator (a `d x d` complex matrix).
pub type Op = LocalOp<f64>;
/// Double-precision complex number.
pub type C64 = Complex<f64>;

/// Single-precision dense tensor.
pub type Tensor32 = tensor::DenseTensor<f32>;
/// Single-precision matrix product state.
pub type Mps32 = mps::MatrixProductState<f32>;
/// Single-precision matrix product operator.
pub type Mpo32 = mpo::MatrixProductOperator<f32>;
