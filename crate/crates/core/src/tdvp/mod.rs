//! Time evolution on the MPS manifold.
//!
//! Three integrators share one symmetric sweep pattern (left to right, then
//! right to left, half a step each way):
//!
//! * one-site TDVP at fixed bond dimension,
//! * two-site TDVP with SVD truncation,
//! * one-site TDVP preceded by bond expansion where the state leaves the
//!   one-site tangent space.

mod env;
mod sweep;

pub use env::SweepEnvironments;
pub use sweep::{dtdvp_step, tdvp1_step, tdvp2_step};

use crate::error::{Error, Result};
use crate::mpo::{mpo_expectation, MatrixProductOperator};
use crate::mps::{
    expect_one_site, expect_two_site, full_rank_bounds, reduced_density_matrix,
    MatrixProductState, Observable, ObservableKind,
};
use crate::scalar::{is_hermitian, Complex, LocalOp, Real};
use crate::tensor::KrylovOptions;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EvolutionMethod<T> {
    /// One-site TDVP; every bond must already equal `min(d, full rank)`.
    Tdvp1 { d: usize },
    /// Two-site TDVP truncating to relative weight `trunc_tol` and at most
    /// `d_max` states.
    Tdvp2 { trunc_tol: T, d_max: usize },
    /// One-site TDVP with bond growth when `dt` times the projection error
    /// exceeds `growth_tol`.
    Dtdvp { growth_tol: T, d_max: usize },
}

impl<T: Real> EvolutionMethod<T> {
    pub fn validate(&self) -> Result<()> {
        let (d, tol) = match *self {
            EvolutionMethod::Tdvp1 { d } => (d, None),
            EvolutionMethod::Tdvp2 { trunc_tol, d_max } => (d_max, Some(trunc_tol)),
            EvolutionMethod::Dtdvp { growth_tol, d_max } => (d_max, Some(growth_tol)),
        };
        if d == 0 {
            return Err(Error::Param("bond dimension must be at least 1".into()));
        }
        if let Some(t) = tol {
            if !(t >= T::zero()) {
                return Err(Error::Param(format!("tolerance must be nonnegative, got {t}")));
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self {
            EvolutionMethod::Tdvp1 { .. } => "tdvp1",
            EvolutionMethod::Tdvp2 { .. } => "tdvp2",
            EvolutionMethod::Dtdvp { .. } => "dtdvp",
        }
    }
}

/// A local operator added to one site, piecewise constant over each step.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeDependentTerm<T: Real> {
    pub site: usize,
    /// One operator per step.
    pub ops: Vec<LocalOp<T>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvolveOptions<T> {
    pub krylov: KrylovOptions<T>,
    /// Sites whose reduced density matrix is recorded at every time.
    pub rdm_sites: Vec<usize>,
}

impl<T: Real> Default for EvolveOptions<T> {
    fn default() -> Self {
        Self {
            krylov: KrylovOptions::default(),
            rdm_sites: Vec::new(),
        }
    }
}

/// Time series of one observable. Each entry holds the values on the
/// selected sites (one-site) or the row-major flattened pair matrix
/// (two-site).
#[derive(Clone, Debug, PartialEq)]
pub struct ObservableSeries<T: Real> {
    pub name: String,
    pub sites: Vec<usize>,
    pub two_site: bool,
    pub values: Vec<Vec<Complex<T>>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RdmSeries<T: Real> {
    pub site: usize,
    pub values: Vec<LocalOp<T>>,
}

/// Everything recorded by [`evolve`].
#[derive(Clone, Debug)]
pub struct EvolutionRecord<T: Real> {
    pub times: Vec<T>,
    pub observables: Vec<ObservableSeries<T>>,
    pub norm: Vec<T>,
    pub energy: Vec<T>,
    pub bond_dims: Vec<Vec<usize>>,
    /// Largest truncation error of each step (zero for the unitary methods).
    pub trunc_error: Vec<T>,
    pub rdms: Vec<RdmSeries<T>>,
    pub final_state: MatrixProductState<T>,
}

impl<T: Real> EvolutionRecord<T> {
    pub fn observable(&self, name: &str) -> Option<&ObservableSeries<T>> {
        self.observables.iter().find(|o| o.name == name)
    }
}

/// Number of steps `K` with `K dt = t_final` to within 1e-12.
pub fn step_count<T: Real>(dt: T, t_final: T) -> Result<usize> {
    let (dt, tf) = (dt.as_f64(), t_final.as_f64());
    if !(dt > 0.0 && dt.is_finite()) || !(tf >= 0.0 && tf.is_finite()) {
        return Err(Error::Param(format!("need dt > 0 and t_final >= 0, got dt={dt}, t_final={tf}")));
    }
    let k = (tf / dt).round();
    if (k * dt - tf).abs() > 1e-12 * tf.max(1.0) {
        return Err(Error::Param(format!(
            "t_final = {tf} is not an integer multiple of dt = {dt}"
        )));
    }
    Ok(k as usize)
}

/// Checks that every bond equals `min(d, full-rank bound)`.
pub fn check_fixed_bonds<T: Real>(psi: &MatrixProductState<T>, d: usize) -> Result<()> {
    let bounds = full_rank_bounds(&psi.local_dims());
    for (bond, (&have, &bound)) in psi.bond_dims().iter().zip(&bounds).enumerate() {
        let expected = d.min(bound);
        if have != expected {
            return Err(Error::BondMismatch { bond, have, expected });
        }
    }
    Ok(())
}

fn measure<T: Real>(
    psi: &MatrixProductState<T>,
    obs: &[Observable<T>],
    out: &mut [ObservableSeries<T>],
    rdms: &mut [RdmSeries<T>],
) -> Result<()> {
    for (o, series) in obs.iter().zip(out.iter_mut()) {
        let v = match &o.kind {
            ObservableKind::OneSite { .. } => expect_one_site(psi, o)?,
            ObservableKind::TwoSite { .. } => {
                let m = expect_two_site(psi, o)?;
                // row-major flattening
                m.transpose().iter().copied().collect()
            }
        };
        series.values.push(v);
    }
    for r in rdms.iter_mut() {
        r.values.push(reduced_density_matrix(psi, r.site)?);
    }
    Ok(())
}

/// Evolves `psi0` to `t_final` in steps of `dt`, measuring at `t = 0` and
/// after every step.
///
/// With a time-dependent term, step `k` uses `mpo` plus `td.ops[k]` on
/// `td.site`, and the energy recorded after step `k` refers to that same
/// Hamiltonian (at `t = 0`, to the first step's). `progress` is called with
/// `(step, total_steps)` after every step.
#[allow(clippy::too_many_arguments)]
pub fn evolve<T: Real>(
    psi0: &MatrixProductState<T>,
    mpo: &MatrixProductOperator<T>,
    dt: T,
    t_final: T,
    method: &EvolutionMethod<T>,
    observables: &[Observable<T>],
    td: Option<&TimeDependentTerm<T>>,
    opts: &EvolveOptions<T>,
    progress: &mut dyn FnMut(usize, usize),
) -> Result<EvolutionRecord<T>> {
    method.validate()?;
    let steps = step_count(dt, t_final)?;
    let dims = psi0.local_dims();
    if dims != mpo.local_dims() {
        return Err(Error::Shape(format!(
            "state local dims {dims:?} differ from operator local dims {:?}",
            mpo.local_dims()
        )));
    }
    for o in observables {
        o.validate(&dims)?;
    }
    if let Some(&s) = opts.rdm_sites.iter().find(|&&s| s >= dims.len()) {
        return Err(Error::Observable(format!("density-matrix site {s} outside the chain")));
    }
    if let Some(td) = td {
        if td.site >= dims.len() {
            return Err(Error::Param(format!("drive site {} outside the chain", td.site)));
        }
        if td.ops.len() != steps {
            return Err(Error::Param(format!(
                "time-dependent term has {} operators for {steps} steps",
                td.ops.len()
            )));
        }
        let d = dims[td.site];
        for (k, op) in td.ops.iter().enumerate() {
            if op.nrows() != d || op.ncols() != d || !is_hermitian(op, T::of(1e-12)) {
                return Err(Error::Param(format!(
                    "time-dependent operator {k} is not a Hermitian {d}x{d} matrix"
                )));
            }
        }
    }
    if let EvolutionMethod::Tdvp1 { d } = method {
        check_fixed_bonds(psi0, *d)?;
    }

    let h_at = |k: usize| -> Result<std::borrow::Cow<'_, MatrixProductOperator<T>>> {
        match td {
            Some(td) if !td.ops.is_empty() => {
                let k = k.min(td.ops.len() - 1);
                Ok(std::borrow::Cow::Owned(mpo.with_onsite_term(td.site, &td.ops[k])?))
            }
            _ => Ok(std::borrow::Cow::Borrowed(mpo)),
        }
    };

    let mut rec = EvolutionRecord {
        times: Vec::with_capacity(steps + 1),
        observables: observables
            .iter()
            .map(|o| ObservableSeries {
                name: o.name.clone(),
                sites: o.sites.resolve(dims.len()).unwrap_or_default(),
                two_site: matches!(o.kind, ObservableKind::TwoSite { .. }),
                values: Vec::with_capacity(steps + 1),
            })
            .collect(),
        norm: Vec::with_capacity(steps + 1),
        energy: Vec::with_capacity(steps + 1),
        bond_dims: Vec::with_capacity(steps + 1),
        trunc_error: Vec::with_capacity(steps + 1),
        rdms: opts
            .rdm_sites
            .iter()
            .map(|&site| RdmSeries { site, values: Vec::new() })
            .collect(),
        final_state: psi0.clone(),
    };

    let mut psi = psi0.clone();
    let record = |rec: &mut EvolutionRecord<T>, psi: &MatrixProductState<T>, t: T, h: &MatrixProductOperator<T>, err: T| -> Result<()> {
        rec.times.push(t);
        rec.norm.push(psi.norm());
        rec.energy.push(mpo_expectation(psi, h)?.re);
        rec.bond_dims.push(psi.bond_dims());
        rec.trunc_error.push(err);
        measure(psi, observables, &mut rec.observables, &mut rec.rdms)
    };
    let h0 = h_at(0)?;
    record(&mut rec, &psi, T::zero(), &h0, T::zero())?;

    for k in 0..steps {
        let h = h_at(k)?;
        let mut err = T::zero();
        psi = match *method {
            EvolutionMethod::Tdvp1 { .. } => tdvp1_step(&psi, &h, dt, opts.krylov)?,
            EvolutionMethod::Tdvp2 { trunc_tol, d_max } => {
                let (next, e) = tdvp2_step(&psi, &h, dt, trunc_tol, d_max, opts.krylov)?;
                err = e;
                next
            }
            EvolutionMethod::Dtdvp { growth_tol, d_max } => {
                dtdvp_step(&psi, &h, dt, growth_tol, d_max, opts.krylov)?.0
            }
        };
        let t = T::of((k + 1) as f64 * dt.as_f64());
        record(&mut rec, &psi, t, &h, err)?;
        progress(k + 1, steps);
    }
    rec.final_state = psi;
    Ok(rec)
}

#[cfg(test)]
mod tests;
