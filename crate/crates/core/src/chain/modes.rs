use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use super::{ChainCoefficients, SpectralDensity};
use crate::error::{Error, Result};

/// Polynomials `P_n` orthonormal under `J`, generated by the chain
/// recurrence `t_n P_{n+1} = (w - eps_n) P_n - t_{n-1} P_{n-1}`, `P_0 = 1/c0`.
#[derive(Clone, Debug)]
pub struct OrthonormalPolyBasis {
    pub coeffs: ChainCoefficients,
    pub sd: SpectralDensity,
}

impl OrthonormalPolyBasis {
    pub fn new(coeffs: ChainCoefficients, sd: SpectralDensity) -> Result<Self> {
        coeffs.validate()?;
        if coeffs.c0 <= 0.0 {
            return Err(Error::Param("orthonormal basis needs c0 > 0".into()));
        }
        Ok(Self { coeffs, sd })
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `P_0(w) .. P_{N-1}(w)`.
    pub fn eval(&self, w: f64) -> Vec<f64> {
        let c = &self.coeffs;
        let n = c.len();
        let mut p = Vec::with_capacity(n);
        p.push(1.0 / c.c0);
        for k in 0..n - 1 {
            let prev = if k == 0 { 0.0 } else { c.t[k - 1] * p[k - 1] };
            p.push(((w - c.eps[k]) * p[k] - prev) / c.t[k]);
        }
        p
    }

    /// Mode amplitudes `U_n(w) = sqrt(J(w)) P_n(w)`.
    pub fn mode_amplitudes(&self, w: f64) -> Vec<f64> {
        let s = self.sd.eval(w).max(0.0).sqrt();
        self.eval(w).into_iter().map(|p| s * p).collect()
    }

    /// `max |int P_n P_m J - delta_nm|` using `quad_points` per panel.
    pub fn orthonormality_residual(&self, quad_points: usize) -> f64 {
        let n = self.len();
        let (x, m) = super::discrete_measure(&self.sd, n, quad_points);
        let mut g = DMatrix::<f64>::zeros(n, n);
        for (&xi, &mi) in x.iter().zip(&m) {
            let p = DVector::from_vec(self.eval(xi));
            g += &p * p.transpose() * mi;
        }
        (g - DMatrix::identity(n, n)).abs().max()
    }
}

/// Maps chain-site expectation values onto frequency modes
/// `a_w = sum_n U_n(w) b_n` sampled on a grid.
#[derive(Clone, Debug)]
pub struct ModeTransform {
    pub grid: Vec<f64>,
    /// `u[(i, n)] = U_n(grid[i])`.
    pub u: DMatrix<f64>,
}

impl ModeTransform {
    pub fn new(basis: &OrthonormalPolyBasis, grid: Vec<f64>) -> Result<Self> {
        let (lo, hi) = basis.sd.support();
        if let Some(w) = grid.iter().find(|&&w| !(w >= lo && w <= hi)) {
            return Err(Error::Param(format!(
                "frequency {w} lies outside the support [{lo}, {hi}]"
            )));
        }
        let n = basis.len();
        let mut u = DMatrix::zeros(grid.len(), n);
        for (i, &w) in grid.iter().enumerate() {
            for (k, v) in basis.mode_amplitudes(w).into_iter().enumerate() {
                u[(i, k)] = v;
            }
        }
        Ok(Self { grid, u })
    }

    fn check(&self, n: usize) -> Result<()> {
        if n != self.u.ncols() {
            return Err(Error::Param(format!(
                "chain data covers {n} sites, basis has {}",
                self.u.ncols()
            )));
        }
        Ok(())
    }

    /// `<o_w> = sum_n U_n(w) <o_n>` for a one-site chain observable such as
    /// `<b_n^+>`.
    pub fn one_point(&self, chain: &[Complex<f64>]) -> Result<Vec<Complex<f64>>> {
        self.check(chain.len())?;
        let v = DVector::from_column_slice(chain);
        Ok((self.u.map(|x| Complex::new(x, 0.0)) * v).iter().copied().collect())
    }

    /// `<o1_w o2_w'> = sum_nm U_n(w) U_m(w') <o1_n o2_m>`. With
    /// `chain[(n, m)] = <b_n^+ b_m>` this gives `<a_w^+ a_w'>`; with
    /// `<b_n^+ b_m^+>` the anomalous correlator.
    pub fn two_point(&self, chain: &DMatrix<Complex<f64>>) -> Result<DMatrix<Complex<f64>>> {
        self.check(chain.nrows())?;
        self.check(chain.ncols())?;
        let u = self.u.map(|x| Complex::new(x, 0.0));
        Ok(&u * chain * u.transpose())
    }

    /// Two-point correlator minus the product of one-point values.
    pub fn connected(
        &self,
        chain_pair: &DMatrix<Complex<f64>>,
        chain_first: &[Complex<f64>],
        chain_second: &[Complex<f64>],
    ) -> Result<DMatrix<Complex<f64>>> {
        let two = self.two_point(chain_pair)?;
        let a = self.one_point(chain_first)?;
        let b = self.one_point(chain_second)?;
        Ok(DMatrix::from_fn(two.nrows(), two.ncols(), |i, j| two[(i, j)] - a[i] * b[j]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{adaptive_simpson, chaincoeffs_from_sd, chaincoeffs_ohmic_analytic};

    #[test]
    fn analytic_basis_is_orthonormal() {
        let sd = SpectralDensity::ohmic(0.1, 1.0, 1.0).unwrap();
        let b = OrthonormalPolyBasis::new(chaincoeffs_ohmic_analytic(30, 0.1, 1.0, 1.0).unwrap(), sd).unwrap();
        assert!(b.orthonormality_residual(300) < 1e-10);
    }

    #[test]
    fn vacuum_and_single_excitation() {
        let sd = SpectralDensity::ohmic(0.2, 1.0, 1.0).unwrap();
        let b = OrthonormalPolyBasis::new(chaincoeffs_from_sd(&sd, 6, None).unwrap(), sd.clone()).unwrap();
        let grid: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
        let tr = ModeTransform::new(&b, grid).unwrap();
        let zero = DMatrix::zeros(6, 6);
        assert!(tr.two_point(&zero).unwrap().iter().all(|z| z.norm() == 0.0));
        let density = |w: f64| {
            let p = b.mode_amplitudes(w);
            p[3] * p[3]
        };
        assert!((adaptive_simpson(&density, 0.0, 1.0, 1e-13) - 1.0).abs() < 1e-9);
        assert!(ModeTransform::new(&b, vec![1.5]).is_err());
    }

    #[test]
    fn two_mode_rotation() {
        // two-point discrete measure: the 2x2 chain rotation is explicit
        let sd = SpectralDensity::tabulated(vec![0.0, 1.0], vec![1.0, 1.0]).unwrap();
        let c = chaincoeffs_from_sd(&sd, 2, None).unwrap();
        let b = OrthonormalPolyBasis::new(c.clone(), sd).unwrap();
        let w = 0.3;
        let p = b.eval(w);
        assert!((p[0] - 1.0 / c.c0).abs() < 1e-15);
        assert!((p[1] - (w - c.eps[0]) / (c.c0 * c.t[0])).abs() < 1e-14);
        let tr = ModeTransform::new(&b, vec![w, 0.8]).unwrap();
        let mut chain = DMatrix::zeros(2, 2);
        chain[(1, 1)] = Complex::new(1.0, 0.0);
        let out = tr.two_point(&chain).unwrap();
        assert!((out[(0, 1)].re - tr.u[(0, 1)] * tr.u[(1, 1)]).abs() < 1e-15);
    }
}
