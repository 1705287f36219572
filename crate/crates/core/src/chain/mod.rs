//! Chain mapping of continuous environments.
//!
//! A spectral density `J(w)` is turned into the Jacobi matrix of the
//! polynomials orthonormal under `J`: on-site energies `eps[n]`, hoppings
//! `t[n]` and the system coupling `c0 = sqrt(int J)`. Everything in this
//! module is computed in `f64`.

mod modes;
mod sd;

pub use modes::{ModeTransform, OrthonormalPolyBasis};
pub use sd::{adaptive_simpson, thermalized_sd, SpectralDensity};

use std::fmt::Write as _;
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;

use crate::error::{Error, Result};

/// Jacobi-matrix coefficients of a chain of `eps.len()` modes.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainCoefficients {
    pub eps: Vec<f64>,
    /// Hopping between modes `n` and `n + 1`; one shorter than `eps`.
    pub t: Vec<f64>,
    pub c0: f64,
    pub provenance: String,
}

impl ChainCoefficients {
    pub fn new(eps: Vec<f64>, t: Vec<f64>, c0: f64, provenance: impl Into<String>) -> Result<Self> {
        let c = Self {
            eps,
            t,
            c0,
            provenance: provenance.into(),
        };
        c.validate()?;
        Ok(c)
    }

    pub fn len(&self) -> usize {
        self.eps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eps.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.eps.is_empty() {
            return Err(Error::Param("chain has no modes".into()));
        }
        if self.t.len() + 1 != self.eps.len() {
            return Err(Error::Param(format!(
                "{} on-site energies need {} hoppings, got {}",
                self.eps.len(),
                self.eps.len() - 1,
                self.t.len()
            )));
        }
        if self.eps.iter().chain(&self.t).any(|v| !v.is_finite()) || !self.c0.is_finite() {
            return Err(Error::Param("chain coefficients must be finite".into()));
        }
        if let Some(n) = self.t.iter().position(|&t| t <= 0.0) {
            return Err(Error::Param(format!("hopping t[{n}] is not positive")));
        }
        if self.c0 < 0.0 {
            return Err(Error::Param("c0 must be nonnegative".into()));
        }
        Ok(())
    }

    /// The first `n` modes.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.len() {
            return Err(Error::Param(format!(
                "cannot take {n} modes from a chain of {}",
                self.len()
            )));
        }
        Ok(Self {
            eps: self.eps[..n].to_vec(),
            t: self.t[..n - 1].to_vec(),
            c0: self.c0,
            provenance: self.provenance.clone(),
        })
    }

    /// Text form: a `# c0=... provenance=...` header, then `n eps t` rows.
    /// The last row has no outgoing hopping and prints `nan`.
    pub fn to_text(&self) -> String {
        let mut s = format!("# c0={} provenance={}\n", self.c0, self.provenance);
        for (n, e) in self.eps.iter().enumerate() {
            match self.t.get(n) {
                Some(t) => writeln!(s, "{n} {e} {t}").unwrap(),
                None => writeln!(s, "{n} {e} nan").unwrap(),
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut c0 = None;
        let mut provenance = String::new();
        let mut eps = Vec::new();
        let mut t = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let lineno = i + 1;
            if line.is_empty() {
                continue;
            }
            if let Some(h) = line.strip_prefix('#') {
                let h = h.trim();
                if let Some(rest) = h.strip_prefix("c0=") {
                    let (val, prov) = match rest.split_once(' ') {
                        Some((v, p)) => (v, p.trim()),
                        None => (rest, ""),
                    };
                    c0 = Some(val.parse::<f64>().map_err(|e| Error::Parse {
                        line: lineno,
                        detail: format!("bad c0 '{val}': {e}"),
                    })?);
                    provenance = prov.strip_prefix("provenance=").unwrap_or(prov).to_string();
                }
                continue;
            }
            let cols: Vec<&str> = line.split_whitespace().collect();
            if cols.len() != 3 {
                return Err(Error::Parse {
                    line: lineno,
                    detail: format!("expected 3 columns (n eps t), found {}", cols.len()),
                });
            }
            let num = |s: &str| {
                s.parse::<f64>().map_err(|e| Error::Parse {
                    line: lineno,
                    detail: format!("bad number '{s}': {e}"),
                })
            };
            let n: usize = cols[0].parse().map_err(|e| Error::Parse {
                line: lineno,
                detail: format!("bad index '{}': {e}", cols[0]),
            })?;
            if n != eps.len() {
                return Err(Error::Parse {
                    line: lineno,
                    detail: format!("expected row {}, found {n}", eps.len()),
                });
            }
            eps.push(num(cols[1])?);
            t.push(num(cols[2])?);
        }
        let c0 = c0.ok_or(Error::Parse {
            line: 1,
            detail: "missing '# c0=' header".into(),
        })?;
        t.pop();
        Self::new(eps, t, c0, provenance)
    }
}

/// Bath temperature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TemperatureSpec {
    Zero,
    /// Inverse temperature.
    Beta(f64),
}

impl TemperatureSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            TemperatureSpec::Beta(b) if !(b.is_finite() && *b > 0.0) => Err(Error::Param(format!(
                "inverse temperature must be finite and positive, got {b}"
            ))),
            _ => Ok(()),
        }
    }
}

/// Gauss-Legendre nodes and weights for `f` over `[lo, hi]`, split into
/// panels at `breaks`, with `per_panel` points each.
fn composite_rule(lo: f64, hi: f64, breaks: &[f64], per_panel: usize) -> (Vec<f64>, Vec<f64>) {
    let rule = GaussLegendre::new(NonZeroUsize::new(per_panel.max(1)).unwrap());
    let mut edges = vec![lo];
    edges.extend(breaks.iter().copied().filter(|&b| b > lo && b < hi));
    edges.push(hi);
    edges.sort_by(f64::total_cmp);
    edges.dedup();
    let mut x = Vec::new();
    let mut w = Vec::new();
    for p in edges.windows(2) {
        let (a, b) = (p[0], p[1]);
        let (half, mid) = (0.5 * (b - a), 0.5 * (a + b));
        for &(node, weight) in rule.as_node_weight_pairs() {
            x.push(mid + half * node);
            w.push(half * weight);
        }
    }
    (x, w)
}

const GRADING_LEVELS: usize = 30;

/// Discrete measure `(nodes, masses)` approximating `J(w) dw`.
pub fn discrete_measure(sd: &SpectralDensity, n: usize, quad_points: usize) -> (Vec<f64>, Vec<f64>) {
    let (lo, hi) = sd.support();
    // a piecewise-linear weight times a degree-2n polynomial is integrated
    // exactly by n + 2 points per linear piece
    let per_panel = if sd.is_piecewise_linear() {
        quad_points.min(n + 2)
    } else {
        quad_points
    };
    let mut breaks = sd.breakpoints();
    if sd.singular_at_zero() {
        // w^s-type behaviour at w = 0 limits Gauss-Legendre to algebraic
        // convergence; geometric panels toward zero restore it
        for k in 1..=GRADING_LEVELS {
            let f = 0.5f64.powi(k as i32);
            breaks.push(hi * f);
            breaks.push(lo * f);
        }
        breaks.sort_by(f64::total_cmp);
    }
    let (x, w) = composite_rule(lo, hi, &breaks, per_panel);
    let masses = x.iter().zip(&w).map(|(&xi, &wi)| wi * sd.eval(xi)).collect();
    (x, masses)
}

/// Lanczos tridiagonalization of `diag(nodes)` started from `sqrt(masses)`.
///
/// Returns `(eps, t, c0)` with `eps.len() == n` and `t.len() == n - 1`. The
/// basis is fully reorthogonalized.
pub fn lanczos_recurrence(nodes: &[f64], masses: &[f64], n: usize) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    if n == 0 {
        return Err(Error::Param("chain length must be at least 1".into()));
    }
    if let Some(i) = masses.iter().position(|m| !(m.is_finite() && *m >= 0.0)) {
        return Err(Error::Param(format!("quadrature mass {i} is negative or not finite")));
    }
    let total: f64 = masses.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Param("spectral density has no weight".into()));
    }
    let support = masses.iter().filter(|&&m| m > 0.0).count();
    if support < n {
        return Err(Error::Unstable {
            index: support,
            detail: format!("only {support} quadrature nodes carry weight; raise quad_points"),
        });
    }
    let c0 = total.sqrt();
    let scale = nodes.iter().fold(0.0f64, |a, x| a.max(x.abs())).max(f64::MIN_POSITIVE);
    let mut basis: Vec<Vec<f64>> = vec![masses.iter().map(|m| m.sqrt() / c0).collect()];
    let mut eps = Vec::with_capacity(n);
    let mut t = Vec::with_capacity(n.saturating_sub(1));
    for k in 0..n {
        let q = &basis[k];
        let mut v: Vec<f64> = q.iter().zip(nodes).map(|(a, x)| a * x).collect();
        let a: f64 = v.iter().zip(q).map(|(x, y)| x * y).sum();
        eps.push(a);
        if k + 1 == n {
            break;
        }
        for _ in 0..2 {
            for b in &basis {
                let p: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
            }
        }
        let beta = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(beta > 1e-13 * scale) {
            return Err(Error::Unstable {
                index: k + 1,
                detail: format!("recurrence broke down (t = {beta:e}); raise quad_points"),
            });
        }
        t.push(beta);
        basis.push(v.into_iter().map(|x| x / beta).collect());
    }
    Ok((eps, t, c0))
}

/// Default quadrature order: `10 n` points per panel.
pub fn default_quad_points(n: usize) -> usize {
    10 * n.max(1)
}

/// Chain coefficients of `sd` by discretized Lanczos on a Gauss-Legendre grid.
///
/// `quad_points` is the number of nodes per panel and must be at least `4 n`.
pub fn chaincoeffs_from_sd(
    sd: &SpectralDensity,
    n: usize,
    quad_points: Option<usize>,
) -> Result<ChainCoefficients> {
    let q = quad_points.unwrap_or_else(|| default_quad_points(n));
    if q < 4 * n {
        return Err(Error::Param(format!(
            "quad_points = {q} is below the stability floor 4 N = {}",
            4 * n
        )));
    }
    let (x, m) = discrete_measure(sd, n, q);
    let (eps, t, c0) = lanczos_recurrence(&x, &m, n)?;
    ChainCoefficients::new(eps, t, c0, format!("{};quad={q}", sd.describe()))
}

/// Largest relative change of any coefficient when the quadrature order is
/// doubled.
pub fn quadrature_convergence(sd: &SpectralDensity, n: usize, quad_points: Option<usize>) -> Result<f64> {
    let q = quad_points.unwrap_or_else(|| default_quad_points(n));
    let a = chaincoeffs_from_sd(sd, n, Some(q))?;
    let b = chaincoeffs_from_sd(sd, n, Some(2 * q))?;
    let rel = |x: f64, y: f64| (x - y).abs() / y.abs().max(1e-300);
    let worst = a
        .eps
        .iter()
        .zip(&b.eps)
        .chain(a.t.iter().zip(&b.t))
        .map(|(&x, &y)| if y == 0.0 { x.abs() } else { rel(x, y) })
        .fold(rel(a.c0, b.c0), f64::max);
    Ok(worst)
}

/// Closed-form chain of the zero-temperature power-law density.
pub fn chaincoeffs_ohmic_analytic(n: usize, alpha: f64, s: f64, omega_c: f64) -> Result<ChainCoefficients> {
    let sd = SpectralDensity::ohmic(alpha, s, omega_c)?;
    if n == 0 {
        return Err(Error::Param("chain length must be at least 1".into()));
    }
    let eps = (0..n)
        .map(|k| {
            let k = k as f64;
            if k == 0.0 {
                omega_c / 2.0 * (1.0 + s / (s + 2.0))
            } else {
                omega_c / 2.0 * (1.0 + s * s / ((s + 2.0 * k) * (2.0 + s + 2.0 * k)))
            }
        })
        .collect();
    let t = (0..n - 1)
        .map(|k| {
            let k = k as f64;
            omega_c * (1.0 + k) * (1.0 + s + k) / ((s + 2.0 + 2.0 * k) * (3.0 + s + 2.0 * k))
                * ((3.0 + s + 2.0 * k) / (1.0 + s + 2.0 * k)).sqrt()
        })
        .collect();
    let c0 = omega_c * (2.0 * alpha / (s + 1.0)).sqrt();
    ChainCoefficients::new(eps, t, c0, format!("{};analytic", sd.describe()))
}

/// Chain for a bath at the given temperature: the analytic chain at zero
/// temperature for Ohmic densities, the thermalized density otherwise.
pub fn chaincoeffs_at_temperature(
    sd: &SpectralDensity,
    temp: TemperatureSpec,
    n: usize,
    quad_points: Option<usize>,
) -> Result<ChainCoefficients> {
    temp.validate()?;
    match (temp, sd) {
        (TemperatureSpec::Zero, SpectralDensity::Ohmic { alpha, s, omega_c }) => {
            chaincoeffs_ohmic_analytic(n, *alpha, *s, *omega_c)
        }
        (TemperatureSpec::Zero, _) => chaincoeffs_from_sd(sd, n, quad_points),
        (TemperatureSpec::Beta(b), _) => chaincoeffs_from_sd(&thermalized_sd(sd, b)?, n, quad_points),
    }
}

/// Which part of a fermionic lead a chain represents.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Lead {
    /// Occupied states, weight `|V|^2 n_F`.
    Filled,
    /// Empty states, weight `|V|^2 (1 - n_F)`.
    Empty,
}

/// Fermi factor `1 / (exp(b (e - mu)) + 1)`; `beta` may be infinite.
pub fn fermi(e: f64, mu: f64, beta: f64) -> f64 {
    let x = e - mu;
    if x == 0.0 {
        return 0.5;
    }
    let z = beta * x;
    if z > 0.0 {
        let q = (-z).exp();
        q / (1.0 + q)
    } else {
        1.0 / (1.0 + z.exp())
    }
}

/// A fermionic band: dispersion `eps(k)` and coupling `v(k)` on `[k_lo, k_hi]`.
pub struct FermionicBand<'a> {
    pub dispersion: &'a dyn Fn(f64) -> f64,
    pub coupling: &'a dyn Fn(f64) -> f64,
    pub k_range: (f64, f64),
    /// Chemical potential.
    pub mu: f64,
}

impl FermionicBand<'_> {
    fn fermi_level_crossings(&self) -> Vec<f64> {
        let (lo, hi) = self.k_range;
        let g = |k: f64| (self.dispersion)(k) - self.mu;
        let m = 256;
        let mut out = Vec::new();
        for i in 0..m {
            let (mut a, mut b) = (
                lo + (hi - lo) * i as f64 / m as f64,
                lo + (hi - lo) * (i + 1) as f64 / m as f64,
            );
            let (ga, gb) = (g(a), g(b));
            if ga == 0.0 && i > 0 {
                out.push(a);
                continue;
            }
            if ga * gb >= 0.0 {
                continue;
            }
            for _ in 0..200 {
                let c = 0.5 * (a + b);
                if g(c) * ga > 0.0 {
                    a = c;
                } else {
                    b = c;
                }
            }
            out.push(0.5 * (a + b));
        }
        out
    }

    /// Discrete measure in energy of `|V|^2 f_lead` (or of `|V|^2` alone).
    pub fn measure(&self, beta: f64, lead: Option<Lead>, quad_points: usize) -> (Vec<f64>, Vec<f64>) {
        let (lo, hi) = self.k_range;
        let (k, w) = composite_rule(lo, hi, &self.fermi_level_crossings(), quad_points);
        let nodes: Vec<f64> = k.iter().map(|&k| (self.dispersion)(k)).collect();
        let masses = k
            .iter()
            .zip(&w)
            .zip(&nodes)
            .map(|((&k, &w), &e)| {
                let v = (self.coupling)(k);
                let f = match lead {
                    None => 1.0,
                    Some(Lead::Filled) => fermi(e, self.mu, beta),
                    Some(Lead::Empty) => fermi(-e, -self.mu, beta),
                };
                w * v * v * f
            })
            .collect();
        (nodes, masses)
    }
}

/// Chain coefficients of one lead of a fermionic band at inverse temperature
/// `beta` (which may be `f64::INFINITY`).
pub fn chaincoeffs_fermionic(
    n: usize,
    beta: f64,
    lead: Lead,
    band: &FermionicBand<'_>,
    quad_points: Option<usize>,
) -> Result<ChainCoefficients> {
    if !(beta > 0.0) {
        return Err(Error::Param(format!("inverse temperature must be positive, got {beta}")));
    }
    if !(band.k_range.1 > band.k_range.0) {
        return Err(Error::Param("band k-range must be a nonempty interval".into()));
    }
    let q = quad_points.unwrap_or_else(|| default_quad_points(n));
    if q < 4 * n {
        return Err(Error::Param(format!(
            "quad_points = {q} is below the stability floor 4 N = {}",
            4 * n
        )));
    }
    let (x, m) = band.measure(beta, Some(lead), q);
    if m.iter().sum::<f64>() <= 0.0 {
        return Err(Error::Param(format!("{lead:?} lead carries no weight at beta = {beta}")));
    }
    let (eps, t, c0) = lanczos_recurrence(&x, &m, n)?;
    let tag = match lead {
        Lead::Filled => "filled",
        Lead::Empty => "empty",
    };
    ChainCoefficients::new(eps, t, c0, format!("fermionic({tag},beta={beta},mu={});quad={q}", band.mu))
}

/// Rule-of-thumb chain length so that excitations do not reach the end of
/// the chain before `t_final`.
pub fn find_chain_length(t_final: f64, omega_c: f64, temp: TemperatureSpec) -> Result<usize> {
    if !(t_final > 0.0 && t_final.is_finite()) || !(omega_c > 0.0 && omega_c.is_finite()) {
        return Err(Error::Param("t_final and omega_c must be positive".into()));
    }
    temp.validate()?;
    let speed = match temp {
        TemperatureSpec::Zero => 4.0,
        TemperatureSpec::Beta(_) => 2.0,
    };
    let x = omega_c * t_final / speed;
    // guard against 25.000000000000004 style rounding
    let r = x.round();
    let n = if (x - r).abs() <= 1e-9 * r.max(1.0) { r } else { x.ceil() };
    Ok(n.max(1.0) as usize)
}

/// Outcome of [`verify_chain_length`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChainLengthCheck {
    pub passed: bool,
    /// First time at which the terminal occupation reached the threshold.
    pub first_violation: Option<f64>,
    pub max_occupation: f64,
}

/// Checks that the occupation of the last chain site stays below `threshold`.
pub fn verify_chain_length(times: &[f64], terminal_occ: &[f64], threshold: f64) -> Result<ChainLengthCheck> {
    if times.len() != terminal_occ.len() || times.is_empty() {
        return Err(Error::Param(
            "terminal occupation series must be nonempty and match the time axis".into(),
        ));
    }
    let first = times
        .iter()
        .zip(terminal_occ)
        .find(|(_, &o)| o >= threshold)
        .map(|(&t, _)| t);
    Ok(ChainLengthCheck {
        passed: first.is_none(),
        first_violation: first,
        max_occupation: terminal_occ.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat(lo: f64, hi: f64, mass: f64) -> SpectralDensity {
        let h = mass / (hi - lo);
        SpectralDensity::tabulated(vec![lo, hi], vec![h, h]).unwrap()
    }

    #[test]
    fn legendre_recurrence() {
        let c = chaincoeffs_from_sd(&flat(-1.0, 1.0, 1.0), 12, None).unwrap();
        for (k, &t) in c.t.iter().enumerate() {
            let n = (k + 1) as f64;
            assert!((t - n / (4.0 * n * n - 1.0).sqrt()).abs() < 1e-13, "t[{k}]");
        }
        assert!((c.t[0] - 1.0 / 3f64.sqrt()).abs() < 1e-12);
        assert!(c.eps.iter().all(|e| e.abs() < 1e-13));
        assert!((c.c0 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn analytic_matches_quadrature() {
        for &s in &[0.5, 1.0, 2.0] {
            let an = chaincoeffs_ohmic_analytic(20, 0.05, s, 1.5).unwrap();
            let sd = SpectralDensity::ohmic(0.05, s, 1.5).unwrap();
            // x^s with fractional s converges slowly under Gauss-Legendre
            let num = chaincoeffs_from_sd(&sd, 20, Some(2000)).unwrap();
            let tol = if s.fract() == 0.0 { 1e-12 } else { 1e-5 };
            for k in 0..10 {
                assert!((an.eps[k] - num.eps[k]).abs() < tol, "s={s} eps[{k}]");
                assert!((an.t[k] - num.t[k]).abs() < tol, "s={s} t[{k}]");
            }
            assert!((an.c0 - num.c0).abs() < tol);
        }
    }

    #[test]
    fn alpha_only_moves_c0() {
        let a = chaincoeffs_ohmic_analytic(8, 0.1, 1.0, 1.0).unwrap();
        let b = chaincoeffs_ohmic_analytic(8, 0.4, 1.0, 1.0).unwrap();
        assert_eq!(a.eps, b.eps);
        assert_eq!(a.t, b.t);
        assert!((b.c0 / a.c0 - 2.0).abs() < 1e-14);
    }

    #[test]
    fn thermalized_chain_converges_under_doubling() {
        let sd = thermalized_sd(&SpectralDensity::ohmic(0.1, 1.0, 1.0).unwrap(), 1.0).unwrap();
        let q = quadrature_convergence(&sd, 15, None).unwrap();
        assert!(q < 1e-10, "{q:e}");
        let c = chaincoeffs_from_sd(&sd, 15, None).unwrap();
        assert!((c.c0 * c.c0 - sd.total_weight()).abs() < 1e-10);
    }

    #[test]
    fn too_few_nodes_is_reported() {
        let sd = SpectralDensity::ohmic(0.1, 1.0, 1.0).unwrap();
        assert!(chaincoeffs_from_sd(&sd, 10, Some(20)).is_err());
        let (x, m) = (vec![0.0, 0.5, 1.0], vec![1.0, 1.0, 0.0]);
        assert!(matches!(lanczos_recurrence(&x, &m, 3), Err(Error::Unstable { index: 2, .. })));
    }

    #[test]
    fn text_round_trip() {
        let c = chaincoeffs_ohmic_analytic(5, 0.1, 1.0, 1.0).unwrap();
        let text = c.to_text();
        assert!(text.lines().last().unwrap().ends_with("nan"));
        assert_eq!(ChainCoefficients::from_text(&text).unwrap(), c);
        assert!(matches!(
            ChainCoefficients::from_text("# c0=1\n0 0.5 x\n"),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn chain_length_rule() {
        assert_eq!(find_chain_length(100.0, 1.0, TemperatureSpec::Zero).unwrap(), 25);
        assert_eq!(find_chain_length(100.0, 1.0, TemperatureSpec::Beta(1.0)).unwrap(), 50);
        assert_eq!(find_chain_length(10.0, 1.0, TemperatureSpec::Zero).unwrap(), 3);
        let r = verify_chain_length(&[0.0, 1.0, 2.0, 3.0], &[0.0, 5e-5, 1e-3, 2e-3], 1e-4).unwrap();
        assert!(!r.passed);
        assert_eq!(r.first_violation, Some(2.0));
    }

    #[test]
    fn fermionic_leads_split_the_band() {
        let e = |k: f64| k;
        let v = |_: f64| 1.0;
        let band = FermionicBand { dispersion: &e, coupling: &v, k_range: (-1.0, 1.0), mu: 0.0 };
        let (x, m) = band.measure(1e12, Some(Lead::Filled), 40);
        let wrong: f64 = x.iter().zip(&m).filter(|(x, _)| **x > 0.0).map(|(_, m)| m).sum();
        assert!(wrong < 1e-8);
        for beta in [0.3, 1.0, 4.0] {
            let (x, f) = band.measure(beta, Some(Lead::Filled), 60);
            let (_, em) = band.measure(beta, Some(Lead::Empty), 60);
            let (_, bare) = band.measure(beta, None, 60);
            let sum: Vec<f64> = f.iter().zip(&em).map(|(a, b)| a + b).collect();
            let (e1, t1, c1) = lanczos_recurrence(&x, &sum, 8).unwrap();
            let (e2, t2, c2) = lanczos_recurrence(&x, &bare, 8).unwrap();
            assert!(e1.iter().zip(&e2).all(|(a, b)| (a - b).abs() < 1e-12));
            assert!(t1.iter().zip(&t2).all(|(a, b)| (a - b).abs() < 1e-12));
            assert!((c1 - c2).abs() < 1e-12);
        }
        let filled = chaincoeffs_fermionic(4, 1.0, Lead::Filled, &band, None).unwrap();
        let num = adaptive_simpson(&|x| x * fermi(x, 0.0, 1.0), -1.0, 1.0, 1e-14);
        let den = adaptive_simpson(&|x| fermi(x, 0.0, 1.0), -1.0, 1.0, 1e-14);
        assert!((filled.eps[0] - num / den).abs() < 1e-12);
        assert!((filled.c0 * filled.c0 - den).abs() < 1e-12);
        assert!(chaincoeffs_fermionic(4, -1.0, Lead::Filled, &band, None).is_err());
    }
}
