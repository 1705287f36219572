use crate::error::{Error, Result};

/// A spectral density `J(w)` on a finite support.
#[derive(Clone, Debug, PartialEq)]
pub enum SpectralDensity {
    /// `J(w) = 2 alpha w_c (w / w_c)^s` on `[0, w_c]`, zero elsewhere.
    Ohmic { alpha: f64, s: f64, omega_c: f64 },
    /// Piecewise-linear interpolation of `(omega[i], values[i])`, clamped to
    /// be nonnegative and zero outside the grid.
    Tabulated { omega: Vec<f64>, values: Vec<f64> },
    /// Temperature-dependent density on the mirrored support
    /// `J_b(w) = sign(w) J(|w|) / (1 - exp(-b w))`.
    Thermalized { base: Box<SpectralDensity>, beta: f64 },
}

impl SpectralDensity {
    pub fn ohmic(alpha: f64, s: f64, omega_c: f64) -> Result<Self> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::Param(format!("alpha must be finite and >= 0, got {alpha}")));
        }
        if !(s > -1.0 && s.is_finite()) {
            return Err(Error::Param(format!("ohmicity must be > -1, got {s}")));
        }
        if !(omega_c > 0.0 && omega_c.is_finite()) {
            return Err(Error::Param(format!("cutoff must be positive, got {omega_c}")));
        }
        Ok(Self::Ohmic { alpha, s, omega_c })
    }

    pub fn tabulated(omega: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if omega.len() != values.len() || omega.len() < 2 {
            return Err(Error::Param(
                "a tabulated spectral density needs at least two (omega, J) rows".into(),
            ));
        }
        if omega.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Param("tabulated omega grid must be strictly ascending".into()));
        }
        if omega.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::Param("tabulated spectral density has non-finite entries".into()));
        }
        Ok(Self::Tabulated { omega, values })
    }

    pub fn support(&self) -> (f64, f64) {
        match self {
            Self::Ohmic { omega_c, .. } => (0.0, *omega_c),
            Self::Tabulated { omega, .. } => (omega[0], omega[omega.len() - 1]),
            Self::Thermalized { base, .. } => {
                let (_, hi) = base.support();
                (-hi, hi)
            }
        }
    }

    /// Interior points where `J` is not smooth; quadrature panels split here.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Self::Ohmic { .. } => Vec::new(),
            Self::Tabulated { omega, .. } => omega[1..omega.len() - 1].to_vec(),
            Self::Thermalized { base, .. } => {
                let b = base.breakpoints();
                let mut out: Vec<f64> = b.iter().map(|x| -x).chain(b.iter().copied()).collect();
                out.push(0.0);
                out.sort_by(|a, b| a.total_cmp(b));
                out.dedup();
                out
            }
        }
    }

    /// True when `J` has an algebraic (non-analytic) point at `w = 0`.
    pub(crate) fn singular_at_zero(&self) -> bool {
        match self {
            Self::Ohmic { s, .. } => s.fract() != 0.0,
            Self::Tabulated { .. } => false,
            Self::Thermalized { base, .. } => base.singular_at_zero(),
        }
    }

    pub(crate) fn is_piecewise_linear(&self) -> bool {
        matches!(self, Self::Tabulated { .. })
    }

    pub fn eval(&self, w: f64) -> f64 {
        match self {
            Self::Ohmic { alpha, s, omega_c } => {
                if w < 0.0 || w > *omega_c {
                    0.0
                } else if w == 0.0 {
                    if *s > 0.0 {
                        0.0
                    } else if *s == 0.0 {
                        2.0 * alpha * omega_c
                    } else {
                        f64::INFINITY
                    }
                } else {
                    2.0 * alpha * omega_c * (w / omega_c).powf(*s)
                }
            }
            Self::Tabulated { omega, values } => {
                let n = omega.len();
                if w < omega[0] || w > omega[n - 1] {
                    return 0.0;
                }
                let i = omega.partition_point(|&x| x <= w).clamp(1, n - 1);
                let (x0, x1) = (omega[i - 1], omega[i]);
                let f = (w - x0) / (x1 - x0);
                ((1.0 - f) * values[i - 1] + f * values[i]).max(0.0)
            }
            Self::Thermalized { base, beta } => {
                let bw = beta * w;
                if w == 0.0 {
                    // removable point: limit of J(d) / (b d) as d -> 0+
                    let (_, hi) = base.support();
                    let d = 1e-9 * hi;
                    return base.eval(d) / (beta * d);
                }
                let j = base.eval(w.abs());
                if j == 0.0 {
                    return 0.0;
                }
                w.signum() * j / (-(-bw).exp_m1())
            }
        }
    }

    /// `int J(w) dw` by adaptive Simpson quadrature.
    pub fn total_weight(&self) -> f64 {
        let (lo, hi) = self.support();
        let mut pts = vec![lo];
        pts.extend(self.breakpoints().into_iter().filter(|&x| x > lo && x < hi));
        pts.push(hi);
        pts.windows(2)
            .map(|p| adaptive_simpson(&|w| self.eval(w), p[0], p[1], 1e-13))
            .sum()
    }

    /// Short descriptor used in coefficient-file headers and manifests.
    pub fn describe(&self) -> String {
        match self {
            Self::Ohmic { alpha, s, omega_c } => {
                format!("ohmic(alpha={alpha},s={s},omega_c={omega_c})")
            }
            Self::Tabulated { omega, .. } => {
                format!("table({} points on [{}, {}])", omega.len(), omega[0], omega[omega.len() - 1])
            }
            Self::Thermalized { base, beta } => format!("thermalized({},beta={beta})", base.describe()),
        }
    }
}

/// Wraps `j` into its temperature-dependent form at inverse temperature `beta`.
pub fn thermalized_sd(j: &SpectralDensity, beta: f64) -> Result<SpectralDensity> {
    if !(beta > 0.0) || beta.is_nan() {
        return Err(Error::Param(format!("inverse temperature must be positive, got {beta}")));
    }
    if let SpectralDensity::Thermalized { .. } = j {
        return Err(Error::Param("spectral density is already thermalized".into()));
    }
    let (lo, _) = j.support();
    if lo < 0.0 {
        return Err(Error::Param("thermalization needs a density supported on w >= 0".into()));
    }
    Ok(SpectralDensity::Thermalized {
        base: Box::new(j.clone()),
        beta,
    })
}

/// Adaptive Simpson integration to absolute tolerance `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    // open nudges keep endpoint singularities out of the samples
    let eps = (b - a) * 1e-15;
    let g = |x: f64| {
        let v = f(x.clamp(a + eps, b - eps));
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    let (fa, fb, m) = (g(a), g(b), 0.5 * (a + b));
    let fm = g(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_rec(&g, a, b, fa, fm, fb, whole, tol, 40)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    let tiny = m - a <= 4.0 * f64::EPSILON * a.abs().max(b.abs());
    if depth == 0 || tiny || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + simpson_rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}
