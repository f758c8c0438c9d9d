//! Kernel families `g` with certified power-law envelopes
//! `|g(x)| ≤ K(|x|^κ 1{|x|<1} + |x|^{-α} 1{|x|≥1})`, plus the `∫|g|^β`
//! quadratures built on them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::Quadrature;

/// Default certified tail exponent for kernels with bounded support or
/// exponential decay, where any α is admissible.
pub const DEFAULT_FAST_DECAY_ALPHA: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum KernelFamily {
    /// `|x|^κ` on `0 < |x| < 1`, `|x|^{-α}` on `|x| ≥ 1` (two-sided).
    TruncatedPowerLaw { kappa: f64, alpha: f64 },
    /// Linear fractional stable noise: `x₊^{H−1/β} − (x−1)₊^{H−1/β}`.
    LfsnNoise { hurst: f64, beta: f64 },
    /// Causal exponential `e^{−λx} 1{x ≥ 0}`.
    OrnsteinUhlenbeck { lambda: f64 },
    /// Box kernel `1{0 ≤ x < 1}`; makes the moving average i.i.d. at integer times.
    Indicator,
}

/// A kernel together with its certified envelope `(K, κ, α)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub k_env: f64,
    pub alpha: f64,
    pub kappa: f64,
}

/// `α = 1 − H + 1/β` for the LFSN kernel.
pub fn lfsn_alpha(hurst: f64, beta: f64) -> Result<f64> {
    if !(hurst > 0.0 && hurst < 1.0) {
        return Err(Error::Domain(format!("Hurst index must lie in (0, 1), got {hurst}")));
    }
    if !(beta > 1.0 && beta < 2.0) {
        return Err(Error::Domain(format!("LFSN stability index must lie in (1, 2), got {beta}")));
    }
    Ok(1.0 - hurst + 1.0 / beta)
}

fn check_finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be finite, got {v}")))
    }
}

impl KernelSpec {
    pub fn truncated_power_law(kappa: f64, alpha: f64) -> Result<Self> {
        check_finite("kappa", kappa)?;
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::Domain(format!("alpha must be positive, got {alpha}")));
        }
        Ok(Self { family: KernelFamily::TruncatedPowerLaw { kappa, alpha }, k_env: 1.0, alpha, kappa })
    }

    pub fn lfsn(hurst: f64, beta: f64) -> Result<Self> {
        if !(hurst > 0.0 && hurst < 1.0) {
            return Err(Error::Domain(format!("Hurst index must lie in (0, 1), got {hurst}")));
        }
        if !(beta > 0.0 && beta < 2.0) {
            return Err(Error::Domain(format!("stability index must lie in (0, 2), got {beta}")));
        }
        Ok(Self {
            family: KernelFamily::LfsnNoise { hurst, beta },
            k_env: 1.0,
            alpha: 1.0 - hurst + 1.0 / beta,
            kappa: hurst - 1.0 / beta,
        })
    }

    pub fn ou(lambda: f64) -> Result<Self> {
        Self::ou_with_alpha(lambda, DEFAULT_FAST_DECAY_ALPHA)
    }

    /// OU kernel certified with tail exponent `alpha`;
    /// `K = max(1, sup_{x≥1} x^α e^{−λx})`.
    pub fn ou_with_alpha(lambda: f64, alpha: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::Domain(format!("OU rate must be positive, got {lambda}")));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::Domain(format!("alpha must be positive, got {alpha}")));
        }
        let k_env =
            if alpha / lambda >= 1.0 { (alpha / (lambda * std::f64::consts::E)).powf(alpha).max(1.0) } else { 1.0 };
        Ok(Self { family: KernelFamily::OrnsteinUhlenbeck { lambda }, k_env, alpha, kappa: 0.0 })
    }

    pub fn indicator() -> Self {
        Self::indicator_with_alpha(DEFAULT_FAST_DECAY_ALPHA).expect("default alpha is valid")
    }

    pub fn indicator_with_alpha(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::Domain(format!("alpha must be positive, got {alpha}")));
        }
        Ok(Self { family: KernelFamily::Indicator, k_env: 1.0, alpha, kappa: 0.0 })
    }

    /// Points where the kernel is unbounded (and `eval` refuses to answer).
    pub fn singular_points(&self) -> &'static [f64] {
        match self.family {
            KernelFamily::TruncatedPowerLaw { kappa, .. } if kappa <= 0.0 => &[0.0],
            KernelFamily::LfsnNoise { .. } if self.kappa < 0.0 => &[0.0, 1.0],
            _ => &[],
        }
    }

    /// Points where the kernel is not smooth; quadratures split there.
    pub fn breakpoints(&self) -> &'static [f64] {
        match self.family {
            KernelFamily::TruncatedPowerLaw { .. } => &[-1.0, 0.0, 1.0],
            KernelFamily::LfsnNoise { .. } => &[0.0, 1.0, 2.0],
            KernelFamily::OrnsteinUhlenbeck { .. } => &[0.0],
            KernelFamily::Indicator => &[0.0, 1.0],
        }
    }

    pub fn is_causal(&self) -> bool {
        !matches!(self.family, KernelFamily::TruncatedPowerLaw { .. })
    }

    /// Kernel value; `+∞` at singular points. Internal callers decide what a
    /// singular point means for them (skipped lattice node, saturated term).
    #[inline]
    pub(crate) fn eval_raw(&self, x: f64) -> f64 {
        match self.family {
            KernelFamily::TruncatedPowerLaw { kappa, alpha } => {
                let a = x.abs();
                if a >= 1.0 {
                    a.powf(-alpha)
                } else if a > 0.0 {
                    a.powf(kappa)
                } else if kappa > 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            KernelFamily::LfsnNoise { .. } => {
                let e = self.kappa;
                if x < 0.0 || (x == 0.0 && e >= 0.0) {
                    0.0
                } else if x == 0.0 {
                    f64::INFINITY
                } else if x < 1.0 {
                    x.powf(e)
                } else if x == 1.0 {
                    if e < 0.0 {
                        f64::INFINITY
                    } else if e == 0.0 {
                        0.0
                    } else {
                        1.0
                    }
                } else {
                    x.powf(e) - (x - 1.0).powf(e)
                }
            }
            KernelFamily::OrnsteinUhlenbeck { lambda } => {
                if x >= 0.0 {
                    (-lambda * x).exp()
                } else {
                    0.0
                }
            }
            KernelFamily::Indicator => {
                if (0.0..1.0).contains(&x) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Pointwise kernel value. Rejects non-finite `x` and singular points.
    pub fn eval(&self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::Domain(format!("kernel argument must be finite, got {x}")));
        }
        let v = self.eval_raw(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Domain(format!("kernel is singular at x = {x}")))
        }
    }

    /// `|g|^β` with singular points mapped to zero (they have measure zero).
    #[inline]
    pub(crate) fn abs_pow(&self, x: f64, p: f64) -> f64 {
        let v = self.eval_raw(x).abs();
        if v.is_finite() {
            v.powf(p)
        } else {
            0.0
        }
    }

    /// The certified envelope at `x`.
    pub fn envelope(&self, x: f64) -> f64 {
        let a = x.abs();
        let mut env = if a < 1.0 { a.powf(self.kappa) } else { a.powf(-self.alpha) };
        // The LFSN kernel with H < 1/β has a second singularity at x = 1,
        // bounded by the same power of |x − 1|.
        if matches!(self.family, KernelFamily::LfsnNoise { .. }) && self.kappa < 0.0 {
            let b = (x - 1.0).abs();
            if b < 1.0 {
                env += b.powf(self.kappa);
            }
        }
        self.k_env * env
    }

    /// Integrability of `|g|^p` at the origin and at infinity.
    pub fn check_integrable(&self, p: f64) -> Result<()> {
        if matches!(self.family, KernelFamily::Indicator) {
            return Ok(());
        }
        if self.kappa * p <= -1.0 {
            return Err(Error::Divergence(format!("|g|^{p} is not integrable at the origin (kappa = {})", self.kappa)));
        }
        if matches!(self.family, KernelFamily::OrnsteinUhlenbeck { .. }) {
            return Ok(());
        }
        if self.alpha * p <= 1.0 {
            return Err(Error::Divergence(format!("|g|^{p} is not integrable at infinity (alpha = {})", self.alpha)));
        }
        Ok(())
    }
}

/// `∫_ℝ |g(x)|^β dx`, relative error ≤ 1e-6.
pub fn beta_norm(kernel: &KernelSpec, beta: f64) -> Result<f64> {
    kernel.check_integrable(beta)?;
    let mut breaks = vec![f64::NEG_INFINITY, -1.0, 0.0, 1.0, f64::INFINITY];
    breaks.extend_from_slice(kernel.breakpoints());
    let est = Quadrature::with_rel_tol(1e-9).integrate(|x| kernel.abs_pow(x, beta), &breaks)?;
    Ok(est.value)
}

/// One summand `coef · g(x + shift)` of a kernel combination.
#[derive(Debug, Clone, Copy)]
pub struct KernelTerm<'a> {
    pub kernel: &'a KernelSpec,
    pub coef: f64,
    pub shift: f64,
}

/// `∫_ℝ |Σ_t c_t g_t(x + s_t)|^β dx`.
pub fn combination_beta_integral(terms: &[KernelTerm<'_>], beta: f64) -> Result<f64> {
    let live: Vec<&KernelTerm<'_>> = terms.iter().filter(|t| t.coef != 0.0).collect();
    if live.is_empty() {
        return Ok(0.0);
    }
    let mut breaks = vec![f64::NEG_INFINITY, f64::INFINITY];
    for t in &live {
        t.kernel.check_integrable(beta)?;
        breaks.extend(t.kernel.breakpoints().iter().map(|b| b - t.shift));
    }
    let integrand = |x: f64| {
        let mut acc = 0.0;
        for t in &live {
            let v = t.kernel.eval_raw(x + t.shift);
            if !v.is_finite() {
                return 0.0;
            }
            acc += t.coef * v;
        }
        acc.abs().powf(beta)
    };
    let q = Quadrature { rel_tol: 1e-9, abs_tol: 1e-14, max_intervals: 8000 };
    Ok(q.integrate(integrand, &breaks)?.value)
}

/// Outcome of [`envelope_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeReport {
    pub holds: bool,
    pub worst_ratio: f64,
    pub worst_x: f64,
}

/// Checks `|g(x)| ≤ envelope(x)` on `grid_size` log-spaced points per side of
/// the origin covering `10^{-3} ≤ |x| ≤ 10^3`.
pub fn envelope_check(kernel: &KernelSpec, grid_size: usize) -> Result<EnvelopeReport> {
    if grid_size < 1000 {
        return Err(Error::Domain(format!("envelope grid needs at least 1000 points, got {grid_size}")));
    }
    let mut worst_ratio = 0.0f64;
    let mut worst_x = f64::NAN;
    let step = 6.0 / (grid_size - 1) as f64;
    for k in 0..grid_size {
        let a = 10f64.powf(-3.0 + step * k as f64);
        for x in [a, -a] {
            let v = kernel.eval_raw(x).abs();
            if !v.is_finite() {
                continue;
            }
            let env = kernel.envelope(x);
            let ratio = if env > 0.0 {
                v / env
            } else if v == 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
            if ratio > worst_ratio {
                worst_ratio = ratio;
                worst_x = x;
            }
        }
    }
    Ok(EnvelopeReport { holds: worst_ratio <= 1.0 + 1e-12, worst_ratio, worst_x })
}

/// Ordered kernels `g_1, …, g_m`; index `i` drives component `X^i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelBank {
    kernels: Vec<KernelSpec>,
}

impl KernelBank {
    pub fn new(kernels: Vec<KernelSpec>) -> Result<Self> {
        if kernels.is_empty() {
            return Err(Error::Domain("a kernel bank needs at least one kernel".into()));
        }
        Ok(Self { kernels })
    }

    pub fn len(&self) -> usize {
        self.kernels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kernels.is_empty()
    }

    pub fn kernels(&self) -> &[KernelSpec] {
        &self.kernels
    }

    pub fn get(&self, i: usize) -> &KernelSpec {
        &self.kernels[i]
    }

    pub fn min_alpha(&self) -> f64 {
        self.kernels.iter().map(|k| k.alpha).fold(f64::INFINITY, f64::min)
    }

    pub fn max_alpha(&self) -> f64 {
        self.kernels.iter().map(|k| k.alpha).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Moving-average CLT hypotheses: `α̲β > 2` and `κ_i > −1/β` for all `i`.
    pub fn check_clt_hypotheses(&self, beta: f64) -> Result<()> {
        let a = self.min_alpha();
        if a * beta <= 2.0 {
            return Err(Error::Hypothesis(format!("min alpha * beta = {} must exceed 2", a * beta)));
        }
        for (i, k) in self.kernels.iter().enumerate() {
            if k.kappa <= -1.0 / beta {
                return Err(Error::Hypothesis(format!(
                    "kernel {} has kappa = {} <= -1/beta = {}",
                    i + 1,
                    k.kappa,
                    -1.0 / beta
                )));
            }
        }
        Ok(())
    }
}
