//! Deterministic bound ingredients: the overlap integrals `ρ_{i,j,k}`, their
//! decay, the γ₁/γ₂ surrogates built from ρ-sums, and the `A_n` integral
//! with its three-regime rate.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernels::{KernelBank, KernelFamily, KernelSpec};
use crate::quad::{GaussLegendre, Quadrature};

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta < 2.0) {
        return Err(Error::Domain(format!("beta must lie in (0, 2), got {beta}")));
    }
    Ok(())
}

/// `∫ |g_i(x) g_j(x + k)|^{β/2} dx`.
pub fn rho(gi: &KernelSpec, gj: &KernelSpec, beta: f64, k: i64) -> Result<f64> {
    check_beta(beta)?;
    let half = beta / 2.0;
    let kf = k as f64;
    for g in [gi, gj] {
        if g.kappa * half <= -1.0 && !g.singular_points().is_empty() {
            return Err(Error::Divergence(format!("kappa * beta / 2 = {} <= -1", g.kappa * half)));
        }
    }
    let coincide = gi.singular_points().iter().any(|a| gj.singular_points().iter().any(|b| b - kf == *a));
    if coincide && (gi.kappa + gj.kappa) * half <= -1.0 {
        return Err(Error::Divergence(format!(
            "coinciding singularities with (kappa_i + kappa_j) * beta / 2 = {} <= -1",
            (gi.kappa + gj.kappa) * half
        )));
    }
    let tails = |g: &KernelSpec| !matches!(g.family, KernelFamily::OrnsteinUhlenbeck { .. } | KernelFamily::Indicator);
    if tails(gi) && tails(gj) && (gi.alpha + gj.alpha) * half <= 1.0 {
        return Err(Error::Divergence(format!(
            "(alpha_i + alpha_j) * beta / 2 = {} <= 1",
            (gi.alpha + gj.alpha) * half
        )));
    }
    let mut breaks = vec![f64::NEG_INFINITY, -kf - 1.0, -kf, -kf + 1.0, -1.0, 0.0, 1.0, f64::INFINITY];
    breaks.extend(gi.breakpoints().iter().copied());
    breaks.extend(gj.breakpoints().iter().map(|b| b - kf));
    let f = |x: f64| gi.abs_pow(x, half) * gj.abs_pow(x + kf, half);
    // Below 1e-200 the integrand runs into subnormals and relative accuracy is meaningless.
    let q = Quadrature { rel_tol: 1e-10, abs_tol: 1e-200, max_intervals: 8000 };
    Ok(q.integrate(f, &breaks)?.value)
}

/// `ρ_{i,j,k}` for `i, j ∈ 1..=m`, `|k| ≤ k_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct RhoTable {
    m: usize,
    k_max: usize,
    beta: f64,
    /// `values[(i m + j)(2 k_max + 1) + k + k_max]`, 0-based `i, j`.
    values: Vec<f64>,
}

impl RhoTable {
    /// Computes every cell, in parallel, stored in index order.
    pub fn build(bank: &KernelBank, beta: f64, k_max: usize) -> Result<Self> {
        check_beta(beta)?;
        let m = bank.len();
        let width = 2 * k_max + 1;
        let values = (0..m * m * width)
            .into_par_iter()
            .map(|c| {
                let pair = c / width;
                let k = (c % width) as i64 - k_max as i64;
                rho(bank.get(pair / m), bank.get(pair % m), beta, k)
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(Self { m, k_max, beta, values })
    }

    /// Table from explicit values laid out as `values[i][j][k + k_max]`.
    pub fn from_values(values: Vec<Vec<Vec<f64>>>, beta: f64) -> Result<Self> {
        let m = values.len();
        if m == 0 || values.iter().any(|r| r.len() != m) {
            return Err(Error::Contract("rho table must be m x m".into()));
        }
        let width = values[0][0].len();
        if width.is_multiple_of(2) || values.iter().flatten().any(|c| c.len() != width) {
            return Err(Error::Contract("rho table rows need a common odd length 2 k_max + 1".into()));
        }
        let flat: Vec<f64> = values.into_iter().flatten().flatten().collect();
        if flat.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::Domain("rho values must be non-negative".into()));
        }
        Ok(Self { m, k_max: width / 2, beta, values: flat })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `ρ_{i,j,k}` with 0-based `i, j`.
    pub fn get(&self, i: usize, j: usize, k: i64) -> Option<f64> {
        if i >= self.m || j >= self.m || k.unsigned_abs() as usize > self.k_max {
            return None;
        }
        let width = 2 * self.k_max + 1;
        Some(self.values[(i * self.m + j) * width + (k + self.k_max as i64) as usize])
    }

    /// CSV `i,j,k,rho` with 1-based component indices.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,j,k,rho\n");
        let km = self.k_max as i64;
        for i in 0..self.m {
            for j in 0..self.m {
                for k in -km..=km {
                    let _ = writeln!(out, "{},{},{},{:e}", i + 1, j + 1, k, self.get(i, j, k).expect("in range"));
                }
            }
        }
        out
    }

    /// `S_ab = Σ_{|u| ≤ n} ρ_{a,b,u}` summed from `u = -n` upwards.
    fn window_sums(&self, n: usize) -> Result<Vec<f64>> {
        if n > self.k_max {
            return Err(Error::Coverage(format!("rho table covers |k| <= {} but n = {n}", self.k_max)));
        }
        let ni = n as i64;
        Ok((0..self.m * self.m)
            .map(|p| (-ni..=ni).map(|u| self.get(p / self.m, p % self.m, u).expect("covered")).sum())
            .collect())
    }
}

/// Result of [`rho_decay_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct DecayReport {
    pub passes: bool,
    /// `M(k) = max_{i,j,±k} ρ_{i,j,k} |k|^{(α_i∧α_j)β/2}` for `k = 2..=k_max`.
    pub envelope: Vec<(usize, f64)>,
    pub max_ratio: f64,
    /// Worst step `M(k) / M(k − 1)` for `k > 8`.
    pub worst_growth: f64,
}

/// Decay `ρ_{i,j,k} ≤ C |k|^{-(α_i∧α_j)β/2}` for `|k| ≥ 2`: the scaled
/// maxima must be finite and no step beyond `k = 8` may grow by more than 10%.
pub fn rho_decay_check(table: &RhoTable, alphas: &[f64]) -> Result<DecayReport> {
    if alphas.len() != table.m {
        return Err(Error::Contract(format!("{} alphas for m = {}", alphas.len(), table.m)));
    }
    if table.k_max < 64 {
        return Err(Error::Coverage(format!("decay check needs k_max >= 64, table has {}", table.k_max)));
    }
    let mut envelope = Vec::with_capacity(table.k_max - 1);
    for k in 2..=table.k_max {
        let mut best = 0.0f64;
        for i in 0..table.m {
            for j in 0..table.m {
                let e = alphas[i].min(alphas[j]) * table.beta / 2.0;
                let w = (k as f64).powf(e);
                for kk in [k as i64, -(k as i64)] {
                    let r = table.get(i, j, kk).expect("covered") * w;
                    best = if r.is_nan() { f64::NAN } else { best.max(r) };
                }
            }
        }
        envelope.push((k, best));
    }
    let finite = envelope.iter().all(|(_, v)| v.is_finite());
    let max_ratio = envelope.iter().map(|e| e.1).fold(0.0, f64::max);
    let worst_growth = envelope.windows(2).filter(|w| w[1].0 > 8).map(|w| w[1].1 / w[0].1).fold(0.0f64, |a, r| {
        if r.is_nan() {
            a
        } else {
            a.max(r)
        }
    });
    Ok(DecayReport { passes: finite && worst_growth <= 1.1, envelope, max_ratio, worst_growth })
}

/// A γ surrogate and the quantity under its square root.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaBound {
    pub value: f64,
    pub pre_sqrt: f64,
}

fn check_table(table: &RhoTable, n: usize, m: usize) -> Result<f64> {
    if m != table.m {
        return Err(Error::Contract(format!("m = {m} but the rho table has m = {}", table.m)));
    }
    if n == 0 {
        return Err(Error::EmptyRequest("n must be at least 1".into()));
    }
    Ok(table.window_sums(n)?.iter().sum())
}

/// `n^{-1} Σ_{j1..j6} S_{j1j2} S_{j3j4} S_{j5j6} = T³/n` with `T = Σ_{a,b} S_ab`.
pub fn gamma1_bound(table: &RhoTable, n: usize, m: usize) -> Result<GammaBound> {
    let t = check_table(table, n, m)?;
    let pre = t * t * t / n as f64;
    Ok(GammaBound { value: pre.sqrt(), pre_sqrt: pre })
}

/// `n^{-1} Σ_{j1..j8} S_{j1j2} S_{j3j4} (S_{j5j6} + S_{j7j8}) = 2 m² T³/n`.
pub fn gamma2_bound(table: &RhoTable, n: usize, m: usize) -> Result<GammaBound> {
    let t = check_table(table, n, m)?;
    let mf = m as f64;
    let pre = 2.0 * mf * mf * t * t * t / n as f64;
    Ok(GammaBound { value: pre.sqrt(), pre_sqrt: pre })
}

/// Which kernel of an [`AnIntegrand`] feeds `A_n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    J,
    K,
}

/// `∫ (A_n^j)^p ∧ (A_n^k)^q dμ` with `μ(dz) = ds |x|^{-1-β} dx`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnIntegrand {
    pub kernel_j: KernelSpec,
    pub kernel_k: KernelSpec,
    pub beta: f64,
    pub n: usize,
    pub p: f64,
    pub q: f64,
}

impl AnIntegrand {
    pub fn new(kernel_j: KernelSpec, kernel_k: KernelSpec, beta: f64, n: usize, p: f64, q: f64) -> Result<Self> {
        let spec = Self { kernel_j, kernel_k, beta, n, p, q };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        check_beta(self.beta)?;
        if self.n == 0 {
            return Err(Error::EmptyRequest("n must be at least 1".into()));
        }
        if !(1.0..=2.0).contains(&self.p) || !(self.q > 2.0) {
            return Err(Error::Hypothesis(format!("need p in [1, 2] and q > 2, got p = {}, q = {}", self.p, self.q)));
        }
        Ok(())
    }

    pub fn with_n(&self, n: usize) -> Result<Self> {
        let s = Self { n, ..self.clone() };
        s.validate()?;
        Ok(s)
    }

    fn kernel(&self, which: Which) -> &KernelSpec {
        match which {
            Which::J => &self.kernel_j,
            Which::K => &self.kernel_k,
        }
    }

    pub fn min_alpha(&self) -> f64 {
        self.kernel_j.alpha.min(self.kernel_k.alpha)
    }
}

/// `A_n(x, s) = n^{-1/2} Σ_{i=1}^n min(1, x |g(i − s)|)`.
pub fn an_function(spec: &AnIntegrand, which: Which, x: f64, s: f64) -> Result<f64> {
    if !(x > 0.0) || !s.is_finite() {
        return Err(Error::Domain(format!("A_n needs x > 0 and finite s, got x = {x}, s = {s}")));
    }
    let g = spec.kernel(which);
    let total: f64 = (1..=spec.n).map(|i| (x * g.eval_raw(i as f64 - s).abs()).min(1.0)).sum();
    Ok(total / (spec.n as f64).sqrt())
}

/// `|g(i − s)|`, `i = 1..n`, sorted, with prefix sums: `A_n(x, s)` in `O(log n)`.
struct SortedResponses {
    sorted: Vec<f64>,
    prefix: Vec<f64>,
    norm: f64,
}

impl SortedResponses {
    fn new(g: &KernelSpec, n: usize, s: f64) -> Self {
        let mut sorted: Vec<f64> = (1..=n).map(|i| g.eval_raw(i as f64 - s).abs()).collect();
        sorted.sort_by(f64::total_cmp);
        let mut prefix = Vec::with_capacity(n + 1);
        prefix.push(0.0);
        let mut acc = 0.0;
        for v in &sorted {
            acc += v;
            prefix.push(acc);
        }
        Self { sorted, prefix, norm: 1.0 / (n as f64).sqrt() }
    }

    #[inline]
    fn eval(&self, x: f64) -> f64 {
        // Entries with x |g| ≥ 1 saturate.
        let cut = self.sorted.partition_point(|v| x * v < 1.0);
        let saturated = (self.sorted.len() - cut) as f64;
        (saturated + x * self.prefix[cut]) * self.norm
    }
}

/// Region of the `x` axis used in the accuracy diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionEstimate {
    pub value: f64,
    /// `|Q_16 − Q_8|`.
    pub error: f64,
}

/// Value of [`an_integral`] with per-region diagnostics: `I₁` on `x < 1`,
/// `I₂` on `[1, n^α̲]`, `I₃` beyond.
#[derive(Debug, Clone, PartialEq)]
pub struct AnEstimate {
    pub value: f64,
    pub error: f64,
    pub regions: [RegionEstimate; 3],
}

const U_LO: f64 = -12.0;
const U_PANEL: f64 = 0.5;
const UNIT_PAD: f64 = 8.0;
const OUTER_DOUBLINGS: u32 = 38;

fn u_panels(spec: &AnIntegrand) -> (Vec<f64>, [f64; 2]) {
    let ln_n = (spec.n as f64).ln();
    let a = spec.min_alpha();
    let top_alpha = spec.kernel_j.alpha.max(spec.kernel_k.alpha);
    let u_hi = top_alpha * ln_n + 30.0;
    let mut edges = vec![U_LO, 0.0, 0.5 * a * ln_n, (a - 0.5) * ln_n, a * ln_n, u_hi];
    let steps = ((u_hi - U_LO) / U_PANEL).ceil() as usize;
    edges.extend((0..=steps).map(|i| U_LO + i as f64 * U_PANEL).filter(|u| *u < u_hi));
    edges.retain(|u| (U_LO..=u_hi).contains(u));
    edges.sort_by(f64::total_cmp);
    edges.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    (edges, [0.0, a * ln_n])
}

/// Levels of geometric grading towards both ends of each unit `s` panel
/// when a kernel is singular at the lattice points.
const GRADING_LEVELS: i32 = 12;

fn s_nodes(spec: &AnIntegrand, rule: &GaussLegendre) -> Vec<(f64, f64)> {
    let n = spec.n;
    let lo = -UNIT_PAD;
    let hi = n as f64 + UNIT_PAD;
    let singular = [&spec.kernel_j, &spec.kernel_k].iter().any(|g| g.kappa < 0.0 && !g.singular_points().is_empty());
    // Sub-panel edges of [0, 1].
    let mut unit = vec![0.0, 1.0];
    if singular {
        for j in 1..=GRADING_LEVELS {
            let e = 2f64.powi(-j);
            unit.push(0.5 * e);
            unit.push(1.0 - 0.5 * e);
        }
        unit.sort_by(f64::total_cmp);
        unit.dedup();
    }
    let mut nodes = Vec::new();
    for i in 0..(hi - lo) as usize {
        let base = lo + i as f64;
        for w in unit.windows(2) {
            nodes.extend(rule.on(base + w[0], base + w[1]));
        }
    }
    for k in 0..OUTER_DOUBLINGS {
        let (a, b) = (UNIT_PAD * 2f64.powi(k as i32), UNIT_PAD * 2f64.powi(k as i32 + 1));
        nodes.extend(rule.on(-b, -a));
        nodes.extend(rule.on(hi - UNIT_PAD + a, hi - UNIT_PAD + b));
    }
    nodes
}

/// One tensor-product pass: `(Σ_s w_s F(x, s))` at each `x` node.
fn s_integrated(spec: &AnIntegrand, xs: &[f64], s_rule: &GaussLegendre) -> Vec<f64> {
    let nodes = s_nodes(spec, s_rule);
    let same = spec.kernel_j == spec.kernel_k;
    const CHUNK: usize = 64;
    let partials: Vec<Vec<f64>> = nodes
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut acc = vec![0.0; xs.len()];
            for &(s, ws) in chunk {
                let rj = SortedResponses::new(&spec.kernel_j, spec.n, s);
                let rk = if same { None } else { Some(SortedResponses::new(&spec.kernel_k, spec.n, s)) };
                for (a, &x) in acc.iter_mut().zip(xs) {
                    let aj = rj.eval(x);
                    let ak = rk.as_ref().map_or(aj, |r| r.eval(x));
                    *a += ws * aj.powf(spec.p).min(ak.powf(spec.q));
                }
            }
            acc
        })
        .collect();
    let mut total = vec![0.0; xs.len()];
    for part in &partials {
        for (t, v) in total.iter_mut().zip(part) {
            *t += v;
        }
    }
    total
}

/// Region sums of `2 ∫ G(u) e^{-βu} du` plus the analytic tails.
fn integrate_u(spec: &AnIntegrand, rule: &GaussLegendre) -> [f64; 3] {
    let (edges, splits) = u_panels(spec);
    let mut us = Vec::new();
    let mut wu = Vec::new();
    for w in edges.windows(2) {
        for (u, wt) in rule.on(w[0], w[1]) {
            us.push(u);
            wu.push(wt);
        }
    }
    let xs: Vec<f64> = us.iter().map(|u| u.exp()).collect();
    let g = s_integrated(spec, &xs, rule);
    // Integrand in u: h(u) = 2 G(u) e^{-βu}.
    let h: Vec<f64> = g.iter().zip(&us).map(|(g, u)| 2.0 * g * (-spec.beta * u).exp()).collect();
    let mut regions = [0.0; 3];
    for ((u, w), v) in us.iter().zip(&wu).zip(&h) {
        let r = if *u < splits[0] {
            0
        } else if *u < splits[1] {
            1
        } else {
            2
        };
        regions[r] += w * v;
    }
    // Exponential tails h ≈ C e^{r u} fitted on the outermost nodes.
    let last = us.len() - 1;
    let rate_lo = (h[1] / h[0]).ln() / (us[1] - us[0]);
    if h[0] > 0.0 && rate_lo.is_finite() && rate_lo > 0.0 {
        regions[0] += h[0] * (rate_lo * (edges[0] - us[0])).exp() / rate_lo;
    }
    let rate_hi = (h[last] / h[last - 1]).ln() / (us[last] - us[last - 1]);
    if h[last] > 0.0 && rate_hi.is_finite() && rate_hi < 0.0 {
        regions[2] += h[last] * (rate_hi * (edges[edges.len() - 1] - us[last])).exp() / -rate_hi;
    }
    regions
}

/// `2 ∫_0^∞ ∫_ℝ A_n^j(x,s)^p ∧ A_n^k(x,s)^q ds x^{-1-β} dx` to relative
/// accuracy `1e-3`, judged by comparing 8- and 16-node tensor rules.
pub fn an_integral(spec: &AnIntegrand) -> Result<AnEstimate> {
    spec.validate()?;
    for g in [&spec.kernel_j, &spec.kernel_k] {
        if g.alpha * spec.beta <= 2.0 || g.kappa <= -1.0 / spec.beta {
            return Err(Error::Hypothesis(format!(
                "A_n integral needs alpha * beta > 2 and kappa > -1/beta, got alpha = {}, kappa = {}",
                g.alpha, g.kappa
            )));
        }
    }
    let coarse = integrate_u(spec, &GaussLegendre::new(8));
    let fine = integrate_u(spec, &GaussLegendre::new(16));
    let regions: [RegionEstimate; 3] =
        std::array::from_fn(|r| RegionEstimate { value: fine[r], error: (fine[r] - coarse[r]).abs() });
    let value: f64 = fine.iter().sum();
    let error = (value - coarse.iter().sum::<f64>()).abs();
    if !value.is_finite() || error > 1e-3 * value.abs() {
        return Err(Error::Accuracy(format!(
            "A_n integral at n = {}: value {value:e}, error {error:e}; regions I1 {:?}, I2 {:?}, I3 {:?}",
            spec.n, regions[0], regions[1], regions[2]
        )));
    }
    Ok(AnEstimate { value, error, regions })
}

/// Predicted exponent of `n` in the `A_n` integral bound and whether a
/// `log n` factor accompanies it.
pub fn rate_prediction(alpha_min: f64, beta: f64, q: f64) -> Result<(f64, bool)> {
    let ab = alpha_min * beta;
    if !(ab > 2.0) {
        return Err(Error::Hypothesis(format!("min alpha * beta = {ab} must exceed 2")));
    }
    if (ab - q).abs() <= 1e-9 {
        Ok((1.0 - q / 2.0, true))
    } else if ab > q {
        Ok((1.0 - q / 2.0, false))
    } else {
        Ok(((2.0 - ab) / 2.0, false))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ou(l: f64) -> KernelSpec {
        KernelSpec::ou(l).unwrap()
    }

    #[test]
    fn rho_examples() {
        let g = ou(1.0);
        let v = rho(&g, &g, 1.0, 2).unwrap();
        assert!(((v - (-1.0f64).exp()) / v).abs() < 1e-9);
        let v = rho(&g, &g, 1.5, 0).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-9);
        let tp = KernelSpec::truncated_power_law(-0.2, 2.0).unwrap();
        for k in [-3, 1, 5] {
            let a = rho(&tp, &g, 1.5, k).unwrap();
            let b = rho(&g, &tp, 1.5, -k).unwrap();
            assert!(((a - b) / a).abs() < 1e-8);
        }
    }

    #[test]
    fn rho_far_lags_underflow_gracefully() {
        let g = ou(1.0);
        for k in [-738, 740, 4096] {
            let r = rho(&g, &g, 1.5, k).unwrap();
            assert!(r < 1e-200);
        }
    }

    #[test]
    fn rho_divergence() {
        // κβ/2 = −0.6 is integrable alone; stacked at k = 0 it is −1.2.
        let bad = KernelSpec::truncated_power_law(-0.8, 2.0).unwrap();
        assert!(rho(&bad, &bad, 1.5, 1).is_ok());
        assert!(matches!(rho(&bad, &bad, 1.5, 0), Err(Error::Divergence(_))));
        let slow = KernelSpec::truncated_power_law(0.0, 0.6).unwrap();
        assert!(matches!(rho(&slow, &slow, 1.5, 3), Err(Error::Divergence(_))));
    }

    #[test]
    fn table_layout_and_symmetry() {
        let bank = KernelBank::new(vec![ou(1.0), KernelSpec::truncated_power_law(0.5, 2.0).unwrap()]).unwrap();
        let t = RhoTable::build(&bank, 1.5, 4).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                for k in -4..=4 {
                    let a = t.get(i, j, k).unwrap();
                    let b = t.get(j, i, -k).unwrap();
                    assert!(a >= 0.0);
                    assert!((a - b).abs() <= 1e-8 * a.max(1e-300));
                }
            }
        }
        assert_eq!(t.get(0, 0, 5), None);
        let csv = t.to_csv();
        assert!(csv.starts_with("i,j,k,rho\n1,1,-4,"));
        assert_eq!(csv.lines().count(), 1 + 4 * 9);
    }

    #[test]
    fn decay_check_examples() {
        let tp = KernelSpec::truncated_power_law(0.0, 2.0).unwrap();
        let bank = KernelBank::new(vec![tp]).unwrap();
        let t = RhoTable::build(&bank, 1.5, 128).unwrap();
        let r = rho_decay_check(&t, &[2.0]).unwrap();
        assert!(r.passes, "{r:?}");
        let tail: Vec<f64> = r.envelope.iter().filter(|e| e.0 >= 32).map(|e| e.1).collect();
        let (lo, hi) = tail.iter().fold((f64::INFINITY, 0.0f64), |(a, b), v| (a.min(*v), b.max(*v)));
        assert!(hi / lo < 3.0);
        assert_eq!(r.envelope[0].0, 2);

        let ou_bank = KernelBank::new(vec![ou(1.0)]).unwrap();
        let t = RhoTable::build(&ou_bank, 1.5, 64).unwrap();
        let r = rho_decay_check(&t, &[8.0]).unwrap();
        assert!(r.passes);
        assert!(r.envelope.last().unwrap().1 < 1e-10);

        let small = RhoTable::build(&ou_bank, 1.5, 10).unwrap();
        assert!(matches!(rho_decay_check(&small, &[8.0]), Err(Error::Coverage(_))));
    }

    fn brute_gamma2(table: &RhoTable, n: usize, m: usize) -> f64 {
        let s = table.window_sums(n).unwrap();
        let sab = |a: usize, b: usize| s[a * m + b];
        let mut total = 0.0;
        let mut idx = [0usize; 8];
        for code in 0..m.pow(8) {
            let mut c = code;
            for v in idx.iter_mut() {
                *v = c % m;
                c /= m;
            }
            total += sab(idx[0], idx[1]) * sab(idx[2], idx[3]) * (sab(idx[4], idx[5]) + sab(idx[6], idx[7]));
        }
        total / n as f64
    }

    #[test]
    fn gamma_surrogates() {
        let bank = KernelBank::new(vec![ou(1.0), ou(0.5)]).unwrap();
        let t = RhoTable::build(&bank, 1.5, 16).unwrap();
        let g2 = gamma2_bound(&t, 16, 2).unwrap();
        let brute = brute_gamma2(&t, 16, 2);
        assert!(((g2.pre_sqrt - brute) / brute).abs() < 1e-12);
        assert!((g2.value - g2.pre_sqrt.sqrt()).abs() < 1e-15);

        let g1 = gamma1_bound(&t, 1, 2).unwrap();
        assert!(g1.value.is_finite() && g1.value > 0.0);
        assert!(matches!(gamma1_bound(&t, 17, 2), Err(Error::Coverage(_))));
        assert!(matches!(gamma1_bound(&t, 4, 3), Err(Error::Contract(_))));

        let zero = RhoTable::from_values(vec![vec![vec![0.0; 9]]], 1.5).unwrap();
        assert_eq!(gamma2_bound(&zero, 4, 1).unwrap().value, 0.0);
    }

    #[test]
    fn an_function_examples() {
        let g = KernelSpec::truncated_power_law(0.0, 2.0).unwrap();
        let spec = AnIntegrand::new(g, g, 1.5, 50, 2.0, 3.0).unwrap();
        let root_n = 50f64.sqrt();
        for (x, s) in [(0.1, 0.5), (10.0, 25.3), (1e9, -3.0)] {
            assert!(an_function(&spec, Which::J, x, s).unwrap() <= root_n + 1e-12);
        }
        let a = an_function(&spec, Which::J, 1e-6, 0.5).unwrap();
        let b = an_function(&spec, Which::J, 2e-6, 0.5).unwrap();
        assert!((b / a - 2.0).abs() < 1e-12);
        assert!((an_function(&spec, Which::K, 1e12, 0.5).unwrap() - root_n).abs() < 1e-12);
        let o = AnIntegrand::new(ou(1.0), ou(1.0), 1.5, 50, 2.0, 3.0).unwrap();
        // Causal: only i ≥ s contribute, 25 of 50 lattice points for s = 25.5.
        assert!((an_function(&o, Which::J, 1e300, 25.5).unwrap() - 25.0 / root_n).abs() < 1e-12);
        assert!(an_function(&spec, Which::J, 0.0, 1.0).is_err());
    }

    #[test]
    fn sorted_responses_match_direct_sum() {
        let g = KernelSpec::truncated_power_law(-0.3, 2.5).unwrap();
        let spec = AnIntegrand::new(g, g, 1.5, 40, 2.0, 3.0).unwrap();
        for s in [-7.25, 0.0, 3.5, 17.0, 52.1] {
            let r = SortedResponses::new(&g, 40, s);
            for x in [1e-3, 0.2, 1.0, 7.0, 1e4] {
                let direct = an_function(&spec, Which::J, x, s).unwrap();
                assert!((r.eval(x) - direct).abs() < 1e-12 * direct.max(1.0), "s={s} x={x}");
            }
        }
    }

    #[test]
    fn an_integral_gates() {
        let g = KernelSpec::truncated_power_law(0.0, 2.0).unwrap();
        assert!(matches!(AnIntegrand::new(g, g, 1.5, 8, 2.0, 2.0), Err(Error::Hypothesis(_))));
        assert!(matches!(AnIntegrand::new(g, g, 1.5, 8, 0.5, 3.0), Err(Error::Hypothesis(_))));
        let weak = KernelSpec::truncated_power_law(0.0, 1.2).unwrap();
        let spec = AnIntegrand::new(weak, weak, 1.5, 8, 2.0, 3.0).unwrap();
        assert!(matches!(an_integral(&spec), Err(Error::Hypothesis(_))));
    }

    #[test]
    fn an_integral_small_n_is_accurate() {
        let g = KernelSpec::truncated_power_law(0.0, 8.0 / 3.0).unwrap();
        let spec = AnIntegrand::new(g, g, 1.5, 16, 2.0, 3.0).unwrap();
        let est = an_integral(&spec).unwrap();
        assert!(est.value > 0.0);
        assert!(est.error <= 1e-3 * est.value);
        let total: f64 = est.regions.iter().map(|r| r.value).sum();
        assert!((total - est.value).abs() < 1e-12 * est.value);
    }

    #[test]
    fn rate_prediction_cases() {
        assert_eq!(rate_prediction(8.0 / 3.0, 1.5, 3.0).unwrap(), (-0.5, false));
        assert_eq!(rate_prediction(2.0, 1.5, 3.0).unwrap(), (-0.5, true));
        let (e, log) = rate_prediction(5.0 / 3.0, 1.5, 3.0).unwrap();
        assert!((e + 0.25).abs() < 1e-12 && !log);
        assert!(matches!(rate_prediction(4.0 / 3.0, 1.5, 3.0), Err(Error::Hypothesis(_))));
    }
}
