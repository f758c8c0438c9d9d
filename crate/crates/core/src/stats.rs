//! Trigonometric functionals, the partial-sum statistic `V_n`, and exact
//! lag covariances via the stable characteristic functional.

use log::warn;
use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernels::{combination_beta_integral, KernelBank, KernelTerm};
use crate::simulate::{LatticeLaw, PathMatrix};
use crate::stable::StableParams;

/// A law for the `m`-dimensional moving average given through the integral
/// `∫ |Σ_k c_k g_{i_k}(t_k + x)|^β dx` appearing in its characteristic functional.
pub trait JointLaw: Sync {
    fn m(&self) -> usize;

    /// Smallest certified tail exponent α over the components.
    fn min_alpha(&self) -> f64;

    /// Terms are `(component, coefficient, integer time)`.
    fn beta_integral(&self, terms: &[(usize, f64, i64)], beta: f64) -> Result<f64>;

    /// `E exp(i Σ_k c_k X_{t_k}^{i_k})`, real by symmetry.
    fn char_fn(&self, terms: &[(usize, f64, i64)], params: &StableParams) -> Result<f64> {
        let i = self.beta_integral(terms, params.beta)?;
        Ok((-params.scale.powf(params.beta) * i).exp())
    }
}

impl JointLaw for KernelBank {
    fn m(&self) -> usize {
        self.len()
    }

    fn min_alpha(&self) -> f64 {
        KernelBank::min_alpha(self)
    }

    fn beta_integral(&self, terms: &[(usize, f64, i64)], beta: f64) -> Result<f64> {
        let terms: Vec<KernelTerm<'_>> =
            terms.iter().map(|&(i, coef, t)| KernelTerm { kernel: self.get(i), coef, shift: t as f64 }).collect();
        combination_beta_integral(&terms, beta)
    }
}

impl JointLaw for LatticeLaw {
    fn m(&self) -> usize {
        LatticeLaw::m(self)
    }

    fn min_alpha(&self) -> f64 {
        self.weights().min_alpha
    }

    fn beta_integral(&self, terms: &[(usize, f64, i64)], beta: f64) -> Result<f64> {
        if beta != self.beta() {
            return Err(Error::Contract(format!("lattice law built for beta = {}, asked for {beta}", self.beta())));
        }
        Ok(self.beta_sum(terms))
    }
}

/// `f_i(x) = a_i cos(⟨u_i, x⟩ + θ_i)`, `i = 1..d`, on `ℝ^m`.
#[derive(Debug, Clone, PartialEq)]
pub struct Functional {
    /// `d × m`, row `i` is `u_i`.
    pub freqs: DMatrix<f64>,
    pub phases: Vec<f64>,
    pub amps: Vec<f64>,
    /// `|a_i| max_j |U_ij|`.
    pub grad_bound: Vec<f64>,
    /// `|a_i| max_{j,k} |U_ij U_ik|`.
    pub hess_bound: Vec<f64>,
}

pub fn make_trig_functional(freqs: DMatrix<f64>, phases: Vec<f64>, amps: Vec<f64>) -> Result<Functional> {
    let d = freqs.nrows();
    if d == 0 || freqs.ncols() == 0 {
        return Err(Error::EmptyRequest("functional needs d >= 1 and m >= 1".into()));
    }
    if phases.len() != d || amps.len() != d {
        return Err(Error::Contract(format!(
            "{d} frequency rows but {} phases and {} amplitudes",
            phases.len(),
            amps.len()
        )));
    }
    if freqs.iter().chain(&phases).chain(&amps).any(|v| !v.is_finite()) {
        return Err(Error::Domain("functional entries must be finite".into()));
    }
    let (grad_bound, hess_bound) = (0..d)
        .map(|i| {
            let umax = freqs.row(i).iter().fold(0.0f64, |a, v| a.max(v.abs()));
            (amps[i].abs() * umax, amps[i].abs() * umax * umax)
        })
        .unzip();
    Ok(Functional { freqs, phases, amps, grad_bound, hess_bound })
}

impl Functional {
    pub fn d(&self) -> usize {
        self.freqs.nrows()
    }

    pub fn m(&self) -> usize {
        self.freqs.ncols()
    }

    pub fn eval(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let mut arg = self.phases[i];
            for (j, xj) in x.iter().enumerate() {
                arg += self.freqs[(i, j)] * xj;
            }
            *o = self.amps[i] * arg.cos();
        }
    }

    fn terms(&self, i: usize, sign: f64, t: i64, out: &mut Vec<(usize, f64, i64)>) {
        for j in 0..self.m() {
            out.push((j, sign * self.freqs[(i, j)], t));
        }
    }

    fn check_law<L: JointLaw + ?Sized>(&self, law: &L) -> Result<()> {
        if law.m() != self.m() {
            return Err(Error::Contract(format!("functional acts on R^{} but the law has m = {}", self.m(), law.m())));
        }
        Ok(())
    }
}

/// `E f(X_0)`, exact up to quadrature: `a_i cos θ_i exp(−scale^β ∫|Σ_j U_ij g_j|^β)`.
pub fn analytic_mean_trig<L: JointLaw + ?Sized>(f: &Functional, law: &L, params: &StableParams) -> Result<Vec<f64>> {
    params.validate()?;
    f.check_law(law)?;
    (0..f.d())
        .map(|i| {
            let mut terms = Vec::new();
            f.terms(i, 1.0, 0, &mut terms);
            Ok(f.amps[i] * f.phases[i].cos() * law.char_fn(&terms, params)?)
        })
        .collect()
}

/// `V_n^i = n^{-1/2} Σ_{s=1}^n (f_i(X_s) − centering_i)`.
pub fn evaluate_vn(paths: &PathMatrix, f: &Functional, centering: &[f64]) -> Result<Vec<f64>> {
    if paths.m() != f.m() {
        return Err(Error::Contract(format!("paths have m = {} but the functional expects {}", paths.m(), f.m())));
    }
    if centering.len() != f.d() {
        return Err(Error::Contract(format!("centering has length {} but d = {}", centering.len(), f.d())));
    }
    let n = paths.n();
    let mut sums = vec![0.0; f.d()];
    let mut x = vec![0.0; f.m()];
    let mut y = vec![0.0; f.d()];
    for s in 1..=n {
        paths.observation(s, &mut x);
        f.eval(&x, &mut y);
        for (acc, (v, c)) in sums.iter_mut().zip(y.iter().zip(centering)) {
            *acc += v - c;
        }
    }
    let norm = (n as f64).sqrt();
    Ok(sums.into_iter().map(|v| v / norm).collect())
}

/// `cov(f_i(X_lag), f_j(X_0))` for any integer lag.
pub fn analytic_lag_covariance_trig<L: JointLaw + ?Sized>(
    f: &Functional,
    law: &L,
    params: &StableParams,
    i: usize,
    j: usize,
    lag: i64,
) -> Result<f64> {
    params.validate()?;
    f.check_law(law)?;
    if i >= f.d() || j >= f.d() {
        return Err(Error::Contract(format!("component index out of range for d = {}", f.d())));
    }
    let (ai, aj) = (f.amps[i], f.amps[j]);
    if ai == 0.0 || aj == 0.0 {
        return Ok(0.0);
    }
    let (ti, tj) = (f.phases[i], f.phases[j]);
    let mut plus = Vec::new();
    f.terms(i, 1.0, lag, &mut plus);
    f.terms(j, 1.0, 0, &mut plus);
    let mut minus = Vec::new();
    f.terms(i, 1.0, lag, &mut minus);
    f.terms(j, -1.0, 0, &mut minus);
    let mut single_i = Vec::new();
    f.terms(i, 1.0, 0, &mut single_i);
    let mut single_j = Vec::new();
    f.terms(j, 1.0, 0, &mut single_j);

    let second = 0.5
        * ai
        * aj
        * ((ti + tj).cos() * law.char_fn(&plus, params)? + (ti - tj).cos() * law.char_fn(&minus, params)?);
    let mi = ai * ti.cos() * law.char_fn(&single_i, params)?;
    let mj = aj * tj.cos() * law.char_fn(&single_j, params)?;
    Ok(second - mi * mj)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    /// `Σ_{|s| ≤ S}` of exact lag covariances, with the estimated remainder bound.
    AnalyticSeries {
        truncation: usize,
        tail_bound: f64,
    },
    Empirical {
        replications: usize,
    },
}

/// Symmetric `d × d` covariance with its origin.
#[derive(Debug, Clone, PartialEq)]
pub struct CovMatrix {
    pub entries: DMatrix<f64>,
    pub provenance: Provenance,
}

impl CovMatrix {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.entries.clone()).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// Nearest PSD matrix by clipping negative eigenvalues to zero; the flag
    /// tells whether anything was clipped.
    pub fn clipped_psd(&self) -> (DMatrix<f64>, bool) {
        let eig = SymmetricEigen::new(self.entries.clone());
        if eig.eigenvalues.iter().all(|v| *v >= 0.0) {
            return (self.entries.clone(), false);
        }
        let clipped = eig.eigenvalues.map(|v| v.max(0.0));
        let m = &eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose();
        (0.5 * (&m + m.transpose()), true)
    }
}

/// How far to sum the covariance series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Truncation {
    Fixed(usize),
    /// Smallest `S ≥ min_lag` whose tail bound is below `rel` times the
    /// largest diagonal entry, up to `max_lag`.
    Adaptive {
        rel: f64,
        min_lag: usize,
        max_lag: usize,
    },
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation::Adaptive { rel: 1e-2, min_lag: 4, max_lag: 4096 }
    }
}

/// `Σ²` together with the pieces a report needs.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticCovariance {
    pub sigma2: CovMatrix,
    pub eigenvalues: Vec<f64>,
    /// PSD version used for Gaussian expectations.
    pub psd: DMatrix<f64>,
    pub clipped: bool,
}

fn lag_matrix<L: JointLaw + ?Sized>(f: &Functional, law: &L, params: &StableParams, lag: i64) -> Result<DMatrix<f64>> {
    let d = f.d();
    let cells: Vec<f64> = (0..d * d)
        .into_par_iter()
        .map(|c| analytic_lag_covariance_trig(f, law, params, c / d, c % d, lag))
        .collect::<Result<_>>()?;
    Ok(DMatrix::from_row_slice(d, d, &cells))
}

/// Remainder bound `2 C_tail Σ_{s>S} s^{-γ} ≤ 2 C_tail S^{1-γ}/(γ-1)` with
/// `C_tail = max_{s ∈ [S/2, S]} max_{i,j} |C_s(i,j)| s^γ`, `γ = α̲β/2`.
fn tail_bound(lags: &[DMatrix<f64>], s: usize, gamma: f64) -> f64 {
    let c_tail = (s.div_ceil(2).max(1)..=s).map(|k| lags[k].amax() * (k as f64).powf(gamma)).fold(0.0, f64::max);
    2.0 * c_tail * (s as f64).powf(1.0 - gamma) / (gamma - 1.0)
}

/// `Σ² = C_0 + Σ_{s=1}^S (C_s + C_sᵀ)` with `C_s(i,j) = cov(f_i(X_s), f_j(X_0))`.
pub fn asymptotic_covariance<L: JointLaw + ?Sized>(
    f: &Functional,
    law: &L,
    params: &StableParams,
    truncation: Truncation,
) -> Result<AsymptoticCovariance> {
    params.validate()?;
    f.check_law(law)?;
    let gamma = law.min_alpha() * params.beta / 2.0;
    if gamma <= 1.0 {
        return Err(Error::Hypothesis(format!("min alpha * beta = {} must exceed 2", 2.0 * gamma)));
    }
    let mut lags = vec![lag_matrix(f, law, params, 0)?];
    let (s_final, bound) = match truncation {
        Truncation::Fixed(s) => {
            for k in 1..=s {
                lags.push(lag_matrix(f, law, params, k as i64)?);
            }
            (s, if s == 0 { f64::NAN } else { tail_bound(&lags, s, gamma) })
        }
        Truncation::Adaptive { rel, min_lag, max_lag } => {
            let scale = lags[0].diagonal().amax();
            if scale == 0.0 {
                (0, 0.0)
            } else {
                let mut s = 0;
                loop {
                    s += 1;
                    lags.push(lag_matrix(f, law, params, s as i64)?);
                    if s < min_lag.max(1) {
                        continue;
                    }
                    let b = tail_bound(&lags, s, gamma);
                    if b <= rel * scale {
                        break (s, b);
                    }
                    if s >= max_lag {
                        warn!("covariance series: tail bound {b:e} still above {:e} at lag {s}", rel * scale);
                        break (s, b);
                    }
                }
            }
        }
    };
    let mut sigma = lags[0].clone();
    for c in &lags[1..] {
        sigma += c + c.transpose();
    }
    let sigma2 =
        CovMatrix { entries: sigma, provenance: Provenance::AnalyticSeries { truncation: s_final, tail_bound: bound } };
    let eigenvalues = sigma2.eigenvalues();
    let (psd, clipped) = sigma2.clipped_psd();
    if clipped {
        warn!("asymptotic covariance has negative eigenvalues {eigenvalues:?}; clipped to zero");
    }
    Ok(AsymptoticCovariance { sigma2, eigenvalues, psd, clipped })
}

/// Sample covariance of `R` draws with per-entry standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCovariance {
    pub cov: CovMatrix,
    /// Standard error of each entry: sd of the centred products over `√R`.
    pub std_errors: DMatrix<f64>,
    pub means: Vec<f64>,
}

/// Unbiased sample covariance of the rows of `samples` (`R × d`), summed in row order.
pub fn empirical_covariance(samples: &[Vec<f64>]) -> Result<EmpiricalCovariance> {
    let r = samples.len();
    if r < 2 {
        return Err(Error::SampleSize { needed: 2, got: r });
    }
    let d = samples[0].len();
    if samples.iter().any(|row| row.len() != d) {
        return Err(Error::Contract("sample rows have different lengths".into()));
    }
    let rf = r as f64;
    let mut means = vec![0.0; d];
    for row in samples {
        for (m, v) in means.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut means {
        *m /= rf;
    }
    let mut sum = DMatrix::<f64>::zeros(d, d);
    let mut sum_sq = DMatrix::<f64>::zeros(d, d);
    for row in samples {
        for a in 0..d {
            for b in 0..d {
                let p = (row[a] - means[a]) * (row[b] - means[b]);
                sum[(a, b)] += p;
                sum_sq[(a, b)] += p * p;
            }
        }
    }
    let cov = &sum / (rf - 1.0);
    let std_errors = DMatrix::from_fn(d, d, |a, b| {
        let mean_p = sum[(a, b)] / rf;
        let var_p = (sum_sq[(a, b)] / rf - mean_p * mean_p).max(0.0) * rf / (rf - 1.0);
        (var_p / rf).sqrt()
    });
    Ok(EmpiricalCovariance {
        cov: CovMatrix { entries: cov, provenance: Provenance::Empirical { replications: r } },
        std_errors,
        means,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::KernelSpec;
    use crate::simulate::{plan_grid, simulate_paths};
    use crate::stable::SeedStream;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;
    use std::f64::consts::FRAC_PI_2;

    fn ou_bank(lambdas: &[f64]) -> KernelBank {
        KernelBank::new(lambdas.iter().map(|l| KernelSpec::ou(*l).unwrap()).collect()).unwrap()
    }

    fn p15() -> StableParams {
        StableParams::new(1.5, 1.0).unwrap()
    }

    #[test]
    fn functional_examples() {
        let c = make_trig_functional(DMatrix::zeros(1, 1), vec![0.0], vec![1.0]).unwrap();
        let mut out = [0.0];
        c.eval(&[3.7], &mut out);
        assert_eq!(out[0], 1.0);
        assert_eq!(c.grad_bound[0], 0.0);

        let pair =
            make_trig_functional(DMatrix::from_row_slice(2, 1, &[1.0, 1.0]), vec![0.0, FRAC_PI_2], vec![1.0, 1.0])
                .unwrap();
        let mut out = [0.0; 2];
        pair.eval(&[0.7], &mut out);
        assert!((out[0] - 0.7f64.cos()).abs() < 1e-15);
        assert!((out[1] + 0.7f64.sin()).abs() < 1e-15);

        let joint = make_trig_functional(DMatrix::from_row_slice(1, 2, &[1.0, -1.0]), vec![0.0], vec![1.0]).unwrap();
        let mut out = [0.0];
        joint.eval(&[0.4, 0.1], &mut out);
        assert!((out[0] - 0.3f64.cos()).abs() < 1e-15);

        let f = make_trig_functional(DMatrix::from_row_slice(1, 2, &[0.5, -2.0]), vec![0.0], vec![-3.0]).unwrap();
        assert_eq!(f.grad_bound[0], 6.0);
        assert_eq!(f.hess_bound[0], 12.0);
        assert!(make_trig_functional(DMatrix::from_element(1, 1, f64::NAN), vec![0.0], vec![1.0]).is_err());
    }

    #[test]
    fn mean_examples() {
        let bank = ou_bank(&[1.0]);
        let f = make_trig_functional(DMatrix::from_element(1, 1, 1.0), vec![0.0], vec![1.0]).unwrap();
        let m = analytic_mean_trig(&f, &bank, &p15()).unwrap();
        assert!((m[0] - (-2.0f64 / 3.0).exp()).abs() < 1e-9);
        assert!((m[0] - 0.51342).abs() < 1e-5);

        let c = make_trig_functional(DMatrix::zeros(1, 1), vec![0.3], vec![2.0]).unwrap();
        assert_eq!(analytic_mean_trig(&c, &bank, &p15()).unwrap()[0], 2.0 * 0.3f64.cos());

        let twin = ou_bank(&[1.0, 1.0]);
        let diff = make_trig_functional(DMatrix::from_row_slice(1, 2, &[1.0, -1.0]), vec![0.0], vec![1.0]).unwrap();
        assert!((analytic_mean_trig(&diff, &twin, &p15()).unwrap()[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn lag_covariance_examples() {
        let bank = ou_bank(&[1.0]);
        let p = p15();
        let f = make_trig_functional(DMatrix::from_element(1, 1, 1.0), vec![0.0], vec![1.0]).unwrap();
        assert!(analytic_lag_covariance_trig(&f, &bank, &p, 0, 0, 50).unwrap().abs() < 1e-8);

        // Var cos(X_0) = ½(1 + E cos 2X_0) − (E cos X_0)².
        let double = make_trig_functional(DMatrix::from_element(1, 1, 2.0), vec![0.0], vec![1.0]).unwrap();
        let m1 = analytic_mean_trig(&f, &bank, &p).unwrap()[0];
        let m2 = analytic_mean_trig(&double, &bank, &p).unwrap()[0];
        let var = analytic_lag_covariance_trig(&f, &bank, &p, 0, 0, 0).unwrap();
        assert!((var - (0.5 * (1.0 + m2) - m1 * m1)).abs() < 1e-12);

        let z =
            make_trig_functional(DMatrix::from_row_slice(2, 1, &[0.0, 1.0]), vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        for lag in [0, 1, 5] {
            assert_eq!(analytic_lag_covariance_trig(&z, &bank, &p, 0, 1, lag).unwrap(), 0.0);
            assert_eq!(analytic_lag_covariance_trig(&z, &bank, &p, 0, 0, lag).unwrap(), 0.0);
        }
    }

    #[test]
    fn lag_symmetry() {
        let bank = ou_bank(&[1.0, 2.0]);
        let p = p15();
        let f =
            make_trig_functional(DMatrix::from_row_slice(2, 2, &[1.0, 0.5, -0.3, 1.2]), vec![0.2, 1.0], vec![1.0, 0.7])
                .unwrap();
        for lag in [1, 2, 3] {
            let a = analytic_lag_covariance_trig(&f, &bank, &p, 0, 1, lag).unwrap();
            let b = analytic_lag_covariance_trig(&f, &bank, &p, 1, 0, -lag).unwrap();
            assert!((a - b).abs() < 1e-9 * a.abs().max(1e-12), "{a} {b}");
        }
    }

    #[test]
    fn asymptotic_covariance_examples() {
        let p = p15();
        let bank = ou_bank(&[1.0]);
        let c = make_trig_functional(DMatrix::zeros(1, 1), vec![0.0], vec![1.0]).unwrap();
        let r = asymptotic_covariance(&c, &bank, &p, Truncation::default()).unwrap();
        assert_eq!(r.sigma2.entries[(0, 0)], 0.0);

        let iid = KernelBank::new(vec![KernelSpec::indicator_with_alpha(3.0).unwrap()]).unwrap();
        let f = make_trig_functional(DMatrix::from_element(1, 1, 1.0), vec![0.0], vec![1.0]).unwrap();
        let r = asymptotic_covariance(&f, &iid, &p, Truncation::default()).unwrap();
        let var = analytic_lag_covariance_trig(&f, &iid, &p, 0, 0, 0).unwrap();
        assert!((r.sigma2.entries[(0, 0)] - var).abs() < 1e-12);

        let lfsn = KernelBank::new(vec![KernelSpec::lfsn(0.8, 1.5).unwrap()]).unwrap();
        assert!(matches!(asymptotic_covariance(&f, &lfsn, &p, Truncation::default()), Err(Error::Hypothesis(_))));
    }

    #[test]
    fn truncation_monotone_within_bound() {
        let p = p15();
        let bank = ou_bank(&[0.5, 1.0]);
        let f =
            make_trig_functional(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.5, 0.5]), vec![0.0, 0.3], vec![1.0, 1.0])
                .unwrap();
        let a = asymptotic_covariance(&f, &bank, &p, Truncation::Fixed(10)).unwrap();
        let b = asymptotic_covariance(&f, &bank, &p, Truncation::Fixed(40)).unwrap();
        let Provenance::AnalyticSeries { tail_bound, .. } = a.sigma2.provenance else { panic!() };
        assert!((&a.sigma2.entries - &b.sigma2.entries).amax() <= tail_bound);
    }

    #[test]
    fn vn_examples() {
        let bank = ou_bank(&[1.0]);
        let p = p15();
        let grid = plan_grid(&bank, &p, 7, 5e-2).unwrap();
        let paths = simulate_paths(&bank, &p, &grid, SeedStream::new(1, 1)).unwrap();
        let c = make_trig_functional(DMatrix::zeros(1, 1), vec![0.0], vec![1.5]).unwrap();
        assert_eq!(evaluate_vn(&paths, &c, &[1.5]).unwrap(), vec![0.0]);

        let f = make_trig_functional(DMatrix::from_element(1, 1, 1.0), vec![0.0], vec![1.0]).unwrap();
        let one = simulate_paths(&bank, &p, &grid.with_n(1).unwrap(), SeedStream::new(1, 2)).unwrap();
        let v = evaluate_vn(&one, &f, &[0.25]).unwrap();
        assert!((v[0] - (one.get(0, 1).cos() - 0.25)).abs() < 1e-15);

        let wide = make_trig_functional(DMatrix::zeros(1, 2), vec![0.0], vec![1.0]).unwrap();
        assert!(matches!(evaluate_vn(&paths, &wide, &[1.0]), Err(Error::Contract(_))));
    }

    #[test]
    fn lattice_law_matches_continuum_within_planning_tolerance() {
        let bank = ou_bank(&[1.0, 2.0]);
        let p = p15();
        let grid = plan_grid(&bank, &p, 10, 1e-3).unwrap();
        let lattice = LatticeLaw::new(&bank, &grid);
        let terms = [(0, 1.0, 0), (1, -0.5, 2)];
        let a = bank.beta_integral(&terms, 1.5).unwrap();
        let b = lattice.beta_integral(&terms, 1.5).unwrap();
        assert!(((a - b) / a).abs() < 1e-2, "{a} {b}");
        assert!(lattice.beta_integral(&terms, 1.2).is_err());
    }

    #[test]
    fn empirical_covariance_examples() {
        let same = vec![vec![1.0, 2.0]; 10];
        let e = empirical_covariance(&same).unwrap();
        assert_eq!(e.cov.entries, DMatrix::zeros(2, 2));

        let one = vec![vec![1.0], vec![2.0], vec![4.0]];
        let e = empirical_covariance(&one).unwrap();
        assert!((e.cov.entries[(0, 0)] - 7.0 / 3.0).abs() < 1e-14);

        assert!(matches!(empirical_covariance(&[vec![1.0]]), Err(Error::SampleSize { .. })));

        use rand_distr::{Distribution, StandardNormal};
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let r = 10_000;
        let rows: Vec<Vec<f64>> = (0..r).map(|_| (0..3).map(|_| StandardNormal.sample(&mut rng)).collect()).collect();
        let e = empirical_covariance(&rows).unwrap();
        let tol = 3.0 * (2.0 / r as f64).sqrt();
        let diff = &e.cov.entries - DMatrix::<f64>::identity(3, 3);
        assert!(diff.amax() < tol, "{diff}");
    }

    #[test]
    fn clipping_reports_negative_eigenvalues() {
        let c = CovMatrix {
            entries: DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]),
            provenance: Provenance::Empirical { replications: 2 },
        };
        let (psd, clipped) = c.clipped_psd();
        assert!(clipped);
        assert!(CovMatrix { entries: psd, provenance: Provenance::Empirical { replications: 2 } }
            .eigenvalues()
            .iter()
            .all(|v| *v >= -1e-12));
    }
}
