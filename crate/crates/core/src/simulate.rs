//! Lattice discretisation of `X_t^i = ∫ g_i(t − s) dL_s` on integer times,
//! with every component driven by the same stable increments.
//!
//! Increments `ΔL_j` live on left endpoints `t_j = (1 − T) + jh` and carry
//! scale `scale · h^{1/β}`. Each `X_s^i` sums `g_i(s − t_j) ΔL_j` over the
//! window `|s − t_j| ≤ T`, so the discretised process is exactly stationary
//! and exactly symmetric stable with scale `(scale^β h Σ_k |g_i(kh)|^β)^{1/β}`.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::kernels::{beta_norm, KernelBank, KernelSpec};
use crate::quad::Quadrature;
use crate::stable::{fill_sbs, increment_scale, SeedStream, StableParams};

const MAX_TRUNC_LOG2: u32 = 20;
const MAX_MESH_LOG2: u32 = 12;
/// Largest admissible window `T/h`; beyond this a single path is impractical.
const MAX_HALF_WINDOW: u64 = 1 << 22;

/// Per-kernel discretisation certificate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelCertificate {
    /// `(∫_{|s|>T} |g|^β / ∫ |g|^β)^{1/β}`.
    pub truncation_error: f64,
    /// `|(h Σ_{|kh|≤T} |g(kh)|^β / ∫|g|^β)^{1/β} − 1|`.
    pub scale_error: f64,
}

/// Mesh, window and horizon of a simulation, certified for one bank and β.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationGrid {
    mesh_log2: u32,
    trunc_log2: u32,
    n: usize,
    tol: f64,
    certificates: Vec<KernelCertificate>,
    planned_for: (KernelBank, f64),
}

impl SimulationGrid {
    pub fn mesh(&self) -> f64 {
        (-(self.mesh_log2 as f64)).exp2()
    }

    pub fn trunc(&self) -> f64 {
        (self.trunc_log2 as f64).exp2()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn certificates(&self) -> &[KernelCertificate] {
        &self.certificates
    }

    /// `T/h`, the number of lattice steps on each side of an observation time.
    pub fn half_window(&self) -> usize {
        1usize << (self.mesh_log2 + self.trunc_log2)
    }

    /// Steps per unit time, `1/h`.
    pub fn steps_per_unit(&self) -> usize {
        1usize << self.mesh_log2
    }

    /// Same certified mesh and window with another horizon.
    pub fn with_n(&self, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyRequest("simulation horizon must be at least 1".into()));
        }
        Ok(Self { n, ..self.clone() })
    }

    fn certified_for(&self, bank: &KernelBank, params: &StableParams) -> bool {
        self.planned_for.0 == *bank && self.planned_for.1 == params.beta
    }
}

fn tail_integral(kernel: &KernelSpec, beta: f64, trunc: f64) -> Result<f64> {
    let q = Quadrature { rel_tol: 1e-8, abs_tol: 1e-300, max_intervals: 4000 };
    let f = |x: f64| kernel.abs_pow(x, beta);
    let mut right = vec![trunc, f64::INFINITY];
    right.extend(kernel.breakpoints().iter().filter(|b| **b > trunc));
    let mut left = vec![f64::NEG_INFINITY, -trunc];
    left.extend(kernel.breakpoints().iter().filter(|b| **b < -trunc));
    Ok(q.integrate(f, &right)?.value + q.integrate(f, &left)?.value)
}

/// `h Σ_{|k| ≤ T/h} |g(kh)|^β`, skipping singular lattice points.
fn lattice_beta_sum(kernel: &KernelSpec, beta: f64, mesh_log2: u32, trunc_log2: u32) -> f64 {
    let h = (-(mesh_log2 as f64)).exp2();
    let half = 1i64 << (mesh_log2 + trunc_log2);
    let lo = if kernel.is_causal() { 0 } else { -half };
    let mut acc = 0.0;
    for k in lo..=half {
        acc += kernel.abs_pow(k as f64 * h, beta);
    }
    h * acc
}

/// Chooses the smallest window `T = 2^j` and the coarsest mesh `h = 2^{-j'}`
/// whose relative scale errors are within `tol` for every kernel.
pub fn plan_grid(bank: &KernelBank, params: &StableParams, n: usize, tol: f64) -> Result<SimulationGrid> {
    params.validate()?;
    if n == 0 {
        return Err(Error::EmptyRequest("simulation horizon must be at least 1".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    let beta = params.beta;
    let norms: Vec<f64> = bank.kernels().iter().map(|k| beta_norm(k, beta)).collect::<Result<_>>()?;

    let mut trunc_log2 = None;
    let mut truncation = vec![0.0; bank.len()];
    for j in 0..=MAX_TRUNC_LOG2 {
        let t = (j as f64).exp2();
        let mut ok = true;
        for (i, k) in bank.kernels().iter().enumerate() {
            let err = if tol.is_infinite() { 0.0 } else { (tail_integral(k, beta, t)? / norms[i]).powf(1.0 / beta) };
            truncation[i] = err;
            ok &= err <= tol;
        }
        if ok {
            trunc_log2 = Some(j);
            break;
        }
    }
    let trunc_log2 = trunc_log2.ok_or_else(|| {
        Error::Planning(format!("truncation tolerance {tol} not reachable with T <= 2^{MAX_TRUNC_LOG2}"))
    })?;

    let mut scale_errors = vec![0.0; bank.len()];
    for j in 0..=MAX_MESH_LOG2 {
        if (1u64 << (j + trunc_log2)) > MAX_HALF_WINDOW {
            break;
        }
        let mut ok = true;
        for (i, k) in bank.kernels().iter().enumerate() {
            let disc = lattice_beta_sum(k, beta, j, trunc_log2);
            let err = ((disc / norms[i]).powf(1.0 / beta) - 1.0).abs();
            scale_errors[i] = err;
            ok &= err <= tol;
        }
        if ok {
            let certificates = truncation
                .iter()
                .zip(&scale_errors)
                .map(|(&t, &s)| KernelCertificate { truncation_error: t, scale_error: s })
                .collect();
            return Ok(SimulationGrid {
                mesh_log2: j,
                trunc_log2,
                n,
                tol,
                certificates,
                planned_for: (bank.clone(), beta),
            });
        }
    }
    Err(Error::Planning(format!(
        "scale tolerance {tol} not reachable with h >= 2^-{MAX_MESH_LOG2} at T = 2^{trunc_log2} (errors {scale_errors:?})"
    )))
}

/// Lattice weights `g_i(kh)` for `|k| ≤ T/h`; singular nodes carry weight zero.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeWeights {
    /// `weights[i][k + K]` with `K = T/h`.
    pub weights: Vec<Vec<f64>>,
    pub half_window: usize,
    pub steps_per_unit: usize,
    pub mesh: f64,
    /// Smallest certified tail exponent of the source bank.
    pub min_alpha: f64,
}

impl LatticeWeights {
    pub fn new(bank: &KernelBank, grid: &SimulationGrid) -> Self {
        let half = grid.half_window();
        let h = grid.mesh();
        let weights = bank
            .kernels()
            .iter()
            .map(|k| {
                (0..=2 * half)
                    .map(|idx| {
                        let v = k.eval_raw((idx as f64 - half as f64) * h);
                        if v.is_finite() {
                            v
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect();
        Self { weights, half_window: half, steps_per_unit: grid.steps_per_unit(), mesh: h, min_alpha: bank.min_alpha() }
    }

    /// Index range of non-zero weights for component `i`.
    fn support(&self, i: usize) -> (usize, usize) {
        let w = &self.weights[i];
        let lo = w.iter().position(|v| *v != 0.0).unwrap_or(0);
        let hi = w.iter().rposition(|v| *v != 0.0).unwrap_or(0);
        (lo, hi)
    }
}

/// Simulated values `X_s^i`, `i = 1..m`, `s = 1..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathMatrix {
    m: usize,
    n: usize,
    /// Row-major `m × n`.
    values: Vec<f64>,
    pub grid: SimulationGrid,
    pub params: StableParams,
    pub stream: SeedStream,
}

impl PathMatrix {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Component `i` (0-based) over times `1..=n`.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    /// `X_s^{i+1}` for 0-based `i` and 1-based time `s`.
    pub fn get(&self, i: usize, s: usize) -> f64 {
        self.values[i * self.n + (s - 1)]
    }

    /// `(X_s^1, …, X_s^m)` for 1-based time `s`.
    pub fn observation(&self, s: usize, out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.get(i, s);
        }
    }

    /// CSV with header `t,X1,…,Xm`, one row per integer time.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for i in 1..=self.m {
            let _ = write!(out, ",X{i}");
        }
        out.push('\n');
        for s in 1..=self.n {
            let _ = write!(out, "{s}");
            for i in 0..self.m {
                let _ = write!(out, ",{}", self.get(i, s));
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// Simulates one path of the `m` coupled moving averages.
pub fn simulate_paths(
    bank: &KernelBank,
    params: &StableParams,
    grid: &SimulationGrid,
    stream: SeedStream,
) -> Result<PathMatrix> {
    params.validate()?;
    if !grid.certified_for(bank, params) {
        return Err(Error::Contract("simulation grid was not planned for this kernel bank and beta".into()));
    }
    let weights = LatticeWeights::new(bank, grid);
    simulate_with_weights(&weights, params, grid, stream)
}

/// [`simulate_paths`] with precomputed lattice weights (reused across replications).
pub fn simulate_with_weights(
    weights: &LatticeWeights,
    params: &StableParams,
    grid: &SimulationGrid,
    stream: SeedStream,
) -> Result<PathMatrix> {
    let m = weights.weights.len();
    let n = grid.n();
    let half = weights.half_window;
    let spu = weights.steps_per_unit;
    // Lattice t_j = (1 − T) + jh for j = 0..=(n − 1)/h + 2K.
    let count = (n - 1) * spu + 2 * half + 1;
    let inc = params.with_scale(increment_scale(params, grid.mesh())?)?;
    let mut increments = vec![0.0; count];
    let mut rng = stream.rng();
    fill_sbs(&inc, &mut rng, &mut increments);

    let mut values = vec![0.0; m * n];
    for i in 0..m {
        let w = &weights.weights[i];
        let (lo, hi) = weights.support(i);
        let row = &mut values[i * n..(i + 1) * n];
        for (s0, out) in row.iter_mut().enumerate() {
            // X_s = Σ_k w[k + K] ΔL[idx(s) − k], idx(s) = (s − 1)/h + K.
            // With widx = k + K: ΔL index = (s−1)/h + 2K − widx.
            let base = s0 * spu + 2 * half;
            let mut acc = 0.0;
            for widx in lo..=hi {
                acc += w[widx] * increments[base - widx];
            }
            *out = acc;
        }
    }
    Ok(PathMatrix { m, n, values, grid: grid.clone(), params: *params, stream })
}

/// Exact joint law of the discretised process: every finite linear
/// combination `Σ_k c_k X_{t_k}^{i_k}` is symmetric stable with
/// `scale^β · h Σ_y |Σ_k c_k w_{i_k}(t_k − y)|^β` over lattice points `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeLaw {
    weights: LatticeWeights,
    beta: f64,
}

impl LatticeLaw {
    pub fn new(bank: &KernelBank, grid: &SimulationGrid) -> Self {
        Self { weights: LatticeWeights::new(bank, grid), beta: grid.planned_for.1 }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn m(&self) -> usize {
        self.weights.weights.len()
    }

    pub fn weights(&self) -> &LatticeWeights {
        &self.weights
    }

    /// `h Σ_y |Σ_k c_k w_{i_k}(t_k − y)|^β` for terms `(i_k, c_k, t_k)`.
    pub fn beta_sum(&self, terms: &[(usize, f64, i64)]) -> f64 {
        let live: Vec<&(usize, f64, i64)> = terms.iter().filter(|t| t.1 != 0.0).collect();
        if live.is_empty() {
            return 0.0;
        }
        let k = self.weights.half_window as i64;
        let spu = self.weights.steps_per_unit as i64;
        let t_min = live.iter().map(|t| t.2).min().expect("non-empty");
        let t_max = live.iter().map(|t| t.2).max().expect("non-empty");
        // Lattice points in units of h, y = Y h, Y ∈ [t_min/h − K, t_max/h + K].
        let y0 = t_min * spu - k;
        let len = ((t_max - t_min) * spu + 2 * k + 1) as usize;
        let mut acc = vec![0.0; len];
        for &&(i, c, t) in &live {
            let w = &self.weights.weights[i];
            // Weight index widx = (t − y)/h + K, so Y = t/h + K − widx.
            let top = t * spu + k - y0;
            for (widx, wv) in w.iter().enumerate() {
                if *wv != 0.0 {
                    acc[(top - widx as i64) as usize] += c * wv;
                }
            }
        }
        self.weights.mesh * acc.iter().map(|v| v.abs().powf(self.beta)).sum::<f64>()
    }
}

/// Exact stable scale of `X_0^i`: `scale · (∫|g_i|^β)^{1/β}`.
pub fn marginal_scale(kernel: &KernelSpec, params: &StableParams) -> Result<f64> {
    params.validate()?;
    Ok(params.scale * beta_norm(kernel, params.beta)?.powf(1.0 / params.beta))
}
