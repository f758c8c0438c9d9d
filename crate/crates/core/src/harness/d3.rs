//! Finite-dictionary lower bound for the d₃ distance to `N(0, Σ²)`.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Test function `φ(x) = a cos(⟨v, x⟩ + θ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct D3Entry {
    pub v: Vec<f64>,
    pub theta: f64,
    pub a: f64,
}

impl D3Entry {
    /// Largest amplitude keeping all second and third partials of `φ` within 1.
    pub fn new(v: Vec<f64>, theta: f64) -> Self {
        let vmax = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let a = if vmax == 0.0 { 1.0 } else { (1.0 / (vmax * vmax)).min(1.0 / (vmax * vmax * vmax)) };
        Self { v, theta, a }
    }

    /// `max_{j,k} |∂_j∂_k φ|` and `max_{j,k,l} |∂_j∂_k∂_l φ|` bounds.
    pub fn derivative_bounds(&self) -> (f64, f64) {
        let vmax = self.v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        (self.a * vmax * vmax, self.a * vmax * vmax * vmax)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let dot: f64 = self.v.iter().zip(x).map(|(v, x)| v * x).sum();
        self.a * (dot + self.theta).cos()
    }

    /// `E φ(Y)` for `Y ~ N(0, Σ²)`.
    pub fn gaussian_mean(&self, sigma2: &DMatrix<f64>) -> f64 {
        let v = DVector::from_column_slice(&self.v);
        let q = (v.transpose() * sigma2 * &v)[(0, 0)];
        self.a * self.theta.cos() * (-0.5 * q).exp()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct D3ProxyDictionary {
    pub entries: Vec<D3Entry>,
}

impl D3ProxyDictionary {
    pub fn new(entries: Vec<D3Entry>) -> Self {
        Self { entries }
    }

    /// Two shells `‖v‖ ∈ {0.5, 1}`, phases `{0, π/2}`. Directions: `d = 1` the
    /// unit; `d = 2` twelve angles `kπ/12`; otherwise `e_i` and `(e_i ± e_j)/√2`.
    pub fn default_for(d: usize) -> Self {
        let dirs: Vec<Vec<f64>> = match d {
            0 => Vec::new(),
            1 => vec![vec![1.0]],
            2 => (0..12)
                .map(|k| {
                    let t = k as f64 * PI / 12.0;
                    vec![t.cos(), t.sin()]
                })
                .collect(),
            _ => {
                let mut dirs = Vec::new();
                let r = std::f64::consts::FRAC_1_SQRT_2;
                for i in 0..d {
                    let mut e = vec![0.0; d];
                    e[i] = 1.0;
                    dirs.push(e);
                    for j in i + 1..d {
                        for s in [1.0, -1.0] {
                            let mut e = vec![0.0; d];
                            e[i] = r;
                            e[j] = s * r;
                            dirs.push(e);
                        }
                    }
                }
                dirs
            }
        };
        let mut entries = Vec::new();
        for radius in [0.5, 1.0] {
            for dir in &dirs {
                for theta in [0.0, FRAC_PI_2] {
                    entries.push(D3Entry::new(dir.iter().map(|x| radius * x).collect(), theta));
                }
            }
        }
        Self { entries }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct D3Proxy {
    pub value: f64,
    pub argmax: usize,
    /// `(|mean φ(V_n) − E φ(Y)|, standard error)` per entry.
    pub per_entry: Vec<(f64, f64)>,
}

impl D3Proxy {
    pub fn std_error(&self) -> f64 {
        self.per_entry[self.argmax].1
    }
}

/// `max_φ |mean_r φ(V_n^{(r)}) − E φ(Y)|` over the dictionary.
pub fn d3_proxy(samples: &[Vec<f64>], sigma2: &DMatrix<f64>, dict: &D3ProxyDictionary) -> Result<D3Proxy> {
    if dict.entries.is_empty() {
        return Err(Error::Contract("d3 proxy needs a non-empty dictionary".into()));
    }
    if samples.len() < 100 {
        return Err(Error::SampleSize { needed: 100, got: samples.len() });
    }
    let d = sigma2.nrows();
    if sigma2.ncols() != d || samples.iter().any(|s| s.len() != d) || dict.entries.iter().any(|e| e.v.len() != d) {
        return Err(Error::Contract(format!("d3 proxy dimensions disagree (Σ² is {d} x {})", sigma2.ncols())));
    }
    let r = samples.len() as f64;
    let per_entry: Vec<(f64, f64)> = dict
        .entries
        .iter()
        .map(|e| {
            // Differences to the Gaussian value keep degenerate cases exact.
            let target = e.gaussian_mean(sigma2);
            let (mut sum, mut sum_sq) = (0.0, 0.0);
            for s in samples {
                let y = e.eval(s) - target;
                sum += y;
                sum_sq += y * y;
            }
            let mean = sum / r;
            let var = ((sum_sq - r * mean * mean) / (r - 1.0)).max(0.0);
            (mean.abs(), (var / r).sqrt())
        })
        .collect();
    let mut argmax = 0;
    for (i, (v, _)) in per_entry.iter().enumerate() {
        if *v > per_entry[argmax].0 {
            argmax = i;
        }
    }
    Ok(D3Proxy { value: per_entry[argmax].0, argmax, per_entry })
}
