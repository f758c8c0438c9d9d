//! Symmetric β-stable driver: parameters, reproducible seed streams and the
//! Chambers–Mallows–Stuck sampler.

use std::f64::consts::PI;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Law of `L_1`: `E exp(iuL_1) = exp(-scale^β |u|^β)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StableParams {
    pub beta: f64,
    pub scale: f64,
}

impl StableParams {
    pub fn new(beta: f64, scale: f64) -> Result<Self> {
        let p = Self { beta, scale };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta < 2.0) {
            return Err(Error::Domain(format!("stability index must lie in (0, 2), got {}", self.beta)));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::Domain(format!("scale must be positive and finite, got {}", self.scale)));
        }
        Ok(())
    }

    pub fn with_scale(&self, scale: f64) -> Result<Self> {
        Self::new(self.beta, scale)
    }
}

/// Identifies one reproducible substream: ChaCha20 keyed by `master_seed`,
/// with `stream_index` selecting the ChaCha stream (nonce). Distinct indices
/// give non-overlapping keystreams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedStream {
    pub master_seed: u64,
    pub stream_index: u64,
}

impl SeedStream {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        Self { master_seed, stream_index }
    }

    pub fn rng(&self) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_index);
        rng
    }
}

/// Uniform on the open interval (0, 1) from the top 52 bits of one `u64`,
/// placed at cell midpoints so both endpoints are unreachable.
#[inline]
pub fn open_unit<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

/// One standard (scale 1) symmetric β-stable draw.
///
/// Consumes exactly two `u64` words, in this order: the uniform angle
/// `V = π(U₁ − ½)` and then the unit exponential `W = −ln U₂`.
#[inline]
pub fn standard_sbs<R: RngCore + ?Sized>(beta: f64, rng: &mut R) -> f64 {
    let v = PI * (open_unit(rng) - 0.5);
    let w = -open_unit(rng).ln();
    if beta == 1.0 {
        return v.tan();
    }
    let bv = beta * v;
    bv.sin() / v.cos().powf(1.0 / beta) * ((v - bv).cos() / w).powf((1.0 - beta) / beta)
}

/// Fills `out` with i.i.d. symmetric stable draws of the given law.
pub fn fill_sbs<R: RngCore + ?Sized>(params: &StableParams, rng: &mut R, out: &mut [f64]) {
    for x in out.iter_mut() {
        *x = params.scale * standard_sbs(params.beta, rng);
    }
}

/// `count` i.i.d. draws from the symmetric stable law `params`, bit-identical
/// for identical arguments.
pub fn sample_sbs(params: &StableParams, count: usize, stream: SeedStream) -> Result<Vec<f64>> {
    params.validate()?;
    if count == 0 {
        return Err(Error::EmptyRequest("sample count must be at least 1".into()));
    }
    let mut rng = stream.rng();
    let mut out = vec![0.0; count];
    fill_sbs(params, &mut rng, &mut out);
    Ok(out)
}

/// Characteristic function `exp(−scale^β |u|^β)` (real, since the law is symmetric).
pub fn char_fn_sbs(params: &StableParams, u: f64) -> f64 {
    (-(params.scale * u.abs()).powf(params.beta)).exp()
}

/// Scale of `L_{t+mesh} − L_t`, i.e. `scale · mesh^{1/β}`.
pub fn increment_scale(params: &StableParams, mesh: f64) -> Result<f64> {
    if !(mesh > 0.0 && mesh.is_finite()) {
        return Err(Error::Domain(format!("mesh must be positive, got {mesh}")));
    }
    Ok(params.scale * mesh.powf(1.0 / params.beta))
}
