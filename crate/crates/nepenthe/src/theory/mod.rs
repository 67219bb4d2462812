//! Analytic pipeline from a magnitude-pruning threshold to the entropy of a
//! rectified neuron's output, plus a seeded Monte Carlo cross-check.
//!
//! The model: weights follow a Gaussian; pruning at threshold `t` removes
//! the central mass ζ(t) to a point mass at zero and rescales the surviving
//! pre-activation to a q(t)-wide Gaussian product, whose density is
//! `K0(|z|/q)/(π·q)`. The probability of landing in the rectifier's linear
//! region beyond a small ε then follows from the Bessel/Struve tail
//! integral, and its binary entropy reproduces the entropy-vs-threshold
//! curve.
//!
//! The Monte Carlo oracle samples exactly that model: each draw masks a real
//! Gaussian weight at |w| ≤ t (the empirical masked fraction checks ζ), a
//! masked draw is a don't-care, and a surviving draw samples z = q·w₀·x.
//! The literal truncated product w·x is also measured and reported as
//! `p_pos_product_mc`; it deviates from the model and is diagnostic only.

mod special;

pub use special::{bessel_k, bessel_k0, bessel_k1, erf, struve_l, struve_l0, struve_lm1};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::entropy::h2;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TheoryParams {
    pub mu_w: f64,
    pub sigma_w: f64,
    pub t_grid: Vec<f64>,
    pub eps: f64,
    pub mc_samples: usize,
    pub rng_seed: u64,
}

impl TheoryParams {
    pub fn grid(t_max: f64, step: f64) -> Vec<f64> {
        let n = (t_max / step).round() as usize;
        (0..=n).map(|i| i as f64 * step).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.sigma_w <= 0.0 {
            return Err(Error::InvalidConfig("sigma_w must be positive".into()));
        }
        if self.eps <= 0.0 {
            return Err(Error::InvalidConfig("eps must be positive".into()));
        }
        if !self.t_grid.windows(2).all(|w| w[0] <= w[1]) {
            return Err(Error::InvalidConfig("t_grid must be sorted ascending".into()));
        }
        if self.t_grid.iter().any(|&t| t < 0.0) {
            return Err(Error::InvalidConfig("thresholds must be nonnegative".into()));
        }
        Ok(())
    }
}

impl Default for TheoryParams {
    fn default() -> Self {
        TheoryParams {
            mu_w: 0.0,
            sigma_w: 1.0,
            t_grid: Self::grid(3.0, 0.05),
            eps: 0.05,
            mc_samples: 1_000_000,
            rng_seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityMode {
    /// `K0(|z/q|)/π` — integrates to the surviving mass q(t).
    AsWritten,
    /// Divided by q(t) so the continuous part integrates to one.
    Normalized,
}

/// One grid point of the curve. Monte Carlo fields are zero until
/// [`mc_oracle`] fills them.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct TheoryPoint {
    pub t: f64,
    pub zeta: f64,
    pub q: f64,
    pub p_pos: f64,
    pub entropy_bits: f64,
    /// p underflowed because q(t) vanished in double precision.
    pub saturated: bool,
    pub p_pos_mc: f64,
    pub entropy_mc: f64,
    pub mc_stderr: f64,
    pub zeta_mc: f64,
    pub p_pos_product_mc: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TheoryCurve {
    pub eps: f64,
    pub points: Vec<TheoryPoint>,
}

/// Fraction of Gaussian weights with |w| below the threshold.
pub fn pruning_rate(t: f64, mu_w: f64, sigma_w: f64) -> f64 {
    let s = sigma_w * std::f64::consts::SQRT_2;
    0.5 * (erf((t - mu_w) / s) - erf((-t - mu_w) / s))
}

/// Surviving-mass factor q(t) = 1 − erf(t/√2).
pub fn q_factor(t: f64) -> f64 {
    1.0 - erf(t / std::f64::consts::SQRT_2)
}

/// Pre-activation density at `z ≠ 0` for threshold `t`.
pub fn preact_density(z: f64, t: f64, mode: DensityMode) -> Result<f64> {
    if z == 0.0 {
        return Err(Error::Domain("preact density has a log singularity at z = 0".into()));
    }
    let q = q_factor(t);
    if q <= 0.0 {
        return Err(Error::Domain(format!("q({t}) underflowed")));
    }
    let base = bessel_k0((z / q).abs())? / std::f64::consts::PI;
    Ok(match mode {
        DensityMode::AsWritten => base,
        DensityMode::Normalized => base / q,
    })
}

/// Tail weight x·[L−1(x)K0(x) + L0(x)K1(x)]; (1/π)∫_x^∞ K0 = ½(1 − I(x)).
fn tail_weight(x: f64) -> Result<f64> {
    if x == 0.0 {
        return Ok(0.0);
    }
    Ok(x * (struve_lm1(x)? * bessel_k0(x)? + struve_l0(x)? * bessel_k1(x)?))
}

/// Probability of the linear region beyond ε under the normalized density.
/// Saturates to zero (with a flag) when q(t) underflows.
pub fn p_positive(t: f64, eps: f64) -> (f64, bool) {
    let q = q_factor(t);
    if q <= 0.0 {
        return (0.0, true);
    }
    let x = eps / q;
    // for large x the tail is numerically zero; I(x) -> 1 from below
    match tail_weight(x) {
        Ok(i) => ((0.5 * (1.0 - i)).max(0.0), false),
        Err(_) => (0.0, true),
    }
}

/// Analytic curve over the threshold grid.
pub fn entropy_curve(params: &TheoryParams) -> Result<TheoryCurve> {
    params.validate()?;
    let mut points = Vec::with_capacity(params.t_grid.len());
    for &t in &params.t_grid {
        let (p, saturated) = p_positive(t, params.eps);
        points.push(TheoryPoint {
            t,
            zeta: pruning_rate(t, params.mu_w, params.sigma_w),
            q: q_factor(t),
            p_pos: p,
            entropy_bits: h2(p),
            saturated,
            ..TheoryPoint::default()
        });
    }
    Ok(TheoryCurve {
        eps: params.eps,
        points,
    })
}

/// Seeded Monte Carlo pass filling the `*_mc` fields of a curve.
///
/// Per draw: w ~ N(mu, sigma²) is masked when |w| ≤ t (a don't-care);
/// survivors sample the model pre-activation z = q(t)·w0·x with fresh
/// standard normals. `p_pos_mc` is the surviving fraction with z > ε.
/// `p_pos_product_mc` measures the literal truncated product w·x instead.
pub fn mc_oracle(params: &TheoryParams, curve: &mut TheoryCurve) -> Result<()> {
    params.validate()?;
    if params.mc_samples < 100_000 {
        return Err(Error::InvalidConfig(format!(
            "mc_samples must be at least 1e5, got {}",
            params.mc_samples
        )));
    }
    for (idx, point) in curve.points.iter_mut().enumerate() {
        // decorrelated per-point seed so grid points are independent
        let seed = params
            .rng_seed
            .wrapping_add((idx as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = point.t;
        let q = point.q;
        let mut masked = 0u64;
        let mut kept = 0u64;
        let mut on_model = 0u64;
        let mut on_product = 0u64;
        for _ in 0..params.mc_samples {
            let g: f64 = StandardNormal.sample(&mut rng);
            let w = params.mu_w + params.sigma_w * g;
            let x: f64 = StandardNormal.sample(&mut rng);
            let w0: f64 = StandardNormal.sample(&mut rng);
            if w.abs() <= t {
                masked += 1;
                continue;
            }
            kept += 1;
            if q * w0 * x > params.eps {
                on_model += 1;
            }
            if w * x > params.eps {
                on_product += 1;
            }
        }
        if kept == 0 {
            return Err(Error::Domain(format!("all samples masked at t = {t}")));
        }
        point.zeta_mc = masked as f64 / params.mc_samples as f64;
        point.p_pos_mc = on_model as f64 / kept as f64;
        point.entropy_mc = h2(point.p_pos_mc);
        point.p_pos_product_mc = on_product as f64 / kept as f64;
        point.mc_stderr = (point.p_pos * (1.0 - point.p_pos) / kept as f64).sqrt();
    }
    Ok(())
}

pub const THEORY_CSV_HEADER: &str =
    "t,zeta,q,p_pos_analytic,H_analytic,p_pos_mc,H_mc,mc_stderr,p_pos_product_mc";

pub fn theory_csv(curve: &TheoryCurve) -> String {
    let mut out = String::from(THEORY_CSV_HEADER);
    out.push('\n');
    for p in &curve.points {
        out.push_str(&format!(
            "{:.6},{:.9},{:.9},{:.9},{:.9},{:.9},{:.9},{:.9},{:.9}\n",
            p.t,
            p.zeta,
            p.q,
            p.p_pos,
            p.entropy_bits,
            p.p_pos_mc,
            p.entropy_mc,
            p.mc_stderr,
            p.p_pos_product_mc
        ));
    }
    out
}
