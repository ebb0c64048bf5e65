//! Shot-noise-unit calibration statistics.
//!
//! The estimators follow the homodyne calibration procedure: record `m`
//! samples of the detector output with the LO on (and, for the two-time
//! method, another batch with the LO off), take the mean of squares, and
//! propagate the χ² fluctuation into a worst-case interval.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{domain, Result};

/// How the SNU was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationMethod {
    /// LO-off and LO-on batches, SNU = V_tot − V_ele.
    TwoTime,
    /// LO-on batch only, SNU' = V_tot.
    OneTime,
}

/// Point estimate and worst-case interval of a calibrated SNU.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationEstimate {
    pub method: CalibrationMethod,
    /// Samples per calibration batch.
    pub m_samples: u64,
    pub point: f64,
    pub lower: f64,
    pub upper: f64,
    pub eps_pe: f64,
    /// The lower bound hit zero and was floored; `m` is too small.
    pub degenerate: bool,
}

impl CalibrationEstimate {
    /// An interval of zero width at `point`, i.e. perfect calibration.
    pub fn exact(method: CalibrationMethod, point: f64) -> Self {
        Self {
            method,
            m_samples: u64::MAX,
            point,
            lower: point,
            upper: point,
            eps_pe: 0.0,
            degenerate: false,
        }
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.upper - self.lower)
    }

    /// Interval endpoints divided by the point estimate.
    pub fn normalized_bounds(&self) -> (f64, f64) {
        (self.lower / self.point, self.upper / self.point)
    }
}

/// Noise levels a simulated detector is configured with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseGroundTruth {
    /// LO-on output variance (shot noise + electronic noise).
    pub v_tot: f64,
    /// LO-off output variance.
    pub v_ele: f64,
    #[serde(default)]
    pub seed: u64,
}

impl NoiseGroundTruth {
    pub fn new(v_tot: f64, v_ele: f64, seed: u64) -> Result<Self> {
        let truth = Self { v_tot, v_ele, seed };
        truth.validate()?;
        Ok(truth)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.v_ele >= 0.0) || !(self.v_tot > self.v_ele) {
            return Err(domain(format!(
                "need v_tot > v_ele >= 0, got v_tot={}, v_ele={}",
                self.v_tot, self.v_ele
            )));
        }
        Ok(())
    }

    /// True two-time SNU, `v_tot − v_ele`.
    pub fn snu(&self) -> f64 {
        self.v_tot - self.v_ele
    }
}

fn batch_rng(seed: u64, lo_on: bool) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::from(lo_on));
    rng
}

/// `m` zero-mean Gaussian detector outputs: variance `v_tot` with the LO on,
/// `v_ele` with it off. Deterministic in `truth.seed`.
pub fn sample_homodyne(truth: &NoiseGroundTruth, m: usize, lo_on: bool) -> Result<Vec<f64>> {
    truth.validate()?;
    if m < 2 {
        return Err(domain(format!(
            "need at least 2 calibration samples, got {m}"
        )));
    }
    let variance = if lo_on { truth.v_tot } else { truth.v_ele };
    if variance == 0.0 {
        return Ok(vec![0.0; m]);
    }
    let normal = Normal::new(0.0, variance.sqrt()).map_err(|e| domain(e.to_string()))?;
    let mut rng = batch_rng(truth.seed, lo_on);
    Ok((0..m).map(|_| normal.sample(&mut rng)).collect())
}

/// Known-zero-mean variance estimator `(1/m) Σ y²`.
pub fn estimate_variance(samples: &[f64]) -> Result<f64> {
    if samples.len() < 2 {
        return Err(domain(format!(
            "need at least 2 samples to estimate a variance, got {}",
            samples.len()
        )));
    }
    Ok(samples.iter().map(|y| y * y).sum::<f64>() / samples.len() as f64)
}

/// Runs `replicates` independent calibrations of `m` samples each and
/// returns their variance estimates. Replicate `i` uses seed `truth.seed + i`;
/// the result does not depend on thread scheduling.
pub fn simulate_estimates(
    truth: &NoiseGroundTruth,
    m: usize,
    replicates: usize,
    lo_on: bool,
) -> Result<Vec<f64>> {
    (0..replicates as u64)
        .into_par_iter()
        .map(|i| {
            let t = NoiseGroundTruth {
                seed: truth.seed.wrapping_add(i),
                ..*truth
            };
            estimate_variance(&sample_homodyne(&t, m, lo_on)?)
        })
        .collect()
}

/// Two-sided Gaussian tail quantile: the `z` with `erfc(z/√2) = ε`, i.e.
/// `P(|Z| > z) = ε` for standard normal `Z`. Solved by bisection to 1e-12.
pub fn z_quantile(eps_pe: f64) -> Result<f64> {
    if !(eps_pe > 0.0 && eps_pe < 1.0) {
        return Err(domain(format!(
            "failure probability must lie in (0,1), got {eps_pe}"
        )));
    }
    let tail = |z: f64| erfc(z / std::f64::consts::SQRT_2);
    let (mut lo, mut hi) = (0.0f64, 40.0f64);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if tail(mid) > eps_pe {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Half-width `z_{ε/2}·V̂·√2/√m` of a variance estimated from `m` samples.
pub fn variance_fluctuation(v_hat: f64, m: u64, eps_pe: f64) -> Result<f64> {
    if m < 2 {
        return Err(domain(format!(
            "need at least 2 calibration samples, got {m}"
        )));
    }
    Ok(z_quantile(eps_pe)? * v_hat * std::f64::consts::SQRT_2 / (m as f64).sqrt())
}

fn floored(
    method: CalibrationMethod,
    m: u64,
    point: f64,
    lower: f64,
    upper: f64,
    eps_pe: f64,
) -> CalibrationEstimate {
    let floor = point * 1e-12;
    CalibrationEstimate {
        method,
        m_samples: m,
        point,
        lower: lower.max(floor),
        upper,
        eps_pe,
        degenerate: lower <= 0.0,
    }
}

/// One-time interval `[V̂ − ΔV, V̂ + ΔV]`.
pub fn confidence_interval_ote(v_hat: f64, m: u64, eps_pe: f64) -> Result<CalibrationEstimate> {
    if !(v_hat > 0.0) {
        return Err(domain(format!(
            "variance estimate must be positive, got {v_hat}"
        )));
    }
    let delta = variance_fluctuation(v_hat, m, eps_pe)?;
    Ok(floored(
        CalibrationMethod::OneTime,
        m,
        v_hat,
        v_hat - delta,
        v_hat + delta,
        eps_pe,
    ))
}

/// Two-time interval: both batch fluctuations add against the difference,
/// `[V̂_tot − ΔV_tot − V̂_ele − ΔV_ele, V̂_tot + ΔV_tot − V̂_ele + ΔV_ele]`.
pub fn confidence_interval_tte(
    v_tot_hat: f64,
    v_ele_hat: f64,
    m_tot: u64,
    m_ele: u64,
    eps_pe: f64,
) -> Result<CalibrationEstimate> {
    if !(v_ele_hat >= 0.0) || !(v_tot_hat > v_ele_hat) {
        return Err(domain(format!(
            "need v_tot_hat > v_ele_hat >= 0, got {v_tot_hat} and {v_ele_hat}"
        )));
    }
    let d_tot = variance_fluctuation(v_tot_hat, m_tot, eps_pe)?;
    let d_ele = variance_fluctuation(v_ele_hat, m_ele, eps_pe)?;
    let point = v_tot_hat - v_ele_hat;
    Ok(floored(
        CalibrationMethod::TwoTime,
        m_tot.min(m_ele),
        point,
        point - d_tot - d_ele,
        point + d_tot + d_ele,
        eps_pe,
    ))
}

/// One row of the finite-data calibration comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviationRow {
    pub m: u64,
    /// Lower worst-case one-time SNU over the true one-time SNU.
    pub snu_norm_ote: f64,
    /// Lower worst-case two-time SNU over the true two-time SNU.
    pub snu_norm_tte: f64,
    /// `ΔV_tot / V_tot`.
    pub dev_ote: f64,
    /// `(ΔV_tot + ΔV_ele) / (V_tot − V_ele)`.
    pub dev_tte: f64,
}

/// Relative worst-case deviation from ideal calibration for both methods
/// over a grid of batch sizes, propagated analytically from the true noise
/// levels (no sampling). Both two-time batches use `m` samples.
pub fn deviation_curve(
    truth: &NoiseGroundTruth,
    m_grid: &[u64],
    eps_pe: f64,
) -> Result<Vec<DeviationRow>> {
    truth.validate()?;
    m_grid
        .iter()
        .map(|&m| {
            let d_tot = variance_fluctuation(truth.v_tot, m, eps_pe)?;
            let d_ele = variance_fluctuation(truth.v_ele, m, eps_pe)?;
            let dev_ote = d_tot / truth.v_tot;
            let dev_tte = (d_tot + d_ele) / truth.snu();
            Ok(DeviationRow {
                m,
                snu_norm_ote: 1.0 - dev_ote,
                snu_norm_tte: 1.0 - dev_tte,
                dev_ote,
                dev_tte,
            })
        })
        .collect()
}
