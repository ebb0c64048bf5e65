//! Entanglement-based covariance matrices for the three calibration models.
//!
//! * [`CalibrationModel::ConventionalTte`]: SNU = V_tot − V_ele, detector
//!   modelled as a trusted beamsplitter fed by a trusted EPR source.
//! * [`CalibrationModel::OneTimeTwoMode`]: SNU = V_tot, electronic noise folded
//!   into an untrusted transmittance ηe, only modes A and B3 are tracked.
//! * [`CalibrationModel::OneTimeThreeMode`]: as above, but the detection
//!   efficiency beamsplitter output C stays on Bob's (trusted) side.

use serde::{Deserialize, Serialize};

use crate::error::{domain, validation, Result};
use crate::gaussian::{apply_beamsplitter, attach_vacuum, CovarianceMatrix};

/// Standard telecom fibre attenuation used to convert distance to transmittance.
pub const FIBER_LOSS_DB_PER_KM: f64 = 0.2;

/// Fibre transmittance `10^(−α·L/10)` for a distance in km.
pub fn transmittance_from_km(distance_km: f64, loss_db_per_km: f64) -> f64 {
    10f64.powf(-loss_db_per_km * distance_km / 10.0)
}

/// Which SNU calibration procedure the security analysis models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationModel {
    #[serde(alias = "conventional_tte", alias = "tte")]
    Conventional,
    #[serde(alias = "one_time_two_mode")]
    TwoMode,
    #[serde(alias = "one_time_three_mode")]
    ThreeMode,
}

impl CalibrationModel {
    pub const ALL: [CalibrationModel; 3] = [Self::Conventional, Self::TwoMode, Self::ThreeMode];

    pub fn name(self) -> &'static str {
        match self {
            Self::Conventional => "conventional",
            Self::TwoMode => "two_mode",
            Self::ThreeMode => "three_mode",
        }
    }

    /// One-time models take the full LO-on variance as SNU.
    pub fn is_one_time(self) -> bool {
        !matches!(self, Self::Conventional)
    }
}

impl std::fmt::Display for CalibrationModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for CalibrationModel {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "conventional" | "conventional_tte" | "tte" => Ok(Self::Conventional),
            "two_mode" | "one_time_two_mode" => Ok(Self::TwoMode),
            "three_mode" | "one_time_three_mode" => Ok(Self::ThreeMode),
            other => Err(validation(format!("unknown calibration model '{other}'"))),
        }
    }
}

/// Protocol, channel and detector parameters, all variances in shot-noise units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemParams {
    /// EPR modulation variance V.
    pub variance: f64,
    /// Channel transmittance T.
    pub transmittance: f64,
    /// Excess noise referred to the channel input.
    pub eps_c: f64,
    /// Detection efficiency.
    pub eta_d: f64,
    /// Electronic noise variance.
    pub v_ele: f64,
    /// Relative-intensity noise variance.
    #[serde(default)]
    pub v_rin: f64,
    /// Reconciliation efficiency.
    pub beta: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self {
            variance: 40.0,
            transmittance: 1.0,
            eps_c: 0.01,
            eta_d: 0.6,
            v_ele: 0.01,
            v_rin: 0.0,
            beta: 0.956,
        }
    }
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        let p = self;
        let check = |ok: bool, what: &str, value: f64| {
            if ok {
                Ok(())
            } else {
                Err(domain(format!("{what} out of range: {value}")))
            }
        };
        check(
            p.variance > 1.0 && p.variance.is_finite(),
            "variance V (must be > 1)",
            p.variance,
        )?;
        check(
            p.transmittance > 0.0 && p.transmittance <= 1.0,
            "transmittance T (must lie in (0,1])",
            p.transmittance,
        )?;
        check(
            p.eps_c >= 0.0 && p.eps_c.is_finite(),
            "eps_c (must be >= 0)",
            p.eps_c,
        )?;
        check(
            p.eta_d > 0.0 && p.eta_d <= 1.0,
            "eta_d (must lie in (0,1])",
            p.eta_d,
        )?;
        check(
            p.v_ele >= 0.0 && p.v_ele.is_finite(),
            "v_ele (must be >= 0)",
            p.v_ele,
        )?;
        check(
            p.v_rin >= 0.0 && p.v_rin.is_finite(),
            "v_rin (must be >= 0)",
            p.v_rin,
        )?;
        check(
            p.beta > 0.0 && p.beta <= 1.0,
            "beta (must lie in (0,1])",
            p.beta,
        )?;
        Ok(())
    }

    /// Same parameters at another fibre length (0.2 dB/km).
    pub fn at_distance(&self, distance_km: f64) -> Self {
        Self {
            transmittance: transmittance_from_km(distance_km, FIBER_LOSS_DB_PER_KM),
            ..*self
        }
    }

    pub fn with_eps_c(&self, eps_c: f64) -> Self {
        Self { eps_c, ..*self }
    }

    /// ηe for the one-time models.
    pub fn eta_e(&self) -> f64 {
        1.0 / (1.0 + self.v_ele + self.v_rin)
    }

    /// T·ηd·ηe, the total transmittance seen by the one-time models.
    pub fn one_time_transmittance(&self) -> f64 {
        self.transmittance * self.eta_d * self.eta_e()
    }

    /// χ = 1/(T ηd ηe) − 1 + εc, the total added noise referred to the input.
    pub fn one_time_chi(&self) -> f64 {
        1.0 / self.one_time_transmittance() - 1.0 + self.eps_c
    }
}

/// Transmittances of the two detector beamsplitters in the one-time models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorSplit {
    pub eta_e: f64,
    pub eta_d: f64,
}

impl DetectorSplit {
    pub fn new(eta_e: f64, eta_d: f64) -> Result<Self> {
        for (name, v) in [("eta_e", eta_e), ("eta_d", eta_d)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(domain(format!("{name} must lie in (0,1], got {v}")));
            }
        }
        Ok(Self { eta_e, eta_d })
    }

    pub fn from_params(params: &SystemParams) -> Result<Self> {
        Self::new(eta_e_from_noise(params.v_ele, params.v_rin)?, params.eta_d)
    }
}

/// Model plus calibration state for one key-rate evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnuScenario {
    pub model: CalibrationModel,
    /// Estimated SNU over true SNU; 1 is perfect calibration.
    #[serde(default = "one")]
    pub n0: f64,
    /// Signed fractional SNU miscalibration δ.
    #[serde(default)]
    pub calib_error: f64,
}

fn one() -> f64 {
    1.0
}

impl SnuScenario {
    pub fn new(model: CalibrationModel) -> Self {
        Self {
            model,
            n0: 1.0,
            calib_error: 0.0,
        }
    }

    pub fn with_n0(self, n0: f64) -> Self {
        Self { n0, ..self }
    }

    pub fn with_calib_error(self, calib_error: f64) -> Self {
        Self {
            calib_error,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.n0 > 0.0) || !self.n0.is_finite() {
            return Err(domain(format!("n0 must be positive, got {}", self.n0)));
        }
        if !(1.0 + self.calib_error > 0.0) {
            return Err(domain(format!(
                "calibration error must exceed -1, got {}",
                self.calib_error
            )));
        }
        Ok(())
    }
}

/// ηe = 1/(1 + v_ele + v_rin): the LO-normalised signal fraction of the
/// one-time SNU, where the shot-noise contribution normalises to 1.
pub fn eta_e_from_noise(v_ele: f64, v_rin: f64) -> Result<f64> {
    if !(v_ele >= 0.0) || !(v_rin >= 0.0) {
        return Err(domain(format!(
            "noise variances must be non-negative, got v_ele={v_ele}, v_rin={v_rin}"
        )));
    }
    Ok(1.0 / (1.0 + v_ele + v_rin))
}

fn expect_model(scenario: &SnuScenario, model: CalibrationModel) -> Result<()> {
    if scenario.model != model {
        return Err(validation(format!(
            "scenario model is {} but the {} builder was called",
            scenario.model, model
        )));
    }
    scenario.validate()
}

/// Second moments of Alice's mode and Bob's mode for an EPR state whose
/// second half saw total transmittance `tau` and excess noise `eps_c`.
fn lossy_epr(variance: f64, tau: f64, eps_c: f64) -> (f64, f64) {
    let cov = (tau * (variance * variance - 1.0)).sqrt();
    let var_b = tau * (variance - 1.0 + eps_c) + 1.0;
    (cov, var_b)
}

/// Two-mode one-time model (A, B3), with Bob's moments divided by N0.
pub fn build_two_mode(params: &SystemParams, scenario: &SnuScenario) -> Result<CovarianceMatrix> {
    expect_model(scenario, CalibrationModel::TwoMode)?;
    params.validate()?;
    two_mode_matrix(params, scenario.n0)
}

pub(crate) fn two_mode_matrix(params: &SystemParams, n0: f64) -> Result<CovarianceMatrix> {
    let split = DetectorSplit::from_params(params)?;
    let tau = params.transmittance * split.eta_d * split.eta_e;
    let (cov, var_b) = lossy_epr(params.variance, tau, params.eps_c);
    Ok(CovarianceMatrix::symmetric_two_mode(
        params.variance,
        cov / n0.sqrt(),
        var_b / n0,
    ))
}

/// Three-mode one-time model, modes ordered (A, B3, C).
///
/// Built as EPR → channel (T, εc) → ηe beamsplitter with the electronic-noise
/// port D traced out → ηd beamsplitter whose reflected port is C. For
/// N0 ≠ 1 the rescaled B3 moments are propagated back through the ηd
/// splitter so that C is regenerated consistently with Bob's apparent data.
pub fn build_three_mode(params: &SystemParams, scenario: &SnuScenario) -> Result<CovarianceMatrix> {
    expect_model(scenario, CalibrationModel::ThreeMode)?;
    params.validate()?;
    three_mode_matrix(params, scenario.n0)
}

pub(crate) fn three_mode_matrix(params: &SystemParams, n0: f64) -> Result<CovarianceMatrix> {
    let split = DetectorSplit::from_params(params)?;
    let v = params.variance;

    let (cov1, var_b1) = lossy_epr(v, params.transmittance, params.eps_c);
    let channel_out = CovarianceMatrix::symmetric_two_mode(v, cov1, var_b1);
    let with_d = apply_beamsplitter(&attach_vacuum(&channel_out), 1, 2, split.eta_e)?;
    let mut before_detector = with_d.select_modes(&[0, 1])?;

    if n0 != 1.0 {
        let eta_d = split.eta_d;
        let d = before_detector.data();
        let (cov2, var_b2) = (d[(0, 2)], d[(2, 2)]);
        let cov3 = eta_d.sqrt() * cov2 / n0.sqrt();
        let var_b3 = (eta_d * (var_b2 - 1.0) + 1.0) / n0;
        before_detector = CovarianceMatrix::symmetric_two_mode(
            v,
            cov3 / eta_d.sqrt(),
            (var_b3 - 1.0) / eta_d + 1.0,
        );
    }

    apply_beamsplitter(&attach_vacuum(&before_detector), 1, 2, split.eta_d)
}

/// Variance of the trusted EPR source that makes the ηd detector add
/// exactly `v_ele` of noise: `1 + v_ele/(1 − ηd)`.
pub fn detector_epr_variance(eta_d: f64, v_ele: f64) -> Result<f64> {
    if v_ele == 0.0 {
        return Ok(1.0);
    }
    if eta_d >= 1.0 {
        return Err(domain(
            "conventional model with eta_d = 1 cannot carry electronic noise; \
             use eta_d < 1 or v_ele = 0",
        ));
    }
    Ok(1.0 + v_ele / (1.0 - eta_d))
}

/// Channel output (A, B1) of the conventional model, i.e. the state Eve purifies.
///
/// For N0 ≠ 1 this is the channel output Alice and Bob would infer from
/// Bob's rescaled detector output with the trusted (ηd, v_ele) removed.
pub fn conventional_channel_output(params: &SystemParams, n0: f64) -> Result<CovarianceMatrix> {
    params.validate()?;
    if !(n0 > 0.0) {
        return Err(domain(format!("n0 must be positive, got {n0}")));
    }
    let v = params.variance;
    let (cov1, var_b1) = lossy_epr(v, params.transmittance, params.eps_c);
    if n0 == 1.0 {
        return Ok(CovarianceMatrix::symmetric_two_mode(v, cov1, var_b1));
    }
    let eta_d = params.eta_d;
    let cov3 = eta_d.sqrt() * cov1 / n0.sqrt();
    let var_b3 = (eta_d * (var_b1 - 1.0) + 1.0 + params.v_ele) / n0;
    Ok(CovarianceMatrix::symmetric_two_mode(
        v,
        cov3 / eta_d.sqrt(),
        (var_b3 - 1.0 - params.v_ele) / eta_d + 1.0,
    ))
}

/// Conventional trusted-detector model, modes ordered (A, B3, F, G): B3 is
/// Bob's measured mode, F the reflected detector port and G the second half
/// of the detector's EPR source. RIN is not represented in this model.
pub fn build_conventional(
    params: &SystemParams,
    scenario: &SnuScenario,
) -> Result<CovarianceMatrix> {
    expect_model(scenario, CalibrationModel::Conventional)?;
    conventional_matrix(params, scenario.n0)
}

pub(crate) fn conventional_matrix(params: &SystemParams, n0: f64) -> Result<CovarianceMatrix> {
    let v_epr = detector_epr_variance(params.eta_d, params.v_ele)?;
    let channel_out = conventional_channel_output(params, n0)?;
    let detector_source = CovarianceMatrix::two_mode_squeezed(v_epr)?;
    apply_beamsplitter(
        &channel_out.direct_sum(&detector_source),
        1,
        2,
        params.eta_d,
    )
}

/// Builds the covariance matrix for whichever model `scenario` names.
pub fn build_model(params: &SystemParams, scenario: &SnuScenario) -> Result<CovarianceMatrix> {
    match scenario.model {
        CalibrationModel::Conventional => build_conventional(params, scenario),
        CalibrationModel::TwoMode => build_two_mode(params, scenario),
        CalibrationModel::ThreeMode => build_three_mode(params, scenario),
    }
}

/// Two-time SNU: `V_tot − V_ele`.
pub fn snu_tte(v_tot: f64, v_ele: f64) -> Result<f64> {
    if !(v_ele >= 0.0) || !(v_tot > v_ele) {
        return Err(domain(format!(
            "unphysical calibration: need v_tot > v_ele >= 0, got v_tot={v_tot}, v_ele={v_ele}"
        )));
    }
    Ok(v_tot - v_ele)
}

/// One-time SNU: the LO-on variance itself (shot noise + electronic + RIN).
pub fn snu_ote(v_tot: f64) -> Result<f64> {
    if !(v_tot > 0.0) {
        return Err(domain(format!(
            "total variance must be positive, got {v_tot}"
        )));
    }
    Ok(v_tot)
}

/// Worst-case attribution of a measured product `T·ηe`: all loss to the
/// untrusted channel, none to the electronic-noise splitter. The three-mode
/// model with Eve purifying (A, B3, C) is exactly this case.
pub fn worst_case_split(t_times_eta_e: f64) -> (f64, f64) {
    (t_times_eta_e, 1.0)
}

/// Parameters Alice and Bob would estimate when Bob's normalised data are
/// scaled by `1 + delta` (a wrong SNU).
///
/// The A–B covariance scales by √(1+δ), so the transmittance estimate is
/// `(1+δ)·T` (capped at 1); the excess noise estimate then absorbs whatever
/// is left of Bob's scaled variance. The trusted detector parameters are
/// unchanged. A negative δ can drive the estimate below zero; it is floored
/// at 0.
pub fn apply_miscalibration(params: &SystemParams, delta: f64) -> Result<SystemParams> {
    params.validate()?;
    if !(1.0 + delta > 0.0) {
        return Err(domain(format!(
            "miscalibration must satisfy 1 + delta > 0, got {delta}"
        )));
    }
    if delta == 0.0 {
        return Ok(*params);
    }
    let tau = params.one_time_transmittance();
    let var_b = tau * (params.variance - 1.0 + params.eps_c) + 1.0;
    let apparent_t = ((1.0 + delta) * params.transmittance).min(1.0);
    let apparent_tau = apparent_t * params.eta_d * params.eta_e();
    let apparent_eps = ((1.0 + delta) * var_b - 1.0) / apparent_tau - (params.variance - 1.0);
    Ok(SystemParams {
        transmittance: apparent_t,
        eps_c: apparent_eps.max(0.0),
        ..*params
    })
}
