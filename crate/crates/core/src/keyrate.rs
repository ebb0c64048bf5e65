//! Reverse-reconciliation key rates under collective attacks.
//!
//! `R = β·I(A:B) − χ(B:E)` in the asymptotic regime and
//! `R = (n/N)·[β·I(A:B) − χ_worst(B:E) − Δ(n)]` with finite statistics, where
//! `χ_worst` is the largest Holevo bound over the SNU confidence interval.

use serde::{Deserialize, Serialize};

use crate::calibration::{confidence_interval_ote, confidence_interval_tte, CalibrationEstimate};
use crate::error::{domain, numerical, Result};
use crate::gaussian::{
    condition_on_homodyne, symplectic_eigenvalues, CovarianceMatrix, MeasurementBasis,
};
use crate::models::{
    apply_miscalibration, conventional_channel_output, conventional_matrix, three_mode_matrix,
    two_mode_matrix, CalibrationModel, SnuScenario, SystemParams,
};

/// Points sampled across the SNU confidence interval, endpoints included.
pub const N0_SCAN_POINTS: usize = 21;

/// Tolerance on the unit symplectic eigenvalue of the three-mode state.
const UNIT_EIGENVALUE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Asymptotic,
    FiniteSize,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Self::Asymptotic => "asymptotic",
            Self::FiniteSize => "finite_size",
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Block and security parameters of a finite-size run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiniteSizeParams {
    /// Block length N.
    pub block_length: u64,
    /// n/N, the fraction of the block that becomes key.
    pub key_fraction: f64,
    pub eps_pe: f64,
    pub eps_pa: f64,
    /// Smoothing parameter ε̄.
    pub eps_smooth: f64,
    /// Raw-key alphabet dimension.
    pub dim_hx: u32,
    /// Samples per SNU calibration batch.
    pub calib_samples: u64,
}

impl Default for FiniteSizeParams {
    fn default() -> Self {
        Self {
            block_length: 10_000_000_000,
            key_fraction: 0.5,
            eps_pe: 1e-10,
            eps_pa: 1e-10,
            eps_smooth: 1e-10,
            dim_hx: 2,
            calib_samples: 5_000_000_000,
        }
    }
}

impl FiniteSizeParams {
    /// Number of key-generating samples n.
    pub fn key_length(&self) -> f64 {
        self.key_fraction * self.block_length as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.block_length == 0 {
            return Err(domain("block length must be positive"));
        }
        if !(self.key_fraction > 0.0 && self.key_fraction < 1.0) {
            return Err(domain(format!(
                "key fraction must lie in (0,1), got {}",
                self.key_fraction
            )));
        }
        for (name, p) in [
            ("eps_pe", self.eps_pe),
            ("eps_pa", self.eps_pa),
            ("eps_smooth", self.eps_smooth),
        ] {
            if !(p > 0.0 && p < 1.0) {
                return Err(domain(format!("{name} must lie in (0,1), got {p}")));
            }
        }
        if self.dim_hx == 0 {
            return Err(domain("raw-key alphabet dimension must be positive"));
        }
        if self.key_length() < 1.0 {
            return Err(domain("key fraction leaves no key samples"));
        }
        if self.calib_samples == 0 || self.calib_samples > self.block_length {
            return Err(domain(format!(
                "calibration samples must lie in [1, N], got {}",
                self.calib_samples
            )));
        }
        Ok(())
    }
}

/// A key rate with its decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeyRateResult {
    /// Bits per pulse; negative values are kept as computed.
    pub rate_bits_per_pulse: f64,
    pub i_ab: f64,
    pub chi_be: f64,
    pub delta_n: f64,
    /// N0 at which the rate was evaluated (the worst one in finite size).
    pub worst_n0: f64,
    pub model: CalibrationModel,
    pub regime: Regime,
}

/// `I(A:B) = ½·log2((V + χ)/(χ + 1))` for the one-time models.
pub fn mutual_information(params: &SystemParams) -> Result<f64> {
    params.validate()?;
    let chi = params.one_time_chi();
    Ok(0.5 * ((params.variance + chi) / (chi + 1.0)).log2())
}

/// `½·log2(V_B / V_{B|A})` read off the x-quadrature moments of `alice` and
/// `bob` in a covariance matrix. Gaussian modulation is equivalent to a
/// heterodyne on Alice's half of the entangled pair, so
/// `V_{B|A} = V_B − c²/(V_A + 1)`.
pub fn mutual_information_from_matrix(
    gamma: &CovarianceMatrix,
    alice: usize,
    bob: usize,
) -> Result<f64> {
    let d = gamma.data();
    let (va, vb, c) = (
        d[(2 * alice, 2 * alice)],
        d[(2 * bob, 2 * bob)],
        d[(2 * alice, 2 * bob)],
    );
    let conditional = vb - c * c / (va + 1.0);
    if !(conditional > 0.0) || !(vb > 0.0) {
        return Err(numerical(format!(
            "non-positive conditional variance {conditional} for Bob given Alice"
        )));
    }
    Ok(0.5 * (vb / conditional).log2())
}

fn entropy(gamma: &CovarianceMatrix) -> Result<f64> {
    symplectic_eigenvalues(gamma)?.entropy()
}

fn conditional_entropy(gamma: &CovarianceMatrix, bob: usize) -> Result<f64> {
    entropy(&condition_on_homodyne(
        gamma,
        bob,
        MeasurementBasis::XQuadrature,
    )?)
}

/// Holevo bound of the two-mode one-time model: `S(AB3) − S(A | x_B3)`.
pub fn holevo_two_mode(params: &SystemParams, n0: f64) -> Result<f64> {
    params.validate()?;
    let gamma = two_mode_matrix(params, n0)?;
    Ok(entropy(&gamma)? - conditional_entropy(&gamma, 1)?)
}

/// Holevo bound of the three-mode one-time model: `S(AB3C) − S(AC | x_B3)`.
///
/// At the nominal N0 the (A, B3, C) state has one unit symplectic eigenvalue
/// (a vacuum entered the detector splitter); its absence signals a malformed
/// matrix. Rescaled moments at other N0 need not keep it.
pub fn holevo_three_mode(params: &SystemParams, n0: f64) -> Result<f64> {
    params.validate()?;
    let gamma = three_mode_matrix(params, n0)?;
    let spectrum = symplectic_eigenvalues(&gamma)?;
    if n0 == 1.0 && (spectrum.min() - 1.0).abs() > UNIT_EIGENVALUE_TOL {
        return Err(numerical(format!(
            "three-mode state lacks its unit symplectic eigenvalue (smallest is {})",
            spectrum.min()
        )));
    }
    Ok(spectrum.entropy()? - conditional_entropy(&gamma, 1)?)
}

/// Holevo bound of the conventional model: Eve purifies the channel output
/// (A, B1); the conditional term uses the full (A, B3, F, G) state.
pub fn holevo_conventional(params: &SystemParams, n0: f64) -> Result<f64> {
    params.validate()?;
    let eve = entropy(&conventional_channel_output(params, n0)?)?;
    let full = conventional_matrix(params, n0)?;
    Ok(eve - conditional_entropy(&full, 1)?)
}

/// Holevo bound for `model`.
pub fn holevo(params: &SystemParams, model: CalibrationModel, n0: f64) -> Result<f64> {
    match model {
        CalibrationModel::Conventional => holevo_conventional(params, n0),
        CalibrationModel::TwoMode => holevo_two_mode(params, n0),
        CalibrationModel::ThreeMode => holevo_three_mode(params, n0),
    }
}

fn model_matrix(
    params: &SystemParams,
    model: CalibrationModel,
    n0: f64,
) -> Result<CovarianceMatrix> {
    match model {
        CalibrationModel::Conventional => conventional_matrix(params, n0),
        CalibrationModel::TwoMode => two_mode_matrix(params, n0),
        CalibrationModel::ThreeMode => three_mode_matrix(params, n0),
    }
}

/// `(I_AB, χ_BE)` at one N0.
fn information_terms(
    params: &SystemParams,
    model: CalibrationModel,
    n0: f64,
) -> Result<(f64, f64)> {
    let i_ab = mutual_information_from_matrix(&model_matrix(params, model, n0)?, 0, 1)?;
    let chi = holevo(params, model, n0)?;
    Ok((i_ab, chi))
}

/// Asymptotic key rate for the scenario's model. A nonzero
/// `scenario.calib_error` first replaces `params` with the apparent
/// parameters a miscalibrated SNU would produce.
pub fn key_rate_asymptotic(params: &SystemParams, scenario: &SnuScenario) -> Result<KeyRateResult> {
    scenario.validate()?;
    let params = apply_miscalibration(params, scenario.calib_error)?;
    let (i_ab, chi_be) = information_terms(&params, scenario.model, scenario.n0)?;
    Ok(KeyRateResult {
        rate_bits_per_pulse: params.beta * i_ab - chi_be,
        i_ab,
        chi_be,
        delta_n: 0.0,
        worst_n0: scenario.n0,
        model: scenario.model,
        regime: Regime::Asymptotic,
    })
}

/// `Δ(n) = (2·dim_hx + 3)·√(log2(2/ε̄)/n) + (2/n)·log2(1/ε_PA)`.
pub fn finite_size_penalty(fs: &FiniteSizeParams) -> Result<f64> {
    let n = fs.key_length();
    if !(n >= 2.0) {
        return Err(domain(format!("finite-size penalty needs n >= 2, got {n}")));
    }
    let coefficient = 2.0 * f64::from(fs.dim_hx) + 3.0;
    Ok(
        coefficient * ((2.0 / fs.eps_smooth).log2() / n).sqrt()
            + 2.0 / n * (1.0 / fs.eps_pa).log2(),
    )
}

/// Evenly spaced N0 values spanning the normalised confidence interval.
pub fn n0_grid(calib: &CalibrationEstimate) -> Result<Vec<f64>> {
    if !(calib.lower > 0.0) || !(calib.point > 0.0) || !(calib.upper >= calib.lower) {
        return Err(domain(format!(
            "invalid SNU interval [{}, {}] around {}",
            calib.lower, calib.upper, calib.point
        )));
    }
    let (lo, hi) = calib.normalized_bounds();
    if lo == hi {
        return Ok(vec![lo]);
    }
    let step = (hi - lo) / (N0_SCAN_POINTS - 1) as f64;
    Ok((0..N0_SCAN_POINTS)
        .map(|k| {
            if k == N0_SCAN_POINTS - 1 {
                hi
            } else {
                lo + step * k as f64
            }
        })
        .collect())
}

/// Whether the state inferred at `n0` obeys the uncertainty principle. An
/// overestimated N0 shrinks Bob's apparent variance and can push the
/// reconstructed state outside the physical set, ruling that N0 out.
fn admissible(params: &SystemParams, model: CalibrationModel, n0: f64) -> Result<bool> {
    let physical = model_matrix(params, model, n0)?.is_physical();
    Ok(match model {
        CalibrationModel::Conventional => {
            physical && conventional_channel_output(params, n0)?.is_physical()
        }
        _ => physical,
    })
}

/// Finite-size key rate: the worst `β·I_AB − χ_BE` over the physically
/// admissible part of the SNU interval, minus Δ(n), scaled by the key
/// fraction.
pub fn key_rate_finite(
    params: &SystemParams,
    scenario: &SnuScenario,
    fs: &FiniteSizeParams,
    calib: &CalibrationEstimate,
) -> Result<KeyRateResult> {
    scenario.validate()?;
    fs.validate()?;
    let params = apply_miscalibration(params, scenario.calib_error)?;
    let delta_n = finite_size_penalty(fs)?;

    let mut worst: Option<(f64, f64, f64, f64)> = None;
    for n0 in n0_grid(calib)? {
        if !admissible(&params, scenario.model, n0 * scenario.n0)? {
            continue;
        }
        let (i_ab, chi) = information_terms(&params, scenario.model, n0 * scenario.n0)?;
        let bracket = params.beta * i_ab - chi;
        if worst.is_none_or(|(b, ..)| bracket < b) {
            worst = Some((bracket, i_ab, chi, n0 * scenario.n0));
        }
    }
    let (bracket, i_ab, chi_be, worst_n0) = worst
        .ok_or_else(|| numerical("no N0 in the calibration interval yields a physical state"))?;
    Ok(KeyRateResult {
        rate_bits_per_pulse: fs.key_fraction * (bracket - delta_n),
        i_ab,
        chi_be,
        delta_n,
        worst_n0,
        model: scenario.model,
        regime: Regime::FiniteSize,
    })
}

/// Calibration interval the model would obtain from noiseless estimates of
/// its own noise levels (true SNU = 1): one-time models use the LO-on batch,
/// the conventional model adds LO-on and LO-off fluctuations with
/// `calib_samples` samples in each batch.
pub fn nominal_calibration(
    params: &SystemParams,
    model: CalibrationModel,
    fs: &FiniteSizeParams,
) -> Result<CalibrationEstimate> {
    let v_tot = 1.0 + params.v_ele + params.v_rin;
    if model.is_one_time() {
        confidence_interval_ote(v_tot, fs.calib_samples, fs.eps_pe)
    } else {
        confidence_interval_tte(
            v_tot,
            params.v_ele,
            fs.calib_samples,
            fs.calib_samples,
            fs.eps_pe,
        )
    }
}

/// Key rate in either regime; finite size uses [`nominal_calibration`].
pub fn key_rate(
    params: &SystemParams,
    scenario: &SnuScenario,
    finite: Option<&FiniteSizeParams>,
) -> Result<KeyRateResult> {
    match finite {
        None => key_rate_asymptotic(params, scenario),
        Some(fs) => {
            let calib = nominal_calibration(params, scenario.model, fs)?;
            key_rate_finite(params, scenario, fs, &calib)
        }
    }
}

/// Bisection settings for [`tolerable_excess_noise`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BisectionOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Initial upper bracket, doubled until the rate turns non-positive.
    pub initial_upper: f64,
    pub max_upper: f64,
}

impl Default for BisectionOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-4,
            max_iterations: 60,
            initial_upper: 0.05,
            max_upper: 64.0,
        }
    }
}

/// Largest excess noise with a positive rate, for a rate that decreases in
/// the excess noise. Returns 0 when the rate is already non-positive at 0.
pub fn tolerable_excess_noise<F>(rate_at: F, opts: &BisectionOptions) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    if rate_at(0.0)? <= 0.0 {
        return Ok(0.0);
    }
    let mut lo = 0.0;
    let mut hi = opts.initial_upper;
    while rate_at(hi)? > 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > opts.max_upper {
            return Err(numerical(format!(
                "rate still positive at excess noise {}; no zero crossing bracketed",
                opts.max_upper
            )));
        }
    }
    for _ in 0..opts.max_iterations {
        if hi - lo <= opts.tolerance {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if rate_at(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Tolerable excess noise of a model at fixed channel and detector.
pub fn model_tolerable_excess_noise(
    params: &SystemParams,
    scenario: &SnuScenario,
    finite: Option<&FiniteSizeParams>,
    opts: &BisectionOptions,
) -> Result<f64> {
    tolerable_excess_noise(
        |eps_c| Ok(key_rate(&params.with_eps_c(eps_c), scenario, finite)?.rate_bits_per_pulse),
        opts,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibration::CalibrationMethod;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn reference(variance: f64, km: f64) -> SystemParams {
        SystemParams {
            variance,
            ..SystemParams::default()
        }
        .at_distance(km)
    }

    fn pure(variance: f64) -> SystemParams {
        SystemParams {
            variance,
            eps_c: 0.0,
            eta_d: 1.0,
            v_ele: 0.0,
            ..SystemParams::default()
        }
    }

    #[test]
    fn mutual_information_limits() {
        assert_relative_eq!(
            mutual_information(&pure(40.0)).unwrap(),
            2.660_964_047_443_681,
            epsilon = 1e-13
        );
        let near_one = SystemParams {
            variance: 1.0 + 1e-12,
            ..reference(40.0, 10.0)
        };
        assert!(mutual_information(&near_one).unwrap() < 1e-11);
    }

    #[test]
    fn mutual_information_matches_conditional_variance() {
        for km in [0.0, 10.0, 50.0, 120.0] {
            let p = reference(20.0, km);
            let g = two_mode_matrix(&p, 1.0).unwrap();
            assert_relative_eq!(
                mutual_information(&p).unwrap(),
                mutual_information_from_matrix(&g, 0, 1).unwrap(),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn pure_states_leak_nothing() {
        let p = pure(40.0);
        assert!(holevo_two_mode(&p, 1.0).unwrap().abs() < 1e-9);
        assert!(holevo_three_mode(&p, 1.0).unwrap().abs() < 1e-9);
        assert!(holevo_conventional(&p, 1.0).unwrap().abs() < 1e-9);
    }

    #[test]
    fn three_mode_matches_conventional_without_electronic_noise() {
        for km in [0.0, 25.0, 80.0] {
            let p = SystemParams {
                v_ele: 0.0,
                ..reference(40.0, km)
            };
            assert_relative_eq!(
                holevo_three_mode(&p, 1.0).unwrap(),
                holevo_conventional(&p, 1.0).unwrap(),
                max_relative = 1e-9
            );
        }
    }

    #[test]
    fn trusted_detector_reduces_eve_information() {
        let p = SystemParams {
            transmittance: 0.5,
            ..SystemParams::default()
        };
        assert!(holevo_three_mode(&p, 1.0).unwrap() <= holevo_two_mode(&p, 1.0).unwrap());
    }

    #[test]
    fn conventional_positive_at_50_km() {
        let p = reference(40.0, 50.0);
        let chi = holevo_conventional(&p, 1.0).unwrap();
        let i_ab =
            mutual_information_from_matrix(&conventional_matrix(&p, 1.0).unwrap(), 0, 1).unwrap();
        assert!(chi > 0.0 && chi.is_finite());
        assert!(chi < p.beta * i_ab);
    }

    #[test]
    fn asymptotic_rate_at_zero_distance() {
        let p = reference(40.0, 0.0);
        let r = key_rate_asymptotic(&p, &SnuScenario::new(CalibrationModel::TwoMode)).unwrap();
        let expected = p.beta * mutual_information(&p).unwrap() - holevo_two_mode(&p, 1.0).unwrap();
        assert_relative_eq!(r.rate_bits_per_pulse, expected, epsilon = 1e-12);
        assert_eq!(r.regime, Regime::Asymptotic);
        assert_eq!(r.delta_n, 0.0);
    }

    #[test]
    fn penalty_values() {
        let fs = FiniteSizeParams::default();
        assert_relative_eq!(
            finite_size_penalty(&fs).unwrap(),
            5.791_065_041_283_22e-4,
            max_relative = 1e-12
        );
        let tiny = FiniteSizeParams {
            block_length: 2,
            key_fraction: 0.5,
            calib_samples: 1,
            ..fs
        };
        assert!(finite_size_penalty(&tiny).is_err());
        let mut last = f64::INFINITY;
        for k in 4..16 {
            let fs = FiniteSizeParams {
                block_length: 10u64.pow(k),
                calib_samples: 1,
                ..fs
            };
            let d = finite_size_penalty(&fs).unwrap();
            assert!(d < last);
            last = d;
        }
        assert!(last < 1e-5);
    }

    #[test]
    fn finite_rate_reduces_to_asymptotic() {
        let p = reference(40.0, 20.0);
        let scenario = SnuScenario::new(CalibrationModel::ThreeMode);
        let fs = FiniteSizeParams {
            block_length: u64::MAX / 4,
            calib_samples: 1,
            ..FiniteSizeParams::default()
        };
        let exact = CalibrationEstimate::exact(CalibrationMethod::OneTime, 1.0);
        let finite = key_rate_finite(&p, &scenario, &fs, &exact).unwrap();
        let asym = key_rate_asymptotic(&p, &scenario).unwrap();
        assert_relative_eq!(
            finite.rate_bits_per_pulse / fs.key_fraction,
            asym.rate_bits_per_pulse,
            max_relative = 1e-6
        );
        assert_eq!(finite.worst_n0, 1.0);
    }

    #[test]
    fn finite_rate_rejects_bad_interval() {
        let p = reference(4.0, 10.0);
        let mut calib = CalibrationEstimate::exact(CalibrationMethod::OneTime, 1.0);
        calib.lower = 0.0;
        let err = key_rate_finite(
            &p,
            &SnuScenario::new(CalibrationModel::TwoMode),
            &FiniteSizeParams::default(),
            &calib,
        );
        assert!(err.is_err());
    }

    #[test]
    fn n0_grid_spans_interval() {
        let calib = confidence_interval_ote(1.01, 1_000_000, 1e-10).unwrap();
        let grid = n0_grid(&calib).unwrap();
        assert_eq!(grid.len(), N0_SCAN_POINTS);
        let (lo, hi) = calib.normalized_bounds();
        assert_eq!(grid[0], lo);
        assert_eq!(grid[N0_SCAN_POINTS - 1], hi);
        assert!(grid.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn finite_rate_grows_with_block_length() {
        let p = reference(4.0, 30.0);
        let scenario = SnuScenario::new(CalibrationModel::ThreeMode);
        let mut last = f64::NEG_INFINITY;
        for k in 7..=12 {
            let n = 10u64.pow(k);
            let fs = FiniteSizeParams {
                block_length: n,
                calib_samples: n / 2,
                ..Default::default()
            };
            let r = key_rate(&p, &scenario, Some(&fs))
                .unwrap()
                .rate_bits_per_pulse;
            assert!(r >= last, "N=1e{k}: {r} < {last}");
            last = r;
        }
    }

    #[test]
    fn bisection_finds_known_root() {
        let root = 0.123_456;
        let ten = tolerable_excess_noise(|e| Ok(root - e), &BisectionOptions::default()).unwrap();
        assert!(ten <= root && root - ten <= 1e-4);
        let zero = tolerable_excess_noise(|e| Ok(-1.0 - e), &BisectionOptions::default()).unwrap();
        assert_eq!(zero, 0.0);
    }

    #[test]
    fn ten_of_two_mode_below_three_mode() {
        let opts = BisectionOptions::default();
        for km in [5.0, 40.0, 90.0] {
            let p = reference(4.0, km);
            let two = model_tolerable_excess_noise(
                &p,
                &SnuScenario::new(CalibrationModel::TwoMode),
                None,
                &opts,
            )
            .unwrap();
            let three = model_tolerable_excess_noise(
                &p,
                &SnuScenario::new(CalibrationModel::ThreeMode),
                None,
                &opts,
            )
            .unwrap();
            assert!(two <= three + 1e-4, "{km} km: {two} > {three}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn holevo_nondecreasing_in_excess_noise(
            km in 0.0f64..120.0, e1 in 0.0f64..0.1, e2 in 0.0f64..0.1
        ) {
            let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
            let base = reference(40.0, km);
            let a = holevo_two_mode(&base.with_eps_c(lo), 1.0).unwrap();
            let b = holevo_two_mode(&base.with_eps_c(hi), 1.0).unwrap();
            prop_assert!(b >= a - 1e-9);
        }

        #[test]
        fn information_terms_nonnegative(
            variance in 1.5f64..60.0, km in 0.0f64..150.0, eps_c in 0.0f64..0.1,
            v_ele in 0.0f64..0.2
        ) {
            let p = SystemParams { variance, eps_c, v_ele, ..SystemParams::default() }
                .at_distance(km);
            for model in CalibrationModel::ALL {
                let r = key_rate_asymptotic(&p, &SnuScenario::new(model)).unwrap();
                prop_assert!(r.i_ab >= 0.0);
                prop_assert!(r.chi_be >= -1e-9);
            }
        }
    }
}
