//! Parameter sweeps over (model, V, distance, δ) and their tabular output.

use std::io::Write;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibration::{deviation_curve, DeviationRow, NoiseGroundTruth};
use crate::error::{validation, Result};
use crate::keyrate::{
    key_rate, model_tolerable_excess_noise, BisectionOptions, FiniteSizeParams, Regime,
};
use crate::models::{CalibrationModel, SnuScenario, SystemParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistanceGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl DistanceGrid {
    pub fn validate(&self) -> Result<()> {
        if !(self.start.is_finite() && self.stop.is_finite() && self.step.is_finite()) {
            return Err(validation(
                "distances_km: start, stop and step must be finite",
            ));
        }
        if !(self.step > 0.0) {
            return Err(validation(format!(
                "distances_km.step must be > 0, got {}",
                self.step
            )));
        }
        if self.stop < self.start {
            return Err(validation(format!(
                "distances_km.stop ({}) must be >= start ({})",
                self.stop, self.start
            )));
        }
        if self.start < 0.0 {
            return Err(validation(format!(
                "distances_km.start must be >= 0, got {}",
                self.start
            )));
        }
        Ok(())
    }

    /// `start, start + step, …` up to and including `stop` (within 1e-9 steps).
    pub fn points(&self) -> Vec<f64> {
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..count)
            .map(|k| self.start + self.step * k as f64)
            .collect()
    }
}

/// Channel and detector settings shared by every grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemSection {
    pub eps_c: f64,
    pub eta_d: f64,
    pub v_ele: f64,
    pub v_rin: f64,
    pub beta: f64,
}

impl Default for SystemSection {
    fn default() -> Self {
        let p = SystemParams::default();
        Self {
            eps_c: p.eps_c,
            eta_d: p.eta_d,
            v_ele: p.v_ele,
            v_rin: p.v_rin,
            beta: p.beta,
        }
    }
}

impl SystemSection {
    pub fn params(&self, variance: f64, distance_km: f64) -> SystemParams {
        SystemParams {
            variance,
            transmittance: 1.0,
            eps_c: self.eps_c,
            eta_d: self.eta_d,
            v_ele: self.v_ele,
            v_rin: self.v_rin,
            beta: self.beta,
        }
        .at_distance(distance_km)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(validation(format!(
                "unknown output format '{other}' (csv or json)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    /// Destination file; standard output when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    pub format: OutputFormat,
}

/// Inputs of the calibration-statistics report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationSection {
    pub v_tot: f64,
    pub v_ele: f64,
    pub eps_pe: f64,
    pub m_grid: Vec<u64>,
    #[serde(default)]
    pub seed: u64,
}

/// A complete run description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub models: Vec<CalibrationModel>,
    #[serde(default = "default_regime")]
    pub regime: Regime,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub distances_km: Option<DistanceGrid>,
    #[serde(default)]
    pub variances: Vec<f64>,
    #[serde(default)]
    pub system: SystemSection,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub finite_size: Option<FiniteSizeParams>,
    #[serde(default)]
    pub miscalibration_deltas: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub pulse_rate_hz: Option<f64>,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub calibration: Option<CalibrationSection>,
}

fn default_regime() -> Regime {
    Regime::Asymptotic
}

impl SweepConfig {
    /// Checks everything `sweep` and `ten` need.
    pub fn validate_sweep(&self) -> Result<()> {
        if self.models.is_empty() {
            return Err(validation("models: at least one model is required"));
        }
        let grid = self
            .distances_km
            .as_ref()
            .ok_or_else(|| validation("distances_km: section is required"))?;
        grid.validate()?;
        if self.variances.is_empty() {
            return Err(validation("variances: at least one value is required"));
        }
        for &v in &self.variances {
            self.system
                .params(v, grid.start)
                .validate()
                .map_err(|e| validation(format!("variances/system: {e}")))?;
        }
        for &d in &self.miscalibration_deltas {
            if !(1.0 + d > 0.0) {
                return Err(validation(format!(
                    "miscalibration_deltas: each delta must exceed -1, got {d}"
                )));
            }
        }
        if let Some(rate) = self.pulse_rate_hz {
            if !(rate > 0.0 && rate.is_finite()) {
                return Err(validation(format!(
                    "pulse_rate_hz must be positive, got {rate}"
                )));
            }
        }
        match (self.regime, &self.finite_size) {
            (Regime::FiniteSize, None) => {
                return Err(validation(
                    "finite_size: section is required for the finite_size regime",
                ))
            }
            (_, Some(fs)) => fs
                .validate()
                .map_err(|e| validation(format!("finite_size: {e}")))?,
            _ => {}
        }
        Ok(())
    }

    /// Checks everything `calib` needs.
    pub fn validate_calibration(&self) -> Result<()> {
        let c = self
            .calibration
            .as_ref()
            .ok_or_else(|| validation("calibration: section is required"))?;
        NoiseGroundTruth::new(c.v_tot, c.v_ele, c.seed)
            .map_err(|e| validation(format!("calibration: {e}")))?;
        if !(c.eps_pe > 0.0 && c.eps_pe < 1.0) {
            return Err(validation(format!(
                "calibration.eps_pe must lie in (0,1), got {}",
                c.eps_pe
            )));
        }
        if c.m_grid.is_empty() {
            return Err(validation("calibration.m_grid must not be empty"));
        }
        if let Some(&m) = c.m_grid.iter().find(|&&m| m < 2) {
            return Err(validation(format!(
                "calibration.m_grid entries must be >= 2, got {m}"
            )));
        }
        Ok(())
    }

    fn deltas(&self) -> Vec<f64> {
        if self.miscalibration_deltas.is_empty() {
            vec![0.0]
        } else {
            self.miscalibration_deltas.clone()
        }
    }

    fn finite(&self) -> Option<&FiniteSizeParams> {
        match self.regime {
            Regime::Asymptotic => None,
            Regime::FiniteSize => self.finite_size.as_ref(),
        }
    }

    /// Grid points in output order: model, V, distance, δ.
    fn points(&self) -> Vec<GridPoint> {
        let mut models = self.models.clone();
        models.sort();
        models.dedup();
        let mut variances = self.variances.clone();
        variances.sort_by(f64::total_cmp);
        variances.dedup();
        let distances = self.distances_km.map(|g| g.points()).unwrap_or_default();
        let deltas = self.deltas();
        let mut out = Vec::new();
        for &model in &models {
            for &variance in &variances {
                for &distance_km in &distances {
                    for &delta in &deltas {
                        out.push(GridPoint {
                            model,
                            variance,
                            distance_km,
                            delta,
                        });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
struct GridPoint {
    model: CalibrationModel,
    variance: f64,
    distance_km: f64,
    delta: f64,
}

/// One row of a key-rate sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub model: CalibrationModel,
    pub regime: Regime,
    #[serde(rename = "V")]
    pub variance: f64,
    pub distance_km: f64,
    pub transmittance: f64,
    pub eps_c: f64,
    pub eta_d: f64,
    pub v_ele: f64,
    pub delta: f64,
    pub n0_worst: f64,
    pub i_ab: f64,
    pub chi_be: f64,
    pub delta_n: f64,
    pub rate_bits_per_pulse: f64,
    pub rate_bits_per_s: Option<f64>,
    pub rate_clamped: f64,
}

/// One row of a tolerable-excess-noise sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TenRow {
    pub model: CalibrationModel,
    pub regime: Regime,
    #[serde(rename = "V")]
    pub variance: f64,
    pub distance_km: f64,
    pub transmittance: f64,
    pub eta_d: f64,
    pub v_ele: f64,
    pub delta: f64,
    pub ten: f64,
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| crate::Error::Numerical(format!("cannot start worker pool: {e}")))
}

/// Evaluates the key rate at every grid point. Rows come back sorted by
/// (model, V, distance, δ) whatever the number of workers.
pub fn run_sweep(config: &SweepConfig, jobs: usize) -> Result<Vec<SweepRow>> {
    config.validate_sweep()?;
    let finite = config.finite();
    let points = config.points();
    pool(jobs)?.install(|| {
        points
            .par_iter()
            .map(|pt| {
                let params = config.system.params(pt.variance, pt.distance_km);
                let scenario = SnuScenario::new(pt.model).with_calib_error(pt.delta);
                let r = key_rate(&params, &scenario, finite)?;
                Ok(SweepRow {
                    model: pt.model,
                    regime: config.regime,
                    variance: pt.variance,
                    distance_km: pt.distance_km,
                    transmittance: params.transmittance,
                    eps_c: params.eps_c,
                    eta_d: params.eta_d,
                    v_ele: params.v_ele,
                    delta: pt.delta,
                    n0_worst: r.worst_n0,
                    i_ab: r.i_ab,
                    chi_be: r.chi_be,
                    delta_n: r.delta_n,
                    rate_bits_per_pulse: r.rate_bits_per_pulse,
                    rate_bits_per_s: config.pulse_rate_hz.map(|hz| hz * r.rate_bits_per_pulse),
                    rate_clamped: r.rate_bits_per_pulse.max(0.0),
                })
            })
            .collect()
    })
}

/// Tolerable excess noise at every grid point (the configured `eps_c` is ignored).
pub fn run_ten_sweep(config: &SweepConfig, jobs: usize) -> Result<Vec<TenRow>> {
    config.validate_sweep()?;
    let finite = config.finite();
    let opts = BisectionOptions::default();
    let points = config.points();
    pool(jobs)?.install(|| {
        points
            .par_iter()
            .map(|pt| {
                let params = config.system.params(pt.variance, pt.distance_km);
                let scenario = SnuScenario::new(pt.model).with_calib_error(pt.delta);
                let ten = model_tolerable_excess_noise(&params, &scenario, finite, &opts)?;
                Ok(TenRow {
                    model: pt.model,
                    regime: config.regime,
                    variance: pt.variance,
                    distance_km: pt.distance_km,
                    transmittance: params.transmittance,
                    eta_d: params.eta_d,
                    v_ele: params.v_ele,
                    delta: pt.delta,
                    ten,
                })
            })
            .collect()
    })
}

/// Calibration deviation table for the config's `calibration` section.
pub fn run_calibration_report(config: &SweepConfig) -> Result<Vec<DeviationRow>> {
    config.validate_calibration()?;
    let c = config.calibration.as_ref().expect("validated");
    let truth = NoiseGroundTruth::new(c.v_tot, c.v_ele, c.seed)?;
    deviation_curve(&truth, &c.m_grid, c.eps_pe)
}

/// Rows that can be written as CSV.
pub trait CsvRecord: Serialize {
    const HEADER: &'static [&'static str];
    fn fields(&self) -> Vec<String>;
}

fn num(x: f64) -> String {
    format!("{x}")
}

impl CsvRecord for SweepRow {
    const HEADER: &'static [&'static str] = &[
        "model",
        "regime",
        "V",
        "distance_km",
        "transmittance",
        "eps_c",
        "eta_d",
        "v_ele",
        "delta",
        "n0_worst",
        "i_ab",
        "chi_be",
        "delta_n",
        "rate_bits_per_pulse",
        "rate_bits_per_s",
        "rate_clamped",
    ];

    fn fields(&self) -> Vec<String> {
        vec![
            self.model.to_string(),
            self.regime.to_string(),
            num(self.variance),
            num(self.distance_km),
            num(self.transmittance),
            num(self.eps_c),
            num(self.eta_d),
            num(self.v_ele),
            num(self.delta),
            num(self.n0_worst),
            num(self.i_ab),
            num(self.chi_be),
            num(self.delta_n),
            num(self.rate_bits_per_pulse),
            self.rate_bits_per_s.map(num).unwrap_or_default(),
            num(self.rate_clamped),
        ]
    }
}

impl CsvRecord for TenRow {
    const HEADER: &'static [&'static str] = &[
        "model",
        "regime",
        "V",
        "distance_km",
        "transmittance",
        "eta_d",
        "v_ele",
        "delta",
        "ten",
    ];

    fn fields(&self) -> Vec<String> {
        vec![
            self.model.to_string(),
            self.regime.to_string(),
            num(self.variance),
            num(self.distance_km),
            num(self.transmittance),
            num(self.eta_d),
            num(self.v_ele),
            num(self.delta),
            num(self.ten),
        ]
    }
}

impl CsvRecord for DeviationRow {
    const HEADER: &'static [&'static str] =
        &["m", "snu_norm_ote", "snu_norm_tte", "dev_ote", "dev_tte"];

    fn fields(&self) -> Vec<String> {
        vec![
            self.m.to_string(),
            num(self.snu_norm_ote),
            num(self.snu_norm_tte),
            num(self.dev_ote),
            num(self.dev_tte),
        ]
    }
}

/// Comma-separated, header first, LF line endings, no quoting.
pub fn write_csv<R: CsvRecord, W: Write>(rows: &[R], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{}", R::HEADER.join(","))?;
    for row in rows {
        writeln!(out, "{}", row.fields().join(","))?;
    }
    out.flush()
}

/// Pretty-printed JSON array of row objects.
pub fn write_json<R: Serialize, W: Write>(rows: &[R], mut out: W) -> std::io::Result<()> {
    serde_json::to_writer_pretty(&mut out, rows)?;
    writeln!(out)?;
    out.flush()
}

pub fn write_rows<R: CsvRecord, W: Write>(
    rows: &[R],
    format: OutputFormat,
    out: W,
) -> std::io::Result<()> {
    match format {
        OutputFormat::Csv => write_csv(rows, out),
        OutputFormat::Json => write_json(rows, out),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> SweepConfig {
        SweepConfig {
            models: vec![CalibrationModel::ThreeMode, CalibrationModel::Conventional],
            regime: Regime::Asymptotic,
            distances_km: Some(DistanceGrid {
                start: 0.0,
                stop: 20.0,
                step: 10.0,
            }),
            variances: vec![40.0, 4.0],
            system: SystemSection::default(),
            finite_size: None,
            miscalibration_deltas: vec![],
            pulse_rate_hz: None,
            output: OutputSpec::default(),
            calibration: None,
        }
    }

    #[test]
    fn distance_grid_points() {
        let g = DistanceGrid {
            start: 0.0,
            stop: 1.0,
            step: 0.1,
        };
        let pts = g.points();
        assert_eq!(pts.len(), 11);
        assert!((pts[10] - 1.0).abs() < 1e-12);
        let single = DistanceGrid {
            start: 5.0,
            stop: 5.0,
            step: 1.0,
        };
        assert_eq!(single.points(), vec![5.0]);
        assert!(DistanceGrid {
            start: 1.0,
            stop: 0.0,
            step: 1.0
        }
        .validate()
        .is_err());
        assert!(DistanceGrid {
            start: 0.0,
            stop: 1.0,
            step: 0.0
        }
        .validate()
        .is_err());
    }

    #[test]
    fn rows_sorted_and_sized() {
        let rows = run_sweep(&small_config(), 2).unwrap();
        assert_eq!(rows.len(), 2 * 2 * 3);
        assert_eq!(rows[0].model, CalibrationModel::Conventional);
        assert_eq!(rows[0].variance, 4.0);
        assert_eq!(rows.last().unwrap().model, CalibrationModel::ThreeMode);
        assert!(rows.iter().all(|r| r.rate_bits_per_s.is_none()));
    }

    #[test]
    fn pulse_rate_column() {
        let cfg = SweepConfig {
            pulse_rate_hz: Some(5e6),
            ..small_config()
        };
        let rows = run_sweep(&cfg, 1).unwrap();
        for r in rows {
            assert_eq!(r.rate_bits_per_s, Some(5e6 * r.rate_bits_per_pulse));
        }
    }

    #[test]
    fn validation_messages_name_fields() {
        let cfg = SweepConfig {
            models: vec![],
            ..small_config()
        };
        assert!(cfg
            .validate_sweep()
            .unwrap_err()
            .to_string()
            .contains("models"));
        let cfg = SweepConfig {
            regime: Regime::FiniteSize,
            ..small_config()
        };
        assert!(cfg
            .validate_sweep()
            .unwrap_err()
            .to_string()
            .contains("finite_size"));
        let cfg = SweepConfig {
            variances: vec![0.5],
            ..small_config()
        };
        assert!(cfg
            .validate_sweep()
            .unwrap_err()
            .to_string()
            .contains("variance"));
        assert!(small_config().validate_calibration().is_err());
    }

    #[test]
    fn csv_layout() {
        let rows = run_sweep(&small_config(), 1).unwrap();
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.split('\n').collect();
        assert_eq!(lines[0], SweepRow::HEADER.join(","));
        assert_eq!(lines.len(), rows.len() + 2);
        assert_eq!(lines.last(), Some(&""));
        assert!(!text.contains('\r'));
        assert!(lines[1..=rows.len()]
            .iter()
            .all(|l| l.split(',').count() == SweepRow::HEADER.len()));
    }
}
