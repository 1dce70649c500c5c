use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::flux::GnVerdict;
use crate::lattice::AvoidanceCertificate;
use crate::periodization::EnvelopeScalars;

/// One named pass/fail outcome with the numbers behind it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub passed: bool,
    pub value: Option<f64>,
    pub threshold: Option<f64>,
    pub detail: String,
}

impl Verdict {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Verdict {
            name: name.into(),
            passed,
            value: None,
            threshold: None,
            detail: detail.into(),
        }
    }

    /// `value <= threshold`.
    pub fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Verdict {
            name: name.into(),
            passed: value <= threshold,
            value: Some(value),
            threshold: Some(threshold),
            detail: format!("{value:e} <= {threshold:e}"),
        }
    }
}

/// One row of the time series. Columns not produced by a command stay empty.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub t: f64,
    pub x_norm: Option<f64>,
    pub l1_cell: Option<f64>,
    pub mass: Option<f64>,
    pub dev_plus: Option<f64>,
    pub dev_minus: Option<f64>,
    /// Scale of the pipeline run the row belongs to.
    pub r: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub t_min: f64,
    pub t_max: f64,
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual in `ln X`.
    pub residual: f64,
    pub points: usize,
}

/// Least squares fit of `ln y = slope ln t + intercept` over rows with
/// `t_min <= t <= t_max` and `y > 0`. The rows are thinned to about 64
/// log-spaced times so that dense late sampling does not dominate.
pub fn fit_rate(samples: &[(f64, f64)], t_min: f64, t_max: f64) -> Option<RateFit> {
    let window: Vec<(f64, f64)> = samples
        .iter()
        .copied()
        .filter(|&(t, y)| t >= t_min && t <= t_max && t > 0.0 && y > 0.0)
        .collect();
    if window.len() < 2 {
        return None;
    }
    let (a, b) = (window[0].0.ln(), window[window.len() - 1].0.ln());
    let targets = 64usize;
    let mut picked: Vec<(f64, f64)> = Vec::new();
    let mut j = 0;
    for k in 0..targets {
        let target = a + (b - a) * k as f64 / (targets - 1) as f64;
        while j + 1 < window.len() && (window[j + 1].0.ln() - target).abs() <= (window[j].0.ln() - target).abs() {
            j += 1;
        }
        if picked.last().map(|p| p.0) != Some(window[j].0) {
            picked.push(window[j]);
        }
    }
    if picked.len() < 2 {
        return None;
    }
    let pts: Vec<(f64, f64)> = picked.iter().map(|&(t, y)| (t.ln(), y.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (pts.iter().map(|p| (p.1 - slope * p.0 - intercept).powi(2)).sum::<f64>() / n).sqrt();
    Some(RateFit {
        t_min,
        t_max,
        slope,
        intercept,
        residual,
        points: pts.len(),
    })
}

/// A snapshot for the `states/` directory: cell centres and values.
#[derive(Debug, Clone, PartialEq)]
pub struct StateDump {
    pub name: String,
    pub centers: Vec<Vec<f64>>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub command: String,
    pub version: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub gn: Option<GnVerdict>,
    pub lattice_certificate: Option<AvoidanceCertificate>,
    pub envelopes: Vec<EnvelopeScalars>,
    pub rate_fit: Option<RateFit>,
    pub verdicts: Vec<Verdict>,
    /// Named scalar results.
    pub summary: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    /// Wall-clock seconds per stage.
    pub timings: BTreeMap<String, f64>,
    /// Written to `series.csv`, not to the JSON report.
    #[serde(skip)]
    pub series: Vec<SeriesRow>,
    #[serde(skip)]
    pub states: Vec<StateDump>,
}

impl RunReport {
    pub fn new(command: &str, config: &ExperimentConfig) -> Self {
        RunReport {
            schema_version: super::config::SCHEMA_VERSION,
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: config.seed,
            config: config.clone(),
            gn: None,
            lattice_certificate: None,
            envelopes: Vec::new(),
            rate_fit: None,
            verdicts: Vec::new(),
            summary: BTreeMap::new(),
            notes: Vec::new(),
            timings: BTreeMap::new(),
            series: Vec::new(),
            states: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    pub fn verdict(&self, name: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.name == name)
    }

    pub fn push(&mut self, v: Verdict) {
        self.verdicts.push(v);
    }

    pub fn set(&mut self, key: &str, value: f64) {
        self.summary.insert(key.to_string(), value);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_recovers_power_law() {
        let samples: Vec<(f64, f64)> = (1..=2000).map(|k| {
            let t = k as f64 * 0.1;
            (t, 3.0 * t.powf(-0.5))
        }).collect();
        let fit = fit_rate(&samples, 20.0, 200.0).unwrap();
        assert!((fit.slope + 0.5).abs() < 1e-12);
        assert!((fit.intercept - 3f64.ln()).abs() < 1e-10);
        assert!(fit.residual < 1e-12);
        assert!(fit.points > 30);
    }

    #[test]
    fn fit_needs_two_points() {
        assert!(fit_rate(&[(1.0, 1.0)], 0.0, 10.0).is_none());
        assert!(fit_rate(&[(1.0, 0.0), (2.0, 0.0)], 0.0, 10.0).is_none());
    }
}
