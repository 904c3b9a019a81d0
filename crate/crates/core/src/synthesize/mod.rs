//! Construction of local adversaries that exploit experimental loopholes.
//!
//! [`max_chsh_given_efficiency`] builds a null-emitting local model that fakes
//! a violation when detectors are inefficient. [`min_mutual_information`]
//! builds a setting-dependent model that reproduces quantum correlations while
//! sharing as little information as possible with the setting choice.

mod detection;
mod freedom;
pub mod lp;

use serde::{Deserialize, Serialize};

use crate::chsh::NullConvention;
use crate::engine::{run, ExperimentConfig, Physics, SettingSource};
use crate::error::Result;
use crate::lhv::HiddenVariableModel;
use crate::stats::estimate_s;

pub use detection::max_chsh_given_efficiency;
pub use freedom::{min_mutual_information, MiOptions};
pub use lp::{lp_solve, LinearProgram, LpSolution, LpStatus};

/// Largest allowed constraint residual for a report with status "optimal".
pub const RESIDUAL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdversaryKind {
    Detection,
    FreedomOfChoice,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdversaryReport {
    pub kind: AdversaryKind,
    /// "optimal", or "residual_exceeded" when a residual is above `tolerance`.
    pub status: String,
    pub model: HiddenVariableModel,
    #[serde(rename = "achieved_S")]
    pub achieved_s: f64,
    #[serde(rename = "achieved_I", skip_serializing_if = "Option::is_none", default)]
    pub achieved_i: Option<f64>,
    /// `S` with single detections counted as zero-product runs over double plus
    /// single counts.
    #[serde(rename = "renormalized_S", skip_serializing_if = "Option::is_none", default)]
    pub renormalized_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub efficiency: Option<f64>,
    /// Null convention under which `achieved_S` is evaluated.
    pub convention: NullConvention,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub targets: Option<[f64; 4]>,
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    pub tolerance: f64,
    pub iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub restarts: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    #[serde(rename = "S")]
    pub s: f64,
    pub se: f64,
    #[serde(rename = "achieved_S")]
    pub achieved_s: f64,
    /// `|S - achieved_S| / se`.
    pub deviation_se: f64,
    /// True when the deviation is below 4 standard errors.
    pub consistent: bool,
    pub trials: u64,
}

/// Run the engine on a synthesized model and compare its empirical `S` with
/// the report. Detection adversaries emit their own nulls, so the engine runs
/// with perfect detectors.
pub fn verify_adversary(report: &AdversaryReport, trials: u64, seed: u64) -> Result<Verification> {
    let config = ExperimentConfig::new(
        Physics::Lhv {
            model: report.model.clone(),
        },
        SettingSource::IidUniform,
        trials,
        seed,
    );
    let log = run(&config)?;
    let est = estimate_s(&log, report.convention)?;
    let deviation = (est.s - report.achieved_s).abs();
    let deviation_se = if est.std_error > 0.0 {
        deviation / est.std_error
    } else if deviation < 1e-12 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(Verification {
        s: est.s,
        se: est.std_error,
        achieved_s: report.achieved_s,
        deviation_se,
        consistent: deviation_se < 4.0,
        trials,
    })
}
