//! JSON fit reports.

use lmg_gmc::criticality_scan::{FssResult, TrendOutcome};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendReport {
    /// `true` when the fit could be made.
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub limit: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exponent: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rms_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl From<&TrendOutcome> for TrendReport {
    fn from(t: &TrendOutcome) -> Self {
        match t {
            TrendOutcome::Fit(f) => Self {
                ok: true,
                limit: Some(f.limit),
                amplitude: Some(f.amplitude),
                exponent: f.exponent,
                rms_residual: Some(f.rms_residual),
                reason: None,
            },
            TrendOutcome::Degenerate(why) => Self {
                ok: false,
                limit: None,
                amplitude: None,
                exponent: None,
                rms_residual: None,
                reason: Some(why.clone()),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FssReport {
    pub k_spec: String,
    pub sizes: Vec<usize>,
    pub h_min: Vec<f64>,
    pub s_at_min: Vec<f64>,
    pub alpha: f64,
    pub prefactor: f64,
    pub alpha_stderr: f64,
    pub hmin_fit_powerlaw: TrendReport,
    pub hmin_fit_inverselog: TrendReport,
}

impl From<&FssResult> for FssReport {
    fn from(r: &FssResult) -> Self {
        Self {
            k_spec: r.fit.k_spec.to_string(),
            sizes: r.fit.sizes.clone(),
            h_min: r.fit.h_min_values.clone(),
            s_at_min: r.fit.correlation_at_min.clone(),
            alpha: r.fit.alpha,
            prefactor: r.fit.prefactor,
            alpha_stderr: r.fit.alpha_stderr,
            hmin_fit_powerlaw: (&r.trend.power_law).into(),
            hmin_fit_inverselog: (&r.trend.inverse_log).into(),
        }
    }
}
