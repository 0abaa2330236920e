//! The persisted per-point record (one JSON object per line).

use cntsim_core::basis::Statistics;
use cntsim_core::observables::ObservableRecord;
use serde::{Deserialize, Serialize};

/// Flat, field-for-field image of one output line. Numeric fields are `null`
/// when the cell failed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub lambda: f64,
    pub t_over_u: f64,
    pub v_over_u: f64,
    pub n_ph: usize,
    pub mode: String,
    pub energy: Option<f64>,
    pub residual: Option<f64>,
    pub iterations: Option<usize>,
    pub near_degenerate: Option<bool>,
    pub d_occ_a: Option<f64>,
    pub d_occ_b: Option<f64>,
    pub phonon_n_a: Option<f64>,
    pub phonon_n_b: Option<f64>,
    pub charge_corr_avg_a: Option<f64>,
    pub charge_corr_avg_b: Option<f64>,
    pub charge_corr_matrix_a: Option<[[f64; 4]; 4]>,
    pub charge_corr_matrix_b: Option<[[f64; 4]; 4]>,
    pub var_a_a: Option<f64>,
    pub var_a_b: Option<f64>,
    pub mutual_info_phonon: Option<f64>,
    pub ent_entropy_ab: Option<f64>,
    pub negativity_phonon: Option<f64>,
    pub bell_fidelity: Option<f64>,
    pub phase: Option<String>,
    /// Wall time of the solve; `null` unless timing was requested, so that
    /// output files stay byte-reproducible.
    pub wall_ms: Option<f64>,
    pub status: String,
}

pub const STATUS_OK: &str = "ok";

/// Scalar columns in file order, used by the CSV export.
pub const SCALAR_FIELDS: [&str; 24] = [
    "lambda",
    "t_over_u",
    "v_over_u",
    "n_ph",
    "mode",
    "energy",
    "residual",
    "iterations",
    "near_degenerate",
    "d_occ_a",
    "d_occ_b",
    "phonon_n_a",
    "phonon_n_b",
    "charge_corr_avg_a",
    "charge_corr_avg_b",
    "var_a_a",
    "var_a_b",
    "mutual_info_phonon",
    "ent_entropy_ab",
    "negativity_phonon",
    "bell_fidelity",
    "phase",
    "wall_ms",
    "status",
];

impl Record {
    pub fn from_observables(r: &ObservableRecord, wall_ms: Option<f64>) -> Self {
        Self {
            lambda: r.lambda,
            t_over_u: r.t_over_u,
            v_over_u: r.v_over_u,
            n_ph: r.n_ph,
            mode: r.statistics.as_str().to_string(),
            energy: Some(r.energy),
            residual: Some(r.residual),
            iterations: Some(r.iterations),
            near_degenerate: Some(r.near_degenerate),
            d_occ_a: Some(r.double_occupancy[0]),
            d_occ_b: Some(r.double_occupancy[1]),
            phonon_n_a: Some(r.phonon_number[0]),
            phonon_n_b: Some(r.phonon_number[1]),
            charge_corr_avg_a: Some(r.charge_corr_avg[0]),
            charge_corr_avg_b: Some(r.charge_corr_avg[1]),
            charge_corr_matrix_a: Some(r.charge_corr_matrix[0]),
            charge_corr_matrix_b: Some(r.charge_corr_matrix[1]),
            var_a_a: Some(r.phonon_variance[0]),
            var_a_b: Some(r.phonon_variance[1]),
            mutual_info_phonon: Some(r.mutual_info_phonon),
            ent_entropy_ab: Some(r.ent_entropy_ab),
            negativity_phonon: Some(r.negativity_phonon),
            bell_fidelity: Some(r.bell_fidelity),
            phase: Some(r.phase.as_str().to_string()),
            wall_ms,
            status: STATUS_OK.to_string(),
        }
    }

    pub fn failed(lambda: f64, t_over_u: f64, v_over_u: f64, n_ph: usize, mode: Statistics, reason: &str) -> Self {
        Self {
            lambda,
            t_over_u,
            v_over_u,
            n_ph,
            mode: mode.as_str().to_string(),
            energy: None,
            residual: None,
            iterations: None,
            near_degenerate: None,
            d_occ_a: None,
            d_occ_b: None,
            phonon_n_a: None,
            phonon_n_b: None,
            charge_corr_avg_a: None,
            charge_corr_avg_b: None,
            charge_corr_matrix_a: None,
            charge_corr_matrix_b: None,
            var_a_a: None,
            var_a_b: None,
            mutual_info_phonon: None,
            ent_entropy_ab: None,
            negativity_phonon: None,
            bell_fidelity: None,
            phase: None,
            wall_ms: None,
            status: format!("failed: {reason}"),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == STATUS_OK
    }

    /// Tube-averaged double occupancy.
    pub fn mean_d(&self) -> Option<f64> {
        Some(0.5 * (self.d_occ_a? + self.d_occ_b?))
    }

    /// One line of JSON, newline included.
    pub fn to_json_line(&self) -> String {
        let mut s = serde_json::to_string(self).expect("record serializes");
        s.push('\n');
        s
    }

    /// Scalar fields as strings in [`SCALAR_FIELDS`] order; `null` becomes empty.
    pub fn scalar_row(&self) -> Vec<String> {
        fn f(x: Option<f64>) -> String {
            x.map(|v| format!("{v:?}")).unwrap_or_default()
        }
        vec![
            format!("{:?}", self.lambda),
            format!("{:?}", self.t_over_u),
            format!("{:?}", self.v_over_u),
            self.n_ph.to_string(),
            self.mode.clone(),
            f(self.energy),
            f(self.residual),
            self.iterations.map(|v| v.to_string()).unwrap_or_default(),
            self.near_degenerate.map(|v| v.to_string()).unwrap_or_default(),
            f(self.d_occ_a),
            f(self.d_occ_b),
            f(self.phonon_n_a),
            f(self.phonon_n_b),
            f(self.charge_corr_avg_a),
            f(self.charge_corr_avg_b),
            f(self.var_a_a),
            f(self.var_a_b),
            f(self.mutual_info_phonon),
            f(self.ent_entropy_ab),
            f(self.negativity_phonon),
            f(self.bell_fidelity),
            self.phase.clone().unwrap_or_default(),
            f(self.wall_ms),
            self.status.clone(),
        ]
    }
}

/// Parses a JSON Lines stream, skipping blank lines.
pub fn parse_jsonl(text: &str) -> Result<Vec<Record>, serde_json::Error> {
    text.lines().filter(|l| !l.trim().is_empty()).map(serde_json::from_str).collect()
}
