//! Sweep specification, its canonical text form and content hash.

use std::collections::BTreeMap;

use cntsim_core::basis::Statistics;
use cntsim_core::eigen::{LanczosSettings, ShiftSettings};
use cntsim_core::hamiltonian::DEFAULT_OMEGA0_OVER_U;
use cntsim_core::point::{PointSettings, PointSpec};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scale {
    Linear,
    Log,
}

impl Scale {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scale::Linear => "linear",
            Scale::Log => "log",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "linear" | "lin" => Ok(Scale::Linear),
            "log" | "logarithmic" => Ok(Scale::Log),
            _ => Err(Error::Spec(format!("unknown axis scale {s:?} (expected linear or log)"))),
        }
    }
}

/// Inclusive range sampled at `points` values.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub points: usize,
    pub scale: Scale,
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.min];
        }
        let n = (self.points - 1) as f64;
        (0..self.points)
            .map(|i| {
                let f = i as f64 / n;
                match self.scale {
                    Scale::Linear => self.min + f * (self.max - self.min),
                    Scale::Log => 10f64.powf(self.min.log10() + f * (self.max.log10() - self.min.log10())),
                }
            })
            .collect()
    }
}

pub fn parse_statistics(s: &str) -> Result<Statistics> {
    match s {
        "charge" => Ok(Statistics::Charge),
        "spinful" => Ok(Statistics::Spinful),
        _ => Err(Error::Spec(format!("unknown mode {s:?} (expected charge or spinful)"))),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub lambda: Axis,
    pub t_over_u: Axis,
    pub v_over_u: Vec<f64>,
    pub omega0_over_u: f64,
    /// Phonon states per tube.
    pub n_ph: usize,
    pub statistics: Statistics,
    pub shift: bool,
    pub seed: u64,
    pub tol: f64,
    pub max_matvecs: usize,
    pub shift_tol: f64,
    /// Seed each cell's solve with the previous cell of its row.
    pub warm_start: bool,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            lambda: Axis { min: 0.0, max: 0.8, points: 41, scale: Scale::Linear },
            t_over_u: Axis { min: 1e-4, max: 1e-1, points: 25, scale: Scale::Log },
            v_over_u: vec![0.01, 0.02, 0.04],
            omega0_over_u: DEFAULT_OMEGA0_OVER_U,
            n_ph: 50,
            statistics: Statistics::Charge,
            shift: false,
            seed: 1,
            tol: 1e-10,
            max_matvecs: LanczosSettings::default().max_matvecs,
            shift_tol: ShiftSettings::default().tol,
            warm_start: false,
        }
    }
}

/// One grid point; `index` is its position in output order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cell {
    pub index: usize,
    /// Row (fixed V/U and t/U) the cell belongs to.
    pub row: usize,
    pub lambda: f64,
    pub t_over_u: f64,
    pub v_over_u: f64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, a) in [("lambda", &self.lambda), ("t_over_u", &self.t_over_u)] {
            if a.points == 0 {
                return Err(Error::Spec(format!("{name} axis has no points")));
            }
            if !a.min.is_finite() || !a.max.is_finite() || a.max < a.min {
                return Err(Error::Spec(format!(
                    "{name} range [{}, {}] is not a finite increasing interval",
                    a.min, a.max
                )));
            }
            if a.points > 1 && a.max == a.min {
                return Err(Error::Spec(format!("{name} step is zero")));
            }
        }
        if self.lambda.min < 0.0 {
            return Err(Error::Spec("lambda must be >= 0".into()));
        }
        if !(self.t_over_u.min > 0.0) {
            return Err(Error::Spec("t/U must be > 0 everywhere (t = 0 is handled by the atomic subcommand)".into()));
        }
        if self.v_over_u.is_empty() || self.v_over_u.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::Spec("V/U list must be non-empty with finite values >= 0".into()));
        }
        if !(self.omega0_over_u > 0.0) {
            return Err(Error::Spec("omega0/U must be positive".into()));
        }
        if self.n_ph < 2 {
            return Err(Error::Spec("n_ph must be >= 2 phonon states".into()));
        }
        if !(self.tol > 0.0) || !(self.shift_tol > 0.0) || self.max_matvecs == 0 {
            return Err(Error::Spec("solver tolerances and budgets must be positive".into()));
        }
        Ok(())
    }

    /// Cells in output order: V/U outermost, then t/U, then lambda.
    pub fn cells(&self) -> Vec<Cell> {
        let lambdas = self.lambda.values();
        let ts = self.t_over_u.values();
        let mut out = Vec::with_capacity(lambdas.len() * ts.len() * self.v_over_u.len());
        let mut row = 0;
        for &v in &self.v_over_u {
            for &t in &ts {
                for &l in &lambdas {
                    out.push(Cell { index: out.len(), row, lambda: l, t_over_u: t, v_over_u: v });
                }
                row += 1;
            }
        }
        out
    }

    pub fn point_spec(&self, cell: &Cell) -> PointSpec {
        PointSpec {
            lambda: cell.lambda,
            t_over_u: cell.t_over_u,
            v_over_u: cell.v_over_u,
            omega0_over_u: self.omega0_over_u,
            n_ph: self.n_ph,
            statistics: self.statistics,
            shift: self.shift,
            seed: self.seed,
        }
    }

    pub fn point_settings(&self) -> PointSettings {
        let mut s = PointSettings::default();
        s.lanczos.tol = self.tol;
        s.lanczos.max_matvecs = self.max_matvecs;
        s.shift.tol = self.shift_tol;
        s
    }

    /// Every field that influences the output, as ordered `key -> value` text.
    pub fn canonical_fields(&self) -> BTreeMap<&'static str, String> {
        let v = |x: f64| format!("{x:?}");
        let mut m = BTreeMap::new();
        m.insert("lambda_min", v(self.lambda.min));
        m.insert("lambda_max", v(self.lambda.max));
        m.insert("lambda_points", self.lambda.points.to_string());
        m.insert("lambda_scale", self.lambda.scale.as_str().to_string());
        m.insert("t_min", v(self.t_over_u.min));
        m.insert("t_max", v(self.t_over_u.max));
        m.insert("t_points", self.t_over_u.points.to_string());
        m.insert("t_scale", self.t_over_u.scale.as_str().to_string());
        m.insert("v_list", self.v_over_u.iter().map(|x| v(*x)).collect::<Vec<_>>().join(","));
        m.insert("omega0_over_u", v(self.omega0_over_u));
        m.insert("n_ph", self.n_ph.to_string());
        m.insert("mode", self.statistics.as_str().to_string());
        m.insert("shift", self.shift.to_string());
        m.insert("seed", self.seed.to_string());
        m.insert("tol", v(self.tol));
        m.insert("max_matvecs", self.max_matvecs.to_string());
        m.insert("shift_tol", v(self.shift_tol));
        m.insert("warm_start", self.warm_start.to_string());
        m.insert("format", "1".to_string());
        m
    }

    pub fn canonical(&self) -> String {
        self.canonical_fields().iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    /// Hex SHA-256 of [`SweepSpec::canonical`].
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_shape() {
        let s = SweepSpec::default();
        s.validate().unwrap();
        let l = s.lambda.values();
        assert_eq!(l.len(), 41);
        assert_eq!(l[0], 0.0);
        assert!((l[40] - 0.8).abs() < 1e-15);
        let t = s.t_over_u.values();
        assert_eq!(t.len(), 25);
        assert!((t[0] - 1e-4).abs() < 1e-18 && (t[24] - 0.1).abs() < 1e-15);
        assert_eq!(s.cells().len(), 41 * 25 * 3);
    }

    #[test]
    fn cell_order_is_v_then_t_then_lambda() {
        let mut s = SweepSpec::default();
        s.lambda.points = 3;
        s.t_over_u.points = 2;
        s.v_over_u = vec![0.01, 0.02];
        let c = s.cells();
        assert_eq!(c[1].lambda, s.lambda.values()[1]);
        assert_eq!(c[1].row, 0);
        assert_eq!(c[3].row, 1);
        assert_eq!(c[6].v_over_u, 0.02);
        assert!(c.iter().enumerate().all(|(i, x)| x.index == i));
    }

    #[test]
    fn hash_tracks_every_field() {
        let a = SweepSpec::default();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.warm_start = true;
        assert_ne!(a.hash(), b.hash());
        let mut c = a.clone();
        c.lambda.max = 0.81;
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn invalid_specs() {
        let mut s = SweepSpec::default();
        s.t_over_u.min = 0.0;
        assert!(s.validate().is_err());
        let mut s = SweepSpec::default();
        s.lambda.points = 0;
        assert!(s.validate().is_err());
        let mut s = SweepSpec::default();
        s.v_over_u.clear();
        assert!(s.validate().is_err());
        let mut s = SweepSpec::default();
        s.lambda.max = s.lambda.min;
        assert!(s.validate().is_err());
    }
}
