//! `key = value` configuration files.
//!
//! Command-line flags are routed through the same setters after the file, so
//! precedence is flags over file over defaults by construction.

use std::path::Path;

use cntsim_core::point::PointSpec;

use crate::error::{Error, Result};
use crate::spec::{parse_statistics, Scale, SweepSpec};

/// Keys accepted by `sweep` (spec fields plus run options).
pub const SWEEP_KEYS: &[&str] = &[
    "lambda_min",
    "lambda_max",
    "lambda_points",
    "lambda_scale",
    "t_min",
    "t_max",
    "t_points",
    "t_scale",
    "v_list",
    "omega0_over_u",
    "n_ph",
    "mode",
    "shift",
    "seed",
    "tol",
    "max_matvecs",
    "shift_tol",
    "warm_start",
    "out",
    "workers",
    "timing",
];

/// Keys accepted by `point`.
pub const POINT_KEYS: &[&str] =
    &["lambda", "t_over_u", "v_over_u", "omega0_over_u", "n_ph", "mode", "shift", "seed", "out", "timing"];

/// Parses a config file body; `#` starts a comment, dashes in keys read as underscores.
pub fn parse_key_values(text: &str, allowed: &[&str]) -> Result<Vec<(String, String)>> {
    let mut out: Vec<(String, String)> = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value, got {raw:?}", n + 1)))?;
        let key = k.trim().replace('-', "_");
        if !allowed.contains(&key.as_str()) {
            return Err(Error::Config(format!("line {}: unknown key {key:?}", n + 1)));
        }
        if out.iter().any(|(seen, _)| *seen == key) {
            return Err(Error::Config(format!("line {}: duplicate key {key:?}", n + 1)));
        }
        out.push((key, v.trim().to_string()));
    }
    Ok(out)
}

pub fn load(path: &Path, allowed: &[&str]) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_key_values(&text, allowed)
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Config(format!("{key}: cannot parse {value:?}")))
}

pub fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "on" | "true" | "yes" | "1" => Ok(true),
        "off" | "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected on or off, got {value:?}"))),
    }
}

/// Sets one spec field. Run options (`out`, `workers`, `timing`) are not spec
/// fields and return `Ok(false)` so the caller can handle them.
pub fn set_sweep_key(spec: &mut SweepSpec, key: &str, value: &str) -> Result<bool> {
    match key {
        "lambda_min" => spec.lambda.min = num(key, value)?,
        "lambda_max" => spec.lambda.max = num(key, value)?,
        "lambda_points" => spec.lambda.points = num(key, value)?,
        "lambda_scale" => spec.lambda.scale = Scale::parse(value)?,
        "t_min" => spec.t_over_u.min = num(key, value)?,
        "t_max" => spec.t_over_u.max = num(key, value)?,
        "t_points" => spec.t_over_u.points = num(key, value)?,
        "t_scale" => spec.t_over_u.scale = Scale::parse(value)?,
        "v_list" => {
            spec.v_over_u = value.split(',').map(|v| num(key, v.trim())).collect::<Result<_>>()?;
        }
        "omega0_over_u" => spec.omega0_over_u = num(key, value)?,
        "n_ph" => spec.n_ph = num(key, value)?,
        "mode" => spec.statistics = parse_statistics(value)?,
        "shift" => spec.shift = parse_bool(key, value)?,
        "seed" => spec.seed = num(key, value)?,
        "tol" => spec.tol = num(key, value)?,
        "max_matvecs" => spec.max_matvecs = num(key, value)?,
        "shift_tol" => spec.shift_tol = num(key, value)?,
        "warm_start" => spec.warm_start = parse_bool(key, value)?,
        "out" | "workers" | "timing" => return Ok(false),
        _ => return Err(Error::Config(format!("unknown key {key:?}"))),
    }
    Ok(true)
}

/// Point counterpart of [`set_sweep_key`].
pub fn set_point_key(spec: &mut PointSpec, key: &str, value: &str) -> Result<bool> {
    match key {
        "lambda" => spec.lambda = num(key, value)?,
        "t_over_u" => spec.t_over_u = num(key, value)?,
        "v_over_u" => spec.v_over_u = num(key, value)?,
        "omega0_over_u" => spec.omega0_over_u = num(key, value)?,
        "n_ph" => spec.n_ph = num(key, value)?,
        "mode" => spec.statistics = parse_statistics(value)?,
        "shift" => spec.shift = parse_bool(key, value)?,
        "seed" => spec.seed = num(key, value)?,
        "out" | "timing" => return Ok(false),
        _ => return Err(Error::Config(format!("unknown key {key:?}"))),
    }
    Ok(true)
}
