//! Resolution of an experiment configuration from a preset, a flat
//! `key = value` file and command-line overrides, in that order.

use std::path::Path;

use inzsmf_core::{ExperimentConfig, FilterKind, GainKind, InnovationMode, Side};

use crate::error::CliError;

pub fn parse_filter(s: &str) -> Result<FilterKind, String> {
    match s.trim() {
        "zsmf" => Ok(FilterKind::Zsmf),
        "inzsmf" => Ok(FilterKind::Inzsmf),
        other => Err(format!("expected one of zsmf, inzsmf, got '{other}'")),
    }
}

pub fn parse_gain(s: &str) -> Result<GainKind, String> {
    match s.trim() {
        "poles" => Ok(GainKind::Poles),
        "fradius" => Ok(GainKind::Fradius),
        other => Err(format!("expected one of poles, fradius, got '{other}'")),
    }
}

pub fn parse_side(s: &str) -> Result<Side, String> {
    match s.trim() {
        "left" => Ok(Side::Left),
        "right" => Ok(Side::Right),
        other => Err(format!("expected one of left, right, got '{other}'")),
    }
}

pub fn parse_innovation(s: &str) -> Result<InnovationMode, String> {
    match s.trim() {
        "standard" => Ok(InnovationMode::Standard),
        "alternative" => Ok(InnovationMode::Alternative),
        other => Err(format!("expected one of standard, alternative, got '{other}'")),
    }
}

pub fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("'{}': {e}", t.trim())))
        .collect()
}

fn fixed<const N: usize>(s: &str) -> Result<[f64; N], String> {
    let v = parse_list(s)?;
    v.try_into()
        .map_err(|v: Vec<f64>| format!("expected {N} comma-separated numbers, got {}", v.len()))
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(format!("expected true or false, got '{other}'")),
    }
}

fn number<T: std::str::FromStr>(s: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    s.trim().parse::<T>().map_err(|e| format!("'{}': {e}", s.trim()))
}

/// Keys accepted in a config file, with `-` and `_` interchangeable.
pub const KEYS: [&str; 21] = [
    "preset",
    "name",
    "filter",
    "gain",
    "side",
    "innovation",
    "steps",
    "reps",
    "seed",
    "poles",
    "h0",
    "h_w",
    "h_v",
    "reduction_order",
    "delta",
    "radius",
    "speed",
    "true_init",
    "est_init",
    "burn_in",
    "track_containment",
];

/// Sets one field from its textual value.
pub fn apply(config: &mut ExperimentConfig, key: &str, value: &str) -> Result<(), CliError> {
    let key = key.trim().replace('-', "_");
    let field = KEYS
        .iter()
        .find(|k| **k == key)
        .copied()
        .ok_or_else(|| CliError::Config {
            field: key.clone(),
            reason: format!("unknown key, expected one of {}", KEYS.join(", ")),
        })?;
    let bad = |reason: String| CliError::Config {
        field: field.to_string(),
        reason,
    };
    match field {
        "preset" => {
            let name = config.name.clone();
            *config = ExperimentConfig::preset(value.trim())?;
            if name != "custom" {
                config.name = name;
            }
        }
        "name" => config.name = value.trim().to_string(),
        "filter" => config.filter = parse_filter(value).map_err(bad)?,
        "gain" => config.gain = parse_gain(value).map_err(bad)?,
        "side" => config.side = parse_side(value).map_err(bad)?,
        "innovation" => config.innovation = parse_innovation(value).map_err(bad)?,
        "steps" => config.steps = number(value).map_err(bad)?,
        "reps" => config.reps = number(value).map_err(bad)?,
        "seed" => config.seed = number(value).map_err(bad)?,
        "poles" => config.poles = parse_list(value).map_err(bad)?,
        "h0" => config.h0 = fixed(value).map_err(bad)?,
        "h_w" => config.h_w = fixed(value).map_err(bad)?,
        "h_v" => config.h_v = fixed(value).map_err(bad)?,
        "reduction_order" => config.reduction_order = number(value).map_err(bad)?,
        "delta" => config.delta = number(value).map_err(bad)?,
        "radius" => config.radius = number(value).map_err(bad)?,
        "speed" => config.speed = number(value).map_err(bad)?,
        "true_init" => config.true_init = fixed(value).map_err(bad)?,
        "est_init" => config.est_init = fixed(value).map_err(bad)?,
        "burn_in" => config.burn_in = number(value).map_err(bad)?,
        "track_containment" => config.track_containment = parse_bool(value).map_err(bad)?,
        _ => unreachable!("key list and match arms agree"),
    }
    Ok(())
}

/// `key = value` lines; `#` starts a comment, blank lines are skipped.
pub fn parse_file(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut pairs = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| CliError::Config {
            field: format!("line {}", n + 1),
            reason: format!("expected key = value, got '{line}'"),
        })?;
        pairs.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(pairs)
}

pub fn read_file(path: &Path) -> Result<Vec<(String, String)>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_file(&text)
}

/// Applies a file's pairs with any `preset` key first, so the remaining
/// keys refine the preset regardless of their order in the file.
pub fn apply_pairs(config: &mut ExperimentConfig, pairs: &[(String, String)]) -> Result<(), CliError> {
    let is_preset = |k: &str| k.trim().replace('-', "_") == "preset";
    for (k, v) in pairs.iter().filter(|(k, _)| is_preset(k)) {
        apply(config, k, v)?;
    }
    for (k, v) in pairs.iter().filter(|(k, _)| !is_preset(k)) {
        apply(config, k, v)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_keys_refine_the_preset() {
        let pairs = parse_file("steps = 50\n# comment\npreset = table2\n\nreduction-order = 12\n").unwrap();
        let mut c = ExperimentConfig::default();
        apply_pairs(&mut c, &pairs).unwrap();
        assert_eq!(c.name, "table2");
        assert_eq!(c.est_init, [0.0, 5.0, -5.0]);
        assert_eq!(c.steps, 50);
        assert_eq!(c.reduction_order, 12);
    }

    #[test]
    fn errors_name_the_field() {
        let mut c = ExperimentConfig::default();
        let err = apply(&mut c, "h0", "1,2").unwrap_err().to_string();
        assert!(err.contains("`h0`"), "{err}");
        let err = apply(&mut c, "stepz", "3").unwrap_err().to_string();
        assert!(err.contains("`stepz`"), "{err}");
        let err = parse_file("steps 3").unwrap_err().to_string();
        assert!(err.contains("line 1"), "{err}");
    }

    #[test]
    fn enum_values_parse() {
        assert_eq!(parse_filter("zsmf"), Ok(FilterKind::Zsmf));
        assert_eq!(parse_gain("poles"), Ok(GainKind::Poles));
        assert_eq!(parse_side("right"), Ok(Side::Right));
        assert_eq!(parse_innovation("standard"), Ok(InnovationMode::Standard));
        assert!(parse_filter("ekf").is_err());
        assert_eq!(fixed::<3>("1, 2,3"), Ok([1.0, 2.0, 3.0]));
    }
}
