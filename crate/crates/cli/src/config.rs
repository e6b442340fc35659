//! Settings resolution: built-in defaults, then a flat `key = value`
//! config file, then command-line flags, in increasing precedence.
//!
//! All physical quantities use the units of the formulas: dB for loss,
//! photons/pulse for intensity, plain probabilities elsewhere. Numbers are
//! always serialized with 17 significant digits so a emitted value reparses
//! to the identical f64.

use std::collections::HashMap;
use std::path::Path;

use pcscs_core::{ChannelParams, Mode};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("invalid value for `{key}`: `{value}` ({reason})")]
    BadValue {
        key: String,
        value: String,
        reason: String,
    },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] pcscs_core::Error),
    #[error("cannot access `{path}`: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// 17 significant digits: enough to round-trip any f64 exactly.
pub fn fmt17(x: f64) -> String {
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    format!("{x:.16e}")
}

const KNOWN_KEYS: &[&str] = &[
    "loss_db",
    "distance_km",
    "n",
    "eps_total",
    "mu",
    "p_est",
    "mode",
    "seed",
    "out",
    "losses",
    "dark_rate",
    "det_eff",
    "e_mis",
    "f_ec",
    "attenuation_db_per_km",
    "z_max",
];

/// Parses the flat config format: one `key = value` per line, `#` starts a
/// comment. Unknown keys are errors, not warnings.
pub fn parse_config(text: &str) -> Result<HashMap<String, String>, CliError> {
    let mut map = HashMap::new();
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Usage(format!(
                "config line is not `key = value`: `{line}`"
            )));
        };
        let key = key.trim().to_string();
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(CliError::UnknownKey(key));
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

pub fn load_config(path: &Path) -> Result<HashMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config(&text)
}

fn bad(key: &str, value: &str, reason: impl Into<String>) -> CliError {
    CliError::BadValue {
        key: key.into(),
        value: value.into(),
        reason: reason.into(),
    }
}

fn parse_f64(key: &str, value: &str) -> Result<f64, CliError> {
    value
        .parse::<f64>()
        .map_err(|e| bad(key, value, e.to_string()))
}

fn parse_u64(key: &str, value: &str) -> Result<u64, CliError> {
    if let Ok(v) = value.parse::<u64>() {
        return Ok(v);
    }
    // Accept scientific notation for window counts (1e8 etc.).
    let v = parse_f64(key, value)?;
    if v < 0.0 || v.fract() != 0.0 || v > u64::MAX as f64 {
        return Err(bad(key, value, "expected a nonnegative integer"));
    }
    Ok(v as u64)
}

/// Window counts: a plain number, or `inf` for the asymptotic limit.
fn parse_n(key: &str, value: &str) -> Result<f64, CliError> {
    if value.eq_ignore_ascii_case("inf") {
        return Ok(f64::INFINITY);
    }
    let v = parse_f64(key, value)?;
    if v.is_nan() || v < 1.0 {
        return Err(bad(key, value, "window count must be >= 1 or `inf`"));
    }
    Ok(v)
}

fn parse_mode(key: &str, value: &str) -> Result<Mode, CliError> {
    match value {
        "finite" => Ok(Mode::Finite),
        "asymptotic" => Ok(Mode::Asymptotic),
        _ => Err(bad(key, value, "expected `finite` or `asymptotic`")),
    }
}

/// A loss grid: empty string for an empty grid, `start:end:step`, or a
/// comma-separated list of dB values.
pub fn parse_losses(key: &str, value: &str) -> Result<Vec<f64>, CliError> {
    let value = value.trim();
    if value.is_empty() {
        return Ok(Vec::new());
    }
    if let Some((start, rest)) = value.split_once(':') {
        let Some((end, step)) = rest.split_once(':') else {
            return Err(bad(key, value, "range form is start:end:step"));
        };
        let (start, end, step) = (
            parse_f64(key, start)?,
            parse_f64(key, end)?,
            parse_f64(key, step)?,
        );
        if !(step > 0.0 && end >= start) {
            return Err(bad(key, value, "need end >= start and step > 0"));
        }
        let mut grid = Vec::new();
        let mut i = 0u64;
        loop {
            let loss = start + step * i as f64;
            if loss > end + 1e-9 * step {
                break;
            }
            grid.push(loss);
            i += 1;
        }
        return Ok(grid);
    }
    value.split(',').map(|s| parse_f64(key, s.trim())).collect()
}

fn parse_n_list(key: &str, value: &str) -> Result<Vec<f64>, CliError> {
    value.split(',').map(|s| parse_n(key, s.trim())).collect()
}

/// Flag values as they arrive from clap, all optional.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub loss_db: Option<f64>,
    pub distance_km: Option<f64>,
    pub n: Option<String>,
    pub eps_total: Option<f64>,
    pub mu: Option<f64>,
    pub p_est: Option<f64>,
    pub mode: Option<String>,
    pub seed: Option<u64>,
    pub out: Option<String>,
    pub losses: Option<String>,
    pub z_max: Option<f64>,
}

/// Fully resolved run settings.
#[derive(Debug, Clone)]
pub struct Settings {
    pub loss_db: f64,
    pub dark_rate: f64,
    pub det_eff: f64,
    pub e_mis: f64,
    pub attenuation_db_per_km: f64,
    pub f_ec: f64,
    pub eps_total: f64,
    /// Scalar window count (first entry of `n_list`).
    pub n: f64,
    /// Window counts for sweeps; `inf` entries select asymptotic mode.
    pub n_list: Vec<f64>,
    pub mu: Option<f64>,
    pub p_est: Option<f64>,
    pub mode: Mode,
    pub mode_explicit: bool,
    pub seed: u64,
    pub out: Option<String>,
    pub losses: Vec<f64>,
    pub z_max: f64,
}

impl Settings {
    /// Applies precedence flag > file > default and validates everything.
    pub fn resolve(file: &HashMap<String, String>, flags: &Overrides) -> Result<Self, CliError> {
        // Either source may specify the link by loss or by distance.
        let att = match file.get("attenuation_db_per_km") {
            Some(v) => parse_f64("attenuation_db_per_km", v)?,
            None => ChannelParams::DEFAULT_ATTENUATION_DB_PER_KM,
        };
        let loss_db = if let Some(l) = flags.loss_db {
            l
        } else if let Some(d) = flags.distance_km {
            d * att
        } else if let Some(v) = file.get("loss_db") {
            parse_f64("loss_db", v)?
        } else if let Some(v) = file.get("distance_km") {
            parse_f64("distance_km", v)? * att
        } else {
            60.0
        };

        let lookup_f64 = |key: &str, flag: Option<f64>, default: f64| -> Result<f64, CliError> {
            match (flag, file.get(key)) {
                (Some(v), _) => Ok(v),
                (None, Some(v)) => parse_f64(key, v),
                (None, None) => Ok(default),
            }
        };

        let n_spec = flags
            .n
            .clone()
            .or_else(|| file.get("n").cloned())
            .unwrap_or_else(|| "1e13".to_string());
        let n_list = parse_n_list("n", &n_spec)?;

        let mode_spec = flags.mode.clone().or_else(|| file.get("mode").cloned());
        let mode_explicit = mode_spec.is_some();
        let mut mode = match &mode_spec {
            Some(v) => parse_mode("mode", v)?,
            None => Mode::Finite,
        };
        // An infinite window count is the asymptotic limit.
        if n_list.first().copied() == Some(f64::INFINITY) && !mode_explicit {
            mode = Mode::Asymptotic;
        }

        let seed = match (flags.seed, file.get("seed")) {
            (Some(v), _) => v,
            (None, Some(v)) => parse_u64("seed", v)?,
            (None, None) => 42,
        };

        let out = flags.out.clone().or_else(|| file.get("out").cloned());

        let losses = match (&flags.losses, file.get("losses")) {
            (Some(v), _) => parse_losses("losses", v)?,
            (None, Some(v)) => parse_losses("losses", v)?,
            (None, None) => parse_losses("losses", "0:80:2")?,
        };

        let settings = Settings {
            loss_db,
            dark_rate: lookup_f64("dark_rate", None, ChannelParams::REFERENCE_DARK_RATE)?,
            det_eff: lookup_f64("det_eff", None, ChannelParams::REFERENCE_DET_EFF)?,
            e_mis: lookup_f64("e_mis", None, ChannelParams::REFERENCE_E_MIS)?,
            attenuation_db_per_km: att,
            f_ec: lookup_f64("f_ec", None, 1.1)?,
            eps_total: lookup_f64("eps_total", flags.eps_total, 1e-10)?,
            n: n_list.first().copied().unwrap_or(1e13),
            n_list,
            mu: match (flags.mu, file.get("mu")) {
                (Some(v), _) => Some(v),
                (None, Some(v)) => Some(parse_f64("mu", v)?),
                (None, None) => None,
            },
            p_est: match (flags.p_est, file.get("p_est")) {
                (Some(v), _) => Some(v),
                (None, Some(v)) => Some(parse_f64("p_est", v)?),
                (None, None) => None,
            },
            mode,
            mode_explicit,
            seed,
            out,
            losses,
            z_max: lookup_f64("z_max", flags.z_max, 5.0)?,
        };
        settings.channel()?; // validate the channel parameters eagerly
        Ok(settings)
    }

    pub fn channel(&self) -> Result<ChannelParams, CliError> {
        Ok(
            ChannelParams::new(self.loss_db, self.dark_rate, self.det_eff, self.e_mis)?
                .with_attenuation(self.attenuation_db_per_km)?,
        )
    }

    pub fn channel_at(&self, loss_db: f64) -> Result<ChannelParams, CliError> {
        Ok(self.channel()?.with_loss_db(loss_db)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let err = parse_config("frobnicate = 3\n").unwrap_err();
        assert!(matches!(err, CliError::UnknownKey(k) if k == "frobnicate"));
    }

    #[test]
    fn comments_and_blanks_are_skipped() {
        let map = parse_config("# a comment\n\nloss_db = 40 # trailing\n").unwrap();
        assert_eq!(map.get("loss_db").map(String::as_str), Some("40"));
    }

    #[test]
    fn flags_override_file() {
        let file = parse_config("loss_db = 40\neps_total = 1e-8\n").unwrap();
        let flags = Overrides {
            loss_db: Some(20.0),
            ..Default::default()
        };
        let s = Settings::resolve(&file, &flags).unwrap();
        assert_eq!(s.loss_db, 20.0);
        assert_eq!(s.eps_total, 1e-8);
    }

    #[test]
    fn defaults_match_reference_parameters() {
        let s = Settings::resolve(&HashMap::new(), &Overrides::default()).unwrap();
        assert_eq!(s.det_eff, 0.3);
        assert_eq!(s.dark_rate, 5e-11);
        assert_eq!(s.f_ec, 1.1);
        assert_eq!(s.e_mis, 0.015);
        assert_eq!(s.eps_total, 1e-10);
        assert_eq!(s.n, 1e13);
    }

    #[test]
    fn distance_and_loss_are_interchangeable() {
        let flags = Overrides {
            distance_km: Some(300.0),
            ..Default::default()
        };
        let s = Settings::resolve(&HashMap::new(), &flags).unwrap();
        assert_eq!(s.loss_db, 60.0);
    }

    #[test]
    fn infinite_n_selects_asymptotic_mode() {
        let flags = Overrides {
            n: Some("inf".into()),
            ..Default::default()
        };
        let s = Settings::resolve(&HashMap::new(), &flags).unwrap();
        assert_eq!(s.mode, Mode::Asymptotic);
        assert!(s.n.is_infinite());
    }

    #[test]
    fn loss_grids_parse_in_all_forms() {
        assert_eq!(parse_losses("losses", "").unwrap(), Vec::<f64>::new());
        assert_eq!(
            parse_losses("losses", "0:8:2").unwrap(),
            vec![0.0, 2.0, 4.0, 6.0, 8.0]
        );
        assert_eq!(parse_losses("losses", "10, 30").unwrap(), vec![10.0, 30.0]);
        assert!(parse_losses("losses", "5:1:1").is_err());
        assert!(parse_losses("losses", "a,b").is_err());
    }

    #[test]
    fn malformed_numbers_name_the_key() {
        let file = parse_config("eps_total = banana\n").unwrap();
        let err = Settings::resolve(&file, &Overrides::default()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("eps_total") && msg.contains("banana"), "{msg}");
    }

    #[test]
    fn seventeen_digit_round_trip() {
        for &x in &[1.4767117895969873e-10, 60.0, 0.3, 5e-11, f64::MIN_POSITIVE] {
            let s = fmt17(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(fmt17(f64::INFINITY), "inf");
        assert_eq!("inf".parse::<f64>().unwrap(), f64::INFINITY);
    }
}
