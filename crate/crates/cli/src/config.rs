//! Flat `key = value` scenario configuration with dotted keys.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use squeezesim::lindblad::DissipationParams;
use squeezesim::model::SystemParams;

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ScenarioId {
    Fig2a,
    Fig2b,
    Fig3,
    Fig4a,
    Fig4b,
    Fig5,
    Fig6,
    Fig7,
    Custom,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 9] = [
        ScenarioId::Fig2a,
        ScenarioId::Fig2b,
        ScenarioId::Fig3,
        ScenarioId::Fig4a,
        ScenarioId::Fig4b,
        ScenarioId::Fig5,
        ScenarioId::Fig6,
        ScenarioId::Fig7,
        ScenarioId::Custom,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ScenarioId::Fig2a => "fig2a",
            ScenarioId::Fig2b => "fig2b",
            ScenarioId::Fig3 => "fig3",
            ScenarioId::Fig4a => "fig4a",
            ScenarioId::Fig4b => "fig4b",
            ScenarioId::Fig5 => "fig5",
            ScenarioId::Fig6 => "fig6",
            ScenarioId::Fig7 => "fig7",
            ScenarioId::Custom => "custom",
        }
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioId {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        Self::ALL.into_iter().find(|id| id.as_str() == s).ok_or_else(|| {
            let valid: Vec<_> = Self::ALL.iter().map(|id| id.as_str()).collect();
            CliError::Usage(format!("unknown scenario id '{s}'; valid ids: {}", valid.join(", ")))
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn as_str(&self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SchemeKind {
    Frequency,
    Coupling,
}

/// System parameters as configured. The detuning δ is primary, so
/// `ω_M = δ + J` follows J whenever J changes.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamSpec {
    pub j: f64,
    pub delta0: f64,
    pub delta: f64,
    pub omega_c: f64,
    pub g0: f64,
    pub scheme: SchemeKind,
    pub omega0: f64,
    pub omega_p: f64,
    pub n0: u32,
    pub delta_prime: f64,
}

impl Default for ParamSpec {
    fn default() -> Self {
        Self {
            j: 398.6,
            delta0: 100.0,
            delta: 1.13,
            omega_c: 0.0,
            g0: 1.0,
            scheme: SchemeKind::Frequency,
            omega0: 100.0,
            omega_p: 130.0,
            n0: 1,
            delta_prime: 1.0,
        }
    }
}

impl ParamSpec {
    pub fn system(&self) -> SystemParams {
        let mut p = match self.scheme {
            SchemeKind::Frequency => SystemParams::frequency_modulated(self.j, self.delta0, self.delta),
            SchemeKind::Coupling => {
                SystemParams::coupling_modulated(self.j, self.omega0, self.omega_p, self.n0, self.delta_prime)
            }
        };
        p.omega_c = self.omega_c;
        p.g0 = self.g0;
        p
    }
}

/// Discretization knobs; defaults reproduce the published figures.
#[derive(Clone, Debug, PartialEq)]
pub struct Numerics {
    pub dim_mech: usize,
    pub open_dim_mech: usize,
    pub steps_per_period: usize,
    pub samples: usize,
    pub open_samples: usize,
    pub t_end: f64,
    pub delta0_min: f64,
    pub delta0_max: f64,
    pub delta0_step: f64,
    pub grid_half: f64,
    pub grid_points: usize,
    pub wigner_cutoff: usize,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            dim_mech: 160,
            open_dim_mech: squeezesim::lindblad::OPEN_DIM_MECH,
            steps_per_period: 40,
            samples: 200,
            open_samples: 60,
            t_end: 8.0,
            delta0_min: 10.0,
            delta0_max: 300.0,
            delta0_step: 10.0,
            grid_half: 3.0,
            grid_points: 121,
            wigner_cutoff: squeezesim::wigner::DEFAULT_CUTOFF,
        }
    }
}

impl Numerics {
    /// `Δ0` values of the fig3/fig4b sweeps.
    pub fn delta0_values(&self) -> Vec<f64> {
        let count = ((self.delta0_max - self.delta0_min) / self.delta0_step + 1e-9).floor() as usize + 1;
        (0..count).map(|k| self.delta0_min + self.delta0_step * k as f64).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: ScenarioId,
    pub params: ParamSpec,
    pub diss: Option<DissipationParams>,
    /// Swept parameter names with their values; several entries form a
    /// Cartesian product.
    pub sweep: Vec<(String, Vec<f64>)>,
    pub output: PathBuf,
    pub formats: Vec<Format>,
    pub numerics: Numerics,
}

/// Parameters that may be swept.
pub const SWEEPABLE: [&str; 12] = [
    "params.J",
    "params.Delta0",
    "params.delta",
    "params.omega_c",
    "params.g0",
    "params.omega0",
    "params.omega_p",
    "params.n0",
    "params.delta_prime",
    "diss.gamma_c",
    "diss.gamma_m",
    "diss.n_th",
];

/// Splits text into `(key, value)` pairs, skipping blank lines and `#`
/// comments.
pub fn parse_pairs(text: &str) -> CliResult<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("line {}: expected 'key = value', got '{line}'", k + 1)))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(CliError::Config(format!("line {}: empty key", k + 1)));
        }
        pairs.push((key.to_string(), value.trim().to_string()));
    }
    Ok(pairs)
}

/// Turns `--key value` and `--key=value` flags into pairs.
pub fn parse_overrides(args: &[String]) -> CliResult<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        let flag =
            arg.strip_prefix("--").ok_or_else(|| CliError::Usage(format!("expected a --key flag, got '{arg}'")))?;
        match flag.split_once('=') {
            Some((k, v)) => pairs.push((k.to_string(), v.to_string())),
            None => {
                let v = it.next().ok_or_else(|| CliError::Usage(format!("flag --{flag} needs a value")))?;
                pairs.push((flag.to_string(), v.clone()));
            }
        }
    }
    Ok(pairs)
}

fn number<T: FromStr>(key: &str, value: &str) -> CliResult<T> {
    value.parse().map_err(|_| CliError::Config(format!("{key}: cannot parse '{value}'")))
}

fn number_list(key: &str, value: &str) -> CliResult<Vec<f64>> {
    let values: Vec<f64> = value
        .split(',')
        .map(|v| v.trim())
        .filter(|v| !v.is_empty())
        .map(|v| number(key, v))
        .collect::<CliResult<_>>()?;
    if values.is_empty() {
        return Err(CliError::Config(format!("{key}: empty value list")));
    }
    Ok(values)
}

/// Accepts `J` for `params.J` and `gamma_c` for `diss.gamma_c`.
pub fn canonical_param(name: &str) -> CliResult<&'static str> {
    SWEEPABLE
        .iter()
        .find(|full| **full == name || full.split_once('.').map(|(_, short)| short) == Some(name))
        .copied()
        .ok_or_else(|| {
            CliError::Config(format!("'{name}' is not a sweepable parameter; valid names: {}", SWEEPABLE.join(", ")))
        })
}

impl ScenarioConfig {
    pub fn new(scenario: ScenarioId) -> Self {
        Self {
            scenario,
            params: ParamSpec::default(),
            diss: None,
            sweep: Vec::new(),
            output: PathBuf::from("out").join(scenario.as_str()),
            formats: vec![Format::Csv, Format::Json],
            numerics: Numerics::default(),
        }
    }

    /// Builds a configuration from pairs; `scenario` is required unless a
    /// default is given.
    pub fn from_pairs(pairs: &[(String, String)], default: Option<ScenarioId>) -> CliResult<Self> {
        let scenario = match pairs.iter().rev().find(|(k, _)| k == "scenario") {
            Some((_, v)) => v.parse()?,
            None => default.ok_or_else(|| CliError::Config("missing 'scenario' key".into()))?,
        };
        let mut cfg = Self::new(scenario);
        let mut omega_m = None;
        for (key, value) in pairs {
            if key == "params.omega_M" {
                omega_m = Some(number::<f64>(key, value)?);
            } else {
                cfg.set(key, value)?;
            }
        }
        if let Some(w) = omega_m {
            cfg.params.delta = w - cfg.params.j;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path, overrides: &[(String, String)], default: Option<ScenarioId>) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut pairs = parse_pairs(&text)?;
        pairs.extend_from_slice(overrides);
        Self::from_pairs(&pairs, default)
    }

    fn diss_mut(&mut self) -> &mut DissipationParams {
        self.diss.get_or_insert_with(DissipationParams::reference)
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        if key.starts_with("manifest.") {
            return Ok(());
        }
        if let Some(name) = key.strip_prefix("sweep.") {
            let name = canonical_param(name)?;
            let values = number_list(key, value)?;
            match self.sweep.iter_mut().find(|(n, _)| n == name) {
                Some(entry) => entry.1 = values,
                None => self.sweep.push((name.to_string(), values)),
            }
            return Ok(());
        }
        let p = &mut self.params;
        let n = &mut self.numerics;
        match key {
            "scenario" => self.scenario = value.parse()?,
            "output" => self.output = PathBuf::from(value),
            "formats" => {
                let mut formats = Vec::new();
                for f in value.split(',').map(str::trim).filter(|f| !f.is_empty()) {
                    let f = match f {
                        "csv" => Format::Csv,
                        "json" => Format::Json,
                        other => return Err(CliError::Config(format!("formats: unknown format '{other}'"))),
                    };
                    if !formats.contains(&f) {
                        formats.push(f);
                    }
                }
                if formats.is_empty() {
                    return Err(CliError::Config("formats: need at least one of csv, json".into()));
                }
                self.formats = formats;
            }
            "params.J" => p.j = number(key, value)?,
            "params.Delta0" => p.delta0 = number(key, value)?,
            "params.delta" => p.delta = number(key, value)?,
            "params.omega_c" => p.omega_c = number(key, value)?,
            "params.g0" => p.g0 = number(key, value)?,
            "params.scheme" => {
                p.scheme = match value {
                    "frequency" => SchemeKind::Frequency,
                    "coupling" => SchemeKind::Coupling,
                    other => {
                        return Err(CliError::Config(format!(
                            "params.scheme: expected 'frequency' or 'coupling', got '{other}'"
                        )))
                    }
                }
            }
            "params.omega0" => p.omega0 = number(key, value)?,
            "params.omega_p" => p.omega_p = number(key, value)?,
            "params.n0" => p.n0 = number(key, value)?,
            "params.delta_prime" => p.delta_prime = number(key, value)?,
            "params.omega_M" => {
                let w: f64 = number(key, value)?;
                p.delta = w - p.j;
            }
            "diss.gamma_c" => self.diss_mut().gamma_c = number(key, value)?,
            "diss.gamma_m" => self.diss_mut().gamma_m = number(key, value)?,
            "diss.n_th" => self.diss_mut().n_th = number(key, value)?,
            "numerics.dim_mech" => n.dim_mech = number(key, value)?,
            "numerics.open_dim_mech" => n.open_dim_mech = number(key, value)?,
            "numerics.steps_per_period" => n.steps_per_period = number(key, value)?,
            "numerics.samples" => n.samples = number(key, value)?,
            "numerics.open_samples" => n.open_samples = number(key, value)?,
            "numerics.t_end" => n.t_end = number(key, value)?,
            "numerics.delta0_min" => n.delta0_min = number(key, value)?,
            "numerics.delta0_max" => n.delta0_max = number(key, value)?,
            "numerics.delta0_step" => n.delta0_step = number(key, value)?,
            "numerics.grid_half" => n.grid_half = number(key, value)?,
            "numerics.grid_points" => n.grid_points = number(key, value)?,
            "numerics.wigner_cutoff" => n.wigner_cutoff = number(key, value)?,
            other => return Err(CliError::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Applies one swept value, keeping `ω_M = δ + J`.
    pub fn with_value(&self, name: &str, value: f64) -> CliResult<Self> {
        let mut cfg = self.clone();
        let text = if name == "params.n0" {
            if value.fract() != 0.0 || value < 0.0 {
                return Err(CliError::Config(format!("params.n0 must be a non-negative integer, got {value}")));
            }
            format!("{}", value as u32)
        } else {
            format!("{value}")
        };
        cfg.set(name, &text)?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        let n = &self.numerics;
        let p = self.params.system();
        p.validate().map_err(|e| CliError::Config(format!("params: {e}")))?;
        if let Some(d) = &self.diss {
            d.validate().map_err(|e| CliError::Config(format!("diss: {e}")))?;
        }
        if n.dim_mech < 4 || n.open_dim_mech < 4 || n.steps_per_period == 0 || n.samples == 0 || n.open_samples == 0 {
            return Err(CliError::Config(
                "numerics: dimensions must be >= 4 and step and sample counts positive".into(),
            ));
        }
        if !(n.t_end > 0.0) || !(n.grid_half > 0.0) || n.grid_points < 2 || n.wigner_cutoff < 4 {
            return Err(CliError::Config("numerics: t_end and grid_half must be positive, grid_points >= 2".into()));
        }
        if !(n.delta0_step > 0.0) || !(n.delta0_max >= n.delta0_min) {
            return Err(CliError::Config("numerics: need delta0_step > 0 and delta0_max >= delta0_min".into()));
        }
        if !self.sweep.is_empty() && self.scenario != ScenarioId::Custom {
            return Err(CliError::Config(format!("sweeps apply to the custom scenario, not {}", self.scenario)));
        }
        Ok(())
    }

    /// Canonical echo of every setting; parsing it back gives an equal
    /// configuration.
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let p = &self.params;
        let n = &self.numerics;
        let mut out: Vec<(String, String)> = vec![
            ("scenario".into(), self.scenario.to_string()),
            ("output".into(), self.output.display().to_string()),
            ("formats".into(), self.formats.iter().map(|f| f.as_str()).collect::<Vec<_>>().join(",")),
            ("params.scheme".into(), if p.scheme == SchemeKind::Frequency { "frequency" } else { "coupling" }.into()),
            ("params.J".into(), p.j.to_string()),
            ("params.Delta0".into(), p.delta0.to_string()),
            ("params.delta".into(), p.delta.to_string()),
            ("params.omega_c".into(), p.omega_c.to_string()),
            ("params.g0".into(), p.g0.to_string()),
            ("params.omega0".into(), p.omega0.to_string()),
            ("params.omega_p".into(), p.omega_p.to_string()),
            ("params.n0".into(), p.n0.to_string()),
            ("params.delta_prime".into(), p.delta_prime.to_string()),
        ];
        if let Some(d) = &self.diss {
            out.push(("diss.gamma_c".into(), d.gamma_c.to_string()));
            out.push(("diss.gamma_m".into(), d.gamma_m.to_string()));
            out.push(("diss.n_th".into(), d.n_th.to_string()));
        }
        for (name, values) in &self.sweep {
            let list: Vec<String> = values.iter().map(|v| v.to_string()).collect();
            out.push((format!("sweep.{name}"), list.join(",")));
        }
        out.extend([
            ("numerics.dim_mech".into(), n.dim_mech.to_string()),
            ("numerics.open_dim_mech".into(), n.open_dim_mech.to_string()),
            ("numerics.steps_per_period".into(), n.steps_per_period.to_string()),
            ("numerics.samples".into(), n.samples.to_string()),
            ("numerics.open_samples".into(), n.open_samples.to_string()),
            ("numerics.t_end".into(), n.t_end.to_string()),
            ("numerics.delta0_min".into(), n.delta0_min.to_string()),
            ("numerics.delta0_max".into(), n.delta0_max.to_string()),
            ("numerics.delta0_step".into(), n.delta0_step.to_string()),
            ("numerics.grid_half".into(), n.grid_half.to_string()),
            ("numerics.grid_points".into(), n.grid_points.to_string()),
            ("numerics.wigner_cutoff".into(), n.wigner_cutoff.to_string()),
        ]);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs(text: &str) -> Vec<(String, String)> {
        parse_pairs(text).unwrap()
    }

    #[test]
    fn parses_comments_and_dotted_keys() {
        let cfg = ScenarioConfig::from_pairs(
            &pairs("# run\nscenario = fig5  # trailing\n\nparams.J = 258.6\nformats = json\n"),
            None,
        )
        .unwrap();
        assert_eq!(cfg.scenario, ScenarioId::Fig5);
        assert_eq!(cfg.params.j, 258.6);
        assert_eq!(cfg.formats, vec![Format::Json]);
        assert!((cfg.params.system().omega_m - (258.6 + 1.13)).abs() < 1e-12);
    }

    #[test]
    fn omega_m_sets_detuning() {
        let cfg = ScenarioConfig::from_pairs(&pairs("scenario = custom\nparams.omega_M = 400\nparams.J = 398.6"), None)
            .unwrap();
        assert!((cfg.params.delta - 1.4).abs() < 1e-12);
        let swept = cfg.with_value("params.J", 118.6).unwrap();
        assert!((swept.params.system().omega_m - (118.6 + cfg.params.delta)).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(parse_pairs("no equals sign"), Err(CliError::Config(_))));
        assert!(matches!(ScenarioConfig::from_pairs(&pairs("scenario = fig9"), None), Err(CliError::Usage(_))));
        assert!(ScenarioConfig::from_pairs(&pairs("scenario = fig2a\nparams.bogus = 1"), None).is_err());
        assert!(ScenarioConfig::from_pairs(&pairs("scenario = fig2a\nsweep.omega_M = 1,2"), None).is_err());
        assert!(ScenarioConfig::from_pairs(&pairs("scenario = fig2a\nsweep.J = 1,2"), None).is_err());
        assert!(ScenarioConfig::from_pairs(&pairs("scenario = custom\ndiss.gamma_c = -1"), None).is_err());
    }

    #[test]
    fn echo_round_trips() {
        let cfg = ScenarioConfig::from_pairs(
            &pairs("scenario = custom\ndiss.gamma_c = 0.6\nsweep.J = 118.6, 258.6\nnumerics.samples = 7\nparams.Delta0 = 0.1"),
            None,
        )
        .unwrap();
        let again = ScenarioConfig::from_pairs(&cfg.to_pairs(), None).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(cfg.sweep, vec![("params.J".to_string(), vec![118.6, 258.6])]);
    }

    #[test]
    fn overrides_from_flags() {
        let args: Vec<String> = ["--params.J", "10", "--diss.n_th=12"].iter().map(|s| s.to_string()).collect();
        let o = parse_overrides(&args).unwrap();
        assert_eq!(o, vec![("params.J".into(), "10".into()), ("diss.n_th".into(), "12".into())]);
        assert!(parse_overrides(&["--lonely".to_string()]).is_err());
        assert!(parse_overrides(&["positional".to_string()]).is_err());
    }

    #[test]
    fn delta0_grid() {
        let n = Numerics { delta0_min: 10.0, delta0_max: 30.0, delta0_step: 10.0, ..Numerics::default() };
        assert_eq!(n.delta0_values(), vec![10.0, 20.0, 30.0]);
    }
}
