//! Experiment configuration: TOML text, `key=value` overrides and presets.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize};

use crate::analysis::Window;
use crate::imexrk4::step_count;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Solve,
    ConvergeSpaceTime,
    ConvergeTime,
    Stability,
    GreTable,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Solve => "solve",
            Mode::ConvergeSpaceTime => "converge-space-time",
            Mode::ConvergeTime => "converge-time",
            Mode::Stability => "stability",
            Mode::GreTable => "gre-table",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

fn one_or_many<'de, D, T>(d: D) -> Result<Vec<T>, D::Error>
where
    D: Deserializer<'de>,
    T: Deserialize<'de>,
{
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(v) => vec![v],
        OneOrMany::Many(v) => v,
    })
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Label {
    Text(String),
    Number(f64),
}

/// Stability parameters as text; bare numbers are accepted for real `y`.
fn labels<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<String>, D::Error> {
    Ok(one_or_many::<D, Label>(d)?
        .into_iter()
        .map(|l| match l {
            Label::Text(s) => s,
            Label::Number(x) => x.to_string(),
        })
        .collect())
}

fn is_true(b: &bool) -> bool {
    *b
}

fn yes() -> bool {
    true
}

/// Flat experiment description. Scalars are accepted wherever a list is.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Benchmark id 1..=4; not needed for stability scans.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub problem: Option<u8>,
    pub mode: Mode,
    /// Node counts (Dirichlet) or unknown counts (periodic).
    #[serde(rename = "N", default, deserialize_with = "one_or_many", skip_serializing_if = "Vec::is_empty")]
    pub n: Vec<usize>,
    #[serde(default, deserialize_with = "one_or_many", skip_serializing_if = "Vec::is_empty")]
    pub h: Vec<f64>,
    #[serde(default, deserialize_with = "one_or_many", skip_serializing_if = "Vec::is_empty")]
    pub k: Vec<f64>,
    #[serde(rename = "T", default, skip_serializing_if = "Option::is_none")]
    pub t_final: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    /// Snapshot times for `solve`, report times for `gre-table`.
    #[serde(default, deserialize_with = "one_or_many", skip_serializing_if = "Vec::is_empty")]
    pub times: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_every: Option<f64>,
    /// Stability parameters such as `"-2"`, `"-20i"` or `"1-3i"`.
    #[serde(default, deserialize_with = "labels", skip_serializing_if = "Vec::is_empty")]
    pub y: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<Window>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<[usize; 2]>,
    /// Store wall-clock timings in the report; off gives byte-identical reruns.
    #[serde(default = "yes", skip_serializing_if = "is_true")]
    pub timings: bool,
}

pub const DEFAULT_RESOLUTION: [usize; 2] = [512, 512];

/// Parses `-2`, `5i`, `-20i`, `i`, `1.5-3i` and friends.
pub fn parse_complex(text: &str) -> Result<Complex64, ConfigError> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || ConfigError(format!("cannot parse {text:?} as a complex number"));
    if s.is_empty() {
        return Err(bad());
    }
    let Some(body) = s.strip_suffix('i') else {
        return f64::from_str(&s).map(|re| Complex64::new(re, 0.0)).map_err(|_| bad());
    };
    // Split at the last sign that is not part of an exponent.
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&p| (bytes[p] == b'+' || bytes[p] == b'-') && !matches!(bytes[p - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(p) => (&body[..p], &body[p..]),
        None => ("", body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        v => f64::from_str(v).map_err(|_| bad())?,
    };
    let re = if re.is_empty() { 0.0 } else { f64::from_str(re).map_err(|_| bad())? };
    Ok(Complex64::new(re, im))
}

fn halving(name: &str, v: &[f64]) -> Result<(), ConfigError> {
    for w in v.windows(2) {
        if ((w[0] / w[1]) - 2.0).abs() > 1e-9 {
            return err(format!("{name} list {v:?} is not a halving sequence"));
        }
    }
    Ok(())
}

fn positive(name: &str, v: &[f64]) -> Result<(), ConfigError> {
    match v.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
        Some(x) => err(format!("{name} must be positive and finite, got {x}")),
        None => Ok(()),
    }
}

fn multiple_of(what: &str, t: f64, k: f64) -> Result<(), ConfigError> {
    step_count(t, k)
        .map(|_| ())
        .map_err(|_| ConfigError(format!("{what} {t} is not an integer multiple of k = {k}")))
}

impl ExperimentConfig {
    pub fn final_time(&self) -> Result<f64, ConfigError> {
        match self.t_final {
            Some(t) if t.is_finite() && t >= 0.0 => Ok(t),
            Some(t) => err(format!("T must be finite and nonnegative, got {t}")),
            None => err(format!("mode {} needs T", self.mode)),
        }
    }

    pub fn resolution(&self) -> [usize; 2] {
        self.resolution.unwrap_or(DEFAULT_RESOLUTION)
    }

    pub fn y_values(&self) -> Result<Vec<Complex64>, ConfigError> {
        self.y.iter().map(|s| parse_complex(s)).collect()
    }

    /// Window for one `y`: the configured one or a default by the kind of `y`.
    pub fn window_for(&self, y: Complex64) -> Window {
        self.window.unwrap_or(if y.im == 0.0 { Window::REAL_Y } else { Window::IMAGINARY_Y })
    }

    fn single_space(&self) -> Result<(), ConfigError> {
        if self.n.len() + self.h.len() != 1 {
            return err(format!("mode {} needs exactly one N or h value", self.mode));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        match self.problem {
            Some(p) if !(1..=4).contains(&p) => return err(format!("unknown problem {p}")),
            None if self.mode != Mode::Stability => return err(format!("mode {} needs a problem id", self.mode)),
            _ => {}
        }
        if self.beta.is_some() && self.problem != Some(4) {
            return err("beta can only be overridden for problem 4");
        }
        if self.n.contains(&0) {
            return err("N must be positive");
        }
        positive("h", &self.h)?;
        positive("k", &self.k)?;
        match self.mode {
            Mode::Stability => {
                if self.y.is_empty() {
                    return err("stability mode needs at least one y value");
                }
                self.y_values()?;
                let [nx, ny] = self.resolution();
                if nx < crate::analysis::MIN_RESOLUTION || ny < crate::analysis::MIN_RESOLUTION {
                    return err(format!("resolution must be at least {} per axis", crate::analysis::MIN_RESOLUTION));
                }
                return Ok(());
            }
            Mode::Solve | Mode::GreTable => {
                self.single_space()?;
                if self.k.len() != 1 {
                    return err(format!("mode {} needs a single k", self.mode));
                }
            }
            Mode::ConvergeTime => {
                self.single_space()?;
                if self.k.len() < 2 {
                    return err("converge-time needs at least two k values");
                }
                halving("k", &self.k)?;
            }
            Mode::ConvergeSpaceTime => {
                if !self.n.is_empty() {
                    return err("converge-space-time refines h; give an h list instead of N");
                }
                if self.h.len() < 2 || self.h.len() != self.k.len() {
                    return err("converge-space-time needs equally long h and k lists (at least two)");
                }
                halving("h", &self.h)?;
                halving("k", &self.k)?;
            }
        }
        let t = self.final_time()?;
        for &k in &self.k {
            multiple_of("T", t, k)?;
        }
        let k = self.k[self.k.len() - 1];
        if self.mode == Mode::GreTable && self.times.is_empty() {
            return err("gre-table needs report times");
        }
        for &s in &self.times {
            if !(0.0..=t).contains(&s) {
                return err(format!("time {s} is outside [0, T]"));
            }
            multiple_of("time", s, k)?;
        }
        if let Some(every) = self.snapshot_every {
            positive("snapshot_every", &[every])?;
            multiple_of("snapshot_every", every, k)?;
        }
        if self.mode == Mode::GreTable && self.problem != Some(1) {
            return err("gre-table needs a problem with an exact solution (problem 1)");
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let table: toml::Table = text.parse().map_err(|e| ConfigError(format!("invalid TOML: {e}")))?;
        Self::from_table(table)
    }

    fn from_table(table: toml::Table) -> Result<Self, ConfigError> {
        let cfg: Self = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError(format!("invalid config: {}", e.message())))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Named configurations for the benchmark runs.
pub fn preset(name: &str) -> Result<ExperimentConfig, ConfigError> {
    let halvings = |k0: f64, n: usize| -> Vec<f64> { (0..n).map(|i| k0 / f64::powi(2.0, i as i32)).collect() };
    let base = ExperimentConfig {
        problem: Some(1),
        mode: Mode::Solve,
        n: vec![],
        h: vec![],
        k: vec![],
        t_final: None,
        beta: None,
        times: vec![],
        snapshot_every: None,
        y: vec![],
        window: None,
        resolution: None,
        timings: true,
    };
    let cfg = match name {
        "table1" => ExperimentConfig {
            mode: Mode::ConvergeSpaceTime,
            h: vec![4.0, 2.0, 1.0, 0.5],
            k: halvings(0.025, 4),
            t_final: Some(2.0),
            ..base
        },
        "table2" => ExperimentConfig {
            mode: Mode::GreTable,
            n: vec![200],
            k: vec![0.01],
            t_final: Some(12.0),
            times: vec![6.0, 8.0, 10.0, 12.0],
            ..base
        },
        "table3" => ExperimentConfig {
            problem: Some(2),
            mode: Mode::ConvergeTime,
            n: vec![256],
            k: halvings(0.25, 4),
            t_final: Some(10.0),
            ..base
        },
        "table4" => ExperimentConfig {
            problem: Some(3),
            mode: Mode::ConvergeTime,
            n: vec![101],
            k: halvings(0.01, 5),
            t_final: Some(1.0),
            ..base
        },
        "table5" => ExperimentConfig {
            problem: Some(4),
            mode: Mode::ConvergeTime,
            h: vec![0.05],
            k: halvings(0.005, 5),
            t_final: Some(1.0),
            beta: Some(1.1),
            ..base
        },
        "fig1" => ExperimentConfig {
            problem: None,
            mode: Mode::Stability,
            y: ["-2", "-6", "-10"].map(String::from).to_vec(),
            ..base
        },
        "fig2" => ExperimentConfig {
            problem: None,
            mode: Mode::Stability,
            y: ["-5i", "5i", "-20i", "20i"].map(String::from).to_vec(),
            ..base
        },
        other => return err(format!("unknown preset {other:?}")),
    };
    Ok(cfg)
}

pub const PRESETS: [&str; 7] = ["table1", "table2", "table3", "table4", "table5", "fig1", "fig2"];

/// Parses `key=value`; the value is read as TOML and falls back to a string.
fn parse_override(item: &str) -> Result<(String, toml::Value), ConfigError> {
    let (key, value) = item
        .split_once('=')
        .ok_or_else(|| ConfigError(format!("override {item:?} is not key=value")))?;
    let key = key.trim();
    if key.is_empty() {
        return err(format!("override {item:?} has an empty key"));
    }
    let value = value.trim();
    let parsed = format!("v = {value}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_string()));
    Ok((key.to_string(), parsed))
}

/// Merges file text, `--set` overrides and a default mode into a validated
/// config. A `preset` key supplies a base that the other keys refine.
pub fn load(text: Option<&str>, overrides: &[String], default_mode: Mode) -> Result<ExperimentConfig, ConfigError> {
    let mut user: toml::Table = match text {
        Some(t) => t.parse().map_err(|e| ConfigError(format!("invalid TOML: {e}")))?,
        None => toml::Table::new(),
    };
    for item in overrides {
        let (k, v) = parse_override(item)?;
        user.insert(k, v);
    }
    let mut table = match user.remove("preset") {
        Some(toml::Value::String(name)) => match toml::Value::try_from(preset(&name)?) {
            Ok(toml::Value::Table(t)) => t,
            _ => unreachable!("configs serialize to tables"),
        },
        Some(other) => return err(format!("preset must be a string, got {other}")),
        None => toml::Table::new(),
    };
    table.extend(user);
    table
        .entry("mode")
        .or_insert_with(|| toml::Value::String(default_mode.to_string()));
    ExperimentConfig::from_table(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_is_valid() {
        let c = ExperimentConfig::from_toml("problem = 1\nmode = \"solve\"\nN = 201\nk = 0.01\nT = 2\n").unwrap();
        assert_eq!(c.n, vec![201]);
        assert_eq!(c.k, vec![0.01]);
        assert_eq!(c.t_final, Some(2.0));
        assert!(c.timings);
    }

    #[test]
    fn non_halving_lists_are_rejected() {
        let text = "problem = 2\nmode = \"converge-time\"\nN = 64\nk = [0.025, 0.01]\nT = 1\n";
        let e = ExperimentConfig::from_toml(text).unwrap_err();
        assert!(e.0.contains("halving"), "{e}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let e = ExperimentConfig::from_toml("problem = 1\nmode = \"solve\"\nN = 21\nk = 0.1\nT = 1\ncolour = 3\n");
        assert!(e.is_err());
    }

    #[test]
    fn step_must_divide_final_time() {
        let e = ExperimentConfig::from_toml("problem = 3\nmode = \"solve\"\nN = 21\nk = 0.3\nT = 1\n");
        assert!(e.unwrap_err().0.contains("integer multiple"));
    }

    #[test]
    fn complex_parsing() {
        assert_eq!(parse_complex("-20i").unwrap(), Complex64::new(0.0, -20.0));
        assert_eq!(parse_complex("5i").unwrap(), Complex64::new(0.0, 5.0));
        assert_eq!(parse_complex("-2").unwrap(), Complex64::new(-2.0, 0.0));
        assert_eq!(parse_complex("i").unwrap(), Complex64::new(0.0, 1.0));
        assert_eq!(parse_complex("1.5-3i").unwrap(), Complex64::new(1.5, -3.0));
        assert_eq!(parse_complex("-1e-2+2e1i").unwrap(), Complex64::new(-0.01, 20.0));
        assert!(parse_complex("abc").is_err());
        assert!(parse_complex("").is_err());

        let c = ExperimentConfig::from_toml("mode = \"stability\"\ny = \"-20i\"\n").unwrap();
        assert_eq!(c.y_values().unwrap(), vec![Complex64::new(0.0, -20.0)]);
    }

    #[test]
    fn presets_round_trip() {
        for name in PRESETS {
            let c = preset(name).unwrap();
            c.validate().unwrap();
            let back = ExperimentConfig::from_toml(&c.to_toml()).unwrap();
            assert_eq!(back, c, "{name}");
        }
        let mut c = preset("table3").unwrap();
        c.timings = false;
        c.window = Some(Window::REAL_Y);
        c.resolution = Some([32, 40]);
        assert_eq!(ExperimentConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn overrides_and_presets_merge() {
        let c = load(None, &["preset=table3".into(), "T=5".into(), "timings=false".into()], Mode::Solve).unwrap();
        assert_eq!(c.mode, Mode::ConvergeTime);
        assert_eq!(c.t_final, Some(5.0));
        assert!(!c.timings);

        let c = load(Some("problem = 4\nh = 0.05\nk = 0.001\nT = 0.01\n"), &["beta=0.5".into()], Mode::Solve).unwrap();
        assert_eq!(c.mode, Mode::Solve);
        assert_eq!(c.beta, Some(0.5));

        let c = load(None, &["preset=fig2".into(), "y=-7i".into()], Mode::Stability).unwrap();
        assert_eq!(c.y, vec!["-7i".to_string()]);
        let c = load(None, &["y=[-2, -6.5, \"-10\"]".into()], Mode::Stability).unwrap();
        assert_eq!(c.y, ["-2", "-6.5", "-10"].map(String::from).to_vec());

        assert!(load(None, &["preset=table9".into()], Mode::Solve).is_err());
        assert!(load(None, &["novalue".into()], Mode::Solve).is_err());
        assert!(load(Some("problem = ["), &[], Mode::Solve).is_err());
    }

    #[test]
    fn mode_specific_checks() {
        let bad = [
            "problem = 1\nmode = \"converge-space-time\"\nh = [4.0, 2.0]\nk = [0.025]\nT = 2\n",
            "problem = 2\nmode = \"gre-table\"\nN = 64\nk = 0.1\nT = 1\ntimes = [1.0]\n",
            "problem = 1\nmode = \"gre-table\"\nN = 64\nk = 0.1\nT = 1\n",
            "problem = 2\nmode = \"solve\"\nN = 64\nk = 0.1\nT = 1\nbeta = 2.0\n",
            "problem = 1\nmode = \"stability\"\n",
            "problem = 1\nmode = \"stability\"\ny = \"-2\"\nresolution = [8, 8]\n",
            "problem = 7\nmode = \"solve\"\nN = 64\nk = 0.1\nT = 1\n",
            "mode = \"solve\"\nN = 64\nk = 0.1\nT = 1\n",
            "problem = 2\nmode = \"solve\"\nN = 64\nh = 0.5\nk = 0.1\nT = 1\n",
            "problem = 2\nmode = \"solve\"\nN = 64\nk = 0.1\nT = 1\ntimes = [0.25]\n",
        ];
        for text in bad {
            assert!(ExperimentConfig::from_toml(text).is_err(), "{text}");
        }
    }
}
