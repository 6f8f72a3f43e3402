//! Scenario documents.
//!
//! A scenario is a TOML document:
//!
//! ```toml
//! name = "fig3a"
//! m1 = 16
//! m2 = 16
//! antennas = 4            # default 4
//! sigma_ratio = 0.125     # σ2²/σ1², default 1/8
//! detectors = ["sic", "jml"]   # default both; [] for bounds only
//! seed = 1                # default 1
//! figure = "fig3a"        # optional, adds plot-ready records to JSON output
//!
//! [sigma1_db]
//! start = 0.0
//! stop = 40.0
//! step = 5.0
//!
//! [stop]                  # optional
//! min_bit_errors = 200
//! max_trials = 100000000
//!
//! [[outputs]]             # optional, default one CSV named after the scenario
//! format = "csv"
//! path = "fig3a.csv"
//! ```

use serde::{Deserialize, Serialize};
use simo_noma::detection::DetectorKind;
use simo_noma::simkernel::{StopRule, SweepSpec};
use thiserror::Error;

use crate::figure::Figure;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("{path}: {message}")]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepRange {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl SweepRange {
    /// `start, start + step, …` up to `stop` inclusive (with a small tolerance).
    pub fn points(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..n).map(|i| self.start + i as f64 * self.step).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StopSection {
    #[serde(default = "default_min_errors")]
    pub min_bit_errors: u64,
    #[serde(default = "default_max_trials")]
    pub max_trials: u64,
}

impl Default for StopSection {
    fn default() -> Self {
        let d = StopRule::default();
        Self {
            min_bit_errors: d.min_bit_errors,
            max_trials: d.max_trials,
        }
    }
}

fn default_min_errors() -> u64 {
    StopRule::default().min_bit_errors
}

fn default_max_trials() -> u64 {
    StopRule::default().max_trials
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub format: OutputFormat,
    pub path: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub m1: usize,
    pub m2: usize,
    #[serde(default = "default_antennas")]
    pub antennas: usize,
    #[serde(default = "default_ratio")]
    pub sigma_ratio: f64,
    #[serde(default = "default_detectors")]
    pub detectors: Vec<DetectorKind>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub figure: Option<Figure>,
    pub sigma1_db: SweepRange,
    #[serde(default)]
    pub stop: StopSection,
    #[serde(default)]
    pub outputs: Vec<OutputSpec>,
}

fn default_name() -> String {
    "scenario".to_string()
}

fn default_antennas() -> usize {
    4
}

fn default_ratio() -> f64 {
    0.125
}

fn default_detectors() -> Vec<DetectorKind> {
    DetectorKind::ALL.to_vec()
}

fn default_seed() -> u64 {
    1
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.name.is_empty()
            || !self
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c))
        {
            return Err(ConfigError::new(
                "name",
                "must be non-empty and use only [A-Za-z0-9._-]",
            ));
        }
        for (path, m) in [("m1", self.m1), ("m2", self.m2)] {
            if m < 4 || !m.is_power_of_two() {
                return Err(ConfigError::new(
                    path,
                    format!("{m} is not a power of two >= 4"),
                ));
            }
        }
        if self.m2 > self.m1 {
            return Err(ConfigError::new(
                "m2",
                format!("must not exceed m1 = {}", self.m1),
            ));
        }
        if self.antennas == 0 || self.antennas > simo_noma::bounds::MAX_ANTENNAS {
            return Err(ConfigError::new(
                "antennas",
                format!("must be in 1..={}", simo_noma::bounds::MAX_ANTENNAS),
            ));
        }
        if !(self.sigma_ratio > 0.0 && self.sigma_ratio < 1.0) {
            return Err(ConfigError::new("sigma_ratio", "must lie in (0, 1)"));
        }
        let r = &self.sigma1_db;
        for (path, v) in [
            ("sigma1_db.start", r.start),
            ("sigma1_db.stop", r.stop),
            ("sigma1_db.step", r.step),
        ] {
            if !v.is_finite() {
                return Err(ConfigError::new(path, "must be finite"));
            }
        }
        if r.step <= 0.0 {
            return Err(ConfigError::new("sigma1_db.step", "must be > 0"));
        }
        if r.start > r.stop {
            return Err(ConfigError::new("sigma1_db.start", "must not exceed stop"));
        }
        if r.points().len() > 10_000 {
            return Err(ConfigError::new("sigma1_db.step", "too many sweep points"));
        }
        let mut seen = Vec::new();
        for (i, d) in self.detectors.iter().enumerate() {
            if seen.contains(d) {
                return Err(ConfigError::new(
                    format!("detectors[{i}]"),
                    format!("duplicate detector {d}"),
                ));
            }
            seen.push(*d);
        }
        if self.stop.min_bit_errors == 0 {
            return Err(ConfigError::new("stop.min_bit_errors", "must be >= 1"));
        }
        if self.stop.max_trials == 0 {
            return Err(ConfigError::new("stop.max_trials", "must be >= 1"));
        }
        for (i, o) in self.outputs.iter().enumerate() {
            if o.path.trim().is_empty() {
                return Err(ConfigError::new(
                    format!("outputs[{i}].path"),
                    "must not be empty",
                ));
            }
        }
        if let Some(fig) = self.figure {
            fig.check(self.m1, self.m2, self.antennas, self.sigma_ratio)
                .map_err(|e| ConfigError::new("figure", e.to_string()))?;
        }
        Ok(())
    }

    pub fn sweep_spec(&self) -> SweepSpec {
        SweepSpec {
            sigma1_db_points: self.sigma1_db.points(),
            sigma_ratio: self.sigma_ratio,
            antennas: self.antennas,
            m1: self.m1,
            m2: self.m2,
            detectors: self.detectors.clone(),
            stop: StopRule {
                min_bit_errors: self.stop.min_bit_errors,
                max_trials: self.stop.max_trials,
            },
            seed: self.seed,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario config is always representable as TOML")
    }
}

/// Parses and validates a scenario document, applying defaults.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let de = toml::Deserializer::parse(text)
        .map_err(|e| ConfigError::new("<document>", e.to_string()))?;
    let cfg: ScenarioConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let path = if path == "." {
            "<document>".to_string()
        } else {
            path
        };
        ConfigError::new(path, e.into_inner().message().trim().to_string())
    })?;
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const MINIMAL: &str = "m1 = 16\nm2 = 16\n[sigma1_db]\nstart = 0\nstop = 40\nstep = 5\n";

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse_config(MINIMAL.replace("= 0\n", "= 0.0\n").as_str()).unwrap();
        assert_eq!(cfg.antennas, 4);
        assert_eq!(cfg.sigma_ratio, 0.125);
        assert_eq!(cfg.detectors, vec![DetectorKind::Sic, DetectorKind::Jml]);
        assert_eq!(cfg.stop, StopSection::default());
        assert_eq!(cfg.seed, 1);
        assert_eq!(cfg.sigma1_db.points().len(), 9);
        assert_eq!(cfg.sigma1_db.points()[8], 40.0);
    }

    #[test]
    fn integers_are_accepted_for_floats() {
        assert!(parse_config(MINIMAL).is_ok());
    }

    #[test]
    fn rejects_non_power_of_two() {
        let e = parse_config(&MINIMAL.replace("m1 = 16", "m1 = 12")).unwrap_err();
        assert_eq!(e.path, "m1");
    }

    #[test]
    fn rejects_zero_step() {
        let e = parse_config(&MINIMAL.replace("step = 5", "step = 0")).unwrap_err();
        assert_eq!(e.path, "sigma1_db.step");
    }

    #[test]
    fn rejects_reversed_range_and_bad_orders() {
        let e = parse_config(&MINIMAL.replace("start = 0", "start = 50")).unwrap_err();
        assert_eq!(e.path, "sigma1_db.start");
        let e = parse_config(&MINIMAL.replace("m1 = 16", "m1 = 8")).unwrap_err();
        assert_eq!(e.path, "m2");
    }

    #[test]
    fn unknown_keys_and_type_errors_carry_paths() {
        let e = parse_config(&format!("{MINIMAL}[stop]\nmin_errors = 3\n")).unwrap_err();
        assert_eq!(e.path, "stop.min_errors", "{e}");
        assert!(e.message.contains("min_errors"), "{e}");
        let e = parse_config(&MINIMAL.replace("m2 = 16", "m2 = \"sixteen\"")).unwrap_err();
        assert_eq!(e.path, "m2", "{e}");
        let e = parse_config(&format!("detectors = [\"sic\", \"mmse\"]\n{MINIMAL}")).unwrap_err();
        assert_eq!(e.path, "detectors[1]", "{e}");
        let e = parse_config(&format!("detectors = [\"jml\", \"jml\"]\n{MINIMAL}")).unwrap_err();
        assert_eq!(e.path, "detectors[1]", "{e}");
        let e = parse_config("m1 = 16\n").unwrap_err();
        assert!(
            e.message.contains("m2") || e.message.contains("sigma1_db"),
            "{e}"
        );
        let e = parse_config("m1 = = 3").unwrap_err();
        assert_eq!(e.path, "<document>");
    }

    #[test]
    fn figure_must_match_parameters() {
        let e = parse_config(&format!("figure = \"fig4b\"\n{MINIMAL}")).unwrap_err();
        assert_eq!(e.path, "figure");
        assert!(parse_config(&format!("figure = \"fig3a\"\n{MINIMAL}")).is_ok());
    }

    fn arb_config() -> impl Strategy<Value = ScenarioConfig> {
        (
            2u32..=6,
            0u32..=4,
            1usize..=8,
            (-10.0f64..30.0, 0.0f64..20.0, 0.5f64..5.0),
            0.01f64..0.99,
            prop::sample::select(vec![
                vec![],
                vec![DetectorKind::Jml],
                vec![DetectorKind::Sic, DetectorKind::Jml],
            ]),
            any::<u64>(),
            (1u64..1000, 1u64..1_000_000_000),
        )
            .prop_map(
                |(lm1, dm, antennas, (start, span, step), ratio, detectors, seed, (mine, maxt))| {
                    let m1 = 1usize << lm1;
                    let m2 = 1usize << lm1.saturating_sub(dm).max(2);
                    ScenarioConfig {
                        name: format!("s{seed}"),
                        m1,
                        m2,
                        antennas,
                        sigma_ratio: ratio,
                        detectors,
                        seed,
                        figure: None,
                        sigma1_db: SweepRange {
                            start,
                            stop: start + span,
                            step,
                        },
                        stop: StopSection {
                            min_bit_errors: mine,
                            max_trials: maxt,
                        },
                        outputs: vec![OutputSpec {
                            format: OutputFormat::Csv,
                            path: "out.csv".into(),
                        }],
                    }
                },
            )
    }

    proptest! {
        #[test]
        fn serialize_parse_round_trip(cfg in arb_config()) {
            let text = cfg.to_toml();
            prop_assert_eq!(parse_config(&text).unwrap(), cfg);
        }
    }
}
