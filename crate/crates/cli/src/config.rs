//! Run configuration: JSON file merged with command-line overrides.

use crate::error::{CliError, CliResult};
use serde::{Deserialize, Serialize};
use slosh_core::geometry::{parse_domain, ClassParams, MeridianDomain};
use slosh_core::mesh::GradingSpec;
use slosh_core::ProblemKind;
use std::path::{Path, PathBuf};

pub const DEFAULT_CELLS: usize = 64;
pub const DEFAULT_K: usize = 4;
pub const MAX_MODE: u32 = 64;
pub const MAX_K: usize = 1000;

pub const CHECKS: [&str; 7] = [
    "ordering",
    "monotonicity",
    "highspot-interior",
    "highspot-rim",
    "contact-slope",
    "stream-sign",
    "surface-mean",
];

/// Everything a run may set. Every field is optional so that a config file
/// can give any subset and flags fill in the rest.
#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub domain: Option<String>,
    pub nr: Option<usize>,
    pub ny: Option<usize>,
    pub grading: Option<String>,
    pub apex_ratio: Option<f64>,
    pub m: Option<Vec<u32>>,
    pub k: Option<usize>,
    pub kind: Option<ProblemKind>,
    pub checks: Option<Vec<String>>,
    pub out: Option<PathBuf>,
    pub svg: Option<bool>,
    pub axis: Option<String>,
    pub values: Option<Vec<f64>>,
    pub tolerances: Option<Tolerances>,
    pub class: Option<ClassConfig>,
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Relative gradient tolerance of the monotonicity check.
    pub monotonicity: f64,
    /// Required ratio of ordering margin to estimated error.
    pub margin_factor: f64,
    /// Relative tolerance of the contact-slope fit.
    pub contact_slope: f64,
    /// Bound on `|∫_F ψ r ds|` for axisymmetric fields.
    pub surface_mean: f64,
    /// Largest relative minority-sign excursion of a one-signed stream function.
    pub stream_sign: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            monotonicity: slosh_core::analysis::MONOTONICITY_TOL,
            margin_factor: slosh_core::analysis::MARGIN_FACTOR,
            contact_slope: 0.1,
            surface_mean: 1e-8,
            stream_sign: slosh_core::analysis::STREAM_SIGN_TOL,
        }
    }
}

/// Class parameters `(ε, M, H, r0)` for distances between domains.
#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ClassConfig {
    pub epsilon: f64,
    pub m: f64,
    pub h: f64,
    pub r0: f64,
}

impl Default for ClassConfig {
    fn default() -> Self {
        ClassConfig {
            epsilon: 0.05,
            m: 6.0,
            h: 1.0,
            r0: 1.0,
        }
    }
}

/// Validated configuration.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub domain: String,
    #[serde(skip)]
    pub meridian: MeridianDomain,
    pub mesh: GradingSpec,
    pub m: Vec<u32>,
    pub k: usize,
    pub kind: ProblemKind,
    pub checks: Vec<String>,
    pub out: PathBuf,
    pub svg: bool,
    pub tolerances: Tolerances,
    pub class: ClassConfig,
}

impl RunConfig {
    pub fn class_params(&self) -> CliResult<ClassParams> {
        let c = self.class;
        ClassParams::new(c.epsilon, c.m, c.h, c.r0).map_err(|e| CliError::Invalid(e.to_string()))
    }
}

pub fn load(path: &Path) -> CliResult<ConfigFile> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Invalid(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Invalid(format!("bad config {}: {e}", path.display())))
}

impl ConfigFile {
    /// Fields set in `over` replace those in `self`.
    pub fn merged(self, over: ConfigFile) -> ConfigFile {
        ConfigFile {
            domain: over.domain.or(self.domain),
            nr: over.nr.or(self.nr),
            ny: over.ny.or(self.ny),
            grading: over.grading.or(self.grading),
            apex_ratio: over.apex_ratio.or(self.apex_ratio),
            m: over.m.or(self.m),
            k: over.k.or(self.k),
            kind: over.kind.or(self.kind),
            checks: over.checks.or(self.checks),
            out: over.out.or(self.out),
            svg: over.svg.or(self.svg),
            axis: over.axis.or(self.axis),
            values: over.values.or(self.values),
            tolerances: over.tolerances.or(self.tolerances),
            class: over.class.or(self.class),
        }
    }

    pub fn resolve(
        &self,
        default_domain: &str,
        default_m: &[u32],
        default_checks: &[&str],
    ) -> CliResult<RunConfig> {
        let domain = self
            .domain
            .clone()
            .unwrap_or_else(|| default_domain.to_string());
        let meridian = parse_domain(&domain).map_err(|e| CliError::Invalid(e.to_string()))?;
        let mesh = grading_spec(
            self.nr.unwrap_or(DEFAULT_CELLS),
            self.ny.unwrap_or(DEFAULT_CELLS),
            self.grading.as_deref().unwrap_or("graded"),
            self.apex_ratio,
        )?;

        let mut m = self.m.clone().unwrap_or_else(|| default_m.to_vec());
        m.sort_unstable();
        m.dedup();
        if m.is_empty() || m.iter().any(|&v| v > MAX_MODE) {
            return Err(CliError::Invalid(format!(
                "modes must be a nonempty list in 0..={MAX_MODE}"
            )));
        }
        let k = self.k.unwrap_or(DEFAULT_K);
        if k == 0 || k > MAX_K {
            return Err(CliError::Invalid(format!(
                "k must lie in 1..={MAX_K}, got {k}"
            )));
        }

        let checks = match &self.checks {
            Some(list) => list.clone(),
            None => default_checks.iter().map(|s| s.to_string()).collect(),
        };
        if let Some(bad) = checks.iter().find(|c| !CHECKS.contains(&c.as_str())) {
            return Err(CliError::Invalid(format!(
                "unknown check '{bad}', expected one of {}",
                CHECKS.join(", ")
            )));
        }

        let tolerances = self.tolerances.unwrap_or_default();
        let t = tolerances;
        let ranges = [
            ("monotonicity", t.monotonicity, 0.0, 1.0),
            ("margin_factor", t.margin_factor, 1.0, 1e6),
            ("contact_slope", t.contact_slope, 0.0, 1.0),
            ("surface_mean", t.surface_mean, 0.0, 1.0),
            ("stream_sign", t.stream_sign, 0.0, 1.0),
        ];
        for (name, v, lo, hi) in ranges {
            if !(v > lo && v <= hi) {
                return Err(CliError::Invalid(format!(
                    "tolerance {name} must lie in ({lo}, {hi}], got {v}"
                )));
            }
        }

        let out = self.out.clone().unwrap_or_else(|| PathBuf::from("out"));
        if out.exists() && !out.is_dir() {
            return Err(CliError::Invalid(format!(
                "{} exists and is not a directory",
                out.display()
            )));
        }
        let config = RunConfig {
            domain,
            meridian,
            mesh,
            m,
            k,
            kind: self.kind.unwrap_or(ProblemKind::Sloshing),
            checks,
            out,
            svg: self.svg.unwrap_or(false),
            tolerances,
            class: self.class.unwrap_or_default(),
        };
        config.class_params()?;
        Ok(config)
    }
}

/// `uniform`, `graded`, or `graded:<corner ratio>`.
pub fn grading_spec(
    nr: usize,
    ny: usize,
    grading: &str,
    apex: Option<f64>,
) -> CliResult<GradingSpec> {
    let mut spec = match grading.split_once(':') {
        None if grading == "uniform" => GradingSpec::uniform(nr, ny),
        None if grading == "graded" => GradingSpec::new(nr, ny),
        Some(("graded", ratio)) => {
            let ratio: f64 = ratio
                .parse()
                .map_err(|_| CliError::Invalid(format!("bad grading ratio '{ratio}'")))?;
            GradingSpec::new(nr, ny).with_corner_ratio(ratio)
        }
        _ => {
            return Err(CliError::Invalid(format!(
                "grading must be 'uniform', 'graded' or 'graded:<ratio>', got '{grading}'"
            )))
        }
    };
    if let Some(a) = apex {
        spec = spec.with_apex_ratio(a);
    }
    spec.validate()
        .map_err(|e| CliError::Invalid(e.to_string()))?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win_over_file() {
        let file = ConfigFile {
            domain: Some("hemisphere".into()),
            nr: Some(10),
            k: Some(3),
            ..Default::default()
        };
        let flags = ConfigFile {
            nr: Some(20),
            ..Default::default()
        };
        let merged = file.merged(flags);
        assert_eq!(merged.nr, Some(20));
        assert_eq!(merged.k, Some(3));
        assert_eq!(merged.domain.as_deref(), Some("hemisphere"));
    }

    #[test]
    fn resolve_rejects_bad_input() {
        let bad = [
            ConfigFile {
                domain: Some("cylinder:h=-1".into()),
                ..Default::default()
            },
            ConfigFile {
                k: Some(0),
                ..Default::default()
            },
            ConfigFile {
                grading: Some("steep".into()),
                ..Default::default()
            },
            ConfigFile {
                checks: Some(vec!["nope".into()]),
                ..Default::default()
            },
            ConfigFile {
                nr: Some(0),
                ..Default::default()
            },
            ConfigFile {
                m: Some(vec![]),
                ..Default::default()
            },
        ];
        for c in bad {
            assert!(
                matches!(
                    c.resolve("hemisphere", &[1], &[]),
                    Err(CliError::Invalid(_))
                ),
                "{c:?}"
            );
        }
    }

    #[test]
    fn unknown_config_keys_are_rejected() {
        assert!(serde_json::from_str::<ConfigFile>(r#"{"domian": "hemisphere"}"#).is_err());
        let c: ConfigFile =
            serde_json::from_str(r#"{"kind": "dirichlet-steklov", "m": [0]}"#).unwrap();
        assert_eq!(c.kind, Some(ProblemKind::DirichletSteklov));
    }

    #[test]
    fn grading_forms() {
        assert_eq!(
            grading_spec(8, 8, "uniform", None).unwrap().corner_ratio,
            1.0
        );
        assert_eq!(
            grading_spec(8, 8, "graded:0.5", None).unwrap().corner_ratio,
            0.5
        );
        assert!(grading_spec(8, 8, "graded:x", None).is_err());
    }
}
