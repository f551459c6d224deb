//! Run configuration: a flat `key = value` text format plus command-line
//! overrides, resolved into ready-to-run module configs.
//!
//! Keys use dotted paths (`grid.nx`, `problem.K`). Unknown keys are rejected
//! outright — a typo must never silently fall back to a default. Every
//! resolved value, defaults included, is echoed into the run manifest so a
//! config file can be reconstructed from any finished run.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use thiserror::Error;

use crate::classify::ClassifierConfig;
use crate::flow::StepperConfig;
use crate::grid::{eigenmode, read_field, GridError, GridFunction, RectDomain};
use crate::model::{
    CoefficientModel, CutoffProfile, ModelError, NonlinearityModel, NonlocalModel,
    SpatialProfile,
};
use crate::threshold::ThresholdConfig;
use crate::ProblemSpec;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config line {line_no}: `{line}` — {msg}")]
    Parse {
        line_no: usize,
        line: String,
        msg: String,
    },
    #[error("unknown config key `{key}`")]
    UnknownKey { key: String },
    #[error("bad value for `{key}`: {msg}")]
    BadValue { key: String, msg: String },
    #[error("no problem preset named; set `preset = ...` or pass --preset")]
    MissingPreset,
    #[error("unknown preset `{name}` (known: example1, example2, heat, cubic)")]
    UnknownPreset { name: String },
    #[error("key `{key}` does not apply to preset `{preset}`")]
    Inapplicable { key: String, preset: String },
    #[error("initial datum: {0}")]
    BadInit(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Every key the config format understands, in documentation order.
pub const KNOWN_KEYS: &[&str] = &[
    "preset",
    "problem.p",
    "problem.r",
    "problem.q",
    "problem.tau",
    "problem.xi",
    "problem.gamma",
    "problem.K",
    "problem.a0",
    "problem.b_profile",
    "problem.b_amplitude",
    "problem.h_profile",
    "problem.h_scale",
    "grid.nx",
    "grid.ny",
    "grid.lx",
    "grid.ly",
    "stepper.dt",
    "stepper.solver_tol",
    "classifier.eps_decay",
    "classifier.m_blow",
    "classifier.t_max",
    "classifier.kstar",
    "threshold.tol_s",
    "threshold.max_iters",
    "init.mode_k",
    "init.mode_l",
    "init.scale",
    "init.file",
    "mhat.budget",
    "seed",
    "output.dir",
];

/// Raw, validated key/value pairs prior to semantic resolution.
#[derive(Debug, Clone, Default)]
pub struct RunConfig {
    entries: BTreeMap<String, String>,
}

impl RunConfig {
    /// Parse the flat text format: `key = value` per line, `#` comments,
    /// blank lines ignored. Later occurrences of a key override earlier ones.
    pub fn from_text(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::Parse {
                    line_no: i + 1,
                    line: raw.to_string(),
                    msg: "expected `key = value`".into(),
                });
            };
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_text(&text)
    }

    /// Set one key, rejecting unknown names.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        if !KNOWN_KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey { key: key.into() });
        }
        self.entries.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// Apply a repeatable `--set KEY=VALUE` flag.
    pub fn apply_set_flag(&mut self, assignment: &str) -> Result<(), ConfigError> {
        let Some((key, value)) = assignment.split_once('=') else {
            return Err(ConfigError::Parse {
                line_no: 0,
                line: assignment.to_string(),
                msg: "--set expects KEY=VALUE".into(),
            });
        };
        self.set(key.trim(), value.trim())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|s| s.as_str())
    }

    fn f64_opt(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(v) => v.parse::<f64>().map(Some).map_err(|e| ConfigError::BadValue {
                key: key.into(),
                msg: format!("`{v}` is not a number: {e}"),
            }),
        }
    }

    fn usize_opt(&self, key: &str) -> Result<Option<usize>, ConfigError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<usize>()
                .map(Some)
                .map_err(|e| ConfigError::BadValue {
                    key: key.into(),
                    msg: format!("`{v}` is not a nonnegative integer: {e}"),
                }),
        }
    }

    fn u64_opt(&self, key: &str) -> Result<Option<u64>, ConfigError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(v) => v.parse::<u64>().map(Some).map_err(|e| ConfigError::BadValue {
                key: key.into(),
                msg: format!("`{v}` is not a nonnegative integer: {e}"),
            }),
        }
    }

    fn reject_inapplicable(&self, preset: &str, keys: &[&str]) -> Result<(), ConfigError> {
        for key in keys {
            if self.entries.contains_key(*key) {
                return Err(ConfigError::Inapplicable {
                    key: (*key).to_string(),
                    preset: preset.to_string(),
                });
            }
        }
        Ok(())
    }

    /// Resolve into runnable configs, validating everything along the way.
    pub fn resolve(&self) -> Result<ResolvedRun, ConfigError> {
        let preset = self
            .get("preset")
            .ok_or(ConfigError::MissingPreset)?
            .to_string();

        let nx = self.usize_opt("grid.nx")?.unwrap_or(32);
        let ny = self.usize_opt("grid.ny")?.unwrap_or(32);
        let lx = self.f64_opt("grid.lx")?.unwrap_or(1.0);
        let ly = self.f64_opt("grid.ly")?.unwrap_or(1.0);
        let domain = RectDomain::new(lx, ly, nx, ny)?;

        let spec = self.build_problem(&preset, domain)?;

        let mut stepper = StepperConfig::for_domain(&domain);
        stepper.sample_stride = 1;
        if let Some(dt) = self.f64_opt("stepper.dt")? {
            if !(dt > 0.0) || !dt.is_finite() {
                return Err(ConfigError::BadValue {
                    key: "stepper.dt".into(),
                    msg: "time step must be finite and > 0".into(),
                });
            }
            stepper.dt = dt;
        }
        if let Some(tol) = self.f64_opt("stepper.solver_tol")? {
            if !(tol > 0.0 && tol < 1.0) {
                return Err(ConfigError::BadValue {
                    key: "stepper.solver_tol".into(),
                    msg: "relative tolerance must lie in (0, 1)".into(),
                });
            }
            stepper.solver_tol = tol;
        }

        let mut ccfg = ClassifierConfig::for_domain(&domain);
        ccfg.stepper = stepper;
        if let Some(v) = self.f64_opt("classifier.eps_decay")? {
            ccfg.eps_decay = v;
        }
        if let Some(v) = self.f64_opt("classifier.m_blow")? {
            ccfg.m_blow = v;
        }
        if let Some(v) = self.f64_opt("classifier.t_max")? {
            ccfg.t_max = v;
        }
        if let Some(v) = self.f64_opt("classifier.kstar")? {
            ccfg.kstar = v;
        }
        ccfg.validate().map_err(|e| ConfigError::BadValue {
            key: "classifier".into(),
            msg: e.to_string(),
        })?;

        let mut tcfg = ThresholdConfig::default_for(&ccfg);
        if let Some(v) = self.f64_opt("threshold.tol_s")? {
            if !(v > 0.0) || !v.is_finite() {
                return Err(ConfigError::BadValue {
                    key: "threshold.tol_s".into(),
                    msg: "tolerance must be finite and > 0".into(),
                });
            }
            tcfg.tol_s = v;
        }
        if let Some(v) = self.usize_opt("threshold.max_iters")? {
            tcfg.max_iters = v;
        }

        let u0 = self.build_initial(domain)?;

        let mhat_budget = self.usize_opt("mhat.budget")?.unwrap_or(16).max(1);
        let seed = self.u64_opt("seed")?.unwrap_or(0);
        let output_dir = PathBuf::from(self.get("output.dir").unwrap_or("out"));

        Ok(ResolvedRun {
            preset,
            spec,
            domain,
            ccfg,
            tcfg,
            u0,
            mhat_budget,
            seed,
            output_dir,
            init_file: self.get("init.file").map(PathBuf::from),
            init_mode: (
                self.usize_opt("init.mode_k")?.unwrap_or(1),
                self.usize_opt("init.mode_l")?.unwrap_or(1),
            ),
            init_scale: self.f64_opt("init.scale")?.unwrap_or(1.0),
        })
    }

    fn build_problem(&self, preset: &str, domain: RectDomain) -> Result<ProblemSpec, ConfigError> {
        let gamma = self.f64_opt("problem.gamma")?;
        let f = match preset {
            "example1" => {
                self.reject_inapplicable(preset, &["problem.r", "problem.q"])?;
                NonlinearityModel::exponential_n2(
                    self.f64_opt("problem.p")?.unwrap_or(3.0),
                    self.f64_opt("problem.tau")?.unwrap_or(0.6),
                    self.f64_opt("problem.xi")?.unwrap_or(1.5),
                    gamma.unwrap_or(1.0),
                )?
            }
            "example2" => {
                self.reject_inapplicable(preset, &["problem.tau", "problem.xi"])?;
                NonlinearityModel::polynomial(
                    self.f64_opt("problem.p")?.unwrap_or(1.4),
                    self.f64_opt("problem.r")?.unwrap_or(1.2),
                    gamma.unwrap_or(0.2),
                )?
            }
            "heat" => {
                self.reject_inapplicable(
                    preset,
                    &[
                        "problem.p",
                        "problem.r",
                        "problem.q",
                        "problem.tau",
                        "problem.xi",
                        "problem.gamma",
                    ],
                )?;
                NonlinearityModel::zero()
            }
            "cubic" => {
                self.reject_inapplicable(
                    preset,
                    &["problem.r", "problem.q", "problem.tau", "problem.xi"],
                )?;
                NonlinearityModel::pure_power(
                    self.f64_opt("problem.p")?.unwrap_or(3.0),
                    gamma.unwrap_or(2.0),
                )?
            }
            other => {
                return Err(ConfigError::UnknownPreset {
                    name: other.to_string(),
                })
            }
        };

        let g = match preset {
            "example1" => {
                NonlocalModel::exponential_xi(self.f64_opt("problem.xi")?.unwrap_or(1.5))?
            }
            "example2" => NonlocalModel::power_q(self.f64_opt("problem.q")?.unwrap_or(3.0))?,
            _ => NonlocalModel::power_q(2.0)?,
        };

        let coeff_keys = [
            "problem.K",
            "problem.b_profile",
            "problem.b_amplitude",
            "problem.h_profile",
            "problem.h_scale",
        ];
        let coeff_overridden = coeff_keys.iter().any(|k| self.entries.contains_key(*k));
        let a = if coeff_overridden {
            let b = match self.get("problem.b_profile").unwrap_or("sine_bump") {
                "sine_bump" => SpatialProfile::SineBump {
                    amplitude: self.f64_opt("problem.b_amplitude")?.unwrap_or(0.5),
                },
                "const" => SpatialProfile::Const(
                    self.f64_opt("problem.b_amplitude")?.unwrap_or(0.5),
                ),
                "zero" => SpatialProfile::Zero,
                other => {
                    return Err(ConfigError::BadValue {
                        key: "problem.b_profile".into(),
                        msg: format!("unknown profile `{other}` (sine_bump, const, zero)"),
                    })
                }
            };
            let h = match self.get("problem.h_profile").unwrap_or("quartic_bump") {
                "quartic_bump" => CutoffProfile::QuarticBump {
                    scale: self.f64_opt("problem.h_scale")?.unwrap_or(1.0),
                },
                other => {
                    return Err(ConfigError::BadValue {
                        key: "problem.h_profile".into(),
                        msg: format!("unknown profile `{other}` (quartic_bump)"),
                    })
                }
            };
            CoefficientModel::factored(b, h, self.f64_opt("problem.K")?.unwrap_or(1.0))?
        } else {
            match preset {
                "example1" | "example2" => ProblemSpec::default_coefficient(1.0),
                _ => CoefficientModel::identity(),
            }
        };

        if let Some(declared) = self.f64_opt("problem.a0")? {
            if a.a0 < declared - 1e-12 {
                return Err(ConfigError::BadValue {
                    key: "problem.a0".into(),
                    msg: format!(
                        "declared lower bound {declared} exceeds the certified bound {}",
                        a.a0
                    ),
                });
            }
        }

        Ok(ProblemSpec::new(domain, f, g, a)?)
    }

    fn build_initial(&self, domain: RectDomain) -> Result<GridFunction, ConfigError> {
        if let Some(path) = self.get("init.file") {
            let u = read_field(Path::new(path))?;
            if u.domain.nx != domain.nx || u.domain.ny != domain.ny {
                return Err(ConfigError::BadInit(format!(
                    "field file is {}x{} but the grid is {}x{}",
                    u.domain.nx, u.domain.ny, domain.nx, domain.ny
                )));
            }
            return Ok(GridFunction {
                domain,
                values: u.values,
            });
        }
        let k = self.usize_opt("init.mode_k")?.unwrap_or(1);
        let l = self.usize_opt("init.mode_l")?.unwrap_or(1);
        if k == 0 || l == 0 || k > domain.nx || l > domain.ny {
            return Err(ConfigError::BadInit(format!(
                "mode ({k}, {l}) out of range for a {}x{} grid",
                domain.nx, domain.ny
            )));
        }
        let scale = self.f64_opt("init.scale")?.unwrap_or(1.0);
        if !scale.is_finite() {
            return Err(ConfigError::BadInit("init.scale must be finite".into()));
        }
        Ok(eigenmode(&domain, k, l)?.scaled(scale))
    }
}

/// Everything a subcommand needs, fully validated.
#[derive(Debug)]
pub struct ResolvedRun {
    pub preset: String,
    pub spec: ProblemSpec,
    pub domain: RectDomain,
    pub ccfg: ClassifierConfig,
    pub tcfg: ThresholdConfig,
    pub u0: GridFunction,
    pub mhat_budget: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub init_file: Option<PathBuf>,
    pub init_mode: (usize, usize),
    pub init_scale: f64,
}

impl ResolvedRun {
    /// Echo of every resolved value (defaults included) for the manifest.
    pub fn echo(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            m.insert(format!("config.{k}"), v);
        };
        put("preset", self.preset.clone());
        put("grid.nx", self.domain.nx.to_string());
        put("grid.ny", self.domain.ny.to_string());
        put("grid.lx", self.domain.lx.to_string());
        put("grid.ly", self.domain.ly.to_string());
        put("problem.gamma", self.spec.f.gamma.to_string());
        put("problem.K", self.spec.a.k.to_string());
        put("problem.a0", self.spec.a.a0.to_string());
        put("stepper.dt", self.ccfg.stepper.dt.to_string());
        put("stepper.solver_tol", self.ccfg.stepper.solver_tol.to_string());
        put("classifier.eps_decay", self.ccfg.eps_decay.to_string());
        put("classifier.m_blow", self.ccfg.m_blow.to_string());
        put("classifier.t_max", self.ccfg.t_max.to_string());
        put("classifier.kstar", self.ccfg.kstar.to_string());
        put("threshold.tol_s", self.tcfg.tol_s.to_string());
        put("threshold.max_iters", self.tcfg.max_iters.to_string());
        match &self.init_file {
            Some(p) => put("init.file", p.display().to_string()),
            None => {
                put("init.mode_k", self.init_mode.0.to_string());
                put("init.mode_l", self.init_mode.1.to_string());
                put("init.scale", self.init_scale.to_string());
            }
        }
        put("mhat.budget", self.mhat_budget.to_string());
        put("seed", self.seed.to_string());
        put("output.dir", self.output_dir.display().to_string());
        m
    }
}

/// Arc-wrapping helper so examples can build custom scalar functions tersely.
pub fn scalar(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Arc<dyn Fn(f64) -> f64 + Send + Sync> {
    Arc::new(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_preset_config_fills_defaults() {
        let cfg = RunConfig::from_text("preset = example2\n").unwrap();
        let run = cfg.resolve().unwrap();
        assert_eq!(run.domain.nx, 32);
        assert_eq!(run.spec.f.gamma, 0.2);
        assert_eq!(run.spec.a.k, 1.0);
        assert!(run.ccfg.stepper.dt > 0.0);
        assert_eq!(run.seed, 0);
    }

    #[test]
    fn comments_blank_lines_and_overrides_parse() {
        let text = "
# experiment 12
preset = cubic
grid.nx = 17   # odd grid keeps the center node
grid.ny = 17
init.scale = 50
stepper.dt = 1e-4
";
        let cfg = RunConfig::from_text(text).unwrap();
        let run = cfg.resolve().unwrap();
        assert_eq!(run.domain.nx, 17);
        assert_eq!(run.ccfg.stepper.dt, 1e-4);
        assert_eq!(run.init_scale, 50.0);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = RunConfig::from_text("preset = heat\ngrid.mx = 3\n").unwrap_err();
        match err {
            ConfigError::UnknownKey { key } => assert_eq!(key, "grid.mx"),
            other => panic!("expected unknown-key rejection, got {other}"),
        }
    }

    #[test]
    fn negative_q_hits_the_model_range_check() {
        let mut cfg = RunConfig::from_text("preset = example2\n").unwrap();
        cfg.set("problem.q", "-1").unwrap();
        match cfg.resolve() {
            Err(ConfigError::Model(ModelError::InvalidParameter { name, .. })) => {
                assert_eq!(name, "q")
            }
            other => panic!("expected the q >= 1 range error, got {other:?}"),
        }
    }

    #[test]
    fn exponent_coupling_violation_is_rejected() {
        // tau = 0.9 with xi = 1.7 breaks 2*tau < xi.
        let mut cfg = RunConfig::from_text("preset = example1\n").unwrap();
        cfg.set("problem.tau", "0.9").unwrap();
        cfg.set("problem.xi", "1.7").unwrap();
        match cfg.resolve() {
            Err(ConfigError::Model(ModelError::ExponentCoupling { tau, xi })) => {
                assert_eq!((tau, xi), (0.9, 1.7));
            }
            other => panic!("expected the exponent-coupling rejection, got {other:?}"),
        }
    }

    #[test]
    fn inapplicable_override_is_rejected() {
        let mut cfg = RunConfig::from_text("preset = example2\n").unwrap();
        cfg.set("problem.tau", "0.6").unwrap();
        match cfg.resolve() {
            Err(ConfigError::Inapplicable { key, preset }) => {
                assert_eq!(key, "problem.tau");
                assert_eq!(preset, "example2");
            }
            other => panic!("expected inapplicable-key rejection, got {other:?}"),
        }
    }

    #[test]
    fn set_flag_overrides_file_values() {
        let mut cfg = RunConfig::from_text("preset = heat\ngrid.nx = 9\n").unwrap();
        cfg.apply_set_flag("grid.nx=21").unwrap();
        assert_eq!(cfg.resolve().unwrap().domain.nx, 21);
    }

    #[test]
    fn declared_a0_is_checked_against_the_certified_bound() {
        let mut cfg = RunConfig::from_text("preset = example2\n").unwrap();
        // The sine-bump coefficient certifies a0 = 1 (bump is nonnegative).
        cfg.set("problem.a0", "0.5").unwrap();
        assert!(cfg.resolve().is_ok());
        cfg.set("problem.a0", "1.5").unwrap();
        match cfg.resolve() {
            Err(ConfigError::BadValue { key, .. }) => assert_eq!(key, "problem.a0"),
            other => panic!("expected the a0 validation error, got {other:?}"),
        }
    }

    #[test]
    fn out_of_range_mode_is_rejected() {
        let mut cfg = RunConfig::from_text("preset = heat\ngrid.nx = 5\ngrid.ny = 5\n").unwrap();
        cfg.set("init.mode_k", "9").unwrap();
        match cfg.resolve() {
            Err(ConfigError::BadInit(_)) => {}
            other => panic!("expected mode-range rejection, got {other:?}"),
        }
    }
}
