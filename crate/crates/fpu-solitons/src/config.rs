//! Run configuration: one TOML file, one table per experiment kind.
//!
//! The binary takes a subcommand naming the experiment kind plus the config
//! path; the file must contain the matching table. Unknown keys anywhere are
//! rejected so a typo cannot silently fall back to a default. Output
//! directory and worker count resolve with the most explicit source winning:
//! command-line flag, then `OUTPUT_DIR`/`WORKERS` from the environment, then
//! the `[run]` table, then built-in defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::potential::Potential;
use crate::Result;

/// Experiment kind, one per subcommand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Profile,
    Simulate,
    Construct,
    Decompose,
    Diagnose,
}

impl Kind {
    pub fn parse(s: &str) -> Result<Kind> {
        match s {
            "profile" => Ok(Kind::Profile),
            "simulate" => Ok(Kind::Simulate),
            "construct" => Ok(Kind::Construct),
            "decompose" => Ok(Kind::Decompose),
            "diagnose" => Ok(Kind::Diagnose),
            other => Err(Error::config(format!(
                "unknown subcommand `{other}`; expected one of profile, \
                 simulate, construct, decompose, diagnose"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Kind::Profile => "profile",
            Kind::Simulate => "simulate",
            Kind::Construct => "construct",
            Kind::Decompose => "decompose",
            Kind::Diagnose => "diagnose",
        }
    }
}

fn default_potential() -> String {
    "toda-normalized".to_string()
}

fn default_output_dir() -> String {
    "out".to_string()
}

fn default_tail_tol() -> f64 {
    1e-14
}

fn default_orth_tol() -> f64 {
    1e-9
}

fn default_profile_tol() -> f64 {
    1e-10
}

/// Shared `[run]` table.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    /// `toda-normalized`, `alpha-fpu`, or `quadratic`.
    #[serde(default = "default_potential")]
    pub potential: String,
    #[serde(default = "default_output_dir")]
    pub output_dir: String,
    /// Bounded worker count for concurrent shots; defaults to the machine.
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default = "default_tail_tol")]
    pub tail_tol: f64,
    #[serde(default = "default_orth_tol")]
    pub orth_tol: f64,
    #[serde(default = "default_profile_tol")]
    pub profile_residual_tol: f64,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            potential: default_potential(),
            output_dir: default_output_dir(),
            workers: None,
            tail_tol: default_tail_tol(),
            orth_tol: default_orth_tol(),
            profile_residual_tol: default_profile_tol(),
        }
    }
}

impl RunSection {
    pub fn potential(&self) -> Result<Potential> {
        match self.potential.as_str() {
            "toda-normalized" => Ok(Potential::toda_normalized()),
            "alpha-fpu" => Ok(Potential::AlphaFpu),
            "quadratic" => Ok(Potential::Quadratic),
            other => Err(Error::config(format!(
                "run.potential: unknown potential `{other}`; expected \
                 toda-normalized, alpha-fpu, or quadratic"
            ))),
        }
    }
}

/// `[profile]`: solve one traveling wave and export it.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSection {
    /// Wave speed; give exactly one of `c` and `eps`.
    #[serde(default)]
    pub c: Option<f64>,
    /// Amplitude parameter; `c = 1 + eps^2/6`.
    #[serde(default)]
    pub eps: Option<f64>,
}

/// `[simulate]`: integrate a superposition of waves and record energy.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    pub eps: f64,
    pub k: Vec<f64>,
    pub gamma: Vec<f64>,
    pub t_end: f64,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub observe_every: Option<f64>,
    /// Scaled-separation floor override.
    #[serde(default)]
    pub l0: Option<f64>,
    /// Amplitude ceiling override.
    #[serde(default)]
    pub eps0: Option<f64>,
}

/// `[construct]`: backward-shooting limit over a terminal-time schedule.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstructSection {
    pub eps: f64,
    pub k: Vec<f64>,
    pub gamma: Vec<f64>,
    #[serde(default)]
    pub t_start: f64,
    pub n_schedule: Vec<f64>,
    #[serde(default)]
    pub dt: Option<f64>,
    /// Early-stop tolerance on the pairwise differences; 0 runs the whole
    /// schedule.
    #[serde(default)]
    pub tol: f64,
    /// Scaled-separation floor override.
    #[serde(default)]
    pub l0: Option<f64>,
    /// Amplitude ceiling override.
    #[serde(default)]
    pub eps0: Option<f64>,
    /// When set, integrate the limit forward this far and fit the deviation
    /// from the asymptotic sum.
    #[serde(default)]
    pub forward_horizon: Option<f64>,
    #[serde(default)]
    pub observe_every: Option<f64>,
}

/// `[decompose]`: track modulation parameters along a simulated trajectory.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecomposeSection {
    pub eps: f64,
    pub k: Vec<f64>,
    pub gamma: Vec<f64>,
    pub t_end: f64,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub observe_every: Option<f64>,
    /// Scaled-separation floor override.
    #[serde(default)]
    pub l0: Option<f64>,
    /// Amplitude ceiling override.
    #[serde(default)]
    pub eps0: Option<f64>,
}

/// `[diagnose]`: one named diagnostic experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnoseSection {
    /// `interaction` or `free-decay`.
    pub experiment: String,
    /// Interaction: amplitude parameter of the wave pair.
    #[serde(default)]
    pub eps: Option<f64>,
    /// Interaction: the two scaled speeds.
    #[serde(default)]
    pub k: Option<Vec<f64>>,
    /// Interaction: center separations in sites.
    #[serde(default)]
    pub separations: Option<Vec<f64>>,
    /// Free decay: weight rate.
    #[serde(default)]
    pub a: Option<f64>,
    /// Free decay: frame speed.
    #[serde(default)]
    pub c: Option<f64>,
    /// Free decay: horizon.
    #[serde(default)]
    pub t_end: Option<f64>,
    /// Free decay: step size.
    #[serde(default)]
    pub dt: Option<f64>,
}

/// The whole file; exactly the tables below are legal.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub run: Option<RunSection>,
    #[serde(default)]
    pub profile: Option<ProfileSection>,
    #[serde(default)]
    pub simulate: Option<SimulateSection>,
    #[serde(default)]
    pub construct: Option<ConstructSection>,
    #[serde(default)]
    pub decompose: Option<DecomposeSection>,
    #[serde(default)]
    pub diagnose: Option<DiagnoseSection>,
}

/// A parsed config bound to the experiment kind the caller asked to run.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub run: RunSection,
    pub file: ConfigFile,
    /// Raw file text, echoed into the manifest.
    pub echo: String,
}

impl ExperimentConfig {
    /// Parses `text` and checks that the table named by `kind` is present
    /// and internally consistent. `origin` names the source in errors.
    pub fn from_str(text: &str, origin: &str, kind: Kind) -> Result<ExperimentConfig> {
        let file: ConfigFile = toml::from_str(text)
            .map_err(|e| Error::config(format!("{origin}: {e}")))?;
        let run = file.run.clone().unwrap_or_default();
        run.potential()?;
        let cfg = ExperimentConfig {
            kind,
            run,
            file,
            echo: text.to_string(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, kind: Kind) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::config(format!("cannot read {}: {e}", path.display()))
        })?;
        Self::from_str(&text, &path.display().to_string(), kind)
    }

    fn section_missing(&self, name: &str) -> Error {
        Error::config(format!("missing [{name}] table for the `{name}` subcommand"))
    }

    fn validate(&self) -> Result<()> {
        fn strictly_increasing(k: &[f64]) -> bool {
            k.windows(2).all(|w| w[0] < w[1])
        }
        fn check_wave_lists(key: &str, k: &[f64], gamma: &[f64]) -> Result<()> {
            if k.is_empty() {
                return Err(Error::config(format!("{key}.k: k must be non-empty")));
            }
            if !strictly_increasing(k) {
                return Err(Error::config(format!(
                    "{key}.k: k must be strictly increasing"
                )));
            }
            if k.len() != gamma.len() {
                return Err(Error::config(format!(
                    "{key}.gamma: expected {} entries to match k, got {}",
                    k.len(),
                    gamma.len()
                )));
            }
            Ok(())
        }
        fn positive(key: &str, v: f64) -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(format!("{key}: must be positive, got {v}")))
            }
        }

        match self.kind {
            Kind::Profile => {
                let s = self
                    .file
                    .profile
                    .as_ref()
                    .ok_or_else(|| self.section_missing("profile"))?;
                match (s.c, s.eps) {
                    (Some(c), None) => positive("profile.c", c - 1.0),
                    (None, Some(e)) => positive("profile.eps", e),
                    _ => Err(Error::config(
                        "profile: give exactly one of `c` and `eps`",
                    )),
                }
            }
            Kind::Simulate => {
                let s = self
                    .file
                    .simulate
                    .as_ref()
                    .ok_or_else(|| self.section_missing("simulate"))?;
                check_wave_lists("simulate", &s.k, &s.gamma)?;
                positive("simulate.eps", s.eps)?;
                positive("simulate.t_end", s.t_end)?;
                if let Some(dt) = s.dt {
                    positive("simulate.dt", dt)?;
                }
                if let Some(oe) = s.observe_every {
                    positive("simulate.observe_every", oe)?;
                }
                Ok(())
            }
            Kind::Construct => {
                let s = self
                    .file
                    .construct
                    .as_ref()
                    .ok_or_else(|| self.section_missing("construct"))?;
                check_wave_lists("construct", &s.k, &s.gamma)?;
                positive("construct.eps", s.eps)?;
                if s.n_schedule.is_empty() || !strictly_increasing(&s.n_schedule) {
                    return Err(Error::config(
                        "construct.n_schedule: must be non-empty and strictly increasing",
                    ));
                }
                if s.n_schedule[0] <= s.t_start {
                    return Err(Error::config(format!(
                        "construct.n_schedule: first terminal time {} must \
                         exceed t_start {}",
                        s.n_schedule[0], s.t_start
                    )));
                }
                if let Some(dt) = s.dt {
                    positive("construct.dt", dt)?;
                }
                if let Some(h) = s.forward_horizon {
                    positive("construct.forward_horizon", h)?;
                }
                Ok(())
            }
            Kind::Decompose => {
                let s = self
                    .file
                    .decompose
                    .as_ref()
                    .ok_or_else(|| self.section_missing("decompose"))?;
                check_wave_lists("decompose", &s.k, &s.gamma)?;
                positive("decompose.eps", s.eps)?;
                positive("decompose.t_end", s.t_end)?;
                Ok(())
            }
            Kind::Diagnose => {
                let s = self
                    .file
                    .diagnose
                    .as_ref()
                    .ok_or_else(|| self.section_missing("diagnose"))?;
                match s.experiment.as_str() {
                    "interaction" => {
                        let k = s.k.as_ref().ok_or_else(|| {
                            Error::config("diagnose.k: required for `interaction`")
                        })?;
                        if k.len() != 2 || !(k[0] < k[1]) {
                            return Err(Error::config(
                                "diagnose.k: k must be strictly increasing",
                            ));
                        }
                        positive(
                            "diagnose.eps",
                            s.eps.ok_or_else(|| {
                                Error::config("diagnose.eps: required for `interaction`")
                            })?,
                        )?;
                        let seps = s.separations.as_ref().ok_or_else(|| {
                            Error::config("diagnose.separations: required for `interaction`")
                        })?;
                        if seps.is_empty() || !strictly_increasing(seps) {
                            return Err(Error::config(
                                "diagnose.separations: must be non-empty and strictly increasing",
                            ));
                        }
                        Ok(())
                    }
                    "free-decay" => {
                        positive(
                            "diagnose.a",
                            s.a.ok_or_else(|| {
                                Error::config("diagnose.a: required for `free-decay`")
                            })?,
                        )?;
                        let c = s.c.ok_or_else(|| {
                            Error::config("diagnose.c: required for `free-decay`")
                        })?;
                        positive("diagnose.c", c - 1.0)?;
                        positive(
                            "diagnose.t_end",
                            s.t_end.ok_or_else(|| {
                                Error::config("diagnose.t_end: required for `free-decay`")
                            })?,
                        )
                    }
                    other => Err(Error::config(format!(
                        "diagnose.experiment: unknown experiment `{other}`; \
                         expected interaction or free-decay"
                    ))),
                }
            }
        }
    }

    /// Output directory, most explicit source first: the flag, `OUTPUT_DIR`,
    /// the `[run]` table.
    pub fn output_dir(&self, flag: Option<&Path>) -> PathBuf {
        if let Some(p) = flag {
            return p.to_path_buf();
        }
        if let Ok(v) = std::env::var("OUTPUT_DIR") {
            if !v.is_empty() {
                return PathBuf::from(v);
            }
        }
        PathBuf::from(&self.run.output_dir)
    }

    /// Worker count: `WORKERS`, then the `[run]` table, then the machine.
    pub fn workers(&self) -> Result<usize> {
        if let Ok(v) = std::env::var("WORKERS") {
            if !v.is_empty() {
                let n: usize = v.parse().map_err(|e| {
                    Error::config(format!("WORKERS: {e}"))
                })?;
                if n == 0 {
                    return Err(Error::config("WORKERS: must be at least 1"));
                }
                return Ok(n);
            }
        }
        if let Some(n) = self.run.workers {
            if n == 0 {
                return Err(Error::config("run.workers: must be at least 1"));
            }
            return Ok(n);
        }
        Ok(std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1))
    }
}
