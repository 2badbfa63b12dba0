//! Run configuration read from TOML.
//!
//! ```toml
//! problem = "two_patch"
//! init = "oracle"
//! dx = 0.01
//! horizon = 1.1
//! nonlinearity = { name = "pme", m = 2.0 }
//!
//! [[oracle]]
//! c = 0.6666666666666666
//! x0 = 0.0
//! t0 = 1.0
//! ```

use std::path::PathBuf;

use gpme_core::simulation::uniform_times;
use gpme_core::{
    BarenblattParams, CflMode, NonlinearityKind, Problem, Profile, RunSettings, Stepper,
};
use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    SinglePatch,
    TwoPatch,
}

impl ProblemKind {
    fn patches(self) -> usize {
        match self {
            ProblemKind::SinglePatch => 1,
            ProblemKind::TwoPatch => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    Oracle,
    Samples,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearitySpec {
    pub name: String,
    pub m: f64,
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSpec {
    pub c: f64,
    pub x0: f64,
    pub t0: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleSpec {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub nonlinearity: NonlinearitySpec,
    pub problem: ProblemKind,
    pub init: InitKind,
    #[serde(default)]
    pub oracle: Vec<OracleSpec>,
    #[serde(default)]
    pub samples: Vec<SampleSpec>,
    pub dx: f64,
    #[serde(default)]
    pub cfl_mode: CflMode,
    pub horizon: f64,
    pub snapshot_times: Option<Vec<f64>>,
    pub snapshot_every: Option<f64>,
    #[serde(default)]
    pub stepper: Stepper,
    pub implicit_ratio: Option<f64>,
    pub dt: Option<f64>,
    pub eps: Option<f64>,
    pub output_dir: Option<PathBuf>,
}

/// A configuration that has passed every check and is ready to run.
#[derive(Debug, Clone)]
pub struct Validated {
    pub problem: Problem,
    pub kind: ProblemKind,
    pub settings: RunSettings,
    pub output_dir: Option<PathBuf>,
}

fn positive(name: &str, value: f64) -> Result<f64, String> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(format!("{name} must be a positive number, got {value}"))
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| format!("invalid config: {e}"))
    }

    pub fn validate(&self) -> Result<Validated, String> {
        let dx = positive("dx", self.dx)?;
        let horizon = positive("horizon", self.horizon)?;
        let nl = &self.nonlinearity;
        let kind =
            NonlinearityKind::from_name(&nl.name, nl.m, nl.alpha).map_err(|e| e.to_string())?;
        if nl.alpha.is_some() && nl.name == "pme" {
            return Err("alpha is only used by perturbed_pme".into());
        }

        let expected = self.problem.patches();
        let patches = match self.init {
            InitKind::Oracle => {
                if !self.samples.is_empty() {
                    return Err("init = \"oracle\" does not take [[samples]]".into());
                }
                if self.oracle.len() != expected {
                    return Err(format!(
                        "problem needs {expected} [[oracle]] entries, found {}",
                        self.oracle.len()
                    ));
                }
                self.oracle
                    .iter()
                    .map(|o| {
                        BarenblattParams::new(nl.m, o.c, o.x0, o.t0)
                            .map(Profile::Barenblatt)
                            .map_err(|e| e.to_string())
                    })
                    .collect::<Result<Vec<_>, _>>()?
            }
            InitKind::Samples => {
                if !self.oracle.is_empty() {
                    return Err("init = \"samples\" does not take [[oracle]]".into());
                }
                if self.samples.len() != expected {
                    return Err(format!(
                        "problem needs {expected} [[samples]] entries, found {}",
                        self.samples.len()
                    ));
                }
                self.samples
                    .iter()
                    .map(|s| {
                        Profile::tabulated(s.x.clone(), s.v.clone()).map_err(|e| e.to_string())
                    })
                    .collect::<Result<Vec<_>, _>>()?
            }
        };
        let problem = Problem::new(kind, patches).map_err(|e| e.to_string())?;

        let snapshot_times = match (&self.snapshot_times, self.snapshot_every) {
            (Some(_), Some(_)) => {
                return Err("give snapshot_times or snapshot_every, not both".into());
            }
            (Some(times), None) => {
                if times.iter().any(|&t| !(t >= 0.0 && t <= horizon)) {
                    return Err(format!("snapshot times must lie in [0, {horizon}]"));
                }
                times.clone()
            }
            (None, every) => {
                let every = positive("snapshot_every", every.unwrap_or(0.05))?;
                uniform_times(horizon, 1.0 / every)
            }
        };

        let mut settings = RunSettings::new(dx, horizon);
        settings.cfl_mode = self.cfl_mode;
        settings.stepper = self.stepper;
        settings.snapshot_times = snapshot_times;
        if let Some(ratio) = self.implicit_ratio {
            settings.implicit_ratio = positive("implicit_ratio", ratio)?;
        }
        settings.dt_override = self.dt.map(|v| positive("dt", v)).transpose()?;
        settings.eps_override = self.eps.map(|v| positive("eps", v)).transpose()?;

        Ok(Validated {
            problem,
            kind: self.problem,
            settings,
            output_dir: self.output_dir.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
        problem = "single_patch"
        init = "oracle"
        dx = 0.02
        horizon = 1.0
        nonlinearity = { name = "pme", m = 2.0 }

        [[oracle]]
        c = 0.6666666666666666
        x0 = 0.0
        t0 = 1.0
    "#;

    #[test]
    fn minimal_config() {
        let v = RunConfig::parse(BASE).unwrap().validate().unwrap();
        assert_eq!(v.settings.cfl_mode, CflMode::Relaxed);
        assert_eq!(v.settings.stepper, Stepper::Explicit);
        assert_eq!(v.settings.snapshot_times.len(), 21);
        assert!(v.problem.oracle().is_some());
    }

    #[test]
    fn dotted_keys_accepted() {
        let text = BASE.replace(
            "nonlinearity = { name = \"pme\", m = 2.0 }",
            "nonlinearity.name = \"pme\"\nnonlinearity.m = 2.0",
        );
        assert!(RunConfig::parse(&text).unwrap().validate().is_ok());
    }

    #[test]
    fn shipped_configs_validate() {
        for text in [
            include_str!("../../../configs/two_patch.toml"),
            include_str!("../../../configs/single_patch.toml"),
            include_str!("../../../configs/perturbed_tent.toml"),
        ] {
            RunConfig::parse(text).unwrap().validate().unwrap();
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::parse(&format!("colour = \"red\"\n{BASE}")).is_err());
        let text = BASE.replace("t0 = 1.0", "t0 = 1.0\nmass = 2.0");
        assert!(RunConfig::parse(&text).is_err());
    }

    #[test]
    fn inconsistent_configs_rejected() {
        let two = BASE.replace("single_patch", "two_patch");
        assert!(RunConfig::parse(&two).unwrap().validate().is_err());
        let both = format!("snapshot_every = 0.1\nsnapshot_times = [0.5]\n{BASE}");
        assert!(RunConfig::parse(&both).unwrap().validate().is_err());
        let bad_dx = BASE.replace("dx = 0.02", "dx = -1.0");
        assert!(RunConfig::parse(&bad_dx).unwrap().validate().is_err());
        let late = format!("snapshot_times = [2.0]\n{BASE}");
        assert!(RunConfig::parse(&late).unwrap().validate().is_err());
    }
}
