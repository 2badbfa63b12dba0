//! Several disjoint patches evolving on one grid until their supports merge.
//!
//! Each step first predicts every patch independently. If every predicted
//! gap between neighbouring patches stays wider than `dx` the prediction is
//! committed; otherwise it is discarded, the numerical filling time is the
//! current time, and the touching patches are merged by taking the nodewise
//! maximum of their current states. Once a single patch is left the run is
//! an ordinary one-patch computation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::MeshConfig;
use crate::nonlinearity::Nonlinearity;
use crate::patch::{step_explicit, step_implicit, PatchState, StepReport};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stepper {
    #[default]
    Explicit,
    Implicit,
}

impl std::str::FromStr for Stepper {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "explicit" => Ok(Stepper::Explicit),
            "implicit" => Ok(Stepper::Implicit),
            other => Err(Error::InvalidParameter(format!(
                "unknown stepper {other:?} (expected \"explicit\" or \"implicit\")"
            ))),
        }
    }
}

impl Stepper {
    pub fn step(
        self,
        state: &PatchState,
        mesh: &MeshConfig,
        nl: &dyn Nonlinearity,
    ) -> Result<StepReport> {
        match self {
            Stepper::Explicit => step_explicit(state, mesh, nl),
            Stepper::Implicit => step_implicit(state, mesh, nl),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Phase {
    TwoPatches,
    Merged,
}

/// A detected merge of two neighbouring supports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FillingEvent {
    /// Time of the last committed step before the merge.
    pub t: f64,
    pub step: u64,
    /// Midpoint of the two internal interfaces at `t`.
    pub x: f64,
    /// Internal interfaces at `t`.
    pub zeta_left_r: f64,
    pub zeta_right_l: f64,
}

impl FillingEvent {
    pub fn gap(&self) -> f64 {
        self.zeta_right_l - self.zeta_left_r
    }
}

/// What a call to [`HoleFillingRun::step`] did.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    Advanced,
    /// Patches were merged; time did not advance.
    Merged,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HoleFillingRun {
    patches: Vec<PatchState>,
    fillings: Vec<FillingEvent>,
}

impl HoleFillingRun {
    /// Patches ordered left to right, all on one grid, at positive distance.
    pub fn new(mut patches: Vec<PatchState>) -> Result<Self> {
        if patches.is_empty() {
            return Err(Error::InvalidParameter(
                "at least one patch is required".into(),
            ));
        }
        patches.sort_by(|a, b| a.zeta_l.total_cmp(&b.zeta_l));
        let grid = *patches[0].grid();
        for pair in patches.windows(2) {
            if pair[1].grid() != &grid {
                return Err(Error::InvalidParameter(
                    "patches must share one grid".into(),
                ));
            }
            if !(pair[1].zeta_l > pair[0].zeta_r) {
                return Err(Error::OverlappingSupports {
                    right_of_left: pair[0].zeta_r,
                    left_of_right: pair[1].zeta_l,
                });
            }
        }
        Ok(Self {
            patches,
            fillings: Vec::new(),
        })
    }

    pub fn init_two_patch(hat: PatchState, check: PatchState) -> Result<Self> {
        Self::new(vec![hat, check])
    }

    pub fn phase(&self) -> Phase {
        if self.patches.len() > 1 {
            Phase::TwoPatches
        } else {
            Phase::Merged
        }
    }

    pub fn patches(&self) -> &[PatchState] {
        &self.patches
    }

    /// The merged patch, once there is only one.
    pub fn merged(&self) -> Option<&PatchState> {
        (self.patches.len() == 1).then(|| &self.patches[0])
    }

    pub fn fillings(&self) -> &[FillingEvent] {
        &self.fillings
    }

    /// Numerical filling time of the first merge.
    pub fn t_star_h(&self) -> Option<f64> {
        self.fillings.first().map(|f| f.t)
    }

    pub fn x_star_h(&self) -> Option<f64> {
        self.fillings.first().map(|f| f.x)
    }

    pub fn t(&self) -> f64 {
        self.patches[0].t
    }

    pub fn n(&self) -> u64 {
        self.patches[0].n
    }

    pub fn external_interfaces(&self) -> (f64, f64) {
        (
            self.patches[0].zeta_l,
            self.patches[self.patches.len() - 1].zeta_r,
        )
    }

    /// `(zeta_r of patch i, zeta_l of patch i+1)` for every open hole.
    pub fn internal_interfaces(&self) -> Vec<(f64, f64)> {
        self.patches
            .windows(2)
            .map(|p| (p[0].zeta_r, p[1].zeta_l))
            .collect()
    }

    /// Nodewise maximum over all patches.
    pub fn combined(&self) -> Vec<f64> {
        let mut v = self.patches[0].v.clone();
        for p in &self.patches[1..] {
            for (a, b) in v.iter_mut().zip(&p.v) {
                *a = a.max(*b);
            }
        }
        v
    }

    pub fn step(
        &mut self,
        mesh: &MeshConfig,
        nl: &dyn Nonlinearity,
        stepper: Stepper,
    ) -> Result<StepOutcome> {
        match self.phase() {
            Phase::TwoPatches => self.step_run(mesh, nl, stepper),
            Phase::Merged => self
                .step_merged(mesh, nl, stepper)
                .map(|_| StepOutcome::Advanced),
        }
    }

    /// Predict-and-test step while at least one hole is open.
    pub fn step_run(
        &mut self,
        mesh: &MeshConfig,
        nl: &dyn Nonlinearity,
        stepper: Stepper,
    ) -> Result<StepOutcome> {
        if self.patches.len() < 2 {
            return Err(Error::InvalidParameter("no open hole left".into()));
        }
        let predicted = self
            .patches
            .iter()
            .map(|p| stepper.step(p, mesh, nl).map(|r| r.state))
            .collect::<Result<Vec<_>>>()?;
        let closing: Vec<bool> = predicted
            .windows(2)
            .map(|p| !(p[1].zeta_l - p[0].zeta_r > mesh.dx))
            .collect();
        if !closing.iter().any(|&c| c) {
            self.patches = predicted;
            return Ok(StepOutcome::Advanced);
        }

        let old = std::mem::take(&mut self.patches);
        let mut merged: Vec<PatchState> = Vec::with_capacity(old.len());
        for (i, patch) in old.into_iter().enumerate() {
            if i > 0 && closing[i - 1] {
                let left = merged.last_mut().expect("left neighbour exists");
                self.fillings.push(FillingEvent {
                    t: left.t,
                    step: left.n,
                    x: 0.5 * (left.zeta_r + patch.zeta_l),
                    zeta_left_r: left.zeta_r,
                    zeta_right_l: patch.zeta_l,
                });
                for (a, b) in left.v.iter_mut().zip(&patch.v) {
                    *a = a.max(*b);
                }
                left.zeta_r = patch.zeta_r;
            } else {
                merged.push(patch);
            }
        }
        self.patches = merged;
        Ok(StepOutcome::Merged)
    }

    /// One-patch step after every hole has filled.
    pub fn step_merged(
        &mut self,
        mesh: &MeshConfig,
        nl: &dyn Nonlinearity,
        stepper: Stepper,
    ) -> Result<StepReport> {
        if self.patches.len() != 1 {
            return Err(Error::InvalidParameter("holes are still open".into()));
        }
        let report = stepper.step(&self.patches[0], mesh, nl)?;
        self.patches[0] = report.state.clone();
        Ok(report)
    }
}
