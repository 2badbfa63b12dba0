//! Problem setup and the time loop shared by the CLI, the convergence lab and
//! the validation suite.

use serde::Serialize;

use crate::barenblatt::BarenblattParams;
use crate::diagnostics::{
    check_ab, check_interface_speed, check_linf_lipschitz, AbBound, DiagnosticReport,
    InterfaceSample,
};
use crate::error::{Error, Result};
use crate::hole_filling::{FillingEvent, HoleFillingRun, StepOutcome, Stepper};
use crate::mesh::{build_grid, CflMode, Grid, MeshConfig};
use crate::nonlinearity::{Nonlinearity, NonlinearityKind, StructuralBounds};
use crate::patch::PatchState;

/// Initial pressure of one patch.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    Barenblatt(BarenblattParams),
    /// Piecewise-linear data through `(x, v)`; must vanish at both ends.
    Tabulated {
        x: Vec<f64>,
        v: Vec<f64>,
    },
}

impl Profile {
    pub fn tabulated(x: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if x.len() != v.len() || x.len() < 2 {
            return Err(Error::InvalidParameter(
                "tabulated data needs matching x and v with at least two samples".into(),
            ));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter(
                "tabulated x must be strictly increasing".into(),
            ));
        }
        if v.iter().any(|&y| !(y >= 0.0 && y.is_finite())) {
            return Err(Error::InvalidParameter(
                "tabulated v must be finite and >= 0".into(),
            ));
        }
        if v[0] != 0.0 || v[v.len() - 1] != 0.0 {
            return Err(Error::InvalidParameter(
                "tabulated data must vanish at both ends of its support".into(),
            ));
        }
        Ok(Profile::Tabulated { x, v })
    }

    pub fn support(&self) -> (f64, f64) {
        match self {
            Profile::Barenblatt(p) => p.interfaces(0.0),
            Profile::Tabulated { x, .. } => (x[0], x[x.len() - 1]),
        }
    }

    pub fn eval(&self, at: f64) -> f64 {
        match self {
            Profile::Barenblatt(p) => p.value(at, 0.0),
            Profile::Tabulated { x, v } => {
                if at < x[0] || at > x[x.len() - 1] {
                    return 0.0;
                }
                let i = x.partition_point(|&xi| xi <= at).clamp(1, x.len() - 1);
                let s = (at - x[i - 1]) / (x[i] - x[i - 1]);
                v[i - 1] + s * (v[i] - v[i - 1])
            }
        }
    }

    pub fn max_value(&self) -> f64 {
        match self {
            Profile::Barenblatt(p) => p.max_value(0.0),
            Profile::Tabulated { v, .. } => v.iter().copied().fold(0.0, f64::max),
        }
    }

    pub fn lipschitz(&self) -> f64 {
        match self {
            Profile::Barenblatt(p) => p.lipschitz_bound(0.0),
            Profile::Tabulated { x, v } => x
                .windows(2)
                .zip(v.windows(2))
                .map(|(xs, vs)| ((vs[1] - vs[0]) / (xs[1] - xs[0])).abs())
                .fold(0.0, f64::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub nonlinearity: NonlinearityKind,
    /// Ordered left to right, disjoint supports.
    pub patches: Vec<Profile>,
}

impl Problem {
    pub fn new(nonlinearity: NonlinearityKind, mut patches: Vec<Profile>) -> Result<Self> {
        if patches.is_empty() {
            return Err(Error::InvalidParameter(
                "at least one patch is required".into(),
            ));
        }
        patches.sort_by(|a, b| a.support().0.total_cmp(&b.support().0));
        for pair in patches.windows(2) {
            let (r, l) = (pair[0].support().1, pair[1].support().0);
            if !(l > r) {
                return Err(Error::OverlappingSupports {
                    right_of_left: r,
                    left_of_right: l,
                });
            }
        }
        Ok(Self {
            nonlinearity,
            patches,
        })
    }

    /// Barenblatt patches of the PME with the exponent taken from the params.
    pub fn barenblatt(params: Vec<BarenblattParams>) -> Result<Self> {
        let m = params
            .first()
            .ok_or_else(|| Error::InvalidParameter("at least one patch is required".into()))?
            .m;
        if params.iter().any(|p| p.m != m) {
            return Err(Error::InvalidParameter("all patches must share m".into()));
        }
        let nl = NonlinearityKind::from_name("pme", m, None)?;
        Self::new(nl, params.into_iter().map(Profile::Barenblatt).collect())
    }

    /// `M = max v⁰`.
    pub fn m_bound(&self) -> f64 {
        self.patches
            .iter()
            .map(Profile::max_value)
            .fold(0.0, f64::max)
    }

    /// `γ₀ = Lip(v⁰)`.
    pub fn gamma0(&self) -> f64 {
        self.patches
            .iter()
            .map(Profile::lipschitz)
            .fold(0.0, f64::max)
    }

    pub fn bounds(&self) -> StructuralBounds {
        self.nonlinearity.structural_bounds(self.m_bound())
    }

    pub fn hull(&self) -> (f64, f64) {
        (
            self.patches[0].support().0,
            self.patches[self.patches.len() - 1].support().1,
        )
    }

    /// Exact solutions, when every patch is a Barenblatt profile of this PME.
    pub fn oracle(&self) -> Option<Vec<BarenblattParams>> {
        let m = self.nonlinearity.pme_exponent()?;
        self.patches
            .iter()
            .map(|p| match p {
                Profile::Barenblatt(b) if b.m == m => Some(*b),
                _ => None,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSettings {
    pub dx: f64,
    pub cfl_mode: CflMode,
    pub stepper: Stepper,
    pub horizon: f64,
    /// Snapshot times; the first step at or after each is stored.
    pub snapshot_times: Vec<f64>,
    /// `dt = implicit_ratio * dx / γ₀` for the implicit stepper.
    pub implicit_ratio: f64,
    pub dt_override: Option<f64>,
    pub eps_override: Option<f64>,
    /// Run the pointwise checks after every step.
    pub check_every_step: bool,
    /// Abort on a semiconvexity violation; defaults to "strict mode only".
    pub ab_fatal: Option<bool>,
}

impl RunSettings {
    pub fn new(dx: f64, horizon: f64) -> Self {
        Self {
            dx,
            cfl_mode: CflMode::Relaxed,
            stepper: Stepper::Explicit,
            horizon,
            snapshot_times: uniform_times(horizon, 20.0),
            implicit_ratio: 0.1,
            dt_override: None,
            eps_override: None,
            check_every_step: true,
            ab_fatal: None,
        }
    }

    pub fn with_mode(mut self, mode: CflMode) -> Self {
        self.cfl_mode = mode;
        self
    }

    pub fn with_stepper(mut self, stepper: Stepper) -> Self {
        self.stepper = stepper;
        self
    }

    fn ab_is_fatal(&self) -> bool {
        self.ab_fatal
            .unwrap_or(self.cfl_mode == CflMode::Strict && self.stepper == Stepper::Explicit)
    }
}

/// `0, 1/per_unit, 2/per_unit, ...` up to and including `horizon`.
pub fn uniform_times(horizon: f64, per_unit: f64) -> Vec<f64> {
    let n = (horizon * per_unit).ceil() as usize;
    (0..=n)
        .map(|i| (i as f64 / per_unit).min(horizon))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub t: f64,
    pub zeta_l: f64,
    pub zeta_r: f64,
    /// `(zeta_r of left patch, zeta_l of right patch)` per open hole.
    pub internal: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Snapshot {
    pub requested: f64,
    pub t: f64,
    pub v: Vec<f64>,
}

/// Tally of one check over a whole run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckTally {
    pub check: &'static str,
    pub evaluations: usize,
    pub failures: usize,
    pub worst_margin: f64,
    /// `(step, node)` of the worst violation.
    pub first_failure: Option<(u64, Option<usize>)>,
    pub fatal: bool,
}

impl CheckTally {
    fn new(check: &'static str, fatal: bool) -> Self {
        Self {
            check,
            evaluations: 0,
            failures: 0,
            worst_margin: f64::INFINITY,
            first_failure: None,
            fatal,
        }
    }

    fn record(&mut self, report: &DiagnosticReport, step: u64) -> Result<()> {
        self.evaluations += 1;
        self.worst_margin = self.worst_margin.min(report.worst_margin);
        if !report.passed {
            self.failures += 1;
            let node = report.witness.and_then(|w| w.node);
            if self.first_failure.is_none() {
                self.first_failure = Some((step, node));
            }
            if self.fatal {
                return Err(Error::InvariantBreach {
                    step,
                    check: self.check.to_string(),
                    node,
                    margin: report.worst_margin,
                });
            }
        }
        Ok(())
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsSummary {
    pub linf_lipschitz: CheckTally,
    pub aronson_benilan: CheckTally,
    pub interface_speed: CheckTally,
}

impl DiagnosticsSummary {
    pub fn all_passed(&self) -> bool {
        self.linf_lipschitz.passed()
            && self.aronson_benilan.passed()
            && self.interface_speed.passed()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunOutput {
    pub mesh: MeshConfig,
    pub bounds: StructuralBounds,
    pub ab_bound: AbBound,
    pub settings: RunSettings,
    pub nonlinearity: &'static str,
    pub trace: Vec<TraceRow>,
    pub snapshots: Vec<Snapshot>,
    pub fillings: Vec<FillingEvent>,
    pub diagnostics: DiagnosticsSummary,
    pub steps: u64,
    #[serde(skip)]
    pub final_state: Vec<f64>,
}

impl RunOutput {
    pub fn grid(&self) -> &Grid {
        &self.mesh.grid
    }

    pub fn t_star_h(&self) -> Option<f64> {
        self.fillings.first().map(|f| f.t)
    }

    pub fn x_star_h(&self) -> Option<f64> {
        self.fillings.first().map(|f| f.x)
    }
}

/// Builds the mesh a run would use, without running it.
pub fn plan_mesh(problem: &Problem, settings: &RunSettings) -> Result<MeshConfig> {
    let gamma0 = problem.gamma0();
    let m_bound = problem.m_bound();
    let bounds = problem.bounds();
    let grid = build_grid(problem.hull(), gamma0, settings.horizon, settings.dx)?;
    let mesh = match settings.stepper {
        Stepper::Explicit => {
            MeshConfig::explicit(grid, &bounds, gamma0, m_bound, settings.cfl_mode)?
        }
        Stepper::Implicit => {
            MeshConfig::implicit(grid, &bounds, gamma0, m_bound, settings.implicit_ratio)?
        }
    };
    mesh.with_overrides(settings.dt_override, settings.eps_override)
}

/// Runs a problem to `settings.horizon`.
pub fn run(problem: &Problem, settings: &RunSettings) -> Result<RunOutput> {
    if !(settings.horizon > 0.0) {
        return Err(Error::InvalidParameter("horizon must be > 0".into()));
    }
    let mesh = plan_mesh(problem, settings)?;
    let bounds = problem.bounds();
    let ab_bound = AbBound::new(&bounds, mesh.gamma0);
    let nl = problem.nonlinearity;

    let states = problem
        .patches
        .iter()
        .map(|p| PatchState::init(mesh.grid, p.support(), |x| p.eval(x)))
        .collect::<Result<Vec<_>>>()?;
    let mut run = HoleFillingRun::new(states)?;

    // Slope and speed bounds are only guaranteed for the explicit scheme.
    let proven = settings.stepper == Stepper::Explicit;
    let mut diagnostics = DiagnosticsSummary {
        linf_lipschitz: CheckTally::new("linf_lipschitz", proven),
        aronson_benilan: CheckTally::new("aronson_benilan", settings.ab_is_fatal()),
        interface_speed: CheckTally::new("interface_speed", proven),
    };

    let mut snapshot_times = settings.snapshot_times.clone();
    snapshot_times.sort_by(f64::total_cmp);
    let mut next_snapshot = 0;
    let mut snapshots = Vec::new();
    let mut trace = Vec::new();

    let record = |run: &HoleFillingRun,
                  trace: &mut Vec<TraceRow>,
                  snapshots: &mut Vec<Snapshot>,
                  next_snapshot: &mut usize,
                  diagnostics: &mut DiagnosticsSummary|
     -> Result<()> {
        let t = run.t();
        let (zeta_l, zeta_r) = run.external_interfaces();
        trace.push(TraceRow {
            t,
            zeta_l,
            zeta_r,
            internal: run.internal_interfaces(),
        });
        let due = *next_snapshot < snapshot_times.len()
            && t >= snapshot_times[*next_snapshot] - 1e-9 * mesh.dt;
        if settings.check_every_step || due {
            let v = run.combined();
            let report = check_linf_lipschitz(&v, mesh.dx, mesh.m_bound, mesh.gamma0);
            diagnostics.linf_lipschitz.record(&report, run.n())?;
            if t > 0.0 {
                let report = check_ab(&v, mesh.dx, t, &ab_bound)?;
                diagnostics.aronson_benilan.record(&report, run.n())?;
            }
            while *next_snapshot < snapshot_times.len()
                && t >= snapshot_times[*next_snapshot] - 1e-9 * mesh.dt
            {
                snapshots.push(Snapshot {
                    requested: snapshot_times[*next_snapshot],
                    t,
                    v: v.clone(),
                });
                *next_snapshot += 1;
            }
        }
        Ok(())
    };

    record(
        &run,
        &mut trace,
        &mut snapshots,
        &mut next_snapshot,
        &mut diagnostics,
    )?;
    let target_steps = (settings.horizon / mesh.dt - 1e-9).ceil().max(0.0) as u64;
    while run.n() < target_steps {
        match run.step(&mesh, &nl, settings.stepper)? {
            StepOutcome::Advanced => record(
                &run,
                &mut trace,
                &mut snapshots,
                &mut next_snapshot,
                &mut diagnostics,
            )?,
            StepOutcome::Merged => {}
        }
    }

    let speed = speed_report(&trace, mesh.gamma0);
    diagnostics.interface_speed.record(&speed, run.n())?;

    Ok(RunOutput {
        mesh,
        bounds,
        ab_bound,
        settings: settings.clone(),
        nonlinearity: nl.name(),
        steps: run.n(),
        trace,
        snapshots,
        fillings: run.fillings().to_vec(),
        diagnostics,
        final_state: run.combined(),
    })
}

/// Speed/monotonicity over external interfaces and, while they exist, over
/// each internal pair.
fn speed_report(trace: &[TraceRow], gamma0: f64) -> DiagnosticReport {
    let external: Vec<InterfaceSample> = trace
        .iter()
        .map(|r| InterfaceSample {
            t: r.t,
            zeta_l: r.zeta_l,
            zeta_r: r.zeta_r,
        })
        .collect();
    let mut worst = check_interface_speed(&external, gamma0);
    let holes = trace.first().map_or(0, |r| r.internal.len());
    for hole in 0..holes {
        // An internal pair behaves like a hole: its left edge (zeta_r of the
        // left patch) moves right and its right edge moves left.
        let internal: Vec<InterfaceSample> = trace
            .iter()
            .take_while(|r| r.internal.len() == holes)
            .map(|r| InterfaceSample {
                t: r.t,
                zeta_l: r.internal[hole].1,
                zeta_r: r.internal[hole].0,
            })
            .collect();
        let report = check_interface_speed(&internal, gamma0);
        if report.worst_margin < worst.worst_margin {
            worst = report;
        }
    }
    worst
}
