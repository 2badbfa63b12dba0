//! Desk-scale acceptance checks, shared by the `validate` command and the
//! acceptance test target.

use std::fmt;

use serde::Serialize;

use crate::barenblatt::{exact_filling, BarenblattParams, DEFAULT_T_MAX};
use crate::convergence::{refinement_series, Metric, Series};
use crate::diagnostics::{ab_lower_bound, ab_ode_relative_residual, AbBound};
use crate::error::Result;
use crate::hole_filling::Stepper;
use crate::mesh::CflMode;
use crate::nonlinearity::{Nonlinearity, NonlinearityKind};
use crate::simulation::{run, Problem, Profile, RunOutput, RunSettings};

/// Filling time and place of the reference run at `dx = 0.01`, relaxed CFL.
pub const ANCHOR_T_STAR_H: f64 = 1.003374384236453;
pub const ANCHOR_X_STAR_H: f64 = 2.5217497864007514;
/// Earlier reported filling time and place for the same configuration.
pub const REPORTED_T_STAR_H: f64 = 1.0205;
pub const REPORTED_X_STAR_H: f64 = 2.5236;

const T_WINDOW: f64 = 0.05;
const X_WINDOW: f64 = 0.02;
/// Rounded exact filling location used for the window.
const X_STAR_ROUNDED: f64 = 2.5198;
const ANCHOR_TOL: f64 = 1e-9;
const TWO_PATCH_HORIZON: f64 = 1.1;
const SERIES: [f64; 3] = [0.04, 0.02, 0.01];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Outcome {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{status}] {}. {}: {}", self.id, self.name, self.detail)
    }
}

fn outcome(id: u8, name: &'static str, body: impl FnOnce() -> Result<(bool, String)>) -> Outcome {
    match body() {
        Ok((passed, detail)) => Outcome {
            id,
            name,
            passed,
            detail,
        },
        Err(e) => Outcome {
            id,
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

/// The two-patch reference configuration.
pub fn two_patch_pair() -> (BarenblattParams, BarenblattParams) {
    let hat = BarenblattParams {
        m: 2.0,
        amplitude: 4.0 / 6.0,
        x0: 0.0,
        t0: 1.0,
    };
    let check = BarenblattParams {
        m: 2.0,
        amplitude: 1.0 / 6.0,
        x0: 3.0 * 2f64.cbrt(),
        t0: 1.0,
    };
    (hat, check)
}

pub fn two_patch_problem() -> Result<Problem> {
    let (hat, check) = two_patch_pair();
    Problem::barenblatt(vec![hat, check])
}

pub fn single_patch_problem() -> Result<Problem> {
    Problem::barenblatt(vec![two_patch_pair().0])
}

fn relaxed(dx: f64, horizon: f64) -> RunSettings {
    let mut s = RunSettings::new(dx, horizon);
    s.ab_fatal = Some(false);
    s
}

fn describe(series: &Series, metric: Metric) -> String {
    let values: Vec<String> = series
        .records
        .iter()
        .map(|r| metric.of(r).map_or("-".into(), |v| format!("{v:.3e}")))
        .collect();
    let alpha = series
        .fit(metric)
        .map_or("-".into(), |f| format!("{:.3}", f.alpha));
    format!(
        "{} = [{}] alpha = {alpha}",
        metric.name(),
        values.join(", ")
    )
}

fn decreasing_with_rate(series: &Series, metric: Metric, min_alpha: f64, strict: bool) -> bool {
    let rate_ok = series.fit(metric).is_some_and(|f| {
        if strict {
            f.alpha > min_alpha
        } else {
            f.alpha >= min_alpha
        }
    });
    series.strictly_decreasing(metric) && rate_ok
}

fn run_clean(output: &RunOutput) -> (bool, String) {
    let d = &output.diagnostics;
    let ok = d.all_passed();
    let detail = format!(
        "{} steps; violations: bounds/slope {}, semiconvexity {}, interfaces {}; \
         worst margins {:.2e}, {:.2e}, {:.2e}",
        output.steps,
        d.linf_lipschitz.failures,
        d.aronson_benilan.failures,
        d.interface_speed.failures,
        d.linf_lipschitz.worst_margin,
        d.aronson_benilan.worst_margin,
        d.interface_speed.worst_margin,
    );
    (ok, detail)
}

/// 1. Filling time and place of the two-patch run at `dx = 0.01`.
pub fn hole_filling_reproduction() -> Outcome {
    outcome(1, "hole-filling reproduction", || {
        let out = run(&two_patch_problem()?, &relaxed(0.01, TWO_PATCH_HORIZON))?;
        let (Some(t), Some(x)) = (out.t_star_h(), out.x_star_h()) else {
            return Ok((false, "no filling detected".into()));
        };
        let inside =
            |t: f64, x: f64| (t - 1.0).abs() <= T_WINDOW && (x - X_STAR_ROUNDED).abs() <= X_WINDOW;
        let anchored =
            (t - ANCHOR_T_STAR_H).abs() <= ANCHOR_TOL && (x - ANCHOR_X_STAR_H).abs() <= ANCHOR_TOL;
        let passed = inside(t, x) && inside(REPORTED_T_STAR_H, REPORTED_X_STAR_H) && anchored;
        Ok((
            passed,
            format!(
                "T*_h = {t:.6}, x*_h = {x:.6} (reported {REPORTED_T_STAR_H}, {REPORTED_X_STAR_H}; \
                 anchors {})",
                if anchored { "match" } else { "differ" }
            ),
        ))
    })
}

/// 2. Filling time and place converge under refinement.
pub fn filling_convergence() -> Outcome {
    outcome(2, "filling-time convergence", || {
        let series = refinement_series(
            &two_patch_problem()?,
            &relaxed(SERIES[0], TWO_PATCH_HORIZON),
            &SERIES,
        )?;
        let passed = decreasing_with_rate(&series, Metric::ET, 0.0, true)
            && decreasing_with_rate(&series, Metric::EX, 0.0, true);
        Ok((
            passed,
            format!(
                "{}; {}",
                describe(&series, Metric::ET),
                describe(&series, Metric::EX)
            ),
        ))
    })
}

/// 3. Single Barenblatt patch to `T = 2`.
pub fn single_patch_accuracy() -> Outcome {
    outcome(3, "single-patch accuracy", || {
        let series =
            refinement_series(&single_patch_problem()?, &relaxed(SERIES[0], 2.0), &SERIES)?;
        let passed = series.strictly_decreasing(Metric::EV)
            && decreasing_with_rate(&series, Metric::EZeta, 0.5, false);
        Ok((
            passed,
            format!(
                "{}; {}",
                describe(&series, Metric::EV),
                describe(&series, Metric::EZeta)
            ),
        ))
    })
}

fn strict_suite(problem: &Problem) -> Result<(bool, String)> {
    let settings = RunSettings::new(0.02, 2.0).with_mode(CflMode::Strict);
    let out = run(problem, &settings)?;
    Ok(run_clean(&out))
}

/// 4. Every invariant at every step under strict CFL.
pub fn invariant_suite() -> Outcome {
    outcome(4, "invariant suite (strict CFL)", || {
        strict_suite(&single_patch_problem()?)
    })
}

/// 5. The closed-form semiconvexity bound solves its ODE.
pub fn ab_bound_construction() -> Outcome {
    outcome(5, "semiconvexity bound construction", || {
        let times: Vec<f64> = (0..100)
            .map(|i| 10f64.powf(-3.0 + 6.0 * i as f64 / 99.0))
            .collect();
        let mut worst: f64 = 0.0;
        for (lambda, c) in [(0.0, 3.0), (1.0, 3.0), (0.5, 3.5)] {
            for &t in &times {
                worst = worst.max(ab_ode_relative_residual(lambda, c, t)?);
            }
        }
        let pme = NonlinearityKind::from_name("pme", 2.0, None)?;
        let single = single_patch_problem()?;
        let bound = AbBound::new(&pme.structural_bounds(single.m_bound()), single.gamma0());
        let mut exact = bound.lambda == 0.0 && bound.c == 3.0;
        for &t in &times {
            exact &= bound.value(t)? == -1.0 / (3.0 * t)
                && ab_lower_bound(0.0, 3.0, t)? == -1.0 / (3.0 * t);
        }
        Ok((
            worst <= 1e-8 && exact,
            format!("worst relative residual {worst:.2e}; m = 2 bound equals -1/(3t): {exact}"),
        ))
    })
}

/// 6. Barenblatt profiles solve the PDE and the filling formula is right.
pub fn oracle_self_consistency() -> Outcome {
    outcome(6, "oracle self-consistency", || {
        let (hat, check) = two_patch_pair();
        let third = BarenblattParams::new(3.0, 0.4, 0.5, 0.7)?;
        let patches = [hat, check, third];
        let h = 1e-4;
        let mut worst: f64 = 0.0;
        // Deterministic low-discrepancy sample of (patch, t, x).
        let golden = (5f64.sqrt() - 1.0) / 2.0;
        let plastic = 0.754_877_666_246_692_7;
        for i in 0..1000 {
            let p = &patches[i % patches.len()];
            let t = 0.05 + 2.0 * ((i as f64 * golden) % 1.0);
            let (l, r) = p.interfaces(t);
            let x = l + (r - l) * (0.05 + 0.9 * ((i as f64 * plastic) % 1.0));
            let vt = (p.value(x, t + h) - p.value(x, t - h)) / (2.0 * h);
            let vx = (p.value(x + h, t) - p.value(x - h, t)) / (2.0 * h);
            let vxx = (p.value(x + h, t) - 2.0 * p.value(x, t) + p.value(x - h, t)) / (h * h);
            let residual = vt - (p.m - 1.0) * p.value(x, t) * vxx - vx * vx;
            worst = worst.max(residual.abs());
        }
        let (t, x) = exact_filling(&hat, &check, DEFAULT_T_MAX)?;
        let (et, ex) = ((t - 1.0).abs(), (x - 2.0 * 2f64.cbrt()).abs());
        Ok((
            worst <= 1e-6 && et <= 1e-10 && ex <= 1e-10,
            format!("worst PDE residual {worst:.2e}; filling error ({et:.1e}, {ex:.1e})"),
        ))
    })
}

/// 7. Implicit and explicit steppers agree to within a small factor.
pub fn stepper_cross_check() -> Outcome {
    outcome(7, "stepper cross-check", || {
        let problem = single_patch_problem()?;
        let levels = [0.02, 0.01, 0.005];
        let explicit = refinement_series(&problem, &relaxed(0.02, 1.0), &levels)?;
        let implicit = refinement_series(
            &problem,
            &relaxed(0.02, 1.0).with_stepper(Stepper::Implicit),
            &levels,
        )?;
        let (ee, ie) = (explicit.records[0].e_v, implicit.records[0].e_v);
        let passed = ie <= 5.0 * ee && implicit.strictly_decreasing(Metric::EV);
        Ok((
            passed,
            format!(
                "explicit E_v {ee:.3e}; implicit {}",
                describe(&implicit, Metric::EV)
            ),
        ))
    })
}

/// 8. The perturbed nonlinearity keeps every invariant under strict CFL.
pub fn generalized_nonlinearity() -> Outcome {
    outcome(8, "perturbed nonlinearity smoke test", || {
        let nl = NonlinearityKind::from_name("perturbed_pme", 2.0, Some(0.5))?;
        let problem = Problem::new(nl, vec![Profile::Barenblatt(two_patch_pair().0)])?;
        strict_suite(&problem)
    })
}

/// All criteria, in order.
pub fn run_all() -> Vec<Outcome> {
    let checks: [fn() -> Outcome; 8] = [
        hole_filling_reproduction,
        filling_convergence,
        single_patch_accuracy,
        invariant_suite,
        ab_bound_construction,
        oracle_self_consistency,
        stepper_cross_check,
        generalized_nonlinearity,
    ];
    std::thread::scope(|scope| {
        let handles: Vec<_> = checks.iter().map(|c| scope.spawn(c)).collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("criterion panicked"))
            .collect()
    })
}
