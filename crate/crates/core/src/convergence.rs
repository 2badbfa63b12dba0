//! Error metrics against Barenblatt references and mesh-refinement series.

use serde::Serialize;

use crate::barenblatt::{exact_filling, BarenblattParams, DEFAULT_T_MAX};
use crate::error::{Error, Result};
use crate::simulation::{run, Problem, RunOutput, RunSettings};

/// Fewest snapshots per unit time accepted by [`measure_errors`].
pub const MIN_SNAPSHOTS_PER_UNIT: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorRecord {
    pub dx: f64,
    pub e_v: f64,
    pub e_zeta: f64,
    pub e_x: Option<f64>,
    pub e_t: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    EV,
    EZeta,
    EX,
    ET,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::EV => "E_v",
            Metric::EZeta => "E_zeta",
            Metric::EX => "E_x",
            Metric::ET => "E_t",
        }
    }

    pub fn of(self, r: &ErrorRecord) -> Option<f64> {
        match self {
            Metric::EV => Some(r.e_v),
            Metric::EZeta => Some(r.e_zeta),
            Metric::EX => r.e_x,
            Metric::ET => r.e_t,
        }
    }
}

/// `log E ≈ intercept + alpha log dx`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFit {
    pub metric: Metric,
    pub alpha: f64,
    pub intercept: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Series {
    pub records: Vec<ErrorRecord>,
    pub fits: Vec<RateFit>,
}

impl Series {
    pub fn fit(&self, metric: Metric) -> Option<&RateFit> {
        self.fits.iter().find(|f| f.metric == metric)
    }

    /// Whether `metric` shrinks strictly with every refinement.
    pub fn strictly_decreasing(&self, metric: Metric) -> bool {
        let values: Option<Vec<f64>> = self.records.iter().map(|r| metric.of(r)).collect();
        values.is_some_and(|v| v.windows(2).all(|w| w[1] < w[0]))
    }
}

/// Exact state of a multi-patch Barenblatt problem, valid until the first
/// exact filling.
struct Reference<'a> {
    patches: &'a [BarenblattParams],
    filling: Option<(f64, f64)>,
}

impl<'a> Reference<'a> {
    fn new(patches: &'a [BarenblattParams]) -> Result<Self> {
        if patches.is_empty() {
            return Err(Error::MissingOracle);
        }
        let mut filling: Option<(f64, f64)> = None;
        for pair in patches.windows(2) {
            match exact_filling(&pair[0], &pair[1], DEFAULT_T_MAX) {
                Ok(f) if filling.is_none_or(|g| f.0 < g.0) => filling = Some(f),
                Ok(_) | Err(Error::NoCrossing { .. }) => {}
                Err(e) => return Err(e),
            }
        }
        Ok(Self { patches, filling })
    }

    fn value(&self, x: f64, t: f64) -> f64 {
        self.patches
            .iter()
            .map(|p| p.value(x, t))
            .fold(0.0, f64::max)
    }

    fn external(&self, t: f64) -> (f64, f64) {
        (
            self.patches[0].interfaces(t).0,
            self.patches[self.patches.len() - 1].interfaces(t).1,
        )
    }

    fn internal(&self, t: f64) -> Vec<(f64, f64)> {
        self.patches
            .windows(2)
            .map(|p| (p[0].interfaces(t).1, p[1].interfaces(t).0))
            .collect()
    }
}

fn check_cadence(times: &[f64], t_end: f64) -> Result<()> {
    let max_gap = 1.0 / MIN_SNAPSHOTS_PER_UNIT + 1e-12;
    let mut prev = 0.0;
    for &t in times.iter().filter(|&&t| t <= t_end) {
        if t - prev > max_gap {
            return Err(Error::InvalidParameter(format!(
                "snapshot cadence below {MIN_SNAPSHOTS_PER_UNIT} per unit time between {prev} and {t}"
            )));
        }
        prev = t;
    }
    if t_end - prev > max_gap {
        return Err(Error::InvalidParameter(format!(
            "no snapshots between {prev} and {t_end}"
        )));
    }
    Ok(())
}

/// Sup-norm errors of a run against the exact Barenblatt solution(s).
///
/// With several patches the comparison window ends at the earlier of the
/// numerical and exact filling times, past which the exact solution is no
/// longer the maximum of the individual profiles.
pub fn measure_errors(output: &RunOutput, oracle: &[BarenblattParams]) -> Result<ErrorRecord> {
    let reference = Reference::new(oracle)?;
    let horizon = output.trace.last().map_or(0.0, |r| r.t);
    let multi = oracle.len() > 1;
    let t_end = if multi {
        let numeric = output.t_star_h().unwrap_or(horizon);
        let exact = reference.filling.map_or(horizon, |f| f.0);
        numeric.min(exact).min(horizon)
    } else {
        horizon
    };
    let requested: Vec<f64> = output.snapshots.iter().map(|s| s.requested).collect();
    check_cadence(&requested, t_end.min(output.settings.horizon))?;

    let grid = output.grid();
    let mut e_v: f64 = 0.0;
    for snap in output.snapshots.iter().filter(|s| s.t <= t_end) {
        for (k, &v) in snap.v.iter().enumerate() {
            e_v = e_v.max((v - reference.value(grid.x(k), snap.t)).abs());
        }
    }

    let mut e_zeta: f64 = 0.0;
    for row in output.trace.iter().filter(|r| r.t <= t_end) {
        let (l, r) = reference.external(row.t);
        e_zeta = e_zeta
            .max((row.zeta_l - l).abs())
            .max((row.zeta_r - r).abs());
        if row.internal.len() == oracle.len() - 1 {
            for (num, exact) in row.internal.iter().zip(reference.internal(row.t)) {
                e_zeta = e_zeta
                    .max((num.0 - exact.0).abs())
                    .max((num.1 - exact.1).abs());
            }
        }
    }

    let (e_x, e_t) = match (multi, reference.filling, output.fillings.first()) {
        (true, Some((t_star, x_star)), Some(event)) => (
            Some((event.x - x_star).abs()),
            Some((event.t - t_star).abs()),
        ),
        _ => (None, None),
    };

    Ok(ErrorRecord {
        dx: output.mesh.dx,
        e_v,
        e_zeta,
        e_x,
        e_t,
    })
}

/// Least-squares slope and intercept of `log e` against `log dx`.
pub fn fit_rate(dx: &[f64], errors: &[f64]) -> Result<(f64, f64)> {
    if dx.len() != errors.len() || dx.len() < 3 {
        return Err(Error::InvalidParameter(
            "rate fit needs at least three levels".into(),
        ));
    }
    if dx
        .iter()
        .chain(errors)
        .any(|&v| !(v > 0.0 && v.is_finite()))
    {
        return Err(Error::InvalidParameter(
            "rate fit needs positive finite data".into(),
        ));
    }
    let xs: Vec<f64> = dx.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let alpha = sxy / sxx;
    Ok((alpha, my - alpha * mx))
}

/// Fits every metric that is present and positive on all levels.
pub fn fit_all(records: &[ErrorRecord]) -> Vec<RateFit> {
    let dx: Vec<f64> = records.iter().map(|r| r.dx).collect();
    [Metric::EV, Metric::EZeta, Metric::EX, Metric::ET]
        .into_iter()
        .filter_map(|metric| {
            let values: Vec<f64> = records
                .iter()
                .map(|r| metric.of(r))
                .collect::<Option<_>>()?;
            let (alpha, intercept) = fit_rate(&dx, &values).ok()?;
            Some(RateFit {
                metric,
                alpha,
                intercept,
            })
        })
        .collect()
}

/// Independent runs at each `dx`, measured against the problem's oracle.
pub fn refinement_series(
    problem: &Problem,
    settings: &RunSettings,
    dx_list: &[f64],
) -> Result<Series> {
    if dx_list.len() < 3 {
        return Err(Error::InvalidParameter(
            "a refinement series needs at least three dx".into(),
        ));
    }
    if dx_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidParameter(
            "dx list must be strictly decreasing".into(),
        ));
    }
    let oracle = problem.oracle().ok_or(Error::MissingOracle)?;
    let records = std::thread::scope(|scope| {
        let handles: Vec<_> = dx_list
            .iter()
            .map(|&dx| {
                let oracle = &oracle;
                scope.spawn(move || {
                    let settings = RunSettings {
                        dx,
                        ..settings.clone()
                    };
                    run(problem, &settings)
                        .and_then(|out| measure_errors(&out, oracle))
                        .map_err(|e| Error::SeriesRun {
                            dx,
                            source: Box::new(e),
                        })
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("series worker panicked"))
            .collect::<Result<Vec<_>>>()
    })?;
    let fits = fit_all(&records);
    Ok(Series { records, fits })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulation::uniform_times;

    #[test]
    fn fit_recovers_power_law() {
        let dx = [0.08, 0.04, 0.02, 0.01];
        let e: Vec<f64> = dx.iter().map(|d| 3.0 * d).collect();
        let (alpha, intercept) = fit_rate(&dx, &e).unwrap();
        assert!((alpha - 1.0).abs() < 1e-10);
        assert!((intercept - 3f64.ln()).abs() < 1e-10);
        let e: Vec<f64> = dx.iter().map(|d: &f64| d.sqrt()).collect();
        assert!((fit_rate(&dx, &e).unwrap().0 - 0.5).abs() < 1e-10);
        assert!(fit_rate(&dx[..2], &e[..2]).is_err());
        assert!(fit_rate(&dx[..3], &[1.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn series_preconditions() {
        let b = BarenblattParams::new(2.0, 4.0 / 6.0, 0.0, 1.0).unwrap();
        let p = Problem::barenblatt(vec![b]).unwrap();
        let s = RunSettings::new(0.04, 0.1);
        assert!(refinement_series(&p, &s, &[0.04, 0.02]).is_err());
        assert!(refinement_series(&p, &s, &[0.02, 0.04, 0.01]).is_err());
        assert!(refinement_series(&p, &s, &[0.04, 0.04, 0.01]).is_err());
    }

    #[test]
    fn sparse_snapshots_rejected() {
        let b = BarenblattParams::new(2.0, 4.0 / 6.0, 0.0, 1.0).unwrap();
        let p = Problem::barenblatt(vec![b]).unwrap();
        let mut s = RunSettings::new(0.04, 0.5);
        s.snapshot_times = uniform_times(0.5, 10.0);
        let out = run(&p, &s).unwrap();
        assert!(measure_errors(&out, &[b]).is_err());
        assert!(matches!(
            measure_errors(&out, &[]),
            Err(Error::MissingOracle)
        ));
    }

    #[test]
    fn first_step_error_is_small() {
        let b = BarenblattParams::new(2.0, 4.0 / 6.0, 0.0, 1.0).unwrap();
        let p = Problem::barenblatt(vec![b]).unwrap();
        let s = RunSettings::new(0.04, 0.05);
        let out = run(&p, &s).unwrap();
        let rec = measure_errors(&out, &[b]).unwrap();
        assert!(rec.e_v < 0.05 && rec.e_zeta < 0.05);
        assert_eq!(rec.e_x, None);
        assert_eq!(rec.e_t, None);
    }
}
