//! CSV and JSON writers for run and convergence results.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use gpme_core::convergence::Series;
use gpme_core::RunOutput;
use serde_json::{json, Value};

/// Full round-trip precision for CSV numbers.
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub fn interfaces_csv(out: &RunOutput, two_patch: bool) -> String {
    let mut s = String::from("t,zeta_l,zeta_r");
    if two_patch {
        s.push_str(",zeta_hat_r,zeta_check_l");
    }
    s.push('\n');
    for row in &out.trace {
        let _ = write!(s, "{},{},{}", num(row.t), num(row.zeta_l), num(row.zeta_r));
        if two_patch {
            let hole = row.internal.first();
            let _ = write!(s, ",{},{}", opt(hole.map(|h| h.0)), opt(hole.map(|h| h.1)));
        }
        s.push('\n');
    }
    s
}

pub fn snapshot_csv(out: &RunOutput, v: &[f64]) -> String {
    let grid = out.grid();
    let mut s = String::from("x,v\n");
    for (k, value) in v.iter().enumerate() {
        let _ = writeln!(s, "{},{}", num(grid.x(k)), num(*value));
    }
    s
}

pub fn snapshot_name(t: f64) -> String {
    format!("snapshot_{t:.6}.csv")
}

pub fn run_json(out: &RunOutput) -> Value {
    let mesh = &out.mesh;
    json!({
        "T_star_h": out.t_star_h(),
        "x_star_h": out.x_star_h(),
        "fillings": out.fillings,
        "steps": out.steps,
        "t_final": out.trace.last().map(|r| r.t),
        "nonlinearity": out.nonlinearity,
        "stepper": out.settings.stepper,
        "non_certified": !mesh.certified,
        "mesh": {
            "dx": mesh.dx,
            "dt": mesh.dt,
            "beta": mesh.beta,
            "eps": mesh.eps,
            "cfl_mode": mesh.mode,
            "gamma0": mesh.gamma0,
            "m_bound": mesh.m_bound,
            "x_min": mesh.grid.x_min(),
            "x_max": mesh.grid.x_max(),
            "n_nodes": mesh.grid.n_nodes(),
        },
        "structural_bounds": out.bounds,
        "ab_bound": out.ab_bound,
        "diagnostics": out.diagnostics,
    })
}

pub fn errors_csv(series: &Series) -> String {
    let mut s = String::from("dx,E_v,E_zeta,E_x,E_t\n");
    for r in &series.records {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            num(r.dx),
            num(r.e_v),
            num(r.e_zeta),
            opt(r.e_x),
            opt(r.e_t)
        );
    }
    s
}

pub fn rates_json(series: &Series) -> Value {
    let rates: serde_json::Map<String, Value> = series
        .fits
        .iter()
        .map(|f| {
            (
                f.metric.name().to_string(),
                json!({ "alpha": f.alpha, "intercept": f.intercept }),
            )
        })
        .collect();
    json!({ "levels": series.records, "rates": rates })
}

pub fn write_run(dir: &Path, out: &RunOutput, two_patch: bool) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("interfaces.csv"), interfaces_csv(out, two_patch))?;
    for snap in &out.snapshots {
        fs::write(
            dir.join(snapshot_name(snap.requested)),
            snapshot_csv(out, &snap.v),
        )?;
    }
    write_json(&dir.join("run.json"), &run_json(out))
}

pub fn write_series(dir: &Path, series: &Series) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("errors.csv"), errors_csv(series))?;
    write_json(&dir.join("rates.json"), &rates_json(series))
}

fn write_json(path: &Path, value: &Value) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    text.push('\n');
    fs::write(path, text)
}
