//! Executable a-priori estimates.
//!
//! Each check is a pure function of the data it inspects and returns a
//! [`DiagnosticReport`] carrying the worst margin and, on failure, a witness.
//! Covered: `0 <= v <= M` with `|w| <= γ₀`, finite interface speed with
//! monotone interfaces, the semiconvexity (Aronson-Bénilan type) lower bound
//! `Z_k >= z(t)`, and empirical Hölder-1/2 regularity in time.

use astro_float::{BigFloat, Consts, Radix, RoundingMode};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::nonlinearity::StructuralBounds;
use crate::patch::INVARIANT_TOL;

/// Slack on `Z_k >= z(t)`.
pub const AB_TOL: f64 = 1e-8;

/// Allowed growth of the Hölder constant between two refinements.
pub const HOLDER_GROWTH: f64 = 1.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Witness {
    pub node: Option<usize>,
    pub step: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticReport {
    pub check: &'static str,
    pub passed: bool,
    /// Smallest slack observed; negative when the check fails.
    pub worst_margin: f64,
    pub witness: Option<Witness>,
}

impl DiagnosticReport {
    fn new(check: &'static str, worst_margin: f64, at: Witness) -> Self {
        let passed = worst_margin >= 0.0;
        let worst_margin = worst_margin + 0.0;
        Self {
            check,
            passed,
            worst_margin,
            witness: (!passed).then_some(at),
        }
    }
}

/// Lower bound `z(t)` solving `z' = Λ z + c z²` with `z(0+) = -∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AbBound {
    pub lambda: f64,
    pub c: f64,
}

impl AbBound {
    /// `Λ = γ₀² S₂`, `c = 2 + s₁`.
    pub fn new(bounds: &StructuralBounds, gamma0: f64) -> Self {
        Self {
            lambda: gamma0 * gamma0 * bounds.big_s2,
            c: 2.0 + bounds.s1,
        }
    }

    pub fn value(&self, t: f64) -> Result<f64> {
        ab_lower_bound(self.lambda, self.c, t)
    }

    pub fn rhs(&self, z: f64) -> f64 {
        self.lambda * z + self.c * z * z
    }
}

/// `-Λ / (c (1 - e^{-Λt}))`, or `-1/(ct)` when `Λ = 0`.
pub fn ab_lower_bound(lambda: f64, c: f64, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("t must be > 0, got {t}")));
    }
    if !(c > 0.0) || !(lambda >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need c > 0 and lambda >= 0, got c = {c}, lambda = {lambda}"
        )));
    }
    if lambda == 0.0 {
        Ok(-1.0 / (c * t))
    } else {
        Ok(-lambda / (c * -(-lambda * t).exp_m1()))
    }
}

/// Relative ODE residual `|z'(t) - F(z(t))| / |F(z(t))|` of the closed-form
/// bound, with `z'` from central differences.
///
/// Near the equilibrium `-Λ/c` both sides are of size `e^{-Λt}`, far below
/// double precision, so the evaluation runs in binary floating point with
/// enough bits to resolve that deviation.
pub fn ab_ode_relative_residual(lambda: f64, c: f64, t: f64) -> Result<f64> {
    ab_lower_bound(lambda, c, t)?;
    let extra = (lambda * t * std::f64::consts::LOG2_E).ceil() as usize;
    let p = ((256 + extra) / 64 + 1) * 64;
    let rm = RoundingMode::ToEven;
    let mut cc = Consts::new().map_err(|e| Error::InvalidParameter(format!("{e:?}")))?;

    let big = |x: f64| BigFloat::from_f64(x, p);
    let (lam, cb, one) = (big(lambda), big(c), big(1.0));
    let mut z = |t: &BigFloat| -> BigFloat {
        if lambda == 0.0 {
            one.div(&cb.mul(t, p, rm), p, rm).neg()
        } else {
            let e = lam.mul(t, p, rm).neg().exp(p, rm, &mut cc);
            lam.div(&cb.mul(&one.sub(&e, p, rm), p, rm), p, rm).neg()
        }
    };

    let scale = if lambda > 0.0 { t.min(1.0 / lambda) } else { t };
    let h = big(1e-6 * scale);
    let tb = big(t);
    let z0 = z(&tb);
    let dz = z(&tb.add(&h, p, rm))
        .sub(&z(&tb.sub(&h, p, rm)), p, rm)
        .div(&big(2.0).mul(&h, p, rm), p, rm);
    let f = lam
        .mul(&z0, p, rm)
        .add(&cb.mul(&z0.mul(&z0, p, rm), p, rm), p, rm);
    let rel = dz.sub(&f, p, rm).div(&f, p, rm);
    let text = rel
        .format(Radix::Dec, rm, &mut cc)
        .map_err(|e| Error::InvalidParameter(format!("{e:?}")))?;
    let value: f64 = text
        .parse()
        .map_err(|_| Error::InvalidParameter(format!("unparsable residual {text}")))?;
    Ok(value.abs())
}

/// `0 <= v_k <= M` and `|w_k| <= γ₀` on every node.
pub fn check_linf_lipschitz(v: &[f64], dx: f64, m_bound: f64, gamma0: f64) -> DiagnosticReport {
    let mut worst = f64::INFINITY;
    let mut at = 0;
    for (k, &x) in v.iter().enumerate() {
        let margin = (x + INVARIANT_TOL).min(m_bound + INVARIANT_TOL - x);
        if margin < worst || margin.is_nan() {
            worst = margin;
            at = k;
        }
        if k > 0 {
            let margin = gamma0 + INVARIANT_TOL - ((x - v[k - 1]) / dx).abs();
            if margin < worst || margin.is_nan() {
                worst = margin;
                at = k;
            }
        }
    }
    let worst = if worst.is_nan() {
        f64::NEG_INFINITY
    } else {
        worst
    };
    DiagnosticReport::new(
        "linf_lipschitz",
        worst,
        Witness {
            node: Some(at),
            step: None,
        },
    )
}

/// `Z_k >= z(t) - AB_TOL` wherever both neighbours exist.
pub fn check_ab(v: &[f64], dx: f64, t: f64, bound: &AbBound) -> Result<DiagnosticReport> {
    let floor = bound.value(t)? - AB_TOL;
    let mut worst = f64::INFINITY;
    let mut at = 0;
    for k in 1..v.len().saturating_sub(1) {
        let z = (v[k - 1] - 2.0 * v[k] + v[k + 1]) / (dx * dx);
        let margin = z - floor;
        if margin < worst {
            worst = margin;
            at = k;
        }
    }
    Ok(DiagnosticReport::new(
        "aronson_benilan",
        worst,
        Witness {
            node: Some(at),
            step: None,
        },
    ))
}

/// One sample of an interface pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InterfaceSample {
    pub t: f64,
    pub zeta_l: f64,
    pub zeta_r: f64,
}

/// Per-step speed `<= γ₀`, `zeta_l` nonincreasing, `zeta_r` nondecreasing and
/// the envelope `zeta(0) ∓ γ₀ t`.
pub fn check_interface_speed(trace: &[InterfaceSample], gamma0: f64) -> DiagnosticReport {
    let mut worst = f64::INFINITY;
    let mut at = 0;
    let mut note = |margin: f64, i: usize| {
        if margin < worst {
            worst = margin;
            at = i;
        }
    };
    let Some(first) = trace.first() else {
        return DiagnosticReport::new(
            "interface_speed",
            0.0,
            Witness {
                node: None,
                step: None,
            },
        );
    };
    for (i, pair) in trace.windows(2).enumerate() {
        let (a, b) = (pair[0], pair[1]);
        let dt = b.t - a.t;
        if dt <= 0.0 {
            continue;
        }
        let dl = b.zeta_l - a.zeta_l;
        let dr = b.zeta_r - a.zeta_r;
        note(-dl.max(0.0) - (-dr).max(0.0), i + 1);
        note(gamma0 + INVARIANT_TOL - dl.abs() / dt, i + 1);
        note(gamma0 + INVARIANT_TOL - dr.abs() / dt, i + 1);
        let elapsed = b.t - first.t;
        let slack = INVARIANT_TOL * (1.0 + b.zeta_l.abs().max(b.zeta_r.abs()));
        note(b.zeta_l - (first.zeta_l - gamma0 * elapsed) + slack, i + 1);
        note((first.zeta_r + gamma0 * elapsed) - b.zeta_r + slack, i + 1);
    }
    DiagnosticReport::new(
        "interface_speed",
        worst,
        Witness {
            node: None,
            step: Some(at),
        },
    )
}

/// `H = max |v(x,t1) - v(x,t2)| / sqrt|t1 - t2|` over all snapshot pairs with
/// `t <= t_max`.
pub fn holder_constant(times: &[f64], snapshots: &[Vec<f64>], t_max: f64) -> Result<f64> {
    if times.len() != snapshots.len() || times.len() < 2 {
        return Err(Error::InvalidParameter(
            "Hölder check needs at least two snapshots with matching times".into(),
        ));
    }
    let mut h: f64 = 0.0;
    for i in 0..times.len() {
        if times[i] > t_max {
            continue;
        }
        for j in i + 1..times.len() {
            if times[j] > t_max || times[j] == times[i] {
                continue;
            }
            let root = (times[j] - times[i]).abs().sqrt();
            let diff = snapshots[i]
                .iter()
                .zip(&snapshots[j])
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            h = h.max(diff / root);
        }
    }
    Ok(h)
}

/// Passes iff the Hölder constant grows by less than 25% between
/// consecutive refinements (coarsest first).
pub fn check_holder(constants: &[f64]) -> DiagnosticReport {
    let mut worst = f64::INFINITY;
    let mut at = 0;
    for (i, pair) in constants.windows(2).enumerate() {
        let margin = if pair[0] > 0.0 {
            HOLDER_GROWTH - pair[1] / pair[0]
        } else if pair[1] == 0.0 {
            HOLDER_GROWTH
        } else {
            f64::NEG_INFINITY
        };
        if margin < worst {
            worst = margin;
            at = i + 1;
        }
    }
    if constants.len() < 2 {
        worst = 0.0;
    }
    DiagnosticReport::new(
        "holder",
        worst,
        Witness {
            node: None,
            step: Some(at),
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ab_closed_form_values() {
        assert_relative_eq!(ab_lower_bound(0.0, 3.0, 1.0).unwrap(), -1.0 / 3.0);
        assert_relative_eq!(
            ab_lower_bound(1.0, 3.0, 1e3).unwrap(),
            -1.0 / 3.0,
            epsilon = 1e-15
        );
        let expected = -1.0 / (3.0 * (1.0 - (-1.0f64).exp()));
        assert_relative_eq!(
            ab_lower_bound(1.0, 3.0, 1.0).unwrap(),
            expected,
            max_relative = 1e-15
        );
        assert_relative_eq!(expected, -0.527_325_6, epsilon = 1e-7);
        assert!(ab_lower_bound(1.0, 3.0, 0.0).is_err());
        assert!(ab_lower_bound(1.0, 3.0, -1.0).is_err());
    }

    /// Integrates `z' = Λz + cz²` backwards from near the equilibrium with RK4.
    #[test]
    fn ab_matches_backward_integration() {
        let (lambda, c) = (1.0, 3.0);
        let f = |z: f64| lambda * z + c * z * z;
        let mut z = ab_lower_bound(lambda, c, 10.0).unwrap();
        let h = -1e-4;
        for _ in 0..90_000 {
            let k1 = f(z);
            let k2 = f(z + 0.5 * h * k1);
            let k3 = f(z + 0.5 * h * k2);
            let k4 = f(z + h * k3);
            z += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        assert_relative_eq!(
            z,
            ab_lower_bound(lambda, c, 1.0).unwrap(),
            max_relative = 1e-9
        );
    }

    #[test]
    fn ab_shape() {
        let b = AbBound {
            lambda: 0.5,
            c: 3.5,
        };
        let ts: Vec<f64> = (0..200).map(|i| 1e-3 * 1.08f64.powi(i)).collect();
        let zs: Vec<f64> = ts.iter().map(|&t| b.value(t).unwrap()).collect();
        for w in zs.windows(2) {
            assert!(w[1] >= w[0]);
        }
        // Concavity: slopes decrease.
        for i in 1..ts.len() - 1 {
            let s0 = (zs[i] - zs[i - 1]) / (ts[i] - ts[i - 1]);
            let s1 = (zs[i + 1] - zs[i]) / (ts[i + 1] - ts[i]);
            assert!(s1 <= s0 * (1.0 + 1e-9));
        }
        assert_relative_eq!(
            b.value(1e-7).unwrap() * 1e-7,
            -1.0 / 3.5,
            max_relative = 1e-6
        );
        assert_relative_eq!(b.value(1e3).unwrap(), -0.5 / 3.5, max_relative = 1e-12);
    }

    #[test]
    fn ab_ode_residual_is_tiny() {
        for (lambda, c) in [(0.0, 3.0), (1.0, 3.0), (0.5, 3.5)] {
            for t in [1e-3, 0.1, 1.0, 40.0, 1e3] {
                let r = ab_ode_relative_residual(lambda, c, t).unwrap();
                assert!(r <= 1e-8, "residual {r} for ({lambda}, {c}) at t = {t}");
            }
        }
    }

    #[test]
    fn linf_lipschitz() {
        let dx = 0.1;
        let v: Vec<f64> = (0..10).map(|k| (2.0 / 3.0) * k as f64 * dx).collect();
        assert!(check_linf_lipschitz(&v, dx, 1.0, 2.0 / 3.0).passed);
        let mut bad = v.clone();
        bad[3] = -1e-6;
        let r = check_linf_lipschitz(&bad, dx, 1.0, 10.0);
        assert!(!r.passed);
        assert_eq!(r.witness.unwrap().node, Some(3));
        assert!(!check_linf_lipschitz(&v, dx, 0.5, 2.0 / 3.0).passed);
        assert!(!check_linf_lipschitz(&v, dx, 1.0, 0.6).passed);
    }

    #[test]
    fn ab_check() {
        let dx = 0.01;
        // Exact PME m=2 profile at t=1 (t0=1): Z = -1/6 everywhere inside.
        let v: Vec<f64> = (0..101)
            .map(|k| {
                let x = -0.5 + k as f64 * dx;
                (0.5 - x * x / 6.0) / 2.0
            })
            .collect();
        let b = AbBound {
            lambda: 0.0,
            c: 3.0,
        };
        assert!(check_ab(&v, dx, 1.0, &b).unwrap().passed);

        let mut spike = vec![0.0; 11];
        spike[5] = 0.05; // Z = -1000 at node 5 with dx = 0.01
        let spike_z = -2.0 * 0.05 / (dx * dx);
        assert_relative_eq!(spike_z, -1000.0, max_relative = 1e-12);
        assert!(check_ab(&spike, dx, 1e-4, &b).unwrap().passed);
        let r = check_ab(&spike, dx, 10.0, &b).unwrap();
        assert!(!r.passed);
        assert_eq!(r.witness.unwrap().node, Some(5));
        assert!(check_ab(&spike, dx, 0.0, &b).is_err());
    }

    #[test]
    fn interface_speed() {
        let still: Vec<InterfaceSample> = (0..5)
            .map(|i| InterfaceSample {
                t: i as f64 * 0.1,
                zeta_l: -1.0,
                zeta_r: 1.0,
            })
            .collect();
        assert!(check_interface_speed(&still, 0.5).passed);

        let (gamma0, dt) = (0.5, 0.01);
        let mut moving: Vec<InterfaceSample> = (0..20)
            .map(|i| {
                let t = i as f64 * dt;
                InterfaceSample {
                    t,
                    zeta_l: -1.0 - 0.4 * t,
                    zeta_r: 1.0 + 0.3 * t,
                }
            })
            .collect();
        assert!(check_interface_speed(&moving, gamma0).passed);
        for s in moving.iter_mut().skip(7) {
            s.zeta_r += 2.0 * gamma0 * dt;
        }
        let r = check_interface_speed(&moving, gamma0);
        assert!(!r.passed);
        assert_eq!(r.witness.unwrap().step, Some(7));

        let shrinking = [
            InterfaceSample {
                t: 0.0,
                zeta_l: -1.0,
                zeta_r: 1.0,
            },
            InterfaceSample {
                t: 0.1,
                zeta_l: -1.0,
                zeta_r: 0.999,
            },
        ];
        assert!(!check_interface_speed(&shrinking, gamma0).passed);
    }

    #[test]
    fn holder() {
        let times = vec![0.0, 0.1, 0.5];
        let flat = vec![vec![0.3; 4]; 3];
        assert_eq!(holder_constant(&times, &flat, 1.0).unwrap(), 0.0);

        let times: Vec<f64> = (0..11).map(|i| i as f64 * 0.1).collect();
        let root: Vec<Vec<f64>> = times.iter().map(|t| vec![0.0, t.sqrt(), 0.0]).collect();
        assert_relative_eq!(
            holder_constant(&times, &root, 1.0).unwrap(),
            1.0,
            epsilon = 1e-15
        );

        assert!(holder_constant(&[0.0], &[vec![0.0]], 1.0).is_err());
        assert!(check_holder(&[1.0, 1.1, 1.2]).passed);
        assert!(!check_holder(&[1.0, 1.3]).passed);
    }
}
