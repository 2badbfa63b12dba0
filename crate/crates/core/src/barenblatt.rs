//! Closed-form Barenblatt solutions of the pure PME in pressure form.
//!
//! `V(x, t) = (C (t0+t)^{2/(m+1)} - |x - x0|² / (2(m+1)))₊ / (t0 + t)`
//! with interfaces `x0 ± sqrt(2(m+1)C) (t0+t)^{1/(m+1)}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default search horizon for [`exact_filling`].
pub const DEFAULT_T_MAX: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarenblattParams {
    pub m: f64,
    #[serde(rename = "c")]
    pub amplitude: f64,
    pub x0: f64,
    pub t0: f64,
}

impl BarenblattParams {
    pub fn new(m: f64, amplitude: f64, x0: f64, t0: f64) -> Result<Self> {
        let p = Self {
            m,
            amplitude,
            x0,
            t0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m > 1.0 && self.m.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "m must be > 1, got {}",
                self.m
            )));
        }
        if !(self.amplitude > 0.0 && self.amplitude.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "C must be > 0, got {}",
                self.amplitude
            )));
        }
        if !(self.t0 > 0.0 && self.t0.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "t0 must be > 0, got {}",
                self.t0
            )));
        }
        if !self.x0.is_finite() {
            return Err(Error::InvalidParameter("x0 must be finite".into()));
        }
        Ok(())
    }

    fn base_radius(&self) -> f64 {
        (2.0 * (self.m + 1.0) * self.amplitude).sqrt()
    }

    /// Interface half-width `sqrt(2(m+1)C) (t0+t)^{1/(m+1)}`.
    pub fn radius(&self, t: f64) -> f64 {
        self.base_radius() * (self.t0 + t).powf(1.0 / (self.m + 1.0))
    }

    pub fn value(&self, x: f64, t: f64) -> f64 {
        let tau = self.t0 + t;
        let dx = x - self.x0;
        let inner =
            self.amplitude * tau.powf(2.0 / (self.m + 1.0)) - dx * dx / (2.0 * (self.m + 1.0));
        inner.max(0.0) / tau
    }

    pub fn interfaces(&self, t: f64) -> (f64, f64) {
        let r = self.radius(t);
        (self.x0 - r, self.x0 + r)
    }

    /// Largest `|∂ₓV|`, attained at the interfaces.
    pub fn lipschitz_bound(&self, t: f64) -> f64 {
        (2.0 * self.amplitude / (self.m + 1.0)).sqrt()
            * (self.t0 + t).powf(1.0 / (self.m + 1.0) - 1.0)
    }

    /// `max_x V(x, t)`, attained at `x0`.
    pub fn max_value(&self, t: f64) -> f64 {
        self.value(self.x0, t)
    }
}

/// Free functions mirroring the methods, for callers that prefer them.
pub fn value(p: &BarenblattParams, x: f64, t: f64) -> f64 {
    p.value(x, t)
}

pub fn interfaces(p: &BarenblattParams, t: f64) -> (f64, f64) {
    p.interfaces(t)
}

pub fn lipschitz_bound(p: &BarenblattParams, t: f64) -> f64 {
    p.lipschitz_bound(t)
}

fn gap(left: &BarenblattParams, right: &BarenblattParams, t: f64) -> f64 {
    right.interfaces(t).0 - left.interfaces(t).1
}

fn check_pair(left: &BarenblattParams, right: &BarenblattParams) -> Result<()> {
    left.validate()?;
    right.validate()?;
    let g = gap(left, right, 0.0);
    if !(g > 0.0) {
        return Err(Error::OverlappingSupports {
            right_of_left: left.interfaces(0.0).1,
            left_of_right: right.interfaces(0.0).0,
        });
    }
    Ok(())
}

/// Time and place where the right interface of `left` meets the left
/// interface of `right`, by bisection on `[0, t_max]`.
pub fn exact_filling_bisection(
    left: &BarenblattParams,
    right: &BarenblattParams,
    t_max: f64,
) -> Result<(f64, f64)> {
    check_pair(left, right)?;
    if gap(left, right, t_max) > 0.0 {
        return Err(Error::NoCrossing { t_max });
    }
    let (mut lo, mut hi) = (0.0_f64, t_max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if gap(left, right, mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    let x = 0.5 * (left.interfaces(t).1 + right.interfaces(t).0);
    Ok((t, x))
}

/// Filling time and location; closed form when both profiles share `m` and
/// `t0`, bisection otherwise.
pub fn exact_filling(
    left: &BarenblattParams,
    right: &BarenblattParams,
    t_max: f64,
) -> Result<(f64, f64)> {
    check_pair(left, right)?;
    if left.m != right.m || left.t0 != right.t0 {
        return exact_filling_bisection(left, right, t_max);
    }
    let m = left.m;
    let (r_left, r_right) = (left.base_radius(), right.base_radius());
    // (t0 + T)^{1/(m+1)} (R_left + R_right) = x0_right - x0_left
    let scale = (right.x0 - left.x0) / (r_left + r_right);
    let t = scale.powf(m + 1.0) - left.t0;
    if t > t_max {
        return Err(Error::NoCrossing { t_max });
    }
    Ok((t, left.x0 + r_left * scale))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn hat() -> BarenblattParams {
        BarenblattParams::new(2.0, 4.0 / 6.0, 0.0, 1.0).unwrap()
    }

    fn check() -> BarenblattParams {
        BarenblattParams::new(2.0, 1.0 / 6.0, 3.0 * 2f64.cbrt(), 1.0).unwrap()
    }

    #[test]
    fn values() {
        assert_relative_eq!(hat().value(0.0, 0.0), 2.0 / 3.0, epsilon = 1e-15);
        assert_eq!(hat().value(2.5, 0.0), 0.0);
        assert_eq!(hat().value(-7.0, 3.0), 0.0);
        let c = check();
        assert_relative_eq!(c.value(c.x0, 0.0), 1.0 / 6.0, epsilon = 1e-15);
    }

    #[test]
    fn interface_positions() {
        let (l, r) = hat().interfaces(0.0);
        assert_relative_eq!(l, -2.0, epsilon = 1e-15);
        assert_relative_eq!(r, 2.0, epsilon = 1e-15);
        let (l, r) = hat().interfaces(7.0);
        assert_relative_eq!(l, -4.0, epsilon = 1e-14);
        assert_relative_eq!(r, 4.0, epsilon = 1e-14);
        let (l, r) = check().interfaces(0.0);
        assert_relative_eq!(l, 3.0 * 2f64.cbrt() - 1.0, epsilon = 1e-14);
        assert_relative_eq!(r, 3.0 * 2f64.cbrt() + 1.0, epsilon = 1e-14);
    }

    #[test]
    fn value_vanishes_on_interfaces() {
        for t in [0.0, 0.3, 1.0, 10.0] {
            for p in [hat(), check()] {
                let (l, r) = p.interfaces(t);
                assert!(p.value(l, t).abs() < 1e-14);
                assert!(p.value(r, t).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn lipschitz() {
        assert_relative_eq!(hat().lipschitz_bound(0.0), 2.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(check().lipschitz_bound(0.0), 1.0 / 3.0, epsilon = 1e-15);
        assert!(hat().lipschitz_bound(1e8) < 1e-4);
        // Slope of the profile just inside the interface.
        let h = 1e-7;
        let (_, r) = hat().interfaces(0.5);
        let slope = (hat().value(r - h, 0.5) - hat().value(r - 2.0 * h, 0.5)) / h;
        assert_relative_eq!(slope.abs(), hat().lipschitz_bound(0.5), max_relative = 1e-5);
    }

    #[test]
    fn reference_pair_fills_at_one() {
        let (t, x) = exact_filling(&hat(), &check(), DEFAULT_T_MAX).unwrap();
        assert_relative_eq!(t, 1.0, epsilon = 1e-12);
        assert_relative_eq!(x, 2.0 * 2f64.cbrt(), epsilon = 1e-12);
        let (tb, xb) = exact_filling_bisection(&hat(), &check(), DEFAULT_T_MAX).unwrap();
        assert!((tb - t).abs() < 1e-10 && (xb - x).abs() < 1e-10);
    }

    #[test]
    fn far_apart_pair_does_not_fill() {
        let a = BarenblattParams::new(2.0, 1e-6, 0.0, 1.0).unwrap();
        let b = BarenblattParams::new(2.0, 1e-6, 100.0, 1.0).unwrap();
        assert!(matches!(
            exact_filling(&a, &b, DEFAULT_T_MAX),
            Err(Error::NoCrossing { .. })
        ));
        assert!(matches!(
            exact_filling_bisection(&a, &b, DEFAULT_T_MAX),
            Err(Error::NoCrossing { .. })
        ));
    }

    #[test]
    fn symmetric_pair_meets_at_midpoint() {
        let a = BarenblattParams::new(3.0, 0.2, -1.5, 0.5).unwrap();
        let b = BarenblattParams::new(3.0, 0.2, 2.5, 0.5).unwrap();
        let (_, x) = exact_filling(&a, &b, DEFAULT_T_MAX).unwrap();
        assert_relative_eq!(x, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn mismatched_pair_uses_bisection() {
        let a = BarenblattParams::new(2.0, 0.5, 0.0, 1.0).unwrap();
        let b = BarenblattParams::new(3.0, 0.3, 4.0, 0.5).unwrap();
        let (t, x) = exact_filling(&a, &b, DEFAULT_T_MAX).unwrap();
        assert!((a.interfaces(t).1 - x).abs() < 1e-9);
        assert!((b.interfaces(t).0 - x).abs() < 1e-9);
    }

    #[test]
    fn overlapping_pair_rejected() {
        assert!(matches!(
            exact_filling(&hat(), &hat(), DEFAULT_T_MAX),
            Err(Error::OverlappingSupports { .. })
        ));
    }

    #[test]
    fn pde_residual_small() {
        let h = 1e-4;
        for p in [
            hat(),
            check(),
            BarenblattParams::new(3.0, 0.4, 0.5, 0.7).unwrap(),
        ] {
            for &t in &[0.1, 0.7, 2.0] {
                let (l, r) = p.interfaces(t);
                for i in 1..20 {
                    let x = l + (r - l) * (0.05 + 0.9 * i as f64 / 20.0);
                    let vt = (p.value(x, t + h) - p.value(x, t - h)) / (2.0 * h);
                    let vx = (p.value(x + h, t) - p.value(x - h, t)) / (2.0 * h);
                    let vxx =
                        (p.value(x + h, t) - 2.0 * p.value(x, t) + p.value(x - h, t)) / (h * h);
                    let res = vt - (p.m - 1.0) * p.value(x, t) * vxx - vx * vx;
                    assert!(res.abs() < 1e-6, "residual {res} at x = {x}, t = {t}");
                }
            }
        }
    }
}
