//! Grid geometry and time-step / viscosity selection.
//!
//! Both stability modes pick the largest admissible `dt` and the smallest
//! admissible artificial viscosity `eps` for the given `dx`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nonlinearity::StructuralBounds;

/// Nodes closer than this (in units of `dx`) to an interface count as lying on it.
pub(crate) const NODE_SNAP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CflMode {
    Strict,
    #[default]
    Relaxed,
}

impl std::str::FromStr for CflMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strict" => Ok(CflMode::Strict),
            "relaxed" => Ok(CflMode::Relaxed),
            other => Err(Error::InvalidParameter(format!(
                "unknown cfl mode {other:?} (expected \"strict\" or \"relaxed\")"
            ))),
        }
    }
}

/// Uniform grid `x_k = (origin + k) dx`, `k = 0..n_nodes`.
///
/// The origin is an integer multiple of `dx`, so every grid built with the
/// same spacing has its nodes on the same lattice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    dx: f64,
    origin: i64,
    n_nodes: usize,
}

impl Grid {
    pub fn new(dx: f64, origin: i64, n_nodes: usize) -> Result<Self> {
        if !(dx > 0.0 && dx.is_finite()) {
            return Err(Error::InvalidParameter(format!("dx must be > 0, got {dx}")));
        }
        if n_nodes < 3 {
            return Err(Error::InvalidParameter(format!(
                "grid needs at least 3 nodes, got {n_nodes}"
            )));
        }
        Ok(Self {
            dx,
            origin,
            n_nodes,
        })
    }

    /// Smallest lattice-aligned grid covering `[x_min, x_max]`.
    pub fn covering(x_min: f64, x_max: f64, dx: f64) -> Result<Self> {
        if !(dx > 0.0 && dx.is_finite()) {
            return Err(Error::InvalidParameter(format!("dx must be > 0, got {dx}")));
        }
        let lo = (x_min / dx + NODE_SNAP).floor() as i64;
        let hi = (x_max / dx - NODE_SNAP).ceil() as i64;
        Self::new(dx, lo, (hi - lo + 1).max(3) as usize)
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn origin(&self) -> i64 {
        self.origin
    }

    pub fn x(&self, k: usize) -> f64 {
        (self.origin + k as i64) as f64 * self.dx
    }

    pub fn x_min(&self) -> f64 {
        self.x(0)
    }

    pub fn x_max(&self) -> f64 {
        self.x(self.n_nodes - 1)
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_nodes).map(|k| self.x(k))
    }

    /// Global lattice index of the first node at or right of `z`.
    pub(crate) fn ceil_global(&self, z: f64) -> i64 {
        (z / self.dx - NODE_SNAP).ceil() as i64
    }

    /// Global lattice index of the last node at or left of `z`.
    pub(crate) fn floor_global(&self, z: f64) -> i64 {
        (z / self.dx + NODE_SNAP).floor() as i64
    }

    /// Local index of a global lattice index, if it lies on this grid.
    pub(crate) fn local(&self, global: i64) -> Option<usize> {
        let k = global - self.origin;
        (k >= 0 && (k as usize) < self.n_nodes).then_some(k as usize)
    }
}

/// Everything a stepper needs to know about the discretisation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeshConfig {
    pub grid: Grid,
    pub dx: f64,
    pub dt: f64,
    /// `dt / dx²`.
    pub beta: f64,
    pub eps: f64,
    pub mode: CflMode,
    pub gamma0: f64,
    pub m_bound: f64,
    /// False when `dt` or `eps` were overridden by hand.
    pub certified: bool,
}

impl MeshConfig {
    /// Mesh for the explicit stepper under the chosen stability mode.
    pub fn explicit(
        grid: Grid,
        bounds: &StructuralBounds,
        gamma0: f64,
        m_bound: f64,
        mode: CflMode,
    ) -> Result<Self> {
        let dx = grid.dx();
        let (dt, eps) = match mode {
            CflMode::Strict => cfl_strict(bounds, gamma0, m_bound, dx)?,
            CflMode::Relaxed => cfl_relaxed(bounds, gamma0, m_bound, dx)?,
        };
        Ok(Self {
            grid,
            dx,
            dt,
            beta: dt / (dx * dx),
            eps,
            mode,
            gamma0,
            m_bound,
            certified: true,
        })
    }

    /// Mesh for the linearly implicit stepper: `dt = ratio * dx / γ₀`.
    ///
    /// The viscous term stays explicit, so `eps` takes the relaxed minimum
    /// and `dt * eps / dx² <= 1/2` is required.
    pub fn implicit(
        grid: Grid,
        bounds: &StructuralBounds,
        gamma0: f64,
        m_bound: f64,
        ratio: f64,
    ) -> Result<Self> {
        if !(ratio > 0.0 && ratio.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "implicit step ratio must be > 0, got {ratio}"
            )));
        }
        let dx = grid.dx();
        let (_, eps) = cfl_relaxed(bounds, gamma0, m_bound, dx)?;
        let dt = if gamma0 > 0.0 {
            ratio * dx / gamma0
        } else {
            ratio * dx
        };
        let beta = dt / (dx * dx);
        if beta * eps > 0.5 {
            return Err(Error::InvalidParameter(format!(
                "implicit step ratio {ratio} too large: dt*eps/dx^2 = {} > 1/2",
                beta * eps
            )));
        }
        Ok(Self {
            grid,
            dx,
            dt,
            beta,
            eps,
            mode: CflMode::Relaxed,
            gamma0,
            m_bound,
            certified: true,
        })
    }

    /// Replaces `dt` and/or `eps`; the result is flagged as non-certified.
    pub fn with_overrides(mut self, dt: Option<f64>, eps: Option<f64>) -> Result<Self> {
        if dt.is_none() && eps.is_none() {
            return Ok(self);
        }
        if let Some(dt) = dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::InvalidParameter(format!("dt must be > 0, got {dt}")));
            }
            self.dt = dt;
            self.beta = dt / (self.dx * self.dx);
        }
        if let Some(eps) = eps {
            if !(eps > 0.0 && eps.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "eps must be > 0, got {eps}"
                )));
            }
            self.eps = eps;
        }
        self.certified = false;
        Ok(self)
    }

    /// Whether `β(σ(M)+ε) <= 1/2` and `γ₀ dx (1 + S₁/2) <= ε` hold, the two
    /// inequalities that make the explicit update a convex combination.
    pub fn satisfies_convexity(&self, bounds: &StructuralBounds) -> bool {
        let tol = 1e-12;
        self.beta * (bounds.sigma_max + self.eps) <= 0.5 + tol
            && self.gamma0 * self.dx * (1.0 + bounds.big_s1 / 2.0) * self.beta
                <= self.beta * self.eps * (1.0 + tol)
    }
}

fn check_inputs(gamma0: f64, m_bound: f64, dx: f64) -> Result<()> {
    if !(dx > 0.0 && dx.is_finite()) {
        return Err(Error::InvalidParameter(format!("dx must be > 0, got {dx}")));
    }
    if !(gamma0 >= 0.0 && gamma0.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "Lipschitz bound must be >= 0, got {gamma0}"
        )));
    }
    if !(m_bound >= 0.0 && m_bound.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "pressure bound must be >= 0, got {m_bound}"
        )));
    }
    Ok(())
}

/// Flat data has no admissible positive viscosity; fall back to `eps = dx`.
fn floor_eps(eps: f64, dx: f64) -> f64 {
    if eps > 0.0 {
        eps
    } else {
        dx
    }
}

/// Full stability condition: returns `(dt, eps)`.
pub fn cfl_strict(
    bounds: &StructuralBounds,
    gamma0: f64,
    m_bound: f64,
    dx: f64,
) -> Result<(f64, f64)> {
    check_inputs(gamma0, m_bound, dx)?;
    let eps = floor_eps(
        gamma0 * dx * (27.0 + 9.0 * bounds.s1 + 3.0 * bounds.big_s1 + dx * bounds.big_s2 / 4.0),
        dx,
    );
    let denom = 2.0 * (bounds.sigma_max + eps)
        + gamma0 * dx * (4.0 + 3.0 * bounds.big_s1)
        + gamma0 * gamma0 * dx * dx * bounds.big_s2 / 2.0;
    let beta = 1.0 / denom;
    Ok((beta * dx * dx, eps))
}

/// Relaxed stability condition: returns `(dt, eps)`.
pub fn cfl_relaxed(
    bounds: &StructuralBounds,
    gamma0: f64,
    m_bound: f64,
    dx: f64,
) -> Result<(f64, f64)> {
    check_inputs(gamma0, m_bound, dx)?;
    let eps = floor_eps(gamma0 * dx * (1.0 + bounds.big_s1 / 2.0), dx);
    let beta = 1.0 / (2.0 * (bounds.sigma_max + eps));
    Ok((beta * dx * dx, eps))
}

/// Grid wide enough that no interface starting inside `hull` can leave it
/// before `horizon`, given interface speeds bounded by `gamma0`.
pub fn build_grid(hull: (f64, f64), gamma0: f64, horizon: f64, dx: f64) -> Result<Grid> {
    let (left, right) = hull;
    if !(right > left) {
        return Err(Error::EmptySupport { left, right });
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "horizon must be > 0, got {horizon}"
        )));
    }
    if !(gamma0 >= 0.0 && gamma0.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "speed bound must be >= 0, got {gamma0}"
        )));
    }
    let pad = gamma0 * horizon + 2.0 * dx;
    Grid::covering(left - pad, right + pad, dx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinearity::{Nonlinearity, PerturbedPmeNonlinearity, PmeNonlinearity};
    use approx::assert_relative_eq;

    fn pme2(m_bound: f64) -> StructuralBounds {
        PmeNonlinearity::new(2.0)
            .unwrap()
            .structural_bounds(m_bound)
    }

    #[test]
    fn strict_reference_values() {
        let (dt, eps) = cfl_strict(&pme2(2.0 / 3.0), 2.0 / 3.0, 2.0 / 3.0, 0.01).unwrap();
        assert_relative_eq!(eps, 0.26, max_relative = 1e-12);
        // 1 / (2 (2/3 + 0.26) + (2/3)(0.01)(7)) = 1 / 1.9
        assert_relative_eq!(dt / 1e-4, 1.0 / 1.9, max_relative = 1e-12);
    }

    #[test]
    fn strict_perturbed_eps() {
        let b = PerturbedPmeNonlinearity::new(2.0, 0.5)
            .unwrap()
            .structural_bounds(1.0);
        let (dt, eps) = cfl_strict(&b, 1.0, 1.0, 0.01).unwrap();
        assert_relative_eq!(eps, 0.01 * 42.0025, max_relative = 1e-12);
        let denom = 2.0 * (1.5 + eps) + 0.01 * 10.0 + 1e-4 * 0.5;
        assert_relative_eq!(dt, 1e-4 / denom, max_relative = 1e-12);
    }

    #[test]
    fn relaxed_reference_values() {
        let (dt, eps) = cfl_relaxed(&pme2(2.0 / 3.0), 2.0 / 3.0, 2.0 / 3.0, 0.01).unwrap();
        assert_relative_eq!(eps, 0.01, max_relative = 1e-12);
        assert_relative_eq!(dt, 1e-4 / (2.0 * (2.0 / 3.0 + 0.01)), max_relative = 1e-12);
        assert_relative_eq!(dt, 7.389_162_561_576_355e-5, max_relative = 1e-12);

        let (_, eps_half) = cfl_relaxed(&pme2(2.0 / 3.0), 2.0 / 3.0, 2.0 / 3.0, 0.005).unwrap();
        assert_relative_eq!(eps_half, eps / 2.0, max_relative = 1e-14);
    }

    #[test]
    fn flat_data_falls_back_to_eps_dx() {
        let (_, eps) = cfl_strict(&pme2(1.0), 0.0, 1.0, 0.01).unwrap();
        assert_eq!(eps, 0.01);
        let (_, eps) = cfl_relaxed(&pme2(1.0), 0.0, 1.0, 0.01).unwrap();
        assert_eq!(eps, 0.01);
    }

    #[test]
    fn rejects_nonpositive_dx() {
        assert!(cfl_strict(&pme2(1.0), 1.0, 1.0, 0.0).is_err());
        assert!(cfl_relaxed(&pme2(1.0), 1.0, 1.0, -0.1).is_err());
    }

    #[test]
    fn strict_never_exceeds_relaxed_and_both_are_convex() {
        let cases = [
            (
                PmeNonlinearity::new(2.0)
                    .unwrap()
                    .structural_bounds(2.0 / 3.0),
                2.0 / 3.0,
                2.0 / 3.0,
            ),
            (
                PmeNonlinearity::new(4.0).unwrap().structural_bounds(1.5),
                1.5,
                3.0,
            ),
            (
                PerturbedPmeNonlinearity::new(2.0, 0.5)
                    .unwrap()
                    .structural_bounds(1.0),
                1.0,
                1.0,
            ),
        ];
        let grid = Grid::covering(-1.0, 1.0, 0.01).unwrap();
        for (b, m_bound, gamma0) in cases {
            for dx in [0.04, 0.02, 0.01, 0.001] {
                let (dts, _) = cfl_strict(&b, gamma0, m_bound, dx).unwrap();
                let (dtr, _) = cfl_relaxed(&b, gamma0, m_bound, dx).unwrap();
                assert!(dts <= dtr);
            }
            for mode in [CflMode::Strict, CflMode::Relaxed] {
                let mesh = MeshConfig::explicit(grid, &b, gamma0, m_bound, mode).unwrap();
                assert!(mesh.satisfies_convexity(&b));
                assert_relative_eq!(mesh.dt, mesh.beta * mesh.dx * mesh.dx, max_relative = 1e-14);
            }
        }
    }

    #[test]
    fn overrides_are_flagged() {
        let b = pme2(2.0 / 3.0);
        let grid = Grid::covering(-3.0, 3.0, 0.01).unwrap();
        let mesh = MeshConfig::explicit(grid, &b, 2.0 / 3.0, 2.0 / 3.0, CflMode::Relaxed).unwrap();
        assert!(mesh.certified);
        let bad = mesh.with_overrides(Some(1e-3), None).unwrap();
        assert!(!bad.certified);
        assert!(!bad.satisfies_convexity(&b));
    }

    #[test]
    fn grid_covers_speed_envelope() {
        let g = build_grid((-2.0, 4.78), 2.0 / 3.0, 2.0, 0.01).unwrap();
        assert!(g.x_min() <= -2.0 - 4.0 / 3.0 - 0.02);
        assert!(g.x_max() >= 4.78 + 4.0 / 3.0 + 0.02);
        assert_relative_eq!(g.x_min(), -3.36, epsilon = 1e-12);
        assert_relative_eq!(g.x_max(), 6.14, epsilon = 1e-12);
        assert_eq!(
            g.n_nodes(),
            ((g.x_max() - g.x_min()) / 0.01).round() as usize + 1
        );

        let g0 = build_grid((0.0, 1.0), 0.0, 5.0, 0.01).unwrap();
        assert_relative_eq!(g0.x_min(), -0.02, epsilon = 1e-12);
        assert_relative_eq!(g0.x_max(), 1.02, epsilon = 1e-12);

        assert!(matches!(
            build_grid((0.0, 0.0), 1.0, 1.0, 0.01),
            Err(Error::EmptySupport { .. })
        ));
        assert!(build_grid((0.0, 1.0), 1.0, 0.0, 0.01).is_err());
    }
}
