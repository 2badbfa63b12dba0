//! One compactly supported pressure patch and its time steppers.
//!
//! A patch stores the pressure on every node of a shared [`Grid`] together
//! with two real-valued interfaces `zeta_l <= zeta_r`. Nodes strictly inside
//! the numerical support `[x_{K_l}, x_{K_r}]` are advanced by finite
//! differences; the boundary layers between the support and the interfaces
//! are rebuilt by linear interpolation after every step.
//!
//! ```text
//!   0   0  lin lin  fd  fd  ...  fd  fd  lin  0   0
//!          ^zeta_l  ^K_l             ^K_r    ^zeta_r
//! ```

use crate::error::{Error, Result};
use crate::mesh::{Grid, MeshConfig};
use crate::nonlinearity::Nonlinearity;
use crate::tridiag::solve_tridiagonal;

/// Absolute slack used when checking `0 <= v <= M` and `|w| <= γ₀`.
pub const INVARIANT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct PatchState {
    grid: Grid,
    pub v: Vec<f64>,
    pub zeta_l: f64,
    pub zeta_r: f64,
    pub n: u64,
    pub t: f64,
}

/// Indices of the outermost finite-difference nodes and the layer widths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Layers {
    pub k_left: usize,
    pub k_right: usize,
    pub s_left: f64,
    pub s_right: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub state: PatchState,
    pub displacement_left: f64,
    pub displacement_right: f64,
    pub max_abs_w: f64,
    pub min_z: f64,
    pub min_v: f64,
    pub max_v: f64,
}

/// Downwind, centred and second differences at one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derivatives {
    pub w: f64,
    pub w_bar: f64,
    pub z: f64,
}

impl PatchState {
    /// Samples `v0` on the grid inside `[a, b]`; nodes outside are zero.
    pub fn init(grid: Grid, support: (f64, f64), v0: impl Fn(f64) -> f64) -> Result<Self> {
        let (a, b) = support;
        let v = grid
            .nodes()
            .map(|x| if x >= a && x <= b { v0(x) } else { 0.0 })
            .collect();
        Self::from_values(grid, support, v)
    }

    /// Builds a patch from per-node values; values outside `[a, b]` are zeroed.
    pub fn from_values(grid: Grid, support: (f64, f64), mut v: Vec<f64>) -> Result<Self> {
        let (a, b) = support;
        let dx = grid.dx();
        if v.len() != grid.n_nodes() {
            return Err(Error::InvalidParameter(format!(
                "expected {} node values, got {}",
                grid.n_nodes(),
                v.len()
            )));
        }
        if !(b - a >= 4.0 * dx * (1.0 - 1e-9)) {
            return Err(Error::SupportTooNarrow {
                left: a,
                right: b,
                dx,
            });
        }
        if grid.local(grid.ceil_global(a) - 1).is_none()
            || grid.local(grid.floor_global(b) + 1).is_none()
        {
            return Err(Error::OutOfGrid {
                zeta: if a < grid.x_min() + dx { a } else { b },
                x_min: grid.x_min(),
                x_max: grid.x_max(),
            });
        }
        for (k, value) in v.iter_mut().enumerate() {
            let x = grid.x(k);
            if x < a || x > b {
                *value = 0.0;
            } else if !(*value >= 0.0 && value.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "initial pressure must be finite and >= 0, got {value} at x = {x}"
                )));
            }
        }
        Ok(Self {
            grid,
            v,
            zeta_l: a,
            zeta_r: b,
            n: 0,
            t: 0.0,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn locate_layers(&self) -> Result<Layers> {
        let g = &self.grid;
        let left = g.ceil_global(self.zeta_l) + 1;
        let right = g.floor_global(self.zeta_r) - 1;
        let out_of_grid = |zeta| Error::OutOfGrid {
            zeta,
            x_min: g.x_min(),
            x_max: g.x_max(),
        };
        // K_l - 2 and K_r + 2 must exist so the layers have a zero neighbour.
        g.local(left - 2).ok_or_else(|| out_of_grid(self.zeta_l))?;
        g.local(right + 2).ok_or_else(|| out_of_grid(self.zeta_r))?;
        let k_left = g.local(left).ok_or_else(|| out_of_grid(self.zeta_l))?;
        let k_right = g.local(right).ok_or_else(|| out_of_grid(self.zeta_r))?;
        if k_left > k_right {
            return Err(Error::Collapse { k_left, k_right });
        }
        Ok(Layers {
            k_left,
            k_right,
            s_left: g.x(k_left) - self.zeta_l,
            s_right: self.zeta_r - g.x(k_right),
        })
    }

    /// Interfaces after one step of length `dt`.
    pub fn advance_interfaces(&self, layers: &Layers, dt: f64) -> (f64, f64) {
        (
            self.zeta_l - dt * self.v[layers.k_left] / layers.s_left,
            self.zeta_r + dt * self.v[layers.k_right] / layers.s_right,
        )
    }

    pub fn discrete_derivatives(&self, k: usize) -> Result<Derivatives> {
        discrete_derivatives(&self.v, self.grid.dx(), k)
    }

    /// `max_k |w_k|` over the whole grid.
    pub fn max_abs_slope(&self) -> f64 {
        let dx = self.grid.dx();
        self.v
            .windows(2)
            .map(|p| ((p[1] - p[0]) / dx).abs())
            .fold(0.0, f64::max)
    }
}

pub fn discrete_derivatives(v: &[f64], dx: f64, k: usize) -> Result<Derivatives> {
    if k == 0 || k + 1 >= v.len() {
        return Err(Error::IndexOutOfGrid {
            index: k,
            n_nodes: v.len(),
        });
    }
    Ok(Derivatives {
        w: (v[k] - v[k - 1]) / dx,
        w_bar: (v[k + 1] - v[k - 1]) / (2.0 * dx),
        z: (v[k - 1] - 2.0 * v[k] + v[k + 1]) / (dx * dx),
    })
}

/// Explicit interior update at one node.
#[inline]
pub(crate) fn explicit_node(
    left: f64,
    centre: f64,
    right: f64,
    sigma: f64,
    eps: f64,
    dx: f64,
    dt: f64,
) -> f64 {
    let lap = (left - 2.0 * centre + right) / (dx * dx);
    let grad = (right - left) / (2.0 * dx);
    centre + dt * ((sigma + eps) * lap + grad * grad)
}

/// Advances one patch with the explicit scheme.
pub fn step_explicit(
    state: &PatchState,
    mesh: &MeshConfig,
    nl: &dyn Nonlinearity,
) -> Result<StepReport> {
    let layers = state.locate_layers()?;
    let (kl, kr) = (layers.k_left, layers.k_right);
    let interior: Vec<f64> = (kl..=kr)
        .map(|k| {
            explicit_node(
                state.v[k - 1],
                state.v[k],
                state.v[k + 1],
                nl.sigma(state.v[k]),
                mesh.eps,
                mesh.dx,
                mesh.dt,
            )
        })
        .collect();
    finish_step(state, mesh, &layers, interior, true)
}

/// Advances one patch with the linearly implicit scheme
/// `(v' - v)/dt = σ(v) A v' / dx² + ε A v / dx² + |centred gradient of v|²`.
///
/// The outermost layer values of the current step act as Dirichlet data.
///
/// Only positivity and the maximum bound are enforced; the slope bound is
/// not guaranteed by this scheme and is left to the run diagnostics.
pub fn step_implicit(
    state: &PatchState,
    mesh: &MeshConfig,
    nl: &dyn Nonlinearity,
) -> Result<StepReport> {
    let layers = state.locate_layers()?;
    let (kl, kr) = (layers.k_left, layers.k_right);
    let n = kr - kl + 1;
    let (dx, dt, beta, eps) = (mesh.dx, mesh.dt, mesh.beta, mesh.eps);
    let v = &state.v;

    let mut lower = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut upper = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    for (i, k) in (kl..=kr).enumerate() {
        let sigma = nl.sigma(v[k]);
        debug_assert!(sigma >= 0.0);
        let coupling = beta * sigma;
        lower[i] = -coupling;
        upper[i] = -coupling;
        diag[i] = 1.0 + 2.0 * coupling;
        let grad = (v[k + 1] - v[k - 1]) / (2.0 * dx);
        rhs[i] = v[k] + beta * eps * (v[k - 1] - 2.0 * v[k] + v[k + 1]) + dt * grad * grad;
        if k == kl {
            rhs[i] += coupling * v[kl - 1];
        }
        if k == kr {
            rhs[i] += coupling * v[kr + 1];
        }
    }
    let interior = solve_tridiagonal(&lower, &diag, &upper, &rhs)?;
    finish_step(state, mesh, &layers, interior, false)
}

/// Moves the interfaces, writes the new interior and rebuilds the layers.
fn finish_step(
    state: &PatchState,
    mesh: &MeshConfig,
    layers: &Layers,
    interior: Vec<f64>,
    enforce_lipschitz: bool,
) -> Result<StepReport> {
    let g = state.grid;
    let (kl, kr) = (layers.k_left, layers.k_right);
    let (zl, zr) = state.advance_interfaces(layers, mesh.dt);

    let mut next = state.clone();
    next.v[kl..=kr].copy_from_slice(&interior);

    let out_of_grid = |zeta| Error::OutOfGrid {
        zeta,
        x_min: g.x_min(),
        x_max: g.x_max(),
    };
    let first = g.local(g.ceil_global(zl)).ok_or_else(|| out_of_grid(zl))?;
    let last = g.local(g.floor_global(zr)).ok_or_else(|| out_of_grid(zr))?;
    if first == 0 || last + 1 >= g.n_nodes() {
        return Err(out_of_grid(if first == 0 { zl } else { zr }));
    }
    let old_first = g.local(g.ceil_global(state.zeta_l)).unwrap_or(0);
    let old_last = g
        .local(g.floor_global(state.zeta_r))
        .unwrap_or(g.n_nodes() - 1);

    // Left layer: linear from 0 at the new interface to the new value at x_{K_l}.
    let (x_kl, v_kl) = (g.x(kl), next.v[kl]);
    for k in first..kl {
        next.v[k] = v_kl * (g.x(k) - zl).max(0.0) / (x_kl - zl);
    }
    let (x_kr, v_kr) = (g.x(kr), next.v[kr]);
    for k in kr + 1..=last {
        next.v[k] = v_kr * (zr - g.x(k)).max(0.0) / (zr - x_kr);
    }
    // Only reachable if an interface moved inwards.
    for k in old_first.min(first)..first {
        next.v[k] = 0.0;
    }
    for k in last + 1..=old_last.max(last) {
        next.v[k] = 0.0;
    }

    next.zeta_l = zl;
    next.zeta_r = zr;
    next.n = state.n + 1;
    next.t = next.n as f64 * mesh.dt;

    let lo = first - 1;
    let hi = last + 1;
    let dx = mesh.dx;
    let mut max_abs_w: f64 = 0.0;
    let mut min_z = f64::INFINITY;
    let mut min_v = f64::INFINITY;
    let mut max_v = f64::NEG_INFINITY;
    for k in lo..=hi {
        min_v = min_v.min(next.v[k]);
        max_v = max_v.max(next.v[k]);
        if k > lo {
            max_abs_w = max_abs_w.max(((next.v[k] - next.v[k - 1]) / dx).abs());
        }
        if k > 0 && k + 1 < g.n_nodes() {
            let z = (next.v[k - 1] - 2.0 * next.v[k] + next.v[k + 1]) / (dx * dx);
            min_z = min_z.min(z);
        }
    }

    let breach = |check: &str, node: Option<usize>, margin: f64| Error::InvariantBreach {
        step: next.n,
        check: check.to_string(),
        node,
        margin,
    };
    if !interior.iter().all(|x| x.is_finite()) {
        return Err(breach("finite", None, f64::NAN));
    }
    if min_v < -INVARIANT_TOL {
        let k = (lo..=hi).find(|&k| next.v[k] == min_v);
        return Err(breach("nonnegative", k, min_v));
    }
    if max_v > mesh.m_bound + INVARIANT_TOL {
        let k = (lo..=hi).find(|&k| next.v[k] == max_v);
        return Err(breach("bounded", k, mesh.m_bound - max_v));
    }
    if enforce_lipschitz && max_abs_w > mesh.gamma0 + INVARIANT_TOL {
        let k = (lo + 1..=hi).find(|&k| ((next.v[k] - next.v[k - 1]) / dx).abs() == max_abs_w);
        return Err(breach("lipschitz", k, mesh.gamma0 - max_abs_w));
    }

    Ok(StepReport {
        displacement_left: zl - state.zeta_l,
        displacement_right: zr - state.zeta_r,
        state: next,
        max_abs_w,
        min_z,
        min_v,
        max_v,
    })
}
