//! Diffusion nonlinearities of the pressure equation `v_t = σ(v) v_xx + |v_x|²`.
//!
//! Every nonlinearity supplies `σ`, `σ'` and `σ''` in closed form together with
//! analytic structural bounds on `[0, M]`. The CFL conditions and the
//! semiconvexity bound consume those bounds directly.

use serde::Serialize;

use crate::error::{Error, Result};

/// Bounds of `σ'` and `|σ''|` over `[0, M]`, plus `σ(M)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StructuralBounds {
    pub s1: f64,
    pub big_s1: f64,
    pub big_s2: f64,
    pub sigma_max: f64,
}

/// A diffusion nonlinearity with `σ(0) = 0` and `σ' > 0` on `[0, M]`.
pub trait Nonlinearity: Send + Sync {
    fn sigma(&self, r: f64) -> f64;
    fn dsigma(&self, r: f64) -> f64;
    fn d2sigma(&self, r: f64) -> f64;

    /// Analytic bounds over `[0, m_bound]`.
    fn structural_bounds(&self, m_bound: f64) -> StructuralBounds;
}

/// Pure porous medium nonlinearity `σ(r) = (m - 1) r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PmeNonlinearity {
    m: f64,
}

impl PmeNonlinearity {
    pub fn new(m: f64) -> Result<Self> {
        if !(m > 1.0 && m.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "PME exponent must satisfy m > 1, got {m}"
            )));
        }
        Ok(Self { m })
    }

    pub fn m(&self) -> f64 {
        self.m
    }
}

impl Nonlinearity for PmeNonlinearity {
    fn sigma(&self, r: f64) -> f64 {
        (self.m - 1.0) * r
    }

    fn dsigma(&self, _r: f64) -> f64 {
        self.m - 1.0
    }

    fn d2sigma(&self, _r: f64) -> f64 {
        0.0
    }

    fn structural_bounds(&self, m_bound: f64) -> StructuralBounds {
        StructuralBounds {
            s1: self.m - 1.0,
            big_s1: self.m - 1.0,
            big_s2: 0.0,
            sigma_max: (self.m - 1.0) * m_bound,
        }
    }
}

/// `σ(r) = (m - 1) r + α r²`, the simplest admissible nonlinearity with `σ'' ≠ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbedPmeNonlinearity {
    m: f64,
    alpha: f64,
}

impl PerturbedPmeNonlinearity {
    pub fn new(m: f64, alpha: f64) -> Result<Self> {
        if !(m > 1.0 && m.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "exponent must satisfy m > 1, got {m}"
            )));
        }
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "quadratic coefficient must be finite and >= 0, got {alpha}"
            )));
        }
        Ok(Self { m, alpha })
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

impl Nonlinearity for PerturbedPmeNonlinearity {
    fn sigma(&self, r: f64) -> f64 {
        (self.m - 1.0) * r + self.alpha * r * r
    }

    fn dsigma(&self, r: f64) -> f64 {
        (self.m - 1.0) + 2.0 * self.alpha * r
    }

    fn d2sigma(&self, _r: f64) -> f64 {
        2.0 * self.alpha
    }

    fn structural_bounds(&self, m_bound: f64) -> StructuralBounds {
        StructuralBounds {
            s1: self.m - 1.0,
            big_s1: self.m - 1.0 + 2.0 * self.alpha * m_bound,
            big_s2: 2.0 * self.alpha,
            sigma_max: self.sigma(m_bound),
        }
    }
}

/// Nonlinearity selected by name from a run configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NonlinearityKind {
    Pme(PmeNonlinearity),
    PerturbedPme(PerturbedPmeNonlinearity),
}

impl NonlinearityKind {
    /// Builds `"pme"` or `"perturbed_pme"`; `alpha` is ignored for `"pme"`.
    pub fn from_name(name: &str, m: f64, alpha: Option<f64>) -> Result<Self> {
        match name {
            "pme" => Ok(Self::Pme(PmeNonlinearity::new(m)?)),
            "perturbed_pme" => {
                let alpha = alpha.ok_or_else(|| {
                    Error::InvalidParameter("perturbed_pme requires alpha".into())
                })?;
                Ok(Self::PerturbedPme(PerturbedPmeNonlinearity::new(m, alpha)?))
            }
            other => Err(Error::InvalidParameter(format!(
                "unknown nonlinearity {other:?} (expected \"pme\" or \"perturbed_pme\")"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Pme(_) => "pme",
            Self::PerturbedPme(_) => "perturbed_pme",
        }
    }

    /// The PME exponent when this is the pure PME, which is the only case
    /// with closed-form reference solutions.
    pub fn pme_exponent(&self) -> Option<f64> {
        match self {
            Self::Pme(p) => Some(p.m()),
            Self::PerturbedPme(_) => None,
        }
    }

    fn inner(&self) -> &dyn Nonlinearity {
        match self {
            Self::Pme(p) => p,
            Self::PerturbedPme(p) => p,
        }
    }
}

impl Nonlinearity for NonlinearityKind {
    fn sigma(&self, r: f64) -> f64 {
        self.inner().sigma(r)
    }

    fn dsigma(&self, r: f64) -> f64 {
        self.inner().dsigma(r)
    }

    fn d2sigma(&self, r: f64) -> f64 {
        self.inner().d2sigma(r)
    }

    fn structural_bounds(&self, m_bound: f64) -> StructuralBounds {
        self.inner().structural_bounds(m_bound)
    }
}

/// `structural_bounds` as a free function; rejects `M < 0`.
pub fn structural_bounds(nl: &dyn Nonlinearity, m_bound: f64) -> Result<StructuralBounds> {
    if !(m_bound >= 0.0 && m_bound.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "pressure bound must be finite and >= 0, got {m_bound}"
        )));
    }
    Ok(nl.structural_bounds(m_bound))
}

/// PME pressure `m u^(m-1) / (m - 1)` of a density `u`.
pub fn pme_pressure_from_density(m: f64, u: f64) -> Result<f64> {
    if !(m > 1.0 && m.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "PME exponent must satisfy m > 1, got {m}"
        )));
    }
    if !(u >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "density must be >= 0, got {u}"
        )));
    }
    Ok(m * u.powf(m - 1.0) / (m - 1.0))
}
