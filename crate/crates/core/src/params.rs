use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::linalg::Mat3;

/// Safety factor applied to explicit stability bounds unless configured otherwise.
pub const DEFAULT_SAFETY: f64 = 0.9;

/// Binary Maxwell-Stefan diffusivities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffusionCoefficients {
    pub d12: f64,
    pub d13: f64,
    pub d23: f64,
}

impl DiffusionCoefficients {
    pub fn new(d12: f64, d13: f64, d23: f64) -> Result<Self> {
        let d = Self { d12, d13, d23 };
        d.validate()?;
        Ok(d)
    }

    pub fn equal(d: f64) -> Result<Self> {
        Self::new(d, d, d)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("D12", self.d12), ("D13", self.d13), ("D23", self.d23)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn max(&self) -> f64 {
        self.d12.max(self.d13).max(self.d23)
    }
}

/// Which species index carries which physical identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpeciesOrder {
    pub h: usize,
    pub h2: usize,
    pub h2_plus: usize,
}

impl Default for SpeciesOrder {
    fn default() -> Self {
        Self {
            h: 0,
            h2: 1,
            h2_plus: 2,
        }
    }
}

impl SpeciesOrder {
    pub fn validate(&self) -> Result<()> {
        let mut seen = [false; 3];
        for i in [self.h, self.h2, self.h2_plus] {
            if i >= 3 || seen[i] {
                return Err(Error::invalid(format!(
                    "species order {self:?} is not a permutation"
                )));
            }
            seen[i] = true;
        }
        Ok(())
    }
}

/// Linear source `S = Lambda xi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReactionMatrix {
    /// Ionisation channel rate, H2 -> H2+.
    pub lambda1: f64,
    /// Dissociation channel rate, H2 -> 2 H.
    pub lambda2: f64,
    pub matrix: Mat3,
}

impl ReactionMatrix {
    pub fn zero() -> Self {
        Self {
            lambda1: 0.0,
            lambda2: 0.0,
            matrix: [[0.0; 3]; 3],
        }
    }

    /// Both channels consume H2; dissociation yields two H per H2.
    pub fn from_channels(lambda1: f64, lambda2: f64) -> Result<Self> {
        Self::from_channels_ordered(lambda1, lambda2, SpeciesOrder::default())
    }

    pub fn from_channels_ordered(lambda1: f64, lambda2: f64, order: SpeciesOrder) -> Result<Self> {
        order.validate()?;
        for (name, v) in [("lambda1", lambda1), ("lambda2", lambda2)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(format!(
                    "{name} must be finite and nonnegative, got {v}"
                )));
            }
        }
        let mut m = [[0.0; 3]; 3];
        m[order.h][order.h2] = 2.0 * lambda2;
        m[order.h2][order.h2] = -(lambda1 + lambda2);
        m[order.h2_plus][order.h2] = lambda1;
        Ok(Self {
            lambda1,
            lambda2,
            matrix: m,
        })
    }

    /// Arbitrary rate matrix; channel rates are read off the default species order.
    pub fn from_matrix(matrix: Mat3) -> Result<Self> {
        if matrix.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid("reaction matrix entries must be finite"));
        }
        let o = SpeciesOrder::default();
        Ok(Self {
            lambda1: matrix[o.h2_plus][o.h2].max(0.0),
            lambda2: (0.5 * matrix[o.h][o.h2]).max(0.0),
            matrix,
        })
    }

    pub fn is_zero(&self) -> bool {
        self.matrix.iter().flatten().all(|&v| v == 0.0)
    }

    /// True when the source leaves the pointwise mole-fraction sum unchanged.
    pub fn conserves_sigma(&self) -> bool {
        (0..3).all(|j| (self.matrix[0][j] + self.matrix[1][j] + self.matrix[2][j]).abs() <= 1e-15)
    }

    /// Maximum absolute row sum.
    pub fn inf_norm(&self) -> f64 {
        self.matrix
            .iter()
            .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum Splitting {
    Lie,
    Strang,
    Iterative { iterations: usize },
}

impl Splitting {
    pub fn name(&self) -> &'static str {
        match self {
            Splitting::Lie => "lie",
            Splitting::Strang => "strang",
            Splitting::Iterative { .. } => "iterative",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DtPolicy {
    AutoStable { safety: f64 },
    Fixed { dt: f64 },
}

impl DtPolicy {
    pub fn auto() -> Self {
        DtPolicy::AutoStable {
            safety: DEFAULT_SAFETY,
        }
    }

    /// Safety factor used for the sub-cycling bounds.
    pub fn safety(&self) -> f64 {
        match *self {
            DtPolicy::AutoStable { safety } => safety,
            DtPolicy::Fixed { .. } => DEFAULT_SAFETY,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialCondition {
    /// Piecewise-linear xi1, constant xi2 = 0.2, xi3 from the closure.
    DuncanToor,
    Uniform {
        composition: [f64; 3],
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputSpec {
    /// Number of snapshots including the initial and final states.
    pub snapshots: usize,
    pub dir: Option<String>,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            snapshots: 11,
            dir: None,
        }
    }
}

/// Fully resolved run description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub grid: Grid1D,
    pub t_end: f64,
    pub velocity: f64,
    pub diff: DiffusionCoefficients,
    pub reactions: ReactionMatrix,
    pub splitting: Splitting,
    pub dt_policy: DtPolicy,
    pub initial: InitialCondition,
    pub output: OutputSpec,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(Error::invalid(format!(
                "t_end must be finite and nonnegative, got {}",
                self.t_end
            )));
        }
        if !self.velocity.is_finite() {
            return Err(Error::invalid("velocity must be finite"));
        }
        self.diff.validate()?;
        match self.dt_policy {
            DtPolicy::AutoStable { safety } if !(safety > 0.0 && safety <= 1.0) => {
                return Err(Error::invalid(format!(
                    "safety must lie in (0, 1], got {safety}"
                )));
            }
            DtPolicy::Fixed { dt } if !(dt.is_finite() && dt > 0.0) => {
                return Err(Error::invalid(format!(
                    "fixed dt must be positive, got {dt}"
                )));
            }
            _ => {}
        }
        if let Splitting::Iterative { iterations: 0 } = self.splitting {
            return Err(Error::invalid(
                "iterative splitting needs at least one iteration",
            ));
        }
        if self.output.snapshots == 0 {
            return Err(Error::invalid("at least one snapshot is required"));
        }
        if self
            .reactions
            .matrix
            .iter()
            .flatten()
            .any(|v| !v.is_finite())
        {
            return Err(Error::invalid("reaction matrix entries must be finite"));
        }
        Ok(())
    }

    /// Macro time step requested by the policy, before rounding to divide `t_end`.
    pub fn nominal_dt(&self) -> Result<f64> {
        match self.dt_policy {
            DtPolicy::AutoStable { safety } => {
                stable_dt(&self.diff, self.grid.dx(), self.velocity, safety)
            }
            DtPolicy::Fixed { dt } => Ok(dt),
        }
    }
}

/// Explicit stability bound for one macro step.
///
/// `safety * min(dx^2 / (2 D_max), dx / |v|)`; the convective term is dropped
/// when `v == 0`.
pub fn stable_dt(diff: &DiffusionCoefficients, dx: f64, velocity: f64, safety: f64) -> Result<f64> {
    if !(dx.is_finite() && dx > 0.0) {
        return Err(Error::invalid(format!("dx must be positive, got {dx}")));
    }
    if !(safety > 0.0 && safety <= 1.0) {
        return Err(Error::invalid(format!(
            "safety must lie in (0, 1], got {safety}"
        )));
    }
    if !velocity.is_finite() {
        return Err(Error::invalid("velocity must be finite"));
    }
    diff.validate()?;
    let diffusive = dx * dx / (2.0 * diff.max());
    let bound = if velocity == 0.0 {
        diffusive
    } else {
        diffusive.min(dx / velocity.abs())
    };
    Ok(safety * bound)
}

/// Diffusive half of [`stable_dt`].
pub(crate) fn diffusive_limit(diff: &DiffusionCoefficients, dx: f64, safety: f64) -> f64 {
    safety * (dx * dx / (2.0 * diff.max()))
}

/// Convective CFL limit, infinite for `v == 0`.
pub(crate) fn convective_limit(velocity: f64, dx: f64, safety: f64) -> f64 {
    if velocity == 0.0 {
        f64::INFINITY
    } else {
        safety * dx / velocity.abs()
    }
}
