use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Stage};
use crate::grid::Grid1D;

/// Number of transported species.
pub const NUM_SPECIES: usize = 3;

/// Width of the band outside `[0, 1]` that is silently clamped.
pub const CLIP_TOL: f64 = 1e-12;

/// Mole-fraction fields of the three species at one time level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeciesState {
    pub xi: [Vec<f64>; NUM_SPECIES],
    pub time: f64,
}

/// Discrete norm selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Norm {
    L1,
    L2,
    Linf,
}

impl Norm {
    pub const ALL: [Norm; 3] = [Norm::L1, Norm::L2, Norm::Linf];

    pub fn name(self) -> &'static str {
        match self {
            Norm::L1 => "L1",
            Norm::L2 => "L2",
            Norm::Linf => "Linf",
        }
    }
}

impl SpeciesState {
    pub fn new(xi: [Vec<f64>; NUM_SPECIES], time: f64) -> Result<Self> {
        let n = xi[0].len();
        for field in &xi[1..] {
            if field.len() != n {
                return Err(Error::GridMismatch {
                    left: n,
                    right: field.len(),
                });
            }
        }
        Ok(Self { xi, time })
    }

    /// Spatially uniform composition.
    pub fn uniform(num_cells: usize, composition: [f64; NUM_SPECIES], time: f64) -> Self {
        Self {
            xi: composition.map(|c| vec![c; num_cells]),
            time,
        }
    }

    /// Sample `profile` at the cell centers of `grid`.
    pub fn from_profile<F>(grid: &Grid1D, time: f64, mut profile: F) -> Result<Self>
    where
        F: FnMut(f64) -> Result<[f64; NUM_SPECIES]>,
    {
        let n = grid.num_cells();
        let mut xi: [Vec<f64>; NUM_SPECIES] = std::array::from_fn(|_| Vec::with_capacity(n));
        for j in 0..n {
            let v = profile(grid.cell_center(j))?;
            for (field, value) in xi.iter_mut().zip(v) {
                field.push(value);
            }
        }
        let mut state = Self { xi, time };
        state.enforce_bounds(Stage::Initial)?;
        Ok(state)
    }

    pub fn num_cells(&self) -> usize {
        self.xi[0].len()
    }

    pub fn composition(&self, j: usize) -> [f64; NUM_SPECIES] {
        [self.xi[0][j], self.xi[1][j], self.xi[2][j]]
    }

    /// Pointwise sum of the mole fractions.
    pub fn sigma(&self) -> Vec<f64> {
        (0..self.num_cells())
            .map(|j| self.xi[0][j] + self.xi[1][j] + self.xi[2][j])
            .collect()
    }

    /// Discrete amount `sum_j xi_i(j) dx` of each species.
    pub fn total_moles(&self, grid: &Grid1D) -> [f64; NUM_SPECIES] {
        let dx = grid.dx();
        self.xi.each_ref().map(|f| f.iter().sum::<f64>() * dx)
    }

    /// Apply the clipping policy.
    ///
    /// Values within `CLIP_TOL` outside `[0, 1]` are clamped onto the interval,
    /// anything further out (or non-finite) is a step failure. Returns the
    /// largest clamped excursion.
    pub fn enforce_bounds(&mut self, stage: Stage) -> Result<f64> {
        let mut worst = 0.0_f64;
        for (species, field) in self.xi.iter_mut().enumerate() {
            for (cell, v) in field.iter_mut().enumerate() {
                let x = *v;
                if (0.0..=1.0).contains(&x) {
                    continue;
                }
                let excess = if x < 0.0 { -x } else { x - 1.0 };
                if !(excess < CLIP_TOL) {
                    return Err(Error::StepFailure {
                        stage,
                        species,
                        cell,
                        value: x,
                    });
                }
                worst = worst.max(excess);
                *v = x.clamp(0.0, 1.0);
            }
        }
        Ok(worst)
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.num_cells() != other.num_cells() {
            return Err(Error::GridMismatch {
                left: self.num_cells(),
                right: other.num_cells(),
            });
        }
        let scale = self.time.abs().max(other.time.abs()).max(1.0);
        if (self.time - other.time).abs() > 1e-12 * scale {
            return Err(Error::invalid(format!(
                "states at different times {} and {}",
                self.time, other.time
            )));
        }
        Ok(())
    }
}

/// Per-species discrete distance between two states on the same grid.
///
/// L1 and L2 are weighted by `dx`; L-infinity is the plain maximum.
pub fn norm(
    a: &SpeciesState,
    b: &SpeciesState,
    grid: &Grid1D,
    which: Norm,
) -> Result<[f64; NUM_SPECIES]> {
    a.check_compatible(b)?;
    if a.num_cells() != grid.num_cells() {
        return Err(Error::GridMismatch {
            left: a.num_cells(),
            right: grid.num_cells(),
        });
    }
    let dx = grid.dx();
    let mut out = [0.0; NUM_SPECIES];
    for (i, o) in out.iter_mut().enumerate() {
        let diffs = a.xi[i].iter().zip(&b.xi[i]).map(|(x, y)| (x - y).abs());
        *o = match which {
            Norm::L1 => diffs.sum::<f64>() * dx,
            Norm::L2 => (diffs.map(|d| d * d).sum::<f64>() * dx).sqrt(),
            Norm::Linf => diffs.fold(0.0, f64::max),
        };
    }
    Ok(out)
}

/// Largest pointwise difference over all species.
pub fn max_abs_diff(a: &SpeciesState, b: &SpeciesState) -> f64 {
    a.xi.iter()
        .zip(&b.xi)
        .flat_map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q).abs()))
        .fold(0.0, f64::max)
}
