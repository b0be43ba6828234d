use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform cell-centered 1D finite-volume grid.
///
/// Cell `j` spans `[lo + j dx, lo + (j+1) dx]`; face `f` sits at `lo + f dx`,
/// so faces `0` and `num_cells` are the domain boundaries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    num_cells: usize,
    domain_lo: f64,
    domain_hi: f64,
}

impl Grid1D {
    pub fn new(num_cells: usize, domain_lo: f64, domain_hi: f64) -> Result<Self> {
        if num_cells == 0 {
            return Err(Error::invalid("grid needs at least one cell"));
        }
        if !(domain_lo.is_finite() && domain_hi.is_finite()) || domain_hi <= domain_lo {
            return Err(Error::invalid(format!(
                "invalid domain [{domain_lo}, {domain_hi}]"
            )));
        }
        Ok(Self {
            num_cells,
            domain_lo,
            domain_hi,
        })
    }

    /// `num_cells` cells on `[0, 1]`.
    pub fn unit(num_cells: usize) -> Result<Self> {
        Self::new(num_cells, 0.0, 1.0)
    }

    pub fn num_cells(&self) -> usize {
        self.num_cells
    }

    pub fn num_faces(&self) -> usize {
        self.num_cells + 1
    }

    pub fn domain_lo(&self) -> f64 {
        self.domain_lo
    }

    pub fn domain_hi(&self) -> f64 {
        self.domain_hi
    }

    pub fn length(&self) -> f64 {
        self.domain_hi - self.domain_lo
    }

    pub fn dx(&self) -> f64 {
        self.length() / self.num_cells as f64
    }

    pub fn cell_center(&self, j: usize) -> f64 {
        self.domain_lo + (j as f64 + 0.5) * self.dx()
    }

    pub fn face_position(&self, f: usize) -> f64 {
        self.domain_lo + f as f64 * self.dx()
    }

    pub fn cell_centers(&self) -> Vec<f64> {
        (0..self.num_cells).map(|j| self.cell_center(j)).collect()
    }
}
