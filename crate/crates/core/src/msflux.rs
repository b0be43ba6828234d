//! Per-face Maxwell-Stefan flux solve.
//!
//! At every face the molar fluxes `(N1, N2, N3)` solve
//!
//! ```text
//! (xi2 N1 - xi1 N2)/D12 + (xi3 N1 - xi1 N3)/D13 = -d xi1/dx
//! (xi1 N2 - xi2 N1)/D12 + (xi3 N2 - xi2 N3)/D23 = -d xi2/dx
//!  N1 + N2 + N3                                 = 0
//! ```
//!
//! assembled as a dense 3x3 system and solved by LU with partial pivoting.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::grid::Grid1D;
use crate::linalg::{Lu, Mat3, Vec3};
use crate::params::DiffusionCoefficients;
use crate::state::{SpeciesState, NUM_SPECIES};

/// Face-interpolated composition and the gradients of xi1, xi2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceState {
    pub xi: Vec3,
    pub grad: [f64; 2],
}

/// Coefficient matrix of the face system.
pub fn ms_matrix(xi: &Vec3, diff: &DiffusionCoefficients) -> Mat3 {
    let [x1, x2, x3] = *xi;
    let DiffusionCoefficients { d12, d13, d23 } = *diff;
    [
        [x2 / d12 + x3 / d13, -x1 / d12, -x1 / d13],
        [-x2 / d12, x1 / d12 + x3 / d23, -x2 / d23],
        [1.0, 1.0, 1.0],
    ]
}

pub fn solve_face_flux(fs: &FaceState, diff: &DiffusionCoefficients) -> Result<Vec3> {
    let a = ms_matrix(&fs.xi, diff);
    let lu = Lu::factor(&a).map_err(|s| Error::SingularSystem {
        face: None,
        rel_det: s.rel_det,
    })?;
    Ok(lu.solve(&[-fs.grad[0], -fs.grad[1], 0.0]))
}

/// Residuals of the two Maxwell-Stefan relations and the closure under `n`,
/// evaluated term by term.
pub fn ms_residual(fs: &FaceState, diff: &DiffusionCoefficients, n: &Vec3) -> Vec3 {
    let [x1, x2, x3] = fs.xi;
    let [n1, n2, n3] = *n;
    let r1 = (x2 * n1 - x1 * n2) / diff.d12 + (x3 * n1 - x1 * n3) / diff.d13 + fs.grad[0];
    let r2 = (x1 * n2 - x2 * n1) / diff.d12 + (x3 * n2 - x2 * n3) / diff.d23 + fs.grad[1];
    [r1, r2, n1 + n2 + n3]
}

/// Molar fluxes on every face of the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxField {
    pub n: [Vec<f64>; NUM_SPECIES],
}

impl FluxField {
    pub fn num_faces(&self) -> usize {
        self.n[0].len()
    }

    pub fn face(&self, f: usize) -> Vec3 {
        [self.n[0][f], self.n[1][f], self.n[2][f]]
    }

    /// `max_f |N1 + N2 + N3|`.
    pub fn closure_residual(&self) -> f64 {
        (0..self.num_faces())
            .map(|f| (self.n[0][f] + self.n[1][f] + self.n[2][f]).abs())
            .fold(0.0, f64::max)
    }
}

/// Face state between cells `f-1` and `f`: arithmetic-mean composition from
/// `coeff`, central gradient from `grad`.
pub fn interior_face_state(
    coeff: &SpeciesState,
    grad: &SpeciesState,
    f: usize,
    dx: f64,
) -> FaceState {
    let (l, r) = (f - 1, f);
    FaceState {
        xi: std::array::from_fn(|i| 0.5 * (coeff.xi[i][l] + coeff.xi[i][r])),
        grad: [
            (grad.xi[0][r] - grad.xi[0][l]) / dx,
            (grad.xi[1][r] - grad.xi[1][l]) / dx,
        ],
    }
}

pub fn compute_flux_field(
    state: &SpeciesState,
    diff: &DiffusionCoefficients,
    grid: &Grid1D,
    exec: Execution,
) -> Result<FluxField> {
    compute_flux_field_frozen(state, state, diff, grid, exec)
}

/// Flux field with the Maxwell-Stefan coefficients taken from `coeff` and the
/// driving gradients from `grad`. Boundary faces carry zero flux.
pub fn compute_flux_field_frozen(
    grad: &SpeciesState,
    coeff: &SpeciesState,
    diff: &DiffusionCoefficients,
    grid: &Grid1D,
    exec: Execution,
) -> Result<FluxField> {
    let nc = grid.num_cells();
    for s in [grad, coeff] {
        if s.num_cells() != nc {
            return Err(Error::GridMismatch {
                left: s.num_cells(),
                right: nc,
            });
        }
    }
    let dx = grid.dx();
    let interior = nc - 1;
    let solved = exec.map_indices(interior, |k| {
        let f = k + 1;
        solve_face_flux(&interior_face_state(coeff, grad, f, dx), diff).map_err(|e| match e {
            Error::SingularSystem { rel_det, .. } => Error::SingularSystem {
                face: Some(f),
                rel_det,
            },
            other => other,
        })
    });

    let nf = grid.num_faces();
    let mut n: [Vec<f64>; NUM_SPECIES] = std::array::from_fn(|_| vec![0.0; nf]);
    for (k, r) in solved.into_iter().enumerate() {
        let v = r?;
        for i in 0..NUM_SPECIES {
            n[i][k + 1] = v[i];
        }
    }
    Ok(FluxField { n })
}

/// Maxima collected by [`flux_self_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluxCheckReport {
    pub samples: usize,
    pub max_plugback_residual: f64,
    pub max_closure_residual: f64,
    pub max_fick_deviation: f64,
    pub max_semi_degenerate_drift: f64,
}

impl FluxCheckReport {
    pub const PLUGBACK_TOL: f64 = 1e-12;
    pub const CLOSURE_TOL: f64 = 1e-13;
    pub const FICK_TOL: f64 = 1e-12;
    pub const SEMI_DEGENERATE_TOL: f64 = 1e-12;

    pub fn passed(&self) -> bool {
        self.max_plugback_residual < Self::PLUGBACK_TOL
            && self.max_closure_residual < Self::CLOSURE_TOL
            && self.max_fick_deviation < Self::FICK_TOL
            && self.max_semi_degenerate_drift < Self::SEMI_DEGENERATE_TOL
    }
}

/// Uniform sample from the composition simplex.
pub fn random_composition(rng: &mut impl Rng) -> Vec3 {
    let (a, b): (f64, f64) = (rng.gen(), rng.gen());
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    [lo, hi - lo, 1.0 - hi]
}

fn random_diffusivities(rng: &mut impl Rng) -> DiffusionCoefficients {
    let mut d = || 10f64.powf(rng.gen_range(-1.3..0.0));
    DiffusionCoefficients {
        d12: d(),
        d13: d(),
        d23: d(),
    }
}

/// Randomised audit of the face solver: plug-back residuals, closure,
/// the equal-diffusivity Fick reduction and the `D12 = D13` decoupling of N1.
pub fn flux_self_check(samples: usize, seed: u64) -> Result<FluxCheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = FluxCheckReport {
        samples,
        max_plugback_residual: 0.0,
        max_closure_residual: 0.0,
        max_fick_deviation: 0.0,
        max_semi_degenerate_drift: 0.0,
    };
    for _ in 0..samples {
        let xi = random_composition(&mut rng);
        let grad = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
        let fs = FaceState { xi, grad };

        let diff = random_diffusivities(&mut rng);
        let n = solve_face_flux(&fs, &diff)?;
        let r = ms_residual(&fs, &diff, &n);
        report.max_plugback_residual = report.max_plugback_residual.max(r[0].abs()).max(r[1].abs());
        report.max_closure_residual = report.max_closure_residual.max(r[2].abs());

        let d = 10f64.powf(rng.gen_range(-1.3..0.0));
        let eq = DiffusionCoefficients {
            d12: d,
            d13: d,
            d23: d,
        };
        let n = solve_face_flux(&fs, &eq)?;
        let g = [grad[0], grad[1], -grad[0] - grad[1]];
        for i in 0..3 {
            report.max_fick_deviation = report.max_fick_deviation.max((n[i] + d * g[i]).abs());
        }

        // move material between species 2 and 3 at fixed xi1
        let semi = DiffusionCoefficients {
            d12: d,
            d13: d,
            d23: diff.d23,
        };
        let base = solve_face_flux(&fs, &semi)?;
        let rest = xi[1] + xi[2];
        let split = rng.gen::<f64>() * rest;
        let moved = FaceState {
            xi: [xi[0], split, rest - split],
            grad,
        };
        let n = solve_face_flux(&moved, &semi)?;
        report.max_semi_degenerate_drift =
            report.max_semi_degenerate_drift.max((n[0] - base[0]).abs());
    }
    Ok(report)
}
