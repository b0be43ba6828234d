//! Split sub-step propagators for diffusion, reaction and convection.
//!
//! Each operator is also available in rate form (`d xi / dt` per cell), which
//! the iterative driver combines with frozen sources.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Stage};
use crate::exec::Execution;
use crate::grid::Grid1D;
use crate::linalg::{expm3, mat_vec, Mat3};
use crate::msflux::{compute_flux_field_frozen, FluxField};
use crate::params::{DiffusionCoefficients, ReactionMatrix};
use crate::state::{SpeciesState, NUM_SPECIES};

pub type Fields = [Vec<f64>; NUM_SPECIES];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubstepReport {
    pub steps_taken: usize,
    pub max_xi_violation: f64,
    pub dt_used: f64,
    /// Sweeps performed by the iterative driver (0 for Lie and Strang).
    pub iterations: usize,
    pub converged: bool,
    /// Final iterate increment in the max norm (iterative driver only).
    pub last_increment: f64,
}

/// `-(N_{j+1/2} - N_{j-1/2}) / dx` with coefficients from `coeff` and gradients from `grad`.
pub fn diffusion_rate(
    grad: &SpeciesState,
    coeff: &SpeciesState,
    diff: &DiffusionCoefficients,
    grid: &Grid1D,
    exec: Execution,
) -> Result<(Fields, FluxField)> {
    let flux = compute_flux_field_frozen(grad, coeff, diff, grid, exec)?;
    let inv_dx = 1.0 / grid.dx();
    let rates = flux
        .n
        .each_ref()
        .map(|n| n.windows(2).map(|w| -(w[1] - w[0]) * inv_dx).collect());
    Ok((rates, flux))
}

/// Upwind discretisation of `v d xi/dx`. The upstream edge cell has no upwind
/// neighbour and sees a zero gradient, so it holds its value.
pub fn convection_rate(state: &SpeciesState, velocity: f64, grid: &Grid1D) -> Fields {
    let n = state.num_cells();
    let k = velocity / grid.dx();
    state.xi.each_ref().map(|xi| {
        (0..n)
            .map(|j| {
                if velocity > 0.0 {
                    if j + 1 < n {
                        k * (xi[j + 1] - xi[j])
                    } else {
                        0.0
                    }
                } else if velocity < 0.0 {
                    if j > 0 {
                        k * (xi[j] - xi[j - 1])
                    } else {
                        0.0
                    }
                } else {
                    0.0
                }
            })
            .collect()
    })
}

pub fn reaction_rate(state: &SpeciesState, reactions: &ReactionMatrix) -> Fields {
    let n = state.num_cells();
    let m = &reactions.matrix;
    let mut out: Fields = std::array::from_fn(|_| Vec::with_capacity(n));
    for j in 0..n {
        let s = mat_vec(m, &state.composition(j));
        for i in 0..NUM_SPECIES {
            out[i].push(s[i]);
        }
    }
    out
}

/// `xi + dt * rate`, unchecked.
pub(crate) fn euler_update(state: &SpeciesState, rate: &Fields, dt: f64) -> SpeciesState {
    let xi = std::array::from_fn(|i| {
        state.xi[i]
            .iter()
            .zip(&rate[i])
            .map(|(x, r)| x + dt * r)
            .collect()
    });
    SpeciesState {
        xi,
        time: state.time + dt,
    }
}

/// One explicit finite-volume step of the Maxwell-Stefan diffusion, also
/// returning the fluxes it used.
pub fn diffusion_step_with_flux(
    state: &SpeciesState,
    diff: &DiffusionCoefficients,
    grid: &Grid1D,
    dt: f64,
    exec: Execution,
) -> Result<(SpeciesState, FluxField, f64)> {
    let (rate, flux) = diffusion_rate(state, state, diff, grid, exec)?;
    let mut next = euler_update(state, &rate, dt);
    let violation = next.enforce_bounds(Stage::Diffusion)?;
    Ok((next, flux, violation))
}

pub fn diffusion_step(
    state: &SpeciesState,
    diff: &DiffusionCoefficients,
    grid: &Grid1D,
    dt: f64,
    exec: Execution,
) -> Result<SpeciesState> {
    diffusion_step_with_flux(state, diff, grid, dt, exec).map(|(s, _, _)| s)
}

/// Propagator `exp(Lambda dt)` of the reaction sub-problem.
pub fn reaction_propagator(reactions: &ReactionMatrix, dt: f64) -> Mat3 {
    expm3(&reactions.matrix.map(|r| r.map(|v| v * dt)))
}

/// Exact solve of `d xi/dt = Lambda xi` in every cell.
pub fn reaction_step(state: &SpeciesState, reactions: &ReactionMatrix, dt: f64) -> SpeciesState {
    if reactions.is_zero() {
        return SpeciesState {
            xi: state.xi.clone(),
            time: state.time + dt,
        };
    }
    let p = reaction_propagator(reactions, dt);
    let n = state.num_cells();
    let mut xi: Fields = std::array::from_fn(|_| Vec::with_capacity(n));
    for j in 0..n {
        let c = mat_vec(&p, &state.composition(j));
        for i in 0..NUM_SPECIES {
            xi[i].push(c[i]);
        }
    }
    SpeciesState {
        xi,
        time: state.time + dt,
    }
}

/// Courant number `|v| dt / dx`.
pub fn courant(velocity: f64, grid: &Grid1D, dt: f64) -> f64 {
    velocity.abs() * dt / grid.dx()
}

/// First-order upwind step of `d xi/dt = v d xi/dx`.
pub fn convection_step(
    state: &SpeciesState,
    velocity: f64,
    grid: &Grid1D,
    dt: f64,
) -> Result<SpeciesState> {
    let c = courant(velocity, grid, dt);
    if !(c <= 1.0 + 1e-12) {
        return Err(Error::invalid(format!("CFL number {c} exceeds 1")));
    }
    if velocity == 0.0 {
        return Ok(SpeciesState {
            xi: state.xi.clone(),
            time: state.time + dt,
        });
    }
    let rate = convection_rate(state, velocity, grid);
    let mut next = euler_update(state, &rate, dt);
    next.enforce_bounds(Stage::Convection)?;
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::duncan_toor_initial_state;
    use proptest::prelude::*;

    fn semi() -> DiffusionCoefficients {
        DiffusionCoefficients::new(0.833, 0.833, 0.168).unwrap()
    }

    #[test]
    fn uniform_state_is_a_fixed_point() {
        let g = Grid1D::unit(16).unwrap();
        let s = SpeciesState::uniform(16, [0.25, 0.25, 0.5], 0.0);
        let d = diffusion_step(&s, &semi(), &g, 1e-4, Execution::Sequential).unwrap();
        assert_eq!(d.xi, s.xi);
        let c = convection_step(&s, 0.3, &g, 0.1).unwrap();
        assert_eq!(c.xi, s.xi);
        let c = convection_step(&s, -0.3, &g, 0.1).unwrap();
        assert_eq!(c.xi, s.xi);
    }

    #[test]
    fn two_cell_diffusion_by_hand() {
        let g = Grid1D::unit(2).unwrap();
        let s = SpeciesState::new([vec![0.8, 0.0], vec![0.2, 0.2], vec![0.0, 0.8]], 0.0).unwrap();
        let d = DiffusionCoefficients::equal(0.5).unwrap();
        let (next, flux, _) =
            diffusion_step_with_flux(&s, &d, &g, 0.1, Execution::Sequential).unwrap();
        assert!((flux.n[0][1] - 0.8).abs() < 1e-15);
        assert!((next.xi[0][0] - 0.64).abs() < 1e-15);
        assert!((next.xi[0][1] - 0.16).abs() < 1e-15);

        // equal diffusivities reduce to a scalar heat-equation step per species
        for i in 0..3 {
            let u = &s.xi[i];
            let lap0 = (u[1] - u[0]) / (0.5 * 0.5);
            let heat = [u[0] + 0.1 * 0.5 * lap0, u[1] - 0.1 * 0.5 * lap0];
            assert!((next.xi[i][0] - heat[0]).abs() < 1e-15);
            assert!((next.xi[i][1] - heat[1]).abs() < 1e-15);
        }
    }

    #[test]
    fn diffusion_conserves_moles_on_initial_profile() {
        let g = Grid1D::unit(140).unwrap();
        let s = duncan_toor_initial_state(&g).unwrap();
        let dt = crate::params::stable_dt(&semi(), g.dx(), 0.0, 0.9).unwrap();
        let next = diffusion_step(&s, &semi(), &g, dt, Execution::Parallel).unwrap();
        let before = s.total_moles(&g);
        let after = next.total_moles(&g);
        for i in 0..3 {
            assert!((before[i] - after[i]).abs() < 1e-13);
        }
        let sigma = next.sigma();
        assert!(sigma.iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn unstable_step_is_reported() {
        let g = Grid1D::unit(8).unwrap();
        let s = SpeciesState::new(
            [
                vec![0.9, 0.0, 0.9, 0.0, 0.9, 0.0, 0.9, 0.0],
                vec![0.1; 8],
                vec![0.0, 0.9, 0.0, 0.9, 0.0, 0.9, 0.0, 0.9],
            ],
            0.0,
        )
        .unwrap();
        let err = diffusion_step(&s, &semi(), &g, 1.0, Execution::Sequential).unwrap_err();
        assert!(matches!(
            err,
            Error::StepFailure {
                stage: Stage::Diffusion,
                ..
            }
        ));
    }

    #[test]
    fn zero_reaction_matrix_is_identity() {
        let g = Grid1D::unit(10).unwrap();
        let s = duncan_toor_initial_state(&g).unwrap();
        let r = reaction_step(&s, &ReactionMatrix::zero(), 0.7);
        assert_eq!(r.xi, s.xi);
        let p = reaction_propagator(&ReactionMatrix::zero(), 3.0);
        assert_eq!(p, crate::linalg::identity());
    }

    #[test]
    fn ionisation_decay() {
        let s = SpeciesState::uniform(3, [0.3, 0.2, 0.5], 0.0);
        let r = ReactionMatrix::from_channels(1.0, 0.0).unwrap();
        let out = reaction_step(&s, &r, 0.5);
        let decayed = 0.2 * (-0.5f64).exp();
        assert!((out.xi[1][0] - decayed).abs() < 1e-15);
        assert!((out.xi[1][0] - 0.12131).abs() < 1e-5);
        assert!((out.xi[2][0] - (0.5 + 0.2 * (1.0 - (-0.5f64).exp()))).abs() < 1e-15);
        assert_eq!(out.xi[0][0], 0.3);
    }

    #[test]
    fn dissociation_long_time_limit() {
        let s = SpeciesState::uniform(2, [0.1, 0.3, 0.6], 0.0);
        let r = ReactionMatrix::from_channels(0.0, 1.0).unwrap();
        let out = reaction_step(&s, &r, 60.0);
        assert!((out.xi[0][0] - (0.1 + 2.0 * 0.3)).abs() < 1e-14);
        assert!(out.xi[1][0].abs() < 1e-14);
        assert!((out.xi[2][0] - 0.6).abs() < 1e-14);
    }

    #[test]
    fn zero_velocity_is_identity() {
        let g = Grid1D::unit(10).unwrap();
        let s = duncan_toor_initial_state(&g).unwrap();
        let out = convection_step(&s, 0.0, &g, 100.0).unwrap();
        assert_eq!(out.xi, s.xi);
    }

    #[test]
    fn unit_courant_shifts_left() {
        let g = Grid1D::unit(20).unwrap();
        let step: Vec<f64> = (0..20).map(|j| if j < 8 { 0.7 } else { 0.1 }).collect();
        let s = SpeciesState::new(
            [
                step.clone(),
                vec![0.2; 20],
                step.iter().map(|v| 0.8 - v).collect(),
            ],
            0.0,
        )
        .unwrap();
        let v = 0.01;
        let out = convection_step(&s, v, &g, g.dx() / v).unwrap();
        for j in 0..19 {
            assert!((out.xi[0][j] - s.xi[0][j + 1]).abs() < 1e-15);
            assert!((out.xi[2][j] - s.xi[2][j + 1]).abs() < 1e-15);
        }
        assert_eq!(out.xi[0][19], s.xi[0][19]);

        // mirrored for v < 0
        let out = convection_step(&s, -v, &g, g.dx() / v).unwrap();
        for j in 1..20 {
            assert!((out.xi[0][j] - s.xi[0][j - 1]).abs() < 1e-15);
        }
    }

    #[test]
    fn cfl_violation_rejected() {
        let g = Grid1D::unit(10).unwrap();
        let s = SpeciesState::uniform(10, [0.3; 3], 0.0);
        assert!(matches!(
            convection_step(&s, 1.0, &g, 0.2),
            Err(Error::InvalidArgument(_))
        ));
    }

    proptest! {
        #[test]
        fn upwind_is_monotone(seed in any::<u64>(), c in 0.0f64..=1.0, sign in prop::bool::ANY) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let g = Grid1D::unit(30).unwrap();
            let cells: Vec<[f64; 3]> = (0..30).map(|_| crate::msflux::random_composition(&mut rng)).collect();
            let s = SpeciesState::new(std::array::from_fn(|i| cells.iter().map(|c| c[i]).collect()), 0.0).unwrap();
            let v: f64 = if sign { 0.5 } else { -0.5 } * rng.gen_range(0.5..1.5);
            let dt = c * g.dx() / v.abs();
            let out = convection_step(&s, v, &g, dt).unwrap();
            for i in 0..3 {
                let (lo, hi) = s.xi[i].iter().fold((1.0f64, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
                prop_assert!(out.xi[i].iter().all(|&x| x >= lo - 1e-15 && x <= hi + 1e-15));
            }
        }

        #[test]
        fn reaction_conserves_hydrogen_nuclei(l1 in 0.0f64..3.0, l2 in 0.0f64..3.0, dt in 0.0f64..2.0, seed in any::<u64>()) {
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let c = crate::msflux::random_composition(&mut rng);
            let s = SpeciesState::uniform(1, c, 0.0);
            let out = reaction_step(&s, &ReactionMatrix::from_channels(l1, l2).unwrap(), dt);
            let nuclei = |x: &SpeciesState| x.xi[0][0] + 2.0 * x.xi[1][0] + 2.0 * x.xi[2][0];
            prop_assert!((nuclei(&out) - nuclei(&s)).abs() < 1e-12);
        }
    }
}
