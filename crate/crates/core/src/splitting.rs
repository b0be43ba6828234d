//! Time integration by operator splitting, and the main run loop.
//!
//! Every sub-operator is sub-cycled so that its explicit stability bound holds.
//! The number of sub-cycles is the smallest power of two meeting the bound,
//! which means macro steps from a dyadic ladder share the same inner step.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Stage};
use crate::exec::Execution;
use crate::operators::{
    convection_rate, convection_step, diffusion_rate, diffusion_step_with_flux, euler_update,
    reaction_rate, reaction_step, Fields, SubstepReport,
};
use crate::params::{convective_limit, diffusive_limit, ScenarioConfig, Splitting};
use crate::state::{max_abs_diff, SpeciesState, NUM_SPECIES};

/// Iterate increment below which the iterative driver stops early.
pub const ITERATION_TOL: f64 = 1e-10;

const MAX_SUBCYCLE_DOUBLINGS: u32 = 40;

/// Maxima of the audited invariants over all macro steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvariantAudit {
    pub max_closure_residual: f64,
    pub max_sigma_drift: f64,
    pub max_moles_drift: f64,
    /// The mole-fraction sum is expected to stay at one (sigma = 1 initially, no net mole production).
    pub sigma_audited: bool,
    /// Per-species totals are expected to be conserved (no convection, no reactions).
    pub moles_audited: bool,
}

impl InvariantAudit {
    pub const CLOSURE_TOL: f64 = 1e-12;
    pub const SIGMA_TOL: f64 = 1e-10;
    pub const MOLES_TOL: f64 = 1e-10;

    pub fn passed(&self) -> bool {
        self.max_closure_residual < Self::CLOSURE_TOL
            && (!self.sigma_audited || self.max_sigma_drift < Self::SIGMA_TOL)
            && (!self.moles_audited || self.max_moles_drift < Self::MOLES_TOL)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationInfo {
    pub iterations: usize,
    pub converged: bool,
    /// `max |xi^(k) - xi^(k-1)|` at the end of the interval, one entry per sweep pair.
    pub increments: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub config: ScenarioConfig,
    pub snapshots: Vec<SpeciesState>,
    pub reports: Vec<SubstepReport>,
    pub audit: InvariantAudit,
    /// Macro step actually used (`t_end / steps`).
    pub dt: f64,
    pub steps: usize,
    pub wall_time: f64,
}

impl RunResult {
    pub fn final_state(&self) -> &SpeciesState {
        self.snapshots.last().expect("run always stores a snapshot")
    }
}

/// Smallest power of two `n` with `h / n <= limit`.
pub fn subcycle_count(h: f64, limit: f64) -> Result<usize> {
    let mut n: usize = 1;
    for _ in 0..=MAX_SUBCYCLE_DOUBLINGS {
        if h / n as f64 <= limit * (1.0 + 1e-12) {
            return Ok(n);
        }
        n *= 2;
    }
    Err(Error::invalid(format!(
        "step {h} needs more than 2^{MAX_SUBCYCLE_DOUBLINGS} sub-cycles"
    )))
}

struct Stepper<'a> {
    cfg: &'a ScenarioConfig,
    exec: Execution,
    diff_limit: f64,
    conv_limit: f64,
    react_limit: f64,
    closure: f64,
    steps: usize,
    violation: f64,
}

impl<'a> Stepper<'a> {
    fn new(cfg: &'a ScenarioConfig, exec: Execution) -> Self {
        let dx = cfg.grid.dx();
        let safety = cfg.dt_policy.safety();
        let rn = cfg.reactions.inf_norm();
        Self {
            cfg,
            exec,
            diff_limit: diffusive_limit(&cfg.diff, dx, safety),
            conv_limit: convective_limit(cfg.velocity, dx, safety),
            react_limit: if rn > 0.0 { safety / rn } else { f64::INFINITY },
            closure: 0.0,
            steps: 0,
            violation: 0.0,
        }
    }

    fn take_report(&mut self, dt: f64) -> SubstepReport {
        let r = SubstepReport {
            steps_taken: self.steps.max(1),
            max_xi_violation: self.violation,
            dt_used: dt,
            iterations: 0,
            converged: true,
            last_increment: 0.0,
        };
        self.steps = 0;
        self.violation = 0.0;
        r
    }

    fn diffuse(&mut self, state: &SpeciesState, h: f64) -> Result<SpeciesState> {
        let n = subcycle_count(h, self.diff_limit)?;
        let sub = h / n as f64;
        let mut s = state.clone();
        for _ in 0..n {
            let (next, flux, v) =
                diffusion_step_with_flux(&s, &self.cfg.diff, &self.cfg.grid, sub, self.exec)?;
            self.closure = self.closure.max(flux.closure_residual());
            self.violation = self.violation.max(v);
            s = next;
        }
        self.steps += n;
        Ok(s)
    }

    fn react(&mut self, state: &SpeciesState, h: f64) -> Result<SpeciesState> {
        if self.cfg.reactions.is_zero() {
            return Ok(state.clone());
        }
        let mut s = reaction_step(state, &self.cfg.reactions, h);
        self.violation = self.violation.max(s.enforce_bounds(Stage::Reaction)?);
        self.steps += 1;
        Ok(s)
    }

    fn convect(&mut self, state: &SpeciesState, h: f64) -> Result<SpeciesState> {
        if self.cfg.velocity == 0.0 {
            return Ok(state.clone());
        }
        let n = subcycle_count(h, self.conv_limit)?;
        let sub = h / n as f64;
        let mut s = state.clone();
        for _ in 0..n {
            s = convection_step(&s, self.cfg.velocity, &self.cfg.grid, sub)?;
        }
        self.steps += n;
        Ok(s)
    }

    fn lie(&mut self, state: &SpeciesState, dt: f64) -> Result<SpeciesState> {
        let s = self.diffuse(state, dt)?;
        let s = self.react(&s, dt)?;
        self.convect(&s, dt)
    }

    fn strang(&mut self, state: &SpeciesState, dt: f64) -> Result<SpeciesState> {
        let half = 0.5 * dt;
        let s = self.diffuse(state, half)?;
        let s = self.react(&s, half)?;
        let s = self.convect(&s, dt)?;
        let s = self.react(&s, half)?;
        self.diffuse(&s, half)
    }

    /// Rate of the non-diffusive part `B = convection + reaction`.
    fn b_rate(&self, s: &SpeciesState) -> Fields {
        let mut c = convection_rate(s, self.cfg.velocity, &self.cfg.grid);
        if !self.cfg.reactions.is_zero() {
            let r = reaction_rate(s, &self.cfg.reactions);
            for i in 0..NUM_SPECIES {
                for (a, b) in c[i].iter_mut().zip(&r[i]) {
                    *a += b;
                }
            }
        }
        c
    }

    /// Two-sweep iterative splitting over `[t, t + dt]`.
    ///
    /// The previous iterate is kept as a trajectory on the inner time nodes.
    /// Sweep A integrates diffusion (Maxwell-Stefan matrix from the previous
    /// iterate, gradients from the unknown) with `B(previous)` as a source;
    /// sweep B integrates `B` with sweep A's diffusion rates as a source.
    fn iterative(
        &mut self,
        state: &SpeciesState,
        dt: f64,
        max_iter: usize,
    ) -> Result<(SpeciesState, IterationInfo)> {
        if max_iter == 0 {
            return Err(Error::invalid(
                "iterative splitting needs at least one iteration",
            ));
        }
        let limit = self.diff_limit.min(self.conv_limit).min(self.react_limit);
        let n = subcycle_count(dt, limit)?;
        let h = dt / n as f64;
        let (diff, grid) = (&self.cfg.diff, &self.cfg.grid);

        let mut prev: Vec<SpeciesState> = vec![state.clone(); n + 1];
        let mut info = IterationInfo {
            iterations: 0,
            converged: false,
            increments: Vec::with_capacity(max_iter),
        };
        for _ in 0..max_iter {
            let mut x = state.clone();
            let mut a_rates: Vec<Fields> = Vec::with_capacity(n);
            for node in prev.iter().take(n) {
                let (a, flux) = diffusion_rate(&x, node, diff, grid, self.exec)?;
                self.closure = self.closure.max(flux.closure_residual());
                let mut total = self.b_rate(node);
                add_into(&mut total, &a);
                x = euler_update(&x, &total, h);
                self.violation = self.violation.max(x.enforce_bounds(Stage::Iterative)?);
                a_rates.push(a);
            }

            let mut z = Vec::with_capacity(n + 1);
            z.push(state.clone());
            for a in &a_rates {
                let cur = z.last().expect("non-empty");
                let mut total = self.b_rate(cur);
                add_into(&mut total, a);
                let mut next = euler_update(cur, &total, h);
                self.violation = self.violation.max(next.enforce_bounds(Stage::Iterative)?);
                z.push(next);
            }

            let inc = max_abs_diff(&z[n], &prev[n]);
            info.iterations += 1;
            info.increments.push(inc);
            prev = z;
            self.steps += 2 * n;
            if inc < ITERATION_TOL {
                info.converged = true;
                break;
            }
        }
        let mut out = prev.pop().expect("trajectory has n + 1 nodes");
        out.time = state.time + dt;
        Ok((out, info))
    }
}

fn add_into(total: &mut Fields, a: &Fields) {
    for i in 0..NUM_SPECIES {
        for (t, v) in total[i].iter_mut().zip(&a[i]) {
            *t += *v;
        }
    }
}

/// One Lie step: diffusion, then reaction, then convection, each over `dt`.
pub fn lie_step(state: &SpeciesState, cfg: &ScenarioConfig, dt: f64) -> Result<SpeciesState> {
    check_dt(dt)?;
    Stepper::new(cfg, Execution::default()).lie(state, dt)
}

/// Symmetric composition D(dt/2) R(dt/2) C(dt) R(dt/2) D(dt/2).
pub fn strang_step(state: &SpeciesState, cfg: &ScenarioConfig, dt: f64) -> Result<SpeciesState> {
    check_dt(dt)?;
    Stepper::new(cfg, Execution::default()).strang(state, dt)
}

pub fn iterative_step(
    state: &SpeciesState,
    cfg: &ScenarioConfig,
    dt: f64,
    iterations: usize,
) -> Result<(SpeciesState, IterationInfo)> {
    check_dt(dt)?;
    Stepper::new(cfg, Execution::default()).iterative(state, dt, iterations)
}

/// Sub-cycled diffusion over `dt` alone, as used inside every driver.
pub fn diffusion_propagate(
    state: &SpeciesState,
    cfg: &ScenarioConfig,
    dt: f64,
) -> Result<SpeciesState> {
    check_dt(dt)?;
    Stepper::new(cfg, Execution::default()).diffuse(state, dt)
}

fn check_dt(dt: f64) -> Result<()> {
    if dt.is_finite() && dt > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("dt must be positive, got {dt}")))
    }
}

/// Number of macro steps so that `t_end / steps` does not exceed `dt`.
pub fn macro_steps(t_end: f64, dt: f64) -> usize {
    if t_end <= 0.0 {
        return 0;
    }
    let ratio = t_end / dt;
    let nearest = ratio.round();
    if nearest >= 1.0 && (ratio - nearest).abs() <= 1e-9 * nearest {
        nearest as usize
    } else {
        ratio.ceil() as usize
    }
}

/// Macro step indices at which snapshots are stored.
pub fn snapshot_steps(steps: usize, snapshots: usize) -> Vec<usize> {
    if snapshots <= 1 || steps == 0 {
        return vec![steps];
    }
    let intervals = snapshots - 1;
    let mut out: Vec<usize> = (0..=intervals)
        .map(|k| (k * steps + intervals / 2) / intervals)
        .collect();
    out.dedup();
    out
}

pub fn run(cfg: &ScenarioConfig) -> Result<RunResult> {
    run_with(cfg, Execution::default())
}

pub fn run_with(cfg: &ScenarioConfig, exec: Execution) -> Result<RunResult> {
    cfg.validate()?;
    let started = Instant::now();
    let initial = cfg.initial_state()?;
    let grid = &cfg.grid;

    let steps = macro_steps(cfg.t_end, cfg.nominal_dt()?);
    let dt = if steps == 0 {
        0.0
    } else {
        cfg.t_end / steps as f64
    };
    let wanted = snapshot_steps(steps, cfg.output.snapshots);

    let sigma0_is_one = initial.sigma().iter().all(|v| (v - 1.0).abs() <= 1e-12);
    let moles0 = initial.total_moles(grid);
    let mut audit = InvariantAudit {
        max_closure_residual: 0.0,
        max_sigma_drift: 0.0,
        max_moles_drift: 0.0,
        sigma_audited: sigma0_is_one && cfg.reactions.conserves_sigma(),
        moles_audited: cfg.velocity == 0.0 && cfg.reactions.is_zero(),
    };
    let record = |s: &SpeciesState, audit: &mut InvariantAudit| {
        let drift = s
            .sigma()
            .iter()
            .map(|v| (v - 1.0).abs())
            .fold(0.0, f64::max);
        audit.max_sigma_drift = audit.max_sigma_drift.max(drift);
        let m = s.total_moles(grid);
        for i in 0..NUM_SPECIES {
            audit.max_moles_drift = audit.max_moles_drift.max((m[i] - moles0[i]).abs());
        }
    };
    record(&initial, &mut audit);

    let mut snapshots = Vec::with_capacity(wanted.len());
    let mut next_snap = wanted.iter().peekable();
    if next_snap.peek() == Some(&&0) {
        snapshots.push(initial.clone());
        next_snap.next();
    }

    let mut stepper = Stepper::new(cfg, exec);
    let mut reports = Vec::with_capacity(steps);
    let mut state = initial;
    for n in 0..steps {
        let t0 = n as f64 * dt;
        let stepped = match cfg.splitting {
            Splitting::Lie => stepper.lie(&state, dt).map(|s| (s, None)),
            Splitting::Strang => stepper.strang(&state, dt).map(|s| (s, None)),
            Splitting::Iterative { iterations } => stepper
                .iterative(&state, dt, iterations)
                .map(|(s, i)| (s, Some(i))),
        };
        let (mut next, info) = stepped.map_err(|e| e.at_time(t0))?;
        next.time = (n + 1) as f64 * dt;
        let mut report = stepper.take_report(dt);
        if let Some(info) = info {
            report.iterations = info.iterations;
            report.converged = info.converged;
            report.last_increment = info.increments.last().copied().unwrap_or(0.0);
        }
        reports.push(report);
        record(&next, &mut audit);
        if next_snap.peek() == Some(&&(n + 1)) {
            snapshots.push(next.clone());
            next_snap.next();
        }
        state = next;
    }
    audit.max_closure_residual = stepper.closure;

    Ok(RunResult {
        config: cfg.clone(),
        snapshots,
        reports,
        audit,
        dt,
        steps,
        wall_time: started.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::diffusion_step;
    use crate::params::DtPolicy;
    use crate::scenarios::{duncan_toor_initial_state, make_scenario, ScenarioName};

    fn diffusion_only() -> ScenarioConfig {
        let mut cfg = make_scenario(ScenarioName::SemiDegenerateUphill).cfg;
        cfg.velocity = 0.0;
        cfg
    }

    #[test]
    fn subcycles_are_powers_of_two() {
        assert_eq!(subcycle_count(1.0, 2.0).unwrap(), 1);
        assert_eq!(subcycle_count(1.0, 0.3).unwrap(), 4);
        assert_eq!(subcycle_count(1.0, 0.25).unwrap(), 4);
        assert!(subcycle_count(1.0, 0.0).is_err());
    }

    #[test]
    fn macro_step_rounding() {
        assert_eq!(macro_steps(1.0, 1e-3), 1000);
        assert_eq!(macro_steps(1.0, 0.3), 4);
        assert_eq!(macro_steps(0.0, 0.1), 0);
        assert_eq!(macro_steps(1.0, 2.0), 1);
    }

    #[test]
    fn snapshot_selection() {
        assert_eq!(snapshot_steps(10, 2), vec![0, 10]);
        assert_eq!(snapshot_steps(10, 3), vec![0, 5, 10]);
        assert_eq!(snapshot_steps(0, 5), vec![0]);
        assert_eq!(snapshot_steps(7, 1), vec![7]);
        assert_eq!(snapshot_steps(3, 10), vec![0, 1, 2, 3]);
    }

    #[test]
    fn lie_reduces_to_diffusion() {
        let cfg = diffusion_only();
        let s = duncan_toor_initial_state(&cfg.grid).unwrap();
        let dt = cfg.nominal_dt().unwrap();
        let a = lie_step(&s, &cfg, dt).unwrap();
        let b = diffusion_step(&s, &cfg.diff, &cfg.grid, dt, Execution::Sequential).unwrap();
        assert_eq!(a.xi, b.xi);
    }

    #[test]
    fn strang_reduces_to_diffusion() {
        let cfg = diffusion_only();
        let s = duncan_toor_initial_state(&cfg.grid).unwrap();
        // four inner diffusion steps: two per half step
        let dt = 4.0 * cfg.nominal_dt().unwrap() * 0.99;
        let a = strang_step(&s, &cfg, dt).unwrap();
        let b = diffusion_propagate(&s, &cfg, dt).unwrap();
        assert_eq!(a.xi, b.xi);
    }

    #[test]
    fn uniform_state_fixed_point() {
        let mut cfg = make_scenario(ScenarioName::AsymptoticDuncanToor).cfg;
        cfg.reactions = crate::params::ReactionMatrix::zero();
        let s = SpeciesState::uniform(140, [0.3, 0.3, 0.4], 0.0);
        for dt in [1e-5, 1e-3] {
            assert_eq!(lie_step(&s, &cfg, dt).unwrap().xi, s.xi);
            assert_eq!(strang_step(&s, &cfg, dt).unwrap().xi, s.xi);
            assert_eq!(iterative_step(&s, &cfg, dt, 3).unwrap().0.xi, s.xi);
        }
    }

    #[test]
    fn single_sweep_is_frozen_diffusion() {
        let cfg = diffusion_only();
        let s = duncan_toor_initial_state(&cfg.grid).unwrap();
        let dt = cfg.nominal_dt().unwrap();
        let (a, info) = iterative_step(&s, &cfg, dt, 1).unwrap();
        assert_eq!(info.iterations, 1);
        let b = diffusion_step(&s, &cfg.diff, &cfg.grid, dt, Execution::Sequential).unwrap();
        assert_eq!(a.xi, b.xi);

        // several inner steps, coefficients frozen at the start of the interval
        let dt = 4.0 * dt;
        let (a, _) = iterative_step(&s, &cfg, dt, 1).unwrap();
        let mut x = s.clone();
        for _ in 0..4 {
            let (rate, _) =
                diffusion_rate(&x, &s, &cfg.diff, &cfg.grid, Execution::Sequential).unwrap();
            x = euler_update(&x, &rate, dt / 4.0);
        }
        assert!(max_abs_diff(&a, &x) < 1e-15);
    }

    #[test]
    fn iterative_converges_to_diffusion_marching() {
        let cfg = diffusion_only();
        let s = duncan_toor_initial_state(&cfg.grid).unwrap();
        let dt = 4.0 * cfg.nominal_dt().unwrap();
        let (a, info) = iterative_step(&s, &cfg, dt, 8).unwrap();
        assert!(info.converged);
        let b = diffusion_propagate(&s, &cfg, dt).unwrap();
        assert!(max_abs_diff(&a, &b) < 1e-12);
    }

    #[test]
    fn zero_horizon_run() {
        let mut cfg = make_scenario(ScenarioName::SemiDegenerateUphill).cfg;
        cfg.t_end = 0.0;
        let r = run(&cfg).unwrap();
        assert_eq!(r.steps, 0);
        assert_eq!(r.snapshots.len(), 1);
        assert_eq!(
            r.snapshots[0],
            duncan_toor_initial_state(&cfg.grid).unwrap()
        );
    }

    #[test]
    fn fixed_dt_is_subcycled_and_lands_on_t_end() {
        let mut cfg = make_scenario(ScenarioName::SemiDegenerateUphill).cfg;
        cfg.t_end = 0.01;
        cfg.dt_policy = DtPolicy::Fixed { dt: 2.5e-3 };
        cfg.output.snapshots = 3;
        let r = run(&cfg).unwrap();
        assert_eq!(r.steps, 4);
        assert_eq!(r.final_state().time, 0.01);
        let limit = crate::params::stable_dt(&cfg.diff, cfg.grid.dx(), 0.0, 0.9).unwrap();
        for rep in &r.reports {
            assert_eq!(rep.dt_used, 2.5e-3);
            assert!(rep.dt_used / rep.steps_taken as f64 <= limit);
        }
        let times: Vec<f64> = r.snapshots.iter().map(|s| s.time).collect();
        assert_eq!(times, vec![0.0, 0.005, 0.01]);
    }

    #[test]
    fn errors_carry_the_time() {
        let mut cfg = make_scenario(ScenarioName::PlasmaWithReactions).cfg;
        cfg.reactions = crate::params::ReactionMatrix::from_channels(0.0, 50.0).unwrap();
        cfg.t_end = 0.1;
        let err = run(&cfg).unwrap_err();
        match err {
            Error::AtTime { time, source } => {
                assert!(time > 0.0);
                assert!(matches!(*source, Error::StepFailure { .. }), "{source}")
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn execution_policy_does_not_change_results() {
        let mut cfg = make_scenario(ScenarioName::AsymptoticDuncanToor).cfg;
        cfg.t_end = 0.005;
        let a = run_with(&cfg, Execution::Sequential).unwrap();
        let b = run_with(&cfg, Execution::Parallel).unwrap();
        assert_eq!(a.snapshots, b.snapshots);
    }
}
