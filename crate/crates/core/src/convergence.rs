//! Empirical temporal convergence against a fine-step reference run.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::params::{DtPolicy, ScenarioConfig};
use crate::splitting::{macro_steps, run_with};
use crate::state::{norm, Norm, SpeciesState, NUM_SPECIES};

/// Reference step is the finest ladder entry divided by this factor.
pub const REFERENCE_REFINEMENT: f64 = 8.0;

/// Species column of a convergence row; `All` combines the three species.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SpeciesSel {
    Species(usize),
    All,
}

impl SpeciesSel {
    pub fn label(self) -> String {
        match self {
            SpeciesSel::Species(i) => (i + 1).to_string(),
            SpeciesSel::All => "all".to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub dt: f64,
    pub species: SpeciesSel,
    pub norm: Norm,
    pub error: f64,
    /// `log(e(dt_prev)/e(dt)) / log(dt_prev/dt)`; absent on the coarsest step.
    pub observed_order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub ladder: Vec<f64>,
    pub reference_dt: f64,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    pub fn errors(&self, species: SpeciesSel, which: Norm) -> Vec<f64> {
        self.select(species, which).map(|r| r.error).collect()
    }

    pub fn orders(&self, species: SpeciesSel, which: Norm) -> Vec<f64> {
        self.select(species, which)
            .filter_map(|r| r.observed_order)
            .collect()
    }

    fn select(&self, species: SpeciesSel, which: Norm) -> impl Iterator<Item = &ConvergenceRow> {
        self.rows
            .iter()
            .filter(move |r| r.species == species && r.norm == which)
    }
}

fn combine(per_species: [f64; NUM_SPECIES], which: Norm) -> f64 {
    match which {
        Norm::L1 => per_species.iter().sum(),
        Norm::L2 => per_species.iter().map(|e| e * e).sum::<f64>().sqrt(),
        Norm::Linf => per_species.iter().copied().fold(0.0, f64::max),
    }
}

pub fn validate_ladder(t_end: f64, ladder: &[f64]) -> Result<()> {
    if ladder.is_empty() {
        return Err(Error::invalid("dt ladder is empty"));
    }
    if !(t_end > 0.0) {
        return Err(Error::invalid("convergence study needs t_end > 0"));
    }
    for (k, &dt) in ladder.iter().enumerate() {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::invalid(format!("ladder entry {dt} is not positive")));
        }
        if k > 0 && !(dt < ladder[k - 1]) {
            return Err(Error::invalid("dt ladder must be strictly decreasing"));
        }
        let ratio = t_end / dt;
        if (ratio - ratio.round()).abs() > 1e-9 * ratio.round().max(1.0) {
            return Err(Error::invalid(format!(
                "dt = {dt} does not divide t_end = {t_end}"
            )));
        }
    }
    Ok(())
}

fn final_state(cfg: &ScenarioConfig, dt: f64, exec: Execution) -> Result<SpeciesState> {
    let mut c = cfg.clone();
    c.dt_policy = DtPolicy::Fixed { dt };
    c.output.snapshots = 1;
    let mut r = run_with(&c, exec)?;
    Ok(r.snapshots.pop().expect("final snapshot"))
}

/// Run `cfg` at every ladder step plus a reference at `dt_min / 8` and tabulate
type Entry = (SpeciesSel, Norm, f64);

/// errors at `t_end` with pairwise observed orders.
///
/// Ladder entries run as independent jobs under `exec`.
pub fn convergence_study(
    cfg: &ScenarioConfig,
    ladder: &[f64],
    exec: Execution,
) -> Result<ConvergenceTable> {
    cfg.validate()?;
    validate_ladder(cfg.t_end, ladder)?;
    let reference_dt = ladder[ladder.len() - 1] / REFERENCE_REFINEMENT;
    debug_assert!(macro_steps(cfg.t_end, reference_dt) >= 1);

    let mut jobs: Vec<f64> = ladder.to_vec();
    jobs.push(reference_dt);
    let inner = if exec.is_parallel() {
        Execution::Sequential
    } else {
        exec
    };
    let mut finals = exec
        .map_jobs(&jobs, |&dt| final_state(cfg, dt, inner))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let reference = finals.pop().expect("reference run");

    let mut rows = Vec::new();
    let mut previous: Option<(f64, Vec<Entry>)> = None;
    for (&dt, state) in ladder.iter().zip(&finals) {
        let mut current = Vec::new();
        for which in Norm::ALL {
            let per = norm(state, &reference, &cfg.grid, which)?;
            for (i, &e) in per.iter().enumerate() {
                current.push((SpeciesSel::Species(i), which, e));
            }
            current.push((SpeciesSel::All, which, combine(per, which)));
        }
        for &(species, which, error) in &current {
            let observed_order = previous.as_ref().map(|(pdt, perr)| {
                let pe = perr
                    .iter()
                    .find(|(s, w, _)| *s == species && *w == which)
                    .map(|t| t.2)
                    .expect("same layout");
                (pe / error).ln() / (pdt / dt).ln()
            });
            rows.push(ConvergenceRow {
                dt,
                species,
                norm: which,
                error,
                observed_order,
            });
        }
        previous = Some((dt, current));
    }

    Ok(ConvergenceTable {
        ladder: ladder.to_vec(),
        reference_dt,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{DiffusionCoefficients, Splitting};
    use crate::scenarios::{make_scenario, ScenarioName};

    #[test]
    fn ladder_validation() {
        assert!(validate_ladder(1.0, &[]).is_err());
        assert!(validate_ladder(1.0, &[0.5, 0.5]).is_err());
        assert!(validate_ladder(1.0, &[0.25, 0.5]).is_err());
        assert!(validate_ladder(1.0, &[0.3]).is_err());
        assert!(validate_ladder(1.0, &[1e-3, 5e-4, 2.5e-4]).is_ok());
        assert!(validate_ladder(0.0, &[0.1]).is_err());
    }

    /// Single linear operator below the stability bound: the measured order is
    /// that of explicit Euler.
    #[test]
    fn explicit_euler_diffusion_is_first_order() {
        let mut cfg = make_scenario(ScenarioName::SemiDegenerateUphill).cfg;
        cfg.diff = DiffusionCoefficients::equal(0.5).unwrap();
        cfg.velocity = 0.0;
        cfg.splitting = Splitting::Lie;
        cfg.t_end = 2f64.powi(-7);
        let ladder = [2f64.powi(-17), 2f64.powi(-18), 2f64.powi(-19)];
        let table = convergence_study(&cfg, &ladder, Execution::Parallel).unwrap();
        let orders = table.orders(SpeciesSel::All, Norm::L2);
        assert_eq!(orders.len(), 2);
        for p in orders {
            assert!((p - 1.0).abs() < 0.2, "order {p}");
        }
    }
}
