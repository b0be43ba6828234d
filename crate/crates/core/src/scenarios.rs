//! Built-in ternary experiments on the unit interval.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::params::{
    DiffusionCoefficients, DtPolicy, InitialCondition, OutputSpec, ReactionMatrix, ScenarioConfig,
    Splitting,
};
use crate::state::{SpeciesState, CLIP_TOL};

pub const DEFAULT_CELLS: usize = 140;
pub const DEFAULT_T_END: f64 = 1.0;
pub const DEFAULT_VELOCITY: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScenarioName {
    /// D12 = D13: xi1 diffuses as a pure Fick species, xi2 moves uphill.
    SemiDegenerateUphill,
    AsymptoticDuncanToor,
    PlasmaWithReactions,
}

impl ScenarioName {
    pub const ALL: [ScenarioName; 3] = [
        ScenarioName::SemiDegenerateUphill,
        ScenarioName::AsymptoticDuncanToor,
        ScenarioName::PlasmaWithReactions,
    ];

    pub fn cli_name(self) -> &'static str {
        match self {
            ScenarioName::SemiDegenerateUphill => "semi-degenerate",
            ScenarioName::AsymptoticDuncanToor => "asymptotic",
            ScenarioName::PlasmaWithReactions => "plasma",
        }
    }
}

impl fmt::Display for ScenarioName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.cli_name())
    }
}

impl FromStr for ScenarioName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "semi-degenerate" | "semi-degenerate-uphill" | "semidegenerateuphill" => {
                Ok(ScenarioName::SemiDegenerateUphill)
            }
            "asymptotic" | "asymptotic-duncan-toor" | "asymptoticduncantoor" => {
                Ok(ScenarioName::AsymptoticDuncanToor)
            }
            "plasma" | "plasma-with-reactions" | "plasmawithreactions" => {
                Ok(ScenarioName::PlasmaWithReactions)
            }
            other => Err(Error::invalid(format!(
                "unknown scenario '{other}' (expected semi-degenerate, asymptotic or plasma)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedScenario {
    pub name: ScenarioName,
    pub cfg: ScenarioConfig,
}

/// Initial mole fractions at position `x` of the unit interval.
pub fn initial_profile(x: f64) -> Result<[f64; 3]> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::invalid(format!("x = {x} lies outside [0, 1]")));
    }
    let xi1 = if x < 0.25 {
        0.8
    } else if x < 0.75 {
        1.6 * (0.75 - x)
    } else {
        0.0
    };
    let xi2 = 0.2;
    let mut xi3 = 1.0 - xi1 - xi2;
    if xi3 < 0.0 && xi3 > -CLIP_TOL {
        xi3 = 0.0;
    }
    Ok([xi1, xi2, xi3])
}

pub fn duncan_toor_initial_state(grid: &Grid1D) -> Result<SpeciesState> {
    SpeciesState::from_profile(grid, 0.0, initial_profile)
}

impl ScenarioConfig {
    pub fn initial_state(&self) -> Result<SpeciesState> {
        match &self.initial {
            InitialCondition::DuncanToor => duncan_toor_initial_state(&self.grid),
            InitialCondition::Uniform { composition } => {
                let c = *composition;
                SpeciesState::from_profile(&self.grid, 0.0, |_| Ok(c))
            }
        }
    }
}

fn base_config(diff: DiffusionCoefficients) -> ScenarioConfig {
    ScenarioConfig {
        grid: Grid1D::unit(DEFAULT_CELLS).expect("static grid"),
        t_end: DEFAULT_T_END,
        velocity: DEFAULT_VELOCITY,
        diff,
        reactions: ReactionMatrix::zero(),
        splitting: Splitting::Lie,
        dt_policy: DtPolicy::auto(),
        initial: InitialCondition::DuncanToor,
        output: OutputSpec::default(),
    }
}

pub fn make_scenario(name: ScenarioName) -> NamedScenario {
    let cfg = match name {
        ScenarioName::SemiDegenerateUphill | ScenarioName::PlasmaWithReactions => {
            base_config(DiffusionCoefficients {
                d12: 0.833,
                d13: 0.833,
                d23: 0.168,
            })
        }
        ScenarioName::AsymptoticDuncanToor => base_config(DiffusionCoefficients {
            d12: 0.0833,
            d13: 0.680,
            d23: 0.168,
        }),
    };
    NamedScenario { name, cfg }
}

/// The semi-degenerate set with both reaction channels switched on.
pub fn make_plasma(lambda1: f64, lambda2: f64) -> Result<NamedScenario> {
    let mut s = make_scenario(ScenarioName::PlasmaWithReactions);
    s.cfg.reactions = ReactionMatrix::from_channels(lambda1, lambda2)?;
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_branches() {
        assert_eq!(initial_profile(0.1).unwrap(), [0.8, 0.2, 0.0]);
        let mid = initial_profile(0.5).unwrap();
        assert!((mid[0] - 0.4).abs() < 1e-15);
        assert_eq!(mid[1], 0.2);
        assert!((mid[2] - 0.4).abs() < 1e-15);
        let right = initial_profile(0.9).unwrap();
        assert_eq!(right[0], 0.0);
        assert!((right[2] - 0.8).abs() < 1e-15);
        assert!(initial_profile(-0.01).is_err());
        assert!(initial_profile(1.01).is_err());
    }

    #[test]
    fn profile_is_continuous() {
        assert_eq!(1.6 * (0.75 - 0.25), 0.8);
        assert_eq!(initial_profile(0.25).unwrap()[0], 0.8);
        assert_eq!(1.6 * (0.75 - 0.75), 0.0);
        assert_eq!(initial_profile(0.75).unwrap()[0], 0.0);
        for k in 0..=1000 {
            let x = k as f64 / 1000.0;
            let p = initial_profile(x).unwrap();
            assert!(p.iter().all(|v| *v >= 0.0));
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn initial_integrals() {
        let g = Grid1D::unit(DEFAULT_CELLS).unwrap();
        let s = duncan_toor_initial_state(&g).unwrap();
        let m = s.total_moles(&g);
        for (got, want) in m.iter().zip([0.4, 0.2, 0.4]) {
            assert!((got - want).abs() < 1e-3);
        }
        assert!(s.sigma().iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn scenario_parameters() {
        let s = make_scenario(ScenarioName::SemiDegenerateUphill).cfg;
        assert_eq!((s.diff.d12, s.diff.d13, s.diff.d23), (0.833, 0.833, 0.168));
        assert_eq!(s.velocity, 0.01);
        assert_eq!(s.grid.num_cells(), 140);
        assert_eq!(s.t_end, 1.0);
        assert_eq!(s.dt_policy, DtPolicy::AutoStable { safety: 0.9 });
        assert_eq!(s.splitting, Splitting::Lie);
        assert!(s.reactions.is_zero());

        let a = make_scenario(ScenarioName::AsymptoticDuncanToor).cfg;
        assert_eq!((a.diff.d12, a.diff.d13, a.diff.d23), (0.0833, 0.680, 0.168));

        let p = make_plasma(0.5, 2.0).unwrap();
        assert_eq!(p.cfg.diff, s.diff);
        assert_eq!(p.cfg.reactions.lambda2, 2.0);
        assert!(make_scenario(ScenarioName::PlasmaWithReactions)
            .cfg
            .reactions
            .is_zero());
    }

    #[test]
    fn names_round_trip() {
        for n in ScenarioName::ALL {
            assert_eq!(n.cli_name().parse::<ScenarioName>().unwrap(), n);
        }
        assert!("experiment-3".parse::<ScenarioName>().is_err());
    }
}
