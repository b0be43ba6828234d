//! Whole-run behaviour through the public API.

use approx::assert_abs_diff_eq;
use ms_transport::scenarios::{make_plasma, make_scenario, ScenarioName};
use ms_transport::{run, run_with, DtPolicy, Execution, Splitting};

fn short(name: ScenarioName) -> ms_transport::ScenarioConfig {
    let mut cfg = make_scenario(name).cfg;
    cfg.t_end = 0.01;
    cfg.output.snapshots = 5;
    cfg
}

#[test]
fn every_splitting_passes_the_audit() {
    for splitting in [
        Splitting::Lie,
        Splitting::Strang,
        Splitting::Iterative { iterations: 3 },
    ] {
        for name in [
            ScenarioName::SemiDegenerateUphill,
            ScenarioName::AsymptoticDuncanToor,
        ] {
            let mut cfg = short(name);
            cfg.splitting = splitting;
            let r = run(&cfg).unwrap();
            assert!(r.audit.passed(), "{splitting:?} {name}: {:?}", r.audit);
            assert_eq!(r.snapshots.len(), 5);
            assert_abs_diff_eq!(r.final_state().time, 0.01, epsilon = 1e-15);
        }
    }
}

#[test]
fn snapshot_times_are_evenly_spaced() {
    let mut cfg = short(ScenarioName::SemiDegenerateUphill);
    cfg.dt_policy = DtPolicy::Fixed { dt: 2.5e-5 };
    let r = run(&cfg).unwrap();
    assert_eq!(r.steps, 400);
    let times: Vec<f64> = r.snapshots.iter().map(|s| s.time).collect();
    for (k, t) in times.iter().enumerate() {
        assert_abs_diff_eq!(*t, 0.0025 * k as f64, epsilon = 1e-15);
    }
}

#[test]
fn execution_policy_does_not_change_results() {
    let mut cfg = make_plasma(1.0, 0.5).unwrap().cfg;
    cfg.t_end = 0.005;
    for splitting in [
        Splitting::Lie,
        Splitting::Strang,
        Splitting::Iterative { iterations: 2 },
    ] {
        cfg.splitting = splitting;
        let a = run_with(&cfg, Execution::Sequential).unwrap();
        let b = run_with(&cfg, Execution::Parallel).unwrap();
        assert_eq!(a.snapshots, b.snapshots, "{splitting:?}");
    }
}

#[test]
fn reactions_conserve_hydrogen_nuclei_in_a_closed_box() {
    let mut cfg = make_plasma(2.0, 0.0).unwrap().cfg;
    cfg.velocity = 0.0;
    cfg.t_end = 0.05;
    let r = run(&cfg).unwrap();
    let nuclei = |s: &ms_transport::SpeciesState| {
        let m = s.total_moles(&cfg.grid);
        m[0] + 2.0 * m[1] + 2.0 * m[2]
    };
    assert_abs_diff_eq!(
        nuclei(r.final_state()),
        nuclei(&r.snapshots[0]),
        epsilon = 1e-12
    );
    // Ionisation only: sigma stays one and is audited.
    assert!(r.audit.sigma_audited && r.audit.passed());
}
