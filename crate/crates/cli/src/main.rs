use std::process::ExitCode;

use anyhow::{Context, Result};
use ms_transport::convergence::{convergence_study, SpeciesSel};
use ms_transport::msflux::{flux_self_check, FluxCheckReport};
use ms_transport::{run, Execution, Norm};
use ms_transport_cli::args::{ConvergeArgs, FluxCheckArgs, RunArgs};
use ms_transport_cli::{parse_args, write_convergence, write_snapshots, Command};

fn cmd_run(args: &RunArgs) -> Result<bool> {
    let cfg = args.resolve()?;
    let result = run(&cfg).context("simulation aborted")?;
    let files = write_snapshots(&result, &args.out)?;
    let a = &result.audit;
    println!(
        "{} steps of dt = {:.6e} in {:.2}s; closure {:.3e}, sigma drift {:.3e}, moles drift {:.3e}",
        result.steps,
        result.dt,
        result.wall_time,
        a.max_closure_residual,
        a.max_sigma_drift,
        a.max_moles_drift
    );
    for f in &files {
        println!("wrote {}", f.display());
    }
    if !a.passed() {
        eprintln!("invariant audit failed: {a:?}");
    }
    Ok(a.passed())
}

fn cmd_converge(args: &ConvergeArgs) -> Result<bool> {
    let cfg = args.scenario.resolve()?;
    let table = convergence_study(&cfg, &args.dt_ladder, Execution::default())?;
    println!("reference dt = {:.6e}", table.reference_dt);
    println!("{:>14} {:>14} {:>8}", "dt", "L2 error", "order");
    for r in table
        .rows
        .iter()
        .filter(|r| r.species == SpeciesSel::All && r.norm == Norm::L2)
    {
        let order = r
            .observed_order
            .map(|p| format!("{p:8.3}"))
            .unwrap_or_else(|| format!("{:>8}", "-"));
        println!("{:14.6e} {:14.6e} {order}", r.dt, r.error);
    }
    if let Some(dir) = &args.out {
        println!("wrote {}", write_convergence(&table, dir)?.display());
    }
    Ok(true)
}

fn cmd_flux_check(args: &FluxCheckArgs) -> Result<bool> {
    let r = flux_self_check(args.samples, args.seed)?;
    println!("samples                  {}", r.samples);
    println!(
        "max plug-back residual   {:.3e} (< {:.0e})",
        r.max_plugback_residual,
        FluxCheckReport::PLUGBACK_TOL
    );
    println!(
        "max closure residual     {:.3e} (< {:.0e})",
        r.max_closure_residual,
        FluxCheckReport::CLOSURE_TOL
    );
    println!(
        "max Fick deviation       {:.3e} (< {:.0e})",
        r.max_fick_deviation,
        FluxCheckReport::FICK_TOL
    );
    println!(
        "max D12=D13 N1 drift     {:.3e} (< {:.0e})",
        r.max_semi_degenerate_drift,
        FluxCheckReport::SEMI_DEGENERATE_TOL
    );
    Ok(r.passed())
}

fn main() -> ExitCode {
    let command = match parse_args(std::env::args_os()) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    let outcome = match &command {
        Command::Run(a) => cmd_run(a),
        Command::Converge(a) => cmd_converge(a),
        Command::FluxCheck(a) => cmd_flux_check(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
