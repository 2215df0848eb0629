//! One function per subcommand; each returns the finished output text.

use std::fmt::Write as _;

use qaction_core::{
    action_correction, action_derivative, classical_action, classical_lifetime,
    closed_form_amplitude, nonrel_limit_report, normalization_constant, quantum_action,
    quasiclassical_lifetimes, screen_scan, select_branch, stationary_lifetime_exact, Branch,
    Experiment, LifeTime, SolverConfig, StationarySolution,
};

use crate::config::RunConfig;
use crate::records::Record;
use crate::CliError;

struct ResolvedLifeTime {
    c: LifeTime,
    /// `given` when `--c` was passed, `stationary` otherwise.
    source: &'static str,
    branch: Option<Branch>,
}

/// Life time for the single-point commands: the flag value when given, the
/// selected quasi-classical root otherwise.
fn resolve_life_time(
    exp: &Experiment,
    config: &SolverConfig,
    flag: Option<f64>,
) -> Result<ResolvedLifeTime, CliError> {
    if let Some(value) = flag {
        let c = LifeTime::new(value).map_err(|err| CliError::Config(err.to_string()))?;
        return Ok(ResolvedLifeTime { c, source: "given", branch: None });
    }
    let solution = stationary_solution(exp, config, false)?;
    Ok(ResolvedLifeTime {
        c: solution.life_time,
        source: "stationary",
        branch: Some(solution.branch),
    })
}

/// Quasi-classical selection; with `exact` the selected root seeds the full
/// derivative-zero solver.
fn stationary_solution(
    exp: &Experiment,
    config: &SolverConfig,
    exact: bool,
) -> Result<StationarySolution, CliError> {
    let seed = match quasiclassical_lifetimes(exp) {
        Ok(roots) => select_branch(exp, &roots, config)?,
        // The quadratic can degenerate while a classical anchor still exists;
        // an explicit exact request falls back to that anchor as the seed.
        Err(err) if exact => StationarySolution {
            life_time: classical_lifetime(exp).map_err(|_| err)?,
            branch: Branch::Exact,
            discriminant: None,
            residual: None,
            iterations: 0,
            off_shell: false,
            low_confidence: true,
        },
        Err(err) => return Err(err.into()),
    };
    if exact && seed.life_time.value() > 0.0 {
        let refined = stationary_lifetime_exact(exp, seed.life_time, config)?;
        return Ok(StationarySolution {
            discriminant: seed.discriminant.or(refined.discriminant),
            ..refined
        });
    }
    Ok(seed)
}

pub fn cmd_amplitude(cfg: &RunConfig, c_flag: Option<f64>) -> Result<String, CliError> {
    let exp = cfg.experiment()?;
    let solver = cfg.solver();
    let resolved = resolve_life_time(&exp, &solver, c_flag)?;
    let result =
        closed_form_amplitude(&exp, resolved.c).map_err(|err| CliError::Config(err.to_string()))?;
    let mut record = Record::new("amplitude");
    record.push("c", resolved.c.value());
    record.push("c_source", resolved.source);
    if let Some(branch) = resolved.branch {
        record.push("branch", branch.as_str());
    }
    record.push("k_re", result.value.re);
    record.push("k_im", result.value.im);
    record.push("k_abs2", result.modulus_sq);
    record.push("lambda", result.phase);
    record.push("prefactor_modulus", result.prefactor_modulus);
    Ok(record.render())
}

pub fn cmd_action(cfg: &RunConfig, c_flag: Option<f64>) -> Result<String, CliError> {
    let exp = cfg.experiment()?;
    let solver = cfg.solver();
    let resolved = resolve_life_time(&exp, &solver, c_flag)?;
    let mut record = Record::new("action");
    record.push("c", resolved.c.value());
    record.push("c_source", resolved.source);
    if let Some(branch) = resolved.branch {
        record.push("branch", branch.as_str());
    }
    record.push("lambda", quantum_action(&exp, resolved.c));
    record.push("lambda_classical", classical_action(&exp, resolved.c));
    record.push("lambda_correction", action_correction(&exp, resolved.c));
    record.push("lambda_derivative", action_derivative(&exp, resolved.c));
    Ok(record.render())
}

pub fn cmd_stationary_c(cfg: &RunConfig, exact: bool) -> Result<String, CliError> {
    let exp = cfg.experiment()?;
    let solver = cfg.solver();
    let solution = stationary_solution(&exp, &solver, exact)?;
    let mut record = Record::new("stationary-c");
    record.push("c_stationary", solution.life_time.value());
    record.push("branch", solution.branch.as_str());
    record.push_opt("discriminant", solution.discriminant);
    record.push_opt("residual", solution.residual);
    record.push("iterations", solution.iterations);
    record.push("off_shell", solution.off_shell);
    record.push("low_confidence", solution.low_confidence);
    Ok(record.render())
}

pub fn cmd_scan(cfg: &RunConfig) -> Result<String, CliError> {
    let template = cfg.template()?;
    let screen = cfg.screen()?;
    let table = screen_scan(&template, &screen, &cfg.solver())?;
    Ok(table.to_csv())
}

pub fn cmd_normalize(cfg: &RunConfig, grid_scale: f64) -> Result<String, CliError> {
    let template = cfg.template()?;
    let screen = cfg.screen()?;
    let norm = normalization_constant(&template, &screen, &cfg.solver(), grid_scale)?;
    let mut record = Record::new("normalize");
    record.push("grid_scale", grid_scale);
    record.push("amplitude", norm.amplitude);
    record.push("integral", norm.integral);
    record.push("error", norm.error);
    record.push("coarse_integral", norm.coarse_integral);
    Ok(record.render())
}

pub fn cmd_nonrel(cfg: &RunConfig, times: &[f64]) -> Result<String, CliError> {
    let template = cfg.template()?;
    let rows = nonrel_limit_report(&template, times, &cfg.solver())?;
    let mut out =
        String::from("t,c_stationary,newtonian_c,c_gap_rel,lambda,phase_reference,phase_gap_rel\n");
    for row in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            row.t,
            row.c_stationary,
            row.newtonian_c,
            row.c_gap_rel,
            row.lambda,
            row.phase_reference,
            row.phase_gap_rel
        )
        .expect("string writes never fail");
    }
    Ok(out)
}
