use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use sislab_core::analysis::{level_of, step_count};
use sislab_core::export::{
    fmt_float, write_dynamics, write_error_table, write_loglog, write_rate_fit, write_trajectory,
    write_truncation,
};
use sislab_core::{
    dynamics_survey, fit_rate, schemes, strong_error_with_norm, truncation_table, BrownianGrid,
    ErrorTable, Expectation, ModelParams, SchemeParams, VerdictKind, LAMBDA_TOL,
};

use crate::config::ExperimentConfig;
use crate::error::CliError;

fn output_file(
    config: &ExperimentConfig,
    suffix: &str,
    write: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<PathBuf, CliError> {
    let dir = &config.outputs.dir;
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir.display(), e))?;
    let path = dir.join(format!("{}_{suffix}", config.outputs.prefix));
    let file = File::create(&path).map_err(|e| CliError::io(path.display(), e))?;
    let mut w = BufWriter::new(file);
    write(&mut w)
        .and_then(|()| w.flush())
        .map_err(|e| CliError::io(path.display(), e))?;
    Ok(path)
}

/// Records the resolved configuration (after flag and env overrides).
fn write_resolved(config: &ExperimentConfig) -> Result<(), CliError> {
    output_file(config, "config.toml", |w| {
        w.write_all(config.to_toml().as_bytes())
    })?;
    Ok(())
}

fn print_regime(model: &ModelParams) {
    let r = model.regime_report();
    println!(
        "R0 deterministic = {}, R0 stochastic = {}, extinction case = {:?}",
        fmt_float(r.r0_deterministic),
        fmt_float(r.r0_stochastic),
        r.extinction_case
    );
}

pub fn simulate(
    config: &ExperimentConfig,
    path_index: u64,
    dump_increments: bool,
) -> Result<(), CliError> {
    write_resolved(config)?;
    let model = config.model()?;
    let run = &config.run;
    let fine_steps = step_count(run.t_final, run.h_reference)?;
    let grid = BrownianGrid::generate(run.base_seed, path_index, run.t_final, fine_steps)?;
    if dump_increments {
        let path = output_file(config, "increments.bin", |w| grid.write_dump(w))?;
        println!("wrote {}", path.display());
    }
    print_regime(&model);
    for kind in config.scheme_kinds()? {
        for &h in &config.scheme.step_sizes {
            let scheme = SchemeParams::new(h, config.scheme.alpha, config.scheme.theta)?;
            let increments = grid.coarsen(level_of(h, run.h_reference)?)?;
            let traj = schemes::simulate(kind, &increments, &model, &scheme)?;
            let suffix = format!("{}_h{}.csv", kind.name(), fmt_float(h));
            let path = output_file(config, &suffix, |w| write_trajectory(w, &traj))?;
            println!(
                "{} h={}: {} steps, terminal I = {}, truncated {} ({}%) -> {}",
                kind.name(),
                fmt_float(h),
                traj.steps(),
                fmt_float(traj.terminal_value()),
                traj.truncation_count,
                fmt_float(100.0 * traj.truncation_fraction()),
                path.display()
            );
            if let Some(v) = traj.domain_violation {
                eprintln!(
                    "warning: {} h={} left (0, N) at t={}{}",
                    kind.name(),
                    fmt_float(h),
                    fmt_float(traj.time(v.first_index)),
                    v.exploded_at.map_or(String::new(), |k| format!(
                        ", non-finite from t={}",
                        fmt_float(traj.time(k))
                    ))
                );
            }
        }
    }
    Ok(())
}

pub fn convergence(config: &ExperimentConfig, self_test: bool) -> Result<(), CliError> {
    write_resolved(config)?;
    let run = &config.run;
    let table = if self_test {
        // Exact line e = h on the two coarsest levels: the fit must give q = 1.
        let mut hs = config.scheme.step_sizes.clone();
        hs.sort_by(|a, b| b.total_cmp(a));
        hs.dedup();
        if hs.len() < 2 {
            return Err(CliError::Config(
                "self-test needs two distinct `scheme.step_sizes`".into(),
            ));
        }
        hs.truncate(2);
        ErrorTable {
            errors: hs.clone(),
            step_sizes: hs,
            n_paths: 0,
            h_reference: run.h_reference,
            norm: config.norm()?,
        }
    } else {
        let model = config.model()?;
        let reference =
            SchemeParams::new(run.h_reference, config.scheme.alpha, config.scheme.theta)?;
        let levels = config
            .scheme
            .step_sizes
            .iter()
            .map(|&h| level_of(h, run.h_reference))
            .collect::<Result<Vec<_>, _>>()?;
        strong_error_with_norm(
            &model,
            &reference,
            &levels,
            run.n_paths,
            run.base_seed,
            run.t_final,
            config.norm()?,
        )?
    };
    let fit = fit_rate(&table)?;

    println!("norm = {}, paths = {}", table.norm.name(), table.n_paths);
    for (h, e) in table.step_sizes.iter().zip(&table.errors) {
        println!("h = {:<12} error = {}", fmt_float(*h), fmt_float(*e));
    }
    println!(
        "q = {}, residual = {}",
        fmt_float(fit.q),
        fmt_float(fit.residual)
    );
    output_file(config, "errors.csv", |w| write_error_table(w, &table))?;
    output_file(config, "loglog.csv", |w| write_loglog(w, &table))?;
    output_file(config, "rate.csv", |w| write_rate_fit(w, &fit))?;
    Ok(())
}

pub fn dynamics(config: &ExperimentConfig) -> Result<(), CliError> {
    let model = config.model()?;
    let thresholds = config.thresholds()?;
    let run = &config.run;
    write_resolved(config)?;
    print_regime(&model);
    match thresholds.expectation {
        Expectation::Extinction => {
            println!("f_max = {}", fmt_float(model.f_max_sigma()?));
        }
        Expectation::Persistence => {
            println!(
                "lambda = {}",
                fmt_float(model.persistence_lambda(LAMBDA_TOL)?)
            );
        }
        Expectation::Auto => {}
    }
    let seeds: Vec<u64> = (0..run.n_paths as u64)
        .map(|k| run.base_seed.wrapping_add(k))
        .collect();
    for kind in config.scheme_kinds()? {
        for &h in &config.scheme.step_sizes {
            let scheme = SchemeParams::new(h, config.scheme.alpha, config.scheme.theta)?;
            let rows = dynamics_survey(kind, &model, &scheme, run.t_final, &seeds, &thresholds)?;
            let suffix = format!("dynamics_{}_h{}.csv", kind.name(), fmt_float(h));
            output_file(config, &suffix, |w| write_dynamics(w, &rows))?;
            let count = |k: VerdictKind| rows.iter().filter(|(_, v)| v.kind == k).count();
            println!(
                "{} h={}: extinct {}, persistent {}, inconclusive {} of {}",
                kind.name(),
                fmt_float(h),
                count(VerdictKind::Extinct),
                count(VerdictKind::Persistent),
                count(VerdictKind::Inconclusive),
                rows.len()
            );
        }
    }
    Ok(())
}

pub fn truncation(config: &ExperimentConfig) -> Result<(), CliError> {
    let sets = config.parameter_sets()?;
    let run = &config.run;
    write_resolved(config)?;
    let rows = truncation_table(
        &sets,
        &config.truncation_i0s(),
        &config.scheme.step_sizes,
        run.n_paths,
        run.t_final,
        config.scheme.alpha,
        config.scheme.theta,
        run.base_seed,
    )?;
    println!("{:<8} {:>8} {:>12} {:>12}", "set", "I0", "h", "percent");
    for r in &rows {
        println!(
            "{:<8} {:>8} {:>12} {:>12.4}",
            r.set,
            fmt_float(r.i0),
            fmt_float(r.h),
            r.percent
        );
    }
    output_file(config, "truncation.csv", |w| write_truncation(w, &rows))?;
    Ok(())
}
