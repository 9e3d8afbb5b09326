//! Monte Carlo experiments on top of the schemes: pathwise strong error with
//! coupled increments, convergence-rate fitting, extinction / persistence
//! classification and truncation frequencies.
//!
//! Every batch fans out over path indices with rayon and reduces the per-path
//! results in index order, so results do not depend on the thread count.

use rayon::prelude::*;

use crate::error::{positive, Error, Result};
use crate::model::{ModelParams, LAMBDA_TOL};
use crate::paths::BrownianGrid;
use crate::schemes::{
    lcm_simulate, lcm_truncation_count, simulate, SchemeKind, SchemeParams, Trajectory,
};

/// Pathwise distance between a coarse run and the reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ErrorNorm {
    /// `sup_k |I_ref(t_k) - I_k|` over the coarse grid points.
    #[default]
    Sup,
    /// `|I_ref(T) - I_M|` at the final time only.
    Terminal,
}

impl ErrorNorm {
    pub fn name(self) -> &'static str {
        match self {
            ErrorNorm::Sup => "sup",
            ErrorNorm::Terminal => "terminal",
        }
    }
}

impl std::str::FromStr for ErrorNorm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sup" => Ok(ErrorNorm::Sup),
            "terminal" => Ok(ErrorNorm::Terminal),
            _ => Err(Error::InvalidParameter {
                name: "norm",
                reason: format!("unknown error norm `{s}`, expected `sup` or `terminal`"),
            }),
        }
    }
}

/// Root-mean-square pathwise errors per step size.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorTable {
    pub step_sizes: Vec<f64>,
    pub errors: Vec<f64>,
    pub n_paths: usize,
    pub h_reference: f64,
    pub norm: ErrorNorm,
}

/// Least-squares fit of `log(error) = log_c + q log(h)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub q: f64,
    pub log_c: f64,
    /// Sum of squared residuals in natural-log space.
    pub residual: f64,
}

/// Number of steps of size `h` in `[0, t_final]`, if that is an integer.
pub fn step_count(t_final: f64, h: f64) -> Result<usize> {
    positive("t_final", t_final)?;
    positive("h", h)?;
    let m = (t_final / h).round();
    if m < 1.0 || ((m * h - t_final).abs() > 1e-9 * t_final) {
        return Err(Error::InvalidParameter {
            name: "h",
            reason: format!("step {h} does not divide the horizon {t_final}"),
        });
    }
    Ok(m as usize)
}

/// `L` such that `h = 2^L h_reference`.
pub fn level_of(h: f64, h_reference: f64) -> Result<u32> {
    positive("h", h)?;
    positive("h_reference", h_reference)?;
    let ratio = h / h_reference;
    let level = ratio.log2().round();
    if !(0.0..=62.0).contains(&level) || (level.exp2() - ratio).abs() > 1e-9 * ratio {
        return Err(Error::InvalidParameter {
            name: "step_sizes",
            reason: format!("{h} is not a power-of-two multiple of h_reference = {h_reference}"),
        });
    }
    Ok(level as u32)
}

/// `(E[sup_k |I_ref(t_k) - I_h(t_k)|^2])^{1/2}` for each level, where the
/// reference is LCM at `reference.h` and the level-`L` run uses step
/// `2^L reference.h` on increments summed from the same fine path. The sup is
/// over the coarse grid points.
pub fn strong_error(
    model: &ModelParams,
    reference: &SchemeParams,
    levels: &[u32],
    n_paths: usize,
    base_seed: u64,
    t_final: f64,
) -> Result<ErrorTable> {
    strong_error_with_norm(
        model,
        reference,
        levels,
        n_paths,
        base_seed,
        t_final,
        ErrorNorm::Sup,
    )
}

/// [`strong_error`] under a chosen pathwise norm.
pub fn strong_error_with_norm(
    model: &ModelParams,
    reference: &SchemeParams,
    levels: &[u32],
    n_paths: usize,
    base_seed: u64,
    t_final: f64,
    norm: ErrorNorm,
) -> Result<ErrorTable> {
    model.validate()?;
    reference.validate()?;
    if n_paths == 0 {
        return Err(Error::InvalidParameter {
            name: "n_paths",
            reason: "must be at least 1".into(),
        });
    }
    if levels.is_empty() {
        return Err(Error::InvalidParameter {
            name: "levels",
            reason: "no levels requested".into(),
        });
    }
    for (i, l) in levels.iter().enumerate() {
        if levels[..i].contains(l) {
            return Err(Error::InvalidParameter {
                name: "levels",
                reason: format!("level {l} listed twice"),
            });
        }
    }
    let fine_steps = step_count(t_final, reference.h)?;
    for &level in levels {
        let block = 1usize.checked_shl(level).unwrap_or(0);
        if block == 0 || block > fine_steps || fine_steps % block != 0 {
            return Err(Error::LevelMismatch { level, fine_steps });
        }
    }

    let per_path: Vec<Vec<f64>> = (0..n_paths as u64)
        .into_par_iter()
        .map(|path| -> Result<Vec<f64>> {
            let grid = BrownianGrid::generate(base_seed, path, t_final, fine_steps)?;
            let exact = lcm_simulate(&grid.coarsen(0)?, model, reference)?;
            levels
                .iter()
                .map(|&level| {
                    let scheme = reference.with_step(reference.h * f64::from(level).exp2());
                    let approx = lcm_simulate(&grid.coarsen(level)?, model, &scheme)?;
                    let dist = match norm {
                        ErrorNorm::Sup => approx
                            .values
                            .iter()
                            .enumerate()
                            .map(|(k, v)| (exact.values[k << level] - v).abs())
                            .fold(0.0_f64, f64::max),
                        ErrorNorm::Terminal => {
                            (exact.terminal_value() - approx.terminal_value()).abs()
                        }
                    };
                    Ok(dist * dist)
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let mut sums = vec![0.0; levels.len()];
    for row in &per_path {
        for (s, v) in sums.iter_mut().zip(row) {
            *s += v;
        }
    }
    Ok(ErrorTable {
        step_sizes: levels
            .iter()
            .map(|&l| reference.h * f64::from(l).exp2())
            .collect(),
        errors: sums.iter().map(|s| (s / n_paths as f64).sqrt()).collect(),
        n_paths,
        h_reference: reference.h,
        norm,
    })
}

pub fn fit_rate(table: &ErrorTable) -> Result<RateFit> {
    if table.step_sizes.len() != table.errors.len() {
        return Err(Error::Fit("step sizes and errors differ in length"));
    }
    if table.errors.len() < 2 {
        return Err(Error::Fit("need at least two rows to fit a rate"));
    }
    if table
        .errors
        .iter()
        .chain(&table.step_sizes)
        .any(|e| !(e.is_finite() && *e > 0.0))
    {
        return Err(Error::Fit(
            "errors and step sizes must be finite and positive",
        ));
    }
    let xs: Vec<f64> = table.step_sizes.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = table.errors.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let x_mean = xs.iter().sum::<f64>() / n;
    let y_mean = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - x_mean).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("step sizes are all equal"));
    }
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - x_mean) * (y - y_mean))
        .sum();
    let q = sxy / sxx;
    let log_c = y_mean - q * x_mean;
    let residual = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - log_c - q * x).powi(2))
        .sum();
    Ok(RateFit { q, log_c, residual })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerdictKind {
    Extinct,
    Persistent,
    Inconclusive,
}

impl VerdictKind {
    pub fn name(self) -> &'static str {
        match self {
            VerdictKind::Extinct => "extinct",
            VerdictKind::Persistent => "persistent",
            VerdictKind::Inconclusive => "inconclusive",
        }
    }
}

/// Which behaviour a classification is asked to confirm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Expectation {
    /// Test whichever criteria the parameters admit.
    #[default]
    Auto,
    Extinction,
    Persistence,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicsThresholds {
    pub min_horizon: f64,
    /// Extinct requires `log(I_M)/T <= (1 - margin) f_max_sigma`.
    pub margin: f64,
    pub extinction_floor: f64,
    /// Crossings of lambda required on `[T/2, T]`.
    pub min_crossings: usize,
    pub expectation: Expectation,
}

impl Default for DynamicsThresholds {
    fn default() -> Self {
        Self {
            min_horizon: 1.0,
            margin: 0.5,
            extinction_floor: 1e-8,
            min_crossings: 3,
            expectation: Expectation::Auto,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicsVerdict {
    pub kind: VerdictKind,
    /// `log(I_M) / T`
    pub lyapunov_estimate: f64,
    pub lambda_crossings: usize,
    pub terminal_value: f64,
}

/// Sign changes of `v - level` along `values`. Points equal to the level (and
/// NaNs) carry no sign and are skipped.
pub fn count_crossings(values: &[f64], level: f64) -> usize {
    let mut last = None;
    let mut count = 0;
    for v in values {
        let sign = if *v > level {
            Some(true)
        } else if *v < level {
            Some(false)
        } else {
            None
        };
        if let Some(s) = sign {
            if last.is_some_and(|l| l != s) {
                count += 1;
            }
            last = Some(s);
        }
    }
    count
}

pub fn classify_dynamics(
    traj: &Trajectory,
    model: &ModelParams,
    thresholds: &DynamicsThresholds,
) -> Result<DynamicsVerdict> {
    let t_final = traj.t_final();
    if t_final < thresholds.min_horizon {
        return Err(Error::Precondition("horizon >= min_horizon"));
    }
    let (f_max, lambda) = match thresholds.expectation {
        Expectation::Auto => (
            model.f_max_sigma().ok(),
            model.persistence_lambda(LAMBDA_TOL).ok(),
        ),
        Expectation::Extinction => (Some(model.f_max_sigma()?), None),
        Expectation::Persistence => (None, Some(model.persistence_lambda(LAMBDA_TOL)?)),
    };

    let lyapunov_estimate = traj.terminal_log_value() / t_final;
    let terminal_value = traj.terminal_value();
    let half = traj.steps().div_ceil(2);
    let lambda_crossings = lambda.map_or(0, |l| count_crossings(&traj.values[half..], l));

    let extinct = f_max.is_some_and(|f| lyapunov_estimate <= (1.0 - thresholds.margin) * f)
        && terminal_value < thresholds.extinction_floor;
    let persistent = lambda.is_some() && lambda_crossings >= thresholds.min_crossings;
    let kind = if traj.domain_violation.is_some() {
        VerdictKind::Inconclusive
    } else if extinct {
        VerdictKind::Extinct
    } else if persistent {
        VerdictKind::Persistent
    } else {
        VerdictKind::Inconclusive
    };
    Ok(DynamicsVerdict {
        kind,
        lyapunov_estimate,
        lambda_crossings,
        terminal_value,
    })
}

/// Single-path runs for each seed in `seeds`, each driven by the path
/// `(seed, 0)` sampled directly at step `scheme.h`.
pub fn dynamics_survey(
    kind: SchemeKind,
    model: &ModelParams,
    scheme: &SchemeParams,
    t_final: f64,
    seeds: &[u64],
    thresholds: &DynamicsThresholds,
) -> Result<Vec<(u64, DynamicsVerdict)>> {
    let steps = step_count(t_final, scheme.h)?;
    seeds
        .par_iter()
        .map(|&seed| {
            let grid = BrownianGrid::generate(seed, 0, t_final, steps)?;
            let traj = simulate(kind, &grid.coarsen(0)?, model, scheme)?;
            Ok((seed, classify_dynamics(&traj, model, thresholds)?))
        })
        .collect()
}

/// Fractions of direct-Milstein paths that left `(0, N)` (including those
/// that exploded) and that became non-finite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineFailures {
    pub violated: f64,
    pub exploded: f64,
}

pub fn milstein_failure_rates(
    model: &ModelParams,
    h: f64,
    t_final: f64,
    n_paths: usize,
    base_seed: u64,
) -> Result<BaselineFailures> {
    if n_paths == 0 {
        return Err(Error::InvalidParameter {
            name: "n_paths",
            reason: "must be at least 1".into(),
        });
    }
    let steps = step_count(t_final, h)?;
    let flags: Vec<(bool, bool)> = (0..n_paths as u64)
        .into_par_iter()
        .map(|path| {
            let grid = BrownianGrid::generate(base_seed, path, t_final, steps)?;
            let traj = crate::schemes::milstein_direct_simulate(&grid.coarsen(0)?, model, h)?;
            Ok(traj
                .domain_violation
                .map_or((false, false), |v| (true, v.exploded_at.is_some())))
        })
        .collect::<Result<_>>()?;
    let frac = |pick: fn(&(bool, bool)) -> bool| {
        flags.iter().filter(|f| pick(f)).count() as f64 / n_paths as f64
    };
    Ok(BaselineFailures {
        violated: frac(|f| f.0),
        exploded: frac(|f| f.1),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSet {
    pub label: String,
    pub model: ModelParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruncationEntry {
    pub set: String,
    pub i0: f64,
    pub h: f64,
    /// Mean over paths of the per-path truncated-step fraction, in percent.
    pub percent: f64,
}

/// Average truncation percentage of LCM for every (set, I0, h) combination,
/// in that nesting order.
#[allow(clippy::too_many_arguments)]
pub fn truncation_table(
    sets: &[ParameterSet],
    i0s: &[f64],
    step_sizes: &[f64],
    n_paths: usize,
    horizon: f64,
    alpha: f64,
    theta: f64,
    base_seed: u64,
) -> Result<Vec<TruncationEntry>> {
    if n_paths == 0 {
        return Err(Error::InvalidParameter {
            name: "n_paths",
            reason: "must be at least 1".into(),
        });
    }
    let mut entries = Vec::with_capacity(sets.len() * i0s.len() * step_sizes.len());
    for set in sets {
        for &i0 in i0s {
            let model = set.model.with_i0(i0)?;
            for &h in step_sizes {
                let scheme = SchemeParams::new(h, alpha, theta)?;
                let percent = truncation_percent(&model, &scheme, horizon, n_paths, base_seed)?;
                entries.push(TruncationEntry {
                    set: set.label.clone(),
                    i0,
                    h,
                    percent,
                });
            }
        }
    }
    Ok(entries)
}

pub fn truncation_percent(
    model: &ModelParams,
    scheme: &SchemeParams,
    horizon: f64,
    n_paths: usize,
    base_seed: u64,
) -> Result<f64> {
    let steps = step_count(horizon, scheme.h)?;
    let counts: Vec<usize> = (0..n_paths as u64)
        .into_par_iter()
        .map(|path| {
            let grid = BrownianGrid::generate(base_seed, path, horizon, steps)?;
            lcm_truncation_count(&grid.coarsen(0)?, model, scheme)
        })
        .collect::<Result<_>>()?;
    let total: f64 = counts.iter().map(|&c| c as f64 / steps as f64).sum();
    Ok(100.0 * total / n_paths as f64)
}
