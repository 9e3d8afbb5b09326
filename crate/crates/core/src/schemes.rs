//! Time-stepping schemes for the SIS model.
//!
//! The logarithmic corrected Milstein (LCM) scheme runs a Milstein step on
//! `Y = log I` and resets any step that lands at or above `log N` to
//! `log N - alpha h^theta`. Every state therefore stays in `(-inf, log N)`
//! whatever the step size. The direct Milstein scheme on the untransformed
//! equation is kept as the baseline that does not have this property.

use crate::error::{positive, Error, Result};
use crate::model::ModelParams;
use crate::paths::LevyAreaIncrement;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeParams {
    pub h: f64,
    /// Back-off coefficient, in `(0, 1]`.
    pub alpha: f64,
    /// Back-off exponent, at least 3/2.
    pub theta: f64,
}

impl SchemeParams {
    pub fn new(h: f64, alpha: f64, theta: f64) -> Result<Self> {
        let s = Self { h, alpha, theta };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        positive("h", self.h)?;
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "alpha",
                reason: format!("must lie in (0, 1], got {}", self.alpha),
            });
        }
        if !(self.theta >= 1.5 && self.theta.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "theta",
                reason: format!("must be finite and >= 3/2, got {}", self.theta),
            });
        }
        Ok(())
    }

    pub fn with_step(&self, h: f64) -> Self {
        Self { h, ..*self }
    }

    /// `log N - alpha h^theta`, the value a truncated step is reset to. Fails
    /// when the back-off is too small to be represented below `log N`.
    pub fn truncation_level(&self, n: f64) -> Result<f64> {
        let log_n = n.ln();
        let backoff = self.alpha * self.h.powf(self.theta);
        let level = log_n - backoff;
        if level < log_n && level.exp() < n {
            Ok(level)
        } else {
            Err(Error::UnrepresentableTruncation(backoff))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeKind {
    Lcm,
    Milstein,
}

impl SchemeKind {
    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Lcm => "lcm",
            SchemeKind::Milstein => "milstein",
        }
    }
}

impl std::str::FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lcm" => Ok(SchemeKind::Lcm),
            "milstein" => Ok(SchemeKind::Milstein),
            _ => Err(Error::InvalidParameter {
                name: "scheme",
                reason: format!("unknown scheme `{s}`, expected `lcm` or `milstein`"),
            }),
        }
    }
}

/// Where a baseline trajectory first left `(0, N)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DomainViolation {
    pub first_index: usize,
    /// Index of the first non-finite state, after which the trajectory is
    /// frozen at NaN.
    pub exploded_at: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub scheme: SchemeKind,
    pub h: f64,
    pub values: Vec<f64>,
    /// `Y_k = log I_k`; LCM only.
    pub log_values: Option<Vec<f64>>,
    /// Whether the step into point `k` was truncated; LCM only, entry 0 is
    /// always false.
    pub truncated: Option<Vec<bool>>,
    pub truncation_count: usize,
    pub domain_violation: Option<DomainViolation>,
}

impl Trajectory {
    pub fn steps(&self) -> usize {
        self.values.len() - 1
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.h
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(|k| self.time(k))
    }

    pub fn t_final(&self) -> f64 {
        self.time(self.steps())
    }

    pub fn terminal_value(&self) -> f64 {
        *self
            .values
            .last()
            .expect("trajectory has at least one point")
    }

    /// `log I_M`, read from the log-state when there is one so that paths
    /// whose `I` underflowed still report a finite value.
    pub fn terminal_log_value(&self) -> f64 {
        match &self.log_values {
            Some(y) => *y.last().expect("trajectory has at least one point"),
            None => self.terminal_value().ln(),
        }
    }

    pub fn truncation_fraction(&self) -> f64 {
        self.truncation_count as f64 / self.steps().max(1) as f64
    }
}

/// Precomputed per-run constants of the LCM step.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LcmStepper<'a> {
    model: &'a ModelParams,
    h: f64,
    log_n: f64,
    reset: f64,
}

impl<'a> LcmStepper<'a> {
    pub(crate) fn new(model: &'a ModelParams, scheme: &SchemeParams) -> Result<Self> {
        model.validate()?;
        scheme.validate()?;
        Ok(Self {
            model,
            h: scheme.h,
            log_n: model.log_n(),
            reset: scheme.truncation_level(model.n)?,
        })
    }

    #[inline]
    pub(crate) fn unclamped(&self, y: f64, dw: f64, dzeta: f64) -> f64 {
        let c = self.model.coefficients(y);
        y + c.f * self.h + c.g * dw + c.gg_prime * dzeta
    }

    #[inline]
    pub(crate) fn step(&self, y: f64, dw: f64, dzeta: f64) -> (f64, bool) {
        let y_bar = self.unclamped(y, dw, dzeta);
        if y_bar >= self.log_n {
            (self.reset, true)
        } else {
            (y_bar, false)
        }
    }

    /// `e^Y`, kept strictly below `N` when `Y` is within an ulp of `log N`.
    #[inline]
    pub(crate) fn back_transform(&self, y: f64) -> f64 {
        y.exp().min(self.model.n.next_down())
    }
}

/// One LCM step from `y` under increment `dw` and iterated integral `dzeta`.
/// Returns the new log-state and whether the truncation branch was taken.
pub fn lcm_step(
    y: f64,
    dw: f64,
    dzeta: f64,
    model: &ModelParams,
    scheme: &SchemeParams,
) -> Result<(f64, bool)> {
    if !(y.is_finite() && dw.is_finite() && dzeta.is_finite()) {
        return Err(Error::NonFinite("lcm_step"));
    }
    let stepper = LcmStepper::new(model, scheme)?;
    if y >= stepper.log_n {
        return Err(Error::InvalidParameter {
            name: "Y",
            reason: format!("must be below log N = {}, got {y}", stepper.log_n),
        });
    }
    Ok(stepper.step(y, dw, dzeta))
}

/// Runs LCM from `log I0` over the given increments, which must have been
/// built at step `scheme.h`.
pub fn lcm_simulate(
    increments: &[LevyAreaIncrement],
    model: &ModelParams,
    scheme: &SchemeParams,
) -> Result<Trajectory> {
    let stepper = LcmStepper::new(model, scheme)?;
    let m = increments.len();
    let mut log_values = Vec::with_capacity(m + 1);
    let mut truncated = Vec::with_capacity(m + 1);
    let mut y = model.i0.ln();
    log_values.push(y);
    truncated.push(false);
    let mut truncation_count = 0;
    for inc in increments {
        if !(inc.dw.is_finite() && inc.dzeta.is_finite()) {
            return Err(Error::NonFinite("lcm_simulate"));
        }
        let (next, hit) = stepper.step(y, inc.dw, inc.dzeta);
        y = next;
        truncation_count += usize::from(hit);
        log_values.push(y);
        truncated.push(hit);
    }
    let values = log_values
        .iter()
        .map(|&y| stepper.back_transform(y))
        .collect();
    Ok(Trajectory {
        scheme: SchemeKind::Lcm,
        h: scheme.h,
        values,
        log_values: Some(log_values),
        truncated: Some(truncated),
        truncation_count,
        domain_violation: None,
    })
}

/// Only the truncation count of an LCM run; skips materialising the path.
pub fn lcm_truncation_count(
    increments: &[LevyAreaIncrement],
    model: &ModelParams,
    scheme: &SchemeParams,
) -> Result<usize> {
    let stepper = LcmStepper::new(model, scheme)?;
    let mut y = model.i0.ln();
    let mut count = 0;
    for inc in increments {
        let (next, hit) = stepper.step(y, inc.dw, inc.dzeta);
        y = next;
        count += usize::from(hit);
    }
    Ok(count)
}

/// One standard Milstein step on the untransformed equation. Unguarded:
/// the result may leave `(0, N)` or be non-finite.
pub fn milstein_direct_step(i: f64, dw: f64, dzeta: f64, model: &ModelParams, h: f64) -> f64 {
    let a = model.drift_original(i);
    let b = model.diffusion_original(i);
    let b_prime = model.diffusion_original_prime(i);
    i + a * h + b * dw + b * b_prime * dzeta
}

/// Whether stepping from `prev` to `next` leaves the open interval `(0, N)`.
/// A positive subnormal state rounding to exactly zero is underflow of a
/// vanishing population, not an exit, and zero itself is a fixed point.
fn leaves_domain(prev: f64, next: f64, n: f64) -> bool {
    if next == 0.0 {
        return prev >= f64::MIN_POSITIVE;
    }
    !(next > 0.0 && next < n)
}

pub fn milstein_direct_simulate(
    increments: &[LevyAreaIncrement],
    model: &ModelParams,
    h: f64,
) -> Result<Trajectory> {
    model.validate()?;
    positive("h", h)?;
    let m = increments.len();
    let mut values = Vec::with_capacity(m + 1);
    let mut i = model.i0;
    values.push(i);
    let mut first_violation = None;
    let mut exploded_at = None;
    for (k, inc) in increments.iter().enumerate() {
        let next = milstein_direct_step(i, inc.dw, inc.dzeta, model, h);
        if !next.is_finite() {
            first_violation.get_or_insert(k + 1);
            exploded_at = Some(k + 1);
            values.resize(m + 1, f64::NAN);
            break;
        }
        if first_violation.is_none() && leaves_domain(i, next, model.n) {
            first_violation = Some(k + 1);
        }
        values.push(next);
        i = next;
    }
    Ok(Trajectory {
        scheme: SchemeKind::Milstein,
        h,
        values,
        log_values: None,
        truncated: None,
        truncation_count: 0,
        domain_violation: first_violation.map(|first_index| DomainViolation {
            first_index,
            exploded_at,
        }),
    })
}

pub fn simulate(
    kind: SchemeKind,
    increments: &[LevyAreaIncrement],
    model: &ModelParams,
    scheme: &SchemeParams,
) -> Result<Trajectory> {
    match kind {
        SchemeKind::Lcm => lcm_simulate(increments, model, scheme),
        SchemeKind::Milstein => milstein_direct_simulate(increments, model, scheme.h),
    }
}
