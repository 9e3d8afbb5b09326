//! Coefficients of the stochastic SIS model
//!
//! ```text
//! dI = I (beta N - mu - gamma - beta I) dt + sigma I (N - I) dW
//! ```
//!
//! and of its logarithmic transform `X = log I`, whose drift `f` and
//! diffusion `g` are bounded and Lipschitz on `(-inf, log N)`. Also houses the
//! reproduction numbers and the extinction / persistence thresholds derived
//! from them.

use crate::error::{positive, Error, Result};

/// Default residual tolerance for [`ModelParams::persistence_lambda`].
pub const LAMBDA_TOL: f64 = 1e-12;
const LAMBDA_MAX_ITER: usize = 200;

/// Parameters of the SIS model. Only the sum `mu + gamma` enters the
/// dynamics, so death and cure rates are stored combined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Population size `N`.
    pub n: f64,
    pub beta: f64,
    pub sigma: f64,
    pub mu_plus_gamma: f64,
    /// Initial infected count, in `(0, N)`.
    pub i0: f64,
}

/// `f`, `g` and `g g'` at one point, sharing a single evaluation of `e^x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogCoefficients {
    pub f: f64,
    pub g: f64,
    pub gg_prime: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReproductionNumbers {
    pub deterministic: f64,
    pub stochastic: f64,
}

/// Which sufficient condition for extinction the noise intensity satisfies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtinctionCase {
    /// `sigma^2 <= beta / N`
    SmallSigma,
    /// `sigma^2 > max(beta / N, beta^2 / (2 (mu + gamma)))`
    LargeSigma,
    /// The gap between the two cases; no extinction statement is made there.
    Neither,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegimeReport {
    pub r0_deterministic: f64,
    pub r0_stochastic: f64,
    pub extinction_case: ExtinctionCase,
    pub f_max_sigma: Option<f64>,
    pub persistence_lambda: Option<f64>,
}

impl ModelParams {
    pub fn new(n: f64, beta: f64, sigma: f64, mu_plus_gamma: f64, i0: f64) -> Result<Self> {
        let p = Self {
            n,
            beta,
            sigma,
            mu_plus_gamma,
            i0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        positive("N", self.n)?;
        positive("beta", self.beta)?;
        positive("sigma", self.sigma)?;
        positive("mu_plus_gamma", self.mu_plus_gamma)?;
        if !(self.i0 > 0.0 && self.i0 < self.n) {
            return Err(Error::InvalidParameter {
                name: "I0",
                reason: format!("must lie in (0, N = {}), got {}", self.n, self.i0),
            });
        }
        Ok(())
    }

    /// Same model, different initial value.
    pub fn with_i0(&self, i0: f64) -> Result<Self> {
        let p = Self { i0, ..*self };
        p.validate()?;
        Ok(p)
    }

    pub fn log_n(&self) -> f64 {
        self.n.ln()
    }

    /// Drift of the original SDE, `I (beta N - mu - gamma - beta I)`.
    pub fn drift_original(&self, i: f64) -> f64 {
        i * (self.beta * self.n - self.mu_plus_gamma - self.beta * i)
    }

    /// Diffusion of the original SDE, `sigma I (N - I)`.
    pub fn diffusion_original(&self, i: f64) -> f64 {
        self.sigma * i * (self.n - i)
    }

    /// Derivative of [`Self::diffusion_original`], `sigma (N - 2I)`.
    pub fn diffusion_original_prime(&self, i: f64) -> f64 {
        self.sigma * (self.n - 2.0 * i)
    }

    /// Drift of the log-transformed SDE.
    pub fn f(&self, x: f64) -> f64 {
        self.f_at(x.exp())
    }

    pub fn g(&self, x: f64) -> f64 {
        self.sigma * (self.n - x.exp())
    }

    pub fn g_prime(&self, x: f64) -> f64 {
        -self.sigma * x.exp()
    }

    pub fn gg_prime(&self, x: f64) -> f64 {
        let e = x.exp();
        -self.sigma * self.sigma * e * (self.n - e)
    }

    pub fn coefficients(&self, x: f64) -> LogCoefficients {
        let e = x.exp();
        let s2 = self.sigma * self.sigma;
        LogCoefficients {
            f: self.f_at(e),
            g: self.sigma * (self.n - e),
            gg_prime: -s2 * e * (self.n - e),
        }
    }

    // f written in terms of e = e^x; e^{2x} = e*e underflows to 0 as x -> -inf.
    fn f_at(&self, e: f64) -> f64 {
        let s2 = self.sigma * self.sigma;
        let n = self.n;
        -0.5 * s2 * e * e
            + (s2 * n - self.beta) * e
            + (self.beta * n - self.mu_plus_gamma - 0.5 * s2 * n * n)
    }

    pub fn reproduction_numbers(&self) -> ReproductionNumbers {
        let deterministic = self.beta * self.n / self.mu_plus_gamma;
        let stochastic =
            deterministic - self.sigma * self.sigma * self.n * self.n / (2.0 * self.mu_plus_gamma);
        ReproductionNumbers {
            deterministic,
            stochastic,
        }
    }

    pub fn extinction_case(&self) -> ExtinctionCase {
        let s2 = self.sigma * self.sigma;
        let beta_over_n = self.beta / self.n;
        if s2 <= beta_over_n {
            ExtinctionCase::SmallSigma
        } else if s2 > beta_over_n.max(self.beta * self.beta / (2.0 * self.mu_plus_gamma)) {
            ExtinctionCase::LargeSigma
        } else {
            ExtinctionCase::Neither
        }
    }

    /// Upper bound of `f` on `(-inf, log N)` in the extinction regime. It is
    /// the almost-sure bound on the exponential decay rate of `I`.
    pub fn f_max_sigma(&self) -> Result<f64> {
        if self.reproduction_numbers().stochastic >= 1.0 {
            return Err(Error::Precondition("R0s < 1"));
        }
        let s2 = self.sigma * self.sigma;
        match self.extinction_case() {
            ExtinctionCase::SmallSigma => {
                Ok(self.beta * self.n - self.mu_plus_gamma - 0.5 * s2 * self.n * self.n)
            }
            ExtinctionCase::LargeSigma => {
                Ok(self.beta * self.beta / (2.0 * s2) - self.mu_plus_gamma)
            }
            ExtinctionCase::Neither => Err(Error::NoExtinctionCase { sigma_sq: s2 }),
        }
    }

    /// `beta N - mu - gamma - beta l - sigma^2 (N - l)^2 / 2`
    pub fn persistence_residual(&self, lambda: f64) -> f64 {
        let d = self.n - lambda;
        self.beta * self.n
            - self.mu_plus_gamma
            - self.beta * lambda
            - 0.5 * self.sigma * self.sigma * d * d
    }

    /// The level that persistent paths rise above and fall below infinitely
    /// often: the unique root of [`Self::persistence_residual`] in `(0, N)`.
    ///
    /// Bisection is bracketed by `residual(0) = (mu + gamma)(R0s - 1) > 0` and
    /// `residual(N) = -(mu + gamma) < 0`.
    pub fn persistence_lambda(&self, tol: f64) -> Result<f64> {
        positive("tol", tol)?;
        if self.reproduction_numbers().stochastic <= 1.0 {
            return Err(Error::Precondition("R0s > 1"));
        }
        let (mut lo, mut hi) = (0.0_f64, self.n);
        let mut best = (f64::INFINITY, 0.5 * self.n);
        for _ in 0..LAMBDA_MAX_ITER {
            let mid = 0.5 * (lo + hi);
            let r = self.persistence_residual(mid);
            if r.abs() < best.0 {
                best = (r.abs(), mid);
            }
            if r.abs() <= tol {
                return Ok(mid);
            }
            if r > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if mid == lo && mid == hi {
                break;
            }
        }
        Err(Error::RootNotConverged {
            iterations: LAMBDA_MAX_ITER,
            residual: best.0,
        })
    }

    /// Upper bound on the back-off coefficient `alpha` under which the LCM
    /// scheme keeps the persistence property for step `h` and exponent
    /// `theta`.
    pub fn persistence_alpha_bound(&self, h: f64, theta: f64) -> Result<f64> {
        positive("h", h)?;
        positive("theta", theta)?;
        if self.reproduction_numbers().stochastic <= 1.0 {
            return Err(Error::Precondition("R0s > 1"));
        }
        let s2n = self.sigma * self.sigma * self.n;
        let radicand = self.beta * self.beta - 2.0 * self.sigma * self.sigma * self.mu_plus_gamma;
        let denom = s2n - self.beta + radicand.sqrt();
        Ok(h.powf(-theta) * (s2n / denom).ln())
    }

    pub fn regime_report(&self) -> RegimeReport {
        let r0 = self.reproduction_numbers();
        RegimeReport {
            r0_deterministic: r0.deterministic,
            r0_stochastic: r0.stochastic,
            extinction_case: self.extinction_case(),
            f_max_sigma: self.f_max_sigma().ok(),
            persistence_lambda: self.persistence_lambda(LAMBDA_TOL).ok(),
        }
    }
}
