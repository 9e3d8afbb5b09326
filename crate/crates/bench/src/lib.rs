//! Benchmark fixtures shared by the criterion targets.

use sislab_core::{ModelParams, SchemeParams};

/// A persistence regime with frequent truncation near `N`.
pub fn persistent_model() -> ModelParams {
    ModelParams::new(100.0, 0.5, 0.03, 45.0, 10.0).expect("valid parameters")
}

pub fn scheme(h: f64) -> SchemeParams {
    SchemeParams::new(h, 0.1, 2.0).expect("valid scheme")
}
