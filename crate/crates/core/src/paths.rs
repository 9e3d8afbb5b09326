//! Reproducible Brownian increments on a fine uniform grid, aggregated
//! exactly onto coarser grids so that runs at different step sizes see the
//! same sample path.
//!
//! Each path is driven by its own Xoshiro256++ stream. The 256-bit seed of
//! path `(base_seed, path_index)` is
//!
//! ```text
//! SHA-256("sislab/path-seed/v1" || base_seed.to_le_bytes() || path_index.to_le_bytes())
//! ```
//!
//! so streams depend only on the pair and never on thread scheduling.
//! Gaussian draws use the ziggurat sampler of `rand_distr::StandardNormal`.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_xoshiro::Xoshiro256PlusPlus;
use sha2::{Digest, Sha256};

use crate::error::{positive, Error, Result};

const SEED_DOMAIN: &[u8] = b"sislab/path-seed/v1";

/// Seed bytes for the generator of one path.
pub fn derive_seed(base_seed: u64, path_index: u64) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(SEED_DOMAIN);
    hasher.update(base_seed.to_le_bytes());
    hasher.update(path_index.to_le_bytes());
    hasher.finalize().into()
}

pub fn path_rng(base_seed: u64, path_index: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::from_seed(derive_seed(base_seed, path_index))
}

/// One step's Brownian increment together with the iterated integral
/// `dzeta = dW^2 / 2 - h / 2`, which is exact for scalar noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevyAreaIncrement {
    pub dw: f64,
    pub dzeta: f64,
}

impl LevyAreaIncrement {
    pub fn new(dw: f64, h: f64) -> Self {
        Self {
            dw,
            dzeta: 0.5 * dw * dw - 0.5 * h,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BrownianGrid {
    t_final: f64,
    increments: Vec<f64>,
    base_seed: u64,
    path_index: u64,
}

impl BrownianGrid {
    pub fn generate(
        base_seed: u64,
        path_index: u64,
        t_final: f64,
        fine_steps: usize,
    ) -> Result<Self> {
        positive("t_final", t_final)?;
        if fine_steps == 0 {
            return Err(Error::InvalidParameter {
                name: "fine_steps",
                reason: "must be at least 1".into(),
            });
        }
        let sd = (t_final / fine_steps as f64).sqrt();
        let mut rng = path_rng(base_seed, path_index);
        let increments = (0..fine_steps)
            .map(|_| sd * rng.sample::<f64, _>(StandardNormal))
            .collect();
        Ok(Self {
            t_final,
            increments,
            base_seed,
            path_index,
        })
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn fine_steps(&self) -> usize {
        self.increments.len()
    }

    pub fn fine_step_size(&self) -> f64 {
        self.t_final / self.increments.len() as f64
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    pub fn seed_record(&self) -> (u64, u64) {
        (self.base_seed, self.path_index)
    }

    /// Increments on the grid with step `2^level` times the fine step. Each
    /// coarse `dW` is the left-to-right sum of the fine increments it covers,
    /// and `dzeta` is recomputed from it at the coarse step.
    pub fn coarsen(&self, level: u32) -> Result<Vec<LevyAreaIncrement>> {
        let block = 1usize
            .checked_shl(level)
            .filter(|b| *b <= self.increments.len() && self.increments.len() % b == 0)
            .ok_or(Error::LevelMismatch {
                level,
                fine_steps: self.increments.len(),
            })?;
        let h = self.fine_step_size() * block as f64;
        Ok(self
            .increments
            .chunks_exact(block)
            .map(|c| LevyAreaIncrement::new(c.iter().sum(), h))
            .collect())
    }

    /// Little-endian dump: `t_final: f64, fine_steps: u64, base_seed: u64,
    /// path_index: u64`, then `fine_steps` increments as `f64`.
    pub fn write_dump<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(&self.t_final.to_le_bytes())?;
        w.write_all(&(self.increments.len() as u64).to_le_bytes())?;
        w.write_all(&self.base_seed.to_le_bytes())?;
        w.write_all(&self.path_index.to_le_bytes())?;
        for x in &self.increments {
            w.write_all(&x.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_dump<R: Read>(mut r: R) -> Result<Self> {
        let mut word = [0u8; 8];
        let mut next = |r: &mut R| -> Result<[u8; 8]> {
            r.read_exact(&mut word)
                .map_err(|e| Error::Dump(e.to_string()))?;
            Ok(word)
        };
        let t_final = f64::from_le_bytes(next(&mut r)?);
        let fine_steps = u64::from_le_bytes(next(&mut r)?);
        let base_seed = u64::from_le_bytes(next(&mut r)?);
        let path_index = u64::from_le_bytes(next(&mut r)?);
        if !(t_final.is_finite() && t_final > 0.0) || fine_steps == 0 {
            return Err(Error::Dump(format!(
                "bad header t_final={t_final} fine_steps={fine_steps}"
            )));
        }
        let mut increments = Vec::with_capacity(fine_steps.min(1 << 24) as usize);
        for _ in 0..fine_steps {
            increments.push(f64::from_le_bytes(next(&mut r)?));
        }
        let mut rest = Vec::new();
        r.read_to_end(&mut rest)
            .map_err(|e| Error::Dump(e.to_string()))?;
        if !rest.is_empty() {
            return Err(Error::Dump(format!("{} trailing bytes", rest.len())));
        }
        Ok(Self {
            t_final,
            increments,
            base_seed,
            path_index,
        })
    }
}
