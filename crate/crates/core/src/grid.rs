//! Uniform time grids, counter-addressed Brownian increments and dense path
//! storage.
//!
//! Ensembles are stored node-major: the value of particle `i` at node `k`
//! lives at `k * n + i`, so a time slice is a contiguous slice.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Particles handled per parallel task.
pub(crate) const PARTICLE_CHUNK: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::invalid("horizon", format!("must be positive, got {horizon}")));
        }
        if steps == 0 {
            return Err(Error::invalid("steps", "must be at least 1"));
        }
        Ok(Self { horizon, steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Number of nodes, `steps + 1`.
    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    /// Time of node `k`; the last node is pinned to the horizon.
    pub fn time(&self, k: usize) -> f64 {
        if k >= self.steps {
            self.horizon
        } else {
            k as f64 * self.dt()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.time(k)).collect()
    }

    pub(crate) fn check_node(&self, k: usize) -> Result<()> {
        if k > self.steps {
            return Err(Error::IndexOutOfRange {
                index: k,
                len: self.len(),
            });
        }
        Ok(())
    }

    pub(crate) fn ensure_same(&self, other: &TimeGrid) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch {
                left: format!("T={}, M={}", self.horizon, self.steps),
                right: format!("T={}, M={}", other.horizon, other.steps),
            });
        }
        Ok(())
    }
}

pub fn make_grid(horizon: f64, steps: usize) -> Result<TimeGrid> {
    TimeGrid::new(horizon, steps)
}

/// Master seed of a reproducible run.
///
/// Particle `i` reads ChaCha8 stream `i`; the normal used on step `k` is built
/// from the 128 bits at word offset `4k` of that stream, so every increment is
/// a pure function of `(master, i, k)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master: u64,
}

impl SeedSpec {
    pub fn new(master: u64) -> Self {
        Self { master }
    }

    fn stream(&self, particle: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master);
        rng.set_stream(particle as u64);
        rng
    }

    /// Standard normal for `(particle, step)`, by random access.
    pub fn normal(&self, particle: usize, step: usize) -> f64 {
        let mut rng = self.stream(particle);
        rng.set_word_pos(4 * step as u128);
        box_muller(&mut rng)
    }

    /// Fills `out[k]` with the normals of steps `0..out.len()` for `particle`.
    pub fn fill_normals(&self, particle: usize, out: &mut [f64]) {
        let mut rng = self.stream(particle);
        for z in out.iter_mut() {
            *z = box_muller(&mut rng);
        }
    }

    /// Derived seed for an auxiliary experiment (regularity audits etc.).
    pub fn derive(&self, salt: u64) -> SeedSpec {
        SeedSpec::new(self.master ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15))
    }
}

fn unit_open(bits: u64) -> f64 {
    // (0, 1]
    ((bits >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn box_muller(rng: &mut ChaCha8Rng) -> f64 {
    let u1 = unit_open(rng.next_u64());
    let u2 = unit_open(rng.next_u64());
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Brownian increments `ΔB` for `n` particles, node-major (`k * n + i`).
#[derive(Debug, Clone, PartialEq)]
pub struct Increments {
    grid: TimeGrid,
    n: usize,
    values: Vec<f64>,
}

impl Increments {
    pub fn generate(grid: &TimeGrid, n: usize, seed: SeedSpec) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("particles", "must be at least 1"));
        }
        let m = grid.steps();
        let sd = grid.dt().sqrt();
        let chunks: Vec<(usize, Vec<f64>)> = (0..n)
            .step_by(PARTICLE_CHUNK)
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|start| {
                let end = (start + PARTICLE_CHUNK).min(n);
                let mut buf = vec![0.0; (end - start) * m];
                for (j, row) in buf.chunks_mut(m).enumerate() {
                    seed.fill_normals(start + j, row);
                }
                (start, buf)
            })
            .collect();
        let mut values = vec![0.0; n * m];
        for (start, buf) in chunks {
            for (j, row) in buf.chunks(m).enumerate() {
                for (k, z) in row.iter().enumerate() {
                    values[k * n + start + j] = z * sd;
                }
            }
        }
        Ok(Self {
            grid: *grid,
            n,
            values,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn particles(&self) -> usize {
        self.n
    }

    /// Increments over `[t_k, t_{k+1}]` for all particles.
    pub fn step(&self, k: usize) -> &[f64] {
        &self.values[k * self.n..(k + 1) * self.n]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathKind {
    Brownian,
    Solution,
}

/// `n × (M+1)` array of path values, node-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    kind: PathKind,
    grid: TimeGrid,
    x: f64,
    n: usize,
    values: Vec<f64>,
}

impl PathEnsemble {
    pub(crate) fn from_raw(kind: PathKind, grid: TimeGrid, x: f64, n: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), n * grid.len());
        Self {
            kind,
            grid,
            x,
            n,
            values,
        }
    }

    /// Brownian paths `x + B` from precomputed increments.
    pub fn brownian_from(increments: &Increments, x: f64) -> Self {
        let grid = *increments.grid();
        let n = increments.particles();
        let mut values = Vec::with_capacity(n * grid.len());
        values.resize(n, x);
        for k in 0..grid.steps() {
            let base = k * n;
            let dbs = increments.step(k);
            for i in 0..n {
                let next = values[base + i] + dbs[i];
                values.push(next);
            }
        }
        Self::from_raw(PathKind::Brownian, grid, x, n, values)
    }

    pub fn kind(&self) -> PathKind {
        self.kind
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn initial(&self) -> f64 {
        self.x
    }

    pub fn particles(&self) -> usize {
        self.n
    }

    /// All particle values at node `k`.
    pub fn column(&self, k: usize) -> &[f64] {
        &self.values[k * self.n..(k + 1) * self.n]
    }

    pub fn terminal(&self) -> &[f64] {
        self.column(self.grid.steps())
    }

    pub fn value(&self, particle: usize, k: usize) -> f64 {
        self.values[k * self.n + particle]
    }

    /// Copy of one particle's path.
    pub fn path(&self, particle: usize) -> Vec<f64> {
        (0..self.grid.len()).map(|k| self.value(particle, k)).collect()
    }

    pub fn raw(&self) -> &[f64] {
        &self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

pub fn sample_brownian(grid: &TimeGrid, n: usize, x: f64, seed: SeedSpec) -> Result<PathEnsemble> {
    if !x.is_finite() {
        return Err(Error::invalid("x", "initial condition must be finite"));
    }
    let inc = Increments::generate(grid, n, seed)?;
    Ok(PathEnsemble::brownian_from(&inc, x))
}
