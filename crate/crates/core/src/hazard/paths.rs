use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::CirParams;
use crate::error::{Error, Result};

const PATH_FILE_MAGIC: &[u8; 8] = b"HZPATHS1";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationOptions {
    /// Euler substeps per year between grid dates.
    pub substeps_per_year: f64,
    /// Pair path `2k + 1` with the negated draws of path `2k`.
    pub antithetic: bool,
    /// Random stream owned by one simulated entity. Entities with different
    /// streams get independent Brownian drivers; re-using a stream re-uses
    /// the draws (common random numbers).
    pub stream: u64,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        Self {
            substeps_per_year: 52.0,
            antithetic: false,
            stream: 0,
        }
    }
}

/// Simulated hazard paths for one entity on a date grid.
#[derive(Debug, Clone, PartialEq)]
pub struct HazardPathSet {
    time_grid: Vec<f64>,
    n_paths: usize,
    /// `n_paths × (m + 1)`, row-major.
    hazards: Vec<f64>,
    /// `n_paths × m` integrated hazard per grid period, row-major.
    integrated: Vec<f64>,
    pub seed: u64,
}

fn substeps(width: f64, per_year: f64) -> usize {
    ((width * per_year - 1e-9).ceil() as usize).max(1)
}

fn path_rng(seed: u64, stream: u64, pair: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ pair);
    rng
}

/// Full-truncation Euler simulation of CIR hazard paths.
///
/// Each path draws from its own counter-based stream keyed by
/// `(seed, options.stream, path index)`, so results do not depend on the
/// number of worker threads. Period integrals use the trapezoid rule on the
/// substep grid.
pub fn simulate_paths(
    params: &CirParams,
    grid: &[f64],
    n_paths: usize,
    seed: u64,
    options: &SimulationOptions,
) -> Result<HazardPathSet> {
    params.validate()?;
    if n_paths == 0 {
        return Err(Error::InvalidParams("n_paths must be >= 1".into()));
    }
    if grid.len() < 2 || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::GridMismatch("hazard grid must have >= 2 increasing dates".into()));
    }
    if !(options.substeps_per_year > 0.0) {
        return Err(Error::InvalidParams("substeps_per_year must be positive".into()));
    }
    let cols = grid.len();
    let periods = cols - 1;
    let steps: Vec<usize> = grid
        .windows(2)
        .map(|w| substeps(w[1] - w[0], options.substeps_per_year))
        .collect();

    let mut hazards = vec![0.0; n_paths * cols];
    let mut integrated = vec![0.0; n_paths * periods];
    let (a, b, vol) = (params.mean_reversion, params.long_term_mean, params.volatility);

    hazards
        .par_chunks_mut(cols)
        .zip(integrated.par_chunks_mut(periods))
        .enumerate()
        .for_each(|(path, (h_row, int_row))| {
            let (pair, sign) = if options.antithetic {
                ((path / 2) as u64, if path % 2 == 0 { 1.0 } else { -1.0 })
            } else {
                (path as u64, 1.0)
            };
            let mut rng = path_rng(seed, options.stream, pair);
            let mut x = params.initial;
            h_row[0] = x.max(0.0);
            for j in 0..periods {
                let n = steps[j];
                let dt = (grid[j + 1] - grid[j]) / n as f64;
                let sqrt_dt = dt.sqrt();
                let mut acc = 0.0;
                let mut prev = x.max(0.0);
                for _ in 0..n {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    let pos = x.max(0.0);
                    x += a * (b - pos) * dt + vol * pos.sqrt() * sqrt_dt * sign * z;
                    let next = x.max(0.0);
                    acc += 0.5 * (prev + next) * dt;
                    prev = next;
                }
                h_row[j + 1] = prev;
                int_row[j] = acc;
            }
        });

    Ok(HazardPathSet {
        time_grid: grid.to_vec(),
        n_paths,
        hazards,
        integrated,
        seed,
    })
}

/// `exp(-∫ h)` over a sampled hazard trace, trapezoid rule.
pub fn trapezoid_survival(times: &[f64], hazards: &[f64]) -> Result<f64> {
    if times.len() != hazards.len() || times.is_empty() {
        return Err(Error::GridMismatch(format!(
            "{} times vs {} hazard samples",
            times.len(),
            hazards.len()
        )));
    }
    let integral: f64 = times
        .windows(2)
        .zip(hazards.windows(2))
        .map(|(t, h)| 0.5 * (h[0] + h[1]) * (t[1] - t[0]))
        .sum();
    Ok((-integral).exp())
}

impl HazardPathSet {
    /// Path set holding identical deterministic paths; used for constant hazards.
    pub fn constant(hazard: f64, grid: &[f64], n_paths: usize) -> Result<Self> {
        if !(hazard >= 0.0) {
            return Err(Error::InvalidParams(format!("hazard {hazard} must be >= 0")));
        }
        if grid.len() < 2 || grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::GridMismatch("hazard grid must have >= 2 increasing dates".into()));
        }
        let periods = grid.len() - 1;
        let row: Vec<f64> = grid.windows(2).map(|w| hazard * (w[1] - w[0])).collect();
        Ok(Self {
            time_grid: grid.to_vec(),
            n_paths,
            hazards: vec![hazard; n_paths * grid.len()],
            integrated: row.iter().copied().cycle().take(n_paths * periods).collect(),
            seed: 0,
        })
    }

    pub fn time_grid(&self) -> &[f64] {
        &self.time_grid
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn periods(&self) -> usize {
        self.time_grid.len() - 1
    }

    /// Hazard rate on `path` at grid date `k`.
    pub fn hazard(&self, path: usize, k: usize) -> f64 {
        self.hazards[path * self.time_grid.len() + k]
    }

    pub fn hazards(&self) -> &[f64] {
        &self.hazards
    }

    pub fn integrated_hazard(&self, path: usize, j: usize) -> f64 {
        self.integrated[path * self.periods() + j]
    }

    /// `p(T_j, T_{j+1}) = exp(-∫ h)` on one path.
    pub fn period_survival(&self, path: usize, j: usize) -> Result<f64> {
        if path >= self.n_paths || j >= self.periods() {
            return Err(Error::GridMismatch(format!(
                "period {j} of path {path} outside {} paths x {} periods",
                self.n_paths,
                self.periods()
            )));
        }
        Ok((-self.integrated_hazard(path, j)).exp())
    }

    /// `p(T_i, T_k)` on one path, `i <= k`.
    pub fn survival_between(&self, path: usize, i: usize, k: usize) -> Result<f64> {
        if path >= self.n_paths || i > k || k > self.periods() {
            return Err(Error::GridMismatch(format!("bad survival window {i}..{k}")));
        }
        let row = &self.integrated[path * self.periods()..(path + 1) * self.periods()];
        Ok((-row[i..k].iter().sum::<f64>()).exp())
    }

    /// Verifies the path grid matches a payment schedule's dates.
    pub fn check_grid(&self, dates: &[f64]) -> Result<()> {
        let same = self.time_grid.len() == dates.len()
            && self
                .time_grid
                .iter()
                .zip(dates)
                .all(|(a, b)| (a - b).abs() <= 1e-12 * b.abs().max(1.0));
        if same {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "path grid has {} dates, schedule has {}",
                self.time_grid.len(),
                dates.len()
            )))
        }
    }

    /// Writes the grid-date hazards as a binary matrix.
    ///
    /// Layout (little endian): 8-byte magic `HZPATHS1`, `u64` path count,
    /// `u64` grid length, the grid as `f64`s, then the `paths × grid` matrix
    /// of `f64` hazards in row-major order.
    pub fn write_binary(&self, mut w: impl Write) -> Result<()> {
        w.write_all(PATH_FILE_MAGIC)?;
        w.write_all(&(self.n_paths as u64).to_le_bytes())?;
        w.write_all(&(self.time_grid.len() as u64).to_le_bytes())?;
        for t in &self.time_grid {
            w.write_all(&t.to_le_bytes())?;
        }
        for h in &self.hazards {
            w.write_all(&h.to_le_bytes())?;
        }
        Ok(())
    }

    /// Reads the layout written by [`HazardPathSet::write_binary`], returning
    /// `(grid, paths × grid hazards)`.
    pub fn read_binary(mut r: impl Read) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != PATH_FILE_MAGIC {
            return Err(Error::Schema("not a hazard path file".into()));
        }
        let mut word = [0u8; 8];
        let mut next_u64 = |r: &mut dyn Read| -> Result<u64> {
            r.read_exact(&mut word)?;
            Ok(u64::from_le_bytes(word))
        };
        let rows = next_u64(&mut r)? as usize;
        let cols = next_u64(&mut r)? as usize;
        let read_f64 = |r: &mut dyn Read| -> Result<f64> {
            let mut b = [0u8; 8];
            r.read_exact(&mut b)?;
            Ok(f64::from_le_bytes(b))
        };
        let grid = (0..cols).map(|_| read_f64(&mut r)).collect::<Result<Vec<_>>>()?;
        let matrix = (0..rows)
            .map(|_| (0..cols).map(|_| read_f64(&mut r)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Ok((grid, matrix))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_vol_at_mean_is_constant() {
        let p = CirParams::new(0.2, 0.03, 0.0, 0.03).unwrap();
        let grid = [0.0, 0.25, 0.5, 1.0];
        let set = simulate_paths(&p, &grid, 8, 7, &SimulationOptions::default()).unwrap();
        assert!(set.hazards().iter().all(|&h| (h - 0.03).abs() < 1e-17));
    }

    #[test]
    fn trapezoid_examples() {
        assert_eq!(trapezoid_survival(&[0.0, 1.0], &[0.0, 0.0]).unwrap(), 1.0);
        let flat = trapezoid_survival(&[0.0, 0.5, 1.0], &[0.02, 0.02, 0.02]).unwrap();
        assert!((flat - (-0.02f64).exp()).abs() < 1e-15);
        assert!((flat - 0.980198673306755).abs() < 1e-12);
        let times: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let linear: Vec<f64> = times.iter().map(|t| 0.04 * t).collect();
        assert!((trapezoid_survival(&times, &linear).unwrap() - (-0.02f64).exp()).abs() < 1e-15);
        assert!(trapezoid_survival(&[0.0, 1.0], &[0.0]).is_err());
    }

    #[test]
    fn period_survival_checks_bounds() {
        let set = HazardPathSet::constant(0.02, &[0.0, 1.0], 3).unwrap();
        assert!((set.period_survival(2, 0).unwrap() - (-0.02f64).exp()).abs() < 1e-16);
        assert!(matches!(set.period_survival(3, 0), Err(Error::GridMismatch(_))));
        assert!(matches!(set.period_survival(0, 1), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn binary_round_trip() {
        let p = CirParams::new(0.2, 0.03, 0.05, 0.02).unwrap();
        let set = simulate_paths(&p, &[0.0, 0.25, 0.5], 5, 11, &SimulationOptions::default()).unwrap();
        let mut buf = Vec::new();
        set.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 8 + 16 + 3 * 8 + 5 * 3 * 8);
        let (grid, rows) = HazardPathSet::read_binary(buf.as_slice()).unwrap();
        assert_eq!(grid, vec![0.0, 0.25, 0.5]);
        for (i, row) in rows.iter().enumerate() {
            for (k, h) in row.iter().enumerate() {
                assert_eq!(*h, set.hazard(i, k));
            }
        }
    }
}
