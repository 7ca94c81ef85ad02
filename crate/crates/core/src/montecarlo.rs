//! Seeded spacing simulator.
//!
//! A random split of the unit interval between `N` participants is drawn by
//! sorting `N - 1` uniform cut points and taking the gaps between them;
//! sorting the gaps descending assigns ranks. The discrete mode draws the
//! cut points on an integer grid instead, ties producing zero spacings.
//!
//! Simulation is chunked: chunk `c` runs on its own random stream derived
//! from `(seed, c)`, so results are reproducible for a fixed seed and chunk
//! size no matter how many threads participate in the run.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use crate::kahan::kahan_sum;
use crate::model;
use crate::numfmt;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("simulation requires at least 2 participants, got {0}")]
    TooFewParticipants(u32),
    #[error("at least one sample is required")]
    NoSamples,
    #[error("discrete grid must hold at least 1 unit")]
    EmptyGrid,
    #[error("chunk size must be at least 1")]
    EmptyChunk,
    #[error("distribution holds {simulated} participants but rank data for {requested} was requested")]
    ParticipantMismatch { simulated: u32, requested: u32 },
    #[error("rank {k} out of range for {n} participants")]
    RankOutOfRange { n: u32, k: u32 },
}

/// Sampling grid: continuous spacings on (0, 1), or integer spacings of a
/// volume of `grid` units.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimMode {
    Continuous,
    Discrete { grid: u64 },
}

/// Grid size matching the reference integer-mode runs.
pub const DEFAULT_DISCRETE_GRID: u64 = 100;

const DEFAULT_CHUNK_SIZE: u64 = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimConfig {
    participants: u32,
    samples: u64,
    seed: u64,
    mode: SimMode,
    chunk_size: u64,
}

impl SimConfig {
    pub fn new(participants: u32, samples: u64, seed: u64, mode: SimMode) -> Result<Self, SimError> {
        if participants < 2 {
            return Err(SimError::TooFewParticipants(participants));
        }
        if samples == 0 {
            return Err(SimError::NoSamples);
        }
        if let SimMode::Discrete { grid: 0 } = mode {
            return Err(SimError::EmptyGrid);
        }
        Ok(Self {
            participants,
            samples,
            seed,
            mode,
            chunk_size: DEFAULT_CHUNK_SIZE,
        })
    }

    /// Override the chunk size; part of the determinism contract, so runs
    /// with different chunk sizes may legitimately differ.
    pub fn with_chunk_size(mut self, chunk_size: u64) -> Result<Self, SimError> {
        if chunk_size == 0 {
            return Err(SimError::EmptyChunk);
        }
        self.chunk_size = chunk_size;
        Ok(self)
    }

    pub fn participants(&self) -> u32 {
        self.participants
    }

    pub fn samples(&self) -> u64 {
        self.samples
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn mode(&self) -> SimMode {
        self.mode
    }

    pub fn chunk_size(&self) -> u64 {
        self.chunk_size
    }
}

/// One random split: the `n` spacings of the unit interval, descending.
pub fn sample_shares<R: Rng + ?Sized>(n: u32, rng: &mut R) -> Vec<f64> {
    assert!(n >= 2, "sampling requires at least 2 participants");
    let mut cuts: Vec<f64> = (1..n).map(|_| rng.random::<f64>()).collect();
    cuts.sort_unstable_by(|a, b| a.partial_cmp(b).expect("uniform draw is not NaN"));
    let mut shares = Vec::with_capacity(n as usize);
    let mut prev = 0.0;
    for &c in &cuts {
        shares.push(c - prev);
        prev = c;
    }
    shares.push(1.0 - prev);
    shares.sort_unstable_by(|a, b| b.partial_cmp(a).expect("spacing is not NaN"));
    shares
}

/// Integer-grid split: cut points drawn uniformly on `0..=grid`, spacings
/// reported as share fractions `part/grid`. Ties yield zero spacings.
pub fn sample_shares_discrete<R: Rng + ?Sized>(n: u32, grid: u64, rng: &mut R) -> Vec<f64> {
    assert!(n >= 2, "sampling requires at least 2 participants");
    assert!(grid >= 1, "grid must hold at least 1 unit");
    let mut cuts: Vec<u64> = (1..n).map(|_| rng.random_range(0..=grid)).collect();
    cuts.sort_unstable();
    let mut parts = Vec::with_capacity(n as usize);
    let mut prev = 0;
    for &c in &cuts {
        parts.push(c - prev);
        prev = c;
    }
    parts.push(grid - prev);
    parts.sort_unstable_by(|a, b| b.cmp(a));
    parts.into_iter().map(|p| p as f64 / grid as f64).collect()
}

/// Per-rank share samples accumulated over a simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalRankDistribution {
    participants: u32,
    samples: u64,
    mode: SimMode,
    /// `ranked[k - 1]`: every observed share of rank `k`, sorted ascending.
    ranked: Vec<Vec<f64>>,
    means: Vec<f64>,
}

impl EmpiricalRankDistribution {
    pub fn participants(&self) -> u32 {
        self.participants
    }

    pub fn samples(&self) -> u64 {
        self.samples
    }

    pub fn mode(&self) -> SimMode {
        self.mode
    }

    /// All observed shares of rank `k`, ascending.
    pub fn rank_samples(&self, k: u32) -> &[f64] {
        assert!(k >= 1 && k <= self.participants, "rank out of range");
        &self.ranked[(k - 1) as usize]
    }

    /// Sample mean share of rank `k`.
    pub fn mean(&self, k: u32) -> f64 {
        assert!(k >= 1 && k <= self.participants, "rank out of range");
        self.means[(k - 1) as usize]
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    /// Sample standard error of the rank-`k` mean.
    pub fn standard_error(&self, k: u32) -> f64 {
        let xs = self.rank_samples(k);
        let mean = self.mean(k);
        let var = kahan_sum(xs.iter().map(|x| (x - mean) * (x - mean))) / (xs.len() as f64 - 1.0);
        (var / xs.len() as f64).sqrt()
    }

    /// Binned histogram rows `rank,bin_lower,bin_upper,count,empirical_density`.
    ///
    /// Bins of the given width tile `[0, 1/k]` for each rank (rank 1 runs to
    /// 1); density is `count / (samples · width)`.
    pub fn write_histogram_csv<W: Write>(&self, mut out: W, bin_width: f64) -> io::Result<()> {
        assert!(bin_width > 0.0, "bin width must be positive");
        writeln!(out, "rank,bin_lower,bin_upper,count,empirical_density")?;
        for (k, lower, upper, count, density) in self.histogram_bins(bin_width) {
            writeln!(
                out,
                "{},{},{},{},{}",
                k,
                numfmt::fmt12(lower),
                numfmt::fmt12(upper),
                count,
                numfmt::fmt12(density)
            )?;
        }
        Ok(())
    }

    /// JSON mirror of the histogram export.
    pub fn histogram_json(&self, bin_width: f64) -> serde_json::Value {
        let bins: Vec<_> = self
            .histogram_bins(bin_width)
            .into_iter()
            .map(|(k, lower, upper, count, density)| {
                json!({
                    "rank": k,
                    "bin_lower": numfmt::round12(lower),
                    "bin_upper": numfmt::round12(upper),
                    "count": count,
                    "empirical_density": numfmt::round12(density),
                })
            })
            .collect();
        let mode = match self.mode {
            SimMode::Continuous => json!("continuous"),
            SimMode::Discrete { grid } => json!({"discrete": {"grid": grid}}),
        };
        json!({
            "n": self.participants,
            "samples": self.samples,
            "mode": mode,
            "bin_width": bin_width,
            "bins": bins,
        })
    }

    fn histogram_bins(&self, bin_width: f64) -> Vec<(u32, f64, f64, u64, f64)> {
        let mut rows = Vec::new();
        for k in 1..=self.participants {
            let hi = if k == 1 { 1.0 } else { 1.0 / f64::from(k) };
            let bins = (hi / bin_width).ceil() as usize;
            let mut counts = vec![0u64; bins.max(1)];
            for &s in self.rank_samples(k) {
                let idx = ((s / bin_width) as usize).min(bins - 1);
                counts[idx] += 1;
            }
            for (j, &count) in counts.iter().enumerate() {
                let lower = j as f64 * bin_width;
                let upper = (j as f64 + 1.0) * bin_width;
                let density = count as f64 / (self.samples as f64 * bin_width);
                rows.push((k, lower, upper, count, density));
            }
        }
        rows
    }
}

/// Run the configured simulation. Deterministic for a fixed
/// `(seed, chunk_size)` pair, independent of thread count.
pub fn simulate(cfg: &SimConfig) -> EmpiricalRankDistribution {
    let n = cfg.participants as usize;
    let chunk_count = cfg.samples.div_ceil(cfg.chunk_size);
    let per_chunk: Vec<Vec<Vec<f64>>> = (0..chunk_count)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(chunk);
            let start = chunk * cfg.chunk_size;
            let count = cfg.chunk_size.min(cfg.samples - start) as usize;
            let mut ranked = vec![Vec::with_capacity(count); n];
            for _ in 0..count {
                let shares = match cfg.mode {
                    SimMode::Continuous => sample_shares(cfg.participants, &mut rng),
                    SimMode::Discrete { grid } => {
                        sample_shares_discrete(cfg.participants, grid, &mut rng)
                    }
                };
                for (rank, &s) in shares.iter().enumerate() {
                    ranked[rank].push(s);
                }
            }
            ranked
        })
        .collect();

    let mut ranked = vec![Vec::with_capacity(cfg.samples as usize); n];
    for chunk in per_chunk {
        for (rank, mut xs) in chunk.into_iter().enumerate() {
            ranked[rank].append(&mut xs);
        }
    }
    for xs in &mut ranked {
        xs.sort_unstable_by(|a, b| a.partial_cmp(b).expect("share is not NaN"));
    }
    let means = ranked
        .iter()
        .map(|xs| kahan_sum(xs.iter().copied()) / xs.len() as f64)
        .collect();
    EmpiricalRankDistribution {
        participants: cfg.participants,
        samples: cfg.samples,
        mode: cfg.mode,
        ranked,
        means,
    }
}

/// Kolmogorov-Smirnov distance between the rank-`k` samples and the model
/// CDF: the largest gap between the empirical step function and `cdf(n, k, ·)`.
pub fn ks_distance(emp: &EmpiricalRankDistribution, n: u32, k: u32) -> Result<f64, SimError> {
    if emp.participants != n {
        return Err(SimError::ParticipantMismatch {
            simulated: emp.participants,
            requested: n,
        });
    }
    if k < 1 || k > n {
        return Err(SimError::RankOutOfRange { n, k });
    }
    let xs = emp.rank_samples(k);
    let count = xs.len() as f64;
    let mut sup: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = model::cdf(n, k, x);
        let below = i as f64 / count;
        let above = (i as f64 + 1.0) / count;
        sup = sup.max((f - below).abs()).max((above - f).abs());
    }
    Ok(sup)
}
