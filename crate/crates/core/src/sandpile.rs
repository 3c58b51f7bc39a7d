//! Abelian (BTW) sandpile on a d-dimensional hypercubic lattice with open
//! boundaries.
//!
//! A site topples when its height reaches `2 * d`: it loses `2 * d` grains
//! and each lattice neighbour gains one. Grains pushed across the boundary
//! are dissipated. Heights live in a flat array indexed by mixed-radix
//! coordinates, so the dimension is a runtime parameter.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::EmpiricalDistribution;
use crate::error::{Error, Result};

pub const MAX_DIMENSION: usize = 6;

/// Burn-in drives per lattice site when a config does not set one.
pub const DEFAULT_BURN_IN_PER_SITE: u64 = 50;

/// Hypercubic lattice geometry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lattice {
    dimension: usize,
    side: usize,
    strides: Vec<usize>,
    sites: usize,
}

impl Lattice {
    pub fn new(dimension: usize, side: usize) -> Result<Self> {
        if !(1..=MAX_DIMENSION).contains(&dimension) {
            return Err(Error::InvalidArgument(format!(
                "dimension must be in 1..={MAX_DIMENSION}, got {dimension}"
            )));
        }
        if side == 0 {
            return Err(Error::InvalidArgument(
                "lattice side must be positive".into(),
            ));
        }
        let mut strides = Vec::with_capacity(dimension);
        let mut sites: usize = 1;
        for _ in 0..dimension {
            strides.push(sites);
            sites = sites.checked_mul(side).ok_or_else(|| {
                Error::InvalidArgument(format!("{side}^{dimension} sites overflow"))
            })?;
        }
        Ok(Lattice {
            dimension,
            side,
            strides,
            sites,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    /// Toppling threshold: one grain per lattice neighbour.
    pub fn threshold(&self) -> u32 {
        2 * self.dimension as u32
    }

    pub fn index_of(&self, site: &[usize]) -> Result<usize> {
        if site.len() != self.dimension || site.iter().any(|&c| c >= self.side) {
            return Err(Error::OutOfBounds {
                site: site.to_vec(),
                side: self.side,
            });
        }
        Ok(site.iter().zip(&self.strides).map(|(c, s)| c * s).sum())
    }

    pub fn coords_of(&self, index: usize) -> Vec<usize> {
        self.strides
            .iter()
            .map(|s| (index / s) % self.side)
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct SandpileState {
    lattice: Lattice,
    heights: Vec<u32>,
    grains_added: u64,
    grains_dissipated: u64,
    unstable: Vec<usize>,
}

impl SandpileState {
    /// Empty lattice.
    pub fn new(dimension: usize, side: usize) -> Result<Self> {
        let lattice = Lattice::new(dimension, side)?;
        let heights = vec![0; lattice.sites()];
        Ok(SandpileState {
            lattice,
            heights,
            grains_added: 0,
            grains_dissipated: 0,
            unstable: Vec::new(),
        })
    }

    /// Lattice with the given heights (possibly unstable). The initial grains
    /// count as added.
    pub fn from_heights(dimension: usize, side: usize, heights: Vec<u32>) -> Result<Self> {
        let mut state = Self::new(dimension, side)?;
        if heights.len() != state.lattice.sites() {
            return Err(Error::InvalidArgument(format!(
                "expected {} heights, got {}",
                state.lattice.sites(),
                heights.len()
            )));
        }
        state.grains_added = heights.iter().map(|&h| h as u64).sum();
        state.heights = heights;
        Ok(state)
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn heights(&self) -> &[u32] {
        &self.heights
    }

    pub fn threshold(&self) -> u32 {
        self.lattice.threshold()
    }

    pub fn grains_added(&self) -> u64 {
        self.grains_added
    }

    pub fn grains_dissipated(&self) -> u64 {
        self.grains_dissipated
    }

    pub fn grains_on_lattice(&self) -> u64 {
        self.heights.iter().map(|&h| h as u64).sum()
    }

    /// `grains_added == grains on lattice + grains_dissipated`.
    pub fn conserves_grains(&self) -> bool {
        self.grains_added == self.grains_on_lattice() + self.grains_dissipated
    }

    pub fn is_stable(&self) -> bool {
        let t = self.threshold();
        self.heights.iter().all(|&h| h < t)
    }

    /// Adds one grain at `site` and relaxes. Returns the number of topplings.
    pub fn drive(&mut self, site: &[usize]) -> Result<u64> {
        let index = self.lattice.index_of(site)?;
        Ok(self.drive_index(index))
    }

    pub fn drive_index(&mut self, index: usize) -> u64 {
        self.heights[index] += 1;
        self.grains_added += 1;
        if self.heights[index] < self.threshold() {
            return 0;
        }
        self.unstable.push(index);
        self.relax()
    }

    /// Topples every unstable site until none remain. Returns the number of
    /// topplings.
    pub fn stabilize(&mut self) -> u64 {
        let t = self.threshold();
        self.unstable.extend(
            self.heights
                .iter()
                .enumerate()
                .filter(|(_, &h)| h >= t)
                .map(|(i, _)| i),
        );
        self.relax()
    }

    // A site sits on `unstable` exactly while its height is >= threshold.
    fn relax(&mut self) -> u64 {
        let t = self.threshold();
        let last = self.lattice.side - 1;
        let mut topplings = 0u64;
        while let Some(i) = self.unstable.pop() {
            let h = self.heights[i];
            let n = h / t;
            if n == 0 {
                continue;
            }
            self.heights[i] = h % t;
            topplings += n as u64;
            for &stride in &self.lattice.strides {
                let coord = (i / stride) % self.lattice.side;
                for (on_lattice, j) in [
                    (coord > 0, i.wrapping_sub(stride)),
                    (coord < last, i + stride),
                ] {
                    if on_lattice {
                        let before = self.heights[j];
                        self.heights[j] = before + n;
                        if before < t && before + n >= t {
                            self.unstable.push(j);
                        }
                    } else {
                        self.grains_dissipated += n as u64;
                    }
                }
            }
        }
        topplings
    }
}

/// Simulation parameters. The threshold is always `2 * dimension`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SandpileConfig {
    pub dimension: usize,
    pub side_length: usize,
    pub burn_in_drives: u64,
    pub recorded_drives: u64,
    pub rng_seed: u64,
}

impl SandpileConfig {
    /// Default burn-in of 50 drives per site.
    pub fn new(dimension: usize, side_length: usize, recorded_drives: u64, rng_seed: u64) -> Self {
        let sites = (side_length as u64).saturating_pow(dimension as u32);
        SandpileConfig {
            dimension,
            side_length,
            burn_in_drives: DEFAULT_BURN_IN_PER_SITE.saturating_mul(sites),
            recorded_drives,
            rng_seed,
        }
    }

    pub fn threshold(&self) -> u32 {
        2 * self.dimension as u32
    }

    pub fn validate(&self) -> Result<()> {
        Lattice::new(self.dimension, self.side_length)?;
        if self.side_length < 2 {
            return Err(Error::InvalidArgument(format!(
                "side_length must be at least 2, got {}",
                self.side_length
            )));
        }
        if self.recorded_drives == 0 {
            return Err(Error::InvalidArgument(
                "recorded_drives must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Topplings per recorded drive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AvalancheLog {
    pub sizes: Vec<u64>,
}

impl AvalancheLog {
    /// One integer per line.
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        for s in &self.sizes {
            writeln!(out, "{s}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationMetadata {
    pub config: SandpileConfig,
    pub threshold: u32,
    /// What an avalanche size counts.
    pub avalanche_unit: &'static str,
    pub driving: &'static str,
    pub grains_added: u64,
    pub grains_on_lattice: u64,
    pub grains_dissipated: u64,
    pub conservation_ok: bool,
    pub final_state_stable: bool,
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub log: AvalancheLog,
    pub state: SandpileState,
    pub metadata: SimulationMetadata,
}

/// Starts from an empty lattice, drops `burn_in_drives` grains at uniformly
/// random sites, then records the avalanche size of `recorded_drives` more.
pub fn run_simulation(config: &SandpileConfig) -> Result<Simulation> {
    config.validate()?;
    let mut state = SandpileState::new(config.dimension, config.side_length)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let sites = state.lattice.sites();

    for _ in 0..config.burn_in_drives {
        state.drive_index(rng.gen_range(0..sites));
    }
    let sizes = (0..config.recorded_drives)
        .map(|_| state.drive_index(rng.gen_range(0..sites)))
        .collect();

    let metadata = SimulationMetadata {
        config: config.clone(),
        threshold: state.threshold(),
        avalanche_unit: "topplings",
        driving: "uniform random site",
        grains_added: state.grains_added,
        grains_on_lattice: state.grains_on_lattice(),
        grains_dissipated: state.grains_dissipated,
        conservation_ok: state.conserves_grains(),
        final_state_stable: state.is_stable(),
    };
    Ok(Simulation {
        log: AvalancheLog { sizes },
        state,
        metadata,
    })
}

/// Independent simulations in parallel; results keep the input order.
pub fn run_sweep(configs: &[SandpileConfig]) -> Vec<Result<Simulation>> {
    configs.par_iter().map(run_simulation).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct AvalancheDistribution {
    /// Distribution over sizes >= 1.
    pub distribution: EmpiricalDistribution,
    /// Share of drives that caused no toppling.
    pub zero_fraction: f64,
}

pub fn avalanche_distribution(log: &AvalancheLog) -> Result<AvalancheDistribution> {
    if log.sizes.is_empty() {
        return Err(Error::EmptyInput("avalanche log is empty"));
    }
    let zeros = log.sizes.iter().filter(|&&s| s == 0).count();
    if zeros == log.sizes.len() {
        return Err(Error::EmptyInput(
            "every recorded drive had avalanche size zero",
        ));
    }
    let distribution =
        EmpiricalDistribution::from_counts(log.sizes.iter().copied().filter(|&s| s > 0))?;
    Ok(AvalancheDistribution {
        distribution,
        zero_fraction: zeros as f64 / log.sizes.len() as f64,
    })
}
