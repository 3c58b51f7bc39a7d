//! Empirical failure-count distributions and their log-binned view.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::records::FailureRecord;

/// Bins per decade used when the caller does not choose.
pub const DEFAULT_BINS_PER_DECADE: u32 = 10;

const EDGE_EPS: f64 = 1e-9;

/// Normalized frequency table over failure counts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalDistribution {
    support: Vec<u64>,
    mass: Vec<f64>,
    total_weight: f64,
}

impl EmpiricalDistribution {
    pub fn from_records(records: &[FailureRecord]) -> Result<Self> {
        Self::from_weighted_counts(records.iter().map(|r| (r.failure_count, r.weight)))
    }

    /// Builds the distribution from `(count, weight)` pairs. Weights must be
    /// positive and finite.
    pub fn from_weighted_counts<I>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (u64, f64)>,
    {
        let mut table: BTreeMap<u64, f64> = BTreeMap::new();
        for (count, weight) in pairs {
            if !(weight.is_finite() && weight > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "weight {weight} for count {count} is not positive"
                )));
            }
            *table.entry(count).or_default() += weight;
        }
        if table.is_empty() {
            return Err(Error::EmptyInput("no records to build a distribution from"));
        }
        let total_weight: f64 = table.values().sum();
        Ok(Self::from_table(table, total_weight))
    }

    /// Unweighted counts.
    pub fn from_counts<I: IntoIterator<Item = u64>>(counts: I) -> Result<Self> {
        Self::from_weighted_counts(counts.into_iter().map(|c| (c, 1.0)))
    }

    /// Builds a distribution from unnormalized `(x, mass)` pairs, e.g. a
    /// closed-form PMF. Non-positive masses are dropped; the rest is
    /// renormalized and `total_weight` is the pre-normalization sum.
    pub fn from_pmf<I>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (u64, f64)>,
    {
        let mut table: BTreeMap<u64, f64> = BTreeMap::new();
        for (x, m) in pairs {
            if !m.is_finite() || m < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "mass {m} at {x} is not a probability weight"
                )));
            }
            if m > 0.0 {
                *table.entry(x).or_default() += m;
            }
        }
        if table.is_empty() {
            return Err(Error::EmptyInput("distribution has no positive mass"));
        }
        let total: f64 = table.values().sum();
        Ok(Self::from_table(table, total))
    }

    fn from_table(table: BTreeMap<u64, f64>, total_weight: f64) -> Self {
        let sum: f64 = table.values().sum();
        let (support, mass) = table.into_iter().map(|(x, w)| (x, w / sum)).unzip();
        EmpiricalDistribution {
            support,
            mass,
            total_weight,
        }
    }

    pub fn support(&self) -> &[u64] {
        &self.support
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.support.iter().copied().zip(self.mass.iter().copied())
    }

    pub fn mass_at(&self, x: u64) -> f64 {
        match self.support.binary_search(&x) {
            Ok(i) => self.mass[i],
            Err(_) => 0.0,
        }
    }

    /// Probability of zero failures. Zero counts are never log-binned or fitted.
    pub fn zero_mass(&self) -> f64 {
        self.mass_at(0)
    }

    pub fn max_count(&self) -> u64 {
        *self.support.last().expect("distribution is never empty")
    }

    /// Greatest common divisor of the non-zero support. Counts live on the
    /// lattice `step * {1, 2, ...}`; `None` when all mass sits at zero.
    pub fn lattice_step(&self) -> Option<u64> {
        let g = self
            .support
            .iter()
            .filter(|&&x| x > 0)
            .fold(0, |g, &x| gcd(g, x));
        (g > 0).then_some(g)
    }

    /// P(X >= x).
    pub fn ccdf(&self, x: u64) -> f64 {
        if x == 0 {
            return 1.0;
        }
        if x > self.max_count() {
            return 0.0;
        }
        let below = self.support.partition_point(|&s| s < x);
        let cum: f64 = self.mass[..below].iter().sum();
        (1.0 - cum).clamp(0.0, 1.0)
    }

    /// Distribution of `k * X`.
    pub fn scale_support(&self, k: u64) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument(
                "scale factor must be at least 1".into(),
            ));
        }
        let support = self
            .support
            .iter()
            .map(|&x| {
                x.checked_mul(k)
                    .ok_or_else(|| Error::InvalidArgument(format!("count {x} * {k} overflows")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(EmpiricalDistribution {
            support,
            mass: self.mass.clone(),
            total_weight: self.total_weight,
        })
    }

    pub fn log_bin(&self, bins_per_decade: u32) -> Result<LogBinnedDistribution> {
        log_bin(self, bins_per_decade)
    }
}

pub fn empirical_distribution(records: &[FailureRecord]) -> Result<EmpiricalDistribution> {
    EmpiricalDistribution::from_records(records)
}

/// Pointwise mean of the masses over the union of supports, renormalized.
/// Used to combine runs that differ only in seed.
pub fn average_distributions(dists: &[EmpiricalDistribution]) -> Result<EmpiricalDistribution> {
    if dists.is_empty() {
        return Err(Error::EmptyInput("no distributions to average"));
    }
    let n = dists.len() as f64;
    let mut table: BTreeMap<u64, f64> = BTreeMap::new();
    for d in dists {
        for (x, m) in d.iter() {
            *table.entry(x).or_default() += m / n;
        }
    }
    let total_weight = dists.iter().map(|d| d.total_weight).sum();
    Ok(EmpiricalDistribution::from_table(table, total_weight))
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// One multiplicatively spaced bin `[lower, upper)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogBin {
    pub lower: f64,
    pub upper: f64,
    /// Smallest and largest lattice point inside the bin, if any.
    pub span: Option<(u64, u64)>,
    /// Number of lattice points inside the bin.
    pub width: u64,
    pub mass: f64,
    /// `mass / width`, zero for bins without lattice points.
    pub density: f64,
}

impl LogBin {
    /// Geometric mean of the first and last lattice point in the bin.
    pub fn center(&self) -> Option<f64> {
        self.span.map(|(a, b)| ((a as f64) * (b as f64)).sqrt())
    }
}

/// Log-binned view of a distribution. Zero counts are reported separately in
/// `zero_mass` and never binned.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogBinnedDistribution {
    pub bins: Vec<LogBin>,
    pub bins_per_decade: u32,
    /// Lower edge of the first bin; all edges are `anchor * 10^(i / bins_per_decade)`.
    pub anchor: f64,
    /// Spacing of the lattice the counts live on (1 for ordinary data).
    pub lattice_step: u64,
    pub zero_mass: f64,
}

impl LogBinnedDistribution {
    /// Total mass assigned to bins.
    pub fn covered_mass(&self) -> f64 {
        self.bins.iter().map(|b| b.mass).sum()
    }

    pub fn nonempty(&self) -> impl Iterator<Item = &LogBin> {
        self.bins.iter().filter(|b| b.mass > 0.0)
    }
}

/// Log bins anchored at 1 covering every count >= 1.
pub fn log_bin(
    dist: &EmpiricalDistribution,
    bins_per_decade: u32,
) -> Result<LogBinnedDistribution> {
    let limit = (dist.max_count() as f64 + 1.0).max(1.0);
    bin_edges(dist, bins_per_decade, 1.0, limit, false)
}

/// Log bins anchored at `x_min` whose upper edges do not exceed `x_max`.
/// Masses outside the window are ignored.
pub fn log_bin_window(
    dist: &EmpiricalDistribution,
    bins_per_decade: u32,
    x_min: f64,
    x_max: f64,
) -> Result<LogBinnedDistribution> {
    if !(x_min >= 1.0 && x_max > x_min) {
        return Err(Error::InvalidArgument(format!(
            "bad bin window [{x_min}, {x_max}]"
        )));
    }
    bin_edges(dist, bins_per_decade, x_min, x_max, true)
}

/// `closed_limit`: stop once the next edge would pass `limit`. Otherwise
/// keep adding bins until the last one reaches past `limit`.
fn bin_edges(
    dist: &EmpiricalDistribution,
    bins_per_decade: u32,
    anchor: f64,
    limit: f64,
    closed_limit: bool,
) -> Result<LogBinnedDistribution> {
    if bins_per_decade == 0 {
        return Err(Error::InvalidArgument(
            "bins_per_decade must be at least 1".into(),
        ));
    }
    let step = dist.lattice_step().unwrap_or(1);
    let mut out = LogBinnedDistribution {
        bins: Vec::new(),
        bins_per_decade,
        anchor,
        lattice_step: step,
        zero_mass: dist.zero_mass(),
    };
    if dist.max_count() == 0 || (!closed_limit && (dist.max_count() as f64) < anchor) {
        return Ok(out);
    }

    let edge = |i: u32| anchor * 10f64.powf(i as f64 / bins_per_decade as f64);
    let support = dist.support();
    let mass = dist.mass();
    let mut i = 0;
    loop {
        let lower = edge(i);
        let upper = edge(i + 1);
        if closed_limit && upper > limit * (1.0 + EDGE_EPS) {
            break;
        }
        // Lattice points step*j with lower <= step*j < upper.
        let j_lo = (lower / step as f64 - EDGE_EPS).ceil() as u64;
        let j_hi = (upper / step as f64 - EDGE_EPS).ceil() as u64;
        let width = j_hi.saturating_sub(j_lo);
        let (lo_x, hi_x) = (j_lo * step, j_hi * step);
        let a = support.partition_point(|&s| s < lo_x);
        let b = support.partition_point(|&s| s < hi_x);
        let bin_mass: f64 = mass[a..b].iter().sum();
        out.bins.push(LogBin {
            lower,
            upper,
            span: (width > 0).then(|| (lo_x, hi_x - step)),
            width,
            mass: bin_mass,
            density: if width > 0 {
                bin_mass / width as f64
            } else {
                0.0
            },
        });
        i += 1;
        if !closed_limit && upper >= limit {
            break;
        }
    }
    Ok(out)
}

/// PMF export: `x,mass`.
pub fn write_pmf_csv<W: Write>(dist: &EmpiricalDistribution, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "mass"])?;
    for (x, m) in dist.iter() {
        w.write_record([x.to_string(), m.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Binned export: `bin_lower,bin_upper,density`.
pub fn write_binned_csv<W: Write>(binned: &LogBinnedDistribution, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["bin_lower", "bin_upper", "density"])?;
    for b in &binned.bins {
        w.write_record([
            b.lower.to_string(),
            b.upper.to_string(),
            b.density.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
