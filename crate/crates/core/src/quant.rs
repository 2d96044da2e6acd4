//! Uniform quantization, empirical entropy, and Rényi information-dimension
//! estimation.
//!
//! The estimator regresses the (bias-corrected) entropy of the quantized
//! samples on `log2 n` over a ladder of resolutions `n`. For a law with
//! information dimension `d`, `H(X_n) = d log n + h + o(1)`, so the slope
//! estimates `d` and the intercept estimates the `d`-dimensional entropy `h`.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::SampleBatch;
use crate::error::{Error, Result};

/// Resolutions used when the caller does not pick a ladder.
pub const DEFAULT_LADDER: [u32; 4] = [8, 16, 32, 64];

/// Samples used when the caller does not pick a count.
pub const DEFAULT_SAMPLES: usize = 200_000;

/// Occupied cells above `total / UNDERSAMPLING_RATIO` at the finest
/// resolution mark the estimate as undersampled.
pub const UNDERSAMPLING_RATIO: u64 = 10;

const SHARD: usize = 16_384;

/// Grid with `resolution` cells per unit length along every coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuantizerGrid {
    resolution: u32,
}

impl QuantizerGrid {
    pub fn new(resolution: u32) -> Result<Self> {
        if resolution == 0 {
            return Err(Error::InvalidResolutions(
                "resolution must be at least 1".into(),
            ));
        }
        Ok(QuantizerGrid { resolution })
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    /// `floor(n x)`, the cell index of `x`.
    pub fn cell(&self, x: f64) -> i64 {
        (x * f64::from(self.resolution)).floor() as i64
    }

    /// Lower cell edge `index / n`, i.e. the quantized value.
    pub fn value(&self, index: i64) -> f64 {
        index as f64 / f64::from(self.resolution)
    }
}

/// Cell index vector of every sample.
pub fn quantize(batch: &SampleBatch, grid: QuantizerGrid) -> Vec<Vec<i64>> {
    batch
        .samples()
        .map(|s| s.iter().map(|&x| grid.cell(x)).collect())
        .collect()
}

fn pack(indices: impl Iterator<Item = i64>, key: &mut Vec<u8>) {
    key.clear();
    for i in indices {
        key.extend_from_slice(&i.to_le_bytes());
    }
}

/// Occurrence counts of quantization cells. Empty cells are never stored.
#[derive(Debug, Clone, Default)]
pub struct EmpiricalPmf {
    dims: usize,
    counts: HashMap<Vec<u8>, u64>,
    total: u64,
}

impl EmpiricalPmf {
    /// Count the cells hit by `batch` on `grid`. Shards of the batch are
    /// counted in parallel and merged.
    pub fn from_batch(batch: &SampleBatch, grid: QuantizerGrid) -> Self {
        let dims = batch.dims();
        let counts = batch
            .values()
            .as_slice()
            .par_chunks(SHARD * dims)
            .map(|shard| {
                let mut local: HashMap<Vec<u8>, u64> = HashMap::new();
                let mut key = Vec::with_capacity(8 * dims);
                for s in shard.chunks(dims) {
                    pack(s.iter().map(|&x| grid.cell(x)), &mut key);
                    match local.get_mut(&key) {
                        Some(c) => *c += 1,
                        None => {
                            local.insert(key.clone(), 1);
                        }
                    }
                }
                local
            })
            .reduce(HashMap::new, |a, b| {
                let (mut big, small) = if a.len() >= b.len() { (a, b) } else { (b, a) };
                for (k, c) in small {
                    *big.entry(k).or_insert(0) += c;
                }
                big
            });
        EmpiricalPmf {
            dims,
            counts,
            total: batch.count() as u64,
        }
    }

    /// Build from explicit `(cell, count)` pairs; zero counts are dropped and
    /// repeated cells accumulate.
    pub fn from_counts<I>(dims: usize, cells: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<i64>, u64)>,
    {
        let mut pmf = EmpiricalPmf {
            dims,
            ..Default::default()
        };
        let mut key = Vec::new();
        for (cell, count) in cells {
            if cell.len() != dims {
                return Err(Error::DimensionMismatch {
                    expected: dims,
                    found: cell.len(),
                });
            }
            if count == 0 {
                continue;
            }
            pack(cell.into_iter(), &mut key);
            *pmf.counts.entry(key.clone()).or_insert(0) += count;
            pmf.total += count;
        }
        Ok(pmf)
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Number of occupied cells.
    pub fn occupied(&self) -> usize {
        self.counts.len()
    }

    pub fn count_of(&self, cell: &[i64]) -> u64 {
        let mut key = Vec::new();
        pack(cell.iter().copied(), &mut key);
        self.counts.get(&key).copied().unwrap_or(0)
    }

    /// Multiplicity of each count value, in ascending count order. Entropy
    /// is a function of this profile alone, and iterating it is
    /// deterministic regardless of hash order.
    pub fn count_profile(&self) -> BTreeMap<u64, u64> {
        let mut profile = BTreeMap::new();
        for &c in self.counts.values() {
            *profile.entry(c).or_insert(0) += 1;
        }
        profile
    }
}

/// Bias correction applied to the plug-in entropy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntropyCorrection {
    Plugin,
    #[default]
    MillerMadow,
}

/// Entropy of the empirical distribution in bits.
pub fn empirical_entropy(pmf: &EmpiricalPmf, correction: EntropyCorrection) -> f64 {
    let total = pmf.total();
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    let plugin: f64 = pmf
        .count_profile()
        .iter()
        .map(|(&c, &mult)| {
            let p = c as f64 / t;
            -(mult as f64) * p * p.log2()
        })
        .sum();
    match correction {
        EntropyCorrection::Plugin => plugin,
        EntropyCorrection::MillerMadow => {
            let k = pmf.occupied() as f64;
            plugin + (k - 1.0) / (2.0 * t * std::f64::consts::LN_2)
        }
    }
}

/// Estimated information dimension with the regression behind it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionEstimate {
    /// Regression slope clamped at zero.
    pub value: f64,
    pub resolutions: Vec<u32>,
    pub entropies_bits: Vec<f64>,
    pub occupied_cells: Vec<usize>,
    pub slope_stderr: f64,
    /// Intercept in bits; estimates the d-dimensional entropy.
    pub intercept_bits: f64,
    pub sample_count: usize,
    pub dims: usize,
    pub correction: EntropyCorrection,
    /// Set when the finest resolution occupies more than total/10 cells;
    /// the entropy is then biased low and the slope is unreliable.
    pub undersampled: bool,
}

/// Least-squares slope, intercept and slope standard error of `y` on `x`.
/// The standard error is zero when there are no residual degrees of freedom.
pub(crate) fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let k = x.len() as f64;
    let mx = x.iter().sum::<f64>() / k;
    let my = y.iter().sum::<f64>() / k;
    let sxx: f64 = x.iter().map(|xi| (xi - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(xi, yi)| (xi - mx) * (yi - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let stderr = if x.len() > 2 {
        let rss: f64 = x
            .iter()
            .zip(y)
            .map(|(xi, yi)| (yi - intercept - slope * xi).powi(2))
            .sum();
        (rss / (k - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    (slope, intercept, stderr)
}

/// Estimate the information dimension of the law behind `batch`.
///
/// Needs at least two distinct resolutions, each at least 2. Undersampling
/// at the finest resolution is reported through `undersampled`, not as an
/// error.
pub fn estimate_dimension(
    batch: &SampleBatch,
    resolutions: &[u32],
    correction: EntropyCorrection,
) -> Result<DimensionEstimate> {
    let mut ladder = resolutions.to_vec();
    ladder.sort_unstable();
    ladder.dedup();
    if ladder.len() < 2 {
        return Err(Error::InvalidResolutions(
            "need at least two distinct resolutions".into(),
        ));
    }
    if ladder[0] < 2 {
        return Err(Error::InvalidResolutions(
            "every resolution must be at least 2".into(),
        ));
    }

    let mut entropies = Vec::with_capacity(ladder.len());
    let mut occupied = Vec::with_capacity(ladder.len());
    for &n in &ladder {
        let pmf = EmpiricalPmf::from_batch(batch, QuantizerGrid::new(n)?);
        entropies.push(empirical_entropy(&pmf, correction));
        occupied.push(pmf.occupied());
    }
    let logs: Vec<f64> = ladder.iter().map(|&n| f64::from(n).log2()).collect();
    let (slope, intercept, stderr) = linear_fit(&logs, &entropies);
    let finest = *occupied.last().expect("ladder is non-empty") as u64;

    Ok(DimensionEstimate {
        value: slope.max(0.0),
        resolutions: ladder,
        entropies_bits: entropies,
        occupied_cells: occupied,
        slope_stderr: stderr,
        intercept_bits: intercept,
        sample_count: batch.count(),
        dims: batch.dims(),
        correction,
        undersampled: finest * UNDERSAMPLING_RATIO > batch.count() as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn quantize_examples() {
        let g4 = QuantizerGrid::new(4).unwrap();
        assert_eq!(g4.cell(0.73), 2);
        assert_eq!(g4.value(g4.cell(0.73)), 0.5);
        let g10 = QuantizerGrid::new(10).unwrap();
        assert_eq!(g10.cell(-0.1), -1);
        assert_eq!(g10.value(-1), -0.1);
        let b = SampleBatch::from_samples(&[vec![0.73, -0.1]]).unwrap();
        assert_eq!(quantize(&b, g4), vec![vec![2, -1]]);
        assert!(QuantizerGrid::new(0).is_err());
    }

    #[test]
    fn entropy_examples() {
        let uniform4 = EmpiricalPmf::from_counts(1, (0..4).map(|i| (vec![i], 25))).unwrap();
        assert_eq!(empirical_entropy(&uniform4, EntropyCorrection::Plugin), 2.0);

        let single = EmpiricalPmf::from_counts(1, [(vec![3], 17)]).unwrap();
        assert_eq!(empirical_entropy(&single, EntropyCorrection::Plugin), 0.0);
        assert_eq!(
            empirical_entropy(&single, EntropyCorrection::MillerMadow),
            0.0
        );

        let half = EmpiricalPmf::from_counts(1, [(vec![0], 50), (vec![1], 50)]).unwrap();
        let mm = empirical_entropy(&half, EntropyCorrection::MillerMadow);
        assert_abs_diff_eq!(
            mm,
            1.0 + 1.0 / (200.0 * std::f64::consts::LN_2),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(mm, 1.007_21, epsilon = 1e-5);
    }

    #[test]
    fn pmf_drops_empty_cells_and_merges_duplicates() {
        let pmf = EmpiricalPmf::from_counts(2, [(vec![0, 1], 3), (vec![5, 5], 0), (vec![0, 1], 2)])
            .unwrap();
        assert_eq!(pmf.occupied(), 1);
        assert_eq!(pmf.total(), 5);
        assert_eq!(pmf.count_of(&[0, 1]), 5);
        assert_eq!(pmf.count_of(&[5, 5]), 0);
    }

    #[test]
    fn batch_counts_sum_to_total() {
        let samples: Vec<Vec<f64>> = (0..50_000)
            .map(|i| vec![(i % 97) as f64 * 0.013, (i % 13) as f64])
            .collect();
        let b = SampleBatch::from_samples(&samples).unwrap();
        let pmf = EmpiricalPmf::from_batch(&b, QuantizerGrid::new(8).unwrap());
        let sum: u64 = pmf.count_profile().iter().map(|(c, m)| c * m).sum();
        assert_eq!(sum, pmf.total());
        assert_eq!(pmf.total(), 50_000);
    }

    #[test]
    fn ladder_validation() {
        let b = SampleBatch::from_samples(&[vec![0.1], vec![0.2]]).unwrap();
        let c = EntropyCorrection::MillerMadow;
        assert!(estimate_dimension(&b, &[8], c).is_err());
        assert!(estimate_dimension(&b, &[8, 8], c).is_err());
        assert!(estimate_dimension(&b, &[1, 8], c).is_err());
        assert!(estimate_dimension(&b, &[8, 16], c).is_ok());
    }

    #[test]
    fn regression_recovers_exact_line() {
        let x = [3.0, 4.0, 5.0, 6.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.5).collect();
        let (s, i, e) = linear_fit(&x, &y);
        assert_abs_diff_eq!(s, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(i, 1.5, epsilon = 1e-12);
        assert!(e < 1e-12);
    }
}
