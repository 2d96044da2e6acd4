//! Input laws and deterministic samplers.
//!
//! Every draw comes from a ChaCha8 stream: the batch is cut into fixed-size
//! chunks and chunk `i` uses stream `i` of the generator seeded with the
//! caller's seed. Chunks are filled in parallel, but the output depends only
//! on `(spec, count, seed)`, never on the thread count.

use std::f64::consts::SQRT_2;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Samples per generator stream.
pub const CHUNK_SIZE: usize = 4096;

/// Eigenvalue floor for accepting a Gaussian covariance.
pub const SPD_TOLERANCE: f64 = 1e-10;

/// Last dyadic piece the sampler resolves; the residual tail mass is placed
/// on this piece.
pub const DYADIC_CAP: u32 = 60;

const PMF_TOLERANCE: f64 = 1e-12;

/// Declarative description of an input law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistributionSpec {
    /// Multivariate normal with a symmetric positive definite covariance.
    GaussianVec {
        mean: Vec<f64>,
        covariance: Vec<Vec<f64>>,
    },
    /// Uniform on the box `[lo, hi]`.
    UniformBox { lo: Vec<f64>, hi: Vec<f64> },
    /// Scalar law on (0,1] placing mass `p_n` uniformly on `(2^-n, 2^-n+1]`.
    DyadicTail,
    /// Finitely many atoms.
    DiscreteFinite {
        support: Vec<Vec<f64>>,
        pmf: Vec<f64>,
    },
    /// Finite mixture of laws of equal dimension.
    Mixture {
        weights: Vec<f64>,
        components: Vec<DistributionSpec>,
    },
}

impl DistributionSpec {
    pub fn standard_normal(dims: usize) -> Self {
        let covariance = (0..dims)
            .map(|i| (0..dims).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        DistributionSpec::GaussianVec {
            mean: vec![0.0; dims],
            covariance,
        }
    }

    pub fn gaussian(mean: Vec<f64>, covariance: &DMatrix<f64>) -> Self {
        let covariance = (0..covariance.nrows())
            .map(|i| covariance.row(i).iter().copied().collect())
            .collect();
        DistributionSpec::GaussianVec { mean, covariance }
    }

    pub fn unit_box(dims: usize) -> Self {
        DistributionSpec::UniformBox {
            lo: vec![0.0; dims],
            hi: vec![1.0; dims],
        }
    }

    /// Ambient dimension N of the variable.
    pub fn dims(&self) -> usize {
        match self {
            DistributionSpec::GaussianVec { mean, .. } => mean.len(),
            DistributionSpec::UniformBox { lo, .. } => lo.len(),
            DistributionSpec::DyadicTail => 1,
            DistributionSpec::DiscreteFinite { support, .. } => support.first().map_or(0, Vec::len),
            DistributionSpec::Mixture { components, .. } => {
                components.first().map_or(0, Self::dims)
            }
        }
    }

    /// True when the law has a density with respect to Lebesgue measure.
    pub fn is_absolutely_continuous(&self) -> bool {
        match self {
            DistributionSpec::DiscreteFinite { .. } => false,
            DistributionSpec::Mixture {
                weights,
                components,
            } => weights
                .iter()
                .zip(components)
                .all(|(w, c)| *w == 0.0 || c.is_absolutely_continuous()),
            _ => true,
        }
    }

    /// Check every invariant of the variant.
    pub fn validate(&self) -> Result<()> {
        match self {
            DistributionSpec::GaussianVec { mean, covariance } => {
                let n = mean.len();
                if n == 0 {
                    return Err(Error::InvalidSpec(
                        "gaussian_vec needs at least one dimension".into(),
                    ));
                }
                let cov = covariance_matrix(n, covariance)?;
                linalg::cholesky(&cov, SPD_TOLERANCE)?;
                if mean.iter().any(|m| !m.is_finite()) {
                    return Err(Error::InvalidSpec("mean has non-finite entries".into()));
                }
                Ok(())
            }
            DistributionSpec::UniformBox { lo, hi } => {
                if lo.is_empty() || lo.len() != hi.len() {
                    return Err(Error::InvalidSpec(
                        "uniform_box needs lo and hi of equal, positive length".into(),
                    ));
                }
                for (i, (a, b)) in lo.iter().zip(hi).enumerate() {
                    if !(a.is_finite() && b.is_finite() && a < b) {
                        return Err(Error::InvalidSpec(format!(
                            "uniform_box needs lo[{i}] < hi[{i}], got {a} and {b}"
                        )));
                    }
                }
                Ok(())
            }
            DistributionSpec::DyadicTail => Ok(()),
            DistributionSpec::DiscreteFinite { support, pmf } => {
                if support.is_empty() || support.len() != pmf.len() {
                    return Err(Error::InvalidSpec(
                        "discrete_finite needs one probability per support point".into(),
                    ));
                }
                let dims = support[0].len();
                if dims == 0
                    || support
                        .iter()
                        .any(|p| p.len() != dims || p.iter().any(|x| !x.is_finite()))
                {
                    return Err(Error::InvalidSpec(
                        "support points must be finite and of equal dimension".into(),
                    ));
                }
                validate_weights(pmf, "pmf")
            }
            DistributionSpec::Mixture {
                weights,
                components,
            } => {
                if components.is_empty() || weights.len() != components.len() {
                    return Err(Error::InvalidSpec(
                        "mixture needs one weight per component".into(),
                    ));
                }
                validate_weights(weights, "mixture weights")?;
                let dims = components[0].dims();
                for c in components {
                    c.validate()?;
                    if c.dims() != dims {
                        return Err(Error::InvalidSpec(
                            "mixture components differ in dimension".into(),
                        ));
                    }
                }
                Ok(())
            }
        }
    }
}

fn validate_weights(w: &[f64], what: &str) -> Result<()> {
    if w.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(Error::InvalidSpec(format!(
            "{what} entries must be finite and >= 0"
        )));
    }
    let total: f64 = w.iter().sum();
    if (total - 1.0).abs() > PMF_TOLERANCE {
        return Err(Error::InvalidSpec(format!("{what} sum to {total}, not 1")));
    }
    Ok(())
}

fn covariance_matrix(n: usize, rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidSpec(format!("covariance must be {n}x{n}")));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

// ---------------------------------------------------------------------------
// Dyadic tail law
// ---------------------------------------------------------------------------

/// `p_n = 1/log2(n+1) - 1/log2(n+2)`, evaluated without cancellation.
pub fn dyadic_piece_probability(n: u64) -> f64 {
    assert!(n >= 1, "dyadic pieces start at n = 1");
    let a = ((n + 1) as f64).log2();
    let b = ((n + 2) as f64).log2();
    (1.0 / (n as f64 + 1.0)).ln_1p() / std::f64::consts::LN_2 / (a * b)
}

/// `P(piece > n) = 1/log2(n+2)`.
pub fn dyadic_tail_mass(n: u64) -> f64 {
    1.0 / ((n + 2) as f64).log2()
}

/// `P(piece <= n)` for the uncapped law.
fn dyadic_piece_cdf(n: u64) -> f64 {
    1.0 - dyadic_tail_mass(n)
}

/// Mass the capped sampler assigns to piece `n`.
fn capped_piece_probability(n: u32) -> f64 {
    if n < DYADIC_CAP {
        dyadic_piece_probability(n as u64)
    } else {
        dyadic_tail_mass(DYADIC_CAP as u64 - 1)
    }
}

/// Index n >= 1 with `x` in `(2^-n, 2^-n+1]`, for `x` in (0, 1].
pub fn dyadic_piece_index(x: f64) -> u32 {
    debug_assert!(x > 0.0 && x <= 1.0);
    let mut n = ((-x.log2()).floor().max(0.0) as i32 + 1).max(1);
    while n > 1 && x > pow2(-(n - 1)) {
        n -= 1;
    }
    while x <= pow2(-n) {
        n += 1;
    }
    n as u32
}

fn pow2(e: i32) -> f64 {
    2.0_f64.powi(e)
}

/// CDF of the capped dyadic law at `x`.
fn dyadic_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let n = dyadic_piece_index(x);
    let within = |n: u32| (x * pow2(n as i32) - 1.0).clamp(0.0, 1.0);
    if n >= DYADIC_CAP {
        // only the capped piece (2^-60, 2^-59] carries mass below 2^-59
        if n > DYADIC_CAP {
            return 0.0;
        }
        return capped_piece_probability(DYADIC_CAP) * within(DYADIC_CAP);
    }
    dyadic_tail_mass(n as u64) + dyadic_piece_probability(n as u64) * within(n)
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

/// Seed provenance of a batch.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub seed: u64,
    pub chunk_size: usize,
    /// Dyadic draws whose true piece lay beyond the cap.
    pub capped_draws: u64,
}

/// `count` samples of an N-dimensional variable, one per column.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    values: DMatrix<f64>,
    seed_record: Option<SeedRecord>,
}

impl SampleBatch {
    /// Wrap an N×S matrix; rejects empty shapes and non-finite entries.
    pub fn from_matrix(values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(Error::ZeroCount);
        }
        let n = values.nrows();
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                sample: pos / n,
                coord: pos % n,
            });
        }
        Ok(SampleBatch {
            values,
            seed_record: None,
        })
    }

    /// Build from a flat column-major buffer (sample after sample).
    pub fn from_column_major(dims: usize, data: Vec<f64>) -> Result<Self> {
        if dims == 0 || data.is_empty() || !data.len().is_multiple_of(dims) {
            return Err(Error::InvalidArgument(format!(
                "buffer of length {} is not a whole number of {dims}-dimensional samples",
                data.len()
            )));
        }
        let count = data.len() / dims;
        Self::from_matrix(DMatrix::from_vec(dims, count, data))
    }

    pub fn from_samples(samples: &[Vec<f64>]) -> Result<Self> {
        let dims = samples.first().map_or(0, Vec::len);
        if samples.iter().any(|s| s.len() != dims) {
            return Err(Error::InvalidArgument("samples differ in dimension".into()));
        }
        Self::from_column_major(dims, samples.concat())
    }

    pub(crate) fn with_seed_record(mut self, record: Option<SeedRecord>) -> Self {
        self.seed_record = record;
        self
    }

    pub fn dims(&self) -> usize {
        self.values.nrows()
    }

    pub fn count(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_values(self) -> DMatrix<f64> {
        self.values
    }

    /// The `j`-th sample.
    pub fn sample(&self, j: usize) -> &[f64] {
        let n = self.dims();
        &self.values.as_slice()[j * n..(j + 1) * n]
    }

    pub fn samples(&self) -> std::slice::Chunks<'_, f64> {
        self.values.as_slice().chunks(self.dims())
    }

    pub fn seed_record(&self) -> Option<&SeedRecord> {
        self.seed_record.as_ref()
    }

    /// CSV with header `x1,...,xN` and one sample per row, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let header: Vec<String> = (1..=self.dims()).map(|i| format!("x{i}")).collect();
        writeln!(w, "{}", header.join(","))?;
        let mut line = String::new();
        for s in self.samples() {
            line.clear();
            for (i, v) in s.iter().enumerate() {
                if i > 0 {
                    line.push(',');
                }
                line.push_str(&format!("{v:.16e}"));
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }
}

enum Sampler {
    Gaussian {
        mean: DVector<f64>,
        factor: DMatrix<f64>,
    },
    Uniform {
        lo: Vec<f64>,
        width: Vec<f64>,
    },
    Dyadic,
    Discrete {
        support: Vec<Vec<f64>>,
        cdf: Vec<f64>,
    },
    Mixture {
        cdf: Vec<f64>,
        components: Vec<Sampler>,
    },
}

fn cumulative(weights: &[f64]) -> Vec<f64> {
    weights
        .iter()
        .scan(0.0, |acc, w| {
            *acc += w;
            Some(*acc)
        })
        .collect()
}

fn pick(cdf: &[f64], u: f64) -> usize {
    cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
}

impl Sampler {
    fn new(spec: &DistributionSpec) -> Result<Self> {
        spec.validate()?;
        Ok(match spec {
            DistributionSpec::GaussianVec { mean, covariance } => {
                let cov = covariance_matrix(mean.len(), covariance)?;
                Sampler::Gaussian {
                    mean: DVector::from_column_slice(mean),
                    factor: linalg::cholesky(&cov, SPD_TOLERANCE)?,
                }
            }
            DistributionSpec::UniformBox { lo, hi } => Sampler::Uniform {
                lo: lo.clone(),
                width: hi.iter().zip(lo).map(|(h, l)| h - l).collect(),
            },
            DistributionSpec::DyadicTail => Sampler::Dyadic,
            DistributionSpec::DiscreteFinite { support, pmf } => Sampler::Discrete {
                support: support.clone(),
                cdf: cumulative(pmf),
            },
            DistributionSpec::Mixture {
                weights,
                components,
            } => Sampler::Mixture {
                cdf: cumulative(weights),
                components: components.iter().map(Sampler::new).collect::<Result<_>>()?,
            },
        })
    }

    /// Write one draw into `out`; returns true when a dyadic draw hit the cap.
    fn draw<R: Rng>(&self, rng: &mut R, out: &mut [f64]) -> bool {
        match self {
            Sampler::Gaussian { mean, factor } => {
                let n = mean.len();
                let z: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
                for i in 0..n {
                    let mut acc = mean[i];
                    for (k, zk) in z.iter().enumerate().take(i + 1) {
                        acc += factor[(i, k)] * zk;
                    }
                    out[i] = acc;
                }
                false
            }
            Sampler::Uniform { lo, width } => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = lo[i] + width[i] * rng.random::<f64>();
                }
                false
            }
            Sampler::Dyadic => {
                let (x, capped) = draw_dyadic(rng);
                out[0] = x;
                capped
            }
            Sampler::Discrete { support, cdf } => {
                let k = pick(cdf, rng.random::<f64>());
                out.copy_from_slice(&support[k]);
                false
            }
            Sampler::Mixture { cdf, components } => {
                let k = pick(cdf, rng.random::<f64>());
                components[k].draw(rng, out)
            }
        }
    }
}

fn draw_dyadic<R: Rng>(rng: &mut R) -> (f64, bool) {
    let u: f64 = rng.random();
    let (n, capped) = if u >= dyadic_piece_cdf(DYADIC_CAP as u64 - 1) {
        (DYADIC_CAP, u >= dyadic_piece_cdf(DYADIC_CAP as u64))
    } else {
        // invert 1 - 1/log2(n+2) > u, then settle rounding by direct comparison
        let guess = (2.0_f64.powf(1.0 / (1.0 - u)) - 2.0).ceil();
        let mut n = guess.clamp(1.0, (DYADIC_CAP - 1) as f64) as u64;
        while n > 1 && dyadic_piece_cdf(n - 1) > u {
            n -= 1;
        }
        while dyadic_piece_cdf(n) <= u {
            n += 1;
        }
        (n as u32, false)
    };
    // uniform on (2^-n, 2^-n+1]: mantissa in (1, 2]
    let v = 1.0 - rng.random::<f64>();
    let mut m = 1.0 + v;
    if m == 1.0 {
        m = 1.0 + f64::EPSILON;
    }
    (m * pow2(-(n as i32)), capped)
}

/// Draw `count` i.i.d. samples; identical arguments give identical batches.
pub fn sample(spec: &DistributionSpec, count: usize, seed: u64) -> Result<SampleBatch> {
    if count == 0 {
        return Err(Error::ZeroCount);
    }
    let sampler = Sampler::new(spec)?;
    let dims = spec.dims();
    let mut data = vec![0.0; dims * count];
    let capped: u64 = data
        .par_chunks_mut(CHUNK_SIZE * dims)
        .enumerate()
        .map(|(chunk, buf)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk as u64);
            buf.chunks_mut(dims)
                .map(|out| u64::from(sampler.draw(&mut rng, out)))
                .sum::<u64>()
        })
        .sum();
    let batch = SampleBatch::from_matrix(DMatrix::from_vec(dims, count, data))?;
    Ok(batch.with_seed_record(Some(SeedRecord {
        seed,
        chunk_size: CHUNK_SIZE,
        capped_draws: capped,
    })))
}

/// Child seed number `stream` of `root`, for splitting one root seed into
/// independent sub-experiments.
pub fn derive_seed(root: u64, stream: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(root);
    rng.set_stream(stream.wrapping_add(1 << 32));
    rng.next_u64()
}

// ---------------------------------------------------------------------------
// Box masses
// ---------------------------------------------------------------------------

/// Standard normal mass of `[a, b]`, using erfc on the tail side so small
/// masses keep their relative accuracy.
pub fn normal_interval_mass(a: f64, b: f64) -> f64 {
    use statrs::function::erf::erfc;
    if a >= b {
        return 0.0;
    }
    if a >= 0.0 {
        0.5 * (erfc(a / SQRT_2) - erfc(b / SQRT_2))
    } else if b <= 0.0 {
        0.5 * (erfc(-b / SQRT_2) - erfc(-a / SQRT_2))
    } else {
        1.0 - 0.5 * erfc(b / SQRT_2) - 0.5 * erfc(-a / SQRT_2)
    }
}

/// Exact probability of the axis-aligned box `region` (closed intervals,
/// infinite endpoints allowed) under `spec`.
///
/// Correlated Gaussians are not supported analytically.
pub fn probability_mass(spec: &DistributionSpec, region: &[(f64, f64)]) -> Result<f64> {
    spec.validate()?;
    if region.len() != spec.dims() {
        return Err(Error::DimensionMismatch {
            expected: spec.dims(),
            found: region.len(),
        });
    }
    for &(a, b) in region {
        if a.is_nan() || b.is_nan() || a > b {
            return Err(Error::InvalidRegion(format!(
                "interval [{a}, {b}] is not well ordered"
            )));
        }
    }
    let mass = match spec {
        DistributionSpec::GaussianVec { mean, covariance } => {
            let correlated = covariance
                .iter()
                .enumerate()
                .any(|(i, row)| row.iter().enumerate().any(|(j, &v)| i != j && v != 0.0));
            if correlated {
                return Err(Error::UnsupportedSpec("a correlated gaussian_vec".into()));
            }
            region
                .iter()
                .enumerate()
                .map(|(i, &(a, b))| {
                    let sd = covariance[i][i].sqrt();
                    normal_interval_mass((a - mean[i]) / sd, (b - mean[i]) / sd)
                })
                .product()
        }
        DistributionSpec::UniformBox { lo, hi } => region
            .iter()
            .enumerate()
            .map(|(i, &(a, b))| {
                let overlap = b.min(hi[i]) - a.max(lo[i]);
                (overlap / (hi[i] - lo[i])).max(0.0)
            })
            .product(),
        DistributionSpec::DyadicTail => {
            let (a, b) = region[0];
            (dyadic_cdf(b) - dyadic_cdf(a)).max(0.0)
        }
        DistributionSpec::DiscreteFinite { support, pmf } => support
            .iter()
            .zip(pmf)
            .filter(|(p, _)| p.iter().zip(region).all(|(x, &(a, b))| a <= *x && *x <= b))
            .map(|(_, w)| w)
            .sum(),
        DistributionSpec::Mixture {
            weights,
            components,
        } => {
            let mut total = 0.0;
            for (w, c) in weights.iter().zip(components) {
                total += w * probability_mass(c, region)?;
            }
            total
        }
    };
    Ok(mass.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn rejects_zero_count_and_bad_covariance() {
        let spec = DistributionSpec::standard_normal(2);
        assert!(matches!(sample(&spec, 0, 1), Err(Error::ZeroCount)));
        let bad = DistributionSpec::GaussianVec {
            mean: vec![0.0, 0.0],
            covariance: vec![vec![1.0, 1.0], vec![1.0, 1.0]],
        };
        assert!(matches!(
            sample(&bad, 10, 1),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let b = DistributionSpec::UniformBox {
            lo: vec![1.0],
            hi: vec![1.0],
        };
        assert!(b.validate().is_err());
        let d = DistributionSpec::DiscreteFinite {
            support: vec![vec![0.0], vec![1.0]],
            pmf: vec![0.5, 0.6],
        };
        assert!(d.validate().is_err());
        let neg = DistributionSpec::DiscreteFinite {
            support: vec![vec![0.0], vec![1.0]],
            pmf: vec![1.5, -0.5],
        };
        assert!(neg.validate().is_err());
    }

    #[test]
    fn same_seed_same_batch() {
        let spec = DistributionSpec::Mixture {
            weights: vec![0.3, 0.7],
            components: vec![DistributionSpec::DyadicTail, DistributionSpec::unit_box(1)],
        };
        let a = sample(&spec, 10_000, 42).unwrap();
        let b = sample(&spec, 10_000, 42).unwrap();
        assert_eq!(a, b);
        let c = sample(&spec, 10_000, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn thread_count_does_not_change_output() {
        let spec = DistributionSpec::standard_normal(3);
        let reference = sample(&spec, 20_000, 9).unwrap();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let single = pool.install(|| sample(&spec, 20_000, 9).unwrap());
        assert_eq!(reference, single);
    }

    #[test]
    fn prefix_is_stable_across_counts() {
        let spec = DistributionSpec::standard_normal(2);
        let short = sample(&spec, 5_000, 3).unwrap();
        let long = sample(&spec, 12_000, 3).unwrap();
        assert_eq!(short.sample(4_999), long.sample(4_999));
    }

    #[test]
    fn gaussian_moments() {
        let spec = DistributionSpec::standard_normal(2);
        let b = sample(&spec, 100_000, 1).unwrap();
        let s = b.count() as f64;
        let mean: Vec<f64> = (0..2).map(|i| b.values().row(i).sum() / s).collect();
        for m in &mean {
            assert!(m.abs() < 0.02, "mean {m}");
        }
        let cov = b.values() * b.values().transpose() / s;
        for i in 0..2 {
            for j in 0..2 {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (cov[(i, j)] - target).abs() < 0.05,
                    "cov[{i},{j}] = {}",
                    cov[(i, j)]
                );
            }
        }
    }

    #[test]
    fn dyadic_draws_and_first_piece_frequency() {
        let b = sample(&DistributionSpec::DyadicTail, 10_000, 7).unwrap();
        assert!(b.values().iter().all(|&x| x > 0.0 && x <= 1.0));
        let p1 = 1.0 - 1.0 / 3f64.log2();
        assert_abs_diff_eq!(p1, 0.369_07, epsilon = 1e-5);
        let freq = b.values().iter().filter(|&&x| x > 0.5).count() as f64 / 1e4;
        assert!((freq - p1).abs() < 0.02, "freq {freq}");
    }

    #[test]
    fn dyadic_pieces_land_in_their_intervals() {
        assert_eq!(dyadic_piece_index(1.0), 1);
        assert_eq!(dyadic_piece_index(0.5), 2);
        assert_eq!(dyadic_piece_index(0.500_000_1), 1);
        assert_eq!(dyadic_piece_index(0.3), 2);
        assert_eq!(dyadic_piece_index(0.25), 3);
        assert_eq!(dyadic_piece_index(pow2(-59)), 60);
        assert_eq!(dyadic_piece_index(1.5 * pow2(-60)), 60);
    }

    #[test]
    fn dyadic_cdf_is_continuous_at_piece_edges() {
        for n in 1..DYADIC_CAP as i32 {
            let edge = pow2(-n);
            let left = dyadic_cdf(edge);
            let right = dyadic_cdf(edge * (1.0 + 1e-12));
            assert!((right - left).abs() < 1e-9, "jump at 2^-{n}");
            assert_abs_diff_eq!(left, dyadic_tail_mass(n as u64), epsilon = 1e-15);
        }
    }

    #[test]
    fn standard_normal_central_mass() {
        let spec = DistributionSpec::standard_normal(1);
        let m = probability_mass(&spec, &[(-0.5, 0.5)]).unwrap();
        assert_abs_diff_eq!(m, 0.382_924_922_548_026, epsilon = 1e-13);
        let all = probability_mass(&spec, &[(f64::NEG_INFINITY, f64::INFINITY)]).unwrap();
        assert_eq!(all, 1.0);
    }

    #[test]
    fn uniform_and_discrete_masses() {
        let u = DistributionSpec::unit_box(1);
        assert_eq!(probability_mass(&u, &[(0.0, 0.25)]).unwrap(), 0.25);
        assert_eq!(probability_mass(&u, &[(-3.0, 3.0)]).unwrap(), 1.0);
        let d = DistributionSpec::DiscreteFinite {
            support: vec![vec![0.0], vec![1.0], vec![2.0]],
            pmf: vec![0.2, 0.3, 0.5],
        };
        assert_abs_diff_eq!(
            probability_mass(&d, &[(1.0, 2.0)]).unwrap(),
            0.8,
            epsilon = 1e-15
        );
        assert_eq!(
            probability_mass(&DistributionSpec::DyadicTail, &[(0.0, 1.0)]).unwrap(),
            1.0
        );
    }

    #[test]
    fn correlated_gaussian_mass_is_unsupported() {
        let spec = DistributionSpec::GaussianVec {
            mean: vec![0.0, 0.0],
            covariance: vec![vec![1.0, 0.5], vec![0.5, 1.0]],
        };
        assert!(matches!(
            probability_mass(&spec, &[(0.0, 1.0), (0.0, 1.0)]),
            Err(Error::UnsupportedSpec(_))
        ));
    }

    #[test]
    fn csv_has_header_and_full_precision() {
        let b = SampleBatch::from_samples(&[vec![0.1, -2.0], vec![1.0 / 3.0, 4.5]]).unwrap();
        let mut out = Vec::new();
        b.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("x1,x2"));
        let row: Vec<f64> = lines
            .nth(1)
            .unwrap()
            .split(',')
            .map(|v| v.parse().unwrap())
            .collect();
        assert_eq!(row, vec![1.0 / 3.0, 4.5]);
    }

    #[test]
    fn spec_json_uses_kind_tag() {
        let spec = DistributionSpec::unit_box(2);
        let json = serde_json::to_string(&spec).unwrap();
        assert!(json.starts_with(r#"{"kind":"uniform_box""#), "{json}");
        let back: DistributionSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);
        let tail: DistributionSpec = serde_json::from_str(r#"{"kind":"dyadic_tail"}"#).unwrap();
        assert_eq!(tail, DistributionSpec::DyadicTail);
    }

    #[test]
    fn non_finite_batches_are_rejected() {
        let err = SampleBatch::from_samples(&[vec![0.0, 1.0], vec![f64::NAN, 0.0]]).unwrap_err();
        assert!(matches!(
            err,
            Error::NonFinite {
                sample: 1,
                coord: 0
            }
        ));
    }
}
