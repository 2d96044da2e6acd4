//! Deterministic systems with declared domain partitions.
//!
//! Every block carries a partition of its input space into pieces on which
//! the map is a submersion onto an `out_dim`-dimensional manifold. The
//! relative loss of a block on an absolutely continuous input is then
//! `sum_i P(X_i) (N - n_i) / N`.

use std::fmt;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::{self, dyadic_piece_index, DistributionSpec, SampleBatch};
use crate::error::{Error, Result};
use crate::linalg;
use crate::loss::{LossValue, Status};
use crate::pca;

/// Singular values at or below this are treated as zero by `make_linear`.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Monte Carlo sample count used when no analytic piece mass exists.
pub const DEFAULT_MC_SAMPLES: usize = 1_000_000;

/// Seed used for the Monte Carlo fallback in analytic mode.
pub const DEFAULT_MC_SEED: u64 = 0x5eed;

/// Central-difference step for Jacobian rank checks.
pub const JACOBIAN_STEP: f64 = 1e-6;

/// Relative singular-value cutoff for Jacobian rank checks.
pub const JACOBIAN_RANK_TOLERANCE: f64 = 1e-6;

/// One coordinate interval; endpoints may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    pub fn closed(lo: f64, hi: f64) -> Self {
        Interval {
            lo,
            hi,
            lo_closed: true,
            hi_closed: true,
        }
    }

    pub fn open(lo: f64, hi: f64) -> Self {
        Interval {
            lo,
            hi,
            lo_closed: false,
            hi_closed: false,
        }
    }

    /// `(lo, hi]`
    pub fn left_open(lo: f64, hi: f64) -> Self {
        Interval {
            lo,
            hi,
            lo_closed: false,
            hi_closed: true,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = if self.lo_closed {
            x >= self.lo
        } else {
            x > self.lo
        };
        let below = if self.hi_closed {
            x <= self.hi
        } else {
            x < self.hi
        };
        above && below
    }

    /// Distance from `x` to the nearest finite endpoint.
    fn margin(&self, x: f64) -> f64 {
        let a = if self.lo.is_finite() {
            (x - self.lo).abs()
        } else {
            f64::INFINITY
        };
        let b = if self.hi.is_finite() {
            (self.hi - x).abs()
        } else {
            f64::INFINITY
        };
        a.min(b)
    }
}

/// Membership predicate of a partition piece.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "intervals", rename_all = "snake_case")]
pub enum Region {
    Everywhere,
    /// Product of per-coordinate intervals.
    Box(Vec<Interval>),
}

impl Region {
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Region::Everywhere => true,
            Region::Box(iv) => iv.len() == x.len() && iv.iter().zip(x).all(|(i, &v)| i.contains(v)),
        }
    }

    /// Distance from `x` to the region boundary (infinite for `Everywhere`).
    pub fn margin(&self, x: &[f64]) -> f64 {
        match self {
            Region::Everywhere => f64::INFINITY,
            Region::Box(iv) => iv
                .iter()
                .zip(x)
                .map(|(i, &v)| i.margin(v))
                .fold(f64::INFINITY, f64::min),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionPiece {
    pub label: String,
    pub out_dim: usize,
    pub region: Region,
}

/// The map a block applies.
#[derive(Debug, Clone, PartialEq)]
pub enum BlockMap {
    /// `y = A x` with `A` of full row rank.
    Linear(DMatrix<f64>),
    /// `y = x` if `|x| > c`, else 0.
    CenterClipper { c: f64 },
    /// `y = 2^n x - 1` on `(2^-n, 2^-n+1]`.
    DyadicFolder,
    /// Sample-covariance PCA on an `N x n` data matrix flattened column by
    /// column; the output is the rotated matrix flattened the same way.
    SamplePca { dims: usize, samples: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub name: String,
    pub in_dim: usize,
    pub out_dim_ambient: usize,
    pub map: BlockMap,
    pub partition: Vec<PartitionPiece>,
    /// Weakest status any loss derived from this block can carry.
    pub status_floor: Status,
}

impl fmt::Display for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} ({} -> {})",
            self.name, self.in_dim, self.out_dim_ambient
        )
    }
}

/// Block for `y = A x`. Rejects matrices whose smallest singular value is
/// at or below [`RANK_TOLERANCE`].
pub fn make_linear(matrix: DMatrix<f64>) -> Result<Block> {
    let (m, n) = matrix.shape();
    if m == 0 || n == 0 {
        return Err(Error::InvalidArgument("matrix must be non-empty".into()));
    }
    if m > n {
        return Err(Error::RankDeficient { smallest: 0.0 });
    }
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(
            "matrix has non-finite entries".into(),
        ));
    }
    let smallest = linalg::singular_values(&matrix)
        .last()
        .copied()
        .unwrap_or(0.0);
    if smallest <= RANK_TOLERANCE {
        return Err(Error::RankDeficient { smallest });
    }
    Ok(Block {
        name: format!("linear:{m}x{n}"),
        in_dim: n,
        out_dim_ambient: m,
        map: BlockMap::Linear(matrix),
        partition: vec![PartitionPiece {
            label: "everywhere".into(),
            out_dim: m,
            region: Region::Everywhere,
        }],
        status_floor: Status::Proved,
    })
}

/// Keep the first `m` of `n` coordinates.
pub fn make_projection(m: usize, n: usize) -> Result<Block> {
    if m == 0 || m > n {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= M <= N, got M = {m}, N = {n}"
        )));
    }
    let mut b = make_linear(DMatrix::from_fn(
        m,
        n,
        |i, j| if i == j { 1.0 } else { 0.0 },
    ))?;
    b.name = format!("project:{m}");
    Ok(b)
}

/// `y = x1 + x2`.
pub fn make_adder() -> Block {
    let mut b =
        make_linear(DMatrix::from_row_slice(1, 2, &[1.0, 1.0])).expect("[1 1] has full row rank");
    b.name = "adder".into();
    b
}

/// Dead-zone nonlinearity. The dead zone is the closed interval `[-c, c]`.
pub fn make_center_clipper(c: f64) -> Result<Block> {
    if !c.is_finite() || c <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "clipper threshold must be positive, got {c}"
        )));
    }
    let piece = |label: &str, out_dim, iv| PartitionPiece {
        label: label.into(),
        out_dim,
        region: Region::Box(vec![iv]),
    };
    Ok(Block {
        name: format!("clipper:{c}"),
        in_dim: 1,
        out_dim_ambient: 1,
        map: BlockMap::CenterClipper { c },
        partition: vec![
            piece("left-identity", 1, Interval::open(f64::NEG_INFINITY, -c)),
            piece("dead-zone", 0, Interval::closed(-c, c)),
            piece("right-identity", 1, Interval::open(c, f64::INFINITY)),
        ],
        status_floor: Status::Proved,
    })
}

/// Folds every `(2^-n, 2^-n+1]` onto `(0, 1]`. All branches are
/// diffeomorphisms, so the partition is one logical piece of dimension 1.
pub fn make_dyadic_folder() -> Block {
    Block {
        name: "dyadic-folder".into(),
        in_dim: 1,
        out_dim_ambient: 1,
        map: BlockMap::DyadicFolder,
        partition: vec![PartitionPiece {
            label: "dyadic-branches".into(),
            out_dim: 1,
            region: Region::Box(vec![Interval::left_open(0.0, 1.0)]),
        }],
        status_floor: Status::Proved,
    }
}

/// PCA with the sample covariance of `samples` columns in `dims`
/// dimensions, as a map on the flattened data matrix.
///
/// The rotated data keeps `nN - N(N-1)/2` dimensions when `n >= N` and
/// `n(n+1)/2` otherwise; the second regime is conjectured.
pub fn make_sample_pca(dims: usize, samples: usize) -> Result<Block> {
    if dims == 0 || samples == 0 {
        return Err(Error::InvalidArgument("need N >= 1 and n >= 1".into()));
    }
    let in_dim = dims * samples;
    Ok(Block {
        name: format!("pca-sample:{dims}:{samples}"),
        in_dim,
        out_dim_ambient: in_dim,
        map: BlockMap::SamplePca { dims, samples },
        partition: vec![PartitionPiece {
            label: "generic-data".into(),
            out_dim: pca::sample_pca_out_dim(dims, samples),
            region: Region::Everywhere,
        }],
        status_floor: if samples >= dims {
            Status::Proved
        } else {
            Status::Conjectured
        },
    })
}

fn clip(c: f64, x: f64) -> f64 {
    if x.abs() > c {
        x
    } else {
        0.0
    }
}

fn fold(x: f64) -> Result<f64> {
    if !(x > 0.0 && x <= 1.0) {
        return Err(Error::OutOfDomain(format!(
            "dyadic folder needs x in (0, 1], got {x}"
        )));
    }
    let n = dyadic_piece_index(x);
    // exact: scaling by a power of two, then a subtraction with no carry-out
    Ok(x * 2f64.powi(n as i32) - 1.0)
}

impl Block {
    /// The map at one input point.
    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.in_dim {
            return Err(Error::DimensionMismatch {
                expected: self.in_dim,
                found: x.len(),
            });
        }
        match &self.map {
            BlockMap::Linear(a) => Ok((a * nalgebra::DVector::from_column_slice(x))
                .as_slice()
                .to_vec()),
            BlockMap::CenterClipper { c } => Ok(vec![clip(*c, x[0])]),
            BlockMap::DyadicFolder => Ok(vec![fold(x[0])?]),
            BlockMap::SamplePca { dims, .. } => pca::sample_pca_flat(*dims, x),
        }
    }

    /// Apply the block to every sample.
    pub fn apply(&self, batch: &SampleBatch) -> Result<SampleBatch> {
        if batch.dims() != self.in_dim {
            return Err(Error::DimensionMismatch {
                expected: self.in_dim,
                found: batch.dims(),
            });
        }
        if let BlockMap::Linear(a) = &self.map {
            return SampleBatch::from_matrix(a * batch.values());
        }
        let m = self.out_dim_ambient;
        let mut out = vec![0.0; m * batch.count()];
        out.par_chunks_mut(m)
            .zip(batch.values().as_slice().par_chunks(self.in_dim))
            .try_for_each(|(dst, x)| {
                dst.copy_from_slice(&self.eval(x)?);
                Ok::<_, Error>(())
            })?;
        SampleBatch::from_column_major(m, out)
    }

    /// Index of the piece containing `x`, or an error naming how many
    /// pieces claim it.
    pub fn piece_of(&self, x: &[f64]) -> Result<usize> {
        let mut hits = self
            .partition
            .iter()
            .enumerate()
            .filter(|(_, p)| p.region.contains(x));
        match (hits.next(), hits.next()) {
            (Some((i, _)), None) => Ok(i),
            (None, _) => Err(Error::PartitionViolation(format!(
                "{x:?} lies in no piece of {}",
                self.name
            ))),
            (Some((i, _)), Some((j, _))) => Err(Error::PartitionViolation(format!(
                "{x:?} lies in pieces {} and {} of {}",
                self.partition[i].label, self.partition[j].label, self.name
            ))),
        }
    }

    /// Central-difference Jacobian at `x`, `out_dim_ambient x in_dim`.
    pub fn jacobian(&self, x: &[f64], step: f64) -> Result<DMatrix<f64>> {
        let mut jac = DMatrix::zeros(self.out_dim_ambient, self.in_dim);
        let mut p = x.to_vec();
        for j in 0..self.in_dim {
            p[j] = x[j] + step;
            let up = self.eval(&p)?;
            p[j] = x[j] - step;
            let down = self.eval(&p)?;
            p[j] = x[j];
            for i in 0..self.out_dim_ambient {
                jac[(i, j)] = (up[i] - down[i]) / (2.0 * step);
            }
        }
        Ok(jac)
    }
}

/// Outcome of [`validate_partition`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionCheck {
    pub points: usize,
    /// Points per piece.
    pub hits: Vec<usize>,
    /// Points far enough inside their piece to have had the rank checked.
    pub rank_checked: usize,
}

/// Check that every sample lies in exactly one piece, and that at samples
/// away from piece boundaries the Jacobian rank equals the piece's
/// `out_dim`.
pub fn validate_partition(block: &Block, batch: &SampleBatch) -> Result<PartitionCheck> {
    if batch.dims() != block.in_dim {
        return Err(Error::DimensionMismatch {
            expected: block.in_dim,
            found: batch.dims(),
        });
    }
    let results: Vec<(usize, bool)> = batch
        .samples()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|x| {
            let i = block.piece_of(x)?;
            let piece = &block.partition[i];
            if piece.region.margin(x) <= 10.0 * JACOBIAN_STEP {
                return Ok((i, false));
            }
            let jac = block.jacobian(x, JACOBIAN_STEP)?;
            let rank = jacobian_rank(&jac);
            if rank != piece.out_dim {
                return Err(Error::PartitionViolation(format!(
                    "Jacobian rank {rank} at {x:?} but piece {} declares {}",
                    piece.label, piece.out_dim
                )));
            }
            Ok((i, true))
        })
        .collect::<Result<_>>()?;
    let mut hits = vec![0; block.partition.len()];
    for &(i, _) in &results {
        hits[i] += 1;
    }
    Ok(PartitionCheck {
        points: results.len(),
        hits,
        rank_checked: results.iter().filter(|r| r.1).count(),
    })
}

/// Number of singular values above [`JACOBIAN_RANK_TOLERANCE`] times the
/// largest; zero for a numerically zero matrix.
pub fn jacobian_rank(jac: &DMatrix<f64>) -> usize {
    let sv = linalg::singular_values(jac);
    let top = sv.first().copied().unwrap_or(0.0);
    if top <= f64::MIN_POSITIVE {
        return 0;
    }
    sv.iter()
        .filter(|&&s| s > JACOBIAN_RANK_TOLERANCE * top)
        .count()
}

/// How piece probabilities are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum PieceProbMode {
    /// Exact box masses where available, otherwise Monte Carlo with
    /// [`DEFAULT_MC_SAMPLES`] draws.
    Analytic,
    MonteCarlo {
        samples: usize,
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbSource {
    Analytic,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PieceProbability {
    pub label: String,
    pub out_dim: usize,
    pub probability: f64,
    pub source: ProbSource,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub stderr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub loss: LossValue,
    pub pieces: Vec<PieceProbability>,
}

fn box_mass(spec: &DistributionSpec, region: &Region) -> Result<f64> {
    match region {
        Region::Everywhere => Ok(1.0),
        Region::Box(iv) => {
            dist::probability_mass(spec, &iv.iter().map(|i| (i.lo, i.hi)).collect::<Vec<_>>())
        }
    }
}

fn monte_carlo_masses(
    block: &Block,
    spec: &DistributionSpec,
    samples: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let batch = dist::sample(spec, samples, seed)?;
    let counts = batch
        .samples()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|x| {
            let mut c = vec![0u64; block.partition.len()];
            c[block.piece_of(x)?] += 1;
            Ok::<_, Error>(c)
        })
        .try_reduce(
            || vec![0u64; block.partition.len()],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                Ok(a)
            },
        )?;
    Ok(counts.iter().map(|&c| c as f64 / samples as f64).collect())
}

/// `sum_i P(X_i) (N - n_i) / N` for an absolutely continuous input law.
pub fn analytic_relative_loss(
    block: &Block,
    spec: &DistributionSpec,
    mode: PieceProbMode,
) -> Result<LossBreakdown> {
    spec.validate()?;
    if spec.dims() != block.in_dim {
        return Err(Error::DimensionMismatch {
            expected: block.in_dim,
            found: spec.dims(),
        });
    }
    if !spec.is_absolutely_continuous() {
        return Err(Error::InvalidArgument(
            "the piecewise loss formula needs an absolutely continuous input; use discrete_relative_loss".into(),
        ));
    }

    let analytic: Option<Vec<f64>> = match mode {
        PieceProbMode::MonteCarlo { .. } => None,
        PieceProbMode::Analytic => {
            let masses: Result<Vec<f64>> = block
                .partition
                .iter()
                .map(|p| box_mass(spec, &p.region))
                .collect();
            match masses {
                Ok(m) => Some(m),
                Err(Error::UnsupportedSpec(_)) => None,
                Err(e) => return Err(e),
            }
        }
    };
    let (probs, source, samples) = match (analytic, mode) {
        (Some(p), _) => (p, ProbSource::Analytic, None),
        (None, PieceProbMode::MonteCarlo { samples, seed }) => (
            monte_carlo_masses(block, spec, samples, seed)?,
            ProbSource::MonteCarlo,
            Some(samples),
        ),
        (None, PieceProbMode::Analytic) => (
            monte_carlo_masses(block, spec, DEFAULT_MC_SAMPLES, DEFAULT_MC_SEED)?,
            ProbSource::MonteCarlo,
            Some(DEFAULT_MC_SAMPLES),
        ),
    };

    let n = block.in_dim as f64;
    let weights: Vec<f64> = block
        .partition
        .iter()
        .map(|p| (n - p.out_dim as f64) / n)
        .collect();
    let value: f64 = probs.iter().zip(&weights).map(|(p, w)| p * w).sum();
    let mut status = block.status_floor;
    let mut loss_stderr = None;
    if let Some(s) = samples {
        status = status.max(Status::Estimated);
        let second: f64 = probs.iter().zip(&weights).map(|(p, w)| p * w * w).sum();
        loss_stderr = Some(((second - value * value).max(0.0) / s as f64).sqrt());
    }
    let pieces = block
        .partition
        .iter()
        .zip(&probs)
        .map(|(piece, &p)| PieceProbability {
            label: piece.label.clone(),
            out_dim: piece.out_dim,
            probability: p,
            source,
            stderr: samples.map(|s| (p * (1.0 - p) / s as f64).sqrt()),
        })
        .collect();
    let mut loss = LossValue::new(value.clamp(0.0, 1.0), status)?;
    loss.stderr = loss_stderr;
    Ok(LossBreakdown { loss, pieces })
}
