//! Name parsing for blocks and input laws.

use std::path::Path;

use nalgebra::DMatrix;

use crate::blocks::{self, Block};
use crate::dist::DistributionSpec;
use crate::error::{Error, Result};
use crate::quant::DEFAULT_LADDER;

/// Resolve a block name: `adder`, `clipper:<c>`, `project:<M>[:<N>]`,
/// `linear:<csv>`, `dyadic-folder`, `pca-sample[:<N>:<n>]`.
///
/// `input_dims` fixes `N` for `project:<M>` when it is not given.
pub fn parse_block(name: &str, input_dims: Option<usize>) -> Result<Block> {
    let (head, rest) = match name.split_once(':') {
        Some((h, r)) => (h, Some(r)),
        None => (name, None),
    };
    let bad = || Error::InvalidArgument(format!("cannot parse block '{name}'"));
    match (head, rest) {
        ("adder", None) => Ok(blocks::make_adder()),
        ("dyadic-folder", None) => Ok(blocks::make_dyadic_folder()),
        ("clipper", Some(c)) => blocks::make_center_clipper(c.parse().map_err(|_| bad())?),
        ("project", Some(r)) => {
            let mut parts = r.split(':');
            let m: usize = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            let n = match parts.next() {
                Some(s) => s.parse().map_err(|_| bad())?,
                None => input_dims.ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "block '{name}' needs the input dimension; use project:M:N"
                    ))
                })?,
            };
            blocks::make_projection(m, n)
        }
        ("linear", Some(path)) => blocks::make_linear(read_matrix_csv(Path::new(path))?),
        ("pca-sample", None) => blocks::make_sample_pca(2, 2),
        ("pca-sample", Some(r)) => {
            let (a, b) = r.split_once(':').ok_or_else(bad)?;
            blocks::make_sample_pca(a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?)
        }
        _ => Err(bad()),
    }
}

/// Row-major matrix from a header-less CSV file.
pub fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record?;
        let row = record
            .iter()
            .map(|s| {
                s.parse::<f64>().map_err(|_| {
                    Error::InvalidArgument(format!("'{s}' in {} is not a number", path.display()))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    let cols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || cols == 0 || rows.iter().any(|r| r.len() != cols) {
        return Err(Error::InvalidArgument(format!(
            "{} is not a rectangular matrix",
            path.display()
        )));
    }
    Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

fn scaled_gaussian(covariance: &[f64], dims: usize) -> DistributionSpec {
    DistributionSpec::gaussian(
        vec![0.0; dims],
        &DMatrix::from_row_slice(dims, dims, covariance),
    )
}

/// Resolve an input law: `stdnormal[:K]`, `gauss2`, `gauss3`,
/// `uniform[:K]`, `dyadic-tail`, or a path to a JSON spec.
///
/// `gauss2` and `gauss3` are scaled so that the default resolution ladder
/// for their dimension stays below the undersampling guard at the default
/// sample count.
pub fn parse_spec(name: &str) -> Result<DistributionSpec> {
    let bad = || Error::InvalidArgument(format!("cannot parse spec '{name}'"));
    let dims = |s: Option<&str>| -> Result<usize> {
        match s {
            None => Ok(1),
            Some(k) => k.parse().ok().filter(|&k| k >= 1).ok_or_else(bad),
        }
    };
    let (head, rest) = match name.split_once(':') {
        Some((h, r)) => (h, Some(r)),
        None => (name, None),
    };
    let spec = match (head, rest) {
        ("stdnormal", r) => DistributionSpec::standard_normal(dims(r)?),
        ("uniform", r) => DistributionSpec::unit_box(dims(r)?),
        ("gauss2", None) => scaled_gaussian(&[0.1, 0.05, 0.05, 0.1], 2),
        ("gauss3", None) => scaled_gaussian(&[0.25, 0.0, 0.0, 0.0, 0.25, 0.0, 0.0, 0.0, 0.25], 3),
        ("dyadic-tail", None) => DistributionSpec::DyadicTail,
        _ if Path::new(name).is_file() => {
            let text = std::fs::read_to_string(name)?;
            serde_json::from_str(&text)?
        }
        _ => return Err(bad()),
    };
    spec.validate()?;
    Ok(spec)
}

/// Resolution ladder used when none is given.
///
/// Finer ladders in low dimension keep the neglected `o(1)` term of the
/// quantized entropy small; coarser ones in high dimension keep the finest
/// level populated.
pub fn default_ladder(dims: usize) -> Vec<u32> {
    match dims {
        1 => vec![64, 128, 256, 512],
        2 => DEFAULT_LADDER.to_vec(),
        _ => vec![2, 4, 8],
    }
}

/// Parse `8,16,32` into a ladder.
pub fn parse_ladder(text: &str) -> Result<Vec<u32>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<u32>()
                .map_err(|_| Error::InvalidResolutions(format!("'{s}' is not a resolution")))
        })
        .collect()
}
