//! Self-checks of the worked constructions: the dyadic folder with zero
//! relative but unbounded absolute loss, the discrete transfer product, the
//! dimension count of sample-PCA output, and the one-sample closed form.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use super::presets::default_ladder;
use crate::blocks::{make_dyadic_folder, make_sample_pca};
use crate::dist::{self, derive_seed, DistributionSpec, SampleBatch};
use crate::error::Result;
use crate::loss::{discrete_transfer_product_check, dyadic_absolute_loss_partial};
use crate::pca::sample_pca;
use crate::quant::{estimate_dimension, EntropyCorrection};

#[derive(Debug, Clone, Serialize)]
pub struct AppendixCheck {
    pub name: &'static str,
    pub pass: bool,
    pub details: serde_json::Value,
}

/// Kolmogorov–Smirnov distance of a scalar sample from U(0, 1).
pub fn ks_uniform(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = x.clamp(0.0, 1.0);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// The partial-entropy sequence at `K = 10^2 .. 10^6`.
pub fn dyadic_partials() -> Vec<(u64, f64)> {
    [100u64, 1_000, 10_000, 100_000, 1_000_000]
        .iter()
        .map(|&k| (k, dyadic_absolute_loss_partial(k)))
        .collect()
}

pub fn check_dyadic(seed: u64) -> Result<AppendixCheck> {
    let x = dist::sample(
        &DistributionSpec::DyadicTail,
        100_000,
        derive_seed(seed, 10),
    )?;
    let y = make_dyadic_folder().apply(&x)?;
    let ladder = default_ladder(1);
    let dx = estimate_dimension(&x, &ladder, EntropyCorrection::MillerMadow)?;
    let dy = estimate_dimension(&y, &ladder, EntropyCorrection::MillerMadow)?;
    let loss = 1.0 - dy.value / dx.value;
    let partials = dyadic_partials();
    let min_gap = partials
        .windows(2)
        .map(|w| w[1].1 - w[0].1)
        .fold(f64::INFINITY, f64::min);
    let ks = ks_uniform(y.values().as_slice());
    let loss_ok = loss.abs() <= 0.07;
    let growth_ok = min_gap > 1e-4;
    Ok(AppendixCheck {
        name: "dyadic-folder",
        pass: loss_ok && growth_ok,
        details: json!({
            "estimated_loss": loss,
            "estimated_loss_ok": loss_ok,
            "d_x": dx.value,
            "d_y": dy.value,
            "loss_with_ambient_d_x": 1.0 - dy.value,
            "output_ks_distance": ks,
            "partial_entropies": partials,
            "min_consecutive_gap": min_gap,
            "unbounded_growth_ok": growth_ok,
        }),
    })
}

/// Largest product gap over `trials` random discrete cascades.
pub fn check_transfer_product(seed: u64, trials: usize) -> Result<AppendixCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 11));
    let mut worst: f64 = 0.0;
    let mut done = 0;
    while done < trials {
        let k = rng.random_range(2..=64usize);
        let weights: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + 1e-3).collect();
        let total: f64 = weights.iter().sum();
        let pmf: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let ky = rng.random_range(2..=k);
        let kz = rng.random_range(1..=ky);
        let g: Vec<usize> = (0..k).map(|_| rng.random_range(0..ky)).collect();
        let h: Vec<usize> = (0..ky).map(|_| rng.random_range(0..kz)).collect();
        if g.iter().all(|&v| v == g[0]) {
            continue;
        }
        let support: Vec<usize> = (0..k).collect();
        let t = discrete_transfer_product_check(&support, &renormalize(pmf), |&x| g[x], |&y| h[y])?;
        worst = worst.max(t.product_gap);
        done += 1;
    }
    Ok(AppendixCheck {
        name: "transfer-product",
        pass: worst < 1e-12,
        details: json!({ "trials": trials, "max_gap": worst }),
    })
}

// Absorb the rounding of the normalisation so the pmf sums to 1 within 1e-12.
fn renormalize(mut pmf: Vec<f64>) -> Vec<f64> {
    let s: f64 = pmf.iter().sum();
    pmf.iter_mut().for_each(|p| *p /= s);
    pmf
}

/// Largest off-diagonal entry of the sample covariance of each `2 x 2`
/// (or `N x n`) rotated data matrix in a flattened batch.
pub fn max_offdiag_covariance(dims: usize, flat: &SampleBatch) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for col in flat.samples() {
        let y = SampleBatch::from_column_major(dims, col.to_vec())?;
        let c = crate::pca::sample_covariance(&y);
        for i in 0..dims {
            for j in 0..dims {
                if i != j {
                    worst = worst.max(c[(i, j)].abs());
                }
            }
        }
    }
    Ok(worst)
}

pub fn check_pca_dimension(seed: u64) -> Result<AppendixCheck> {
    let (big_n, n) = (2, 2);
    let block = make_sample_pca(big_n, n)?;
    let x = dist::sample(
        &DistributionSpec::standard_normal(big_n * n),
        200_000,
        derive_seed(seed, 12),
    )?;
    let y = block.apply(&x)?;
    let d = estimate_dimension(&y, &[2, 4, 8], EntropyCorrection::MillerMadow)?;
    let expected = (n * big_n - big_n * (big_n - 1) / 2) as f64;
    let offdiag = max_offdiag_covariance(big_n, &y)?;
    let dim_ok = (d.value - expected).abs() <= 0.2;
    Ok(AppendixCheck {
        name: "pca-dimension",
        pass: dim_ok && offdiag < 1e-8,
        details: json!({
            "estimated_dimension": d.value,
            "expected_dimension": expected,
            "undersampled": d.undersampled,
            "max_offdiag_covariance": offdiag,
        }),
    })
}

pub fn check_single_sample() -> Result<AppendixCheck> {
    let run = |a: f64, b: f64| -> Result<Vec<f64>> {
        let (y, _) = sample_pca(&SampleBatch::from_samples(&[vec![a, b]])?)?;
        Ok(y.sample(0).to_vec())
    };
    let plus = run(3.0, 4.0)?;
    let minus = run(3.0, -4.0)?;
    let err = (plus[0] - 5.0)
        .abs()
        .max(plus[1].abs())
        .max((minus[0] + 5.0).abs())
        .max(minus[1].abs());
    Ok(AppendixCheck {
        name: "single-sample",
        pass: err <= 1e-10,
        details: json!({ "y_for_3_4": plus, "y_for_3_minus4": minus, "max_error": err }),
    })
}

pub fn run_all(seed: u64) -> Result<Vec<AppendixCheck>> {
    Ok(vec![
        check_dyadic(seed)?,
        check_transfer_product(seed, 100)?,
        check_pca_dimension(seed)?,
        check_single_sample()?,
    ])
}
