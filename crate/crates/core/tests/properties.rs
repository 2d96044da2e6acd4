use infoloss::blocks::{
    analytic_relative_loss, make_adder, make_center_clipper, make_linear, make_projection,
    validate_partition, PieceProbMode,
};
use infoloss::dist::{self, DistributionSpec, SampleBatch};
use infoloss::linalg::evd_symmetric;
use infoloss::loss::{
    cascade_compose, discrete_relative_loss, discrete_transfer_product_check,
    dyadic_absolute_loss_partial, pca_budget, pca_transfer_graph, Domain, LossValue, Status,
};
use infoloss::pca::{
    pca_transform, sample_covariance, sample_pca, sample_pca_loss, sphere, unsphere, PcaModel,
};
use infoloss::quant::{empirical_entropy, EmpiricalPmf, EntropyCorrection, QuantizerGrid};
use nalgebra::DMatrix;
use num_rational::Ratio;
use proptest::prelude::*;

fn symmetric(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-10.0..10.0f64, n * n).prop_map(move |v| {
        let a = DMatrix::from_vec(n, n, v);
        (&a + a.transpose()) * 0.5
    })
}

fn data_matrix(max_n: usize, max_cols: usize) -> impl Strategy<Value = DMatrix<f64>> {
    (1..=max_n, 1..=max_cols).prop_flat_map(|(n, m)| {
        prop::collection::vec(-5.0..5.0f64, n * m).prop_map(move |v| DMatrix::from_vec(n, m, v))
    })
}

fn pmf(max: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01..1.0f64, 2..=max).prop_map(|w| {
        let s: f64 = w.iter().sum();
        let mut p: Vec<f64> = w.iter().map(|v| v / s).collect();
        let rest: f64 = p[1..].iter().sum();
        p[0] = 1.0 - rest;
        p
    })
}

/// A random orthogonal matrix from the EVD of a random symmetric one.
fn orthogonal(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    symmetric(n).prop_map(|a| evd_symmetric(&a).unwrap().eigenvectors)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn evd_is_orthogonal_sorted_and_reconstructs(a in (1usize..=8).prop_flat_map(symmetric)) {
        let e = evd_symmetric(&a).unwrap();
        let n = a.nrows();
        let w = &e.eigenvectors;
        prop_assert!((w.transpose() * w - DMatrix::<f64>::identity(n, n)).amax() <= 1e-10);
        let lam = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&e.eigenvalues));
        prop_assert!((w * lam * w.transpose() - &a).amax() <= 1e-8 * a.amax().max(1.0));
        prop_assert!(e.eigenvalues.windows(2).all(|p| p[0] >= p[1]));
        for col in w.column_iter() {
            let k = col.iamax();
            prop_assert!(col[k] > 0.0);
        }
    }

    #[test]
    fn covariance_models_satisfy_invariants(x in data_matrix(6, 30)) {
        let batch = SampleBatch::from_matrix(x).unwrap();
        let c = sample_covariance(&batch);
        let model = PcaModel::from_covariance(&c).unwrap();
        prop_assert!(model.orthogonality_error() <= 1e-10);
        prop_assert!(model.eigenvalues.iter().all(|&l| l >= -1e-10 * c.amax().max(1.0)));
        prop_assert!((model.covariance() - &c).amax() <= 1e-8 * c.amax().max(1.0));
    }

    #[test]
    fn rotation_preserves_norms(q in (2usize..=6).prop_flat_map(orthogonal), seed in any::<u64>()) {
        let n = q.nrows();
        let model = PcaModel { rotation: q, eigenvalues: vec![1.0; n], source: infoloss::pca::PcaSource::Population };
        let x = dist::sample(&DistributionSpec::standard_normal(n), 50, seed).unwrap();
        let y = pca_transform(&model, &x).unwrap();
        for (a, b) in x.samples().zip(y.samples()) {
            let na = a.iter().map(|v| v * v).sum::<f64>().sqrt();
            let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
            prop_assert!((na - nb).abs() <= 1e-10);
        }
        let back = SampleBatch::from_matrix(&model.rotation * y.values()).unwrap();
        prop_assert!((back.values() - x.values()).amax() <= 1e-10);
    }

    #[test]
    fn sample_pca_diagonalizes(dims in 1usize..=6, n in 1usize..=50, seed in any::<u64>()) {
        let x = dist::sample(&DistributionSpec::standard_normal(dims), n, seed).unwrap();
        let (y, model) = sample_pca(&x).unwrap();
        let c = sample_covariance(&y);
        for i in 0..dims {
            for j in 0..dims {
                let expect = if i == j { model.eigenvalues[i] } else { 0.0 };
                prop_assert!((c[(i, j)] - expect).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn sample_pca_is_equivariant_up_to_signs(
        q in (2usize..=5).prop_flat_map(orthogonal),
        extra in 0usize..20,
        seed in any::<u64>(),
    ) {
        let dims = q.nrows();
        let x = dist::sample(&DistributionSpec::standard_normal(dims), dims + extra, seed).unwrap();
        let (y, _) = sample_pca(&x).unwrap();
        let qx = SampleBatch::from_matrix(&q * x.values()).unwrap();
        let (yq, _) = sample_pca(&qx).unwrap();
        for i in 0..dims {
            let r1 = y.values().row(i);
            let r2 = yq.values().row(i);
            let same = (r1 - r2).amax();
            let flipped = (r1 + r2).amax();
            prop_assert!(same.min(flipped) <= 1e-8 * y.values().amax().max(1.0), "row {i}: {same} {flipped}");
        }
    }

    #[test]
    fn sphering_round_trips(dims in 1usize..=5, extra in 1usize..30, seed in any::<u64>()) {
        let x = dist::sample(&DistributionSpec::standard_normal(dims), dims + extra, seed).unwrap();
        let (y, model) = sample_pca(&x).unwrap();
        let s = sphere(&y, &model).unwrap();
        let c = sample_covariance(&s);
        prop_assert!((c - DMatrix::<f64>::identity(dims, dims)).amax() < 1e-8);
        prop_assert!((unsphere(&s, &model).unwrap().values() - y.values()).amax() < 1e-10);
    }

    #[test]
    fn cascade_stays_in_range_and_is_symmetric(a in 0.0..=1.0f64, b in 0.0..=1.0f64) {
        let la = LossValue::proved(a).unwrap();
        let lb = LossValue::proved(b).unwrap();
        let ab = cascade_compose(la, lb, Domain::Continuous).unwrap();
        let ba = cascade_compose(lb, la, Domain::Continuous).unwrap();
        prop_assert!((0.0..=1.0).contains(&ab.value));
        prop_assert!((ab.value - ba.value).abs() <= 1e-15);
        prop_assert!(ab.value >= a.max(b) - 1e-15);
        prop_assert_eq!(ab.status, Status::Conjectured);
        prop_assert_eq!(cascade_compose(la, lb, Domain::Discrete).unwrap().status, Status::Proved);
    }

    #[test]
    fn discrete_transfers_multiply(
        p in pmf(64),
        g in prop::collection::vec(0usize..16, 64),
        h in prop::collection::vec(0usize..8, 16),
    ) {
        let support: Vec<usize> = (0..p.len()).collect();
        prop_assume!(support.iter().any(|&x| g[x] != g[0]));
        let t = discrete_transfer_product_check(&support, &p, |&x| g[x], |&y| h[y]).unwrap();
        prop_assert!(t.product_gap < 1e-12);
        for v in [t.t_xz, t.t_xy, t.t_yz] {
            prop_assert!((0.0..=1.0 + 1e-12).contains(&v));
        }
        let l = discrete_relative_loss(&support, &p, |&x| h[g[x]]).unwrap();
        prop_assert!((l.value - (1.0 - t.t_xz)).abs() < 1e-12);
    }

    #[test]
    fn transfer_graph_conserves(dims in 2u64..=10, extra in 0u64..=90) {
        let n = dims + extra;
        let g = pca_transfer_graph(dims, n).unwrap();
        g.validate().unwrap();
        let b = pca_budget(&g).unwrap();
        prop_assert_eq!(b.output_plus_rotation, Ratio::from_integer(1));
        prop_assert_eq!(b.eigen_split, b.covariance);
        prop_assert_eq!(b.joint, Ratio::from_integer(1));
        prop_assert_eq!(b.separate_sum, Ratio::from_integer(1) + Ratio::new(1, n));
        for e in &g.edges {
            prop_assert!(e.transfer <= Ratio::from_integer(1));
        }
    }

    #[test]
    fn sample_pca_loss_in_range_and_monotone(dims in 1u64..=30, n in 1u64..=100) {
        let l = sample_pca_loss(dims, n).unwrap();
        prop_assert!((0.0..=1.0).contains(&l.value));
        prop_assert_eq!(l.status, if n >= dims { Status::Proved } else { Status::Conjectured });
        prop_assert!(sample_pca_loss(dims, n + 1).unwrap().value <= l.value);
    }

    #[test]
    fn adder_loss_ignores_the_input_law(a in -3.0..3.0f64, b in -3.0..3.0f64, c in 0.1..3.0f64) {
        let cov = DMatrix::from_row_slice(2, 2, &[a * a + c, a * b, a * b, b * b + c]);
        let spec = DistributionSpec::gaussian(vec![a, -b], &cov);
        let l = analytic_relative_loss(&make_adder(), &spec, PieceProbMode::Analytic).unwrap();
        prop_assert_eq!(l.loss.value, 0.5);
    }

    #[test]
    fn clipper_loss_is_monotone_in_c(c1 in 1e-3..10.0f64, c2 in 1e-3..10.0f64) {
        let spec = DistributionSpec::standard_normal(1);
        let loss = |c| analytic_relative_loss(&make_center_clipper(c).unwrap(), &spec, PieceProbMode::Analytic)
            .unwrap().loss.value;
        let (lo, hi) = if c1 <= c2 { (c1, c2) } else { (c2, c1) };
        prop_assert!(loss(lo) <= loss(hi));
    }

    #[test]
    fn linear_blocks_lose_the_codimension(m in 1usize..=4, extra in 0usize..=3, seed in any::<u64>()) {
        let n = m + extra;
        let a = dist::sample(&DistributionSpec::standard_normal(m * n), 1, seed).unwrap();
        let mat = DMatrix::from_column_slice(m, n, a.sample(0));
        prop_assume!(infoloss::linalg::singular_values(&mat).last().copied().unwrap_or(0.0) > 1e-3);
        let block = make_linear(mat).unwrap();
        let l = analytic_relative_loss(&block, &DistributionSpec::standard_normal(n), PieceProbMode::Analytic).unwrap();
        prop_assert!((l.loss.value - extra as f64 / n as f64).abs() < 1e-15);
        let x = dist::sample(&DistributionSpec::standard_normal(n), 20, seed).unwrap();
        prop_assert_eq!(validate_partition(&block, &x).unwrap().rank_checked, 20);
    }

    #[test]
    fn quantizer_cells_bracket_the_value(x in -1e3..1e3f64, n in 1u32..=1024) {
        let grid = QuantizerGrid::new(n).unwrap();
        let k = grid.cell(x);
        prop_assert!(grid.value(k) <= x + 1e-9);
        prop_assert!(x < grid.value(k + 1) + 1e-9);
    }

    #[test]
    fn entropy_is_bounded_by_log_cells(values in prop::collection::vec(-4.0..4.0f64, 1..400), n in 1u32..=64) {
        let batch = SampleBatch::from_samples(&values.iter().map(|&v| vec![v]).collect::<Vec<_>>()).unwrap();
        let pmf = EmpiricalPmf::from_batch(&batch, QuantizerGrid::new(n).unwrap());
        let h = empirical_entropy(&pmf, EntropyCorrection::Plugin);
        prop_assert!(h >= -1e-12);
        prop_assert!(h <= (pmf.occupied() as f64).log2() + 1e-9);
        prop_assert!(empirical_entropy(&pmf, EntropyCorrection::MillerMadow) >= h);
    }

    #[test]
    fn sampling_is_reproducible(seed in any::<u64>(), count in 1usize..10_000) {
        let spec = DistributionSpec::standard_normal(2);
        let a = dist::sample(&spec, count, seed).unwrap();
        let b = dist::sample(&spec, count + 100, seed).unwrap();
        prop_assert_eq!(a.values().as_slice(), &b.values().as_slice()[..2 * count]);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn clipper_partition_matches_its_jacobian(c in 0.05..3.0f64, seed in any::<u64>()) {
        let block = make_center_clipper(c).unwrap();
        let x = dist::sample(&DistributionSpec::standard_normal(1), 500, seed).unwrap();
        let chk = validate_partition(&block, &x).unwrap();
        prop_assert_eq!(chk.hits.iter().sum::<usize>(), 500);
    }

    #[test]
    fn projections_validate(m in 1usize..=4, extra in 0usize..=3, seed in any::<u64>()) {
        let block = make_projection(m, m + extra).unwrap();
        let x = dist::sample(&DistributionSpec::standard_normal(m + extra), 100, seed).unwrap();
        prop_assert_eq!(validate_partition(&block, &x).unwrap().rank_checked, 100);
    }
}

#[test]
fn clipper_loss_limits() {
    let spec = DistributionSpec::standard_normal(1);
    let loss = |c| {
        analytic_relative_loss(
            &make_center_clipper(c).unwrap(),
            &spec,
            PieceProbMode::Analytic,
        )
        .unwrap()
        .loss
        .value
    };
    assert!(loss(1e-9) < 1e-8);
    assert!(loss(40.0) > 1.0 - 1e-12);
}

#[test]
fn dyadic_partials_never_plateau() {
    let mut prev = dyadic_absolute_loss_partial(1);
    let mut k = 1u64;
    while k < 1_000_000 {
        k *= 10;
        let h = dyadic_absolute_loss_partial(k);
        assert!(h - prev > 1e-4, "gap {} at K = {k}", h - prev);
        prev = h;
    }
}

#[test]
fn dyadic_folder_output_is_uniform() {
    let x = dist::sample(&DistributionSpec::DyadicTail, 100_000, 21).unwrap();
    let y = infoloss::blocks::make_dyadic_folder().apply(&x).unwrap();
    let ks = infoloss::cli::appendix::ks_uniform(y.values().as_slice());
    assert!(ks < 0.01, "KS distance {ks}");
}

#[test]
fn nonzero_loss_shows_a_dimension_gap() {
    // a block with positive loss must drop estimated dimension beyond noise
    let spec = infoloss::cli::presets::parse_spec("gauss2").unwrap();
    let x = dist::sample(&spec, 200_000, 5).unwrap();
    let y = make_adder().apply(&x).unwrap();
    let ladder = [8, 16, 32, 64];
    let dx = infoloss::estimate_dimension(&x, &ladder, EntropyCorrection::MillerMadow).unwrap();
    let dy = infoloss::estimate_dimension(&y, &ladder, EntropyCorrection::MillerMadow).unwrap();
    let combined = (dx.slope_stderr.powi(2) + dy.slope_stderr.powi(2)).sqrt();
    assert!(dx.value - dy.value > 2.0 * combined + 0.5);
}
