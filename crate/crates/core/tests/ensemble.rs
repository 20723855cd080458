use faer::Mat;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use overlapkit::ensemble::{
    correlation_identity_test, mc_kernel_overlaps, mc_rescaled_overlaps, overlap_matrices, read_matrix_file,
    sample_ensemble, sample_with_rng, svd_full, svd_truncated, write_matrix_file, Dims, KernelTarget, MatrixSpec,
    McConfig, Target,
};
use overlapkit::Error;

fn orthonormality_error(m: &Mat<f64>) -> f64 {
    let g = m.transpose() * m;
    let mut err: f64 = 0.0;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            err = err.max((g[(i, j)] - if i == j { 1.0 } else { 0.0 }).abs());
        }
    }
    err
}

#[test]
fn zero_time_returns_the_initial_matrix() {
    let dims = Dims::new(5, 4, 3, 2).unwrap();
    let a = Mat::from_fn(5, 4, |i, j| (i * 4 + j) as f64 * 0.1);
    let spec = MatrixSpec::dense(a.clone(), dims).unwrap();
    let (x, xt) = sample_ensemble(&spec, 0.0, 9).unwrap();
    assert_eq!(x, a);
    for i in 0..5 {
        for j in 0..4 {
            let want = if i < 3 && j < 2 { a[(i, j)] } else { 0.0 };
            assert_eq!(xt[(i, j)], want);
        }
    }
}

#[test]
fn entry_variance_is_t_over_n() {
    let dims = Dims::new(4, 3, 2, 2).unwrap();
    let spec = MatrixSpec::zero(dims);
    let t = 2.0;
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let draws = 10_000;
    let mut sum_sq = vec![0.0; 12];
    for _ in 0..draws {
        let (x, xt) = sample_with_rng(&spec, t, &mut rng).unwrap();
        for i in 0..4 {
            for j in 0..3 {
                sum_sq[i * 3 + j] += x[(i, j)] * x[(i, j)];
                if i >= 2 || j >= 2 {
                    assert_eq!(xt[(i, j)], 0.0);
                }
            }
        }
    }
    let want = t / 3.0;
    let pooled = sum_sq.iter().sum::<f64>() / (12 * draws) as f64;
    assert!((pooled / want - 1.0).abs() < 0.05, "pooled variance {pooled}");
    for s in &sum_sq {
        // each entry: relative standard error √(2/10⁴) ≈ 1.4%
        assert!((s / draws as f64 / want - 1.0).abs() < 0.07);
    }
}

#[test]
fn same_seed_same_sample() {
    let dims = Dims::new(6, 5, 4, 3).unwrap();
    let spec = MatrixSpec::zero(dims);
    assert_eq!(sample_ensemble(&spec, 1.0, 3).unwrap(), sample_ensemble(&spec, 1.0, 3).unwrap());
    assert_ne!(sample_ensemble(&spec, 1.0, 3).unwrap().0, sample_ensemble(&spec, 1.0, 4).unwrap().0);
}

#[test]
fn frames_are_orthonormal_and_reconstruct() {
    let dims = Dims::new(9, 7, 6, 4).unwrap();
    let (x, xt) = sample_ensemble(&MatrixSpec::zero(dims), 1.3, 21).unwrap();
    let full = svd_full(&x).unwrap();
    let trunc = svd_truncated(&xt, &dims).unwrap();
    for m in [&full.left, &full.right, &trunc.left, &trunc.right] {
        assert!(orthonormality_error(m) < 1e-10);
    }
    let mut recon = Mat::<f64>::zeros(9, 7);
    for k in 0..7 {
        for i in 0..9 {
            for j in 0..7 {
                recon[(i, j)] += full.left[(i, k)] * full.svals[k] * full.right[(j, k)];
            }
        }
    }
    assert!((&recon - &x).norm_max() < 1e-10);
    assert!(full.svals.windows(2).all(|w| w[0] >= w[1]));
}

#[test]
fn null_space_completion_uses_unit_vectors() {
    let dims = Dims::new(4, 3, 2, 2).unwrap();
    let (_, xt) = sample_ensemble(&MatrixSpec::zero(dims), 1.0, 5).unwrap();
    let trunc = svd_truncated(&xt, &dims).unwrap();
    for k in 2..4 {
        for i in 0..4 {
            assert_eq!(trunc.left[(i, k)], if i == k { 1.0 } else { 0.0 });
        }
    }
    assert_eq!(trunc.right[(2, 2)], 1.0);
}

#[test]
fn full_block_has_empty_completion() {
    let dims = Dims::new(3, 3, 3, 3).unwrap();
    let a = Mat::from_fn(3, 3, |i, j| if i == j { 1.0 + i as f64 } else { 0.0 });
    let trunc = svd_truncated(&a, &dims).unwrap();
    assert_eq!(trunc.svals, vec![3.0, 2.0, 1.0]);
}

#[test]
fn rank_deficient_block_is_degenerate() {
    let dims = Dims::new(3, 2, 2, 2).unwrap();
    let xt = Mat::from_fn(3, 2, |i, _| if i < 2 { 1.0 } else { 0.0 });
    assert!(matches!(svd_truncated(&xt, &dims), Err(Error::DegenerateSample(_))));
}

#[test]
fn overlap_rows_sum_to_one() {
    let dims = Dims::new(15, 12, 10, 7).unwrap();
    let (x, xt) = sample_ensemble(&MatrixSpec::zero(dims), 2.0, 8).unwrap();
    let tables = overlap_matrices(&svd_full(&x).unwrap(), &svd_truncated(&xt, &dims).unwrap(), &dims);
    for i in 0..7 {
        let s: f64 = (0..12).map(|j| tables.v[(i, j)]).sum();
        assert!((s - 1.0).abs() < 1e-10);
    }
    for i in 0..10 {
        let s: f64 = (0..15).map(|j| tables.u[(i, j)]).sum();
        assert!((s - 1.0).abs() < 1e-10);
    }
    for i in 0..7 {
        for j in 0..12 {
            let w = tables.w[(i, j)];
            assert!(w * w <= tables.v[(i, j)] * tables.u[(i, j)] + 1e-15);
        }
    }
}

#[test]
fn identity_truncation_concentrates_on_matched_index() {
    let dims = Dims::new(8, 6, 8, 6).unwrap();
    let targets = [Target::new(0.5, 0.5).unwrap(), Target::new(0.5, 0.2).unwrap()];
    let est = mc_rescaled_overlaps(&MatrixSpec::zero(dims), 1.0, &targets, &McConfig::new(4, 2)).unwrap();
    assert!((est[0].v.value - 6.0).abs() < 1e-9);
    assert!(est[0].v.stderr < 1e-9);
    assert!(est[1].v.value.abs() < 1e-9);
}

#[test]
fn two_trials_give_positive_stderr() {
    let dims = Dims::new(10, 8, 6, 4).unwrap();
    let est =
        mc_rescaled_overlaps(&MatrixSpec::zero(dims), 1.0, &[Target::new(0.5, 0.5).unwrap()], &McConfig::new(2, 1))
            .unwrap();
    assert!(est[0].v.stderr.is_finite() && est[0].v.stderr > 0.0);
    assert!(mc_rescaled_overlaps(
        &MatrixSpec::zero(dims),
        1.0,
        &[Target::new(0.5, 0.5).unwrap()],
        &McConfig::new(1, 1)
    )
    .is_err());
}

#[test]
fn kernel_request_without_null_space_fails() {
    let dims = Dims::new(10, 8, 6, 6).unwrap();
    let err = mc_kernel_overlaps(&MatrixSpec::zero(dims), 1.0, &[KernelTarget::U1 { y: 0.5 }], &McConfig::new(4, 1))
        .unwrap_err();
    assert!(matches!(err, Error::DegenerateNullSpace(_)));
}

#[test]
fn kernel_rows_sum_to_one_per_trial() {
    // Ū(0, 0) over all null pairs plus Ū(0, λ) over bulk columns exhaust each row
    let dims = Dims::new(10, 6, 8, 4).unwrap();
    let spec = MatrixSpec::zero(dims);
    let mut targets: Vec<KernelTarget> = (1..=6).map(|j| KernelTarget::U1 { y: j as f64 / 6.0 }).collect();
    targets.push(KernelTarget::U3);
    let est = mc_kernel_overlaps(&spec, 1.0, &targets, &McConfig::new(3, 4)).unwrap();
    let bulk: f64 = est[..6].iter().map(|e| e.value).sum();
    let total = (bulk + 4.0 * est[6].value) / 6.0;
    assert!((total - 1.0).abs() < 1e-10, "{total}");
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let dims = Dims::new(20, 16, 12, 8).unwrap();
    let targets = [Target::new(0.3, 0.6).unwrap()];
    let run =
        |threads| {
            rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| {
                mc_rescaled_overlaps(&MatrixSpec::zero(dims), 1.0, &targets, &McConfig::new(16, 5)).unwrap()
            })
        };
    assert_eq!(run(1), run(3));
}

#[test]
fn correlation_identity_on_diagonal() {
    let dims = Dims::new(8, 6, 4, 3).unwrap();
    let samples = 4000;
    let rep = correlation_identity_test(&dims, 1.0, 1e-2, samples, 2, 13).unwrap();
    assert!(rep.max_diagonal_deviation <= 4.0 / (samples as f64).sqrt(), "{rep:?}");
}

#[test]
fn matrix_files_round_trip() {
    let dir = std::env::temp_dir().join(format!("overlapkit-ensemble-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let a = Mat::from_fn(3, 2, |i, j| 1.0 / (1.0 + i as f64 + 3.0 * j as f64));
    for name in ["a.csv", "a.txt"] {
        let path = dir.join(name);
        write_matrix_file(&path, &a).unwrap();
        assert_eq!(read_matrix_file(&path).unwrap(), a);
    }
    std::fs::remove_dir_all(&dir).unwrap();
}
