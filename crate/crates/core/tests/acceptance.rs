//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Run with `cargo test -p overlapkit-core --test acceptance`.

use std::process::ExitCode;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use overlapkit::ensemble::{
    correlation_identity_test, mc_kernel_overlaps, mc_rescaled_overlaps, overlap_matrices, sample_ensemble, svd_full,
    svd_truncated, Dims, KernelTarget, MatrixSpec, McConfig, Target,
};
use overlapkit::overlap::{
    general_overlap_triple, kernel_row_sum, mp_kernel_overlaps, mp_overlap_triple, normalization_check, GeneralModel,
    InitialOverlapTables,
};
use overlapkit::sde::{burgers_validate, z_grid};
use overlapkit::spectral::{
    mp_density, mp_density_peak, mp_stieltjes, quantile, tail_mass, AtomSpectrum, ImplicitSolver, ShapeRatios,
    SolverOptions,
};
use overlapkit::Mat;

struct Outcome {
    pass: bool,
    detail: String,
}

type Criterion = (&'static str, fn() -> Outcome);

fn fig_ratios() -> ShapeRatios {
    ShapeRatios::new(0.9, 0.4, 0.8, 3.0).unwrap()
}

fn fig_dims() -> Dims {
    Dims::from_ratios(300, &fig_ratios()).unwrap()
}

/// Limit eigenvalue for the 1-based index `i` of `len` in descending order.
fn index_point(spec: &overlapkit::spectral::MpSpec, i: usize, len: usize) -> f64 {
    quantile(spec, (i as f64 - 0.5) / len as f64)
}

fn figure_one() -> Outcome {
    let r = fig_ratios();
    let dims = fig_dims();
    let spec = MatrixSpec::zero(dims);
    let (rho, rhot) = (r.rho_spec().unwrap(), r.rhot_spec().unwrap());

    let ys: Vec<f64> = (0..15).map(|k| 0.08 + 0.84 * k as f64 / 14.0).collect();
    let targets: Vec<Target> =
        [0.1, 0.5, 0.9].iter().flat_map(|&x| ys.iter().map(move |&y| Target::new(x, y).unwrap())).collect();
    let est = mc_rescaled_overlaps(&spec, r.t, &targets, &McConfig::new(200, 20_240_001)).unwrap();
    let (mut within, mut total) = (0, 0);
    for e in &est {
        let mu = index_point(&rhot, e.row, dims.sub_cols);
        let lam = index_point(&rho, e.col, dims.cols);
        let th = mp_overlap_triple(&r, mu, lam).unwrap();
        for (mc, theory) in [(e.v, th.vbar), (e.u, th.ubar), (e.w, th.wbar)] {
            total += 1;
            if (mc.value - theory).abs() <= 3.0 * mc.stderr {
                within += 1;
            }
        }
    }
    let frac = within as f64 / total as f64;

    // anchor: λ̄ = μ̄ = 0, averaged over a ±2 index window
    let (mu_a, lam_a) = ((r.alpha + r.beta / r.q) * r.t, (1.0 + 1.0 / r.q) * r.t);
    let anchor = Target::new(tail_mass(&rhot, mu_a), tail_mass(&rho, lam_a)).unwrap();
    let a = &mc_rescaled_overlaps(&spec, r.t, &[anchor], &McConfig::new(400, 20_240_002).with_window(2)).unwrap()[0];
    let (ev, eu) = ((a.v.value - 2.0).abs() / 2.0, (a.u.value - 2.5).abs() / 2.5);
    Outcome {
        pass: frac >= 0.9 && ev <= 0.05 && eu <= 0.05,
        detail: format!(
            "{within}/{total} channel-points within 3 SE ({:.1}%); anchor V {:.4}±{:.4} (rel err {:.2}%), U {:.4}±{:.4} (rel err {:.2}%)",
            100.0 * frac,
            a.v.value,
            a.v.stderr,
            100.0 * ev,
            a.u.value,
            a.u.stderr,
            100.0 * eu
        ),
    }
}

fn pipeline_equivalence() -> Outcome {
    let r = fig_ratios();
    let dims = fig_dims();
    let (rho, rhot) = (r.rho_spec().unwrap(), r.rhot_spec().unwrap());
    let tables = InitialOverlapTables::from_spec(&MatrixSpec::zero(dims)).unwrap();
    let model = GeneralModel::from_tables(dims.ratios(r.t).unwrap(), &tables).unwrap();
    let (peak, peakt) = (mp_density_peak(&rho).1, mp_density_peak(&rhot).1);
    let fr: Vec<f64> = (0..10).map(|k| 0.03 + 0.94 * k as f64 / 9.0).collect();
    let (mut worst, mut points, mut skipped) = (0.0f64, 0, 0);
    for &x in &fr {
        let mu = quantile(&rhot, x);
        for &y in &fr {
            let lam = quantile(&rho, y);
            if mp_density(&rho, lam) < 0.02 * peak || mp_density(&rhot, mu) < 0.02 * peakt {
                skipped += 1;
                continue;
            }
            let want = mp_overlap_triple(&r, mu, lam).unwrap();
            let got = match model.overlap_triple(mu, lam) {
                Ok(o) => o,
                Err(e) => {
                    return Outcome { pass: false, detail: format!("general pipeline failed at ({mu}, {lam}): {e}") }
                }
            };
            worst = worst
                .max((got.vbar - want.vbar).abs())
                .max((got.ubar - want.ubar).abs())
                .max((got.wbar - want.wbar).abs());
            points += 1;
        }
    }
    // the free function, once
    let (mu, lam) = (quantile(&rhot, 0.5), quantile(&rho, 0.5));
    let one = general_overlap_triple(&tables, &r, &dims, mu, lam, r.t).unwrap();
    let want = mp_overlap_triple(&r, mu, lam).unwrap();
    worst = worst.max((one.vbar - want.vbar).abs());
    Outcome {
        pass: worst <= 1e-4 && points > 0,
        detail: format!("max |general − closed form| = {worst:.2e} over {points} bulk points ({skipped} below guard)"),
    }
}

fn sum_rules() -> Outcome {
    let mut worst = 0.0f64;
    let mut cases = 0;
    let mut check = |r: &ShapeRatios, xs: &[f64]| {
        let rhot = r.rhot_spec().unwrap();
        for &x in xs {
            let (v, u) = normalization_check(r, quantile(&rhot, x), r.t).unwrap();
            worst = worst.max((v - 1.0).abs()).max((u - 1.0).abs());
        }
        worst = worst.max((kernel_row_sum(r, r.t).unwrap() - 1.0).abs());
        cases += 1;
    };
    check(&fig_ratios(), &[0.1, 0.3, 0.5, 0.7, 0.9]);
    // random parameter sets with non-empty null spaces
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_003);
    for _ in 0..20 {
        let q: f64 = rng.random_range(0.3..0.95);
        let alpha: f64 = rng.random_range(0.1..0.9);
        let beta = rng.random_range((alpha * q + 0.05).min(0.95)..0.98);
        let t = rng.random_range(0.3..5.0);
        let x = rng.random_range(0.1..0.9);
        check(&ShapeRatios::new(q, alpha, beta, t).unwrap(), &[x]);
    }
    Outcome { pass: worst <= 1e-3, detail: format!("max |sum − 1| = {worst:.2e} over {cases} parameter sets") }
}

fn burgers() -> Outcome {
    let dims = Dims::new(444, 400, 444, 400).unwrap();
    let diag: Vec<f64> = (0..400).map(|k| if k < 200 { 2.0 } else { 1.0 }).collect();
    let cases = [
        ("A=0", MatrixSpec::zero(dims), z_grid(0.0, 5.0, 0.5, 10)),
        ("two-cluster", MatrixSpec::diagonal(diag, dims).unwrap(), z_grid(0.0, 9.0, 0.5, 10)),
    ];
    let mut parts = Vec::new();
    let mut pass = true;
    for (name, spec, grid) in &cases {
        match burgers_validate(spec, 1.0, 2048, grid, 20_240_004) {
            Ok(rep) => {
                let (dev, res) = (rep.max_deviation(), rep.max_residual());
                pass &= dev <= 0.05 && res <= 1e-10;
                parts.push(format!("{name}: max dev {dev:.3e}, residual {res:.1e}, KS {:.3}", rep.ks_statistic));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("{name}: {e}"));
            }
        }
    }
    Outcome { pass, detail: parts.join("; ") }
}

fn correlation() -> Outcome {
    let dims = Dims::new(40, 30, 20, 15).unwrap();
    let rep = correlation_identity_test(&dims, 1.0, 1e-2, 10_000, 5, 20_240_005).unwrap();
    Outcome {
        pass: rep.max_deviation <= 0.05,
        detail: format!(
            "max deviation {:.4} (matched-index {:.4}) over 5⁴ grid, {} samples",
            rep.max_deviation, rep.max_diagonal_deviation, rep.samples
        ),
    }
}

fn kernel_soft() -> Outcome {
    let r = fig_ratios();
    let dims = fig_dims();
    let (rho, rhot) = (r.rho_spec().unwrap(), r.rhot_spec().unwrap());
    let targets = [
        KernelTarget::U1 { y: 0.25 },
        KernelTarget::U1 { y: 0.5 },
        KernelTarget::U1 { y: 0.75 },
        KernelTarget::U2 { x: 0.25 },
        KernelTarget::U2 { x: 0.5 },
        KernelTarget::U2 { x: 0.75 },
        KernelTarget::U3,
    ];
    let est = mc_kernel_overlaps(&MatrixSpec::zero(dims), r.t, &targets, &McConfig::new(200, 20_240_006)).unwrap();
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for (tg, e) in targets.iter().zip(&est) {
        let (label, theory) = match *tg {
            KernelTarget::U1 { y } => {
                let j = overlapkit::ensemble::montecarlo::quantile_index(y, dims.cols);
                let lam = index_point(&rho, j, dims.cols);
                (format!("U(0,λ@{y})"), mp_kernel_overlaps(&r, 1.0, lam).unwrap().u1_of_lambda)
            }
            KernelTarget::U2 { x } => {
                let i = overlapkit::ensemble::montecarlo::quantile_index(x, dims.sub_cols);
                let mu = index_point(&rhot, i, dims.sub_cols);
                (format!("U(μ@{x},0)"), mp_kernel_overlaps(&r, mu, 1.0).unwrap().u2_of_mu)
            }
            KernelTarget::U3 => ("U(0,0)".to_string(), 1.40625),
        };
        let rel = (e.value - theory).abs() / theory;
        worst = worst.max(rel);
        parts.push(format!("{label} {:.3}/{theory:.3}", e.value));
    }
    Outcome { pass: worst <= 0.15, detail: format!("max rel err {:.1}% [{}]", 100.0 * worst, parts.join(", ")) }
}

fn orthonormality_error(m: &Mat<f64>) -> f64 {
    let g = m.transpose() * m;
    let mut worst = 0.0f64;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - target).abs());
        }
    }
    worst
}

fn invariants() -> Outcome {
    let r = fig_ratios();
    let dims = fig_dims();
    let mut failures = Vec::new();

    // row sums and frame orthonormality
    let (mut row_err, mut frame_err) = (0.0f64, 0.0f64);
    for seed in 0..3u64 {
        let (x, xt) = sample_ensemble(&MatrixSpec::zero(dims), r.t, seed).unwrap();
        let full = svd_full(&x).unwrap();
        let trunc = svd_truncated(&xt, &dims).unwrap();
        for m in [&full.left, &full.right, &trunc.left, &trunc.right] {
            frame_err = frame_err.max(orthonormality_error(m));
        }
        let tab = overlap_matrices(&full, &trunc, &dims);
        for i in 0..tab.v.nrows() {
            let s: f64 = (0..tab.v.ncols()).map(|j| tab.v[(i, j)]).sum();
            row_err = row_err.max((s - 1.0).abs());
        }
        for i in 0..tab.u.nrows() {
            let s: f64 = (0..tab.u.ncols()).map(|j| tab.u[(i, j)]).sum();
            row_err = row_err.max((s - 1.0).abs());
        }
    }
    if row_err > 1e-10 {
        failures.push(format!("row sums off by {row_err:.1e}"));
    }
    if frame_err > 1e-10 {
        failures.push(format!("frames off by {frame_err:.1e}"));
    }

    // determinism across thread counts
    let targets = [Target::new(0.5, 0.5).unwrap(), Target::new(0.2, 0.7).unwrap()];
    let run =
        |threads: usize| {
            rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| {
                mc_rescaled_overlaps(&MatrixSpec::zero(dims), r.t, &targets, &McConfig::new(16, 7)).unwrap()
            })
        };
    let (one, four) = (run(1), run(4));
    let same = one.iter().zip(&four).all(|(a, b)| {
        a.v.value.to_bits() == b.v.value.to_bits()
            && a.u.value.to_bits() == b.u.value.to_bits()
            && a.w.value.to_bits() == b.w.value.to_bits()
    });
    if !same {
        failures.push("results differ between 1 and 4 threads".into());
    }

    // α = β = 1
    let full_trunc = ShapeRatios::new(0.9, 1.0, 1.0, 3.0).unwrap();
    let rho = full_trunc.rho_spec().unwrap();
    for (x, y) in [(0.2, 0.6), (0.5, 0.9), (0.8, 0.3)] {
        let o = mp_overlap_triple(&full_trunc, quantile(&rho, x), quantile(&rho, y)).unwrap();
        if o.vbar.abs() > 1e-12 {
            failures.push(format!("V̄ = {} with α = β = 1", o.vbar));
        }
    }

    // Herglotz: Im G and Im z have opposite signs
    let rho = r.rho_spec().unwrap();
    let solver = ImplicitSolver::new(AtomSpectrum::point_mass_at_zero(), r.full_family(), SolverOptions::default());
    let diag_solver =
        ImplicitSolver::new(AtomSpectrum::new(vec![(1.0, 0.5), (4.0, 0.5)]), r.full_family(), SolverOptions::default());
    let mut herglotz_bad = 0;
    for k in 0..40 {
        let re = -2.0 + 16.0 * k as f64 / 39.0;
        for im in [1e-3, 0.1, 1.0, 10.0] {
            for z in [Complex64::new(re, im), Complex64::new(re, -im)] {
                let vals =
                    [mp_stieltjes(&rho, z).unwrap(), solver.solve(z, r.t).unwrap(), diag_solver.solve(z, r.t).unwrap()];
                herglotz_bad +=
                    vals.iter().filter(|g| (g.im * z.im).partial_cmp(&0.0) != Some(std::cmp::Ordering::Less)).count();
            }
        }
    }
    if herglotz_bad > 0 {
        failures.push(format!("{herglotz_bad} Stieltjes values violate the sign condition"));
    }

    Outcome {
        pass: failures.is_empty(),
        detail: if failures.is_empty() {
            format!("row sums {row_err:.1e}, frames {frame_err:.1e}, thread-count determinism, α=β=1 zeros, Herglotz on 960 values")
        } else {
            failures.join("; ")
        },
    }
}

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("1 figure-1 reproduction (A=0, M=300)", figure_one),
        ("2 general pipeline vs closed form", pipeline_equivalence),
        ("3 normalization sum rules", sum_rules),
        ("4 Burgers / implicit solver", burgers),
        ("5 correlation identity", correlation),
        ("6 kernel overlap soft checks", kernel_soft),
        ("7 invariant suite", invariants),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let out = run();
        let tag = if out.pass { "PASS" } else { "FAIL" };
        println!("[{tag}] criterion {name}: {} ({:.1}s)", out.detail, start.elapsed().as_secs_f64());
        if !out.pass {
            failed += 1;
        }
    }
    println!("acceptance: {} passed, {failed} failed", 7 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
