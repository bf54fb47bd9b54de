//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line with the measured numbers. Tests share a lock so the
//! timing-sensitive criteria run serialized.

use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use gbs_core::bench::{fit_scaling, time_torontonian, AnchorModel};
use gbs_core::kernels::KernelConfig;
use gbs_core::num::C;
use gbs_core::presets;
use gbs_core::probability::{
    click_from_fock, click_probability, enumerate_fock_patterns, fock_distribution, fock_oracle,
    fock_probability, full_distribution, silent_probability, state_space_dimension, ClickPattern,
};
use gbs_core::samplers::{
    chain_rule_sampler, distinguishable_mock_sampler, enumerate_sampler, mcmc_sampler, tvd_probs,
    thermal_mock_sampler, uniform_band_sampler, McmcOptions,
};
use gbs_core::state::{ExperimentSpec, GaussianState, SourceKind, SourceSpec};
use gbs_core::validation::{
    band_conditional, band_mass, click_histogram_compare, fidelity_tvd, haar_checks,
    haar_generate, heavy_median, hog_test, probability_curve, two_point_empirical_all,
    CorrelationOverlay,
};

static GATE: Mutex<()> = Mutex::new(());

fn lock() -> std::sync::MutexGuard<'static, ()> {
    GATE.lock().unwrap_or_else(|e| e.into_inner())
}

fn pass(criterion: &str, details: &str) {
    println!("ACCEPTANCE {criterion}: PASS ({details})");
}

#[test]
fn criterion_01_closed_form_probabilities() {
    let _g = lock();
    let t0 = Instant::now();
    for &r in &[0.0f64, 0.5, 1.0, 1.5] {
        let smss = GaussianState::vacuum(1).unwrap().with_smss(0, r, 0.7).unwrap();
        let p0 = click_probability(&smss, &ClickPattern::silent(1)).unwrap();
        assert!(
            (p0 - 1.0 / r.cosh()).abs() < 1e-10,
            "SMSS vacuum probability at r={r}: {p0}"
        );

        let nbar = r.sinh().powi(2);
        let thermal = GaussianState::vacuum(1).unwrap().with_thermal(0, nbar).unwrap();
        let p1 = click_probability(&thermal, &ClickPattern::parse("1").unwrap()).unwrap();
        assert!(
            (p1 - nbar / (nbar + 1.0)).abs() < 1e-10,
            "thermal click probability at nbar={nbar}: {p1}"
        );

        let tmss = GaussianState::vacuum(2).unwrap().with_tmss(0, 1, r, 1.1).unwrap();
        let p00 = click_probability(&tmss, &ClickPattern::silent(2)).unwrap();
        assert!(
            (p00 - 1.0 / r.cosh().powi(2)).abs() < 1e-10,
            "TMSS double-vacuum probability at r={r}: {p00}"
        );
    }
    let dt = t0.elapsed().as_secs_f64();
    assert!(dt < 1.0, "closed forms took {dt:.3} s, budget 1 s");
    pass(
        "01 closed-form probabilities",
        &format!("r in {{0, 0.5, 1.0, 1.5}} all within 1e-10, {dt:.3} s"),
    );
}

/// Seeded random lossy device on up to `m_max` modes.
fn random_lossy_spec(seed: u64, m_max: usize) -> ExperimentSpec<f64> {
    use rand::Rng as _;
    let mut rng = gbs_core::rng::from_seed(seed);
    let m = 2 + (rng.random::<u64>() % (m_max as u64 - 1)) as usize;
    let mut sources = Vec::new();
    let mut mode_map = Vec::new();
    let mut next_mode = 0usize;
    while next_mode < m {
        let roll = rng.random::<f64>();
        let eta_c = 0.6 + 0.4 * rng.random::<f64>();
        if roll < 0.5 && next_mode + 1 < m {
            sources.push(SourceSpec::tmss(
                0.3 + 0.9 * rng.random::<f64>(),
                std::f64::consts::TAU * rng.random::<f64>(),
                eta_c,
            ));
            mode_map.push(vec![next_mode, next_mode + 1]);
            next_mode += 2;
        } else if roll < 0.75 {
            sources.push(SourceSpec::smss(
                0.3 + 0.8 * rng.random::<f64>(),
                std::f64::consts::TAU * rng.random::<f64>(),
                eta_c,
            ));
            mode_map.push(vec![next_mode]);
            next_mode += 1;
        } else if roll < 0.9 {
            sources.push(SourceSpec::thermal(rng.random::<f64>(), eta_c));
            mode_map.push(vec![next_mode]);
            next_mode += 1;
        } else {
            next_mode += 1; // leave the mode empty
        }
    }
    let eta_net: Vec<f64> = (0..m).map(|_| 0.5 + 0.5 * rng.random::<f64>()).collect();
    let eta_det: Vec<f64> = (0..m).map(|_| 0.5 + 0.5 * rng.random::<f64>()).collect();
    ExperimentSpec::new(
        sources,
        mode_map,
        haar_generate::<f64>(m, seed ^ 0x5eed),
        eta_net,
        eta_det,
    )
    .expect("random spec is valid")
}

#[test]
fn criterion_02_normalization_of_random_lossy_devices() {
    let _g = lock();
    let t0 = Instant::now();
    let mut worst: f64 = 0.0;
    for seed in 0..100u64 {
        let spec = random_lossy_spec(seed, 10);
        let dist = full_distribution(&spec.build().unwrap()).unwrap();
        let deviation = (dist.normalization() - 1.0).abs();
        worst = worst.max(deviation);
        assert!(
            deviation <= 1e-9,
            "spec seed {seed} (m={}): normalization off by {deviation:e}",
            spec.modes()
        );
    }
    let dt = t0.elapsed().as_secs_f64();
    assert!(dt < 60.0, "normalization sweep took {dt:.1} s, budget 60 s");
    pass(
        "02 normalization",
        &format!("100 random lossy specs, worst deviation {worst:.2e}, {dt:.1} s"),
    );
}

/// Small lossless devices for the exact cross-formalism checks.
fn lossless_specs() -> Vec<ExperimentSpec<f64>> {
    let bs = {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut u = gbs_core::linalg::CMatrix::zeros(2, 2);
        u[(0, 0)] = C::new(s, 0.0);
        u[(0, 1)] = C::new(0.0, s);
        u[(1, 0)] = C::new(0.0, s);
        u[(1, 1)] = C::new(s, 0.0);
        u
    };
    vec![
        ExperimentSpec::new(
            vec![SourceSpec::smss(0.5, 0.3, 1.0)],
            vec![vec![0]],
            gbs_core::linalg::CMatrix::identity(1),
            vec![1.0],
            vec![1.0],
        )
        .unwrap(),
        ExperimentSpec::new(
            vec![SourceSpec::tmss(0.5, 0.8, 1.0)],
            vec![vec![0, 1]],
            bs,
            vec![1.0; 2],
            vec![1.0; 2],
        )
        .unwrap(),
        ExperimentSpec::new(
            vec![
                SourceSpec::tmss(0.45, 0.2, 1.0),
                SourceSpec::smss(0.4, 1.0, 1.0),
            ],
            vec![vec![0, 1], vec![2]],
            haar_generate::<f64>(3, 33),
            vec![1.0; 3],
            vec![1.0; 3],
        )
        .unwrap(),
    ]
}

#[test]
fn criterion_03_torontonian_equals_truncated_hafnian_sums() {
    let _g = lock();
    let t0 = Instant::now();
    let truncation = 12;
    let mut worst: f64 = 0.0;
    for spec in lossless_specs() {
        let state = spec.build().unwrap();
        let m = spec.modes();
        let fock = fock_distribution(&state, truncation).unwrap();
        let clicks = click_from_fock(&fock);
        for idx in 0..(1u64 << m) {
            let pattern = ClickPattern::from_index(m, idx);
            let exact = click_probability(&state, &pattern).unwrap();
            let truncated = clicks.get(&pattern).copied().unwrap_or(0.0);
            let diff = (exact - truncated).abs();
            worst = worst.max(diff);
            assert!(
                diff < 1e-4,
                "m={m} pattern {pattern}: Torontonian {exact} vs Hafnian sum {truncated}"
            );
        }
    }
    let dt = t0.elapsed().as_secs_f64();
    assert!(dt < 60.0, "hafnian sums took {dt:.1} s, budget 60 s");
    pass(
        "03 infinite sum of Hafnians",
        &format!("truncation 12 photons, worst click gap {worst:.2e}, {dt:.1} s"),
    );
}

#[test]
fn criterion_04_dual_formalism_oracle() {
    let _g = lock();
    let t0 = Instant::now();
    let mut worst: f64 = 0.0;
    let mut checked = 0usize;
    for spec in lossless_specs() {
        let state = spec.build().unwrap();
        let m = spec.modes();
        for pattern in enumerate_fock_patterns(m, 6) {
            let hafnian_path = fock_probability(&state, &pattern).unwrap();
            let oracle = fock_oracle(&spec, &pattern, 10).unwrap();
            let diff = (hafnian_path - oracle.probability).abs();
            worst = worst.max(diff);
            checked += 1;
            assert!(
                diff < 1e-6,
                "m={m} occupations {:?}: hafnian {hafnian_path} vs permanent {}",
                pattern.occupations,
                oracle.probability
            );
        }
    }
    let dt = t0.elapsed().as_secs_f64();
    assert!(dt < 60.0, "dual-formalism check took {dt:.1} s, budget 60 s");
    pass(
        "04 dual-formalism oracle",
        &format!("{checked} patterns up to 6 photons, worst gap {worst:.2e}, {dt:.1} s"),
    );
}

#[test]
fn criterion_05_sampler_cross_agreement() {
    let _g = lock();
    let t0 = Instant::now();
    let spec = presets::reference_m8::<f64>();
    let state = spec.build().unwrap();
    let hash = spec.hash();
    let n = 100_000u64;
    let enumerated = enumerate_sampler(&state, &hash, n, 501).unwrap();
    let chained = chain_rule_sampler(&state, &hash, n, 502).unwrap();
    let mcmc = mcmc_sampler(&spec, n, 503, McmcOptions::default()).unwrap();
    let pe = enumerated.empirical_probs();
    let pc = chained.empirical_probs();
    let pm = mcmc.empirical_probs();
    let tvd_ec = tvd_probs(&pe, &pc);
    let tvd_em = tvd_probs(&pe, &pm);
    let tvd_cm = tvd_probs(&pc, &pm);
    for (name, tvd) in [("enum-chain", tvd_ec), ("enum-mcmc", tvd_em), ("chain-mcmc", tvd_cm)] {
        assert!(tvd <= 0.05, "{name} TVD {tvd}");
    }
    let calls: f64 = mcmc.meta.stats["kernel_calls_per_sample"].parse().unwrap();
    let dt = t0.elapsed().as_secs_f64();
    assert!(dt < 600.0, "sampler agreement took {dt:.1} s, budget 600 s");
    pass(
        "05 sampler correctness",
        &format!(
            "pairwise TVD {tvd_ec:.4}/{tvd_em:.4}/{tvd_cm:.4} at 1e5 samples, \
             {calls:.1} kernel calls per MCMC sample, {dt:.1} s"
        ),
    );
}

#[test]
fn criterion_06_easy_regime_fidelity_and_distance() {
    let _g = lock();
    let spec = presets::easy_m6::<f64>();
    let state = spec.build().unwrap();
    let exact = full_distribution(&state).unwrap();
    let samples = enumerate_sampler(&state, &spec.hash(), 100_000, 601).unwrap();
    let (f, d) = fidelity_tvd(&samples.empirical_probs(), exact.probs()).unwrap();
    assert!(f >= 0.99, "fidelity {f}");
    assert!(d <= 0.11, "total variation distance {d}");
    pass(
        "06 easy-regime fidelity/distance",
        &format!("F = {f:.5} (>= 0.99), D = {d:.5} (<= 0.11) at 1e5 samples"),
    );
}

#[test]
fn criterion_07_state_space_dimension() {
    let _g = lock();
    let full = state_space_dimension(100, 100).unwrap();
    assert_eq!(full.to_string(), "1267650600228229401496703205376");
    let partial = state_space_dimension(100, 76).unwrap();
    let partial_f: f64 = partial.to_string().parse().unwrap();
    let full_f = 2.0f64.powi(100);
    let rel = (full_f - partial_f).abs() / full_f;
    assert!(rel < 1e-6, "relative gap {rel:e}");
    assert!(partial_f > 1.26e30 && partial_f < 1.28e30);
    pass(
        "07 output state-space dimension",
        &format!("sum to 76 clicks = {partial_f:.6e}, within {rel:.1e} of 2^100"),
    );
}

#[test]
fn criterion_08_hypothesis_separation_analogs() {
    let _g = lock();
    let t0 = Instant::now();

    // click-number histogram peaks on the 10-mode device
    let spec10 = presets::validation_m10::<f64>();
    let state10 = spec10.build().unwrap();
    let hash10 = spec10.hash();
    let n_hist = 500_000u64;
    let ideal = enumerate_sampler(&state10, &hash10, n_hist, 801).unwrap();
    let thermal = thermal_mock_sampler(&spec10, n_hist, 802).unwrap();
    let disting = distinguishable_mock_sampler(&spec10, n_hist, 803).unwrap();
    let compare = click_histogram_compare(&[
        ("ideal", &ideal),
        ("thermal", &thermal),
        ("distinguishable", &disting),
    ])
    .unwrap();
    let shift_thermal = compare.peak_shift(0, 1);
    let shift_disting = compare.peak_shift(0, 2);
    assert!(
        shift_thermal >= 1,
        "thermal peak shift {shift_thermal} (peaks {:?})",
        compare.peaks
    );
    assert!(
        shift_disting >= 1,
        "distinguishable peak shift {shift_disting} (peaks {:?})",
        compare.peaks
    );

    // two-point correlation histograms separate (and match theory)
    let n_cij = 100_000u64;
    let ideal_c = enumerate_sampler(&state10, &hash10, n_cij, 811).unwrap();
    let thermal_c = thermal_mock_sampler(&spec10, n_cij, 812).unwrap();
    let disting_c = distinguishable_mock_sampler(&spec10, n_cij, 813).unwrap();
    let mut overlay = CorrelationOverlay::new(50);
    let mut theory = Vec::new();
    for i in 0..10 {
        for j in (i + 1)..10 {
            theory.push(gbs_core::probability::two_point_theory(&state10, i, j).unwrap());
        }
    }
    overlay.push("theory", theory);
    overlay.push("ideal", two_point_empirical_all(&ideal_c).unwrap());
    overlay.push("thermal", two_point_empirical_all(&thermal_c).unwrap());
    overlay.push("distinguishable", two_point_empirical_all(&disting_c).unwrap());
    let z_self = overlay.separation_z(1, 0);
    let z_thermal = overlay.separation_z(1, 2);
    let z_disting = overlay.separation_z(1, 3);
    assert!(z_self < 4.0, "ideal samples vs theory z = {z_self}");
    assert!(z_thermal > 5.0, "thermal C_ij separation z = {z_thermal}");
    assert!(z_disting > 5.0, "distinguishable C_ij separation z = {z_disting}");

    // heavy output generation on the 12-mode device, 200-sample batches
    let spec12 = presets::validation_m12::<f64>();
    let state12 = spec12.build().unwrap();
    let dist12 = full_distribution(&state12).unwrap();
    let thermal12 = full_distribution(&spec12.to_thermal_hypothesis().build().unwrap()).unwrap();
    let band = presets::VALIDATION_BAND;
    let zi = band_mass(&dist12, band);
    let zt = band_mass(&thermal12, band);
    let p_ideal = |p: &ClickPattern| Ok(dist12.prob(p) / zi);
    let p_alt = |p: &ClickPattern| Ok(thermal12.prob(p) / zt);
    let ideal_batch = enumerate_sampler(&state12, &spec12.hash(), 400, 821)
        .unwrap()
        .filter_band(band.0, band.1)
        .subsample(200, 822);
    let thermal_batch = thermal_mock_sampler(&spec12, 400, 823)
        .unwrap()
        .filter_band(band.0, band.1)
        .subsample(200, 824);
    assert_eq!(ideal_batch.total(), 200);
    assert_eq!(thermal_batch.total(), 200);
    let median = heavy_median(&ideal_batch, p_ideal).unwrap();
    let hog_ideal = hog_test(&ideal_batch, band, p_ideal, p_alt, median).unwrap();
    let hog_thermal = hog_test(&thermal_batch, band, p_ideal, p_alt, median).unwrap();
    let conf_ideal = hog_ideal.final_confidence();
    let conf_thermal = hog_thermal.final_confidence();
    assert!(conf_ideal >= 0.99, "ideal-batch HOG confidence {conf_ideal}");
    assert!(conf_thermal <= 0.01, "thermal-batch HOG confidence {conf_thermal}");

    // probability curve rejects uniform samples and accepts ideal ones
    let band_dist = band_conditional(&dist12, band).unwrap();
    let ideal_mapped = gbs_core::samplers::sample_from_distribution(
        &band_dist,
        3000,
        831,
        gbs_core::samplers::SampleMeta::new(
            gbs_core::samplers::ModelTag::IdealEnum,
            831,
            String::new(),
            3000,
        ),
    );
    let curve_ideal = probability_curve(&dist12, &ideal_mapped, band, 3000, 50, 832).unwrap();
    assert!(
        curve_ideal.self_consistency_p > 0.01,
        "ideal batch curve p {}",
        curve_ideal.self_consistency_p
    );
    assert!(
        curve_ideal.uniform_separation_z > 3.0,
        "ideal-uniform mean separation z {}",
        curve_ideal.uniform_separation_z
    );
    let uniform_batch = uniform_band_sampler(12, band.0, band.1, 3000, 833).unwrap();
    let curve_uniform = probability_curve(&dist12, &uniform_batch, band, 3000, 50, 834).unwrap();
    assert!(
        curve_uniform.self_consistency_p < 0.01,
        "uniform batch accepted at p {}",
        curve_uniform.self_consistency_p
    );

    let dt = t0.elapsed().as_secs_f64();
    pass(
        "08 hypothesis-separation analogs",
        &format!(
            "peaks {:?} (shifts {shift_thermal}/{shift_disting}), C_ij z {z_thermal:.1}/{z_disting:.1}, \
             HOG {conf_ideal:.4}/{conf_thermal:.1e}, curve p {:.3} vs {:.1e}, {dt:.1} s",
            compare.peaks, curve_ideal.self_consistency_p, curve_uniform.self_consistency_p
        ),
    );
}

#[test]
fn criterion_09_kernel_scaling_and_anchor() {
    let _g = lock();
    let t0 = Instant::now();
    let spec = presets::synthetic_full100::<f64>();
    let state = spec.build().unwrap();
    let (k_lo, k_hi) = (16usize, 24usize);
    let records =
        time_torontonian(&state, k_lo, k_hi, 901, 3, &KernelConfig::default()).unwrap();
    let fit = fit_scaling(&records).unwrap();
    let ratio = fit.doubling_ratio();
    let r2 = fit.r_squared.unwrap_or(0.0);
    assert!(
        (1.8..=2.6).contains(&ratio),
        "fitted doubling ratio {ratio}"
    );
    assert!(r2 >= 0.95, "fit r^2 {r2}");

    // Published two-point anchor (~0.03 s at 30 clicks, ~2 days at 50):
    // normalize its window to ours under the shared 2^k k^3 work law, carry
    // the one-significant-figure rounding band, and require overlap with the
    // fitted 95% confidence interval.
    let anchor = AnchorModel::default();
    let (fit_lo, fit_hi) = fit.ratio_ci95();
    let (anchor_lo, anchor_hi) = anchor.ratio_bounds_in_window(k_lo as f64, k_hi as f64);
    assert!(
        anchor_lo <= fit_hi && fit_lo <= anchor_hi,
        "anchor band {anchor_lo:.3}..{anchor_hi:.3} (from {:.3}) misses fitted CI {fit_lo:.3}..{fit_hi:.3}",
        anchor.doubling_ratio()
    );

    let dt = t0.elapsed().as_secs_f64();
    assert!(dt < 1800.0, "kernel scaling took {dt:.0} s, budget 1800 s");
    pass(
        "09 kernel scaling",
        &format!(
            "ratio {ratio:.3} (CI {fit_lo:.3}..{fit_hi:.3}), r^2 {r2:.4}, \
             anchor 2.18 -> window {anchor_lo:.2}..{anchor_hi:.2}, {dt:.0} s"
        ),
    );
}

#[test]
fn criterion_10_haar_validation() {
    let _g = lock();
    let u = haar_generate::<f64>(100, 1001);
    let report = haar_checks(&u, 5000);
    assert!(
        report.unitarity_residual <= 1e-12,
        "unitarity residual {:e}",
        report.unitarity_residual
    );
    assert_eq!(report.n_elements, 5000);
    assert!(report.amplitude_p > 0.01, "amplitude KS p {}", report.amplitude_p);
    assert!(report.phase_p > 0.01, "phase KS p {}", report.phase_p);
    pass(
        "10 Haar validation",
        &format!(
            "residual {:.2e}, amplitude p {:.3}, phase p {:.3} over {} elements",
            report.unitarity_residual, report.amplitude_p, report.phase_p, report.n_elements
        ),
    );
}

fn run_gbs(args: &[&str], extra: &[&Path]) -> std::process::Output {
    let mut cmd = std::process::Command::new(env!("CARGO_BIN_EXE_gbs"));
    cmd.args(args);
    for path in extra {
        cmd.arg(path);
    }
    cmd.output().expect("gbs runs")
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.path().is_file())
        .map(|e| {
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

#[test]
fn criterion_11_byte_identical_reruns() {
    let _g = lock();
    let tmp = tempfile::tempdir().unwrap();
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let spec6 = configs.join("easy_m6.spec");
    let spec10 = configs.join("validation_m10.spec");
    let spec100 = configs.join("synthetic_full100.spec");

    let mut identical_pairs = 0usize;
    let mut rerun = |label: &str, build: &dyn Fn(&Path) -> std::process::Output| {
        let da = tmp.path().join(format!("{label}_a"));
        let db = tmp.path().join(format!("{label}_b"));
        for dir in [&da, &db] {
            let out = build(dir);
            assert!(
                out.status.success(),
                "{label}: {}",
                String::from_utf8_lossy(&out.stderr)
            );
        }
        let ba = dir_bytes(&da);
        let bb = dir_bytes(&db);
        assert_eq!(ba, bb, "{label} reruns differ");
        identical_pairs += 1;
    };

    rerun("simulate", &|dir| {
        run_gbs(
            &["simulate", "--seed", "11", "--spec", spec6.to_str().unwrap(), "--out"],
            &[dir],
        )
    });
    rerun("sample", &|dir| {
        run_gbs(
            &[
                "sample",
                "--seed",
                "12",
                "--samples",
                "5000",
                "--clicks-band",
                "6..10",
                "--spec",
                spec10.to_str().unwrap(),
                "--out",
            ],
            &[dir],
        )
    });
    rerun("haar", &|dir| {
        run_gbs(&["haar", "--m", "64", "--seed", "13", "--out"], &[dir])
    });

    // validate: fixed sample inputs, fixed seed
    let sdir = tmp.path().join("validate_inputs");
    let out = run_gbs(
        &[
            "sample",
            "--seed",
            "14",
            "--samples",
            "20000",
            "--clicks-band",
            "6..10",
            "--spec",
            spec10.to_str().unwrap(),
            "--out",
        ],
        &[&sdir],
    );
    assert!(out.status.success());
    let sample_files: Vec<PathBuf> = ["ideal", "thermal", "distinguishable", "uniform"]
        .iter()
        .map(|n| sdir.join(format!("{n}.samples")))
        .collect();
    rerun("validate", &|dir| {
        let refs: Vec<&Path> = sample_files.iter().map(|p| p.as_path()).collect();
        let mut args = vec![
            "validate",
            "--seed",
            "15",
            "--clicks-band",
            "6..10",
            "--spec",
        ];
        let spec_str = spec10.to_str().unwrap();
        args.push(spec_str);
        args.push("--out");
        let mut all: Vec<&Path> = vec![dir];
        all.extend(refs);
        run_gbs(&args, &all)
    });

    // bench analysis path: fixed timing fixture in, cost table out
    let fixture = tmp.path().join("bench_fixture.csv");
    let mut csv = String::from("k,median_seconds,min,max,value,error_estimate\n");
    for k in 14..=22 {
        let t = 2.2f64.powi(k) * 1e-7;
        csv.push_str(&format!("{k},{t},{t},{t},1.0,1e-12\n"));
    }
    std::fs::write(&fixture, csv).unwrap();
    rerun("bench_analysis", &|dir| {
        run_gbs(
            &[
                "bench",
                "--seed",
                "16",
                "--bench-input",
                fixture.to_str().unwrap(),
                "--cost-model",
                "anchor",
                "--spec",
                spec100.to_str().unwrap(),
                "--out",
            ],
            &[dir],
        )
    });

    pass(
        "11 reproducibility",
        &format!("{identical_pairs} command pairs byte-identical under fixed seeds"),
    );
}

#[test]
fn spec_invariants_spot_checks() {
    // cross-module invariants that back the criteria: silent-pattern parity
    // for lossless pair sources and mock structural independence
    let _g = lock();
    let spec = ExperimentSpec::new(
        vec![SourceSpec::tmss(0.9, 0.4, 1.0)],
        vec![vec![0, 1]],
        haar_generate::<f64>(4, 71),
        vec![1.0; 4],
        vec![1.0; 4],
    )
    .unwrap();
    let state = spec.build().unwrap();
    let dist = full_distribution(&state).unwrap();
    for idx in 0..(1u64 << 4) {
        if idx.count_ones() == 1 {
            let p = dist.probs()[idx as usize];
            assert!(
                p <= 1e-12,
                "lossless single-TMSS device produced a lone click: {p:e}"
            );
        }
    }
    // mocks accept vacuum and thermal sources too
    let spec_mixed = ExperimentSpec::new(
        vec![
            SourceSpec::thermal(0.8, 0.9),
            SourceSpec::smss(0.7, 0.1, 0.9),
        ],
        vec![vec![0], vec![2]],
        haar_generate::<f64>(3, 72),
        vec![0.9; 3],
        vec![0.9; 3],
    )
    .unwrap();
    assert_eq!(spec_mixed.sources[0].kind, SourceKind::Thermal);
    let set = distinguishable_mock_sampler(&spec_mixed, 2000, 73).unwrap();
    assert_eq!(set.total(), 2000);
    let silent = silent_probability(&spec_mixed.build().unwrap(), &[0, 1, 2]).unwrap();
    assert!(silent > 0.0 && silent < 1.0);
}
