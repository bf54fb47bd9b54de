//! Command implementations.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use gbs_core::bench::{self, AnchorModel};
use gbs_core::probability::{self, ClickPattern, Distribution};
use gbs_core::samplers::{self, ModelTag, SampleSet};
use gbs_core::state::{self, ExperimentSpec};
use gbs_core::validation::{self, ValidationReport};

use crate::config::{IdealSampler, RunConfig};
use crate::errors::AppError;
use crate::svg;
use crate::{Cli, Command};

type Spec = ExperimentSpec<f64>;

fn stamp(spec_hash: &str, seed: u64) -> String {
    format!(
        "#spec_hash={spec_hash}\n#seed={seed}\n#version={}\n",
        env!("CARGO_PKG_VERSION")
    )
}

fn write_stamped(path: &Path, stamp: &str, body: &str) -> Result<(), AppError> {
    let mut text = String::with_capacity(stamp.len() + body.len());
    text.push_str(stamp);
    text.push_str(body);
    std::fs::write(path, text)?;
    Ok(())
}

pub fn run(cli: Cli) -> Result<(), AppError> {
    let seed = cli.seed;
    let config_path = cli.config.as_deref();
    match cli.command {
        Command::Simulate { spec, out } => {
            let cfg = RunConfig::resolve(config_path, cli.kernel_max_clicks, None)?;
            cmd_simulate(&spec, &out, seed, &cfg)
        }
        Command::Sample {
            spec,
            out,
            samples,
            models,
            clicks_band,
            ideal_sampler,
        } => {
            let cfg =
                RunConfig::resolve(config_path, cli.kernel_max_clicks, clicks_band.as_deref())?;
            let ideal: IdealSampler = ideal_sampler.parse().map_err(AppError::Config)?;
            cmd_sample(&spec, &out, samples, &models, ideal, seed, &cfg)
        }
        Command::Validate {
            spec,
            out,
            samples,
            clicks_band,
        } => {
            let cfg =
                RunConfig::resolve(config_path, cli.kernel_max_clicks, clicks_band.as_deref())?;
            cmd_validate(&spec, &out, &samples, seed, &cfg)
        }
        Command::Bench {
            spec,
            out,
            kmin,
            kmax,
            reps,
            bench_input,
            cost_model,
            hist,
            tps,
        } => {
            let cfg = RunConfig::resolve(config_path, cli.kernel_max_clicks, None)?;
            cmd_bench(
                &spec,
                &out,
                kmin,
                kmax,
                reps,
                bench_input.as_deref(),
                &cost_model,
                &hist,
                tps,
                seed,
                &cfg,
            )
        }
        Command::Haar { m, out } => cmd_haar(m, &out, seed),
        Command::Report { dir } => cmd_report(&dir),
    }
}

// ---------------------------------------------------------------------------

fn load_spec(path: &Path) -> Result<Spec, AppError> {
    state::load_spec::<f64>(path).map_err(|e| match e {
        state::StateError::Io(io) => AppError::Io(format!("{}: {io}", path.display())),
        other => AppError::Config(format!("{}: {other}", path.display())),
    })
}

fn cmd_simulate(
    spec_paths: &[PathBuf],
    out: &Path,
    seed: u64,
    cfg: &RunConfig,
) -> Result<(), AppError> {
    std::fs::create_dir_all(out)?;
    for path in spec_paths {
        let spec = load_spec(path)?;
        let m = spec.modes();
        if m > probability::FULL_DISTRIBUTION_LIMIT {
            return Err(AppError::Scale(format!(
                "{}: {m} modes exceed the exhaustive-enumeration limit {}; use `gbs sample`",
                path.display(),
                probability::FULL_DISTRIBUTION_LIMIT
            )));
        }
        let state = spec.build()?;
        let dist = probability::full_distribution_with(&state, cfg.kernel.clone())?;
        let normalization = dist.normalization();
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "spec".into());
        let stamp = stamp(&spec.hash(), seed);
        write_stamped(
            &out.join(format!("{stem}.distribution.csv")),
            &stamp,
            &dist.to_csv(),
        )?;
        let mut norm_csv = String::from("name,value\n");
        norm_csv.push_str(&format!("modes,{m}\n"));
        norm_csv.push_str(&format!("patterns,{}\n", dist.probs().len()));
        norm_csv.push_str(&format!("normalization,{normalization}\n"));
        norm_csv.push_str(&format!("deviation,{:e}\n", (normalization - 1.0).abs()));
        write_stamped(
            &out.join(format!("{stem}.normalization.csv")),
            &stamp,
            &norm_csv,
        )?;
        println!(
            "simulate {stem}: m={m}, {} patterns, normalization deviation {:.3e}",
            dist.probs().len(),
            (normalization - 1.0).abs()
        );
    }
    Ok(())
}

// ---------------------------------------------------------------------------

/// Deterministic per-model seed offsets.
const SEED_IDEAL: u64 = 0;
const SEED_THERMAL: u64 = 1;
const SEED_DISTINGUISHABLE: u64 = 2;
const SEED_UNIFORM: u64 = 3;

fn derive_band(spec: &Spec, cfg: &RunConfig) -> Result<(usize, usize), AppError> {
    if let Some(band) = cfg.band {
        let m = spec.modes();
        if band.1 > m {
            return Err(AppError::config(format!(
                "click band {}..{} exceeds the {m}-mode device",
                band.0, band.1
            )));
        }
        return Ok(band);
    }
    // centre a five-click window on the expected click number
    let state = spec.build()?;
    let m = spec.modes();
    let mut expected = 0.0f64;
    for j in 0..m {
        expected += 1.0 - probability::silent_probability(&state, &[j])?;
    }
    let mid = expected.round() as usize;
    let lo = mid.saturating_sub(2).max(1);
    let hi = (mid + 2).min(m);
    Ok((lo.min(hi), hi))
}

fn cmd_sample(
    spec_path: &Path,
    out: &Path,
    n_samples: u64,
    models: &str,
    ideal: IdealSampler,
    seed: u64,
    cfg: &RunConfig,
) -> Result<(), AppError> {
    let spec = load_spec(spec_path)?;
    std::fs::create_dir_all(out)?;
    let hash = spec.hash();
    for model in models.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let set = match model {
            "ideal" => {
                let state = spec.build()?;
                let choice = match ideal {
                    IdealSampler::Auto => {
                        if spec.modes() <= probability::FULL_DISTRIBUTION_LIMIT {
                            IdealSampler::Enumerate
                        } else {
                            IdealSampler::Chain
                        }
                    }
                    ref other => other.clone(),
                };
                match choice {
                    IdealSampler::Enumerate => samplers::enumerate_sampler_with(
                        &state,
                        &hash,
                        n_samples,
                        seed.wrapping_add(SEED_IDEAL),
                        cfg.kernel.clone(),
                    )?,
                    IdealSampler::Chain => samplers::chain_rule_sampler_with(
                        &state,
                        &hash,
                        n_samples,
                        seed.wrapping_add(SEED_IDEAL),
                        cfg.kernel.clone(),
                    )?,
                    IdealSampler::Mcmc => samplers::mcmc_sampler(
                        &spec,
                        n_samples,
                        seed.wrapping_add(SEED_IDEAL),
                        cfg.mcmc.clone(),
                    )?,
                    IdealSampler::Auto => unreachable!(),
                }
            }
            "thermal" => samplers::thermal_mock_sampler(
                &spec,
                n_samples,
                seed.wrapping_add(SEED_THERMAL),
            )?,
            "distinguishable" => samplers::distinguishable_mock_sampler(
                &spec,
                n_samples,
                seed.wrapping_add(SEED_DISTINGUISHABLE),
            )?,
            "uniform" => {
                let band = derive_band(&spec, cfg)?;
                let mut set = samplers::uniform_band_sampler(
                    spec.modes(),
                    band.0,
                    band.1,
                    n_samples,
                    seed.wrapping_add(SEED_UNIFORM),
                )?;
                set.meta.spec_hash = hash.clone();
                set
            }
            other => {
                return Err(AppError::config(format!(
                    "unknown model '{other}' (expected ideal, thermal, distinguishable, uniform)"
                )));
            }
        };
        let file = out.join(format!("{model}.samples"));
        std::fs::write(&file, set.to_text())?;
        println!(
            "sample {model}: {} samples, {} distinct patterns -> {}",
            set.total(),
            set.records().len(),
            file.display()
        );
    }
    Ok(())
}

// ---------------------------------------------------------------------------

struct LoadedSamples {
    ideal: Option<SampleSet>,
    thermal: Option<SampleSet>,
    distinguishable: Option<SampleSet>,
    uniform: Option<SampleSet>,
}

fn load_samples(paths: &[PathBuf], expected_hash: &str) -> Result<LoadedSamples, AppError> {
    let mut loaded = LoadedSamples {
        ideal: None,
        thermal: None,
        distinguishable: None,
        uniform: None,
    };
    for path in paths {
        let text = std::fs::read_to_string(path)
            .map_err(|e| AppError::Io(format!("{}: {e}", path.display())))?;
        let set = SampleSet::parse(&text)
            .map_err(|e| AppError::Config(format!("{}: {e}", path.display())))?;
        if !set.meta.spec_hash.is_empty() && set.meta.spec_hash != expected_hash {
            return Err(AppError::config(format!(
                "{}: sample file was generated for a different device (spec hash mismatch)",
                path.display()
            )));
        }
        let slot = match set.meta.model {
            ModelTag::IdealEnum | ModelTag::IdealChain | ModelTag::IdealMcmc => {
                &mut loaded.ideal
            }
            ModelTag::Thermal => &mut loaded.thermal,
            ModelTag::Distinguishable => &mut loaded.distinguishable,
            ModelTag::Uniform => &mut loaded.uniform,
        };
        if slot.is_none() {
            *slot = Some(set);
        } else {
            log::warn!("{}: duplicate model, keeping the first file", path.display());
        }
    }
    Ok(loaded)
}

fn cmd_validate(
    spec_path: &Path,
    out: &Path,
    sample_paths: &[PathBuf],
    seed: u64,
    cfg: &RunConfig,
) -> Result<(), AppError> {
    let spec = load_spec(spec_path)?;
    let m = spec.modes();
    let hash = spec.hash();
    let loaded = load_samples(sample_paths, &hash)?;

    let ideal_set = loaded.ideal.as_ref().ok_or_else(|| {
        AppError::config(
            "missing inputs: need one ideal sample file (IDEAL_ENUM/IDEAL_CHAIN/IDEAL_MCMC)",
        )
    })?;
    if loaded.thermal.is_none() && loaded.distinguishable.is_none() && loaded.uniform.is_none() {
        return Err(AppError::config(
            "missing inputs: need at least one hypothesis sample file \
             (thermal, distinguishable or uniform)",
        ));
    }

    let state = spec.build()?;
    let mut report = ValidationReport::default();
    let band = derive_band(&spec, cfg)?;
    report.scalars.insert("band_lo".into(), band.0 as f64);
    report.scalars.insert("band_hi".into(), band.1 as f64);
    report
        .scalars
        .insert("samples_ideal".into(), ideal_set.total() as f64);

    // exact machinery where enumeration is feasible
    let exact = if m <= probability::FULL_DISTRIBUTION_LIMIT {
        Some(probability::full_distribution_with(
            &state,
            cfg.kernel.clone(),
        )?)
    } else {
        None
    };
    let thermal_exact: Option<Distribution<f64>> = if m <= probability::FULL_DISTRIBUTION_LIMIT {
        Some(probability::full_distribution_with(
            &spec.to_thermal_hypothesis().build()?,
            cfg.kernel.clone(),
        )?)
    } else {
        None
    };

    if let Some(dist) = &exact {
        let empirical = ideal_set.empirical_probs();
        let (f, d) = validation::fidelity_tvd(&empirical, dist.probs())?;
        report.scalars.insert("fidelity".into(), f);
        report.scalars.insert("tvd".into(), d);
        report.verdicts.insert("fidelity_high".into(), f >= 0.99);
        report.verdicts.insert("tvd_low".into(), d <= 0.11);
    }

    // two-point correlation overlay
    let mut overlay = validation::CorrelationOverlay::new(cfg.curve_bins);
    let mut theory = Vec::new();
    for i in 0..m {
        for j in (i + 1)..m {
            theory.push(probability::two_point_theory(&state, i, j)?);
        }
    }
    overlay.push("theory", theory);
    overlay.push("ideal", validation::two_point_empirical_all(ideal_set)?);
    let mut hypothesis_index = BTreeMap::new();
    if let Some(set) = &loaded.thermal {
        overlay.push("thermal", validation::two_point_empirical_all(set)?);
        hypothesis_index.insert("thermal", overlay.series.len() - 1);
    }
    if let Some(set) = &loaded.distinguishable {
        overlay.push(
            "distinguishable",
            validation::two_point_empirical_all(set)?,
        );
        hypothesis_index.insert("distinguishable", overlay.series.len() - 1);
    }
    let self_z = overlay.separation_z(1, 0);
    report.scalars.insert("cij_self_z".into(), self_z);
    report
        .verdicts
        .insert("cij_matches_theory".into(), self_z < 4.0);
    for (name, idx) in &hypothesis_index {
        let z = overlay.separation_z(1, *idx);
        report.scalars.insert(format!("cij_z_{name}"), z);
        report
            .verdicts
            .insert(format!("cij_separated_{name}"), z > 5.0);
    }
    report.cij = Some(overlay);

    // click-number histogram overlay
    let mut sets: Vec<(&str, &SampleSet)> = vec![("ideal", ideal_set)];
    if let Some(s) = &loaded.thermal {
        sets.push(("thermal", s));
    }
    if let Some(s) = &loaded.distinguishable {
        sets.push(("distinguishable", s));
    }
    if let Some(s) = &loaded.uniform {
        sets.push(("uniform", s));
    }
    let compare = validation::click_histogram_compare(&sets)?;
    for (idx, label) in compare.labels.iter().enumerate() {
        report
            .scalars
            .insert(format!("click_peak_{label}"), compare.peaks[idx] as f64);
        if idx > 0 {
            report.scalars.insert(
                format!("click_tvd_ideal_{label}"),
                compare.pairwise_tvd[0][idx],
            );
            if label == "thermal" || label == "distinguishable" {
                report.verdicts.insert(
                    format!("click_peak_shift_{label}"),
                    compare.peak_shift(0, idx) >= 1,
                );
            }
        }
    }
    report.click_hist = Some(compare);

    // heavy output generation against the computable hypotheses
    let ideal_band = ideal_set
        .filter_band(band.0, band.1)
        .subsample(cfg.hog_samples, seed.wrapping_add(11));
    if ideal_band.total() > 0 {
        let law = probability::ClickLaw::with_config(&state, cfg.kernel.clone())?;
        let z_ideal = exact
            .as_ref()
            .map(|d| validation::band_mass(d, band))
            .unwrap_or(1.0);
        let p_ideal = |p: &ClickPattern| Ok(law.pattern_probability(p)? / z_ideal);
        let median = validation::heavy_median(&ideal_band, p_ideal)?;

        let run_hog = |label: &str,
                           alt_law: &probability::ClickLaw<f64>,
                           z_alt: f64,
                           report: &mut ValidationReport|
         -> Result<(), AppError> {
            let p_alt = |p: &ClickPattern| Ok(alt_law.pattern_probability(p)? / z_alt);
            let traj = validation::hog_test(&ideal_band, band, p_ideal, p_alt, median)?;
            let conf = traj.final_confidence();
            report
                .scalars
                .insert(format!("hog_confidence_{label}"), conf);
            report.scalars.insert(
                format!("hog_heavy_fraction_{label}"),
                traj.final_heavy_fraction(),
            );
            report
                .verdicts
                .insert(format!("hog_{label}_rejected"), conf >= 0.99);
            report.hog.push((label.to_string(), traj));
            Ok(())
        };

        if loaded.thermal.is_some() {
            let thermal_state = spec.to_thermal_hypothesis().build()?;
            let thermal_law =
                probability::ClickLaw::with_config(&thermal_state, cfg.kernel.clone())?;
            let z_thermal = thermal_exact
                .as_ref()
                .map(|d| validation::band_mass(d, band))
                .unwrap_or(1.0);
            run_hog("thermal", &thermal_law, z_thermal, &mut report)?;
        }
        if loaded.distinguishable.is_some() && m <= probability::FULL_DISTRIBUTION_LIMIT {
            // the distinguishable pmf is exact and cheap at desk scale
            let dist_mock = samplers::distinguishable_full_distribution(&spec)?;
            let z_alt = validation::band_mass(&dist_mock, band);
            let p_alt =
                |p: &ClickPattern| Ok(dist_mock.prob(p) / z_alt);
            let traj = validation::hog_test(&ideal_band, band, p_ideal, p_alt, median)?;
            let conf = traj.final_confidence();
            report
                .scalars
                .insert("hog_confidence_distinguishable".into(), conf);
            report
                .verdicts
                .insert("hog_distinguishable_rejected".into(), conf >= 0.99);
            report.hog.push(("distinguishable".into(), traj));
        }
    } else {
        log::warn!(
            "no ideal samples inside the click band {}..{}; heavy-output test skipped",
            band.0,
            band.1
        );
    }

    // probability curve: the experiment mapped onto the theoretical curve
    if let Some(dist) = &exact {
        let in_band = ideal_set.filter_band(band.0, band.1);
        if in_band.total() > 0 {
            let curve = validation::probability_curve(
                dist,
                &in_band,
                band,
                cfg.curve_reference,
                cfg.curve_bins,
                seed.wrapping_add(13),
            )?;
            report
                .scalars
                .insert("curve_self_p".into(), curve.self_consistency_p);
            report
                .scalars
                .insert("curve_uniform_z".into(), curve.uniform_separation_z);
            report
                .verdicts
                .insert("curve_self_consistent".into(), curve.self_consistency_p > 0.01);
            report.verdicts.insert(
                "uniformity_rejected".into(),
                curve.uniform_gof_p < 0.01 && curve.uniform_separation_z > 3.0,
            );
            report.curve = Some(curve);
        }
        if let Some(uniform_set) = &loaded.uniform {
            let in_band = uniform_set.filter_band(band.0, band.1);
            if in_band.total() > 0 {
                let curve = validation::probability_curve(
                    dist,
                    &in_band,
                    band,
                    cfg.curve_reference,
                    cfg.curve_bins,
                    seed.wrapping_add(17),
                )?;
                report
                    .scalars
                    .insert("uniform_curve_self_p".into(), curve.self_consistency_p);
                report.verdicts.insert(
                    "uniform_samples_rejected".into(),
                    curve.self_consistency_p < 0.01,
                );
            }
        }
    }

    report.write_dir(out, &stamp(&hash, seed))?;
    for (name, pass) in &report.verdicts {
        println!("verdict {name}: {}", if *pass { "pass" } else { "FAIL" });
    }
    Ok(())
}

// ---------------------------------------------------------------------------

fn parse_hist_csv(text: &str) -> Result<Vec<(usize, f64)>, AppError> {
    let mut out = Vec::new();
    let mut header_seen = false;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !header_seen {
            header_seen = true;
            if line.chars().next().is_some_and(|c| !c.is_ascii_digit()) {
                continue; // header row
            }
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 2 {
            return Err(AppError::config(format!("histogram row '{line}'")));
        }
        let n: usize = fields[0]
            .parse()
            .map_err(|_| AppError::config(format!("bad click count '{}'", fields[0])))?;
        let counts: f64 = fields[1]
            .parse()
            .map_err(|_| AppError::config(format!("bad count '{}'", fields[1])))?;
        out.push((n, counts));
    }
    if out.is_empty() {
        return Err(AppError::config("histogram file holds no rows"));
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn cmd_bench(
    spec_path: &Path,
    out: &Path,
    kmin: usize,
    kmax: usize,
    reps: u32,
    bench_input: Option<&Path>,
    cost_model: &str,
    hist: &str,
    tps: f64,
    seed: u64,
    cfg: &RunConfig,
) -> Result<(), AppError> {
    let spec = load_spec(spec_path)?;
    std::fs::create_dir_all(out)?;
    let stamp = stamp(&spec.hash(), seed);

    let records = match bench_input {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            bench::bench_from_csv(&text)?
        }
        None => {
            let state = spec.build()?;
            bench::time_torontonian(&state, kmin, kmax, seed, reps, &cfg.kernel)?
        }
    };
    write_stamped(&out.join("bench.csv"), &stamp, &bench::bench_to_csv(&records))?;
    println!("bench: {} records over k = {kmin}..{kmax}", records.len());

    let fit = bench::fit_scaling(&records).ok();
    if let Some(fit) = &fit {
        let (lo, hi) = fit.ratio_ci95();
        println!(
            "fit: doubling ratio {:.3} (95% CI {:.3}..{:.3}), r^2 {}",
            fit.doubling_ratio(),
            lo,
            hi,
            fit.r_squared
                .map(|r| format!("{r:.4}"))
                .unwrap_or_else(|| "undefined (flat)".into())
        );
        let anchor = AnchorModel::default();
        let k_lo = records.first().map(|r| r.k as f64).unwrap_or(16.0);
        let k_hi = records.last().map(|r| r.k as f64).unwrap_or(24.0);
        println!(
            "anchor: published ratio {:.3}, window-normalized to k={k_lo:.0}..{k_hi:.0}: {:.3}",
            anchor.doubling_ratio(),
            anchor.ratio_in_window(k_lo, k_hi)
        );
    }

    let histogram = if hist == "reference" {
        bench::reference_click_histogram(5e7, 43.0, 6.0, 100)
    } else {
        let text = std::fs::read_to_string(hist)?;
        parse_hist_csv(&text)?
    };

    let (model, measured_max): (Box<dyn Fn(f64) -> f64>, usize) = match cost_model {
        "fitted" => {
            let fit = fit.clone().ok_or_else(|| {
                AppError::config("cost model 'fitted' needs at least 5 timing records")
            })?;
            (Box::new(move |k| fit.t_model(k)), kmax)
        }
        "anchor" => {
            let anchor = AnchorModel::default();
            (Box::new(move |k| anchor.t_model(k)), 50)
        }
        other => {
            return Err(AppError::config(format!(
                "unknown cost model '{other}' (expected fitted or anchor)"
            )));
        }
    };
    let table = bench::estimate_classical_cost(&histogram, model.as_ref(), tps, measured_max);
    let mut cost_stamp = stamp.clone();
    cost_stamp.push_str(&format!("#cost_model={cost_model}\n"));
    if let Some(fit) = &fit {
        cost_stamp.push_str(&format!(
            "#fit_log2_slope={}\n#fit_intercept={}\n#fit_r_squared={}\n",
            fit.log2_slope,
            fit.intercept,
            fit.r_squared.unwrap_or(f64::NAN)
        ));
    }
    write_stamped(&out.join("cost.csv"), &cost_stamp, &bench::cost_to_csv(&table))?;
    println!(
        "cost: total {:.3e} s across {} click channels (peak at {:?} clicks)",
        table.total_seconds,
        table.rows.len(),
        table.peak()
    );
    Ok(())
}

// ---------------------------------------------------------------------------

fn cmd_haar(m: usize, out: &Path, seed: u64) -> Result<(), AppError> {
    if m == 0 {
        return Err(AppError::config("interferometer needs at least one mode"));
    }
    std::fs::create_dir_all(out)?;
    let u = validation::haar_generate::<f64>(m, seed);
    let report = validation::haar_checks(&u, 5000);
    let stamp = stamp("-", seed);
    write_stamped(&out.join("unitary.csv"), &stamp, &state::unitary_to_csv(&u))?;
    write_stamped(&out.join("haar_report.csv"), &stamp, &report.to_csv())?;
    println!(
        "haar: m={m}, unitarity residual {:.3e}, amplitude p {:.3}, phase p {:.3}",
        report.unitarity_residual, report.amplitude_p, report.phase_p
    );
    Ok(())
}

// ---------------------------------------------------------------------------

fn cmd_report(dir: &Path) -> Result<(), AppError> {
    let known = [
        "click_hist.csv",
        "cij_hist.csv",
        "hog_trajectory.csv",
        "prob_curve.csv",
        "bench.csv",
        "cost.csv",
        "report.csv",
    ];
    let mut rendered = 0usize;
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    entries.sort();
    for path in &entries {
        let name = match path.file_name().and_then(|n| n.to_str()) {
            Some(n) => n,
            None => continue,
        };
        let is_distribution = name.ends_with(".distribution.csv");
        if !known.contains(&name) && !is_distribution {
            continue;
        }
        if name == "report.csv" {
            continue; // scalars, nothing to plot
        }
        let text = std::fs::read_to_string(path)?;
        let log_y = name == "bench.csv" || name == "cost.csv";
        match svg::render_csv(name, &text, log_y) {
            Some(svg_text) => {
                let out = path.with_extension("svg");
                std::fs::write(&out, svg_text)?;
                println!("report: {} -> {}", name, out.display());
                rendered += 1;
            }
            None => log::warn!("{name}: no numeric series to plot"),
        }
    }
    if rendered == 0 {
        return Err(AppError::config(format!(
            "no renderable artifacts in {}; expected one of: {}",
            dir.display(),
            known.join(", ")
        )));
    }
    Ok(())
}
