//! Statistical validation: fidelity/distance, two-point correlations, heavy
//! output generation, probability-curve reconstruction, click-histogram
//! comparisons, and Haar-random interferometer checks.
//!
//! All comparisons against adversarial hypotheses run inside a fixed
//! click-number band, mirroring how sparse-regime experiments post-select a
//! photon-click window.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::Path;

use statrs::distribution::{ChiSquared, ContinuousCDF};
use thiserror::Error;

use crate::linalg::CMatrix;
use crate::num::{real, CompensatedSum, Scalar, C};
use crate::probability::{ClickPattern, Distribution, ProbError};
use crate::rng;
use crate::samplers::{SampleSet, SamplerError};

#[derive(Debug, Error)]
pub enum ValidationError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("empty sample set")]
    EmptySamples,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Prob(#[from] ProbError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

// ---------------------------------------------------------------------------
// distribution metrics

/// Fidelity F = sum_i sqrt(p_i q_i) and total variation distance
/// D = sum_i |p_i - q_i| / 2. Inputs are renormalized; deviations beyond
/// 1e-6 from unit mass are logged.
pub fn fidelity_tvd<T: Scalar>(p: &[T], q: &[T]) -> Result<(T, T), ValidationError> {
    if p.len() != q.len() {
        return Err(ValidationError::Dimension(format!(
            "supports differ: {} vs {}",
            p.len(),
            q.len()
        )));
    }
    let norm = |v: &[T], name: &str| -> T {
        let mut acc = CompensatedSum::new();
        for &x in v {
            acc.add(x);
        }
        let total = acc.value();
        if (total - T::one()).abs() > real::<T>(1e-6) {
            log::warn!("{name} sums to {total}, renormalizing");
        }
        total
    };
    let zp = norm(p, "p");
    let zq = norm(q, "q");
    if zp <= T::zero() || zq <= T::zero() {
        return Err(ValidationError::InvalidParameter(
            "distribution with nonpositive mass".into(),
        ));
    }
    let mut f = CompensatedSum::new();
    let mut d = CompensatedSum::new();
    for (&pi, &qi) in p.iter().zip(q) {
        let pi = (pi / zp).max(T::zero());
        let qi = (qi / zq).max(T::zero());
        f.add((pi * qi).sqrt());
        d.add((pi - qi).abs());
    }
    Ok((
        f.value().min(T::one()),
        (d.value() * real(0.5)).min(T::one()),
    ))
}

// ---------------------------------------------------------------------------
// two-point correlations

/// Plug-in estimator of C_ij from sample frequencies.
pub fn two_point_empirical(
    samples: &SampleSet,
    i: usize,
    j: usize,
) -> Result<f64, ValidationError> {
    if i == j {
        return Err(ValidationError::InvalidParameter(
            "two-point correlation needs distinct modes".into(),
        ));
    }
    let total = samples.total();
    if total == 0 {
        return Err(ValidationError::EmptySamples);
    }
    let mut both = 0u64;
    let mut ci = 0u64;
    let mut cj = 0u64;
    for (p, c) in samples.records() {
        let bi = p.bits()[i];
        let bj = p.bits()[j];
        if bi {
            ci += c;
        }
        if bj {
            cj += c;
        }
        if bi && bj {
            both += c;
        }
    }
    let n = total as f64;
    Ok(both as f64 / n - (ci as f64 / n) * (cj as f64 / n))
}

/// C_ij over all C(m,2) pairs, upper-triangle order.
pub fn two_point_empirical_all(samples: &SampleSet) -> Result<Vec<f64>, ValidationError> {
    let m = samples.modes();
    let mut out = Vec::with_capacity(m * (m - 1) / 2);
    for i in 0..m {
        for j in (i + 1)..m {
            out.push(two_point_empirical(samples, i, j)?);
        }
    }
    Ok(out)
}

/// Histogram over fixed-width bins; values outside land in the edge bins.
#[derive(Debug, Clone)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn build(values: &[f64], lo: f64, hi: f64, bins: usize) -> Self {
        let mut counts = vec![0u64; bins];
        let width = (hi - lo) / bins as f64;
        for &v in values {
            let idx = if width > 0.0 {
                (((v - lo) / width).floor() as i64).clamp(0, bins as i64 - 1) as usize
            } else {
                0
            };
            counts[idx] += 1;
        }
        Self { lo, hi, counts }
    }

    pub fn densities(&self) -> Vec<f64> {
        let total: u64 = self.counts.iter().sum();
        let width = (self.hi - self.lo) / self.counts.len() as f64;
        self.counts
            .iter()
            .map(|&c| {
                if total == 0 || width == 0.0 {
                    0.0
                } else {
                    c as f64 / total as f64 / width
                }
            })
            .collect()
    }

    pub fn edges(&self) -> Vec<f64> {
        let width = (self.hi - self.lo) / self.counts.len() as f64;
        (0..=self.counts.len())
            .map(|i| self.lo + width * i as f64)
            .collect()
    }
}

/// Two-point correlation overlay: one labelled series of raw C_ij values per
/// model, plus a shared histogram rendering.
#[derive(Debug, Clone)]
pub struct CorrelationOverlay {
    pub labels: Vec<String>,
    pub series: Vec<Vec<f64>>,
    pub bins: usize,
}

impl CorrelationOverlay {
    pub fn new(bins: usize) -> Self {
        Self {
            labels: Vec::new(),
            series: Vec::new(),
            bins,
        }
    }

    pub fn push(&mut self, label: &str, values: Vec<f64>) {
        self.labels.push(label.to_string());
        self.series.push(values);
    }

    /// Separation score between two series: difference of means over the
    /// combined standard error.
    pub fn separation_z(&self, a: usize, b: usize) -> f64 {
        let stats = |v: &[f64]| {
            let n = v.len() as f64;
            let mean = v.iter().sum::<f64>() / n;
            let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
            (mean, var / n)
        };
        let (ma, va) = stats(&self.series[a]);
        let (mb, vb) = stats(&self.series[b]);
        (ma - mb).abs() / (va + vb).sqrt().max(f64::MIN_POSITIVE)
    }

    /// Two-sample KS between series.
    pub fn ks(&self, a: usize, b: usize) -> (f64, f64) {
        ks_two_sample(&self.series[a], &self.series[b])
    }

    pub fn to_csv(&self) -> String {
        use std::fmt::Write;
        let lo = self
            .series
            .iter()
            .flatten()
            .copied()
            .fold(f64::INFINITY, f64::min);
        let hi = self
            .series
            .iter()
            .flatten()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let (lo, hi) = if lo.is_finite() && hi > lo {
            (lo, hi)
        } else {
            (-1.0, 1.0)
        };
        let hists: Vec<Histogram> = self
            .series
            .iter()
            .map(|v| Histogram::build(v, lo, hi, self.bins))
            .collect();
        let mut s = String::from("bin_lo,bin_hi");
        for label in &self.labels {
            let _ = write!(s, ",count_{label},density_{label}");
        }
        s.push('\n');
        let width = (hi - lo) / self.bins as f64;
        for b in 0..self.bins {
            let _ = write!(s, "{},{}", lo + width * b as f64, lo + width * (b + 1) as f64);
            for h in &hists {
                let d = h.densities();
                let _ = write!(s, ",{},{}", h.counts[b], d[b]);
            }
            s.push('\n');
        }
        s
    }
}

// ---------------------------------------------------------------------------
// heavy output generation

/// Cumulative heavy-output trajectories for one sample batch against an
/// alternative hypothesis.
#[derive(Debug, Clone)]
pub struct HogTrajectory {
    /// Bayesian confidence R_t/(1+R_t) after each sample, with
    /// R_t = prod p_ideal(s)/p_alt(s).
    pub confidence: Vec<f64>,
    /// Cumulative share of samples with p_ideal above the reference median.
    pub heavy_fraction: Vec<f64>,
    /// How many alternative-probability evaluations were floored at the
    /// smallest positive value.
    pub floored_alt: u64,
}

impl HogTrajectory {
    pub fn final_confidence(&self) -> f64 {
        self.confidence.last().copied().unwrap_or(0.5)
    }

    pub fn final_heavy_fraction(&self) -> f64 {
        self.heavy_fraction.last().copied().unwrap_or(0.0)
    }
}

/// Median of p_ideal over a reference batch; the "heavy" threshold.
pub fn heavy_median(
    reference: &SampleSet,
    mut p_ideal: impl FnMut(&ClickPattern) -> Result<f64, ProbError>,
) -> Result<f64, ValidationError> {
    let mut values = Vec::new();
    for (pattern, count) in reference.records() {
        let p = p_ideal(pattern)?;
        for _ in 0..*count {
            values.push(p);
        }
    }
    if values.is_empty() {
        return Err(ValidationError::EmptySamples);
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(values[values.len() / 2])
}

/// Heavy output generation ratio test.
///
/// `samples` must sit inside the click band; the two probability functions
/// are evaluated there (band-renormalized by the caller when normalization
/// constants are available). Two readouts come back: the cumulative Bayesian
/// odds trajectory and the heavy-fraction trajectory against
/// `heavy_threshold` (the reference median from [`heavy_median`]).
pub fn hog_test(
    samples: &SampleSet,
    band: (usize, usize),
    mut p_ideal: impl FnMut(&ClickPattern) -> Result<f64, ProbError>,
    mut p_alt: impl FnMut(&ClickPattern) -> Result<f64, ProbError>,
    heavy_threshold: f64,
) -> Result<HogTrajectory, ValidationError> {
    if samples.total() == 0 {
        return Err(ValidationError::EmptySamples);
    }
    let mut log_ratio = 0.0f64;
    let mut heavy = 0u64;
    let mut seen = 0u64;
    let mut floored = 0u64;
    let mut confidence = Vec::with_capacity(samples.total() as usize);
    let mut heavy_fraction = Vec::with_capacity(samples.total() as usize);
    for (pattern, count) in samples.records() {
        if !(band.0..=band.1).contains(&pattern.clicks()) {
            return Err(ValidationError::InvalidParameter(format!(
                "sample {pattern} outside the click band [{}, {}]",
                band.0, band.1
            )));
        }
        let pi = p_ideal(pattern)?;
        let mut pa = p_alt(pattern)?;
        if pa <= 0.0 {
            pa = f64::MIN_POSITIVE;
            floored += count;
        }
        let step = pi.max(f64::MIN_POSITIVE).ln() - pa.ln();
        let is_heavy = pi > heavy_threshold;
        for _ in 0..*count {
            log_ratio += step;
            seen += 1;
            if is_heavy {
                heavy += 1;
            }
            // confidence = R/(1+R) = sigmoid(log R)
            let conf = if log_ratio > 700.0 {
                1.0
            } else if log_ratio < -700.0 {
                0.0
            } else {
                let r = log_ratio.exp();
                r / (1.0 + r)
            };
            confidence.push(conf);
            heavy_fraction.push(heavy as f64 / seen as f64);
        }
    }
    Ok(HogTrajectory {
        confidence,
        heavy_fraction,
        floored_alt: floored,
    })
}

// ---------------------------------------------------------------------------
// probability curve (uniform-hypothesis exclusion)

/// Reconstruction of the log10-probability curve within a click band.
#[derive(Debug, Clone)]
pub struct ProbabilityCurve {
    pub bins: usize,
    pub lo: f64,
    pub hi: f64,
    /// Sampled reference batch (n_reference ideal draws in the band).
    pub ideal: Histogram,
    /// Sampled uniform batch of equal size.
    pub uniform: Histogram,
    /// Input samples mapped onto the curve.
    pub mapped: Histogram,
    /// Exact per-bin probability mass of the two hypotheses (no sampling
    /// noise; the statistical tests run against these).
    pub ideal_exact_mass: Vec<f64>,
    pub uniform_exact_mass: Vec<f64>,
    /// log10 p_ideal of every input sample.
    pub mapped_values: Vec<f64>,
    pub mean_ideal: f64,
    pub sd_ideal: f64,
    pub mean_uniform: f64,
    pub mean_mapped: f64,
    /// GOF p-value of the mapped samples against the exact ideal curve.
    pub self_consistency_p: f64,
    /// GOF p-value of the mapped samples against the exact uniform curve.
    pub uniform_gof_p: f64,
    /// |mean(mapped) - mean(uniform)| in ideal-curve standard deviations.
    pub uniform_separation_sigma: f64,
    /// Same separation in standard errors of the mapped batch mean.
    pub uniform_separation_z: f64,
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n.max(1.0);
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, var.sqrt())
}

/// Chi-square goodness of fit of observed bin counts against exact bin
/// masses (bins pooled until expectations reach 5).
fn gof_pvalue(observed: &Histogram, exact_mass: &[f64]) -> f64 {
    let n_obs: u64 = observed.counts.iter().sum();
    if n_obs == 0 {
        return 1.0;
    }
    let mut chi2 = 0.0f64;
    let mut dof = 0i64;
    let mut pool_obs = 0.0f64;
    let mut pool_exp = 0.0f64;
    for (o, mass) in observed.counts.iter().zip(exact_mass) {
        pool_obs += *o as f64;
        pool_exp += mass * n_obs as f64;
        if pool_exp >= 5.0 {
            chi2 += (pool_obs - pool_exp).powi(2) / pool_exp.max(1e-9);
            dof += 1;
            pool_obs = 0.0;
            pool_exp = 0.0;
        }
    }
    if pool_exp > 0.0 || pool_obs > 0.0 {
        chi2 += (pool_obs - pool_exp).powi(2) / pool_exp.max(1e-9);
        dof += 1;
    }
    let dof = (dof - 1).max(1) as f64;
    chi2_pvalue(chi2, dof)
}

/// Build the probability curve: histogram of log10 p over an ideal reference
/// batch and a uniform batch inside the click band, plus the mapped positions
/// of the input samples.
pub fn probability_curve<T: Scalar>(
    dist: &Distribution<T>,
    samples: &SampleSet,
    band: (usize, usize),
    n_reference: u64,
    bins: usize,
    seed: u64,
) -> Result<ProbabilityCurve, ValidationError> {
    let m = dist.modes();
    if samples.modes() != m {
        return Err(ValidationError::Dimension(
            "sample modes differ from distribution".into(),
        ));
    }
    let band_dist = band_conditional(dist, band)?;
    let reference = crate::samplers::sample_from_distribution(
        &band_dist,
        n_reference,
        seed,
        crate::samplers::SampleMeta::new(
            crate::samplers::ModelTag::IdealEnum,
            seed,
            String::new(),
            n_reference,
        ),
    );
    let uniform =
        crate::samplers::uniform_band_sampler(m, band.0, band.1, n_reference, seed ^ 1)?;

    let log_p = |set: &SampleSet| -> Vec<f64> {
        let mut out = Vec::with_capacity(set.total() as usize);
        for (pattern, count) in set.records() {
            let p = dist.prob(pattern).to_f64().unwrap_or(0.0);
            let v = p.max(f64::MIN_POSITIVE).log10();
            for _ in 0..*count {
                out.push(v);
            }
        }
        out
    };
    let ideal_values = log_p(&reference);
    let uniform_values = log_p(&uniform);
    let mapped_values = log_p(samples);

    // exact per-pattern weights of the two hypotheses inside the band
    let n_band: f64 = (band.0..=band.1)
        .map(|n| crate::num::binomial_f64(m as u64, n as u64))
        .sum();
    let mut exact_points: Vec<(f64, f64, f64)> = Vec::new(); // (value, w_ideal, w_uniform)
    for (idx, &w) in band_dist.probs().iter().enumerate() {
        let clicks = (idx as u64).count_ones() as usize;
        if !(band.0..=band.1).contains(&clicks) {
            continue;
        }
        let p = dist.probs()[idx].to_f64().unwrap_or(0.0);
        let value = p.max(f64::MIN_POSITIVE).log10();
        exact_points.push((value, w.to_f64().unwrap_or(0.0), 1.0 / n_band));
    }

    // binning range: reference batch stretched to keep the uniform and
    // mapped series visible rather than clamped into one edge bin
    let span = |v: &[f64]| {
        (
            v.iter().copied().fold(f64::INFINITY, f64::min),
            v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        )
    };
    let (ref_lo, ref_hi) = span(&ideal_values);
    let (uni_lo, _) = span(&uniform_values);
    let (map_lo, map_hi) = span(&mapped_values);
    let exact_lo = exact_points
        .iter()
        .map(|&(v, _, _)| v)
        .fold(f64::INFINITY, f64::min);
    let lo = ref_lo.min(uni_lo).min(map_lo).min(exact_lo);
    let hi = ref_hi.max(map_hi);
    let hi = if hi > lo { hi } else { lo + 1.0 };

    let ideal = Histogram::build(&ideal_values, lo, hi, bins);
    let uniform_hist = Histogram::build(&uniform_values, lo, hi, bins);
    let mapped = Histogram::build(&mapped_values, lo, hi, bins);

    let width = (hi - lo) / bins as f64;
    let mut ideal_exact_mass = vec![0.0f64; bins];
    let mut uniform_exact_mass = vec![0.0f64; bins];
    for &(v, wi, wu) in &exact_points {
        let bin = (((v - lo) / width).floor() as i64).clamp(0, bins as i64 - 1) as usize;
        ideal_exact_mass[bin] += wi;
        uniform_exact_mass[bin] += wu;
    }

    // exact first and second moments of the ideal curve
    let mean_ideal: f64 = exact_points.iter().map(|&(v, w, _)| v * w).sum();
    let var_ideal: f64 = exact_points
        .iter()
        .map(|&(v, w, _)| w * (v - mean_ideal).powi(2))
        .sum();
    let sd_ideal = var_ideal.sqrt();
    let mean_uniform: f64 = exact_points.iter().map(|&(v, _, w)| v * w).sum();
    let (mean_mapped, sd_mapped) = mean_sd(&mapped_values);
    let self_consistency_p = gof_pvalue(&mapped, &ideal_exact_mass);
    let uniform_gof_p = gof_pvalue(&mapped, &uniform_exact_mass);
    let uniform_separation_sigma = (mean_mapped - mean_uniform).abs() / sd_ideal.max(1e-12);
    let se_mapped = sd_mapped / (mapped_values.len() as f64).sqrt().max(1.0);
    let uniform_separation_z = (mean_mapped - mean_uniform).abs() / se_mapped.max(1e-12);

    Ok(ProbabilityCurve {
        bins,
        lo,
        hi,
        ideal,
        uniform: uniform_hist,
        mapped,
        ideal_exact_mass,
        uniform_exact_mass,
        mapped_values,
        mean_ideal,
        sd_ideal,
        mean_uniform,
        mean_mapped,
        self_consistency_p,
        uniform_gof_p,
        uniform_separation_sigma,
        uniform_separation_z,
    })
}

impl ProbabilityCurve {
    pub fn to_csv(&self) -> String {
        use std::fmt::Write;
        let mut s = String::from(
            "bin_lo,bin_hi,ideal_count,ideal_density,ideal_exact_mass,uniform_count,uniform_density,uniform_exact_mass,mapped_count,mapped_density\n",
        );
        let width = (self.hi - self.lo) / self.bins as f64;
        let di = self.ideal.densities();
        let du = self.uniform.densities();
        let dm = self.mapped.densities();
        for b in 0..self.bins {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{}",
                self.lo + width * b as f64,
                self.lo + width * (b + 1) as f64,
                self.ideal.counts[b],
                di[b],
                self.ideal_exact_mass[b],
                self.uniform.counts[b],
                du[b],
                self.uniform_exact_mass[b],
                self.mapped.counts[b],
                dm[b]
            );
        }
        s
    }
}

/// Restrict a distribution to a click band and renormalize.
pub fn band_conditional<T: Scalar>(
    dist: &Distribution<T>,
    band: (usize, usize),
) -> Result<Distribution<T>, ValidationError> {
    let m = dist.modes();
    let mut probs = vec![T::zero(); dist.probs().len()];
    let mut mass = T::zero();
    for (idx, &p) in dist.probs().iter().enumerate() {
        let clicks = (idx as u64).count_ones() as usize;
        if (band.0..=band.1).contains(&clicks) {
            probs[idx] = p;
            mass = mass + p;
        }
    }
    if mass <= T::zero() {
        return Err(ValidationError::InvalidParameter(format!(
            "click band [{}, {}] carries no probability mass",
            band.0, band.1
        )));
    }
    for p in probs.iter_mut() {
        *p = *p / mass;
    }
    Ok(Distribution::from_probs(m, probs))
}

/// Band probability mass (the HOG renormalization constant).
pub fn band_mass<T: Scalar>(dist: &Distribution<T>, band: (usize, usize)) -> T {
    let mut mass = T::zero();
    for (idx, &p) in dist.probs().iter().enumerate() {
        let clicks = (idx as u64).count_ones() as usize;
        if (band.0..=band.1).contains(&clicks) {
            mass = mass + p;
        }
    }
    mass
}

// ---------------------------------------------------------------------------
// click-number histogram comparison

#[derive(Debug, Clone)]
pub struct ClickCompare {
    pub labels: Vec<String>,
    /// Raw counts per click number, one row per set.
    pub counts: Vec<Vec<u64>>,
    /// Position of the histogram maximum per set.
    pub peaks: Vec<usize>,
    /// Pairwise total variation distances between normalized histograms.
    pub pairwise_tvd: Vec<Vec<f64>>,
}

/// Overlay click-number histograms and quantify line-shape separation.
pub fn click_histogram_compare(
    sets: &[(&str, &SampleSet)],
) -> Result<ClickCompare, ValidationError> {
    if sets.is_empty() {
        return Err(ValidationError::EmptySamples);
    }
    let m = sets[0].1.modes();
    for (_, s) in sets {
        if s.modes() != m {
            return Err(ValidationError::Dimension(
                "sample sets have different mode counts".into(),
            ));
        }
    }
    let labels: Vec<String> = sets.iter().map(|(l, _)| l.to_string()).collect();
    let counts: Vec<Vec<u64>> = sets.iter().map(|(_, s)| s.click_histogram()).collect();
    let peaks: Vec<usize> = counts
        .iter()
        .map(|h| {
            h.iter()
                .enumerate()
                .max_by_key(|(_, &c)| c)
                .map(|(i, _)| i)
                .unwrap_or(0)
        })
        .collect();
    let normalized: Vec<Vec<f64>> = counts
        .iter()
        .map(|h| {
            let total: u64 = h.iter().sum();
            h.iter()
                .map(|&c| if total == 0 { 0.0 } else { c as f64 / total as f64 })
                .collect()
        })
        .collect();
    let n = sets.len();
    let mut pairwise_tvd = vec![vec![0.0; n]; n];
    for a in 0..n {
        for b in 0..n {
            pairwise_tvd[a][b] = crate::samplers::tvd_probs(&normalized[a], &normalized[b]);
        }
    }
    Ok(ClickCompare {
        labels,
        counts,
        peaks,
        pairwise_tvd,
    })
}

impl ClickCompare {
    pub fn peak_shift(&self, a: usize, b: usize) -> usize {
        self.peaks[a].abs_diff(self.peaks[b])
    }

    pub fn to_csv(&self) -> String {
        use std::fmt::Write;
        let mut s = String::from("clicks");
        for label in &self.labels {
            let _ = write!(s, ",count_{label}");
        }
        s.push('\n');
        let bins = self.counts[0].len();
        for n in 0..bins {
            let _ = write!(s, "{n}");
            for row in &self.counts {
                let _ = write!(s, ",{}", row[n]);
            }
            s.push('\n');
        }
        s
    }
}

// ---------------------------------------------------------------------------
// Haar-random unitaries

/// Haar-distributed unitary via QR of a complex Ginibre matrix with the
/// R-diagonal phase normalization.
pub fn haar_generate<T: Scalar>(m: usize, seed: u64) -> CMatrix<T> {
    use rand_distr::{Distribution as _, StandardNormal};
    let mut rng = rng::from_seed(seed);
    let ginibre = CMatrix::from_fn(m, m, |_, _| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        C::new(real::<T>(re), real::<T>(im))
    });
    let (q, r) = ginibre.qr_square();
    // U = Q diag(r_jj/|r_jj|): fixes the QR gauge so U is Haar-distributed
    let mut u = q;
    for j in 0..m {
        let d = r[(j, j)];
        let phase = if d.norm().is_zero() {
            C::new(T::one(), T::zero())
        } else {
            d / d.norm()
        };
        for i in 0..m {
            let v = u[(i, j)] * phase;
            u[(i, j)] = v;
        }
    }
    u
}

/// Report of the Haar-property checks on a candidate interferometer matrix.
#[derive(Debug, Clone)]
pub struct HaarReport {
    pub m: usize,
    pub n_elements: usize,
    pub unitarity_residual: f64,
    /// KS test of |U_ij|^2 against the (m-1)(1-y)^{m-2} density.
    pub amplitude_ks: f64,
    pub amplitude_p: f64,
    /// KS test of arg(U_ij) against the uniform distribution on (-pi, pi].
    pub phase_ks: f64,
    pub phase_p: f64,
}

impl HaarReport {
    pub fn passes(&self, residual_tol: f64, p_threshold: f64) -> bool {
        self.unitarity_residual <= residual_tol
            && self.amplitude_p > p_threshold
            && self.phase_p > p_threshold
    }

    pub fn to_csv(&self) -> String {
        format!(
            "name,value\nm,{}\nn_elements,{}\nunitarity_residual,{}\namplitude_ks,{}\namplitude_p,{}\nphase_ks,{}\nphase_p,{}\n",
            self.m,
            self.n_elements,
            self.unitarity_residual,
            self.amplitude_ks,
            self.amplitude_p,
            self.phase_ks,
            self.phase_p
        )
    }
}

/// Element-statistics and unitarity checks; samples at most `max_elements`
/// entries by deterministic stride.
pub fn haar_checks<T: Scalar>(u: &CMatrix<T>, max_elements: usize) -> HaarReport {
    let m = u.rows();
    let total = m * m;
    let stride = (total / max_elements.max(1)).max(1);
    let mut amplitudes = Vec::new();
    let mut phases = Vec::new();
    let mut flat = 0usize;
    while flat < total {
        let (i, j) = (flat / m, flat % m);
        let z = u[(i, j)];
        let re = z.re.to_f64().unwrap_or(0.0);
        let im = z.im.to_f64().unwrap_or(0.0);
        amplitudes.push(re * re + im * im);
        phases.push(im.atan2(re));
        flat += stride;
    }
    let n = amplitudes.len();

    // |U_ij|^2 has CDF 1 - (1-y)^(m-1) for a Haar m x m unitary
    let amp_cdf = |y: f64| 1.0 - (1.0 - y.clamp(0.0, 1.0)).powi(m as i32 - 1);
    let phase_cdf = |t: f64| (t + std::f64::consts::PI) / (2.0 * std::f64::consts::PI);
    let (amplitude_ks, amplitude_p) = ks_one_sample(&amplitudes, amp_cdf);
    let (phase_ks, phase_p) = ks_one_sample(&phases, phase_cdf);

    HaarReport {
        m,
        n_elements: n,
        unitarity_residual: u.unitarity_residual().to_f64().unwrap_or(f64::NAN),
        amplitude_ks,
        amplitude_p,
        phase_ks,
        phase_p,
    }
}

// ---------------------------------------------------------------------------
// shared statistics

/// One-sample Kolmogorov-Smirnov statistic and asymptotic p-value.
pub fn ks_one_sample(values: &[f64], cdf: impl Fn(f64) -> f64) -> (f64, f64) {
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    if n == 0 {
        return (0.0, 1.0);
    }
    let mut d = 0.0f64;
    for (i, &v) in sorted.iter().enumerate() {
        let f = cdf(v);
        let lo = i as f64 / n as f64;
        let hi = (i + 1) as f64 / n as f64;
        d = d.max((f - lo).abs()).max((hi - f).abs());
    }
    (d, ks_pvalue(d, n as f64))
}

/// Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> (f64, f64) {
    let mut xa: Vec<f64> = a.to_vec();
    let mut xb: Vec<f64> = b.to_vec();
    xa.sort_by(|p, q| p.partial_cmp(q).unwrap());
    xb.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let (na, nb) = (xa.len(), xb.len());
    if na == 0 || nb == 0 {
        return (0.0, 1.0);
    }
    let mut i = 0;
    let mut j = 0;
    let mut d = 0.0f64;
    while i < na && j < nb {
        let x = xa[i].min(xb[j]);
        while i < na && xa[i] <= x {
            i += 1;
        }
        while j < nb && xb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na as f64 - j as f64 / nb as f64).abs());
    }
    let n_eff = (na as f64 * nb as f64) / (na + nb) as f64;
    (d, ks_pvalue(d, n_eff))
}

/// Asymptotic Kolmogorov tail with the Stephens small-sample correction.
pub fn ks_pvalue(d: f64, n_eff: f64) -> f64 {
    if d <= 0.0 {
        return 1.0;
    }
    let sqrt_n = n_eff.sqrt();
    let lambda = (sqrt_n + 0.12 + 0.11 / sqrt_n) * d;
    let mut sum = 0.0f64;
    for k in 1..=100 {
        let term = (-2.0 * (k as f64 * lambda).powi(2)).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Upper-tail chi-square p-value.
pub fn chi2_pvalue(stat: f64, dof: f64) -> f64 {
    if stat <= 0.0 {
        return 1.0;
    }
    match ChiSquared::new(dof) {
        Ok(dist) => (1.0 - dist.cdf(stat)).clamp(0.0, 1.0),
        Err(_) => 1.0,
    }
}

// ---------------------------------------------------------------------------
// report assembly

/// Everything the validate command writes out.
#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub scalars: BTreeMap<String, f64>,
    pub verdicts: BTreeMap<String, bool>,
    pub cij: Option<CorrelationOverlay>,
    pub click_hist: Option<ClickCompare>,
    pub hog: Vec<(String, HogTrajectory)>,
    pub curve: Option<ProbabilityCurve>,
}

impl ValidationReport {
    /// Write report.csv plus one CSV per populated section. `stamp` lines
    /// (provenance comments) are prepended to every file.
    pub fn write_dir(&self, dir: &Path, stamp: &str) -> Result<(), ValidationError> {
        std::fs::create_dir_all(dir)?;
        let write_file = |path: &Path, content: &str| -> std::io::Result<()> {
            let mut stamped = String::with_capacity(stamp.len() + content.len());
            stamped.push_str(stamp);
            stamped.push_str(content);
            write_file(path, &stamped)
        };
        let mut report = String::from("name,value\n");
        for (k, v) in &self.scalars {
            report.push_str(&format!("{k},{v}\n"));
        }
        for (k, v) in &self.verdicts {
            report.push_str(&format!(
                "verdict.{k},{}\n",
                if *v { "pass" } else { "fail" }
            ));
        }
        write_file(&dir.join("report.csv"), &report)?;
        if let Some(cij) = &self.cij {
            write_file(&dir.join("cij_hist.csv"), &cij.to_csv())?;
        }
        if let Some(hist) = &self.click_hist {
            write_file(&dir.join("click_hist.csv"), &hist.to_csv())?;
        }
        if !self.hog.is_empty() {
            let mut s = String::from("t");
            for (label, _) in &self.hog {
                s.push_str(&format!(",confidence_{label},heavy_fraction_{label}"));
            }
            s.push('\n');
            let len = self
                .hog
                .iter()
                .map(|(_, h)| h.confidence.len())
                .max()
                .unwrap_or(0);
            for t in 0..len {
                s.push_str(&format!("{}", t + 1));
                for (_, h) in &self.hog {
                    match (h.confidence.get(t), h.heavy_fraction.get(t)) {
                        (Some(c), Some(f)) => s.push_str(&format!(",{c},{f}")),
                        _ => s.push_str(",,"),
                    }
                }
                s.push('\n');
            }
            write_file(&dir.join("hog_trajectory.csv"), &s)?;
        }
        if let Some(curve) = &self.curve {
            write_file(&dir.join("prob_curve.csv"), &curve.to_csv())?;
        }
        Ok(())
    }
}

fn write_file(path: &Path, content: &str) -> std::io::Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(content.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probability::full_distribution;
    use crate::samplers::{uniform_sampler, SampleMeta, SampleSet};
    use crate::state::{ExperimentSpec, GaussianState, SourceSpec};
    use approx::assert_relative_eq;

    #[test]
    fn fidelity_identical_and_disjoint() {
        let p = vec![0.25, 0.25, 0.5];
        let (f, d) = fidelity_tvd(&p, &p).unwrap();
        assert_relative_eq!(f, 1.0, epsilon = 1e-12);
        assert_relative_eq!(d, 0.0, epsilon = 1e-12);
        let q = vec![0.5, 0.5, 0.0];
        let r = vec![0.0, 0.0, 1.0];
        let (f, d) = fidelity_tvd(&q, &r).unwrap();
        assert_relative_eq!(f, 0.0, epsilon = 1e-12);
        assert_relative_eq!(d, 1.0, epsilon = 1e-12);
        assert!(fidelity_tvd(&p, &q[..2].to_vec()).is_err());
    }

    #[test]
    fn fidelity_tvd_bounds_on_random_pairs() {
        // Fuchs-van de Graaf style: 1 - F <= D <= sqrt(1 - F^2)
        let mut rng = crate::rng::from_seed(5);
        for _ in 0..200 {
            let draw = |rng: &mut crate::rng::Rng| -> Vec<f64> {
                let raw: Vec<f64> = (0..16).map(|_| rand::Rng::random::<f64>(rng)).collect();
                let total: f64 = raw.iter().sum();
                raw.into_iter().map(|x| x / total).collect()
            };
            let p = draw(&mut rng);
            let q = draw(&mut rng);
            let (f, d) = fidelity_tvd(&p, &q).unwrap();
            let (f2, d2) = fidelity_tvd(&q, &p).unwrap();
            assert_relative_eq!(f, f2, epsilon = 1e-12);
            assert_relative_eq!(d, d2, epsilon = 1e-12);
            assert!(1.0 - f <= d + 1e-12, "lower bound: F={f} D={d}");
            assert!(d <= (1.0 - f * f).sqrt() + 1e-12, "upper bound: F={f} D={d}");
        }
    }

    fn toy_samples(patterns: &[(&str, u64)]) -> SampleSet {
        let m = patterns[0].0.len();
        let mut expanded = Vec::new();
        for (s, c) in patterns {
            for _ in 0..*c {
                expanded.push(ClickPattern::parse(s).unwrap());
            }
        }
        SampleSet::from_patterns(
            m,
            expanded,
            SampleMeta::new(crate::samplers::ModelTag::Uniform, 0, String::new(), 0),
        )
    }

    #[test]
    fn two_point_empirical_basics() {
        let all_silent = toy_samples(&[("000", 50)]);
        assert_relative_eq!(
            two_point_empirical(&all_silent, 0, 1).unwrap(),
            0.0,
            epsilon = 1e-12
        );
        // perfectly correlated bits: C = p(1-p) with click rate p
        let correlated = toy_samples(&[("110", 30), ("000", 70)]);
        let c = two_point_empirical(&correlated, 0, 1).unwrap();
        assert_relative_eq!(c, 0.3 * 0.7, epsilon = 1e-12);
        assert!(two_point_empirical(&correlated, 1, 1).is_err());
    }

    #[test]
    fn two_point_empirical_matches_theory() {
        let spec = ExperimentSpec::new(
            vec![
                SourceSpec::tmss(1.0, 0.2, 0.9),
                SourceSpec::tmss(0.8, 1.0, 0.9),
            ],
            vec![vec![0, 1], vec![2, 3]],
            haar_generate::<f64>(8, 40),
            vec![0.9; 8],
            vec![0.9; 8],
        )
        .unwrap();
        let state = spec.build().unwrap();
        let set = crate::samplers::enumerate_sampler(&state, &spec.hash(), 200_000, 81).unwrap();
        for (i, j) in [(0usize, 1usize), (2, 5), (6, 7)] {
            let emp = two_point_empirical(&set, i, j).unwrap();
            let theory = crate::probability::two_point_theory(&state, i, j).unwrap();
            let sd = (1.0 / (set.total() as f64)).sqrt();
            assert!(
                (emp - theory).abs() < 4.0 * sd + 1e-3,
                "C_{i}{j}: {emp} vs {theory}"
            );
        }
    }

    #[test]
    fn hog_equal_hypotheses_stay_at_half() {
        let samples = toy_samples(&[("1100", 10), ("0110", 10)]);
        let traj = hog_test(&samples, (2, 2), |_| Ok(0.25), |_| Ok(0.25), 0.1).unwrap();
        for &c in &traj.confidence {
            assert_relative_eq!(c, 0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn hog_monotone_in_likelihood_ratio_and_reorder_invariant() {
        let a = toy_samples(&[("1100", 5), ("0011", 5)]);
        let p_ideal = |p: &ClickPattern| Ok(if p.bits()[0] { 0.4 } else { 0.2 });
        let p_alt = |p: &ClickPattern| Ok(if p.bits()[0] { 0.1 } else { 0.3 });
        let traj = hog_test(&a, (2, 2), p_ideal, p_alt, 0.0).unwrap();
        let final_a = traj.final_confidence();
        let b = toy_samples(&[("0011", 5), ("1100", 5)]); // same multiset
        let traj_b = hog_test(&b, (2, 2), p_ideal, p_alt, 0.0).unwrap();
        assert_relative_eq!(final_a, traj_b.final_confidence(), epsilon = 1e-12);
        // heavier batch drives confidence up
        let heavy = toy_samples(&[("1100", 10)]);
        let traj_h = hog_test(&heavy, (2, 2), p_ideal, p_alt, 0.0).unwrap();
        assert!(traj_h.final_confidence() > final_a);
    }

    #[test]
    fn hog_rejects_out_of_band_and_floors_zero_alt() {
        let samples = toy_samples(&[("1110", 3)]);
        assert!(hog_test(&samples, (1, 2), |_| Ok(0.5), |_| Ok(0.5), 0.0).is_err());
        let ok = toy_samples(&[("1100", 3)]);
        let traj = hog_test(&ok, (2, 2), |_| Ok(0.5), |_| Ok(0.0), 0.0).unwrap();
        assert_eq!(traj.floored_alt, 3);
        assert!(traj.final_confidence() > 0.999);
    }

    #[test]
    fn band_conditional_normalizes() {
        let spec = ExperimentSpec::new(
            vec![SourceSpec::tmss(1.0, 0.0, 1.0)],
            vec![vec![0, 1]],
            haar_generate::<f64>(4, 3),
            vec![1.0; 4],
            vec![1.0; 4],
        )
        .unwrap();
        let dist = full_distribution(&spec.build().unwrap()).unwrap();
        let band = band_conditional(&dist, (1, 2)).unwrap();
        assert_relative_eq!(band.normalization(), 1.0, epsilon = 1e-9);
        for (idx, &p) in band.probs().iter().enumerate() {
            let clicks = (idx as u64).count_ones();
            if !(1..=2).contains(&clicks) {
                assert_eq!(p, 0.0);
            }
        }
        let vac_dist = full_distribution(&GaussianState::<f64>::vacuum(2).unwrap()).unwrap();
        assert!(band_conditional(&vac_dist, (1, 2)).is_err());
    }

    #[test]
    fn click_histogram_compare_identical_and_peaks() {
        let a = toy_samples(&[("1100", 60), ("1000", 40)]);
        let b = toy_samples(&[("0011", 60), ("0001", 40)]);
        let cmp = click_histogram_compare(&[("a", &a), ("b", &b)]).unwrap();
        assert_eq!(cmp.pairwise_tvd[0][1], 0.0); // identical click-number shape
        assert_eq!(cmp.peaks, vec![2, 2]);
        let c = toy_samples(&[("1110", 80), ("1000", 20)]);
        let cmp2 = click_histogram_compare(&[("a", &a), ("c", &c)]).unwrap();
        assert_eq!(cmp2.peak_shift(0, 1), 1);
        assert!(cmp2.pairwise_tvd[0][1] > 0.0);
    }

    #[test]
    fn haar_unitary_properties() {
        let u = haar_generate::<f64>(40, 7);
        assert!(u.unitarity_residual() < 1e-12);
        for j in 0..40 {
            let norm: f64 = (0..40).map(|i| u[(i, j)].norm_sqr()).sum();
            assert_relative_eq!(norm, 1.0, epsilon = 1e-12);
        }
        let report = haar_checks(&u, 5000);
        assert!(report.amplitude_p > 0.01, "{report:?}");
        assert!(report.phase_p > 0.01, "{report:?}");
        assert!(report.passes(1e-12, 0.01));
    }

    #[test]
    fn haar_checks_flag_identity_matrix() {
        let id = CMatrix::<f64>::identity(30);
        let report = haar_checks(&id, 1000);
        assert!(report.unitarity_residual < 1e-14);
        assert!(report.amplitude_p < 1e-6, "{report:?}");
    }

    #[test]
    fn haar_checks_flag_non_unitary() {
        // row-normalized random matrix: rows have unit norm, columns do not
        let mut rng = crate::rng::from_seed(11);
        let mut mat = CMatrix::<f64>::zeros(20, 20);
        for i in 0..20 {
            let mut norm = 0.0;
            let row: Vec<(f64, f64)> = (0..20)
                .map(|_| {
                    let re: f64 = rand::Rng::random::<f64>(&mut rng) - 0.5;
                    let im: f64 = rand::Rng::random::<f64>(&mut rng) - 0.5;
                    norm += re * re + im * im;
                    (re, im)
                })
                .collect();
            let scale = norm.sqrt();
            for (j, (re, im)) in row.into_iter().enumerate() {
                mat[(i, j)] = C::new(re / scale, im / scale);
            }
        }
        let report = haar_checks(&mat, 400);
        assert!(report.unitarity_residual > 1e-3, "{report:?}");
    }

    #[test]
    fn haar_m2_amplitude_is_uniform() {
        // for m = 2 the |U_00|^2 law is Beta(1,1), i.e. uniform on [0,1]
        let mut values = Vec::with_capacity(10_000);
        for seed in 0..10_000u64 {
            let u = haar_generate::<f64>(2, 1_000_000 + seed);
            values.push(u[(0, 0)].norm_sqr());
        }
        let (d, p) = ks_one_sample(&values, |y| y.clamp(0.0, 1.0));
        assert!(p > 0.01, "d={d} p={p}");
    }

    #[test]
    fn probability_curve_separates_uniform() {
        let spec = ExperimentSpec::new(
            vec![
                SourceSpec::tmss(1.1, 0.0, 0.95),
                SourceSpec::tmss(0.9, 0.7, 0.95),
            ],
            vec![vec![0, 1], vec![2, 3]],
            haar_generate::<f64>(10, 17),
            vec![0.9; 10],
            vec![0.9; 10],
        )
        .unwrap();
        let state = spec.build().unwrap();
        let dist = full_distribution(&state).unwrap();
        let band = (2, 5);
        let band_dist = band_conditional(&dist, band).unwrap();
        let ideal_samples = crate::samplers::sample_from_distribution(
            &band_dist,
            4000,
            91,
            SampleMeta::new(crate::samplers::ModelTag::IdealEnum, 91, String::new(), 4000),
        );
        let curve = probability_curve(&dist, &ideal_samples, band, 4000, 50, 13).unwrap();
        assert!(
            curve.self_consistency_p > 0.01,
            "self-consistency p = {}",
            curve.self_consistency_p
        );
        assert!(
            curve.mean_mapped > curve.mean_uniform,
            "{} vs {}",
            curve.mean_mapped,
            curve.mean_uniform
        );

        let uniform_samples = uniform_sampler(10, 4, 4000, 5).unwrap();
        let curve_u = probability_curve(&dist, &uniform_samples, (4, 4), 4000, 50, 13).unwrap();
        assert!(
            curve_u.self_consistency_p < 0.01,
            "uniform batch should fail self-consistency, p = {}",
            curve_u.self_consistency_p
        );
        assert!(curve_u.uniform_separation_sigma < curve.uniform_separation_sigma);
    }

    #[test]
    fn degenerate_single_pattern_band() {
        let v = GaussianState::<f64>::vacuum(3).unwrap();
        let dist = full_distribution(&v).unwrap();
        let samples = toy_samples(&[("000", 10)]);
        let curve = probability_curve(&dist, &samples, (0, 0), 100, 50, 1).unwrap();
        assert_eq!(curve.ideal.counts.iter().sum::<u64>(), 100);
        let busiest = curve.ideal.counts.iter().max().unwrap();
        assert_eq!(*busiest, 100);
    }

    #[test]
    fn ks_pvalue_sane() {
        assert_relative_eq!(ks_pvalue(0.0, 100.0), 1.0, epsilon = 1e-12);
        assert!(ks_pvalue(0.5, 1000.0) < 1e-12);
        let mut rng = crate::rng::from_seed(3);
        let values: Vec<f64> = (0..2000).map(|_| rand::Rng::random(&mut rng)).collect();
        let (_, p) = ks_one_sample(&values, |x| x.clamp(0.0, 1.0));
        assert!(p > 0.01);
    }

    #[test]
    fn chi2_pvalue_sane() {
        assert!(chi2_pvalue(5.0, 10.0) > 0.5);
        assert!(chi2_pvalue(100.0, 10.0) < 1e-10);
        assert_relative_eq!(chi2_pvalue(0.0, 5.0), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn correlation_overlay_separation() {
        let mut overlay = CorrelationOverlay::new(40);
        overlay.push("a", vec![0.1; 50]);
        overlay.push("b", (0..50).map(|i| 0.5 + 0.001 * i as f64).collect());
        assert!(overlay.separation_z(0, 1) > 5.0);
        let csv = overlay.to_csv();
        assert!(csv.starts_with("bin_lo,bin_hi,count_a,density_a,count_b,density_b"));
        assert_eq!(csv.lines().count(), 41);
    }

    #[test]
    fn report_dir_writes_all_sections() {
        let dir = std::env::temp_dir().join("gbs_validation_report_test");
        let _ = std::fs::remove_dir_all(&dir);
        let mut report = ValidationReport::default();
        report.scalars.insert("fidelity".into(), 0.999);
        report.verdicts.insert("thermal_rejected".into(), true);
        let samples = toy_samples(&[("1100", 5)]);
        report.hog.push((
            "thermal".into(),
            hog_test(&samples, (2, 2), |_| Ok(0.5), |_| Ok(0.25), 0.0).unwrap(),
        ));
        report.write_dir(&dir, "#seed=1\n").unwrap();
        assert!(dir.join("report.csv").exists());
        assert!(dir.join("hog_trajectory.csv").exists());
        let text = std::fs::read_to_string(dir.join("report.csv")).unwrap();
        assert!(text.contains("verdict.thermal_rejected,pass"));
    }
}
