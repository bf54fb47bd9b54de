//! Kernel-scaling measurement, exponential cost-model fitting, and the
//! supercomputer cost-estimation methodology.
//!
//! Timing runs are strictly serialized (one evaluation at a time) to avoid
//! contention noise; each record reports the median of at least three
//! repetitions. Absolute times are machine-local; the deliverables are the
//! fitted doubling ratio per click and the cost-table methodology, with the
//! published two-point benchmark anchor available as an alternative model.

use std::time::Instant;

use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::kernels::{torontonian_with, KernelConfig, KernelError, KernelMatrix};
use crate::num::Scalar;
use crate::probability::{ClickLaw, ProbError};
use crate::rng;
use crate::state::GaussianState;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("need at least {need} records, got {got}")]
    TooFewRecords { need: usize, got: usize },
    #[error("degenerate click range: all records share k = {0}")]
    DegenerateRange(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Prob(#[from] ProbError),
    #[error("bench csv line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// One timed kernel evaluation (median of `repetitions` runs).
#[derive(Debug, Clone)]
pub struct TimingRecord {
    pub k: usize,
    pub wall_seconds: f64,
    pub min_seconds: f64,
    pub max_seconds: f64,
    pub value: f64,
    pub error_estimate: f64,
    pub repetitions: u32,
}

/// Time the Torontonian on random k-click kernels drawn from a reference
/// state, for every k in `k_lo..=k_hi`.
pub fn time_torontonian<T: Scalar>(
    state: &GaussianState<T>,
    k_lo: usize,
    k_hi: usize,
    seed: u64,
    repetitions: u32,
    cfg: &KernelConfig,
) -> Result<Vec<TimingRecord>, BenchError> {
    if repetitions < 3 {
        return Err(BenchError::InvalidParameter(
            "repetitions must be at least 3 (median of runs)".into(),
        ));
    }
    let m = state.modes();
    if k_hi > m {
        return Err(BenchError::InvalidParameter(format!(
            "k_hi {k_hi} exceeds the {m}-mode reference state"
        )));
    }
    if k_lo > k_hi {
        return Err(BenchError::InvalidParameter(format!(
            "empty click range {k_lo}..{k_hi}"
        )));
    }
    let law = ClickLaw::with_config(state, cfg.clone())?;
    let o = law.kernel_matrix();
    let mut records = Vec::with_capacity(k_hi - k_lo + 1);
    for k in k_lo..=k_hi {
        // deterministic random subset of clicked modes for this k
        let mut rng = rng::substream(seed, k as u64);
        let mut modes: Vec<usize> = (0..m).collect();
        for i in 0..k {
            let j = i + (rand::Rng::random::<u64>(&mut rng) % (m - i) as u64) as usize;
            modes.swap(i, j);
        }
        let clicked = &mut modes[..k];
        clicked.sort_unstable();
        let idx: Vec<usize> = clicked
            .iter()
            .copied()
            .chain(clicked.iter().map(|&i| i + m))
            .collect();
        let kernel = KernelMatrix::new(o.principal_submatrix(&idx))?;

        let mut times = Vec::with_capacity(repetitions as usize);
        let mut value = 0.0;
        let mut error_estimate = 0.0;
        for _ in 0..repetitions {
            let t0 = Instant::now();
            let tor = torontonian_with(&kernel, cfg)?;
            let dt = t0.elapsed().as_secs_f64();
            std::hint::black_box(tor.value);
            times.push(dt.max(1e-9));
            value = tor.value.to_f64().unwrap_or(f64::NAN);
            error_estimate = tor.error_estimate.to_f64().unwrap_or(f64::NAN);
        }
        times.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = times[times.len() / 2];
        records.push(TimingRecord {
            k,
            wall_seconds: median,
            min_seconds: times[0],
            max_seconds: *times.last().unwrap(),
            value,
            error_estimate,
            repetitions,
        });
    }
    Ok(records)
}

/// Least-squares fit of log2(time) against k.
#[derive(Debug, Clone)]
pub struct ScalingFit {
    /// Slope in doublings per click.
    pub log2_slope: f64,
    /// Intercept: log2(seconds) at k = 0.
    pub intercept: f64,
    /// None when the inputs carry no variance to explain (flagged).
    pub r_squared: Option<f64>,
    pub slope_stderr: f64,
    pub n: usize,
}

impl ScalingFit {
    /// Multiplicative runtime growth per extra click.
    pub fn doubling_ratio(&self) -> f64 {
        self.log2_slope.exp2()
    }

    /// 95% confidence interval for the doubling ratio (t-distribution).
    pub fn ratio_ci95(&self) -> (f64, f64) {
        let dof = (self.n as f64 - 2.0).max(1.0);
        let t = StudentsT::new(0.0, 1.0, dof)
            .map(|d| d.inverse_cdf(0.975))
            .unwrap_or(2.0);
        let delta = t * self.slope_stderr;
        (
            (self.log2_slope - delta).exp2(),
            (self.log2_slope + delta).exp2(),
        )
    }

    /// Modeled kernel time at click number k.
    pub fn t_model(&self, k: f64) -> f64 {
        (self.log2_slope * k + self.intercept).exp2()
    }
}

pub fn fit_scaling(records: &[TimingRecord]) -> Result<ScalingFit, BenchError> {
    if records.len() < 5 {
        return Err(BenchError::TooFewRecords {
            need: 5,
            got: records.len(),
        });
    }
    let k0 = records[0].k;
    if records.iter().all(|r| r.k == k0) {
        return Err(BenchError::DegenerateRange(k0));
    }
    let n = records.len() as f64;
    let xs: Vec<f64> = records.iter().map(|r| r.k as f64).collect();
    let ys: Vec<f64> = records.iter().map(|r| r.wall_seconds.log2()).collect();
    let x_mean = xs.iter().sum::<f64>() / n;
    let y_mean = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - x_mean).powi(2)).sum();
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - x_mean) * (y - y_mean))
        .sum();
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let sst: f64 = ys.iter().map(|y| (y - y_mean).powi(2)).sum();
    let sse: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - (slope * x + intercept)).powi(2))
        .sum();
    let r_squared = if sst > 0.0 { Some(1.0 - sse / sst) } else { None };
    let dof = (n - 2.0).max(1.0);
    let slope_stderr = (sse / dof / sxx).sqrt();
    Ok(ScalingFit {
        log2_slope: slope,
        intercept,
        r_squared,
        slope_stderr,
        n: records.len(),
    })
}

/// Two-point benchmark anchor from the published supercomputer runs:
/// roughly 0.03 s at 30 clicks and 2 days at 50 clicks.
#[derive(Debug, Clone)]
pub struct AnchorModel {
    pub k_lo: f64,
    pub t_lo_seconds: f64,
    pub k_hi: f64,
    pub t_hi_seconds: f64,
}

impl Default for AnchorModel {
    fn default() -> Self {
        Self {
            k_lo: 30.0,
            t_lo_seconds: 0.03,
            k_hi: 50.0,
            t_hi_seconds: 2.0 * 86_400.0,
        }
    }
}

impl AnchorModel {
    /// Average doubling ratio per click between the two anchor points.
    pub fn doubling_ratio(&self) -> f64 {
        (self.t_hi_seconds / self.t_lo_seconds).powf(1.0 / (self.k_hi - self.k_lo))
    }

    /// Ratio band implied by the one-significant-figure rounding of the two
    /// published times (0.025..0.035 s and 1.5..2.5 days).
    pub fn ratio_bounds(&self) -> (f64, f64) {
        let span = self.k_hi - self.k_lo;
        let lo = (self.t_hi_seconds * 0.75 / (self.t_lo_seconds * 7.0 / 6.0)).powf(1.0 / span);
        let hi = (self.t_hi_seconds * 1.25 / (self.t_lo_seconds * 5.0 / 6.0)).powf(1.0 / span);
        (lo, hi)
    }

    pub fn log2_slope(&self) -> f64 {
        self.doubling_ratio().log2()
    }

    /// Modeled supercomputer seconds at click number k.
    pub fn t_model(&self, k: f64) -> f64 {
        self.t_lo_seconds * self.doubling_ratio().powf(k - self.k_lo)
    }

    /// Average doubling ratio over a window under the shared
    /// 2^k * k^3 kernel work law.
    pub fn window_ratio(k_lo: f64, k_hi: f64) -> f64 {
        2.0 * (k_hi / k_lo).powf(3.0 / (k_hi - k_lo))
    }

    /// Translate the anchor's measured ratio from its own click window into
    /// another window, correcting for the polynomial factor of the kernel
    /// work law. This is the hardware/window normalization used when
    /// comparing the anchor against a locally fitted ratio.
    pub fn ratio_in_window(&self, k_lo: f64, k_hi: f64) -> f64 {
        self.doubling_ratio() * Self::window_ratio(k_lo, k_hi)
            / Self::window_ratio(self.k_lo, self.k_hi)
    }

    /// Same translation applied to the rounding band.
    pub fn ratio_bounds_in_window(&self, k_lo: f64, k_hi: f64) -> (f64, f64) {
        let f = Self::window_ratio(k_lo, k_hi) / Self::window_ratio(self.k_lo, self.k_hi);
        let (lo, hi) = self.ratio_bounds();
        (lo * f, hi * f)
    }
}

/// One row of the classical-cost table.
#[derive(Debug, Clone)]
pub struct CostRow {
    pub n_clicks: usize,
    pub counts: f64,
    pub t_model_seconds: f64,
    pub cost_seconds: f64,
    /// Poissonian propagation: sqrt(counts) x per-sample cost.
    pub cost_err: f64,
    pub extrapolated: bool,
}

#[derive(Debug, Clone)]
pub struct CostTable {
    pub rows: Vec<CostRow>,
    pub torontonians_per_sample: f64,
    pub total_seconds: f64,
}

impl CostTable {
    /// Click number with the highest cost contribution.
    pub fn peak(&self) -> Option<usize> {
        self.rows
            .iter()
            .max_by(|a, b| a.cost_seconds.partial_cmp(&b.cost_seconds).unwrap())
            .map(|r| r.n_clicks)
    }
}

/// Classical time to regenerate a click-number histogram:
/// cost(N) = counts(N) x torontonians_per_sample x t_model(N).
///
/// Rows with N beyond `measured_max_k` are labeled extrapolated.
pub fn estimate_classical_cost(
    histogram: &[(usize, f64)],
    t_model: impl Fn(f64) -> f64,
    torontonians_per_sample: f64,
    measured_max_k: usize,
) -> CostTable {
    let mut rows = Vec::with_capacity(histogram.len());
    let mut total = 0.0f64;
    for &(n_clicks, counts) in histogram {
        let t = t_model(n_clicks as f64);
        let per_sample = torontonians_per_sample * t;
        let cost = counts * per_sample;
        let err = counts.max(0.0).sqrt() * per_sample;
        total += cost;
        rows.push(CostRow {
            n_clicks,
            counts,
            t_model_seconds: t,
            cost_seconds: cost,
            cost_err: err,
            extrapolated: n_clicks > measured_max_k,
        });
    }
    CostTable {
        rows,
        torontonians_per_sample,
        total_seconds: total,
    }
}

/// Synthetic click-number histogram with the qualitative shape of a
/// high-throughput threshold-detector run: a discretized normal centered on
/// the published mean (43) with a width that leaves a single event near the
/// largest observed coincidence (76) out of 5e7 shots.
pub fn reference_click_histogram(
    total_events: f64,
    mean: f64,
    sd: f64,
    max_n: usize,
) -> Vec<(usize, f64)> {
    let norm = 1.0 / (sd * (2.0 * std::f64::consts::PI).sqrt());
    (0..=max_n)
        .map(|n| {
            let z = (n as f64 - mean) / sd;
            (n, total_events * norm * (-0.5 * z * z).exp())
        })
        .collect()
}

/// bench.csv rendering: one row per timing record.
pub fn bench_to_csv(records: &[TimingRecord]) -> String {
    use std::fmt::Write;
    let mut s = String::from("k,median_seconds,min,max,value,error_estimate\n");
    for r in records {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            r.k, r.wall_seconds, r.min_seconds, r.max_seconds, r.value, r.error_estimate
        );
    }
    s
}

pub fn bench_from_csv(text: &str) -> Result<Vec<TimingRecord>, BenchError> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 || line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(BenchError::Parse {
                line: lineno + 1,
                msg: format!("expected 6 columns, got {}", fields.len()),
            });
        }
        let parse = |idx: usize| -> Result<f64, BenchError> {
            fields[idx].trim().parse().map_err(|_| BenchError::Parse {
                line: lineno + 1,
                msg: format!("bad number '{}'", fields[idx]),
            })
        };
        out.push(TimingRecord {
            k: parse(0)? as usize,
            wall_seconds: parse(1)?,
            min_seconds: parse(2)?,
            max_seconds: parse(3)?,
            value: parse(4)?,
            error_estimate: parse(5)?,
            repetitions: 3,
        });
    }
    Ok(out)
}

/// cost.csv rendering.
pub fn cost_to_csv(table: &CostTable) -> String {
    use std::fmt::Write;
    let mut s = String::from("N,counts,t_model_seconds,cost_seconds,cost_err,regime\n");
    for r in &table.rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            r.n_clicks,
            r.counts,
            r.t_model_seconds,
            r.cost_seconds,
            r.cost_err,
            if r.extrapolated {
                "EXTRAPOLATED"
            } else {
                "MEASURED"
            }
        );
    }
    let _ = writeln!(s, "total,,,{},,", table.total_seconds);
    s
}
