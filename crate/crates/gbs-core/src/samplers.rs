//! Click-pattern samplers: three exact routes to the ideal distribution and
//! the three adversarial hypotheses (thermal, distinguishable, uniform).
//!
//! The mock samplers live in [`mock`] and work directly from the experiment
//! description: they never touch the Gaussian probability engine, keeping the
//! null hypotheses structurally independent from the machinery they are
//! tested against.

use std::collections::{BTreeMap, HashMap};
use std::time::Instant;

use thiserror::Error;

use crate::kernels::KernelConfig;
use crate::num::{binomial_f64, Scalar};
use crate::probability::{
    full_distribution_with, ClickLaw, ClickPattern, Distribution, ProbError,
};
use crate::rng::{self, Rng};
use crate::state::{ExperimentSpec, GaussianState, StateError};

pub use mock::{
    distinguishable_full_distribution, distinguishable_mock_sampler, distinguishable_pmf,
    distinguishable_silent_probability, distinguishable_two_point, thermal_mock_sampler,
    uniform_band_sampler, uniform_sampler, DistinguishableProposal,
};

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error(transparent)]
    Prob(#[from] ProbError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("sample {index} aborted: {source}")]
    SampleAborted {
        index: u64,
        #[source]
        source: Box<ProbError>,
    },
    #[error("sample file line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Which model produced a sample set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelTag {
    IdealEnum,
    IdealChain,
    IdealMcmc,
    Thermal,
    Distinguishable,
    Uniform,
}

impl ModelTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelTag::IdealEnum => "IDEAL_ENUM",
            ModelTag::IdealChain => "IDEAL_CHAIN",
            ModelTag::IdealMcmc => "IDEAL_MCMC",
            ModelTag::Thermal => "THERMAL",
            ModelTag::Distinguishable => "DISTINGUISHABLE",
            ModelTag::Uniform => "UNIFORM",
        }
    }
}

impl std::str::FromStr for ModelTag {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "IDEAL_ENUM" => Ok(ModelTag::IdealEnum),
            "IDEAL_CHAIN" => Ok(ModelTag::IdealChain),
            "IDEAL_MCMC" => Ok(ModelTag::IdealMcmc),
            "THERMAL" => Ok(ModelTag::Thermal),
            "DISTINGUISHABLE" => Ok(ModelTag::Distinguishable),
            "UNIFORM" => Ok(ModelTag::Uniform),
            other => Err(format!("unknown model tag '{other}'")),
        }
    }
}

/// Provenance carried by every sample set.
#[derive(Debug, Clone)]
pub struct SampleMeta {
    pub model: ModelTag,
    pub seed: u64,
    pub spec_hash: String,
    pub n_samples: u64,
    /// Wall time of the generation run; not serialized (files stay byte-stable).
    pub wall: std::time::Duration,
    /// Extra named statistics (acceptance rate, kernel calls, ...).
    pub stats: BTreeMap<String, String>,
}

impl SampleMeta {
    pub fn new(model: ModelTag, seed: u64, spec_hash: String, n_samples: u64) -> Self {
        Self {
            model,
            seed,
            spec_hash,
            n_samples,
            wall: std::time::Duration::ZERO,
            stats: BTreeMap::new(),
        }
    }
}

/// Multiset of recorded click patterns, canonically sorted.
#[derive(Debug, Clone)]
pub struct SampleSet {
    m: usize,
    records: Vec<(ClickPattern, u64)>,
    pub meta: SampleMeta,
}

impl SampleSet {
    pub fn from_patterns(
        m: usize,
        patterns: impl IntoIterator<Item = ClickPattern>,
        meta: SampleMeta,
    ) -> Self {
        let mut counts: BTreeMap<ClickPattern, u64> = BTreeMap::new();
        for p in patterns {
            debug_assert_eq!(p.modes(), m);
            *counts.entry(p).or_insert(0) += 1;
        }
        Self {
            m,
            records: counts.into_iter().collect(),
            meta,
        }
    }

    pub fn modes(&self) -> usize {
        self.m
    }

    pub fn records(&self) -> &[(ClickPattern, u64)] {
        &self.records
    }

    pub fn total(&self) -> u64 {
        self.records.iter().map(|(_, c)| c).sum()
    }

    /// Counts per click number (length m + 1).
    pub fn click_histogram(&self) -> Vec<u64> {
        let mut hist = vec![0u64; self.m + 1];
        for (p, c) in &self.records {
            hist[p.clicks()] += c;
        }
        hist
    }

    /// Keep only samples whose click count falls in `[lo, hi]`.
    pub fn filter_band(&self, lo: usize, hi: usize) -> SampleSet {
        let records: Vec<(ClickPattern, u64)> = self
            .records
            .iter()
            .filter(|(p, _)| (lo..=hi).contains(&p.clicks()))
            .cloned()
            .collect();
        let mut meta = self.meta.clone();
        meta.n_samples = records.iter().map(|(_, c)| c).sum();
        SampleSet {
            m: self.m,
            records,
            meta,
        }
    }

    /// Uniform subsample without replacement (deterministic per seed).
    /// Returns the set unchanged when it holds at most `n` samples.
    pub fn subsample(&self, n: u64, seed: u64) -> SampleSet {
        let total = self.total();
        if total <= n {
            return self.clone();
        }
        let mut expanded: Vec<ClickPattern> = Vec::with_capacity(total as usize);
        for (p, c) in &self.records {
            for _ in 0..*c {
                expanded.push(p.clone());
            }
        }
        let mut rng = rng::from_seed(seed);
        let len = expanded.len();
        for i in 0..(n as usize) {
            let j = i + (rand::Rng::random::<u64>(&mut rng) % (len - i) as u64) as usize;
            expanded.swap(i, j);
        }
        expanded.truncate(n as usize);
        let mut meta = self.meta.clone();
        meta.n_samples = n;
        SampleSet::from_patterns(self.m, expanded, meta)
    }

    /// Empirical probabilities over all 2^m patterns (small m only).
    pub fn empirical_probs(&self) -> Vec<f64> {
        assert!(self.m <= 20, "empirical_probs needs small m");
        let mut probs = vec![0.0f64; 1 << self.m];
        let total = self.total() as f64;
        for (p, c) in &self.records {
            probs[p.to_index() as usize] = *c as f64 / total;
        }
        probs
    }

    /// Sample file rendering: `#key=value` headers, one pattern per line.
    pub fn to_text(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        let _ = writeln!(s, "#model={}", self.meta.model.as_str());
        let _ = writeln!(s, "#seed={}", self.meta.seed);
        let _ = writeln!(s, "#m={}", self.m);
        let _ = writeln!(s, "#spec_hash={}", self.meta.spec_hash);
        let _ = writeln!(s, "#version={}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(s, "#samples={}", self.meta.n_samples);
        for (key, value) in &self.meta.stats {
            let _ = writeln!(s, "#stat.{key}={value}");
        }
        for (pattern, count) in &self.records {
            let rendered = pattern.render();
            for _ in 0..*count {
                let _ = writeln!(s, "{rendered}");
            }
        }
        s
    }

    pub fn parse(text: &str) -> Result<SampleSet, SamplerError> {
        let mut model = None;
        let mut seed = None;
        let mut m = None;
        let mut spec_hash = String::new();
        let mut n_samples = None;
        let mut stats = BTreeMap::new();
        let mut patterns = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let bad = |msg: &str| SamplerError::Parse {
                line: lineno + 1,
                msg: msg.to_string(),
            };
            if let Some(header) = line.strip_prefix('#') {
                let (key, value) = header
                    .split_once('=')
                    .ok_or_else(|| bad("header without '='"))?;
                match key {
                    "model" => {
                        model = Some(value.parse::<ModelTag>().map_err(|e| bad(&e))?);
                    }
                    "seed" => seed = Some(value.parse().map_err(|_| bad("bad seed"))?),
                    "m" => m = Some(value.parse().map_err(|_| bad("bad m"))?),
                    "spec_hash" => spec_hash = value.to_string(),
                    "samples" => {
                        n_samples = Some(value.parse().map_err(|_| bad("bad sample count"))?)
                    }
                    "version" => {}
                    other => {
                        if let Some(stat) = other.strip_prefix("stat.") {
                            stats.insert(stat.to_string(), value.to_string());
                        } else {
                            return Err(bad(&format!("unknown header '{other}'")));
                        }
                    }
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let pattern =
                ClickPattern::parse(line.trim()).map_err(|e| bad(&format!("{e}")))?;
            patterns.push(pattern);
        }
        let m = m.ok_or(SamplerError::Parse {
            line: 0,
            msg: "missing #m header".into(),
        })?;
        for p in &patterns {
            if p.modes() != m {
                return Err(SamplerError::Parse {
                    line: 0,
                    msg: format!("pattern length {} differs from m={m}", p.modes()),
                });
            }
        }
        let mut meta = SampleMeta::new(
            model.ok_or(SamplerError::Parse {
                line: 0,
                msg: "missing #model header".into(),
            })?,
            seed.unwrap_or(0),
            spec_hash,
            n_samples.unwrap_or(patterns.len() as u64),
        );
        meta.stats = stats;
        let set = SampleSet::from_patterns(m, patterns, meta);
        if set.total() != set.meta.n_samples {
            return Err(SamplerError::Parse {
                line: 0,
                msg: format!(
                    "#samples={} but {} patterns present",
                    set.meta.n_samples,
                    set.total()
                ),
            });
        }
        Ok(set)
    }
}

/// Inverse-CDF sampling from the exhaustively enumerated distribution.
pub fn enumerate_sampler<T: Scalar>(
    state: &GaussianState<T>,
    spec_hash: &str,
    n_samples: u64,
    seed: u64,
) -> Result<SampleSet, SamplerError> {
    enumerate_sampler_with(state, spec_hash, n_samples, seed, KernelConfig::default())
}

pub fn enumerate_sampler_with<T: Scalar>(
    state: &GaussianState<T>,
    spec_hash: &str,
    n_samples: u64,
    seed: u64,
    cfg: KernelConfig,
) -> Result<SampleSet, SamplerError> {
    let t0 = Instant::now();
    let dist = full_distribution_with(state, cfg)?;
    let mut set = sample_from_distribution(
        &dist,
        n_samples,
        seed,
        SampleMeta::new(ModelTag::IdealEnum, seed, spec_hash.to_string(), n_samples),
    );
    set.meta.wall = t0.elapsed();
    Ok(set)
}

/// Draw from an explicit distribution by binary search on its CDF.
pub fn sample_from_distribution<T: Scalar>(
    dist: &Distribution<T>,
    n_samples: u64,
    seed: u64,
    meta: SampleMeta,
) -> SampleSet {
    let mut cdf = Vec::with_capacity(dist.probs().len());
    let mut acc = 0.0f64;
    for &p in dist.probs() {
        acc += p.to_f64().unwrap_or(0.0).max(0.0);
        cdf.push(acc);
    }
    let norm = acc;
    let mut rng = rng::from_seed(seed);
    let m = dist.modes();
    let patterns = (0..n_samples).map(|_| {
        let u: f64 = rand::Rng::random::<f64>(&mut rng) * norm;
        let idx = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
        ClickPattern::from_index(m, idx as u64)
    });
    SampleSet::from_patterns(m, patterns, meta)
}

/// Mode-by-mode exact sampler: conditionals come from Torontonian prefix
/// marginals on the reduced state, so the output is distributed exactly as
/// the full distribution without ever enumerating it.
pub fn chain_rule_sampler<T: Scalar>(
    state: &GaussianState<T>,
    spec_hash: &str,
    n_samples: u64,
    seed: u64,
) -> Result<SampleSet, SamplerError> {
    chain_rule_sampler_with(state, spec_hash, n_samples, seed, KernelConfig::default())
}

pub fn chain_rule_sampler_with<T: Scalar>(
    state: &GaussianState<T>,
    spec_hash: &str,
    n_samples: u64,
    seed: u64,
    cfg: KernelConfig,
) -> Result<SampleSet, SamplerError> {
    let t0 = Instant::now();
    let m = state.modes();
    if m > 63 {
        return Err(SamplerError::InvalidParameter(format!(
            "chain-rule sampler caps at 63 modes, got {m}"
        )));
    }
    // pre: expected clicks within the kernel budget
    let mut expected = 0.0f64;
    for j in 0..m {
        let silent = crate::probability::silent_probability(state, &[j])?;
        expected += 1.0 - silent.to_f64().unwrap_or(0.0);
    }
    if expected > cfg.max_clicks as f64 {
        return Err(SamplerError::InvalidParameter(format!(
            "expected clicks {expected:.1} exceed the kernel limit {}",
            cfg.max_clicks
        )));
    }

    // One probability law per prefix length.
    let mut laws: Vec<ClickLaw<T>> = Vec::with_capacity(m);
    for t in 0..m {
        let modes: Vec<usize> = (0..=t).collect();
        let reduced = state.reduce(&modes)?;
        laws.push(ClickLaw::with_config(&reduced, cfg.clone())?);
    }

    // prefix marginal cache: (prefix length, prefix bits) -> probability
    let mut cache: HashMap<(usize, u64), f64> = HashMap::new();
    let marginal = |t: usize,
                    bits: u64,
                    index: u64,
                    cache: &mut HashMap<(usize, u64), f64>|
     -> Result<f64, SamplerError> {
        {
            if let Some(&v) = cache.get(&(t, bits)) {
                return Ok(v);
            }
            let pattern = ClickPattern::from_index(t, bits);
            let v = laws[t - 1]
                .pattern_probability(&pattern)
                .map_err(|e| SamplerError::SampleAborted {
                    index,
                    source: Box::new(e),
                })?
                .to_f64()
                .unwrap_or(0.0);
            cache.insert((t, bits), v);
            Ok(v)
        }
    };

    let mut min_cond = f64::INFINITY;
    let mut max_cond = f64::NEG_INFINITY;
    let mut rng = rng::from_seed(seed);
    let mut patterns: Vec<ClickPattern> = Vec::with_capacity(n_samples as usize);
    for index in 0..n_samples {
        let mut bits: u64 = 0;
        let mut p_prefix = 1.0f64;
        for t in 0..m {
            let p_silent_marg = marginal(t + 1, bits, index, &mut cache)?;
            let cond_silent = if p_prefix > 0.0 {
                (p_silent_marg / p_prefix).clamp(0.0, 1.0)
            } else {
                1.0
            };
            min_cond = min_cond.min(cond_silent);
            max_cond = max_cond.max(cond_silent);
            let u: f64 = rand::Rng::random(&mut rng);
            if u < cond_silent {
                p_prefix = p_silent_marg;
            } else {
                bits |= 1 << t;
                p_prefix = marginal(t + 1, bits, index, &mut cache)?;
            }
        }
        patterns.push(ClickPattern::from_index(m, bits));
    }

    let mut meta = SampleMeta::new(ModelTag::IdealChain, seed, spec_hash.to_string(), n_samples);
    meta.stats
        .insert("min_conditional".into(), format!("{min_cond}"));
    meta.stats
        .insert("max_conditional".into(), format!("{max_cond}"));
    meta.stats
        .insert("distinct_prefixes".into(), format!("{}", cache.len()));
    let mut set = SampleSet::from_patterns(m, patterns, meta);
    set.meta.wall = t0.elapsed();
    Ok(set)
}

/// Proposal distribution for the Metropolis independence sampler.
pub trait Proposal<T: Scalar> {
    fn draw(&self, rng: &mut Rng) -> ClickPattern;
    fn pmf(&self, pattern: &ClickPattern) -> T;
}

/// Options for [`mcmc_sampler`]. The defaults (burn-in 1000, thinning 100)
/// reproduce the usual accounting of about one hundred kernel evaluations per
/// retained sample.
#[derive(Debug, Clone)]
pub struct McmcOptions {
    pub burn_in: u64,
    pub thinning: u64,
}

impl Default for McmcOptions {
    fn default() -> Self {
        Self {
            burn_in: 1000,
            thinning: 100,
        }
    }
}

/// Metropolis independence sampler targeting the ideal distribution with the
/// distinguishable mock as proposal.
pub fn mcmc_sampler<T: Scalar>(
    spec: &ExperimentSpec<T>,
    n_samples: u64,
    seed: u64,
    opts: McmcOptions,
) -> Result<SampleSet, SamplerError> {
    let state = spec.build()?;
    let proposal = DistinguishableProposal::new(spec)?;
    mcmc_with_proposal(
        &state,
        &proposal,
        &spec.hash(),
        n_samples,
        seed,
        opts,
        KernelConfig::default(),
    )
}

/// Generic Metropolis independence sampler; exposed for proposal studies.
pub fn mcmc_with_proposal<T: Scalar>(
    state: &GaussianState<T>,
    proposal: &impl Proposal<T>,
    spec_hash: &str,
    n_samples: u64,
    seed: u64,
    opts: McmcOptions,
    cfg: KernelConfig,
) -> Result<SampleSet, SamplerError> {
    let t0 = Instant::now();
    if opts.thinning == 0 {
        return Err(SamplerError::InvalidParameter(
            "thinning must be >= 1".into(),
        ));
    }
    let m = state.modes();
    let law = ClickLaw::with_config(state, cfg)?;
    let mut rng = rng::from_seed(seed);

    let mut target_cache: HashMap<ClickPattern, f64> = HashMap::new();
    let mut kernel_requests: u64 = 0;
    let target_of = |pattern: &ClickPattern,
                         requests: &mut u64,
                         cache: &mut HashMap<ClickPattern, f64>|
     -> Result<f64, SamplerError> {
        *requests += 1;
        if let Some(&p) = cache.get(pattern) {
            return Ok(p);
        }
        let p = law.pattern_probability(pattern)?.to_f64().unwrap_or(0.0);
        cache.insert(pattern.clone(), p);
        Ok(p)
    };

    let mut current = proposal.draw(&mut rng);
    let mut p_current = target_of(&current, &mut kernel_requests, &mut target_cache)?;
    let mut q_current = proposal.pmf(&current).to_f64().unwrap_or(0.0);

    let mut accepted: u64 = 0;
    let mut proposed: u64 = 0;
    let mut retained: Vec<ClickPattern> = Vec::with_capacity(n_samples as usize);
    let total_steps = opts.burn_in + n_samples * opts.thinning;
    for step in 0..total_steps {
        let candidate = proposal.draw(&mut rng);
        let q_candidate = proposal.pmf(&candidate).to_f64().unwrap_or(0.0);
        let p_candidate = target_of(&candidate, &mut kernel_requests, &mut target_cache)?;
        proposed += 1;
        // accept with min(1, p(s')q(s) / (p(s)q(s'))); zero-probability
        // proposals are rejected outright, never divided by
        let numer = p_candidate * q_current;
        let denom = p_current * q_candidate;
        let accept = if denom <= 0.0 {
            numer > 0.0
        } else {
            let ratio = numer / denom;
            ratio >= 1.0 || rand::Rng::random::<f64>(&mut rng) < ratio
        };
        if accept {
            current = candidate;
            p_current = p_candidate;
            q_current = q_candidate;
            accepted += 1;
        }
        if step >= opts.burn_in && (step - opts.burn_in + 1) % opts.thinning == 0 {
            retained.push(current.clone());
        }
    }
    debug_assert_eq!(retained.len() as u64, n_samples);

    let mut meta = SampleMeta::new(ModelTag::IdealMcmc, seed, spec_hash.to_string(), n_samples);
    meta.stats.insert(
        "acceptance_rate".into(),
        format!("{}", accepted as f64 / proposed.max(1) as f64),
    );
    meta.stats.insert(
        "kernel_calls_per_sample".into(),
        format!("{}", kernel_requests as f64 / n_samples.max(1) as f64),
    );
    meta.stats.insert(
        "distinct_kernel_evals".into(),
        format!("{}", target_cache.len()),
    );
    let mut set = SampleSet::from_patterns(m, retained, meta);
    set.meta.wall = t0.elapsed();
    Ok(set)
}

/// Total variation distance between two probability vectors.
pub fn tvd_probs(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len());
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Adversarial-hypothesis samplers. Only the experiment description comes in;
/// nothing here imports the Torontonian/Hafnian machinery.
pub mod mock {
    use super::*;
    use crate::state::SourceKind;
    use rand_distr::{Distribution as _, StandardNormal};

    /// Per-arm routing: probability that a photon entering this arm is
    /// detected at output j (collection, network and detector efficiency
    /// absorbed), plus the total loss probability.
    struct ArmRouting<T: Scalar> {
        weights: Vec<T>,
        lost: T,
        cumulative: Vec<f64>,
    }

    fn arm_routing<T: Scalar>(
        spec: &ExperimentSpec<T>,
        arm_mode: usize,
        eta_collect: T,
    ) -> ArmRouting<T> {
        let m = spec.modes();
        let mut weights = Vec::with_capacity(m);
        let mut total = T::zero();
        for j in 0..m {
            let w = eta_collect
                * spec.unitary[(j, arm_mode)].norm_sqr()
                * spec.eta_network[j]
                * spec.eta_detector[j];
            total += w;
            weights.push(w);
        }
        let lost = (T::one() - total).max(T::zero());
        let mut cumulative = Vec::with_capacity(m);
        let mut acc = 0.0f64;
        for w in &weights {
            acc += w.to_f64().unwrap_or(0.0);
            cumulative.push(acc);
        }
        ArmRouting {
            weights,
            lost,
            cumulative,
        }
    }

    enum MockSource<T: Scalar> {
        /// Pair-number geometric: P(n) = (1 - tanh^2 r) tanh^{2n} r, one
        /// photon per arm per pair.
        TmssPairs { tanh_sq: T, arms: [usize; 2] },
        /// Even photon number from the squeezed-vacuum marginal series.
        SmssPhotons { tanh_sq: T, arm: usize },
        /// Thermal photon number, geometric with ratio nbar/(1+nbar).
        ThermalPhotons { nbar: T, arm: usize },
    }

    struct MockModel<T: Scalar> {
        m: usize,
        sources: Vec<MockSource<T>>,
        routing: Vec<ArmRouting<T>>,
    }

    impl<T: Scalar> MockModel<T> {
        fn new(spec: &ExperimentSpec<T>) -> Result<Self, SamplerError> {
            spec.validate()?;
            let m = spec.modes();
            let mut sources = Vec::new();
            let mut routing = Vec::new();
            for (src, modes) in spec.sources.iter().zip(&spec.mode_map) {
                match src.kind {
                    SourceKind::Tmss => {
                        let slot = routing.len();
                        routing.push(arm_routing(spec, modes[0], src.eta_collect));
                        routing.push(arm_routing(spec, modes[1], src.eta_collect));
                        let t = src.r.tanh();
                        sources.push(MockSource::TmssPairs {
                            tanh_sq: t * t,
                            arms: [slot, slot + 1],
                        });
                    }
                    SourceKind::Smss => {
                        let slot = routing.len();
                        routing.push(arm_routing(spec, modes[0], src.eta_collect));
                        let t = src.r.tanh();
                        sources.push(MockSource::SmssPhotons {
                            tanh_sq: t * t,
                            arm: slot,
                        });
                    }
                    SourceKind::Thermal => {
                        let slot = routing.len();
                        routing.push(arm_routing(spec, modes[0], src.eta_collect));
                        sources.push(MockSource::ThermalPhotons {
                            nbar: src.mean_photons,
                            arm: slot,
                        });
                    }
                    SourceKind::Vacuum => {}
                }
            }
            Ok(Self {
                m,
                sources,
                routing,
            })
        }

        /// P(any photon of this arm is either lost or detected inside the
        /// `visible` mode set).
        fn arm_containment(&self, slot: usize, visible: &[bool]) -> T {
            let r = &self.routing[slot];
            let mut acc = r.lost;
            for (j, &w) in r.weights.iter().enumerate() {
                if visible[j] {
                    acc += w;
                }
            }
            acc
        }

        /// P(every detected photon of every source lies inside `visible`).
        fn containment(&self, visible: &[bool]) -> T {
            let mut acc = T::one();
            for src in &self.sources {
                let g = match src {
                    MockSource::TmssPairs { tanh_sq, arms } => {
                        let a = self.arm_containment(arms[0], visible);
                        let b = self.arm_containment(arms[1], visible);
                        (T::one() - *tanh_sq) / (T::one() - *tanh_sq * a * b)
                    }
                    MockSource::SmssPhotons { tanh_sq, arm } => {
                        let a = self.arm_containment(*arm, visible);
                        // sum_p C(2p,p) (t a / 2)^{2p} / cosh r
                        //   = 1 / (cosh r sqrt(1 - t^2 a^2))
                        let cosh_r = T::one() / (T::one() - *tanh_sq).sqrt();
                        T::one() / (cosh_r * (T::one() - *tanh_sq * a * a).sqrt())
                    }
                    MockSource::ThermalPhotons { nbar, arm } => {
                        let a = self.arm_containment(*arm, visible);
                        T::one() / (T::one() + *nbar * (T::one() - a))
                    }
                };
                acc = acc * g;
            }
            acc
        }

        fn draw_pattern(&self, rng: &mut Rng) -> ClickPattern {
            let mut clicks = vec![false; self.m];
            for src in &self.sources {
                match src {
                    MockSource::TmssPairs { tanh_sq, arms } => {
                        let n = draw_geometric(rng, tanh_sq.to_f64().unwrap_or(0.0));
                        for _ in 0..n {
                            for &arm in arms.iter() {
                                route_photon(&self.routing[arm], rng, &mut clicks);
                            }
                        }
                    }
                    MockSource::SmssPhotons { tanh_sq, arm } => {
                        let pairs = draw_smss_pairs(rng, tanh_sq.to_f64().unwrap_or(0.0));
                        for _ in 0..2 * pairs {
                            route_photon(&self.routing[*arm], rng, &mut clicks);
                        }
                    }
                    MockSource::ThermalPhotons { nbar, arm } => {
                        let nb = nbar.to_f64().unwrap_or(0.0);
                        let n = draw_geometric(rng, nb / (1.0 + nb));
                        for _ in 0..n {
                            route_photon(&self.routing[*arm], rng, &mut clicks);
                        }
                    }
                }
            }
            ClickPattern::new(clicks)
        }
    }

    fn route_photon<T: Scalar>(routing: &ArmRouting<T>, rng: &mut Rng, clicks: &mut [bool]) {
        let u: f64 = rand::Rng::random(rng);
        let idx = routing.cumulative.partition_point(|&c| c <= u);
        if idx < clicks.len() {
            clicks[idx] = true;
        }
        // beyond the cumulative table the photon is lost
    }

    /// Geometric over {0, 1, ...} with P(n) = (1 - q) q^n.
    fn draw_geometric(rng: &mut Rng, q: f64) -> u64 {
        if q <= 0.0 {
            return 0;
        }
        let u: f64 = rand::Rng::random(rng);
        ((1.0 - u).ln() / q.ln()).floor().max(0.0) as u64
    }

    /// Photon-pair count of the squeezed-vacuum marginal:
    /// P(p) = C(2p, p) (tanh^2 r / 4)^p / cosh r.
    fn draw_smss_pairs(rng: &mut Rng, tanh_sq: f64) -> u64 {
        if tanh_sq <= 0.0 {
            return 0;
        }
        let cosh_r = 1.0 / (1.0 - tanh_sq).sqrt();
        let mut p = 0u64;
        let mut mass = 1.0 / cosh_r;
        let mut acc = mass;
        let u: f64 = rand::Rng::random(rng);
        while u >= acc && p < 10_000 {
            // P(p+1)/P(p) = tanh^2 r (2p+1)/(2p+2)
            mass *= tanh_sq * (2 * p + 1) as f64 / (2 * p + 2) as f64;
            acc += mass;
            p += 1;
        }
        p
    }

    /// Exact probability mass of the distinguishable mock via inclusion-
    /// exclusion over subsets of the clicked modes.
    pub fn distinguishable_pmf<T: Scalar>(
        spec: &ExperimentSpec<T>,
        pattern: &ClickPattern,
    ) -> Result<T, SamplerError> {
        let model = MockModel::new(spec)?;
        if pattern.modes() != model.m {
            return Err(SamplerError::InvalidParameter(
                "pattern length differs from spec".into(),
            ));
        }
        let clicked = pattern.clicked_modes();
        let k = clicked.len();
        // silent modes are forbidden territory; inclusion-exclusion runs over
        // which clicked modes are allowed
        let mut visible: Vec<bool> = vec![false; model.m];
        let mut total = T::zero();
        for subset in 0..(1u64 << k) {
            for (bit, &mode) in clicked.iter().enumerate() {
                visible[mode] = subset >> bit & 1 == 1;
            }
            let term = model.containment(&visible);
            if (k - subset.count_ones() as usize) % 2 == 1 {
                total = total - term;
            } else {
                total = total + term;
            }
        }
        Ok(total.max(T::zero()))
    }

    /// P(all modes in `subset` silent) under the distinguishable mock.
    pub fn distinguishable_silent_probability<T: Scalar>(
        spec: &ExperimentSpec<T>,
        subset: &[usize],
    ) -> Result<T, SamplerError> {
        let model = MockModel::new(spec)?;
        let mut visible = vec![true; model.m];
        for &j in subset {
            if j >= model.m {
                return Err(SamplerError::InvalidParameter(format!(
                    "mode {j} out of range"
                )));
            }
            visible[j] = false;
        }
        Ok(model.containment(&visible))
    }

    /// Two-point click correlation of the distinguishable mock.
    pub fn distinguishable_two_point<T: Scalar>(
        spec: &ExperimentSpec<T>,
        i: usize,
        j: usize,
    ) -> Result<T, SamplerError> {
        if i == j {
            return Err(SamplerError::InvalidParameter(
                "two-point correlation needs distinct modes".into(),
            ));
        }
        let both = distinguishable_silent_probability(spec, &[i, j])?;
        let si = distinguishable_silent_probability(spec, &[i])?;
        let sj = distinguishable_silent_probability(spec, &[j])?;
        Ok(both - si * sj)
    }

    /// Distinguishable-photon hypothesis: per source, a classical photon
    /// count is drawn and every photon is routed independently through |U|^2
    /// with per-photon survival; clicks are ORed. No interference anywhere.
    pub fn distinguishable_mock_sampler<T: Scalar>(
        spec: &ExperimentSpec<T>,
        n_samples: u64,
        seed: u64,
    ) -> Result<SampleSet, SamplerError> {
        let t0 = Instant::now();
        let model = MockModel::new(spec)?;
        let mut rng = rng::from_seed(seed);
        let patterns: Vec<ClickPattern> =
            (0..n_samples).map(|_| model.draw_pattern(&mut rng)).collect();
        let mut set = SampleSet::from_patterns(
            model.m,
            patterns,
            SampleMeta::new(ModelTag::Distinguishable, seed, spec.hash(), n_samples),
        );
        set.meta.wall = t0.elapsed();
        Ok(set)
    }

    /// Exact full distribution of the distinguishable mock (small m).
    pub fn distinguishable_full_distribution<T: Scalar>(
        spec: &ExperimentSpec<T>,
    ) -> Result<Distribution<T>, SamplerError> {
        let m = spec.modes();
        if m > crate::probability::FULL_DISTRIBUTION_LIMIT {
            return Err(SamplerError::InvalidParameter(format!(
                "mock enumeration caps at {} modes",
                crate::probability::FULL_DISTRIBUTION_LIMIT
            )));
        }
        let probs: Result<Vec<T>, SamplerError> = (0..1u64 << m)
            .map(|idx| distinguishable_pmf(spec, &ClickPattern::from_index(m, idx)))
            .collect();
        Ok(Distribution::from_probs(m, probs?))
    }

    /// Independence-sampler proposal backed by the distinguishable mock.
    pub struct DistinguishableProposal<T: Scalar> {
        spec: ExperimentSpec<T>,
        model: MockModel<T>,
        pmf_cache: std::cell::RefCell<HashMap<ClickPattern, T>>,
    }

    impl<T: Scalar> DistinguishableProposal<T> {
        pub fn new(spec: &ExperimentSpec<T>) -> Result<Self, SamplerError> {
            Ok(Self {
                spec: spec.clone(),
                model: MockModel::new(spec)?,
                pmf_cache: std::cell::RefCell::new(HashMap::new()),
            })
        }
    }

    impl<T: Scalar> Proposal<T> for DistinguishableProposal<T> {
        fn draw(&self, rng: &mut Rng) -> ClickPattern {
            self.model.draw_pattern(rng)
        }

        fn pmf(&self, pattern: &ClickPattern) -> T {
            if let Some(&p) = self.pmf_cache.borrow().get(pattern) {
                return p;
            }
            let p = distinguishable_pmf(&self.spec, pattern).unwrap_or_else(|_| T::zero());
            self.pmf_cache.borrow_mut().insert(pattern.clone(), p);
            p
        }
    }

    /// Thermal-light hypothesis via the coherent-state decomposition: every
    /// squeezed source becomes thermal light of equal mean photon number,
    /// complex field amplitudes propagate classically through U, and mode j
    /// clicks with probability 1 - exp(-eta_j |beta_j|^2).
    pub fn thermal_mock_sampler<T: Scalar>(
        spec: &ExperimentSpec<T>,
        n_samples: u64,
        seed: u64,
    ) -> Result<SampleSet, SamplerError> {
        let t0 = Instant::now();
        spec.validate()?;
        let m = spec.modes();
        // mean photon number per input arm, collection loss absorbed
        let mut arm_means: Vec<(usize, f64)> = Vec::new();
        for (src, modes) in spec.sources.iter().zip(&spec.mode_map) {
            let nbar = match src.kind {
                SourceKind::Smss | SourceKind::Tmss => {
                    let s = src.r.sinh();
                    (s * s).to_f64().unwrap_or(0.0)
                }
                SourceKind::Thermal => src.mean_photons.to_f64().unwrap_or(0.0),
                SourceKind::Vacuum => 0.0,
            } * src.eta_collect.to_f64().unwrap_or(0.0);
            if nbar > 0.0 {
                for &mode in modes {
                    arm_means.push((mode, nbar));
                }
            }
        }
        let u_f64: Vec<Vec<num_complex::Complex<f64>>> = (0..m)
            .map(|j| {
                (0..m)
                    .map(|k| {
                        let z = spec.unitary[(j, k)];
                        num_complex::Complex::new(
                            z.re.to_f64().unwrap_or(0.0),
                            z.im.to_f64().unwrap_or(0.0),
                        )
                    })
                    .collect()
            })
            .collect();
        let eta_out: Vec<f64> = (0..m)
            .map(|j| {
                (spec.eta_network[j] * spec.eta_detector[j])
                    .to_f64()
                    .unwrap_or(0.0)
            })
            .collect();

        let mut rng = rng::from_seed(seed);
        let mut patterns = Vec::with_capacity(n_samples as usize);
        let mut alphas: Vec<(usize, num_complex::Complex<f64>)> =
            Vec::with_capacity(arm_means.len());
        for _ in 0..n_samples {
            alphas.clear();
            for &(mode, nbar) in &arm_means {
                // circular complex Gaussian with E|alpha|^2 = nbar
                let sd = (nbar / 2.0).sqrt();
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                alphas.push((mode, num_complex::Complex::new(re * sd, im * sd)));
            }
            let mut clicks = vec![false; m];
            for (j, click) in clicks.iter_mut().enumerate() {
                let mut beta = num_complex::Complex::new(0.0, 0.0);
                for &(mode, alpha) in &alphas {
                    beta += u_f64[j][mode] * alpha;
                }
                let p_click = 1.0 - (-eta_out[j] * beta.norm_sqr()).exp();
                if rand::Rng::random::<f64>(&mut rng) < p_click {
                    *click = true;
                }
            }
            patterns.push(ClickPattern::new(clicks));
        }
        let mut set = SampleSet::from_patterns(
            m,
            patterns,
            SampleMeta::new(ModelTag::Thermal, seed, spec.hash(), n_samples),
        );
        set.meta.wall = t0.elapsed();
        Ok(set)
    }

    /// Uniform over the C(m, n_clicks) patterns with exactly n_clicks clicks.
    pub fn uniform_sampler(
        m: usize,
        n_clicks: usize,
        n_samples: u64,
        seed: u64,
    ) -> Result<SampleSet, SamplerError> {
        if n_clicks > m {
            return Err(SamplerError::InvalidParameter(format!(
                "{n_clicks} clicks on {m} modes"
            )));
        }
        let t0 = Instant::now();
        let mut rng = rng::from_seed(seed);
        let mut modes: Vec<usize> = (0..m).collect();
        let mut patterns = Vec::with_capacity(n_samples as usize);
        for _ in 0..n_samples {
            patterns.push(draw_exact_clicks(&mut rng, &mut modes, m, n_clicks));
        }
        let mut set = SampleSet::from_patterns(
            m,
            patterns,
            SampleMeta::new(ModelTag::Uniform, seed, String::new(), n_samples),
        );
        set.meta.wall = t0.elapsed();
        Ok(set)
    }

    /// Uniform over all patterns whose click count lies in `[lo, hi]`, each
    /// count weighted by its population C(m, n).
    pub fn uniform_band_sampler(
        m: usize,
        lo: usize,
        hi: usize,
        n_samples: u64,
        seed: u64,
    ) -> Result<SampleSet, SamplerError> {
        if lo > hi || hi > m {
            return Err(SamplerError::InvalidParameter(format!(
                "bad click band [{lo}, {hi}] for {m} modes"
            )));
        }
        let t0 = Instant::now();
        let weights: Vec<f64> = (lo..=hi)
            .map(|n| binomial_f64(m as u64, n as u64))
            .collect();
        let total: f64 = weights.iter().sum();
        let mut cdf = Vec::with_capacity(weights.len());
        let mut acc = 0.0;
        for w in &weights {
            acc += w / total;
            cdf.push(acc);
        }
        let mut rng = rng::from_seed(seed);
        let mut modes: Vec<usize> = (0..m).collect();
        let mut patterns = Vec::with_capacity(n_samples as usize);
        for _ in 0..n_samples {
            let u: f64 = rand::Rng::random(&mut rng);
            let n_clicks = lo + cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
            patterns.push(draw_exact_clicks(&mut rng, &mut modes, m, n_clicks));
        }
        let mut set = SampleSet::from_patterns(
            m,
            patterns,
            SampleMeta::new(ModelTag::Uniform, seed, String::new(), n_samples),
        );
        set.meta.wall = t0.elapsed();
        Ok(set)
    }

    /// Partial Fisher-Yates: uniform n-subset of the m modes.
    fn draw_exact_clicks(
        rng: &mut Rng,
        modes: &mut [usize],
        m: usize,
        n_clicks: usize,
    ) -> ClickPattern {
        for i in 0..n_clicks {
            let j = i + (rand::Rng::random::<u64>(rng) % (m - i) as u64) as usize;
            modes.swap(i, j);
        }
        let mut bits = vec![false; m];
        for &mode in &modes[..n_clicks] {
            bits[mode] = true;
        }
        ClickPattern::new(bits)
    }
}
