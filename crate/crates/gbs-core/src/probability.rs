//! From states and detector patterns to probabilities.
//!
//! Threshold-detector probabilities follow `p(S) = Tor(O_S) / sqrt(det Q)`
//! with `Q = sigma + I/2` and `O = I - Q^{-1}`; photon-number-resolved
//! probabilities follow the Hafnian law and serve as the cross-check path,
//! together with a permanent-based Fock-space oracle.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use rayon::prelude::*;
use thiserror::Error;

use crate::kernels::{self, KernelConfig, KernelError, KernelMatrix};
use crate::linalg::CMatrix;
use crate::num::{real, CompensatedSum, Scalar, C};
use crate::state::{ExperimentSpec, GaussianState, SourceKind, StateError};

#[derive(Debug, Error)]
pub enum ProbError {
    #[error(transparent)]
    State(#[from] StateError),
    #[error("kernel failure for pattern {pattern}: {source}")]
    PatternKernel {
        pattern: String,
        #[source]
        source: KernelError,
    },
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("{m} modes exceed the full-distribution limit {limit} (would need {bytes} bytes)")]
    TooManyModes { m: usize, limit: usize, bytes: u128 },
    #[error("numerically invalid result: value {value:e} below -(error estimate {error:e})")]
    NumericallyInvalid { value: f64, error: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Length-m binary detector outcome; `bits[i] = true` means detector `i` clicked.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClickPattern {
    bits: Vec<bool>,
}

impl ClickPattern {
    pub fn new(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    pub fn silent(m: usize) -> Self {
        Self {
            bits: vec![false; m],
        }
    }

    /// Pattern from a bitmask index: bit `j` of `index` is mode `j`.
    pub fn from_index(m: usize, index: u64) -> Self {
        Self {
            bits: (0..m).map(|j| index >> j & 1 == 1).collect(),
        }
    }

    pub fn to_index(&self) -> u64 {
        debug_assert!(self.bits.len() <= 63);
        self.bits
            .iter()
            .enumerate()
            .fold(0u64, |acc, (j, &b)| if b { acc | 1 << j } else { acc })
    }

    pub fn modes(&self) -> usize {
        self.bits.len()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn clicks(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn clicked_modes(&self) -> Vec<usize> {
        (0..self.bits.len()).filter(|&i| self.bits[i]).collect()
    }

    pub fn render(&self) -> String {
        self.bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }

    pub fn parse(s: &str) -> Result<Self, ProbError> {
        let bits: Result<Vec<bool>, _> = s
            .chars()
            .map(|ch| match ch {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(ProbError::InvalidParameter(format!(
                    "pattern character '{other}' is not 0/1"
                ))),
            })
            .collect();
        Ok(Self { bits: bits? })
    }
}

impl std::fmt::Display for ClickPattern {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.render())
    }
}

/// Photon-number occupation per mode.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FockPattern {
    pub occupations: Vec<usize>,
}

impl FockPattern {
    pub fn new(occupations: Vec<usize>) -> Self {
        Self { occupations }
    }

    pub fn total(&self) -> usize {
        self.occupations.iter().sum()
    }

    /// Threshold a photon-number outcome into a click outcome.
    pub fn to_clicks(&self) -> ClickPattern {
        ClickPattern::new(self.occupations.iter().map(|&n| n > 0).collect())
    }
}

/// Precomputed click-probability law for one state.
///
/// Holds `sqrt(det Q)` and `O = I - Q^{-1}` so that batches of patterns share
/// the matrix setup.
pub struct ClickLaw<T: Scalar> {
    m: usize,
    sqrt_det_q: T,
    o: CMatrix<T>,
    cfg: KernelConfig,
}

impl<T: Scalar> ClickLaw<T> {
    pub fn new(state: &GaussianState<T>) -> Result<Self, ProbError> {
        Self::with_config(state, KernelConfig::default())
    }

    pub fn with_config(state: &GaussianState<T>, cfg: KernelConfig) -> Result<Self, ProbError> {
        let q = state.husimi();
        let sqrt_det_q = q.sqrt_det_hpd().map_err(StateError::from)?;
        let q_inv = q.inverse_hpd().map_err(StateError::from)?;
        let mut o = q_inv.scale(-T::one());
        for i in 0..o.rows() {
            o[(i, i)] += C::new(T::one(), T::zero());
        }
        Ok(Self {
            m: state.modes(),
            sqrt_det_q,
            o,
            cfg,
        })
    }

    pub fn modes(&self) -> usize {
        self.m
    }

    pub fn sqrt_det_q(&self) -> T {
        self.sqrt_det_q
    }

    pub fn kernel_matrix(&self) -> &CMatrix<T> {
        &self.o
    }

    /// Kernel for the clicked modes of `pattern` (rows/cols `i` and `i+m`).
    pub fn kernel_for(&self, pattern: &ClickPattern) -> Result<KernelMatrix<T>, ProbError> {
        if pattern.modes() != self.m {
            return Err(ProbError::Dimension(format!(
                "pattern has {} modes, state has {}",
                pattern.modes(),
                self.m
            )));
        }
        let clicked = pattern.clicked_modes();
        let idx: Vec<usize> = clicked
            .iter()
            .copied()
            .chain(clicked.iter().map(|&i| i + self.m))
            .collect();
        let sub = self.o.principal_submatrix(&idx);
        KernelMatrix::new(sub).map_err(|source| ProbError::PatternKernel {
            pattern: pattern.render(),
            source,
        })
    }

    /// p(pattern) = Tor(O_S) / sqrt(det Q), clamped into [0, 1] within the
    /// kernel error estimate.
    pub fn pattern_probability(&self, pattern: &ClickPattern) -> Result<T, ProbError> {
        let kernel = self.kernel_for(pattern)?;
        let tor =
            kernels::torontonian_with(&kernel, &self.cfg).map_err(|source| {
                ProbError::PatternKernel {
                    pattern: pattern.render(),
                    source,
                }
            })?;
        if tor.value < -tor.error_estimate {
            return Err(ProbError::NumericallyInvalid {
                value: tor.value.to_f64().unwrap_or(f64::NAN),
                error: tor.error_estimate.to_f64().unwrap_or(f64::NAN),
            });
        }
        let p = tor.value.max(T::zero()) / self.sqrt_det_q;
        Ok(p.min(T::one()))
    }
}

/// Probability of observing exactly `pattern` on `state`.
pub fn click_probability<T: Scalar>(
    state: &GaussianState<T>,
    pattern: &ClickPattern,
) -> Result<T, ProbError> {
    ClickLaw::new(state)?.pattern_probability(pattern)
}

/// Probability that every mode in `subset` stays silent (others unconstrained):
/// `1 / sqrt(det Q_A)` on the reduced state.
pub fn silent_probability<T: Scalar>(
    state: &GaussianState<T>,
    subset: &[usize],
) -> Result<T, ProbError> {
    if subset.is_empty() {
        log::warn!("silent_probability over an empty subset is trivially 1");
        return Ok(T::one());
    }
    let reduced = state.reduce(subset)?;
    let sqrt_det = reduced
        .husimi()
        .sqrt_det_hpd()
        .map_err(StateError::from)?;
    Ok((T::one() / sqrt_det).min(T::one()))
}

/// Two-point click correlation `C_ij = <Pi_i Pi_j> - <Pi_i><Pi_j>`, computed
/// through silent probabilities (algebraically identical).
pub fn two_point_theory<T: Scalar>(
    state: &GaussianState<T>,
    i: usize,
    j: usize,
) -> Result<T, ProbError> {
    if i == j {
        return Err(ProbError::InvalidParameter(
            "two-point correlation needs distinct modes".into(),
        ));
    }
    let both = silent_probability(state, &[i, j])?;
    let si = silent_probability(state, &[i])?;
    let sj = silent_probability(state, &[j])?;
    Ok(both - si * sj)
}

/// Exhaustive click distribution over all 2^m patterns.
#[derive(Debug, Clone)]
pub struct Distribution<T: Scalar> {
    m: usize,
    probs: Vec<T>,
}

impl<T: Scalar> Distribution<T> {
    pub fn from_probs(m: usize, probs: Vec<T>) -> Self {
        assert_eq!(probs.len(), 1 << m);
        Self { m, probs }
    }

    pub fn modes(&self) -> usize {
        self.m
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn prob(&self, pattern: &ClickPattern) -> T {
        self.probs[pattern.to_index() as usize]
    }

    pub fn pattern(&self, index: usize) -> ClickPattern {
        ClickPattern::from_index(self.m, index as u64)
    }

    pub fn normalization(&self) -> T {
        let mut acc = CompensatedSum::new();
        for &p in &self.probs {
            acc.add(p);
        }
        acc.value()
    }

    /// Probability mass per click count.
    pub fn click_number_histogram(&self) -> Vec<T> {
        let mut hist = vec![T::zero(); self.m + 1];
        for (idx, &p) in self.probs.iter().enumerate() {
            hist[(idx as u64).count_ones() as usize] = hist[(idx as u64).count_ones() as usize] + p;
        }
        hist
    }

    pub fn marginal_silent(&self, mode: usize) -> T {
        let mut acc = CompensatedSum::new();
        for (idx, &p) in self.probs.iter().enumerate() {
            if idx >> mode & 1 == 0 {
                acc.add(p);
            }
        }
        acc.value()
    }

    /// CSV rendering with columns `pattern,probability`.
    pub fn to_csv(&self) -> String {
        use std::fmt::Write;
        let mut s = String::from("pattern,probability\n");
        for idx in 0..self.probs.len() {
            let _ = writeln!(s, "{},{}", self.pattern(idx).render(), self.probs[idx]);
        }
        s
    }
}

/// Maximum mode count for exhaustive enumeration.
pub const FULL_DISTRIBUTION_LIMIT: usize = 14;

/// Evaluate every click pattern of the state; the result sums to 1 within
/// numerical error.
pub fn full_distribution<T: Scalar>(state: &GaussianState<T>) -> Result<Distribution<T>, ProbError> {
    full_distribution_with(state, KernelConfig::default())
}

pub fn full_distribution_with<T: Scalar>(
    state: &GaussianState<T>,
    cfg: KernelConfig,
) -> Result<Distribution<T>, ProbError> {
    let m = state.modes();
    if m > FULL_DISTRIBUTION_LIMIT {
        return Err(ProbError::TooManyModes {
            m,
            limit: FULL_DISTRIBUTION_LIMIT,
            bytes: (1u128 << m) * std::mem::size_of::<T>() as u128,
        });
    }
    let law = ClickLaw::with_config(state, cfg)?;
    let probs: Result<Vec<T>, ProbError> = (0..1usize << m)
        .into_par_iter()
        .map(|idx| law.pattern_probability(&ClickPattern::from_index(m, idx as u64)))
        .collect();
    Ok(Distribution {
        m,
        probs: probs?,
    })
}

fn factorial<T: Scalar>(n: usize) -> T {
    let mut acc = T::one();
    for v in 1..=n {
        acc = acc * real::<T>(v as f64);
    }
    acc
}

/// Photon-number-resolved probability through the Hafnian law.
///
/// The pair-correlation matrix is `A = X (I - Q^{-1})` with `X` the
/// half-swap; rows/columns are repeated per occupation. Pure states factor
/// through the m x m amplitude block (`|haf|^2`), mixed states use the full
/// 2N x 2N matrix. The sign/ordering convention is pinned by agreement with
/// [`fock_oracle`].
pub fn fock_probability<T: Scalar>(
    state: &GaussianState<T>,
    pattern: &FockPattern,
) -> Result<T, ProbError> {
    fock_probability_with(state, pattern, &KernelConfig::default())
}

pub fn fock_probability_with<T: Scalar>(
    state: &GaussianState<T>,
    pattern: &FockPattern,
    cfg: &KernelConfig,
) -> Result<T, ProbError> {
    let m = state.modes();
    if pattern.occupations.len() != m {
        return Err(ProbError::Dimension(format!(
            "pattern has {} modes, state has {m}",
            pattern.occupations.len()
        )));
    }
    let q = state.husimi();
    let sqrt_det_q = q.sqrt_det_hpd().map_err(StateError::from)?;
    let q_inv = q.inverse_hpd().map_err(StateError::from)?;
    let n2 = 2 * m;
    // A = X (I - Q^{-1})
    let a = CMatrix::from_fn(n2, n2, |i, j| {
        let src = (i + m) % n2;
        let o_ij = if src == j {
            C::new(T::one(), T::zero()) - q_inv[(src, j)]
        } else {
            -q_inv[(src, j)]
        };
        o_ij
    });
    let n_total = pattern.total();
    if n_total == 0 {
        return Ok(T::one() / sqrt_det_q);
    }
    let norm = sqrt_det_q
        * pattern
            .occupations
            .iter()
            .map(|&n| factorial::<T>(n))
            .fold(T::one(), |acc, f| acc * f);

    let purity = state.purity().map_err(ProbError::State)?;
    let pure = (purity - T::one()).abs() < real::<T>(1e-9).max(T::epsilon() * real(1e3));
    if pure {
        // amplitude block: bottom-right m x m of A
        let b = CMatrix::from_fn(m, m, |i, j| a[(i + m, j + m)]);
        let mut idx = Vec::with_capacity(n_total);
        for (mode, &n) in pattern.occupations.iter().enumerate() {
            idx.extend(std::iter::repeat(mode).take(n));
        }
        let haf = kernels::hafnian_with(&b.principal_submatrix(&idx), cfg)?;
        Ok(haf.norm_sqr() / norm)
    } else {
        let mut idx = Vec::with_capacity(2 * n_total);
        for (mode, &n) in pattern.occupations.iter().enumerate() {
            idx.extend(std::iter::repeat(mode).take(n));
        }
        for (mode, &n) in pattern.occupations.iter().enumerate() {
            idx.extend(std::iter::repeat(mode + m).take(n));
        }
        let haf = kernels::hafnian_with(&a.principal_submatrix(&idx), cfg)?;
        Ok(haf.re.max(T::zero()) / norm)
    }
}

/// `<out|U|in>` for photon-number patterns: permanent of the row/column
/// repeated submatrix over `sqrt(prod in_i! prod out_j!)`.
pub fn fock_transition_amplitude<T: Scalar>(
    u: &CMatrix<T>,
    input: &FockPattern,
    output: &FockPattern,
) -> Result<C<T>, ProbError> {
    let m = u.rows();
    if input.occupations.len() != m || output.occupations.len() != m {
        return Err(ProbError::Dimension(
            "pattern length differs from unitary dimension".into(),
        ));
    }
    if input.total() != output.total() {
        return Ok(C::new(T::zero(), T::zero()));
    }
    let mut rows = Vec::with_capacity(output.total());
    for (mode, &n) in output.occupations.iter().enumerate() {
        rows.extend(std::iter::repeat(mode).take(n));
    }
    let mut cols = Vec::with_capacity(input.total());
    for (mode, &n) in input.occupations.iter().enumerate() {
        cols.extend(std::iter::repeat(mode).take(n));
    }
    let sub = CMatrix::from_fn(rows.len(), cols.len(), |p, q| u[(rows[p], cols[q])]);
    let per = kernels::permanent(&sub)?;
    let mut norm = T::one();
    for &n in input.occupations.iter().chain(&output.occupations) {
        norm = norm * factorial::<T>(n);
    }
    let scale = T::one() / norm.sqrt();
    Ok(C::new(per.re * scale, per.im * scale))
}

/// Result of the permanent-based Fock oracle.
#[derive(Debug, Clone, Copy)]
pub struct OracleValue<T: Scalar> {
    pub probability: T,
    /// Input probability mass beyond the truncation (upper bound on the
    /// enumeration error for click-level sums; photon-number conservation
    /// makes individual patterns with total <= truncation exact).
    pub truncation_error_bound: T,
}

/// Independent verification path: expand the lossless input state in the Fock
/// basis, push amplitudes through permanent transition amplitudes, square.
pub fn fock_oracle<T: Scalar>(
    spec: &ExperimentSpec<T>,
    pattern: &FockPattern,
    truncation: usize,
) -> Result<OracleValue<T>, ProbError> {
    let m = spec.modes();
    if m > 4 {
        return Err(ProbError::InvalidParameter(format!(
            "fock oracle is limited to 4 modes, got {m}"
        )));
    }
    if truncation > 12 {
        return Err(ProbError::InvalidParameter(format!(
            "fock oracle truncation is limited to 12 photons, got {truncation}"
        )));
    }
    if pattern.occupations.len() != m {
        return Err(ProbError::Dimension(
            "pattern length differs from spec mode count".into(),
        ));
    }
    if pattern.total() > truncation {
        return Err(ProbError::InvalidParameter(format!(
            "pattern has {} photons, above truncation {truncation}",
            pattern.total()
        )));
    }
    let one = T::one();
    let lossless = spec
        .sources
        .iter()
        .all(|s| (s.eta_collect - one).abs() < T::epsilon())
        && spec
            .eta_network
            .iter()
            .chain(&spec.eta_detector)
            .all(|&e| (e - one).abs() < T::epsilon());
    if !lossless {
        return Err(ProbError::InvalidParameter(
            "fock oracle requires a lossless spec (pure input state)".into(),
        ));
    }

    // Per-source Fock series up to the truncation.
    struct SourceSeries<T: Scalar> {
        modes: Vec<usize>,
        /// (total photons, per-arm occupations, amplitude)
        terms: Vec<(usize, Vec<usize>, C<T>)>,
        captured_mass: T,
    }
    let mut series: Vec<SourceSeries<T>> = Vec::new();
    for (src, modes) in spec.sources.iter().zip(&spec.mode_map) {
        let mut terms = Vec::new();
        let mut mass = T::zero();
        match src.kind {
            SourceKind::Smss => {
                let t = src.r.tanh();
                let root_cosh = src.r.cosh().sqrt();
                let mut p = 0usize;
                loop {
                    let n = 2 * p;
                    if n > truncation {
                        break;
                    }
                    // (-e^{i phi} tanh r)^p sqrt((2p)!) / (2^p p!) / sqrt(cosh r)
                    let mag = factorial::<T>(n).sqrt()
                        / (real::<T>(2.0).powi(p as i32) * factorial::<T>(p))
                        / root_cosh
                        * t.powi(p as i32);
                    let phase = C::from_polar(T::one(), src.phi * real(p as f64))
                        * C::new(real::<T>((-1.0f64).powi(p as i32)), T::zero());
                    let amp = phase * C::new(mag, T::zero());
                    mass = mass + amp.norm_sqr();
                    terms.push((n, vec![n], amp));
                    p += 1;
                }
            }
            SourceKind::Tmss => {
                let t = src.r.tanh();
                let inv_cosh = T::one() / src.r.cosh();
                let mut n = 0usize;
                loop {
                    if 2 * n > truncation {
                        break;
                    }
                    let amp = C::from_polar(t.powi(n as i32) * inv_cosh, src.phi * real(n as f64));
                    mass = mass + amp.norm_sqr();
                    terms.push((2 * n, vec![n, n], amp));
                    n += 1;
                }
            }
            SourceKind::Vacuum => {
                terms.push((0, vec![], C::new(T::one(), T::zero())));
                mass = T::one();
            }
            SourceKind::Thermal => {
                return Err(ProbError::InvalidParameter(
                    "fock oracle requires pure (squeezed or vacuum) sources".into(),
                ));
            }
        }
        series.push(SourceSeries {
            modes: modes.clone(),
            terms,
            captured_mass: mass,
        });
    }

    let mut captured = T::one();
    for s in &series {
        captured = captured * s.captured_mass.min(T::one());
    }
    let truncation_error_bound = (T::one() - captured).max(T::zero());

    // Sum amplitudes over input configurations with matching photon total.
    let target = pattern.total();
    let mut amp_out = C::new(T::zero(), T::zero());
    let mut stack_occ = vec![0usize; m];
    fn recurse<T: Scalar>(
        series: &[SourceSeries<T>],
        level: usize,
        used: usize,
        target: usize,
        occ: &mut Vec<usize>,
        amp_in: C<T>,
        u: &CMatrix<T>,
        out: &FockPattern,
        acc: &mut C<T>,
    ) -> Result<(), ProbError> {
        if level == series.len() {
            if used == target {
                let trans =
                    fock_transition_amplitude(u, &FockPattern::new(occ.clone()), out)?;
                *acc += amp_in * trans;
            }
            return Ok(());
        }
        for (n, arms, amp) in &series[level].terms {
            if used + n > target {
                continue;
            }
            for (slot, &mode) in arms.iter().zip(&series[level].modes) {
                occ[mode] = *slot;
            }
            recurse(
                series,
                level + 1,
                used + n,
                target,
                occ,
                amp_in * *amp,
                u,
                out,
                acc,
            )?;
            for &mode in &series[level].modes {
                occ[mode] = 0;
            }
        }
        Ok(())
    }
    let unit_amp = C::new(T::one(), T::zero());
    recurse(
        &series,
        0,
        0,
        target,
        &mut stack_occ,
        unit_amp,
        &spec.unitary,
        pattern,
        &mut amp_out,
    )?;

    Ok(OracleValue {
        probability: amp_out.norm_sqr(),
        truncation_error_bound,
    })
}

/// All occupation vectors over `m` modes with total photons <= `max_total`.
pub fn enumerate_fock_patterns(m: usize, max_total: usize) -> Vec<FockPattern> {
    let mut out = Vec::new();
    let mut occ = vec![0usize; m];
    fn recurse(m: usize, level: usize, left: usize, occ: &mut Vec<usize>, out: &mut Vec<FockPattern>) {
        if level == m {
            out.push(FockPattern::new(occ.clone()));
            return;
        }
        for n in 0..=left {
            occ[level] = n;
            recurse(m, level + 1, left - n, occ, out);
        }
        occ[level] = 0;
    }
    recurse(m, 0, max_total, &mut occ, &mut out);
    out
}

/// Threshold a photon-number distribution into a click distribution.
pub fn click_from_fock<T: Scalar>(fock_dist: &[(FockPattern, T)]) -> BTreeMap<ClickPattern, T> {
    let mut out: BTreeMap<ClickPattern, T> = BTreeMap::new();
    for (pattern, p) in fock_dist {
        let entry = out.entry(pattern.to_clicks()).or_insert_with(T::zero);
        *entry = *entry + *p;
    }
    out
}

/// Hafnian-path photon-number distribution truncated at `max_total` photons.
pub fn fock_distribution<T: Scalar>(
    state: &GaussianState<T>,
    max_total: usize,
) -> Result<Vec<(FockPattern, T)>, ProbError> {
    let cfg = KernelConfig::default();
    enumerate_fock_patterns(state.modes(), max_total)
        .into_iter()
        .map(|pattern| {
            let p = fock_probability_with(state, &pattern, &cfg)?;
            Ok((pattern, p))
        })
        .collect()
}

/// Exact output-space dimension: sum_{k=0}^{n_max} C(m, k).
pub fn state_space_dimension(m: usize, n_max: usize) -> Result<BigUint, ProbError> {
    if m > 1000 {
        return Err(ProbError::InvalidParameter(format!(
            "mode count {m} above the 1000-mode cap"
        )));
    }
    let mut total = BigUint::from(0u32);
    let mut coeff = BigUint::from(1u32); // C(m, 0)
    for k in 0..=n_max.min(m) {
        total += &coeff;
        coeff = coeff * BigUint::from((m - k) as u64) / BigUint::from((k + 1) as u64);
    }
    Ok(total)
}
