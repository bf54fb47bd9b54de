//! Frozen reference experiment descriptions.
//!
//! These are the configurations the test suite and the shipped config files
//! are built from. The per-source squeezing values are synthetic: measured
//! per-source parameters of any real device are loaded from user-supplied
//! spec files instead.

use crate::num::{real, Scalar};
use crate::rng;
use crate::state::{ExperimentSpec, SourceSpec};
use crate::validation::haar_generate;

/// Easy-regime device: 3 TMSS pairs on 6 modes with moderate loss. Small
/// enough to enumerate exhaustively, busy enough to be non-trivial.
pub fn easy_m6<T: Scalar>() -> ExperimentSpec<T> {
    let rs = [0.9, 1.05, 1.2];
    let phis = [0.0, 0.6, 1.2];
    let sources = rs
        .iter()
        .zip(&phis)
        .map(|(&r, &phi)| SourceSpec::tmss(real(r), real(phi), real(0.9)))
        .collect();
    let mode_map = vec![vec![0, 1], vec![2, 3], vec![4, 5]];
    ExperimentSpec::new(
        sources,
        mode_map,
        haar_generate(6, 600),
        vec![real(0.95); 6],
        vec![real(0.85); 6],
    )
    .expect("preset is valid")
}

/// Sampler cross-validation device: 2 TMSS pairs on 8 modes, mildly lossy,
/// concentrated enough that 1e5-sample empirical distributions resolve it.
pub fn reference_m8<T: Scalar>() -> ExperimentSpec<T> {
    let sources = vec![
        SourceSpec::tmss(real(0.65), real(0.0), real(0.85)),
        SourceSpec::tmss(real(0.75), real(0.3), real(0.85)),
    ];
    let mode_map = vec![vec![0, 1], vec![2, 3]];
    ExperimentSpec::new(
        sources,
        mode_map,
        haar_generate(8, 800),
        vec![real(0.8); 8],
        vec![real(0.75); 8],
    )
    .expect("preset is valid")
}

/// Hypothesis-separation device on 10 modes: the exact click-number
/// histograms of the ideal state, the thermal hypothesis and the
/// distinguishable hypothesis peak at 8, 7 and 10 clicks respectively.
pub fn validation_m10<T: Scalar>() -> ExperimentSpec<T> {
    let mut sources = Vec::new();
    let mut mode_map = Vec::new();
    for i in 0..5usize {
        sources.push(SourceSpec::tmss(
            real(1.25 + 0.05 * (i % 3) as f64),
            real(0.4 * i as f64),
            T::one(),
        ));
        mode_map.push(vec![2 * i, 2 * i + 1]);
    }
    ExperimentSpec::new(
        sources,
        mode_map,
        haar_generate(10, 18),
        vec![T::one(); 10],
        vec![real(0.9); 10],
    )
    .expect("preset is valid")
}

/// Heavy-output-test device on 12 modes: chosen for a large band-conditional
/// divergence between the ideal and thermal hypotheses inside the 6..10
/// click band, so likelihood-ratio tests settle within a couple hundred
/// samples.
pub fn validation_m12<T: Scalar>() -> ExperimentSpec<T> {
    let mut sources = Vec::new();
    let mut mode_map = Vec::new();
    for i in 0..6usize {
        sources.push(SourceSpec::tmss(
            real(1.15 + 0.05 * (i % 3) as f64),
            real(0.4 * i as f64),
            T::one(),
        ));
        mode_map.push(vec![2 * i, 2 * i + 1]);
    }
    ExperimentSpec::new(
        sources,
        mode_map,
        haar_generate(12, 29),
        vec![T::one(); 12],
        vec![real(0.9); 12],
    )
    .expect("preset is valid")
}

/// Click band used by the desk-scale hypothesis comparisons.
pub const VALIDATION_BAND: (usize, usize) = (6, 10);

/// Synthetic 100-mode device: 25 TMSS pairs with squeezing drawn uniformly
/// from [1.0, 1.8] and uniform phases, the published efficiency budget
/// (collection 0.628, network 0.977, detection 0.81) and purity recorded as
/// metadata. The per-source values are NOT measurements; they are a
/// representative synthetic configuration.
pub fn synthetic_full100<T: Scalar>() -> ExperimentSpec<T> {
    let mut rng = rng::from_seed(2520);
    let mut sources = Vec::new();
    let mut mode_map = Vec::new();
    for i in 0..25usize {
        let r = 1.0 + 0.8 * rand::Rng::random::<f64>(&mut rng);
        let phi = 2.0 * std::f64::consts::PI * rand::Rng::random::<f64>(&mut rng);
        let mut src = SourceSpec::tmss(real(r), real(phi), real(0.628));
        src.purity = Some(real(0.938));
        sources.push(src);
        mode_map.push(vec![2 * i, 2 * i + 1]);
    }
    ExperimentSpec::new(
        sources,
        mode_map,
        haar_generate(100, 100),
        vec![real(0.977); 100],
        vec![real(0.81); 100],
    )
    .expect("preset is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate_and_hash_stably() {
        let e = easy_m6::<f64>();
        let r8 = reference_m8::<f64>();
        let v10 = validation_m10::<f64>();
        let v12 = validation_m12::<f64>();
        for spec in [&e, &r8, &v10, &v12] {
            assert!(spec.validate().is_ok());
        }
        assert_eq!(e.modes(), 6);
        assert_eq!(r8.modes(), 8);
        assert_eq!(v10.modes(), 10);
        assert_eq!(v12.modes(), 12);
        // hashing is deterministic across calls
        assert_eq!(easy_m6::<f64>().hash(), e.hash());
    }

    #[test]
    fn full100_matches_published_budget() {
        let spec = synthetic_full100::<f64>();
        assert_eq!(spec.modes(), 100);
        assert_eq!(spec.n_sources(), 25);
        for src in &spec.sources {
            assert!(src.r >= 1.0 && src.r <= 1.8);
            assert_eq!(src.eta_collect, 0.628);
            assert_eq!(src.purity, Some(0.938));
        }
        assert!(spec.eta_network.iter().all(|&e| e == 0.977));
        assert!(spec.eta_detector.iter().all(|&e| e == 0.81));
        // the state at 100 modes builds and validates
        let state = spec.build().unwrap();
        assert_eq!(state.modes(), 100);
    }
}
