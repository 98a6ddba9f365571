//! The HELR classifier: equiprobable feature quantization, quantized
//! log-likelihood-ratio lookup tables, plaintext scoring and evaluation.

pub mod files;
pub mod metrics;
pub mod normal;
pub mod synth;
pub mod tables;

pub use metrics::{det_metrics, DetCurve, DetPoint};
pub use synth::{estimate_model, exact_llr, synth_pairs, synth_probe_for, FeaturePair, LabeledPair};
pub use tables::{
    bin_borders, build_tables, genuine_cell_prob, impostor_cell_prob, quantize_feature, BinBorders,
    FeatureModel, LookupTableSet, Provenance, QuantizedVector, ScoreStep,
};

use rand::Rng;

use crate::Error;

/// Sets `theta` to the lowest integer threshold whose FMR on synthetic
/// impostor pairs does not exceed `target_fmr`, clamped to `S_max`.
pub fn calibrate_threshold<R: Rng>(
    tables: LookupTableSet,
    model: &FeatureModel,
    target_fmr: f64,
    impostors: usize,
    rng: &mut R,
) -> Result<LookupTableSet, Error> {
    if !(0.0..=1.0).contains(&target_fmr) {
        return Err(Error::InvalidParameter(format!("target FMR {target_fmr}")));
    }
    let scores = plaintext_scores(&tables, &synth_pairs(model, impostors, false, rng))?;
    let theta = threshold_for_fmr(&scores, target_fmr).min(tables.s_max() as i64);
    let theta = theta.max(tables.min_score()) as i32;
    tables.with_threshold(theta)
}

/// Lowest integer `t` with `#{s >= t} / len <= target_fmr`.
pub fn threshold_for_fmr(impostor_scores: &[i64], target_fmr: f64) -> i64 {
    let mut sorted = impostor_scores.to_vec();
    sorted.sort_unstable();
    let allowed = (target_fmr * sorted.len() as f64).floor() as usize;
    if allowed >= sorted.len() {
        return sorted.first().copied().unwrap_or(0);
    }
    // accept at most `allowed` scores: threshold just above the cut-off score
    sorted[sorted.len() - 1 - allowed] + 1
}

/// HELR scores of feature pairs (first vector as reference).
pub fn plaintext_scores(tables: &LookupTableSet, pairs: &[FeaturePair]) -> Result<Vec<i64>, Error> {
    pairs
        .iter()
        .map(|p| tables.score(&tables.quantize(&p.a)?, &tables.quantize(&p.b)?))
        .collect()
}
