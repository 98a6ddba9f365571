//! Synthetic correlated-Gaussian feature pairs, model estimation and the
//! exact real-valued LLR used as a reference classifier.

use rand::Rng;
use rand_distr::StandardNormal;

use super::tables::{FeatureModel, Provenance, RHO_MAX, RHO_MIN};
use crate::Error;

/// Two feature vectors compared against each other.
#[derive(Clone, Debug, PartialEq)]
pub struct FeaturePair {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledPair {
    pub pair: FeaturePair,
    pub genuine: bool,
}

/// Genuine pairs share a component `w ~ N(0, rho)` per feature, plus
/// independent `N(0, 1 - rho)` noise on each side; impostor pairs are
/// independent standard normals.
pub fn synth_pairs<R: Rng>(
    model: &FeatureModel,
    count: usize,
    genuine: bool,
    rng: &mut R,
) -> Vec<FeaturePair> {
    (0..count)
        .map(|_| {
            let (a, b) = model
                .rho()
                .iter()
                .map(|&rho| {
                    let mut z = || -> f64 { rng.sample(StandardNormal) };
                    if genuine {
                        let w = rho.sqrt() * z();
                        let noise = (1.0 - rho).sqrt();
                        (w + noise * z(), w + noise * z())
                    } else {
                        (z(), z())
                    }
                })
                .unzip();
            FeaturePair { a, b }
        })
        .collect()
}

/// A fresh sample correlated with an existing reference vector, as a second
/// capture of the same user would be.
pub fn synth_probe_for<R: Rng>(model: &FeatureModel, reference: &[f64], rng: &mut R) -> Vec<f64> {
    model
        .rho()
        .iter()
        .zip(reference)
        .map(|(&rho, &x)| {
            let z: f64 = rng.sample(StandardNormal);
            rho * x + (1.0 - rho * rho).sqrt() * z
        })
        .collect()
}

/// Per-feature Pearson correlation of genuine pairs after standardizing each
/// feature over all samples; clamped into `[RHO_MIN, RHO_MAX]`.
pub fn estimate_model(training: &[LabeledPair]) -> Result<FeatureModel, Error> {
    let genuine: Vec<&FeaturePair> = training.iter().filter(|p| p.genuine).map(|p| &p.pair).collect();
    if genuine.len() < 2 {
        return Err(Error::InsufficientData("need at least two genuine pairs"));
    }
    let k = genuine[0].a.len();
    if k == 0 {
        return Err(Error::InsufficientData("empty feature vectors"));
    }
    for p in training {
        if p.pair.a.len() != k || p.pair.b.len() != k {
            return Err(Error::LengthMismatch {
                expected: k,
                got: p.pair.a.len().min(p.pair.b.len()),
            });
        }
    }
    let mut rho = Vec::with_capacity(k);
    for i in 0..k {
        let all = training.iter().flat_map(|p| [p.pair.a[i], p.pair.b[i]]);
        let count = 2.0 * training.len() as f64;
        let mean = all.clone().sum::<f64>() / count;
        let var = all.map(|x| (x - mean) * (x - mean)).sum::<f64>() / count;
        let sd = if var > 0.0 { var.sqrt() } else { 1.0 };
        let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
        for p in &genuine {
            let a = (p.a[i] - mean) / sd;
            let b = (p.b[i] - mean) / sd;
            sab += a * b;
            saa += a * a;
            sbb += b * b;
        }
        let r = if saa > 0.0 && sbb > 0.0 {
            sab / (saa * sbb).sqrt()
        } else {
            RHO_MAX
        };
        let r = if r.is_nan() { RHO_MIN } else { r };
        rho.push(r.clamp(RHO_MIN, RHO_MAX));
    }
    FeatureModel::new(rho, Provenance::Estimated)
}

/// Exact log-likelihood ratio of a pair under the bivariate normal model.
pub fn exact_llr(model: &FeatureModel, a: &[f64], b: &[f64]) -> f64 {
    model
        .rho()
        .iter()
        .zip(a.iter().zip(b))
        .map(|(&rho, (&x, &y))| {
            let one_minus = 1.0 - rho * rho;
            -0.5 * one_minus.ln() - (x * x - 2.0 * rho * x * y + y * y) / (2.0 * one_minus)
                + 0.5 * (x * x + y * y)
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn correlation(pairs: &[FeaturePair], i: usize) -> (f64, f64, f64) {
        let n = pairs.len() as f64;
        let ma = pairs.iter().map(|p| p.a[i]).sum::<f64>() / n;
        let mb = pairs.iter().map(|p| p.b[i]).sum::<f64>() / n;
        let va = pairs.iter().map(|p| (p.a[i] - ma).powi(2)).sum::<f64>() / n;
        let vb = pairs.iter().map(|p| (p.b[i] - mb).powi(2)).sum::<f64>() / n;
        let cov = pairs.iter().map(|p| (p.a[i] - ma) * (p.b[i] - mb)).sum::<f64>() / n;
        (va, vb, cov / (va * vb).sqrt())
    }

    #[test]
    fn genuine_pairs_have_requested_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let model = FeatureModel::new(vec![0.3, 0.85], Provenance::Synthetic).unwrap();
        let pairs = synth_pairs(&model, 100_000, true, &mut rng);
        for (i, rho) in [0.3, 0.85].into_iter().enumerate() {
            let (va, vb, r) = correlation(&pairs, i);
            assert!((va - 1.0).abs() < 0.02 && (vb - 1.0).abs() < 0.02);
            assert!((r - rho).abs() < 0.01, "{r} vs {rho}");
        }
        let imp = synth_pairs(&model, 100_000, false, &mut rng);
        let (_, _, r) = correlation(&imp, 1);
        assert!(r.abs() < 0.02);
    }

    fn labeled(pairs: Vec<FeaturePair>, genuine: bool) -> Vec<LabeledPair> {
        pairs.into_iter().map(|pair| LabeledPair { pair, genuine }).collect()
    }

    #[test]
    fn estimation_recovers_correlation() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let model = FeatureModel::uniform(3, 0.8).unwrap();
        let mut training = labeled(synth_pairs(&model, 10_000, true, &mut rng), true);
        training.extend(labeled(synth_pairs(&model, 10_000, false, &mut rng), false));
        let est = estimate_model(&training).unwrap();
        assert_eq!(est.provenance(), Provenance::Estimated);
        for r in est.rho() {
            assert!((r - 0.8).abs() < 0.02, "{r}");
        }
    }

    #[test]
    fn estimation_clamps() {
        let same = |x: f64| LabeledPair {
            pair: FeaturePair { a: vec![x], b: vec![x] },
            genuine: true,
        };
        let est = estimate_model(&[same(1.0), same(-1.0), same(0.5)]).unwrap();
        assert_eq!(est.rho(), &[RHO_MAX]);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let model = FeatureModel::uniform(1, 0.5).unwrap();
        let indep = labeled(synth_pairs(&model, 10_000, false, &mut rng), true);
        let est = estimate_model(&indep).unwrap();
        assert!(est.rho()[0] >= RHO_MIN && est.rho()[0] < 0.03);

        assert!(matches!(
            estimate_model(&[same(1.0)]),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn llr_prefers_agreeing_pairs() {
        let model = FeatureModel::uniform(2, 0.9).unwrap();
        assert!(exact_llr(&model, &[1.0, -1.0], &[1.1, -0.9]) > 0.0);
        assert!(exact_llr(&model, &[1.0, -1.0], &[-1.0, 1.0]) < 0.0);
    }
}
