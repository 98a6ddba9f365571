//! Standard normal distribution helpers and adaptive quadrature.

use crate::Error;

/// Infinite bin borders are truncated here when integrating.
pub const TRUNCATION: f64 = 8.5;

/// Absolute tolerance of every rectangle probability.
pub const QUAD_TOLERANCE: f64 = 1e-10;

const ICDF_TOLERANCE: f64 = 1e-12;
const MAX_INTERVALS: usize = 4096;

pub fn pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

pub fn cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Inverse CDF by bisection on [`cdf`].
pub fn icdf(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "icdf needs p in (0, 1), got {p}");
    let (mut lo, mut hi) = (-40.0_f64, 40.0_f64);
    while hi - lo > ICDF_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

// Gauss-Kronrod 7/15 nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (i, (&x, &w)) in XGK[..7].iter().zip(&WGK[..7]).enumerate() {
        let pair = f(c - h * x) + f(c + h * x);
        kronrod += w * pair;
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Adaptive Gauss-Kronrod integration to an absolute tolerance.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64, Error> {
    if a == b {
        return Ok(0.0);
    }
    let (value, err) = gk15(&f, a, b);
    let mut parts = vec![(a, b, value, err)];
    loop {
        let total_err: f64 = parts.iter().map(|p| p.3).sum();
        if total_err <= tol {
            return Ok(parts.iter().map(|p| p.2).sum());
        }
        if parts.len() >= MAX_INTERVALS {
            return Err(Error::Integration);
        }
        // bisect the interval with the largest error estimate
        let worst = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(i, _)| i)
            .unwrap();
        let (lo, hi, _, _) = parts.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        parts.push((lo, mid, v1, e1));
        parts.push((mid, hi, v2, e2));
    }
}

fn clamp_border(x: f64) -> f64 {
    x.clamp(-TRUNCATION, TRUNCATION)
}

/// P(X in [x1, x2), Y in [y1, y2)) for a standard bivariate normal with
/// correlation `rho`, as the 1-D integral of phi(x) times the conditional
/// probability of the column interval.
pub fn rectangle_probability(
    rho: f64,
    (x1, x2): (f64, f64),
    (y1, y2): (f64, f64),
) -> Result<f64, Error> {
    let s = (1.0 - rho * rho).sqrt();
    let (x1, x2) = (clamp_border(x1), clamp_border(x2));
    let (y1, y2) = (clamp_border(y1), clamp_border(y2));
    // keep the conditional tails when the column touches infinity
    let upper = |x: f64| {
        if y2 >= TRUNCATION {
            1.0
        } else {
            cdf((y2 - rho * x) / s)
        }
    };
    let lower = |x: f64| {
        if y1 <= -TRUNCATION {
            0.0
        } else {
            cdf((y1 - rho * x) / s)
        }
    };
    let p = integrate(|x| pdf(x) * (upper(x) - lower(x)), x1, x2, QUAD_TOLERANCE)?;
    Ok(p.max(0.0))
}
