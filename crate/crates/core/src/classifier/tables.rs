//! Equiprobable quantization and quantized LLR lookup tables.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use super::normal::{icdf, rectangle_probability};
use crate::Error;

/// Cell probabilities are floored here before taking the log ratio; values
/// below the quadrature tolerance carry no information.
pub const PROBABILITY_FLOOR: f64 = 1e-10;

/// Correlations are kept inside `[RHO_MIN, RHO_MAX]`.
pub const RHO_MIN: f64 = 1e-4;
pub const RHO_MAX: f64 = 1.0 - 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    Estimated,
    Synthetic,
}

/// Per-feature genuine correlation of whitened features.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureModel {
    rho: Vec<f64>,
    provenance: Provenance,
}

impl FeatureModel {
    pub fn new(rho: Vec<f64>, provenance: Provenance) -> Result<Self, Error> {
        if rho.is_empty() {
            return Err(Error::InvalidParameter("feature model needs k >= 1".into()));
        }
        if let Some(bad) = rho.iter().find(|r| !(**r > 0.0 && **r < 1.0)) {
            return Err(Error::InvalidParameter(format!(
                "correlation {bad} outside (0, 1)"
            )));
        }
        Ok(Self { rho, provenance })
    }

    /// Same correlation for every feature.
    pub fn uniform(k: usize, rho: f64) -> Result<Self, Error> {
        Self::new(vec![rho; k], Provenance::Synthetic)
    }

    pub fn k(&self) -> usize {
        self.rho.len()
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BinBorders {
    n: usize,
    borders: Vec<f64>,
}

/// `n - 1` standard-normal quantiles at `j / n`.
pub fn bin_borders(n: usize) -> Result<BinBorders, Error> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("feature level {n} < 2")));
    }
    let borders = (1..n).map(|j| icdf(j as f64 / n as f64)).collect();
    Ok(BinBorders { n, borders })
}

impl BinBorders {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn borders(&self) -> &[f64] {
        &self.borders
    }

    /// The half-open interval `[lo, hi)` of bin `j`.
    pub fn interval(&self, j: usize) -> (f64, f64) {
        let lo = if j == 0 {
            f64::NEG_INFINITY
        } else {
            self.borders[j - 1]
        };
        let hi = if j + 1 == self.n {
            f64::INFINITY
        } else {
            self.borders[j]
        };
        (lo, hi)
    }

    /// Index of the first border strictly greater than `a`; ties go up.
    pub fn quantize(&self, a: f64) -> usize {
        self.borders.partition_point(|&b| b <= a)
    }
}

pub fn quantize_feature(a: f64, borders: &BinBorders) -> usize {
    borders.quantize(a)
}

pub fn genuine_cell_prob(rho: f64, borders: &BinBorders, row: usize, col: usize) -> Result<f64, Error> {
    let n = borders.n();
    if row >= n {
        return Err(Error::OutOfRange { value: row, n });
    }
    if col >= n {
        return Err(Error::OutOfRange { value: col, n });
    }
    rectangle_probability(rho, borders.interval(row), borders.interval(col))
}

pub fn impostor_cell_prob(n: usize) -> f64 {
    1.0 / (n * n) as f64
}

/// Real-valued LLR of every cell, row-major.
pub fn llr_table(rho: f64, borders: &BinBorders) -> Result<Vec<f64>, Error> {
    let n = borders.n();
    let imp = impostor_cell_prob(n);
    let mut out = vec![0.0; n * n];
    for r in 0..n {
        // exchangeable bivariate normal: fill the lower triangle by symmetry
        for c in r..n {
            let p = genuine_cell_prob(rho, borders, r, c)?.max(PROBABILITY_FLOOR);
            let llr = (p / imp).ln();
            out[r * n + c] = llr;
            out[c * n + r] = llr;
        }
    }
    Ok(out)
}

/// Score step as unsigned 16.16 fixed point, so that tables rebuilt from a
/// file use exactly the step that is stored in it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ScoreStep(u32);

impl ScoreStep {
    pub const SCALE: f64 = 65536.0;

    pub fn from_f64(delta: f64) -> Result<Self, Error> {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::InvalidParameter(format!("score step {delta} <= 0")));
        }
        let raw = (delta * Self::SCALE).round();
        if raw < 1.0 || raw > u32::MAX as f64 {
            return Err(Error::InvalidParameter(format!(
                "score step {delta} not representable"
            )));
        }
        Ok(Self(raw as u32))
    }

    pub fn from_raw(raw: u32) -> Result<Self, Error> {
        if raw == 0 {
            return Err(Error::InvalidParameter("score step 0".into()));
        }
        Ok(Self(raw))
    }

    pub fn raw(self) -> u32 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / Self::SCALE
    }

    pub fn quantize(self, llr: f64) -> i32 {
        (llr / self.value()).round() as i32
    }
}

/// A probe or reference after quantization: one bin index per feature.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QuantizedVector(pub Vec<usize>);

impl QuantizedVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `k` quantized `n x n` score tables and the public decision parameters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LookupTableSet {
    k: usize,
    n: usize,
    delta: ScoreStep,
    theta: i32,
    s_max: i32,
    /// `k * n * n` cells, table-major then row-major.
    cells: Vec<i32>,
}

impl LookupTableSet {
    /// Tables with `S_max` set to the largest achievable score and `theta`
    /// at zero (clamped into the achievable range).
    pub fn from_cells(k: usize, n: usize, delta: ScoreStep, cells: Vec<i32>) -> Result<Self, Error> {
        if k == 0 || n < 2 {
            return Err(Error::InvalidParameter(format!("k={k}, n={n}")));
        }
        if cells.len() != k * n * n {
            return Err(Error::LengthMismatch {
                expected: k * n * n,
                got: cells.len(),
            });
        }
        let mut set = Self {
            k,
            n,
            delta,
            theta: 0,
            s_max: 0,
            cells,
        };
        let max = set.max_score();
        let min = set.min_score();
        let s_max = i32::try_from(max)
            .map_err(|_| Error::InvalidParameter("score range exceeds i32".into()))?;
        set.s_max = s_max;
        set.theta = (0i64.clamp(min, max)) as i32;
        Ok(set)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn delta(&self) -> ScoreStep {
        self.delta
    }

    pub fn theta(&self) -> i32 {
        self.theta
    }

    pub fn s_max(&self) -> i32 {
        self.s_max
    }

    pub fn cells(&self) -> &[i32] {
        &self.cells
    }

    pub fn table(&self, i: usize) -> &[i32] {
        let size = self.n * self.n;
        &self.cells[i * size..(i + 1) * size]
    }

    pub fn row(&self, i: usize, r: usize) -> &[i32] {
        &self.table(i)[r * self.n..(r + 1) * self.n]
    }

    pub fn cell(&self, i: usize, r: usize, c: usize) -> i32 {
        self.table(i)[r * self.n + c]
    }

    /// Sum of per-table maxima: the largest achievable score.
    pub fn max_score(&self) -> i64 {
        (0..self.k)
            .map(|i| *self.table(i).iter().max().unwrap() as i64)
            .sum()
    }

    /// Sum of per-table minima: the smallest achievable score.
    pub fn min_score(&self) -> i64 {
        (0..self.k)
            .map(|i| *self.table(i).iter().min().unwrap() as i64)
            .sum()
    }

    /// Number of comparison-vector entries, `S_max - theta + 1`.
    pub fn window_len(&self) -> usize {
        (self.s_max as i64 - self.theta as i64 + 1) as usize
    }

    pub fn with_threshold(self, theta: i32) -> Result<Self, Error> {
        let s_max = self.s_max;
        self.with_window(theta, s_max)
    }

    /// Sets the declared comparison window `[theta, s_max]`.
    pub fn with_window(mut self, theta: i32, s_max: i32) -> Result<Self, Error> {
        if theta > s_max {
            return Err(Error::InvalidParameter(format!(
                "threshold {theta} above S_max {s_max}"
            )));
        }
        self.theta = theta;
        self.s_max = s_max;
        Ok(self)
    }

    fn check_vector(&self, v: &QuantizedVector) -> Result<(), Error> {
        if v.len() != self.k {
            return Err(Error::LengthMismatch {
                expected: self.k,
                got: v.len(),
            });
        }
        if let Some(&bad) = v.0.iter().find(|&&x| x >= self.n) {
            return Err(Error::OutOfRange { value: bad, n: self.n });
        }
        Ok(())
    }

    /// Sum over features of the cell at (reference bin, probe bin).
    pub fn score(&self, reference: &QuantizedVector, probe: &QuantizedVector) -> Result<i64, Error> {
        self.check_vector(reference)?;
        self.check_vector(probe)?;
        Ok(reference
            .0
            .iter()
            .zip(&probe.0)
            .enumerate()
            .map(|(i, (&r, &c))| self.cell(i, r, c) as i64)
            .sum())
    }

    /// The plaintext decision rule `S >= theta`.
    pub fn decide(&self, score: i64) -> bool {
        score >= self.theta as i64
    }

    pub fn validate_vector(&self, v: &QuantizedVector) -> Result<(), Error> {
        self.check_vector(v)
    }

    pub fn borders(&self) -> BinBorders {
        bin_borders(self.n).expect("n >= 2 checked at construction")
    }

    pub fn quantize(&self, features: &[f64]) -> Result<QuantizedVector, Error> {
        if features.len() != self.k {
            return Err(Error::LengthMismatch {
                expected: self.k,
                got: features.len(),
            });
        }
        let borders = self.borders();
        Ok(QuantizedVector(
            features.iter().map(|&a| borders.quantize(a)).collect(),
        ))
    }
}

/// Builds one quantized table per feature.
pub fn build_tables(model: &FeatureModel, n: usize, delta: f64) -> Result<LookupTableSet, Error> {
    let step = ScoreStep::from_f64(delta)?;
    let borders = bin_borders(n)?;
    let one = |&rho: &f64| -> Result<Vec<i32>, Error> {
        Ok(llr_table(rho, &borders)?
            .into_iter()
            .map(|llr| step.quantize(llr))
            .collect())
    };
    #[cfg(feature = "parallel")]
    let tables: Vec<Vec<i32>> = model.rho().par_iter().map(one).collect::<Result<_, _>>()?;
    #[cfg(not(feature = "parallel"))]
    let tables: Vec<Vec<i32>> = model.rho().iter().map(one).collect::<Result<_, _>>()?;
    LookupTableSet::from_cells(model.k(), n, step, tables.concat())
}
