//! FMR / FNMR trade-off curves and their summary points.

use crate::Error;

/// Error rates when accepting every score `>= threshold`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DetPoint {
    pub threshold: f64,
    pub fmr: f64,
    pub fnmr: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DetCurve {
    /// Ordered by increasing threshold; the last point rejects everything.
    pub points: Vec<DetPoint>,
    pub eer: f64,
}

impl DetCurve {
    /// FNMR at the lowest threshold whose FMR does not exceed `fmr`.
    pub fn fnmr_at_fmr(&self, fmr: f64) -> f64 {
        self.points
            .iter()
            .find(|p| p.fmr <= fmr)
            .map(|p| p.fnmr)
            .unwrap_or(1.0)
    }

    /// Lowest threshold whose FMR does not exceed `fmr`.
    pub fn threshold_at_fmr(&self, fmr: f64) -> f64 {
        self.points
            .iter()
            .find(|p| p.fmr <= fmr)
            .map(|p| p.threshold)
            .unwrap_or(f64::INFINITY)
    }

    /// `threshold,fmr,fnmr` lines with a header row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("threshold,fmr,fnmr\n");
        for p in &self.points {
            out.push_str(&format!("{},{},{}\n", p.threshold, p.fmr, p.fnmr));
        }
        out
    }
}

fn sorted(scores: &[f64]) -> Vec<f64> {
    let mut v = scores.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Sweeps every observed score as a threshold.
pub fn det_metrics(genuine: &[f64], impostor: &[f64]) -> Result<DetCurve, Error> {
    if genuine.is_empty() || impostor.is_empty() {
        return Err(Error::InsufficientData("empty score list"));
    }
    let gen = sorted(genuine);
    let imp = sorted(impostor);
    let mut thresholds: Vec<f64> = gen.iter().chain(&imp).copied().collect();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();
    thresholds.push(f64::INFINITY);

    let (ng, ni) = (gen.len() as f64, imp.len() as f64);
    let points: Vec<DetPoint> = thresholds
        .iter()
        .map(|&t| {
            let below_gen = gen.partition_point(|&s| s < t);
            let below_imp = imp.partition_point(|&s| s < t);
            DetPoint {
                threshold: t,
                fmr: (imp.len() - below_imp) as f64 / ni,
                fnmr: below_gen as f64 / ng,
            }
        })
        .collect();

    // FNMR - FMR is non-decreasing in the threshold, starts at -1 (the lowest
    // threshold accepts everything) and ends at +1
    let gap = |p: &DetPoint| p.fnmr - p.fmr;
    let idx = points.iter().position(|p| gap(p) >= 0.0).unwrap();
    let eer = if gap(&points[idx]) == 0.0 {
        points[idx].fmr
    } else {
        let (a, b) = (points[idx - 1], points[idx]);
        let (da, db) = (gap(&a), gap(&b));
        let lambda = -da / (db - da);
        a.fmr + lambda * (b.fmr - a.fmr)
    };
    Ok(DetCurve { points, eer })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separated_scores_have_zero_eer() {
        let d = det_metrics(&[5.0, 6.0, 7.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(d.eer, 0.0);
        assert_eq!(d.fnmr_at_fmr(0.0), 0.0);
    }

    #[test]
    fn identical_distributions_have_half_eer() {
        let s: Vec<f64> = (0..100).map(|x| x as f64).collect();
        let d = det_metrics(&s, &s).unwrap();
        assert!((d.eer - 0.5).abs() < 1e-12, "{}", d.eer);
    }

    #[test]
    fn crossing_is_interpolated() {
        // gen: 2,3,4,5 imp: 0,1,2,3
        let d = det_metrics(&[2.0, 3.0, 4.0, 5.0], &[0.0, 1.0, 2.0, 3.0]).unwrap();
        // t=3: fmr 0.25, fnmr 0.25
        assert!((d.eer - 0.25).abs() < 1e-12);
    }

    #[test]
    fn endpoints_present() {
        let d = det_metrics(&[1.0], &[0.0]).unwrap();
        let first = d.points.first().unwrap();
        let last = d.points.last().unwrap();
        assert_eq!((first.fmr, first.fnmr), (1.0, 0.0));
        assert_eq!((last.fmr, last.fnmr), (0.0, 1.0));
        assert!(d.to_csv().starts_with("threshold,fmr,fnmr\n"));
    }

    #[test]
    fn empty_input_is_error() {
        assert!(det_metrics(&[], &[1.0]).is_err());
        assert!(det_metrics(&[1.0], &[]).is_err());
    }
}
