//! Pooled receiver operating characteristic and its area.

use serde::{Deserialize, Serialize};

use crate::error::{FdeError, Result};
use crate::measurement::{EpochSet, FdeResult};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub true_positive_rate: f64,
    pub false_alarm_rate: f64,
}

/// Flag sets of one threshold over a list of epochs.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdRun {
    pub threshold: f64,
    pub results: Vec<FdeResult>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Confusion {
    pub true_positive: usize,
    pub false_alarm: usize,
    pub faulty: usize,
    pub clean: usize,
}

impl Confusion {
    pub fn add(&mut self, flags: &[bool], truth: &[bool]) {
        for (&f, &t) in flags.iter().zip(truth) {
            match (f, t) {
                (true, true) => self.true_positive += 1,
                (true, false) => self.false_alarm += 1,
                _ => {}
            }
            if t {
                self.faulty += 1;
            } else {
                self.clean += 1;
            }
        }
    }

    pub fn rates(&self) -> Result<(f64, f64)> {
        if self.faulty == 0 {
            return Err(FdeError::UndefinedRate("no faulty measurements in pool"));
        }
        if self.clean == 0 {
            return Err(FdeError::UndefinedRate("no fault-free measurements in pool"));
        }
        Ok((
            self.true_positive as f64 / self.faulty as f64,
            self.false_alarm as f64 / self.clean as f64,
        ))
    }
}

fn truth_of(epoch: &EpochSet) -> Result<Vec<bool>> {
    epoch.truth_labels().ok_or_else(|| {
        FdeError::InvalidArgument(format!(
            "{} t={}: truth labels missing",
            epoch.trace_id, epoch.timestamp
        ))
    })
}

/// Rates pooled over every measurement of every epoch.
pub fn roc_point(threshold: f64, epochs: &[EpochSet], results: &[FdeResult]) -> Result<RocPoint> {
    if epochs.len() != results.len() {
        return Err(FdeError::InvalidArgument(format!(
            "{} epochs but {} results",
            epochs.len(),
            results.len()
        )));
    }
    let mut c = Confusion::default();
    for (e, r) in epochs.iter().zip(results) {
        c.add(&r.flags, &truth_of(e)?);
    }
    let (tpr, far) = c.rates()?;
    Ok(RocPoint {
        threshold,
        true_positive_rate: tpr,
        false_alarm_rate: far,
    })
}

/// One point per threshold, sorted by false-alarm rate then true-positive rate.
pub fn roc_curve(epochs: &[EpochSet], sweep: &[ThresholdRun]) -> Result<Vec<RocPoint>> {
    let mut points = sweep
        .iter()
        .map(|run| roc_point(run.threshold, epochs, &run.results))
        .collect::<Result<Vec<_>>>()?;
    points.sort_by(|a, b| {
        a.false_alarm_rate
            .total_cmp(&b.false_alarm_rate)
            .then(a.true_positive_rate.total_cmp(&b.true_positive_rate))
    });
    Ok(points)
}

/// Trapezoidal area over false-alarm rate with `(0,0)` prepended and `(1,1)`
/// appended. Points must be sorted by false-alarm rate.
pub fn auc(points: &[RocPoint]) -> f64 {
    let mut xy = Vec::with_capacity(points.len() + 2);
    xy.push((0.0, 0.0));
    xy.extend(points.iter().map(|p| (p.false_alarm_rate, p.true_positive_rate)));
    xy.push((1.0, 1.0));
    xy.windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) * 0.5)
        .sum()
}

/// Linear interpolation of a sorted curve's true-positive rate at `far`.
pub fn tpr_at(points: &[RocPoint], far: f64) -> f64 {
    let mut xy = vec![(0.0, 0.0)];
    xy.extend(points.iter().map(|p| (p.false_alarm_rate, p.true_positive_rate)));
    xy.push((1.0, 1.0));
    for w in xy.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if far <= x1 {
            if x1 == x0 {
                return y1.max(y0);
            }
            return y0 + (y1 - y0) * (far - x0) / (x1 - x0);
        }
    }
    1.0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(far: f64, tpr: f64) -> RocPoint {
        RocPoint {
            threshold: 0.0,
            true_positive_rate: tpr,
            false_alarm_rate: far,
        }
    }

    #[test]
    fn area_examples() {
        assert!((auc(&[p(0.25, 0.25), p(0.5, 0.5), p(0.75, 0.75)]) - 0.5).abs() < 1e-15);
        assert_eq!(auc(&[p(0.0, 0.0), p(0.0, 1.0), p(1.0, 1.0)]), 1.0);
        assert_eq!(auc(&[p(0.0, 1.0)]), 1.0);
        assert_eq!(auc(&[]), 0.5);
    }

    #[test]
    fn confusion_rates() {
        let mut c = Confusion::default();
        c.add(&[true, false, true, false], &[true, true, false, false]);
        assert_eq!(c.rates().unwrap(), (0.5, 0.5));
        let mut all = Confusion::default();
        all.add(&[true, true], &[true, false]);
        assert_eq!(all.rates().unwrap(), (1.0, 1.0));
        let mut none = Confusion::default();
        none.add(&[false], &[false]);
        assert!(matches!(none.rates(), Err(FdeError::UndefinedRate(_))));
    }

    #[test]
    fn interpolated_tpr() {
        let pts = [p(0.2, 0.6), p(0.6, 0.8)];
        assert!((tpr_at(&pts, 0.1) - 0.3).abs() < 1e-15);
        assert!((tpr_at(&pts, 0.4) - 0.7).abs() < 1e-15);
        assert_eq!(tpr_at(&pts, 1.0), 1.0);
    }
}
