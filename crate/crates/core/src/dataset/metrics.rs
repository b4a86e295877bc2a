//! Per-class precision, recall and F1 with a text table in the familiar
//! scikit-learn layout.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::classify::CardLabel;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

impl ClassMetrics {
    /// Builds a row from raw counts; an empty denominator gives 0.
    pub fn from_counts(tp: usize, predicted: usize, actual: usize, support: usize) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(tp, predicted);
        let recall = ratio(tp, actual);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Self {
            precision,
            recall,
            f1,
            support,
        }
    }

    /// Unweighted mean of each column; support is summed.
    pub fn macro_average(rows: &[ClassMetrics]) -> Self {
        let n = rows.len().max(1) as f64;
        Self {
            precision: rows.iter().map(|r| r.precision).sum::<f64>() / n,
            recall: rows.iter().map(|r| r.recall).sum::<f64>() / n,
            f1: rows.iter().map(|r| r.f1).sum::<f64>() / n,
            support: rows.iter().map(|r| r.support).sum(),
        }
    }

    /// Support-weighted mean of each column; support is summed.
    pub fn weighted_average(rows: &[ClassMetrics]) -> Self {
        let total: usize = rows.iter().map(|r| r.support).sum();
        let w = |f: fn(&ClassMetrics) -> f64| {
            if total == 0 {
                0.0
            } else {
                rows.iter().map(|r| f(r) * r.support as f64).sum::<f64>() / total as f64
            }
        };
        Self {
            precision: w(|r| r.precision),
            recall: w(|r| r.recall),
            f1: w(|r| r.f1),
            support: total,
        }
    }
}

/// Classification report over matched detections.
///
/// `confusion[i][j]` counts cards of true class `labels[i]` predicted as
/// `labels[j]`. Ground-truth cards that were never detected are tallied in
/// `missed` and lower recall; detections with no ground truth are tallied
/// in `spurious` and lower precision. Neither enters the matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub labels: Vec<CardLabel>,
    pub confusion: Vec<Vec<usize>>,
    pub missed: Vec<usize>,
    pub spurious: Vec<usize>,
    pub per_class: Vec<ClassMetrics>,
    pub accuracy: f64,
    pub macro_avg: ClassMetrics,
    pub weighted_avg: ClassMetrics,
}

fn sort_labels(set: BTreeSet<CardLabel>) -> Vec<CardLabel> {
    let mut v: Vec<CardLabel> = set.into_iter().collect();
    v.sort_by_key(|l| l.as_str());
    v
}

impl EvalReport {
    /// `pairs` are `(truth, prediction)` for matched cards.
    pub fn from_outcomes(pairs: &[(CardLabel, CardLabel)], missed: &[CardLabel], spurious: &[CardLabel]) -> Self {
        let present: BTreeSet<CardLabel> = pairs
            .iter()
            .flat_map(|&(t, p)| [t, p])
            .chain(missed.iter().copied())
            .chain(spurious.iter().copied())
            .collect();
        let labels = sort_labels(present);
        let idx = |l: CardLabel| labels.iter().position(|&x| x == l).expect("label collected above");
        let n = labels.len();
        let mut confusion = vec![vec![0usize; n]; n];
        for &(t, p) in pairs {
            confusion[idx(t)][idx(p)] += 1;
        }
        let mut miss = vec![0usize; n];
        for &l in missed {
            miss[idx(l)] += 1;
        }
        let mut spur = vec![0usize; n];
        for &l in spurious {
            spur[idx(l)] += 1;
        }
        let per_class: Vec<ClassMetrics> = (0..n)
            .map(|i| {
                let tp = confusion[i][i];
                let support: usize = confusion[i].iter().sum();
                let predicted: usize = confusion.iter().map(|r| r[i]).sum::<usize>() + spur[i];
                ClassMetrics::from_counts(tp, predicted, support + miss[i], support)
            })
            .collect();
        let total = pairs.len();
        let correct = (0..n).map(|i| confusion[i][i]).sum::<usize>();
        Self {
            accuracy: if total == 0 { 0.0 } else { correct as f64 / total as f64 },
            macro_avg: ClassMetrics::macro_average(&per_class),
            weighted_avg: ClassMetrics::weighted_average(&per_class),
            labels,
            confusion,
            missed: miss,
            spurious: spur,
            per_class,
        }
    }

    pub fn total(&self) -> usize {
        self.confusion.iter().flatten().sum()
    }

    pub fn missed_total(&self) -> usize {
        self.missed.iter().sum()
    }

    pub fn spurious_total(&self) -> usize {
        self.spurious.iter().sum()
    }

    /// Report rows followed by accuracy, macro and weighted footers.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:>12} {:>9} {:>9} {:>9} {:>9}\n", "", "precision", "recall", "f1-score", "support");
        for (l, m) in self.labels.iter().zip(&self.per_class) {
            let _ = writeln!(
                s,
                "{:>12} {:>9.2} {:>9.2} {:>9.2} {:>9}",
                l.as_str(),
                m.precision,
                m.recall,
                m.f1,
                m.support
            );
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "{:>12} {:>9} {:>9} {:>9.2} {:>9}", "accuracy", "", "", self.accuracy, self.total());
        for (name, m) in [("macro avg", &self.macro_avg), ("weighted avg", &self.weighted_avg)] {
            let _ = writeln!(
                s,
                "{:>12} {:>9.2} {:>9.2} {:>9.2} {:>9}",
                name, m.precision, m.recall, m.f1, m.support
            );
        }
        if self.missed_total() + self.spurious_total() > 0 {
            let _ = writeln!(
                s,
                "\nundetected cards: {}, spurious detections: {}",
                self.missed_total(),
                self.spurious_total()
            );
        }
        s
    }
}
