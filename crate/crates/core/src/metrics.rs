//! Binary classification metrics.
//!
//! Precision, recall and F1 for the negative class are computed by swapping
//! the roles of the matrix cells (true negatives act as true positives, and
//! so on). Empty denominators yield 0 and mark the class as degenerate.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Class {
    Negative,
    Positive,
}

impl ConfusionMatrix {
    pub fn new(tp: u64, tn: u64, fp: u64, fn_: u64) -> Self {
        Self { tp, tn, fp, fn_ }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }

    /// Matrix seen from `class`: (true hits, false alarms, misses).
    fn view(&self, class: Class) -> (u64, u64, u64) {
        match class {
            Class::Positive => (self.tp, self.fp, self.fn_),
            Class::Negative => (self.tn, self.fn_, self.fp),
        }
    }

    /// Number of samples whose true label is `class`.
    pub fn support(&self, class: Class) -> u64 {
        let (hit, _, miss) = self.view(class);
        hit + miss
    }
}

/// Counts outcomes of paired labels. `positive` names the positive label;
/// every other label is negative, and at most two distinct labels may occur.
pub fn confusion<L: PartialEq>(
    y_true: &[L],
    y_pred: &[L],
    positive: &L,
) -> Result<ConfusionMatrix> {
    if y_true.len() != y_pred.len() {
        return Err(Error::InvalidInput(format!(
            "label lists differ in length: {} vs {}",
            y_true.len(),
            y_pred.len()
        )));
    }
    if y_true.is_empty() {
        return Err(Error::InvalidInput("no labels".into()));
    }
    let mut negative: Option<&L> = None;
    for l in y_true.iter().chain(y_pred) {
        if l == positive {
            continue;
        }
        match negative {
            None => negative = Some(l),
            Some(n) if n == l => {}
            Some(_) => return Err(Error::InvalidInput("more than two distinct labels".into())),
        }
    }
    let mut cm = ConfusionMatrix::default();
    for (t, p) in y_true.iter().zip(y_pred) {
        match (t == positive, p == positive) {
            (true, true) => cm.tp += 1,
            (false, false) => cm.tn += 1,
            (false, true) => cm.fp += 1,
            (true, false) => cm.fn_ += 1,
        }
    }
    Ok(cm)
}

fn require_samples(cm: &ConfusionMatrix) -> Result<()> {
    if cm.total() == 0 {
        Err(Error::InvalidInput("confusion matrix is empty".into()))
    } else {
        Ok(())
    }
}

pub fn accuracy(cm: &ConfusionMatrix) -> Result<f64> {
    require_samples(cm)?;
    Ok((cm.tp + cm.tn) as f64 / cm.total() as f64)
}

pub fn error_rate(cm: &ConfusionMatrix) -> Result<f64> {
    Ok(1.0 - accuracy(cm)?)
}

fn ratio(num: u64, den: u64) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

pub fn precision(cm: &ConfusionMatrix, class: Class) -> f64 {
    let (hit, alarm, _) = cm.view(class);
    ratio(hit, hit + alarm).0
}

pub fn recall(cm: &ConfusionMatrix, class: Class) -> f64 {
    let (hit, _, miss) = cm.view(class);
    ratio(hit, hit + miss).0
}

pub fn f1(cm: &ConfusionMatrix, class: Class) -> f64 {
    harmonic(precision(cm, class), recall(cm, class))
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
    /// Set when precision or recall had an empty denominator.
    pub degenerate: bool,
}

impl ClassMetrics {
    fn of(cm: &ConfusionMatrix, class: Class) -> Self {
        let (hit, alarm, miss) = cm.view(class);
        let (precision, p_deg) = ratio(hit, hit + alarm);
        let (recall, r_deg) = ratio(hit, hit + miss);
        Self {
            precision,
            recall,
            f1: harmonic(precision, recall),
            support: hit + miss,
            degenerate: p_deg || r_deg,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Averages {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassReport {
    pub confusion: ConfusionMatrix,
    pub negative: ClassMetrics,
    pub positive: ClassMetrics,
    pub accuracy: f64,
    pub error_rate: f64,
    pub macro_avg: Averages,
    pub weighted_avg: Averages,
}

pub fn report(cm: &ConfusionMatrix) -> Result<ClassReport> {
    let accuracy = accuracy(cm)?;
    let neg = ClassMetrics::of(cm, Class::Negative);
    let pos = ClassMetrics::of(cm, Class::Positive);
    let macro_avg = Averages {
        precision: (neg.precision + pos.precision) / 2.0,
        recall: (neg.recall + pos.recall) / 2.0,
        f1: (neg.f1 + pos.f1) / 2.0,
    };
    let total = cm.total() as f64;
    let (wn, wp) = (neg.support as f64 / total, pos.support as f64 / total);
    let weighted_avg = Averages {
        precision: wn * neg.precision + wp * pos.precision,
        recall: wn * neg.recall + wp * pos.recall,
        f1: wn * neg.f1 + wp * pos.f1,
    };
    Ok(ClassReport {
        confusion: *cm,
        negative: neg,
        positive: pos,
        accuracy,
        error_rate: 1.0 - accuracy,
        macro_avg,
        weighted_avg,
    })
}

/// Integer percent, rounded half away from zero.
pub fn percent(x: f64) -> i64 {
    (x * 100.0).round() as i64
}

impl fmt::Display for ClassReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let row = |f: &mut fmt::Formatter<'_>, name: &str, p: f64, r: f64, s: f64, n: u64| {
            writeln!(
                f,
                "{name:<18}{:>9}%{:>8}%{:>10}%{:>9}",
                percent(p),
                percent(r),
                percent(s),
                n
            )
        };
        writeln!(
            f,
            "{:<18}{:>10}{:>9}{:>11}{:>9}",
            "Categories", "Precision", "Recall", "F1 score", "Support"
        )?;
        let n = &self.negative;
        let p = &self.positive;
        let total = self.confusion.total();
        row(f, "Negative", n.precision, n.recall, n.f1, n.support)?;
        row(f, "Positive", p.precision, p.recall, p.f1, p.support)?;
        let m = &self.macro_avg;
        row(f, "Macro Average", m.precision, m.recall, m.f1, total)?;
        let w = &self.weighted_avg;
        row(f, "Weighted Average", w.precision, w.recall, w.f1, total)?;
        writeln!(f)?;
        writeln!(
            f,
            "Accuracy    {:>4}%  ({}/{})",
            percent(self.accuracy),
            self.confusion.tp + self.confusion.tn,
            total
        )?;
        writeln!(f, "Error rate  {:>4}%", percent(self.error_rate))?;
        writeln!(f)?;
        writeln!(f, "Confusion matrix (rows: true, columns: predicted)")?;
        writeln!(f, "{:<10}{:>10}{:>10}", "", "Negative", "Positive")?;
        writeln!(
            f,
            "{:<10}{:>10}{:>10}",
            "Negative", self.confusion.tn, self.confusion.fp
        )?;
        write!(
            f,
            "{:<10}{:>10}{:>10}",
            "Positive", self.confusion.fn_, self.confusion.tp
        )
    }
}
