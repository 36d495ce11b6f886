use serde::Serialize;

use super::{Forest, LabeledExample};
use crate::tca::NUM_CLASSES;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub macro_f1: f64,
    /// `confusion[truth][predicted]`, classes in ascending order.
    pub confusion: Vec<Vec<u64>>,
    /// Classes seen neither in the truth nor in the predictions. They count
    /// as F1 = 0 in the macro average.
    pub absent_classes: Vec<u8>,
}

impl EvalReport {
    /// Builds the report from a square confusion matrix.
    pub fn from_confusion(confusion: Vec<Vec<u64>>) -> Self {
        let k = confusion.len();
        debug_assert!(confusion.iter().all(|r| r.len() == k));
        let total: u64 = confusion.iter().flatten().sum();
        let correct: u64 = (0..k).map(|i| confusion[i][i]).sum();
        let accuracy = if total == 0 {
            0.0
        } else {
            correct as f64 / total as f64
        };

        let mut f1_sum = 0.0;
        let mut absent = Vec::new();
        for c in 0..k {
            let tp = confusion[c][c] as f64;
            let actual: u64 = confusion[c].iter().sum();
            let predicted: u64 = (0..k).map(|r| confusion[r][c]).sum();
            if actual == 0 && predicted == 0 {
                absent.push(c as u8 + 1);
                continue;
            }
            let denom = (actual + predicted) as f64;
            f1_sum += 2.0 * tp / denom;
        }
        Self {
            accuracy,
            macro_f1: if k == 0 { 0.0 } else { f1_sum / k as f64 },
            confusion,
            absent_classes: absent,
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "accuracy  {:.4}\nmacro_f1  {:.4}\n",
            self.accuracy, self.macro_f1
        );
        s.push_str("confusion (rows = truth, cols = predicted)\n");
        for (i, row) in self.confusion.iter().enumerate() {
            let cells: Vec<String> = row.iter().map(|c| format!("{c:>6}")).collect();
            s.push_str(&format!("  class {} {}\n", i + 1, cells.join("")));
        }
        if !self.absent_classes.is_empty() {
            s.push_str(&format!(
                "absent classes (F1 = 0): {:?}\n",
                self.absent_classes
            ));
        }
        s
    }
}

pub fn evaluate(forest: &Forest, test_set: &[LabeledExample]) -> EvalReport {
    let mut confusion = vec![vec![0u64; NUM_CLASSES]; NUM_CLASSES];
    for e in test_set {
        let p = forest.predict(&e.features);
        confusion[usize::from(e.class_id) - 1][usize::from(p) - 1] += 1;
    }
    EvalReport::from_confusion(confusion)
}
