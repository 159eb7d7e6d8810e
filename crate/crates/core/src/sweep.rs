//! Rows produced by parameter sweeps.

use std::cmp::Ordering;

use serde::Serialize;

use crate::error::Error;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    /// `eta` for the Rabi model, `lambda` for the Hopfield model.
    pub coupling: f64,
    pub detuning: f64,
    /// Transition such as `(1-,0)` or polariton branch such as `1`.
    pub label: String,
    pub quantity: String,
    pub value: f64,
    pub mode: String,
    pub gauge: String,
    /// Fock cutoff used, if the value came from a truncated computation.
    pub cutoff: Option<usize>,
}

impl SweepRow {
    fn sort_key(&self, other: &SweepRow) -> Ordering {
        self.detuning
            .total_cmp(&other.detuning)
            .then(self.coupling.total_cmp(&other.coupling))
            .then_with(|| self.label.cmp(&other.label))
            .then_with(|| self.quantity.cmp(&other.quantity))
            .then_with(|| self.mode.cmp(&other.mode))
            .then_with(|| self.gauge.cmp(&other.gauge))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointFailure {
    pub index: usize,
    pub coordinates: String,
    pub error: Error,
}

impl PointFailure {
    pub fn new(index: usize, coordinates: String, error: Error) -> Self {
        PointFailure {
            index,
            coordinates,
            error,
        }
    }

    pub fn into_error(self) -> Error {
        Error::SweepPoint {
            index: self.index,
            coordinates: self.coordinates,
            source: Box::new(self.error),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub failures: Vec<PointFailure>,
}

impl SweepResult {
    /// Sorts rows by (detuning, coupling, label) and failures by grid index.
    pub fn sort(&mut self) {
        self.rows.sort_by(|a, b| a.sort_key(b));
        self.failures.sort_by_key(|f| f.index);
    }

    pub fn merge(&mut self, other: SweepResult) {
        self.rows.extend(other.rows);
        self.failures.extend(other.failures);
        self.sort();
    }

    pub fn is_complete(&self) -> bool {
        self.failures.is_empty()
    }

    /// The first failure as an error, if any point failed.
    pub fn into_complete(mut self) -> Result<Vec<SweepRow>, Error> {
        if self.failures.is_empty() {
            Ok(self.rows)
        } else {
            Err(self.failures.remove(0).into_error())
        }
    }

    /// Values of `quantity` for `label`, ordered by coupling.
    pub fn series(&self, label: &str, quantity: &str, mode: &str) -> Vec<(f64, f64)> {
        self.rows
            .iter()
            .filter(|r| r.label == label && r.quantity == quantity && r.mode == mode)
            .map(|r| (r.coupling, r.value))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(coupling: f64, detuning: f64, label: &str) -> SweepRow {
        SweepRow {
            coupling,
            detuning,
            label: label.into(),
            quantity: "q".into(),
            value: 0.0,
            mode: "correct".into(),
            gauge: "dipole".into(),
            cutoff: None,
        }
    }

    #[test]
    fn rows_sort_by_detuning_then_coupling_then_label() {
        let mut r = SweepResult {
            rows: vec![
                row(0.2, 0.0, "b"),
                row(0.1, 0.1, "a"),
                row(0.2, 0.0, "a"),
                row(0.1, 0.0, "z"),
            ],
            failures: vec![],
        };
        r.sort();
        let keys: Vec<_> = r
            .rows
            .iter()
            .map(|r| (r.detuning, r.coupling, r.label.clone()))
            .collect();
        assert_eq!(
            keys,
            vec![
                (0.0, 0.1, "z".to_string()),
                (0.0, 0.2, "a".to_string()),
                (0.0, 0.2, "b".to_string()),
                (0.1, 0.1, "a".to_string()),
            ]
        );
    }
}
