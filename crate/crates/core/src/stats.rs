//! Correlation of automatic metric scores with human judgments.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StatsError {
    LengthMismatch {
        x: usize,
        y: usize,
    },
    TooShort(usize),
    NonFinite,
    /// Correlation is undefined when a series has zero variance.
    ConstantSeries,
    ConstantColumn(String),
    /// Fewer than two rows survive missing-value deletion.
    TooFewRows {
        complete: usize,
    },
    RowWidth {
        row: usize,
        expected: usize,
        found: usize,
    },
}

impl fmt::Display for StatsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StatsError::LengthMismatch { x, y } => {
                write!(f, "series lengths differ ({x} vs {y})")
            }
            StatsError::TooShort(n) => write!(f, "need at least 2 values, got {n}"),
            StatsError::NonFinite => write!(f, "series contains a non-finite value"),
            StatsError::ConstantSeries => {
                write!(f, "correlation is undefined for a constant series")
            }
            StatsError::ConstantColumn(name) => {
                write!(f, "column `{name}` is constant; correlation is undefined")
            }
            StatsError::TooFewRows { complete } => {
                write!(f, "only {complete} complete rows, need at least 2")
            }
            StatsError::RowWidth {
                row,
                expected,
                found,
            } => write!(
                f,
                "row {row} has {found} metric values, expected {expected}"
            ),
        }
    }
}

impl core::error::Error for StatsError {}

fn is_constant(xs: &[f64]) -> bool {
    xs.iter().all(|&x| x == xs[0])
}

/// Pearson product-moment correlation, clamped to `[-1, 1]`.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch {
            x: x.len(),
            y: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(StatsError::TooShort(x.len()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    if is_constant(x) || is_constant(y) {
        return Err(StatsError::ConstantSeries);
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    Ok((sxy / libm::sqrt(sxx * syy)).clamp(-1.0, 1.0))
}

/// Per-record metric scores plus a human score; `None` marks a missing value.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricTable {
    metric_names: Vec<String>,
    ids: Vec<String>,
    rows: Vec<(Vec<Option<f64>>, Option<f64>)>,
}

impl MetricTable {
    pub fn new(metric_names: Vec<String>) -> Self {
        MetricTable {
            metric_names,
            ids: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn push_row(
        &mut self,
        id: impl Into<String>,
        metrics: Vec<Option<f64>>,
        human: Option<f64>,
    ) -> Result<(), StatsError> {
        if metrics.len() != self.metric_names.len() {
            return Err(StatsError::RowWidth {
                row: self.rows.len(),
                expected: self.metric_names.len(),
                found: metrics.len(),
            });
        }
        self.ids.push(id.into());
        self.rows.push((metrics, human));
        Ok(())
    }

    pub fn metric_names(&self) -> &[String] {
        &self.metric_names
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricCorrelation {
    pub metric: String,
    pub pearson: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationReport {
    /// Sorted by correlation, highest first; ties by metric name.
    pub entries: Vec<MetricCorrelation>,
    /// Rows removed because some value was missing or non-finite.
    pub dropped: usize,
}

/// Pearson correlation of every metric column against the human column,
/// after dropping every row with a missing value.
pub fn correlate_metrics(table: &MetricTable) -> Result<CorrelationReport, StatsError> {
    let complete: Vec<(Vec<f64>, f64)> = table
        .rows
        .iter()
        .filter_map(|(metrics, human)| {
            let human = human.filter(|h| h.is_finite())?;
            let metrics = metrics
                .iter()
                .map(|m| m.filter(|v| v.is_finite()))
                .collect::<Option<Vec<f64>>>()?;
            Some((metrics, human))
        })
        .collect();
    if complete.len() < 2 {
        return Err(StatsError::TooFewRows {
            complete: complete.len(),
        });
    }
    let dropped = table.rows.len() - complete.len();
    let human: Vec<f64> = complete.iter().map(|(_, h)| *h).collect();
    if is_constant(&human) {
        return Err(StatsError::ConstantColumn("human".into()));
    }

    let mut entries = Vec::with_capacity(table.metric_names.len());
    for (j, name) in table.metric_names.iter().enumerate() {
        let column: Vec<f64> = complete.iter().map(|(m, _)| m[j]).collect();
        let r = pearson(&column, &human).map_err(|e| match e {
            StatsError::ConstantSeries => StatsError::ConstantColumn(name.clone()),
            other => other,
        })?;
        entries.push(MetricCorrelation {
            metric: name.clone(),
            pearson: r,
            n: complete.len(),
        });
    }
    entries.sort_by(|a, b| {
        b.pearson
            .total_cmp(&a.pearson)
            .then_with(|| a.metric.cmp(&b.metric))
    });
    Ok(CorrelationReport { entries, dropped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    #[test]
    fn pearson_examples() {
        assert!((pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-12);
        assert!(
            (pearson(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap() - 0.8).abs() < 1e-12
        );
    }

    #[test]
    fn pearson_errors() {
        assert_eq!(
            pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(StatsError::ConstantSeries)
        );
        assert_eq!(
            pearson(&[0.1, 0.1, 0.1], &[1.0, 2.0, 3.0]),
            Err(StatsError::ConstantSeries)
        );
        assert!(matches!(
            pearson(&[1.0, 2.0], &[1.0]),
            Err(StatsError::LengthMismatch { .. })
        ));
        assert_eq!(pearson(&[1.0], &[1.0]), Err(StatsError::TooShort(1)));
        assert_eq!(
            pearson(&[1.0, f64::NAN], &[1.0, 2.0]),
            Err(StatsError::NonFinite)
        );
    }

    fn table(names: &[&str], rows: &[(&[Option<f64>], Option<f64>)]) -> MetricTable {
        let mut t = MetricTable::new(names.iter().map(|s| s.to_string()).collect());
        for (i, (m, h)) in rows.iter().enumerate() {
            t.push_row(alloc::format!("r{i}"), m.to_vec(), *h).unwrap();
        }
        t
    }

    #[test]
    fn correlate_ranks_exact_column_first() {
        let t = table(
            &["noisy", "exact"],
            &[
                (&[Some(3.0), Some(1.0)], Some(1.0)),
                (&[Some(1.0), Some(2.0)], Some(2.0)),
                (&[Some(2.0), Some(4.0)], Some(4.0)),
                (&[None, Some(9.0)], Some(9.0)),
            ],
        );
        let report = correlate_metrics(&t).unwrap();
        assert_eq!(report.dropped, 1);
        assert_eq!(report.entries[0].metric, "exact");
        assert!((report.entries[0].pearson - 1.0).abs() < 1e-12);
        assert_eq!(report.entries[0].n, 3);
    }

    #[test]
    fn correlate_oracle_value() {
        let t = table(
            &["m"],
            &[
                (&[Some(1.0)], Some(1.0)),
                (&[Some(2.0)], Some(3.0)),
                (&[Some(3.0)], Some(2.0)),
                (&[Some(4.0)], Some(4.0)),
            ],
        );
        assert_eq!(correlate_metrics(&t).unwrap().entries[0].pearson, 0.8);
    }

    #[test]
    fn correlate_errors() {
        let t = table(&["m"], &[(&[Some(1.0)], Some(1.0))]);
        assert_eq!(
            correlate_metrics(&t),
            Err(StatsError::TooFewRows { complete: 1 })
        );
        let t = table(
            &["flat"],
            &[(&[Some(1.0)], Some(1.0)), (&[Some(1.0)], Some(2.0))],
        );
        assert_eq!(
            correlate_metrics(&t),
            Err(StatsError::ConstantColumn("flat".into()))
        );
        let mut t = MetricTable::new(vec!["a".into()]);
        assert!(t.push_row("x", vec![], Some(1.0)).is_err());
    }
}
