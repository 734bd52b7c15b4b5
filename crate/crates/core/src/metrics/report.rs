use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{ConfusionMatrix, MetricError};

/// Temporal task categories, declared in report row order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum TaskCategory {
    Tsc,
    Cd,
    Sre,
    Qa,
    Rqa,
    Tre,
    Rtqa,
}

impl fmt::Display for TaskCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TaskCategory::Tsc => "TSC",
            TaskCategory::Cd => "CD",
            TaskCategory::Sre => "SRE",
            TaskCategory::Qa => "QA",
            TaskCategory::Rqa => "RQA",
            TaskCategory::Tre => "TRE",
            TaskCategory::Rtqa => "RTQA",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricName {
    F1,
    Accuracy,
    AccAtIou50,
}

impl fmt::Display for MetricName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MetricName::F1 => "F1",
            MetricName::Accuracy => "Acc.",
            MetricName::AccAtIou50 => "Acc@0.5",
        })
    }
}

/// One scored row. `value` is a fraction in `[0, 1]`; `None` means the
/// bucket had nothing scorable and renders as `-`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub category: TaskCategory,
    pub dataset: String,
    pub metric: MetricName,
    pub value: Option<f64>,
    pub count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_class: Option<BTreeMap<String, f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confusion: Option<ConfusionMatrix>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub meta: BTreeMap<String, String>,
}

impl MetricReport {
    pub fn new(
        category: TaskCategory,
        dataset: impl Into<String>,
        metric: MetricName,
        value: Option<f64>,
        count: usize,
    ) -> Result<Self, MetricError> {
        if let Some(v) = value {
            if !(0.0..=1.0).contains(&v) {
                return Err(MetricError::OutOfBounds(v));
            }
            if count == 0 {
                return Err(MetricError::Empty);
            }
        }
        Ok(Self {
            category,
            dataset: dataset.into(),
            metric,
            value,
            count,
            per_class: None,
            confusion: None,
            meta: BTreeMap::new(),
        })
    }

    pub fn with_meta(mut self, key: &str, value: impl Into<String>) -> Self {
        self.meta.insert(key.to_owned(), value.into());
        self
    }

    pub fn percent(&self) -> Option<f64> {
        self.value.map(|v| v * 100.0)
    }
}

/// Stable sort into category order; rows within a category keep their
/// incoming order.
pub fn sort_reports(reports: &mut [MetricReport]) {
    reports.sort_by_key(|r| r.category);
}

/// Aligned text table: Task | Dataset/Subtask | Metric | Value | N.
/// Values are percentages with one decimal; empty values print as `-`.
/// The category label is printed on the first row of each group.
pub fn render_table(reports: &[MetricReport]) -> String {
    let mut rows = reports.to_vec();
    sort_reports(&mut rows);
    let header = [
        "Task".to_owned(),
        "Dataset/Subtask".to_owned(),
        "Metric".to_owned(),
        "Value".to_owned(),
        "N".to_owned(),
    ];
    let mut cells: Vec<[String; 5]> = Vec::with_capacity(rows.len() + 1);
    cells.push(header);
    let mut last = None;
    for r in &rows {
        let task = if last == Some(r.category) {
            String::new()
        } else {
            r.category.to_string()
        };
        last = Some(r.category);
        cells.push([
            task,
            r.dataset.clone(),
            r.metric.to_string(),
            r.percent()
                .map_or_else(|| "-".to_owned(), |v| format!("{v:.1}")),
            r.count.to_string(),
        ]);
    }
    let mut widths = [0usize; 5];
    for row in &cells {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }
    let mut out = String::new();
    for (i, row) in cells.iter().enumerate() {
        let line = format!(
            "{:<w0$}  {:<w1$}  {:<w2$}  {:>w3$}  {:>w4$}",
            row[0],
            row[1],
            row[2],
            row[3],
            row[4],
            w0 = widths[0],
            w1 = widths[1],
            w2 = widths[2],
            w3 = widths[3],
            w4 = widths[4],
        );
        out.push_str(line.trim_end());
        out.push('\n');
        if i == 0 {
            let total = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
            out.push_str(&"-".repeat(total));
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(c: TaskCategory, d: &str, v: Option<f64>) -> MetricReport {
        MetricReport::new(c, d, MetricName::Accuracy, v, usize::from(v.is_some())).unwrap()
    }

    #[test]
    fn single_report_is_one_row() {
        let t = render_table(&[r(TaskCategory::Qa, "xBD", Some(0.899))]);
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[2].starts_with("QA"));
        assert!(lines[2].contains("89.9"));
    }

    #[test]
    fn rows_follow_category_order() {
        let reports = vec![
            r(TaskCategory::Rtqa, "QFabric", Some(0.5)),
            r(TaskCategory::Tre, "QFabric", Some(0.5)),
            r(TaskCategory::Tsc, "fMoW RGB", Some(0.5)),
            r(TaskCategory::Rqa, "xBD", Some(0.5)),
            r(TaskCategory::Cd, "xBD Loc.", Some(0.5)),
            r(TaskCategory::Qa, "xBD", Some(0.5)),
            r(TaskCategory::Sre, "xBD", Some(0.5)),
        ];
        let t = render_table(&reports);
        let order: Vec<&str> = t
            .lines()
            .skip(2)
            .map(|l| l.split_whitespace().next().unwrap())
            .collect();
        assert_eq!(order, ["TSC", "CD", "SRE", "QA", "RQA", "TRE", "RTQA"]);
    }

    #[test]
    fn missing_value_renders_dash() {
        let t = render_table(&[r(TaskCategory::Tre, "QFabric", None)]);
        let row = t.lines().nth(2).unwrap();
        assert_eq!(row.split_whitespace().nth(3), Some("-"));
    }

    #[test]
    fn grouped_rows_print_category_once() {
        let t = render_table(&[
            r(TaskCategory::Qa, "xBD", Some(0.1)),
            r(TaskCategory::Qa, "S2Looking", Some(0.2)),
        ]);
        let rows: Vec<&str> = t.lines().skip(2).collect();
        assert!(rows[0].starts_with("QA"));
        assert!(rows[1].starts_with(' '));
    }

    #[test]
    fn bounds_are_enforced() {
        assert!(MetricReport::new(TaskCategory::Qa, "x", MetricName::F1, Some(1.2), 3).is_err());
        assert!(MetricReport::new(TaskCategory::Qa, "x", MetricName::F1, Some(0.2), 0).is_err());
        assert!(MetricReport::new(TaskCategory::Qa, "x", MetricName::F1, None, 0).is_ok());
    }
}
