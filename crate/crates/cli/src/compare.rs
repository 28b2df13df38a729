//! Side-by-side metric tables over finished runs.

use qweather_core::models::Task;
use qweather_core::numfmt;

use crate::error::HarnessError;
use crate::report::ExperimentReport;

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonRow {
    pub model: String,
    pub train: f64,
    pub test: f64,
    pub parameters: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    pub task: Task,
    pub rows: Vec<ComparisonRow>,
}

impl Comparison {
    pub fn metric_headers(&self) -> [&'static str; 2] {
        if self.task.is_classification() {
            ["Training accuracy", "Test accuracy"]
        } else {
            ["Training MSE (scaled)", "Test MSE (scaled)"]
        }
    }

    /// Aligned plain-text table with four decimals.
    pub fn to_text(&self) -> String {
        let [a, b] = self.metric_headers();
        let cells: Vec<[String; 4]> = self
            .rows
            .iter()
            .map(|r| [r.model.clone(), numfmt::table(r.train), numfmt::table(r.test), r.parameters.to_string()])
            .collect();
        let header = ["Model".to_string(), a.to_string(), b.to_string(), "Parameters".to_string()];
        let mut widths = header.clone().map(|h| h.len());
        for row in &cells {
            for (w, c) in widths.iter_mut().zip(row) {
                *w = (*w).max(c.len());
            }
        }
        let line = |row: &[String; 4]| {
            let mut s = format!("{:<w$}", row[0], w = widths[0]);
            for i in 1..4 {
                s.push_str(&format!("  {:>w$}", row[i], w = widths[i]));
            }
            s.trim_end().to_string() + "\n"
        };
        let mut out = line(&header);
        out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 6));
        out.push('\n');
        for row in &cells {
            out.push_str(&line(row));
        }
        out
    }

    /// Same table at full precision.
    pub fn to_csv(&self) -> String {
        let [a, b] = self.metric_headers();
        let mut out = format!("model,{},{},parameters\n", snake(a), snake(b));
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{}\n", r.model, numfmt::full(r.train), numfmt::full(r.test), r.parameters));
        }
        out
    }
}

fn snake(h: &str) -> String {
    h.to_lowercase().replace(['(', ')'], "").replace(' ', "_")
}

/// One row per report, in input order.
pub fn compare(reports: &[ExperimentReport]) -> Result<Comparison, HarnessError> {
    if reports.len() < 2 {
        return Err(HarnessError::Config(format!("compare needs at least two reports, got {}", reports.len())));
    }
    let task = reports[0].task();
    if let Some(other) = reports.iter().find(|r| r.task() != task) {
        return Err(HarnessError::Config(format!("mixed tasks: {task} and {}", other.task())));
    }
    let pick = |m: &crate::report::SplitMetrics| {
        if task.is_classification() {
            m.accuracy
        } else {
            m.mse_scaled
        }
    };
    let rows = reports
        .iter()
        .map(|r| {
            let (Some(train), Some(test)) = (pick(&r.metrics.train), pick(&r.metrics.test)) else {
                return Err(HarnessError::Data(format!("report for {} lacks {task} metrics", r.label())));
            };
            Ok(ComparisonRow { model: r.label(), train, test, parameters: r.parameters.total })
        })
        .collect::<Result<_, _>>()?;
    Ok(Comparison { task, rows })
}
