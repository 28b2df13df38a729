//! Plot-ready prediction series.

use qweather_core::numfmt;

use crate::error::HarnessError;
use crate::report::{ExperimentReport, PredictionRow};

/// `time,actual_K,predicted_K` in time order for a regression report. For a
/// classification report this is an error unless `probabilities` is set, in
/// which case the per-class scores are written instead.
pub fn emit_plot_data(report: &ExperimentReport, probabilities: bool) -> Result<String, HarnessError> {
    if report.predictions.is_empty() {
        return Err(HarnessError::Data("report has no predictions".into()));
    }
    let mut rows: Vec<&PredictionRow> = report.predictions.iter().collect();
    rows.sort_by(|a, b| a.time.cmp(&b.time));
    if report.task().is_classification() {
        if !probabilities {
            return Err(HarnessError::Data(
                "classification report has no temperature predictions; pass --probabilities for class scores".into(),
            ));
        }
        let width = rows.iter().map(|r| r.scores.len()).max().unwrap_or(0);
        let kind = report.score_kind.as_deref().unwrap_or("score");
        let mut out = String::from("time,actual,predicted");
        for k in 0..width {
            out.push_str(&format!(",{kind}_{k}"));
        }
        out.push('\n');
        for r in rows {
            out.push_str(&format!("{},{},{}", r.time, r.actual, r.predicted));
            for s in &r.scores {
                out.push(',');
                out.push_str(&numfmt::full(*s));
            }
            out.push('\n');
        }
        return Ok(out);
    }
    let mut out = String::from("time,actual_K,predicted_K\n");
    for r in rows {
        out.push_str(&format!("{},{},{}\n", r.time, numfmt::full(r.actual), numfmt::full(r.predicted)));
    }
    Ok(out)
}

/// Parse a regression plot file back into `(time, actual, predicted)`.
pub fn read_plot_data(text: &str) -> Result<Vec<(String, f64, f64)>, HarnessError> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(|e| HarnessError::Data(e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["time", "actual_K", "predicted_K"] {
        return Err(HarnessError::Data("not a regression plot file".into()));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| HarnessError::Data(e.to_string()))?;
        let num = |i: usize| rec[i].parse::<f64>().map_err(|e| HarnessError::Data(format!("{}: {e}", &rec[i])));
        out.push((rec[0].to_string(), num(1)?, num(2)?));
    }
    Ok(out)
}
