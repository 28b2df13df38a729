//! ERA5-style monthly extracts: ingestion, correlation ranking, feature
//! selection, scaling, target binning, chronological splits and a seeded
//! synthetic generator.

use std::io::{Read, Write};
use std::ops::Range;
use std::path::Path;

use chrono::{Months, NaiveDate, NaiveDateTime};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numfmt;

pub const TIME_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";
pub const DEFAULT_TARGET: &str = "t2m";

/// Binary threshold and ternary boundaries in kelvin; boundary values go up.
pub const BINARY_BOUNDARY_K: f64 = 298.0;
pub const TERNARY_BOUNDARIES_K: [f64; 2] = [295.55, 306.57];
pub const PLAUSIBLE_RANGE_K: (f64, f64) = (150.0, 350.0);

/// Unit label for known short names.
pub fn unit_for(name: &str) -> &'static str {
    match name {
        "t2m" | "skt" | "vithe" | "vitoe" | "vithed" => "K",
        "sp" => "Pa",
        "p54.162" => "hPa",
        "tsr" | "ssrdc" | "ssrd" | "ssr" | "str" | "slhf" | "sshf" => "J/m²",
        "fdir" => "W/m²",
        "cdir" => "degrees",
        "u10" | "v10" | "u100" | "v100" | "v10n" | "mer" => "m/s",
        "hcc" | "mcc" | "lcc" => "%",
        "cbh" => "m",
        "tp" | "cp" => "mm",
        "mtpr" => "mm/hr",
        "viwvd" | "e" => "kg/m²",
        _ => "",
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scaling {
    None,
    Minmax { min: f64, max: f64 },
    Standard { mean: f64, std: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleMethod {
    Minmax,
    Standard,
}

impl Scaling {
    /// Fit on `values`; population standard deviation for `Standard`.
    pub fn fit(name: &str, values: &[f64], method: ScaleMethod) -> Result<Scaling> {
        if values.is_empty() {
            return Err(Error::EmptyDataset(format!("no rows to fit a scaler for `{name}`")));
        }
        match method {
            ScaleMethod::Minmax => {
                let min = values.iter().copied().fold(f64::INFINITY, f64::min);
                let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                if !(max > min) {
                    return Err(Error::DegenerateScale(name.to_string()));
                }
                Ok(Scaling::Minmax { min, max })
            }
            ScaleMethod::Standard => {
                let n = values.len() as f64;
                let mean = values.iter().sum::<f64>() / n;
                let std = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
                if !(std > 0.0) {
                    return Err(Error::DegenerateScale(name.to_string()));
                }
                Ok(Scaling::Standard { mean, std })
            }
        }
    }

    pub fn apply(&self, v: f64) -> f64 {
        match *self {
            Scaling::None => v,
            Scaling::Minmax { min, max } => (v - min) / (max - min),
            Scaling::Standard { mean, std } => (v - mean) / std,
        }
    }

    pub fn inverse(&self, v: f64) -> f64 {
        match *self {
            Scaling::None => v,
            Scaling::Minmax { min, max } => v * (max - min) + min,
            Scaling::Standard { mean, std } => v * std + mean,
        }
    }

    /// Factor mapping a scaled difference back to original units.
    pub fn unit_factor(&self) -> f64 {
        match *self {
            Scaling::None => 1.0,
            Scaling::Minmax { min, max } => max - min,
            Scaling::Standard { std, .. } => std,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Column {
    pub name: String,
    pub unit: String,
    pub values: Vec<f64>,
    pub scaling: Scaling,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub time: Vec<NaiveDateTime>,
    pub columns: Vec<Column>,
    pub target_name: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestionReport {
    pub rows_read: usize,
    pub rows_dropped: usize,
    pub columns: Vec<String>,
}

fn parse_time(s: &str) -> Option<NaiveDateTime> {
    let s = s.trim();
    for f in [TIME_FORMAT, "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M", "%Y-%m-%dT%H:%M:%SZ"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(s, f) {
            return Some(t);
        }
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d").ok().and_then(|d| d.and_hms_opt(0, 0, 0))
}

impl Dataset {
    pub fn new(time: Vec<NaiveDateTime>, columns: Vec<Column>, target_name: &str) -> Result<Self> {
        if columns.iter().any(|c| c.values.len() != time.len()) {
            return Err(invalid("all columns must match the time axis length"));
        }
        if time.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Format("timestamps must be strictly increasing".into()));
        }
        if !columns.iter().any(|c| c.name == target_name) {
            return Err(Error::Format(format!("target column `{target_name}` not found")));
        }
        for (i, c) in columns.iter().enumerate() {
            if columns[..i].iter().any(|o| o.name == c.name) {
                return Err(Error::Format(format!("duplicate column `{}`", c.name)));
            }
            if c.values.iter().any(|v| !v.is_finite()) {
                return Err(invalid(format!("column `{}` has non-finite values", c.name)));
            }
        }
        Ok(Dataset { time, columns, target_name: target_name.to_string() })
    }

    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    pub fn column_names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.columns.iter().filter(|c| c.name != self.target_name).map(|c| c.name.clone()).collect()
    }

    pub fn column(&self, name: &str) -> Result<&Column> {
        self.columns
            .iter()
            .find(|c| c.name == name)
            .ok_or_else(|| invalid(format!("no column `{name}`")))
    }

    pub fn target(&self) -> &Column {
        self.columns.iter().find(|c| c.name == self.target_name).expect("target checked at construction")
    }

    /// Row-major feature matrix over `names`.
    pub fn matrix(&self, names: &[String]) -> Result<Vec<Vec<f64>>> {
        let cols: Vec<&Column> = names.iter().map(|n| self.column(n)).collect::<Result<_>>()?;
        Ok((0..self.len()).map(|r| cols.iter().map(|c| c.values[r]).collect()).collect())
    }

    pub fn slice(&self, rows: Range<usize>) -> Dataset {
        Dataset {
            time: self.time[rows.clone()].to_vec(),
            columns: self
                .columns
                .iter()
                .map(|c| Column { values: c.values[rows.clone()].to_vec(), ..c.clone() })
                .collect(),
            target_name: self.target_name.clone(),
        }
    }

    pub fn read_csv<R: Read>(reader: R, target: &str) -> Result<(Dataset, IngestionReport)> {
        let mut rdr = csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(reader);
        let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        let time_idx = headers
            .iter()
            .position(|h| h == "time")
            .ok_or_else(|| Error::Format("missing `time` column".into()))?;
        let names: Vec<(usize, String)> =
            headers.iter().enumerate().filter(|(i, _)| *i != time_idx).map(|(i, h)| (i, h.clone())).collect();
        if !names.iter().any(|(_, n)| n == target) {
            return Err(Error::Format(format!("target column `{target}` not found")));
        }
        let mut time = Vec::new();
        let mut values: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
        let mut rows_read = 0;
        let mut rows_dropped = 0;
        for rec in rdr.records() {
            let rec = rec?;
            rows_read += 1;
            if rec.len() != headers.len() {
                rows_dropped += 1;
                continue;
            }
            let t = parse_time(&rec[time_idx]);
            let row: Option<Vec<f64>> = names
                .iter()
                .map(|(i, _)| rec[*i].parse::<f64>().ok().filter(|v| v.is_finite()))
                .collect();
            match (t, row) {
                (Some(t), Some(row)) => {
                    time.push(t);
                    for (col, v) in values.iter_mut().zip(row) {
                        col.push(v);
                    }
                }
                _ => rows_dropped += 1,
            }
        }
        if time.is_empty() {
            return Err(Error::EmptyDataset(format!("{rows_read} rows read, none usable")));
        }
        let columns = names
            .iter()
            .zip(values)
            .map(|((_, n), v)| Column {
                name: n.clone(),
                unit: unit_for(n).to_string(),
                values: v,
                scaling: Scaling::None,
            })
            .collect();
        let ds = Dataset::new(time, columns, target)?;
        let report = IngestionReport { rows_read, rows_dropped, columns: ds.column_names() };
        Ok((ds, report))
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["time".to_string()];
        header.extend(self.column_names());
        w.write_record(&header)?;
        for r in 0..self.len() {
            let mut rec = vec![self.time[r].format(TIME_FORMAT).to_string()];
            rec.extend(self.columns.iter().map(|c| numfmt::full(c.values[r])));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn load_csv(path: &Path, target: &str) -> Result<(Dataset, IngestionReport)> {
    let f = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Dataset::read_csv(std::io::BufReader::new(f), target)
}

/// Sample Pearson correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(invalid(format!("pearson needs equal lengths ≥ 2, got {} and {}", x.len(), y.len())));
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
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation("constant series".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEntry {
    pub feature: String,
    pub r: f64,
}

/// Features ranked by descending |r| against `target`; ties alphabetical.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub target: String,
    pub entries: Vec<CorrelationEntry>,
    /// Features whose correlation is undefined (constant columns).
    pub undefined: Vec<String>,
}

impl CorrelationReport {
    pub fn from_values(target: &str, values: &[(&str, f64)]) -> Result<Self> {
        let mut entries = Vec::new();
        for &(f, r) in values {
            if !(-1.0..=1.0).contains(&r) {
                return Err(invalid(format!("correlation for `{f}` outside [-1, 1]: {r}")));
            }
            if f != target {
                entries.push(CorrelationEntry { feature: f.to_string(), r });
            }
        }
        Ok(Self::ranked(target, entries, Vec::new()))
    }

    fn ranked(target: &str, mut entries: Vec<CorrelationEntry>, undefined: Vec<String>) -> Self {
        entries.sort_by(|a, b| b.r.abs().total_cmp(&a.r.abs()).then_with(|| a.feature.cmp(&b.feature)));
        CorrelationReport { target: target.to_string(), entries, undefined }
    }

    pub fn r(&self, feature: &str) -> Option<f64> {
        self.entries.iter().find(|e| e.feature == feature).map(|e| e.r)
    }
}

pub fn correlate(ds: &Dataset) -> Result<CorrelationReport> {
    let t = &ds.target().values;
    let mut entries = Vec::new();
    let mut undefined = Vec::new();
    for c in ds.columns.iter().filter(|c| c.name != ds.target_name) {
        match pearson(&c.values, t) {
            Ok(r) => entries.push(CorrelationEntry { feature: c.name.clone(), r }),
            Err(Error::UndefinedCorrelation(_)) => undefined.push(c.name.clone()),
            Err(e) => return Err(e),
        }
    }
    Ok(CorrelationReport::ranked(&ds.target_name, entries, undefined))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    Threshold(f64),
    TopK(usize),
}

pub fn select_features(report: &CorrelationReport, rule: Selection) -> Result<Vec<String>> {
    let ranked = report.entries.iter().filter(|e| e.feature != report.target);
    let out: Vec<String> = match rule {
        Selection::Threshold(tau) => ranked.filter(|e| e.r.abs() >= tau).map(|e| e.feature.clone()).collect(),
        Selection::TopK(k) => ranked.take(k).map(|e| e.feature.clone()).collect(),
    };
    if out.is_empty() {
        return Err(Error::EmptySelection);
    }
    Ok(out)
}

/// Fit scalers for `columns` on `fit_rows` and apply them to every row.
pub fn scale(ds: &Dataset, columns: &[String], method: ScaleMethod, fit_rows: Range<usize>) -> Result<Dataset> {
    if fit_rows.is_empty() || fit_rows.end > ds.len() {
        return Err(invalid(format!("fit rows {fit_rows:?} invalid for {} rows", ds.len())));
    }
    let mut out = ds.clone();
    for name in columns {
        let col = out
            .columns
            .iter_mut()
            .find(|c| &c.name == name)
            .ok_or_else(|| invalid(format!("no column `{name}`")))?;
        if col.scaling != Scaling::None {
            return Err(invalid(format!("column `{name}` is already scaled")));
        }
        let s = Scaling::fit(name, &col.values[fit_rows.clone()], method)?;
        for v in col.values.iter_mut() {
            *v = s.apply(*v);
        }
        col.scaling = s;
    }
    Ok(out)
}

/// Undo the recorded scaling of every column.
pub fn unscale(ds: &Dataset) -> Dataset {
    let mut out = ds.clone();
    for c in out.columns.iter_mut() {
        for v in c.values.iter_mut() {
            *v = c.scaling.inverse(*v);
        }
        c.scaling = Scaling::None;
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinMode {
    Binary,
    Ternary,
}

impl BinMode {
    pub fn n_classes(self) -> usize {
        match self {
            BinMode::Binary => 2,
            BinMode::Ternary => 3,
        }
    }
}

pub fn bin_value(t: f64, mode: BinMode) -> Result<usize> {
    if !t.is_finite() {
        return Err(invalid(format!("non-finite temperature {t}")));
    }
    Ok(match mode {
        BinMode::Binary => usize::from(t >= BINARY_BOUNDARY_K),
        BinMode::Ternary => TERNARY_BOUNDARIES_K.iter().filter(|&&b| t >= b).count(),
    })
}

pub fn bin_target(t2m: &[f64], mode: BinMode) -> Result<Vec<usize>> {
    t2m.iter().map(|&t| bin_value(t, mode)).collect()
}

/// Indices of temperatures outside the plausible physical range.
pub fn implausible(t2m: &[f64]) -> Vec<usize> {
    let (lo, hi) = PLAUSIBLE_RANGE_K;
    (0..t2m.len()).filter(|&i| !(lo..=hi).contains(&t2m[i])).collect()
}

/// `⌊n·fraction⌋`, rejecting splits that leave either side empty.
pub fn split_index(n: usize, fraction: f64) -> Result<usize> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(invalid(format!("train fraction must be in (0, 1), got {fraction}")));
    }
    let k = (n as f64 * fraction).floor() as usize;
    if n < 2 || k == 0 || k >= n {
        return Err(invalid(format!("split of {n} rows at {fraction} leaves an empty side")));
    }
    Ok(k)
}

pub fn chrono_split(ds: &Dataset, fraction: f64) -> Result<(Dataset, Dataset)> {
    let k = split_index(ds.len(), fraction)?;
    Ok((ds.slice(0..k), ds.slice(k..ds.len())))
}

struct SynthColumn {
    name: &'static str,
    base: f64,
    scale: f64,
    /// Target correlation with the seasonal signal; sign gives direction.
    r: f64,
}

const SYNTH_COLUMNS: [SynthColumn; 9] = [
    SynthColumn { name: "skt", base: 301.5, scale: 17.0, r: 0.985 },
    SynthColumn { name: "tsr", base: 1.6e7, scale: 4.0e6, r: 0.81 },
    SynthColumn { name: "ssrdc", base: 2.0e7, scale: 4.5e6, r: 0.79 },
    SynthColumn { name: "ssrd", base: 1.5e7, scale: 3.5e6, r: 0.77 },
    SynthColumn { name: "sp", base: 100_800.0, scale: 600.0, r: -0.81 },
    SynthColumn { name: "u10", base: 0.5, scale: 2.0, r: 0.0 },
    SynthColumn { name: "v10", base: -0.3, scale: 2.0, r: 0.0 },
    SynthColumn { name: "tp", base: 3.0, scale: 1.0, r: 0.0 },
    SynthColumn { name: "hcc", base: 40.0, scale: 20.0, r: 0.0 },
];

pub const SYNTH_SIGNAL_NOISE: f64 = 0.05;
pub const SYNTH_T2M_NOISE_K: f64 = 0.5;

/// Seeded monthly series starting 1940-01-01 12:00. A latent seasonal signal
/// `s = sin(2πt/12) + u`, `u ~ U(±0.05)`, drives `t2m = 301.06 + 16.53 s ± 0.5`
/// and the correlated features; distractors are pure noise.
pub fn synth_generate(seed: u64, n_months: usize) -> Result<Dataset> {
    if n_months < 24 {
        return Err(invalid(format!("need at least 24 months, got {n_months}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = NaiveDate::from_ymd_opt(1940, 1, 1).and_then(|d| d.and_hms_opt(12, 0, 0)).expect("valid date");
    let time: Vec<NaiveDateTime> = (0..n_months)
        .map(|k| start.checked_add_months(Months::new(k as u32)).expect("in range"))
        .collect();
    let s: Vec<f64> = (0..n_months)
        .map(|t| {
            (std::f64::consts::TAU * t as f64 / 12.0).sin()
                + rng.random_range(-SYNTH_SIGNAL_NOISE..=SYNTH_SIGNAL_NOISE)
        })
        .collect();
    let t2m: Vec<f64> = s
        .iter()
        .map(|&v| 301.06 + 16.53 * v + rng.random_range(-SYNTH_T2M_NOISE_K..=SYNTH_T2M_NOISE_K))
        .collect();
    let mut columns = vec![Column { name: "t2m".into(), unit: "K".into(), values: t2m, scaling: Scaling::None }];
    for spec in &SYNTH_COLUMNS {
        // With Var(s) ≈ 1/2 and ε ~ U(±1), Var(ε) = 1/3, noise weight b gives corr ≈ r.
        let (a, b) = if spec.r == 0.0 {
            (0.0, 1.0)
        } else {
            (spec.r.signum(), (1.5 * (1.0 / (spec.r * spec.r) - 1.0)).sqrt())
        };
        let values = s.iter().map(|&v| spec.base + spec.scale * (a * v + b * rng.random_range(-1.0..=1.0))).collect();
        columns.push(Column {
            name: spec.name.into(),
            unit: unit_for(spec.name).into(),
            values,
            scaling: Scaling::None,
        });
    }
    Dataset::new(time, columns, DEFAULT_TARGET)
}
