//! Quarterly series, growth-rate transforms, descriptive statistics, the
//! augmented Dickey-Fuller test, and lag alignment into an estimable dataset.
//!
//! Inputs are assumed to be seasonally adjusted already. Missing values are a
//! hard load error; nothing is interpolated.

use std::cmp::Ordering;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Scalar;

/// Minimum number of aligned rows a dataset must have.
pub const MIN_ALIGNED_OBS: usize = 20;

/// Asymptotic ADF critical values for the constant-only specification,
/// ordered 10%, 5%, 1%.
pub const ADF_CRITICAL_CONSTANT: [f64; 3] = [-2.57, -2.88, -3.44];

/// A calendar quarter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Period {
    year: i32,
    quarter: u8,
}

impl Period {
    pub fn new(year: i32, quarter: u8) -> Result<Self> {
        if !(1..=4).contains(&quarter) {
            return Err(Error::Domain(format!("invalid quarter {quarter}")));
        }
        Ok(Period { year, quarter })
    }

    pub fn year(&self) -> i32 {
        self.year
    }

    pub fn quarter(&self) -> u8 {
        self.quarter
    }

    fn index(&self) -> i64 {
        self.year as i64 * 4 + (self.quarter as i64 - 1)
    }

    fn from_index(i: i64) -> Self {
        Period {
            year: i.div_euclid(4) as i32,
            quarter: (i.rem_euclid(4) + 1) as u8,
        }
    }

    /// The period `n` quarters later (earlier when negative).
    pub fn offset(&self, n: i64) -> Self {
        Self::from_index(self.index() + n)
    }

    pub fn succ(&self) -> Self {
        self.offset(1)
    }

    /// Signed number of quarters from `self` to `other`.
    pub fn quarters_until(&self, other: &Period) -> i64 {
        other.index() - self.index()
    }
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}Q{}", self.year, self.quarter)
    }
}

impl FromStr for Period {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let malformed = || Error::Domain(format!("malformed date label `{s}`, expected YYYYQn"));
        let (y, q) = s.split_once('Q').ok_or_else(malformed)?;
        if y.len() != 4 || q.len() != 1 || !y.bytes().all(|b| b.is_ascii_digit()) {
            return Err(malformed());
        }
        let year: i32 = y.parse().map_err(|_| malformed())?;
        let quarter: u8 = q.parse().map_err(|_| malformed())?;
        Period::new(year, quarter)
    }
}

impl Serialize for Period {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Period {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A named quarterly series with no gaps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Series<T> {
    name: String,
    start: Period,
    values: Vec<T>,
}

impl<T: Scalar> Series<T> {
    pub fn new(name: impl Into<String>, start: Period, values: Vec<T>) -> Result<Self> {
        let name = name.into();
        if values.is_empty() {
            return Err(Error::InsufficientData(format!("series `{name}` is empty")));
        }
        Ok(Series {
            name,
            start,
            values,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn start(&self) -> Period {
        self.start
    }

    /// Last observed period.
    pub fn end(&self) -> Period {
        self.start.offset(self.values.len() as i64 - 1)
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn period(&self, i: usize) -> Period {
        self.start.offset(i as i64)
    }

    pub fn periods(&self) -> impl Iterator<Item = Period> + '_ {
        (0..self.len()).map(|i| self.period(i))
    }

    pub fn value_at(&self, p: Period) -> Option<T> {
        let i = self.start.quarters_until(&p);
        if i < 0 {
            return None;
        }
        self.values.get(i as usize).copied()
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }
}

/// Reads quarterly series from a CSV file. An empty `value_columns` selects
/// every column except the date column.
pub fn load_csv<T: Scalar>(
    path: impl AsRef<Path>,
    date_column: &str,
    value_columns: &[&str],
) -> Result<Vec<Series<T>>> {
    let file = std::fs::File::open(path.as_ref())
        .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    read_csv(file, date_column, value_columns)
}

/// Same as [`load_csv`] over any reader. Row numbers in errors count the
/// header as row 1.
pub fn read_csv<T: Scalar, R: Read>(
    reader: R,
    date_column: &str,
    value_columns: &[&str],
) -> Result<Vec<Series<T>>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let date_idx = find(date_column).ok_or_else(|| Error::Load {
        row: 1,
        column: date_column.to_string(),
        message: "date column not found in header".into(),
    })?;
    let selected: Vec<(usize, String)> = if value_columns.is_empty() {
        headers
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != date_idx)
            .map(|(i, h)| (i, h.clone()))
            .collect()
    } else {
        value_columns
            .iter()
            .map(|&c| {
                find(c).map(|i| (i, c.to_string())).ok_or_else(|| Error::Load {
                    row: 1,
                    column: c.to_string(),
                    message: "column not found in header".into(),
                })
            })
            .collect::<Result<_>>()?
    };

    let mut start: Option<Period> = None;
    let mut prev: Option<Period> = None;
    let mut columns: Vec<Vec<T>> = vec![Vec::new(); selected.len()];
    for (i, record) in rdr.records().enumerate() {
        let row = i + 2;
        let record = record?;
        let load_err = |column: &str, message: String| Error::Load {
            row,
            column: column.to_string(),
            message,
        };
        let label = record.get(date_idx).unwrap_or("");
        let period: Period = label.parse().map_err(|e: Error| {
            let msg = match e {
                Error::Domain(m) => m,
                other => other.to_string(),
            };
            load_err(date_column, msg)
        })?;
        if let Some(p) = prev {
            match p.succ().cmp(&period) {
                Ordering::Equal => {}
                Ordering::Less => {
                    return Err(load_err(date_column, format!("gap at {}", p.succ())));
                }
                Ordering::Greater => {
                    return Err(load_err(
                        date_column,
                        format!("duplicate or out-of-order period {period}"),
                    ));
                }
            }
        } else {
            start = Some(period);
        }
        prev = Some(period);
        for ((idx, name), col) in selected.iter().zip(columns.iter_mut()) {
            let cell = record.get(*idx).unwrap_or("").trim();
            if cell.is_empty() {
                return Err(load_err(name, "missing value".into()));
            }
            let v: f64 = cell
                .parse()
                .map_err(|_| load_err(name, format!("non-numeric cell `{cell}`")))?;
            if !v.is_finite() {
                return Err(load_err(name, format!("non-finite cell `{cell}`")));
            }
            col.push(T::lit(v));
        }
    }
    let start = start.ok_or_else(|| Error::InsufficientData("CSV has no data rows".into()))?;
    selected
        .into_iter()
        .zip(columns)
        .map(|((_, name), values)| Series::new(name, start, values))
        .collect()
}

/// Writes series sharing a common span as a CSV readable by [`read_csv`].
pub fn write_csv<T: Scalar, W: Write>(
    writer: W,
    date_column: &str,
    series: &[Series<T>],
) -> Result<()> {
    let first = series
        .first()
        .ok_or_else(|| Error::InsufficientData("no series to write".into()))?;
    if series
        .iter()
        .any(|s| s.start() != first.start() || s.len() != first.len())
    {
        return Err(Error::Domain("series to write must share one span".into()));
    }
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec![date_column.to_string()];
    header.extend(series.iter().map(|s| s.name().to_string()));
    w.write_record(&header)?;
    for i in 0..first.len() {
        let mut rec = vec![first.period(i).to_string()];
        rec.extend(series.iter().map(|s| format!("{}", s.values()[i])));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Percent log-difference `100 ln(s_t / s_{t-1})`.
pub fn growth_rate<T: Scalar>(s: &Series<T>) -> Result<Series<T>> {
    if let Some((i, v)) = s.values().iter().enumerate().find(|(_, &v)| !(v > T::zero())) {
        return Err(Error::Domain(format!(
            "growth rate of `{}` needs positive levels; {} at {}",
            s.name(),
            v,
            s.period(i)
        )));
    }
    if s.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "growth rate of `{}` needs at least two observations",
            s.name()
        )));
    }
    let hundred = T::lit(100.0);
    let values = s
        .values()
        .windows(2)
        .map(|w| hundred * (w[1] / w[0]).ln())
        .collect();
    Series::new(s.name(), s.start().succ(), values)
}

/// ADF rejection level of the unit-root null.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RejectLevel {
    #[serde(rename = "none")]
    NotRejected,
    #[serde(rename = "10%")]
    TenPercent,
    #[serde(rename = "5%")]
    FivePercent,
    #[serde(rename = "1%")]
    OnePercent,
}

impl RejectLevel {
    pub fn from_tstat(t: f64) -> Self {
        let [c10, c5, c1] = ADF_CRITICAL_CONSTANT;
        if t < c1 {
            RejectLevel::OnePercent
        } else if t < c5 {
            RejectLevel::FivePercent
        } else if t < c10 {
            RejectLevel::TenPercent
        } else {
            RejectLevel::NotRejected
        }
    }

    pub fn stars(&self) -> &'static str {
        match self {
            RejectLevel::NotRejected => "",
            RejectLevel::TenPercent => "*",
            RejectLevel::FivePercent => "**",
            RejectLevel::OnePercent => "***",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct AdfOutcome<T> {
    pub tstat: T,
    /// Augmentation lag chosen by AIC.
    pub lag: usize,
    pub n_obs: usize,
    pub reject_level: RejectLevel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SummaryStats<T> {
    pub mean: T,
    pub sd: T,
    pub max: T,
    pub min: T,
    pub n_obs: usize,
    pub adf: Option<AdfOutcome<T>>,
}

/// Mean, sample standard deviation (divisor `n - 1`), extremes and count.
/// The ADF fields are left empty; see [`describe`].
pub fn summarize<T: Scalar>(s: &Series<T>) -> Result<SummaryStats<T>> {
    let n = s.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "`{}` needs at least two observations",
            s.name()
        )));
    }
    let v = s.values();
    let mean = v.iter().copied().sum::<T>() / T::from_count(n);
    let ss: T = v.iter().map(|&x| (x - mean) * (x - mean)).sum();
    let sd = (ss / T::from_count(n - 1)).sqrt();
    let max = v.iter().copied().fold(T::neg_infinity(), T::max);
    let min = v.iter().copied().fold(T::infinity(), T::min);
    // Rounding in the mean can push it just outside [min, max] for
    // constant series.
    let mean = mean.max(min).min(max);
    Ok(SummaryStats {
        mean,
        sd,
        max,
        min,
        n_obs: n,
        adf: None,
    })
}

/// [`summarize`] plus an ADF test with AIC lag selection up to `max_lag`.
pub fn describe<T: Scalar>(s: &Series<T>, max_lag: usize) -> Result<SummaryStats<T>> {
    let mut stats = summarize(s)?;
    stats.adf = Some(adf_test(s, max_lag)?);
    Ok(stats)
}

fn adf_design<T: Scalar>(y: &[T], lags: usize, first: usize) -> (Vec<Vec<T>>, Vec<T>) {
    let dy = |t: usize| y[t] - y[t - 1];
    (first..y.len())
        .map(|t| {
            let mut row = Vec::with_capacity(lags + 2);
            row.push(T::one());
            row.push(y[t - 1]);
            row.extend((1..=lags).map(|i| dy(t - i)));
            (row, dy(t))
        })
        .unzip()
}

/// Augmented Dickey-Fuller test with a constant: OLS of `Δs_t` on a
/// constant, `s_{t-1}` and `Δs_{t-1..p}`. The order `p` minimises AIC over
/// `0..=max_lag` on a common sample; the chosen order is then refit on all
/// rows it can use. The statistic is the t-ratio on `s_{t-1}`.
pub fn adf_test<T: Scalar>(s: &Series<T>, max_lag: usize) -> Result<AdfOutcome<T>> {
    let y = s.values();
    if y.len() < max_lag + 10 {
        return Err(Error::InsufficientData(format!(
            "ADF on `{}` needs at least {} observations, got {}",
            s.name(),
            max_lag + 10,
            y.len()
        )));
    }
    let degenerate = || Error::Degenerate(format!("ADF regression for `{}` is singular", s.name()));

    let mut best: Option<(T, usize)> = None;
    for p in 0..=max_lag {
        let (x, dy) = adf_design(y, p, max_lag + 1);
        let fit = linalg::ols(&x, &dy).ok_or_else(degenerate)?;
        let aic = fit.aic();
        if best.is_none_or(|(b, _)| aic < b) {
            best = Some((aic, p));
        }
    }
    let (_, lag) = best.ok_or_else(degenerate)?;
    let (x, dy) = adf_design(y, lag, lag + 1);
    let fit = linalg::ols(&x, &dy).ok_or_else(degenerate)?;
    if !(fit.rss > T::zero()) || !(fit.std_errors[1] > T::zero()) {
        return Err(degenerate());
    }
    let tstat = fit.t_stat(1);
    if !tstat.is_finite() {
        return Err(degenerate());
    }
    Ok(AdfOutcome {
        tstat,
        lag,
        n_obs: fit.n,
        reject_level: RejectLevel::from_tstat(tstat.to_f64_lossy()),
    })
}

/// One lagged column of a [`Dataset`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Column<T> {
    pub name: String,
    pub lag: usize,
    pub values: Vec<T>,
}

/// Lag-aligned design: row `t` of a regressor with lag `l` holds the source
/// value at period `t - l`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Dataset<T> {
    pub dep_name: String,
    pub dep: Vec<T>,
    pub regressors: Vec<Column<T>>,
    pub tp_covariate: Option<Column<T>>,
    pub periods: Vec<Period>,
}

impl<T: Scalar> Dataset<T> {
    /// Builds a dataset from pre-aligned columns, checking lengths.
    pub fn from_columns(
        dep_name: impl Into<String>,
        dep: Vec<T>,
        regressors: Vec<Column<T>>,
        tp_covariate: Option<Column<T>>,
        periods: Vec<Period>,
    ) -> Result<Self> {
        let n = dep.len();
        if n == 0 {
            return Err(Error::InsufficientData("dataset has no rows".into()));
        }
        let bad = regressors
            .iter()
            .chain(tp_covariate.iter())
            .find(|c| c.values.len() != n);
        if let Some(c) = bad {
            return Err(Error::Domain(format!(
                "column `{}` has {} rows, expected {n}",
                c.name,
                c.values.len()
            )));
        }
        if periods.len() != n {
            return Err(Error::Domain(format!(
                "{} periods for {n} rows",
                periods.len()
            )));
        }
        Ok(Dataset {
            dep_name: dep_name.into(),
            dep,
            regressors,
            tp_covariate,
            periods,
        })
    }

    pub fn n_obs(&self) -> usize {
        self.dep.len()
    }

    pub fn n_regressors(&self) -> usize {
        self.regressors.len()
    }

    /// Regressor values of row `t`, in column order.
    pub fn row(&self, t: usize) -> impl Iterator<Item = T> + '_ {
        self.regressors.iter().map(move |c| c.values[t])
    }

    pub fn covariate(&self, t: usize) -> Option<T> {
        self.tp_covariate.as_ref().map(|c| c.values[t])
    }

    /// Drops the first `n` rows.
    pub fn trim_front(&self, n: usize) -> Result<Self> {
        if n >= self.n_obs() {
            return Err(Error::InsufficientData(format!(
                "cannot drop {n} of {} rows",
                self.n_obs()
            )));
        }
        let cut = |c: &Column<T>| Column {
            name: c.name.clone(),
            lag: c.lag,
            values: c.values[n..].to_vec(),
        };
        Ok(Dataset {
            dep_name: self.dep_name.clone(),
            dep: self.dep[n..].to_vec(),
            regressors: self.regressors.iter().map(cut).collect(),
            tp_covariate: self.tp_covariate.as_ref().map(cut),
            periods: self.periods[n..].to_vec(),
        })
    }
}

/// Restricts to the periods where the dependent value and every lagged
/// input exist. Values are copied, never interpolated.
pub fn align<T: Scalar>(
    dep: &Series<T>,
    regressors: &[(&Series<T>, usize)],
    tp_cov: Option<(&Series<T>, usize)>,
) -> Result<Dataset<T>> {
    let inputs: Vec<(&Series<T>, usize)> = regressors.iter().copied().chain(tp_cov).collect();
    let first = inputs
        .iter()
        .map(|(s, l)| s.start().offset(*l as i64))
        .fold(dep.start(), Ord::max);
    let last = inputs
        .iter()
        .map(|(s, l)| s.end().offset(*l as i64))
        .fold(dep.end(), Ord::min);
    let n = first.quarters_until(&last) + 1;
    if n < MIN_ALIGNED_OBS as i64 {
        return Err(Error::InsufficientData(format!(
            "only {} aligned observations (minimum {MIN_ALIGNED_OBS}); first usable period {first}",
            n.max(0)
        )));
    }
    let periods: Vec<Period> = (0..n).map(|i| first.offset(i)).collect();
    let column = |s: &Series<T>, lag: usize| Column {
        name: s.name().to_string(),
        lag,
        values: periods
            .iter()
            .map(|p| s.value_at(p.offset(-(lag as i64))).expect("inside aligned span"))
            .collect(),
    };
    Dataset::from_columns(
        dep.name(),
        column(dep, 0).values,
        regressors.iter().map(|&(s, l)| column(s, l)).collect(),
        tp_cov.map(|(s, l)| column(s, l)),
        periods,
    )
}
