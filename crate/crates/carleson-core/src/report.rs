//! Machine-readable suite reports: one fixed CSV schema shared by the
//! inequality suites and the command-line front end.

use crate::{CoreError, Result};

/// Outcome of one check row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowStatus {
    Pass,
    Fail,
    /// Measured quantity with no pass/fail semantics.
    Report,
}

impl RowStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            RowStatus::Pass => "pass",
            RowStatus::Fail => "fail",
            RowStatus::Report => "report",
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "pass" => Ok(RowStatus::Pass),
            "fail" => Ok(RowStatus::Fail),
            "report" => Ok(RowStatus::Report),
            other => Err(CoreError::Parse {
                pos: 0,
                msg: format!("unknown status `{other}`"),
            }),
        }
    }
}

/// One report row; optional numeric fields render as empty columns.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub suite: String,
    pub check: String,
    pub n: usize,
    pub p: Option<f64>,
    pub family: String,
    pub param: Option<f64>,
    pub constant_name: String,
    pub constant: Option<f64>,
    pub value: Option<f64>,
    pub ratio: Option<f64>,
    pub fit_slope: Option<f64>,
    pub fit_resid: Option<f64>,
    pub status: RowStatus,
}

impl ReportRow {
    pub fn new(suite: &str, check: &str, n: usize) -> Self {
        ReportRow {
            suite: suite.into(),
            check: check.into(),
            n,
            p: None,
            family: String::new(),
            param: None,
            constant_name: String::new(),
            constant: None,
            value: None,
            ratio: None,
            fit_slope: None,
            fit_resid: None,
            status: RowStatus::Report,
        }
    }

    pub const HEADER: &'static str =
        "suite,check,N,p,family,param,constant_name,constant,value,ratio,fit_slope,fit_resid,status";

    pub fn to_csv_line(&self) -> String {
        fn opt(v: Option<f64>) -> String {
            v.map(|x| x.to_string()).unwrap_or_default()
        }
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.suite,
            self.check,
            self.n,
            opt(self.p),
            self.family,
            opt(self.param),
            self.constant_name,
            opt(self.constant),
            opt(self.value),
            opt(self.ratio),
            opt(self.fit_slope),
            opt(self.fit_resid),
            self.status.as_str()
        )
    }

    pub fn from_csv_line(line: &str) -> Result<ReportRow> {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 13 {
            return Err(CoreError::Parse {
                pos: 0,
                msg: format!("report row needs 13 fields, got {}", fields.len()),
            });
        }
        fn opt(s: &str) -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|e| CoreError::Parse {
                    pos: 0,
                    msg: format!("bad number `{s}`: {e}"),
                })
            }
        }
        Ok(ReportRow {
            suite: fields[0].into(),
            check: fields[1].into(),
            n: fields[2].parse().map_err(|e| CoreError::Parse {
                pos: 0,
                msg: format!("bad N: {e}"),
            })?,
            p: opt(fields[3])?,
            family: fields[4].into(),
            param: opt(fields[5])?,
            constant_name: fields[6].into(),
            constant: opt(fields[7])?,
            value: opt(fields[8])?,
            ratio: opt(fields[9])?,
            fit_slope: opt(fields[10])?,
            fit_resid: opt(fields[11])?,
            status: RowStatus::parse(fields[12])?,
        })
    }
}

/// Render a whole report with its header.
pub fn rows_to_csv(rows: &[ReportRow]) -> String {
    let mut out = String::from(ReportRow::HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.to_csv_line());
        out.push('\n');
    }
    out
}

/// Parse a report produced by [`rows_to_csv`].
pub fn rows_from_csv(text: &str) -> Result<Vec<ReportRow>> {
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (lineno == 0 && line.starts_with("suite,")) {
            continue;
        }
        rows.push(ReportRow::from_csv_line(line).map_err(|e| match e {
            CoreError::Parse { msg, .. } => CoreError::Parse {
                pos: lineno + 1,
                msg,
            },
            other => other,
        })?);
    }
    Ok(rows)
}
