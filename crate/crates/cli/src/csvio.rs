//! Comma-separated data files with a mandatory header row. The first column
//! is a 1-based index and is not interpreted.
//!
//! - univariate: `index,value`
//! - vectors: `index,x1,...,xk`
//! - regression: `index,y,x1,...,xk`

use std::fmt::Write as _;
use std::path::Path;

use regime_split::generators::Dataset;
use regime_split::regression::RegressionData;
use regime_split::{Sample, VectorSample};

use crate::error::CliError;

pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

pub fn parse(text: &str, origin: &str) -> Result<Table, CliError> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, head) = lines
        .next()
        .ok_or_else(|| CliError::Usage(format!("{origin}: empty file")))?;
    let header: Vec<String> = head.split(',').map(|h| h.trim().to_string()).collect();
    if header.len() < 2 {
        return Err(CliError::Usage(format!(
            "{origin}: header needs an index and a data column"
        )));
    }
    if header.iter().any(|h| h.parse::<f64>().is_ok()) {
        return Err(CliError::Usage(format!(
            "{origin}: first row must be a header"
        )));
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != header.len() {
            return Err(CliError::Usage(format!(
                "{origin}:{}: expected {} fields, found {}",
                i + 1,
                header.len(),
                fields.len()
            )));
        }
        let values = fields[1..]
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| CliError::Usage(format!("{origin}:{}: non-numeric field", i + 1)))?;
        rows.push(values);
    }
    Ok(Table { header, rows })
}

pub fn read(path: &Path) -> Result<Table, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse(&text, &path.display().to_string())
}

impl Table {
    fn columns(&self) -> usize {
        self.header.len() - 1
    }

    fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    pub fn univariate(&self) -> Result<Sample, CliError> {
        if self.columns() != 1 {
            return Err(CliError::Usage(format!(
                "expected one data column (index,value), found {}",
                self.columns()
            )));
        }
        Ok(Sample::new(self.column(0))?)
    }

    pub fn vectors(&self) -> Result<VectorSample, CliError> {
        Ok(VectorSample::new(self.rows.clone())?)
    }

    pub fn regression(&self) -> Result<RegressionData, CliError> {
        if self.columns() < 2 {
            return Err(CliError::Usage(
                "regression data needs index,y,x1..xk columns".into(),
            ));
        }
        let y = self.column(0);
        let x = self.rows.iter().map(|r| r[1..].to_vec()).collect();
        Ok(RegressionData::new(x, y)?)
    }
}

pub fn format_dataset(data: &Dataset) -> String {
    let mut out = String::new();
    let xs = |k: usize| (1..=k).map(|j| format!(",x{j}")).collect::<String>();
    let row = |out: &mut String, i: usize, values: &mut dyn Iterator<Item = f64>| {
        let _ = write!(out, "{}", i + 1);
        for v in values {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    };
    match data {
        Dataset::Univariate(s) => {
            out.push_str("index,value\n");
            for (i, v) in s.values().iter().enumerate() {
                row(&mut out, i, &mut std::iter::once(*v));
            }
        }
        Dataset::Vector(v) => {
            let _ = writeln!(out, "index{}", xs(v.dim()));
            for (i, r) in v.rows().enumerate() {
                row(&mut out, i, &mut r.iter().copied());
            }
        }
        Dataset::Regression(d) => {
            let _ = writeln!(out, "index,y{}", xs(d.k()));
            for i in 0..d.n() {
                row(
                    &mut out,
                    i,
                    &mut std::iter::once(d.y()[i]).chain(d.row(i).iter().copied()),
                );
            }
        }
    }
    out
}

pub fn format_labels(labels: &[u32]) -> String {
    let mut out = String::from("index,class,label\n");
    for (i, &c) in labels.iter().enumerate() {
        let name = if c == 0 { "ordinary" } else { "abnormal" };
        let _ = writeln!(out, "{},{c},{name}", i + 1);
    }
    out
}
