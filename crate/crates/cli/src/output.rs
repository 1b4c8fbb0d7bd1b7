//! CSV tables, pass/fail checks and the JSON run summary.

use serde::Serialize;

/// Shortest round-trip decimal in scientific notation; parsing it back
/// gives the same bits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:e}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// Appended to the file name as `_<suffix>`; the main table has none.
    pub suffix: Option<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { suffix: None, header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn with_suffix(mut self, suffix: &str) -> Self {
        self.suffix = Some(suffix.to_string());
        self
    }

    /// Panics if the row width differs from the header; that is a bug in the
    /// experiment, not a runtime condition.
    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row width for {:?}", self.header);
        self.rows.push(row);
    }

    /// Adopt an already formatted CSV whose first line is the header.
    pub fn from_csv(text: &str) -> Self {
        let mut lines = text.lines();
        let header = lines.next().unwrap_or_default().split(',').map(str::to_string).collect();
        let rows = lines.filter(|l| !l.is_empty()).map(|l| l.split(',').map(str::to_string).collect()).collect();
        Self { suffix: None, header, rows }
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }
}

/// Build a CSV row from heterogeneous values.
#[macro_export]
macro_rules! row {
    ($($v:expr),* $(,)?) => {
        vec![$($crate::output::Cell::from($v).0),*]
    };
}

pub struct Cell(pub String);

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell(fmt_f64(x))
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell(x.to_string())
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell(x.to_string())
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// `value < threshold`
    Below,
    /// `value > threshold`
    Above,
    /// `value == threshold` exactly
    Equal,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub comparison: Comparison,
    pub passed: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, comparison: Comparison, threshold: f64) -> Self {
        let passed = match comparison {
            Comparison::Below => value < threshold,
            Comparison::Above => value > threshold,
            Comparison::Equal => value == threshold,
        };
        Self { name: name.into(), value, threshold, comparison, passed }
    }

    pub fn below(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self::new(name, value, Comparison::Below, threshold)
    }

    pub fn above(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self::new(name, value, Comparison::Above, threshold)
    }

    /// A boolean condition, recorded as `1 == 1`.
    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Self::new(name, if ok { 1.0 } else { 0.0 }, Comparison::Equal, 1.0)
    }

    pub fn line(&self) -> String {
        let op = match self.comparison {
            Comparison::Below => "<",
            Comparison::Above => ">",
            Comparison::Equal => "==",
        };
        format!(
            "{} {}: {} {op} {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            fmt_f64(self.value),
            fmt_f64(self.threshold)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Outcome {
    pub tables: Vec<Table>,
    pub checks: Vec<Check>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub experiment: String,
    pub passed: bool,
    pub seed: u64,
    pub jobs: usize,
    pub files: Vec<String>,
    pub checks: Vec<Check>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, 1e-300, -2.5e17, f64::MIN_POSITIVE, 0.0] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }

    #[test]
    fn table_csv() {
        let mut t = Table::new(&["k", "value", "ok"]);
        t.push(row![3usize, 0.25, true]);
        assert_eq!(t.to_csv(), "k,value,ok\n3,2.5e-1,true\n");
        assert_eq!(Table::from_csv(&t.to_csv()), t);
    }

    #[test]
    fn checks() {
        assert!(Check::below("a", 1.0, 2.0).passed);
        assert!(!Check::above("a", 1.0, 2.0).passed);
        assert!(!Check::below("nan", f64::NAN, 2.0).passed);
        assert!(Check::holds("b", true).passed);
        assert!(Check::below("a", 1.0, 2.0).line().starts_with("PASS a"));
        assert!(!Outcome::default().passed());
    }
}
