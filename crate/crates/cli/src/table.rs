//! In-memory CSV tables and fixed-precision number formatting.

use std::io::Write;

/// Bumped whenever a column is added, removed or renamed.
pub const SCHEMA_VERSION: u32 = 1;

pub const SIGNIFICANT_DIGITS: usize = 12;

/// `x` with twelve significant digits, trailing zeros trimmed. Exponent
/// notation is used outside `[1e-5, 1e12)`.
pub fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: Vec<String>) -> Self {
        Self {
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len(), "row width");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("utf-8 csv")
    }
}

/// Row builder that keeps names and values side by side.
#[derive(Debug, Default)]
pub struct Record {
    pub names: Vec<String>,
    pub values: Vec<String>,
}

impl Record {
    pub fn text(&mut self, name: impl Into<String>, value: impl Into<String>) -> &mut Self {
        self.names.push(name.into());
        self.values.push(value.into());
        self
    }

    pub fn float(&mut self, name: impl Into<String>, value: f64) -> &mut Self {
        self.text(name, fmt_float(value))
    }

    pub fn int(&mut self, name: impl Into<String>, value: impl ToString) -> &mut Self {
        self.text(name, value.to_string())
    }

    /// Named column left blank, for rows whose computation failed.
    pub fn blank(&mut self, name: impl Into<String>) -> &mut Self {
        self.text(name, "")
    }
}
