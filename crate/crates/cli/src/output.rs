//! Rendering of result rows as aligned text, CSV or JSON lines.

use std::io::Write;

use serde_json::{Map, Number, Value};

use crate::config::Format;
use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Text(String),
    Real(f64),
    Int(i64),
    Bool(bool),
    Empty,
}

impl Cell {
    pub fn opt_real(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::Real)
    }

    pub fn opt_int(x: Option<usize>) -> Self {
        x.map_or(Cell::Empty, |v| Cell::Int(v as i64))
    }

    fn text(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Real(x) => significant(*x, 7),
            Cell::Int(i) => i.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => "-".into(),
        }
    }

    fn csv(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Real(x) => full_precision(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Real(x) => Number::from_f64(*x).map_or(Value::Null, Value::Number),
            Cell::Int(i) => Value::from(*i),
            Cell::Bool(b) => Value::Bool(*b),
            Cell::Empty => Value::Null,
        }
    }
}

/// 17 significant digits: enough to read the same `f64` back.
pub fn full_precision(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

/// `x` rounded to `digits` significant digits, fixed notation.
pub fn significant(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x:.prec$}", prec = digits.saturating_sub(1));
    }
    // round in scientific form first so a carry (9.9999996 -> 10.00000)
    // moves the decimal point
    let rounded: f64 = format!("{x:.prec$e}", prec = digits.saturating_sub(1))
        .parse()
        .unwrap_or(x);
    let magnitude = rounded.abs().log10().floor() as i64;
    let decimals = (digits as i64 - 1 - magnitude).max(0) as usize;
    format!("{rounded:.decimals$}")
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    /// Extra lines: printed under the text table, sent to stderr otherwise.
    pub notes: Vec<String>,
}

impl Report {
    pub fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            ..Self::default()
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, format: Format, out: &mut dyn Write) -> Result<(), CliError> {
        match format {
            Format::Text => self.render_text(out),
            Format::Csv => self.render_csv(out),
            Format::Jsonl => self.render_jsonl(out),
        }
    }

    fn render_text(&self, out: &mut dyn Write) -> Result<(), CliError> {
        let cells: Vec<Vec<String>> = self.rows.iter().map(|r| r.iter().map(Cell::text).collect()).collect();
        let widths: Vec<usize> = self
            .columns
            .iter()
            .enumerate()
            .map(|(i, c)| cells.iter().map(|r| r[i].len()).fold(c.len(), usize::max))
            .collect();
        let line = |fields: Vec<&str>| {
            let padded: Vec<String> = fields.iter().zip(&widths).map(|(f, w)| format!("{f:>w$}")).collect();
            padded.join("  ").trim_end().to_string()
        };
        writeln!(out, "{}", line(self.columns.clone()))?;
        for row in &cells {
            writeln!(out, "{}", line(row.iter().map(String::as_str).collect()))?;
        }
        for note in &self.notes {
            writeln!(out, "{note}")?;
        }
        Ok(())
    }

    fn render_csv(&self, out: &mut dyn Write) -> Result<(), CliError> {
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        writer.write_record(&self.columns)?;
        for row in &self.rows {
            writer.write_record(row.iter().map(Cell::csv))?;
        }
        writer.flush()?;
        self.notes_to_stderr();
        Ok(())
    }

    fn render_jsonl(&self, out: &mut dyn Write) -> Result<(), CliError> {
        for row in &self.rows {
            let object: Map<String, Value> = self
                .columns
                .iter()
                .zip(row)
                .map(|(c, v)| (c.to_string(), v.json()))
                .collect();
            writeln!(out, "{}", Value::Object(object))?;
        }
        self.notes_to_stderr();
        Ok(())
    }

    fn notes_to_stderr(&self) {
        for note in &self.notes {
            eprintln!("{note}");
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seven_significant_digits() {
        assert_eq!(significant(-1.4595871234, 7), "-1.459587");
        assert_eq!(significant(4.0, 7), "4.000000");
        assert_eq!(significant(20.029864, 7), "20.02986");
        assert_eq!(significant(0.00163468, 7), "0.001634680");
        assert_eq!(significant(9.99999996, 7), "10.00000");
        assert_eq!(significant(0.0, 7), "0.000000");
    }

    #[test]
    fn full_precision_round_trips() {
        for x in [0.1, -1.4595871284, 1e-300, 8.344349434, f64::MAX] {
            assert_eq!(full_precision(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn csv_layout() {
        let mut r = Report::new(&["a", "b", "c"]);
        r.push(vec![Cell::Text("x, y".into()), Cell::Real(0.5), Cell::Empty]);
        let mut buf = Vec::new();
        r.render(Format::Csv, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "a,b,c\n\"x, y\",5.0000000000000000e-1,\n"
        );
    }

    #[test]
    fn jsonl_layout() {
        let mut r = Report::new(&["n", "E", "ok"]);
        r.push(vec![Cell::Int(1), Cell::Real(-0.5), Cell::Bool(true)]);
        let mut buf = Vec::new();
        r.render(Format::Jsonl, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "{\"n\":1,\"E\":-0.5,\"ok\":true}\n");
    }
}
