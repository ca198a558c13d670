//! Result tables and their CSV / markdown renderings.
//!
//! Every command produces one [`Table`] with a fixed column schema. CSV is
//! the interchange format: UTF-8, one header row, comma separators, dot
//! decimals, LF line endings, and shortest-round-trip float formatting so
//! identical runs emit identical bytes. Markdown mirrors the same values at
//! 6 significant digits for human-readable reports.

use std::fmt::Write as _;

/// One table cell.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    /// A label such as a strategy or problem name.
    Text(String),
    /// A real-valued result.
    Real(f64),
    /// An integer count (sample budgets, iterations, replications).
    Count(u64),
    /// A yes/no outcome such as solver convergence.
    Flag(bool),
}

/// A rectangular result table with a fixed, ordered column schema.
#[derive(Clone, Debug)]
pub struct Table {
    headers: Vec<String>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    /// Creates an empty table with the given column names.
    pub fn new(headers: Vec<String>) -> Self {
        assert!(!headers.is_empty(), "a table needs at least one column");
        Self {
            headers,
            rows: Vec::new(),
        }
    }

    /// Appends a row; its arity must match the header.
    pub fn push_row(&mut self, cells: Vec<Cell>) {
        assert_eq!(
            cells.len(),
            self.headers.len(),
            "row arity must match the column schema"
        );
        self.rows.push(cells);
    }

    /// The column names, in emission order.
    pub fn headers(&self) -> &[String] {
        &self.headers
    }

    /// The rows, in emission order.
    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    /// Renders the table as CSV (header row first, LF endings).
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.headers.join(","));
        out.push('\n');
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(csv_cell).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    /// Renders the table as a GitHub-style markdown table mirroring the CSV
    /// values at 6 significant digits.
    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "| {} |", self.headers.join(" | "));
        let rule: Vec<&str> = self.headers.iter().map(|_| "---").collect();
        let _ = writeln!(out, "| {} |", rule.join(" | "));
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(markdown_cell).collect();
            let _ = writeln!(out, "| {} |", line.join(" | "));
        }
        out
    }
}

fn csv_cell(cell: &Cell) -> String {
    match cell {
        Cell::Text(s) => {
            debug_assert!(
                !s.contains([',', '"', '\n']),
                "labels must not need CSV quoting"
            );
            s.clone()
        }
        // `{}` on f64 prints the shortest decimal string that parses back to
        // the same bits, so equal values always render to equal bytes.
        Cell::Real(x) => format!("{x}"),
        Cell::Count(k) => format!("{k}"),
        Cell::Flag(b) => format!("{b}"),
    }
}

fn markdown_cell(cell: &Cell) -> String {
    match cell {
        Cell::Real(x) => significant_digits(*x, 6),
        other => csv_cell(other),
    }
}

/// Formats `x` rounded to `digits` significant digits, using plain decimal
/// notation in the human-readable magnitude range and scientific notation
/// outside it.
pub fn significant_digits(x: f64, digits: u32) -> String {
    assert!(digits >= 1);
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    // Round to the requested precision by a scientific-notation round trip.
    let rounded: f64 = format!("{:.*e}", digits as usize - 1, x).parse().unwrap();
    if rounded == 0.0 {
        return "0".to_string();
    }
    let exponent = rounded.abs().log10().floor() as i32;
    if (-4..15).contains(&exponent) {
        let decimals = (digits as i32 - 1 - exponent).max(0) as usize;
        let plain = format!("{rounded:.decimals$}");
        trim_trailing_zeros(plain)
    } else {
        // `{:e}` prints the shortest mantissa, e.g. 1.4e-12.
        format!("{rounded:e}")
    }
}

fn trim_trailing_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    let trimmed = s.trim_end_matches('0').trim_end_matches('.');
    trimmed.to_string()
}
