//! Row-oriented CSV and JSONL reading and writing.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use clap::ValueEnum;
use serde_json::{Map, Value};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Jsonl,
}

/// Which coordinates a row holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Space {
    Xyz,
    Lgj,
}

impl Space {
    pub fn names(self) -> [&'static str; 3] {
        match self {
            Space::Xyz => ["X", "Y", "Z"],
            Space::Lgj => ["L", "g", "j"],
        }
    }
}

pub fn open_input(path: &Path) -> Result<Box<dyn BufRead>, CliError> {
    if path == Path::new("-") {
        return Ok(Box::new(BufReader::new(io::stdin())));
    }
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    Ok(Box::new(BufReader::new(file)))
}

pub fn open_output(path: &Path) -> Result<Box<dyn Write>, CliError> {
    if path == Path::new("-") {
        return Ok(Box::new(BufWriter::new(io::stdout())));
    }
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    Ok(Box::new(BufWriter::new(file)))
}

/// Reads rows of three reals. A CSV file may start with a header line.
pub fn read_rows(
    input: impl BufRead,
    format: Format,
    space: Space,
) -> Result<Vec<[f64; 3]>, CliError> {
    let mut rows = Vec::new();
    let mut seen_data_or_header = false;
    for (idx, line) in input.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| CliError::parse(line_no, e.to_string()))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let first = !seen_data_or_header;
        seen_data_or_header = true;
        match format {
            Format::Csv => {
                if let Some(row) = parse_csv_line(trimmed, line_no, first)? {
                    rows.push(row);
                }
            }
            Format::Jsonl => rows.push(parse_json_line(trimmed, line_no, space)?),
        }
    }
    Ok(rows)
}

fn split_fields(line: &str) -> Vec<&str> {
    if line.contains(',') {
        line.split(',').map(str::trim).collect()
    } else {
        line.split_whitespace().collect()
    }
}

/// `None` for a header line.
fn parse_csv_line(line: &str, line_no: usize, first: bool) -> Result<Option<[f64; 3]>, CliError> {
    let fields = split_fields(line);
    let parsed: Vec<Option<f64>> = fields.iter().map(|f| f.parse().ok()).collect();
    if first && parsed.iter().all(Option::is_none) {
        return Ok(None);
    }
    if fields.len() != 3 {
        return Err(CliError::parse(
            line_no,
            format!("expected 3 fields, found {}", fields.len()),
        ));
    }
    let mut row = [0.0; 3];
    for (k, (field, value)) in fields.iter().zip(parsed).enumerate() {
        row[k] =
            value.ok_or_else(|| CliError::parse(line_no, format!("not a number: {field:?}")))?;
    }
    Ok(Some(row))
}

fn parse_json_line(line: &str, line_no: usize, space: Space) -> Result<[f64; 3], CliError> {
    let value: Value =
        serde_json::from_str(line).map_err(|e| CliError::parse(line_no, e.to_string()))?;
    let fields: Vec<Option<&Value>> = match &value {
        Value::Array(items) if items.len() == 3 => items.iter().map(Some).collect(),
        Value::Object(map) => space.names().iter().map(|k| map.get(*k)).collect(),
        _ => {
            return Err(CliError::parse(
                line_no,
                "expected an object or a 3-element array",
            ))
        }
    };
    let mut row = [0.0; 3];
    for (k, field) in fields.into_iter().enumerate() {
        row[k] = field.and_then(Value::as_f64).ok_or_else(|| {
            CliError::parse(
                line_no,
                format!("missing or non-numeric {}", space.names()[k]),
            )
        })?;
    }
    Ok(row)
}

/// Writes rows with a header. `status` adds a per-row status column. No
/// rows means no output at all.
pub fn write_rows(
    mut out: impl Write,
    format: Format,
    space: Space,
    rows: &[[f64; 3]],
    status: Option<&[&str]>,
) -> io::Result<()> {
    let names = space.names();
    match format {
        Format::Csv if rows.is_empty() => {}
        Format::Csv => {
            write!(out, "{},{},{}", names[0], names[1], names[2])?;
            if status.is_some() {
                write!(out, ",status")?;
            }
            writeln!(out)?;
            for (i, row) in rows.iter().enumerate() {
                write!(out, "{},{},{}", Num(row[0]), Num(row[1]), Num(row[2]))?;
                if let Some(s) = status {
                    write!(out, ",{}", s[i])?;
                }
                writeln!(out)?;
            }
        }
        Format::Jsonl => {
            for (i, row) in rows.iter().enumerate() {
                let mut obj = Map::new();
                for (name, v) in names.iter().zip(row) {
                    obj.insert(name.to_string(), json_number(*v));
                }
                if let Some(s) = status {
                    obj.insert("status".into(), Value::from(s[i]));
                }
                writeln!(out, "{}", Value::Object(obj))?;
            }
        }
    }
    out.flush()
}

/// Shortest decimal that parses back to the same value, in exponent form
/// outside `[1e-5, 1e16)`.
pub struct Num(pub f64);

impl std::fmt::Display for Num {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let a = self.0.abs();
        if a == 0.0 || !a.is_finite() || (1e-5..1e16).contains(&a) {
            write!(f, "{}", self.0)
        } else {
            write!(f, "{:e}", self.0)
        }
    }
}

/// NaN and infinities have no JSON form and become `null`.
pub fn json_number(v: f64) -> Value {
    serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn csv(text: &str) -> Result<Vec<[f64; 3]>, CliError> {
        read_rows(text.as_bytes(), Format::Csv, Space::Xyz)
    }

    #[test]
    fn csv_with_and_without_header() {
        assert_eq!(csv("X,Y,Z\n1,2,3\n").unwrap(), vec![[1.0, 2.0, 3.0]]);
        assert_eq!(csv("1, 2, 3\n\n4,5,6").unwrap().len(), 2);
        assert_eq!(csv("1 2\t3\n").unwrap(), vec![[1.0, 2.0, 3.0]]);
        assert!(csv("").unwrap().is_empty());
        assert!(csv("X,Y,Z\n").unwrap().is_empty());
    }

    #[test]
    fn csv_errors_carry_line_numbers() {
        match csv("X,Y,Z\n1,2,3\n1,2\n") {
            Err(CliError::Parse { line: 3, .. }) => {}
            other => panic!("{other:?}"),
        }
        match csv("1,2,3\nX,Y,Z\n") {
            Err(CliError::Parse { line: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
        assert!(matches!(csv("1,2,x"), Err(CliError::Parse { line: 1, .. })));
    }

    #[test]
    fn jsonl_objects_and_arrays() {
        let text = "{\"L\": 1, \"g\": 2, \"j\": 3}\n[4, 5, 6]\n";
        let rows = read_rows(text.as_bytes(), Format::Jsonl, Space::Lgj).unwrap();
        assert_eq!(rows, vec![[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]);
        let bad = read_rows("{\"X\": 1}\n".as_bytes(), Format::Jsonl, Space::Xyz);
        assert!(matches!(bad, Err(CliError::Parse { line: 1, .. })));
    }

    #[test]
    fn csv_output_round_trips_exactly() {
        let rows = vec![
            [0.1, 1.0 / 3.0, 7.577_605_915_085_909],
            [1e-300, -2.5e17, 42.0],
        ];
        let mut buf = Vec::new();
        write_rows(&mut buf, Format::Csv, Space::Lgj, &rows, None).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("L,g,j\n"));
        assert_eq!(
            read_rows(text.as_bytes(), Format::Csv, Space::Lgj).unwrap(),
            rows
        );
    }

    #[test]
    fn number_format() {
        let cases = [
            (12.0, "12"),
            (0.5, "0.5"),
            (-7.1e-15, "-7.1e-15"),
            (2.5e17, "2.5e17"),
            (f64::NAN, "NaN"),
        ];
        for (v, text) in cases {
            assert_eq!(Num(v).to_string(), text);
        }
    }

    #[test]
    fn status_column() {
        let mut buf = Vec::new();
        let rows = [[1.0, 2.0, 3.0], [f64::NAN; 3]];
        write_rows(
            &mut buf,
            Format::Csv,
            Space::Xyz,
            &rows,
            Some(&["ok", "degenerate_input"]),
        )
        .unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "X,Y,Z,status\n1,2,3,ok\nNaN,NaN,NaN,degenerate_input\n"
        );
        let mut buf = Vec::new();
        write_rows(
            &mut buf,
            Format::Jsonl,
            Space::Xyz,
            &rows[1..],
            Some(&["x"]),
        )
        .unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "{\"X\":null,\"Y\":null,\"Z\":null,\"status\":\"x\"}\n"
        );
    }
}
