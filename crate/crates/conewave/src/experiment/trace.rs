//! The run trace: one CSV record per sample time.
//!
//! Layout (documented in `docs/formats.md`):
//!
//! ```text
//! # trace v1
//! # cone_power = 2
//! # support_outer = 8
//! t,e_total,e_local[a=2],e_local[a=3],w_exp,front_outside
//! 0,1.25,...
//! ```
//!
//! `#`-prefixed metadata lines carry the two run parameters the analysis
//! needs to rebuild its default fit window (`a^m - support_outer`). Floats
//! are written with Rust's shortest round-trip formatting, so re-parsing a
//! trace reproduces the original values bit for bit — the analyze command
//! recovers in-run fits exactly. No wall-clock data is ever written here.

use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {why}")]
    Malformed { line: usize, why: String },
    #[error("trace has no data rows")]
    Empty,
}

fn malformed(line: usize, why: impl Into<String>) -> TraceError {
    TraceError::Malformed {
        line,
        why: why.into(),
    }
}

/// A parsed (or to-be-written) trace.
#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    /// Cone power of the producing run, if declared.
    pub cone_power: Option<f64>,
    /// Outer edge of the initial support in the geodesic coordinate.
    pub support_outer: Option<f64>,
    /// Observation radii, one per `e_local` column.
    pub radii: Vec<f64>,
    pub times: Vec<f64>,
    pub e_total: Vec<f64>,
    /// One column per observation radius, same order as `radii`.
    pub e_local: Vec<Vec<f64>>,
    pub w_exp: Vec<f64>,
    pub front_outside: Vec<f64>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Render the documented CSV layout.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str("# trace v1\n");
        if let Some(m) = self.cone_power {
            let _ = writeln!(out, "# cone_power = {m}");
        }
        if let Some(s) = self.support_outer {
            let _ = writeln!(out, "# support_outer = {s}");
        }
        out.push_str("t,e_total");
        for a in &self.radii {
            let _ = write!(out, ",e_local[a={a}]");
        }
        out.push_str(",w_exp,front_outside\n");
        for k in 0..self.times.len() {
            let _ = write!(out, "{},{}", self.times[k], self.e_total[k]);
            for column in &self.e_local {
                let _ = write!(out, ",{}", column[k]);
            }
            let _ = writeln!(out, ",{},{}", self.w_exp[k], self.front_outside[k]);
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<(), TraceError> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self, TraceError> {
        let mut cone_power = None;
        let mut support_outer = None;
        let mut radii = Vec::new();
        let mut header_seen = false;
        let mut times = Vec::new();
        let mut e_total = Vec::new();
        let mut e_local: Vec<Vec<f64>> = Vec::new();
        let mut w_exp = Vec::new();
        let mut front_outside = Vec::new();

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                let comment = comment.trim();
                for (key, slot) in [
                    ("cone_power", &mut cone_power),
                    ("support_outer", &mut support_outer),
                ] {
                    if let Some(rest) = comment.strip_prefix(key) {
                        let rest = rest.trim();
                        if let Some(value) = rest.strip_prefix('=') {
                            *slot = Some(value.trim().parse::<f64>().map_err(|e| {
                                malformed(line_no, format!("bad {key}: {e}"))
                            })?);
                        }
                    }
                }
                continue;
            }
            if !header_seen {
                let mut columns = line.split(',');
                if columns.next() != Some("t") {
                    return Err(malformed(line_no, "header must start with `t`"));
                }
                if columns.next() != Some("e_total") {
                    return Err(malformed(line_no, "second column must be `e_total`"));
                }
                let mut tail = Vec::new();
                for col in columns {
                    if let Some(spec) = col
                        .strip_prefix("e_local[a=")
                        .and_then(|s| s.strip_suffix(']'))
                    {
                        if !tail.is_empty() {
                            return Err(malformed(
                                line_no,
                                "e_local columns must precede w_exp",
                            ));
                        }
                        radii.push(spec.parse::<f64>().map_err(|e| {
                            malformed(line_no, format!("bad observation radius: {e}"))
                        })?);
                    } else {
                        tail.push(col);
                    }
                }
                if tail != ["w_exp", "front_outside"] {
                    return Err(malformed(
                        line_no,
                        "trailing columns must be `w_exp,front_outside`",
                    ));
                }
                e_local = vec![Vec::new(); radii.len()];
                header_seen = true;
                continue;
            }
            let fields: Vec<f64> = line
                .split(',')
                .map(|f| f.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| malformed(line_no, format!("bad number: {e}")))?;
            let expected = 4 + radii.len();
            if fields.len() != expected {
                return Err(malformed(
                    line_no,
                    format!("expected {expected} fields, got {}", fields.len()),
                ));
            }
            times.push(fields[0]);
            e_total.push(fields[1]);
            for (column, &value) in e_local.iter_mut().zip(&fields[2..2 + radii.len()]) {
                column.push(value);
            }
            w_exp.push(fields[expected - 2]);
            front_outside.push(fields[expected - 1]);
        }
        if !header_seen || times.is_empty() {
            return Err(TraceError::Empty);
        }
        Ok(Self {
            cone_power,
            support_outer,
            radii,
            times,
            e_total,
            e_local,
            w_exp,
            front_outside,
        })
    }

    pub fn read(path: &Path) -> Result<Self, TraceError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Trace {
        Trace {
            cone_power: Some(1.5),
            support_outer: Some(5.0),
            radii: vec![2.0, 3.25],
            times: vec![0.0, 0.5, 1.0],
            e_total: vec![1.0, 1.0 + 1e-16, 0.9999999999999],
            e_local: vec![
                vec![0.5, 0.25, 0.125],
                vec![0.75, 0.5, 1.2345678901234567e-8],
            ],
            w_exp: vec![148.4131591025766, 90.01713130052181, 54.598150033144236],
            front_outside: vec![0.0, 1e-300, 2.5e-17],
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let t = sample();
        let text = t.to_csv();
        let back = Trace::parse(&text).unwrap();
        assert_eq!(t, back);
        // And rendering the parse reproduces the bytes.
        assert_eq!(text, back.to_csv());
    }

    #[test]
    fn header_shape_is_enforced()  {
        assert!(matches!(Trace::parse(""), Err(TraceError::Empty)));
        let bad = "t,e_total,w_exp\n0,1,2\n";
        assert!(matches!(
            Trace::parse(bad),
            Err(TraceError::Malformed { line: 1, .. })
        ));
        let bad_row = "t,e_total,w_exp,front_outside\n0,1,2\n";
        assert!(matches!(
            Trace::parse(bad_row),
            Err(TraceError::Malformed { line: 2, .. })
        ));
        let no_metadata = "t,e_total,w_exp,front_outside\n0,1,2,0\n1,0.5,1,0\n";
        let t = Trace::parse(no_metadata).unwrap();
        assert_eq!(t.cone_power, None);
        assert_eq!(t.radii, Vec::<f64>::new());
        assert_eq!(t.len(), 2);
    }
}
