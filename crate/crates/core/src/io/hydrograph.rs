//! Hydrograph CSV: a `t_s,q_m3s` header, then one sample per line.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::num::Num;

/// Reads `(t, Q)` samples. Blank lines are skipped; anything else that does
/// not parse is an error naming its line.
pub fn read_hydrograph_csv(path: &Path) -> Result<Vec<(f64, f64)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_hydrograph_csv(&text, path)
}

pub fn parse_hydrograph_csv(text: &str, path: &Path) -> Result<Vec<(f64, f64)>> {
    let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l.trim()));
    let header = lines.by_ref().find(|(_, l)| !l.is_empty());
    match header {
        Some((_, l)) if l.split(',').map(str::trim).eq(["t_s", "q_m3s"]) => {}
        Some((ln, l)) => return Err(Error::format(path, ln, format!("expected header 't_s,q_m3s', found '{l}'"))),
        None => return Err(Error::format(path, 1, "empty hydrograph file")),
    }
    let mut out = Vec::new();
    for (ln, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 2 {
            return Err(Error::format(path, ln, format!("expected 2 fields, found {}", fields.len())));
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::format(path, ln, format!("'{s}' is not a finite number")))
        };
        let (t, q) = (num(fields[0])?, num(fields[1])?);
        if q < 0.0 {
            return Err(Error::format(path, ln, format!("negative discharge {q}")));
        }
        if let Some(&(prev, _)) = out.last() {
            if t <= prev {
                return Err(Error::format(path, ln, format!("time {t} does not increase past {prev}")));
            }
        }
        out.push((t, q));
    }
    if out.len() < 2 {
        return Err(Error::format(path, text.lines().count().max(1), "need at least 2 samples"));
    }
    Ok(out)
}

pub fn format_hydrograph_csv(samples: &[(f64, f64)]) -> String {
    let mut out = String::from("t_s,q_m3s\n");
    for (t, q) in samples {
        let _ = writeln!(out, "{},{}", Num(*t), Num(*q));
    }
    out
}
