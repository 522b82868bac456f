//! ESRI ASCII grid (`.asc`) reader and writer.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Num;
use crate::types::SimGrid;

/// How to turn raster values into a simulation grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemOptions {
    /// Uniform Manning coefficient for every cell.
    #[serde(default = "default_manning")]
    pub manning: f64,
    /// Elevation given to NODATA cells. Defaults to 100 m above the highest
    /// valid cell, which makes them impermeable high ground.
    #[serde(default)]
    pub nodata_elevation: Option<f64>,
}

fn default_manning() -> f64 {
    0.03
}

impl Default for DemOptions {
    fn default() -> Self {
        Self {
            manning: default_manning(),
            nodata_elevation: None,
        }
    }
}

/// A grid read from a DEM plus the cells that were NODATA.
#[derive(Debug, Clone, PartialEq)]
pub struct Dem {
    pub grid: SimGrid,
    pub nodata: Vec<bool>,
    pub nodata_value: Option<f64>,
}

pub fn read_dem(path: &Path, opts: &DemOptions) -> Result<Dem> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dem(&text, path, opts)
}

#[derive(Default)]
struct Header {
    ncols: Option<usize>,
    nrows: Option<usize>,
    xll: Option<(f64, bool)>,
    yll: Option<(f64, bool)>,
    cellsize: Option<f64>,
    nodata: Option<f64>,
}

/// Parses `.asc` text; `path` only labels errors.
pub fn parse_dem(text: &str, path: &Path, opts: &DemOptions) -> Result<Dem> {
    let err = |line: usize, msg: String| Error::format(path, line, msg);
    let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l)).peekable();
    let mut hdr = Header::default();

    while let Some(&(ln, line)) = lines.peek() {
        let mut tok = line.split_whitespace();
        let Some(key) = tok.next() else {
            lines.next();
            continue;
        };
        if !key.starts_with(|c: char| c.is_ascii_alphabetic()) {
            break;
        }
        lines.next();
        let value = tok
            .next()
            .ok_or_else(|| err(ln, format!("header key '{key}' has no value")))?;
        if tok.next().is_some() {
            return Err(err(ln, format!("header line for '{key}' has extra tokens")));
        }
        let num = || -> Result<f64> {
            value
                .parse::<f64>()
                .map_err(|_| err(ln, format!("header value '{value}' for '{key}' is not a number")))
        };
        let count = || -> Result<usize> {
            value
                .parse::<usize>()
                .map_err(|_| err(ln, format!("header value '{value}' for '{key}' is not a count")))
        };
        match key.to_ascii_lowercase().as_str() {
            "ncols" => hdr.ncols = Some(count()?),
            "nrows" => hdr.nrows = Some(count()?),
            "xllcorner" => hdr.xll = Some((num()?, false)),
            "xllcenter" => hdr.xll = Some((num()?, true)),
            "yllcorner" => hdr.yll = Some((num()?, false)),
            "yllcenter" => hdr.yll = Some((num()?, true)),
            "cellsize" => hdr.cellsize = Some(num()?),
            "nodata_value" => hdr.nodata = Some(num()?),
            other => return Err(err(ln, format!("unknown header key '{other}'"))),
        }
    }
    let header_end = lines.peek().map(|&(ln, _)| ln).unwrap_or(text.lines().count() + 1);
    let missing = |k: &str| err(header_end, format!("header is missing '{k}'"));
    let ncols = hdr.ncols.ok_or_else(|| missing("ncols"))?;
    let nrows = hdr.nrows.ok_or_else(|| missing("nrows"))?;
    let (xll, xc) = hdr.xll.ok_or_else(|| missing("xllcorner"))?;
    let (yll, yc) = hdr.yll.ok_or_else(|| missing("yllcorner"))?;
    let cs = hdr.cellsize.ok_or_else(|| missing("cellsize"))?;
    if !(cs > 0.0 && cs.is_finite()) {
        return Err(err(header_end, format!("cellsize {cs} must be positive")));
    }
    let origin = (
        if xc { xll - 0.5 * cs } else { xll },
        if yc { yll - 0.5 * cs } else { yll },
    );

    let mut bed = vec![0.0; ncols * nrows];
    let mut nodata = vec![false; ncols * nrows];
    let mut row = 0;
    let mut last_line = header_end;
    for (ln, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        last_line = ln;
        if row == nrows {
            return Err(err(ln, format!("more than nrows = {nrows} data rows")));
        }
        // file rows run north to south
        let j = nrows - 1 - row;
        let mut n = 0;
        for tok in line.split_whitespace() {
            if n == ncols {
                return Err(err(ln, format!("row {} has more than ncols = {ncols} values", row + 1)));
            }
            let v: f64 = tok
                .parse()
                .map_err(|_| err(ln, format!("unparsable value '{tok}'")))?;
            let c = n + j * ncols;
            if hdr.nodata == Some(v) {
                nodata[c] = true;
            } else if !v.is_finite() {
                return Err(err(ln, format!("non-finite value '{tok}'")));
            } else {
                bed[c] = v;
            }
            n += 1;
        }
        if n != ncols {
            return Err(err(ln, format!("row {} has {n} values, expected ncols = {ncols}", row + 1)));
        }
        row += 1;
    }
    if row != nrows {
        return Err(err(last_line, format!("found {row} data rows, expected nrows = {nrows}")));
    }

    let raised = match opts.nodata_elevation {
        Some(z) => z,
        None => {
            let top = bed
                .iter()
                .zip(&nodata)
                .filter(|(_, &nd)| !nd)
                .map(|(&z, _)| z)
                .fold(f64::NEG_INFINITY, f64::max);
            if top.is_finite() {
                top + 100.0
            } else {
                100.0
            }
        }
    };
    for (z, &nd) in bed.iter_mut().zip(&nodata) {
        if nd {
            *z = raised;
        }
    }
    let grid = SimGrid::new(ncols, nrows, cs, cs, origin, bed, vec![opts.manning; ncols * nrows])?;
    Ok(Dem {
        grid,
        nodata,
        nodata_value: hdr.nodata,
    })
}

/// Formats `grid`'s bed as `.asc`. Cells flagged in `nodata` are written as
/// `nodata_value`. Floats use shortest round-trip formatting, so reading
/// the text back reproduces every finite value bit for bit.
pub fn format_dem(grid: &SimGrid, nodata: Option<&[bool]>, nodata_value: f64) -> Result<String> {
    if grid.dx != grid.dy {
        return Err(Error::Domain(format!(
            "ESRI ASCII grids need square cells, got {} x {}",
            grid.dx, grid.dy
        )));
    }
    let mut out = String::new();
    let _ = writeln!(out, "ncols {}", grid.nx);
    let _ = writeln!(out, "nrows {}", grid.ny);
    let _ = writeln!(out, "xllcorner {}", Num(grid.origin_x));
    let _ = writeln!(out, "yllcorner {}", Num(grid.origin_y));
    let _ = writeln!(out, "cellsize {}", Num(grid.dx));
    if nodata.is_some() {
        let _ = writeln!(out, "NODATA_value {}", Num(nodata_value));
    }
    for j in (0..grid.ny).rev() {
        for i in 0..grid.nx {
            let c = grid.idx(i, j);
            if i > 0 {
                out.push(' ');
            }
            let flagged = nodata.is_some_and(|m| m[c]);
            let _ = write!(out, "{}", Num(if flagged { nodata_value } else { grid.bed[c] }));
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn write_dem(path: &Path, grid: &SimGrid, nodata: Option<&[bool]>, nodata_value: f64) -> Result<()> {
    let text = format_dem(grid, nodata, nodata_value)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
