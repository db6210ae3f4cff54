//! Plain-text snapshot files.
//!
//! ```text
//! # hydroalpha field Nx=<nx> Nz=<nz> Lx=<lx>
//! # <optional further comment lines>
//! <Nz rows of Nx whitespace-separated reals; row j is z = z_nodes[j]>
//! ```

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use ndarray::Array2;

use super::{Field, Grid};
use crate::error::{Error, Result};

const MAGIC: &str = "# hydroalpha field";

/// Renders `field` as snapshot text. `extra_header` lines are emitted as
/// comments after the mandatory first line.
pub fn render(field: &Field, extra_header: &[String]) -> String {
    let g = field.grid();
    let values = field.to_values();
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC} Nx={} Nz={} Lx={}", g.nx(), g.nz(), g.lx());
    for line in extra_header {
        let _ = writeln!(out, "# {line}");
    }
    for row in values.rows() {
        let mut first = true;
        for v in row {
            if !first {
                out.push(' ');
            }
            first = false;
            let _ = write!(out, "{v:.17e}");
        }
        out.push('\n');
    }
    out
}

pub fn write(path: &Path, field: &Field, extra_header: &[String]) -> Result<()> {
    std::fs::write(path, render(field, extra_header))?;
    Ok(())
}

/// Grid dimensions declared by a snapshot header.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Header {
    pub nx: usize,
    pub nz: usize,
    pub lx: f64,
}

fn parse_header(line: &str) -> Result<Header> {
    let rest = line
        .strip_prefix(MAGIC)
        .ok_or_else(|| Error::Format(format!("first line must start with '{MAGIC}'")))?;
    let mut nx = None;
    let mut nz = None;
    let mut lx = None;
    for token in rest.split_whitespace() {
        let (key, value) = token
            .split_once('=')
            .ok_or_else(|| Error::Format(format!("bad header token '{token}'")))?;
        let bad = |_| Error::Format(format!("bad value in '{token}'"));
        match key {
            "Nx" => nx = Some(value.parse::<usize>().map_err(|e| bad(e.to_string()))?),
            "Nz" => nz = Some(value.parse::<usize>().map_err(|e| bad(e.to_string()))?),
            "Lx" => lx = Some(value.parse::<f64>().map_err(|e| bad(e.to_string()))?),
            _ => return Err(Error::Format(format!("unknown header key '{key}'"))),
        }
    }
    match (nx, nz, lx) {
        (Some(nx), Some(nz), Some(lx)) => Ok(Header { nx, nz, lx }),
        _ => Err(Error::Format("header must define Nx, Nz and Lx".into())),
    }
}

/// Parses snapshot text into its header and `(Nz, Nx)` value matrix.
pub fn parse(text: &str) -> Result<(Header, Array2<f64>)> {
    let mut lines = text.lines();
    let header = parse_header(lines.next().unwrap_or_default().trim_end())?;
    let mut values = Vec::with_capacity(header.nx * header.nz);
    let mut rows = 0;
    for (n, line) in lines.enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let before = values.len();
        for tok in line.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| Error::Format(format!("line {}: bad number '{tok}'", n + 2)))?;
            values.push(v);
        }
        if values.len() - before != header.nx {
            return Err(Error::Format(format!(
                "line {}: expected {} columns, found {}",
                n + 2,
                header.nx,
                values.len() - before
            )));
        }
        rows += 1;
    }
    if rows != header.nz {
        return Err(Error::Format(format!(
            "expected {} rows, found {rows}",
            header.nz
        )));
    }
    let values = Array2::from_shape_vec((header.nz, header.nx), values)
        .map_err(|e| Error::Format(e.to_string()))?;
    Ok((header, values))
}

/// Reads a snapshot and builds a grid for it.
pub fn read(path: &Path) -> Result<Field> {
    let text = std::fs::read_to_string(path)?;
    let (h, values) = parse(&text)?;
    let grid = Arc::new(Grid::new(h.nx, h.nz, h.lx)?);
    Field::from_values(&grid, &values)
}

/// Reads a snapshot onto an existing grid, checking the dimensions.
pub fn read_on(path: &Path, grid: &Arc<Grid>) -> Result<Field> {
    let text = std::fs::read_to_string(path)?;
    let (h, values) = parse(&text)?;
    if h.nx != grid.nx() || h.nz != grid.nz() || h.lx.to_bits() != grid.lx().to_bits() {
        return Err(Error::Format(format!(
            "snapshot grid Nx={} Nz={} Lx={} does not match Nx={} Nz={} Lx={}",
            h.nx,
            h.nz,
            h.lx,
            grid.nx(),
            grid.nz(),
            grid.lx()
        )));
    }
    Field::from_values(grid, &values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_parse_round_trip() {
        let g = Arc::new(Grid::with_default_period(8, 9).unwrap());
        let f = Field::from_fn(&g, |x, z| x.sin() * z * (1.0 - z));
        let text = render(&f, &["version=test".into()]);
        assert!(text.starts_with("# hydroalpha field Nx=8 Nz=9 Lx=6.283185307179586\n"));
        let (h, v) = parse(&text).unwrap();
        assert_eq!(h.nx, 8);
        assert_eq!(h.nz, 9);
        assert_eq!(v, f.to_values());
    }

    #[test]
    fn rejects_malformed() {
        assert!(parse("hello\n").is_err());
        assert!(parse("# hydroalpha field Nx=8 Nz=1 Lx=1\n1 2 3\n").is_err());
        assert!(parse("# hydroalpha field Nx=2 Nz=2 Lx=1\n1 2\n").is_err());
        assert!(parse("# hydroalpha field Nx=2 Lx=1\n").is_err());
    }
}
