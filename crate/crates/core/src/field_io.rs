//! Field serialization.
//!
//! Binary layout (all integers and floats little-endian):
//!
//! ```text
//! b"PLF1"
//! u32 n, u32 N, u32 m, u32 width, u32 bc (0 periodic, 1 dirichlet)
//! f64 L, f64 tau, u64 steps
//! f64 values[(steps + 1) * m^n * width]   slice-major, then cell (row-major), then value
//! ```
//!
//! The CSV variant starts with one `#` header line carrying the same
//! metadata, then a column header and one row per slice and cell.

use std::io::{BufRead, BufReader, Read, Write};

use crate::error::{Error, Result};
use crate::grid::{Boundary, FieldData, Grid};

const MAGIC: &[u8; 4] = b"PLF1";

pub fn write_binary<W: Write>(field: &FieldData, mut w: W) -> Result<()> {
    let g = field.grid();
    w.write_all(MAGIC)?;
    for v in [
        g.dim() as u32,
        g.components() as u32,
        g.cells_per_axis() as u32,
        field.width() as u32,
        match g.bc() {
            Boundary::Periodic => 0,
            Boundary::Dirichlet => 1,
        },
    ] {
        w.write_all(&v.to_le_bytes())?;
    }
    w.write_all(&g.side().to_le_bytes())?;
    w.write_all(&g.tau().to_le_bytes())?;
    w.write_all(&(g.steps() as u64).to_le_bytes())?;
    for v in field.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_binary<R: Read>(mut r: R) -> Result<FieldData> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic, expected PLF1".into()));
    }
    let mut u32s = [0u32; 5];
    for slot in &mut u32s {
        let mut b = [0u8; 4];
        r.read_exact(&mut b)?;
        *slot = u32::from_le_bytes(b);
    }
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8)?;
    let side = f64::from_le_bytes(b8);
    r.read_exact(&mut b8)?;
    let tau = f64::from_le_bytes(b8);
    r.read_exact(&mut b8)?;
    let steps = u64::from_le_bytes(b8);
    let bc = match u32s[4] {
        0 => Boundary::Periodic,
        1 => Boundary::Dirichlet,
        other => return Err(Error::Format(format!("unknown boundary tag {other}"))),
    };
    let grid = Grid::new(
        u32s[0] as usize,
        u32s[1] as usize,
        u32s[2] as usize,
        side,
        tau,
        steps as f64 * tau,
        bc,
    )?;
    let width = u32s[3] as usize;
    let count = grid.slice_count() * grid.cell_count() * width;
    let mut raw = Vec::new();
    r.read_to_end(&mut raw)?;
    if raw.len() != 8 * count {
        return Err(Error::Format(format!(
            "payload holds {} bytes, header implies {}",
            raw.len(),
            8 * count
        )));
    }
    let values = raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    FieldData::from_values(grid, width, values)
}

pub fn write_csv<W: Write>(field: &FieldData, mut w: W) -> Result<()> {
    let g = field.grid();
    writeln!(
        w,
        "# n={} N={} m={} L={} tau={} steps={} bc={} width={}",
        g.dim(),
        g.components(),
        g.cells_per_axis(),
        g.side(),
        g.tau(),
        g.steps(),
        g.bc(),
        field.width()
    )?;
    let mut header = String::from("k,i");
    if g.dim() == 2 {
        header.push_str(",j");
    }
    for c in 0..field.width() {
        header.push_str(&format!(",v{c}"));
    }
    writeln!(w, "{header}")?;
    for k in 0..g.slice_count() {
        for c in 0..g.cell_count() {
            let idx = g.cell_multi(c);
            let mut line = format!("{k},{}", idx[0]);
            if g.dim() == 2 {
                line.push_str(&format!(",{}", idx[1]));
            }
            for v in field.at(k, c) {
                line.push_str(&format!(",{v}"));
            }
            writeln!(w, "{line}")?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(r: R) -> Result<FieldData> {
    let mut lines = BufReader::new(r).lines();
    let meta = lines
        .next()
        .ok_or_else(|| Error::Format("empty file".into()))??;
    let meta = meta
        .strip_prefix('#')
        .ok_or_else(|| Error::Format("missing `#` metadata line".into()))?;
    let get = |key: &str| -> Result<String> {
        meta.split_whitespace()
            .find_map(|kv| kv.strip_prefix(key).and_then(|rest| rest.strip_prefix('=')))
            .map(str::to_string)
            .ok_or_else(|| Error::Format(format!("metadata lacks `{key}`")))
    };
    let parse_usize = |s: String, key: &str| -> Result<usize> {
        s.parse()
            .map_err(|_| Error::Format(format!("bad `{key}` value `{s}`")))
    };
    let parse_f64 = |s: String, key: &str| -> Result<f64> {
        s.parse()
            .map_err(|_| Error::Format(format!("bad `{key}` value `{s}`")))
    };
    let n = parse_usize(get("n")?, "n")?;
    let big_n = parse_usize(get("N")?, "N")?;
    let m = parse_usize(get("m")?, "m")?;
    let side = parse_f64(get("L")?, "L")?;
    let tau = parse_f64(get("tau")?, "tau")?;
    let steps = parse_usize(get("steps")?, "steps")?;
    let bc: Boundary = get("bc")?.parse()?;
    let width = parse_usize(get("width")?, "width")?;
    let grid = Grid::new(n, big_n, m, side, tau, steps as f64 * tau, bc)?;
    lines
        .next()
        .ok_or_else(|| Error::Format("missing column header".into()))??;
    let mut data = FieldData::zeros(grid, width);
    let idx_cols = 1 + n;
    let mut rows = 0usize;
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != idx_cols + width {
            return Err(Error::Format(format!(
                "row {} has {} columns",
                lineno + 3,
                cols.len()
            )));
        }
        let bad = |s: &str| Error::Format(format!("row {}: cannot parse `{s}`", lineno + 3));
        let k: usize = cols[0].parse().map_err(|_| bad(cols[0]))?;
        let mut idx = [0usize; 2];
        for d in 0..n {
            idx[d] = cols[1 + d].parse().map_err(|_| bad(cols[1 + d]))?;
        }
        if k >= grid.slice_count() || idx.iter().any(|&i| i >= m) {
            return Err(Error::Format(format!(
                "row {} indexes outside the grid",
                lineno + 3
            )));
        }
        let cell = grid.cell_linear(idx);
        for (slot, s) in data.at_mut(k, cell).iter_mut().zip(&cols[idx_cols..]) {
            *slot = s.trim().parse().map_err(|_| bad(s))?;
        }
        rows += 1;
    }
    if rows != grid.slice_count() * grid.cell_count() {
        return Err(Error::Format(format!(
            "expected {} rows, found {rows}",
            grid.slice_count() * grid.cell_count()
        )));
    }
    FieldData::from_values(grid, width, data.values().to_vec())
}
