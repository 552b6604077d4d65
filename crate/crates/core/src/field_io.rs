//! Field serialization: a flat little-endian binary layout and plot-ready CSV.
//!
//! Binary layout, all integers `u64` and all reals `f64`, little-endian:
//!
//! ```text
//! magic "HLFIELD1" | n | dx | dt | lower[n] | t_start | shape[n] | n_time | values
//! ```
//!
//! Values are time-major: slice 0 first, each slice row-major with the last
//! spatial axis fastest.

use std::io::{self, Read, Write};

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField, SpatialGrid};

const MAGIC: &[u8; 8] = b"HLFIELD1";

fn io_err(e: io::Error) -> Error {
    Error::numeric(format!("field i/o failed: {e}"))
}

pub fn write_binary<W: Write>(u: &ScalarField, mut w: W) -> Result<()> {
    let grid = u.grid();
    let space = grid.space();
    let mut buf = Vec::with_capacity(64 + 8 * u.values().len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(space.dim() as u64).to_le_bytes());
    buf.extend_from_slice(&space.dx().to_le_bytes());
    buf.extend_from_slice(&grid.dt().to_le_bytes());
    for l in space.lower() {
        buf.extend_from_slice(&l.to_le_bytes());
    }
    buf.extend_from_slice(&grid.t_start().to_le_bytes());
    for &m in space.shape() {
        buf.extend_from_slice(&(m as u64).to_le_bytes());
    }
    buf.extend_from_slice(&(grid.n_time() as u64).to_le_bytes());
    for v in u.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf).map_err(io_err)
}

struct Cursor<'a>(&'a [u8]);

impl Cursor<'_> {
    fn take8(&mut self) -> Result<[u8; 8]> {
        if self.0.len() < 8 {
            return Err(Error::invalid("field file is truncated"));
        }
        let (head, rest) = self.0.split_at(8);
        self.0 = rest;
        Ok(head.try_into().expect("split_at(8)"))
    }

    fn u64(&mut self) -> Result<usize> {
        usize::try_from(u64::from_le_bytes(self.take8()?))
            .map_err(|_| Error::invalid("field file size field overflows"))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take8()?))
    }
}

pub fn read_binary<R: Read>(mut r: R) -> Result<ScalarField> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes).map_err(io_err)?;
    let mut c = Cursor(&bytes);
    if &c.take8()? != MAGIC {
        return Err(Error::invalid("not a field file (bad magic)"));
    }
    let n = c.u64()?;
    if n == 0 || n > 16 {
        return Err(Error::invalid(format!("field file has implausible dimension {n}")));
    }
    let dx = c.f64()?;
    let dt = c.f64()?;
    let lower = (0..n).map(|_| c.f64()).collect::<Result<Vec<_>>>()?;
    let t_start = c.f64()?;
    let shape = (0..n).map(|_| c.u64()).collect::<Result<Vec<_>>>()?;
    let n_time = c.u64()?;
    let space = SpatialGrid::from_lower(lower, dx, shape)?;
    let grid = Grid::from_counts(space, t_start, dt, n_time)?;
    if c.0.len() != 8 * grid.len() {
        return Err(Error::invalid(format!(
            "field file holds {} payload bytes, expected {}",
            c.0.len(),
            8 * grid.len()
        )));
    }
    let values = (0..grid.len()).map(|_| c.f64()).collect::<Result<Vec<_>>>()?;
    ScalarField::from_values(grid, values)
}

/// CSV with header `x1,...,xn,t,value` and one row per node.
pub fn write_csv<W: Write>(u: &ScalarField, w: W) -> Result<()> {
    let mut w = io::BufWriter::new(w);
    let grid = u.grid();
    let space = grid.space();
    let n = space.dim();
    let mut header: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    header.push("t".into());
    header.push("value".into());
    writeln!(w, "{}", header.join(",")).map_err(io_err)?;
    let mut x = vec![0.0; n];
    for j in 0..grid.n_time() {
        let t = grid.time(j);
        for flat in 0..space.len() {
            space.point_into(flat, &mut x);
            for xi in &x {
                write!(w, "{xi:e},").map_err(io_err)?;
            }
            writeln!(w, "{t:e},{:e}", u.at(j, flat)).map_err(io_err)?;
        }
    }
    w.flush().map_err(io_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ScalarField {
        let s = SpatialGrid::new(&[0.5, -1.0], &[1.0, 0.5], 0.25).unwrap();
        let g = Grid::new(s, 0.1, 0.4, 0.1).unwrap();
        ScalarField::from_fn(g, |x, t| x[0].sin() * x[1] + t.exp()).unwrap()
    }

    #[test]
    fn binary_round_trip_is_exact() {
        let u = sample();
        let mut bytes = Vec::new();
        write_binary(&u, &mut bytes).unwrap();
        let back = read_binary(bytes.as_slice()).unwrap();
        assert_eq!(back, u);
    }

    #[test]
    fn truncated_or_foreign_files_are_rejected() {
        let u = sample();
        let mut bytes = Vec::new();
        write_binary(&u, &mut bytes).unwrap();
        assert!(read_binary(&bytes[..bytes.len() - 3]).is_err());
        assert!(read_binary(&b"NOTAFIELD......."[..]).is_err());
    }

    #[test]
    fn csv_has_header_and_one_row_per_node() {
        let u = sample();
        let mut out = Vec::new();
        write_csv(&u, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("x1,x2,t,value"));
        assert_eq!(lines.count(), u.grid().len());
    }
}
