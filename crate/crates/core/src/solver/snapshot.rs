//! Snapshot dumps: a header line `N n L sigma m t`, then the samples in
//! row-major order, either one decimal value per line or as raw
//! little-endian `f64`.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fractional::FracParams;
use crate::grid::{Field, Grid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnapshotFormat {
    Text,
    Binary,
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub sigma: f64,
    pub m: f64,
    pub time: f64,
    pub field: Field,
}

pub fn write_snapshot(
    mut w: impl Write,
    field: &Field,
    params: FracParams,
    m: f64,
    time: f64,
    format: SnapshotFormat,
) -> Result<()> {
    let g = field.grid();
    writeln!(
        w,
        "{} {} {:e} {:e} {:e} {:e}",
        g.dim(),
        g.points_per_dim(),
        g.half_width(),
        params.sigma(),
        m,
        time
    )?;
    match format {
        SnapshotFormat::Text => {
            for v in field.values() {
                writeln!(w, "{v:e}")?;
            }
        }
        SnapshotFormat::Binary => {
            for v in field.values() {
                w.write_all(&v.to_le_bytes())?;
            }
        }
    }
    Ok(())
}

pub fn read_snapshot(r: impl BufRead, format: SnapshotFormat) -> Result<Snapshot> {
    let mut r = r;
    let mut header = String::new();
    r.read_line(&mut header)?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 6 {
        return Err(Error::Snapshot(format!(
            "expected 6 header fields, got {}",
            parts.len()
        )));
    }
    let int = |s: &str| s.parse::<usize>().map_err(|e| Error::Snapshot(format!("{s}: {e}")));
    let real = |s: &str| s.parse::<f64>().map_err(|e| Error::Snapshot(format!("{s}: {e}")));
    let grid = Grid::new(int(parts[0])?, real(parts[2])?, int(parts[1])?)?;
    let (sigma, m, time) = (real(parts[3])?, real(parts[4])?, real(parts[5])?);
    let values = match format {
        SnapshotFormat::Text => {
            let mut values = Vec::with_capacity(grid.len());
            for line in r.lines() {
                let line = line?;
                if !line.trim().is_empty() {
                    values.push(real(line.trim())?);
                }
            }
            values
        }
        SnapshotFormat::Binary => {
            let mut bytes = Vec::new();
            r.read_to_end(&mut bytes)?;
            if bytes.len() != 8 * grid.len() {
                return Err(Error::Snapshot(format!(
                    "expected {} bytes of samples, got {}",
                    8 * grid.len(),
                    bytes.len()
                )));
            }
            bytes
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
                .collect()
        }
    };
    if values.len() != grid.len() {
        return Err(Error::Snapshot(format!(
            "expected {} samples, got {}",
            grid.len(),
            values.len()
        )));
    }
    Ok(Snapshot {
        sigma,
        m,
        time,
        field: Field::new(grid, values)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_both_formats() {
        let g = Grid::new(2, 1.5, 8).unwrap();
        let f = g.sample(|x| x[0].sin() * x[1] + 0.25);
        let p = FracParams::new(2, 0.7).unwrap();
        for format in [SnapshotFormat::Text, SnapshotFormat::Binary] {
            let mut buf = Vec::new();
            write_snapshot(&mut buf, &f, p, 0.6, 0.125, format).unwrap();
            let s = read_snapshot(&buf[..], format).unwrap();
            assert_eq!(s.field, f);
            assert_eq!((s.sigma, s.m, s.time), (0.7, 0.6, 0.125));
        }
    }

    #[test]
    fn rejects_truncated_dump() {
        let g = Grid::new(1, 1.0, 8).unwrap();
        let p = FracParams::new(1, 0.7).unwrap();
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &g.constant(1.0), p, 0.6, 0.0, SnapshotFormat::Binary).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(read_snapshot(&buf[..], SnapshotFormat::Binary).is_err());
    }
}
