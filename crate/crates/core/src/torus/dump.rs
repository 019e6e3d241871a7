use std::io::{BufRead, Write};

use super::{GridField, SpaceTimeField, TorusLattice};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Header of the binary field dump `SSPDE1 <n_spatial> <t0> <dt> <n_slices>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DumpHeader {
    pub n_spatial: usize,
    pub t0: f64,
    pub dt: f64,
    pub n_slices: usize,
}

/// Writes the header line followed by little-endian f64 values, slice by slice.
pub fn write_dump<T: Real, W: Write>(field: &SpaceTimeField<T>, mut out: W) -> std::io::Result<()> {
    writeln!(
        out,
        "SSPDE1 {} {:e} {:e} {}",
        field.lattice().n(),
        field.t0().as_f64(),
        field.dt().as_f64(),
        field.len()
    )?;
    let mut bytes = Vec::with_capacity(field.lattice().len() * 8);
    for slice in field.slices() {
        bytes.clear();
        for v in slice.values() {
            bytes.extend_from_slice(&v.as_f64().to_le_bytes());
        }
        out.write_all(&bytes)?;
    }
    out.flush()
}

pub fn read_dump<T: Real, R: BufRead>(mut input: R) -> Result<SpaceTimeField<T>> {
    let mut line = String::new();
    input
        .read_line(&mut line)
        .map_err(|e| Error::Dump(e.to_string()))?;
    let parts: Vec<&str> = line.split_whitespace().collect();
    if parts.len() != 5 || parts[0] != "SSPDE1" {
        return Err(Error::Dump(format!("bad header {line:?}")));
    }
    let parse_err = |what: &str| Error::Dump(format!("bad {what} in header"));
    let header = DumpHeader {
        n_spatial: parts[1].parse().map_err(|_| parse_err("n_spatial"))?,
        t0: parts[2].parse().map_err(|_| parse_err("t0"))?,
        dt: parts[3].parse().map_err(|_| parse_err("dt"))?,
        n_slices: parts[4].parse().map_err(|_| parse_err("n_slices"))?,
    };
    let lattice = TorusLattice::new(header.n_spatial)?;
    let mut slices = Vec::with_capacity(header.n_slices);
    let mut buf = vec![0u8; lattice.len() * 8];
    for _ in 0..header.n_slices {
        input
            .read_exact(&mut buf)
            .map_err(|e| Error::Dump(e.to_string()))?;
        let values = buf
            .chunks_exact(8)
            .map(|c| T::lit(f64::from_le_bytes(c.try_into().expect("8 bytes"))))
            .collect();
        slices.push(GridField::from_values(lattice, values)?);
    }
    SpaceTimeField::new(T::lit(header.t0), T::lit(header.dt), slices)
}
