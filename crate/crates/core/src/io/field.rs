//! `BFLD` field files: magic, version `u32 = 1`, `n: u32`, a zero `u32`,
//! then `n²` values as `f64` in node order.

use std::path::Path;

use crate::error::Result;
use crate::grid::{Field2D, Grid};

use super::{put_u32, to_u32, write_atomic, Reader};

const MAGIC: &[u8; 4] = b"BFLD";
const VERSION: u32 = 1;

pub fn encode_field(field: &Field2D) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(16 + 8 * field.values().len());
    out.extend_from_slice(MAGIC);
    put_u32(&mut out, VERSION);
    put_u32(&mut out, to_u32(field.grid().n(), "grid size")?);
    put_u32(&mut out, 0);
    for v in field.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_field(bytes: &[u8]) -> Result<Field2D> {
    let mut r = Reader::new(bytes, "field");
    r.magic(MAGIC, VERSION)?;
    let grid = Grid::new(r.u32()? as usize)?;
    r.u32()?;
    let values = r.f64s(grid.len())?;
    r.finish()?;
    Field2D::new(grid, values)
}

pub fn write_field(path: &Path, field: &Field2D) -> Result<()> {
    write_atomic(path, &encode_field(field)?)
}

pub fn read_field(path: &Path) -> Result<Field2D> {
    decode_field(&std::fs::read(path)?)
}
