//! `BPDE` dataset files.
//!
//! Header (24 bytes): magic, version `u32 = 1`, `n: u32`, `count: u32`,
//! `iterations: u32`, a zero `u32`. Each record then holds `f` and `u`
//! (`n²` each, node order) followed by `g_left`, `g_bottom`, `h_right` and
//! `h_top` (`n` each), all `f32`. The sampling parameters live in the JSON
//! sidecar `<file>.json`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::data::{Dataset, DatasetSpec, Sample};
use crate::error::{LabError, Result};
use crate::grid::{BoundarySpec, EdgeFunction, Field2D, Grid};
use crate::Parallelism;

use super::{put_f32s, put_u32, sidecar_path, to_json_bytes, to_u32, write_atomic, Reader};

const MAGIC: &[u8; 4] = b"BPDE";
const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 24;

fn narrow(values: &[f64]) -> Result<Vec<f32>> {
    values
        .iter()
        .map(|&v| {
            let x = v as f32;
            if x.is_finite() {
                Ok(x)
            } else {
                Err(LabError::NonFinite(format!("dataset value {v} overflows f32")))
            }
        })
        .collect()
}

fn put_header(out: &mut Vec<u8>, n: usize, count: usize, iterations: usize) -> Result<()> {
    out.extend_from_slice(MAGIC);
    put_u32(out, VERSION);
    put_u32(out, to_u32(n, "grid size")?);
    put_u32(out, to_u32(count, "sample count")?);
    put_u32(out, to_u32(iterations, "iteration count")?);
    put_u32(out, 0);
    Ok(())
}

fn put_record(out: &mut Vec<u8>, n: usize, s: &Sample) -> Result<()> {
    s.forcing.grid().check_same(&Grid::new(n)?)?;
    s.solution.grid().check_same(&s.forcing.grid())?;
    s.boundary.grid().check_same(&s.forcing.grid())?;
    put_f32s(out, narrow(s.forcing.values())?);
    put_f32s(out, narrow(s.solution.values())?);
    for e in [&s.boundary.g_left, &s.boundary.g_bottom, &s.boundary.h_right, &s.boundary.h_top] {
        put_f32s(out, narrow(e.values())?);
    }
    Ok(())
}

pub fn encode_dataset(data: &Dataset) -> Result<Vec<u8>> {
    let n = data.spec.grid_n;
    let record = 2 * n * n + 4 * n;
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * record * data.len());
    put_header(&mut out, n, data.len(), data.spec.iterations)?;
    for s in &data.samples {
        put_record(&mut out, n, s)?;
    }
    Ok(out)
}

fn widen(v: Vec<f32>) -> Vec<f64> {
    v.into_iter().map(f64::from).collect()
}

/// Parses the binary part; `spec` must agree with the header.
pub fn decode_dataset(bytes: &[u8], spec: DatasetSpec) -> Result<Dataset> {
    let mut r = Reader::new(bytes, "dataset");
    r.magic(MAGIC, VERSION)?;
    let n = r.u32()? as usize;
    let count = r.u32()? as usize;
    let iterations = r.u32()? as usize;
    if r.u32()? != 0 {
        return Err(LabError::Format("dataset: reserved header word is not zero".into()));
    }
    if n != spec.grid_n || iterations != spec.iterations || count != spec.count {
        return Err(LabError::Format(format!(
            "dataset header (n={n}, count={count}, iterations={iterations}) disagrees with sidecar \
             (n={}, count={}, iterations={})",
            spec.grid_n, spec.count, spec.iterations
        )));
    }
    let grid = Grid::new(n)?;
    let mut samples = Vec::new();
    for _ in 0..spec.count {
        let forcing = Field2D::new(grid, widen(r.f32s(n * n)?))?;
        let solution = Field2D::new(grid, widen(r.f32s(n * n)?))?;
        let mut edges = Vec::with_capacity(4);
        for _ in 0..4 {
            edges.push(EdgeFunction::new(grid, widen(r.f32s(n)?))?);
        }
        let h_top = edges.pop().unwrap();
        let h_right = edges.pop().unwrap();
        let g_bottom = edges.pop().unwrap();
        let g_left = edges.pop().unwrap();
        let boundary = BoundarySpec::new(g_left, g_bottom, h_right, h_top)?;
        samples.push(Sample {
            forcing,
            boundary,
            solution,
        });
    }
    r.finish()?;
    Ok(Dataset { spec, samples })
}

/// Writes `path` and its sidecar.
pub fn write_dataset(path: &Path, data: &Dataset) -> Result<()> {
    if data.spec.count != data.len() {
        return Err(LabError::LengthMismatch {
            expected: data.spec.count,
            found: data.len(),
        });
    }
    write_atomic(path, &encode_dataset(data)?)?;
    write_atomic(&sidecar_path(path), &to_json_bytes(&data.spec)?)
}

/// Generates `spec` straight to `path` in chunks of `chunk` samples, so the
/// whole dataset never has to be held in memory. The bytes equal
/// `write_dataset(path, &Dataset::generate(spec, par)?)`.
pub fn generate_dataset_file(path: &Path, spec: &DatasetSpec, chunk: usize, par: Parallelism) -> Result<()> {
    spec.validate()?;
    let chunk = chunk.max(1);
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    let mut file = BufWriter::new(File::create(&tmp)?);
    let mut buf = Vec::new();
    put_header(&mut buf, spec.grid_n, spec.count, spec.iterations)?;
    file.write_all(&buf)?;
    let mut start = 0;
    while start < spec.count {
        let len = chunk.min(spec.count - start);
        let part = DatasetSpec {
            first_stream: spec.first_stream + start as u64,
            count: len,
            ..spec.clone()
        };
        buf.clear();
        for s in &Dataset::generate(&part, par)?.samples {
            put_record(&mut buf, spec.grid_n, s)?;
        }
        file.write_all(&buf)?;
        start += len;
    }
    file.into_inner().map_err(|e| e.into_error())?.sync_all()?;
    std::fs::rename(&tmp, path)?;
    write_atomic(&sidecar_path(path), &to_json_bytes(spec)?)
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let spec: DatasetSpec = serde_json::from_slice(&std::fs::read(sidecar_path(path))?)?;
    spec.validate()?;
    decode_dataset(&std::fs::read(path)?, spec)
}
