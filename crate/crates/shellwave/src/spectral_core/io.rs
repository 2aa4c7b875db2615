//! Field serialization: a JSON sidecar describing the grid plus a raw
//! little-endian binary of interleaved re/im doubles in lexicographic
//! order. The binary lives at the given path and the sidecar at the
//! same path with `.json` appended.

use super::field::{ComplexField, Side};
use super::grid::Grid;
use crate::error::{Result, ShellwaveError};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

#[derive(Serialize, Deserialize)]
struct Sidecar {
    d: usize,
    #[serde(rename = "L")]
    l: f64,
    #[serde(rename = "N")]
    n: usize,
    side: Side,
    dtype: String,
}

fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut os = path.as_os_str().to_owned();
    os.push(".json");
    os.into()
}

/// Writes binary data and sidecar via temp-and-rename so a partially
/// written pair is never observed.
pub fn write_field(path: &Path, field: &ComplexField) -> Result<()> {
    let g = field.grid();
    let tmp_bin = path.with_extension("tmp-bin");
    {
        let file = fs::File::create(&tmp_bin)?;
        let mut w = BufWriter::new(file);
        for z in field.data() {
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
        w.flush()?;
    }
    fs::rename(&tmp_bin, path)?;

    let sidecar = Sidecar {
        d: g.dimension(),
        l: g.half_side(),
        n: g.samples_per_axis(),
        side: field.side(),
        dtype: "c128-le".to_string(),
    };
    let tmp_json = path.with_extension("tmp-json");
    fs::write(&tmp_json, serde_json::to_string_pretty(&sidecar)?)?;
    fs::rename(&tmp_json, sidecar_path(path))?;
    Ok(())
}

/// Reads a field pair written by [`write_field`].
pub fn read_field(path: &Path) -> Result<ComplexField> {
    let text = fs::read_to_string(sidecar_path(path))?;
    let sc: Sidecar = serde_json::from_str(&text)?;
    if sc.dtype != "c128-le" {
        return Err(ShellwaveError::Io(format!(
            "unsupported dtype {:?} in {}",
            sc.dtype,
            sidecar_path(path).display()
        )));
    }
    let grid = Grid::new(sc.d, sc.l, sc.n)?;
    let expected = grid.len() * 16;
    let file = fs::File::open(path)?;
    let mut r = BufReader::new(file);
    let mut bytes = Vec::with_capacity(expected);
    r.read_to_end(&mut bytes)?;
    if bytes.len() != expected {
        return Err(ShellwaveError::Io(format!(
            "field binary {} has {} bytes, expected {}",
            path.display(),
            bytes.len(),
            expected
        )));
    }
    let data: Vec<Complex64> = bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[0..8].try_into().unwrap());
            let im = f64::from_le_bytes(c[8..16].try_into().unwrap());
            Complex64::new(re, im)
        })
        .collect();
    ComplexField::from_data(grid, sc.side, data)
}
