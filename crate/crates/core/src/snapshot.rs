//! Little-endian binary snapshot format.
//!
//! ```text
//! magic    4 bytes  "AXNS"
//! version  u32
//! nr, nz   u64, u64
//! r_max, z_min, z_max, t   f64 x 4
//! vr, vtheta, vz, p        (nr+1)*(nz+1) f64 each, row-major with r as the row index
//! ```
//!
//! Cube dumps reuse the layout with the magic `"CUBE"`:
//!
//! ```text
//! magic "CUBE", version u32, n_space u64, n_time u64,
//! L, Q, r0, z0, t0  f64 x 5,
//! vx, vy, vz        n_time*n_space^3 f64 each, index order (t, x1, x2, z); masked samples are NaN
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::field::{AxisymField, FieldRole, ScalarField};
use crate::grid::Grid;
use crate::microscope::CubeSample;

pub const SNAPSHOT_MAGIC: &[u8; 4] = b"AXNS";
pub const CUBE_MAGIC: &[u8; 4] = b"CUBE";
pub const FORMAT_VERSION: u32 = 1;

/// Decoded snapshot file.
#[derive(Debug, Clone)]
pub struct SnapshotRecord {
    pub t: f64,
    pub field: AxisymField,
    pub pressure: ScalarField,
}

fn put_f64(w: &mut impl Write, v: f64) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn put_array(w: &mut impl Write, a: &Array2<f64>) -> std::io::Result<()> {
    // ndarray's default layout is row-major; iter() follows logical order regardless.
    for v in a.iter() {
        put_f64(w, *v)?;
    }
    Ok(())
}

pub fn write_snapshot(
    w: &mut impl Write,
    t: f64,
    field: &AxisymField,
    pressure: &ScalarField,
) -> std::io::Result<()> {
    let g = &field.grid;
    w.write_all(SNAPSHOT_MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(g.nr as u64).to_le_bytes())?;
    w.write_all(&(g.nz as u64).to_le_bytes())?;
    for v in [g.r_max, g.z_min, g.z_max, t] {
        put_f64(w, v)?;
    }
    put_array(w, &field.vr)?;
    put_array(w, &field.vtheta)?;
    put_array(w, &field.vz)?;
    put_array(w, &pressure.values)
}

struct Reader<'a, R> {
    inner: R,
    path: &'a Path,
}

impl<R: Read> Reader<'_, R> {
    fn corrupt(&self, message: impl Into<String>) -> Error {
        Error::CorruptSnapshot {
            path: self.path.to_path_buf(),
            message: message.into(),
        }
    }

    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.inner
            .read_exact(&mut buf)
            .map_err(|e| self.corrupt(format!("truncated: {e}")))?;
        Ok(buf)
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes::<8>()?))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes::<8>()?))
    }

    fn array(&mut self, shape: (usize, usize)) -> Result<Array2<f64>> {
        let n = shape.0 * shape.1;
        let mut data = Vec::with_capacity(n);
        for _ in 0..n {
            let v = self.f64()?;
            if !v.is_finite() {
                return Err(self.corrupt("non-finite value"));
            }
            data.push(v);
        }
        Array2::from_shape_vec(shape, data).map_err(|e| self.corrupt(e.to_string()))
    }
}

/// Reads a snapshot. `path` is only used in error messages. The axial
/// boundary treatment is not part of the format; the grid comes back as
/// wall-bounded and callers adjust it with [`Grid::with_z_boundary`].
pub fn read_snapshot(r: impl Read, path: &Path) -> Result<SnapshotRecord> {
    let mut rd = Reader { inner: r, path };
    let magic = rd.bytes::<4>()?;
    if &magic != SNAPSHOT_MAGIC {
        return Err(rd.corrupt(format!("bad magic {magic:?}")));
    }
    let version = u32::from_le_bytes(rd.bytes::<4>()?);
    if version != FORMAT_VERSION {
        return Err(rd.corrupt(format!("unsupported version {version}")));
    }
    let nr = rd.u64()? as usize;
    let nz = rd.u64()? as usize;
    let (r_max, z_min, z_max, t) = (rd.f64()?, rd.f64()?, rd.f64()?, rd.f64()?);
    let grid = Grid::new(nr, nz, r_max, z_min, z_max).map_err(|e| rd.corrupt(e.to_string()))?;
    if !t.is_finite() {
        return Err(rd.corrupt("non-finite time"));
    }
    let shape = grid.shape();
    let vr = rd.array(shape)?;
    let vtheta = rd.array(shape)?;
    let vz = rd.array(shape)?;
    let p = rd.array(shape)?;
    let mut trailing = [0u8; 1];
    if rd.inner.read(&mut trailing).map_err(Error::Io)? != 0 {
        return Err(rd.corrupt("trailing bytes"));
    }
    Ok(SnapshotRecord {
        t,
        field: AxisymField {
            grid,
            vr,
            vtheta,
            vz,
        },
        pressure: ScalarField {
            grid,
            values: p,
            role: FieldRole::Pressure,
        },
    })
}

pub fn save_snapshot(path: &Path, t: f64, field: &AxisymField, pressure: &ScalarField) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_snapshot(&mut w, t, field, pressure)?;
    w.flush()?;
    Ok(())
}

pub fn load_snapshot(path: &Path) -> Result<SnapshotRecord> {
    read_snapshot(BufReader::new(File::open(path)?), path)
}

pub fn write_cube(w: &mut impl Write, cube: &CubeSample) -> std::io::Result<()> {
    w.write_all(CUBE_MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(cube.n_space as u64).to_le_bytes())?;
    w.write_all(&(cube.n_time as u64).to_le_bytes())?;
    let z = &cube.zoom;
    for v in [cube.half_width, z.q, z.r0, z.z0, z.t0] {
        put_f64(w, v)?;
    }
    for k in 0..3 {
        for (v, ok) in cube.values.iter().zip(cube.valid.iter()) {
            put_f64(w, if *ok { v[k] } else { f64::NAN })?;
        }
    }
    Ok(())
}
