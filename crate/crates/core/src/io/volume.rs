use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::grid::{IndicatorGrid, Lattice, ScalarField};
use crate::num::Real;

/// Either payload a volume file can carry.
#[derive(Debug, Clone)]
pub enum Volume<T: Real> {
    Indicator(IndicatorGrid<T>),
    Field(ScalarField<T>),
}

const MAGIC: &str = "nearvol 1";

/// Write an indicator grid: ASCII header (dims, spacing, origin, dtype bit)
/// followed by the raw little-endian bit payload, x fastest, LSB first.
pub fn write_indicator<T: Real>(path: impl AsRef<Path>, grid: &IndicatorGrid<T>) -> Result<()> {
    let mut out = header(grid.lattice(), "bit");
    out.extend_from_slice(&grid.cell_bytes());
    atomic_write(path.as_ref(), &out)
}

/// Write a scalar field with a little-endian f64 payload. Exact for `f64`
/// grids and for any values that originated as narrower floats.
pub fn write_field<T: Real>(path: impl AsRef<Path>, field: &ScalarField<T>) -> Result<()> {
    let mut out = header(field.lattice(), "f64");
    for v in field.values() {
        out.extend_from_slice(&v.as_f64().to_le_bytes());
    }
    atomic_write(path.as_ref(), &out)
}

/// Read a volume of either dtype.
pub fn read_volume<T: Real>(path: impl AsRef<Path>) -> Result<Volume<T>> {
    let bytes = fs::read(path.as_ref())?;
    let (lattice, dtype, payload_at) = parse_header::<T>(&bytes)?;
    let payload = &bytes[payload_at..];
    match dtype.as_str() {
        "bit" => {
            let want = lattice.len().div_ceil(8);
            if payload.len() != want {
                return Err(Error::Parse {
                    offset: payload_at as u64,
                    message: format!(
                        "bit payload is {} bytes, header wants {want}",
                        payload.len()
                    ),
                });
            }
            let grid = IndicatorGrid::from_cell_bytes(lattice, payload).ok_or(Error::Parse {
                offset: payload_at as u64,
                message: "bit payload rejected".into(),
            })?;
            Ok(Volume::Indicator(grid))
        }
        "f64" => {
            let want = lattice.len() * 8;
            if payload.len() != want {
                return Err(Error::Parse {
                    offset: payload_at as u64,
                    message: format!(
                        "f64 payload is {} bytes, header wants {want}",
                        payload.len()
                    ),
                });
            }
            let values: Vec<T> = payload
                .chunks_exact(8)
                .map(|c| {
                    T::of(f64::from_le_bytes([
                        c[0], c[1], c[2], c[3], c[4], c[5], c[6], c[7],
                    ]))
                })
                .collect();
            Ok(Volume::Field(ScalarField::from_vec(lattice, values)?))
        }
        other => Err(Error::Parse {
            offset: 0,
            message: format!("unknown dtype {other:?}"),
        }),
    }
}

/// Read a volume and require the bit dtype.
pub fn read_indicator<T: Real>(path: impl AsRef<Path>) -> Result<IndicatorGrid<T>> {
    match read_volume(path.as_ref())? {
        Volume::Indicator(g) => Ok(g),
        Volume::Field(_) => Err(Error::param(format!(
            "{} holds a scalar field, expected an indicator volume",
            path.as_ref().display()
        ))),
    }
}

/// Read a volume and require the f64 dtype.
pub fn read_field<T: Real>(path: impl AsRef<Path>) -> Result<ScalarField<T>> {
    match read_volume(path.as_ref())? {
        Volume::Field(f) => Ok(f),
        Volume::Indicator(_) => Err(Error::param(format!(
            "{} holds an indicator volume, expected a scalar field",
            path.as_ref().display()
        ))),
    }
}

/// ASCII structured-points export for third-party viewers (legacy VTK).
pub fn write_vtk_ascii<T: Real>(path: impl AsRef<Path>, volume: &Volume<T>) -> Result<()> {
    let (lattice, name) = match volume {
        Volume::Indicator(g) => (g.lattice(), "indicator"),
        Volume::Field(f) => (f.lattice(), "field"),
    };
    let [nx, ny, nz] = lattice.dims();
    let o = lattice.origin();
    let h = lattice.spacing().as_f64();
    let mut s = String::new();
    s.push_str("# vtk DataFile Version 3.0\n");
    s.push_str("volume export\nASCII\nDATASET STRUCTURED_POINTS\n");
    s.push_str(&format!("DIMENSIONS {nx} {ny} {nz}\n"));
    s.push_str(&format!(
        "ORIGIN {} {} {}\n",
        o.x.as_f64(),
        o.y.as_f64(),
        o.z.as_f64()
    ));
    s.push_str(&format!("SPACING {h} {h} {h}\n"));
    s.push_str(&format!("POINT_DATA {}\n", lattice.len()));
    s.push_str(&format!("SCALARS {name} float 1\nLOOKUP_TABLE default\n"));
    match volume {
        Volume::Indicator(g) => {
            for idx in 0..lattice.len() {
                s.push_str(if g.get_linear(idx) { "1\n" } else { "0\n" });
            }
        }
        Volume::Field(f) => {
            for v in f.values() {
                s.push_str(&format!("{}\n", v.as_f64()));
            }
        }
    }
    atomic_write(path.as_ref(), s.as_bytes())
}

fn header<T: Real>(lattice: &Lattice<T>, dtype: &str) -> Vec<u8> {
    let [nx, ny, nz] = lattice.dims();
    let o = lattice.origin();
    format!(
        "{MAGIC}\ndims {nx} {ny} {nz}\nspacing {}\norigin {} {} {}\ndtype {dtype}\ndata\n",
        lattice.spacing().as_f64(),
        o.x.as_f64(),
        o.y.as_f64(),
        o.z.as_f64(),
    )
    .into_bytes()
}

fn parse_header<T: Real>(bytes: &[u8]) -> Result<(Lattice<T>, String, usize)> {
    let mut offset = 0usize;
    let mut dims: Option<[usize; 3]> = None;
    let mut spacing: Option<f64> = None;
    let mut origin: Option<[f64; 3]> = None;
    let mut dtype: Option<String> = None;
    let mut saw_magic = false;

    loop {
        let rest = &bytes[offset..];
        let nl = rest.iter().position(|&b| b == b'\n').ok_or(Error::Parse {
            offset: offset as u64,
            message: "header ended without a data marker".into(),
        })?;
        let line = std::str::from_utf8(&rest[..nl]).map_err(|_| Error::Parse {
            offset: offset as u64,
            message: "non-UTF8 header line".into(),
        })?;
        let line_offset = offset;
        offset += nl + 1;

        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields.as_slice() {
            ["nearvol", "1"] => saw_magic = true,
            ["dims", a, b, c] => {
                dims = Some([
                    parse_num(a, line_offset)?,
                    parse_num(b, line_offset)?,
                    parse_num(c, line_offset)?,
                ]);
            }
            ["spacing", v] => spacing = Some(parse_num(v, line_offset)?),
            ["origin", a, b, c] => {
                origin = Some([
                    parse_num(a, line_offset)?,
                    parse_num(b, line_offset)?,
                    parse_num(c, line_offset)?,
                ]);
            }
            ["dtype", d] => dtype = Some(d.to_string()),
            ["data"] => break,
            _ => {
                return Err(Error::Parse {
                    offset: line_offset as u64,
                    message: format!("unexpected header line {line:?}"),
                });
            }
        }
    }

    if !saw_magic {
        return Err(Error::Parse {
            offset: 0,
            message: "missing magic line".into(),
        });
    }
    let dims = dims.ok_or(Error::Parse {
        offset: 0,
        message: "missing dims".into(),
    })?;
    let spacing = spacing.ok_or(Error::Parse {
        offset: 0,
        message: "missing spacing".into(),
    })?;
    let origin = origin.ok_or(Error::Parse {
        offset: 0,
        message: "missing origin".into(),
    })?;
    let dtype = dtype.ok_or(Error::Parse {
        offset: 0,
        message: "missing dtype".into(),
    })?;
    let lattice = Lattice::new(
        dims,
        T::of(spacing),
        Vector3::new(T::of(origin[0]), T::of(origin[1]), T::of(origin[2])),
    )?;
    Ok((lattice, dtype, offset))
}

fn parse_num<N: std::str::FromStr>(tok: &str, offset: usize) -> Result<N> {
    tok.parse().map_err(|_| Error::Parse {
        offset: offset as u64,
        message: format!("bad numeric field {tok:?}"),
    })
}

fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let mut f = fs::File::create(path)?;
    f.write_all(bytes)?;
    Ok(())
}
