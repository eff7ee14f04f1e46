use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Triangle soup in millimeters, as read from an STL file.
#[derive(Debug, Clone)]
pub struct TriangleMesh {
    pub triangles: Vec<[[f64; 3]; 3]>,
}

impl TriangleMesh {
    pub fn bounds(&self) -> Option<([f64; 3], [f64; 3])> {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for tri in &self.triangles {
            for v in tri {
                for a in 0..3 {
                    lo[a] = lo[a].min(v[a]);
                    hi[a] = hi[a].max(v[a]);
                }
            }
        }
        (!self.triangles.is_empty()).then_some((lo, hi))
    }

    pub fn is_finite(&self) -> bool {
        self.triangles
            .iter()
            .flatten()
            .flatten()
            .all(|v| v.is_finite())
    }
}

/// Load a binary or ASCII STL file. Format detection prefers the binary size
/// invariant (84 + 50 per triangle) since binary files may begin with the
/// bytes "solid" too.
pub fn load_mesh(path: impl AsRef<Path>) -> Result<TriangleMesh> {
    let bytes = fs::read(path.as_ref())?;
    let mesh = if looks_binary(&bytes) {
        parse_binary(&bytes)?
    } else {
        parse_ascii(&bytes)?
    };
    if mesh.triangles.is_empty() {
        return Err(Error::Parse {
            offset: 0,
            message: "mesh has no triangles".into(),
        });
    }
    Ok(mesh)
}

fn looks_binary(bytes: &[u8]) -> bool {
    if bytes.len() < 84 {
        return false;
    }
    let count = u32::from_le_bytes([bytes[80], bytes[81], bytes[82], bytes[83]]) as usize;
    bytes.len() == 84 + count * 50
}

fn parse_binary(bytes: &[u8]) -> Result<TriangleMesh> {
    let count = u32::from_le_bytes([bytes[80], bytes[81], bytes[82], bytes[83]]) as usize;
    let mut triangles = Vec::with_capacity(count);
    let mut off = 84usize;
    for _ in 0..count {
        if off + 50 > bytes.len() {
            return Err(Error::Parse {
                offset: off as u64,
                message: "truncated binary facet record".into(),
            });
        }
        let f = |idx: usize| -> f64 {
            let b = [bytes[idx], bytes[idx + 1], bytes[idx + 2], bytes[idx + 3]];
            f32::from_le_bytes(b) as f64
        };
        // skip the 12-byte normal; positions start at offset 12
        let mut tri = [[0.0; 3]; 3];
        for (v, vert) in tri.iter_mut().enumerate() {
            for (a, c) in vert.iter_mut().enumerate() {
                *c = f(off + 12 + 12 * v + 4 * a);
            }
        }
        triangles.push(tri);
        off += 50;
    }
    Ok(TriangleMesh { triangles })
}

fn parse_ascii(bytes: &[u8]) -> Result<TriangleMesh> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Parse {
        offset: e.valid_up_to() as u64,
        message: "STL is neither valid binary nor UTF-8 text".into(),
    })?;

    let mut triangles = Vec::new();
    let mut pending: Vec<[f64; 3]> = Vec::new();
    let mut offset = 0u64;
    let mut saw_solid = false;

    for line in text.split_inclusive('\n') {
        let line_offset = offset;
        offset += line.len() as u64;
        let mut tokens = line.split_whitespace();
        let Some(head) = tokens.next() else { continue };
        match head {
            "solid" => saw_solid = true,
            "facet" | "outer" | "endloop" => {}
            "vertex" => {
                let mut v = [0.0f64; 3];
                for c in v.iter_mut() {
                    let tok = tokens.next().ok_or_else(|| Error::Parse {
                        offset: line_offset,
                        message: "vertex with fewer than three coordinates".into(),
                    })?;
                    *c = tok.parse().map_err(|_| Error::Parse {
                        offset: line_offset,
                        message: format!("bad vertex coordinate {tok:?}"),
                    })?;
                }
                pending.push(v);
                if pending.len() > 3 {
                    return Err(Error::Parse {
                        offset: line_offset,
                        message: "more than three vertices in a facet".into(),
                    });
                }
            }
            "endfacet" => {
                if pending.len() != 3 {
                    return Err(Error::Parse {
                        offset: line_offset,
                        message: format!("facet closed with {} vertices", pending.len()),
                    });
                }
                triangles.push([pending[0], pending[1], pending[2]]);
                pending.clear();
            }
            "endsolid" => {}
            other => {
                return Err(Error::Parse {
                    offset: line_offset,
                    message: format!("unexpected token {other:?}"),
                });
            }
        }
    }
    if !saw_solid {
        return Err(Error::Parse {
            offset: 0,
            message: "missing 'solid' header".into(),
        });
    }
    if !pending.is_empty() {
        return Err(Error::Parse {
            offset,
            message: "file ends inside a facet".into(),
        });
    }
    Ok(TriangleMesh { triangles })
}

/// Serialize a mesh as binary STL; test and tooling helper.
pub fn write_binary_stl(path: impl AsRef<Path>, mesh: &TriangleMesh) -> Result<()> {
    let mut bytes = vec![0u8; 80];
    bytes.extend_from_slice(&(mesh.triangles.len() as u32).to_le_bytes());
    for tri in &mesh.triangles {
        bytes.extend_from_slice(&[0u8; 12]); // normal left zero
        for v in tri {
            for c in v {
                bytes.extend_from_slice(&(*c as f32).to_le_bytes());
            }
        }
        bytes.extend_from_slice(&[0u8; 2]);
    }
    fs::write(path.as_ref(), bytes)?;
    Ok(())
}

#[cfg(test)]
pub(crate) fn unit_cube_ascii() -> String {
    // 12 triangles, bounds [0,1]^3
    let quads: [([f64; 3], [f64; 3], [f64; 3], [f64; 3]); 6] = [
        ([0., 0., 0.], [0., 1., 0.], [1., 1., 0.], [1., 0., 0.]), // z = 0
        ([0., 0., 1.], [1., 0., 1.], [1., 1., 1.], [0., 1., 1.]), // z = 1
        ([0., 0., 0.], [1., 0., 0.], [1., 0., 1.], [0., 0., 1.]), // y = 0
        ([0., 1., 0.], [0., 1., 1.], [1., 1., 1.], [1., 1., 0.]), // y = 1
        ([0., 0., 0.], [0., 0., 1.], [0., 1., 1.], [0., 1., 0.]), // x = 0
        ([1., 0., 0.], [1., 1., 0.], [1., 1., 1.], [1., 0., 1.]), // x = 1
    ];
    let mut s = String::from("solid cube\n");
    for (a, b, c, d) in quads {
        for tri in [[a, b, c], [a, c, d]] {
            s.push_str("facet normal 0 0 0\nouter loop\n");
            for v in tri {
                s.push_str(&format!("vertex {} {} {}\n", v[0], v[1], v[2]));
            }
            s.push_str("endloop\nendfacet\n");
        }
    }
    s.push_str("endsolid cube\n");
    s
}
