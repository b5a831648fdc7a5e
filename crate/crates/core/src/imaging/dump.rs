//! Debug dumps of vertex and normal maps.
//!
//! PPM images are binary `P6`, 8-bit RGB, one pixel per map cell, row 0 at
//! the top. Channel scaling:
//! - vertex map: grey level `round(255 * min(depth / PPM_DEPTH_SCALE_M, 1))`,
//!   invalid cells black;
//! - normal map: `round(255 * (n + 1) / 2)` per axis (x to red, y to green,
//!   z to blue), invalid cells black.
//!
//! CSV dumps are exact: `u,v,x,y,z` (or `u,v,nx,ny,nz`) with shortest
//! round-trip decimal formatting, valid cells only, in pixel-scan order.

use std::io::{self, Write};

use super::{NormalMap, VertexMap};

/// Depth mapped to full white in vertex-map images (m).
pub const PPM_DEPTH_SCALE_M: f64 = 80.0;

fn ppm_header<W: Write>(out: &mut W, w: usize, h: usize) -> io::Result<()> {
    write!(out, "P6\n{w} {h}\n255\n")
}

fn to_byte(x: f64) -> u8 {
    (255.0 * x.clamp(0.0, 1.0)).round() as u8
}

pub fn write_vertex_ppm<W: Write>(vmap: &VertexMap, out: &mut W) -> io::Result<()> {
    ppm_header(out, vmap.width(), vmap.height())?;
    let mut buf = Vec::with_capacity(3 * vmap.cells().len());
    for cell in vmap.cells() {
        let g = cell.map_or(0, |vx| to_byte(vx.depth / PPM_DEPTH_SCALE_M));
        buf.extend_from_slice(&[g, g, g]);
    }
    out.write_all(&buf)
}

pub fn write_normal_ppm<W: Write>(nmap: &NormalMap, out: &mut W) -> io::Result<()> {
    let cfg = nmap.config();
    ppm_header(out, cfg.width(), cfg.height())?;
    let mut buf = Vec::with_capacity(3 * nmap.cells().len());
    for cell in nmap.cells() {
        match cell {
            Some(n) => buf.extend(n.iter().map(|c| to_byte(0.5 * (c + 1.0)))),
            None => buf.extend_from_slice(&[0, 0, 0]),
        }
    }
    out.write_all(&buf)
}

pub fn write_vertex_csv<W: Write>(vmap: &VertexMap, out: &mut W) -> io::Result<()> {
    writeln!(out, "u,v,x,y,z")?;
    for (u, v, vx) in vmap.iter_valid() {
        writeln!(out, "{u},{v},{},{},{}", vx.point.x, vx.point.y, vx.point.z)?;
    }
    Ok(())
}

pub fn write_normal_csv<W: Write>(nmap: &NormalMap, out: &mut W) -> io::Result<()> {
    writeln!(out, "u,v,nx,ny,nz")?;
    let w = nmap.config().width();
    for (i, cell) in nmap.cells().iter().enumerate() {
        if let Some(n) = cell {
            writeln!(out, "{},{},{},{},{}", i % w, i / w, n.x, n.y, n.z)?;
        }
    }
    Ok(())
}
