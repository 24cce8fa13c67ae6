//! SVG export of eigenfunction contours over the model disk.

use std::io::Write;

use crate::domain::BoundaryTag;
use crate::error::Result;
use crate::mesh::TriMesh;

const SIZE: f64 = 800.0;

/// Draw the mesh boundary, the nodal set of `u`, and `levels` evenly
/// spaced contour lines between the extrema.
pub fn write_contour_svg<W: Write>(w: &mut W, mesh: &TriMesh, u: &[f64], levels: usize) -> Result<()> {
    let (mut xmin, mut xmax, mut ymin, mut ymax) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for v in &mesh.vertices {
        xmin = xmin.min(v[0]);
        xmax = xmax.max(v[0]);
        ymin = ymin.min(v[1]);
        ymax = ymax.max(v[1]);
    }
    let span = (xmax - xmin).max(ymax - ymin).max(1e-9);
    let pad = 0.05 * span;
    let scale = SIZE / (span + 2.0 * pad);
    let map = |p: [f64; 2]| -> (f64, f64) {
        ((p[0] - xmin + pad) * scale, SIZE - (p[1] - ymin + pad) * scale)
    };

    writeln!(
        w,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SIZE}\" height=\"{SIZE}\" viewBox=\"0 0 {SIZE} {SIZE}\">"
    )?;
    writeln!(w, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>")?;

    let umin = u.iter().cloned().fold(f64::MAX, f64::min);
    let umax = u.iter().cloned().fold(f64::MIN, f64::max);
    for k in 1..=levels {
        let level = umin + (umax - umin) * k as f64 / (levels + 1) as f64;
        let shifted: Vec<f64> = u.iter().map(|&x| x - level).collect();
        for line in super::nodal_set(mesh, &shifted) {
            write_polyline(w, &line, &map, "#9ecae1", 1.0)?;
        }
    }
    // nodal set on top
    for line in super::nodal_set(mesh, u) {
        write_polyline(w, &line, &map, "#d62728", 2.0)?;
    }
    // boundary edges, colored by condition
    for e in &mesh.boundary_edges {
        let color = match e.tag {
            BoundaryTag::Neumann => "#333333",
            BoundaryTag::Dirichlet => "#ff7f0e",
            BoundaryTag::Truncation => "#2ca02c",
        };
        let (x1, y1) = map(mesh.vertices[e.a]);
        let (x2, y2) = map(mesh.vertices[e.b]);
        writeln!(
            w,
            "<line x1=\"{x1:.2}\" y1=\"{y1:.2}\" x2=\"{x2:.2}\" y2=\"{y2:.2}\" stroke=\"{color}\" stroke-width=\"1.5\"/>"
        )?;
    }
    writeln!(w, "</svg>")?;
    Ok(())
}

fn write_polyline<W: Write>(
    w: &mut W,
    line: &[[f64; 2]],
    map: &dyn Fn([f64; 2]) -> (f64, f64),
    color: &str,
    width: f64,
) -> Result<()> {
    if line.len() < 2 {
        return Ok(());
    }
    let pts: Vec<String> = line
        .iter()
        .map(|&p| {
            let (x, y) = map(p);
            format!("{x:.2},{y:.2}")
        })
        .collect();
    writeln!(
        w,
        "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"{width}\"/>",
        pts.join(" ")
    )?;
    Ok(())
}
