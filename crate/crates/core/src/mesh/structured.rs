//! Structured polar meshes for metric disks.
//!
//! Rings sit at uniform hyperbolic radius steps, each subdivided so
//! segment lengths match the step; consecutive rings are stitched by an
//! angular merge. This keeps disk spectra free of unstructured-mesh
//! noise and is deterministic for reproducible runs.

use crate::domain::{BoundaryTag, DirichletArc};
use crate::error::Result;
use crate::geometry::{DiskPoint, MobiusIsometry};
use crate::mesh::{BoundaryEdge, TriMesh};

const TAU: f64 = 2.0 * std::f64::consts::PI;

pub(crate) fn disk_mesh(
    center: &DiskPoint,
    radius: f64,
    h: f64,
    arc: Option<DirichletArc>,
) -> Result<TriMesh> {
    let m = ((radius / h).round() as usize).max(1);
    let dr = radius / m as f64;

    let mut vertices: Vec<[f64; 2]> = vec![[0.0, 0.0]];
    let mut ring_start: Vec<usize> = Vec::with_capacity(m + 1);
    let mut ring_angles: Vec<Vec<f64>> = Vec::with_capacity(m + 1);

    let mut prev_count = 1usize;
    for k in 1..=m {
        let r = k as f64 * dr;
        let tau = (r / 2.0).tanh();
        let ideal = (TAU * r.sinh() / dr).ceil() as usize;
        let count = ideal.max(6).max(prev_count);
        prev_count = count;
        let angles: Vec<f64> = if k == m {
            boundary_angles(radius, count, arc)
        } else {
            (0..count).map(|j| TAU * j as f64 / count as f64).collect()
        };
        ring_start.push(vertices.len());
        for &th in &angles {
            vertices.push([tau * th.cos(), tau * th.sin()]);
        }
        ring_angles.push(angles);
    }

    let mut triangles: Vec<[usize; 3]> = Vec::new();
    // center fan
    {
        let start = ring_start[0];
        let n = ring_angles[0].len();
        for j in 0..n {
            triangles.push([0, start + j, start + (j + 1) % n]);
        }
    }
    for k in 1..m {
        stitch_rings(
            &mut triangles,
            ring_start[k - 1],
            &ring_angles[k - 1],
            ring_start[k],
            &ring_angles[k],
        );
    }

    // orientation fix-up
    for tri in &mut triangles {
        let pa = vertices[tri[0]];
        let pb = vertices[tri[1]];
        let pc = vertices[tri[2]];
        let  s = (pb[0] - pa[0]) * (pc[1] - pa[1]) - (pb[1] - pa[1]) * (pc[0] - pa[0]);
        if s < 0.0 {
            tri.swap(1, 2);
        }
    }

    // boundary edges on the outer ring
    let mut boundary_edges = Vec::new();
    {
        let start = ring_start[m - 1];
        let angles = &ring_angles[m - 1];
        let n = angles.len();
        let sinh_r = radius.sinh();
        for j in 0..n {
            let th_a = angles[j];
            let th_b = if j + 1 == n { angles[0] + TAU } else { angles[j + 1] };
            let mid_s = 0.5 * (th_a + th_b) * sinh_r;
            let tag = match arc {
                Some(a) if mid_s >= a.start && mid_s <= a.end => BoundaryTag::Dirichlet,
                _ => BoundaryTag::Neumann,
            };
            boundary_edges.push(BoundaryEdge { a: start + j, b: start + (j + 1) % n, tag });
        }
    }

    if center.norm_sq() > 0.0 {
        let g = MobiusIsometry::translate_from_origin(center)?;
        for v in &mut vertices {
            let p = DiskPoint::new(v[0], v[1]).expect("ring vertex interior");
            let q = g.apply(&p);
            *v = [q.x(), q.y()];
        }
    }

    Ok(TriMesh { vertices, triangles, boundary_edges, target_h: h })
}

/// Outer-ring angles; when a Dirichlet arc is present its endpoints
/// become exact vertices so the tagged edges form a contiguous chain
/// covering exactly [start, end] in arclength.
fn boundary_angles(radius: f64, count: usize, arc: Option<DirichletArc>) -> Vec<f64> {
    let Some(a) = arc else {
        return (0..count).map(|j| TAU * j as f64 / count as f64).collect();
    };
    let sinh_r = radius.sinh();
    let th0 = a.start / sinh_r;
    let th1 = a.end / sinh_r;
    let base = TAU / count as f64;
    let mut angles = Vec::with_capacity(count + 2);
    let seg1 = (((th1 - th0) / base).ceil() as usize).max(1);
    for j in 0..seg1 {
        angles.push(th0 + (th1 - th0) * j as f64 / seg1 as f64);
    }
    let rest = TAU - (th1 - th0);
    let seg2 = ((rest / base).ceil() as usize).max(1);
    for j in 0..seg2 {
        angles.push(th1 + rest * j as f64 / seg2 as f64);
    }
    // normalize into [0, 2π) and sort ascending for the stitcher
    for th in &mut angles {
        *th = th.rem_euclid(TAU);
    }
    angles.sort_by(|x, y| x.partial_cmp(y).unwrap());
    angles.dedup_by(|x, y| (*x - *y).abs() < 1e-13);
    angles
}

/// Triangulate the band between two concentric rings by advancing the
/// pointer whose next angle is smaller. Both angle lists must be
/// ascending within [0, 2π); the band gets exactly na + nb triangles.
fn stitch_rings(
    triangles: &mut Vec<[usize; 3]>,
    inner_start: usize,
    inner_angles: &[f64],
    outer_start: usize,
    outer_angles: &[f64],
) {
    let na = inner_angles.len();
    let nb = outer_angles.len();
    // outer pointer starts at the vertex closest to inner_angles[0]
    let mut j0 = 0;
    let mut best = f64::MAX;
    for (j, &th) in outer_angles.iter().enumerate() {
        let mut d = (th - inner_angles[0]).rem_euclid(TAU);
        if d > TAU / 2.0 {
            d = TAU - d;
        }
        if d < best {
            best = d;
            j0 = j;
        }
    }
    // unwrapped angle of the s-th step along each ring
    let a_un = |s: usize| inner_angles[s % na] + TAU * (s / na) as f64;
    let b0 = {
        let mut d = (outer_angles[j0] - inner_angles[0]).rem_euclid(TAU);
        if d > TAU / 2.0 {
            d -= TAU;
        }
        inner_angles[0] + d
    };
    let b_un = |s: usize| {
        let idx = (j0 + s) % nb;
        b0 + outer_angles[idx] - outer_angles[j0] + TAU * ((j0 + s) / nb) as f64
    };
    let vert_a = |s: usize| inner_start + (s % na);
    let vert_b = |s: usize| outer_start + ((j0 + s) % nb);

    let mut sa = 0usize;
    let mut sb = 0usize;
    for _ in 0..(na + nb) {
        let advance_inner = sa < na && (sb == nb || a_un(sa + 1) <= b_un(sb + 1));
        if advance_inner {
            triangles.push([vert_a(sa), vert_b(sb), vert_a(sa + 1)]);
            sa += 1;
        } else {
            triangles.push([vert_a(sa), vert_b(sb), vert_b(sb + 1)]);
            sb += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stitch_covers_band_without_gaps() {
        // equal rings: band of 2n triangles
        let inner: Vec<f64> = (0..8).map(|j| TAU * j as f64 / 8.0).collect();
        let outer = inner.clone();
        let mut tris = Vec::new();
        stitch_rings(&mut tris, 0, &inner, 8, &outer);
        assert_eq!(tris.len(), 16);
    }

    #[test]
    fn stitch_handles_unequal_counts() {
        let inner: Vec<f64> = (0..7).map(|j| TAU * j as f64 / 7.0).collect();
        let outer: Vec<f64> = (0..13).map(|j| TAU * j as f64 / 13.0).collect();
        let mut tris = Vec::new();
        stitch_rings(&mut tris, 0, &inner, 7, &outer);
        assert_eq!(tris.len(), 20);
    }
}
