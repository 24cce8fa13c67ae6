//! Graded planar triangulations of hyperbolic domains.
//!
//! Meshes live in Poincaré-disk coordinates. The local Euclidean size
//! target is h·(1 − |x|²)/2 so hyperbolic edge lengths are ≈ h
//! everywhere; geodesic boundary arcs are approximated by chords whose
//! sag stays below h². Metric disks get a structured polar mesh; all
//! other shapes go through Delaunay refinement.

pub mod delaunay;
mod structured;

use std::io::Write;

use crate::domain::{lambda_sq, BoundaryTag, DomainSpec};
use crate::error::{Error, Result};
use crate::geometry::hyp_distance_coords;

/// Degree-4 quadrature on the reference triangle: barycentric points and
/// weights (weights sum to 1).
pub const TRI_QUAD_DEGREE4: [([f64; 3], f64); 6] = [
    ([0.445948490915965, 0.445948490915965, 0.108103018168070], 0.223381589678011),
    ([0.445948490915965, 0.108103018168070, 0.445948490915965], 0.223381589678011),
    ([0.108103018168070, 0.445948490915965, 0.445948490915965], 0.223381589678011),
    ([0.091576213509771, 0.091576213509771, 0.816847572980459], 0.109951743655322),
    ([0.091576213509771, 0.816847572980459, 0.091576213509771], 0.109951743655322),
    ([0.816847572980459, 0.091576213509771, 0.091576213509771], 0.109951743655322),
];

/// Degree-7 rule (13 points), used to confirm the degree-4 rule is
/// converged for the mass assembly.
pub const TRI_QUAD_DEGREE7: [([f64; 3], f64); 13] = [
    ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], -0.149570044467670),
    ([0.260345966079038, 0.260345966079038, 0.479308067841924], 0.175615257433204),
    ([0.260345966079038, 0.479308067841924, 0.260345966079038], 0.175615257433204),
    ([0.479308067841924, 0.260345966079038, 0.260345966079038], 0.175615257433204),
    ([0.065130102902216, 0.065130102902216, 0.869739794195568], 0.053347235608839),
    ([0.065130102902216, 0.869739794195568, 0.065130102902216], 0.053347235608839),
    ([0.869739794195568, 0.065130102902216, 0.065130102902216], 0.053347235608839),
    ([0.312865496004875, 0.638444188569809, 0.048690315425316], 0.077113760890257),
    ([0.638444188569809, 0.048690315425316, 0.312865496004875], 0.077113760890257),
    ([0.048690315425316, 0.312865496004875, 0.638444188569809], 0.077113760890257),
    ([0.638444188569809, 0.312865496004875, 0.048690315425316], 0.077113760890257),
    ([0.312865496004875, 0.048690315425316, 0.638444188569809], 0.077113760890257),
    ([0.048690315425316, 0.638444188569809, 0.312865496004875], 0.077113760890257),
];

/// Local Euclidean element-size target at a model point.
pub fn local_size(h: f64, x: f64, y: f64) -> f64 {
    h * (1.0 - x * x - y * y) / 2.0
}

/// Tagged boundary edge of a triangulation.
#[derive(Clone, Copy, Debug)]
pub struct BoundaryEdge {
    pub a: usize,
    pub b: usize,
    pub tag: BoundaryTag,
}

/// Planar triangulation in model coordinates with tagged boundary edges.
#[derive(Clone, Debug)]
pub struct TriMesh {
    pub vertices: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary_edges: Vec<BoundaryEdge>,
    pub target_h: f64,
}

impl TriMesh {
    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Signed Euclidean area of triangle t (positive = CCW).
    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let pa = self.vertices[a];
        let pb = self.vertices[b];
        let pc = self.vertices[c];
        0.5 * ((pb[0] - pa[0]) * (pc[1] - pa[1]) - (pb[1] - pa[1]) * (pc[0] - pa[0]))
    }

    /// Smallest interior angle over all triangles, in degrees.
    pub fn min_angle_deg(&self) -> f64 {
        let mut worst = 180.0f64;
        for t in 0..self.triangles.len() {
            worst = worst.min(self.triangle_min_angle_deg(t));
        }
        worst
    }

    pub fn triangle_min_angle_deg(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let p = [self.vertices[a], self.vertices[b], self.vertices[c]];
        let mut worst = 180.0f64;
        for i in 0..3 {
            let u = p[(i + 1) % 3];
            let v = p[(i + 2) % 3];
            let o = p[i];
            let du = [u[0] - o[0], u[1] - o[1]];
            let dv = [v[0] - o[0], v[1] - o[1]];
            let dot = du[0] * dv[0] + du[1] * dv[1];
            let cross = du[0] * dv[1] - du[1] * dv[0];
            worst = worst.min(cross.abs().atan2(dot).to_degrees());
        }
        worst
    }

    /// Hyperbolic area by the degree-4 rule applied to λ².
    pub fn hyperbolic_area(&self) -> f64 {
        let mut total = 0.0;
        for t in 0..self.triangles.len() {
            total += self.triangle_hyperbolic_area(t);
        }
        total
    }

    pub fn triangle_hyperbolic_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let pa = self.vertices[a];
        let pb = self.vertices[b];
        let pc = self.vertices[c];
        let area = self.signed_area(t);
        let mut q = 0.0;
        for (bary, w) in TRI_QUAD_DEGREE4 {
            let x = bary[0] * pa[0] + bary[1] * pb[0] + bary[2] * pc[0];
            let y = bary[0] * pa[1] + bary[1] * pb[1] + bary[2] * pc[1];
            q += w * lambda_sq(x, y);
        }
        area * q
    }

    /// Hyperbolic length of the edge (a, b).
    pub fn edge_length_hyp(&self, a: usize, b: usize) -> f64 {
        hyp_distance_coords(self.vertices[a], self.vertices[b])
    }

    /// Mean hyperbolic length of the edges incident to each vertex: the
    /// local mesh length used for boundary collars.
    pub fn vertex_local_h(&self) -> Vec<f64> {
        let mut sum = vec![0.0; self.vertices.len()];
        let mut cnt = vec![0usize; self.vertices.len()];
        for tri in &self.triangles {
            for i in 0..3 {
                let a = tri[i];
                let b = tri[(i + 1) % 3];
                if a < b {
                    let l = self.edge_length_hyp(a, b);
                    sum[a] += l;
                    cnt[a] += 1;
                    sum[b] += l;
                    cnt[b] += 1;
                }
            }
        }
        sum.iter()
            .zip(cnt.iter())
            .map(|(&s, &c)| if c > 0 { s / c as f64 } else { self.target_h })
            .collect()
    }

    /// True for vertices lying on any boundary edge.
    pub fn boundary_vertex_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.vertices.len()];
        for e in &self.boundary_edges {
            mask[e.a] = true;
            mask[e.b] = true;
        }
        mask
    }

    pub fn vertex_neighbors(&self) -> Vec<Vec<usize>> {
        let mut nbrs = vec![Vec::new(); self.vertices.len()];
        for tri in &self.triangles {
            for i in 0..3 {
                let a = tri[i];
                let b = tri[(i + 1) % 3];
                if !nbrs[a].contains(&b) {
                    nbrs[a].push(b);
                }
                if !nbrs[b].contains(&a) {
                    nbrs[b].push(a);
                }
            }
        }
        nbrs
    }

    /// Structural invariants: positive orientation, conformity, every
    /// boundary edge in exactly one triangle, vertex norms < 1.
    pub fn validate(&self) -> Result<()> {
        for (i, v) in self.vertices.iter().enumerate() {
            if v[0] * v[0] + v[1] * v[1] >= 1.0 {
                return Err(Error::InvalidMesh(format!("vertex {i} outside the model disk")));
            }
        }
        let mut edge_use: std::collections::HashMap<(usize, usize), usize> =
            std::collections::HashMap::new();
        for t in 0..self.triangles.len() {
            if self.signed_area(t) <= 0.0 {
                return Err(Error::InvalidMesh(format!("triangle {t} is not CCW")));
            }
            let tri = self.triangles[t];
            for i in 0..3 {
                let a = tri[i].min(tri[(i + 1) % 3]);
                let b = tri[i].max(tri[(i + 1) % 3]);
                *edge_use.entry((a, b)).or_insert(0) += 1;
            }
        }
        for (&(a, b), &uses) in &edge_use {
            if uses > 2 {
                return Err(Error::InvalidMesh(format!("edge ({a}, {b}) used by {uses} triangles")));
            }
        }
        let mut tagged: std::collections::HashSet<(usize, usize)> = std::collections::HashSet::new();
        for e in &self.boundary_edges {
            let key = (e.a.min(e.b), e.a.max(e.b));
            if !tagged.insert(key) {
                return Err(Error::InvalidMesh(format!(
                    "boundary edge ({}, {}) tagged twice",
                    e.a, e.b
                )));
            }
            match edge_use.get(&key) {
                Some(1) => {}
                Some(n) => {
                    return Err(Error::InvalidMesh(format!(
                        "boundary edge ({}, {}) belongs to {n} triangles",
                        e.a, e.b
                    )))
                }
                None => {
                    return Err(Error::InvalidMesh(format!(
                        "boundary edge ({}, {}) missing from the triangulation",
                        e.a, e.b
                    )))
                }
            }
        }
        for (&key, &uses) in &edge_use {
            if uses == 1 && !tagged.contains(&key) {
                return Err(Error::InvalidMesh(format!(
                    "untagged boundary edge ({}, {})",
                    key.0, key.1
                )));
            }
        }
        Ok(())
    }

    /// Uniform (red) refinement: each triangle splits into four through
    /// its edge midpoints. Midpoints are straight chords, so the refined
    /// finite-element space nests inside the coarse one.
    pub fn refine_red(&self) -> TriMesh {
        let mut vertices = self.vertices.clone();
        let mut midpoint: std::collections::HashMap<(usize, usize), usize> =
            std::collections::HashMap::new();
        let mut mid = |a: usize, b: usize, vertices: &mut Vec<[f64; 2]>| -> usize {
            let key = (a.min(b), a.max(b));
            *midpoint.entry(key).or_insert_with(|| {
                let pa = vertices[a];
                let pb = vertices[b];
                vertices.push([(pa[0] + pb[0]) / 2.0, (pa[1] + pb[1]) / 2.0]);
                vertices.len() - 1
            })
        };
        let mut triangles = Vec::with_capacity(self.triangles.len() * 4);
        for &[a, b, c] in &self.triangles {
            let ab = mid(a, b, &mut vertices);
            let bc = mid(b, c, &mut vertices);
            let ca = mid(c, a, &mut vertices);
            triangles.push([a, ab, ca]);
            triangles.push([ab, b, bc]);
            triangles.push([ca, bc, c]);
            triangles.push([ab, bc, ca]);
        }
        let mut boundary_edges = Vec::with_capacity(self.boundary_edges.len() * 2);
        for e in &self.boundary_edges {
            let m = mid(e.a, e.b, &mut vertices);
            boundary_edges.push(BoundaryEdge { a: e.a, b: m, tag: e.tag });
            boundary_edges.push(BoundaryEdge { a: m, b: e.b, tag: e.tag });
        }
        TriMesh { vertices, triangles, boundary_edges, target_h: self.target_h / 2.0 }
    }

    /// Legacy ASCII VTK export. Triangles first, then boundary edges as
    /// line cells; CELL_DATA carries the boundary tag (-1 for interior
    /// triangles, 0 = Neumann, 1 = Dirichlet, 2 = truncation). Optional
    /// POINT_DATA fields follow.
    pub fn write_vtk<W: Write>(&self, w: &mut W, fields: &[(&str, &[f64])]) -> Result<()> {
        writeln!(w, "# vtk DataFile Version 3.0")?;
        writeln!(w, "hyperbolic mesh")?;
        writeln!(w, "ASCII")?;
        writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
        writeln!(w, "POINTS {} double", self.vertices.len())?;
        for v in &self.vertices {
            writeln!(w, "{:.17} {:.17} 0.0", v[0], v[1])?;
        }
        let ncells = self.triangles.len() + self.boundary_edges.len();
        let sz = self.triangles.len() * 4 + self.boundary_edges.len() * 3;
        writeln!(w, "CELLS {ncells} {sz}")?;
        for t in &self.triangles {
            writeln!(w, "3 {} {} {}", t[0], t[1], t[2])?;
        }
        for e in &self.boundary_edges {
            writeln!(w, "2 {} {}", e.a, e.b)?;
        }
        writeln!(w, "CELL_TYPES {ncells}")?;
        for _ in &self.triangles {
            writeln!(w, "5")?;
        }
        for _ in &self.boundary_edges {
            writeln!(w, "3")?;
        }
        writeln!(w, "CELL_DATA {ncells}")?;
        writeln!(w, "SCALARS boundary_tag int 1")?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for _ in &self.triangles {
            writeln!(w, "-1")?;
        }
        for e in &self.boundary_edges {
            let code = match e.tag {
                BoundaryTag::Neumann => 0,
                BoundaryTag::Dirichlet => 1,
                BoundaryTag::Truncation => 2,
            };
            writeln!(w, "{code}")?;
        }
        if !fields.is_empty() {
            writeln!(w, "POINT_DATA {}", self.vertices.len())?;
            for (name, data) in fields {
                writeln!(w, "SCALARS {name} double 1")?;
                writeln!(w, "LOOKUP_TABLE default")?;
                for x in *data {
                    writeln!(w, "{x:.17}")?;
                }
            }
        }
        Ok(())
    }
}

/// Mesh a domain spec at hyperbolic target size h. Metric disks use the
/// structured polar mesher; polygons and truncated ideal polygons use
/// Delaunay refinement with a 20° minimum-angle bound.
pub fn triangulate(spec: &DomainSpec, h: f64) -> Result<TriMesh> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::SpecValidation(format!("mesh size h must be positive, got {h}")));
    }
    spec.validate()?;
    let mesh = if let Some((center, radius)) = spec.shape().as_disk() {
        // a Dirichlet arc is parametrized along the centered boundary;
        // translated disks with markup go through the generic mesher
        if center.norm_sq() == 0.0 || spec.dirichlet_arc().is_none() {
            structured::disk_mesh(&center, radius, h, spec.dirichlet_arc())?
        } else {
            delaunay::refine_mesh(spec, h)?
        }
    } else {
        delaunay::refine_mesh(spec, h)?
    };
    mesh.validate()?;
    let min_angle = mesh.min_angle_deg();
    if min_angle < 20.0 - 1e-9 {
        return Err(Error::RefinementFailure(format!(
            "minimum angle {min_angle:.2}° below the 20° bound"
        )));
    }
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{regular_polygon, DomainSpec};

    #[test]
    fn disk_mesh_area_converges() {
        let spec = DomainSpec::disk(1.0).unwrap();
        let exact = 2.0 * std::f64::consts::PI * (1.0f64.cosh() - 1.0);
        let m1 = triangulate(&spec, 0.2).unwrap();
        let a1 = m1.hyperbolic_area();
        assert!((a1 - exact).abs() < 0.01 * exact, "area {a1} vs {exact}");
        let m2 = triangulate(&spec, 0.1).unwrap();
        let a2 = m2.hyperbolic_area();
        // second-order error decay, with slack
        assert!((a2 - exact).abs() < 0.4 * (a1 - exact).abs() + 1e-6);
    }

    #[test]
    fn threshold_disk_mesh_area_near_paper_bound() {
        let spec = DomainSpec::disk(2.52851).unwrap();
        let m = triangulate(&spec, 0.15).unwrap();
        let a = m.hyperbolic_area();
        assert!((a - 33.3467).abs() < 0.01 * 33.3467, "area = {a}");
    }

    #[test]
    fn tiny_triangle_near_origin_has_factor_four() {
        let s = 1e-4;
        let mesh = TriMesh {
            vertices: vec![[0.0, 0.0], [s, 0.0], [0.0, s]],
            triangles: vec![[0, 1, 2]],
            boundary_edges: vec![
                BoundaryEdge { a: 0, b: 1, tag: BoundaryTag::Neumann },
                BoundaryEdge { a: 1, b: 2, tag: BoundaryTag::Neumann },
                BoundaryEdge { a: 2, b: 0, tag: BoundaryTag::Neumann },
            ],
            target_h: s,
        };
        let euc = 0.5 * s * s;
        let hyp = mesh.hyperbolic_area();
        assert!((hyp - 4.0 * euc).abs() < 1e-3 * 4.0 * euc, "ratio = {}", hyp / euc);
    }

    #[test]
    fn triangle_mesh_matches_gauss_bonnet() {
        let verts = regular_polygon(3, 1.2).unwrap();
        let spec = DomainSpec::polygon(verts).unwrap();
        let exact = spec.shape().exact_area().unwrap();
        let m = triangulate(&spec, 0.1).unwrap();
        let a = m.hyperbolic_area();
        assert!((a - exact).abs() < 0.01 * exact, "area {a} vs {exact}");
    }

    #[test]
    fn ideal_triangle_truncation_area_increases_with_depth() {
        let m3 = triangulate(&DomainSpec::ideal_polygon(3, 3.0).unwrap(), 0.25).unwrap();
        let m5 = triangulate(&DomainSpec::ideal_polygon(3, 5.0).unwrap(), 0.25).unwrap();
        let a3 = m3.hyperbolic_area();
        let a5 = m5.hyperbolic_area();
        assert!(a5 > a3, "a3 = {a3}, a5 = {a5}");
        let full = std::f64::consts::PI;
        assert!((full - a3) / 3.0 <= 2.0 * (-3.0f64).exp() + 0.01 * full);
        assert!(a5 < full);
    }

    #[test]
    fn red_refinement_preserves_structure() {
        let spec = DomainSpec::disk(1.0).unwrap();
        let m = triangulate(&spec, 0.3).unwrap();
        let r = m.refine_red();
        assert_eq!(r.num_triangles(), 4 * m.num_triangles());
        r.validate().unwrap();
        // nested: coarse vertices are a prefix
        assert_eq!(&r.vertices[..m.num_vertices()], &m.vertices[..]);
    }

    #[test]
    fn dirichlet_run_is_contiguous_on_disk() {
        let spec = DomainSpec::disk(2.0).unwrap().with_dirichlet_arc(1.0, 4.0);
        let m = triangulate(&spec, 0.2).unwrap();
        let d: Vec<&BoundaryEdge> =
            m.boundary_edges.iter().filter(|e| e.tag == BoundaryTag::Dirichlet).collect();
        assert!(!d.is_empty());
        // endpoints used exactly once each except the chain interior
        let mut count: std::collections::HashMap<usize, usize> = std::collections::HashMap::new();
        for e in &d {
            *count.entry(e.a).or_insert(0) += 1;
            *count.entry(e.b).or_insert(0) += 1;
        }
        let endpoints = count.values().filter(|&&c| c == 1).count();
        assert_eq!(endpoints, 2, "dirichlet edges do not form a single chain");
        let total: f64 = d.iter().map(|e| m.edge_length_hyp(e.a, e.b)).sum();
        assert!((total - 3.0).abs() < 0.05, "dirichlet chain length = {total}");
    }

    #[test]
    fn vtk_export_roundtrips_header() {
        let spec = DomainSpec::disk(0.8).unwrap();
        let m = triangulate(&spec, 0.3).unwrap();
        let mut buf = Vec::new();
        let u = vec![1.0; m.num_vertices()];
        m.write_vtk(&mut buf, &[("u", &u)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# vtk DataFile Version 3.0"));
        assert!(text.contains("CELL_DATA"));
        assert!(text.contains("SCALARS boundary_tag int 1"));
        assert!(text.contains("SCALARS u double 1"));
    }

    #[test]
    fn rejects_nonpositive_h() {
        let spec = DomainSpec::disk(1.0).unwrap();
        assert!(triangulate(&spec, 0.0).is_err());
        assert!(triangulate(&spec, -0.1).is_err());
    }
}
