//! P1 finite-element assembly for the Laplace–Beltrami operator in the
//! disk model.
//!
//! In two dimensions the Dirichlet energy is conformally invariant, so
//! the stiffness matrix is assembled with no metric factor at all — it
//! equals the flat P1 stiffness on the planar mesh. The geometry enters
//! exclusively through the mass matrix, whose entries integrate
//! φᵢ φⱼ λ²(x) with a degree-4 rule.

use std::io::Write;

use crate::domain::{lambda_sq, BoundaryTag};
use crate::error::{Error, Result};
use crate::mesh::{TriMesh, TRI_QUAD_DEGREE4, TRI_QUAD_DEGREE7};

/// Symmetric sparse matrix storing the lower triangle (diagonal
/// included) in CSR form.
#[derive(Clone, Debug)]
pub struct SymmetricSparseMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<f64>,
}

impl SymmetricSparseMatrix {
    /// Accumulate (i, j, v) triplets; entries above the diagonal are
    /// mirrored into the lower triangle.
    pub fn from_triplets(dim: usize, triplets: impl IntoIterator<Item = (usize, usize, f64)>) -> Self {
        let mut per_row: Vec<Vec<(usize, f64)>> = vec![Vec::new(); dim];
        for (i, j, v) in triplets {
            let (r, c) = if i >= j { (i, j) } else { (j, i) };
            per_row[r].push((c, v));
        }
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut col_idx = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for row in &mut per_row {
            row.sort_unstable_by_key(|&(c, _)| c);
            let mut k = 0;
            while k < row.len() {
                let c = row[k].0;
                let mut v = 0.0;
                while k < row.len() && row[k].0 == c {
                    v += row[k].1;
                    k += 1;
                }
                col_idx.push(c);
                vals.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        Self { dim, row_ptr, col_idx, vals }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz_lower(&self) -> usize {
        self.vals.len()
    }

    /// Entries of the stored lower triangle.
    pub fn lower_entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.dim).flat_map(move |i| {
            (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (i, self.col_idx[k], self.vals[k]))
        })
    }

    /// y = A·x using the symmetric structure.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        y.fill(0.0);
        for i in 0..self.dim {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[k];
                let v = self.vals[k];
                y[i] += v * x[j];
                if i != j {
                    y[j] += v * x[i];
                }
            }
        }
    }

    /// xᵀ A x.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.dim {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[k];
                let v = self.vals[k];
                acc += if i == j { v * x[i] * x[i] } else { 2.0 * v * x[i] * x[j] };
            }
        }
        acc
    }

    /// xᵀ A y.
    pub fn bilinear_form(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.dim {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[k];
                let v = self.vals[k];
                acc += v * x[i] * y[j];
                if i != j {
                    acc += v * x[j] * y[i];
                }
            }
        }
        acc
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.dim];
        for i in 0..self.dim {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                if self.col_idx[k] == i {
                    d[i] = self.vals[k];
                }
            }
        }
        d
    }

    pub fn trace(&self) -> f64 {
        self.diagonal().iter().sum()
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.dim, self.dim);
        for (i, j, v) in self.lower_entries() {
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
        m
    }

    /// Keep only the rows/columns listed in `keep` (ascending).
    pub fn restrict(&self, keep: &[usize]) -> Self {
        let mut index_of = vec![usize::MAX; self.dim];
        for (new, &old) in keep.iter().enumerate() {
            index_of[old] = new;
        }
        let triplets = self.lower_entries().filter_map(|(i, j, v)| {
            let (ni, nj) = (index_of[i], index_of[j]);
            (ni != usize::MAX && nj != usize::MAX).then_some((ni, nj, v))
        });
        Self::from_triplets(keep.len(), triplets)
    }

    /// Matrix Market coordinate output (symmetric) for debugging.
    pub fn write_matrix_market<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "%%MatrixMarket matrix coordinate real symmetric")?;
        writeln!(w, "{} {} {}", self.dim, self.dim, self.nnz_lower())?;
        for (i, j, v) in self.lower_entries() {
            writeln!(w, "{} {} {:.17e}", i + 1, j + 1, v)?;
        }
        Ok(())
    }
}

/// Vertex-to-equation map separating Dirichlet-constrained vertices from
/// free ones. Pure-Neumann meshes have an empty constrained set.
#[derive(Clone, Debug)]
pub struct DofMap {
    constrained: Vec<bool>,
    free: Vec<usize>,
}

impl DofMap {
    pub fn from_mesh(mesh: &TriMesh) -> Self {
        let mut constrained = vec![false; mesh.num_vertices()];
        for e in &mesh.boundary_edges {
            if e.tag == BoundaryTag::Dirichlet {
                constrained[e.a] = true;
                constrained[e.b] = true;
            }
        }
        let free = (0..mesh.num_vertices()).filter(|&v| !constrained[v]).collect();
        Self { constrained, free }
    }

    pub fn num_vertices(&self) -> usize {
        self.constrained.len()
    }

    pub fn num_free(&self) -> usize {
        self.free.len()
    }

    pub fn num_constrained(&self) -> usize {
        self.constrained.len() - self.free.len()
    }

    pub fn free_indices(&self) -> &[usize] {
        &self.free
    }

    pub fn is_constrained(&self, v: usize) -> bool {
        self.constrained[v]
    }

    /// Scatter a free-dof vector back to all vertices, zero on the
    /// constrained set.
    pub fn expand(&self, free_values: &[f64]) -> Vec<f64> {
        assert_eq!(free_values.len(), self.free.len());
        let mut full = vec![0.0; self.constrained.len()];
        for (k, &v) in self.free.iter().enumerate() {
            full[v] = free_values[k];
        }
        full
    }

    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.free.iter().map(|&v| full[v]).collect()
    }
}

fn triangle_geometry(mesh: &TriMesh, t: usize) -> Result<([[f64; 2]; 3], f64)> {
    let [a, b, c] = mesh.triangles[t];
    let p = [mesh.vertices[a], mesh.vertices[b], mesh.vertices[c]];
    let area = 0.5
        * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[1][1] - p[0][1]) * (p[2][0] - p[0][0]));
    if !(area > 1e-30) {
        return Err(Error::DegenerateTriangle(t, area));
    }
    Ok((p, area))
}

/// Flat P1 stiffness matrix; by conformal invariance this is the
/// hyperbolic Dirichlet form exactly. Row sums vanish since constants
/// carry no energy.
pub fn assemble_stiffness(mesh: &TriMesh) -> Result<SymmetricSparseMatrix> {
    let mut triplets = Vec::with_capacity(mesh.num_triangles() * 6);
    for t in 0..mesh.num_triangles() {
        let (p, area) = triangle_geometry(mesh, t)?;
        // gradient of basis i: (b_i, c_i) / (2A)
        let b = [p[1][1] - p[2][1], p[2][1] - p[0][1], p[0][1] - p[1][1]];
        let c = [p[2][0] - p[1][0], p[0][0] - p[2][0], p[1][0] - p[0][0]];
        let tri = mesh.triangles[t];
        for i in 0..3 {
            for j in 0..=i {
                let v = (b[i] * b[j] + c[i] * c[j]) / (4.0 * area);
                triplets.push((tri[i], tri[j], v));
            }
        }
    }
    Ok(SymmetricSparseMatrix::from_triplets(mesh.num_vertices(), triplets))
}

fn assemble_mass_rule(
    mesh: &TriMesh,
    rule: &[([f64; 3], f64)],
) -> Result<SymmetricSparseMatrix> {
    let mut triplets = Vec::with_capacity(mesh.num_triangles() * 6);
    for t in 0..mesh.num_triangles() {
        let (p, area) = triangle_geometry(mesh, t)?;
        let tri = mesh.triangles[t];
        let mut local = [[0.0f64; 3]; 3];
        for &(bary, w) in rule {
            let x = bary[0] * p[0][0] + bary[1] * p[1][0] + bary[2] * p[2][0];
            let y = bary[0] * p[0][1] + bary[1] * p[1][1] + bary[2] * p[2][1];
            let wl = w * lambda_sq(x, y);
            for i in 0..3 {
                for j in 0..=i {
                    local[i][j] += wl * bary[i] * bary[j];
                }
            }
        }
        for i in 0..3 {
            for j in 0..=i {
                triplets.push((tri[i], tri[j], area * local[i][j]));
            }
        }
    }
    Ok(SymmetricSparseMatrix::from_triplets(mesh.num_vertices(), triplets))
}

/// Mass matrix ∫ φᵢ φⱼ λ² with the degree-4 (6-point) rule.
pub fn assemble_mass(mesh: &TriMesh) -> Result<SymmetricSparseMatrix> {
    assemble_mass_rule(mesh, &TRI_QUAD_DEGREE4)
}

/// Mass matrix with the degree-7 (13-point) rule; used to verify the
/// degree-4 rule is converged.
pub fn assemble_mass_degree7(mesh: &TriMesh) -> Result<SymmetricSparseMatrix> {
    assemble_mass_rule(mesh, &TRI_QUAD_DEGREE7)
}

/// Restrict (K, M) to the free dofs. Identity on pure-Neumann problems.
pub fn apply_dirichlet(
    stiffness: &SymmetricSparseMatrix,
    mass: &SymmetricSparseMatrix,
    dofs: &DofMap,
) -> Result<(SymmetricSparseMatrix, SymmetricSparseMatrix)> {
    if dofs.num_free() == 0 {
        return Err(Error::AllConstrained);
    }
    if dofs.num_constrained() == 0 {
        return Ok((stiffness.clone(), mass.clone()));
    }
    Ok((stiffness.restrict(dofs.free_indices()), mass.restrict(dofs.free_indices())))
}

/// (uᵀKu)/(uᵀMu).
pub fn rayleigh_quotient(
    stiffness: &SymmetricSparseMatrix,
    mass: &SymmetricSparseMatrix,
    u: &[f64],
) -> Result<f64> {
    let m = mass.quadratic_form(u);
    if m <= 0.0 || u.iter().all(|&x| x == 0.0) {
        return Err(Error::ZeroVector);
    }
    Ok(stiffness.quadratic_form(u) / m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::DomainSpec;
    use crate::mesh::{triangulate, BoundaryEdge};

    fn unit_right_triangle() -> TriMesh {
        TriMesh {
            vertices: vec![[0.0, 0.0], [0.4, 0.0], [0.0, 0.4]],
            triangles: vec![[0, 1, 2]],
            boundary_edges: vec![
                BoundaryEdge { a: 0, b: 1, tag: BoundaryTag::Neumann },
                BoundaryEdge { a: 1, b: 2, tag: BoundaryTag::Neumann },
                BoundaryEdge { a: 2, b: 0, tag: BoundaryTag::Neumann },
            ],
            target_h: 0.4,
        }
    }

    #[test]
    fn local_stiffness_matches_hand_computation() {
        // right triangle: K = 1/2 [[2,-1,-1],[-1,1,0],[-1,0,1]],
        // independent of scale
        let mesh = unit_right_triangle();
        let k = assemble_stiffness(&mesh).unwrap().to_dense();
        let expect = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((k[(i, j)] - expect[i][j]).abs() < 1e-14, "K[{i}][{j}] = {}", k[(i, j)]);
            }
        }
    }

    #[test]
    fn stiffness_kills_constants() {
        let spec = DomainSpec::disk(1.0).unwrap();
        let mesh = triangulate(&spec, 0.2).unwrap();
        let k = assemble_stiffness(&mesh).unwrap();
        let ones = vec![1.0; mesh.num_vertices()];
        let mut y = vec![0.0; mesh.num_vertices()];
        k.matvec(&ones, &mut y);
        let worst = y.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        assert!(worst < 1e-12, "max |K·1| = {worst}");
    }

    #[test]
    fn mass_partition_of_unity_gives_area() {
        let spec = DomainSpec::disk(1.0).unwrap();
        let mesh = triangulate(&spec, 0.2).unwrap();
        let m = assemble_mass(&mesh).unwrap();
        let ones = vec![1.0; mesh.num_vertices()];
        let total = m.quadratic_form(&ones);
        let area = mesh.hyperbolic_area();
        assert!((total - area).abs() < 1e-12 * area.max(1.0), "1ᵀM1 = {total}, area = {area}");
        let exact = 2.0 * std::f64::consts::PI * (1.0f64.cosh() - 1.0);
        assert!((total - exact).abs() < 0.01 * exact);
        for d in m.diagonal() {
            assert!(d > 0.0);
        }
    }

    #[test]
    fn shrinking_origin_element_mass_approaches_four_times_euclidean() {
        for s in [1e-2, 1e-3] {
            let mesh = TriMesh {
                vertices: vec![[0.0, 0.0], [s, 0.0], [0.0, s]],
                triangles: vec![[0, 1, 2]],
                boundary_edges: vec![],
                target_h: s,
            };
            let m = assemble_mass(&mesh).unwrap();
            let ones = vec![1.0; 3];
            let total = m.quadratic_form(&ones);
            let euc = 0.5 * s * s;
            assert!((total / euc - 4.0).abs() < 10.0 * s, "ratio = {}", total / euc);
        }
    }

    #[test]
    fn hyperbolic_energy_of_linear_function_is_euclidean() {
        // lambda factors cancel identically: compare K-form of u = x
        // with the Euclidean Dirichlet integral |grad u|^2 * area
        let mesh = unit_right_triangle();
        let k = assemble_stiffness(&mesh).unwrap();
        let u: Vec<f64> = mesh.vertices.iter().map(|v| v[0]).collect();
        let energy = k.quadratic_form(&u);
        let area = 0.5 * 0.4 * 0.4;
        assert!((energy - area).abs() < 1e-15, "energy = {energy}");
    }

    #[test]
    fn dirichlet_restriction_drops_constrained_rows() {
        let spec = DomainSpec::disk(1.0).unwrap().with_dirichlet_arc(0.0, 2.0);
        let mesh = triangulate(&spec, 0.25).unwrap();
        let dofs = DofMap::from_mesh(&mesh);
        assert!(dofs.num_constrained() > 0);
        let k = assemble_stiffness(&mesh).unwrap();
        let m = assemble_mass(&mesh).unwrap();
        let (kf, mf) = apply_dirichlet(&k, &m, &dofs).unwrap();
        assert_eq!(kf.dim(), dofs.num_free());
        assert_eq!(mf.dim(), dofs.num_free());
        // expand/restrict round-trip
        let x: Vec<f64> = (0..dofs.num_free()).map(|i| i as f64).collect();
        let full = dofs.expand(&x);
        assert_eq!(dofs.restrict(&full), x);
    }

    #[test]
    fn rayleigh_quotient_constant_is_zero() {
        let spec = DomainSpec::disk(1.0).unwrap();
        let mesh = triangulate(&spec, 0.3).unwrap();
        let k = assemble_stiffness(&mesh).unwrap();
        let m = assemble_mass(&mesh).unwrap();
        let u = vec![3.0; mesh.num_vertices()];
        let q = rayleigh_quotient(&k, &m, &u).unwrap();
        assert!(q.abs() < 1e-12, "q = {q}");
        let zero = vec![0.0; mesh.num_vertices()];
        assert!(matches!(rayleigh_quotient(&k, &m, &zero), Err(Error::ZeroVector)));
    }

    #[test]
    fn matrix_market_dump_has_header() {
        let mesh = unit_right_triangle();
        let k = assemble_stiffness(&mesh).unwrap();
        let mut buf = Vec::new();
        k.write_matrix_market(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("%%MatrixMarket matrix coordinate real symmetric"));
    }
}
