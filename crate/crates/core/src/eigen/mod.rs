//! Solvers for the generalized symmetric eigenproblem K u = μ M u.
//!
//! Two interchangeable strategies sit behind the [`EigenStrategy`]
//! trait: a dense solve (Cholesky reduction to a standard symmetric
//! problem) and shift-invert Lanczos with full reorthogonalization on a
//! skyline factorization. They are registered by name in a
//! [`SolverRegistry`]; `auto` dispatches on problem size with the dense
//! path as the small-scale oracle for the iterative one.

mod lanczos;
mod skyline;

pub use skyline::SkylineCholesky;

use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::fem::{apply_dirichlet, assemble_mass, assemble_stiffness, DofMap, SymmetricSparseMatrix};
use crate::mesh::triangulate;

/// Threshold (in free dofs) below which `auto` uses the dense path.
pub const DENSE_LIMIT: usize = 2000;

/// Ascending eigenvalues with M-orthonormal eigenvectors and certified
/// residuals ‖Ku − μMu‖₂ / ‖u‖_M.
#[derive(Clone, Debug)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
}

impl EigenPairs {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// A solver for K u = μ M u, K PSD and M PD.
pub trait EigenStrategy: Send + Sync {
    /// Registry key.
    fn name(&self) -> &'static str;

    fn solve(
        &self,
        stiffness: &SymmetricSparseMatrix,
        mass: &SymmetricSparseMatrix,
        count: usize,
        tol: f64,
    ) -> Result<EigenPairs>;
}

fn check_problem(
    stiffness: &SymmetricSparseMatrix,
    mass: &SymmetricSparseMatrix,
    count: usize,
) -> Result<()> {
    let dim = stiffness.dim();
    if mass.dim() != dim {
        return Err(Error::InvalidConfig(format!(
            "matrix dimensions differ: {dim} vs {}",
            mass.dim()
        )));
    }
    if count == 0 || count > dim / 4 {
        return Err(Error::InvalidConfig(format!(
            "requested {count} pairs from a dimension-{dim} problem (need 1 <= k <= dim/4)"
        )));
    }
    Ok(())
}

/// Normalize, order ascending, fix signs, and attach true residuals.
fn finalize_pairs(
    stiffness: &SymmetricSparseMatrix,
    mass: &SymmetricSparseMatrix,
    mut values: Vec<f64>,
    mut vectors: Vec<Vec<f64>>,
) -> EigenPairs {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    values = order.iter().map(|&i| values[i]).collect();
    vectors = order.iter().map(|&i| std::mem::take(&mut vectors[i])).collect();
    let dim = stiffness.dim();
    let mut residuals = Vec::with_capacity(values.len());
    let mut ku = vec![0.0; dim];
    let mut mu = vec![0.0; dim];
    for (val, vec) in values.iter().zip(vectors.iter_mut()) {
        // M-normalize and canonicalize the sign on the largest component
        let norm = mass.quadratic_form(vec).sqrt();
        if norm > 0.0 {
            for x in vec.iter_mut() {
                *x /= norm;
            }
        }
        let lead = vec
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
            .map(|(i, _)| i)
            .unwrap_or(0);
        if vec[lead] < 0.0 {
            for x in vec.iter_mut() {
                *x = -*x;
            }
        }
        stiffness.matvec(vec, &mut ku);
        mass.matvec(vec, &mut mu);
        let mut r2 = 0.0;
        for i in 0..dim {
            let r = ku[i] - val * mu[i];
            r2 += r * r;
        }
        residuals.push(r2.sqrt());
    }
    EigenPairs { values, vectors, residuals }
}

/// Dense path: M = LLᵀ, then a standard symmetric eigensolve of
/// L⁻¹ K L⁻ᵀ.
pub struct DenseSolver;

impl EigenStrategy for DenseSolver {
    fn name(&self) -> &'static str {
        "dense"
    }

    fn solve(
        &self,
        stiffness: &SymmetricSparseMatrix,
        mass: &SymmetricSparseMatrix,
        count: usize,
        tol: f64,
    ) -> Result<EigenPairs> {
        check_problem(stiffness, mass, count)?;
        let dim = stiffness.dim();
        let kd = stiffness.to_dense();
        let md = mass.to_dense();
        let chol = md
            .cholesky()
            .ok_or_else(|| Error::FactorizationFailure("mass matrix not positive definite".into()))?;
        let l = chol.l();
        let t1 = l
            .clone()
            .solve_lower_triangular(&kd)
            .ok_or_else(|| Error::FactorizationFailure("singular Cholesky factor".into()))?;
        let t2 = l
            .clone()
            .solve_lower_triangular(&t1.transpose())
            .ok_or_else(|| Error::FactorizationFailure("singular Cholesky factor".into()))?;
        let a = (&t2 + t2.transpose()) * 0.5;
        let eig = nalgebra::SymmetricEigen::new(a);
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());
        let lt = l.transpose();
        let mut values = Vec::with_capacity(count);
        let mut vectors = Vec::with_capacity(count);
        for &idx in order.iter().take(count) {
            values.push(eig.eigenvalues[idx]);
            let y = eig.eigenvectors.column(idx).into_owned();
            let u = lt
                .clone()
                .solve_upper_triangular(&y)
                .ok_or_else(|| Error::FactorizationFailure("back-substitution failed".into()))?;
            vectors.push(u.as_slice().to_vec());
        }
        let pairs = finalize_pairs(stiffness, mass, values, vectors);
        let worst = pairs.residuals.iter().cloned().fold(0.0, f64::max);
        if worst > tol.max(1e-9) * 100.0 {
            return Err(Error::NonConvergence { tol, achieved: worst });
        }
        Ok(pairs)
    }
}

/// Shift-invert Lanczos at a small negative shift, which keeps the
/// factorized operator K − σM positive definite even though the pure
/// Neumann stiffness is singular.
pub struct ShiftInvertLanczos;

impl EigenStrategy for ShiftInvertLanczos {
    fn name(&self) -> &'static str {
        "lanczos"
    }

    fn solve(
        &self,
        stiffness: &SymmetricSparseMatrix,
        mass: &SymmetricSparseMatrix,
        count: usize,
        tol: f64,
    ) -> Result<EigenPairs> {
        check_problem(stiffness, mass, count)?;
        let (values, vectors) = lanczos::shift_invert(stiffness, mass, count, tol)?;
        let pairs = finalize_pairs(stiffness, mass, values, vectors);
        let worst = pairs.residuals.iter().cloned().fold(0.0, f64::max);
        if worst > tol {
            return Err(Error::NonConvergence { tol, achieved: worst });
        }
        Ok(pairs)
    }
}

/// Size-dispatching strategy: dense up to [`DENSE_LIMIT`] dofs, Lanczos
/// beyond.
pub struct AutoSolver;

impl EigenStrategy for AutoSolver {
    fn name(&self) -> &'static str {
        "auto"
    }

    fn solve(
        &self,
        stiffness: &SymmetricSparseMatrix,
        mass: &SymmetricSparseMatrix,
        count: usize,
        tol: f64,
    ) -> Result<EigenPairs> {
        if stiffness.dim() <= DENSE_LIMIT {
            DenseSolver.solve(stiffness, mass, count, tol)
        } else {
            ShiftInvertLanczos.solve(stiffness, mass, count, tol)
        }
    }
}

/// Name-indexed strategy registry.
pub struct SolverRegistry {
    solvers: Vec<Box<dyn EigenStrategy>>,
}

impl Default for SolverRegistry {
    fn default() -> Self {
        Self::with_builtin()
    }
}

impl SolverRegistry {
    pub fn with_builtin() -> Self {
        Self {
            solvers: vec![Box::new(AutoSolver), Box::new(DenseSolver), Box::new(ShiftInvertLanczos)],
        }
    }

    pub fn register(&mut self, solver: Box<dyn EigenStrategy>) {
        self.solvers.retain(|s| s.name() != solver.name());
        self.solvers.push(solver);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.solvers.iter().map(|s| s.name()).collect()
    }

    pub fn get(&self, name: &str) -> Result<&dyn EigenStrategy> {
        self.solvers
            .iter()
            .find(|s| s.name() == name)
            .map(|s| s.as_ref())
            .ok_or_else(|| Error::UnknownStrategy {
                name: name.to_string(),
                available: self.names().join(", "),
            })
    }
}

/// k smallest eigenpairs with the default (`auto`) strategy.
pub fn smallest_eigenpairs(
    stiffness: &SymmetricSparseMatrix,
    mass: &SymmetricSparseMatrix,
    count: usize,
    tol: f64,
) -> Result<EigenPairs> {
    AutoSolver.solve(stiffness, mass, count, tol)
}

/// One refinement level of a convergence study.
#[derive(Clone, Debug, serde::Serialize)]
pub struct ConvergenceLevel {
    pub h: f64,
    pub free_dofs: usize,
    pub eigenvalue: f64,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct ConvergenceStudy {
    pub levels: Vec<ConvergenceLevel>,
    /// Order-2 Richardson limit from the two finest levels.
    pub extrapolated: f64,
    /// Empirical convergence order from the three finest levels.
    pub order: f64,
}

/// Track the lowest nonconstant eigenvalue (second for Neumann, first
/// for mixed problems) across a sequence of mesh sizes and extrapolate.
pub fn eigenvalue_convergence_study(
    spec: &DomainSpec,
    hs: &[f64],
    tol: f64,
) -> Result<ConvergenceStudy> {
    if hs.len() < 3 {
        return Err(Error::InvalidConfig(format!(
            "convergence study needs at least 3 levels, got {}",
            hs.len()
        )));
    }
    let mut levels = Vec::with_capacity(hs.len());
    for &h in hs {
        let mesh = triangulate(spec, h)?;
        let k = assemble_stiffness(&mesh)?;
        let m = assemble_mass(&mesh)?;
        let dofs = DofMap::from_mesh(&mesh);
        let (kf, mf) = apply_dirichlet(&k, &m, &dofs)?;
        let mixed = dofs.num_constrained() > 0;
        let want = if mixed { 1 } else { 2 };
        let pairs = smallest_eigenpairs(&kf, &mf, want, tol)?;
        let eigenvalue = if mixed { pairs.values[0] } else { pairs.values[1] };
        levels.push(ConvergenceLevel { h, free_dofs: dofs.num_free(), eigenvalue });
    }
    let n = levels.len();
    let r = levels[n - 2].h / levels[n - 1].h;
    let mu_f = levels[n - 1].eigenvalue;
    let mu_c = levels[n - 2].eigenvalue;
    let extrapolated = (r * r * mu_f - mu_c) / (r * r - 1.0);
    let d01 = levels[n - 3].eigenvalue - levels[n - 2].eigenvalue;
    let d12 = mu_c - mu_f;
    let order = if d01 * d12 > 0.0 {
        (d01 / d12).ln() / (levels[n - 3].h / levels[n - 2].h).ln()
    } else {
        f64::NAN
    };
    Ok(ConvergenceStudy { levels, extrapolated, order })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Small SPD pencil with a known spectrum: K = diag(0,1,2,...),
    /// M = I, lightly coupled.
    fn toy_problem(n: usize) -> (SymmetricSparseMatrix, SymmetricSparseMatrix) {
        let mut kt = Vec::new();
        let mut mt = Vec::new();
        for i in 0..n {
            kt.push((i, i, i as f64));
            if i + 1 < n {
                kt.push((i + 1, i, -0.1));
                kt.push((i, i, 0.1));
                kt.push((i + 1, i + 1, 0.1));
            }
            mt.push((i, i, 1.0 + 0.01 * (i as f64)));
        }
        (
            SymmetricSparseMatrix::from_triplets(n, kt),
            SymmetricSparseMatrix::from_triplets(n, mt),
        )
    }

    #[test]
    fn dense_and_lanczos_agree_on_toy_pencil() {
        let (k, m) = toy_problem(150);
        let d = DenseSolver.solve(&k, &m, 5, 1e-10).unwrap();
        let l = ShiftInvertLanczos.solve(&k, &m, 5, 1e-10).unwrap();
        for i in 0..5 {
            assert!(
                (d.values[i] - l.values[i]).abs() < 1e-8,
                "pair {i}: dense {} vs lanczos {}",
                d.values[i],
                l.values[i]
            );
        }
    }

    #[test]
    fn residuals_meet_tolerance_and_vectors_are_m_orthonormal() {
        let (k, m) = toy_problem(80);
        let pairs = ShiftInvertLanczos.solve(&k, &m, 4, 1e-10).unwrap();
        for &r in &pairs.residuals {
            assert!(r <= 1e-10, "residual {r}");
        }
        let dim = k.dim();
        let mut mv = vec![0.0; dim];
        for i in 0..pairs.len() {
            for j in 0..=i {
                m.matvec(&pairs.vectors[i], &mut mv);
                let dot: f64 = mv.iter().zip(&pairs.vectors[j]).map(|(a, b)| a * b).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() < 1e-8, "M-orthonormality ({i}, {j}): {dot}");
            }
        }
        // ascending order
        for w in pairs.values.windows(2) {
            assert!(w[0] <= w[1] + 1e-14);
        }
    }

    #[test]
    fn registry_resolves_strategies() {
        let reg = SolverRegistry::with_builtin();
        assert!(reg.get("auto").is_ok());
        assert!(reg.get("dense").is_ok());
        assert!(reg.get("lanczos").is_ok());
        assert!(matches!(reg.get("qr"), Err(Error::UnknownStrategy { .. })));
    }

    #[test]
    fn rejects_oversized_requests() {
        let (k, m) = toy_problem(12);
        assert!(DenseSolver.solve(&k, &m, 4, 1e-8).is_err());
        assert!(DenseSolver.solve(&k, &m, 0, 1e-8).is_err());
    }
}
