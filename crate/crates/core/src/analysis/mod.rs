//! Eigenfunction post-processing: gradient recovery, extremum and
//! interior-critical-point scans, nodal structure, the radial witness
//! field, and the domain experiments built from them.
//!
//! Verdicts are deliberately conservative: `Consistent` means the
//! discrete eigenfunction shows boundary extrema and no interior
//! critical point at the configured resolution; it never claims more
//! than that. A violation candidate is re-checked on a half-size mesh
//! before being reported.

mod svg;

pub use svg::write_contour_svg;

use rayon::prelude::*;
use serde::Serialize;

use crate::domain::DomainSpec;
use crate::eigen::{EigenPairs, EigenStrategy};
use crate::error::{Error, Result};
use crate::fem::{apply_dirichlet, assemble_mass, assemble_stiffness, DofMap};
use crate::geometry::{hyp_distance_coords, DiskPoint};
use crate::mesh::{triangulate, TriMesh};
use crate::special::{quad_integrate, RadialEigenfunction};

/// Knobs for the critical-point scan. The relative threshold and collar
/// width are calibration parameters surfaced here rather than constants.
#[derive(Clone, Copy, Debug)]
pub struct AnalysisConfig {
    /// Minimum interior |∇u| relative to the global maximum.
    pub tau: f64,
    /// Collar width in local mesh lengths treated as "not interior".
    pub collar: f64,
    /// Re-solve at h/2 before reporting a violation candidate.
    pub refine_on_violation: bool,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self { tau: 0.05, collar: 2.0, refine_on_violation: true }
    }
}

/// Per-vertex recovered gradient in model coordinates plus its
/// hyperbolic magnitude (1 − |x|²)/2 · |∇u|.
#[derive(Clone, Debug)]
pub struct RecoveredGradient {
    pub model: Vec<[f64; 2]>,
    pub magnitude_hyp: Vec<f64>,
}

/// Area-weighted average of adjacent P1 element gradients.
pub fn recover_gradient(mesh: &TriMesh, u: &[f64]) -> RecoveredGradient {
    assert_eq!(u.len(), mesh.num_vertices());
    let mut acc = vec![[0.0f64; 2]; mesh.num_vertices()];
    let mut weight = vec![0.0f64; mesh.num_vertices()];
    for t in 0..mesh.num_triangles() {
        let [a, b, c] = mesh.triangles[t];
        let pa = mesh.vertices[a];
        let pb = mesh.vertices[b];
        let pc = mesh.vertices[c];
        let area = mesh.signed_area(t);
        // P1 gradient from nodal values
        let bx = [pb[1] - pc[1], pc[1] - pa[1], pa[1] - pb[1]];
        let by = [pc[0] - pb[0], pa[0] - pc[0], pb[0] - pa[0]];
        let mut gx = 0.0;
        let mut gy = 0.0;
        for (i, &v) in [a, b, c].iter().enumerate() {
            gx += u[v] * bx[i] / (2.0 * area);
            gy += u[v] * by[i] / (2.0 * area);
        }
        for &v in &[a, b, c] {
            acc[v][0] += gx * area;
            acc[v][1] += gy * area;
            weight[v] += area;
        }
    }
    let mut model = Vec::with_capacity(mesh.num_vertices());
    let mut magnitude_hyp = Vec::with_capacity(mesh.num_vertices());
    for v in 0..mesh.num_vertices() {
        let g = if weight[v] > 0.0 {
            [acc[v][0] / weight[v], acc[v][1] / weight[v]]
        } else {
            [0.0, 0.0]
        };
        let p = mesh.vertices[v];
        let inv_lambda = (1.0 - p[0] * p[0] - p[1] * p[1]) / 2.0;
        model.push(g);
        magnitude_hyp.push(inv_lambda * (g[0] * g[0] + g[1] * g[1]).sqrt());
    }
    RecoveredGradient { model, magnitude_hyp }
}

/// Hyperbolic graph distance from every vertex to the tagged boundary
/// (Dijkstra over mesh edges; an upper bound on the true distance that
/// is accurate to the mesh scale).
pub fn boundary_distances(mesh: &TriMesh) -> Vec<f64> {
    #[derive(PartialEq)]
    struct Item(f64, usize);
    impl Eq for Item {}
    impl PartialOrd for Item {
        fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
            Some(self.cmp(other))
        }
    }
    impl Ord for Item {
        fn cmp(&self, other: &Self) -> std::cmp::Ordering {
            // reversed for a min-heap
            other.0.partial_cmp(&self.0).unwrap_or(std::cmp::Ordering::Equal)
        }
    }
    let nbrs = mesh.vertex_neighbors();
    let mut dist = vec![f64::INFINITY; mesh.num_vertices()];
    let mut heap = std::collections::BinaryHeap::new();
    for (v, &on_boundary) in mesh.boundary_vertex_mask().iter().enumerate() {
        if on_boundary {
            dist[v] = 0.0;
            heap.push(Item(0.0, v));
        }
    }
    while let Some(Item(d, v)) = heap.pop() {
        if d > dist[v] {
            continue;
        }
        for &w in &nbrs[v] {
            let nd = d + mesh.edge_length_hyp(v, w);
            if nd < dist[w] {
                dist[w] = nd;
                heap.push(Item(nd, w));
            }
        }
    }
    dist
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Consistent,
    ViolationCandidate,
    HypothesesNotMet,
}

/// Outcome of the hot-spots scan for one eigenfunction.
#[derive(Clone, Debug, Serialize)]
pub struct HotspotsReport {
    pub eigenvalue: f64,
    /// 1-based index of the analyzed eigenfunction.
    pub which: usize,
    pub max_point: [f64; 2],
    pub max_value: f64,
    pub max_boundary_distance: f64,
    pub min_point: [f64; 2],
    pub min_value: f64,
    pub min_boundary_distance: f64,
    /// min over interior vertices of |∇u|_H divided by the global max.
    pub interior_grad_min_rel: f64,
    pub interior_vertices: usize,
    pub nodal_domain_count: usize,
    pub domain_convex: bool,
    pub verdict: Verdict,
}

/// Scan eigenfunction number `which` (1-based; 2 for the second Neumann
/// eigenfunction, 1 for the first mixed one). Interior vertices are
/// those beyond `collar` local mesh lengths from the boundary.
pub fn analyze_hotspots(
    mesh: &TriMesh,
    pairs: &EigenPairs,
    which: usize,
    domain_convex: bool,
    cfg: &AnalysisConfig,
) -> Result<HotspotsReport> {
    if which == 0 || which > pairs.len() {
        return Err(Error::IndexOutOfRange { index: which, available: pairs.len() });
    }
    let mu = pairs.values[which - 1];
    let u = &pairs.vectors[which - 1];
    let dist = boundary_distances(mesh);
    let local_h = mesh.vertex_local_h();
    let grad = recover_gradient(mesh, u);

    let mut imax = 0;
    let mut imin = 0;
    for v in 1..u.len() {
        if u[v] > u[imax] {
            imax = v;
        }
        if u[v] < u[imin] {
            imin = v;
        }
    }
    let g_max = grad.magnitude_hyp.iter().cloned().fold(0.0f64, f64::max);
    let mut g_int_min = f64::INFINITY;
    let mut interior_vertices = 0;
    for v in 0..u.len() {
        if dist[v] > cfg.collar * local_h[v] {
            interior_vertices += 1;
            g_int_min = g_int_min.min(grad.magnitude_hyp[v]);
        }
    }
    let interior_grad_min_rel =
        if interior_vertices == 0 || g_max == 0.0 { 0.0 } else { g_int_min / g_max };

    let near = |v: usize| dist[v] <= cfg.collar * local_h[v];
    let extrema_on_boundary = near(imax) && near(imin);
    let verdict = if !domain_convex || mu > 0.25 + 1e-12 {
        Verdict::HypothesesNotMet
    } else if extrema_on_boundary && interior_grad_min_rel >= cfg.tau {
        Verdict::Consistent
    } else {
        Verdict::ViolationCandidate
    };

    Ok(HotspotsReport {
        eigenvalue: mu,
        which,
        max_point: mesh.vertices[imax],
        max_value: u[imax],
        max_boundary_distance: dist[imax],
        min_point: mesh.vertices[imin],
        min_value: u[imin],
        min_boundary_distance: dist[imin],
        interior_grad_min_rel,
        interior_vertices,
        nodal_domain_count: count_nodal_domains(mesh, u),
        domain_convex,
        verdict,
    })
}

fn vertex_sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

fn triangle_sign(mesh: &TriMesh, u: &[f64], t: usize) -> i8 {
    let tri = mesh.triangles[t];
    let s: i8 = tri.iter().map(|&v| vertex_sign(u[v])).sum();
    if s != 0 {
        s.signum()
    } else {
        let total: f64 = tri.iter().map(|&v| u[v]).sum();
        vertex_sign(total)
    }
}

/// Number of sign domains of u: flood fill over triangles of equal
/// majority sign.
pub fn count_nodal_domains(mesh: &TriMesh, u: &[f64]) -> usize {
    let nt = mesh.num_triangles();
    let signs: Vec<i8> = (0..nt).map(|t| triangle_sign(mesh, u, t)).collect();
    // edge -> triangles map
    let mut edge_map: std::collections::HashMap<(usize, usize), [usize; 2]> =
        std::collections::HashMap::new();
    for t in 0..nt {
        let tri = mesh.triangles[t];
        for i in 0..3 {
            let a = tri[i].min(tri[(i + 1) % 3]);
            let b = tri[i].max(tri[(i + 1) % 3]);
            let e = edge_map.entry((a, b)).or_insert([usize::MAX; 2]);
            if e[0] == usize::MAX {
                e[0] = t;
            } else {
                e[1] = t;
            }
        }
    }
    let mut comp = vec![usize::MAX; nt];
    let mut count = 0;
    for seed in 0..nt {
        if comp[seed] != usize::MAX || signs[seed] == 0 {
            continue;
        }
        count += 1;
        let mut stack = vec![seed];
        comp[seed] = count;
        while let Some(t) = stack.pop() {
            let tri = mesh.triangles[t];
            for i in 0..3 {
                let a = tri[i].min(tri[(i + 1) % 3]);
                let b = tri[i].max(tri[(i + 1) % 3]);
                let pairt = edge_map[&(a, b)];
                for &n in &pairt {
                    if n != usize::MAX && n != t && comp[n] == usize::MAX && signs[n] == signs[t] {
                        comp[n] = count;
                        stack.push(n);
                    }
                }
            }
        }
    }
    count.max(1)
}

/// Zero-level contour by linear interpolation on edges, chained into
/// polylines.
pub fn nodal_set(mesh: &TriMesh, u: &[f64]) -> Vec<Vec<[f64; 2]>> {
    let mut segments: Vec<([f64; 2], [f64; 2])> = Vec::new();
    for t in 0..mesh.num_triangles() {
        let tri = mesh.triangles[t];
        let mut crossings: Vec<[f64; 2]> = Vec::new();
        for i in 0..3 {
            let a = tri[i];
            let b = tri[(i + 1) % 3];
            let ua = u[a];
            let ub = u[b];
            if (ua > 0.0 && ub < 0.0) || (ua < 0.0 && ub > 0.0) {
                let s = ua / (ua - ub);
                let pa = mesh.vertices[a];
                let pb = mesh.vertices[b];
                crossings.push([pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])]);
            } else if ua == 0.0 && ub != 0.0 {
                crossings.push(mesh.vertices[a]);
            }
        }
        crossings.dedup_by(|x, y| (x[0] - y[0]).abs() + (x[1] - y[1]).abs() < 1e-14);
        if crossings.len() == 2 {
            segments.push((crossings[0], crossings[1]));
        }
    }
    chain_segments(segments)
}

fn chain_segments(segments: Vec<([f64; 2], [f64; 2])>) -> Vec<Vec<[f64; 2]>> {
    let key = |p: [f64; 2]| ((p[0] * 1e9).round() as i64, (p[1] * 1e9).round() as i64);
    let mut adj: std::collections::HashMap<(i64, i64), Vec<usize>> =
        std::collections::HashMap::new();
    for (i, &(a, b)) in segments.iter().enumerate() {
        adj.entry(key(a)).or_default().push(i);
        adj.entry(key(b)).or_default().push(i);
    }
    let mut used = vec![false; segments.len()];
    let mut polylines = Vec::new();
    for start in 0..segments.len() {
        if used[start] {
            continue;
        }
        used[start] = true;
        let (a, b) = segments[start];
        let mut line = vec![a, b];
        // extend forward from the tail
        loop {
            let tail = *line.last().unwrap();
            let Some(cands) = adj.get(&key(tail)) else { break };
            let Some(&next) = cands.iter().find(|&&i| !used[i]) else { break };
            used[next] = true;
            let (na, nb) = segments[next];
            if key(na) == key(tail) {
                line.push(nb);
            } else {
                line.push(na);
            }
        }
        // extend backward from the head
        loop {
            let head = line[0];
            let Some(cands) = adj.get(&key(head)) else { break };
            let Some(&prev) = cands.iter().find(|&&i| !used[i]) else { break };
            used[prev] = true;
            let (na, nb) = segments[prev];
            if key(na) == key(head) {
                line.insert(0, nb);
            } else {
                line.insert(0, na);
            }
        }
        polylines.push(line);
    }
    polylines
}

/// The witness combination w(x) = u(p)·J(x) − u(x) built from the radial
/// eigenfunction centered at mesh vertex p.
#[derive(Clone, Debug)]
pub struct WitnessField {
    pub values: Vec<f64>,
    pub basepoint: usize,
    pub eigenvalue: f64,
}

pub fn proof_witness(mesh: &TriMesh, u: &[f64], mu: f64, basepoint: usize) -> Result<WitnessField> {
    if basepoint >= mesh.num_vertices() {
        return Err(Error::IndexOutOfRange { index: basepoint, available: mesh.num_vertices() });
    }
    if !(mu > 0.0 && mu <= 0.25) {
        return Err(Error::DomainError(format!(
            "witness construction requires an eigenvalue in (0, 1/4], got {mu}"
        )));
    }
    let up = u[basepoint];
    if up <= 0.0 {
        return Err(Error::DomainError(
            "witness basepoint value must be positive; flip the eigenfunction sign first".into(),
        ));
    }
    let p = mesh.vertices[basepoint];
    let center = DiskPoint::new(p[0], p[1])
        .map_err(|_| Error::DomainError("witness basepoint too close to the rim".into()))?;
    let radial = RadialEigenfunction::new(mu, center)?;
    let values: Result<Vec<f64>> = mesh
        .vertices
        .par_iter()
        .zip(u.par_iter())
        .map(|(x, &ux)| {
            let r = hyp_distance_coords(p, *x);
            Ok(up * radial.eval(r)? - ux)
        })
        .collect();
    Ok(WitnessField { values: values?, basepoint, eigenvalue: mu })
}

/// Everything a solve produces, with eigenvectors scattered back to the
/// full vertex set (zero on Dirichlet vertices).
pub struct Solution {
    pub mesh: TriMesh,
    pub dofs: DofMap,
    pub pairs: EigenPairs,
}

/// Mesh, assemble, restrict, and solve a domain in one call.
pub fn solve_domain(
    spec: &DomainSpec,
    h: f64,
    count: usize,
    tol: f64,
    solver: &dyn EigenStrategy,
) -> Result<Solution> {
    let mesh = triangulate(spec, h)?;
    let stiffness = assemble_stiffness(&mesh)?;
    let mass = assemble_mass(&mesh)?;
    let dofs = DofMap::from_mesh(&mesh);
    let (kf, mf) = apply_dirichlet(&stiffness, &mass, &dofs)?;
    let pairs = solver.solve(&kf, &mf, count, tol)?;
    let full = EigenPairs {
        values: pairs.values.clone(),
        vectors: pairs.vectors.iter().map(|v| dofs.expand(v)).collect(),
        residuals: pairs.residuals.clone(),
    };
    Ok(Solution { mesh, dofs, pairs: full })
}

/// Solve and scan a domain; a violation candidate triggers one automatic
/// re-run at h/2 before the report is returned. For eigenvalues with a
/// near-degenerate partner the verdict is the conjunction over the
/// eigenspace sample.
pub fn verify_domain(
    spec: &DomainSpec,
    h: f64,
    cfg: &AnalysisConfig,
    tol: f64,
    solver: &dyn EigenStrategy,
) -> Result<(HotspotsReport, Solution)> {
    let mixed = spec.dirichlet_arc().is_some();
    let which = if mixed { 1 } else { 2 };
    let convex = spec.shape().is_convex()?;
    let run = |hh: f64| -> Result<(HotspotsReport, Solution)> {
        let sol = solve_domain(spec, hh, which + 1, tol, solver)?;
        let mut report = analyze_hotspots(&sol.mesh, &sol.pairs, which, convex, cfg)?;
        // conjunction over a (numerically) multiple eigenvalue
        let partner = which + 1;
        if partner <= sol.pairs.len() {
            let gap = (sol.pairs.values[partner - 1] - sol.pairs.values[which - 1]).abs();
            if gap <= 1e-4 * sol.pairs.values[which - 1].abs().max(1e-3) {
                let partner_report = analyze_hotspots(&sol.mesh, &sol.pairs, partner, convex, cfg)?;
                report.verdict = match (report.verdict, partner_report.verdict) {
                    (Verdict::HypothesesNotMet, _) | (_, Verdict::HypothesesNotMet) => {
                        Verdict::HypothesesNotMet
                    }
                    (Verdict::ViolationCandidate, _) | (_, Verdict::ViolationCandidate) => {
                        Verdict::ViolationCandidate
                    }
                    _ => Verdict::Consistent,
                };
            }
        }
        Ok((report, sol))
    };
    let (report, sol) = run(h)?;
    if report.verdict == Verdict::ViolationCandidate && cfg.refine_on_violation {
        return run(h / 2.0);
    }
    Ok((report, sol))
}

/// interior_grad_min_rel across nested refinements, measured on a fixed
/// interior region (collar frozen at the coarsest level) so the levels
/// are comparable.
#[derive(Clone, Debug, Serialize)]
pub struct GradientStudyLevel {
    pub h: f64,
    pub interior_grad_min_rel: f64,
    pub verdict: Verdict,
}

pub fn interior_gradient_study(
    spec: &DomainSpec,
    hs: &[f64],
    cfg: &AnalysisConfig,
    tol: f64,
    solver: &dyn EigenStrategy,
) -> Result<Vec<GradientStudyLevel>> {
    let mixed = spec.dirichlet_arc().is_some();
    let which = if mixed { 1 } else { 2 };
    let convex = spec.shape().is_convex()?;
    let collar_hyp = cfg.collar * hs.iter().cloned().fold(f64::MIN, f64::max);
    let mut out = Vec::with_capacity(hs.len());
    for &h in hs {
        let sol = solve_domain(spec, h, which + 1, tol, solver)?;
        let report = analyze_hotspots(&sol.mesh, &sol.pairs, which, convex, cfg)?;
        let u = &sol.pairs.vectors[which - 1];
        let dist = boundary_distances(&sol.mesh);
        let grad = recover_gradient(&sol.mesh, u);
        let g_max = grad.magnitude_hyp.iter().cloned().fold(0.0f64, f64::max);
        let mut g_min = f64::INFINITY;
        for v in 0..u.len() {
            if dist[v] > collar_hyp {
                g_min = g_min.min(grad.magnitude_hyp[v]);
            }
        }
        let rel = if g_max > 0.0 && g_min.is_finite() { g_min / g_max } else { 0.0 };
        out.push(GradientStudyLevel { h, interior_grad_min_rel: rel, verdict: report.verdict });
    }
    Ok(out)
}

/// One row of the shrinking-Dirichlet-arc experiment.
#[derive(Clone, Debug, Serialize)]
pub struct MixedArcRow {
    pub arc_length: f64,
    pub lambda1: f64,
    pub min_interior_value: f64,
    pub report: HotspotsReport,
}

/// Solve the mixed problem for a family of Dirichlet arcs centered at a
/// fixed boundary point (the arclength midpoint of the boundary loop).
pub fn mixed_arc_experiment(
    spec: &DomainSpec,
    arc_lengths: &[f64],
    h: f64,
    cfg: &AnalysisConfig,
    tol: f64,
    solver: &dyn EigenStrategy,
) -> Result<Vec<MixedArcRow>> {
    if spec.dirichlet_arc().is_some() {
        return Err(Error::SpecValidation(
            "mixed_arc_experiment adds its own Dirichlet arcs; pass a spec without one".into(),
        ));
    }
    if !spec.shape().is_convex()? {
        return Err(Error::SpecValidation("mixed-arc experiment requires a convex domain".into()));
    }
    let total = spec.boundary_length()?;
    let mid = total / 2.0;
    for &l in arc_lengths {
        if !(l > 0.0 && l < total) {
            return Err(Error::SpecValidation(format!(
                "arc length {l} outside (0, boundary length {total:.6})"
            )));
        }
    }
    arc_lengths
        .par_iter()
        .map(|&l| {
            let marked = spec.clone().with_dirichlet_arc(mid - l / 2.0, mid + l / 2.0);
            let sol = solve_domain(&marked, h, 2, tol, solver)?;
            let convex = true;
            let report = analyze_hotspots(&sol.mesh, &sol.pairs, 1, convex, cfg)?;
            let u = &sol.pairs.vectors[0];
            let dist = boundary_distances(&sol.mesh);
            let local_h = sol.mesh.vertex_local_h();
            let min_interior_value = (0..u.len())
                .filter(|&v| dist[v] > cfg.collar * local_h[v])
                .map(|v| u[v])
                .fold(f64::INFINITY, f64::min);
            Ok(MixedArcRow {
                arc_length: l,
                lambda1: sol.pairs.values[0],
                min_interior_value,
                report,
            })
        })
        .collect()
}

/// Energy and mass of the explicit logarithmic cutoff, by adaptive
/// quadrature, next to its closed-form energy 4π/ln(1/ε).
#[derive(Clone, Debug, Serialize)]
pub struct CutoffRayleigh {
    pub epsilon: f64,
    pub energy: f64,
    pub mass: f64,
    pub domain_area: f64,
    pub closed_form_energy: f64,
}

/// The cutoff is 0 for r < ε, 1 − ln(r/√ε)/ln(√ε) in the annulus, 1
/// outside (r the Euclidean model radius). Its Dirichlet energy is
/// conformally invariant, so both the energy and the mass reduce to
/// radial integrals; the domain enters through its area and the
/// requirement that it contain the model disk of radius √ε.
pub fn cutoff_rayleigh(epsilon: f64, spec: &DomainSpec, h: f64) -> Result<CutoffRayleigh> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::DomainError(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    let sqrt_eps = epsilon.sqrt();
    // the domain must contain the support of the transition annulus
    let pieces = spec.boundary_pieces()?;
    for piece in &pieces {
        for k in 0..=16 {
            let p = piece.geom.point_at(k as f64 / 16.0);
            let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
            if r <= sqrt_eps {
                return Err(Error::DomainError(format!(
                    "domain boundary enters the cutoff annulus (|x| = {r:.4} <= sqrt(eps))"
                )));
            }
        }
    }
    // energy: Euclidean Dirichlet integral of the radial profile,
    // integrated in log-radius where the integrand is constant
    let ln_eps = epsilon.ln();
    let du_dr = |r: f64| -2.0 / (r * ln_eps);
    let energy = quad_integrate(
        &|s: f64| {
            let r = s.exp();
            let g = du_dr(r);
            g * g * r * r // extra r from the log substitution
        },
        epsilon.ln(),
        sqrt_eps.ln(),
        1e-12,
    )? * 2.0
        * std::f64::consts::PI;
    // mass: |Ω| minus the hyperbolic-measure deficit where u < 1
    let mesh = triangulate(spec, h)?;
    let domain_area = mesh.hyperbolic_area();
    let u_of = |r: f64| {
        if r < epsilon {
            0.0
        } else if r <= sqrt_eps {
            1.0 - (r / sqrt_eps).ln() / sqrt_eps.ln()
        } else {
            1.0
        }
    };
    let deficit = quad_integrate(
        &|r: f64| {
            let u = u_of(r);
            let lam2 = (2.0 / (1.0 - r * r)).powi(2);
            (1.0 - u * u) * lam2 * r
        },
        0.0,
        sqrt_eps,
        1e-13,
    )? * 2.0
        * std::f64::consts::PI;
    Ok(CutoffRayleigh {
        epsilon,
        energy,
        mass: domain_area - deficit,
        domain_area,
        closed_form_energy: 4.0 * std::f64::consts::PI / (1.0 / epsilon).ln(),
    })
}

/// One cell of the truncated-ideal-polygon sweep.
#[derive(Clone, Debug, Serialize)]
pub struct IdealSweepRow {
    pub n: usize,
    pub depth: f64,
    pub mu2: f64,
    pub free_dofs: usize,
    pub mesh_area: f64,
}

/// Second Neumann eigenvalue of the truncated regular ideal n-gon over
/// an (n, depth) grid; the depth trend exposes the truncation bias.
pub fn ideal_polygon_sweep(
    ns: &[usize],
    depths: &[f64],
    h: f64,
    tol: f64,
    solver: &dyn EigenStrategy,
) -> Result<Vec<IdealSweepRow>> {
    let grid: Vec<(usize, f64)> =
        ns.iter().flat_map(|&n| depths.iter().map(move |&d| (n, d))).collect();
    grid.par_iter()
        .map(|&(n, depth)| {
            let spec = DomainSpec::ideal_polygon(n, depth)?;
            let sol = solve_domain(&spec, h, 2, tol, solver)?;
            Ok(IdealSweepRow {
                n,
                depth,
                mu2: sol.pairs.values[1],
                free_dofs: sol.dofs.num_free(),
                mesh_area: sol.mesh.hyperbolic_area(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::DomainSpec;
    use crate::eigen::AutoSolver;

    #[test]
    fn constant_field_has_zero_gradient() {
        let mesh = triangulate(&DomainSpec::disk(1.0).unwrap(), 0.3).unwrap();
        let u = vec![2.5; mesh.num_vertices()];
        let g = recover_gradient(&mesh, &u);
        for &m in &g.magnitude_hyp {
            assert!(m < 1e-13);
        }
    }

    #[test]
    fn linear_field_gradient_at_origin() {
        // u = x has Euclidean gradient (1, 0) and hyperbolic magnitude
        // 1/2 at the origin
        let mesh = triangulate(&DomainSpec::disk(0.8).unwrap(), 0.2).unwrap();
        let u: Vec<f64> = mesh.vertices.iter().map(|p| p[0]).collect();
        let g = recover_gradient(&mesh, &u);
        let origin = (0..mesh.num_vertices())
            .min_by(|&a, &b| {
                let na = mesh.vertices[a][0].powi(2) + mesh.vertices[a][1].powi(2);
                let nb = mesh.vertices[b][0].powi(2) + mesh.vertices[b][1].powi(2);
                na.partial_cmp(&nb).unwrap()
            })
            .unwrap();
        assert!((g.model[origin][0] - 1.0).abs() < 1e-10);
        assert!(g.model[origin][1].abs() < 1e-10);
        assert!((g.magnitude_hyp[origin] - 0.5).abs() < 1e-6);
    }

    #[test]
    fn linear_field_has_two_nodal_domains() {
        let mesh = triangulate(&DomainSpec::disk(1.0).unwrap(), 0.2).unwrap();
        let u: Vec<f64> = mesh.vertices.iter().map(|p| p[0]).collect();
        assert_eq!(count_nodal_domains(&mesh, &u), 2);
        let lines = nodal_set(&mesh, &u);
        assert!(!lines.is_empty());
        for line in &lines {
            for p in line {
                assert!(p[0].abs() < 0.05, "nodal point off the diameter: {:?}", p);
            }
        }
        let constant = vec![1.0; mesh.num_vertices()];
        assert_eq!(count_nodal_domains(&mesh, &constant), 1);
        assert!(nodal_set(&mesh, &constant).is_empty());
    }

    #[test]
    fn witness_vanishes_at_basepoint_and_on_matching_input() {
        let mesh = triangulate(&DomainSpec::disk(1.5).unwrap(), 0.2).unwrap();
        // u = interpolated radial eigenfunction about a central vertex
        let basepoint = (0..mesh.num_vertices())
            .min_by(|&a, &b| {
                let na = mesh.vertices[a][0].powi(2) + mesh.vertices[a][1].powi(2);
                let nb = mesh.vertices[b][0].powi(2) + mesh.vertices[b][1].powi(2);
                na.partial_cmp(&nb).unwrap()
            })
            .unwrap();
        let p = mesh.vertices[basepoint];
        let center = DiskPoint::new(p[0], p[1]).unwrap();
        let radial = RadialEigenfunction::new(0.2, center).unwrap();
        let u: Vec<f64> = mesh
            .vertices
            .iter()
            .map(|x| radial.eval(hyp_distance_coords(p, *x)).unwrap())
            .collect();
        let w = proof_witness(&mesh, &u, 0.2, basepoint).unwrap();
        assert!(w.values[basepoint].abs() < 1e-12);
        let worst = w.values.iter().cloned().fold(0.0f64, |a, b| a.max(b.abs()));
        assert!(worst < 1e-9, "witness of its own radial input: {worst}");
    }

    #[test]
    fn witness_rejects_nonpositive_basepoint() {
        let mesh = triangulate(&DomainSpec::disk(1.0).unwrap(), 0.3).unwrap();
        let u = vec![-1.0; mesh.num_vertices()];
        assert!(proof_witness(&mesh, &u, 0.2, 0).is_err());
    }

    #[test]
    fn cutoff_energy_matches_closed_form() {
        let spec = DomainSpec::disk(3.0).unwrap();
        let out = cutoff_rayleigh(1e-2, &spec, 0.25).unwrap();
        assert!(
            (out.energy - out.closed_form_energy).abs() < 1e-6,
            "energy {} vs closed form {}",
            out.energy,
            out.closed_form_energy
        );
        assert!((out.closed_form_energy - 2.729).abs() < 0.01);
    }

    #[test]
    fn small_disk_gets_hypotheses_not_met() {
        let spec = DomainSpec::disk(0.5).unwrap();
        let cfg = AnalysisConfig::default();
        let (report, _) = verify_domain(&spec, 0.1, &cfg, 1e-8, &AutoSolver).unwrap();
        assert_eq!(report.verdict, Verdict::HypothesesNotMet);
        assert!(report.eigenvalue > 0.25);
    }
}
