//! Constrained Delaunay triangulation with Ruppert-style refinement.
//!
//! Boundary loops arrive as exact curve pieces; they are subdivided into
//! chords sized to the local metric target with sag ≤ h², recovered as
//! constrained edges, and the interior is refined by circumcenter
//! insertion until every triangle meets the 20° angle bound and the
//! graded size target. Segment splits reproject onto the source curve so
//! the polygonal boundary converges to the true one at second order.

use std::collections::{HashMap, HashSet, VecDeque};

use crate::domain::{BoundaryPiece, BoundaryTag, DomainSpec};
use crate::error::{Error, Result};
use crate::geometry::hyp_distance_coords;
use crate::mesh::{local_size, BoundaryEdge, TriMesh};

const NONE: usize = usize::MAX;
const MIN_ANGLE_DEG: f64 = 20.0;

#[derive(Clone, Copy)]
struct SegSource {
    piece: usize,
    t0: f64,
    t1: f64,
}

#[derive(Clone, Copy)]
struct Constraint {
    tag: BoundaryTag,
    src: SegSource,
    /// directed endpoints matching src.t0 -> src.t1
    a: usize,
    b: usize,
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

struct Dt {
    pts: Vec<[f64; 2]>,
    tris: Vec<[usize; 3]>,
    adj: Vec<[usize; 3]>, // adj[t][i]: neighbor across the edge opposite vertex i
    alive: Vec<bool>,
    inside: Vec<bool>,
    vert_tri: Vec<usize>,
    constraints: HashMap<(usize, usize), Constraint>,
    last_tri: usize,
}

fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

/// A fan triangle over edge (u, v) with apex p is degenerate when p sits
/// within 1e-11 of the edge's line, relative to the edge length.
fn fan_degenerate(pu: [f64; 2], pv: [f64; 2], p: [f64; 2]) -> bool {
    let len = ((pu[0] - pv[0]).powi(2) + (pu[1] - pv[1]).powi(2)).sqrt();
    orient(pu, pv, p).abs() <= 1e-11 * len * len.max(1e-9)
}

fn circumcenter(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> Option<([f64; 2], f64)> {
    let d = 2.0 * orient(a, b, c);
    if d.abs() < 1e-30 {
        return None;
    }
    let a2 = a[0] * a[0] + a[1] * a[1];
    let b2 = b[0] * b[0] + b[1] * b[1];
    let c2 = c[0] * c[0] + c[1] * c[1];
    let ux = (a2 * (b[1] - c[1]) + b2 * (c[1] - a[1]) + c2 * (a[1] - b[1])) / d;
    let uy = (a2 * (c[0] - b[0]) + b2 * (a[0] - c[0]) + c2 * (b[0] - a[0])) / d;
    let r = ((a[0] - ux).powi(2) + (a[1] - uy).powi(2)).sqrt();
    Some(([ux, uy], r))
}

impl Dt {
    fn new() -> Self {
        // super-square well outside the model disk
        let s = 2.0;
        let pts = vec![[-s, -s], [s, -s], [s, s], [-s, s]];
        let tris = vec![[0, 1, 2], [0, 2, 3]];
        let adj = vec![[NONE, 1, NONE], [NONE, NONE, 0]];
        Dt {
            pts,
            tris,
            adj,
            alive: vec![true, true],
            inside: vec![false, false],
            vert_tri: vec![0, 0, 0, 1],
            constraints: HashMap::new(),
            last_tri: 0,
        }
    }

    fn tri_pts(&self, t: usize) -> [[f64; 2]; 3] {
        let [a, b, c] = self.tris[t];
        [self.pts[a], self.pts[b], self.pts[c]]
    }

    /// Strictly-inside-circumcircle test with a relative tolerance;
    /// `slack` < 0 admits cocircular points, > 0 excludes them.
    fn in_circle(&self, t: usize, p: [f64; 2], slack: f64) -> bool {
        let [a, b, c] = self.tri_pts(t);
        let adx = a[0] - p[0];
        let ady = a[1] - p[1];
        let bdx = b[0] - p[0];
        let bdy = b[1] - p[1];
        let cdx = c[0] - p[0];
        let cdy = c[1] - p[1];
        let ad = adx * adx + ady * ady;
        let bd = bdx * bdx + bdy * bdy;
        let cd = cdx * cdx + cdy * cdy;
        let det = adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx)
            + ad * (bdx * cdy - bdy * cdx);
        let mag = adx.abs() * (bdy.abs() * cd + bd * cdy.abs())
            + ady.abs() * (bdx.abs() * cd + bd * cdx.abs())
            + ad * (bdx.abs() * cdy.abs() + bdy.abs() * cdx.abs());
        det > slack * mag
    }

    fn locate(&self, p: [f64; 2]) -> Option<usize> {
        let mut t = if self.alive[self.last_tri] {
            self.last_tri
        } else {
            (0..self.tris.len()).rev().find(|&i| self.alive[i])?
        };
        for _ in 0..4 * self.tris.len() + 16 {
            let [a, b, c] = self.tris[t];
            let pa = self.pts[a];
            let pb = self.pts[b];
            let pc = self.pts[c];
            // step across the most-violated edge
            let o0 = orient(pb, pc, p);
            let o1 = orient(pc, pa, p);
            let o2 = orient(pa, pb, p);
            let (omin, side) = [(o0, 0), (o1, 1), (o2, 2)]
                .into_iter()
                .min_by(|x, y| x.0.partial_cmp(&y.0).unwrap())
                .unwrap();
            if omin >= -1e-15 {
                return Some(t);
            }
            let next = self.adj[t][side];
            if next == NONE || !self.alive[next] {
                return None;
            }
            t = next;
        }
        // walk got stuck (can happen near degeneracies): linear scan
        (0..self.tris.len()).filter(|&i| self.alive[i]).find(|&i| {
            let [a, b, c] = self.tris[i];
            orient(self.pts[a], self.pts[b], p) >= -1e-14
                && orient(self.pts[b], self.pts[c], p) >= -1e-14
                && orient(self.pts[c], self.pts[a], p) >= -1e-14
        })
    }

    fn nearest_vertex_in(&self, t: usize, p: [f64; 2]) -> Option<usize> {
        self.tris[t]
            .into_iter()
            .find(|&v| {
                let q = self.pts[v];
                (q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2) < 1e-26
            })
    }

    /// Cavity of triangles whose circumcircle admits p, grown from the
    /// containing triangle without crossing constrained edges.
    fn cavity(&self, t0: usize, p: [f64; 2], slack: f64) -> Vec<usize> {
        let mut cav = vec![t0];
        let mut seen: HashSet<usize> = HashSet::from([t0]);
        let mut queue = VecDeque::from([t0]);
        while let Some(t) = queue.pop_front() {
            for i in 0..3 {
                let n = self.adj[t][i];
                if n == NONE || seen.contains(&n) || !self.alive[n] {
                    continue;
                }
                let u = self.tris[t][(i + 1) % 3];
                let v = self.tris[t][(i + 2) % 3];
                if self.constraints.contains_key(&edge_key(u, v)) {
                    continue;
                }
                if self.in_circle(n, p, slack) {
                    seen.insert(n);
                    cav.push(n);
                    queue.push_back(n);
                }
            }
        }
        cav
    }

    /// Directed boundary loop of a cavity: (from, to, owner tri, outer
    /// neighbor), cavity on the left.
    fn cavity_boundary(&self, cav: &[usize]) -> Vec<(usize, usize, usize, usize)> {
        let cavset: HashSet<usize> = cav.iter().copied().collect();
        let mut edges = Vec::new();
        for &t in cav {
            for i in 0..3 {
                let n = self.adj[t][i];
                if n != NONE && cavset.contains(&n) {
                    continue;
                }
                let u = self.tris[t][(i + 1) % 3];
                let v = self.tris[t][(i + 2) % 3];
                edges.push((u, v, t, n));
            }
        }
        edges
    }

    /// Insert p; returns its vertex index (or an existing one if p
    /// coincides with a present vertex).
    fn insert(&mut self, p: [f64; 2]) -> Result<usize> {
        let mut attempt_p = p;
        let mut diag = String::new();
        for attempt in 0..4 {
            let Some(t0) = self.locate(attempt_p) else {
                return Err(Error::RefinementFailure(format!(
                    "point ({}, {}) not inside the triangulation",
                    p[0], p[1]
                )));
            };
            if let Some(v) = self.nearest_vertex_in(t0, attempt_p) {
                return Ok(v);
            }
            for slack in [-1e-14, 1e-14] {
                let mut cav = self.cavity(t0, attempt_p, slack);
                // points landing on or next to an edge (midpoint splits,
                // circumcenters of flat triangles) would create degenerate
                // fan triangles; pull the far flank across any such
                // unconstrained boundary edge into the cavity instead
                for _ in 0..16 {
                    let boundary = self.cavity_boundary(&cav);
                    let mut grew = false;
                    for &(u, v, _, outer) in &boundary {
                        if outer == NONE || !self.alive[outer] || cav.contains(&outer) {
                            continue;
                        }
                        if self.constraints.contains_key(&edge_key(u, v)) {
                            continue;
                        }
                        if fan_degenerate(self.pts[u], self.pts[v], attempt_p) {
                            cav.push(outer);
                            grew = true;
                        }
                    }
                    if !grew {
                        break;
                    }
                }
                let boundary = self.cavity_boundary(&cav);
                // reject cavities that would swallow a constrained edge,
                // produce an inverted fan triangle, or pinch a vertex
                let ok_constraints = cav.iter().all(|&t| {
                    (0..3).all(|i| {
                        let u = self.tris[t][(i + 1) % 3];
                        let v = self.tris[t][(i + 2) % 3];
                        let n = self.adj[t][i];
                        !(self.constraints.contains_key(&edge_key(u, v))
                            && n != NONE
                            && cav.contains(&n))
                    })
                });
                let ok_orient = boundary.iter().all(|&(u, v, _, _)| {
                    orient(self.pts[u], self.pts[v], attempt_p) > 0.0
                        && !fan_degenerate(self.pts[u], self.pts[v], attempt_p)
                });
                let starts: HashSet<usize> = boundary.iter().map(|&(u, _, _, _)| u).collect();
                let ok_loop = starts.len() == boundary.len();
                if ok_constraints && ok_orient && ok_loop && !boundary.is_empty() {
                    return Ok(self.commit(attempt_p, &cav, &boundary));
                }
                let mut detail = String::new();
                for &(u, v, _, outer) in &boundary {
                    let o = orient(self.pts[u], self.pts[v], attempt_p);
                    let con = self.constraints.contains_key(&edge_key(u, v));
                    detail.push_str(&format!(
                        " edge({u},{v}) o={o:.3e} con={con} outer={}",
                        if outer == NONE { -1i64 } else { outer as i64 }
                    ));
                }
                diag = format!(
                    "attempt {attempt}: cav {} constraints {} orient {} loop {}:{detail}",
                    cav.len(), ok_constraints, ok_orient, ok_loop
                );
            }
            // deterministic nudge and retry, growing past the
            // degeneracy threshold
            let scale = 1e-10 * 10f64.powi(attempt);
            attempt_p = [
                p[0] + scale * (0.92387953 + attempt as f64 * 0.1),
                p[1] + scale * (0.38268343 - attempt as f64 * 0.07),
            ];
        }
        Err(Error::RefinementFailure(format!(
            "could not build a valid insertion cavity at ({}, {}): {}",
            p[0], p[1], diag
        )))
    }

    fn commit(&mut self, p: [f64; 2], cav: &[usize], boundary: &[(usize, usize, usize, usize)]) -> usize {
        let pid = self.pts.len();
        self.pts.push(p);
        for &t in cav {
            self.alive[t] = false;
        }
        // fan triangle per boundary edge
        let mut by_start: HashMap<usize, usize> = HashMap::new();
        let base = self.tris.len();
        for (k, &(u, v, owner, outer)) in boundary.iter().enumerate() {
            let t = base + k;
            self.tris.push([u, v, pid]);
            self.adj.push([NONE, NONE, outer]); // edge opposite pid = (u, v)
            self.alive.push(true);
            self.inside.push(self.inside[owner]);
            by_start.insert(u, t);
            if outer != NONE {
                // fix the outer triangle's pointer
                for i in 0..3 {
                    let a = self.tris[outer][(i + 1) % 3];
                    let b = self.tris[outer][(i + 2) % 3];
                    if edge_key(a, b) == edge_key(u, v) {
                        self.adj[outer][i] = t;
                    }
                }
            }
        }
        // link fans: triangle [u, v, p]: edge opposite u is (v, p) shared
        // with the fan starting at v; edge opposite v is (p, u) shared
        // with the fan ending at u
        for (k, &(u, v, _, _)) in boundary.iter().enumerate() {
            let t = base + k;
            let next = by_start[&v];
            self.adj[t][0] = next; // edge (v, p)
            self.adj[next][1] = t; // its edge (p, u=v)
            self.vert_tri[u] = t;
            let _ = u;
        }
        self.vert_tri.push(base);
        self.last_tri = base;
        pid
    }

    /// All alive triangles incident to vertex v.
    fn tris_around(&self, v: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let start = self.vert_tri[v];
        if !self.alive[start] || !self.tris[start].contains(&v) {
            // hint went stale; fall back to a scan
            return (0..self.tris.len())
                .filter(|&t| self.alive[t] && self.tris[t].contains(&v))
                .collect();
        }
        let mut seen = HashSet::new();
        let mut stack = vec![start];
        while let Some(t) = stack.pop() {
            if !seen.insert(t) {
                continue;
            }
            out.push(t);
            let iv = self.tris[t].iter().position(|&x| x == v).unwrap();
            for off in [1, 2] {
                let n = self.adj[t][(iv + off) % 3];
                if n != NONE && self.alive[n] && self.tris[n].contains(&v) && !seen.contains(&n) {
                    stack.push(n);
                }
            }
        }
        out
    }

    fn edge_exists(&self, a: usize, b: usize) -> bool {
        self.tris_around(a)
            .iter()
            .any(|&t| self.tris[t].contains(&b))
    }

    /// Flood the outside region from the super-square and mark the rest
    /// inside; constrained edges act as walls.
    fn classify_inside(&mut self) {
        for t in 0..self.tris.len() {
            self.inside[t] = self.alive[t];
        }
        let mut queue: VecDeque<usize> = (0..self.tris.len())
            .filter(|&t| self.alive[t] && self.tris[t].iter().any(|&v| v < 4))
            .collect();
        for &t in &queue {
            self.inside[t] = false;
        }
        let mut visited: HashSet<usize> = queue.iter().copied().collect();
        while let Some(t) = queue.pop_front() {
            for i in 0..3 {
                let n = self.adj[t][i];
                if n == NONE || !self.alive[n] || visited.contains(&n) {
                    continue;
                }
                let u = self.tris[t][(i + 1) % 3];
                let v = self.tris[t][(i + 2) % 3];
                if self.constraints.contains_key(&edge_key(u, v)) {
                    continue;
                }
                visited.insert(n);
                self.inside[n] = false;
                queue.push_back(n);
            }
        }
    }
}

/// Euclidean distance from a point to a boundary curve.
fn dist_point_to_geom(p: [f64; 2], geom: &crate::domain::CurveGeom) -> f64 {
    match *geom {
        crate::domain::CurveGeom::Segment { a, b } => {
            let dx = b[0] - a[0];
            let dy = b[1] - a[1];
            let len2 = dx * dx + dy * dy;
            let t = if len2 > 0.0 {
                (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let qx = a[0] + t * dx;
            let qy = a[1] + t * dy;
            ((p[0] - qx).powi(2) + (p[1] - qy).powi(2)).sqrt()
        }
        crate::domain::CurveGeom::Arc { center, radius, th0, sweep } => {
            let vx = p[0] - center[0];
            let vy = p[1] - center[1];
            let d = (vx * vx + vy * vy).sqrt();
            let ang = vy.atan2(vx);
            // is the angle inside the swept range?
            let rel = (ang - th0) * sweep.signum();
            let rel = rel.rem_euclid(2.0 * std::f64::consts::PI);
            if rel <= sweep.abs() {
                (d - radius).abs()
            } else {
                let pa = geom.point_at(0.0);
                let pb = geom.point_at(1.0);
                let da = ((p[0] - pa[0]).powi(2) + (p[1] - pa[1]).powi(2)).sqrt();
                let db = ((p[0] - pb[0]).powi(2) + (p[1] - pb[1]).powi(2)).sqrt();
                da.min(db)
            }
        }
    }
}

/// Smallest distance from a chord sample to any non-adjacent piece: the
/// local feature size that keeps opposite cusp walls from trading
/// encroachment splits forever.
fn local_feature_size(pieces: &[BoundaryPiece], pi: usize, samples: &[[f64; 2]]) -> f64 {
    let n = pieces.len();
    let mut lfs = f64::MAX;
    for (pj, other) in pieces.iter().enumerate() {
        if pj == pi || pj == (pi + 1) % n || (pj + 1) % n == pi {
            continue;
        }
        for &q in samples {
            lfs = lfs.min(dist_point_to_geom(q, &other.geom));
        }
    }
    lfs
}

/// Subdivide one piece: interior cut parameters such that every chord
/// has hyperbolic length ≤ h, sag ≤ h², and Euclidean length below the
/// local feature size.
fn piece_cuts(pieces: &[BoundaryPiece], pi: usize, h: f64) -> Vec<f64> {
    let piece = &pieces[pi];
    let mut cuts: Vec<f64> = Vec::new();
    let mut stack = vec![(0.0f64, 1.0f64, 0u32)];
    while let Some((t0, t1, depth)) = stack.pop() {
        let a = piece.geom.point_at(t0);
        let b = piece.geom.point_at(t1);
        let len = hyp_distance_coords(a, b);
        let mid_curve = piece.geom.point_at(0.5 * (t0 + t1));
        let mid_chord = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
        let sag = hyp_distance_coords(mid_curve, mid_chord);
        let len_euc = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
        let lfs = local_feature_size(pieces, pi, &[a, mid_curve, b]);
        if (len <= h && sag <= h * h && len_euc <= 0.8 * lfs) || depth >= 30 {
            if t1 < 1.0 {
                cuts.push(t1);
            }
            continue;
        }
        let tm = 0.5 * (t0 + t1);
        stack.push((tm, t1, depth + 1));
        stack.push((t0, tm, depth + 1));
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts
}

/// Subdivide every boundary piece into chords with hyperbolic length
/// ≈ h and sag ≤ h²; returns the loop points and per-segment sources.
fn subdivide_boundary(
    pieces: &[BoundaryPiece],
    h: f64,
) -> Result<(Vec<[f64; 2]>, Vec<(usize, usize, Constraint)>)> {
    let all_cuts: Vec<Vec<f64>> =
        (0..pieces.len()).map(|pi| piece_cuts(pieces, pi, h)).collect();
    // point layout: piece i contributes its start point followed by its
    // interior cut points; piece i+1's start closes piece i's last chord
    let mut piece_start = Vec::with_capacity(pieces.len());
    let mut points: Vec<[f64; 2]> = Vec::new();
    for (piece, cuts) in pieces.iter().zip(&all_cuts) {
        piece_start.push(points.len());
        points.push(piece.geom.point_at(0.0));
        for &t in cuts {
            points.push(piece.geom.point_at(t));
        }
    }
    let mut segs = Vec::new();
    for (pi, (piece, cuts)) in pieces.iter().zip(&all_cuts).enumerate() {
        let start = piece_start[pi];
        let next_start = piece_start[(pi + 1) % pieces.len()];
        let mut prev_t = 0.0;
        let mut prev_idx = start;
        for (k, &t) in cuts.iter().enumerate() {
            let idx = start + 1 + k;
            segs.push((
                prev_idx,
                idx,
                Constraint {
                    tag: piece.tag,
                    src: SegSource { piece: pi, t0: prev_t, t1: t },
                    a: prev_idx,
                    b: idx,
                },
            ));
            prev_t = t;
            prev_idx = idx;
        }
        segs.push((
            prev_idx,
            next_start,
            Constraint {
                tag: piece.tag,
                src: SegSource { piece: pi, t0: prev_t, t1: 1.0 },
                a: prev_idx,
                b: next_start,
            },
        ));
    }
    Ok((points, segs))
}

/// Delaunay-refine a domain into a graded quality mesh.
pub fn refine_mesh(spec: &DomainSpec, h: f64) -> Result<TriMesh> {
    let pieces = spec.boundary_pieces()?;
    let (points, raw_segs) = subdivide_boundary(&pieces, h)?;
    if points.len() < 3 {
        return Err(Error::RefinementFailure("boundary subdivision produced < 3 points".into()));
    }

    let mut dt = Dt::new();
    let mut vid: Vec<usize> = Vec::with_capacity(points.len());
    for p in &points {
        vid.push(dt.insert(*p)?);
    }

    // recover boundary segments, splitting on the source curve when a
    // segment is not already an edge
    let mut recover: VecDeque<(usize, usize, Constraint, u32)> = raw_segs
        .iter()
        .map(|&(a, b, c)| (vid[a], vid[b], Constraint { a: vid[a], b: vid[b], ..c }, 0))
        .collect();
    while let Some((a, b, c, depth)) = recover.pop_front() {
        if a == b {
            continue;
        }
        if dt.edge_exists(a, b) {
            dt.constraints.insert(edge_key(a, b), c);
            continue;
        }
        if depth >= 24 {
            return Err(Error::RefinementFailure(
                "boundary segment recovery did not terminate".into(),
            ));
        }
        let tm = 0.5 * (c.src.t0 + c.src.t1);
        let m = dt.insert(pieces[c.src.piece].geom.point_at(tm))?;
        recover.push_front((
            m,
            b,
            Constraint {
                tag: c.tag,
                src: SegSource { piece: c.src.piece, t0: tm, t1: c.src.t1 },
                a: m,
                b,
            },
            depth + 1,
        ));
        recover.push_front((
            a,
            m,
            Constraint {
                tag: c.tag,
                src: SegSource { piece: c.src.piece, t0: c.src.t0, t1: tm },
                a,
                b: m,
            },
            depth + 1,
        ));
    }

    dt.classify_inside();
    ruppert_refine(&mut dt, &pieces, h)?;
    // incremental insideness can drift in thin cusps; the constraint
    // loop is sealed now, so reflood for the authoritative labels
    dt.classify_inside();
    extract(&dt, h)
}

fn tri_min_angle_deg(p: [[f64; 2]; 3]) -> f64 {
    let mut worst = 180.0f64;
    for i in 0..3 {
        let o = p[i];
        let u = p[(i + 1) % 3];
        let v = p[(i + 2) % 3];
        let du = [u[0] - o[0], u[1] - o[1]];
        let dv = [v[0] - o[0], v[1] - o[1]];
        let dot = du[0] * dv[0] + du[1] * dv[1];
        let cross = du[0] * dv[1] - du[1] * dv[0];
        worst = worst.min(cross.abs().atan2(dot).to_degrees());
    }
    worst
}

fn is_bad(dt: &Dt, t: usize, h: f64) -> bool {
    if !dt.alive[t] || !dt.inside[t] {
        return false;
    }
    let p = dt.tri_pts(t);
    let cx = (p[0][0] + p[1][0] + p[2][0]) / 3.0;
    let cy = (p[0][1] + p[1][1] + p[2][1]) / 3.0;
    let target = local_size(h, cx, cy);
    let Some((_, r)) = circumcenter(p[0], p[1], p[2]) else {
        return true;
    };
    if r > 0.66 * target {
        return true;
    }
    tri_min_angle_deg(p) < MIN_ANGLE_DEG
}

fn encroaches(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> bool {
    encroach_depth(p, a, b) > 0.0
}

/// Positive when p lies strictly inside the diametral circle of (a, b);
/// larger means deeper, normalized by the circle radius squared.
fn encroach_depth(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let mx = (a[0] + b[0]) / 2.0;
    let my = (a[1] + b[1]) / 2.0;
    let r2 = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)) / 4.0;
    if r2 == 0.0 {
        return -1.0;
    }
    (r2 * (1.0 - 1e-12) - (p[0] - mx).powi(2) - (p[1] - my).powi(2)) / r2
}

/// Split a constrained segment at its source-curve midpoint; returns the
/// new vertex. Skips (returning None) when the segment is already at the
/// minimum admissible length.
fn split_segment(
    dt: &mut Dt,
    pieces: &[BoundaryPiece],
    key: (usize, usize),
    h: f64,
) -> Result<Option<usize>> {
    let Some(c) = dt.constraints.get(&key).copied() else {
        return Ok(None);
    };
    let a = dt.pts[key.0];
    let b = dt.pts[key.1];
    let mid = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
    let elen = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
    // the floor sits far below the target size: boundary features such
    // as truncation chords can be much shorter than h and the grading
    // cascade must be allowed to follow them down
    if elen < 0.02 * local_size(h, mid[0], mid[1]) {
        return Ok(None);
    }
    let tm = 0.5 * (c.src.t0 + c.src.t1);
    let p = pieces[c.src.piece].geom.point_at(tm);
    dt.constraints.remove(&key);
    let m = match dt.insert(p) {
        Ok(m) => m,
        Err(e) => {
            dt.constraints.insert(key, c);
            return Err(e);
        }
    };
    if m == c.a || m == c.b {
        // midpoint collapsed onto an endpoint; segment is unsplittable
        dt.constraints.insert(key, c);
        return Ok(None);
    }
    // the two halves must exist as edges of the updated triangulation
    for (u, v, t0, t1) in [(c.a, m, c.src.t0, tm), (m, c.b, tm, c.src.t1)] {
        if !dt.edge_exists(u, v) {
            return Err(Error::RefinementFailure(
                "segment split did not restore both halves".into(),
            ));
        }
        dt.constraints.insert(
            edge_key(u, v),
            Constraint { tag: c.tag, src: SegSource { piece: c.src.piece, t0, t1 }, a: u, b: v },
        );
    }
    Ok(Some(m))
}

/// Midpoint-split the longest non-constrained edge of triangle t; a
/// last-resort move when the circumcenter is unreachable. Honors the
/// same length floor as segment splits so it cannot recurse forever.
fn split_longest_open_edge(dt: &mut Dt, t: usize, h: f64) -> Result<Option<usize>> {
    let mut best: Option<(f64, usize, usize)> = None;
    for i in 0..3 {
        let u = dt.tris[t][(i + 1) % 3];
        let v = dt.tris[t][(i + 2) % 3];
        if dt.constraints.contains_key(&edge_key(u, v)) {
            continue;
        }
        let pu = dt.pts[u];
        let pv = dt.pts[v];
        let len2 = (pu[0] - pv[0]).powi(2) + (pu[1] - pv[1]).powi(2);
        if best.map(|(l, _, _)| len2 > l).unwrap_or(true) {
            best = Some((len2, u, v));
        }
    }
    let Some((len2, u, v)) = best else {
        return Ok(None);
    };
    let mid = [(dt.pts[u][0] + dt.pts[v][0]) / 2.0, (dt.pts[u][1] + dt.pts[v][1]) / 2.0];
    if len2.sqrt() < 0.02 * local_size(h, mid[0], mid[1]) {
        return Ok(None);
    }
    let m = dt.insert(mid)?;
    if m == u || m == v {
        return Ok(None);
    }
    Ok(Some(m))
}

fn ruppert_refine(dt: &mut Dt, pieces: &[BoundaryPiece], h: f64) -> Result<()> {
    let mut bad: VecDeque<usize> =
        (0..dt.tris.len()).filter(|&t| is_bad(dt, t, h)).collect();
    let mut excused: HashSet<usize> = HashSet::new();
    const INSERT_BUDGET: usize = 400_000;
    let mut inserted = 0usize;

    while let Some(t) = bad.pop_front() {
        if !dt.alive[t] || !dt.inside[t] || excused.contains(&t) || !is_bad(dt, t, h) {
            continue;
        }
        if inserted > INSERT_BUDGET {
            return Err(Error::RefinementFailure(format!(
                "refinement budget exhausted after {inserted} insertions"
            )));
        }
        let p = dt.tri_pts(t);
        let Some((cc, _)) = circumcenter(p[0], p[1], p[2]) else {
            excused.insert(t);
            continue;
        };
        // a circumcenter outside the domain is shielded by boundary
        // segments; split the one it encroaches most (found from the
        // cavity around the circumcenter, whichever side it is on)
        let target = dt.locate(cc);
        let inside_ok = target.map(|tt| dt.alive[tt] && dt.inside[tt]).unwrap_or(false);
        if !inside_ok {
            let mut candidates: Vec<(f64, (usize, usize))> = Vec::new();
            if let Some(t_out) = target {
                let cav = dt.cavity(t_out, cc, -1e-14);
                for &ct in &cav {
                    for i in 0..3 {
                        let u = dt.tris[ct][(i + 1) % 3];
                        let v = dt.tris[ct][(i + 2) % 3];
                        let key = edge_key(u, v);
                        if dt.constraints.contains_key(&key) {
                            let depth = encroach_depth(cc, dt.pts[u], dt.pts[v]);
                            if depth > 0.0 {
                                candidates.push((depth, key));
                            }
                        }
                    }
                }
            }
            for i in 0..3 {
                let u = dt.tris[t][(i + 1) % 3];
                let v = dt.tris[t][(i + 2) % 3];
                let key = edge_key(u, v);
                if dt.constraints.contains_key(&key) {
                    candidates.push((0.0, key));
                }
            }
            candidates.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
            candidates.dedup_by_key(|c| c.1);
            let mut progressed = false;
            for (_, key) in candidates {
                if let Some(m) = split_segment(dt, pieces, key, h)? {
                    inserted += 1;
                    for tt in dt.tris_around(m) {
                        if is_bad(dt, tt, h) {
                            bad.push_back(tt);
                        }
                    }
                    progressed = true;
                    break;
                }
            }
            if !progressed {
                if let Some(m) = split_longest_open_edge(dt, t, h)? {
                    inserted += 1;
                    for tt in dt.tris_around(m) {
                        if is_bad(dt, tt, h) {
                            bad.push_back(tt);
                        }
                    }
                    progressed = true;
                }
            }
            if progressed {
                if dt.alive[t] && is_bad(dt, t, h) {
                    bad.push_back(t);
                }
            } else {
                excused.insert(t);
            }
            continue;
        }
        // Ruppert rule: if the circumcenter encroaches a nearby
        // constrained segment, split the segment instead
        let t0 = target.unwrap();
        let cav = dt.cavity(t0, cc, -1e-14);
        let mut encroached: Option<(usize, usize)> = None;
        'outer: for &ct in &cav {
            for i in 0..3 {
                let u = dt.tris[ct][(i + 1) % 3];
                let v = dt.tris[ct][(i + 2) % 3];
                let key = edge_key(u, v);
                if dt.constraints.contains_key(&key) && encroaches(cc, dt.pts[u], dt.pts[v]) {
                    encroached = Some(key);
                    break 'outer;
                }
            }
        }
        if let Some(key) = encroached {
            match split_segment(dt, pieces, key, h)? {
                Some(m) => {
                    inserted += 1;
                    for tt in dt.tris_around(m) {
                        if is_bad(dt, tt, h) {
                            bad.push_back(tt);
                        }
                    }
                    bad.push_back(t);
                }
                None => {
                    excused.insert(t);
                }
            }
            continue;
        }
        let m = dt.insert(cc)?;
        inserted += 1;
        for tt in dt.tris_around(m) {
            if is_bad(dt, tt, h) {
                bad.push_back(tt);
            }
        }
    }
    Ok(())
}

fn extract(dt: &Dt, h: f64) -> Result<TriMesh> {
    let mut vmap: Vec<usize> = vec![NONE; dt.pts.len()];
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for t in 0..dt.tris.len() {
        if !dt.alive[t] || !dt.inside[t] {
            continue;
        }
        let mut tri = [0usize; 3];
        for (k, &v) in dt.tris[t].iter().enumerate() {
            if vmap[v] == NONE {
                vmap[v] = vertices.len();
                vertices.push(dt.pts[v]);
            }
            tri[k] = vmap[v];
        }
        // enforce CCW
        let pa = vertices[tri[0]];
        let pb = vertices[tri[1]];
        let pc = vertices[tri[2]];
        if orient(pa, pb, pc) < 0.0 {
            tri.swap(1, 2);
        }
        triangles.push(tri);
    }
    let mut keys: Vec<(usize, usize)> = dt.constraints.keys().copied().collect();
    keys.sort_unstable();
    let mut boundary_edges = Vec::with_capacity(keys.len());
    for key in keys {
        let c = dt.constraints[&key];
        let (a, b) = (vmap[key.0], vmap[key.1]);
        if a == NONE || b == NONE {
            return Err(Error::RefinementFailure(
                "constrained edge lost during extraction".into(),
            ));
        }
        boundary_edges.push(BoundaryEdge { a, b, tag: c.tag });
    }
    Ok(TriMesh { vertices, triangles, boundary_edges, target_h: h })
}
