//! Exact-model computations in the Poincaré disk: distances, geodesics,
//! Möbius isometries, polygon areas and convexity checks.
//!
//! Model coordinates live on the open unit disk with metric factor
//! λ(x) = 2/(1 − |x|²); geodesics are diameters and circular arcs meeting
//! the unit circle orthogonally. All values are immutable after
//! construction and every operation is a pure function.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Interior points must satisfy |p| < 1 − 1e−9 so the conformal factor
/// stays representable.
pub const INTERIOR_NORM_LIMIT: f64 = 1.0 - 1e-9;

const IDEAL_TOL: f64 = 1e-12;

/// A point of the Poincaré disk. Ideal points sit on the unit circle and
/// are a distinct flagged state; they are never accepted by metric
/// operations such as [`hyp_distance`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiskPoint {
    x: f64,
    y: f64,
    ideal: bool,
}

impl DiskPoint {
    /// Interior point constructor; rejects coordinates with |p| ≥ 1 − 1e−9.
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !(x.is_finite() && y.is_finite()) || x * x + y * y >= INTERIOR_NORM_LIMIT * INTERIOR_NORM_LIMIT {
            return Err(Error::PointOutsideDisk { x, y });
        }
        Ok(Self { x, y, ideal: false })
    }

    /// Ideal (boundary-circle) point; the coordinates must satisfy
    /// |p| = 1 to within 1e−12 and are renormalized onto the circle.
    pub fn ideal(x: f64, y: f64) -> Result<Self> {
        let n = (x * x + y * y).sqrt();
        if !(n.is_finite()) || (n - 1.0).abs() > IDEAL_TOL {
            return Err(Error::NotOnIdealBoundary { x, y });
        }
        Ok(Self { x: x / n, y: y / n, ideal: true })
    }

    /// Ideal point at angle θ on the unit circle.
    pub fn ideal_at_angle(theta: f64) -> Self {
        Self { x: theta.cos(), y: theta.sin(), ideal: true }
    }

    pub fn origin() -> Self {
        Self { x: 0.0, y: 0.0, ideal: false }
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn is_ideal(&self) -> bool {
        self.ideal
    }

    pub fn norm_sq(&self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn to_complex(&self) -> Complex64 {
        Complex64::new(self.x, self.y)
    }

    pub fn coords(&self) -> [f64; 2] {
        [self.x, self.y]
    }

    fn require_interior(&self) -> Result<()> {
        if self.ideal {
            return Err(Error::IdealPointNotAllowed);
        }
        Ok(())
    }
}

/// Conformal metric factor λ(p) = 2/(1 − |p|²).
pub fn conformal_factor(p: &DiskPoint) -> f64 {
    2.0 / (1.0 - p.norm_sq())
}

/// Hyperbolic distance arccosh(1 + 2|p−q|² / ((1−|p|²)(1−|q|²))).
pub fn hyp_distance(p: &DiskPoint, q: &DiskPoint) -> Result<f64> {
    p.require_interior()?;
    q.require_interior()?;
    let dx = p.x - q.x;
    let dy = p.y - q.y;
    let d2 = dx * dx + dy * dy;
    let denom = (1.0 - p.norm_sq()) * (1.0 - q.norm_sq());
    Ok((1.0 + 2.0 * d2 / denom).acosh())
}

/// Hyperbolic distance between raw model coordinates (both interior).
/// Cheap path for mesh post-processing where points are plain arrays.
pub fn hyp_distance_coords(p: [f64; 2], q: [f64; 2]) -> f64 {
    let d2 = (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2);
    let denom = (1.0 - p[0] * p[0] - p[1] * p[1]) * (1.0 - q[0] * q[0] - q[1] * q[1]);
    (1.0 + 2.0 * d2 / denom).acosh()
}

/// Kind of a geodesic segment in the model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GeodesicKind {
    /// A chord of a diameter line through the origin.
    DiameterLine,
    /// An arc of a circle orthogonal to the unit circle.
    CircularArc { center: [f64; 2], radius: f64 },
}

/// Geodesic segment between two model points (interior or ideal).
#[derive(Clone, Copy, Debug)]
pub struct GeodesicSegment {
    pub a: DiskPoint,
    pub b: DiskPoint,
    pub kind: GeodesicKind,
}

impl GeodesicSegment {
    /// Point at parameter t ∈ [0, 1]. Linear in the chord for diameter
    /// segments, linear in arc angle otherwise.
    pub fn point_at(&self, t: f64) -> [f64; 2] {
        match self.kind {
            GeodesicKind::DiameterLine => [
                self.a.x + t * (self.b.x - self.a.x),
                self.a.y + t * (self.b.y - self.a.y),
            ],
            GeodesicKind::CircularArc { center, radius } => {
                let th0 = (self.a.y - center[1]).atan2(self.a.x - center[0]);
                let th1 = (self.b.y - center[1]).atan2(self.b.x - center[0]);
                let sweep = wrap_angle(th1 - th0);
                let th = th0 + t * sweep;
                [center[0] + radius * th.cos(), center[1] + radius * th.sin()]
            }
        }
    }

    /// Unit tangent in travel direction (a → b) at parameter t.
    pub fn tangent_at(&self, t: f64) -> [f64; 2] {
        match self.kind {
            GeodesicKind::DiameterLine => {
                let dx = self.b.x - self.a.x;
                let dy = self.b.y - self.a.y;
                let n = (dx * dx + dy * dy).sqrt();
                [dx / n, dy / n]
            }
            GeodesicKind::CircularArc { center, radius } => {
                let th0 = (self.a.y - center[1]).atan2(self.a.x - center[0]);
                let th1 = (self.b.y - center[1]).atan2(self.b.x - center[0]);
                let sweep = wrap_angle(th1 - th0);
                let th = th0 + t * sweep;
                let s = sweep.signum();
                let _ = radius;
                [-s * th.sin(), s * th.cos()]
            }
        }
    }

    /// Hyperbolic length (finite only when both endpoints are interior).
    pub fn hyperbolic_length(&self) -> Result<f64> {
        hyp_distance(&self.a, &self.b)
    }
}

fn wrap_angle(t: f64) -> f64 {
    let mut t = t % (2.0 * std::f64::consts::PI);
    if t > std::f64::consts::PI {
        t -= 2.0 * std::f64::consts::PI;
    } else if t < -std::f64::consts::PI {
        t += 2.0 * std::f64::consts::PI;
    }
    t
}

/// Geodesic through two distinct points. Ideal endpoints are allowed;
/// antipodal ideal points and any pair collinear with the origin yield a
/// diameter segment.
pub fn geodesic_between(p: &DiskPoint, q: &DiskPoint) -> Result<GeodesicSegment> {
    let dx = p.x - q.x;
    let dy = p.y - q.y;
    if dx * dx + dy * dy < 1e-28 {
        return Err(Error::DegenerateGeodesic);
    }
    let cross = p.x * q.y - p.y * q.x;
    // Collinear with origin: the geodesic is a diameter.
    let scale = (p.norm() + q.norm()).max(1e-30);
    if cross.abs() <= 1e-14 * scale * scale {
        return Ok(GeodesicSegment { a: *p, b: *q, kind: GeodesicKind::DiameterLine });
    }
    // Orthogonal circle: 2 m·p = |p|² + 1, 2 m·q = |q|² + 1.
    let bp = p.norm_sq() + 1.0;
    let bq = q.norm_sq() + 1.0;
    let det = 4.0 * cross;
    let mx = (bp * 2.0 * q.y - bq * 2.0 * p.y) / det;
    let my = (bq * 2.0 * p.x - bp * 2.0 * q.x) / det;
    let radius = (mx * mx + my * my - 1.0).sqrt();
    Ok(GeodesicSegment {
        a: *p,
        b: *q,
        kind: GeodesicKind::CircularArc { center: [mx, my], radius },
    })
}

/// Hyperbolic polygon area (n − 2)π − Σ interior angles (Gauss–Bonnet).
pub fn polygon_area(angles: &[f64]) -> Result<f64> {
    for &a in angles {
        if !(0.0..std::f64::consts::PI).contains(&a) {
            return Err(Error::InvalidAngle(a));
        }
    }
    let n = angles.len() as f64;
    let area = (n - 2.0) * std::f64::consts::PI - angles.iter().sum::<f64>();
    if area <= 0.0 {
        return Err(Error::NonPositiveArea(area));
    }
    Ok(area)
}

/// Interior angles of a geodesic polygon realized from its vertices
/// (counterclockwise order). Ideal vertices contribute angle 0 exactly.
///
/// Angles are recovered from the turn between the incoming and outgoing
/// geodesic tangents, so reflex vertices come out > π.
pub fn interior_angles(vertices: &[DiskPoint]) -> Result<Vec<f64>> {
    let n = vertices.len();
    if n < 3 {
        return Err(Error::InvalidPolygon(format!("{n} vertices, need at least 3")));
    }
    let mut angles = Vec::with_capacity(n);
    let mut turn_sum = 0.0;
    for i in 0..n {
        let prev = &vertices[(i + n - 1) % n];
        let cur = &vertices[i];
        let next = &vertices[(i + 1) % n];
        if cur.is_ideal() {
            angles.push(0.0);
            turn_sum += std::f64::consts::PI;
            continue;
        }
        let seg_in = geodesic_between(prev, cur)?;
        let seg_out = geodesic_between(cur, next)?;
        let arrive = seg_in.tangent_at(1.0);
        let leave = seg_out.tangent_at(0.0);
        let turn = (arrive[0] * leave[1] - arrive[1] * leave[0])
            .atan2(arrive[0] * leave[0] + arrive[1] * leave[1]);
        turn_sum += turn;
        angles.push(std::f64::consts::PI - turn);
    }
    if turn_sum <= 0.0 {
        return Err(Error::InvalidPolygon("vertices are not in counterclockwise order".into()));
    }
    Ok(angles)
}

/// Convexity test for a geodesic polygon: every interior angle ≤ π
/// (ideal vertices count as 0). Errors on a self-intersecting boundary.
pub fn is_geodesically_convex(vertices: &[DiskPoint]) -> Result<bool> {
    if boundary_self_intersects(vertices)? {
        return Err(Error::SelfIntersectingBoundary);
    }
    let angles = interior_angles(vertices)?;
    Ok(angles.iter().all(|&a| a <= std::f64::consts::PI + 1e-10))
}

/// Approximate each edge by a polyline and test pairwise crossings of
/// non-adjacent edges.
fn boundary_self_intersects(vertices: &[DiskPoint]) -> Result<bool> {
    const SAMPLES: usize = 24;
    let n = vertices.len();
    let mut chains: Vec<Vec<[f64; 2]>> = Vec::with_capacity(n);
    for i in 0..n {
        let seg = geodesic_between(&vertices[i], &vertices[(i + 1) % n])?;
        let mut pts = Vec::with_capacity(SAMPLES + 1);
        for k in 0..=SAMPLES {
            pts.push(seg.point_at(k as f64 / SAMPLES as f64));
        }
        chains.push(pts);
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue; // adjacent edges share a vertex
            }
            for w in chains[i].windows(2) {
                for v in chains[j].windows(2) {
                    if segments_cross(w[0], w[1], v[0], v[1]) {
                        return Ok(true);
                    }
                }
            }
        }
    }
    Ok(false)
}

fn segments_cross(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    let orient = |p: [f64; 2], q: [f64; 2], r: [f64; 2]| {
        (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])
    };
    let d1 = orient(a, b, c);
    let d2 = orient(a, b, d);
    let d3 = orient(c, d, a);
    let d4 = orient(c, d, b);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

/// Orientation-preserving isometry z ↦ (az + b)/(b̄z + ā) with
/// |a|² − |b|² = 1 (SU(1,1) normalization).
#[derive(Clone, Copy, Debug)]
pub struct MobiusIsometry {
    a: Complex64,
    b: Complex64,
}

impl MobiusIsometry {
    pub fn new(a: Complex64, b: Complex64) -> Result<Self> {
        let det = a.norm_sqr() - b.norm_sqr();
        if (det - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidMobius(det));
        }
        Ok(Self { a, b })
    }

    pub fn identity() -> Self {
        Self { a: Complex64::new(1.0, 0.0), b: Complex64::new(0.0, 0.0) }
    }

    /// Rotation about the origin by θ.
    pub fn rotation(theta: f64) -> Self {
        Self { a: Complex64::from_polar(1.0, theta / 2.0), b: Complex64::new(0.0, 0.0) }
    }

    /// The isometry mapping p to the origin: z ↦ (z − p)/(1 − p̄z).
    pub fn translate_to_origin(p: &DiskPoint) -> Result<Self> {
        p.require_interior()?;
        let zp = p.to_complex();
        let s = (1.0 - zp.norm_sqr()).sqrt();
        Ok(Self { a: Complex64::new(1.0 / s, 0.0), b: -zp / s })
    }

    /// Inverse of [`translate_to_origin`]: maps the origin to p.
    pub fn translate_from_origin(p: &DiskPoint) -> Result<Self> {
        Ok(Self::translate_to_origin(p)?.inverse())
    }

    pub fn inverse(&self) -> Self {
        Self { a: self.a.conj(), b: -self.b }
    }

    /// Composition self ∘ other (apply `other` first). Renormalized to
    /// keep |a|² − |b|² = 1 against floating drift.
    pub fn compose(&self, other: &Self) -> Self {
        let a = self.a * other.a + self.b * other.b.conj();
        let b = self.a * other.b + self.b * other.a.conj();
        let s = (a.norm_sqr() - b.norm_sqr()).sqrt();
        Self { a: a / s, b: b / s }
    }

    pub fn apply_complex(&self, z: Complex64) -> Complex64 {
        (self.a * z + self.b) / (self.b.conj() * z + self.a.conj())
    }

    /// Apply to a point; ideal points map to ideal points.
    pub fn apply(&self, p: &DiskPoint) -> DiskPoint {
        let w = self.apply_complex(p.to_complex());
        if p.ideal {
            let n = w.norm();
            DiskPoint { x: w.re / n, y: w.im / n, ideal: true }
        } else {
            DiskPoint { x: w.re, y: w.im, ideal: false }
        }
    }

    pub fn params(&self) -> (Complex64, Complex64) {
        (self.a, self.b)
    }
}

/// Alias for the operation named in the interface: isometry sending p to 0.
pub fn translate_to_origin(p: &DiskPoint) -> Result<MobiusIsometry> {
    MobiusIsometry::translate_to_origin(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    const PI: f64 = std::f64::consts::PI;

    #[test]
    fn distance_coincident_is_zero() {
        let p = DiskPoint::origin();
        assert_eq!(hyp_distance(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn distance_origin_half() {
        // arccosh(1 + 2·0.25/0.75) = arccosh(5/3) = ln 3
        let p = DiskPoint::origin();
        let q = DiskPoint::new(0.5, 0.0).unwrap();
        let d = hyp_distance(&p, &q).unwrap();
        assert!((d - 3.0f64.ln()).abs() < 1e-12, "d = {d}");
    }

    #[test]
    fn distance_tanh_half_is_one() {
        // d(0, x) = 2 artanh |x|, so |x| = tanh(1/2) gives distance 1.
        let p = DiskPoint::origin();
        let q = DiskPoint::new(0.5f64.tanh(), 0.0).unwrap();
        let d = hyp_distance(&p, &q).unwrap();
        assert!((d - 1.0).abs() < 1e-12, "d = {d}");
    }

    #[test]
    fn distance_rejects_ideal_and_exterior() {
        assert!(DiskPoint::new(1.0, 0.0).is_err());
        assert!(DiskPoint::new(0.8, 0.8).is_err());
        let v = DiskPoint::ideal(1.0, 0.0).unwrap();
        assert!(matches!(hyp_distance(&v, &DiskPoint::origin()), Err(Error::IdealPointNotAllowed)));
    }

    #[test]
    fn geodesic_through_origin_is_diameter() {
        let p = DiskPoint::origin();
        let q = DiskPoint::new(0.5, 0.0).unwrap();
        let seg = geodesic_between(&p, &q).unwrap();
        assert_eq!(seg.kind, GeodesicKind::DiameterLine);
    }

    #[test]
    fn geodesic_antipodal_ideals_is_diameter() {
        let p = DiskPoint::ideal(1.0, 0.0).unwrap();
        let q = DiskPoint::ideal(-1.0, 0.0).unwrap();
        let seg = geodesic_between(&p, &q).unwrap();
        assert_eq!(seg.kind, GeodesicKind::DiameterLine);
    }

    #[test]
    fn geodesic_arc_is_orthogonal_to_circle() {
        let p = DiskPoint::new(0.5, 0.0).unwrap();
        let q = DiskPoint::new(0.0, 0.5).unwrap();
        let seg = geodesic_between(&p, &q).unwrap();
        match seg.kind {
            GeodesicKind::CircularArc { center, radius } => {
                let c2 = center[0] * center[0] + center[1] * center[1];
                assert!((c2 - radius * radius - 1.0).abs() < 1e-10);
            }
            _ => panic!("expected arc"),
        }
        // sampled points satisfy the circle equation
        for k in 0..=8 {
            let x = seg.point_at(k as f64 / 8.0);
            if let GeodesicKind::CircularArc { center, radius } = seg.kind {
                let r = ((x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2)).sqrt();
                assert!((r - radius).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn geodesic_rejects_coincident() {
        let p = DiskPoint::new(0.3, 0.1).unwrap();
        assert!(matches!(geodesic_between(&p, &p), Err(Error::DegenerateGeodesic)));
    }

    #[test]
    fn area_triangle_quarter_pi_angles() {
        let a = polygon_area(&[PI / 4.0, PI / 4.0, PI / 4.0]).unwrap();
        assert!((a - PI / 4.0).abs() < 1e-15);
    }

    #[test]
    fn area_ideal_triangle_is_pi() {
        let a = polygon_area(&[0.0, 0.0, 0.0]).unwrap();
        assert!((a - PI).abs() < 1e-15);
    }

    #[test]
    fn area_ideal_18gon_is_16pi() {
        let a = polygon_area(&vec![0.0; 18]).unwrap();
        assert!((a - 16.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn area_rejects_flat_polygon() {
        // Euclidean triangle: angle sum = pi leaves zero area.
        assert!(polygon_area(&[PI / 2.0, PI / 4.0, PI / 4.0]).is_err());
    }

    fn regular_polygon(n: usize, model_radius: f64) -> Vec<DiskPoint> {
        (0..n)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / n as f64;
                DiskPoint::new(model_radius * t.cos(), model_radius * t.sin()).unwrap()
            })
            .collect()
    }

    #[test]
    fn regular_square_is_convex() {
        assert!(is_geodesically_convex(&regular_polygon(4, 0.5)).unwrap());
    }

    #[test]
    fn ideal_polygon_is_convex() {
        let verts: Vec<DiskPoint> =
            (0..7).map(|k| DiskPoint::ideal_at_angle(2.0 * PI * k as f64 / 7.0)).collect();
        assert!(is_geodesically_convex(&verts).unwrap());
    }

    #[test]
    fn l_shaped_hexagon_is_not_convex() {
        // Reflex corner at (0.2, 0.2).
        let pts = [
            (-0.5, -0.5),
            (0.5, -0.5),
            (0.5, 0.2),
            (0.2, 0.2),
            (0.2, 0.5),
            (-0.5, 0.5),
        ];
        let verts: Vec<DiskPoint> = pts.iter().map(|&(x, y)| DiskPoint::new(x, y).unwrap()).collect();
        assert!(!is_geodesically_convex(&verts).unwrap());
        let angles = interior_angles(&verts).unwrap();
        assert!(angles[3] > PI, "reflex angle = {}", angles[3]);
    }

    #[test]
    fn realized_triangle_area_matches_gauss_bonnet() {
        let verts = regular_polygon(3, 0.55);
        let angles = interior_angles(&verts).unwrap();
        let area = polygon_area(&angles).unwrap();
        assert!(area > 0.0);
        // Same value recomputed after rotating the triangle by an isometry.
        let rot = MobiusIsometry::rotation(0.7);
        let moved: Vec<DiskPoint> = verts.iter().map(|v| rot.apply(v)).collect();
        let angles2 = interior_angles(&moved).unwrap();
        let area2 = polygon_area(&angles2).unwrap();
        assert!((area - area2).abs() < 1e-10);
    }

    #[test]
    fn translate_to_origin_maps_p_to_zero() {
        let p = DiskPoint::new(0.5, 0.0).unwrap();
        let g = translate_to_origin(&p).unwrap();
        let image = g.apply(&p);
        assert!(image.norm() < 1e-14);
        let id = translate_to_origin(&DiskPoint::origin()).unwrap();
        let q = DiskPoint::new(0.3, -0.2).unwrap();
        let iq = id.apply(&q);
        assert!((iq.x() - q.x()).abs() < 1e-15 && (iq.y() - q.y()).abs() < 1e-15);
    }

    #[test]
    fn isometry_preserves_distance() {
        let g = MobiusIsometry::translate_to_origin(&DiskPoint::new(0.4, 0.3).unwrap()).unwrap();
        let r = MobiusIsometry::rotation(1.1);
        let g = g.compose(&r);
        let p = DiskPoint::new(-0.2, 0.6).unwrap();
        let q = DiskPoint::new(0.55, -0.1).unwrap();
        let d0 = hyp_distance(&p, &q).unwrap();
        let d1 = hyp_distance(&g.apply(&p), &g.apply(&q)).unwrap();
        assert!((d0 - d1).abs() < 1e-10, "d0={d0} d1={d1}");
    }

    #[test]
    fn composition_stays_isometry() {
        let g1 = MobiusIsometry::translate_from_origin(&DiskPoint::new(0.7, 0.1).unwrap()).unwrap();
        let g2 = MobiusIsometry::translate_from_origin(&DiskPoint::new(-0.3, 0.5).unwrap()).unwrap();
        let g = g1.compose(&g2);
        let (a, b) = g.params();
        assert!((a.norm_sqr() - b.norm_sqr() - 1.0).abs() < 1e-12);
    }
}
