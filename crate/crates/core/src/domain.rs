//! Declarative domain descriptions and their boundary geometry.
//!
//! Each domain variant (metric disk, geodesic polygon, truncated regular
//! ideal polygon) implements the [`DomainShape`] strategy trait and is
//! registered by name in a [`DomainRegistry`]; JSON specs select the
//! variant at runtime through their `"type"` field. A [`DomainSpec`]
//! couples a shape with optional Dirichlet boundary markup.

use std::path::Path;

use serde::Deserialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::geometry::{
    geodesic_between, hyp_distance, interior_angles, is_geodesically_convex, polygon_area,
    DiskPoint, GeodesicSegment, MobiusIsometry,
};
use crate::special::quad_integrate;

/// Boundary condition tag carried by boundary curves and mesh edges.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryTag {
    Neumann,
    Dirichlet,
    Truncation,
}

/// Exact boundary curve in model coordinates. Geodesic edges, metric
/// circles and truncation chords are all straight segments or circular
/// arcs in the Poincaré disk.
#[derive(Clone, Debug)]
pub enum CurveGeom {
    Segment { a: [f64; 2], b: [f64; 2] },
    /// Circular arc from angle `th0` sweeping by `sweep` (signed).
    Arc { center: [f64; 2], radius: f64, th0: f64, sweep: f64 },
}

impl CurveGeom {
    pub fn from_geodesic(seg: &GeodesicSegment) -> Self {
        match seg.kind {
            crate::geometry::GeodesicKind::DiameterLine => CurveGeom::Segment {
                a: [seg.a.x(), seg.a.y()],
                b: [seg.b.x(), seg.b.y()],
            },
            crate::geometry::GeodesicKind::CircularArc { center, radius } => {
                let th0 = (seg.a.y() - center[1]).atan2(seg.a.x() - center[0]);
                let th1 = (seg.b.y() - center[1]).atan2(seg.b.x() - center[0]);
                let mut sweep = (th1 - th0) % (2.0 * std::f64::consts::PI);
                if sweep > std::f64::consts::PI {
                    sweep -= 2.0 * std::f64::consts::PI;
                } else if sweep < -std::f64::consts::PI {
                    sweep += 2.0 * std::f64::consts::PI;
                }
                CurveGeom::Arc { center, radius, th0, sweep }
            }
        }
    }

    pub fn point_at(&self, t: f64) -> [f64; 2] {
        match *self {
            CurveGeom::Segment { a, b } => [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])],
            CurveGeom::Arc { center, radius, th0, sweep } => {
                let th = th0 + t * sweep;
                [center[0] + radius * th.cos(), center[1] + radius * th.sin()]
            }
        }
    }

    /// Euclidean speed |x'(t)| (constant along both kinds).
    fn speed(&self) -> f64 {
        match *self {
            CurveGeom::Segment { a, b } => ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt(),
            CurveGeom::Arc { radius, sweep, .. } => radius * sweep.abs(),
        }
    }

    /// Hyperbolic length of the sub-curve [0, t].
    pub fn hyperbolic_length_to(&self, t: f64) -> Result<f64> {
        let speed = self.speed();
        if speed == 0.0 || t == 0.0 {
            return Ok(0.0);
        }
        let f = |u: f64| {
            let p = self.point_at(u);
            2.0 / (1.0 - p[0] * p[0] - p[1] * p[1]) * speed
        };
        quad_integrate(&f, 0.0, t, 1e-11)
    }

    pub fn hyperbolic_length(&self) -> Result<f64> {
        self.hyperbolic_length_to(1.0)
    }

    pub fn split_at(&self, t: f64) -> (CurveGeom, CurveGeom) {
        let m = self.point_at(t);
        match *self {
            CurveGeom::Segment { a, b } => (
                CurveGeom::Segment { a, b: m },
                CurveGeom::Segment { a: m, b },
            ),
            CurveGeom::Arc { center, radius, th0, sweep } => (
                CurveGeom::Arc { center, radius, th0, sweep: t * sweep },
                CurveGeom::Arc { center, radius, th0: th0 + t * sweep, sweep: (1.0 - t) * sweep },
            ),
        }
    }

    /// Parameter at which the sub-curve reaches hyperbolic arclength `s`.
    pub fn param_at_arclength(&self, s: f64) -> Result<f64> {
        let total = self.hyperbolic_length()?;
        if s <= 0.0 {
            return Ok(0.0);
        }
        if s >= total {
            return Ok(1.0);
        }
        let mut lo = 0.0;
        let mut hi = 1.0;
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if self.hyperbolic_length_to(mid)? < s {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// One tagged piece of a domain boundary loop.
#[derive(Clone, Debug)]
pub struct BoundaryPiece {
    pub geom: CurveGeom,
    pub tag: BoundaryTag,
}

/// Strategy trait for domain variants. Implementations must produce a
/// counterclockwise loop of exact boundary pieces; everything downstream
/// (meshing, assembly, analysis) is variant-agnostic.
pub trait DomainShape: Send + Sync {
    /// Registry key; equals the JSON `"type"` tag.
    fn kind(&self) -> &'static str;

    fn validate(&self) -> Result<()>;

    /// Closed CCW boundary loop. Pieces carry their default tags
    /// (`Neumann` except truncation cuts).
    fn boundary_pieces(&self) -> Result<Vec<BoundaryPiece>>;

    /// Closed-form or Gauss–Bonnet area when available.
    fn exact_area(&self) -> Option<f64>;

    fn is_convex(&self) -> Result<bool>;

    fn to_json(&self) -> Value;

    /// Image of the domain under an isometry, when representable.
    fn transformed(&self, g: &MobiusIsometry) -> Result<Box<dyn DomainShape>>;

    fn clone_box(&self) -> Box<dyn DomainShape>;

    /// Metric-disk fast path: (hyperbolic center, radius).
    fn as_disk(&self) -> Option<(DiskPoint, f64)> {
        None
    }
}

/// Connected Dirichlet subarc in boundary arclength coordinates.
#[derive(Clone, Copy, Debug, Deserialize, serde::Serialize)]
pub struct DirichletArc {
    pub start: f64,
    pub end: f64,
}

/// A meshable domain: a shape strategy plus optional Dirichlet markup.
pub struct DomainSpec {
    shape: Box<dyn DomainShape>,
    dirichlet: Option<DirichletArc>,
}

impl Clone for DomainSpec {
    fn clone(&self) -> Self {
        Self { shape: self.shape.clone_box(), dirichlet: self.dirichlet }
    }
}

impl std::fmt::Debug for DomainSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DomainSpec")
            .field("kind", &self.shape.kind())
            .field("dirichlet", &self.dirichlet)
            .finish()
    }
}

impl DomainSpec {
    pub fn new(shape: Box<dyn DomainShape>) -> Self {
        Self { shape, dirichlet: None }
    }

    pub fn disk(radius: f64) -> Result<Self> {
        Ok(Self::new(Box::new(DiskDomain { center: DiskPoint::origin(), radius })))
    }

    pub fn disk_at(center: DiskPoint, radius: f64) -> Result<Self> {
        Ok(Self::new(Box::new(DiskDomain { center, radius })))
    }

    pub fn polygon(vertices: Vec<DiskPoint>) -> Result<Self> {
        Ok(Self::new(Box::new(PolygonDomain { vertices })))
    }

    pub fn ideal_polygon(n: usize, truncation_depth: f64) -> Result<Self> {
        Ok(Self::new(Box::new(IdealPolygonDomain { n, depth: truncation_depth })))
    }

    pub fn with_dirichlet_arc(mut self, start: f64, end: f64) -> Self {
        self.dirichlet = Some(DirichletArc { start, end });
        self
    }

    pub fn shape(&self) -> &dyn DomainShape {
        self.shape.as_ref()
    }

    pub fn dirichlet_arc(&self) -> Option<DirichletArc> {
        self.dirichlet
    }

    pub fn validate(&self) -> Result<()> {
        self.shape.validate()?;
        if let Some(arc) = self.dirichlet {
            let total = self.boundary_length()?;
            if !(arc.start >= 0.0 && arc.start < arc.end && arc.end <= total + 1e-9) {
                return Err(Error::SpecValidation(format!(
                    "dirichlet arc [{}, {}] must satisfy 0 <= start < end <= boundary length {total:.6}",
                    arc.start, arc.end
                )));
            }
        }
        Ok(())
    }

    pub fn boundary_length(&self) -> Result<f64> {
        let mut total = 0.0;
        for p in self.shape.boundary_pieces()? {
            total += p.geom.hyperbolic_length()?;
        }
        Ok(total)
    }

    /// Boundary loop with the Dirichlet arc applied: pieces inside
    /// [start, end] (arclength from the loop origin) are retagged, with
    /// splits at the arc endpoints so the run is exact and contiguous.
    pub fn boundary_pieces(&self) -> Result<Vec<BoundaryPiece>> {
        let pieces = self.shape.boundary_pieces()?;
        let Some(arc) = self.dirichlet else {
            return Ok(pieces);
        };
        self.validate()?;
        let mut out = Vec::with_capacity(pieces.len() + 2);
        let mut s = 0.0;
        for piece in pieces {
            let len = piece.geom.hyperbolic_length()?;
            let lo = s;
            let hi = s + len;
            s = hi;
            // cut the piece against [start, end]
            let a = arc.start.max(lo);
            let b = arc.end.min(hi);
            if b <= a + 1e-12 {
                out.push(piece);
                continue;
            }
            let mut rest = piece.geom.clone();
            let mut rest_lo = lo;
            if a > lo + 1e-12 {
                let t = rest.param_at_arclength(a - rest_lo)?;
                let (head, tail) = rest.split_at(t);
                out.push(BoundaryPiece { geom: head, tag: piece.tag });
                rest = tail;
                rest_lo = a;
            }
            if b < hi - 1e-12 {
                let t = rest.param_at_arclength(b - rest_lo)?;
                let (head, tail) = rest.split_at(t);
                out.push(BoundaryPiece { geom: head, tag: BoundaryTag::Dirichlet });
                out.push(BoundaryPiece { geom: tail, tag: piece.tag });
            } else {
                out.push(BoundaryPiece { geom: rest, tag: BoundaryTag::Dirichlet });
            }
        }
        Ok(out)
    }

    pub fn transformed(&self, g: &MobiusIsometry) -> Result<Self> {
        Ok(Self { shape: self.shape.transformed(g)?, dirichlet: self.dirichlet })
    }

    pub fn to_json(&self) -> Value {
        let mut v = self.shape.to_json();
        if let Some(arc) = self.dirichlet {
            v["dirichlet"] = serde_json::json!({ "start": arc.start, "end": arc.end });
        }
        v
    }
}

// ---------------------------------------------------------------------------
// disk

#[derive(Clone)]
pub struct DiskDomain {
    pub center: DiskPoint,
    pub radius: f64,
}

impl DiskDomain {
    /// Euclidean center and radius of the model circle realizing the
    /// hyperbolic circle of radius R about `center`.
    pub fn model_circle(&self) -> ([f64; 2], f64) {
        let tau = (self.radius / 2.0).tanh();
        let c2 = self.center.norm_sq();
        let denom = 1.0 - tau * tau * c2;
        let scale = (1.0 - tau * tau) / denom;
        let rho = tau * (1.0 - c2) / denom;
        ([self.center.x() * scale, self.center.y() * scale], rho)
    }
}

impl DomainShape for DiskDomain {
    fn kind(&self) -> &'static str {
        "disk"
    }

    fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0) || !self.radius.is_finite() {
            return Err(Error::SpecValidation(format!(
                "disk radius must be positive, got {}",
                self.radius
            )));
        }
        if self.center.is_ideal() {
            return Err(Error::SpecValidation("disk center must be an interior point".into()));
        }
        // the rim must stay clear of the coordinate horizon
        let (_, rho) = self.model_circle();
        let (c, _) = self.model_circle();
        let outer = (c[0] * c[0] + c[1] * c[1]).sqrt() + rho;
        if outer >= 1.0 - 1e-9 {
            return Err(Error::SpecValidation(
                "disk reaches the ideal boundary at this center/radius".into(),
            ));
        }
        Ok(())
    }

    fn boundary_pieces(&self) -> Result<Vec<BoundaryPiece>> {
        self.validate()?;
        let (c, rho) = self.model_circle();
        let quarter = std::f64::consts::FRAC_PI_2;
        Ok((0..4)
            .map(|k| BoundaryPiece {
                geom: CurveGeom::Arc {
                    center: c,
                    radius: rho,
                    th0: k as f64 * quarter,
                    sweep: quarter,
                },
                tag: BoundaryTag::Neumann,
            })
            .collect())
    }

    fn exact_area(&self) -> Option<f64> {
        Some(2.0 * std::f64::consts::PI * (self.radius.cosh() - 1.0))
    }

    fn is_convex(&self) -> Result<bool> {
        Ok(true)
    }

    fn to_json(&self) -> Value {
        if self.center.norm_sq() == 0.0 {
            serde_json::json!({ "type": "disk", "radius": self.radius })
        } else {
            serde_json::json!({
                "type": "disk",
                "radius": self.radius,
                "center": [self.center.x(), self.center.y()],
            })
        }
    }

    fn transformed(&self, g: &MobiusIsometry) -> Result<Box<dyn DomainShape>> {
        Ok(Box::new(DiskDomain { center: g.apply(&self.center), radius: self.radius }))
    }

    fn clone_box(&self) -> Box<dyn DomainShape> {
        Box::new(self.clone())
    }

    fn as_disk(&self) -> Option<(DiskPoint, f64)> {
        Some((self.center, self.radius))
    }
}

// ---------------------------------------------------------------------------
// geodesic polygon

#[derive(Clone)]
pub struct PolygonDomain {
    pub vertices: Vec<DiskPoint>,
}

impl DomainShape for PolygonDomain {
    fn kind(&self) -> &'static str {
        "polygon"
    }

    fn validate(&self) -> Result<()> {
        if self.vertices.len() < 3 {
            return Err(Error::SpecValidation("polygon needs at least 3 vertices".into()));
        }
        // counterclockwise and simple; interior_angles errors on CW input
        let _ = interior_angles(&self.vertices)?;
        is_geodesically_convex(&self.vertices)?;
        Ok(())
    }

    fn boundary_pieces(&self) -> Result<Vec<BoundaryPiece>> {
        self.validate()?;
        if self.vertices.iter().any(|v| v.is_ideal()) {
            return Err(Error::SpecValidation(
                "polygon has ideal vertices; mesh it as an ideal_polygon with a truncation depth"
                    .into(),
            ));
        }
        let n = self.vertices.len();
        let mut pieces = Vec::with_capacity(n);
        for i in 0..n {
            let seg = geodesic_between(&self.vertices[i], &self.vertices[(i + 1) % n])?;
            pieces.push(BoundaryPiece {
                geom: CurveGeom::from_geodesic(&seg),
                tag: BoundaryTag::Neumann,
            });
        }
        Ok(pieces)
    }

    fn exact_area(&self) -> Option<f64> {
        let angles = interior_angles(&self.vertices).ok()?;
        polygon_area(&angles).ok()
    }

    fn is_convex(&self) -> Result<bool> {
        is_geodesically_convex(&self.vertices)
    }

    fn to_json(&self) -> Value {
        let verts: Vec<[f64; 2]> = self.vertices.iter().map(|v| [v.x(), v.y()]).collect();
        let ideal: Vec<bool> = self.vertices.iter().map(|v| v.is_ideal()).collect();
        if ideal.iter().any(|&b| b) {
            serde_json::json!({ "type": "polygon", "vertices": verts, "ideal": ideal })
        } else {
            serde_json::json!({ "type": "polygon", "vertices": verts })
        }
    }

    fn transformed(&self, g: &MobiusIsometry) -> Result<Box<dyn DomainShape>> {
        Ok(Box::new(PolygonDomain {
            vertices: self.vertices.iter().map(|v| g.apply(v)).collect(),
        }))
    }

    fn clone_box(&self) -> Box<dyn DomainShape> {
        Box::new(self.clone())
    }
}

/// Regular geodesic polygon with given hyperbolic circumradius, a common
/// test shape.
pub fn regular_polygon(n: usize, circumradius: f64) -> Result<Vec<DiskPoint>> {
    if n < 3 {
        return Err(Error::SpecValidation("regular polygon needs n >= 3".into()));
    }
    let tau = (circumradius / 2.0).tanh();
    (0..n)
        .map(|k| {
            let th = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            DiskPoint::new(tau * th.cos(), tau * th.sin())
        })
        .collect()
}

// ---------------------------------------------------------------------------
// truncated regular ideal polygon

#[derive(Clone)]
pub struct IdealPolygonDomain {
    pub n: usize,
    pub depth: f64,
}

impl IdealPolygonDomain {
    fn vertex_angle(&self, k: usize) -> f64 {
        2.0 * std::f64::consts::PI * k as f64 / self.n as f64
    }

    /// Cut chord for vertex k, plus the parameters of the cut points on
    /// the two adjacent side circles.
    fn cut_for_vertex(&self, k: usize) -> Result<GeodesicSegment> {
        let prev = DiskPoint::ideal_at_angle(self.vertex_angle((k + self.n - 1) % self.n));
        let v = DiskPoint::ideal_at_angle(self.vertex_angle(k));
        let next = DiskPoint::ideal_at_angle(self.vertex_angle((k + 1) % self.n));
        truncate_ideal_vertex(&prev, &v, &next, self.depth)
    }

    /// Truncated boundary loop vertices in CCW order:
    /// [cut_out(v0), cut_in(v1), cut_out(v1), ...] where cut_in/cut_out
    /// are the chord endpoints on the incoming and outgoing sides.
    fn loop_vertices(&self) -> Result<Vec<DiskPoint>> {
        let mut verts = Vec::with_capacity(2 * self.n);
        for k in 0..self.n {
            let chord = self.cut_for_vertex(k)?;
            // chord runs from the incoming side (k-1 -> k) to the
            // outgoing side (k -> k+1); a is on the incoming side
            verts.push(chord.a);
            verts.push(chord.b);
        }
        // rotate so the loop starts with an outgoing point and alternates
        // side-arc, chord, side-arc, ...
        verts.rotate_left(1);
        Ok(verts)
    }
}

impl DomainShape for IdealPolygonDomain {
    fn kind(&self) -> &'static str {
        "ideal_polygon"
    }

    fn validate(&self) -> Result<()> {
        if self.n < 3 {
            return Err(Error::SpecValidation(format!(
                "ideal polygon needs n >= 3 vertices, got {}",
                self.n
            )));
        }
        if !(self.depth > 0.0) || !self.depth.is_finite() {
            return Err(Error::SpecValidation(format!(
                "truncation depth must be positive, got {}",
                self.depth
            )));
        }
        // degenerate-cut guard happens inside the construction
        let _ = self.cut_for_vertex(0)?;
        Ok(())
    }

    fn boundary_pieces(&self) -> Result<Vec<BoundaryPiece>> {
        self.validate()?;
        let verts = self.loop_vertices()?;
        let m = verts.len();
        let mut pieces = Vec::with_capacity(m);
        for i in 0..m {
            let seg = geodesic_between(&verts[i], &verts[(i + 1) % m])?;
            let tag = if i % 2 == 0 { BoundaryTag::Neumann } else { BoundaryTag::Truncation };
            pieces.push(BoundaryPiece { geom: CurveGeom::from_geodesic(&seg), tag });
        }
        Ok(pieces)
    }

    fn exact_area(&self) -> Option<f64> {
        let verts = self.loop_vertices().ok()?;
        let angles = interior_angles(&verts).ok()?;
        polygon_area(&angles).ok()
    }

    fn is_convex(&self) -> Result<bool> {
        // intersection of the ideal polygon with geodesic half-planes
        let verts = self.loop_vertices()?;
        is_geodesically_convex(&verts)
    }

    fn to_json(&self) -> Value {
        serde_json::json!({ "type": "ideal_polygon", "n": self.n, "truncation": self.depth })
    }

    fn transformed(&self, _g: &MobiusIsometry) -> Result<Box<dyn DomainShape>> {
        Err(Error::SpecValidation(
            "ideal_polygon is defined in a centered frame and cannot be transformed".into(),
        ))
    }

    fn clone_box(&self) -> Box<dyn DomainShape> {
        Box::new(self.clone())
    }
}

/// Horocyclic truncation of the cusp at ideal vertex `v`, whose adjacent
/// sides run to `prev` and `next`. The horocycle is based at `v` and
/// chosen so that the cut chord lies at hyperbolic distance ≥ `depth`
/// from the origin (the inradius center of the regular configurations we
/// mesh) and the removed cusp neighbourhood has area ≤ 2·e^(−depth); the
/// cut itself is the geodesic chord between the horocycle's crossings of
/// the two sides.
pub fn truncate_ideal_vertex(
    prev: &DiskPoint,
    v: &DiskPoint,
    next: &DiskPoint,
    depth: f64,
) -> Result<GeodesicSegment> {
    if !(depth > 0.0) || !depth.is_finite() {
        return Err(Error::SpecValidation(format!(
            "truncation depth must be positive, got {depth}"
        )));
    }
    if !v.is_ideal() {
        return Err(Error::SpecValidation("truncation vertex must be ideal".into()));
    }
    // Horocyclic arc length through the origin-level horocycle; the cusp
    // area cut off at axis distance d is this times e^(-d).
    let l0 = cusp_arc_length_at(prev, v, next, 0.0)?;
    let d = depth + (l0 / 2.0).max(1.0).ln();
    if (d / 2.0).tanh() >= 1.0 - 1e-9 {
        return Err(Error::SpecValidation(format!(
            "truncation depth {depth} places the cut below coordinate precision"
        )));
    }
    let (p1, p2) = horocycle_side_crossings(prev, v, next, d)?;
    geodesic_between(&p1, &p2)
}

/// Euclidean circle of the horocycle based at ideal point `v` through the
/// point at hyperbolic distance `d` from the origin along [0, v).
fn horocycle_circle(v: &DiskPoint, d: f64) -> ([f64; 2], f64) {
    let q = (d / 2.0).tanh();
    let c = (1.0 + q) / 2.0;
    let rho = (1.0 - q) / 2.0;
    ([c * v.x(), c * v.y()], rho)
}

fn side_circle(v: &DiskPoint, w: &DiskPoint) -> Result<([f64; 2], f64)> {
    let seg = geodesic_between(v, w)?;
    match seg.kind {
        crate::geometry::GeodesicKind::CircularArc { center, radius } => Ok((center, radius)),
        crate::geometry::GeodesicKind::DiameterLine => Err(Error::SpecValidation(
            "cusp side passes through the origin; horocyclic truncation frame is degenerate".into(),
        )),
    }
}

fn circle_intersections(
    c1: [f64; 2],
    r1: f64,
    c2: [f64; 2],
    r2: f64,
) -> Option<([f64; 2], [f64; 2])> {
    let dx = c2[0] - c1[0];
    let dy = c2[1] - c1[1];
    let d = (dx * dx + dy * dy).sqrt();
    if d == 0.0 || d > r1 + r2 || d < (r1 - r2).abs() {
        return None;
    }
    let a = (d * d + r1 * r1 - r2 * r2) / (2.0 * d);
    let h2 = r1 * r1 - a * a;
    let h = h2.max(0.0).sqrt();
    let mx = c1[0] + a * dx / d;
    let my = c1[1] + a * dy / d;
    let ox = -dy / d * h;
    let oy = dx / d * h;
    Some(([mx + ox, my + oy], [mx - ox, my - oy]))
}

fn pick_inside(cands: ([f64; 2], [f64; 2])) -> Result<DiskPoint> {
    let n0 = cands.0[0] * cands.0[0] + cands.0[1] * cands.0[1];
    let n1 = cands.1[0] * cands.1[0] + cands.1[1] * cands.1[1];
    let p = if n0 < n1 { cands.0 } else { cands.1 };
    DiskPoint::new(p[0], p[1])
}

/// Crossings of the horocycle (axis distance d) with the two sides of the
/// cusp at `v`; first the incoming side (from `prev`), then the outgoing
/// side (to `next`).
fn horocycle_side_crossings(
    prev: &DiskPoint,
    v: &DiskPoint,
    next: &DiskPoint,
    d: f64,
) -> Result<(DiskPoint, DiskPoint)> {
    let (hc, hr) = horocycle_circle(v, d);
    let (c_in, r_in) = side_circle(prev, v)?;
    let (c_out, r_out) = side_circle(v, next)?;
    let p_in = circle_intersections(hc, hr, c_in, r_in)
        .ok_or_else(|| Error::SpecValidation("horocycle misses the incoming cusp side".into()))
        .and_then(pick_inside)?;
    let p_out = circle_intersections(hc, hr, c_out, r_out)
        .ok_or_else(|| Error::SpecValidation("horocycle misses the outgoing cusp side".into()))
        .and_then(pick_inside)?;
    Ok((p_in, p_out))
}

/// Hyperbolic length of the horocyclic arc spanning the cusp at `v` at
/// axis distance d, by quadrature along the horocycle circle.
fn cusp_arc_length_at(prev: &DiskPoint, v: &DiskPoint, next: &DiskPoint, d: f64) -> Result<f64> {
    let (hc, hr) = horocycle_circle(v, d);
    let (p_in, p_out) = horocycle_side_crossings(prev, v, next, d)?;
    let base_angle = v.y().atan2(v.x());
    // angles of the crossings around the horocycle circle, measured from
    // the tangency point direction so the in-cusp arc avoids wrap
    let rel = |p: &DiskPoint| {
        let raw = (p.y() - hc[1]).atan2(p.x() - hc[0]) - base_angle;
        let mut a = raw % (2.0 * std::f64::consts::PI);
        if a < 0.0 {
            a += 2.0 * std::f64::consts::PI;
        }
        a
    };
    let (mut a1, mut a2) = (rel(&p_in), rel(&p_out));
    if a1 > a2 {
        std::mem::swap(&mut a1, &mut a2);
    }
    let f = |t: f64| {
        let th = base_angle + t;
        let x = hc[0] + hr * th.cos();
        let y = hc[1] + hr * th.sin();
        2.0 / (1.0 - x * x - y * y) * hr
    };
    quad_integrate(&f, a1, a2, 1e-10)
}

// ---------------------------------------------------------------------------
// registry

/// Builds a [`DomainShape`] from the JSON parameters of its variant.
pub trait DomainBuilder: Send + Sync {
    fn kind(&self) -> &'static str;
    fn build(&self, params: &Value) -> Result<Box<dyn DomainShape>>;
}

struct DiskBuilder;

#[derive(Deserialize)]
struct DiskParams {
    radius: f64,
    #[serde(default)]
    center: Option<[f64; 2]>,
}

impl DomainBuilder for DiskBuilder {
    fn kind(&self) -> &'static str {
        "disk"
    }

    fn build(&self, params: &Value) -> Result<Box<dyn DomainShape>> {
        let p: DiskParams = serde_json::from_value(params.clone())
            .map_err(|e| Error::SpecValidation(format!("disk: {e}")))?;
        let center = match p.center {
            Some([x, y]) => DiskPoint::new(x, y)
                .map_err(|_| Error::SpecValidation(format!("disk center ({x}, {y}) not interior")))?,
            None => DiskPoint::origin(),
        };
        let d = DiskDomain { center, radius: p.radius };
        d.validate()?;
        Ok(Box::new(d))
    }
}

struct PolygonBuilder;

#[derive(Deserialize)]
struct PolygonParams {
    vertices: Vec<[f64; 2]>,
    #[serde(default)]
    ideal: Option<Vec<bool>>,
}

impl DomainBuilder for PolygonBuilder {
    fn kind(&self) -> &'static str {
        "polygon"
    }

    fn build(&self, params: &Value) -> Result<Box<dyn DomainShape>> {
        let p: PolygonParams = serde_json::from_value(params.clone())
            .map_err(|e| Error::SpecValidation(format!("polygon: {e}")))?;
        let flags = p.ideal.unwrap_or_else(|| vec![false; p.vertices.len()]);
        if flags.len() != p.vertices.len() {
            return Err(Error::SpecValidation(
                "polygon 'ideal' flag list must match the vertex count".into(),
            ));
        }
        let vertices: Result<Vec<DiskPoint>> = p
            .vertices
            .iter()
            .zip(flags.iter())
            .map(|(&[x, y], &ideal)| {
                if ideal {
                    DiskPoint::ideal(x, y)
                } else {
                    DiskPoint::new(x, y)
                }
            })
            .collect();
        let d = PolygonDomain { vertices: vertices? };
        d.validate()?;
        Ok(Box::new(d))
    }
}

struct IdealPolygonBuilder;

#[derive(Deserialize)]
struct IdealPolygonParams {
    n: usize,
    truncation: f64,
}

impl DomainBuilder for IdealPolygonBuilder {
    fn kind(&self) -> &'static str {
        "ideal_polygon"
    }

    fn build(&self, params: &Value) -> Result<Box<dyn DomainShape>> {
        let p: IdealPolygonParams = serde_json::from_value(params.clone())
            .map_err(|e| Error::SpecValidation(format!("ideal_polygon: {e}")))?;
        let d = IdealPolygonDomain { n: p.n, depth: p.truncation };
        d.validate()?;
        Ok(Box::new(d))
    }
}

/// Name-indexed registry of domain builders. JSON specs select a variant
/// through their `"type"` field.
pub struct DomainRegistry {
    builders: Vec<Box<dyn DomainBuilder>>,
}

impl Default for DomainRegistry {
    fn default() -> Self {
        Self::with_builtin()
    }
}

impl DomainRegistry {
    pub fn with_builtin() -> Self {
        Self {
            builders: vec![
                Box::new(DiskBuilder),
                Box::new(PolygonBuilder),
                Box::new(IdealPolygonBuilder),
            ],
        }
    }

    pub fn register(&mut self, builder: Box<dyn DomainBuilder>) {
        self.builders.retain(|b| b.kind() != builder.kind());
        self.builders.push(builder);
    }

    pub fn kinds(&self) -> Vec<&'static str> {
        self.builders.iter().map(|b| b.kind()).collect()
    }

    pub fn build_spec(&self, doc: &Value) -> Result<DomainSpec> {
        let kind = doc
            .get("type")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::SpecValidation("missing \"type\" field".into()))?;
        let builder = self
            .builders
            .iter()
            .find(|b| b.kind() == kind)
            .ok_or_else(|| Error::UnknownStrategy {
                name: kind.to_string(),
                available: self.kinds().join(", "),
            })?;
        let shape = builder.build(doc)?;
        let mut spec = DomainSpec::new(shape);
        if let Some(d) = doc.get("dirichlet") {
            let arc: DirichletArc = serde_json::from_value(d.clone())
                .map_err(|e| Error::SpecValidation(format!("dirichlet arc: {e}")))?;
            spec.dirichlet = Some(arc);
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn load_file(&self, path: &Path) -> Result<DomainSpec> {
        let text = std::fs::read_to_string(path)?;
        let doc: Value = serde_json::from_str(&text)?;
        self.build_spec(&doc)
    }
}

/// Hyperbolic distance from a model point to the origin.
pub fn distance_to_origin(p: &DiskPoint) -> Result<f64> {
    hyp_distance(p, &DiskPoint::origin())
}

/// Conformal factor squared, the area density of the hyperbolic metric.
pub fn lambda_sq(x: f64, y: f64) -> f64 {
    let f = 2.0 / (1.0 - x * x - y * y);
    f * f
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_builds_all_variants() {
        let reg = DomainRegistry::with_builtin();
        let disk = reg.build_spec(&serde_json::json!({"type": "disk", "radius": 3.0})).unwrap();
        assert_eq!(disk.shape().kind(), "disk");
        let poly = reg
            .build_spec(&serde_json::json!({
                "type": "polygon",
                "vertices": [[0.4, 0.0], [0.0, 0.4], [-0.4, 0.0], [0.0, -0.4]],
            }))
            .unwrap();
        assert_eq!(poly.shape().kind(), "polygon");
        let ideal = reg
            .build_spec(&serde_json::json!({"type": "ideal_polygon", "n": 3, "truncation": 3.0}))
            .unwrap();
        assert_eq!(ideal.shape().kind(), "ideal_polygon");
    }

    #[test]
    fn registry_rejects_unknown_and_invalid() {
        let reg = DomainRegistry::with_builtin();
        assert!(matches!(
            reg.build_spec(&serde_json::json!({"type": "annulus"})),
            Err(Error::UnknownStrategy { .. })
        ));
        assert!(reg.build_spec(&serde_json::json!({"type": "disk", "radius": -1.0})).is_err());
        assert!(reg
            .build_spec(&serde_json::json!({"type": "ideal_polygon", "n": 2, "truncation": 1.0}))
            .is_err());
    }

    #[test]
    fn disk_boundary_length_matches_closed_form() {
        let spec = DomainSpec::disk(1.5).unwrap();
        let len = spec.boundary_length().unwrap();
        let exact = 2.0 * std::f64::consts::PI * 1.5f64.sinh();
        assert!((len - exact).abs() < 1e-8 * exact, "len = {len}, exact = {exact}");
    }

    #[test]
    fn translated_disk_has_same_boundary_length() {
        let g = MobiusIsometry::translate_from_origin(&DiskPoint::new(0.4, 0.2).unwrap()).unwrap();
        let spec = DomainSpec::disk(1.5).unwrap().transformed(&g).unwrap();
        let len = spec.boundary_length().unwrap();
        let exact = 2.0 * std::f64::consts::PI * 1.5f64.sinh();
        assert!((len - exact).abs() < 1e-7 * exact, "len = {len}");
    }

    #[test]
    fn dirichlet_arc_splits_are_contiguous() {
        let spec = DomainSpec::disk(2.0).unwrap().with_dirichlet_arc(3.0, 7.0);
        let pieces = spec.boundary_pieces().unwrap();
        let mut dir_len = 0.0;
        let mut runs = 0;
        let mut prev_dirichlet = false;
        for p in &pieces {
            let is_d = p.tag == BoundaryTag::Dirichlet;
            if is_d {
                dir_len += p.geom.hyperbolic_length().unwrap();
                if !prev_dirichlet {
                    runs += 1;
                }
            }
            prev_dirichlet = is_d;
        }
        assert_eq!(runs, 1, "dirichlet run must be contiguous");
        assert!((dir_len - 4.0).abs() < 1e-6, "dirichlet length = {dir_len}");
    }

    #[test]
    fn dirichlet_arc_validation() {
        let spec = DomainSpec::disk(1.0).unwrap().with_dirichlet_arc(5.0, 2.0);
        assert!(spec.validate().is_err());
        let too_long = DomainSpec::disk(1.0).unwrap().with_dirichlet_arc(0.0, 1e3);
        assert!(too_long.validate().is_err());
    }

    #[test]
    fn truncation_chord_distance_respects_depth() {
        let spec = DomainSpec::ideal_polygon(3, 3.0).unwrap();
        let pieces = spec.boundary_pieces().unwrap();
        assert_eq!(pieces.len(), 6);
        for p in pieces.iter().filter(|p| p.tag == BoundaryTag::Truncation) {
            // chord midpoint further than `depth` from the origin
            let m = p.geom.point_at(0.5);
            let mp = DiskPoint::new(m[0], m[1]).unwrap();
            let d = distance_to_origin(&mp).unwrap();
            assert!(d >= 3.0, "cut at distance {d}");
        }
    }

    #[test]
    fn truncation_removed_area_is_bounded() {
        // per-cusp removed area pi/3 - exact_area/3 <= 2 e^{-depth}
        for depth in [3.0, 5.0] {
            let dom = IdealPolygonDomain { n: 3, depth };
            let area = dom.exact_area().unwrap();
            let removed = (std::f64::consts::PI - area) / 3.0;
            assert!(
                removed <= 2.0 * (-depth).exp() + 1e-9,
                "depth {depth}: removed {removed}"
            );
            assert!(removed > 0.0);
        }
        // deeper truncation keeps more area
        let a3 = IdealPolygonDomain { n: 3, depth: 3.0 }.exact_area().unwrap();
        let a5 = IdealPolygonDomain { n: 3, depth: 5.0 }.exact_area().unwrap();
        assert!(a5 > a3);
    }

    #[test]
    fn truncation_rejects_degenerate_depths() {
        let v0 = DiskPoint::ideal_at_angle(0.0);
        let v1 = DiskPoint::ideal_at_angle(2.0 * std::f64::consts::PI / 3.0);
        let v2 = DiskPoint::ideal_at_angle(-2.0 * std::f64::consts::PI / 3.0);
        assert!(truncate_ideal_vertex(&v2, &v0, &v1, 0.0).is_err());
        assert!(truncate_ideal_vertex(&v2, &v0, &v1, 60.0).is_err());
    }

    #[test]
    fn ideal_polygon_cusp_calibration_matches_closed_form() {
        // regular n-gon: horocyclic arc through the origin has length
        // 2 cot(pi/n)
        for n in [3usize, 18] {
            let prev = DiskPoint::ideal_at_angle(-2.0 * std::f64::consts::PI / n as f64);
            let v = DiskPoint::ideal_at_angle(0.0);
            let next = DiskPoint::ideal_at_angle(2.0 * std::f64::consts::PI / n as f64);
            let l0 = cusp_arc_length_at(&prev, &v, &next, 0.0).unwrap();
            let exact = 2.0 / (std::f64::consts::PI / n as f64).tan();
            assert!((l0 - exact).abs() < 1e-6 * exact, "n = {n}: {l0} vs {exact}");
        }
    }

    #[test]
    fn ideal_polygon_is_convex_and_area_grows_toward_gauss_bonnet() {
        let dom = IdealPolygonDomain { n: 18, depth: 4.0 };
        assert!(dom.is_convex().unwrap());
        let area = dom.exact_area().unwrap();
        let full = 16.0 * std::f64::consts::PI;
        assert!(area < full && area > full - 18.0 * 2.0 * (-4.0f64).exp());
    }

    #[test]
    fn polygon_with_ideal_vertices_cannot_be_meshed_directly() {
        let verts = vec![
            DiskPoint::ideal_at_angle(0.0),
            DiskPoint::ideal_at_angle(2.1),
            DiskPoint::ideal_at_angle(4.2),
        ];
        let spec = DomainSpec::polygon(verts).unwrap();
        assert!(spec.boundary_pieces().is_err());
        assert!(spec.shape().is_convex().unwrap());
    }
}
