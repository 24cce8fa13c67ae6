use hypspots::domain::{regular_polygon, DomainSpec};
use hypspots::mesh::triangulate;
use std::time::Instant;

fn main() {
    for (n, depth, h) in [(6usize, 4.0, 0.2), (12, 4.0, 0.2), (18, 5.0, 0.2), (24, 5.0, 0.2), (18, 5.0, 0.12)] {
        let t0 = Instant::now();
        let spec = DomainSpec::ideal_polygon(n, depth).unwrap();
        match triangulate(&spec, h) {
            Ok(m) => println!(
                "ideal n={n} depth={depth} h={h}: {} tris area {:.4} (exact {:.4}) minang {:.2} [{:?}]",
                m.num_triangles(), m.hyperbolic_area(),
                spec.shape().exact_area().unwrap(),
                m.min_angle_deg(), t0.elapsed()
            ),
            Err(e) => println!("ideal n={n} depth={depth} h={h}: ERR {e}"),
        }
    }
    // convex polygons: square, pentagon, big 18-gon with area > 34
    for (n, rc, h) in [(4usize, 1.0, 0.1), (5, 1.4, 0.1), (18, 2.95, 0.15)] {
        let t0 = Instant::now();
        let verts = regular_polygon(n, rc).unwrap();
        let spec = DomainSpec::polygon(verts).unwrap();
        let exact = spec.shape().exact_area().unwrap();
        match triangulate(&spec, h) {
            Ok(m) => println!(
                "poly n={n} rc={rc}: {} tris area {:.4} (exact {:.4}) minang {:.2} [{:?}]",
                m.num_triangles(), m.hyperbolic_area(), exact, m.min_angle_deg(), t0.elapsed()
            ),
            Err(e) => println!("poly n={n} rc={rc}: ERR {e} (exact area {exact:.4})"),
        }
    }
    // disk with dirichlet arc via unstructured path (translated center)
    let c = hypspots::geometry::DiskPoint::new(0.3, 0.1).unwrap();
    let spec = DomainSpec::disk_at(c, 1.5).unwrap();
    let t0 = Instant::now();
    match triangulate(&spec, 0.1) {
        Ok(m) => println!(
            "translated disk: {} tris area {:.4} (exact {:.4}) minang {:.2} [{:?}]",
            m.num_triangles(), m.hyperbolic_area(), spec.shape().exact_area().unwrap(),
            m.min_angle_deg(), t0.elapsed()
        ),
        Err(e) => println!("translated disk: ERR {e}"),
    }
}
