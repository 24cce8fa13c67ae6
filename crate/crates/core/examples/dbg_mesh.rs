use hypspots::domain::DomainSpec;
use hypspots::mesh::triangulate;

fn main() {
    for depth in [3.0, 4.0, 5.0] {
        for h in [0.25, 0.2, 0.15] {
            let spec = DomainSpec::ideal_polygon(3, depth).unwrap();
            match triangulate(&spec, h) {
                Ok(m) => println!(
                    "depth {depth} h {h}: OK, {} tris, {} verts, area {:.5}, min angle {:.2}",
                    m.num_triangles(), m.num_vertices(), m.hyperbolic_area(), m.min_angle_deg()
                ),
                Err(e) => println!("depth {depth} h {h}: ERR {e}"),
            }
        }
    }
}
