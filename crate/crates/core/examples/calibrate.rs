use hypspots::analysis::*;
use hypspots::domain::{regular_polygon, DomainSpec};
use hypspots::eigen::{eigenvalue_convergence_study, AutoSolver};
use hypspots::special::disk_mu2;
use std::time::Instant;

fn main() {
    let cfg = AnalysisConfig::default();
    let solver = AutoSolver;

    // 1) disk r0 convergence (criterion 2)
    let t0 = Instant::now();
    let r0 = hypspots::special::threshold_radius().unwrap();
    let spec = DomainSpec::disk(r0).unwrap();
    let study = eigenvalue_convergence_study(&spec, &[0.2, 0.1, 0.05], 1e-8).unwrap();
    for l in &study.levels {
        println!("disk r0 h={:<5} dofs={:<6} mu2={:.6}", l.h, l.free_dofs, l.eigenvalue);
    }
    println!("extrapolated {:.6} order {:.2}  [{:?}]", study.extrapolated, study.order, t0.elapsed());

    // 2) FEM vs special functions at R in {1,3,5} (criterion 3)
    for r in [1.0, 3.0, 5.0] {
        let t = Instant::now();
        let spec = DomainSpec::disk(r).unwrap();
        let sol = solve_domain(&spec, 0.05f64.min(r / 8.0).max(0.04), 3, 1e-8, &solver).unwrap();
        let exact = disk_mu2(r).unwrap();
        println!(
            "disk R={r}: FEM mu2={:.6} exact={:.6} rel={:.4}% mu3={:.6} dofs={} [{:?}]",
            sol.pairs.values[1], exact,
            (sol.pairs.values[1] / exact - 1.0) * 100.0,
            sol.pairs.values[2], sol.dofs.num_free(), t.elapsed()
        );
    }

    // 3) verdict study on disk R=3 (criterion 5)
    let t = Instant::now();
    let spec = DomainSpec::disk(3.0).unwrap();
    for h in [0.2, 0.1, 0.05] {
        let (rep, _) = verify_domain(&spec, h, &cfg, 1e-8, &solver).unwrap();
        println!(
            "verify disk3 h={h}: verdict {:?} mu={:.5} rel={:.4} maxbd={:.3} minbd={:.3} nodal={}",
            rep.verdict, rep.eigenvalue, rep.interior_grad_min_rel,
            rep.max_boundary_distance, rep.min_boundary_distance, rep.nodal_domain_count
        );
    }
    let levels = interior_gradient_study(&spec, &[0.2, 0.1, 0.05], &cfg, 1e-8, &solver).unwrap();
    for l in &levels {
        println!("grad study h={}: rel={:.4} verdict {:?}", l.h, l.interior_grad_min_rel, l.verdict);
    }
    println!("  [{:?}]", t.elapsed());
}
