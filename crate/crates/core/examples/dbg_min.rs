use bvlab_core::canonical::{BoundaryVortexConfig, CanonicalMap};
use bvlab_core::fields::*;
use bvlab_core::geometry::{ConformalDomain, Mesh};
use bvlab_core::minimize::*;

fn main() {
    let d = ConformalDomain::unit_disk();
    let mesh = Mesh::build(&d, 0.12, 0.05).unwrap();
    let cfg = BoundaryVortexConfig::antipodal_pair(0.7);
    let u0 = canonical_field(&mesh, &CanonicalMap::with_default_base(d.clone(), cfg)).unwrap();
    let params = EnergyParams::new(0.2, 1.0).unwrap();
    let mut opts = MinimizeOptions::for_mesh(&mesh);
    opts.grad_tol = 2e-4;
    let out = minimize_field(&mesh, params, &u0, &opts).unwrap();
    // dump the boundary residual (phase minus turning) coarsely
    let nb = mesh.boundary_loop.len();
    let mut resid = 0.0f64;
    let mut prev_phase: Option<f64> = None;
    for k in 0..=nb {
        let kk = k % nb;
        let v = mesh.boundary_loop[kk];
        let u = out.field.xy[v];
        let p = u[1].atan2(u[0]);
        if let Some(pp) = prev_phase {
            let mut dp = p - pp;
            while dp > std::f64::consts::PI { dp -= 2.0*std::f64::consts::PI; }
            while dp < -std::f64::consts::PI { dp += 2.0*std::f64::consts::PI; }
            let t0 = mesh.boundary_theta[(k + nb - 1) % nb];
            let t1 = t0 + 2.0*std::f64::consts::PI/nb as f64;
            resid += dp - (d.turning(t1) - d.turning(t0));
        }
        prev_phase = Some(p);
        if k % 8 == 0 {
            println!("{:6.3} {:8.4}", mesh.boundary_arclength[kk] , resid);
        }
    }
}
