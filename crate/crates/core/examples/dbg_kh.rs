use bvlab_core::geometry::ConformalDomain;
use bvlab_core::strayfield::kh_boundary_check;

fn main() {
    let d = ConformalDomain::unit_disk();
    for k in 2..=5 {
        let h = 10f64.powi(-k);
        let (sup, resc) = kh_boundary_check(&d, h, 4, 16).unwrap();
        println!("h=1e-{k}: sup gap {sup:.6}  rescaled {resc:.6}");
    }
    let cubic = ConformalDomain::new(vec![
        bvlab_core::Complex64::new(1.0, 0.0),
        bvlab_core::Complex64::new(0.0, 0.0),
        bvlab_core::Complex64::new(0.2, 0.0),
    ]).unwrap();
    let (sup, resc) = kh_boundary_check(&cubic, 1e-3, 8, 16).unwrap();
    println!("cubic h=1e-3: sup {sup:.6} rescaled {resc:.6}");
}
