//! Simply connected domains given as polynomial conformal images of the
//! closed unit disk.
//!
//! A domain is Phi(z) = sum_{k=1}^{K} c_k z^k restricted to |z| <= 1. The
//! coefficient condition sum_{k>=2} k|c_k| < |c_1| certifies Phi' != 0 on
//! the closed disk (|Phi' - c_1| < |c_1| pointwise) and univalence, and
//! keeps arg Phi' in a half-plane so the tangent-angle branch never wraps.

use crate::error::{Error, Result};
use crate::quad;
use num_complex::Complex64;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapDirection {
    Forward,
    Inverse,
}

/// Oriented boundary frame at a point of the image curve Phi(e^{i theta}).
#[derive(Debug, Clone, Copy)]
pub struct BoundaryFrame {
    /// Point on the physical boundary.
    pub point: Complex64,
    /// Unit tangent (counterclockwise orientation).
    pub tangent: Complex64,
    /// Unit outer normal; tangent = i * normal.
    pub normal: Complex64,
    /// Curvature of the boundary curve (positive for the unit circle).
    pub curvature: f64,
    /// |Phi'(e^{i theta})|, the arclength speed of theta.
    pub speed: f64,
}

/// Polynomial conformal image of the closed unit disk.
#[derive(Debug, Clone, PartialEq)]
pub struct ConformalDomain {
    /// c_1..c_K of Phi(z) = sum c_k z^k.
    coeffs: Vec<Complex64>,
    /// Certified lower bound for |Phi'| on the closed disk.
    derivative_floor: f64,
}

impl ConformalDomain {
    /// Build a domain from the coefficients c_1..c_K.
    ///
    /// Rejects coefficient vectors violating sum_{k>=2} k|c_k| < |c_1| and
    /// runs a sampled injectivity check on the boundary.
    pub fn new(coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.is_empty() || coeffs[0].norm() == 0.0 {
            return Err(Error::Config("c_1 must be nonzero".into()));
        }
        let c1 = coeffs[0].norm();
        let tail: f64 = coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| (i as f64 + 1.0) * c.norm())
            .sum();
        if tail >= c1 {
            return Err(Error::Config(format!(
                "sum_{{k>=2}} k|c_k| = {tail} must be < |c_1| = {c1}"
            )));
        }
        let dom = ConformalDomain {
            coeffs,
            derivative_floor: c1 - tail,
        };
        dom.check_boundary_injectivity(512)?;
        Ok(dom)
    }

    /// The unit disk itself.
    pub fn unit_disk() -> Self {
        ConformalDomain::new(vec![Complex64::new(1.0, 0.0)]).unwrap()
    }

    /// Disk scaled by `r`.
    pub fn scaled_disk(r: f64) -> Result<Self> {
        ConformalDomain::new(vec![Complex64::new(r, 0.0)])
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn derivative_floor(&self) -> f64 {
        self.derivative_floor
    }

    pub fn is_identity(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0] == Complex64::new(1.0, 0.0)
    }

    fn check_boundary_injectivity(&self, n: usize) -> Result<()> {
        let pts: Vec<Complex64> = (0..n)
            .map(|i| self.phi(Complex64::from_polar(1.0, 2.0 * PI * i as f64 / n as f64)))
            .collect();
        for i in 0..n {
            for j in (i + 1)..n {
                let gap = 2.0 * (PI * (j - i) as f64 / n as f64).sin().abs();
                if pts[i].norm_sqr() == 0.0 && pts[j].norm_sqr() == 0.0
                    || (pts[i] - pts[j]).norm() < 1e-9 * gap.max(1e-9)
                {
                    return Err(Error::Config(
                        "sampled boundary injectivity check failed".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Phi(z) by Horner evaluation.
    pub fn phi(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc * z
    }

    /// Phi'(z).
    pub fn dphi(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, c) in self.coeffs.iter().enumerate().rev() {
            acc = acc * z + (k as f64 + 1.0) * c;
        }
        acc
    }

    /// Phi''(z).
    pub fn d2phi(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, c) in self.coeffs.iter().enumerate().skip(1).rev() {
            let kf = k as f64 + 1.0;
            acc = acc * z + kf * (kf - 1.0) * c;
        }
        acc
    }

    /// Forward or inverse map evaluation.
    ///
    /// Forward requires |z| <= 1 (+1e-12). Inverse runs Newton iteration and
    /// guarantees |Phi(Psi(w)) - w| <= 1e-12 * scale on success.
    pub fn map_eval(&self, z: Complex64, direction: MapDirection) -> Result<Complex64> {
        match direction {
            MapDirection::Forward => {
                if z.norm() > 1.0 + 1e-12 {
                    return Err(Error::Domain(format!("|z| = {} > 1", z.norm())));
                }
                Ok(self.phi(z))
            }
            MapDirection::Inverse => self.inverse(z),
        }
    }

    /// Psi(w) by Newton iteration on Phi(z) = w.
    pub fn inverse(&self, w: Complex64) -> Result<Complex64> {
        let scale = self.coeffs.iter().map(|c| c.norm()).sum::<f64>().max(1.0);
        let tol = 1e-13 * scale;
        let mut starts = vec![w / self.coeffs[0]];
        for k in 0..8 {
            starts.push(Complex64::from_polar(0.7, 2.0 * PI * k as f64 / 8.0));
        }
        starts.push(Complex64::new(0.0, 0.0));
        for mut z in starts {
            if z.norm() > 1.0 {
                z /= z.norm();
            }
            for _ in 0..80 {
                let r = self.phi(z) - w;
                if r.norm() <= tol {
                    break;
                }
                let mut step = r / self.dphi(z);
                // keep the iterate in the closed disk where Phi is certified
                let cap = 0.5;
                if step.norm() > cap {
                    step *= cap / step.norm();
                }
                z -= step;
                if z.norm() > 1.0 {
                    z /= z.norm();
                }
            }
            if (self.phi(z) - w).norm() <= 10.0 * tol && z.norm() <= 1.0 + 1e-12 {
                return Ok(z);
            }
        }
        Err(Error::DomainInversion(format!(
            "Newton iteration did not converge for w = {w}"
        )))
    }

    /// Continuous branch of arg Phi'(e^{i theta}).
    ///
    /// The coefficient condition traps Phi'/c_1 in the open right half-plane,
    /// so the principal branch relative to c_1 is already continuous.
    pub fn arg_dphi(&self, theta: f64) -> f64 {
        let z = Complex64::from_polar(1.0, theta);
        let ratio = self.dphi(z) / self.coeffs[0];
        self.coeffs[0].arg() + ratio.arg()
    }

    /// Turning angle of the boundary tangent: a continuous lifting of
    /// arg tau(theta), increasing by 2*pi per loop.
    pub fn turning(&self, theta: f64) -> f64 {
        theta + 0.5 * PI + self.arg_dphi(theta)
    }

    /// Boundary frame (point, tangent, outer normal, curvature, speed) at
    /// preimage angle theta.
    pub fn boundary_frame(&self, theta: f64) -> BoundaryFrame {
        let z = Complex64::from_polar(1.0, theta);
        let dp = self.dphi(z);
        let d2p = self.d2phi(z);
        // gamma(theta) = Phi(e^{i theta})
        let g1 = Complex64::i() * z * dp;
        let g2 = -z * (dp + z * d2p);
        let speed = g1.norm();
        let tangent = g1 / speed;
        let normal = -Complex64::i() * tangent;
        let cross = (g1.conj() * g2).im;
        BoundaryFrame {
            point: self.phi(z),
            tangent,
            normal,
            curvature: cross / (speed * speed * speed),
            speed,
        }
    }

    /// Total curvature integral over the boundary by the periodic trapezoid
    /// rule with arclength weight; equals 2*pi for every accepted domain.
    pub fn gauss_bonnet(&self, n_quad: usize) -> Result<f64> {
        if n_quad < 16 {
            return Err(Error::Config("gauss_bonnet needs n_quad >= 16".into()));
        }
        Ok(quad::periodic_trapezoid(n_quad, 0.0, |t| {
            let f = self.boundary_frame(t);
            f.curvature * f.speed
        }))
    }

    /// Exact area of the image domain, pi * sum_k k |c_k|^2.
    pub fn area(&self) -> f64 {
        PI * self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| (i as f64 + 1.0) * c.norm_sqr())
            .sum::<f64>()
    }

    /// Cumulative boundary arclength s(theta) = int_0^theta |Phi'| dt.
    pub fn arclength(&self, theta: f64) -> f64 {
        quad::gauss(0.0, theta, 32, |t| {
            self.dphi(Complex64::from_polar(1.0, t)).norm()
        })
    }

    /// Boundary perimeter.
    pub fn perimeter(&self) -> f64 {
        self.arclength(2.0 * PI)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn cubic() -> ConformalDomain {
        ConformalDomain::new(vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.2, 0.0),
        ])
        .unwrap()
    }

    #[test]
    fn rejects_noninjective_coefficients() {
        assert!(ConformalDomain::new(vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(0.6, 0.0)
        ])
        .is_err());
        assert!(ConformalDomain::new(vec![Complex64::new(0.0, 0.0)]).is_err());
    }

    #[test]
    fn identity_forward() {
        let d = ConformalDomain::unit_disk();
        let z = Complex64::new(0.3, 0.4);
        assert_eq!(d.map_eval(z, MapDirection::Forward).unwrap(), z);
    }

    #[test]
    fn cubic_forward_and_inverse_roundtrip() {
        let d = cubic();
        let w = d
            .map_eval(Complex64::new(1.0, 0.0), MapDirection::Forward)
            .unwrap();
        assert_abs_diff_eq!(w.re, 1.2, epsilon = 1e-15);
        assert_abs_diff_eq!(w.im, 0.0, epsilon = 1e-15);
        let z = d.map_eval(w, MapDirection::Inverse).unwrap();
        assert_abs_diff_eq!((z - Complex64::new(1.0, 0.0)).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn inverse_roundtrip_random_points() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let d = cubic();
        for _ in 0..1000 {
            let r: f64 = rng.gen::<f64>().sqrt();
            let t: f64 = rng.gen::<f64>() * 2.0 * PI;
            let z = Complex64::from_polar(r, t);
            let w = d.phi(z);
            let back = d.inverse(w).unwrap();
            assert!((back - z).norm() < 1e-11, "roundtrip failed at {z}");
        }
    }

    #[test]
    fn frame_on_unit_circle() {
        let d = ConformalDomain::unit_disk();
        let f = d.boundary_frame(0.0);
        assert_abs_diff_eq!((f.point - Complex64::new(1.0, 0.0)).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((f.tangent - Complex64::new(0.0, 1.0)).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((f.normal - Complex64::new(1.0, 0.0)).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(f.curvature, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn scaled_disk_curvature() {
        let d = ConformalDomain::scaled_disk(2.0).unwrap();
        for t in [0.0, 1.1, 3.9] {
            assert_abs_diff_eq!(d.boundary_frame(t).curvature, 0.5, epsilon = 1e-14);
        }
    }

    #[test]
    fn curvature_matches_finite_differences_of_tangent() {
        // kappa = d(arg tau)/ds, via finite differences along arclength
        let d = cubic();
        let theta = 0.0;
        let f = d.boundary_frame(theta);
        let dt = 1e-5;
        let fp = d.boundary_frame(theta + dt);
        let fm = d.boundary_frame(theta - dt);
        let dphase = (fp.tangent / fm.tangent).arg();
        let ds = 2.0 * dt * f.speed;
        assert_abs_diff_eq!(f.curvature, dphase / ds, epsilon = 1e-6);
    }

    #[test]
    fn frame_orthonormal_oriented_everywhere() {
        let d = cubic();
        for i in 0..200 {
            let f = d.boundary_frame(2.0 * PI * i as f64 / 200.0);
            assert_abs_diff_eq!(f.tangent.norm(), 1.0, epsilon = 1e-14);
            assert_abs_diff_eq!(f.normal.norm(), 1.0, epsilon = 1e-14);
            // nu . tau = 0 and tau = i nu (positive orientation)
            assert_abs_diff_eq!(
                f.normal.re * f.tangent.re + f.normal.im * f.tangent.im,
                0.0,
                epsilon = 1e-14
            );
            assert_abs_diff_eq!((f.tangent - Complex64::i() * f.normal).norm(), 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn gauss_bonnet_two_pi() {
        assert_abs_diff_eq!(
            ConformalDomain::unit_disk().gauss_bonnet(64).unwrap(),
            2.0 * PI,
            epsilon = 1e-10
        );
        assert_abs_diff_eq!(
            ConformalDomain::scaled_disk(2.0).unwrap().gauss_bonnet(64).unwrap(),
            2.0 * PI,
            epsilon = 1e-10
        );
        assert_abs_diff_eq!(cubic().gauss_bonnet(512).unwrap(), 2.0 * PI, epsilon = 1e-8);
    }

    #[test]
    fn forward_outside_disk_rejected() {
        let d = ConformalDomain::unit_disk();
        assert!(d
            .map_eval(Complex64::new(1.5, 0.0), MapDirection::Forward)
            .is_err());
    }
}
