//! Canonical harmonic maps with prescribed boundary vortices.
//!
//! On the unit disk the map with vortices a_j = e^{i theta_j} of
//! multiplicities d_j (sum d_j = 2) and base point b is the product
//!
//!   m(z) = sign * i b * prod_j [ (z - a_j)/|z - a_j| * |b - a_j|/(b - a_j) ]^{d_j},
//!
//! unit length, harmonic phase, tangent to the circle away from the a_j.
//! On a conformal image Phi(B1) the map is pulled forward with the tangent
//! rotation Phi'/|Phi'|. The lifting phi obeys d phi / d tau = kappa between
//! vortices and jumps by -pi d_j across each vortex; its harmonic conjugate
//! psi = -sum_j d_j log|Psi(w) - Psi(a_j)| + log|Psi'(w)| is the potential
//! that the renormalized-energy module integrates.

use crate::error::{Error, Result};
use crate::geometry::ConformalDomain;
use num_complex::Complex64;
use std::f64::consts::PI;

const MIN_ANGLE_GAP: f64 = 1e-9;

/// N distinct boundary vortices stored as preimage angles, with nonzero
/// integer multiplicities summing to 2.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryVortexConfig {
    thetas: Vec<f64>,
    degrees: Vec<i32>,
}

impl BoundaryVortexConfig {
    pub fn new(thetas: Vec<f64>, degrees: Vec<i32>) -> Result<Self> {
        if thetas.is_empty() || thetas.len() != degrees.len() {
            return Err(Error::Config(
                "need N >= 1 angles with matching multiplicities".into(),
            ));
        }
        if degrees.iter().any(|&d| d == 0) {
            return Err(Error::Config("multiplicities must be nonzero".into()));
        }
        let sum: i32 = degrees.iter().sum();
        if sum != 2 {
            return Err(Error::Config(format!(
                "multiplicities must sum to 2, got {sum}"
            )));
        }
        let thetas: Vec<f64> = thetas.into_iter().map(wrap_angle).collect();
        let n = thetas.len();
        for i in 0..n {
            for j in (i + 1)..n {
                if angular_distance(thetas[i], thetas[j]) < MIN_ANGLE_GAP {
                    return Err(Error::Config(format!(
                        "vortex angles {} and {} coincide",
                        thetas[i], thetas[j]
                    )));
                }
            }
        }
        Ok(BoundaryVortexConfig { thetas, degrees })
    }

    /// Two diametrically opposed single vortices at angles t and t + pi.
    pub fn antipodal_pair(t: f64) -> Self {
        BoundaryVortexConfig::new(vec![t, t + PI], vec![1, 1]).unwrap()
    }

    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn degrees(&self) -> &[i32] {
        &self.degrees
    }

    /// Preimage vortex positions e^{i theta_j}.
    pub fn points(&self) -> Vec<Complex64> {
        self.thetas
            .iter()
            .map(|&t| Complex64::from_polar(1.0, t))
            .collect()
    }

    /// Physical vortex positions Phi(e^{i theta_j}).
    pub fn physical_points(&self, domain: &ConformalDomain) -> Vec<Complex64> {
        self.points().iter().map(|&z| domain.phi(z)).collect()
    }

    /// All multiplicities are +-1.
    pub fn unit_multiplicities(&self) -> bool {
        self.degrees.iter().all(|&d| d.abs() == 1)
    }

    /// Minimal pairwise angular gap.
    pub fn min_gap(&self) -> f64 {
        let n = self.thetas.len();
        if n == 1 {
            return 2.0 * PI;
        }
        let mut best = f64::INFINITY;
        for i in 0..n {
            for j in (i + 1)..n {
                best = best.min(angular_distance(self.thetas[i], self.thetas[j]));
            }
        }
        best
    }

    /// Midpoint of the longest vortex-free boundary arc (in preimage angle).
    pub fn longest_gap_midpoint(&self) -> f64 {
        let mut sorted = self.thetas.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = sorted.len();
        let mut best = (0.0, 0.0);
        for i in 0..n {
            let a = sorted[i];
            let b = if i + 1 < n {
                sorted[i + 1]
            } else {
                sorted[0] + 2.0 * PI
            };
            if b - a > best.0 {
                best = (b - a, 0.5 * (a + b));
            }
        }
        wrap_angle(best.1)
    }
}

/// A canonical harmonic map: domain, vortex configuration, base point on
/// the preimage circle and one of the two global signs.
#[derive(Debug, Clone)]
pub struct CanonicalMap {
    domain: ConformalDomain,
    config: BoundaryVortexConfig,
    base_angle: f64,
    sign: f64,
}

impl CanonicalMap {
    pub fn new(
        domain: ConformalDomain,
        config: BoundaryVortexConfig,
        base_angle: f64,
        sign: i32,
    ) -> Result<Self> {
        if sign != 1 && sign != -1 {
            return Err(Error::Config("sign must be +1 or -1".into()));
        }
        let base_angle = wrap_angle(base_angle);
        for &t in config.thetas() {
            if angular_distance(base_angle, t) < MIN_ANGLE_GAP {
                return Err(Error::Config(
                    "base point must be distinct from every vortex".into(),
                ));
            }
        }
        Ok(CanonicalMap {
            domain,
            config,
            base_angle,
            sign: sign as f64,
        })
    }

    /// Base point on the midpoint of the longest vortex-free arc, plus sign.
    pub fn with_default_base(domain: ConformalDomain, config: BoundaryVortexConfig) -> Self {
        let b = config.longest_gap_midpoint();
        CanonicalMap::new(domain, config, b, 1).unwrap()
    }

    pub fn domain(&self) -> &ConformalDomain {
        &self.domain
    }

    pub fn config(&self) -> &BoundaryVortexConfig {
        &self.config
    }

    pub fn base_angle(&self) -> f64 {
        self.base_angle
    }

    pub fn sign(&self) -> f64 {
        self.sign
    }

    /// Disk-side product formula at preimage point z (|z| may exceed 1; the
    /// formula extends to the plane minus the vortices).
    pub fn eval_preimage(&self, z: Complex64) -> Result<Complex64> {
        let b = Complex64::from_polar(1.0, self.base_angle);
        let mut val = Complex64::i() * b * self.sign;
        for (&t, &d) in self.config.thetas().iter().zip(self.config.degrees()) {
            let a = Complex64::from_polar(1.0, t);
            let za = z - a;
            let ba = b - a;
            if za.norm() < 1e-12 {
                return Err(Error::Singularity(format!(
                    "evaluation at vortex angle {t}"
                )));
            }
            let u = za * ba.conj() / (za.norm() * ba.norm());
            val *= u.powi(d);
        }
        Ok(val)
    }

    /// Tangent-rotated map at preimage point z of the image domain:
    /// the disk value times Phi'(z)/|Phi'(z)|.
    pub fn eval_at_preimage(&self, z: Complex64) -> Result<Complex64> {
        let m = self.eval_preimage(z)?;
        if self.domain.is_identity() {
            return Ok(m);
        }
        let dp = self.domain.dphi(z);
        Ok(m * dp / dp.norm())
    }

    /// The canonical map at a physical point w of the image domain.
    ///
    /// Inverts the conformal map by Newton iteration; w must lie strictly
    /// inside the domain or on the boundary away from the vortices.
    pub fn eval(&self, w: Complex64) -> Result<Complex64> {
        let z = if self.domain.is_identity() {
            if w.norm() > 1.0 + 1e-9 {
                return Err(Error::Domain(format!("|w| = {} > 1", w.norm())));
            }
            w
        } else {
            self.domain.inverse(w)?
        };
        self.eval_at_preimage(z)
    }

    /// Continuous phase increment of the map along the preimage-circle arc
    /// (theta_a, theta_b) traced at radius 1 - 1e-6 (just inside the
    /// boundary). Endpoints must keep clear of the vortices; interior
    /// vortices of the arc show up as -pi d_j phase drops.
    pub fn winding_increment(&self, theta_a: f64, theta_b: f64, n_samples: usize) -> Result<f64> {
        self.winding_at_radius(theta_a, theta_b, n_samples, 1.0 - 1e-6)
    }

    /// Total phase increment along a full preimage circle of radius
    /// 1 + 1e-6, which encloses every boundary vortex; equal to
    /// 2 pi sum_j d_j for any admissible configuration.
    pub fn degree_winding(&self, n_samples: usize) -> Result<f64> {
        self.winding_at_radius(0.0, 2.0 * PI, n_samples, 1.0 + 1e-6)
    }

    fn winding_at_radius(
        &self,
        theta_a: f64,
        theta_b: f64,
        n_samples: usize,
        radius: f64,
    ) -> Result<f64> {
        if n_samples < 2 {
            return Err(Error::Arity("need at least 2 samples".into()));
        }
        let mut total = 0.0;
        let mut prev = self.eval_at_preimage(Complex64::from_polar(radius, theta_a))?;
        for k in 1..=n_samples {
            let t = theta_a + (theta_b - theta_a) * k as f64 / n_samples as f64;
            let cur = self.eval_at_preimage(Complex64::from_polar(radius, t))?;
            let step = (cur / prev).arg();
            if step.abs() >= 0.5 * PI {
                return Err(Error::Undersampled(format!(
                    "phase step {step:.3} >= pi/2 at angle {t:.6}; increase n_samples"
                )));
            }
            total += step;
            prev = cur;
        }
        Ok(total)
    }
}

/// Boundary lifting phi(theta) of the tangent direction with the prescribed
/// vortex jumps.
///
/// Between vortices d phi / d tau = kappa; across theta_j the value drops by
/// pi d_j (jump assigned on the right). Normalized so that phi equals the
/// principal tangent angle at the midpoint of the longest vortex-free arc.
pub fn boundary_lifting(
    config: &BoundaryVortexConfig,
    domain: &ConformalDomain,
    theta: f64,
) -> Result<f64> {
    for &t in config.thetas() {
        if angular_distance(theta, t) < MIN_ANGLE_GAP {
            return Err(Error::Singularity(format!("theta = {theta} is a vortex")));
        }
    }
    let t_ref = config.longest_gap_midpoint();
    // position within one loop starting at the reference point
    let s = t_ref + wrap_to_2pi(theta - t_ref);
    // turning(t) = t + pi/2 + arg Phi'(e^{it}) is continuous; anchor its
    // branch to the principal tangent angle at the reference point
    let tau_ref = domain.boundary_frame(t_ref).tangent;
    let anchor = tau_ref.arg() - domain.turning(t_ref);
    let mut phi = domain.turning(s) + anchor;
    for (&tj, &dj) in config.thetas().iter().zip(config.degrees()) {
        let sj = wrap_to_2pi(tj - t_ref);
        if wrap_to_2pi(theta - t_ref) >= sj {
            phi -= PI * dj as f64;
        }
    }
    Ok(phi)
}

/// Harmonic conjugate of the lifting phase at a physical point w:
/// psi(w) = -sum_j d_j log|Psi(w) - Psi(a_j)| + log|Psi'(w)|, with the
/// additive constant fixed to zero on the disk.
pub fn conjugate_psi(
    config: &BoundaryVortexConfig,
    domain: &ConformalDomain,
    w: Complex64,
) -> Result<f64> {
    let z = if domain.is_identity() {
        w
    } else {
        domain.inverse(w)?
    };
    conjugate_psi_preimage(config, domain, z)
}

/// Same as [`conjugate_psi`] but taking the preimage point directly.
pub fn conjugate_psi_preimage(
    config: &BoundaryVortexConfig,
    domain: &ConformalDomain,
    z: Complex64,
) -> Result<f64> {
    let mut psi = 0.0;
    for (&t, &d) in config.thetas().iter().zip(config.degrees()) {
        let a = Complex64::from_polar(1.0, t);
        let r = (z - a).norm();
        if r < 1e-12 {
            return Err(Error::Singularity(format!("psi evaluated at vortex {t}")));
        }
        psi -= d as f64 * r.ln();
    }
    if !domain.is_identity() {
        // log|Psi'(w)| = -log|Phi'(z)|
        psi -= domain.dphi(z).norm().ln();
    }
    Ok(psi)
}

/// Gradient magnitude of the conjugate potential at preimage point z,
/// measured in physical coordinates: |grad psi|(w) = |H(z)| / |Phi'(z)|
/// with H(z) = sum_j d_j/(z - z_j) + Phi''(z)/Phi'(z).
pub fn grad_psi_norm_preimage(
    config: &BoundaryVortexConfig,
    domain: &ConformalDomain,
    z: Complex64,
) -> Result<f64> {
    let mut hh = Complex64::new(0.0, 0.0);
    for (&t, &d) in config.thetas().iter().zip(config.degrees()) {
        let a = Complex64::from_polar(1.0, t);
        if (z - a).norm() < 1e-12 {
            return Err(Error::Singularity("gradient at vortex".into()));
        }
        hh += d as f64 / (z - a);
    }
    let dp = domain.dphi(z);
    hh += domain.d2phi(z) / dp;
    Ok(hh.norm() / dp.norm())
}

pub(crate) fn wrap_angle(t: f64) -> f64 {
    let mut t = t % (2.0 * PI);
    if t < 0.0 {
        t += 2.0 * PI;
    }
    t
}

pub(crate) fn wrap_to_2pi(d: f64) -> f64 {
    let mut d = d % (2.0 * PI);
    if d < 0.0 {
        d += 2.0 * PI;
    }
    d
}

pub(crate) fn angular_distance(a: f64, b: f64) -> f64 {
    let d = wrap_to_2pi(a - b);
    d.min(2.0 * PI - d)
}
