//! Magnetostatic kernels and the stray-field energy of x3-invariant
//! magnetizations on the slab Omega x (0, h).
//!
//! The x3 integrations are carried out exactly, which reduces everything
//! to planar integrals against three kernels:
//!
//! * Gamma_h(r) = (1/(2 pi h)) (1/r - 1/sqrt(r^2 + h^2)) for the top and
//!   bottom face charges (mass 1 over the plane),
//! * K_h(r) = int_0^1 int_0^1 ds dt / sqrt(r^2 + h^2 (s-t)^2)
//!          = (2/h) f(r/h) with f(t) = arsinh(1/t) - 1/(t + sqrt(1+t^2))
//!   for the slab-to-slab interactions,
//! * W(r; x3) = arsinh((h - x3)/r) + arsinh(x3/r) for the potential of a
//!   vertical charge column.
//!
//! The total stray energy splits as 4 pi int |grad U|^2 = A + 2B + C1 + C2
//! (volume-volume, volume-lateral, face-face, lateral-lateral), and the
//! reduction estimate compares (A + 2B)/(4 pi) against the local terms of
//! the reduced functional.

use crate::canonical::{wrap_to_2pi, BoundaryVortexConfig};
use crate::error::{Error, Result};
use crate::fields::{energy, EnergyParams, FieldMode, Functional, VectorField};
use crate::geometry::{ConformalDomain, Mesh, RegimeParams};
use crate::quad;
use crate::thread_pool::parallel_sum;
use num_complex::Complex64;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    GammaH,
    KH,
}

/// f(t) = arsinh(1/t) - 1/(t + sqrt(1 + t^2)); positive and strictly
/// decreasing, f(t) ~ log(2/t) - 1 as t -> 0, t f(t) -> 1/2 as t -> inf.
pub fn f_profile(t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("f is defined for t > 0, got {t}")));
    }
    let s = (1.0 + t * t).sqrt();
    // log form is stable for small t; asinh for the rest
    let arsinh_recip = if t < 1e-8 {
        ((s + 1.0) / t).ln()
    } else {
        (1.0 / t).asinh()
    };
    Ok(arsinh_recip - 1.0 / (t + s))
}

/// Running integral F(t) = int_0^t f(s) ds in closed form.
pub(crate) fn f_primitive(t: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    let s = (1.0 + t * t).sqrt();
    t * (1.0 / t).asinh() + 0.5 * t.asinh() - 0.5 * t * s + 0.5 * t * t
}

/// Closed-form kernel values.
pub fn kernel_eval(kind: KernelKind, h: f64, r: f64) -> Result<f64> {
    if h <= 0.0 {
        return Err(Error::Domain("thickness h must be positive".into()));
    }
    if r <= 0.0 {
        return Err(Error::Singularity(format!("kernel evaluated at r = {r}")));
    }
    match kind {
        KernelKind::GammaH => {
            // (1/(2 pi h)) (1/r - 1/sqrt(r^2+h^2)) in cancellation-free form
            let s = (r * r + h * h).sqrt();
            Ok(h / (2.0 * PI * r * s * (s + r)))
        }
        KernelKind::KH => Ok(2.0 / h * f_profile(r / h)?),
    }
}

/// Direct double integral int_0^1 int_0^1 ds dt / sqrt(r^2 + h^2(s-t)^2),
/// reduced by symmetry to 2 int_0^1 (1-v) dv / sqrt(r^2 + h^2 v^2) and
/// integrated with panels graded toward v = 0. Cross-checks K_h.
pub fn kh_double_integral(h: f64, r: f64) -> f64 {
    let scale = (r / h).min(1.0).max(1e-12);
    2.0 * quad::left_graded_gauss(0.0, 1.0, scale, 16, |v| {
        (1.0 - v) / (r * r + h * h * v * v).sqrt()
    })
}

/// int_{B_R} Gamma_h dx = 1 - (R/h + sqrt(1 + (R/h)^2))^{-1} (closed form).
pub fn gamma_ball_integral(h: f64, r_max: f64) -> Result<f64> {
    if h <= 0.0 || r_max <= 0.0 || r_max > 1.0 {
        return Err(Error::Domain(format!(
            "need h > 0 and R in (0, 1], got h = {h}, R = {r_max}"
        )));
    }
    let x = r_max / h;
    Ok(1.0 - 1.0 / (x + (1.0 + x * x).sqrt()))
}

/// Radial quadrature of the same ball integral (the cross-check route).
pub fn gamma_ball_quadrature(h: f64, r_max: f64) -> f64 {
    // 2 pi r Gamma_h(r) = (1/h)(1 - r/sqrt(r^2+h^2)), smooth on [0, R]
    quad::left_graded_gauss(0.0, r_max, h.min(r_max), 16, |r| {
        let s = (r * r + h * h).sqrt();
        h / (s * (s + r))
    })
}

/// Probability that a disk point leaks past a straight boundary at signed
/// distance s (in units of h): the half-plane deficit of the Gamma kernel,
/// lambda(s) = (1/(2 pi)) [pi - 2 atan(s) - s log(1 + 1/s^2)].
fn gamma_halfplane_leak(s: f64) -> f64 {
    if s <= 0.0 {
        return 0.5;
    }
    if s > 1e8 {
        return 0.25 / (PI * s);
    }
    (PI - 2.0 * s.atan() - s * (1.0 + 1.0 / (s * s)).ln_1p_safe()) / (2.0 * PI)
}

trait Ln1pSafe {
    fn ln_1p_safe(self) -> f64;
}
impl Ln1pSafe for f64 {
    fn ln_1p_safe(self) -> f64 {
        // argument arrives as 1 + x; recover ln(1+x) accurately for large s
        (self - 1.0).ln_1p()
    }
}

/// sup_x |(1/|log h|) int_dOmega K_h(x - y) dH^1(y) - 2| over n_x boundary
/// samples; returns (sup gap, sup gap * |log h|).
pub fn kh_boundary_check(
    domain: &ConformalDomain,
    h: f64,
    n_x: usize,
    n_quad: usize,
) -> Result<(f64, f64)> {
    if !(h > 0.0 && h <= 0.5) {
        return Err(Error::Domain(format!("need h in (0, 1/2], got {h}")));
    }
    if n_x == 0 {
        return Err(Error::Arity("need at least one sample point".into()));
    }
    let pts = n_quad.clamp(8, 24);
    let log_h = h.ln().abs();
    let mut sup = 0.0f64;
    for i in 0..n_x {
        let alpha = 2.0 * PI * i as f64 / n_x as f64 + 0.05;
        let x = domain.phi(Complex64::from_polar(1.0, alpha));
        let speed_here = domain.dphi(Complex64::from_polar(1.0, alpha)).norm();
        let scale = h / (10.0 * speed_here);
        let integrand = |t: f64| -> f64 {
            let z = Complex64::from_polar(1.0, t);
            let chord = (domain.phi(z) - x).norm();
            let speed = domain.dphi(z).norm();
            2.0 / h * f_profile((chord / h).max(1e-300)).unwrap_or(0.0) * speed
        };
        let val = quad::left_graded_gauss(alpha, alpha + PI, scale, pts, integrand)
            + quad::left_graded_gauss(0.0, PI, scale, pts, |u| integrand(alpha - u));
        let gap = (val / log_h - 2.0).abs();
        sup = sup.max(gap);
    }
    Ok((sup, sup * log_h))
}

// ---------------------------------------------------------------------
// field-derived charges
// ---------------------------------------------------------------------

struct Charges<'a> {
    mesh: &'a Mesh,
    /// P0 divergence of the in-plane field per triangle.
    div: Vec<f64>,
    /// Face charge (third component) per triangle, centroid value.
    m3: Vec<f64>,
    /// Lateral charge m . nu at each boundary-loop vertex.
    g: Vec<f64>,
    centroids: Vec<[f64; 2]>,
}

impl<'a> Charges<'a> {
    fn new(domain: &ConformalDomain, mesh: &'a Mesh, field: &VectorField) -> Result<Self> {
        if field.len() != mesh.vertex_count() {
            return Err(Error::Config("field/mesh size mismatch".into()));
        }
        let mut div = Vec::with_capacity(mesh.triangles.len());
        let mut m3 = Vec::with_capacity(mesh.triangles.len());
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let gr = &mesh.grads[t];
            let mut d = 0.0;
            let mut z = 0.0;
            for k in 0..3 {
                let v = field.xy[tri[k]];
                d += v[0] * gr[k][0] + v[1] * gr[k][1];
                if let Some(zc) = &field.z {
                    z += zc[tri[k]] / 3.0;
                }
            }
            div.push(d);
            m3.push(z);
        }
        let g = mesh
            .boundary_loop
            .iter()
            .zip(&mesh.boundary_theta)
            .map(|(&v, &t)| {
                let nu = domain.boundary_frame(t).normal;
                field.xy[v][0] * nu.re + field.xy[v][1] * nu.im
            })
            .collect();
        let centroids = (0..mesh.triangles.len()).map(|t| mesh.centroid(t)).collect();
        Ok(Charges {
            mesh,
            div,
            m3,
            g,
            centroids,
        })
    }

    /// Lateral boundary integral int g(y) k(|x - y|) dH^1(y) with panels
    /// graded toward the boundary point closest to x (preimage angle
    /// `near`), resolution scale `scale`.
    fn boundary_integral<K: Fn(f64) -> f64>(
        &self,
        domain: &ConformalDomain,
        x: [f64; 2],
        near: f64,
        scale: f64,
        pts: usize,
        kernel: K,
    ) -> f64 {
        let nb = self.g.len();
        let xc = Complex64::new(x[0], x[1]);
        let g_at = |t: f64| -> f64 {
            // P1 interpolation of the lateral charge in preimage angle
            let pos = wrap_to_2pi(t) / (2.0 * PI) * nb as f64;
            let k = (pos.floor() as usize) % nb;
            let frac = pos - pos.floor();
            self.g[k] * (1.0 - frac) + self.g[(k + 1) % nb] * frac
        };
        let integrand = |t: f64| -> f64 {
            let z = Complex64::from_polar(1.0, t);
            let chord = (domain.phi(z) - xc).norm().max(1e-300);
            g_at(t) * kernel(chord) * domain.dphi(z).norm()
        };
        quad::left_graded_gauss(near, near + PI, scale, pts, integrand)
            + quad::left_graded_gauss(0.0, PI, scale, pts, |u| integrand(near - u))
    }
}

// ---------------------------------------------------------------------
// stray potential
// ---------------------------------------------------------------------

/// Exact vertical integral of the Newtonian kernel over a charge column:
/// int_0^h dy3 / sqrt(r^2 + (x3 - y3)^2).
fn column_kernel(r: f64, x3: f64, h: f64) -> f64 {
    ((h - x3) / r).asinh() + (x3 / r).asinh()
}

/// Recursive near-field triangle quadrature of x -> kernel(|x - y|).
fn tri_integral<K: Fn(f64) -> f64 + Copy>(
    verts: [[f64; 2]; 3],
    area: f64,
    x: [f64; 2],
    vertical: f64,
    depth: usize,
    kernel: K,
) -> f64 {
    let c = [
        (verts[0][0] + verts[1][0] + verts[2][0]) / 3.0,
        (verts[0][1] + verts[1][1] + verts[2][1]) / 3.0,
    ];
    let d2 = (x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2) + vertical * vertical;
    let diam = (0..3)
        .map(|i| {
            let j = (i + 1) % 3;
            ((verts[i][0] - verts[j][0]).powi(2) + (verts[i][1] - verts[j][1]).powi(2)).sqrt()
        })
        .fold(0.0f64, f64::max);
    if depth == 0 || diam * diam < 0.04 * d2 {
        let r = ((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2)).sqrt().max(1e-12);
        return area * kernel(r);
    }
    // split on edge midpoints
    let m = |i: usize, j: usize| {
        [
            0.5 * (verts[i][0] + verts[j][0]),
            0.5 * (verts[i][1] + verts[j][1]),
        ]
    };
    let (m01, m12, m20) = (m(0, 1), m(1, 2), m(2, 0));
    let quarter = area / 4.0;
    tri_integral([verts[0], m01, m20], quarter, x, vertical, depth - 1, kernel)
        + tri_integral([m01, verts[1], m12], quarter, x, vertical, depth - 1, kernel)
        + tri_integral([m20, m12, verts[2]], quarter, x, vertical, depth - 1, kernel)
        + tri_integral([m01, m12, m20], quarter, x, vertical, depth - 1, kernel)
}

/// Stray-field potential U(x) of the x3-invariant magnetization on the
/// slab Omega x (0, h), via the charge representation
/// 4 pi U = -int_vol (div m)/|x-y| + int_lateral (m . nu)/|x-y|
///          + int_top m3/|x-y| - int_bottom m3/|x-y|.
pub fn stray_potential(
    domain: &ConformalDomain,
    mesh: &Mesh,
    field: &VectorField,
    h: f64,
    x: [f64; 3],
) -> Result<f64> {
    if h <= 0.0 {
        return Err(Error::Domain("h must be positive".into()));
    }
    let ch = Charges::new(domain, mesh, field)?;
    let x2 = [x[0], x[1]];
    let x3 = x[2];

    let mut total = 0.0;
    // volume charge (-div) against the exact column kernel
    for (t, tri) in mesh.triangles.iter().enumerate() {
        if ch.div[t] == 0.0 {
            continue;
        }
        let verts = [
            mesh.vertices[tri[0]],
            mesh.vertices[tri[1]],
            mesh.vertices[tri[2]],
        ];
        let vertical = x3.abs().min((x3 - h).abs());
        total -= ch.div[t]
            * tri_integral(verts, mesh.areas[t], x2, vertical, 7, |r| {
                column_kernel(r, x3, h)
            });
    }
    // top (+m3 at y3 = h) and bottom (-m3 at y3 = 0) faces
    if field.z.is_some() {
        for (t, tri) in mesh.triangles.iter().enumerate() {
            if ch.m3[t] == 0.0 {
                continue;
            }
            let verts = [
                mesh.vertices[tri[0]],
                mesh.vertices[tri[1]],
                mesh.vertices[tri[2]],
            ];
            let dz_top = x3 - h;
            total += ch.m3[t]
                * tri_integral(verts, mesh.areas[t], x2, dz_top, 7, |r| {
                    1.0 / (r * r + dz_top * dz_top).sqrt()
                });
            total -= ch.m3[t]
                * tri_integral(verts, mesh.areas[t], x2, x3, 7, |r| {
                    1.0 / (r * r + x3 * x3).sqrt()
                });
        }
    }
    // lateral charge with the column kernel
    let xc = Complex64::new(x2[0], x2[1]);
    let dist_to_bd = {
        // coarse search for the nearest boundary angle
        let mut best = (f64::INFINITY, 0.0);
        for k in 0..256 {
            let t = 2.0 * PI * k as f64 / 256.0;
            let d = (domain.phi(Complex64::from_polar(1.0, t)) - xc).norm();
            if d < best.0 {
                best = (d, t);
            }
        }
        best
    };
    let scale = (dist_to_bd.0.max(h) / 10.0).max(1e-9);
    total += ch.boundary_integral(domain, x2, dist_to_bd.1, scale, 16, |r| {
        column_kernel(r, x3, h)
    });

    Ok(total / (4.0 * PI))
}

// ---------------------------------------------------------------------
// energy decomposition
// ---------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct StrayTerms {
    /// Volume-volume charge interaction.
    pub a: f64,
    /// Volume-lateral cross term (with its sign).
    pub b: f64,
    /// Face-face (m3) interaction.
    pub c1: f64,
    /// Lateral-lateral interaction.
    pub c2: f64,
    /// int_{R^3} |grad U|^2 = (A + 2B + C1 + C2)/(4 pi).
    pub stray_energy: f64,
}

/// Mean self-interaction of a triangle with the K_h kernel, via the
/// equal-area disk: int_{D x D} 2h f(|x-y|/h) = 4 pi h^3 F2(a/h)-style
/// radial reduction with the disk pair-distance density.
fn disc_self_integral(area: f64, h: f64) -> f64 {
    let a = (area / PI).sqrt();
    // pair-distance density of the disk of radius a:
    // p(r) = 2 r / a^2 * (2/pi)(acos(q) - q sqrt(1-q^2)), q = r/(2a),
    // normalized so int p = 1; multiply by area^2 at the end
    let val = quad::left_graded_gauss(0.0, 2.0 * a, h.min(a), 12, |r| {
        let q = (r / (2.0 * a)).min(1.0);
        let dens = 2.0 * r / (a * a) * (2.0 / PI) * (q.acos() - q * (1.0 - q * q).sqrt());
        dens * 2.0 * h * f_profile((r / h).max(1e-300)).unwrap_or(0.0)
    });
    area * area * val
}

/// Pairwise triangle interaction sum_T sum_S q_S q_T int int k(|x-y|),
/// with centroid/3-point rules for separated pairs and subdivision plus
/// an equal-area-disk rule for touching pairs.
fn pair_interaction(mesh: &Mesh, q: &[f64], h: f64) -> f64 {
    let n = mesh.triangles.len();
    let kernel = |r: f64| 2.0 * h * f_profile((r / h).max(1e-300)).unwrap_or(0.0);
    let centroids: Vec<[f64; 2]> = (0..n).map(|t| mesh.centroid(t)).collect();
    let midpoints: Vec<[[f64; 2]; 3]> = mesh
        .triangles
        .iter()
        .map(|tri| {
            let p = [
                mesh.vertices[tri[0]],
                mesh.vertices[tri[1]],
                mesh.vertices[tri[2]],
            ];
            [
                [0.5 * (p[0][0] + p[1][0]), 0.5 * (p[0][1] + p[1][1])],
                [0.5 * (p[1][0] + p[2][0]), 0.5 * (p[1][1] + p[2][1])],
                [0.5 * (p[2][0] + p[0][0]), 0.5 * (p[2][1] + p[0][1])],
            ]
        })
        .collect();

    let row = |s: usize| -> f64 {
        if q[s] == 0.0 {
            return 0.0;
        }
        let mut acc = 0.0;
        for t in 0..n {
            if q[t] == 0.0 {
                continue;
            }
            let dx = centroids[s][0] - centroids[t][0];
            let dy = centroids[s][1] - centroids[t][1];
            let d = (dx * dx + dy * dy).sqrt();
            let sep = mesh.diameters[s] + mesh.diameters[t];
            let v = if d > 3.0 * sep && d > 6.0 * h {
                mesh.areas[s] * mesh.areas[t] * kernel(d)
            } else if d > 1.05 * sep {
                // 3 x 3 midpoint rule
                let mut sum = 0.0;
                for ms in &midpoints[s] {
                    for mt in &midpoints[t] {
                        let r = ((ms[0] - mt[0]).powi(2) + (ms[1] - mt[1]).powi(2)).sqrt();
                        sum += kernel(r);
                    }
                }
                mesh.areas[s] * mesh.areas[t] * sum / 9.0
            } else if s == t {
                disc_self_integral(mesh.areas[s], h)
            } else {
                // touching neighbors: subdivide both once, then midpoints
                let mut sum = 0.0;
                for ms in &midpoints[s] {
                    for mt in &midpoints[t] {
                        let r = ((ms[0] - mt[0]).powi(2) + (ms[1] - mt[1]).powi(2))
                            .sqrt()
                            .max(0.25 * (mesh.diameters[s] + mesh.diameters[t]) * 0.5);
                        sum += kernel(r);
                    }
                }
                mesh.areas[s] * mesh.areas[t] * sum / 9.0
            };
            acc += q[s] * q[t] * v;
        }
        acc
    };
    parallel_sum(n, row)
}

/// The A, B, C1, C2 decomposition of 4 pi int |grad U_bar|^2 for an
/// x3-invariant magnetization.
pub fn stray_terms(
    domain: &ConformalDomain,
    mesh: &Mesh,
    field: &VectorField,
    h: f64,
) -> Result<StrayTerms> {
    if h <= 0.0 {
        return Err(Error::Domain("h must be positive".into()));
    }
    let ch = Charges::new(domain, mesh, field)?;
    let nb = ch.g.len();

    // A: volume-volume with the slab kernel h^2 K_h = 2 h f(r/h)
    let a = pair_interaction(mesh, &ch.div, h);

    // B: -int_vol int_lat div(x) g(y) 2h f(|x-y|/h); outer 3-point rule
    // over triangles, inner graded boundary integral
    let b = -parallel_sum(mesh.triangles.len(), |t| {
        if ch.div[t] == 0.0 {
            return 0.0;
        }
        let tri = mesh.triangles[t];
        let p = [
            mesh.vertices[tri[0]],
            mesh.vertices[tri[1]],
            mesh.vertices[tri[2]],
        ];
        let zc = (mesh.preimage[tri[0]] + mesh.preimage[tri[1]] + mesh.preimage[tri[2]]) / 3.0;
        let near = zc.arg();
        let mut acc = 0.0;
        for k in 0..3 {
            let mp = [
                0.5 * (p[k][0] + p[(k + 1) % 3][0]),
                0.5 * (p[k][1] + p[(k + 1) % 3][1]),
            ];
            let dist = (1.0 - zc.norm()).max(0.05) * domain.derivative_floor();
            let scale = (dist.max(h) / 10.0).max(1e-9);
            acc += ch.boundary_integral(domain, mp, near, scale, 12, |r| {
                2.0 * h * f_profile((r / h).max(1e-300)).unwrap_or(0.0)
            }) / 3.0;
        }
        ch.div[t] * mesh.areas[t] * acc
    });

    // C1: 4 pi h [ int m3^2 (1 - leak) - (1/2) int int (m3(x)-m3(y))^2 Gamma_h ]
    let c1 = if field.z.is_some() {
        let mut local = 0.0;
        for t in 0..mesh.triangles.len() {
            let zc = (mesh.preimage[mesh.triangles[t][0]]
                + mesh.preimage[mesh.triangles[t][1]]
                + mesh.preimage[mesh.triangles[t][2]])
                / 3.0;
            // distance to the boundary along the preimage radius
            let dist = (1.0 - zc.norm()).max(0.0) * domain.derivative_floor();
            local += mesh.areas[t] * ch.m3[t] * ch.m3[t] * (1.0 - gamma_halfplane_leak(dist / h));
        }
        let diff = parallel_sum(mesh.triangles.len(), |s| {
            if ch.m3[s] == 0.0 && ch.div[s] == 0.0 {
                // still need the difference term when m3 vanishes locally
            }
            let mut acc = 0.0;
            for t in 0..mesh.triangles.len() {
                if t == s {
                    continue;
                }
                let dx = ch.centroids[s][0] - ch.centroids[t][0];
                let dy = ch.centroids[s][1] - ch.centroids[t][1];
                let d = (dx * dx + dy * dy).sqrt();
                if d < 0.5 * (mesh.diameters[s] + mesh.diameters[t]) {
                    continue;
                }
                let gamma = {
                    let s2 = (d * d + h * h).sqrt();
                    h / (2.0 * PI * d * s2 * (s2 + d))
                };
                let dm = ch.m3[s] - ch.m3[t];
                acc += mesh.areas[s] * mesh.areas[t] * dm * dm * gamma;
            }
            acc
        });
        4.0 * PI * h * (local - 0.5 * diff)
    } else {
        0.0
    };

    // C2: lateral-lateral, outer 4-point Gauss per boundary edge, inner
    // graded boundary integral of the same slab kernel
    let (gl_x, gl_w) = quad::gauss_legendre(4);
    let c2 = parallel_sum(nb, |k| {
        let t0 = mesh.boundary_theta[k];
        let t1 = if k + 1 < nb {
            mesh.boundary_theta[k + 1]
        } else {
            mesh.boundary_theta[0] + 2.0 * PI
        };
        let mut acc = 0.0;
        for q in 0..4 {
            let t = 0.5 * (t0 + t1) + 0.5 * (t1 - t0) * gl_x[q];
            let z = Complex64::from_polar(1.0, t);
            let speed = domain.dphi(z).norm();
            let x = domain.phi(z);
            let frac = (t - t0) / (t1 - t0);
            let gval = ch.g[k] * (1.0 - frac) + ch.g[(k + 1) % nb] * frac;
            let inner = ch.boundary_integral(
                domain,
                [x.re, x.im],
                t,
                h / (10.0 * speed),
                12,
                |r| 2.0 * h * f_profile((r / h).max(1e-300)).unwrap_or(0.0),
            );
            acc += 0.5 * (t1 - t0) * gl_w[q] * gval * speed * inner;
        }
        acc
    });

    let stray_energy = (a + 2.0 * b + c1 + c2) / (4.0 * PI);
    Ok(StrayTerms {
        a,
        b,
        c1,
        c2,
        stray_energy,
    })
}

// ---------------------------------------------------------------------
// reduction check
// ---------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct ClaimCheck {
    /// |(1/(eta^2 h)) S - int m3^2/eta^2 - boundary penalty| / |log eps|.
    pub lhs: f64,
    /// lambda(h) * reduced energy.
    pub rhs: f64,
    pub ratio: f64,
    /// Full rescaled 3D energy of the x3-invariant field.
    pub e_h: f64,
    /// Reduced 2D energy.
    pub e_bar_h: f64,
    pub terms: StrayTerms,
}

/// Quantitative check of the stray-field reduction: the distance between
/// the nonlocal energy and its local surrogate, against lambda(h) times
/// the reduced energy.
pub fn lemma_claim_check(
    domain: &ConformalDomain,
    mesh: &Mesh,
    field: &VectorField,
    params: RegimeParams,
) -> Result<ClaimCheck> {
    let terms = stray_terms(domain, mesh, field, params.h)?;
    let eta2 = params.eta * params.eta;
    let log_eps = params.log_eps_abs();

    // int m3^2 (vertex-lumped)
    let m3_sq: f64 = match &field.z {
        Some(z) => z
            .iter()
            .zip(&mesh.masses)
            .map(|(z, m)| m * z * z)
            .sum(),
        None => 0.0,
    };
    // boundary penalty without the 1/(2 pi eps) prefactor
    let mut g_sq = 0.0;
    for e in &mesh.boundary_edges {
        let (va, vb) = (mesh.boundary_loop[e.a], mesh.boundary_loop[e.b]);
        let da = field.xy[va][0] * e.normal[0] + field.xy[va][1] * e.normal[1];
        let db = field.xy[vb][0] * e.normal[0] + field.xy[vb][1] * e.normal[1];
        g_sq += 0.5 * e.len * (da * da + db * db);
    }

    let pen_local = m3_sq / eta2 + g_sq / (2.0 * PI * params.eps);
    let lhs = ((terms.stray_energy / (eta2 * params.h)) - pen_local).abs() / log_eps;

    let ep = EnergyParams::from(params);
    let e_bar = energy(mesh, field, ep, Functional::BarH)?;
    let rhs = params.lambda_h * e_bar.total;

    // E_h for the x3-invariant field: Dirichlet/|log eps| plus the exact
    // stray term
    let e_h = e_bar.dirichlet + terms.stray_energy / (eta2 * params.h * log_eps);

    Ok(ClaimCheck {
        lhs,
        rhs,
        ratio: lhs / rhs,
        e_h,
        e_bar_h: e_bar.total,
        terms,
    })
}

/// A smooth unit-length test field: the canonical-map lifting with each
/// vortex jump replaced by a tanh transition of the given width, extended
/// harmonically into the domain mode by mode.
pub fn mollified_canonical_field(
    domain: &ConformalDomain,
    mesh: &Mesh,
    config: &BoundaryVortexConfig,
    width: f64,
) -> Result<VectorField> {
    if width <= 0.0 {
        return Err(Error::Config("core width must be positive".into()));
    }
    let n = 1024usize;
    let modes = 200usize;
    // smooth lifting on the boundary: turning angle minus tanh steps
    let phi_w = |t: f64| -> f64 {
        let mut v = domain.turning(t) - t; // periodic part of the turning
        for (&tj, &dj) in config.thetas().iter().zip(config.degrees()) {
            let mut u = (t - tj) % (2.0 * PI);
            if u > PI {
                u -= 2.0 * PI;
            }
            if u < -PI {
                u += 2.0 * PI;
            }
            v -= PI * dj as f64 * 0.5 * ((u / width).tanh() + 1.0);
        }
        v + t
    };
    // Fourier coefficients of phi_w (periodic since sum d_j = 2)
    let samples: Vec<f64> = (0..n).map(|i| phi_w(2.0 * PI * i as f64 / n as f64)).collect();
    let mut a = vec![0.0; modes + 1];
    let mut b = vec![0.0; modes + 1];
    for m in 0..=modes {
        for (i, &s) in samples.iter().enumerate() {
            let t = 2.0 * PI * i as f64 / n as f64;
            a[m] += s * (m as f64 * t).cos();
            b[m] += s * (m as f64 * t).sin();
        }
        let norm = if m == 0 { 1.0 } else { 2.0 };
        a[m] *= norm / n as f64;
        b[m] *= norm / n as f64;
    }
    VectorField::unit_from_fn(mesh, |i| {
        let z = mesh.preimage[i];
        let (r, t) = (z.norm(), z.arg());
        let mut phi = a[0];
        let mut rm = 1.0;
        for m in 1..=modes {
            rm *= r;
            phi += rm * (a[m] * (m as f64 * t).cos() + b[m] * (m as f64 * t).sin());
        }
        Ok([phi.cos(), phi.sin()])
    })
}

/// Kernel identity trace: closed forms against their quadrature
/// cross-checks on a list of radii.
#[derive(Debug, Clone)]
pub struct KernelTrace {
    pub h: f64,
    /// (kind, r, closed form, cross-check, absolute gap)
    pub samples: Vec<(KernelKind, f64, f64, f64, f64)>,
}

pub fn kernel_trace(h: f64, radii: &[f64]) -> Result<KernelTrace> {
    let mut samples = Vec::new();
    for &r in radii {
        let kh = kernel_eval(KernelKind::KH, h, r)?;
        let kh_q = kh_double_integral(h, r);
        samples.push((KernelKind::KH, r, kh, kh_q, (kh - kh_q).abs()));
        let gb = gamma_ball_integral(h, r.min(1.0))?;
        let gb_q = gamma_ball_quadrature(h, r.min(1.0));
        samples.push((KernelKind::GammaH, r, gb, gb_q, (gb - gb_q).abs()));
    }
    Ok(KernelTrace { h, samples })
}
