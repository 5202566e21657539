//! Discrete vector fields on a mesh, the two energy functionals, the
//! global/interior/boundary Jacobians and phase-based boundary-vortex
//! detection.
//!
//! Fields are P1 (vertex values, affine per triangle). Gradients are
//! constant per triangle, which makes the two Jacobian identities
//!
//!   <J(u), 1> = 0   and   <J(u), zeta> = 2 <jac(u), zeta>  (zeta = 0 on
//!   the boundary)
//!
//! hold to machine precision under exact quadrature of the piecewise
//! polynomial integrands.

use crate::canonical::wrap_angle;
use crate::error::{Error, Result};
use crate::geometry::{ConformalDomain, Mesh, RegimeParams};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldMode {
    /// |u| = 1 at every vertex.
    UnitCircle,
    /// |u| <= 1 (including the optional third component).
    Relaxed,
}

/// Per-vertex 2D values with an optional third component.
#[derive(Debug, Clone)]
pub struct VectorField {
    pub mode: FieldMode,
    pub xy: Vec<[f64; 2]>,
    pub z: Option<Vec<f64>>,
}

impl VectorField {
    pub fn new(mode: FieldMode, xy: Vec<[f64; 2]>, z: Option<Vec<f64>>) -> Result<Self> {
        if let Some(z) = &z {
            if z.len() != xy.len() {
                return Err(Error::Config("z component length mismatch".into()));
            }
        }
        let field = VectorField { mode, xy, z };
        field.validate()?;
        Ok(field)
    }

    fn validate(&self) -> Result<()> {
        match self.mode {
            FieldMode::UnitCircle => {
                for (i, v) in self.xy.iter().enumerate() {
                    let n = (v[0] * v[0] + v[1] * v[1]).sqrt();
                    if (n - 1.0).abs() > 1e-12 {
                        return Err(Error::Config(format!(
                            "unit-circle field has |u| = {n} at vertex {i}"
                        )));
                    }
                }
                if let Some(z) = &self.z {
                    if z.iter().any(|&v| v != 0.0) {
                        return Err(Error::Config(
                            "unit-circle fields carry no third component".into(),
                        ));
                    }
                }
            }
            FieldMode::Relaxed => {
                for (i, v) in self.xy.iter().enumerate() {
                    let z = self.z.as_ref().map_or(0.0, |z| z[i]);
                    let n2 = v[0] * v[0] + v[1] * v[1] + z * z;
                    if n2 > 1.0 + 1e-9 {
                        return Err(Error::Config(format!(
                            "relaxed field has |m| = {} > 1 at vertex {i}",
                            n2.sqrt()
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Constant in-plane field (c1, c2) on every vertex.
    pub fn constant(mesh: &Mesh, c: [f64; 2], mode: FieldMode) -> Result<Self> {
        VectorField::new(mode, vec![c; mesh.vertex_count()], None)
    }

    /// Build a unit field from per-vertex values of a map; values are
    /// renormalized to unit length.
    pub fn unit_from_fn<F>(mesh: &Mesh, mut f: F) -> Result<Self>
    where
        F: FnMut(usize) -> Result<[f64; 2]>,
    {
        let mut xy = Vec::with_capacity(mesh.vertex_count());
        for i in 0..mesh.vertex_count() {
            let v = f(i)?;
            let n = (v[0] * v[0] + v[1] * v[1]).sqrt();
            if n < 1e-14 {
                return Err(Error::Config(format!("vanishing value at vertex {i}")));
            }
            xy.push([v[0] / n, v[1] / n]);
        }
        VectorField::new(FieldMode::UnitCircle, xy, None)
    }

    pub fn len(&self) -> usize {
        self.xy.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xy.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Functional {
    /// E_{eps,eta}: Dirichlet + (1-|u|^2)^2/eta^2 + boundary penalty.
    EpsEta,
    /// Reduced thin-film energy: (Dirichlet + (1-|u|^2)/eta^2 + boundary
    /// penalty) / |log eps|, third component included in the Dirichlet
    /// term.
    BarH,
}

/// Penalty parameters: core size eps and relaxation length eta.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyParams {
    pub eps: f64,
    pub eta: f64,
}

impl EnergyParams {
    pub fn new(eps: f64, eta: f64) -> Result<Self> {
        if eps <= 0.0 || eta <= 0.0 {
            return Err(Error::Config("eps and eta must be positive".into()));
        }
        Ok(EnergyParams { eps, eta })
    }
}

impl From<RegimeParams> for EnergyParams {
    fn from(r: RegimeParams) -> Self {
        EnergyParams {
            eps: r.eps,
            eta: r.eta,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EnergyBreakdown {
    pub dirichlet: f64,
    pub bulk_penalty: f64,
    pub boundary_penalty: f64,
    pub total: f64,
    pub functional: Functional,
    pub params: EnergyParams,
}

/// Assemble the energy of a P1 field.
///
/// Dirichlet by exact per-triangle integration, bulk by vertex-lumped
/// quadrature, boundary penalty by the trapezoid rule on boundary edges
/// with the analytic normal at edge midpoints.
pub fn energy(
    mesh: &Mesh,
    field: &VectorField,
    params: EnergyParams,
    functional: Functional,
) -> Result<EnergyBreakdown> {
    if field.len() != mesh.vertex_count() {
        return Err(Error::Config("field/mesh size mismatch".into()));
    }
    if functional == Functional::BarH && params.eps >= 1.0 {
        return Err(Error::Config("BarH requires eps < 1".into()));
    }

    let mut dirichlet = 0.0;
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let g = &mesh.grads[t];
        let mut gx = [0.0; 2];
        let mut gy = [0.0; 2];
        let mut gz = [0.0; 2];
        for k in 0..3 {
            let v = field.xy[tri[k]];
            gx[0] += v[0] * g[k][0];
            gx[1] += v[0] * g[k][1];
            gy[0] += v[1] * g[k][0];
            gy[1] += v[1] * g[k][1];
            if functional == Functional::BarH {
                if let Some(z) = &field.z {
                    gz[0] += z[tri[k]] * g[k][0];
                    gz[1] += z[tri[k]] * g[k][1];
                }
            }
        }
        dirichlet += mesh.areas[t]
            * (gx[0] * gx[0] + gx[1] * gx[1] + gy[0] * gy[0] + gy[1] * gy[1] + gz[0] * gz[0]
                + gz[1] * gz[1]);
    }

    let eta2 = params.eta * params.eta;
    let mut bulk = 0.0;
    for (i, v) in field.xy.iter().enumerate() {
        let defect = 1.0 - (v[0] * v[0] + v[1] * v[1]);
        match functional {
            Functional::EpsEta => bulk += mesh.masses[i] * defect * defect,
            Functional::BarH => {
                if defect < -1e-9 {
                    return Err(Error::InfiniteEnergy(format!(
                        "|m| > 1 at vertex {i}: the reduced bulk term is +infinity"
                    )));
                }
                bulk += mesh.masses[i] * defect.max(0.0);
            }
        }
    }
    bulk /= eta2;

    let mut boundary = 0.0;
    for e in &mesh.boundary_edges {
        let (va, vb) = (
            mesh.boundary_loop[e.a],
            mesh.boundary_loop[e.b],
        );
        let da = field.xy[va][0] * e.normal[0] + field.xy[va][1] * e.normal[1];
        let db = field.xy[vb][0] * e.normal[0] + field.xy[vb][1] * e.normal[1];
        boundary += 0.5 * e.len * (da * da + db * db);
    }
    boundary /= 2.0 * PI * params.eps;

    let scale = match functional {
        Functional::EpsEta => 1.0,
        Functional::BarH => 1.0 / params.eps.ln().abs(),
    };
    let (dirichlet, bulk, boundary) = (dirichlet * scale, bulk * scale, boundary * scale);
    Ok(EnergyBreakdown {
        dirichlet,
        bulk_penalty: bulk,
        boundary_penalty: boundary,
        total: dirichlet + bulk + boundary,
        functional,
        params,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JacobianKind {
    Global,
    Interior,
    Boundary,
}

/// <J(u), zeta>, <jac(u), zeta> or <J - 2 jac, zeta> for a P1 test
/// function zeta, by exact quadrature (3-point edge-midpoint rule).
pub fn jacobian(mesh: &Mesh, field: &VectorField, zeta: &[f64], kind: JacobianKind) -> Result<f64> {
    if field.len() != mesh.vertex_count() || zeta.len() != mesh.vertex_count() {
        return Err(Error::Config("field/zeta/mesh size mismatch".into()));
    }
    match kind {
        JacobianKind::Global => Ok(jacobian_global(mesh, field, zeta)),
        JacobianKind::Interior => Ok(jacobian_interior(mesh, field, zeta)),
        JacobianKind::Boundary => Ok(jacobian_global(mesh, field, zeta)
            - 2.0 * jacobian_interior(mesh, field, zeta)),
    }
}

fn jacobian_global(mesh: &Mesh, field: &VectorField, zeta: &[f64]) -> f64 {
    let mut total = 0.0;
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let g = &mesh.grads[t];
        let mut du = [[0.0; 2]; 2]; // du[c] = grad u_c
        let mut dz = [0.0; 2];
        for k in 0..3 {
            let v = field.xy[tri[k]];
            for c in 0..2 {
                du[c][0] += v[c] * g[k][0];
                du[c][1] += v[c] * g[k][1];
            }
            dz[0] += zeta[tri[k]] * g[k][0];
            dz[1] += zeta[tri[k]] * g[k][1];
        }
        let dperp = [-dz[1], dz[0]];
        // u x grad u = u_1 grad u_2 - u_2 grad u_1, affine on the triangle;
        // edge-midpoint rule integrates it exactly
        let mut s = 0.0;
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            let um = [
                0.5 * (field.xy[a][0] + field.xy[b][0]),
                0.5 * (field.xy[a][1] + field.xy[b][1]),
            ];
            let cross = [
                um[0] * du[1][0] - um[1] * du[0][0],
                um[0] * du[1][1] - um[1] * du[0][1],
            ];
            s += cross[0] * dperp[0] + cross[1] * dperp[1];
        }
        total -= mesh.areas[t] * s / 3.0;
    }
    total
}

fn jacobian_interior(mesh: &Mesh, field: &VectorField, zeta: &[f64]) -> f64 {
    let mut total = 0.0;
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let g = &mesh.grads[t];
        let mut du = [[0.0; 2]; 2];
        let mut zbar = 0.0;
        for k in 0..3 {
            let v = field.xy[tri[k]];
            for c in 0..2 {
                du[c][0] += v[c] * g[k][0];
                du[c][1] += v[c] * g[k][1];
            }
            zbar += zeta[tri[k]] / 3.0;
        }
        let jac = du[0][0] * du[1][1] - du[0][1] * du[1][0];
        total += mesh.areas[t] * jac * zbar;
    }
    total
}

/// Boundary-measure form -int (u x d_tau u) zeta dH^1 over the boundary
/// loop, exact for the piecewise quadratic integrand.
pub fn jacobian_boundary_form(mesh: &Mesh, field: &VectorField, zeta: &[f64]) -> Result<f64> {
    if field.len() != mesh.vertex_count() || zeta.len() != mesh.vertex_count() {
        return Err(Error::Config("field/zeta/mesh size mismatch".into()));
    }
    let nb = mesh.boundary_loop.len();
    let mut total = 0.0;
    for k in 0..nb {
        let a = mesh.boundary_loop[k];
        let b = mesh.boundary_loop[(k + 1) % nb];
        let (ua, ub) = (field.xy[a], field.xy[b]);
        let (za, zb) = (zeta[a], zeta[b]);
        // straight-edge chord parameterization: u affine, d_tau u constant,
        // int_0^1 (u x u') zeta dt with 2-point Gauss (exact to cubic)
        let du = [ub[0] - ua[0], ub[1] - ua[1]];
        let g = 0.5 / 3.0f64.sqrt();
        for t in [0.5 - g, 0.5 + g] {
            let u = [ua[0] + t * du[0], ua[1] + t * du[1]];
            let z = za + t * (zb - za);
            let cross = u[0] * du[1] - u[1] * du[0];
            total -= 0.5 * cross * z;
        }
    }
    Ok(total)
}

/// The regular part (-kappa) and atomic part of the boundary measure
/// recovered from a discrete field.
#[derive(Debug, Clone)]
pub struct JacobianMeasure {
    /// (arclength, -kappa) sampled at the boundary vertices.
    pub regular_density: Vec<(f64, f64)>,
    /// Detected atoms (arclength position, weight ~ pi * integer).
    pub atoms: Vec<(f64, f64)>,
}

impl JacobianMeasure {
    pub fn total_atom_weight(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }
}

/// Detect boundary vortices of a discrete field by unwrapping the
/// boundary phase, subtracting the tangent turning and clustering windows
/// with net phase drop above pi/2. Atom weights are rounded to pi * Z.
pub fn detect_boundary_vortices(
    domain: &ConformalDomain,
    mesh: &Mesh,
    field: &VectorField,
    window: f64,
) -> Result<JacobianMeasure> {
    if field.len() != mesh.vertex_count() {
        return Err(Error::Config("field/mesh size mismatch".into()));
    }
    let nb = mesh.boundary_loop.len();
    let max_edge = mesh.max_boundary_edge();
    if window < 3.0 * max_edge {
        return Err(Error::Config(format!(
            "window {window} below three boundary edge lengths {}",
            3.0 * max_edge
        )));
    }

    // boundary phases with trace-size guard
    let mut phases = Vec::with_capacity(nb);
    for (k, &v) in mesh.boundary_loop.iter().enumerate() {
        let u = field.xy[v];
        let n = (u[0] * u[0] + u[1] * u[1]).sqrt();
        if n < 0.5 {
            return Err(Error::NearVanishingTrace(format!(
                "|u| = {n} at boundary vertex {k}"
            )));
        }
        phases.push(u[1].atan2(u[0]));
    }

    // residual r_k = unwrapped phase minus tangent turning
    let mut residual = vec![0.0; nb + 1];
    for k in 0..nb {
        let thet0 = mesh.boundary_theta[k];
        let thet1 = if k + 1 < nb {
            mesh.boundary_theta[k + 1]
        } else {
            mesh.boundary_theta[0] + 2.0 * PI
        };
        let dphase = principal(phases[(k + 1) % nb] - phases[k]);
        let dturn = domain.turning(thet1) - domain.turning(thet0);
        residual[k + 1] = residual[k] + dphase - dturn;
    }

    // arclength coordinates, duplicated for wraparound windows
    let total_len = mesh.perimeter;
    let arc = |k: usize| -> f64 {
        if k < nb {
            mesh.boundary_arclength[k]
        } else {
            mesh.boundary_arclength[k - nb] + total_len
        }
    };
    let res = |k: usize| -> f64 {
        if k <= nb {
            residual[k]
        } else {
            residual[k - nb] + residual[nb]
        }
    };

    // start the scan at the flattest window
    let window_end = |start: usize| -> usize {
        let mut e = start;
        while arc(e) < arc(start) + window {
            e += 1;
        }
        e
    };
    let mut start = 0;
    let mut flattest = f64::INFINITY;
    for k in 0..nb {
        let e = window_end(k);
        let drop = (res(e) - res(k)).abs();
        if drop < flattest {
            flattest = drop;
            start = k;
        }
    }

    // flag windows with |net change| > pi/2, cluster overlapping flags
    let mut clusters: Vec<(usize, usize)> = Vec::new();
    for k in start..start + nb {
        let e = window_end(k);
        if (res(e) - res(k)).abs() > 0.5 * PI {
            match clusters.last_mut() {
                Some(c) if k <= c.1 + 1 => c.1 = k,
                _ => clusters.push((k, k)),
            }
        }
    }

    if clusters.is_empty() {
        return Err(Error::DetectionFailure(
            "no phase transitions found, but every admissible trace carries total charge 2 pi"
                .into(),
        ));
    }

    // steepest per-edge residual change locates each atom
    let centers: Vec<usize> = clusters
        .iter()
        .map(|&(lo, hi)| {
            let hi_end = window_end(hi);
            let mut best = (lo, 0.0);
            for k in lo..hi_end {
                let step = (res(k + 1) - res(k)).abs();
                if step > best.1 {
                    best = (k, step);
                }
            }
            best.0
        })
        .collect();

    // weights measured plateau-to-plateau: midpoints between neighboring
    // clusters bound each atom's span, so the slowly decaying transition
    // tails cancel between neighbors and the weights sum to 2 pi exactly
    let res_i = |k: i64| -> f64 {
        let q = k.div_euclid(nb as i64);
        let r = k.rem_euclid(nb as i64) as usize;
        residual[r] + q as f64 * residual[nb]
    };
    let nc = centers.len();
    // circular span boundaries: b[k] separates cluster k from cluster k+1
    let bounds: Vec<i64> = (0..nc)
        .map(|k| {
            if k + 1 < nc {
                (centers[k] + centers[k + 1]) as i64 / 2
            } else {
                (centers[nc - 1] + centers[0] + nb) as i64 / 2
            }
        })
        .collect();
    let mut atoms = Vec::new();
    for k in 0..nc {
        let left_mid = if k == 0 {
            bounds[nc - 1] - nb as i64
        } else {
            bounds[k - 1]
        };
        let right_mid = bounds[k];
        let raw = -(res_i(right_mid) - res_i(left_mid));
        let rounded = PI * (raw / PI).round();
        if (raw - rounded).abs() > 0.25 * PI {
            return Err(Error::DetectionFailure(format!(
                "cluster weight {raw:.4} is {:.4} away from pi Z",
                (raw - rounded).abs()
            )));
        }
        if rounded == 0.0 {
            continue;
        }
        let pos = 0.5 * (arc(centers[k]) + arc(centers[k] + 1)) % total_len;
        atoms.push((pos, rounded));
    }
    atoms.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    let total_weight: f64 = atoms.iter().map(|a| a.1).sum();
    if (total_weight - 2.0 * PI).abs() > 0.25 * PI {
        return Err(Error::DetectionFailure(format!(
            "atom weights sum to {total_weight:.4}, expected 2 pi"
        )));
    }

    let regular_density = (0..nb)
        .map(|k| {
            let f = domain.boundary_frame(mesh.boundary_theta[k]);
            (mesh.boundary_arclength[k], -f.curvature)
        })
        .collect();

    Ok(JacobianMeasure {
        regular_density,
        atoms,
    })
}

/// Riesz representative of the energy differential with respect to the
/// lumped-mass inner product; tangentially projected in unit-circle mode.
pub fn l2_gradient(
    mesh: &Mesh,
    field: &VectorField,
    params: EnergyParams,
    functional: Functional,
) -> Result<Vec<[f64; 2]>> {
    if field.len() != mesh.vertex_count() {
        return Err(Error::Config("field/mesh size mismatch".into()));
    }
    let mut grad = vec![[0.0; 2]; mesh.vertex_count()];

    // Dirichlet: dE/du_i = 2 sum_T A_T grad(u) . grad(lambda_i)
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let g = &mesh.grads[t];
        let mut du = [[0.0; 2]; 2];
        for k in 0..3 {
            let v = field.xy[tri[k]];
            for c in 0..2 {
                du[c][0] += v[c] * g[k][0];
                du[c][1] += v[c] * g[k][1];
            }
        }
        for k in 0..3 {
            for c in 0..2 {
                grad[tri[k]][c] +=
                    2.0 * mesh.areas[t] * (du[c][0] * g[k][0] + du[c][1] * g[k][1]);
            }
        }
    }

    // bulk: lumped, pointwise derivative
    let eta2 = params.eta * params.eta;
    for (i, v) in field.xy.iter().enumerate() {
        let defect = 1.0 - (v[0] * v[0] + v[1] * v[1]);
        let factor = match functional {
            Functional::EpsEta => -4.0 * mesh.masses[i] * defect / eta2,
            Functional::BarH => {
                if defect > 0.0 {
                    -2.0 * mesh.masses[i] / eta2
                } else {
                    0.0
                }
            }
        };
        grad[i][0] += factor * v[0];
        grad[i][1] += factor * v[1];
    }

    // boundary penalty
    let bscale = 1.0 / (2.0 * PI * params.eps);
    for e in &mesh.boundary_edges {
        for v in [mesh.boundary_loop[e.a], mesh.boundary_loop[e.b]] {
            let d = field.xy[v][0] * e.normal[0] + field.xy[v][1] * e.normal[1];
            grad[v][0] += bscale * e.len * d * e.normal[0];
            grad[v][1] += bscale * e.len * d * e.normal[1];
        }
    }

    let scale = match functional {
        Functional::EpsEta => 1.0,
        Functional::BarH => 1.0 / params.eps.ln().abs(),
    };
    for (i, g) in grad.iter_mut().enumerate() {
        g[0] *= scale / mesh.masses[i];
        g[1] *= scale / mesh.masses[i];
        if field.mode == FieldMode::UnitCircle {
            let u = field.xy[i];
            let dot = g[0] * u[0] + g[1] * u[1];
            g[0] -= dot * u[0];
            g[1] -= dot * u[1];
        }
    }
    Ok(grad)
}

fn principal(a: f64) -> f64 {
    let mut a = a % (2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    }
    if a < -PI {
        a += 2.0 * PI;
    }
    a
}

/// Sample a canonical map at the mesh vertices (unit-circle mode).
///
/// Boundary vertices are sampled two boundary-edge widths inside the
/// circle: the singular trace rotates arbitrarily fast across a vortex,
/// and vertex samples can only carry the winding if the transition is
/// spread over a mesh-resolvable scale.
pub fn canonical_field(mesh: &Mesh, map: &crate::canonical::CanonicalMap) -> Result<VectorField> {
    let nudge = 2.0 * 2.0 * PI / mesh.boundary_loop.len() as f64;
    VectorField::unit_from_fn(mesh, |i| {
        let z = mesh.preimage[i];
        let z = if z.norm() > 1.0 - 1e-12 {
            z * (1.0 - nudge)
        } else {
            z
        };
        let v = map.eval_at_preimage(z)?;
        Ok([v.re, v.im])
    })
}

/// Lumped-mass L2 norm of a per-vertex vector function.
pub fn lumped_norm(mesh: &Mesh, values: &[[f64; 2]]) -> f64 {
    values
        .iter()
        .zip(&mesh.masses)
        .map(|(v, m)| m * (v[0] * v[0] + v[1] * v[1]))
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canonical::{BoundaryVortexConfig, CanonicalMap};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};

    fn disk_mesh() -> (ConformalDomain, Mesh) {
        let d = ConformalDomain::unit_disk();
        let m = Mesh::build(&d, 0.08, 0.03).unwrap();
        (d, m)
    }

    #[test]
    fn constant_field_energy_parts() {
        let (_, mesh) = disk_mesh();
        let u = VectorField::constant(&mesh, [1.0, 0.0], FieldMode::UnitCircle).unwrap();
        let e = energy(&mesh, &u, EnergyParams::new(0.1, 0.5).unwrap(), Functional::EpsEta)
            .unwrap();
        assert_abs_diff_eq!(e.dirichlet, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e.bulk_penalty, 0.0, epsilon = 1e-14);
        // (1/(2 pi eps)) int cos^2 theta dH^1 = pi/(2 pi eps) = 5.0
        assert_abs_diff_eq!(e.boundary_penalty, 5.0, epsilon = 5e-3);
        assert_abs_diff_eq!(e.total, e.dirichlet + e.bulk_penalty + e.boundary_penalty, epsilon = 1e-14);
    }

    #[test]
    fn s1_mode_bulk_is_zero_and_bar_h_relation() {
        let (d, mesh) = disk_mesh();
        let cfg = BoundaryVortexConfig::antipodal_pair(0.4);
        let map = CanonicalMap::with_default_base(d, cfg);
        let u = canonical_field(&mesh, &map).unwrap();
        let p = EnergyParams::new(0.1, 0.3).unwrap();
        let e1 = energy(&mesh, &u, p, Functional::EpsEta).unwrap();
        assert_abs_diff_eq!(e1.bulk_penalty, 0.0, epsilon = 1e-12);
        // exact scaling between the two functionals on S1 fields
        let e2 = energy(&mesh, &u, p, Functional::BarH).unwrap();
        assert_abs_diff_eq!(
            e2.total * p.eps.ln().abs(),
            e1.total,
            epsilon = 1e-12 * e1.total.abs()
        );
    }

    #[test]
    fn relaxed_infinite_energy_signal() {
        let (_, mesh) = disk_mesh();
        let mut xy = vec![[0.0, 0.0]; mesh.vertex_count()];
        xy[7] = [1.0, 0.0];
        let z = vec![0.0; mesh.vertex_count()];
        let mut field = VectorField::new(FieldMode::Relaxed, xy, Some(z)).unwrap();
        // sneak an out-of-ball value past the constructor to exercise the
        // energy-side check
        field.xy[7] = [1.2, 0.0];
        let res = energy(
            &mesh,
            &field,
            EnergyParams::new(0.1, 0.5).unwrap(),
            Functional::BarH,
        );
        assert!(matches!(res, Err(Error::InfiniteEnergy(_))));
    }

    #[test]
    fn jacobian_constant_field_vanishes() {
        let (_, mesh) = disk_mesh();
        let u = VectorField::constant(&mesh, [0.6, 0.8], FieldMode::UnitCircle).unwrap();
        let zeta: Vec<f64> = mesh.vertices.iter().map(|p| p[0] * p[1] + 0.3).collect();
        for kind in [JacobianKind::Global, JacobianKind::Interior, JacobianKind::Boundary] {
            assert_abs_diff_eq!(
                jacobian(&mesh, &u, &zeta, kind).unwrap(),
                0.0,
                epsilon = 1e-13
            );
        }
    }

    #[test]
    fn jacobian_identity_u_equals_x() {
        // u(x) = x has jac = 1; with zeta = 0 on the boundary,
        // <J, zeta> = 2 int zeta dx exactly
        let (_, mesh) = disk_mesh();
        let u = VectorField::new(
            FieldMode::Relaxed,
            mesh.vertices.iter().map(|p| [p[0], p[1]]).collect(),
            None,
        )
        .unwrap();
        let mut zeta: Vec<f64> = mesh
            .vertices
            .iter()
            .map(|p| (1.0 - p[0] * p[0] - p[1] * p[1]).max(0.0))
            .collect();
        for &v in &mesh.boundary_loop {
            zeta[v] = 0.0;
        }
        let global = jacobian(&mesh, &u, &zeta, JacobianKind::Global).unwrap();
        let interior = jacobian(&mesh, &u, &zeta, JacobianKind::Interior).unwrap();
        assert_abs_diff_eq!(global, 2.0 * interior, epsilon = 1e-12);
        // jac = 1 exactly: interior = int zeta
        let int_zeta: f64 = mesh
            .triangles
            .iter()
            .zip(&mesh.areas)
            .map(|(t, a)| a * (zeta[t[0]] + zeta[t[1]] + zeta[t[2]]) / 3.0)
            .sum();
        assert_abs_diff_eq!(interior, int_zeta, epsilon = 1e-12);
    }

    #[test]
    fn jacobian_identity_u_equals_iz() {
        // u(z) = iz: boundary form with zeta = 1 equals the assembled
        // <J - 2 jac, 1> to machine precision
        let (_, mesh) = disk_mesh();
        let u = VectorField::new(
            FieldMode::Relaxed,
            mesh.vertices.iter().map(|p| [-p[1], p[0]]).collect(),
            None,
        )
        .unwrap();
        let ones = vec![1.0; mesh.vertex_count()];
        let bd = jacobian(&mesh, &u, &ones, JacobianKind::Boundary).unwrap();
        let direct = jacobian_boundary_form(&mesh, &u, &ones).unwrap();
        assert_abs_diff_eq!(bd, direct, epsilon = 1e-11);
        // continuum value -2 pi at mesh accuracy
        assert_abs_diff_eq!(bd, -2.0 * PI, epsilon = 2e-3);
        // <J, 1> = 0 exactly
        assert_abs_diff_eq!(
            jacobian(&mesh, &u, &ones, JacobianKind::Global).unwrap(),
            0.0,
            epsilon = 1e-13
        );
    }

    #[test]
    fn jacobian_linear_in_zeta() {
        let (d, mesh) = disk_mesh();
        let cfg = BoundaryVortexConfig::antipodal_pair(0.4);
        let map = CanonicalMap::with_default_base(d, cfg);
        let u = canonical_field(&mesh, &map).unwrap();
        let zeta: Vec<f64> = mesh.vertices.iter().map(|p| p[0] - 2.0 * p[1]).collect();
        let scaled: Vec<f64> = zeta.iter().map(|z| 3.5 * z).collect();
        let a = jacobian(&mesh, &u, &zeta, JacobianKind::Global).unwrap();
        let b = jacobian(&mesh, &u, &scaled, JacobianKind::Global).unwrap();
        assert_abs_diff_eq!(b, 3.5 * a, epsilon = 1e-12 * (1.0 + a.abs()));
    }

    #[test]
    fn jacobian_global_identity_random_fields() {
        let (_, mesh) = disk_mesh();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        for _ in 0..5 {
            let xy: Vec<[f64; 2]> = (0..mesh.vertex_count())
                .map(|_| {
                    let a: f64 = rng.gen::<f64>() * 2.0 * PI;
                    [a.cos(), a.sin()]
                })
                .collect();
            let u = VectorField::new(FieldMode::UnitCircle, xy, None).unwrap();
            let ones = vec![1.0; mesh.vertex_count()];
            assert_abs_diff_eq!(
                jacobian(&mesh, &u, &ones, JacobianKind::Global).unwrap(),
                0.0,
                epsilon = 1e-10
            );
            let mut zeta: Vec<f64> = (0..mesh.vertex_count()).map(|_| rng.gen::<f64>()).collect();
            for &v in &mesh.boundary_loop {
                zeta[v] = 0.0;
            }
            let g = jacobian(&mesh, &u, &zeta, JacobianKind::Global).unwrap();
            let i = jacobian(&mesh, &u, &zeta, JacobianKind::Interior).unwrap();
            assert_abs_diff_eq!(g, 2.0 * i, epsilon = 1e-10);
        }
    }

    #[test]
    fn detect_vortices_on_canonical_map() {
        let d = ConformalDomain::unit_disk();
        let mesh = Mesh::build(&d, 0.08, 0.02).unwrap();
        let t1 = 0.713;
        let cfg = BoundaryVortexConfig::new(vec![t1, t1 + PI], vec![1, 1]).unwrap();
        let map = CanonicalMap::with_default_base(d.clone(), cfg);
        let u = canonical_field(&mesh, &map).unwrap();
        let j = detect_boundary_vortices(&d, &mesh, &u, 0.12).unwrap();
        assert_eq!(j.atoms.len(), 2);
        assert_abs_diff_eq!(j.total_atom_weight(), 2.0 * PI, epsilon = 1e-12);
        for (pos, w) in &j.atoms {
            assert_abs_diff_eq!(*w, PI, epsilon = 1e-12);
            // on the disk arclength = angle
            let near1 = crate::canonical::angular_distance(*pos, t1);
            let near2 = crate::canonical::angular_distance(*pos, t1 + PI);
            assert!(near1.min(near2) < 0.12, "atom at {pos} too far");
        }
        // phase-shift invariance: rotating every vector leaves atoms put
        let rot = 1.1f64;
        let xy: Vec<[f64; 2]> = u
            .xy
            .iter()
            .map(|v| {
                [
                    v[0] * rot.cos() - v[1] * rot.sin(),
                    v[0] * rot.sin() + v[1] * rot.cos(),
                ]
            })
            .collect();
        let u2 = VectorField::new(FieldMode::UnitCircle, xy, None).unwrap();
        let j2 = detect_boundary_vortices(&d, &mesh, &u2, 0.12).unwrap();
        assert_eq!(j2.atoms.len(), 2);
        for (a, b) in j.atoms.iter().zip(&j2.atoms) {
            assert_abs_diff_eq!(a.0, b.0, epsilon = 1e-12);
            assert_abs_diff_eq!(a.1, b.1, epsilon = 1e-12);
        }
    }

    #[test]
    fn detect_single_double_vortex() {
        let d = ConformalDomain::unit_disk();
        let mesh = Mesh::build(&d, 0.08, 0.02).unwrap();
        let cfg = BoundaryVortexConfig::new(vec![2.45], vec![2]).unwrap();
        let map = CanonicalMap::with_default_base(d.clone(), cfg);
        let u = canonical_field(&mesh, &map).unwrap();
        let j = detect_boundary_vortices(&d, &mesh, &u, 0.12).unwrap();
        assert_eq!(j.atoms.len(), 1);
        assert_abs_diff_eq!(j.atoms[0].1, 2.0 * PI, epsilon = 1e-12);
        assert!(crate::canonical::angular_distance(j.atoms[0].0, 2.45) < 0.12);
    }

    #[test]
    fn detect_rejects_small_trace() {
        let (d, mesh) = disk_mesh();
        let mut xy = vec![[1.0, 0.0]; mesh.vertex_count()];
        xy[mesh.boundary_loop[3]] = [0.1, 0.0];
        let u = VectorField::new(FieldMode::Relaxed, xy, None).unwrap();
        assert!(matches!(
            detect_boundary_vortices(&d, &mesh, &u, 0.2),
            Err(Error::NearVanishingTrace(_))
        ));
    }

    #[test]
    fn gradient_matches_directional_derivative() {
        let (d, mesh) = disk_mesh();
        let cfg = BoundaryVortexConfig::antipodal_pair(0.3);
        let map = CanonicalMap::with_default_base(d, cfg);
        let u = canonical_field(&mesh, &map).unwrap();
        let p = EnergyParams::new(0.15, 0.4).unwrap();
        // relaxed copy so the perturbation need not stay on S1
        let ur = VectorField::new(FieldMode::Relaxed, u.xy.clone(), None).unwrap();
        let g = l2_gradient(&mesh, &ur, p, Functional::EpsEta).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let dir: Vec<[f64; 2]> = (0..mesh.vertex_count())
            .map(|_| [rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5])
            .collect();
        let e0 = energy(&mesh, &ur, p, Functional::EpsEta).unwrap().total;
        // <grad, dir> in the lumped inner product
        let pairing: f64 = g
            .iter()
            .zip(&dir)
            .zip(&mesh.masses)
            .map(|((g, d), m)| m * (g[0] * d[0] + g[1] * d[1]))
            .sum();
        let mut errs = Vec::new();
        for t in [1e-4, 1e-5] {
            let xy: Vec<[f64; 2]> = ur
                .xy
                .iter()
                .zip(&dir)
                .map(|(u, d)| [u[0] + t * d[0], u[1] + t * d[1]])
                .collect();
            let ut = VectorField { mode: FieldMode::Relaxed, xy, z: None };
            let et = energy(&mesh, &ut, p, Functional::EpsEta).unwrap().total;
            errs.push(((et - e0) / t - pairing).abs());
        }
        // first-order error shrinks linearly in t (down to FD rounding)
        assert!(errs[1] < 0.2 * errs[0] + 1e-7 * (1.0 + e0.abs()), "{errs:?}");
    }

    #[test]
    fn s1_gradient_is_tangent() {
        let (d, mesh) = disk_mesh();
        let cfg = BoundaryVortexConfig::antipodal_pair(1.0);
        let map = CanonicalMap::with_default_base(d, cfg);
        let u = canonical_field(&mesh, &map).unwrap();
        let g = l2_gradient(&mesh, &u, EnergyParams::new(0.1, 0.4).unwrap(), Functional::EpsEta)
            .unwrap();
        for (gi, ui) in g.iter().zip(&u.xy) {
            let gn = (gi[0] * gi[0] + gi[1] * gi[1]).sqrt();
            assert_abs_diff_eq!(
                gi[0] * ui[0] + gi[1] * ui[1],
                0.0,
                epsilon = 1e-13 * (1.0 + gn)
            );
        }
    }

    #[test]
    fn constant_field_interior_gradient_zero() {
        let (_, mesh) = disk_mesh();
        let u = VectorField::constant(&mesh, [0.0, 1.0], FieldMode::Relaxed).unwrap();
        // eta huge so the bulk term is negligible; no boundary activity at
        // interior vertices
        let g = l2_gradient(&mesh, &u, EnergyParams::new(0.1, 1e9).unwrap(), Functional::EpsEta)
            .unwrap();
        let boundary: std::collections::HashSet<usize> =
            mesh.boundary_loop.iter().copied().collect();
        for i in 0..mesh.vertex_count() {
            if !boundary.contains(&i) {
                assert_abs_diff_eq!(g[i][0], 0.0, epsilon = 1e-9);
                assert_abs_diff_eq!(g[i][1], 0.0, epsilon = 1e-9);
            }
        }
    }
}
