//! Energy minimization with continuation in the core size and extraction
//! of the two-term energy expansion
//!
//!   E_min(eps) ~ pi N |log eps| + W + N gamma0.
//!
//! Descent is gradient-based with Barzilai-Borwein steps safeguarded by
//! monotone Armijo backtracking; in unit-circle mode every accepted step
//! renormalizes the vertices.

use crate::error::{Error, Result};
use crate::fields::{energy, l2_gradient, lumped_norm, EnergyBreakdown, EnergyParams, FieldMode, Functional, VectorField};
use crate::geometry::Mesh;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MinimizeMode {
    /// Pointwise unit-length constraint, enforced by projection.
    ProjectedS1,
    /// Unconstrained descent with the (1-|u|^2)^2/eta^2 bulk penalty.
    RelaxedEta,
}

#[derive(Debug, Clone, Copy)]
pub struct MinimizeOptions {
    pub max_iters: usize,
    /// Termination threshold on the lumped L2 norm of the gradient.
    pub grad_tol: f64,
    pub step0: f64,
    /// Backtracking factor in (0, 1).
    pub backtrack: f64,
    /// Armijo slope fraction.
    pub armijo_c: f64,
    pub mode: MinimizeMode,
}

impl MinimizeOptions {
    /// Defaults with the gradient tolerance scaled by the boundary length,
    /// so the stopping rule is resolution-independent.
    pub fn for_mesh(mesh: &Mesh) -> Self {
        MinimizeOptions {
            max_iters: 200_000,
            grad_tol: 1e-6 * mesh.perimeter,
            step0: 1e-3,
            backtrack: 0.5,
            armijo_c: 1e-4,
            mode: MinimizeMode::ProjectedS1,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.grad_tol <= 0.0 && !self.grad_tol.is_infinite() {
            return Err(Error::Config("grad_tol must be positive".into()));
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return Err(Error::Config("backtracking factor must lie in (0,1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct MinimizeOutcome {
    pub field: VectorField,
    pub energy: EnergyBreakdown,
    pub iterations: usize,
    /// Line search failed 60 times in a row; `field` is the best iterate.
    pub stalled: bool,
}

/// Monotone descent on the (eps, eta) functional.
pub fn minimize_field(
    mesh: &Mesh,
    params: EnergyParams,
    init: &VectorField,
    opts: &MinimizeOptions,
) -> Result<MinimizeOutcome> {
    opts.validate()?;
    match opts.mode {
        MinimizeMode::ProjectedS1 => {
            if init.mode != FieldMode::UnitCircle {
                return Err(Error::Config("projected mode needs a unit-circle field".into()));
            }
        }
        MinimizeMode::RelaxedEta => {
            if init.mode != FieldMode::Relaxed {
                return Err(Error::Config("relaxed mode needs a relaxed field".into()));
            }
        }
    }
    let functional = Functional::EpsEta;
    let mut u = init.clone();
    let mut e = energy(mesh, &u, params, functional)?;
    let mut g = l2_gradient(mesh, &u, params, functional)?;
    let mut gn = lumped_norm(mesh, &g);
    let mut step = opts.step0;
    let mut prev: Option<(Vec<[f64; 2]>, Vec<[f64; 2]>)> = None;
    let mut iterations = 0;
    let mut recent: std::collections::VecDeque<f64> = std::collections::VecDeque::new();

    while gn > opts.grad_tol && iterations < opts.max_iters {
        // Barzilai-Borwein step from the previous displacement
        if let Some((du, dg)) = &prev {
            let mut num = 0.0;
            let mut den = 0.0;
            for ((du, dg), m) in du.iter().zip(dg).zip(&mesh.masses) {
                num += m * (du[0] * du[0] + du[1] * du[1]);
                den += m * (du[0] * dg[0] + du[1] * dg[1]);
            }
            if den > 0.0 && num > 0.0 {
                step = (num / den).clamp(1e-12, 1e4);
            }
        }

        let mut accepted = false;
        let mut halvings = 0;
        while halvings <= 60 {
            let trial = step_field(&u, &g, step, opts.mode);
            match energy(mesh, &trial, params, functional) {
                Ok(et) if et.total <= e.total - opts.armijo_c * step * gn * gn => {
                    let gt = l2_gradient(mesh, &trial, params, functional)?;
                    let du: Vec<[f64; 2]> = trial
                        .xy
                        .iter()
                        .zip(&u.xy)
                        .map(|(a, b)| [a[0] - b[0], a[1] - b[1]])
                        .collect();
                    let dg: Vec<[f64; 2]> = gt
                        .iter()
                        .zip(&g)
                        .map(|(a, b)| [a[0] - b[0], a[1] - b[1]])
                        .collect();
                    prev = Some((du, dg));
                    debug_assert!(et.total <= e.total);
                    u = trial;
                    e = et;
                    g = gt;
                    gn = lumped_norm(mesh, &g);
                    accepted = true;
                    break;
                }
                _ => {
                    step *= opts.backtrack;
                    halvings += 1;
                }
            }
        }
        iterations += 1;
        if !accepted {
            // distinguish a genuine line-search failure from exhaustion at
            // the floating-point resolution of the energy: if the recent
            // per-iteration progress was already below rounding, the
            // iterate is converged as far as f64 can tell
            let floor = 8.0 * f64::EPSILON * (1.0 + e.total.abs());
            let recent_progress = recent
                .front()
                .map(|&e50| e50 - e.total)
                .unwrap_or(f64::INFINITY);
            let stalled = recent_progress > recent.len() as f64 * floor;
            return Ok(MinimizeOutcome {
                field: u,
                energy: e,
                iterations,
                stalled,
            });
        }
        recent.push_back(e.total);
        if recent.len() > 50 {
            recent.pop_front();
        }
    }

    Ok(MinimizeOutcome {
        field: u,
        energy: e,
        iterations,
        stalled: false,
    })
}

fn step_field(u: &VectorField, g: &[[f64; 2]], step: f64, mode: MinimizeMode) -> VectorField {
    let xy: Vec<[f64; 2]> = u
        .xy
        .iter()
        .zip(g)
        .map(|(u, g)| {
            let mut v = [u[0] - step * g[0], u[1] - step * g[1]];
            if mode == MinimizeMode::ProjectedS1 {
                let n = (v[0] * v[0] + v[1] * v[1]).sqrt().max(1e-300);
                v = [v[0] / n, v[1] / n];
            } else {
                // keep relaxed iterates inside the closed unit ball
                let n = (v[0] * v[0] + v[1] * v[1]).sqrt();
                if n > 1.0 {
                    v = [v[0] / n, v[1] / n];
                }
            }
            v
        })
        .collect();
    VectorField {
        mode: u.mode,
        xy,
        z: u.z.clone(),
    }
}

/// One continuation stage.
#[derive(Debug, Clone)]
pub struct Stage {
    pub eps: f64,
    pub outcome: MinimizeOutcome,
}

/// Warm-started minimization along a strictly decreasing eps schedule.
pub fn continuation<F>(
    mesh: &Mesh,
    eps_schedule: &[f64],
    mut params_fn: F,
    init: &VectorField,
    opts: &MinimizeOptions,
) -> Result<Vec<Stage>>
where
    F: FnMut(f64) -> EnergyParams,
{
    if eps_schedule.is_empty() {
        return Err(Error::Arity("empty schedule".into()));
    }
    for w in eps_schedule.windows(2) {
        if w[1] >= w[0] {
            return Err(Error::Config("schedule must be strictly decreasing".into()));
        }
    }
    let min_eps = *eps_schedule.last().unwrap();
    if mesh.max_boundary_edge() > 0.25 * min_eps * (1.0 + 1e-9) {
        return Err(Error::Mesh(format!(
            "boundary resolution {} exceeds min eps/4 = {}",
            mesh.max_boundary_edge(),
            0.25 * min_eps
        )));
    }
    let mut stages = Vec::with_capacity(eps_schedule.len());
    let mut current = init.clone();
    for &eps in eps_schedule {
        let params = params_fn(eps);
        let outcome = minimize_field(mesh, params, &current, opts)?;
        current = outcome.field.clone();
        stages.push(Stage { eps, outcome });
    }
    Ok(stages)
}

/// Least-squares fit of E(eps) = slope |log eps| + intercept.
#[derive(Debug, Clone)]
pub struct ExpansionFit {
    pub samples: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    /// slope / pi, the estimated vortex count.
    pub n_est: f64,
    /// Root-mean-square fit residual.
    pub residual: f64,
}

pub fn fit_expansion(trace: &[(f64, f64)]) -> Result<ExpansionFit> {
    if trace.len() < 3 {
        return Err(Error::Arity(format!(
            "expansion fit needs >= 3 samples, got {}",
            trace.len()
        )));
    }
    let n = trace.len() as f64;
    let xs: Vec<f64> = trace.iter().map(|p| p.0.ln().abs()).collect();
    let ys: Vec<f64> = trace.iter().map(|p| p.1).collect();
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    let residual = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(ExpansionFit {
        samples: trace.to_vec(),
        slope,
        intercept,
        n_est: slope / PI,
        residual,
    })
}

/// Unit field with independent uniformly random phases (seeded).
pub fn random_phase_field(mesh: &Mesh, seed: u64) -> VectorField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xy = (0..mesh.vertex_count())
        .map(|_| {
            let a = rng.gen::<f64>() * 2.0 * PI;
            [a.cos(), a.sin()]
        })
        .collect();
    VectorField {
        mode: FieldMode::UnitCircle,
        xy,
        z: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canonical::{angular_distance, BoundaryVortexConfig, CanonicalMap};
    use crate::fields::{canonical_field, detect_boundary_vortices};
    use crate::geometry::ConformalDomain;
    use approx::assert_abs_diff_eq;

    fn disk_setup(eps: f64) -> (ConformalDomain, Mesh) {
        let d = ConformalDomain::unit_disk();
        let m = Mesh::build(&d, 0.12, 0.25 * eps).unwrap();
        (d, m)
    }

    #[test]
    fn zero_step_invariance() {
        let (d, mesh) = disk_setup(0.2);
        let cfg = BoundaryVortexConfig::antipodal_pair(0.0);
        let u = canonical_field(&mesh, &CanonicalMap::with_default_base(d, cfg)).unwrap();
        let mut opts = MinimizeOptions::for_mesh(&mesh);
        opts.grad_tol = f64::INFINITY;
        let out = minimize_field(&mesh, EnergyParams::new(0.2, 1.0).unwrap(), &u, &opts).unwrap();
        assert_eq!(out.iterations, 0);
        assert!(!out.stalled);
        assert_eq!(out.field.xy, u.xy);
    }

    #[test]
    fn descent_from_canonical_converges_and_keeps_atoms() {
        let (d, mesh) = disk_setup(0.2);
        let cfg = BoundaryVortexConfig::antipodal_pair(0.7);
        let u0 = canonical_field(&mesh, &CanonicalMap::with_default_base(d.clone(), cfg)).unwrap();
        let params = EnergyParams::new(0.2, 1.0).unwrap();
        let e0 = energy(&mesh, &u0, params, Functional::EpsEta).unwrap().total;
        // discrete boundary-vortex pinning leaves a small projected-gradient
        // plateau; the tolerance reflects this resolution
        let mut opts = MinimizeOptions::for_mesh(&mesh);
        opts.grad_tol = 2e-4;
        let out = minimize_field(&mesh, params, &u0, &opts).unwrap();
        assert!(!out.stalled);
        assert!(out.energy.total < e0);
        let g = l2_gradient(&mesh, &out.field, params, Functional::EpsEta).unwrap();
        assert!(lumped_norm(&mesh, &g) <= opts.grad_tol);
        // unit length preserved through every projection
        for v in &out.field.xy {
            assert_abs_diff_eq!((v[0] * v[0] + v[1] * v[1]).sqrt(), 1.0, epsilon = 1e-12);
        }
        // atoms stay near the antipodal pair (within 5 degrees); the
        // detection window is sized to the fat transition cores at this eps
        let j = detect_boundary_vortices(&d, &mesh, &out.field, 1.5).unwrap();
        assert_eq!(j.atoms.len(), 2);
        for (pos, w) in &j.atoms {
            assert_abs_diff_eq!(*w, PI, epsilon = 1e-12);
            let dev = angular_distance(*pos, 0.7).min(angular_distance(*pos, 0.7 + PI));
            assert!(dev < 5.0f64.to_radians(), "atom drifted by {dev}");
        }
    }

    #[test]
    fn descent_from_constant_develops_two_vortices() {
        let (d, mesh) = disk_setup(0.15);
        let u0 = VectorField::constant(&mesh, [1.0, 0.0], FieldMode::UnitCircle).unwrap();
        let params = EnergyParams::new(0.15, 1.0).unwrap();
        let mut opts = MinimizeOptions::for_mesh(&mesh);
        opts.grad_tol = 2e-4;
        let out = minimize_field(&mesh, params, &u0, &opts).unwrap();
        let j = detect_boundary_vortices(&d, &mesh, &out.field, 1.5).unwrap();
        assert_abs_diff_eq!(j.total_atom_weight(), 2.0 * PI, epsilon = 1e-12);
        assert_eq!(j.atoms.len(), 2);
    }

    #[test]
    fn continuation_single_entry_equals_minimize() {
        let (d, mesh) = disk_setup(0.2);
        let cfg = BoundaryVortexConfig::antipodal_pair(0.0);
        let u0 = canonical_field(&mesh, &CanonicalMap::with_default_base(d, cfg)).unwrap();
        let opts = MinimizeOptions::for_mesh(&mesh);
        let stages = continuation(
            &mesh,
            &[0.2],
            |eps| EnergyParams::new(eps, 1.0).unwrap(),
            &u0,
            &opts,
        )
        .unwrap();
        let direct =
            minimize_field(&mesh, EnergyParams::new(0.2, 1.0).unwrap(), &u0, &opts).unwrap();
        assert_eq!(stages.len(), 1);
        assert_abs_diff_eq!(
            stages[0].outcome.energy.total,
            direct.energy.total,
            epsilon = 1e-13
        );
    }

    #[test]
    fn continuation_rejects_bad_inputs() {
        let (d, mesh) = disk_setup(0.2);
        let cfg = BoundaryVortexConfig::antipodal_pair(0.0);
        let u0 = canonical_field(&mesh, &CanonicalMap::with_default_base(d, cfg)).unwrap();
        let opts = MinimizeOptions::for_mesh(&mesh);
        let pf = |eps: f64| EnergyParams::new(eps, 1.0).unwrap();
        assert!(continuation(&mesh, &[0.1, 0.2], pf, &u0, &opts).is_err());
        // boundary resolution too coarse for a small final eps
        assert!(matches!(
            continuation(&mesh, &[0.2, 0.01], pf, &u0, &opts),
            Err(Error::Mesh(_))
        ));
    }

    #[test]
    fn fit_recovers_exact_linear_data() {
        let c = -13.974881234100343; // W(antipodal) + 2 gamma0
        let trace: Vec<(f64, f64)> = [0.2, 0.1, 0.05, 0.025]
            .iter()
            .map(|&e: &f64| (e, 2.0 * PI * e.ln().abs() + c))
            .collect();
        let fit = fit_expansion(&trace).unwrap();
        assert_abs_diff_eq!(fit.slope, 2.0 * PI, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.intercept, c, epsilon = 1e-11);
        assert_abs_diff_eq!(fit.n_est, 2.0, epsilon = 1e-12);
        assert!(fit.residual < 1e-12);
    }

    #[test]
    fn fit_single_double_vortex_first_order_slope() {
        // a single multiplicity-2 vortex carries first-order slope
        // pi sum |d_j| = 2 pi as well
        let trace: Vec<(f64, f64)> = [0.2, 0.1, 0.05, 0.02, 0.01]
            .iter()
            .map(|&e: &f64| (e, PI * 2.0 * e.ln().abs() + 3.3))
            .collect();
        let fit = fit_expansion(&trace).unwrap();
        assert_abs_diff_eq!(fit.slope, 2.0 * PI, epsilon = 1e-12);
    }

    #[test]
    fn fit_needs_three_samples() {
        assert!(matches!(
            fit_expansion(&[(0.1, 1.0), (0.05, 2.0)]),
            Err(Error::Arity(_))
        ));
    }
}
