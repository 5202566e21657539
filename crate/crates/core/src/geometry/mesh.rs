//! Conforming triangulations of the image domain, graded toward the
//! boundary, built from concentric preimage rings joined by an angular
//! merge ("zipper") strip triangulation and mapped through Phi.

use super::domain::ConformalDomain;
use crate::error::{Error, Result};
use crate::quad;
use num_complex::Complex64;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy)]
pub struct BoundaryEdge {
    /// Vertex index at the start (counterclockwise).
    pub a: usize,
    /// Vertex index at the end.
    pub b: usize,
    /// Physical arclength of the edge.
    pub len: f64,
    /// Analytic outer normal at the edge midpoint angle.
    pub normal: [f64; 2],
    /// Preimage angle of the edge midpoint.
    pub mid_theta: f64,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    /// Physical vertex coordinates.
    pub vertices: Vec<[f64; 2]>,
    /// Preimage coordinates (inside the closed unit disk).
    pub preimage: Vec<Complex64>,
    /// Positively oriented vertex index triples.
    pub triangles: Vec<[usize; 3]>,
    /// Boundary vertex indices, counterclockwise, starting ring.
    pub boundary_loop: Vec<usize>,
    /// Preimage angle of each boundary-loop vertex.
    pub boundary_theta: Vec<f64>,
    /// Cumulative physical arclength at each boundary-loop vertex.
    pub boundary_arclength: Vec<f64>,
    /// Boundary edges in loop order (edge k joins loop[k] to loop[k+1]).
    pub boundary_edges: Vec<BoundaryEdge>,
    /// Total physical perimeter.
    pub perimeter: f64,
    /// Physical triangle areas.
    pub areas: Vec<f64>,
    /// P1 shape-function gradients per triangle.
    pub grads: Vec<[[f64; 2]; 3]>,
    /// Lumped vertex masses (sum of adjacent areas / 3).
    pub masses: Vec<f64>,
    /// Per-triangle diameter (longest edge).
    pub diameters: Vec<f64>,
    /// Interior target edge length used to build the mesh.
    pub interior_h: f64,
    /// Boundary layer width used to build the mesh.
    pub boundary_layer: f64,
}

impl Mesh {
    /// Triangulate `domain` with interior edge length `interior_h`, grading
    /// the boundary so physical boundary edges are at most `boundary_layer`
    /// (`0.0` means no extra grading).
    pub fn build(domain: &ConformalDomain, interior_h: f64, boundary_layer: f64) -> Result<Self> {
        if interior_h <= 0.0 {
            return Err(Error::Config("interior_h must be positive".into()));
        }
        if boundary_layer < 0.0 {
            return Err(Error::Config("boundary_layer must be >= 0".into()));
        }
        let layer = if boundary_layer == 0.0 {
            interior_h
        } else {
            boundary_layer
        };
        let max_speed = (0..512)
            .map(|i| {
                domain
                    .dphi(Complex64::from_polar(1.0, 2.0 * PI * i as f64 / 512.0))
                    .norm()
            })
            .fold(0.0f64, f64::max);

        // preimage spacings that guarantee the physical targets
        let s_bd = layer / max_speed;
        let s_int = interior_h / max_speed;

        // ring radii, graded geometrically from the boundary inward
        let mut radii = vec![1.0f64];
        let mut spacing = Vec::new();
        let mut r = 1.0;
        let mut s = s_bd;
        loop {
            spacing.push(s);
            let next = r - s;
            if next <= 0.75 * s_int {
                break;
            }
            radii.push(next);
            r = next;
            s = (s * 1.5).min(s_int);
        }

        let n_rings = radii.len();
        let mut ring_counts = Vec::with_capacity(n_rings);
        let n0 = ((2.0 * PI / s_bd).ceil() as usize).max(16);
        ring_counts.push(n0);
        for j in 1..n_rings {
            let target = (2.0 * PI * radii[j] / spacing[j].max(spacing[j - 1])).ceil() as usize;
            let prev = ring_counts[j - 1];
            ring_counts.push(target.clamp((prev / 2).max(6), prev));
        }

        // vertices ring by ring
        let mut preimage: Vec<Complex64> = Vec::new();
        let mut ring_start = Vec::with_capacity(n_rings);
        for j in 0..n_rings {
            ring_start.push(preimage.len());
            let n = ring_counts[j];
            let off = if j % 2 == 1 { 0.5 } else { 0.0 };
            for i in 0..n {
                let t = 2.0 * PI * (i as f64 + off) / n as f64;
                preimage.push(Complex64::from_polar(radii[j], t));
            }
        }
        let center = preimage.len();
        preimage.push(Complex64::new(0.0, 0.0));

        let mut triangles: Vec<[usize; 3]> = Vec::new();
        for j in 0..n_rings - 1 {
            zip_rings(
                &mut triangles,
                ring_start[j],
                ring_counts[j],
                ring_start[j + 1],
                ring_counts[j + 1],
                &preimage,
            );
        }
        // innermost ring fans into the center vertex
        let j = n_rings - 1;
        let (start, n) = (ring_start[j], ring_counts[j]);
        for i in 0..n {
            triangles.push([center, start + i, start + (i + 1) % n]);
        }

        // positive orientation in the preimage (Phi preserves orientation)
        for t in triangles.iter_mut() {
            let a = preimage[t[0]];
            let b = preimage[t[1]];
            let c = preimage[t[2]];
            if ((b - a).conj() * (c - a)).im < 0.0 {
                t.swap(1, 2);
            }
        }

        let vertices: Vec<[f64; 2]> = preimage
            .iter()
            .map(|&z| {
                let w = domain.phi(z);
                [w.re, w.im]
            })
            .collect();

        let mut areas = Vec::with_capacity(triangles.len());
        let mut grads = Vec::with_capacity(triangles.len());
        let mut diameters = Vec::with_capacity(triangles.len());
        for t in &triangles {
            let p = [vertices[t[0]], vertices[t[1]], vertices[t[2]]];
            let two_a = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1])
                - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
            let area = 0.5 * two_a;
            if area < 1e-14 * interior_h * interior_h {
                return Err(Error::Mesh(format!(
                    "degenerate triangle with area {area:.3e}"
                )));
            }
            areas.push(area);
            let g = [
                [(p[1][1] - p[2][1]) / two_a, (p[2][0] - p[1][0]) / two_a],
                [(p[2][1] - p[0][1]) / two_a, (p[0][0] - p[2][0]) / two_a],
                [(p[0][1] - p[1][1]) / two_a, (p[1][0] - p[0][0]) / two_a],
            ];
            grads.push(g);
            let e = |i: usize, j: usize| {
                ((p[i][0] - p[j][0]).powi(2) + (p[i][1] - p[j][1]).powi(2)).sqrt()
            };
            diameters.push(e(0, 1).max(e(1, 2)).max(e(2, 0)));
        }

        let mut masses = vec![0.0; vertices.len()];
        for (t, &a) in triangles.iter().zip(&areas) {
            for &v in t {
                masses[v] += a / 3.0;
            }
        }

        // boundary loop = ring 0 in angle order
        let boundary_loop: Vec<usize> = (0..n0).collect();
        let boundary_theta: Vec<f64> = (0..n0).map(|i| 2.0 * PI * i as f64 / n0 as f64).collect();
        let mut boundary_arclength = Vec::with_capacity(n0);
        let mut boundary_edges = Vec::with_capacity(n0);
        let mut acc = 0.0;
        for k in 0..n0 {
            boundary_arclength.push(acc);
            let t0 = boundary_theta[k];
            let t1 = 2.0 * PI * (k + 1) as f64 / n0 as f64;
            let len = quad::gauss(t0, t1, 4, |t| {
                domain.dphi(Complex64::from_polar(1.0, t)).norm()
            });
            let mid = 0.5 * (t0 + t1);
            let frame = domain.boundary_frame(mid);
            boundary_edges.push(BoundaryEdge {
                a: k,
                b: (k + 1) % n0,
                len,
                normal: [frame.normal.re, frame.normal.im],
                mid_theta: mid,
            });
            acc += len;
        }

        Ok(Mesh {
            vertices,
            preimage,
            triangles,
            boundary_loop,
            boundary_theta,
            boundary_arclength,
            boundary_edges,
            perimeter: acc,
            areas,
            grads,
            masses,
            diameters,
            interior_h,
            boundary_layer: layer,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn total_area(&self) -> f64 {
        self.areas.iter().sum()
    }

    pub fn max_boundary_edge(&self) -> f64 {
        self.boundary_edges.iter().map(|e| e.len).fold(0.0, f64::max)
    }

    /// Triangle centroid (physical coordinates).
    pub fn centroid(&self, t: usize) -> [f64; 2] {
        let tri = self.triangles[t];
        let mut c = [0.0, 0.0];
        for &v in &tri {
            c[0] += self.vertices[v][0] / 3.0;
            c[1] += self.vertices[v][1] / 3.0;
        }
        c
    }
}

/// Triangulate the annulus between two vertex rings by merging them in
/// angle order.
fn zip_rings(
    triangles: &mut Vec<[usize; 3]>,
    start_a: usize,
    n_a: usize,
    start_b: usize,
    n_b: usize,
    preimage: &[Complex64],
) {
    let base = preimage[start_a].arg();
    let rel = |idx: usize| -> f64 {
        let mut d = preimage[idx].arg() - base;
        while d < -1e-12 {
            d += 2.0 * PI;
        }
        d
    };
    // monotone unwrapped angle sequence over one loop plus the repeated
    // first vertex
    let seq = |start: usize, n: usize, first: usize| -> Vec<(f64, usize)> {
        let mut out: Vec<(f64, usize)> = (0..=n)
            .map(|i| {
                let idx = start + (first + i) % n;
                (rel(idx), idx)
            })
            .collect();
        for i in 1..out.len() {
            while out[i].0 < out[i - 1].0 - 1e-12 {
                out[i].0 += 2.0 * PI;
            }
        }
        out
    };
    let sa = seq(start_a, n_a, 0);
    // align ring b to start at its vertex of smallest relative angle
    let b0 = (0..n_b)
        .min_by(|&l, &m| rel(start_b + l).partial_cmp(&rel(start_b + m)).unwrap())
        .unwrap();
    let sb = seq(start_b, n_b, b0);

    let (mut i, mut l) = (0usize, 0usize);
    while i < n_a || l < n_b {
        let adv_a = if i >= n_a {
            false
        } else if l >= n_b {
            true
        } else {
            sa[i + 1].0 <= sb[l + 1].0
        };
        if adv_a {
            triangles.push([sa[i].1, sa[i + 1].1, sb[l].1]);
            i += 1;
        } else {
            triangles.push([sa[i].1, sb[l + 1].1, sb[l].1]);
            l += 1;
        }
    }
}
