//! Small derivative-free minimizer (Nelder-Mead) used to refine grid
//! searches over vortex positions.

/// Nelder-Mead on R^d. Returns (argmin, min).
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    scale: f64,
    max_iters: usize,
    f_tol: f64,
) -> (Vec<f64>, f64) {
    let d = x0.len();
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(d + 1);
    simplex.push(x0.to_vec());
    for i in 0..d {
        let mut p = x0.to_vec();
        p[i] += scale;
        simplex.push(p);
    }
    let mut values: Vec<f64> = simplex.iter().map(|p| f(p)).collect();

    for _ in 0..max_iters {
        // order ascending by value
        let mut idx: Vec<usize> = (0..=d).collect();
        idx.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
        let reorder: Vec<Vec<f64>> = idx.iter().map(|&i| simplex[i].clone()).collect();
        let revals: Vec<f64> = idx.iter().map(|&i| values[i]).collect();
        simplex = reorder;
        values = revals;

        if (values[d] - values[0]).abs() <= f_tol * (1.0 + values[0].abs()) {
            break;
        }

        let centroid: Vec<f64> = (0..d)
            .map(|k| simplex[..d].iter().map(|p| p[k]).sum::<f64>() / d as f64)
            .collect();
        let worst = simplex[d].clone();
        let mix = |a: f64| -> Vec<f64> {
            (0..d)
                .map(|k| centroid[k] + a * (centroid[k] - worst[k]))
                .collect()
        };

        let xr = mix(1.0);
        let fr = f(&xr);
        if fr < values[0] {
            let xe = mix(2.0);
            let fe = f(&xe);
            if fe < fr {
                simplex[d] = xe;
                values[d] = fe;
            } else {
                simplex[d] = xr;
                values[d] = fr;
            }
        } else if fr < values[d - 1] {
            simplex[d] = xr;
            values[d] = fr;
        } else {
            let xc = mix(-0.5);
            let fc = f(&xc);
            if fc < values[d] {
                simplex[d] = xc;
                values[d] = fc;
            } else {
                // shrink toward the best vertex
                for i in 1..=d {
                    for k in 0..d {
                        simplex[i][k] = simplex[0][k] + 0.5 * (simplex[i][k] - simplex[0][k]);
                    }
                    values[i] = f(&simplex[i]);
                }
            }
        }
    }

    let mut best = 0;
    for i in 1..=x0.len() {
        if values[i] < values[best] {
            best = i;
        }
    }
    (simplex[best].clone(), values[best])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn quadratic_bowl() {
        let f = |x: &[f64]| (x[0] - 1.5).powi(2) + 3.0 * (x[1] + 0.5).powi(2);
        let (x, v) = nelder_mead(f, &[0.0, 0.0], 0.5, 500, 1e-14);
        assert_abs_diff_eq!(x[0], 1.5, epsilon = 1e-5);
        assert_abs_diff_eq!(x[1], -0.5, epsilon = 1e-5);
        assert!(v < 1e-10);
    }
}
