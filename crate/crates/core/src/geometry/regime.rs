//! Thin-film regime parameters.
//!
//! The aspect ratio h, reduced exchange length eta, boundary-vortex core
//! size eps = eta^2/(h |log h|) and the reduction rate
//! lambda(h) = (1/(eps |log eps|)) * (log|log h| / |log h|) are tied
//! together exactly; the asymptotic regime conditions are evaluated as
//! strict inequalities with a user-set margin.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeParams {
    /// Aspect ratio (thickness over diameter).
    pub h: f64,
    /// Reduced exchange length.
    pub eta: f64,
    /// Boundary-vortex core size, eta^2 / (h |log h|).
    pub eps: f64,
    /// Reduction rate lambda(h).
    pub lambda_h: f64,
}

impl RegimeParams {
    /// Family eta^2 = C h |log h|^beta, so eps = C |log h|^{beta-1}.
    pub fn from_h_beta_c(h: f64, beta: f64, c: f64) -> Result<Self> {
        if !(h > 0.0 && h < (-1.0f64).exp()) {
            return Err(Error::Config(format!("h = {h} must lie in (0, 1/e)")));
        }
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::Config(format!("beta = {beta} must lie in (0, 1)")));
        }
        if c <= 0.0 {
            return Err(Error::Config(format!("C = {c} must be positive")));
        }
        let log_h = h.ln().abs();
        let eta_sq = c * h * log_h.powf(beta);
        Self::from_h_eta(h, eta_sq.sqrt())
    }

    /// Directly from (h, eta); eps and lambda(h) follow from their formulas.
    pub fn from_h_eta(h: f64, eta: f64) -> Result<Self> {
        if !(h > 0.0 && h < (-1.0f64).exp()) {
            return Err(Error::Config(format!("h = {h} must lie in (0, 1/e)")));
        }
        if eta <= 0.0 {
            return Err(Error::Config(format!("eta = {eta} must be positive")));
        }
        let log_h = h.ln().abs();
        let eps = eta * eta / (h * log_h);
        if eps >= 1.0 {
            return Err(Error::Config(format!(
                "core size eps = {eps} >= 1; parameters outside the thin-film regime"
            )));
        }
        let lambda_h = (1.0 / (eps * eps.ln().abs())) * (log_h.ln() / log_h);
        Ok(RegimeParams {
            h,
            eta,
            eps,
            lambda_h,
        })
    }

    /// |log eps|.
    pub fn log_eps_abs(&self) -> f64 {
        self.eps.ln().abs()
    }

    /// Regime condition 1/|log h| << eps << 1, with margin:
    /// eps * |log h| >= margin and eps * margin <= 1.
    pub fn in_regime(&self, margin: f64) -> bool {
        let log_h = self.h.ln().abs();
        self.eps * log_h >= margin && self.eps * margin <= 1.0
    }

    /// Narrower condition log|log h| / |log h| << eps (with margin), which
    /// presumes the first regime.
    pub fn in_regime2(&self, margin: f64) -> bool {
        let log_h = self.h.ln().abs();
        self.in_regime(margin) && self.eps * log_h >= margin * log_h.ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn closed_forms_at_h_1e3() {
        let p = RegimeParams::from_h_beta_c(1e-3, 0.5, 1.0).unwrap();
        assert_relative_eq!(p.eta * p.eta, 2.6283e-3, max_relative = 1e-4);
        assert_relative_eq!(p.eps, 0.38048, max_relative = 1e-4);
        assert_relative_eq!(p.lambda_h, 0.7610, max_relative = 1e-3);
    }

    #[test]
    fn closed_forms_at_h_1e6() {
        let p = RegimeParams::from_h_beta_c(1e-6, 0.5, 1.0).unwrap();
        // eps = |log h|^{-1/2} = 0.2690399...
        let log_h = (1e-6f64).ln().abs();
        assert_relative_eq!(p.eps, 1.0 / log_h.sqrt(), max_relative = 1e-12);
        assert_relative_eq!(p.eps, 0.26904, max_relative = 1e-4);
    }

    #[test]
    fn beta_to_one_limit() {
        let p = RegimeParams::from_h_beta_c(1e-3, 0.999, 0.5).unwrap();
        // |log h|^{beta-1} -> 1, so eps -> C
        assert_relative_eq!(p.eps, 0.5, max_relative = 1e-2);
    }

    #[test]
    fn eps_ties_eta_exactly() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let h = 10f64.powf(-rng.gen_range(1.5..9.0));
            let beta = rng.gen_range(0.05..0.95);
            let c = rng.gen_range(0.1..2.0);
            let p = match RegimeParams::from_h_beta_c(h, beta, c) {
                Ok(p) => p,
                Err(_) => continue, // eps >= 1 rejected
            };
            let eta_sq = p.eta * p.eta;
            assert_relative_eq!(p.eps * p.h * p.h.ln().abs(), eta_sq, max_relative = 1e-14);
            // narrower regime implies the regime, for any margin
            for margin in [1.0, 2.0, 5.0] {
                if p.in_regime2(margin) {
                    assert!(p.in_regime(margin));
                }
            }
        }
    }

    #[test]
    fn lambda_decreasing_along_fixed_beta_path() {
        let mut last = f64::INFINITY;
        for k in 3..=9 {
            let p = RegimeParams::from_h_beta_c(10f64.powi(-k), 0.5, 1.0).unwrap();
            assert!(p.lambda_h < last);
            last = p.lambda_h;
        }
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(RegimeParams::from_h_beta_c(0.5, 0.5, 1.0).is_err()); // h >= 1/e
        assert!(RegimeParams::from_h_beta_c(1e-3, 1.2, 1.0).is_err());
        assert!(RegimeParams::from_h_beta_c(1e-3, 0.5, -1.0).is_err());
        // large C pushes eps past 1
        assert!(RegimeParams::from_h_beta_c(1e-2, 0.5, 10.0).is_err());
        let p = RegimeParams::from_h_beta_c(1e-3, 0.5, 1.0).unwrap();
        assert_abs_diff_eq!(
            p.eps,
            p.eta * p.eta / (p.h * p.h.ln().abs()),
            epsilon = 1e-16
        );
    }
}
