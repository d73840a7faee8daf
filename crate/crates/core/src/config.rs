use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of the matcher.
///
/// `mu` and the scale bounds are expressed in normalized units when
/// `normalize` is set (both clouds centered and scaled to unit RMS radius
/// before matching); otherwise in data units. A pair contributes to the
/// objective iff its squared residual is below `mu`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatchConfig {
    pub mu: f64,
    /// Reward weight at `λ = 0`; the path follower moves it linearly to
    /// `mu` as `λ` goes to one. A wide capture radius early keeps the path
    /// out of small, wrong clusters. Set equal to `mu` to hold it fixed.
    pub mu_start: f64,
    pub s_lo: f64,
    pub s_hi: f64,
    /// First homotopy weight; the convex endpoint itself is skipped.
    pub lambda_start: f64,
    pub lambda_step: f64,
    pub fw_tol: f64,
    pub fw_max_iters: usize,
    pub denom_guard: f64,
    pub normalize: bool,
    pub seed: u64,
}

impl Default for MatchConfig {
    fn default() -> Self {
        Self {
            mu: 0.15,
            mu_start: 1.0,
            s_lo: 0.5,
            s_hi: 1.5,
            lambda_start: 0.01,
            lambda_step: 0.05,
            fw_tol: 1e-6,
            fw_max_iters: 200,
            denom_guard: 1e-8,
            normalize: true,
            seed: 0,
        }
    }
}

impl MatchConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.s_lo.is_finite() && self.s_hi.is_finite() && 0.0 <= self.s_lo && self.s_lo <= self.s_hi) {
            return bad(format!(
                "scale bounds must satisfy 0 <= s_lo <= s_hi, got [{}, {}]",
                self.s_lo, self.s_hi
            ));
        }
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            return bad(format!("mu must be a non-negative number, got {}", self.mu));
        }
        if !(self.mu_start >= 0.0 && self.mu_start.is_finite()) {
            return bad(format!("mu_start must be a non-negative number, got {}", self.mu_start));
        }
        if !(self.lambda_step > 0.0 && self.lambda_step <= 1.0) {
            return bad(format!("lambda_step must lie in (0, 1], got {}", self.lambda_step));
        }
        if !(self.lambda_start > 0.0 && self.lambda_start <= 1.0) {
            return bad(format!("lambda_start must lie in (0, 1], got {}", self.lambda_start));
        }
        if !(self.fw_tol > 0.0) {
            return bad(format!("fw_tol must be positive, got {}", self.fw_tol));
        }
        if self.fw_max_iters == 0 {
            return bad("fw_max_iters must be at least 1".into());
        }
        if !(self.denom_guard > 0.0 && self.denom_guard.is_finite()) {
            return bad(format!("denom_guard must be positive, got {}", self.denom_guard));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self =
            serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reward weight used at homotopy weight `lambda`.
    pub fn mu_at(&self, lambda: f64) -> f64 {
        if lambda >= 1.0 {
            self.mu
        } else {
            (1.0 - lambda) * self.mu_start + lambda * self.mu
        }
    }

    /// The homotopy weights visited by the path follower: `lambda_start`,
    /// then increments of `lambda_step` while below one, then exactly one.
    pub fn lambda_schedule(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut k = 0usize;
        loop {
            let lambda = self.lambda_start + k as f64 * self.lambda_step;
            if lambda >= 1.0 - 1e-12 {
                break;
            }
            out.push(lambda);
            k += 1;
        }
        out.push(1.0);
        out
    }
}
