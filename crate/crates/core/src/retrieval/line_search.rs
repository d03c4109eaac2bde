//! One-dimensional descent step selection with an adaptive learning rate.

/// Parameters of the backtracking/extending line search used by the
/// generalized-projection steps.
#[derive(Debug, Clone, PartialEq)]
pub struct LineSearchConfig {
    /// Step length tried first on the very first iteration.
    pub initial_step: f64,
    /// Factor applied while larger steps keep improving (> 1).
    pub growth_factor: f64,
    /// Factor applied while the step fails to improve (in (0, 1)).
    pub shrink_factor: f64,
    /// Total number of objective evaluations allowed per step.
    pub max_probes: usize,
}

impl Default for LineSearchConfig {
    fn default() -> Self {
        Self {
            initial_step: 1.0,
            growth_factor: 2.0,
            shrink_factor: 0.5,
            max_probes: 20,
        }
    }
}

impl LineSearchConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.initial_step.is_finite() && self.initial_step > 0.0) {
            return Err(format!("initial_step must be positive, got {}", self.initial_step));
        }
        if !(self.growth_factor.is_finite() && self.growth_factor > 1.0) {
            return Err(format!("growth_factor must exceed 1, got {}", self.growth_factor));
        }
        if !(self.shrink_factor.is_finite()
            && self.shrink_factor > 0.0
            && self.shrink_factor < 1.0)
        {
            return Err(format!(
                "shrink_factor must lie in (0, 1), got {}",
                self.shrink_factor
            ));
        }
        if self.max_probes == 0 {
            return Err("max_probes must be at least 1".into());
        }
        Ok(())
    }
}

/// Finds a step `alpha` along the descent direction with
/// `objective(alpha) < z0`: shrinks from `step0` until the objective drops,
/// then keeps growing while that helps. Returns the accepted step and its
/// objective value, or `None` when `max_probes` evaluations never improved.
pub(crate) fn line_search<F: FnMut(f64) -> f64>(
    mut objective: F,
    z0: f64,
    step0: f64,
    cfg: &LineSearchConfig,
) -> Option<(f64, f64)> {
    let mut probes = 0usize;
    let mut alpha = step0;
    let mut current: Option<(f64, f64)> = None;
    while probes < cfg.max_probes {
        let z = objective(alpha);
        probes += 1;
        if z < z0 {
            current = Some((alpha, z));
            break;
        }
        alpha *= cfg.shrink_factor;
    }
    let (mut alpha, mut z) = current?;
    while probes < cfg.max_probes {
        let trial = alpha * cfg.growth_factor;
        let zt = objective(trial);
        probes += 1;
        if zt < z {
            alpha = trial;
            z = zt;
        } else {
            break;
        }
    }
    Some((alpha, z))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_minimum_of_parabola() {
        // Z(alpha) = (alpha - 3)^2 + 1 starting far too small.
        let cfg = LineSearchConfig::default();
        let obj = |a: f64| (a - 3.0).powi(2) + 1.0;
        let (alpha, z) = line_search(obj, obj(0.0), 0.01, &cfg).unwrap();
        assert!(z < obj(0.0));
        assert!(alpha > 0.01);
    }

    #[test]
    fn shrinks_when_initial_step_overshoots() {
        let cfg = LineSearchConfig::default();
        let obj = |a: f64| (a - 0.001).powi(2);
        let z0 = obj(0.0);
        let (alpha, z) = line_search(obj, z0, 10.0, &cfg).unwrap();
        assert!(z < z0);
        assert!(alpha < 10.0);
    }

    #[test]
    fn gives_up_on_flat_objective() {
        let cfg = LineSearchConfig { max_probes: 5, ..Default::default() };
        assert!(line_search(|_| 1.0, 1.0, 1.0, &cfg).is_none());
    }

    #[test]
    fn every_accepted_step_improves() {
        let cfg = LineSearchConfig::default();
        let obj = |a: f64| (a - 2.0).powi(2);
        let z0 = obj(0.0);
        if let Some((_, z)) = line_search(obj, z0, 0.5, &cfg) {
            assert!(z < z0);
        }
    }
}
