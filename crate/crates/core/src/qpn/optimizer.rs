use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::network::{Gradients, QpnNetwork};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    #[default]
    Quickprop,
    /// Plain full-batch gradient descent, `dw = -epsilon * g`.
    GradientDescent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Learning rate for gradient steps and the Quickprop fallback.
    pub epsilon: f64,
    /// Maximum growth factor of a Quickprop step over the previous step.
    pub mu: f64,
    pub max_epochs: usize,
    pub min_error_improvement: f64,
    /// Secant denominators smaller than this trigger the gradient fallback.
    pub denom_floor: f64,
    pub seed: u64,
    pub init_range: f64,
    #[serde(default)]
    pub optimizer: Optimizer,
    /// Stop as soon as the training MSE drops to this value.
    #[serde(default)]
    pub stop_at_mse: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.1,
            mu: 1.75,
            max_epochs: 10_000,
            min_error_improvement: 1e-9,
            denom_floor: 1e-12,
            seed: 42,
            init_range: 0.5,
            optimizer: Optimizer::Quickprop,
            stop_at_mse: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return fail(format!("epsilon {} must be positive", self.epsilon));
        }
        if !(self.mu > 1.0 && self.mu.is_finite()) {
            return fail(format!("mu {} must exceed 1", self.mu));
        }
        if self.denom_floor.is_nan() || self.denom_floor <= 0.0 {
            return fail(format!("denom_floor {} must be positive", self.denom_floor));
        }
        if self.max_epochs == 0 {
            return fail("max_epochs must be at least 1".into());
        }
        if self.min_error_improvement.is_nan() || self.min_error_improvement < 0.0 {
            return fail("min_error_improvement must be non-negative".into());
        }
        if !(self.init_range >= 0.0 && self.init_range.is_finite()) {
            return fail(format!("init_range {} must be non-negative", self.init_range));
        }
        Ok(())
    }
}

/// Quickprop memory for one weight matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerState {
    pub prev_gradient: Vec<f64>,
    pub prev_delta: Vec<f64>,
    pub initialized: bool,
}

impl LayerState {
    pub fn new(len: usize) -> Self {
        Self { prev_gradient: vec![0.0; len], prev_delta: vec![0.0; len], initialized: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightState {
    pub hidden: LayerState,
    pub output: LayerState,
}

impl WeightState {
    pub fn new(net: &QpnNetwork) -> Self {
        Self {
            hidden: LayerState::new(net.hidden_weights().data.len()),
            output: LayerState::new(net.output_weights().data.len()),
        }
    }
}

/// Counters describing one update.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepStats {
    pub fallback: usize,
    pub secant: usize,
    pub clipped: usize,
    /// Secant steps replaced because they pointed up the local slope.
    pub uphill: usize,
    /// Largest `|dw| / |d_prev|` among secant steps that kept the previous direction.
    pub max_growth_ratio: f64,
}

impl StepStats {
    fn merge(self, o: StepStats) -> StepStats {
        StepStats {
            fallback: self.fallback + o.fallback,
            secant: self.secant + o.secant,
            clipped: self.clipped + o.clipped,
            uphill: self.uphill + o.uphill,
            max_growth_ratio: self.max_growth_ratio.max(o.max_growth_ratio),
        }
    }
}

/// Per-weight Quickprop update on one flat weight slice.
///
/// Each weight is its own one-dimensional secant problem:
/// `dw = g / (g_prev - g) * d_prev`, capped at `mu * d_prev` when the direction is kept,
/// with `dw = -epsilon * g` when there is no usable history. A secant step with `dw * g > 0`
/// would climb the slope (the slope steepened without changing sign); it becomes
/// `mu * d_prev` when `d_prev` still descends, else the gradient step.
pub fn quickprop_update(
    weights: &mut [f64],
    gradient: &[f64],
    state: &mut LayerState,
    config: &TrainConfig,
) -> Result<StepStats> {
    let n = weights.len();
    if gradient.len() != n || state.prev_gradient.len() != n || state.prev_delta.len() != n {
        return Err(Error::Dimension { expected: n, got: gradient.len() });
    }
    if let Some(index) = gradient.iter().position(|g| !g.is_finite()) {
        return Err(Error::NonFiniteGradient { index });
    }
    let mut stats = StepStats::default();
    for i in 0..n {
        let g = gradient[i];
        let g_prev = state.prev_gradient[i];
        let d_prev = state.prev_delta[i];
        let denom = g_prev - g;
        let mut dw;
        if !state.initialized || d_prev == 0.0 || denom.abs() < config.denom_floor {
            dw = -config.epsilon * g;
            stats.fallback += 1;
        } else {
            dw = g / denom * d_prev;
            stats.secant += 1;
            if dw * g > 0.0 {
                stats.uphill += 1;
                if d_prev * g < 0.0 {
                    dw = config.mu * d_prev;
                    stats.max_growth_ratio = stats.max_growth_ratio.max(config.mu);
                } else {
                    dw = -config.epsilon * g;
                }
            } else if dw.signum() == d_prev.signum() {
                if dw.abs() > config.mu * d_prev.abs() {
                    dw = config.mu * d_prev;
                    stats.clipped += 1;
                }
                stats.max_growth_ratio = stats.max_growth_ratio.max(dw.abs() / d_prev.abs());
            }
        }
        weights[i] += dw;
        state.prev_gradient[i] = g;
        state.prev_delta[i] = dw;
    }
    state.initialized = true;
    Ok(stats)
}

/// Applies [`quickprop_update`] to both layers of the network.
pub fn quickprop_step(
    net: &mut QpnNetwork,
    gradient: &Gradients,
    state: &mut WeightState,
    config: &TrainConfig,
) -> Result<StepStats> {
    if gradient.hidden.shape() != net.hidden.shape() || gradient.output.shape() != net.output.shape() {
        return Err(Error::Dimension { expected: net.weight_count(), got: gradient.iter().count() });
    }
    let hidden_len = gradient.hidden.data.len();
    let a = quickprop_update(&mut net.hidden.data, &gradient.hidden.data, &mut state.hidden, config)
        .map_err(|e| offset_index(e, 0))?;
    let b = quickprop_update(&mut net.output.data, &gradient.output.data, &mut state.output, config)
        .map_err(|e| offset_index(e, hidden_len))?;
    Ok(a.merge(b))
}

fn offset_index(e: Error, offset: usize) -> Error {
    match e {
        Error::NonFiniteGradient { index } => Error::NonFiniteGradient { index: index + offset },
        other => other,
    }
}

/// `w <- w - epsilon * g` on both layers.
pub fn gradient_descent_step(net: &mut QpnNetwork, gradient: &Gradients, config: &TrainConfig) -> Result<StepStats> {
    if let Some(index) = gradient.iter().position(|g| !g.is_finite()) {
        return Err(Error::NonFiniteGradient { index });
    }
    for (w, g) in net.hidden.data.iter_mut().zip(&gradient.hidden.data) {
        *w -= config.epsilon * g;
    }
    for (w, g) in net.output.data.iter_mut().zip(&gradient.output.data) {
        *w -= config.epsilon * g;
    }
    Ok(StepStats { fallback: net.weight_count(), ..StepStats::default() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg(epsilon: f64) -> TrainConfig {
        TrainConfig { epsilon, ..TrainConfig::default() }
    }

    /// Derivative of `a * (w - m)^2`.
    fn quad_grad(a: f64, m: f64, w: f64) -> f64 {
        2.0 * a * (w - m)
    }

    #[test]
    fn secant_step_lands_on_quadratic_minimum() {
        // the exact step is 4x the fallback step, so the growth limit must not bind
        let c = TrainConfig { mu: 10.0, ..cfg(0.1) };
        let mut w = [0.0];
        let mut st = LayerState::new(1);
        {
            let g = quad_grad(1.0, 3.0, w[0]);
            quickprop_update(&mut w, &[g], &mut st, &c)
        }
        .unwrap();
        assert!((w[0] - 0.6).abs() < 1e-15);
        assert_eq!(st.prev_gradient[0], -6.0);
        let s = {
            let g = quad_grad(1.0, 3.0, w[0]);
            quickprop_update(&mut w, &[g], &mut st, &c)
        }
        .unwrap();
        assert_eq!(s.secant, 1);
        assert!((w[0] - 3.0).abs() < 1e-9, "{}", w[0]);
        assert!((st.prev_delta[0] - 2.4).abs() < 1e-12);
    }

    #[test]
    fn default_growth_limit_clips_the_quadratic_step() {
        let c = cfg(0.1);
        let mut w = [0.0];
        let mut st = LayerState::new(1);
        for _ in 0..2 {
            let g = quad_grad(1.0, 3.0, w[0]);
            quickprop_update(&mut w, &[g], &mut st, &c).unwrap();
        }
        assert!((st.prev_delta[0] - 1.75 * 0.6).abs() < 1e-12);
        assert!((w[0] - 1.65).abs() < 1e-12);
    }

    #[test]
    fn equal_gradients_fall_back() {
        let c = cfg(0.1);
        let mut st = LayerState { prev_gradient: vec![2.0], prev_delta: vec![0.3], initialized: true };
        let mut w = [1.0];
        let s = quickprop_update(&mut w, &[2.0], &mut st, &c).unwrap();
        assert_eq!(s.fallback, 1);
        assert!((w[0] - (1.0 - 0.2)).abs() < 1e-15);
    }

    #[test]
    fn zero_previous_delta_falls_back() {
        let mut st = LayerState { prev_gradient: vec![2.0], prev_delta: vec![0.0], initialized: true };
        let mut w = [0.0];
        let s = quickprop_update(&mut w, &[1.0], &mut st, &cfg(0.5)).unwrap();
        assert_eq!(s.fallback, 1);
        assert_eq!(w[0], -0.5);
    }

    #[test]
    fn growth_limit_clips() {
        // g / (g_prev - g) = 5 gives dw = 0.5 against d_prev = 0.1
        let mut st = LayerState { prev_gradient: vec![-1.2], prev_delta: vec![0.1], initialized: true };
        let mut w = [0.0];
        let s = quickprop_update(&mut w, &[-1.0], &mut st, &cfg(0.1)).unwrap();
        assert_eq!(s.clipped, 1);
        assert!((w[0] - 0.175).abs() < 1e-15);
        assert!((st.prev_delta[0] - 0.175).abs() < 1e-15);
    }

    #[test]
    fn steepening_slope_keeps_descending() {
        // the secant ratio 1 / (0.5 - 1) = -2 would step to +0.2, up the slope
        let mut st = LayerState { prev_gradient: vec![0.5], prev_delta: vec![-0.1], initialized: true };
        let mut w = [0.0];
        let s = quickprop_update(&mut w, &[1.0], &mut st, &cfg(0.1)).unwrap();
        assert_eq!(s.uphill, 1);
        assert!((w[0] + 0.175).abs() < 1e-15);
    }

    #[test]
    fn uphill_history_falls_back_to_gradient() {
        // the previous step climbed; repeating it would climb again
        let mut st = LayerState { prev_gradient: vec![2.0], prev_delta: vec![0.1], initialized: true };
        let mut w = [0.0];
        let s = quickprop_update(&mut w, &[1.0], &mut st, &cfg(0.1)).unwrap();
        assert_eq!(s.uphill, 1);
        assert!((w[0] + 0.1).abs() < 1e-15);
    }

    #[test]
    fn non_finite_gradient_rejected() {
        let mut st = LayerState::new(2);
        let mut w = [0.0, 0.0];
        let err = quickprop_update(&mut w, &[0.0, f64::NAN], &mut st, &cfg(0.1)).unwrap_err();
        assert!(matches!(err, Error::NonFiniteGradient { index: 1 }));
        assert!(quickprop_update(&mut w, &[0.0], &mut st, &cfg(0.1)).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        for bad in [
            TrainConfig { epsilon: 0.0, ..TrainConfig::default() },
            TrainConfig { mu: 1.0, ..TrainConfig::default() },
            TrainConfig { denom_floor: 0.0, ..TrainConfig::default() },
            TrainConfig { max_epochs: 0, ..TrainConfig::default() },
            TrainConfig { init_range: -1.0, ..TrainConfig::default() },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }

    proptest! {
        #[test]
        fn first_secant_step_is_exact_on_any_quadratic(
            a in 0.05f64..20.0,
            m in -50.0f64..50.0,
            w0 in -50.0f64..50.0,
            eps in 0.001f64..0.04,
        ) {
            prop_assume!((w0 - m).abs() > 1e-3);
            let c = cfg(eps);
            let mut w = [w0];
            let mut st = LayerState::new(1);
            { let g = quad_grad(a, m, w[0]); quickprop_update(&mut w, &[g], &mut st, &c) }.unwrap();
            // a large first step can exceed the growth limit; keep mu out of the way here
            let c = TrainConfig { mu: 1e12, ..c };
            { let g = quad_grad(a, m, w[0]); quickprop_update(&mut w, &[g], &mut st, &c) }.unwrap();
            prop_assert!((w[0] - m).abs() < 1e-9 * (1.0 + m.abs().max(w0.abs())), "{} vs {}", w[0], m);
        }

        #[test]
        fn fallback_decreases_convex_quadratic(
            a in 0.05f64..20.0,
            m in -50.0f64..50.0,
            w0 in -50.0f64..50.0,
        ) {
            prop_assume!((w0 - m).abs() > 1e-6);
            // curvature is 2a, so any epsilon below 1/a is a descent step
            let eps = 0.9 / a;
            let j = |w: f64| a * (w - m) * (w - m);
            let mut w = [w0];
            let mut st = LayerState::new(1);
            let s = quickprop_update(&mut w, &[quad_grad(a, m, w0)], &mut st, &cfg(eps)).unwrap();
            prop_assert_eq!(s.fallback, 1);
            prop_assert!(j(w[0]) < j(w0));
        }

        #[test]
        fn accepted_steps_respect_growth_limit(
            g_prev in -5.0f64..5.0,
            g in -5.0f64..5.0,
            d_prev in -1.0f64..1.0,
        ) {
            prop_assume!(d_prev.abs() > 1e-6);
            let c = cfg(0.1);
            let mut st = LayerState { prev_gradient: vec![g_prev], prev_delta: vec![d_prev], initialized: true };
            let mut w = [0.0];
            quickprop_update(&mut w, &[g], &mut st, &c).unwrap();
            let dw = st.prev_delta[0];
            if dw.signum() == d_prev.signum() && (g_prev - g).abs() >= c.denom_floor {
                prop_assert!(dw.abs() <= c.mu * d_prev.abs() * (1.0 + 1e-12));
            }
            prop_assert!(dw * g <= 0.0, "step {} climbs slope {}", dw, g);
        }
    }
}
