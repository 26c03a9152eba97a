use std::io::Write;

use crate::error::{Error, Result};

use super::network::{batch_error, gradient_with_error, QpnNetwork, TrainingSample};
use super::optimizer::{gradient_descent_step, quickprop_step, Optimizer, StepStats, TrainConfig, WeightState};

/// Consecutive low-improvement epochs that end training.
pub const PATIENCE: usize = 5;

pub const TRACE_HEADER: &str = "epoch,trn_mse,trn_abs,vld_mse,vld_abs";

/// Errors after one epoch's update, in normalized target units.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub trn_mse: f64,
    pub trn_abs: f64,
    pub vld_mse: Option<f64>,
    pub vld_abs: Option<f64>,
    pub step: StepStats,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    MaxEpochs,
    ErrorPlateau,
    TargetReached,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub epochs_run: usize,
    pub trace: Vec<EpochRecord>,
    /// Decrease of the training MSE over the last epoch.
    pub error_improvement: f64,
    /// Epoch whose weights were returned; 0 means the initial weights.
    pub best_epoch: usize,
    pub stop_reason: StopReason,
}

impl TrainReport {
    /// First epoch whose training MSE is at or below `mse`.
    pub fn epochs_to_reach(&self, mse: f64) -> Option<usize> {
        self.trace.iter().find(|r| r.trn_mse <= mse).map(|r| r.epoch)
    }

    pub fn write_trace_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let mut text = String::with_capacity(64 * (self.trace.len() + 1));
        text.push_str(TRACE_HEADER);
        text.push('\n');
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.trace {
            text.push_str(&format!("{},{},{},{},{}\n", r.epoch, r.trn_mse, r.trn_abs, opt(r.vld_mse), opt(r.vld_abs)));
        }
        out.write_all(text.as_bytes())?;
        Ok(())
    }
}

/// Full-batch training.
///
/// Each epoch computes the gradient over `trn`, applies one update and records the errors of
/// the updated weights. Training stops at `max_epochs`, when the training MSE improves by less
/// than `min_error_improvement` for [`PATIENCE`] epochs in a row, or when `stop_at_mse` is
/// reached. The returned network is the one with the lowest validation MSE seen (training MSE
/// when `vld` is empty); ties keep the earlier epoch.
pub fn train<S: TrainingSample>(
    net: &QpnNetwork,
    trn: &[S],
    vld: &[S],
    config: &TrainConfig,
) -> Result<(QpnNetwork, TrainReport)> {
    config.validate()?;
    if trn.is_empty() {
        return Err(Error::EmptySplit("TRN"));
    }
    let mut current = net.clone();
    let mut state = WeightState::new(&current);
    let (mut grads, start) = gradient_with_error(&current, trn)?;
    if !start.mse.is_finite() {
        return Err(Error::Divergence { epoch: 0, what: "training error" });
    }
    let selection_error = |n: &QpnNetwork, trn_mse: f64| -> Result<f64> {
        if vld.is_empty() {
            Ok(trn_mse)
        } else {
            Ok(batch_error(n, vld)?.mse)
        }
    };
    let mut best = (selection_error(&current, start.mse)?, 0usize, current.clone());

    let mut trace = Vec::with_capacity(config.max_epochs.min(100_000));
    let mut prev_mse = start.mse;
    let mut improvement = 0.0;
    let mut stalled = 0usize;
    let mut stop_reason = StopReason::MaxEpochs;

    for epoch in 1..=config.max_epochs {
        let step = match config.optimizer {
            Optimizer::Quickprop => quickprop_step(&mut current, &grads, &mut state, config),
            Optimizer::GradientDescent => gradient_descent_step(&mut current, &grads, config),
        }
        .map_err(|e| match e {
            Error::NonFiniteGradient { .. } => Error::Divergence { epoch, what: "gradient" },
            other => other,
        })?;

        let (next_grads, err) = gradient_with_error(&current, trn)?;
        if !err.mse.is_finite() || !err.abs.is_finite() {
            return Err(Error::Divergence { epoch, what: "training error" });
        }
        grads = next_grads;
        let (vld_mse, vld_abs) = if vld.is_empty() {
            (None, None)
        } else {
            let v = batch_error(&current, vld)?;
            if !v.mse.is_finite() {
                return Err(Error::Divergence { epoch, what: "validation error" });
            }
            (Some(v.mse), Some(v.abs))
        };

        let selection = vld_mse.unwrap_or(err.mse);
        if selection < best.0 {
            best = (selection, epoch, current.clone());
        }
        trace.push(EpochRecord { epoch, trn_mse: err.mse, trn_abs: err.abs, vld_mse, vld_abs, step });

        improvement = prev_mse - err.mse;
        prev_mse = err.mse;
        if config.stop_at_mse.is_some_and(|t| err.mse <= t) {
            stop_reason = StopReason::TargetReached;
            break;
        }
        if improvement < config.min_error_improvement {
            stalled += 1;
            if stalled >= PATIENCE {
                stop_reason = StopReason::ErrorPlateau;
                break;
            }
        } else {
            stalled = 0;
        }
    }

    let (_, best_epoch, best_net) = best;
    let report =
        TrainReport { epochs_run: trace.len(), trace, error_improvement: improvement, best_epoch, stop_reason };
    Ok((best_net, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qpn::network::{init_network, LayerSizes, Sample};

    fn samples() -> Vec<Sample> {
        (0..6)
            .map(|i| {
                let x = i as f64 / 5.0;
                Sample { features: vec![x, 1.0 - x], targets: vec![0.2 + 0.6 * x * x] }
            })
            .collect()
    }

    #[test]
    fn memorizes_a_single_row() {
        let cfg = TrainConfig { max_epochs: 500, stop_at_mse: Some(1e-10), ..TrainConfig::default() };
        let net = init_network(LayerSizes::new(1, 1, 1), &cfg).unwrap();
        let rows = [Sample { features: vec![0.5], targets: vec![0.7] }];
        let (best, report) = train(&net, &rows, &[], &cfg).unwrap();
        assert_eq!(report.stop_reason, StopReason::TargetReached);
        assert!(report.epochs_run <= 500);
        assert!((best.predict(&[0.5]).unwrap() - 0.7).abs() < 1e-4);
    }

    #[test]
    fn training_is_deterministic() {
        let cfg = TrainConfig { max_epochs: 300, ..TrainConfig::default() };
        let net = init_network(LayerSizes::new(2, 4, 1), &cfg).unwrap();
        let (a, ra) = train(&net, &samples(), &samples()[..2], &cfg).unwrap();
        let (b, rb) = train(&net, &samples(), &samples()[..2], &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(ra, rb);
    }

    #[test]
    fn growth_limit_holds_over_a_run() {
        let cfg = TrainConfig { max_epochs: 400, ..TrainConfig::default() };
        let net = init_network(LayerSizes::new(2, 4, 1), &cfg).unwrap();
        let (_, report) = train(&net, &samples(), &[], &cfg).unwrap();
        assert!(report.trace.iter().all(|r| r.step.max_growth_ratio <= cfg.mu * (1.0 + 1e-12)));
        assert!(report.trace.last().unwrap().trn_mse < report.trace[0].trn_mse);
    }

    #[test]
    fn returned_network_has_lowest_selection_error() {
        let cfg = TrainConfig { max_epochs: 200, ..TrainConfig::default() };
        let net = init_network(LayerSizes::new(2, 4, 1), &cfg).unwrap();
        let vld = &samples()[1..3];
        let (best, report) = train(&net, &samples(), vld, &cfg).unwrap();
        let min = report.trace.iter().filter_map(|r| r.vld_mse).fold(f64::INFINITY, f64::min);
        let initial = batch_error(&net, vld).unwrap().mse;
        assert_eq!(batch_error(&best, vld).unwrap().mse, min.min(initial));
    }

    #[test]
    fn plateau_stops_early() {
        let cfg = TrainConfig { min_error_improvement: 1.0, ..TrainConfig::default() };
        let net = init_network(LayerSizes::new(2, 3, 1), &cfg).unwrap();
        let (_, report) = train(&net, &samples(), &[], &cfg).unwrap();
        assert_eq!(report.stop_reason, StopReason::ErrorPlateau);
        assert_eq!(report.epochs_run, PATIENCE);
    }

    #[test]
    fn zero_epochs_rejected() {
        let cfg = TrainConfig { max_epochs: 0, ..TrainConfig::default() };
        let net = init_network(LayerSizes::new(2, 3, 1), &TrainConfig::default()).unwrap();
        assert!(matches!(train(&net, &samples(), &[], &cfg), Err(Error::Config(_))));
        assert!(matches!(train::<Sample>(&net, &[], &[], &TrainConfig::default()), Err(Error::EmptySplit("TRN"))));
    }

    #[test]
    fn runaway_gradient_descent_reports_divergence() {
        let cfg = TrainConfig {
            epsilon: 1e100,
            optimizer: Optimizer::GradientDescent,
            min_error_improvement: 0.0,
            max_epochs: 1000,
            ..TrainConfig::default()
        };
        let net = init_network(LayerSizes::new(2, 3, 1), &cfg).unwrap();
        let rows = vec![Sample { features: vec![1.0, 1.0], targets: vec![1e3] }];
        match train(&net, &rows, &[], &cfg) {
            Err(Error::Divergence { epoch, .. }) => assert!(epoch >= 1),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn trace_csv_layout() {
        let cfg = TrainConfig { max_epochs: 3, min_error_improvement: 0.0, ..TrainConfig::default() };
        let net = init_network(LayerSizes::new(2, 3, 1), &cfg).unwrap();
        let (_, report) = train(&net, &samples(), &samples()[..1], &cfg).unwrap();
        let mut buf = Vec::new();
        report.write_trace_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], TRACE_HEADER);
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("1,"));
        assert_eq!(lines[3].split(',').count(), 5);
    }
}
