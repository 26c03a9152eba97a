//! Correlation, R-squared and absolute relative error, computed in position units.

use std::io::Write;

use crate::dataset::{denormalize, EncodedRow, EncodingSchema};
use crate::error::{Error, Result};
use crate::qpn::QpnNetwork;

pub const EVAL_HEADER: &str = "split,n,correlation,r_squared,mean_are";

fn check_pair(actual: &[f64], predicted: &[f64], needed: usize) -> Result<()> {
    if actual.len() != predicted.len() {
        return Err(Error::LengthMismatch(actual.len(), predicted.len()));
    }
    if actual.len() < needed {
        return Err(Error::TooFewValues { needed, got: actual.len() });
    }
    Ok(())
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Pearson product-moment correlation.
pub fn correlation(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    check_pair(actual, predicted, 2)?;
    let (ma, mp) = (mean(actual), mean(predicted));
    let (mut cov, mut va, mut vp) = (0.0, 0.0, 0.0);
    for (a, p) in actual.iter().zip(predicted) {
        let (da, dp) = (a - ma, p - mp);
        cov += da * dp;
        va += da * da;
        vp += dp * dp;
    }
    if va == 0.0 {
        return Err(Error::ConstantSeries("actual"));
    }
    if vp == 0.0 {
        return Err(Error::ConstantSeries("predicted"));
    }
    Ok((cov / (va.sqrt() * vp.sqrt())).clamp(-1.0, 1.0))
}

/// `1 - SS_res / SS_tot`; negative when the model does worse than predicting the mean.
pub fn r_squared(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    check_pair(actual, predicted, 2)?;
    let ma = mean(actual);
    let ss_tot: f64 = actual.iter().map(|a| (a - ma) * (a - ma)).sum();
    if ss_tot == 0.0 {
        return Err(Error::ConstantSeries("actual"));
    }
    let ss_res: f64 = actual.iter().zip(predicted).map(|(a, p)| (a - p) * (a - p)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AreSummary {
    pub mean: f64,
    /// Terms left out because the actual value was zero.
    pub skipped: usize,
}

/// Mean of `|a - p| / |a|`, skipping zero actual values.
pub fn mean_are(actual: &[f64], predicted: &[f64]) -> Result<AreSummary> {
    check_pair(actual, predicted, 1)?;
    let (mut sum, mut used) = (0.0, 0usize);
    for (a, p) in actual.iter().zip(predicted) {
        if *a != 0.0 {
            sum += (a - p).abs() / a.abs();
            used += 1;
        }
    }
    if used == 0 {
        return Err(Error::AllZeroActual);
    }
    Ok(AreSummary { mean: sum / used as f64, skipped: actual.len() - used })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    pub correlation: f64,
    pub r_squared: f64,
    pub mean_are: f64,
    pub are_skipped: usize,
    pub n: usize,
}

impl EvalResult {
    pub fn from_series(actual: &[f64], predicted: &[f64]) -> Result<Self> {
        let are = mean_are(actual, predicted)?;
        Ok(Self {
            correlation: correlation(actual, predicted)?,
            r_squared: r_squared(actual, predicted)?,
            mean_are: are.mean,
            are_skipped: are.skipped,
            n: actual.len(),
        })
    }
}

/// Actual and predicted mutation positions for each row.
pub fn predict_positions(
    net: &QpnNetwork,
    rows: &[EncodedRow],
    schema: &EncodingSchema,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut actual = Vec::with_capacity(rows.len());
    let mut predicted = Vec::with_capacity(rows.len());
    for row in rows {
        actual.push(denormalize(row.target, schema));
        predicted.push(denormalize(net.predict(&row.features)?, schema));
    }
    Ok((actual, predicted))
}

/// Forward-passes every row and scores the decoded outputs against the decoded targets.
pub fn evaluate_split(net: &QpnNetwork, rows: &[EncodedRow], schema: &EncodingSchema) -> Result<EvalResult> {
    if rows.is_empty() {
        return Err(Error::TooFewValues { needed: 1, got: 0 });
    }
    let (actual, predicted) = predict_positions(net, rows, schema)?;
    EvalResult::from_series(&actual, &predicted)
}

/// Writes `split,n,correlation,r_squared,mean_are` rows.
pub fn write_eval_csv<W: Write>(mut out: W, rows: &[(&str, EvalResult)]) -> Result<()> {
    writeln!(out, "{EVAL_HEADER}")?;
    for (name, r) in rows {
        writeln!(out, "{},{},{},{},{}", name, r.n, r.correlation, r.r_squared, r.mean_are)?;
    }
    Ok(())
}

/// Same table aligned for reading, metrics rounded to four decimals.
pub fn write_eval_table<W: Write>(mut out: W, rows: &[(&str, EvalResult)]) -> Result<()> {
    writeln!(out, "{:<8} {:>5} {:>12} {:>10} {:>12}", "Dataset", "n", "Correlation", "R-squared", "Mean of ARE")?;
    for (name, r) in rows {
        writeln!(out, "{:<8} {:>5} {:>12.4} {:>10.4} {:>12.4}", name, r.n, r.correlation, r.r_squared, r.mean_are)?;
    }
    Ok(())
}
