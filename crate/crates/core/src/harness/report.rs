use serde::{Deserialize, Serialize};

use super::{SweepAxis, SweepResult};
use crate::error::{Error, Result};

/// Infidelities at or below this are treated as floor noise by the default fit window.
const FIT_FLOOR: f64 = 1e-10;

/// Least-squares line through `(log x, log y)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub slope: f64,
    /// Standard error of the slope; zero for two points.
    pub stderr: f64,
    pub intercept: f64,
    pub window: [f64; 2],
    pub points: usize,
}

pub fn fit_power_law(xs: &[f64], ys: &[f64]) -> Result<ScalingFit> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch { expected: xs.len(), actual: ys.len() });
    }
    if xs.len() < 2 {
        return Err(Error::InvalidArgument(format!("a fit needs two points, got {}", xs.len())));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidArgument("power-law fit needs positive finite data".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("fit abscissae are all equal".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let stderr = if lx.len() > 2 {
        let ssr: f64 = lx.iter().zip(&ly).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
        (ssr / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(ScalingFit { slope, stderr, intercept, window: [lo, hi], points: xs.len() })
}

/// Slope of `log(1−F)` against `log(value)` over `window` (inclusive).
///
/// Without a window, the fit covers two decades starting at the smallest
/// grid value whose infidelity exceeds `1e-10`.
pub fn scaling_fit(result: &SweepResult, window: Option<[f64; 2]>) -> Result<ScalingFit> {
    let [lo, hi] = match window {
        Some(w) => w,
        None => {
            let start = result
                .points
                .iter()
                .find(|p| p.value > 0.0 && p.infidelity > FIT_FLOOR)
                .ok_or_else(|| Error::InvalidArgument("no grid point above the fit floor".into()))?
                .value;
            [start, 100.0 * start]
        }
    };
    let (xs, ys): (Vec<f64>, Vec<f64>) = result
        .points
        .iter()
        .filter(|p| p.value >= lo && p.value <= hi)
        .map(|p| (p.value, p.infidelity))
        .unzip();
    fit_power_law(&xs, &ys)
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation with average ranks for ties; `None` when
/// either side is constant.
pub fn spearman(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    let (ra, rb) = (ranks(a), ranks(b));
    let n = ra.len() as f64;
    let ma = ra.iter().sum::<f64>() / n;
    let mb = rb.iter().sum::<f64>() / n;
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in ra.iter().zip(&rb) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some(sab / (saa * sbb).sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRow {
    pub sequence: String,
    pub axis: SweepAxis,
    pub value: f64,
    pub infidelity: f64,
    pub one_minus_c_avg: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub rows: Vec<CorrelationRow>,
    /// Rank correlation between the two columns over all rows.
    pub spearman: Option<f64>,
}

/// Pairs `(1−F, 1−C_avg)` from every grid point of every sweep.
pub fn fidelity_vs_cavg_report(results: &[SweepResult]) -> CorrelationReport {
    let rows: Vec<CorrelationRow> = results
        .iter()
        .flat_map(|r| {
            r.points.iter().map(|p| CorrelationRow {
                sequence: r.sequence.clone(),
                axis: r.axis,
                value: p.value,
                infidelity: p.infidelity,
                one_minus_c_avg: 1.0 - p.c_avg,
            })
        })
        .collect();
    let a: Vec<f64> = rows.iter().map(|r| r.infidelity).collect();
    let b: Vec<f64> = rows.iter().map(|r| r.one_minus_c_avg).collect();
    CorrelationReport { spearman: spearman(&a, &b), rows }
}
