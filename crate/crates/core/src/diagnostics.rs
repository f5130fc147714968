//! Distribution-fidelity diagnostics for real-vs-synthetic comparison:
//! summary statistics, empirical CDFs, Gaussian-kernel density estimates
//! with Silverman bandwidths, and the two-sample KS statistic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of evaluation points in each shared KDE grid.
pub const KDE_GRID_POINTS: usize = 512;

/// Bandwidth floor used when a sample has zero spread.
pub const BANDWIDTH_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SummaryEntry {
    pub median: f64,
    pub mean: f64,
    /// Sample standard deviation (n-1 denominator); `None` for n = 1.
    pub sd: Option<f64>,
}

/// Per-feature rows plus a pooled all-features row.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SummaryStats {
    pub per_feature: Vec<SummaryEntry>,
    pub pooled: SummaryEntry,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Bandwidths {
    pub real: Vec<f64>,
    pub synthetic: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DistributionReport {
    pub real_stats: SummaryStats,
    pub synthetic_stats: SummaryStats,
    pub ecdf_real: Vec<Vec<(f64, f64)>>,
    pub ecdf_synthetic: Vec<Vec<(f64, f64)>>,
    pub kde_real: Vec<Vec<(f64, f64)>>,
    pub kde_synthetic: Vec<Vec<(f64, f64)>>,
    pub ks_per_feature: Vec<f64>,
    pub bandwidths: Bandwidths,
}

/// Median (mean of the two middle order statistics for even n), arithmetic
/// mean, and sample SD.
pub fn summary_stats(values: &[f64]) -> Result<SummaryEntry> {
    if values.is_empty() {
        return Err(Error::Input("summary_stats: empty input".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let n = sorted.len();
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    };
    let mean = values.iter().sum::<f64>() / n as f64;
    let sd = if n < 2 {
        None
    } else {
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
        Some(var.sqrt())
    };
    Ok(SummaryEntry { median, mean, sd })
}

/// Step points of the empirical CDF: one (value, count(<= value)/n) pair
/// per distinct sorted value, ending at probability exactly 1.
pub fn ecdf(values: &[f64]) -> Result<Vec<(f64, f64)>> {
    if values.is_empty() {
        return Err(Error::Input("ecdf: empty input".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let n = sorted.len();
    let mut points = Vec::new();
    let mut i = 0;
    while i < n {
        let v = sorted[i];
        while i < n && sorted[i] == v {
            i += 1;
        }
        points.push((v, i as f64 / n as f64));
    }
    if let Some(last) = points.last_mut() {
        last.1 = 1.0;
    }
    Ok(points)
}

/// Silverman's rule with an IQR guard:
/// 0.9 * min(sd, IQR/1.34) * n^(-1/5), falling back to sd alone when the
/// IQR vanishes, and to the 1e-6 floor when the sample has no spread.
pub fn silverman_bandwidth(values: &[f64]) -> Result<f64> {
    if values.len() < 2 {
        return Err(Error::Input("bandwidth needs at least 2 values".into()));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt();
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
    let scale = if sd > 0.0 && iqr > 0.0 {
        sd.min(iqr / 1.34)
    } else if sd > 0.0 {
        sd
    } else {
        return Ok(BANDWIDTH_FLOOR);
    };
    Ok(0.9 * scale * n.powf(-0.2))
}

/// Linear-interpolation quantile of a sorted slice.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    if lo + 1 >= sorted.len() {
        return sorted[sorted.len() - 1];
    }
    sorted[lo] + (h - lo as f64) * (sorted[lo + 1] - sorted[lo])
}

/// Gaussian-kernel density estimate on the given grid:
/// f(x) = (1/(n h)) * sum phi((x - v_i)/h).
pub fn kde(values: &[f64], grid: &[f64], bandwidth: Option<f64>) -> Result<Vec<f64>> {
    if values.len() < 2 {
        return Err(Error::Input("kde needs at least 2 values".into()));
    }
    let h = match bandwidth {
        Some(h) if h <= 0.0 => {
            return Err(Error::Input(format!("kde bandwidth must be positive, got {h}")))
        }
        Some(h) => h,
        None => silverman_bandwidth(values)?,
    };
    let norm = 1.0 / (values.len() as f64 * h);
    let inv_sqrt_2pi = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    Ok(grid
        .iter()
        .map(|&x| {
            let s: f64 = values
                .iter()
                .map(|&v| {
                    let u = (x - v) / h;
                    inv_sqrt_2pi * (-0.5 * u * u).exp()
                })
                .sum();
            norm * s
        })
        .collect())
}

/// Two-sample Kolmogorov-Smirnov statistic: the largest gap between the
/// two empirical CDFs over the merged support.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Input("ks_statistic: empty input".into()));
    }
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(|x, y| x.partial_cmp(y).expect("finite values"));
    sb.sort_by(|x, y| x.partial_cmp(y).expect("finite values"));
    let mut support: Vec<f64> = sa.iter().chain(sb.iter()).cloned().collect();
    support.sort_by(|x, y| x.partial_cmp(y).expect("finite values"));
    support.dedup();

    let frac_le = |sorted: &[f64], v: f64| -> f64 {
        // count of elements <= v via upper bound
        let mut lo = 0usize;
        let mut hi = sorted.len();
        while lo < hi {
            let mid = (lo + hi) / 2;
            if sorted[mid] <= v {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        lo as f64 / sorted.len() as f64
    };

    let mut sup = 0.0f64;
    for &v in &support {
        let gap = (frac_le(&sa, v) - frac_le(&sb, v)).abs();
        if gap > sup {
            sup = gap;
        }
    }
    Ok(sup)
}

fn column(rows: &[Vec<f64>], j: usize) -> Vec<f64> {
    rows.iter().map(|r| r[j]).collect()
}

/// Full per-feature comparison of two feature matrices. KDEs for both
/// sides share one grid per feature, spanning the union of both ranges
/// extended by 3 bandwidths (the larger of the two sides').
pub fn compare(real: &[Vec<f64>], synthetic: &[Vec<f64>]) -> Result<DistributionReport> {
    if real.len() < 2 || synthetic.len() < 2 {
        return Err(Error::Input(format!(
            "compare needs at least 2 rows per side, got {} and {}",
            real.len(),
            synthetic.len()
        )));
    }
    let n_features = real[0].len();
    if synthetic[0].len() != n_features {
        return Err(Error::Input(format!(
            "compare: real has {n_features} features, synthetic has {}",
            synthetic[0].len()
        )));
    }

    let mut report = DistributionReport {
        real_stats: pooled_stats(real)?,
        synthetic_stats: pooled_stats(synthetic)?,
        ecdf_real: Vec::new(),
        ecdf_synthetic: Vec::new(),
        kde_real: Vec::new(),
        kde_synthetic: Vec::new(),
        ks_per_feature: Vec::new(),
        bandwidths: Bandwidths {
            real: Vec::new(),
            synthetic: Vec::new(),
        },
    };

    for j in 0..n_features {
        let rv = column(real, j);
        let sv = column(synthetic, j);
        report.ecdf_real.push(ecdf(&rv)?);
        report.ecdf_synthetic.push(ecdf(&sv)?);

        let h_r = silverman_bandwidth(&rv)?;
        let h_s = silverman_bandwidth(&sv)?;
        let h_max = h_r.max(h_s);
        let lo = rv
            .iter()
            .chain(sv.iter())
            .cloned()
            .fold(f64::INFINITY, f64::min)
            - 3.0 * h_max;
        let hi = rv
            .iter()
            .chain(sv.iter())
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
            + 3.0 * h_max;
        let step = (hi - lo) / (KDE_GRID_POINTS - 1) as f64;
        let grid: Vec<f64> = (0..KDE_GRID_POINTS).map(|k| lo + k as f64 * step).collect();

        let dr = kde(&rv, &grid, Some(h_r))?;
        let ds = kde(&sv, &grid, Some(h_s))?;
        report.kde_real.push(grid.iter().cloned().zip(dr).collect());
        report
            .kde_synthetic
            .push(grid.iter().cloned().zip(ds).collect());
        report.bandwidths.real.push(h_r);
        report.bandwidths.synthetic.push(h_s);
        report.ks_per_feature.push(ks_statistic(&rv, &sv)?);
    }
    Ok(report)
}

fn pooled_stats(rows: &[Vec<f64>]) -> Result<SummaryStats> {
    let n_features = rows[0].len();
    let mut per_feature = Vec::with_capacity(n_features);
    for j in 0..n_features {
        per_feature.push(summary_stats(&column(rows, j))?);
    }
    let all: Vec<f64> = rows.iter().flatten().cloned().collect();
    Ok(SummaryStats {
        per_feature,
        pooled: summary_stats(&all)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_hand_computed() {
        let s = summary_stats(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(s.median, 2.0);
        assert_eq!(s.mean, 2.0);
        assert_eq!(s.sd, Some(1.0));
    }

    #[test]
    fn summary_even_n_median() {
        let s = summary_stats(&[4.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!(s.median, 2.5);
    }

    #[test]
    fn summary_constant_input() {
        let s = summary_stats(&[7.0; 5]).unwrap();
        assert_eq!(s.median, 7.0);
        assert_eq!(s.mean, 7.0);
        assert_eq!(s.sd, Some(0.0));
    }

    #[test]
    fn summary_shift_invariance() {
        let base = [0.3, -1.2, 4.4, 2.2, 0.0, 9.1];
        let shifted: Vec<f64> = base.iter().map(|v| v + 13.25).collect();
        let a = summary_stats(&base).unwrap();
        let b = summary_stats(&shifted).unwrap();
        assert!((b.median - a.median - 13.25).abs() < 1e-12);
        assert!((b.mean - a.mean - 13.25).abs() < 1e-12);
        assert!((b.sd.unwrap() - a.sd.unwrap()).abs() < 1e-12);
    }

    #[test]
    fn ecdf_examples() {
        assert_eq!(ecdf(&[5.0]).unwrap(), vec![(5.0, 1.0)]);
        let pts = ecdf(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(pts[0], (1.0, 1.0 / 3.0));
        assert_eq!(pts[1], (2.0, 2.0 / 3.0));
        assert_eq!(pts[2], (3.0, 1.0));
        // duplicates merge into one step
        assert_eq!(ecdf(&[2.0, 2.0, 4.0]).unwrap(), vec![(2.0, 2.0 / 3.0), (4.0, 1.0)]);
    }

    #[test]
    fn ecdf_monotone_ends_at_one() {
        let values: Vec<f64> = (0..40).map(|i| ((i * 37) % 11) as f64).collect();
        let pts = ecdf(&values).unwrap();
        assert_eq!(pts.last().unwrap().1, 1.0);
        for w in pts.windows(2) {
            assert!(w[0].0 < w[1].0);
            assert!(w[0].1 < w[1].1);
        }
    }

    #[test]
    fn kde_degenerate_sample_uses_floor_bandwidth() {
        let d = kde(&[0.0, 0.0], &[0.0], None).unwrap();
        let expected = 1.0 / (BANDWIDTH_FLOOR * (2.0 * std::f64::consts::PI).sqrt());
        assert!((d[0] - expected).abs() / expected < 1e-12);
    }

    #[test]
    fn kde_symmetric_data_symmetric_density() {
        let values = [-2.5, 2.5];
        let grid: Vec<f64> = (-50..=50).map(|i| i as f64 * 0.1).collect();
        let d = kde(&values, &grid, None).unwrap();
        let n = d.len();
        for i in 0..n / 2 {
            assert_eq!(d[i], d[n - 1 - i]);
        }
    }

    #[test]
    fn kde_integrates_to_one() {
        let values: Vec<f64> = (0..25).map(|i| (i as f64 * 0.37).sin() * 2.0 + 0.5).collect();
        let h = silverman_bandwidth(&values).unwrap();
        let lo = values.iter().cloned().fold(f64::INFINITY, f64::min) - 5.0 * h;
        let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 5.0 * h;
        let n = 2001;
        let step = (hi - lo) / (n - 1) as f64;
        let grid: Vec<f64> = (0..n).map(|k| lo + k as f64 * step).collect();
        let d = kde(&values, &grid, Some(h)).unwrap();
        let mut integral = 0.0;
        for w in d.windows(2) {
            integral += (w[0] + w[1]) / 2.0 * step;
        }
        assert!((integral - 1.0).abs() < 0.01, "integral {integral}");
    }

    #[test]
    fn kde_rejects_bad_input() {
        assert!(kde(&[1.0], &[0.0], None).is_err());
        assert!(kde(&[1.0, 2.0], &[0.0], Some(0.0)).is_err());
        assert!(kde(&[1.0, 2.0], &[0.0], Some(-1.0)).is_err());
    }

    #[test]
    fn ks_examples() {
        assert_eq!(ks_statistic(&[1.0, 2.0, 3.0], &[3.0, 1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(ks_statistic(&[1.0, 2.0], &[10.0, 11.0]).unwrap(), 1.0);
        assert_eq!(ks_statistic(&[1.0, 2.0], &[1.5, 2.5]).unwrap(), 0.5);
    }

    #[test]
    fn ks_symmetric_and_bounded() {
        let a = [0.4, 1.7, -2.0, 3.3, 0.0];
        let b = [0.1, 0.2, 5.0];
        let ab = ks_statistic(&a, &b).unwrap();
        let ba = ks_statistic(&b, &a).unwrap();
        assert_eq!(ab, ba);
        assert!((0.0..=1.0).contains(&ab));
    }

    #[test]
    fn compare_self_is_exactly_zero() {
        let rows: Vec<Vec<f64>> = (0..30)
            .map(|i| vec![i as f64 * 0.3, (i as f64).cos()])
            .collect();
        let report = compare(&rows, &rows).unwrap();
        assert!(report.ks_per_feature.iter().all(|&k| k == 0.0));
        assert_eq!(report.real_stats, report.synthetic_stats);
        assert_eq!(report.ecdf_real, report.ecdf_synthetic);
    }

    #[test]
    fn compare_rejects_feature_mismatch() {
        let a = vec![vec![1.0, 2.0], vec![3.0, 4.0]];
        let b = vec![vec![1.0], vec![2.0]];
        assert!(compare(&a, &b).is_err());
    }
}
