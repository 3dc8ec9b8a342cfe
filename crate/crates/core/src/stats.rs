//! Repeated-run aggregation and the two-sided Wilcoxon rank-sum test.

use std::fmt::Write as _;

use statrs::function::erf::erfc;
use thiserror::Error;

/// Significance threshold for rank-sum p-values.
pub const SIGNIFICANCE: f64 = 0.05;
/// Combined sample size up to which p-values are computed exactly.
pub const EXACT_LIMIT: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("no samples")]
    Empty,
    #[error("reference algorithm `{0}` not among the batches")]
    UnknownReference(String),
    #[error("invalid run batch `{name}`: {reason}")]
    InvalidBatch { name: String, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AveStd {
    pub ave: f64,
    /// Sample standard deviation (divisor `n - 1`); zero for a single sample.
    pub std: f64,
    /// Set when the deviation is the single-sample convention rather than an estimate.
    pub single_sample: bool,
}

pub fn ave_std(samples: &[f64]) -> Result<AveStd, StatsError> {
    let n = samples.len();
    if n == 0 {
        return Err(StatsError::Empty);
    }
    let ave = samples.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return Ok(AveStd { ave, std: 0.0, single_sample: true });
    }
    let ss: f64 = samples.iter().map(|x| (x - ave) * (x - ave)).sum();
    Ok(AveStd {
        ave,
        std: (ss / (n - 1) as f64).sqrt(),
        single_sample: false,
    })
}

pub fn median(samples: &[f64]) -> Option<f64> {
    if samples.is_empty() {
        return None;
    }
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len().is_multiple_of(2) { 0.5 * (v[m - 1] + v[m]) } else { v[m] })
}

/// Doubled midranks (so tied ranks stay integral) of the pooled sample, in input order.
fn doubled_midranks(pooled: &[f64]) -> (Vec<u64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_by(|&i, &j| pooled[i].total_cmp(&pooled[j]));
    let mut ranks = vec![0u64; pooled.len()];
    let mut tie_sizes = Vec::new();
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && pooled[order[end]] == pooled[order[start]] {
            end += 1;
        }
        // Positions start+1 ..= end share rank (start+1+end)/2.
        let doubled = (start + 1 + end) as u64;
        for &idx in &order[start..end] {
            ranks[idx] = doubled;
        }
        tie_sizes.push(end - start);
        start = end;
    }
    (ranks, tie_sizes)
}

/// Two-sided rank-sum p-value for samples `a` and `b`.
///
/// Exact (over all equally likely assignments of the pooled midranks) when
/// `|a| + |b| <= 16`; otherwise the normal approximation with tie-corrected
/// variance and a continuity correction. Empty input yields `1.0`.
pub fn ranksum_p(a: &[f64], b: &[f64]) -> f64 {
    let (n1, n2) = (a.len(), b.len());
    if n1 == 0 || n2 == 0 {
        return 1.0;
    }
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, ties) = doubled_midranks(&pooled);
    let n = n1 + n2;
    if n <= EXACT_LIMIT {
        exact_p(&ranks, n1)
    } else {
        let w: f64 = ranks[..n1].iter().map(|&r| r as f64).sum::<f64>() / 2.0;
        normal_p(w, n1, n2, &ties)
    }
}

/// Probability that a random size-`n1` subset of the ranks has a rank sum
/// at least as far from its mean as the observed first `n1` ranks.
fn exact_p(doubled: &[u64], n1: usize) -> f64 {
    let n = doubled.len();
    let observed: u64 = doubled[..n1].iter().sum();
    let max_sum: u64 = doubled.iter().sum();
    // ways[k][s]: number of k-subsets with doubled rank sum s.
    let mut ways = vec![vec![0u64; max_sum as usize + 1]; n1 + 1];
    ways[0][0] = 1;
    for &r in doubled {
        for k in (1..=n1).rev() {
            let (lower, upper) = ways.split_at_mut(k);
            let prev = &lower[k - 1];
            let cur = &mut upper[0];
            for s in (r as usize..=max_sum as usize).rev() {
                cur[s] += prev[s - r as usize];
            }
        }
    }
    // Doubled mean rank sum: n1·(n+1).
    let centre = (n1 * (n + 1)) as i64;
    let dev = (observed as i64 - centre).abs();
    let mut extreme = 0u64;
    let mut total = 0u64;
    for (s, &count) in ways[n1].iter().enumerate() {
        total += count;
        if (s as i64 - centre).abs() >= dev {
            extreme += count;
        }
    }
    (extreme as f64 / total as f64).min(1.0)
}

fn normal_p(w: f64, n1: usize, n2: usize, ties: &[usize]) -> f64 {
    let (f1, f2) = (n1 as f64, n2 as f64);
    let n = f1 + f2;
    let u = w - f1 * (f1 + 1.0) / 2.0;
    let mean = f1 * f2 / 2.0;
    let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum();
    let var = f1 * f2 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if var <= 0.0 {
        return 1.0;
    }
    let z = ((u - mean).abs() - 0.5).max(0.0) / var.sqrt();
    erfc(z / std::f64::consts::SQRT_2).min(1.0)
}

/// Repeated-run results of one algorithm.
#[derive(Debug, Clone, PartialEq)]
pub struct RunBatch {
    pub algorithm: String,
    pub final_losses: Vec<f64>,
    pub classification_rates: Vec<f64>,
    pub curves: Vec<Vec<f64>>,
}

impl RunBatch {
    pub fn validate(&self) -> Result<(), StatsError> {
        let invalid = |reason: &str| StatsError::InvalidBatch {
            name: self.algorithm.clone(),
            reason: reason.to_string(),
        };
        let n = self.final_losses.len();
        if n == 0 {
            return Err(invalid("no runs"));
        }
        if self.classification_rates.len() != n || self.curves.len() != n {
            return Err(invalid("losses, rates and curves differ in length"));
        }
        if self.final_losses.iter().any(|l| !l.is_finite() || *l < 0.0) {
            return Err(invalid("losses must be finite and non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub algorithm: String,
    pub ave: f64,
    pub std: f64,
    /// `None` for the reference algorithm.
    pub p_value: Option<f64>,
    pub significant: bool,
    pub classification_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub reference: String,
    pub rows: Vec<ReportRow>,
}

pub fn build_report(batches: &[RunBatch], reference: &str) -> Result<ComparisonReport, StatsError> {
    let reference_batch = batches
        .iter()
        .find(|b| b.algorithm == reference)
        .ok_or_else(|| StatsError::UnknownReference(reference.to_string()))?;
    let rows = batches
        .iter()
        .map(|batch| {
            batch.validate()?;
            let stats = ave_std(&batch.final_losses)?;
            let rate = ave_std(&batch.classification_rates)?.ave;
            let p_value = (batch.algorithm != reference)
                .then(|| ranksum_p(&batch.final_losses, &reference_batch.final_losses));
            Ok(ReportRow {
                algorithm: batch.algorithm.clone(),
                ave: stats.ave,
                std: stats.std,
                significant: p_value.is_some_and(|p| p <= SIGNIFICANCE),
                p_value,
                classification_rate: rate,
            })
        })
        .collect::<Result<Vec<_>, StatsError>>()?;
    Ok(ComparisonReport {
        reference: reference.to_string(),
        rows,
    })
}

impl ComparisonReport {
    pub fn row(&self, algorithm: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.algorithm == algorithm)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("algorithm,mse_ave,mse_std,p_value,classification_rate\n");
        for r in &self.rows {
            let p = r.p_value.map_or_else(|| "N/A".to_string(), |p| p.to_string());
            let _ = writeln!(out, "{},{},{},{},{}", r.algorithm, r.ave, r.std, p, r.classification_rate);
        }
        out
    }

    /// Plain-text table; the lowest average loss is wrapped in `**`,
    /// significant p-values are marked with `*`.
    pub fn render_text(&self) -> String {
        let best = self
            .rows
            .iter()
            .map(|r| r.ave)
            .min_by(f64::total_cmp)
            .unwrap_or(f64::NAN);
        let mut out = format!(
            "{:<10} {:>16} {:>14} {:>12} {:>10}\n",
            "algorithm", "MSE (AVE)", "MSE (STD)", "p-value", "rate %"
        );
        for r in &self.rows {
            let ave = if r.ave == best { format!("**{:.6e}**", r.ave) } else { format!("{:.6e}", r.ave) };
            let p = match r.p_value {
                None => "N/A".to_string(),
                Some(p) if r.significant => format!("{p:.3e}*"),
                Some(p) => format!("{p:.3e}"),
            };
            let _ = writeln!(
                out,
                "{:<10} {:>16} {:>14.6e} {:>12} {:>10.4}",
                r.algorithm, ave, r.std, p, r.classification_rate
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ave_std_examples() {
        assert_eq!(ave_std(&[5.0, 5.0, 5.0]).unwrap(), AveStd { ave: 5.0, std: 0.0, single_sample: false });
        let s = ave_std(&[1.0, 3.0]).unwrap();
        assert_eq!(s.ave, 2.0);
        assert!((s.std - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(ave_std(&[0.0]).unwrap(), AveStd { ave: 0.0, std: 0.0, single_sample: true });
        assert_eq!(ave_std(&[]), Err(StatsError::Empty));
    }

    #[test]
    fn median_examples() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(&[]), None);
    }

    #[test]
    fn ranksum_examples() {
        assert_eq!(ranksum_p(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]), 0.1);
        assert!(ranksum_p(&[1.0, 3.0, 5.0], &[2.0, 4.0, 6.0]) > 0.5);
        let a = [0.3, 1.2, 0.7, 2.2];
        let b = [0.9, 0.1, 3.3];
        assert_eq!(ranksum_p(&a, &b), ranksum_p(&b, &a));
        assert_eq!(ranksum_p(&a, &a), 1.0);
        assert_eq!(ranksum_p(&[], &a), 1.0);
    }

    #[test]
    fn midranks_with_ties() {
        let (r, t) = doubled_midranks(&[2.0, 1.0, 2.0, 5.0]);
        assert_eq!(r, vec![5, 2, 5, 8]);
        assert_eq!(t, vec![1, 2, 1]);
    }

    #[test]
    fn normal_branch_reference_value() {
        // 10 vs 10 fully separated: U = 0, mean 50, var 175,
        // z = 49.5/sqrt(175), p = erfc(z/√2).
        let a: Vec<f64> = (0..10).map(f64::from).collect();
        let b: Vec<f64> = (10..20).map(f64::from).collect();
        let z = 49.5 / 175f64.sqrt();
        let expected = erfc(z / std::f64::consts::SQRT_2);
        assert!((ranksum_p(&a, &b) - expected).abs() < 1e-15);
        assert!(expected < 2e-4 && expected > 1e-4);
        // All tied: zero variance.
        assert_eq!(ranksum_p(&[1.0; 10], &[1.0; 10]), 1.0);
    }

    #[test]
    fn report_layout() {
        let batch = |name: &str, losses: Vec<f64>| RunBatch {
            algorithm: name.into(),
            classification_rates: vec![90.0; losses.len()],
            curves: vec![vec![1.0]; losses.len()],
            final_losses: losses,
        };
        let mfo = batch("MFO", vec![0.1, 0.2, 0.15, 0.12]);
        let copy = RunBatch { algorithm: "COPY".into(), ..mfo.clone() };
        let pso = batch("PSO", vec![0.9, 1.0, 0.95, 0.97, 0.99]);
        let report = build_report(&[mfo, copy, pso], "MFO").unwrap();
        assert_eq!(report.row("MFO").unwrap().p_value, None);
        let c = report.row("COPY").unwrap();
        assert_eq!(c.p_value, Some(1.0));
        assert!(!c.significant);
        let p = report.row("PSO").unwrap();
        assert!(p.significant == (p.p_value.unwrap() <= 0.05));
        // 4 vs 5 fully separated: 2 / C(9,4) = 2/126.
        assert!((p.p_value.unwrap() - 2.0 / 126.0).abs() < 1e-15);

        let csv = report.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("algorithm,mse_ave,mse_std,p_value,classification_rate"));
        assert!(lines.next().unwrap().starts_with("MFO,") && csv.contains(",N/A,"));
        assert_eq!(csv.lines().count(), 4);
        assert!(report.render_text().contains("**"));

        assert!(matches!(build_report(&[], "MFO"), Err(StatsError::UnknownReference(_))));
    }

    #[test]
    fn invalid_batches() {
        let b = RunBatch {
            algorithm: "X".into(),
            final_losses: vec![0.1, -1.0],
            classification_rates: vec![1.0, 1.0],
            curves: vec![vec![], vec![]],
        };
        assert!(b.validate().is_err());
        let b = RunBatch { final_losses: vec![0.1], ..b };
        assert!(b.validate().is_err());
    }

    proptest! {
        #[test]
        fn p_in_unit_interval_and_symmetric(
            a in prop::collection::vec(0u8..6, 1..14),
            b in prop::collection::vec(0u8..6, 1..14),
        ) {
            let a: Vec<f64> = a.into_iter().map(f64::from).collect();
            let b: Vec<f64> = b.into_iter().map(f64::from).collect();
            let p = ranksum_p(&a, &b);
            prop_assert!((0.0..=1.0).contains(&p));
            prop_assert_eq!(p, ranksum_p(&b, &a));
        }

        #[test]
        fn shifting_reaches_exact_minimum(
            a in prop::collection::vec(-1.0f64..1.0, 1..8),
            b in prop::collection::vec(-1.0f64..1.0, 1..8),
        ) {
            let shifted: Vec<f64> = a.iter().map(|v| v + 100.0).collect();
            let (n1, n2) = (a.len() as u64, b.len() as u64);
            let mut c = 1u64;
            for i in 0..n1 {
                c = c * (n1 + n2 - i) / (i + 1);
            }
            let expected = (2.0 / c as f64).min(1.0);
            prop_assert!((ranksum_p(&shifted, &b) - expected).abs() < 1e-12);
        }

        #[test]
        fn replicated_samples_keep_mean(s in prop::collection::vec(-10.0f64..10.0, 1..10), k in 1usize..5) {
            let rep: Vec<f64> = s.iter().cycle().take(s.len() * k).copied().collect();
            prop_assert!((ave_std(&rep).unwrap().ave - ave_std(&s).unwrap().ave).abs() < 1e-12);
        }
    }
}
