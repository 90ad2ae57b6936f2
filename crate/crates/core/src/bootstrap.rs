//! Percentile bootstrap around any point estimator.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dependence::{mc_chi_curve, ChiCurve};
use crate::error::{domain, Result};
use crate::model::{SbgpParams, CANONICAL_NAMES};
use crate::nbe::{estimate, NetworkWeights};
use crate::rng::RngState;
use crate::sample::{format_f64, Sample};
use crate::stats::quantile_sorted;

/// Refitted parameter vectors and their percentile intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapResult {
    pub names: Vec<String>,
    /// `B` rows of refitted parameters.
    pub replicates: Vec<Vec<f64>>,
    pub level: f64,
    pub intervals: Vec<(f64, f64)>,
}

#[derive(Debug, Serialize, Deserialize)]
struct IntervalRecord {
    name: String,
    lo: f64,
    hi: f64,
    median: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct Summary {
    level: f64,
    replicates: usize,
    intervals: Vec<IntervalRecord>,
}

fn percentile_bounds(values: &mut [f64], level: f64) -> (f64, f64) {
    values.sort_by(f64::total_cmp);
    let a = (1.0 - level) / 2.0;
    (quantile_sorted(values, a), quantile_sorted(values, 1.0 - a))
}

impl BootstrapResult {
    pub fn from_replicates(names: Vec<String>, replicates: Vec<Vec<f64>>, level: f64) -> Result<Self> {
        if replicates.is_empty() {
            return domain("bootstrap needs at least one replicate");
        }
        if !(level > 0.0 && level < 1.0) {
            return domain(format!("interval level must lie in (0, 1), got {level}"));
        }
        if replicates.iter().any(|r| r.len() != names.len()) {
            return domain("replicate length does not match parameter names");
        }
        let intervals = (0..names.len())
            .map(|k| {
                let mut col: Vec<f64> = replicates.iter().map(|r| r[k]).collect();
                percentile_bounds(&mut col, level)
            })
            .collect();
        Ok(Self {
            names,
            replicates,
            level,
            intervals,
        })
    }

    pub fn len(&self) -> usize {
        self.replicates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.replicates.is_empty()
    }

    pub fn interval(&self, name: &str) -> Option<(f64, f64)> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.intervals[i])
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        self.replicates.iter().map(|r| r[k]).collect()
    }

    /// One replicate per row, header `rep,<names>`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "rep,{}", self.names.join(","))?;
        for (i, r) in self.replicates.iter().enumerate() {
            let cells: Vec<String> = r.iter().map(|v| format_f64(*v)).collect();
            writeln!(w, "{},{}", i + 1, cells.join(","))?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::io::BufWriter::new(std::fs::File::create(path)?))
    }

    pub fn summary_json(&self) -> Result<String> {
        let intervals = self
            .names
            .iter()
            .enumerate()
            .map(|(k, name)| {
                let mut col = self.column(k);
                col.sort_by(f64::total_cmp);
                IntervalRecord {
                    name: name.clone(),
                    lo: self.intervals[k].0,
                    hi: self.intervals[k].1,
                    median: quantile_sorted(&col, 0.5),
                }
            })
            .collect();
        Ok(serde_json::to_string_pretty(&Summary {
            level: self.level,
            replicates: self.len(),
            intervals,
        })?)
    }
}

/// Indices of a resample with replacement.
pub fn resample_indices(n: usize, rng: &mut RngState) -> Vec<usize> {
    (0..n).map(|_| rng.int_inclusive(0, n - 1)).collect()
}

/// Nonparametric bootstrap with an arbitrary refit; replicate `i` uses
/// substream `i` of `rng`.
pub fn nonparam_bootstrap_with<F>(
    sample: &Sample,
    refit: F,
    names: &[&str],
    b: usize,
    level: f64,
    rng: &RngState,
) -> Result<BootstrapResult>
where
    F: Fn(&Sample) -> Result<Vec<f64>> + Sync,
{
    if b < 2 {
        return domain(format!("nonparametric bootstrap needs B >= 2, got {b}"));
    }
    if sample.is_empty() {
        return domain("cannot resample an empty sample");
    }
    let reps = (0..b)
        .into_par_iter()
        .map(|i| {
            let mut r = rng.substream(i as u64);
            refit(&sample.select(&resample_indices(sample.len(), &mut r)))
        })
        .collect::<Result<Vec<_>>>()?;
    BootstrapResult::from_replicates(names.iter().map(|s| s.to_string()).collect(), reps, level)
}

/// Nonparametric bootstrap of the sBGP estimator at the 95% level.
pub fn nonparam_bootstrap(
    sample: &Sample,
    wts: &NetworkWeights,
    b: usize,
    rng: &RngState,
) -> Result<BootstrapResult> {
    nonparam_bootstrap_with(
        sample,
        |s| Ok(estimate(wts, s)?.theta_hat.to_vec()),
        &CANONICAL_NAMES,
        b,
        0.95,
        rng,
    )
}

/// Parametric bootstrap: `b` datasets from `simulate`, each refitted.
pub fn param_bootstrap_with<S, F>(
    simulate: S,
    refit: F,
    names: &[&str],
    b: usize,
    level: f64,
    rng: &RngState,
) -> Result<BootstrapResult>
where
    S: Fn(&mut RngState) -> Result<Sample> + Sync,
    F: Fn(&Sample) -> Result<Vec<f64>> + Sync,
{
    if b < 1 {
        return domain("parametric bootstrap needs B >= 1");
    }
    let reps = (0..b)
        .into_par_iter()
        .map(|i| refit(&simulate(&mut rng.substream(i as u64))?))
        .collect::<Result<Vec<_>>>()?;
    BootstrapResult::from_replicates(names.iter().map(|s| s.to_string()).collect(), reps, level)
}

/// Parametric bootstrap of the sBGP estimator around fitted parameters.
pub fn param_bootstrap(
    p: &SbgpParams,
    n: usize,
    wts: &NetworkWeights,
    b: usize,
    rng: &RngState,
) -> Result<BootstrapResult> {
    param_bootstrap_with(
        |r| p.sample(n, r),
        |s| Ok(estimate(wts, s)?.theta_hat.to_vec()),
        &CANONICAL_NAMES,
        b,
        0.95,
        rng,
    )
}

/// Pointwise envelopes of replicate `χ(q)` curves.
#[derive(Debug, Clone, PartialEq)]
pub struct ChiBands {
    pub lower: ChiCurve,
    pub median: ChiCurve,
    pub upper: ChiCurve,
}

impl ChiBands {
    /// CSV with header `q,lower,median,upper`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "q,lower,median,upper")?;
        for i in 0..self.lower.len() {
            writeln!(
                w,
                "{},{},{},{}",
                format_f64(self.lower.levels[i]),
                format_f64(self.lower.values[i]),
                format_f64(self.median.values[i]),
                format_f64(self.upper.values[i])
            )?;
        }
        Ok(())
    }
}

/// Envelopes from one curve per replicate.
pub fn chi_bands_from_curves(curves: &[ChiCurve], level: f64) -> Result<ChiBands> {
    let first = curves
        .first()
        .ok_or_else(|| crate::error::Error::Domain("no curves to summarise".into()))?;
    let levels = first.levels.clone();
    let mut lo = Vec::with_capacity(levels.len());
    let mut mid = Vec::with_capacity(levels.len());
    let mut hi = Vec::with_capacity(levels.len());
    for k in 0..levels.len() {
        let mut col: Vec<f64> = curves.iter().map(|c| c.values[k]).collect();
        let (l, h) = percentile_bounds(&mut col, level);
        lo.push(l);
        hi.push(h);
        mid.push(quantile_sorted(&col, 0.5));
    }
    Ok(ChiBands {
        lower: ChiCurve::new(levels.clone(), lo)?,
        median: ChiCurve::new(levels.clone(), mid)?,
        upper: ChiCurve::new(levels, hi)?,
    })
}

/// Model-implied `χ(q)` bands for sBGP replicates: each replicate is turned
/// into parameters, simulated `n_mc` times and summarised.
pub fn bootstrap_chi_bands(
    result: &BootstrapResult,
    levels: &[f64],
    n_mc: usize,
    rng: &RngState,
) -> Result<ChiBands> {
    if result.is_empty() {
        return domain("bootstrap result is empty");
    }
    let curves = result
        .replicates
        .par_iter()
        .enumerate()
        .map(|(i, theta)| {
            let p = SbgpParams::from_canonical_projected(theta)?;
            mc_chi_curve(&p, levels, n_mc, &mut rng.substream(i as u64))
        })
        .collect::<Result<Vec<_>>>()?;
    chi_bands_from_curves(&curves, result.level)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nbe::{InputTransform, OutputHead};

    fn names() -> Vec<&'static str> {
        vec!["m", "sd"]
    }

    fn mean_sd(s: &Sample) -> Result<Vec<f64>> {
        let c = s.column(0);
        Ok(vec![crate::stats::mean(&c), crate::stats::variance(&c).sqrt()])
    }

    fn normal_sample(n: usize, seed: u64) -> Sample {
        let mut rng = RngState::seed_from_u64(seed);
        let p = SbgpParams::new(3.0, 1.0, 1.0, 1.0, 1.0, 0.5, 0.5).unwrap();
        p.sample(n, &mut rng).unwrap()
    }

    #[test]
    fn identical_resamples_give_zero_width() {
        let s = Sample::new(vec![[1.0, 2.0]; 30]);
        let r = nonparam_bootstrap_with(&s, mean_sd, &names(), 2, 0.95, &RngState::seed_from_u64(1)).unwrap();
        assert_eq!(r.replicates[0], r.replicates[1]);
        assert_eq!(r.intervals[0].0, r.intervals[0].1);
        assert!(nonparam_bootstrap_with(&s, mean_sd, &names(), 1, 0.95, &RngState::seed_from_u64(1)).is_err());
    }

    #[test]
    fn percentile_definition_and_order() {
        let s = normal_sample(300, 2);
        let r = nonparam_bootstrap_with(&s, mean_sd, &names(), 200, 0.9, &RngState::seed_from_u64(2)).unwrap();
        let mut col = r.column(0);
        col.sort_by(f64::total_cmp);
        let a = (1.0 - 0.9) / 2.0;
        assert_eq!(r.intervals[0], (quantile_sorted(&col, a), quantile_sorted(&col, 1.0 - a)));
        assert!(r.intervals.iter().all(|(lo, hi)| lo <= hi));
    }

    #[test]
    fn seeded_determinism() {
        let s = normal_sample(200, 3);
        let a = nonparam_bootstrap_with(&s, mean_sd, &names(), 50, 0.95, &RngState::seed_from_u64(4)).unwrap();
        let b = nonparam_bootstrap_with(&s, mean_sd, &names(), 50, 0.95, &RngState::seed_from_u64(4)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn monotone_relabeling_equivariance() {
        let s = normal_sample(200, 5);
        let a = nonparam_bootstrap_with(&s, mean_sd, &names(), 201, 0.9, &RngState::seed_from_u64(6)).unwrap();
        let b = nonparam_bootstrap_with(
            &s,
            |x| Ok(mean_sd(x)?.iter().map(|v| v.exp()).collect()),
            &names(),
            201,
            0.9,
            &RngState::seed_from_u64(6),
        )
        .unwrap();
        // 201 replicates at 90% put both percentiles on order statistics
        for k in 0..2 {
            assert!((a.intervals[k].0.exp() - b.intervals[k].0).abs() < 1e-12);
            assert!((a.intervals[k].1.exp() - b.intervals[k].1).abs() < 1e-12);
        }
    }

    #[test]
    fn width_shrinks_with_n() {
        let width = |n: usize| {
            let ws: Vec<f64> = (0..20)
                .map(|i| {
                    let s = normal_sample(n, 100 + i);
                    let r = nonparam_bootstrap_with(&s, mean_sd, &names(), 100, 0.95, &RngState::seed_from_u64(i)).unwrap();
                    r.intervals[0].1 - r.intervals[0].0
                })
                .collect();
            (crate::stats::mean(&ws), crate::stats::variance(&ws).sqrt() / 20f64.sqrt())
        };
        let (small, se_s) = width(100);
        let (large, se_l) = width(1000);
        assert!(small - large > 3.0 * (se_s * se_s + se_l * se_l).sqrt());
    }

    #[test]
    fn param_bootstrap_shapes() {
        let p = crate::model::reference_config(1);
        let w = NetworkWeights::new(OutputHead::Sbgp, InputTransform::SignedLog1p, &mut RngState::seed_from_u64(1));
        let r = param_bootstrap(&p, 200, &w, 1, &RngState::seed_from_u64(2)).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r.replicates[0].len(), 7);
        assert_eq!(r.intervals[0].0, r.intervals[0].1);
        let r = param_bootstrap(&p, 200, &w, 5, &RngState::seed_from_u64(2)).unwrap();
        assert!(r.column(0).iter().all(|&e| e < 1.0));
    }

    #[test]
    fn bands_collapse_for_identical_replicates() {
        let theta = crate::model::reference_config(2).to_canonical().to_vec();
        let r = BootstrapResult::from_replicates(
            CANONICAL_NAMES.iter().map(|s| s.to_string()).collect(),
            vec![theta; 4],
            0.95,
        )
        .unwrap();
        // identical parameters with identical substreams give identical curves
        let curves: Vec<ChiCurve> = (0..4)
            .map(|_| {
                let p = SbgpParams::from_canonical_projected(&r.replicates[0]).unwrap();
                mc_chi_curve(&p, &[0.5, 0.9], 2000, &mut RngState::seed_from_u64(9)).unwrap()
            })
            .collect();
        let b = chi_bands_from_curves(&curves, 0.95).unwrap();
        assert_eq!(b.lower, b.upper);
        let b = bootstrap_chi_bands(&r, &[0.5, 0.9], 2000, &RngState::seed_from_u64(3)).unwrap();
        for k in 0..2 {
            assert!(b.lower.values[k] <= b.median.values[k] && b.median.values[k] <= b.upper.values[k]);
        }
    }

    #[test]
    fn csv_and_summary() {
        let s = normal_sample(100, 7);
        let r = nonparam_bootstrap_with(&s, mean_sd, &names(), 3, 0.95, &RngState::seed_from_u64(1)).unwrap();
        let mut out = Vec::new();
        r.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("rep,m,sd\n1,"));
        assert_eq!(text.lines().count(), 4);
        let j: serde_json::Value = serde_json::from_str(&r.summary_json().unwrap()).unwrap();
        assert_eq!(j["replicates"], 3);
        assert_eq!(j["intervals"][1]["name"], "sd");
    }
}
