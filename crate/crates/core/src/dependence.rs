//! Rank-based tail-dependence estimators.

use std::io::Write;
use std::path::Path;

use crate::error::{domain, Error, Result};
use crate::model::SbgpParams;
use crate::rng::RngState;
use crate::sample::{format_f64, Sample};

/// Per-column ranks `1..=n`, ties broken by row order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankMatrix {
    rows: Vec<[u32; 2]>,
}

impl RankMatrix {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[[u32; 2]] {
        &self.rows
    }

    /// `χ̂(q)` from precomputed ranks.
    pub fn chi_hat(&self, q: f64) -> Result<f64> {
        check_level(q)?;
        let n = self.rows.len();
        let t = (n as f64 + 1.0) * q;
        let count = self
            .rows
            .iter()
            .filter(|r| r[0] as f64 > t && r[1] as f64 > t)
            .count();
        Ok(count as f64 / (n as f64 * (1.0 - q)))
    }
}

fn check_level(q: f64) -> Result<()> {
    if !(0.0..1.0).contains(&q) {
        return domain(format!("level q must lie in [0, 1), got {q}"));
    }
    Ok(())
}

fn column_ranks(col: &[f64]) -> Vec<u32> {
    let mut idx: Vec<usize> = (0..col.len()).collect();
    idx.sort_by(|&a, &b| col[a].total_cmp(&col[b]));
    let mut r = vec![0u32; col.len()];
    for (pos, &i) in idx.iter().enumerate() {
        r[i] = pos as u32 + 1;
    }
    r
}

pub fn ranks(sample: &Sample) -> Result<RankMatrix> {
    if sample.len() < 2 {
        return domain(format!("ranks need at least 2 rows, got {}", sample.len()));
    }
    let r1 = column_ranks(&sample.column(0));
    let r2 = column_ranks(&sample.column(1));
    Ok(RankMatrix {
        rows: r1.into_iter().zip(r2).map(|(a, b)| [a, b]).collect(),
    })
}

/// Empirical `χ(q)`: proportion of joint rank exceedances of `(N+1)q`,
/// divided by `1-q`.
pub fn chi_hat(sample: &Sample, q: f64) -> Result<f64> {
    check_level(q)?;
    ranks(sample)?.chi_hat(q)
}

/// `η(q) = log(1-q) / (log(1-q) + log χ(q))`.
pub fn eta_from_chi(q: f64, chi_q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return domain(format!("level q must lie in (0, 1), got {q}"));
    }
    if !(chi_q > 0.0) {
        return Err(Error::NoJointExceedances(q));
    }
    let l = (-q).ln_1p();
    Ok(l / (l + chi_q.ln()))
}

/// Hill-type estimator of `η` on `Z_i = min_j 1/(1-U_ij)` with
/// `k = ⌊n/10⌋` upper order statistics.
pub fn eta_hill(sample: &Sample) -> Result<f64> {
    eta_hill_with_k(sample, None)
}

pub fn eta_hill_with_k(sample: &Sample, k: Option<usize>) -> Result<f64> {
    let n = sample.len();
    if n < 20 {
        return domain(format!("eta_hill needs at least 20 rows, got {n}"));
    }
    let k = k.unwrap_or(n / 10);
    if k < 1 || k >= n {
        return domain(format!("k must lie in 1..{n}, got {k}"));
    }
    let r = ranks(sample)?;
    let np1 = n as f64 + 1.0;
    let mut z: Vec<f64> = r
        .rows()
        .iter()
        .map(|row| {
            let a = np1 / (np1 - row[0] as f64);
            let b = np1 / (np1 - row[1] as f64);
            a.min(b)
        })
        .collect();
    z.sort_by(f64::total_cmp);
    let base = z[n - k - 1].ln();
    let sum: f64 = z[n - k..].iter().map(|v| v.ln() - base).sum();
    Ok(sum / k as f64)
}

/// Paired levels and `χ̂` values.
#[derive(Debug, Clone, PartialEq)]
pub struct ChiCurve {
    pub levels: Vec<f64>,
    pub values: Vec<f64>,
}

impl ChiCurve {
    pub fn new(levels: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if levels.len() != values.len() {
            return domain("levels and values must have equal length");
        }
        check_levels(&levels)?;
        if values.iter().any(|v| !v.is_finite()) {
            return domain("chi values must be finite");
        }
        Ok(Self { levels, values })
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// `η(q)` per level, `None` where there are no joint exceedances.
    pub fn eta(&self) -> Vec<Option<f64>> {
        self.levels
            .iter()
            .zip(&self.values)
            .map(|(&q, &c)| eta_from_chi(q, c).ok())
            .collect()
    }

    /// CSV with header `q,chi` or `q,chi,eta`; missing `η` is written as `NA`.
    pub fn write_csv<W: Write>(&self, mut w: W, with_eta: bool) -> Result<()> {
        if with_eta {
            writeln!(w, "q,chi,eta")?;
            for ((q, c), e) in self.levels.iter().zip(&self.values).zip(self.eta()) {
                let e = e.map(format_f64).unwrap_or_else(|| "NA".into());
                writeln!(w, "{},{},{}", format_f64(*q), format_f64(*c), e)?;
            }
        } else {
            writeln!(w, "q,chi")?;
            for (q, c) in self.levels.iter().zip(&self.values) {
                writeln!(w, "{},{}", format_f64(*q), format_f64(*c))?;
            }
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path, with_eta: bool) -> Result<()> {
        let f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_csv(f, with_eta)
    }
}

fn check_levels(levels: &[f64]) -> Result<()> {
    for &q in levels {
        check_level(q)?;
    }
    if levels.windows(2).any(|p| p[1] <= p[0]) {
        return domain("levels must be strictly increasing");
    }
    Ok(())
}

/// `count` evenly spaced levels from `lo` to `hi` inclusive.
pub fn level_grid(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if count == 0 {
        return domain("level grid needs at least one point");
    }
    if count == 1 {
        check_level(lo)?;
        return Ok(vec![lo]);
    }
    let step = (hi - lo) / (count - 1) as f64;
    let v: Vec<f64> = (0..count).map(|i| lo + step * i as f64).collect();
    check_levels(&v)?;
    Ok(v)
}

pub fn chi_curve(sample: &Sample, levels: &[f64]) -> Result<ChiCurve> {
    check_levels(levels)?;
    let r = ranks(sample)?;
    let values = levels
        .iter()
        .map(|&q| r.chi_hat(q))
        .collect::<Result<Vec<_>>>()?;
    ChiCurve::new(levels.to_vec(), values)
}

/// Model-implied curve: `χ̂` on one simulated sample of size `n_mc`.
pub fn mc_chi_curve(
    p: &SbgpParams,
    levels: &[f64],
    n_mc: usize,
    rng: &mut RngState,
) -> Result<ChiCurve> {
    if n_mc < 1000 {
        return domain(format!("Monte Carlo size must be >= 1000, got {n_mc}"));
    }
    check_levels(levels)?;
    chi_curve(&p.sample(n_mc, rng)?, levels)
}

/// Default Monte Carlo size for curves attached to a single fit.
pub const MC_FIT_SIZE: usize = 10_000;
/// Default Monte Carlo size for reference curves.
pub const MC_REFERENCE_SIZE: usize = 100_000;

#[cfg(test)]
mod tests {
    use super::*;

    fn uniforms(n: usize, seed: u64) -> Sample {
        let mut rng = RngState::seed_from_u64(seed);
        Sample::new((0..n).map(|_| [rng.open01(), rng.open01()]).collect())
    }

    #[test]
    fn rank_examples() {
        let s = Sample::from_columns(&[3.0, 1.0, 2.0], &[1.0, 1.0, 0.0]).unwrap();
        let r = ranks(&s).unwrap();
        assert_eq!(r.rows(), &[[3, 2], [1, 3], [2, 1]]);
        let s = Sample::from_columns(&[1.0, 2.0, 5.0], &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(ranks(&s).unwrap().rows(), &[[1, 1], [2, 2], [3, 3]]);
        assert!(ranks(&Sample::new(vec![[1.0, 2.0]])).is_err());
    }

    #[test]
    fn comonotone_chi_counts_strict_exceedances() {
        let n = 1000;
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let s = Sample::from_columns(&x, &x).unwrap();
        for &q in &[0.5, 0.77, 0.9, 0.99] {
            let t = (n as f64 + 1.0) * q;
            let expected = (n - t.floor() as usize) as f64 / (n as f64 * (1.0 - q));
            assert_eq!(chi_hat(&s, q).unwrap(), expected);
            assert!((expected - 1.0).abs() < 0.1);
        }
        assert!(chi_hat(&s, 1.0).is_err());
    }

    #[test]
    fn independence() {
        let s = uniforms(100_000, 5);
        let c = chi_curve(&s, &[0.5, 0.9]).unwrap();
        assert!((c.values[0] - 0.5).abs() < 0.02);
        assert!((c.values[1] - 0.1).abs() < 0.02);
        let e = eta_hill(&s).unwrap();
        assert!((0.45..=0.55).contains(&e), "{e}");
    }

    #[test]
    fn comonotone_hill_near_one() {
        let n = 100_000;
        let x: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let s = Sample::from_columns(&x, &x).unwrap();
        let e = eta_hill(&s).unwrap();
        assert!((0.9..=1.1).contains(&e), "{e}");
        assert!(eta_hill(&uniforms(19, 1)).is_err());
    }

    #[test]
    fn eta_from_chi_values() {
        assert_eq!(eta_from_chi(0.9, 1.0).unwrap(), 1.0);
        assert!((eta_from_chi(0.9, 0.1).unwrap() - 0.5).abs() < 1e-12);
        assert!((eta_from_chi(0.99, 0.1).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert!(matches!(eta_from_chi(0.9, 0.0), Err(Error::NoJointExceedances(_))));
    }

    #[test]
    fn rank_invariance() {
        let mut rng = RngState::seed_from_u64(9);
        let p = SbgpParams::new(2.0, 1.0, 0.5, 1.0, 2.0, 0.3, 0.5).unwrap();
        let s = p.sample(5000, &mut rng).unwrap();
        let t = s.map_column(0, f64::exp).map_column(1, |y| y * y * y);
        let levels = level_grid(0.1, 0.95, 18).unwrap();
        assert_eq!(chi_curve(&s, &levels).unwrap(), chi_curve(&t, &levels).unwrap());
        assert_eq!(eta_hill(&s).unwrap(), eta_hill(&t).unwrap());
    }

    #[test]
    fn counts_are_integers_and_bounded() {
        let s = uniforms(777, 3);
        for &q in &[0.0, 0.3, 0.91, 0.999] {
            let c = chi_hat(&s, q).unwrap();
            let count = c * 777.0 * (1.0 - q);
            assert!((count - count.round()).abs() < 1e-9);
            assert!(c >= 0.0 && c <= 1.0 / (1.0 - q) + 1e-12);
        }
        // (N+1)q >= N leaves no exceedances
        assert_eq!(chi_hat(&s, 0.9995).unwrap(), 0.0);
    }

    #[test]
    fn curve_csv() {
        let s = uniforms(200, 4);
        let c = chi_curve(&s, &[0.5, 0.995]).unwrap();
        let mut out = Vec::new();
        c.write_csv(&mut out, true).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "q,chi,eta");
        assert_eq!(lines.len(), 3);
        assert!(lines[2].ends_with(",NA"));
    }

    #[test]
    fn levels_must_increase() {
        let s = uniforms(100, 4);
        assert!(chi_curve(&s, &[0.5, 0.5]).is_err());
        assert_eq!(level_grid(0.5, 0.999, 50).unwrap().len(), 50);
    }

    #[test]
    fn mc_curve_needs_size() {
        let mut rng = RngState::seed_from_u64(0);
        let p = crate::model::reference_config(1);
        assert!(mc_chi_curve(&p, &[0.5], 999, &mut rng).is_err());
    }
}
