//! Goodness-of-fit statistics and small summaries.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

const Z95: f64 = 1.959_963_984_540_054;

/// sup_x |F_n(x) - F(x)|, checking both sides of every jump of F_n.
///
/// The left limit of `cdf` at a sample value v is taken at v - 1e-9(1+|v|),
/// so atoms of a discrete target are handled correctly.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::domain("KS distance of an empty sample"));
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::domain("KS distance of a sample containing NaN"));
    }
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < xs.len() {
        let v = xs[i];
        let mut j = i;
        while j < xs.len() && xs[j] == v {
            j += 1;
        }
        let below = i as f64 / n;
        let upto = j as f64 / n;
        let left = cdf(v - 1e-9 * (1.0 + v.abs()));
        d = d.max((upto - cdf(v)).abs()).max((below - left).abs());
        i = j;
    }
    Ok(d)
}

/// Half the ℓ¹ distance between two pmfs on a common support.
pub fn tv_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || a.len() != b.len() {
        return Err(Error::domain("pmfs must be nonempty and share a support"));
    }
    Ok(0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>())
}

/// TV distance of two integer-indexed pmfs; missing atoms count as zero.
pub fn tv_distance_keyed(a: &BTreeMap<i64, f64>, b: &BTreeMap<i64, f64>) -> Result<f64> {
    if a.is_empty() && b.is_empty() {
        return Err(Error::domain("TV distance of two empty pmfs"));
    }
    let keys: std::collections::BTreeSet<i64> = a.keys().chain(b.keys()).copied().collect();
    Ok(0.5
        * keys
            .iter()
            .map(|k| (a.get(k).unwrap_or(&0.0) - b.get(k).unwrap_or(&0.0)).abs())
            .sum::<f64>())
}

pub fn empirical_pmf(samples: &[i64]) -> Result<BTreeMap<i64, f64>> {
    if samples.is_empty() {
        return Err(Error::domain("empirical pmf of an empty sample"));
    }
    let mut out = BTreeMap::new();
    for &x in samples {
        *out.entry(x).or_insert(0.0) += 1.0;
    }
    let n = samples.len() as f64;
    out.values_mut().for_each(|v| *v /= n);
    Ok(out)
}

/// 95% Wilson score interval.
pub fn wilson_interval(successes: u64, trials: u64) -> Result<(f64, f64)> {
    if trials == 0 || successes > trials {
        return Err(Error::domain(format!("invalid counts {successes}/{trials}")));
    }
    let n = trials as f64;
    let ph = successes as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let centre = (ph + z2 / (2.0 * n)) / denom;
    let half = Z95 * (ph * (1.0 - ph) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    // the bounds are exactly 0 and 1 at the extremes; keep them free of rounding
    let lo = if successes == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if successes == trials { 1.0 } else { (centre + half).min(1.0) };
    Ok((lo, hi))
}

/// Mean and standard error of the mean.
pub fn mean_se(xs: &[f64]) -> Result<(f64, f64)> {
    if xs.is_empty() {
        return Err(Error::domain("mean of an empty sample"));
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() == 1 {
        return Ok((mean, f64::INFINITY));
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok((mean, (var / n).sqrt()))
}

/// Linear-interpolation quantile (the usual "type 7").
pub fn quantile(xs: &[f64], level: f64) -> Result<f64> {
    if xs.is_empty() || !(0.0..=1.0).contains(&level) {
        return Err(Error::domain("quantile needs a nonempty sample and a level in [0, 1]"));
    }
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let h = level * (v.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    Ok(v[lo] + (h - lo as f64) * (v[hi] - v[lo]))
}

/// Least-squares slope of y on x.
pub fn ls_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::domain("slope needs at least two paired points"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::domain("slope undefined for constant abscissae"));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_on_a_point_mass() {
        let cdf = |x: f64| if x >= 0.0 { 1.0 } else { 0.0 };
        assert_eq!(ks_distance(&[0.0; 10], cdf).unwrap(), 0.0);
        assert_eq!(ks_distance(&[1.0; 10], cdf).unwrap(), 1.0);
        assert!(ks_distance(&[], cdf).is_err());
    }

    #[test]
    fn ks_uniform_grid() {
        let xs: Vec<f64> = (1..=100).map(|i| (i as f64 - 0.5) / 100.0).collect();
        let d = ks_distance(&xs, |x| x.clamp(0.0, 1.0)).unwrap();
        assert!((d - 0.005).abs() < 1e-12);
    }

    #[test]
    fn tv_cases() {
        assert_eq!(tv_distance(&[0.2, 0.8], &[0.2, 0.8]).unwrap(), 0.0);
        assert_eq!(tv_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert!(tv_distance(&[1.0], &[0.5, 0.5]).is_err());
        let a = BTreeMap::from([(0, 1.0)]);
        let b = BTreeMap::from([(3, 1.0)]);
        assert_eq!(tv_distance_keyed(&a, &b).unwrap(), 1.0);
    }

    #[test]
    fn wilson_reference() {
        // 10/100: (0.05523, 0.17437)
        let (lo, hi) = wilson_interval(10, 100).unwrap();
        assert!((lo - 0.055_229_9).abs() < 1e-6 && (hi - 0.174_366_3).abs() < 1e-6);
        let (lo, hi) = wilson_interval(0, 50).unwrap();
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.1);
        assert!(wilson_interval(1, 0).is_err());
    }

    #[test]
    fn summaries() {
        let (m, se) = mean_se(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(m, 2.5);
        assert!((se - (5.0f64 / 12.0).sqrt()).abs() < 1e-12);
        assert_eq!(quantile(&[3.0, 1.0, 2.0], 0.5).unwrap(), 2.0);
        assert_eq!(quantile(&[0.0, 10.0], 0.95).unwrap(), 9.5);
        assert!((ls_slope(&[0.0, 1.0, 2.0], &[1.0, -1.0, -3.0]).unwrap() + 2.0).abs() < 1e-12);
        let pmf = empirical_pmf(&[1, 1, 2, 5]).unwrap();
        assert_eq!(pmf[&1], 0.5);
    }
}
