//! Convergence diagnostics and sample summaries.

use crate::{Error, Result};
use statrs::distribution::{ContinuousCDF, Normal};

/// Linear-interpolation quantile of unsorted data.
pub fn quantile(values: &[f64], p: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, p)
}

pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        n => {
            let h = p.clamp(0.0, 1.0) * (n - 1) as f64;
            let lo = h.floor() as usize;
            let hi = (lo + 1).min(n - 1);
            sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
        }
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn var(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
}

/// Classic potential scale reduction over equal-length chains.
fn basic_rhat(chains: &[Vec<f64>]) -> f64 {
    let n = chains[0].len() as f64;
    let means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
    let w = mean(&chains.iter().map(|c| var(c)).collect::<Vec<_>>());
    let b = n * var(&means);
    if !(w > 0.0) {
        return if b > 0.0 { f64::INFINITY } else { 1.0 };
    }
    (((n - 1.0) / n * w + b / n) / w).sqrt()
}

/// Normal scores of pooled ranks (ties share their average rank).
fn rank_normalize(chains: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut flat: Vec<(f64, usize)> = chains.iter().flatten().copied().zip(0..).collect();
    flat.sort_by(|a, b| a.0.total_cmp(&b.0));
    let s = flat.len();
    let mut z = vec![0.0; s];
    let std = Normal::new(0.0, 1.0).expect("valid");
    let mut i = 0;
    while i < s {
        let mut j = i;
        while j + 1 < s && flat[j + 1].0 == flat[i].0 {
            j += 1;
        }
        let rank = 0.5 * (i + j) as f64 + 1.0;
        let score = std.inverse_cdf((rank - 0.375) / (s as f64 + 0.25));
        for k in i..=j {
            z[flat[k].1] = score;
        }
        i = j + 1;
    }
    let n = chains[0].len();
    z.chunks(n).map(<[f64]>::to_vec).collect()
}

/// Rank-normalized split R̂ (maximum of the bulk and folded versions).
///
/// `chains[c]` holds one parameter's draws from chain `c`.
pub fn rhat(chains: &[Vec<f64>]) -> Result<f64> {
    if chains.len() < 2 {
        return Err(Error::InvalidArgument("R-hat needs at least 2 chains".into()));
    }
    let n = chains[0].len();
    if n < 4 || chains.iter().any(|c| c.len() != n) {
        return Err(Error::InvalidArgument("R-hat needs equal-length chains of at least 4 draws".into()));
    }
    if chains.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("non-finite draw".into()));
    }
    let half = n / 2;
    let split: Vec<Vec<f64>> =
        chains.iter().flat_map(|c| [c[..half].to_vec(), c[n - half..].to_vec()]).collect();
    let bulk = basic_rhat(&rank_normalize(&split));
    let med = quantile(&split.concat(), 0.5);
    let folded: Vec<Vec<f64>> = split.iter().map(|c| c.iter().map(|x| (x - med).abs()).collect()).collect();
    let tail = basic_rhat(&rank_normalize(&folded));
    Ok(bulk.max(tail))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;
    use rand_distr::{Distribution, StandardNormal};

    fn normals(seed: u64, n: usize) -> Vec<f64> {
        let mut rng = rng_from_seed(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    #[test]
    fn identical_chains() {
        let c = normals(1, 1000);
        let r = rhat(&[c.clone(), c.clone(), c]).unwrap();
        assert!(r < 1.0 + 2.0 / 1000.0, "{r}");
        assert!((r - 1.0).abs() < 1e-2);
    }

    #[test]
    fn constant_chains() {
        assert!(rhat(&[vec![1.0; 10], vec![2.0; 10]]).unwrap() > 10.0);
        assert_eq!(rhat(&[vec![3.0; 10], vec![3.0; 10]]).unwrap(), 1.0);
    }

    #[test]
    fn iid_normal_chains() {
        let chains: Vec<Vec<f64>> = (0..4).map(|k| normals(10 + k, 10_000)).collect();
        assert!(rhat(&chains).unwrap() < 1.01);
    }

    #[test]
    fn shifted_chain_detected() {
        let mut chains: Vec<Vec<f64>> = (0..4).map(|k| normals(20 + k, 500)).collect();
        chains[0].iter_mut().for_each(|x| *x += 3.0);
        assert!(rhat(&chains).unwrap() > 1.1);
    }

    #[test]
    fn bad_input() {
        assert!(rhat(&[vec![1.0; 10]]).is_err());
        assert!(rhat(&[vec![1.0; 3], vec![1.0; 3]]).is_err());
        assert!(rhat(&[vec![1.0; 5], vec![1.0; 6]]).is_err());
    }

    #[test]
    fn quantiles() {
        let v = [3.0, 1.0, 2.0, 4.0];
        assert_eq!(quantile(&v, 0.5), 2.5);
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 1.0), 4.0);
    }
}
