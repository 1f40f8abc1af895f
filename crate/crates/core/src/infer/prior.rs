use super::Transform;
use crate::seed::Rng;
use crate::{Error, Result};
use rand::Rng as _;
use rand_distr::{Beta, Distribution, Gamma, LogNormal, Normal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal as SNormal};
use statrs::function::beta::ln_beta;
use statrs::function::gamma::ln_gamma;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Prior distribution of one parameter. Truncation bounds left out of a
/// truncated normal are infinite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Prior {
    Uniform { lo: f64, hi: f64 },
    Normal { mean: f64, sd: f64 },
    TruncatedNormal {
        mean: f64,
        sd: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lo: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        hi: Option<f64>,
    },
    /// `log x ~ N(mu, sigma)`.
    LogNormal { mu: f64, sigma: f64 },
    Gamma { shape: f64, rate: f64 },
    Beta { a: f64, b: f64 },
}

fn std_normal() -> SNormal {
    SNormal::new(0.0, 1.0).expect("valid")
}

impl Prior {
    pub fn uniform(lo: f64, hi: f64) -> Self {
        Prior::Uniform { lo, hi }
    }

    pub fn normal(mean: f64, sd: f64) -> Self {
        Prior::Normal { mean, sd }
    }

    pub fn truncated_normal(mean: f64, sd: f64, lo: f64, hi: f64) -> Self {
        Prior::TruncatedNormal {
            mean,
            sd,
            lo: lo.is_finite().then_some(lo),
            hi: hi.is_finite().then_some(hi),
        }
    }

    pub fn log_normal(mu: f64, sigma: f64) -> Self {
        Prior::LogNormal { mu, sigma }
    }

    pub fn gamma(shape: f64, rate: f64) -> Self {
        Prior::Gamma { shape, rate }
    }

    pub fn beta(a: f64, b: f64) -> Self {
        Prior::Beta { a, b }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidPrior(format!("{m}: {self:?}")));
        match *self {
            Prior::Uniform { lo, hi } if !(lo < hi && lo.is_finite() && hi.is_finite()) => bad("need finite lo < hi"),
            Prior::Normal { mean, sd } if !(sd > 0.0 && mean.is_finite() && sd.is_finite()) => bad("need sd > 0"),
            Prior::TruncatedNormal { mean, sd, .. } if !(sd > 0.0 && mean.is_finite() && sd.is_finite()) => {
                bad("need sd > 0")
            }
            Prior::TruncatedNormal { .. } => {
                let (lo, hi) = self.support();
                if !(lo < hi) || lo.is_nan() || hi.is_nan() {
                    return bad("need lo < hi");
                }
                if !(self.normalizer() > 0.0) {
                    return bad("truncation interval has no mass");
                }
                Ok(())
            }
            Prior::LogNormal { mu, sigma } if !(sigma > 0.0 && mu.is_finite() && sigma.is_finite()) => {
                bad("need sigma > 0")
            }
            Prior::Gamma { shape, rate } if !(shape > 0.0 && rate > 0.0 && shape.is_finite() && rate.is_finite()) => {
                bad("need shape, rate > 0")
            }
            Prior::Beta { a, b } if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) => bad("need a, b > 0"),
            _ => Ok(()),
        }
    }

    /// Open support interval.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            Prior::Uniform { lo, hi } => (lo, hi),
            Prior::Normal { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            Prior::TruncatedNormal { lo, hi, .. } => (lo.unwrap_or(f64::NEG_INFINITY), hi.unwrap_or(f64::INFINITY)),
            Prior::LogNormal { .. } | Prior::Gamma { .. } => (0.0, f64::INFINITY),
            Prior::Beta { .. } => (0.0, 1.0),
        }
    }

    /// Bijection from the real line onto the support.
    pub fn transform(&self) -> Transform {
        Transform::for_support(self.support())
    }

    fn normalizer(&self) -> f64 {
        match *self {
            Prior::TruncatedNormal { mean, sd, .. } => {
                let (lo, hi) = self.support();
                let n = std_normal();
                let (a, b) = ((lo - mean) / sd, (hi - mean) / sd);
                // upper-tail form keeps precision when both bounds sit above the mean
                if a > 0.0 { n.sf(a) - n.sf(b) } else { n.cdf(b) - n.cdf(a) }
            }
            _ => 1.0,
        }
    }

    pub fn log_density(&self, x: f64) -> f64 {
        let (lo, hi) = self.support();
        if !(x > lo && x < hi) && !(matches!(self, Prior::Normal { .. }) && x.is_finite()) {
            return f64::NEG_INFINITY;
        }
        match *self {
            Prior::Uniform { lo, hi } => -(hi - lo).ln(),
            Prior::Normal { mean, sd } => {
                let z = (x - mean) / sd;
                -LN_SQRT_2PI - sd.ln() - 0.5 * z * z
            }
            Prior::TruncatedNormal { mean, sd, .. } => {
                let z = (x - mean) / sd;
                -LN_SQRT_2PI - sd.ln() - 0.5 * z * z - self.normalizer().ln()
            }
            Prior::LogNormal { mu, sigma } => {
                let z = (x.ln() - mu) / sigma;
                -LN_SQRT_2PI - sigma.ln() - x.ln() - 0.5 * z * z
            }
            Prior::Gamma { shape, rate } => shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * x.ln() - rate * x,
            Prior::Beta { a, b } => (a - 1.0) * x.ln() + (b - 1.0) * (-x).ln_1p() - ln_beta(a, b),
        }
    }

    pub fn sample(&self, rng: &mut Rng) -> f64 {
        match *self {
            Prior::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            Prior::Normal { mean, sd } => Normal::new(mean, sd).expect("validated").sample(rng),
            Prior::TruncatedNormal { mean, sd, .. } => {
                let (lo, hi) = self.support();
                let n = std_normal();
                let (pa, pb) = (n.cdf((lo - mean) / sd), n.cdf((hi - mean) / sd));
                if pb - pa > 1e-3 {
                    loop {
                        let u = pa + (pb - pa) * rng.random::<f64>();
                        let x = mean + sd * n.inverse_cdf(u);
                        if x > lo && x < hi {
                            return x;
                        }
                    }
                }
                let (a, b) = ((lo - mean) / sd, (hi - mean) / sd);
                mean + sd * tail_normal(a, b, rng)
            }
            Prior::LogNormal { mu, sigma } => LogNormal::new(mu, sigma).expect("validated").sample(rng),
            Prior::Gamma { shape, rate } => Gamma::new(shape, 1.0 / rate).expect("validated").sample(rng),
            Prior::Beta { a, b } => Beta::new(a, b).expect("validated").sample(rng),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Prior::Uniform { lo, hi } => 0.5 * (lo + hi),
            Prior::Normal { mean, .. } => mean,
            Prior::TruncatedNormal { mean, sd, .. } => {
                let (lo, hi) = self.support();
                let (a, b) = ((lo - mean) / sd, (hi - mean) / sd);
                let pdf = |z: f64| if z.is_finite() { (-0.5 * z * z - LN_SQRT_2PI).exp() } else { 0.0 };
                mean + sd * (pdf(a) - pdf(b)) / self.normalizer().max(f64::MIN_POSITIVE)
            }
            Prior::LogNormal { mu, sigma } => (mu + 0.5 * sigma * sigma).exp(),
            Prior::Gamma { shape, rate } => shape / rate,
            Prior::Beta { a, b } => a / (a + b),
        }
    }
}

/// Standard normal restricted to a low-mass interval `(a, b)`.
fn tail_normal(a: f64, b: f64, rng: &mut Rng) -> f64 {
    if b.is_finite() && a.is_finite() && b - a < 1.0 {
        // narrow box: uniform proposal under the peak of the interval
        let peak = if a > 0.0 { a } else if b < 0.0 { b } else { 0.0 };
        loop {
            let z = a + (b - a) * rng.random::<f64>();
            if z > a && z < b && rng.random::<f64>().ln() < 0.5 * (peak * peak - z * z) {
                return z;
            }
        }
    }
    // exponential proposal on the one-sided tail
    let (lo, hi, sign) = if a > 0.0 || !b.is_finite() && a.is_finite() { (a, b, 1.0) } else { (-b, -a, -1.0) };
    let alpha = 0.5 * (lo + (lo * lo + 4.0).sqrt());
    loop {
        let z = lo - rng.random::<f64>().ln() / alpha;
        if z < hi && rng.random::<f64>().ln() < -0.5 * (z - alpha).powi(2) {
            return sign * z;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;
    use approx::assert_relative_eq;

    fn integrate(p: &Prior) -> f64 {
        // composite Simpson in the unconstrained coordinate
        let t = p.transform();
        let (a, b, n) = (-40.0, 40.0, 160_000);
        let h = (b - a) / n as f64;
        let g = |u: f64| {
            let x = t.to_constrained(u);
            let v = (p.log_density(x) + t.log_jacobian(u)).exp();
            if v.is_finite() { v } else { 0.0 }
        };
        let mut s = g(a) + g(b);
        for i in 1..n {
            s += g(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    fn all() -> Vec<Prior> {
        vec![
            Prior::uniform(-100.0, 100.0),
            Prior::normal(1.0, 2.0),
            Prior::truncated_normal(1.0, 1.0, 0.0, 100.0),
            Prior::truncated_normal(0.0, 0.5, -1.0, 0.99),
            Prior::truncated_normal(1.0, 1.0, 0.0, f64::INFINITY),
            Prior::log_normal(-2.5, 3.0),
            Prior::log_normal(4.0, 0.5),
            Prior::gamma(2.5, 0.05),
            Prior::beta(4.0, 2.0),
        ]
    }

    #[test]
    fn densities_integrate_to_one() {
        for p in all() {
            p.validate().unwrap();
            assert_relative_eq!(integrate(&p), 1.0, max_relative = 1e-6);
        }
    }

    #[test]
    fn sample_means() {
        let mut rng = rng_from_seed(7);
        for p in all() {
            let n = 40_000;
            let xs: Vec<f64> = (0..n).map(|_| p.sample(&mut rng)).collect();
            let (lo, hi) = p.support();
            assert!(xs.iter().all(|&x| x > lo && x < hi));
            let m = xs.iter().sum::<f64>() / n as f64;
            let sd = (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n as f64).sqrt();
            assert!((m - p.mean()).abs() < 5.0 * sd / (n as f64).sqrt(), "{p:?}: {m} vs {}", p.mean());
        }
    }

    #[test]
    fn far_tail_truncation_samples() {
        let p = Prior::truncated_normal(0.0, 1.0, 6.0, f64::INFINITY);
        p.validate().unwrap();
        let mut rng = rng_from_seed(1);
        for _ in 0..100 {
            assert!(p.sample(&mut rng) > 6.0);
        }
        assert!(p.log_density(6.5).is_finite());
    }

    #[test]
    fn invalid_priors() {
        assert!(Prior::uniform(1.0, 1.0).validate().is_err());
        assert!(Prior::normal(0.0, 0.0).validate().is_err());
        assert!(Prior::gamma(1.0, -1.0).validate().is_err());
        assert!(Prior::truncated_normal(0.0, 1.0, 2.0, 1.0).validate().is_err());
        assert!(Prior::beta(0.0, 1.0).validate().is_err());
    }

    #[test]
    fn json_form() {
        let p: Prior = serde_json::from_str(r#"{"kind":"truncated_normal","mean":1,"sd":1,"lo":0}"#).unwrap();
        assert_eq!(p, Prior::truncated_normal(1.0, 1.0, 0.0, f64::INFINITY));
        let g: Prior = serde_json::from_str(r#"{"kind":"gamma","shape":2.5,"rate":0.05}"#).unwrap();
        assert_relative_eq!(g.mean(), 50.0);
    }
}
