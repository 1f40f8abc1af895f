use crate::infer::{nelder_mead, NelderMeadOptions};
use crate::likelihood::kalman_concentrated;
use crate::noise::pacf_to_ar;
use crate::{Error, NoiseModel, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

/// Default parsimony window in AIC units.
pub const DEFAULT_PARSIMONY: f64 = 2.0;
/// Orders `p + q` at or above this are flagged as an identifiability risk.
pub const COMPLEX_ORDER: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AicRow {
    pub p: usize,
    pub q: usize,
    pub loglik: f64,
    /// Free parameters: `p + q + 1` (σ counted).
    pub k: usize,
    pub aic: f64,
    /// `aic - min aic` over converged rows.
    pub delta_aic: f64,
    /// `100 (aic - min) / |min|`.
    pub pct_diff: f64,
    pub converged: bool,
    pub sigma: f64,
    pub rho: Vec<f64>,
    pub phi: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AicTable {
    pub rows: Vec<AicRow>,
    pub best: (usize, usize),
}

#[derive(Serialize)]
struct CsvRow<'a> {
    p: usize,
    q: usize,
    loglik: f64,
    k: usize,
    aic: f64,
    delta_aic: f64,
    pct_diff: f64,
    converged: bool,
    sigma: f64,
    rho: &'a str,
    phi: &'a str,
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

impl AicTable {
    pub fn get(&self, p: usize, q: usize) -> Option<&AicRow> {
        self.rows.iter().find(|r| r.p == p && r.q == q)
    }

    pub fn best_row(&self) -> &AicRow {
        self.get(self.best.0, self.best.1).expect("best row present")
    }

    pub fn min_aic(&self) -> f64 {
        self.best_row().aic
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for r in &self.rows {
            let (rho, phi) = (join(&r.rho), join(&r.phi));
            w.serialize(CsvRow {
                p: r.p,
                q: r.q,
                loglik: r.loglik,
                k: r.k,
                aic: r.aic,
                delta_aic: r.delta_aic,
                pct_diff: r.pct_diff,
                converged: r.converged,
                sigma: r.sigma,
                rho: &rho,
                phi: &phi,
            })?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_file(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// `(rho, phi)` from unconstrained values: partial autocorrelations
/// `tanh(u)` give a stationary AR part; the MA part uses the same map with a
/// sign flip so it is invertible.
pub fn arma_from_unconstrained(u: &[f64], p: usize) -> (Vec<f64>, Vec<f64>) {
    let rho = pacf_to_ar(&u[..p].iter().map(|v| v.tanh()).collect::<Vec<_>>());
    let phi = pacf_to_ar(&u[p..].iter().map(|v| v.tanh()).collect::<Vec<_>>()).into_iter().map(|a| -a).collect();
    (rho, phi)
}

const STARTS: [f64; 3] = [0.0, 0.4, -0.4];

/// Maximizes the exact (Kalman, stationary start) concentrated likelihood
/// of a zero-mean ARMA(p, q).
pub fn fit_arma(eps: &[f64], p: usize, q: usize) -> AicRow {
    let k = p + q + 1;
    let neg = |u: &[f64]| {
        let (rho, phi) = arma_from_unconstrained(u, p);
        kalman_concentrated(eps, &rho, &phi).map(|(l, _)| -l).unwrap_or(f64::INFINITY)
    };
    let opts = NelderMeadOptions { max_evals: 4000 * (p + q).max(1), f_tol: 1e-10, x_tol: 1e-5, step: 0.2 };
    let mut best: Option<(Vec<f64>, f64, bool)> = None;
    let starts: &[f64] = if p + q == 0 { &STARTS[..1] } else { &STARTS };
    for &s in starts {
        let mut m = nelder_mead(neg, &vec![s; p + q], &opts);
        for _ in 0..4 {
            let again = nelder_mead(neg, &m.x, &NelderMeadOptions { step: 0.05, ..opts.clone() });
            let gain = m.f - again.f;
            if again.f <= m.f {
                m = again;
            }
            if gain <= 1e-9 * (1.0 + m.f.abs()) {
                break;
            }
        }
        if best.as_ref().is_none_or(|b| m.f < b.1) {
            best = Some((m.x, m.f, m.converged));
        }
    }
    let (u, f, converged) = best.expect("at least one start");
    let (rho, phi) = arma_from_unconstrained(&u, p);
    let (loglik, sigma) = kalman_concentrated(eps, &rho, &phi).unwrap_or((f64::NEG_INFINITY, f64::NAN));
    let converged = converged && f.is_finite();
    AicRow {
        p,
        q,
        loglik,
        k,
        aic: 2.0 * k as f64 - 2.0 * loglik,
        delta_aic: f64::NAN,
        pct_diff: f64::NAN,
        converged,
        sigma,
        rho,
        phi,
    }
}

/// Fits every ARMA(p, q) with `p <= p_max`, `q <= q_max` to the residuals.
pub fn arma_grid_search(eps: &[f64], p_max: usize, q_max: usize) -> Result<AicTable> {
    let need = 10 * (p_max + q_max);
    if eps.len() < need.max(3) {
        return Err(Error::InvalidArgument(format!("{} residuals, need at least {need}", eps.len())));
    }
    if eps.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidSeries("non-finite residual".into()));
    }
    let cells: Vec<(usize, usize)> = (0..=p_max).flat_map(|p| (0..=q_max).map(move |q| (p, q))).collect();
    let mut rows: Vec<AicRow> = cells.par_iter().map(|&(p, q)| fit_arma(eps, p, q)).collect();
    let best = rows
        .iter()
        .filter(|r| r.converged)
        .min_by(|a, b| a.aic.total_cmp(&b.aic))
        .map(|r| (r.p, r.q))
        .ok_or_else(|| Error::Optimization("no ARMA cell converged".into()))?;
    let min = rows.iter().find(|r| (r.p, r.q) == best).unwrap().aic;
    for r in &mut rows {
        r.delta_aic = r.aic - min;
        r.pct_diff = 100.0 * (r.aic - min) / min.abs();
    }
    Ok(AicTable { rows, best })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub p: usize,
    pub q: usize,
    pub aic: f64,
    pub sigma: f64,
    pub rho: Vec<f64>,
    pub phi: Vec<f64>,
    pub identifiability_risk: bool,
    pub note: String,
}

impl Recommendation {
    /// Noise model at the fitted coefficients.
    pub fn noise_model(&self) -> Result<NoiseModel> {
        NoiseModel::from_orders(self.sigma, self.rho.clone(), self.phi.clone())
    }
}

const CAVEAT: &str = "Autocorrelated residuals may come from the measurement process or from \
model misspecification; a richer noise model absorbs both, so check the dynamics before \
attributing the structure to noise.";

/// Smallest `p + q` whose AIC lies within `threshold` of the minimum
/// (ties broken by AIC).
pub fn recommend(table: &AicTable, threshold: f64) -> Result<Recommendation> {
    let min = table.min_aic();
    let pick = table
        .rows
        .iter()
        .filter(|r| r.converged && r.aic <= min + threshold)
        .min_by(|a, b| (a.p + a.q).cmp(&(b.p + b.q)).then(a.aic.total_cmp(&b.aic)))
        .ok_or_else(|| Error::InvalidArgument("empty AIC table".into()))?;
    let risk = pick.p + pick.q >= COMPLEX_ORDER;
    let mut note = match (pick.p, pick.q) {
        (0, 0) => "Residuals are consistent with IID noise.".to_string(),
        (p, q) => format!("ARMA({p},{q}) noise is preferred (AIC {:.2} vs IID {:.2}). {CAVEAT}", pick.aic, table.get(0, 0).map_or(f64::NAN, |r| r.aic)),
    };
    if risk {
        note.push_str(" High-order noise can leave the model parameters practically unidentifiable.");
    }
    Ok(Recommendation {
        p: pick.p,
        q: pick.q,
        aic: pick.aic,
        sigma: pick.sigma,
        rho: pick.rho.clone(),
        phi: pick.phi.clone(),
        identifiability_risk: risk,
        note,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{is_invertible, is_stationary, simulate_noise, DEFAULT_BURN_IN};

    fn series(m: &NoiseModel, n: usize, seed: u64) -> Vec<f64> {
        simulate_noise(m, n, seed, DEFAULT_BURN_IN).unwrap().into_values()
    }

    fn row(p: usize, q: usize, aic: f64) -> AicRow {
        AicRow { p, q, loglik: 0.0, k: p + q + 1, aic, delta_aic: 0.0, pct_diff: 0.0, converged: true, sigma: 1.0, rho: vec![0.1; p], phi: vec![0.1; q] }
    }

    #[test]
    fn constrained_map_is_valid() {
        for u in [[3.0, -2.0, 0.5, 4.0], [-5.0, 5.0, -5.0, 5.0]] {
            let (rho, phi) = arma_from_unconstrained(&u, 2);
            assert!(is_stationary(&rho) && is_invertible(&phi));
        }
    }

    #[test]
    fn aic_identity_and_consistency() {
        let eps = series(&NoiseModel::ar1(1.0, 0.6).unwrap(), 500, 3);
        let small = arma_grid_search(&eps, 1, 1).unwrap();
        let big = arma_grid_search(&eps, 2, 2).unwrap();
        for r in &big.rows {
            assert_eq!(r.aic - 2.0 * r.k as f64 + 2.0 * r.loglik, 0.0);
        }
        assert!(big.min_aic() <= small.min_aic());
        for r in &small.rows {
            assert_eq!(Some(r), big.get(r.p, r.q).map(|b| AicRow { delta_aic: r.delta_aic, pct_diff: r.pct_diff, ..b.clone() }).as_ref());
        }
        assert!(big.best.0 >= 1);
        let ar = big.get(1, 0).unwrap();
        assert!((ar.rho[0] - 0.6).abs() < 0.1);
    }

    #[test]
    fn arma11_recovers_coefficients() {
        let m = NoiseModel::arma(0.5, vec![0.7], vec![0.4]).unwrap();
        let r = fit_arma(&series(&m, 4000, 8), 1, 1);
        assert!(r.converged);
        assert!((r.rho[0] - 0.7).abs() < 0.06 && (r.phi[0] - 0.4).abs() < 0.08 && (r.sigma - 0.5).abs() < 0.03, "{r:?}");
    }

    #[test]
    fn parsimony_rule() {
        let t = AicTable { rows: vec![row(0, 0, 120.0), row(1, 0, 101.5), row(1, 1, 100.0)], best: (1, 1) };
        let rec = recommend(&t, 2.0).unwrap();
        assert_eq!((rec.p, rec.q), (1, 0));
        assert!(!rec.identifiability_risk);
        let t = AicTable { rows: vec![row(0, 0, 100.0), row(1, 0, 101.0)], best: (0, 0) };
        assert_eq!((recommend(&t, 2.0).unwrap().p, recommend(&t, 2.0).unwrap().q), (0, 0));
        let t = AicTable { rows: vec![row(0, 0, 200.0), row(1, 1, 150.0), row(4, 4, 100.0)], best: (4, 4) };
        let rec = recommend(&t, 2.0).unwrap();
        assert_eq!((rec.p, rec.q), (4, 4));
        assert!(rec.identifiability_risk);
    }
}
