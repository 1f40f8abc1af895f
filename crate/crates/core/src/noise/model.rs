use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Family tag of a [`NoiseModel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    Iid,
    Ar1,
    Ma1,
    Arma,
}

impl std::fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            NoiseKind::Iid => "iid",
            NoiseKind::Ar1 => "ar1",
            NoiseKind::Ma1 => "ma1",
            NoiseKind::Arma => "arma",
        })
    }
}

#[derive(Deserialize)]
struct NoiseModelRepr {
    kind: NoiseKind,
    sigma: f64,
    #[serde(default)]
    rho: Vec<f64>,
    #[serde(default)]
    phi: Vec<f64>,
}

impl TryFrom<NoiseModelRepr> for NoiseModel {
    type Error = Error;

    fn try_from(r: NoiseModelRepr) -> Result<Self> {
        NoiseModel::new(r.kind, r.sigma, r.rho, r.phi)
    }
}

/// A validated, stationary error process.
///
/// `rho` holds the autoregressive coefficients and `phi` the moving-average
/// coefficients. The MA part is not required to be invertible here; the
/// likelihood routines that need invertibility check it themselves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NoiseModelRepr")]
pub struct NoiseModel {
    kind: NoiseKind,
    sigma: f64,
    rho: Vec<f64>,
    phi: Vec<f64>,
}

impl NoiseModel {
    pub fn new(kind: NoiseKind, sigma: f64, rho: Vec<f64>, phi: Vec<f64>) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidNoise(format!("sigma must be positive, got {sigma}")));
        }
        if rho.iter().chain(phi.iter()).any(|c| !c.is_finite()) {
            return Err(Error::InvalidNoise("non-finite coefficient".into()));
        }
        let shape_ok = match kind {
            NoiseKind::Iid => rho.is_empty() && phi.is_empty(),
            NoiseKind::Ar1 => rho.len() == 1 && phi.is_empty(),
            NoiseKind::Ma1 => rho.is_empty() && phi.len() == 1,
            NoiseKind::Arma => true,
        };
        if !shape_ok {
            return Err(Error::InvalidNoise(format!(
                "kind {kind} does not match coefficient lengths (p = {}, q = {})",
                rho.len(),
                phi.len()
            )));
        }
        let model = Self { kind, sigma, rho, phi };
        model.check_stationary()?;
        Ok(model)
    }

    pub fn iid(sigma: f64) -> Result<Self> {
        Self::new(NoiseKind::Iid, sigma, vec![], vec![])
    }

    pub fn ar1(sigma: f64, rho: f64) -> Result<Self> {
        Self::new(NoiseKind::Ar1, sigma, vec![rho], vec![])
    }

    pub fn ma1(sigma: f64, phi: f64) -> Result<Self> {
        Self::new(NoiseKind::Ma1, sigma, vec![], vec![phi])
    }

    pub fn arma(sigma: f64, rho: Vec<f64>, phi: Vec<f64>) -> Result<Self> {
        Self::new(NoiseKind::Arma, sigma, rho, phi)
    }

    /// Builds the model with the most specific kind tag for the given orders.
    pub fn from_orders(sigma: f64, rho: Vec<f64>, phi: Vec<f64>) -> Result<Self> {
        let kind = match (rho.len(), phi.len()) {
            (0, 0) => NoiseKind::Iid,
            (1, 0) => NoiseKind::Ar1,
            (0, 1) => NoiseKind::Ma1,
            _ => NoiseKind::Arma,
        };
        Self::new(kind, sigma, rho, phi)
    }

    pub fn kind(&self) -> NoiseKind {
        self.kind
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn p(&self) -> usize {
        self.rho.len()
    }

    pub fn q(&self) -> usize {
        self.phi.len()
    }

    pub fn with_sigma(&self, sigma: f64) -> Result<Self> {
        Self::new(self.kind, sigma, self.rho.clone(), self.phi.clone())
    }

    pub fn lag_polynomials(&self) -> LagPolynomials {
        LagPolynomials::new(&self.rho, &self.phi)
    }

    pub(crate) fn check_stationary(&self) -> Result<()> {
        if is_stationary(&self.rho) {
            Ok(())
        } else {
            Err(Error::NonStationary(format!(
                "AR coefficients {:?} put a root of the lag polynomial on or inside the unit circle",
                self.rho
            )))
        }
    }

    pub fn check_invertible(&self) -> Result<()> {
        if is_invertible(&self.phi) {
            Ok(())
        } else {
            Err(Error::NonInvertible(format!(
                "MA coefficients {:?} put a root of the lag polynomial on or inside the unit circle",
                self.phi
            )))
        }
    }

    /// Short label such as `ARMA(2,1)`.
    pub fn label(&self) -> String {
        match self.kind {
            NoiseKind::Iid => "IID".into(),
            NoiseKind::Ar1 => "AR(1)".into(),
            NoiseKind::Ma1 => "MA(1)".into(),
            NoiseKind::Arma => format!("ARMA({},{})", self.p(), self.q()),
        }
    }
}

/// Coefficients of `Psi_p(L) = 1 - rho_1 L - ... - rho_p L^p` and
/// `Phi_q(L) = 1 + phi_1 L + ... + phi_q L^q`, constant term first.
#[derive(Debug, Clone, PartialEq)]
pub struct LagPolynomials {
    pub psi: Vec<f64>,
    pub phi_poly: Vec<f64>,
}

impl LagPolynomials {
    pub fn new(rho: &[f64], phi: &[f64]) -> Self {
        let psi = std::iter::once(1.0).chain(rho.iter().map(|r| -r)).collect();
        let phi_poly = std::iter::once(1.0).chain(phi.iter().copied()).collect();
        Self { psi, phi_poly }
    }

    pub fn psi_at(&self, z: f64) -> f64 {
        horner(&self.psi, z)
    }

    pub fn phi_at(&self, z: f64) -> f64 {
        horner(&self.phi_poly, z)
    }
}

fn horner(coeffs: &[f64], z: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * z + c)
}

/// Step-down (reverse Durbin-Levinson) recursion from AR coefficients to
/// partial autocorrelations. Returns `None` when some partial
/// autocorrelation reaches the unit circle, i.e. the process is not
/// stationary.
pub fn ar_to_pacf(ar: &[f64]) -> Option<Vec<f64>> {
    let mut a = ar.to_vec();
    let mut pacf = vec![0.0; ar.len()];
    for k in (1..=ar.len()).rev() {
        let kappa = a[k - 1];
        if !(kappa.abs() < 1.0) {
            return None;
        }
        pacf[k - 1] = kappa;
        let denom = 1.0 - kappa * kappa;
        let prev: Vec<f64> = (1..k).map(|j| (a[j - 1] + kappa * a[k - j - 1]) / denom).collect();
        a.truncate(k - 1);
        a.copy_from_slice(&prev);
    }
    Some(pacf)
}

/// Durbin-Levinson recursion from partial autocorrelations to AR
/// coefficients. Any vector with entries in (-1, 1) yields a stationary AR.
pub fn pacf_to_ar(pacf: &[f64]) -> Vec<f64> {
    let mut a: Vec<f64> = Vec::with_capacity(pacf.len());
    for (k, &kappa) in pacf.iter().enumerate() {
        let next: Vec<f64> = (0..k).map(|j| a[j] - kappa * a[k - 1 - j]).collect();
        a = next;
        a.push(kappa);
    }
    a
}

/// All roots of `1 - rho_1 z - ... - rho_p z^p` lie outside the unit circle.
pub fn is_stationary(rho: &[f64]) -> bool {
    ar_to_pacf(rho).is_some()
}

/// All roots of `1 + phi_1 z + ... + phi_q z^q` lie outside the unit circle.
pub fn is_invertible(phi: &[f64]) -> bool {
    let neg: Vec<f64> = phi.iter().map(|f| -f).collect();
    ar_to_pacf(&neg).is_some()
}

/// MA(infinity) weights `psi_0 = 1, psi_1, ...` of a stationary ARMA process.
///
/// The expansion is cut once it is past the MA order and the last
/// `max(p, 1)` squared weights each sit below `1e-14` of the running sum of
/// squares; `extra` further weights are then appended (needed for lagged
/// cross-products).
pub fn psi_weights(rho: &[f64], phi: &[f64], extra: usize) -> Vec<f64> {
    const REL_TOL: f64 = 1e-14;
    const MAX_TERMS: usize = 50_000_000;
    let p = rho.len();
    let q = phi.len();
    let next = |psi: &[f64], j: usize| -> f64 {
        let ma = if j <= q { phi[j - 1] } else { 0.0 };
        let ar: f64 = (1..=p.min(j)).map(|i| rho[i - 1] * psi[j - i]).sum();
        ma + ar
    };
    let mut psi = vec![1.0];
    let mut sum_sq = 1.0;
    let window = p.max(1);
    let mut j = 1;
    loop {
        let w = next(&psi, j);
        psi.push(w);
        sum_sq += w * w;
        if j > q
            && j >= window
            && psi[j + 1 - window..=j].iter().all(|w| w * w < REL_TOL * sum_sq)
        {
            break;
        }
        j += 1;
        if j > MAX_TERMS {
            break;
        }
    }
    for _ in 0..extra {
        let j = psi.len();
        let w = next(&psi, j);
        psi.push(w);
    }
    psi
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn kind_must_match_lengths() {
        assert!(NoiseModel::new(NoiseKind::Iid, 1.0, vec![0.5], vec![]).is_err());
        assert!(NoiseModel::new(NoiseKind::Ar1, 1.0, vec![], vec![]).is_err());
        assert!(NoiseModel::new(NoiseKind::Ma1, 1.0, vec![0.1], vec![0.1]).is_err());
        assert!(NoiseModel::new(NoiseKind::Arma, 1.0, vec![], vec![]).is_ok());
    }

    #[test]
    fn sigma_must_be_positive() {
        assert!(NoiseModel::iid(0.0).is_err());
        assert!(NoiseModel::iid(-1.0).is_err());
        assert!(NoiseModel::iid(f64::NAN).is_err());
    }

    #[test]
    fn unit_root_rejected() {
        assert!(matches!(NoiseModel::ar1(1.0, 1.0), Err(Error::NonStationary(_))));
        assert!(NoiseModel::ar1(1.0, -1.2).is_err());
        // 1 - 0.5z - 0.6z^2 has a root inside the unit circle (rho sum > 1)
        assert!(NoiseModel::arma(1.0, vec![0.5, 0.6], vec![]).is_err());
        assert!(NoiseModel::arma(1.0, vec![0.5, 0.2], vec![]).is_ok());
    }

    #[test]
    fn pacf_round_trip() {
        let ar = vec![0.5, 0.2, -0.1];
        let pacf = ar_to_pacf(&ar).unwrap();
        let back = pacf_to_ar(&pacf);
        for (a, b) in ar.iter().zip(&back) {
            assert_relative_eq!(a, b, epsilon = 1e-14);
        }
    }

    #[test]
    fn ar2_pacf_matches_closed_form() {
        // for AR(2), pacf_1 = rho_1 / (1 - rho_2) and pacf_2 = rho_2
        let pacf = ar_to_pacf(&[0.5, 0.2]).unwrap();
        assert_relative_eq!(pacf[0], 0.5 / 0.8, epsilon = 1e-15);
        assert_relative_eq!(pacf[1], 0.2, epsilon = 1e-15);
    }

    #[test]
    fn invertibility() {
        assert!(is_invertible(&[0.9]));
        assert!(!is_invertible(&[1.0]));
        assert!(!is_invertible(&[-1.5]));
    }

    #[test]
    fn lag_polynomials_have_unit_constant() {
        let lp = LagPolynomials::new(&[0.5, 0.2], &[0.3]);
        assert_eq!(lp.psi, vec![1.0, -0.5, -0.2]);
        assert_eq!(lp.phi_poly, vec![1.0, 0.3]);
        assert_relative_eq!(lp.psi_at(1.0), 0.3, epsilon = 1e-15);
        assert_relative_eq!(lp.phi_at(1.0), 1.3, epsilon = 1e-15);
    }

    #[test]
    fn psi_weights_of_ar1_are_powers() {
        let psi = psi_weights(&[0.5], &[], 3);
        for (j, w) in psi.iter().enumerate() {
            assert_relative_eq!(*w, 0.5f64.powi(j as i32), epsilon = 1e-15);
        }
    }

    #[test]
    fn json_round_trip_validates() {
        let m = NoiseModel::arma(0.5, vec![0.3], vec![0.2]).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        let back: NoiseModel = serde_json::from_str(&s).unwrap();
        assert_eq!(m, back);
        let bad = r#"{"kind":"ar1","sigma":1.0,"rho":[1.5]}"#;
        assert!(serde_json::from_str::<NoiseModel>(bad).is_err());
    }
}
