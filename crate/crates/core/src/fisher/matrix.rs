use super::check_rho;
use crate::{Error, Result};
use nalgebra::DMatrix;

/// Largest accepted condition number of the scale-normalized information.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Symmetric positive semidefinite information matrix with parameter labels.
#[derive(Debug, Clone, PartialEq)]
pub struct FisherMatrix {
    labels: Vec<String>,
    entries: DMatrix<f64>,
}

impl FisherMatrix {
    pub fn new(labels: Vec<String>, entries: DMatrix<f64>) -> Result<Self> {
        let m = labels.len();
        if entries.shape() != (m, m) {
            return Err(Error::InvalidArgument(format!("{m} labels for a {:?} matrix", entries.shape())));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite information entry".into()));
        }
        let scale = entries.amax().max(f64::MIN_POSITIVE);
        if (&entries - entries.transpose()).amax() > 1e-10 * scale {
            return Err(Error::InvalidArgument("information matrix is not symmetric".into()));
        }
        let sym = (&entries + entries.transpose()) * 0.5;
        if m > 0 {
            let min = sym.clone().symmetric_eigenvalues().min();
            if min < -1e-10 * scale {
                return Err(Error::NotPositiveDefinite(format!("information has eigenvalue {min}")));
            }
        }
        Ok(Self { labels, entries: sym })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.labels.iter().position(|l| l == a)?;
        let j = self.labels.iter().position(|l| l == b)?;
        Some(self.entries[(i, j)])
    }

    fn unidentifiable(&self, reason: String, v: &[f64]) -> Error {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        let direction = self.labels.iter().cloned().zip(v.iter().map(|x| x / norm)).collect();
        Error::Unidentifiable { reason, direction }
    }

    /// Condition number after rescaling to unit diagonal, so that parameter
    /// units do not matter.
    pub fn condition_number(&self) -> f64 {
        match self.scaled() {
            Some((_, c)) => {
                let ev = c.symmetric_eigenvalues();
                let (lo, hi) = (ev.min(), ev.max());
                if lo <= 0.0 { f64::INFINITY } else { hi / lo }
            }
            None => f64::INFINITY,
        }
    }

    fn scaled(&self) -> Option<(Vec<f64>, DMatrix<f64>)> {
        let d: Vec<f64> = self.entries.diagonal().iter().map(|v| v.sqrt()).collect();
        if d.iter().any(|&v| !(v > 0.0)) {
            return None;
        }
        let m = self.dim();
        Some((d.clone(), DMatrix::from_fn(m, m, |i, j| self.entries[(i, j)] / (d[i] * d[j]))))
    }

    /// Inverse information (the Cramér-Rao covariance). Fails with the
    /// offending parameter direction when the matrix is singular or its
    /// scaled condition number exceeds [`CONDITION_LIMIT`].
    pub fn inverse(&self) -> Result<DMatrix<f64>> {
        let m = self.dim();
        if m == 0 {
            return Ok(DMatrix::zeros(0, 0));
        }
        let Some((d, c)) = self.scaled() else {
            let i = self.entries.diagonal().iter().position(|v| !(*v > 0.0)).unwrap();
            let mut v = vec![0.0; m];
            v[i] = 1.0;
            return Err(self.unidentifiable(format!("no information about {}", self.labels[i]), &v));
        };
        let eig = c.clone().symmetric_eigen();
        let (mut lo, mut hi, mut k) = (f64::INFINITY, f64::NEG_INFINITY, 0);
        for (idx, &ev) in eig.eigenvalues.iter().enumerate() {
            if ev < lo {
                lo = ev;
                k = idx;
            }
            hi = hi.max(ev);
        }
        let cond = if lo > 0.0 { hi / lo } else { f64::INFINITY };
        if cond > CONDITION_LIMIT {
            let v: Vec<f64> = eig.eigenvectors.column(k).iter().zip(&d).map(|(x, s)| x / s).collect();
            return Err(self.unidentifiable(format!("condition number {cond:.3e} exceeds {CONDITION_LIMIT:e}"), &v));
        }
        let inv_c = c
            .cholesky()
            .ok_or_else(|| Error::NotPositiveDefinite("scaled information".into()))?
            .inverse();
        Ok(DMatrix::from_fn(m, m, |i, j| inv_c[(i, j)] / (d[i] * d[j])))
    }

    /// Diagonal of the inverse: per-parameter variance bounds.
    pub fn crlb(&self) -> Result<Vec<f64>> {
        Ok(self.inverse()?.diagonal().iter().copied().collect())
    }
}

fn check_sens(sens: &DMatrix<f64>, labels: &[String]) -> Result<()> {
    if sens.nrows() < 2 {
        return Err(Error::InvalidArgument("sensitivities need rows t = 0..T with T >= 1".into()));
    }
    if sens.ncols() != labels.len() {
        return Err(Error::InvalidArgument(format!("{} labels for {} columns", labels.len(), sens.ncols())));
    }
    if sens.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite sensitivity".into()));
    }
    Ok(())
}

/// `Iᵢⱼ = σ⁻² Σ_{t=1}^{T} (sᵢ(t) − ρ sᵢ(t−1))(sⱼ(t) − ρ sⱼ(t−1))` with the
/// sensitivity rows indexed `t = 0..T`.
pub fn fim_multiparam(sens: &DMatrix<f64>, labels: &[String], rho: f64, sigma: f64) -> Result<FisherMatrix> {
    check_rho(rho)?;
    check_sens(sens, labels)?;
    if !(sigma > 0.0) {
        return Err(Error::InvalidArgument(format!("sigma must be positive, got {sigma}")));
    }
    let t = sens.nrows() - 1;
    let d = sens.rows(1, t) - sens.rows(0, t) * rho;
    FisherMatrix::new(labels.to_vec(), d.transpose() * d / (sigma * sigma))
}

/// [`fim_multiparam`] plus the boundary terms that arise when the lagged
/// observation at `t = 0` is the unknown initial state (column `x0`).
pub fn fim_initial_state_block(
    sens: &DMatrix<f64>,
    labels: &[String],
    x0: usize,
    rho: f64,
    sigma: f64,
) -> Result<FisherMatrix> {
    let base = fim_multiparam(sens, labels, rho, sigma)?;
    if x0 >= labels.len() {
        return Err(Error::InvalidArgument(format!("initial-state column {x0} out of range")));
    }
    let mut e = base.entries;
    let s2 = sigma * sigma;
    for i in 0..labels.len() {
        if i == x0 {
            continue;
        }
        let c = rho / s2 * (sens[(1, i)] - rho * sens[(0, i)]);
        e[(i, x0)] += c;
        e[(x0, i)] += c;
    }
    e[(x0, x0)] += (rho * rho + 2.0 * rho * (sens[(1, x0)] - rho * sens[(0, x0)])) / s2;
    FisherMatrix::new(labels.to_vec(), e)
}

fn vir_from(a_rho: DMatrix<f64>, a_0: DMatrix<f64>, rho: f64) -> Vec<f64> {
    (0..a_rho.nrows()).map(|i| (1.0 - rho * rho) * a_rho[(i, i)] / a_0[(i, i)]).collect()
}

/// `VIR(θᵢ) = (1 − ρ²) Aᵢᵢ(ρ) / Aᵢᵢ(0)` with `A = I⁻¹`, for every column.
pub fn vir_multiparam_exact(sens: &DMatrix<f64>, labels: &[String], rho: f64) -> Result<Vec<f64>> {
    let a = fim_multiparam(sens, labels, rho, 1.0)?.inverse()?;
    let a0 = fim_multiparam(sens, labels, 0.0, 1.0)?.inverse()?;
    Ok(vir_from(a, a0, rho))
}

/// Exact multiparameter VIRs when column `x0` is the unknown initial state.
pub fn vir_initial_state(sens: &DMatrix<f64>, labels: &[String], x0: usize, rho: f64) -> Result<Vec<f64>> {
    let a = fim_initial_state_block(sens, labels, x0, rho, 1.0)?.inverse()?;
    let a0 = fim_initial_state_block(sens, labels, x0, 0.0, 1.0)?.inverse()?;
    Ok(vir_from(a, a0, rho))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fisher::vir_nonlinear_single;
    use approx::assert_relative_eq;

    fn labels(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("p{i}")).collect()
    }

    fn profile(t: usize) -> DMatrix<f64> {
        DMatrix::from_fn(t + 1, 3, |r, c| {
            let x = r as f64 / t as f64;
            match c {
                0 => (3.0 * x).sin(),
                1 => x * x,
                _ => (-2.0 * x).exp(),
            }
        })
    }

    #[test]
    fn single_column_matches_nonlinear_single() {
        let s = profile(60);
        let col = s.columns(0, 1).into_owned();
        let v = vir_multiparam_exact(&col, &labels(1), 0.7).unwrap()[0];
        let w = vir_nonlinear_single(col.as_slice(), 0.7).unwrap();
        assert_relative_eq!(v, w, epsilon = 1e-12);
    }

    #[test]
    fn zero_rho_gives_unit_vir() {
        for v in vir_multiparam_exact(&profile(40), &labels(3), 0.0).unwrap() {
            assert_relative_eq!(v, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn explicit_entries() {
        let s = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 2.0, 1.0, 0.5, 3.0]);
        let f = fim_multiparam(&s, &labels(2), 0.5, 2.0).unwrap();
        // d rows: (1.5, 1.0), (-0.5, 2.5)
        assert_relative_eq!(f.entries()[(0, 0)], (2.25 + 0.25) / 4.0);
        assert_relative_eq!(f.entries()[(0, 1)], (1.5 - 1.25) / 4.0);
        assert_relative_eq!(f.entries()[(1, 1)], (1.0 + 6.25) / 4.0);
        assert_eq!(f.get("p1", "p0"), Some(f.entries()[(1, 0)]));
    }

    #[test]
    fn initial_state_corrections() {
        let s = profile(30);
        let l = labels(3);
        let a = fim_initial_state_block(&s, &l, 2, 0.0, 1.3).unwrap();
        let b = fim_multiparam(&s, &l, 0.0, 1.3).unwrap();
        assert!((a.entries() - b.entries()).amax() < 1e-14);

        // x0 column without influence on f: only the boundary terms remain
        let mut s0 = s.clone();
        s0.column_mut(2).fill(0.0);
        let (rho, sigma) = (0.6, 0.8);
        let f = fim_initial_state_block(&s0, &l, 2, rho, sigma).unwrap();
        for i in 0..2 {
            let expect = rho / (sigma * sigma) * (s0[(1, i)] - rho * s0[(0, i)]);
            assert_relative_eq!(f.entries()[(i, 2)], expect, epsilon = 1e-14);
        }
        assert_relative_eq!(f.entries()[(2, 2)], rho * rho / (sigma * sigma), epsilon = 1e-14);
    }

    #[test]
    fn singular_information_reports_direction() {
        // column 2 = 2 × column 0
        let mut s = profile(30);
        let c0 = s.column(0).into_owned();
        s.set_column(2, &(c0 * 2.0));
        let f = fim_multiparam(&s, &labels(3), 0.3, 1.0).unwrap();
        match f.inverse() {
            Err(Error::Unidentifiable { direction, .. }) => {
                // null direction ∝ (2, 0, −1)
                let (a, b, c) = (direction[0].1, direction[1].1, direction[2].1);
                assert!(b.abs() < 1e-4);
                assert_relative_eq!(a / c, -2.0, max_relative = 1e-4);
            }
            other => panic!("expected unidentifiable, got {other:?}"),
        }
        let mut z = profile(10);
        z.column_mut(1).fill(0.0);
        assert!(matches!(
            fim_multiparam(&z, &labels(3), 0.1, 1.0).unwrap().inverse(),
            Err(Error::Unidentifiable { .. })
        ));
    }

    #[test]
    fn inverse_is_inverse_and_scale_free() {
        let mut s = profile(50);
        s.column_mut(1).scale_mut(1e5);
        let f = fim_multiparam(&s, &labels(3), 0.4, 0.5).unwrap();
        let inv = f.inverse().unwrap();
        let id = f.entries() * &inv;
        assert!((id - DMatrix::identity(3, 3)).amax() < 1e-8);
        assert!(f.condition_number() < 1e8);
    }

    #[test]
    fn malformed_rejected() {
        assert!(FisherMatrix::new(labels(2), DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0])).is_err());
        assert!(FisherMatrix::new(labels(2), DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0])).is_err());
        assert!(FisherMatrix::new(labels(3), DMatrix::identity(2, 2)).is_err());
    }
}
