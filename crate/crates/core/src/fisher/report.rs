use super::{vir_ar1, vir_arma11, vir_arma_pq_constant, vir_initial_state, vir_ma1, vir_multiparam_exact, vir_nonlinear_single};
use crate::{Error, NoiseKind, NoiseModel, Result};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Which result produced a VIR value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VirFormula {
    ConstantAr1,
    NonlinearSingle,
    MultiparamExact,
    Ma1,
    Arma11,
    ArmaPqConstant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VirEntry {
    pub parameter: String,
    pub vir: f64,
    pub formula: VirFormula,
    pub rho: Vec<f64>,
    pub phi: Vec<f64>,
}

/// Per-parameter VIRs; serializes as a JSON array of entries.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VirReport {
    pub entries: Vec<VirEntry>,
}

impl VirReport {
    fn push(&mut self, parameter: &str, vir: f64, formula: VirFormula, rho: Vec<f64>, phi: Vec<f64>) -> Result<()> {
        if !(vir > 0.0 && vir.is_finite()) {
            return Err(Error::Degenerate(format!("VIR for {parameter} is {vir}")));
        }
        self.entries.push(VirEntry { parameter: parameter.into(), vir, formula, rho, phi });
        Ok(())
    }

    /// Constant-mean VIR for `parameters` under `noise`, choosing the most
    /// specific closed form for its kind.
    pub fn constant(noise: &NoiseModel, parameters: &[&str]) -> Result<Self> {
        let (vir, formula) = match noise.kind() {
            NoiseKind::Iid => (1.0, VirFormula::ConstantAr1),
            NoiseKind::Ar1 => (vir_ar1(noise.rho()[0])?, VirFormula::ConstantAr1),
            NoiseKind::Ma1 => (vir_ma1(noise.phi()[0])?, VirFormula::Ma1),
            NoiseKind::Arma if noise.p() == 1 && noise.q() == 1 => {
                (vir_arma11(noise.rho()[0], noise.phi()[0])?, VirFormula::Arma11)
            }
            NoiseKind::Arma => (vir_arma_pq_constant(noise)?, VirFormula::ArmaPqConstant),
        };
        let mut r = Self::default();
        for p in parameters {
            r.push(p, vir, formula, noise.rho().to_vec(), noise.phi().to_vec())?;
        }
        Ok(r)
    }

    /// One-parameter-at-a-time VIRs from each sensitivity column.
    pub fn nonlinear_single(sens: &DMatrix<f64>, labels: &[String], rho: f64) -> Result<Self> {
        let mut r = Self::default();
        for (j, l) in labels.iter().enumerate() {
            let col: Vec<f64> = sens.column(j).iter().copied().collect();
            r.push(l, vir_nonlinear_single(&col, rho)?, VirFormula::NonlinearSingle, vec![rho], vec![])?;
        }
        Ok(r)
    }

    /// Exact multiparameter VIRs; `x0` names the initial-state column when
    /// the initial state is estimated.
    pub fn multiparam(sens: &DMatrix<f64>, labels: &[String], rho: f64, x0: Option<usize>) -> Result<Self> {
        let v = match x0 {
            Some(k) => vir_initial_state(sens, labels, k, rho)?,
            None => vir_multiparam_exact(sens, labels, rho)?,
        };
        let mut r = Self::default();
        for (l, v) in labels.iter().zip(v) {
            r.push(l, v, VirFormula::MultiparamExact, vec![rho], vec![])?;
        }
        Ok(r)
    }

    pub fn get(&self, parameter: &str) -> Option<&VirEntry> {
        self.entries.iter().find(|e| e.parameter == parameter)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json_file(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_shape() {
        let r = VirReport::constant(&NoiseModel::ar1(1.0, 0.5).unwrap(), &["mu"]).unwrap();
        let v: serde_json::Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        let e = &v[0];
        assert_eq!(e["parameter"], "mu");
        assert_eq!(e["vir"], 3.0);
        assert_eq!(e["formula"], "constant_ar1");
        assert_eq!(e["rho"][0], 0.5);
        assert!(e["phi"].as_array().unwrap().is_empty());
        assert_eq!(VirReport::from_json(&r.to_json().unwrap()).unwrap(), r);
    }

    #[test]
    fn formula_by_kind() {
        let f = |m: NoiseModel| VirReport::constant(&m, &["mu"]).unwrap().entries[0].formula;
        assert_eq!(f(NoiseModel::ma1(1.0, 0.3).unwrap()), VirFormula::Ma1);
        assert_eq!(f(NoiseModel::arma(1.0, vec![0.3], vec![0.2]).unwrap()), VirFormula::Arma11);
        assert_eq!(f(NoiseModel::arma(1.0, vec![0.3, 0.1], vec![]).unwrap()), VirFormula::ArmaPqConstant);
    }
}
