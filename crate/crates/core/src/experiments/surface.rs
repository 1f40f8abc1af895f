use crate::fisher::{vir_ar1, vir_arma11, vir_ma1};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::io::Write;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceFormula {
    Ar1,
    Ma1,
    Arma11,
}

impl std::str::FromStr for SurfaceFormula {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ar1" => Ok(Self::Ar1),
            "ma1" => Ok(Self::Ma1),
            "arma11" => Ok(Self::Arma11),
            _ => Err(Error::InvalidArgument(format!("unknown VIR formula {s:?} (ar1, ma1, arma11)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint {
    pub rho: f64,
    pub phi: f64,
    pub vir: f64,
}

/// Constant-mean VIR over a grid. AR(1) ignores `phis`, MA(1) ignores `rhos`.
pub fn vir_surface(formula: SurfaceFormula, rhos: &[f64], phis: &[f64]) -> Result<Vec<SurfacePoint>> {
    let pts: Vec<(f64, f64)> = match formula {
        SurfaceFormula::Ar1 => rhos.iter().map(|&r| (r, 0.0)).collect(),
        SurfaceFormula::Ma1 => phis.iter().map(|&f| (0.0, f)).collect(),
        SurfaceFormula::Arma11 => rhos.iter().flat_map(|&r| phis.iter().map(move |&f| (r, f))).collect(),
    };
    if pts.is_empty() {
        return Err(Error::InvalidArgument("empty VIR grid".into()));
    }
    pts.into_iter()
        .map(|(rho, phi)| {
            let vir = match formula {
                SurfaceFormula::Ar1 => vir_ar1(rho)?,
                SurfaceFormula::Ma1 => vir_ma1(phi)?,
                SurfaceFormula::Arma11 => vir_arma11(rho, phi)?,
            };
            Ok(SurfacePoint { rho, phi, vir })
        })
        .collect()
}

/// `n` evenly spaced points strictly inside `(lo, hi)`.
pub fn open_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (1..=n).map(|i| lo + (hi - lo) * i as f64 / (n + 1) as f64).collect()
}

pub fn write_surface_csv<W: Write>(points: &[SurfacePoint], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for p in points {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}
