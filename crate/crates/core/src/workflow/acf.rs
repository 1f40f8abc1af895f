use crate::noise::sample_acf;
use crate::{Error, Result, TimeSeries};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use std::io::Write;
use std::path::Path;

/// Default maximum lag of the diagnostic.
pub const DEFAULT_MAX_LAG: usize = 50;
/// Lags inspected by the "substantial autocorrelation" rule.
pub const FLAG_LAGS: usize = 20;
/// Fraction of those lags outside the band that raises the flag.
pub const FLAG_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcfRow {
    pub lag: usize,
    pub acf: f64,
    pub band_lo: f64,
    pub band_hi: f64,
}

/// Sample autocorrelations with a white-noise band `±z/√T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcfReport {
    pub confidence: f64,
    pub band: f64,
    pub length: usize,
    pub rows: Vec<AcfRow>,
    /// Fraction of the first `min(20, max_lag)` lags outside the band.
    pub fraction_outside: f64,
    pub substantial_autocorrelation: bool,
}

impl AcfReport {
    pub fn outside(&self) -> impl Iterator<Item = &AcfRow> {
        self.rows.iter().filter(|r| r.acf < r.band_lo || r.acf > r.band_hi)
    }

    pub fn passes_white_noise_check(&self) -> bool {
        !self.substantial_autocorrelation
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for r in &self.rows {
            w.serialize(r)?;
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

pub fn acf_diagnostic(residuals: &TimeSeries, max_lag: usize, confidence: f64) -> Result<AcfReport> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::InvalidArgument(format!("confidence {confidence} outside (0, 1)")));
    }
    let acf = sample_acf(residuals, max_lag)?;
    let n = residuals.len();
    let z = Normal::new(0.0, 1.0).expect("valid").inverse_cdf(0.5 * (1.0 + confidence));
    let band = z / (n as f64).sqrt();
    let rows: Vec<AcfRow> =
        acf.iter().enumerate().map(|(i, &a)| AcfRow { lag: i + 1, acf: a, band_lo: -band, band_hi: band }).collect();
    let inspect = FLAG_LAGS.min(max_lag);
    let out = rows[..inspect].iter().filter(|r| r.acf.abs() > band).count();
    let fraction_outside = out as f64 / inspect as f64;
    Ok(AcfReport {
        confidence,
        band,
        length: n,
        rows,
        fraction_outside,
        substantial_autocorrelation: fraction_outside >= FLAG_FRACTION,
    })
}
