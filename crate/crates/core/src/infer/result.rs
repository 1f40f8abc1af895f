use super::diagnostics::{quantile_sorted, rhat};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMethod {
    Optimize,
    Mcmc,
}

/// Retained draws of one chain, in the original parameter coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    pub draws: Vec<Vec<f64>>,
    pub log_posterior: Vec<f64>,
    pub acceptance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub median: f64,
    pub q025: f64,
    pub q975: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rhat: Option<f64>,
}

/// Point estimate plus, for sampled fits, chains and per-parameter summaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub method: FitMethod,
    pub model: String,
    pub noise: String,
    pub seed: u64,
    pub param_names: Vec<String>,
    /// MAP / MLE for optimizer fits; for sampled fits, the best draw seen
    /// (or the optimum used to start the chains).
    pub point: Vec<f64>,
    pub log_posterior: f64,
    #[serde(default)]
    pub summaries: Vec<ParamSummary>,
    #[serde(default)]
    pub acceptance: Vec<f64>,
    #[serde(default)]
    pub iterations: usize,
    #[serde(default)]
    pub warmup: usize,
    #[serde(default)]
    pub evaluations: usize,
    #[serde(skip)]
    pub chains: Vec<Chain>,
}

impl FitResult {
    pub(crate) fn summarize(&mut self) -> Result<()> {
        self.summaries = (0..self.param_names.len())
            .map(|j| {
                let per_chain: Vec<Vec<f64>> = self.chains.iter().map(|c| c.draws.iter().map(|d| d[j]).collect()).collect();
                let mut all = per_chain.concat();
                let n = all.len() as f64;
                let mean = all.iter().sum::<f64>() / n;
                let sd = (all.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
                all.sort_by(f64::total_cmp);
                let r = if per_chain.len() >= 2 { rhat(&per_chain).ok() } else { None };
                ParamSummary {
                    name: self.param_names[j].clone(),
                    mean,
                    sd,
                    median: quantile_sorted(&all, 0.5),
                    q025: quantile_sorted(&all, 0.025),
                    q975: quantile_sorted(&all, 0.975),
                    rhat: r,
                }
            })
            .collect();
        Ok(())
    }

    pub fn index(&self, name: &str) -> Result<usize> {
        self.param_names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::InvalidArgument(format!("no parameter named {name:?}")))
    }

    pub fn summary(&self, name: &str) -> Option<&ParamSummary> {
        self.summaries.iter().find(|s| s.name == name)
    }

    pub fn point_value(&self, name: &str) -> Result<f64> {
        Ok(self.point[self.index(name)?])
    }

    /// Pooled retained draws of one parameter.
    pub fn draws(&self, name: &str) -> Result<Vec<f64>> {
        let j = self.index(name)?;
        Ok(self.chains.iter().flat_map(|c| c.draws.iter().map(move |d| d[j])).collect())
    }

    pub fn posterior_variance(&self, name: &str) -> Result<f64> {
        let s = self.summary(name).ok_or_else(|| Error::InvalidArgument(format!("no draws for {name:?}")))?;
        Ok(s.sd * s.sd)
    }

    /// Equal-tailed credible interval from the pooled draws.
    pub fn interval(&self, name: &str, level: f64) -> Result<(f64, f64)> {
        let mut d = self.draws(name)?;
        if d.is_empty() {
            return Err(Error::InvalidArgument(format!("no draws for {name:?}")));
        }
        d.sort_by(f64::total_cmp);
        let a = 0.5 * (1.0 - level);
        Ok((quantile_sorted(&d, a), quantile_sorted(&d, 1.0 - a)))
    }

    pub fn max_rhat(&self) -> Option<f64> {
        self.summaries.iter().filter_map(|s| s.rhat).reduce(f64::max)
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

    /// One row per retained draw: `chain,iteration,<params>,log_posterior`.
    pub fn write_draws_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["chain".to_string(), "iteration".to_string()];
        header.extend(self.param_names.iter().cloned());
        header.push("log_posterior".into());
        w.write_record(&header)?;
        for (c, chain) in self.chains.iter().enumerate() {
            for (i, (d, lp)) in chain.draws.iter().zip(&chain.log_posterior).enumerate() {
                let mut row = vec![c.to_string(), (self.warmup + i).to_string()];
                row.extend(d.iter().map(|v| v.to_string()));
                row.push(lp.to_string());
                w.write_record(&row)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_draws_csv_file(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_draws_csv(std::fs::File::create(path)?)
    }
}
