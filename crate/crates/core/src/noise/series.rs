use std::io::{Read, Write};
use std::path::Path;

use crate::{Error, Result};

/// Observations on a uniform time grid `t0, t0 + dt, t0 + 2 dt, ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    t0: f64,
    dt: f64,
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(t0: f64, dt: f64, values: Vec<f64>) -> Result<Self> {
        if !t0.is_finite() {
            return Err(Error::InvalidSeries(format!("start time must be finite, got {t0}")));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidSeries(format!("time step must be positive, got {dt}")));
        }
        if values.is_empty() {
            return Err(Error::InvalidSeries("series must hold at least one value".into()));
        }
        Ok(Self { t0, dt, values })
    }

    /// Unit-step series starting at zero.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        Self::new(0.0, 1.0, values)
    }

    /// `n` points spread evenly over `[t0, t_end]` inclusive.
    pub fn grid(t0: f64, t_end: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidSeries("a span grid needs at least two points".into()));
        }
        let dt = (t_end - t0) / (n - 1) as f64;
        Self::new(t0, dt, vec![0.0; n])
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.time(i)).collect()
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.len() - 1)
    }

    /// Same grid, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.len() {
            return Err(Error::GridMismatch { data: self.len(), trajectory: values.len() });
        }
        Self::new(self.t0, self.dt, values)
    }

    pub fn same_grid(&self, other: &TimeSeries) -> bool {
        self.len() == other.len()
            && self.t0 == other.t0
            && (self.dt - other.dt).abs() <= 1e-12 * self.dt.abs()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }

    /// Unbiased sample variance; zero for a single point.
    pub fn sample_variance(&self) -> f64 {
        let n = self.len();
        if n < 2 {
            return 0.0;
        }
        let m = self.mean();
        self.values.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64
    }

    /// Writes `time,value` CSV with shortest round-trip decimals.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["time", "value"])?;
        for (i, v) in self.values.iter().enumerate() {
            w.write_record([self.time(i).to_string(), v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(f))
    }

    /// Reads `time,value` CSV. Non-uniform spacing is rejected.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = r.headers()?.clone();
        if headers.len() < 2 || &headers[0] != "time" || &headers[1] != "value" {
            return Err(Error::InvalidSeries(format!(
                "expected header `time,value`, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut times = Vec::new();
        let mut values = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| Error::InvalidSeries(format!("cannot parse `{s}`: {e}")))
            };
            times.push(parse(&rec[0])?);
            values.push(parse(&rec[1])?);
        }
        if values.is_empty() {
            return Err(Error::InvalidSeries("no data rows".into()));
        }
        let t0 = times[0];
        if values.len() == 1 {
            return Self::new(t0, 1.0, values);
        }
        let dt = (times[times.len() - 1] - t0) / (times.len() - 1) as f64;
        for (i, t) in times.iter().enumerate() {
            let expected = t0 + i as f64 * dt;
            if (t - expected).abs() > 1e-9 * dt.abs().max(1e-300) + 1e-12 * t.abs() {
                return Err(Error::InvalidSeries(format!(
                    "non-uniform time grid at row {i}: t = {t}, expected {expected}"
                )));
            }
        }
        Self::new(t0, dt, values)
    }

    pub fn from_csv_file(path: impl AsRef<Path>) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_csv(std::io::BufReader::new(f))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_grid() {
        assert!(TimeSeries::new(0.0, 0.0, vec![1.0]).is_err());
        assert!(TimeSeries::new(0.0, -1.0, vec![1.0]).is_err());
        assert!(TimeSeries::new(0.0, 1.0, vec![]).is_err());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let s = TimeSeries::new(0.5, 0.01, vec![1.0 / 3.0, -2.5e-17, 12345.678901234567]).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("time,value\n"));
        let back = TimeSeries::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.values(), s.values());
        assert!((back.dt() - 0.01).abs() < 1e-15);
    }

    #[test]
    fn non_uniform_grid_rejected() {
        let text = "time,value\n0,1\n1,2\n2.5,3\n";
        assert!(matches!(
            TimeSeries::read_csv(text.as_bytes()),
            Err(Error::InvalidSeries(_))
        ));
    }

    #[test]
    fn wrong_header_rejected() {
        assert!(TimeSeries::read_csv("t,x\n0,1\n".as_bytes()).is_err());
    }

    #[test]
    fn span_grid_hits_both_ends() {
        let g = TimeSeries::grid(0.0, 20.0, 2000).unwrap();
        assert_eq!(g.time(0), 0.0);
        assert!((g.t_end() - 20.0).abs() < 1e-12);
    }
}
