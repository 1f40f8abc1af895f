use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

/// How the voltage evolves from one breakpoint to the next.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Segment {
    Hold,
    Ramp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Row {
    time_ms: f64,
    #[serde(rename = "voltage_mV")]
    voltage_mv: f64,
    mode: Segment,
}

/// Piecewise voltage clamp. The mode of breakpoint `i` governs
/// `[tᵢ, tᵢ₊₁)`; the final voltage is held after the last breakpoint, which
/// also marks the end of the protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct VoltageProtocol {
    rows: Vec<Row>,
}

impl VoltageProtocol {
    /// `points` are `(time ms, voltage mV, mode)`.
    pub fn new(points: Vec<(f64, f64, Segment)>) -> Result<Self> {
        let rows: Vec<Row> = points
            .into_iter()
            .map(|(time_ms, voltage_mv, mode)| Row { time_ms, voltage_mv, mode })
            .collect();
        Self::validate(&rows)?;
        Ok(Self { rows })
    }

    fn validate(rows: &[Row]) -> Result<()> {
        let first = rows.first().ok_or_else(|| Error::InvalidProtocol("no breakpoints".into()))?;
        if rows.iter().any(|r| !r.time_ms.is_finite() || !r.voltage_mv.is_finite()) {
            return Err(Error::InvalidProtocol("non-finite time or voltage".into()));
        }
        if first.time_ms > 0.0 {
            return Err(Error::InvalidProtocol(format!(
                "first breakpoint at {} ms leaves the start undefined",
                first.time_ms
            )));
        }
        if let Some(w) = rows.windows(2).find(|w| w[1].time_ms <= w[0].time_ms) {
            return Err(Error::InvalidProtocol(format!(
                "times not strictly increasing at {} ms",
                w[1].time_ms
            )));
        }
        if rows.last().unwrap().mode == Segment::Ramp && rows.len() > 1 {
            return Err(Error::InvalidProtocol("final breakpoint cannot start a ramp".into()));
        }
        if rows.len() == 1 && rows[0].mode == Segment::Ramp {
            return Err(Error::InvalidProtocol("single breakpoint cannot ramp".into()));
        }
        Ok(())
    }

    /// Holding potential of -80 mV, then eight 0.5-1 s steps visiting
    /// -120..+40 mV, ending back at -80 mV; 6.5 s in total.
    pub fn synthetic_staircase() -> Self {
        let pts = [
            (0.0, -80.0),
            (250.0, 40.0),
            (1250.0, -120.0),
            (1750.0, -40.0),
            (2750.0, 20.0),
            (3750.0, -100.0),
            (4250.0, 0.0),
            (5250.0, -60.0),
            (6250.0, -80.0),
            (6500.0, -80.0),
        ];
        Self::new(pts.iter().map(|&(t, v)| (t, v, Segment::Hold)).collect()).expect("valid bundled protocol")
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn has_ramp(&self) -> bool {
        self.rows.iter().any(|r| r.mode == Segment::Ramp)
    }

    pub fn start_ms(&self) -> f64 {
        self.rows[0].time_ms
    }

    pub fn end_ms(&self) -> f64 {
        self.rows.last().unwrap().time_ms
    }

    pub fn breakpoint_times_ms(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.time_ms).collect()
    }

    /// Distinct voltages the protocol visits at breakpoints.
    pub fn voltages_mv(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.voltage_mv).collect()
    }

    pub fn voltage_mv(&self, t_ms: f64) -> f64 {
        let i = self.rows.partition_point(|r| r.time_ms <= t_ms);
        if i == 0 {
            return self.rows[0].voltage_mv;
        }
        let r = &self.rows[i - 1];
        match (r.mode, self.rows.get(i)) {
            (Segment::Ramp, Some(next)) => {
                let s = (t_ms - r.time_ms) / (next.time_ms - r.time_ms);
                r.voltage_mv + s * (next.voltage_mv - r.voltage_mv)
            }
            _ => r.voltage_mv,
        }
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

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["time_ms", "voltage_mV", "mode"] {
            return Err(Error::InvalidProtocol(format!(
                "expected header time_ms,voltage_mV,mode, got {}",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let rows = rdr
            .deserialize()
            .collect::<std::result::Result<Vec<Row>, _>>()
            .map_err(|e| Error::InvalidProtocol(e.to_string()))?;
        Self::validate(&rows)?;
        Ok(Self { rows })
    }

    pub fn from_csv_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hold_and_ramp_interpolation() {
        let p = VoltageProtocol::new(vec![
            (0.0, -80.0, Segment::Hold),
            (100.0, -40.0, Segment::Ramp),
            (200.0, 40.0, Segment::Hold),
            (300.0, 40.0, Segment::Hold),
        ])
        .unwrap();
        assert_eq!(p.voltage_mv(-5.0), -80.0);
        assert_eq!(p.voltage_mv(99.9), -80.0);
        assert_eq!(p.voltage_mv(100.0), -40.0);
        assert_eq!(p.voltage_mv(150.0), 0.0);
        assert_eq!(p.voltage_mv(250.0), 40.0);
        assert_eq!(p.voltage_mv(1e6), 40.0);
    }

    #[test]
    fn invalid_protocols_rejected() {
        assert!(VoltageProtocol::new(vec![]).is_err());
        assert!(VoltageProtocol::new(vec![(10.0, 0.0, Segment::Hold)]).is_err());
        assert!(VoltageProtocol::new(vec![(0.0, 0.0, Segment::Hold), (0.0, 1.0, Segment::Hold)]).is_err());
        assert!(VoltageProtocol::new(vec![(0.0, 0.0, Segment::Hold), (-1.0, 1.0, Segment::Hold)]).is_err());
        assert!(VoltageProtocol::new(vec![(0.0, 0.0, Segment::Hold), (5.0, 1.0, Segment::Ramp)]).is_err());
        assert!(VoltageProtocol::new(vec![(0.0, f64::NAN, Segment::Hold)]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let p = VoltageProtocol::synthetic_staircase();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("time_ms,voltage_mV,mode\n0.0,-80.0,hold\n"));
        assert_eq!(VoltageProtocol::read_csv(&buf[..]).unwrap(), p);
        assert!(VoltageProtocol::read_csv("t,v,m\n0,1,hold\n".as_bytes()).is_err());
        assert!(VoltageProtocol::read_csv("time_ms,voltage_mV,mode\n0,1,step\n".as_bytes()).is_err());
    }

    #[test]
    fn staircase_spans_range() {
        let p = VoltageProtocol::synthetic_staircase();
        let v = p.voltages_mv();
        assert_eq!(v.iter().cloned().fold(f64::INFINITY, f64::min), -120.0);
        assert_eq!(v.iter().cloned().fold(f64::NEG_INFINITY, f64::max), 40.0);
        assert_eq!(p.end_ms(), 6500.0);
    }
}
