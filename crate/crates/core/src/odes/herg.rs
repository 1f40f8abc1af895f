use super::{check_len_finite, DynamicalModel, VoltageProtocol};
use crate::infer::Prior;
use crate::{Error, Result};

pub const HERG_PARAM_NAMES: [&str; 9] = ["g_kr", "p1", "p2", "p3", "p4", "p5", "p6", "p7", "p8"];
pub const DEFAULT_E_K_MV: f64 = -88.0;
pub const PREPACE_SECONDS: f64 = 100.0;
pub const PREPACE_VOLTAGE_MV: f64 = -80.0;

/// Log-normal priors on `[g_kr, p1, ..., p8]` in the units below.
pub fn herg_priors() -> Vec<Prior> {
    [(10.5, 1.0), (-2.5, 3.0), (4.5, 1.0), (-3.5, 1.5), (4.0, 0.5), (4.5, 0.5), (3.0, 1.5), (2.0, 0.5), (3.5, 0.5)]
        .iter()
        .map(|&(m, s)| Prior::log_normal(m, s))
        .collect()
}

/// Two-gate hERG current model under a voltage clamp.
///
/// Units: time in s, voltage in V inside the rates (so `p2, p4, p6, p8` are
/// per volt and `p1, p3, p5, p7` per second), conductance in pS, giving a
/// current in pA. Parameters are `[g_kr, p1, ..., p8]`; state is `[a, r]`.
#[derive(Debug, Clone)]
pub struct HergModel {
    protocol: VoltageProtocol,
    e_k: f64,
    breakpoints: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
struct Rates {
    k1: f64,
    k2: f64,
    k3: f64,
    k4: f64,
}

fn rates(p: &[f64], v: f64) -> Rates {
    Rates {
        k1: p[1] * (p[2] * v).exp(),
        k2: p[3] * (-p[4] * v).exp(),
        k3: p[5] * (p[6] * v).exp(),
        k4: p[7] * (-p[8] * v).exp(),
    }
}

/// Exact gate values after holding at constant rates for `dt` seconds.
fn relax(a: f64, r: f64, k: &Rates, dt: f64) -> (f64, f64) {
    let sa = k.k1 + k.k2;
    let sr = k.k3 + k.k4;
    let a_inf = k.k1 / sa;
    let r_inf = k.k4 / sr;
    let ea = (-sa * dt).exp();
    let er = (-sr * dt).exp();
    (a_inf + (a - a_inf) * ea, r_inf + (r - r_inf) * er)
}

impl HergModel {
    pub fn new(protocol: VoltageProtocol) -> Self {
        Self::with_reversal(protocol, DEFAULT_E_K_MV)
    }

    pub fn with_reversal(protocol: VoltageProtocol, e_k_mv: f64) -> Self {
        let breakpoints = protocol.breakpoint_times_ms().iter().map(|t| t / 1000.0).collect();
        Self { protocol, e_k: e_k_mv / 1000.0, breakpoints }
    }

    pub fn protocol(&self) -> &VoltageProtocol {
        &self.protocol
    }

    pub fn reversal_mv(&self) -> f64 {
        self.e_k * 1000.0
    }

    /// Protocol duration in seconds.
    pub fn duration(&self) -> f64 {
        self.protocol.end_ms() / 1000.0
    }

    /// Clamp voltage in volts at time `t` seconds.
    pub fn voltage(&self, t: f64) -> f64 {
        self.protocol.voltage_mv(t * 1000.0) / 1000.0
    }

    /// `(a∞, τa, r∞, τr)` at voltage `v` volts.
    pub fn steady_state(params: &[f64], v: f64) -> (f64, f64, f64, f64) {
        let k = rates(params, v);
        let (sa, sr) = (k.k1 + k.k2, k.k3 + k.k4);
        (k.k1 / sa, 1.0 / sa, k.k4 / sr, 1.0 / sr)
    }

    /// Largest rate constant reached anywhere on the protocol, in 1/s.
    pub fn max_rate(&self, params: &[f64]) -> f64 {
        let mut vs = self.protocol.voltages_mv();
        vs.push(PREPACE_VOLTAGE_MV);
        vs.iter()
            .map(|v| {
                let k = rates(params, v / 1000.0);
                (k.k1 + k.k2).max(k.k3 + k.k4)
            })
            .fold(0.0, f64::max)
    }

    /// Gate values at each time from the closed-form solution, valid for
    /// protocols made only of hold segments.
    pub fn exact_gates(&self, params: &[f64], times: &[f64]) -> Result<Vec<(f64, f64)>> {
        self.check_params(params)?;
        if self.protocol.has_ramp() {
            return Err(Error::InvalidProtocol("closed-form gates need a hold-only protocol".into()));
        }
        if times.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidArgument("times must be sorted".into()));
        }
        let x0 = self.initial_state(params);
        let (mut a, mut r) = (x0[0], x0[1]);
        let mut t = self.breakpoints[0];
        let mut out = Vec::with_capacity(times.len());
        for &target in times {
            if target < t {
                return Err(Error::InvalidArgument("time before protocol start".into()));
            }
            // advance over every breakpoint up to `target`
            while let Some(&b) = self.breakpoints.iter().find(|&&b| b > t && b <= target) {
                let k = rates(params, self.voltage(t));
                (a, r) = relax(a, r, &k, b - t);
                t = b;
            }
            let k = rates(params, self.voltage(t));
            let (ai, ri) = relax(a, r, &k, target - t);
            out.push((ai, ri));
            (a, r, t) = (ai, ri, target);
        }
        Ok(out)
    }

    /// Closed-form current for hold-only protocols.
    pub fn exact_current(&self, params: &[f64], times: &[f64]) -> Result<Vec<f64>> {
        let gates = self.exact_gates(params, times)?;
        Ok(times
            .iter()
            .zip(gates)
            .map(|(&t, (a, r))| params[0] * a * r * (self.voltage(t) - self.e_k))
            .collect())
    }
}

impl DynamicalModel for HergModel {
    fn name(&self) -> &str {
        "herg"
    }

    fn state_dim(&self) -> usize {
        2
    }

    fn param_names(&self) -> Vec<String> {
        HERG_PARAM_NAMES.iter().map(|s| s.to_string()).collect()
    }

    fn check_params(&self, params: &[f64]) -> Result<()> {
        check_len_finite("herg", params, 9)?;
        if params.iter().any(|&v| v <= 0.0) {
            return Err(Error::InvalidArgument(format!("herg parameters must be positive, got {params:?}")));
        }
        Ok(())
    }

    fn initial_time(&self) -> Option<f64> {
        Some(self.breakpoints[0])
    }

    /// Gates after the pre-pace from `a = 0, r = 1`.
    fn initial_state(&self, params: &[f64]) -> Vec<f64> {
        let k = rates(params, PREPACE_VOLTAGE_MV / 1000.0);
        let (a, r) = relax(0.0, 1.0, &k, PREPACE_SECONDS);
        vec![a, r]
    }

    fn rhs(&self, t: f64, x: &[f64], p: &[f64], dx: &mut [f64]) {
        let k = rates(p, self.voltage(t));
        dx[0] = k.k1 * (1.0 - x[0]) - k.k2 * x[0];
        dx[1] = k.k4 * (1.0 - x[1]) - k.k3 * x[1];
    }

    fn observable(&self, t: f64, x: &[f64], p: &[f64]) -> f64 {
        p[0] * x[0] * x[1] * (self.voltage(t) - self.e_k)
    }

    fn closed_form(&self, params: &[f64], times: &[f64]) -> Option<Result<Vec<f64>>> {
        (!self.protocol.has_ramp()).then(|| self.exact_current(params, times))
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.breakpoints.clone()
    }

    fn initial_state_jacobian(&self, p: &[f64], out: &mut [f64]) {
        let v = PREPACE_VOLTAGE_MV / 1000.0;
        let k = rates(p, v);
        let tt = PREPACE_SECONDS;
        out.fill(0.0);
        // a = a∞ (1 − E), E = exp(−T s), s = k1 + k2
        let sa = k.k1 + k.k2;
        let ea = (-sa * tt).exp();
        let a_inf = k.k1 / sa;
        let da_dk1 = k.k2 / (sa * sa) * (1.0 - ea) + a_inf * tt * ea;
        let da_dk2 = -k.k1 / (sa * sa) * (1.0 - ea) + a_inf * tt * ea;
        out[1] = da_dk1 * k.k1 / p[1];
        out[2] = da_dk1 * k.k1 * v;
        out[3] = da_dk2 * k.k2 / p[3];
        out[4] = da_dk2 * k.k2 * -v;
        // r = r∞ (1 − E) + E, E = exp(−T s), s = k3 + k4
        let sr = k.k3 + k.k4;
        let er = (-sr * tt).exp();
        let r_inf = k.k4 / sr;
        let de = -tt * er * (1.0 - r_inf);
        let dr_dk3 = -k.k4 / (sr * sr) * (1.0 - er) + de;
        let dr_dk4 = k.k3 / (sr * sr) * (1.0 - er) + de;
        out[9 + 5] = dr_dk3 * k.k3 / p[5];
        out[9 + 6] = dr_dk3 * k.k3 * v;
        out[9 + 7] = dr_dk4 * k.k4 / p[7];
        out[9 + 8] = dr_dk4 * k.k4 * -v;
    }

    fn jacobian_state(&self, t: f64, _x: &[f64], p: &[f64], out: &mut [f64]) {
        let k = rates(p, self.voltage(t));
        out.copy_from_slice(&[-(k.k1 + k.k2), 0.0, 0.0, -(k.k3 + k.k4)]);
    }

    fn jacobian_params(&self, t: f64, x: &[f64], p: &[f64], out: &mut [f64]) {
        let v = self.voltage(t);
        let k = rates(p, v);
        let (a, r) = (x[0], x[1]);
        out.fill(0.0);
        out[1] = k.k1 / p[1] * (1.0 - a);
        out[2] = v * k.k1 * (1.0 - a);
        out[3] = -k.k2 / p[3] * a;
        out[4] = v * k.k2 * a;
        out[9 + 5] = -k.k3 / p[5] * r;
        out[9 + 6] = -v * k.k3 * r;
        out[9 + 7] = k.k4 / p[7] * (1.0 - r);
        out[9 + 8] = -v * k.k4 * (1.0 - r);
    }

    fn observable_gradients(&self, t: f64, x: &[f64], p: &[f64], dx: &mut [f64], dp: &mut [f64]) {
        let drive = self.voltage(t) - self.e_k;
        dx[0] = p[0] * x[1] * drive;
        dx[1] = p[0] * x[0] * drive;
        dp.fill(0.0);
        dp[0] = x[0] * x[1] * drive;
    }
}

/// Representative parameters near the centre of the usual priors.
#[cfg(test)]
pub(crate) const REFERENCE_PARAMS: [f64; 9] =
    [36_000.0, 0.08, 90.0, 0.03, 54.6, 90.0, 20.0, 7.4, 33.0];
